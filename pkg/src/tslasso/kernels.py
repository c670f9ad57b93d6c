"""Inner loops: coordinate-descent sweeps and the simulation recursions.

Each kernel is written twice: an explicit loop version compiled by numba and
a vectorised numpy version (``_np`` suffix) used when ``TSLASSO_DISABLE_NUMBA``
is set (see ``_accel``). Both take and return plain float64 arrays only.
"""

import numpy as np

from ._accel import jit


@jit
def soft_threshold_scalar(z, lam):
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def _kkt_residual_np(gram, xty, beta, lam, scale):
    active = np.diag(gram) != 0.0
    grad = scale * (xty - gram @ beta)
    dist = np.where(beta > 0.0, np.abs(grad - lam),
                    np.where(beta < 0.0, np.abs(grad + lam), np.maximum(np.abs(grad) - lam, 0.0)))
    dist = dist[active]
    return float(dist.max()) if dist.size else 0.0


@jit(fallback=_kkt_residual_np)
def _kkt_residual(gram, xty, beta, lam, scale):
    p = beta.shape[0]
    worst = 0.0
    for j in range(p):
        if gram[j, j] == 0.0:
            continue
        g = xty[j]
        for k in range(p):
            g -= gram[j, k] * beta[k]
        grad = scale * g
        if beta[j] > 0.0:
            dist = abs(grad - lam)
        elif beta[j] < 0.0:
            dist = abs(grad + lam)
        else:
            dist = abs(grad) - lam
            if dist < 0.0:
                dist = 0.0
        if dist > worst:
            worst = dist
    return worst


def _objective_np(gram, xty, yty, beta, lam, n_obs):
    return float((yty - 2.0 * beta @ xty + beta @ gram @ beta) / n_obs + lam * np.abs(beta).sum())


@jit(fallback=_objective_np)
def _objective(gram, xty, yty, beta, lam, n_obs):
    p = beta.shape[0]
    quad = 0.0
    lin = 0.0
    l1 = 0.0
    for j in range(p):
        lin += beta[j] * xty[j]
        l1 += abs(beta[j])
        row = 0.0
        for k in range(p):
            row += gram[j, k] * beta[k]
        quad += beta[j] * row
    return (yty - 2.0 * lin + quad) / n_obs + lam * l1


def _cd_column_np(gram, xty, yty, n_obs, lam, beta, max_sweeps, kkt_tol, trace):
    p = beta.shape[0]
    scale = 2.0 / n_obs
    diag = np.diag(gram).copy()
    beta[diag == 0.0] = 0.0
    resid_corr = xty - gram @ beta
    trace[0] = _objective_np(gram, xty, yty, beta, lam, n_obs)
    kkt = _kkt_residual_np(gram, xty, beta, lam, scale)
    if kkt <= kkt_tol:
        return 0, kkt
    sweeps = 0
    while sweeps < max_sweeps:
        for j in range(p):
            gjj = diag[j]
            if gjj == 0.0:
                continue
            old = beta[j]
            new = soft_threshold_scalar(scale * (resid_corr[j] + gjj * old), lam) / (scale * gjj)
            if new != old:
                beta[j] = new
                resid_corr -= gram[:, j] * (new - old)
        sweeps += 1
        trace[sweeps] = _objective_np(gram, xty, yty, beta, lam, n_obs)
        kkt = _kkt_residual_np(gram, xty, beta, lam, scale)
        if kkt <= kkt_tol:
            break
        resid_corr = xty - gram @ beta
    return sweeps, kkt


@jit(fallback=_cd_column_np)
def cd_column(gram, xty, yty, n_obs, lam, beta, max_sweeps, kkt_tol, trace):
    """Cyclic coordinate descent for one response column, in place on ``beta``.

    Minimises ``(1/T)||y - X b||^2 + lam ||b||_1`` given ``gram = X'X``,
    ``xty = X'y`` and ``yty = y'y``. Columns with zero norm stay at zero.
    ``trace`` receives the objective before the first sweep and after each
    sweep; it must have length ``max_sweeps + 1``.

    Returns ``(sweeps_used, kkt_residual)``.
    """
    p = beta.shape[0]
    scale = 2.0 / n_obs
    for j in range(p):
        if gram[j, j] == 0.0:
            beta[j] = 0.0
    # running X'r
    resid_corr = np.empty(p)
    for j in range(p):
        acc = xty[j]
        for k in range(p):
            acc -= gram[j, k] * beta[k]
        resid_corr[j] = acc

    trace[0] = _objective(gram, xty, yty, beta, lam, n_obs)
    kkt = _kkt_residual(gram, xty, beta, lam, scale)
    if kkt <= kkt_tol:
        return 0, kkt

    sweeps = 0
    while sweeps < max_sweeps:
        for j in range(p):
            gjj = gram[j, j]
            if gjj == 0.0:
                continue
            old = beta[j]
            rho = scale * (resid_corr[j] + gjj * old)
            new = soft_threshold_scalar(rho, lam) / (scale * gjj)
            delta = new - old
            if delta != 0.0:
                beta[j] = new
                for k in range(p):
                    resid_corr[k] -= gram[k, j] * delta
        sweeps += 1
        trace[sweeps] = _objective(gram, xty, yty, beta, lam, n_obs)
        kkt = _kkt_residual(gram, xty, beta, lam, scale)
        if kkt <= kkt_tol:
            break
        # refresh to stop drift in the running correlations
        for j in range(p):
            acc = xty[j]
            for k in range(p):
                acc -= gram[j, k] * beta[k]
            resid_corr[j] = acc
    return sweeps, kkt


def _linear_recursion_np(transition, shocks, out):
    out[0] = shocks[0]
    for t in range(1, shocks.shape[0]):
        out[t] = transition @ out[t - 1] + shocks[t]


@jit(fallback=_linear_recursion_np)
def linear_recursion(transition, shocks, out):
    """``out[t] = transition @ out[t-1] + shocks[t]`` with ``out[0] = shocks[0]``."""
    n_steps, dim = shocks.shape
    for i in range(dim):
        out[0, i] = shocks[0, i]
    for t in range(1, n_steps):
        for i in range(dim):
            acc = shocks[t, i]
            for k in range(dim):
                acc += transition[i, k] * out[t - 1, k]
            out[t, i] = acc


def _arch_recursion_np(coef, shocks, scale, power, lower, upper, out, multipliers):
    prev = np.zeros(shocks.shape[1])
    for t in range(shocks.shape[0]):
        level = min(max(np.sqrt(prev @ prev) ** power, lower), upper)
        multipliers[t] = scale * level
        out[t] = coef @ prev + multipliers[t] * shocks[t]
        prev = out[t]


@jit(fallback=_arch_recursion_np)
def arch_recursion(coef, shocks, scale, power, lower, upper, out, multipliers):
    """Multivariate ARCH with clipped isotropic volatility, starting from zero.

    ``out[t] = coef @ out[t-1] + scale * clip(||out[t-1]||^power, lower, upper) * shocks[t]``.
    ``multipliers[t]`` records the volatility factor applied at step ``t``.
    """
    n_steps, dim = shocks.shape
    prev = np.zeros(dim)
    for t in range(n_steps):
        sq = 0.0
        for i in range(dim):
            sq += prev[i] * prev[i]
        level = np.sqrt(sq) ** power
        if level < lower:
            level = lower
        elif level > upper:
            level = upper
        mult = scale * level
        multipliers[t] = mult
        for i in range(dim):
            acc = mult * shocks[t, i]
            for k in range(dim):
                acc += coef[i, k] * prev[k]
            out[t, i] = acc
        for i in range(dim):
            prev[i] = out[t, i]
