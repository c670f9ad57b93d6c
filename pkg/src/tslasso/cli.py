"""Command-line entry point: ``tslasso <command> ...``.

Certificate commands (``check-re``, ``check-db``, ``bounds``,
``validate-concentration``) write one CSV and print a single ``PASS``/``FAIL``
line; the exit status is 0 on PASS and 1 on FAIL. ``experiment`` exits 0 on
success, 2 when infeasible cells were skipped and 1 on error.

CSV schemas::

    check-re                 alpha,tau,n_probes,min_margin,passed
    check-db                 lhs,bound,passed
    bounds                   s,lambda,alpha,tau,l2_bound,pred_bound,premise_ok,lambda_ok,realized_l2,passed
    validate-concentration   t,exceedance,bound,slack,<fitted constants...>
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from importlib import resources

import numpy as np

from . import conditions, experiments, io, lasso, report
from .dgm import CoefficientMatrix, population_theta, simulate

log = logging.getLogger("tslasso")

EXIT_OK, EXIT_FAIL, EXIT_PARTIAL = 0, 1, 2
_STUDY_NAMES = {"heavy-tail": "heavy_tail", "dependence": "dependence", "alignment": "alignment"}


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([report.format_value(row[h]) if row[h] is not None else "" for h in header])


def _verdict(ok: bool, detail: str) -> int:
    print(("PASS" if ok else "FAIL") + ": " + detail)
    return EXIT_OK if ok else EXIT_FAIL


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _theta(path):
    return CoefficientMatrix(io.read_matrix_csv(path))


def cmd_simulate(args):
    spec = io.load_spec(args.spec)
    sample = simulate(spec, args.T, burn_in=args.burn_in, rng=args.seed)
    io.write_sample_csv(sample, args.out)
    if args.theta_out:
        io.write_matrix_csv(population_theta(spec).values, args.theta_out)
    print(f"wrote {sample.n_obs} rows (p={sample.p}, q={sample.q}) to {args.out}")
    return EXIT_OK


def cmd_fit(args):
    sample = io.read_sample_csv(args.input)
    mode = args.lambda_mode or ("fixed" if args.lam is not None else "theory")
    if mode == "fixed":
        if args.lam is None:
            raise SystemExit("--lambda is required with --lambda-mode fixed")
        lam = args.lam
    elif mode == "theory":
        lam = lasso.lambda_theory(sample.p, sample.q, sample.n_obs, args.c_lambda)
    else:
        if not args.theta_star:
            raise SystemExit("--theta-star is required with --lambda-mode oracle")
        lam = lasso.lambda_oracle(sample, _theta(args.theta_star))
    fitted = lasso.fit(sample, lasso.LassoConfig(lam, max_sweeps=args.max_sweeps, kkt_tol=args.kkt_tol))
    if args.theta_out:
        io.write_matrix_csv(fitted.theta_hat.values, args.theta_out)
    msg = (f"lambda={lam:.6g} sweeps={fitted.sweeps_used} kkt={fitted.kkt_residual:.3g} "
           f"objective={fitted.objective:.10g} nonzeros={np.count_nonzero(fitted.theta_hat.values)}")
    if args.theta_star:
        err = lasso.errors(fitted, _theta(args.theta_star), sample)
        msg += f" l2_error={err.l2_vec_error:.6g} pred_error={err.in_sample_pred_error:.6g}"
    print(msg)
    return EXIT_OK if fitted.converged else EXIT_FAIL


def cmd_check_re(args):
    sample = io.read_sample_csv(args.input)
    alpha = args.alpha
    if alpha is None:
        alpha = 0.5 * float(np.linalg.eigvalsh(sample.X.T @ sample.X / sample.n_obs)[0])
        if alpha <= 0:
            raise SystemExit("sample Gram matrix is singular; pass --alpha explicitly")
    tau = args.tau if args.tau is not None else alpha * np.log(sample.p) / np.sqrt(sample.n_obs)
    theta = _theta(args.theta_star) if args.theta_star else None
    cert = conditions.check_re(sample, alpha, tau, n_probes=args.n_probes, rng=args.seed, theta_star=theta)
    _write_rows(args.out, ["alpha", "tau", "n_probes", "min_margin", "passed"],
                [{"alpha": cert.alpha, "tau": cert.tau, "n_probes": cert.n_probes,
                  "min_margin": cert.min_margin, "passed": cert.passed}])
    return _verdict(cert.passed, f"RE alpha={cert.alpha:.6g} tau={cert.tau:.6g} min_margin={cert.min_margin:.6g}")


def cmd_check_db(args):
    sample = io.read_sample_csv(args.input)
    cert = conditions.check_db(sample, _theta(args.theta_star), args.q_mult, rate_mode=args.rate_mode,
                               s_alpha=args.s_alpha)
    _write_rows(args.out, ["lhs", "bound", "passed"], [{"lhs": cert.lhs, "bound": cert.bound, "passed": cert.passed}])
    return _verdict(cert.passed, f"DB lhs={cert.lhs:.6g} bound={cert.bound:.6g}")


def cmd_bounds(args):
    rep = conditions.master_bounds(args.s, args.lam, args.alpha, args.tau, lambda_floor=args.lambda_floor)
    ok = rep.premise_ok and rep.lambda_ok is not False
    if args.realized_l2 is not None:
        ok = ok and args.realized_l2 <= rep.l2_bound
    row = {"s": args.s, "lambda": args.lam, "alpha": args.alpha, "tau": args.tau,
           "l2_bound": rep.l2_bound, "pred_bound": rep.pred_bound, "premise_ok": rep.premise_ok,
           "lambda_ok": rep.lambda_ok, "realized_l2": args.realized_l2, "passed": ok}
    _write_rows(args.out, list(row), [row])
    return _verdict(ok, f"l2_bound={rep.l2_bound:.6g} pred_bound={rep.pred_bound:.6g} premise_ok={rep.premise_ok}")


def cmd_validate(args):
    if args.kind == "hanson-wright":
        q_cov = io.read_matrix_csv(args.q_cov) if args.q_cov else np.eye(args.n)
        table = conditions.validate_hanson_wright(q_cov.shape[0], q_cov, _floats(args.t_grid), n_mc=args.n_mc,
                                                  rng=args.seed)
        ok = table.dominated and table.constants["c"] > 0
    else:
        spec = io.load_spec(args.spec)
        table = conditions.validate_beta_bernstein(spec, args.T, _floats(args.t_grid), n_mc=args.n_mc, rng=args.seed)
        ok = table.dominated and all(np.isfinite(v) for v in table.constants.values())
    consts = dict(table.constants)
    rows = [{**r, **consts} for r in table.rows()]
    _write_rows(args.out, ["t", "exceedance", "bound", "slack", *consts], rows)
    detail = " ".join(f"{k}={report.format_value(v)}" for k, v in consts.items())
    return _verdict(ok, f"{args.kind} dominated={table.dominated} {detail}")


def default_config_path(study: str):
    return resources.files("tslasso") / "configs" / f"{study}.toml"


def cmd_experiment(args):
    study = _STUDY_NAMES[args.study]
    if args.config:
        cfg = io.load_toml(args.config)
    else:
        cfg = io.load_toml(default_config_path(study))
    grid = experiments.grid_from_dict(cfg, study=study)
    if args.full:
        grid = experiments.full_grid(study, **{k: v for k, v in experiments.grid_to_dict(grid).items()
                                               if k not in ("study", "p_list", "reps")})
    if args.seed is not None:
        grid = experiments.with_seed(grid, args.seed)
    result = experiments.run_experiment(grid, jobs=args.jobs)
    report.emit_csv(result, args.out_csv)
    if args.out_svg and result.rows:
        group_by = "p" if study == "alignment" else "shape_or_rho"
        x_axis = "T_over_slogp" if study == "alignment" else "rescaled_sqrt"
        report.emit_figure(result, x_axis, group_by, args.out_svg, title=study.replace("_", " "))
    for skip in result.skipped:
        print(f"skipped cell {skip['cell']} rep {skip['rep']}: {skip['reason']}", file=sys.stderr)
    print(f"{len(result.rows)} rows written to {args.out_csv}")
    return EXIT_PARTIAL if result.skipped else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tslasso", description="Lasso for dependent, heavy-tailed time series.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a mechanism described by a TOML spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--theta-out", help="write the population coefficient matrix here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the lasso to a sample CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lambda-mode", choices=("fixed", "theory", "oracle"))
    p.add_argument("--c-lambda", type=float, default=1.0)
    p.add_argument("--theta-star", help="population coefficients (oracle lambda, error report)")
    p.add_argument("--theta-out")
    p.add_argument("--max-sweeps", type=int, default=10_000)
    p.add_argument("--kkt-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("check-re", help="probe the restricted eigenvalue condition")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, help="default: half the smallest Gram eigenvalue")
    p.add_argument("--tau", type=float, help="default: alpha log(p) / sqrt(T)")
    p.add_argument("--n-probes", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta-star")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_check_re)

    p = sub.add_parser("check-db", help="compare the deviation term with its rate")
    p.add_argument("--input", required=True)
    p.add_argument("--theta-star", required=True)
    p.add_argument("--q-mult", type=float, required=True)
    p.add_argument("--rate-mode", choices=("gaussian", "subweibull"), default="subweibull")
    p.add_argument("--s-alpha", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_check_db)

    p = sub.add_parser("bounds", help="evaluate the estimation/prediction error bounds")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--lambda-floor", type=float)
    p.add_argument("--realized-l2", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("validate-concentration", help="Monte-Carlo check of a concentration bound")
    p.add_argument("kind", choices=("hanson-wright", "bernstein"))
    p.add_argument("--n", type=int, default=100, help="dimension for hanson-wright with Q = I")
    p.add_argument("--q-cov", help="matrix CSV for Q (hanson-wright)")
    p.add_argument("--spec", help="TOML spec (bernstein)")
    p.add_argument("--T", type=int, default=2000)
    p.add_argument("--t-grid", help="comma-separated; default 0.2..1.0 (hanson-wright), 0.02..0.1 (bernstein)")
    p.add_argument("--n-mc", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("experiment", help="run a Monte-Carlo study")
    p.add_argument("study", choices=sorted(_STUDY_NAMES))
    p.add_argument("--config", help="TOML grid; default: the packaged config for the study")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-svg")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--full", action="store_true", help="published scale: p in {50,100,150,200}, 10 reps")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "n_mc", "unset") is None:
        args.n_mc = 100_000 if args.kind == "hanson-wright" else 2000
    if getattr(args, "t_grid", "unset") is None:
        args.t_grid = "0.2,0.4,0.6,0.8,1.0" if args.kind == "hanson-wright" else "0.02,0.04,0.06,0.08,0.1"
    if args.command == "validate-concentration" and args.kind == "bernstein" and not args.spec:
        print("bernstein validation needs --spec", file=sys.stderr)
        return EXIT_FAIL
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
