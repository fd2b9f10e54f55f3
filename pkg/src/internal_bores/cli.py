"""Command-line entry point and the end-to-end pipeline.

Exit codes: 0 success (including a branch ending in A1), 1 usage or
configuration error, 2 solver failure, 3 internal numerical failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import sys
from pathlib import Path

import numpy as np

from . import continuation, dj, io, mcc, spectral
from .config import RunConfig, config_from_dict, parse_config
from .conjugate_flow import conjugate_report, make_parameters
from .errors import BoreError, ConfigError

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_NUMERICAL = 0, 1, 2, 3
SUCCESS_TERMINATIONS = ("budget_exhausted", "A1_blowup")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


# ---------------------------------------------------------------- artifacts


def point_record(index: int, point: continuation.BranchPoint) -> dict:
    rec = {"index": index, "lambda": point.lam, "s": point.s, "iterations": point.iterations}
    rec.update(point.diagnostics.as_dict())
    return rec


def branch_record(branch: continuation.Branch) -> dict:
    return {
        "direction": branch.direction,
        "termination": branch.termination,
        "x0": branch.x0,
        "n_points": len(branch.points),
        "points": [point_record(i, p) for i, p in enumerate(branch.points)],
        "log": list(branch.log),
    }


def write_profiles(out: Path, branch: continuation.Branch) -> None:
    for i, p in enumerate(branch.points):
        g = p.front.grid
        eta = p.front.eta
        io.write_csv(
            out / "profiles" / f"{branch.direction}_{i:03d}.csv",
            {"q": g.q, "eta": eta, "eta_x": np.gradient(eta, g.dq, edge_order=2)},
        )


def write_summary(out: Path, branches: list[continuation.Branch]) -> None:
    rows = [(b.direction, i, p) for b in branches for i, p in enumerate(b.points)]
    io.write_csv(
        out / "summary.csv",
        {
            "direction": np.array([r[0] for r in rows], dtype=object),
            "index": np.array([r[1] for r in rows], dtype=int),
            "lambda": np.array([r[2].lam for r in rows]),
            "s": np.array([r[2].s for r in rows]),
            "amplitude": np.array([r[2].diagnostics.amplitude for r in rows]),
            "stagnation_margin": np.array([r[2].diagnostics.stagnation_margin for r in rows]),
            "max_slope": np.array([r[2].diagnostics.max_slope for r in rows]),
            "sigma_up": np.array([r[2].diagnostics.sigma_up for r in rows]),
            "sigma_down": np.array([r[2].diagnostics.sigma_down for r in rows]),
        },
    )


def write_branch_json(out: Path, config: RunConfig, branches: list[continuation.Branch]) -> Path:
    payload = {
        "metadata": {"timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")},
        "config": config.resolved(),
        "branches": [branch_record(b) for b in branches],
    }
    return io.write_json(out / "branch.json", payload)


def _exit_for(branches: list[continuation.Branch]) -> int:
    for b in branches:
        if b.termination not in SUCCESS_TERMINATIONS:
            return EXIT_SOLVER
    return EXIT_OK


def run_branches(config: RunConfig, out: Path, directions=None) -> int:
    """Continue each configured direction, writing partial results even when a branch fails."""
    params = config.params
    branches: list[continuation.Branch] = []
    directions = directions or config.continuation.directions
    try:
        for d in directions:
            b = continuation.run_branch(
                params,
                d,
                config.continuation.steps,
                config.delta_lambda0,
                config.grid_kwargs(),
                config.continuation.thresholds,
                config.step_control(),
            )
            branches.append(b)
    finally:
        if "json" in config.output.formats:
            write_branch_json(out, config, branches)
        if "csv" in config.output.formats:
            for b in branches:
                write_profiles(out, b)
            write_summary(out, branches)
    return _exit_for(branches)


def run_pipeline(config: RunConfig, out_dir: str | Path | None = None) -> int:
    """conjugate -> mcc -> onset -> continuation in every configured direction."""
    out = Path(out_dir) if out_dir is not None else io.output_directory(config.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "config.resolved.json", config.resolved())
    params = config.params
    seeds = {
        d: params.lambda_star - config.delta_lambda0 if d == "minus" else params.lambda_star + config.delta_lambda0
        for d in config.continuation.directions
    }
    io.write_json(out / "conjugate.json", {d: conjugate_report(params, lam) for d, lam in seeds.items()})
    io.write_json(out / "mcc.json", {d: mcc_header(params, lam) for d, lam in seeds.items()})
    return run_branches(config, out)


# ---------------------------------------------------------------- subcommands


def mcc_header(params, lam: float) -> dict:
    st = mcc.make_state(params, lam)
    km, kp = mcc.decay_rates(st)
    return {
        "lambda": lam,
        "z_minus": st.z_minus,
        "z_plus": st.z_plus,
        "kappa_minus": km,
        "kappa_plus": kp,
        "proposition": mcc.check_proposition_conditions(st),
    }


def cmd_conjugate(args) -> int:
    params = make_parameters(args.rho1, args.rho2)
    sys.stdout.write(io.dumps(conjugate_report(params, args.lam)))
    return EXIT_OK


def cmd_mcc(args) -> int:
    params = make_parameters(args.rho1, args.rho2)
    st = mcc.make_state(params, args.lam)
    if args.xmax <= 0 or args.n < 2:
        raise ConfigError("--xmax must be positive and --n at least 2")
    x = np.linspace(-args.xmax, args.xmax, args.n)
    zeta = mcc.heteroclinic_profile(st, x)
    header = mcc_header(params, args.lam)
    out = io.output_directory(args.out)
    io.write_json(out / "mcc.json", header)
    io.write_csv(out / "mcc.csv", {"x": x, "zeta": zeta, "zeta_x": mcc.heteroclinic_slope(st, zeta)})
    sys.stdout.write(io.dumps(header))
    return EXIT_OK


def cmd_solve(args) -> int:
    params = make_parameters(args.rho1, args.rho2)
    grid = dj.make_grid(params, args.lam, args.L, args.nq, args.nlow, args.nup)
    res = dj.newton_solve(dj.seed_from_mcc(params, args.lam, grid), tol=args.tol)
    f = res.front
    g = f.grid
    out = io.output_directory(args.out)
    qq, pp = np.meshgrid(g.q, g.p)
    io.write_csv(out / "front.csv", {"q": qq.ravel(), "p": pp.ravel(), "h": f.h.ravel()})
    sidecar = {
        "lambda": args.lam,
        "grid": {"L": g.L, "n_q": g.n_q, "n_low": g.n_low, "n_up": g.n_up},
        "residual_norm": res.residual_norm,
        "iterations": res.iterations,
        "history": res.history,
        "pinned": res.pinned,
        "defect": res.defect,
        "eta": f.eta,
    }
    io.write_json(out / "front.json", sidecar)
    sys.stdout.write(io.dumps({k: v for k, v in sidecar.items() if k != "eta"}))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    params = make_parameters(args.rho1, args.rho2)
    prob = spectral.problem_for_side(params, args.lam, args.side, args.n)
    rep = spectral.spectrum_report(prob)
    ef = rep.pop("eigenfunction")
    out = io.output_directory(args.out)
    io.write_csv(out / f"eigenfunction_{args.side}.csv", {"p": ef["p"], "w": ef["w"]})
    io.write_json(out / f"spectrum_{args.side}.json", rep)
    sys.stdout.write(io.dumps(rep))
    return EXIT_OK


def cmd_continue(args) -> int:
    raw = {
        "physics": {"rho1": args.rho1, "rho2": args.rho2},
        "continuation": {"directions": [args.direction], "steps": args.steps, "ds0": args.ds0},
        "grid": {"n_q": args.nq, "n_low": args.nlow, "n_up": args.nup},
    }
    if args.ds_max is not None:
        raw["continuation"]["ds_max"] = args.ds_max
    if args.delta_lambda0 is not None:
        raw["continuation"]["delta_lambda0"] = args.delta_lambda0
    if args.L is not None:
        raw["grid"]["L"] = args.L
    if args.out is not None:
        raw["output"] = {"directory": args.out}
    cfg = config_from_dict(raw)
    out = io.output_directory(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "config.resolved.json", cfg.resolved())
    return run_branches(cfg, out)


def cmd_run(args) -> int:
    text = Path(args.config).read_text(encoding="utf-8") if args.config else "{}"
    cfg = parse_config(text)
    out = io.output_directory(args.out or cfg.output.directory)
    try:
        return run_pipeline(cfg, out)
    except BoreError as exc:
        io.write_json(out / "error.json", {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code})
        raise


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bores", description="Two-layer internal bores: conjugate states, long-wave fronts, continuation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def physics(sp, lam_required=True):
        sp.add_argument("--rho1", type=float, required=True)
        sp.add_argument("--rho2", type=float, required=True)
        if lam_required is not None:
            sp.add_argument("--lambda", dest="lam", type=float, required=lam_required)

    def out(sp):
        sp.add_argument("--out", default=None, help="output directory (BORE_OUT_DIR takes precedence)")

    c = sub.add_parser("conjugate", help="conjugate-state table as JSON on stdout")
    physics(c, lam_required=False)
    c.set_defaults(func=cmd_conjugate)

    m = sub.add_parser("mcc", help="long-wave heteroclinic profile")
    physics(m)
    m.add_argument("--xmax", type=float, default=20.0)
    m.add_argument("--n", type=int, default=401)
    out(m)
    m.set_defaults(func=cmd_mcc)

    s = sub.add_parser("solve", help="Newton solve for one front at fixed lambda")
    physics(s)
    s.add_argument("--L", type=float, default=None)
    s.add_argument("--nq", type=int, default=401)
    s.add_argument("--nlow", type=int, default=41)
    s.add_argument("--nup", type=int, default=41)
    s.add_argument("--tol", type=float, default=1e-10)
    out(s)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("spectrum", help="principal transversal eigenvalue")
    physics(e)
    e.add_argument("--side", choices=("up", "down"), default="up")
    e.add_argument("--n", type=int, default=81, help="vertical nodes (odd)")
    out(e)
    e.set_defaults(func=cmd_spectrum)

    k = sub.add_parser("continue", help="one continuation branch")
    physics(k, lam_required=None)
    k.add_argument("--direction", choices=continuation.DIRECTIONS, required=True)
    k.add_argument("--steps", type=int, default=30)
    k.add_argument("--ds0", type=float, default=0.01)
    k.add_argument("--ds-max", dest="ds_max", type=float, default=None)
    k.add_argument("--delta-lambda0", dest="delta_lambda0", type=float, default=None)
    k.add_argument("--L", type=float, default=None)
    k.add_argument("--nq", type=int, default=401)
    k.add_argument("--nlow", type=int, default=41)
    k.add_argument("--nup", type=int, default=41)
    out(k)
    k.set_defaults(func=cmd_continue)

    r = sub.add_parser("run", help="full pipeline from a JSON config")
    r.add_argument("--config", default=None, help="JSON config file (defaults used when omitted)")
    out(r)
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return int(args.func(args))
    except BoreError as exc:
        _report_error(exc, exc.exit_code)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        _report_error(exc, EXIT_USAGE)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        _report_error(exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL


def _report_error(exc: BaseException, code: int) -> None:
    sys.stderr.write(io.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}))


if __name__ == "__main__":
    sys.exit(main())
