"""Trace both bore branches for (rho1, rho2) = (2, 1) and write the usual artifacts.

Usage: python scripts/run_branch.py [--steps 30] [--out bore_out] [--nq 1601 --nlow 21 --nup 21]

The defaults use a long, vertically coarse grid: the branch fronts sharpen as
lambda leaves the onset value, and the window length is fixed by the onset
decay rate, so axial resolution matters more than vertical resolution.
"""
import argparse
import sys
import time

from internal_bores import io
from internal_bores.cli import run_pipeline
from internal_bores.config import config_from_dict


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho1", type=float, default=2.0)
    ap.add_argument("--rho2", type=float, default=1.0)
    ap.add_argument("--steps", type=int, default=30)
    ap.add_argument("--ds-max", type=float, default=0.01)
    ap.add_argument("--nq", type=int, default=1601)
    ap.add_argument("--nlow", type=int, default=21)
    ap.add_argument("--nup", type=int, default=21)
    ap.add_argument("--out", default="bore_out")
    args = ap.parse_args()
    cfg = config_from_dict(
        {
            "physics": {"rho1": args.rho1, "rho2": args.rho2},
            "grid": {"n_q": args.nq, "n_low": args.nlow, "n_up": args.nup},
            "continuation": {"steps": args.steps, "ds_max": args.ds_max},
            "output": {"directory": args.out},
        }
    )
    out = io.output_directory(cfg.output.directory)
    t0 = time.perf_counter()
    code = run_pipeline(cfg, out)
    print(f"wrote {out} in {time.perf_counter() - t0:.1f} s (exit {code})")
    return code


if __name__ == "__main__":
    sys.exit(main())
