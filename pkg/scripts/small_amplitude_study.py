"""Compare converged fronts near onset with the long-wave heteroclinic.

Prints sup|eta - zeta| / delta^2 for the literal long-wave profile and for the
profile on an axis stretched by sqrt(2), plus the fitted upstream tail rate.
"""
import argparse

import numpy as np

from internal_bores import dj, mcc
from internal_bores.conjugate_flow import make_parameters


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho1", type=float, default=2.0)
    ap.add_argument("--rho2", type=float, default=1.0)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.04, 0.02, 0.01])
    args = ap.parse_args()
    p = make_parameters(args.rho1, args.rho2)
    print(f"{'delta':>8} {'literal':>10} {'stretched':>10} {'rate/kappa':>11} {'newton':>7}")
    for d in args.deltas:
        lam = p.lambda_star - d
        st = mcc.make_state(p, lam)
        km, _ = mcc.decay_rates(st)
        g = dj.make_grid(p, lam, L=12.0 / km, n_q=401, n_low=41, n_up=41)
        res = dj.newton_solve(dj.seed_from_mcc(p, lam, g))
        eta = res.front.eta
        x0 = dj.interface_crossing(g.q, eta, 0.5 * d)
        lit = np.max(np.abs(eta - mcc.heteroclinic_profile(st, g.q - x0))) / d**2
        stretched = np.max(np.abs(eta - mcc.heteroclinic_profile(st, np.sqrt(2.0) * (g.q - x0)))) / d**2
        mask = (g.q - x0 < -4 / km) & (g.q - x0 > -8 / km)
        rate = np.polyfit(g.q[mask], np.log(eta[mask]), 1)[0] / km
        print(f"{d:8.4f} {lit:10.4f} {stretched:10.4f} {rate:11.4f} {res.iterations:7d}")


if __name__ == "__main__":
    main()
