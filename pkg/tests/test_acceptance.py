"""Acceptance criteria 1-8 with their pinned tolerances and runtime budgets.

Each test records its measured quantities; the terminal summary prints one
pass/fail line per criterion.
"""
import json
import time

import numpy as np
import pytest

from internal_bores import cli, continuation, dj, mcc, spectral
from internal_bores.conjugate_flow import (
    conjugate_discriminant,
    downstream_state,
    dynamic_condition_residual,
    make_parameters,
    state_flow_force,
    upstream_state,
)
from internal_bores.config import config_from_dict

BRANCH_GRID = dict(n_q=1601, n_low=21, n_up=21)
BRANCH_CONTROL = continuation.StepControl(ds0=0.01, ds_max=0.01)


def _fmt(x: float) -> str:
    return f"{x:.3g}"


def test_criterion_1_conjugate_algebra(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240101)
    worst_disc = worst_dyn = worst_force = 0.0
    for ratio, lam in zip(rng.uniform(1.05, 20.0, 100), rng.uniform(0.05, 0.95, 100)):
        p = make_parameters(float(ratio), 1.0)
        worst_disc = max(worst_disc, abs(conjugate_discriminant(p)))
        ls = p.lambda_star
        worst_dyn = max(worst_dyn, abs(dynamic_condition_residual(p, lam, ls, lam / ls, (1 - lam) / (1 - ls))))
        up, down = upstream_state(lam), downstream_state(p, lam)
        worst_force = max(worst_force, abs(state_flow_force(p, up) - state_flow_force(p, down)))
    elapsed = time.perf_counter() - t0
    for k, v in (("disc", worst_disc), ("dynamic", worst_dyn), ("flow_force", worst_force), ("seconds", elapsed)):
        record_property(k, _fmt(v))
    assert worst_disc <= 1e-12
    assert worst_dyn <= 1e-12
    assert worst_force <= 1e-10
    assert elapsed < 1.0


def test_criterion_2_long_wave_oracles(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    # pointwise relative error is unbounded next to the double zeros of G, where the
    # unfactored bracket cancels; the comparison is relative to max(1, |G|)
    worst_rel = worst_pointwise = 0.0
    for _ in range(1000):
        p = make_parameters(float(rng.uniform(1.05, 20.0)), 1.0)
        lam = float(rng.uniform(0.05, 0.95))
        if abs(lam - p.lambda_star) < 1e-3:
            continue
        st = mcc.make_state(p, lam)
        lo, hi = sorted((st.z_minus, st.z_plus))
        z = float(rng.uniform(max(lo - 0.5, -lam + 1e-3), min(hi + 0.5, 1 - lam - 1e-3)))
        a, b = mcc.slope_squared(st, z), mcc.slope_squared_factored(st, z)
        worst_rel = max(worst_rel, abs(a - b) / max(1.0, abs(b)))
        if max(abs(a), abs(b)) > 0:
            worst_pointwise = max(worst_pointwise, abs(a - b) / max(abs(a), abs(b)))
    st = mcc.make_state(make_parameters(2.0, 1.0), 0.4)
    km, kp = mcc.decay_rates(st)
    x = np.linspace(-12 / km, 12 / kp, 2001)
    zeta = mcc.heteroclinic_profile(st, x)
    energy = float(np.max(np.abs(mcc.heteroclinic_slope(st, zeta) ** 2 + 2 * mcc.potential(st, zeta))))
    xr = np.linspace(8 / kp, 12 / kp, 50)
    rate_r = -np.polyfit(xr, np.log(st.z_plus - mcc.heteroclinic_profile(st, xr)), 1)[0]
    xl = np.linspace(-12 / km, -8 / km, 50)
    rate_l = np.polyfit(xl, np.log(mcc.heteroclinic_profile(st, xl)), 1)[0]
    tail = max(abs(rate_r / kp - 1), abs(rate_l / km - 1))
    elapsed = time.perf_counter() - t0
    for k, v in (("factor_rel", worst_rel), ("pointwise_rel", worst_pointwise), ("energy", energy), ("tail_rel", tail), ("seconds", elapsed)):
        record_property(k, _fmt(v))
    assert worst_rel <= 1e-12
    assert energy <= 1e-8
    assert tail <= 0.01
    assert elapsed < 10.0


def test_criterion_3_exact_residuals(record_property):
    p = make_parameters(2.0, 1.0)
    worst_up = worst_down = worst_jac = 0.0
    rng = np.random.default_rng(3)
    for lam in (0.2, 0.4, 0.7):
        for nq, nl, nu in ((21, 5, 5), (101, 21, 41), (401, 41, 41), (51, 81, 11)):
            g = dj.make_grid(p, lam, L=8.0, n_q=nq, n_low=nl, n_up=nu)
            worst_up = max(worst_up, float(np.max(np.abs(dj.dj_residual(dj.laminar_front(g, p, "upstream"))))))
            worst_down = max(worst_down, float(np.max(np.abs(dj.dj_residual(dj.laminar_front(g, p, "downstream"))))))
    lam = p.lambda_star - 0.03
    g = dj.make_grid(p, lam, n_q=101, n_low=11, n_up=11)
    u = dj.seed_from_mcc(p, lam, g).u.ravel()
    J = dj.jacobian_matrix(u, g, p)
    for _ in range(5):
        v = rng.standard_normal(u.size)
        eps = 1e-6
        fd = (dj.residual_array(u + eps * v, g, p) - dj.residual_array(u - eps * v, g, p)).ravel() / (2 * eps)
        jv = J @ v
        worst_jac = max(worst_jac, float(np.max(np.abs(fd - jv)) / np.max(np.abs(jv))))
    for k, v in (("upstream", worst_up), ("downstream", worst_down), ("jacobian_rel", worst_jac)):
        record_property(k, _fmt(v))
    assert worst_up == 0.0
    assert worst_down <= 1e-12
    assert worst_jac <= 1e-6


def test_criterion_4_small_amplitude_consistency(record_property):
    t0 = time.perf_counter()
    p = make_parameters(2.0, 1.0)
    scaled = []
    for d in (0.04, 0.02, 0.01):
        lam = p.lambda_star - d
        st = mcc.make_state(p, lam)
        km, _ = mcc.decay_rates(st)
        g = dj.make_grid(p, lam, L=12.0 / km, n_q=401, n_low=41, n_up=41)
        eta = dj.newton_solve(dj.seed_from_mcc(p, lam, g)).front.eta
        x0 = dj.interface_crossing(g.q, eta, 0.5 * d)
        zeta = mcc.heteroclinic_profile(st, g.q - x0)
        scaled.append(float(np.max(np.abs(eta - zeta))) / d**2)
    spread = max(scaled) / min(scaled)
    elapsed = time.perf_counter() - t0
    record_property("sup_over_delta2", "/".join(_fmt(s) for s in scaled))
    record_property("spread", _fmt(spread))
    record_property("seconds", _fmt(elapsed))
    assert elapsed < 300.0
    assert spread <= 3.0


def test_criterion_5_spectral_onset(record_property):
    t0 = time.perf_counter()
    p = make_parameters(2.0, 1.0)
    ls = p.lambda_star
    pr = spectral.problem_for_side(p, ls, "up", 81)
    sigma_star = spectral.principal_eigenvalue(pr)
    # O(n^-2): errors against the oracle shrink by about 4 per halving at a generic lambda
    pr4 = spectral.problem_for_side(p, 0.4, "up", 41)
    exact = spectral.oracle_root(pr4)
    e1 = abs(spectral.principal_eigenvalue(pr4) - exact)
    e2 = abs(spectral.principal_eigenvalue(spectral.refined(pr4)) - exact)
    ratio = e1 / e2
    below = [spectral.principal_eigenvalue(spectral.problem_for_side(p, f * ls, "up", 81)) for f in (0.9, 0.95)]
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(10):
        q = make_parameters(float(rng.uniform(1.05, 20.0)), 1.0)
        prob = spectral.problem_for_side(q, float(rng.uniform(0.05, 0.95)), "up", 81)
        worst = max(worst, abs(spectral.richardson_eigenvalue(prob) - spectral.oracle_root(prob)))
    elapsed = time.perf_counter() - t0
    for k, v in (("sigma_star", sigma_star), ("refine_ratio", ratio), ("sigma_0.9", below[0]),
                 ("sigma_0.95", below[1]), ("oracle_diff", worst), ("seconds", elapsed)):
        record_property(k, _fmt(v))
    assert abs(sigma_star) <= 1e-3
    assert 3.0 <= ratio <= 5.0
    assert all(s < 0 for s in below)
    assert worst <= 1e-6
    assert elapsed < 30.0


@pytest.fixture(scope="module")
def branches():
    p = make_parameters(2.0, 1.0)
    t0 = time.perf_counter()
    out = {d: continuation.run_branch(p, d, 30, None, BRANCH_GRID, control=BRANCH_CONTROL) for d in continuation.DIRECTIONS}
    return out, time.perf_counter() - t0


def test_criterion_6_branch_behaviour(branches, record_property):
    result, elapsed = branches
    ok = True
    for d, b in result.items():
        pts = b.points
        first, last = pts[0].diagnostics, pts[-1].diagnostics
        reports = [continuation.monotonicity_report(pt.front, d) for pt in pts]
        signs = all(r["eta_x"] and r["psi_x"] and r["psi_y"] for r in reports)
        amp_ratio = last.amplitude / first.amplitude
        margin_ratio = last.stagnation_margin / first.stagnation_margin
        sigma_max = max(max(pt.diagnostics.sigma_up, pt.diagnostics.sigma_down) for pt in pts)
        record_property(d, f"points={len(pts)} lam_end={pts[-1].lam:.4f} amp_x{amp_ratio:.3g} "
                           f"margin_x{margin_ratio:.3g} sigma_max={sigma_max:.3g} signs={signs} term={b.termination}")
        ok &= (len(pts) == 31 and signs and amp_ratio >= 5.0 and margin_ratio <= 0.7 and sigma_max <= -1e-3)
    record_property("seconds", _fmt(elapsed))
    for d, b in result.items():
        assert len(b.points) == 31, f"{d}: {b.termination} after {len(b.points)} points"
    assert ok
    assert elapsed < 900.0


def test_criterion_7_alternative_classifier(branches, record_property):
    t0 = time.perf_counter()
    p = make_parameters(2.0, 1.0)
    th = continuation.Thresholds()
    result, _ = branches
    genuine = {d: continuation.classify_alternative(b) for d, b in result.items()}

    lam = 0.3
    g = dj.make_grid(p, lam, L=1.0, n_q=5, n_low=3, n_up=4001)
    ri = g.interface_row
    a = 1e3 * g.dp_up
    col = g.p[ri:].copy()
    col[1], col[2] = a, 2 * a
    col[3:] = np.linspace(2 * a, 1.0 - lam, g.n_up - 2)[1:]
    u = np.zeros(g.shape)
    u[ri:, 2] = col - g.p[ri:]
    margin = continuation.interface_margin(dj.DiscreteFront(g, p, u))
    base = result["minus"].points[1]
    import dataclasses

    a1_point = dataclasses.replace(base, diagnostics=dataclasses.replace(base.diagnostics, stagnation_margin=margin))
    onset = abs(result["minus"].points[0].lam - p.lambda_star)
    tag_a1 = continuation.classify_point(a1_point, onset, th)

    lam = 0.4
    st = mcc.make_state(p, lam)
    kappa = min(mcc.decay_rates(st))
    width = 20.0 / kappa
    g = dj.make_grid(p, lam, L=width / 2 + 14.0 / kappa, n_q=801, n_low=11, n_up=11)
    zeta = 0.5 * (mcc.heteroclinic_profile(st, g.q + width / 2) + mcc.heteroclinic_profile(st, g.q - width / 2))
    front = dj.front_from_interface(p, g, zeta)
    a2_point = continuation.BranchPoint(front, 1.0, continuation.compute_diagnostics(front, "minus"))
    tag_a2 = continuation.classify_point(a2_point, onset, th)
    elapsed = time.perf_counter() - t0
    record_property("A1", tag_a1)
    record_property("A2", tag_a2)
    record_property("genuine", genuine)
    record_property("seconds", _fmt(elapsed))
    assert tag_a1 == "A1_blowup"
    assert tag_a2 == "A2_heteroclinic"
    assert all(v is None for v in genuine.values())
    assert elapsed < 60.0


def test_criterion_8_determinism(tmp_path, monkeypatch, record_property):
    monkeypatch.delenv("BORE_OUT_DIR", raising=False)
    raw = {"physics": {"rho1": 2, "rho2": 1}, "grid": {"n_q": 201, "n_low": 21, "n_up": 21},
           "continuation": {"steps": 5, "ds_max": 0.01}}
    config_from_dict(raw)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    payloads = []
    for name in ("first", "second"):
        assert cli.main(["run", "--config", str(path), "--out", str(tmp_path / name)]) == 0
        data = json.loads((tmp_path / name / "branch.json").read_text())
        data["metadata"].pop("timestamp")
        payloads.append(json.dumps(data, sort_keys=True))
    lines = [(tmp_path / n / "branch.json").read_text().splitlines() for n in ("first", "second")]
    differing = [a for a, b in zip(*lines) if a != b]
    record_property("differing_lines", len(differing))
    assert payloads[0] == payloads[1]
    assert all('"timestamp"' in line for line in differing)
