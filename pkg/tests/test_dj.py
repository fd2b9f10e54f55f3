import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from internal_bores import dj, mcc
from internal_bores.conjugate_flow import make_parameters
from internal_bores.errors import InvalidParameterError, StagnationViolationError


def _interior_mask(grid):
    m = np.zeros(grid.shape, dtype=bool)
    m[1:-1, 1:-1] = True
    return m


def test_grid_geometry(params21):
    g = dj.make_grid(params21, 0.4, L=10.0, n_q=21, n_low=5, n_up=7)
    assert g.n_rows == 11 and g.interface_row == 4
    assert g.p[0] == -0.4 and g.p[4] == 0.0 and g.p[-1] == 0.6
    assert g.q[0] == -10.0 and g.q[-1] == 10.0
    with pytest.raises(InvalidParameterError):
        dj.StripGrid(1.0, 20, 5, 5, 0.4)


def test_default_length_rule(params21):
    lam = params21.lambda_star - 0.02
    km, kp = mcc.decay_rates(mcc.make_state(params21, lam))
    assert dj.default_length(params21, lam) == pytest.approx(max(12 / km, 12 / kp))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.sampled_from([(21, 5, 5), (41, 11, 9), (101, 41, 41), (31, 81, 21)]))
def test_upstream_laminar_exact(lam, shape):
    p = make_parameters(2.0, 1.0)
    g = dj.make_grid(p, lam, L=5.0, n_q=shape[0], n_low=shape[1], n_up=shape[2])
    r = dj.dj_residual(dj.laminar_front(g, p, "upstream"))
    assert np.all(r == 0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(1.05, 20.0), st.floats(0.05, 0.95), st.sampled_from([(21, 5, 5), (41, 11, 9), (101, 41, 41), (31, 81, 21)]))
def test_downstream_laminar_exact(ratio, lam, shape):
    p = make_parameters(ratio, 1.0)
    g = dj.make_grid(p, lam, L=5.0, n_q=shape[0], n_low=shape[1], n_up=shape[2])
    f = dj.laminar_front(g, p, "downstream")
    assert np.max(np.abs(dj.dj_residual(f))) <= 1e-12
    # the stored column is the piecewise-linear conjugate profile
    h = f.h[:, 0]
    ri = g.interface_row
    assert h[ri] == pytest.approx(p.lambda_star - lam, abs=1e-15)
    slopes = np.diff(h) / np.diff(g.p)
    assert np.allclose(slopes[:ri], p.lambda_star / lam, rtol=1e-9)
    assert np.allclose(slopes[ri:], (1 - p.lambda_star) / (1 - lam), rtol=1e-9)


def test_seed_residual_nonzero_and_scaling(params21):
    """The long-wave seed leaves an interior residual that shrinks with the amplitude."""
    norms = []
    for d in (0.02, 0.01):
        lam = params21.lambda_star - d
        g = dj.make_grid(params21, lam)
        r = dj.residual_array(dj.seed_from_mcc(params21, lam, g).u, g, params21)
        norms.append(np.max(np.abs(r[_interior_mask(g)])))
    assert norms[1] > 0
    assert norms[0] / norms[1] > 2.0


@pytest.mark.xfail(strict=True, reason="observed ratio is about 8 (cubic in amplitude), not 4 +/- 50%")
def test_seed_residual_quadratic_ratio(params21):
    norms = []
    for d in (0.02, 0.01):
        lam = params21.lambda_star - d
        g = dj.make_grid(params21, lam)
        r = dj.residual_array(dj.seed_from_mcc(params21, lam, g).u, g, params21)
        norms.append(np.max(np.abs(r[_interior_mask(g)])))
    assert 2.0 <= norms[0] / norms[1] <= 6.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_jacobian_directional_derivative(params21, seed):
    lam = params21.lambda_star - 0.03
    g = dj.make_grid(params21, lam, n_q=61, n_low=9, n_up=7)
    u = dj.seed_from_mcc(params21, lam, g).u.ravel()
    v = np.random.default_rng(seed).standard_normal(u.size) * 1e-2
    eps = 1e-6
    fd = (dj.residual_array(u + eps * v, g, params21) - dj.residual_array(u - eps * v, g, params21)).ravel() / (2 * eps)
    jv = dj.jacobian_matrix(u, g, params21) @ v
    assert np.max(np.abs(fd - jv)) <= 1e-6 * np.max(np.abs(jv))


def test_jacobian_sparsity(params21):
    g = dj.make_grid(params21, 0.5, n_q=21, n_low=7, n_up=7)
    J = dj.dj_jacobian(dj.seed_from_mcc(params21, 0.5, g))
    nnz = np.diff(J.indptr)
    assert nnz.max() <= 9
    ri = g.interface_row
    row = ri * g.n_q + 5
    cols = J.indices[J.indptr[row] : J.indptr[row + 1]]
    assert len(cols) == 7


@pytest.mark.parametrize("lateral", ["bore", "upstream", "downstream"])
def test_lambda_derivative(params21, lateral):
    lam = params21.lambda_star - 0.03
    g = dj.make_grid(params21, lam, n_q=61, n_low=9, n_up=7)
    u = dj.seed_from_mcc(params21, lam, g).u
    e = 1e-6
    fd = (dj.residual_array(u, g.with_lambda(lam + e), params21, lateral=lateral)
          - dj.residual_array(u, g.with_lambda(lam - e), params21, lateral=lateral)).ravel() / (2 * e)
    an = dj.residual_lambda_derivative(u, g, params21, lateral=lateral)
    assert np.max(np.abs(fd - an)) <= 1e-8 * max(1.0, np.max(np.abs(an)))


def test_stagnation_guard(params21):
    g = dj.make_grid(params21, 0.5, n_q=11, n_low=5, n_up=5)
    u = np.zeros(g.shape)
    u[2, 5] = -1.0
    with pytest.raises(StagnationViolationError):
        dj.residual_array(u, g, params21)
    u = np.zeros(g.shape)
    u[0, 0] = np.nan
    with pytest.raises(StagnationViolationError):
        dj.stagnation_check(u, g)


def test_newton_quadratic_contraction(small_bore):
    h = small_bore.history
    assert h[-1] <= 1e-10
    assert h[-2] / h[-3] <= 0.1
    assert h[-1] / h[-2] <= 0.1


def test_newton_result_properties(small_bore, params21):
    f = small_bore.front
    assert np.max(np.abs(dj.dj_residual(f))) <= 1e-10
    eta = f.eta
    assert abs(eta[0]) <= 1e-15
    assert eta[-1] == pytest.approx(params21.lambda_star - f.lam, abs=1e-15)
    assert np.all(np.diff(eta) > -1e-14)
    assert abs(small_bore.defect) <= 1e-10


def test_newton_on_laminar_needs_no_iterations(params21):
    g = dj.make_grid(params21, 0.4, L=5.0, n_q=21, n_low=7, n_up=7)
    res = dj.newton_solve(dj.laminar_front(g, params21, "downstream"))
    assert res.iterations == 0


def test_reflection_symmetry(small_bore):
    """q -> -q maps the converged front onto a solution of the reflected problem (non-lateral rows)."""
    f = small_bore.front
    g = f.grid
    r = dj.residual_array(f.u[:, ::-1], g, f.params)
    assert np.max(np.abs(r[:, 1:-1])) <= 1e-10


def test_grid_convergence_order(params21):
    lam = params21.lambda_star - 0.04
    L = dj.default_length(params21, lam)
    etas = []
    for nq, n in ((101, 11), (201, 21), (401, 41)):
        g = dj.make_grid(params21, lam, L=L, n_q=nq, n_low=n, n_up=n)
        etas.append(dj.newton_solve(dj.seed_from_mcc(params21, lam, g), tol=1e-8).front.eta)
    e1 = np.max(np.abs(etas[0] - etas[1][::2]))
    e2 = np.max(np.abs(etas[1] - etas[2][::2]))
    assert np.log2(e1 / e2) >= 1.8


def test_physical_reconstruction(small_bore):
    pf = dj.reconstruct_physical(small_bore.front)
    assert np.all(pf.psi_y_lower < 0) and np.all(pf.psi_y_upper < 0)
    # psi_x = -psi_y * eta_x on the interface
    ri = -1
    assert np.allclose(pf.psi_x_lower[ri], -pf.psi_y_lower[ri] * pf.eta_x, atol=1e-6)


def test_translation_mode_correlates_with_hq(small_bore):
    f = small_bore.front
    t = dj.translation_mode(f.u, f.grid)
    assert np.max(np.abs(t)) > 0
    assert np.all(t.reshape(f.grid.shape)[:, 0] == 0)
