"""Height-function (Dubreil-Jacotin) formulation of the two-layer bore problem.

With ``p = -psi`` as vertical coordinate each layer becomes a fixed strip,
``-lam <= p <= 0`` below and ``0 <= p <= 1 - lam`` above, and the unknown is the
streamline height ``y = h(q, p)``. The upstream state is ``h = p``.

Unknowns live on an array ``H[r, j]`` with rows ``r`` running from the bottom
wall to the top wall (the interface row ``p = 0`` is stored once) and columns
``j`` running over the truncated axis ``q in [-L, L]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import mcc
from .conjugate_flow import FluidParameters
from .errors import (
    BoundaryOfDomainError,
    ConvergenceError,
    InvalidParameterError,
    NumericalFailureError,
    StagnationViolationError,
)


@dataclass(frozen=True)
class StripGrid:
    L: float
    n_q: int
    n_low: int
    n_up: int
    lam: float

    def __post_init__(self):
        if self.n_q < 3 or self.n_q % 2 == 0:
            raise InvalidParameterError("n_q must be odd and >= 3")
        if self.n_low < 3 or self.n_up < 3:
            raise InvalidParameterError("n_low and n_up must be >= 3")
        if not self.L > 0:
            raise InvalidParameterError("L must be positive")
        if not 0.0 < self.lam < 1.0:
            raise InvalidParameterError("lambda must lie in (0, 1)")

    @property
    def n_rows(self) -> int:
        return self.n_low + self.n_up - 1

    @property
    def interface_row(self) -> int:
        return self.n_low - 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_q

    @property
    def size(self) -> int:
        return self.n_rows * self.n_q

    @property
    def dq(self) -> float:
        return 2.0 * self.L / (self.n_q - 1)

    @property
    def dp_low(self) -> float:
        return self.lam / (self.n_low - 1)

    @property
    def dp_up(self) -> float:
        return (1.0 - self.lam) / (self.n_up - 1)

    @property
    def q(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n_q)

    @property
    def p(self) -> np.ndarray:
        lower = -self.lam + self.dp_low * np.arange(self.n_low)
        upper = self.dp_up * np.arange(1, self.n_up)
        lower[-1] = 0.0
        upper[-1] = 1.0 - self.lam
        return np.concatenate([lower, upper])

    def with_lambda(self, lam: float) -> "StripGrid":
        return replace(self, lam=lam)


LATERAL_MODES = ("bore", "upstream", "downstream")


@dataclass(frozen=True)
class DiscreteFront:
    """Streamline heights on a :class:`StripGrid`, stored as the deviation ``u = h - p``.

    ``lateral`` selects the Dirichlet data on the columns ``q = -L`` and
    ``q = L``: ``"bore"`` puts the upstream state on the left and its
    conjugate on the right; ``"upstream"``/``"downstream"`` use one laminar
    state on both ends (x-independent problems).
    """

    grid: StripGrid
    params: FluidParameters
    u: np.ndarray = field(repr=False)
    lateral: str = "bore"

    def __post_init__(self):
        if self.lateral not in LATERAL_MODES:
            raise ValueError(f"lateral must be one of {LATERAL_MODES}")
        u = np.array(self.u, dtype=float).reshape(self.grid.shape)
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @classmethod
    def from_height(cls, grid: StripGrid, params: FluidParameters, h, lateral: str = "bore") -> "DiscreteFront":
        h = np.asarray(h, dtype=float).reshape(grid.shape)
        return cls(grid, params, h - grid.p[:, None], lateral)

    @property
    def h(self) -> np.ndarray:
        return self.u + self.grid.p[:, None]

    @property
    def lam(self) -> float:
        return self.grid.lam

    @property
    def eta(self) -> np.ndarray:
        # p = 0 on the interface row, so u and h coincide there
        return self.u[self.grid.interface_row]

    def with_u(self, u: np.ndarray, lam: float | None = None) -> "DiscreteFront":
        grid = self.grid if lam is None else self.grid.with_lambda(lam)
        return DiscreteFront(grid, self.params, u, self.lateral)


@dataclass(frozen=True)
class NewtonResult:
    """Converged front plus the iteration record.

    ``defect`` is the unfolding coefficient of the phase-pinned stage (zero
    when plain Newton reached the tolerance).
    """

    front: DiscreteFront
    iterations: int
    history: list[float]
    defect: float = 0.0
    pinned: bool = False

    @property
    def residual_norm(self) -> float:
        return self.history[-1]


def default_length(params: FluidParameters, lam: float) -> float:
    state = mcc.make_state(params, lam)
    k_minus, k_plus = mcc.decay_rates(state)
    return max(12.0 / k_minus, 12.0 / k_plus)


def make_grid(
    params: FluidParameters, lam: float, L: float | None = None, n_q: int = 401, n_low: int = 41, n_up: int = 41
) -> StripGrid:
    if L is None:
        L = default_length(params, lam)
    return StripGrid(L=float(L), n_q=n_q, n_low=n_low, n_up=n_up, lam=lam)


# ---------------------------------------------------------------- laminar states


def downstream_deviation(grid: StripGrid, params: FluidParameters) -> np.ndarray:
    """Deviation column of the conjugate state: linear in each layer, ``lam* - lam`` on the interface."""
    c = params.lambda_star - grid.lam
    ri = grid.interface_row
    col = np.empty(grid.n_rows)
    col[: ri + 1] = c * (np.arange(grid.n_low) / (grid.n_low - 1))
    col[ri:] = c * (1.0 - np.arange(grid.n_up) / (grid.n_up - 1))
    col[ri] = c
    return col


def _lateral_targets(grid: StripGrid, params: FluidParameters, lateral: str):
    zero = np.zeros(grid.n_rows)
    down = downstream_deviation(grid, params)
    if lateral == "bore":
        return zero, down
    if lateral == "upstream":
        return zero, zero
    return down, down


def laminar_front(grid: StripGrid, params: FluidParameters, which: str = "upstream") -> DiscreteFront:
    """x-independent front filled with the upstream or downstream laminar column."""
    if which == "upstream":
        col = np.zeros(grid.n_rows)
    elif which == "downstream":
        col = downstream_deviation(grid, params)
    else:
        raise ValueError("which must be 'upstream' or 'downstream'")
    return DiscreteFront(grid, params, np.repeat(col[:, None], grid.n_q, axis=1), lateral=which)


def seed_from_mcc(params: FluidParameters, lam: float, grid: StripGrid) -> DiscreteFront:
    """Streamlines stretched layer-wise through the long-wave interface profile."""
    state = mcc.make_state(params, lam)
    zeta = mcc.heteroclinic_profile(state, grid.q)
    zeta[0], zeta[-1] = state.z_minus, state.z_plus
    return front_from_interface(params, grid, zeta)


def front_from_interface(params: FluidParameters, grid: StripGrid, zeta: np.ndarray) -> DiscreteFront:
    """Front whose layers are uniformly stretched to meet the interface ``zeta(q)``.

    Lower layer ``h = -lam + (p + lam)(lam + zeta)/lam``, upper layer
    ``h = zeta + p (1 - lam - zeta)/(1 - lam)``.
    """
    ri = grid.interface_row
    zeta = np.asarray(zeta, dtype=float)
    s_low = np.arange(grid.n_low) / (grid.n_low - 1)
    s_up = np.arange(grid.n_up) / (grid.n_up - 1)
    u = np.empty(grid.shape)
    u[: ri + 1] = s_low[:, None] * zeta[None, :]
    u[ri:] = (1.0 - s_up)[:, None] * zeta[None, :]
    u[ri] = zeta
    return DiscreteFront(grid, params, u)


# ---------------------------------------------------------------- residual


def _interface_slopes(u: np.ndarray, grid: StripGrid) -> tuple[np.ndarray, np.ndarray]:
    ri = grid.interface_row
    hp1 = 1.0 + (3.0 * u[ri] - 4.0 * u[ri - 1] + u[ri - 2]) / (2.0 * grid.dp_low)
    hp2 = 1.0 + (-3.0 * u[ri] + 4.0 * u[ri + 1] - u[ri + 2]) / (2.0 * grid.dp_up)
    return hp1, hp2


def _row_spacing(grid: StripGrid) -> np.ndarray:
    """Vertical spacing for each row 1..n_rows-2 (the interface row gets a dummy)."""
    ri = grid.interface_row
    dp = np.full(grid.n_rows - 2, grid.dp_up)
    dp[: ri - 1] = grid.dp_low
    return dp


def stagnation_check(u: np.ndarray, grid: StripGrid) -> None:
    """Raise unless every discrete vertical slope (and both interface stencils) is positive."""
    if not np.all(np.isfinite(u)):
        raise StagnationViolationError("non-finite height values")
    ri = grid.interface_row
    du = np.diff(u, axis=0)
    if np.any(du[:ri] <= -grid.dp_low) or np.any(du[ri:] <= -grid.dp_up):
        raise StagnationViolationError("streamline heights not increasing in p (h_p <= 0)")
    hp1, hp2 = _interface_slopes(u, grid)
    if np.any(hp1 <= 0.0) or np.any(hp2 <= 0.0):
        raise StagnationViolationError("one-sided interface h_p <= 0")


def _interior_terms(u: np.ndarray, grid: StripGrid):
    dq = grid.dq
    dp = _row_spacing(grid)[:, None]
    c = u[1:-1, 1:-1]
    n, s = u[2:, 1:-1], u[:-2, 1:-1]
    e, w = u[1:-1, 2:], u[1:-1, :-2]
    hq = (e - w) / (2.0 * dq)
    hp = 1.0 + (n - s) / (2.0 * dp)
    hqq = (e - 2.0 * c + w) / dq**2
    hpp = (n - 2.0 * c + s) / dp**2
    hqp = (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4.0 * dq * dp)
    return hq, hp, hqq, hpp, hqp, dp


def _interface_terms(u: np.ndarray, grid: StripGrid):
    ri = grid.interface_row
    hq = (u[ri, 2:] - u[ri, :-2]) / (2.0 * grid.dq)
    hp1, hp2 = _interface_slopes(u, grid)
    return hq, hp1[1:-1], hp2[1:-1]


def residual_array(
    u: np.ndarray, grid: StripGrid, params: FluidParameters, check: bool = True, lateral: str = "bore"
) -> np.ndarray:
    """Residual on the grid layout: PDE rows, dynamic-condition row, Dirichlet rows."""
    u = np.asarray(u, dtype=float).reshape(grid.shape)
    if check:
        stagnation_check(u, grid)
    ri = grid.interface_row
    res = np.empty(grid.shape)

    hq, hp, hqq, hpp, hqp, dp = _interior_terms(u, grid)
    # rows scaled by dp**2 so the exact piecewise-linear laminar columns give round-off only
    res[1:-1, 1:-1] = dp**2 * ((1.0 + hq**2) * hpp - 2.0 * hq * hp * hqp + hp**2 * hqq)

    hqi, hp1, hp2 = _interface_terms(u, grid)
    a = 1.0 + hqi**2
    jr = params.density_jump
    res[ri, 1:-1] = 0.5 * (params.rho2 * a / hp2**2 - params.rho1 * a / hp1**2) + jr / params.froude_sq * u[ri, 1:-1] - 0.5 * jr

    left, right = _lateral_targets(grid, params, lateral)
    res[:, 0] = u[:, 0] - left
    res[:, -1] = u[:, -1] - right
    res[0, :] = u[0, :]
    res[-1, :] = u[-1, :]
    return res


def dj_residual(front: DiscreteFront) -> np.ndarray:
    return residual_array(front.u, front.grid, front.params, lateral=front.lateral).ravel()


def jacobian_matrix(u: np.ndarray, grid: StripGrid, params: FluidParameters, check: bool = True) -> sp.csr_matrix:
    """Exact derivative of :func:`residual_array` with respect to ``u`` (equivalently ``h``)."""
    u = np.asarray(u, dtype=float).reshape(grid.shape)
    if check:
        stagnation_check(u, grid)
    nr, nq = grid.shape
    ri = grid.interface_row
    dq = grid.dq
    idx = np.arange(nr * nq).reshape(nr, nq)
    rows, cols, vals = [], [], []

    def add(row_idx, col_idx, v):
        rows.append(row_idx.ravel())
        cols.append(col_idx.ravel())
        vals.append(np.broadcast_to(v, row_idx.shape).ravel())

    # interior 9-point stencil
    hq, hp, hqq, hpp, hqp, dp = _interior_terms(u, grid)
    interior = np.ones((nr - 2, nq - 2), dtype=bool)
    interior[ri - 1] = False

    def sel(a):
        return np.broadcast_to(a, interior.shape)[interior]

    def sub(dr, dj):
        return idx[1 + dr : nr - 1 + dr, 1 + dj : nq - 1 + dj][interior]

    dpv = sel(dp)
    w = dpv**2
    r_hq = w * sel(2.0 * hq * hpp - 2.0 * hp * hqp)
    r_hp = w * sel(-2.0 * hq * hqp + 2.0 * hp * hqq)
    r_hqq = w * sel(hp**2)
    r_hpp = w * sel(1.0 + hq**2)
    r_hqp = w * sel(-2.0 * hq * hp)
    rr = sub(0, 0)
    add(rr, rr, -2.0 * r_hqq / dq**2 - 2.0 * r_hpp / dpv**2)
    add(rr, sub(0, 1), r_hq / (2.0 * dq) + r_hqq / dq**2)
    add(rr, sub(0, -1), -r_hq / (2.0 * dq) + r_hqq / dq**2)
    add(rr, sub(1, 0), r_hp / (2.0 * dpv) + r_hpp / dpv**2)
    add(rr, sub(-1, 0), -r_hp / (2.0 * dpv) + r_hpp / dpv**2)
    cross = r_hqp / (4.0 * dq * dpv)
    add(rr, sub(1, 1), cross)
    add(rr, sub(1, -1), -cross)
    add(rr, sub(-1, 1), -cross)
    add(rr, sub(-1, -1), cross)

    # interface row: both one-sided stencils plus the axial slope
    j = np.arange(1, nq - 1)
    hqi, hp1, hp2 = _interface_terms(u, grid)
    a = 1.0 + hqi**2
    d_hq = hqi * (params.rho2 / hp2**2 - params.rho1 / hp1**2)
    d_hp1 = params.rho1 * a / hp1**3
    d_hp2 = -params.rho2 * a / hp2**3
    d1, d2 = 2.0 * grid.dp_low, 2.0 * grid.dp_up
    ir = idx[ri, j]
    add(ir, ir, params.density_jump / params.froude_sq + 3.0 * d_hp1 / d1 - 3.0 * d_hp2 / d2)
    add(ir, idx[ri - 1, j], -4.0 * d_hp1 / d1)
    add(ir, idx[ri - 2, j], d_hp1 / d1)
    add(ir, idx[ri + 1, j], 4.0 * d_hp2 / d2)
    add(ir, idx[ri + 2, j], -d_hp2 / d2)
    add(ir, idx[ri, j + 1], d_hq / (2.0 * dq))
    add(ir, idx[ri, j - 1], -d_hq / (2.0 * dq))

    boundary = np.zeros((nr, nq), dtype=bool)
    boundary[0, :] = boundary[-1, :] = True
    boundary[:, 0] = boundary[:, -1] = True
    b = idx[boundary]
    add(b, b, 1.0)

    n = nr * nq
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def dj_jacobian(front: DiscreteFront) -> sp.csr_matrix:
    return jacobian_matrix(front.u, front.grid, front.params)


def residual_lambda_derivative(
    u: np.ndarray, grid: StripGrid, params: FluidParameters, lateral: str = "bore"
) -> np.ndarray:
    """Partial derivative of the residual in ``lam`` at fixed deviation ``u``.

    ``lam`` enters through the layer spacings ``dp`` and the conjugate
    lateral column.
    """
    u = np.asarray(u, dtype=float).reshape(grid.shape)
    lam = grid.lam
    ri = grid.interface_row
    out = np.zeros(grid.shape)

    hq, hp, hqq, hpp, hqp, dp = _interior_terms(u, grid)
    # dp * d/d(dp) of each scaled interior residual dp**2 * pde
    pde = (1.0 + hq**2) * hpp - 2.0 * hq * hp * hqp + hp**2 * hqq
    dpde = -2.0 * (1.0 + hq**2) * hpp + 2.0 * hq * hqp * (2.0 * hp - 1.0) - 2.0 * hp * hqq * (hp - 1.0)
    dres = dp**2 * (dpde + 2.0 * pde)
    out[1:ri, 1:-1] = dres[: ri - 1] / lam
    out[ri + 1 : -1, 1:-1] = -dres[ri:] / (1.0 - lam)

    hqi, hp1, hp2 = _interface_terms(u, grid)
    a = 1.0 + hqi**2
    dhp1 = -(hp1 - 1.0) / lam
    dhp2 = (hp2 - 1.0) / (1.0 - lam)
    out[ri, 1:-1] = -params.rho2 * a / hp2**3 * dhp2 + params.rho1 * a / hp1**3 * dhp1

    # lateral target d/dlam of the conjugate column, with a minus sign
    dcol = np.empty(grid.n_rows)
    dcol[: ri + 1] = np.arange(grid.n_low) / (grid.n_low - 1)
    dcol[ri:] = 1.0 - np.arange(grid.n_up) / (grid.n_up - 1)
    dcol[ri] = 1.0
    if lateral in ("bore", "downstream"):
        out[:, -1] = dcol
    if lateral == "downstream":
        out[:, 0] = dcol
    if lateral != "downstream":
        out[:, 0] = 0.0
    out[0, :] = 0.0
    out[-1, :] = 0.0
    return out.ravel()


# ---------------------------------------------------------------- Newton


def _admissible(u: np.ndarray, grid: StripGrid) -> bool:
    try:
        stagnation_check(u, grid)
    except StagnationViolationError:
        return False
    return True


def factorize(A: sp.spmatrix):
    try:
        return splu(A.tocsc())
    except RuntimeError as exc:
        raise NumericalFailureError(f"singular linear system: {exc}") from exc


def interface_crossing(q: np.ndarray, eta: np.ndarray, level: float) -> float | None:
    """First abscissa where ``eta`` crosses ``level`` (linear interpolation), or None."""
    d = eta - level
    hits = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) <= 0)[0]
    for j in hits:
        if d[j] == d[j + 1]:
            continue
        w = d[j] / (d[j] - d[j + 1])
        return float(q[j] + w * (q[j + 1] - q[j]))
    return None


def phase_row(grid: StripGrid, x0: float) -> sp.csr_matrix:
    """Sparse row evaluating the interface height at ``q = x0`` by linear interpolation."""
    q = grid.q
    j = int(np.clip(np.searchsorted(q, x0) - 1, 0, grid.n_q - 2))
    w = (x0 - q[j]) / (q[j + 1] - q[j])
    base = grid.interface_row * grid.n_q + j
    return sp.csr_matrix(([1.0 - w, w], ([0, 0], [base, base + 1])), shape=(1, grid.size))


def translation_mode(u: np.ndarray, grid: StripGrid) -> np.ndarray:
    """Centred ``h_q`` with the Dirichlet nodes zeroed (the discrete translation generator)."""
    u = np.asarray(u).reshape(grid.shape)
    t = np.zeros(grid.shape)
    t[1:-1, 1:-1] = (u[1:-1, 2:] - u[1:-1, :-2]) / (2.0 * grid.dq)
    return t.ravel()


def left_null_direction(lu, u: np.ndarray, grid: StripGrid, sweeps: int = 3) -> np.ndarray:
    """Approximate left null vector of the Jacobian by inverse iteration on its transpose.

    Scaled to unit max-norm and oriented to overlap positively with the
    translation mode, so the result is deterministic.
    """
    t = translation_mode(u, grid)
    x = np.abs(t) + 1e-3 * np.max(np.abs(t))
    for _ in range(sweeps):
        x = lu.solve(x, trans="T")
        x /= np.max(np.abs(x))
    if x @ t < 0:
        x = -x
    return x


def newton_solve(
    guess: DiscreteFront, tol: float = 1e-10, max_iter: int = 50, max_halvings: int = 8
) -> NewtonResult:
    """Damped Newton at fixed ``lam`` with step halving inside the admissible set.

    On a truncated cylinder the translation mode is nearly singular, and the
    scheme conserves flow force only up to truncation error, so plain Newton
    can stall slightly above round-off. It then switches to the phase-pinned
    system ``R(u) + mu * v = 0, eta(x0) = mid`` with ``v`` along the left
    null vector; what remains in ``R`` is ``mu * v`` and the front is only
    returned if that is within ``tol``.
    """
    grid, params, lateral = guess.grid, guess.params, guess.lateral
    u = np.array(guess.u, dtype=float)
    stagnation_check(u, grid)
    r = residual_array(u, grid, params, lateral=lateral).ravel()
    norm = float(np.max(np.abs(r)))
    history = [norm]
    it = 0
    slow = 0
    while norm > tol:
        if it >= max_iter:
            raise ConvergenceError(f"Newton did not converge in {max_iter} iterations (|R| = {norm:.3e})")
        lu = factorize(jacobian_matrix(u, grid, params, check=False))
        delta = lu.solve(-r).reshape(grid.shape)
        t = 1.0
        accepted = False
        any_admissible = False
        for _ in range(max_halvings + 1):
            trial = u + t * delta
            if _admissible(trial, grid):
                any_admissible = True
                r_trial = residual_array(trial, grid, params, check=False, lateral=lateral).ravel()
                n_trial = float(np.max(np.abs(r_trial)))
                if n_trial < norm:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            if not any_admissible:
                raise BoundaryOfDomainError("every damped Newton step violates h_p > 0")
            return _pinned_newton(guess, u, lu, history, it, tol, max_iter)
        # two sluggish steps in a row: the near-singular translation mode is in control
        slow = slow + 1 if n_trial > 0.5 * norm else 0
        u, r, norm = trial, r_trial, n_trial
        if slow >= 2 and norm > tol and lateral == "bore":
            history.append(norm)
            it += 1
            lu = factorize(jacobian_matrix(u, grid, params, check=False))
            return _pinned_newton(guess, u, lu, history, it, tol, max_iter)
        history.append(norm)
        it += 1
    return NewtonResult(front=guess.with_u(u), iterations=it, history=history)


def _pinned_newton(guess, u, lu, history, it, tol, max_iter) -> NewtonResult:
    grid, params, lateral = guess.grid, guess.params, guess.lateral
    if lateral != "bore":
        raise ConvergenceError("line search stalled on an x-independent problem")
    mid = 0.5 * (params.lambda_star - grid.lam)
    x0 = interface_crossing(grid.q, u[grid.interface_row], mid)
    if x0 is None:
        raise ConvergenceError("line search stalled and the interface never crosses its midpoint")
    c = phase_row(grid, x0)
    v = left_null_direction(lu, u, grid)
    n = grid.size
    uv = u.ravel().copy()
    mu = 0.0
    aug_prev = math.inf
    while True:
        r = residual_array(uv, grid, params, lateral=lateral).ravel()
        aug = np.concatenate([r + mu * v, c @ uv - mid])
        aug_norm = float(np.max(np.abs(aug)))
        if aug_norm <= 0.1 * tol:
            break
        # round-off floor reached
        if aug_norm <= tol and aug_norm >= 0.5 * aug_prev:
            break
        aug_prev = aug_norm
        if it >= max_iter:
            raise ConvergenceError(f"pinned Newton did not converge in {max_iter} iterations (|R| = {aug_norm:.3e})")
        A = sp.bmat([[jacobian_matrix(uv, grid, params, check=False), sp.csr_matrix(v[:, None])], [c, None]])
        d = factorize(A).solve(-aug)
        t = 1.0
        for _ in range(9):
            if _admissible((uv + t * d[:n]).reshape(grid.shape), grid):
                break
            t *= 0.5
        else:
            raise BoundaryOfDomainError("every pinned Newton step violates h_p > 0")
        uv += t * d[:n]
        mu += t * d[n]
        it += 1
        history.append(float(np.max(np.abs(residual_array(uv, grid, params, lateral=lateral)))))
    raw = history[-1]
    if raw > tol:
        raise ConvergenceError(
            f"discrete solvability defect |R| = {raw:.3e} exceeds tol = {tol:.1e} (refine the vertical grid)"
        )
    return NewtonResult(front=guess.with_u(uv), iterations=it, history=history, defect=mu, pinned=True)


# ---------------------------------------------------------------- physical fields


@dataclass(frozen=True)
class PhysicalFields:
    """Interface and velocity samples at the physical points ``(q, h)`` of each layer."""

    q: np.ndarray
    eta: np.ndarray
    eta_x: np.ndarray
    y_lower: np.ndarray
    y_upper: np.ndarray
    psi_x_lower: np.ndarray
    psi_y_lower: np.ndarray
    psi_x_upper: np.ndarray
    psi_y_upper: np.ndarray


def layer_derivatives(front: DiscreteFront):
    """``(h_q, h_p)`` per layer with second-order stencils; interface row appears in both layers."""
    g = front.grid
    ri = g.interface_row
    out = []
    for block, dp in ((front.u[: ri + 1], g.dp_low), (front.u[ri:], g.dp_up)):
        hq = np.gradient(block, g.dq, axis=1, edge_order=2)
        hp = 1.0 + np.gradient(block, dp, axis=0, edge_order=2)
        out.append((hq, hp))
    return out


def reconstruct_physical(front: DiscreteFront) -> PhysicalFields:
    (hq1, hp1), (hq2, hp2) = layer_derivatives(front)
    g = front.grid
    ri = g.interface_row
    eta = front.eta.copy()
    eta_x = np.gradient(eta, g.dq, edge_order=2)
    return PhysicalFields(
        q=g.q,
        eta=eta,
        eta_x=eta_x,
        y_lower=np.array(front.h[: ri + 1]),
        y_upper=np.array(front.h[ri:]),
        psi_x_lower=hq1 / hp1,
        psi_y_lower=-1.0 / hp1,
        psi_x_upper=hq2 / hp2,
        psi_y_upper=-1.0 / hp2,
    )
