"""Pseudo-arclength continuation of bore fronts away from the onset ``lam*``.

Each point solves the unfolded, phase-pinned system

    R(u, lam) + mu v = 0,    eta(x0) = (lam* - lam)/2,
    <u - u_prev, tau_u>/N + (lam - lam_prev) tau_lam = ds

for ``(u, lam, mu)``, where ``v`` is the left near-null vector of the
Jacobian at the previous point (see :func:`internal_bores.dj.newton_solve`).
``mu`` absorbs the small discrete flow-force defect and is recorded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.sparse as sp

from . import dj, spectral
from .conjugate_flow import FluidParameters
from .errors import (
    BoreError,
    ConvergenceError,
    InvalidParameterError,
    OnsetFailureError,
    StagnationViolationError,
)

DIRECTIONS = ("minus", "plus")
# axial derivatives below this fraction of their maximum are round-off in the far field
ROUNDOFF_FLOOR = 1e-8
TERMINATIONS = ("budget_exhausted", "A1_blowup", "A2_heteroclinic", "A3_spectral", "solver_failure")


@dataclass(frozen=True)
class Thresholds:
    eps_stag: float = 1e-2
    max_slope: float = 10.0
    eps_contact: float = 1e-2
    eps_spec: float = 1e-3
    eps_plateau: float = 1e-2
    plateau_cells: float = 10.0
    norm_max: float = 1e3

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidParameterError(f"threshold {f.name} must be a positive number")


@dataclass(frozen=True)
class StepControl:
    ds0: float = 0.01
    ds_min: float = 1e-5
    ds_max: float = 0.1
    grow_after: int = 3
    fast_iterations: int = 4
    max_newton: int = 10
    tol: float = 1e-10

    def __post_init__(self):
        if not 0 < self.ds_min <= self.ds0 <= self.ds_max:
            raise InvalidParameterError("need 0 < ds_min <= ds0 <= ds_max")
        if self.tol <= 0:
            raise InvalidParameterError("tol must be positive")


@dataclass(frozen=True)
class Diagnostics:
    amplitude: float
    stagnation_margin: float
    max_slope: float
    sigma_up: float
    sigma_down: float
    contact_margin: float
    monotone: bool
    norm: float
    defect: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class BranchPoint:
    front: dj.DiscreteFront
    s: float
    diagnostics: Diagnostics
    iterations: int = 0
    mu: float = 0.0
    unfolding: np.ndarray | None = field(default=None, repr=False)

    @property
    def lam(self) -> float:
        return self.front.lam


@dataclass
class Branch:
    params: FluidParameters
    direction: str
    x0: float
    thresholds: Thresholds = field(default_factory=Thresholds)
    control: StepControl = field(default_factory=StepControl)
    points: list[BranchPoint] = field(default_factory=list)
    termination: str | None = None
    log: list[str] = field(default_factory=list)
    ds: float = 0.0
    streak: int = 0

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])


# ---------------------------------------------------------------- diagnostics


def interface_margin(front: dj.DiscreteFront) -> float:
    """Smallest ``1/h_p`` over interface nodes and both one-sided stencils (equals ``min |psi_y|``)."""
    hp1, hp2 = dj._interface_slopes(front.u, front.grid)
    return float(min(np.min(1.0 / hp1), np.min(1.0 / hp2)))


def monotonicity_report(front: dj.DiscreteFront, direction: str | None = None) -> dict:
    """Sign conditions of strict monotonicity, stagnation margin and distance from the upstream state.

    For ``minus`` fronts (elevation) the conditions are ``eta_x > 0``,
    ``psi_x > 0`` and ``psi_y < 0``; ``plus`` fronts flip the first two.
    Axial signs are checked at interior nodes; the wall and lateral columns
    carry ``h_q = 0`` by construction.
    """
    f = dj.reconstruct_physical(front)
    margin = interface_margin(front)
    laminar_distance = float(np.max(np.abs(front.u[:, 1])))
    psi_y_ok = bool(np.all(f.psi_y_lower < 0) and np.all(f.psi_y_upper < 0))
    flat = front.lateral != "bore" or float(np.max(np.abs(front.u[:, 1:] - front.u[:, :-1]))) == 0.0
    if flat:
        return {"monotone": psi_y_ok, "eta_x": True, "psi_x": True, "psi_y": psi_y_ok,
                "unresolved_nodes": 0, "stagnation_margin": margin, "laminar_distance": laminar_distance}
    if direction is None:
        direction = "minus" if front.lam < front.params.lambda_star else "plus"
    sgn = 1.0 if direction == "minus" else -1.0
    eta_ok, eta_flat = _signed(sgn * f.eta_x[1:-1])
    psi_x = np.concatenate([f.psi_x_lower[1:, 1:-1].ravel(), f.psi_x_upper[:-1, 1:-1].ravel()])
    psi_x_ok, psi_flat = _signed(sgn * psi_x)
    return {
        "monotone": eta_ok and psi_x_ok and psi_y_ok,
        "eta_x": eta_ok,
        "psi_x": psi_x_ok,
        "psi_y": psi_y_ok,
        "unresolved_nodes": eta_flat + psi_flat,
        "stagnation_margin": margin,
        "laminar_distance": laminar_distance,
    }


def _signed(values: np.ndarray) -> tuple[bool, int]:
    """All entries positive, ignoring far-field nodes at round-off level; returns (ok, ignored count)."""
    floor = ROUNDOFF_FLOOR * float(np.max(np.abs(values)))
    resolved = np.abs(values) > floor
    return bool(np.any(resolved) and np.all(values[resolved] > 0)), int(np.count_nonzero(~resolved))


def laminar_sigmas(params: FluidParameters, lam: float, n_low: int, n_up: int) -> tuple[float, float]:
    up = spectral.principal_eigenvalue(spectral.upstream_problem(params, lam, n_low, n_up))
    down = spectral.principal_eigenvalue(spectral.downstream_problem(params, lam, n_low, n_up))
    return up, down


def compute_diagnostics(front: dj.DiscreteFront, direction: str | None = None, defect: float = 0.0) -> Diagnostics:
    g = front.grid
    try:
        report = monotonicity_report(front, direction)
        margin, monotone = report["stagnation_margin"], report["monotone"]
    except (ZeroDivisionError, FloatingPointError):
        margin, monotone = 0.0, False
    eta_x = np.gradient(front.eta, g.dq, edge_order=2)
    s_up, s_down = laminar_sigmas(front.params, front.lam, g.n_low, g.n_up)
    return Diagnostics(
        amplitude=float(np.max(np.abs(front.eta))),
        stagnation_margin=float(margin),
        max_slope=float(np.max(np.abs(eta_x))),
        sigma_up=s_up,
        sigma_down=s_down,
        contact_margin=1.0 - front.lam,
        monotone=bool(monotone),
        norm=float(np.max(np.abs(front.u)) + abs(front.lam)),
        defect=float(defect),
    )


# ---------------------------------------------------------------- classification


def plateau_window(q: np.ndarray, eta: np.ndarray, eps: float, cells: float) -> tuple[float, float] | None:
    """Interior flat stretch between two transition layers, or None.

    Flat means ``|eta_q| < eps * max|eta|``; the stretch must be at least
    ``cells`` grid cells wide, bounded by steep nodes on both sides, and sit
    at a level separated from both far-field values by 10% of the jump.
    """
    amp = float(np.max(np.abs(eta)))
    jump = abs(eta[-1] - eta[0])
    if amp == 0.0 or jump == 0.0:
        return None
    dq = q[1] - q[0]
    slope = np.abs(np.gradient(eta, dq, edge_order=2))
    flat = slope < eps * amp
    j = 0
    n = len(q)
    while j < n:
        if not flat[j]:
            j += 1
            continue
        k = j
        while k + 1 < n and flat[k + 1]:
            k += 1
        if j > 0 and k < n - 1 and (k - j) >= cells:
            level = float(np.mean(eta[j : k + 1]))
            lo, hi = sorted((eta[0], eta[-1]))
            if lo + 0.1 * jump < level < hi - 0.1 * jump:
                return float(q[j]), float(q[k])
        j = k + 1
    return None


def classify_point(point: BranchPoint, onset_distance: float, th: Thresholds) -> str | None:
    d = point.diagnostics
    if (
        d.stagnation_margin < th.eps_stag
        or d.max_slope > th.max_slope
        or d.contact_margin < th.eps_contact
        or d.norm > th.norm_max
    ):
        return "A1_blowup"
    away = abs(point.lam - point.front.params.lambda_star) > onset_distance
    if away and min(abs(d.sigma_up), abs(d.sigma_down)) < th.eps_spec:
        return "A3_spectral"
    g = point.front.grid
    if plateau_window(g.q, point.front.eta, th.eps_plateau, th.plateau_cells) is not None:
        return "A2_heteroclinic"
    return None


def classify_alternative(branch: Branch) -> str | None:
    """First alternative tag met along the branch (A1, then A3, then A2), or None."""
    if not branch.points:
        return None
    onset = abs(branch.points[0].lam - branch.params.lambda_star)
    for pt in branch.points:
        tag = classify_point(pt, onset, branch.thresholds)
        if tag is not None:
            return tag
    return None


# ---------------------------------------------------------------- stepping


def point_distance(a: BranchPoint, b: BranchPoint) -> float:
    """Normalisation metric: root-mean-square change of ``u`` plus ``lam``, in quadrature."""
    du = a.front.u - b.front.u
    return math.sqrt(float(np.mean(du**2)) + (a.lam - b.lam) ** 2)


def _normalise(tu: np.ndarray, tl: float) -> tuple[np.ndarray, float]:
    n = math.sqrt(float(np.mean(tu**2)) + tl**2)
    return tu / n, tl / n


def start_branch(
    params: FluidParameters,
    direction: str,
    delta_lambda0: float | None = None,
    grid: dict | None = None,
    thresholds: Thresholds | None = None,
    control: StepControl | None = None,
) -> Branch:
    """First admitted point at ``lam* -/+ delta_lambda0`` from a long-wave seed.

    ``grid`` may hold ``L``, ``n_q``, ``n_low``, ``n_up``; ``L`` defaults to
    the decay-rate rule at the seed. The grid is then fixed for the branch.
    """
    if direction not in DIRECTIONS:
        raise InvalidParameterError("direction must be 'minus' or 'plus'")
    if delta_lambda0 is None:
        delta_lambda0 = 0.02 * params.lambda_star
    if not delta_lambda0 > 0:
        raise OnsetFailureError("delta_lambda0 must be positive: the seed at lam* is the trivial front")
    thresholds = thresholds or Thresholds()
    control = control or StepControl()
    lam = params.lambda_star - delta_lambda0 if direction == "minus" else params.lambda_star + delta_lambda0
    if not 0.0 < lam < 1.0:
        raise OnsetFailureError(f"seed lambda {lam} outside (0, 1)")
    gkw = dict(grid or {})
    g = dj.make_grid(params, lam, **gkw)
    seed = dj.seed_from_mcc(params, lam, g)
    try:
        res = dj.newton_solve(seed, tol=control.tol)
    except (ConvergenceError, StagnationViolationError) as exc:
        raise OnsetFailureError(f"onset Newton failed ({exc}); try a smaller delta_lambda0") from exc
    front = res.front
    x0 = dj.interface_crossing(g.q, front.eta, 0.5 * (params.lambda_star - lam))
    if x0 is None:
        raise OnsetFailureError("onset front has no midpoint crossing")
    diag = compute_diagnostics(front, direction, res.defect)
    if not diag.monotone:
        raise OnsetFailureError("onset front is not strictly monotone; try a smaller delta_lambda0")
    if not (diag.sigma_up < 0 and diag.sigma_down < 0):
        raise OnsetFailureError("laminar end states are not spectrally stable")
    branch = Branch(params, direction, x0, thresholds, control, ds=control.ds0)
    branch.points.append(BranchPoint(front, 0.0, diag, res.iterations, res.defect, None))
    branch.log.append(f"start lam={lam:.17g} iterations={res.iterations} defect={res.defect:.3e}")
    return branch


def _augmented_residual(u, lam, mu, grid0, params, v, c, mid_of, tu, tl, u_prev, lam_prev, ds):
    grid = grid0.with_lambda(lam)
    r = dj.residual_array(u, grid, params).ravel() + mu * v
    phase = (c @ u.ravel()).item() - mid_of(lam)
    arc = float(np.mean((u - u_prev).ravel() * tu)) + (lam - lam_prev) * tl - ds
    return np.concatenate([r, [phase, arc]])


def corrector(
    prev: BranchPoint,
    tangent: tuple[np.ndarray, float],
    ds: float,
    v: np.ndarray,
    x0: float,
    tol: float = 1e-10,
    max_iter: int = 10,
) -> tuple[dj.DiscreteFront, float, int]:
    """Newton on ``(u, lam, mu)`` from the predictor ``prev + ds * tangent``."""
    front = prev.front
    g0, params = front.grid, front.params
    n = g0.size
    tu, tl = tangent
    u_prev, lam_prev = front.u, front.lam
    u = u_prev + ds * tu.reshape(g0.shape)
    lam = lam_prev + ds * tl
    mu = prev.mu
    c = dj.phase_row(g0, x0)
    lstar = params.lambda_star

    def mid_of(lv):
        return 0.5 * (lstar - lv)

    if not 0.0 < lam < 1.0:
        raise StagnationViolationError("predictor left the channel")
    dj.stagnation_check(u, g0.with_lambda(lam))
    aug = _augmented_residual(u, lam, mu, g0, params, v, c, mid_of, tu, tl, u_prev, lam_prev, ds)
    norm = float(np.max(np.abs(aug)))
    it = 0
    prev_norm = math.inf
    while norm > tol:
        if it >= max_iter or (it > 3 and norm > 0.5 * prev_norm):
            raise ConvergenceError(f"corrector stalled at |F| = {norm:.3e}")
        g = g0.with_lambda(lam)
        J = dj.jacobian_matrix(u, g, params, check=False)
        rl = dj.residual_lambda_derivative(u, g, params)
        A = sp.bmat(
            [
                [J, sp.csr_matrix(rl[:, None]), sp.csr_matrix(v[:, None])],
                [c, sp.csr_matrix([[0.5]]), None],
                [sp.csr_matrix(tu[None, :] / n), sp.csr_matrix([[tl]]), None],
            ]
        )
        d = dj.factorize(A).solve(-aug)
        t = 1.0
        for _ in range(9):
            lt = lam + t * d[n]
            ut = u + t * d[:n].reshape(g0.shape)
            if 0.0 < lt < 1.0 and dj._admissible(ut, g0.with_lambda(lt)):
                break
            t *= 0.5
        else:
            raise StagnationViolationError("every corrector step violates h_p > 0")
        u, lam, mu = ut, lt, mu + t * d[n + 1]
        aug = _augmented_residual(u, lam, mu, g0, params, v, c, mid_of, tu, tl, u_prev, lam_prev, ds)
        prev_norm, norm = norm, float(np.max(np.abs(aug)))
        it += 1
    return front.with_u(u, lam=lam), mu, it


def first_tangent(point: BranchPoint, direction: str, v: np.ndarray, x0: float) -> tuple[np.ndarray, float]:
    """Tangent from the lam-derivative: solve ``[J v; c 0] z = -(R_lam, 1/2)`` with ``tau_lam = 1``."""
    f = point.front
    g = f.grid
    J = dj.dj_jacobian(f)
    rl = dj.residual_lambda_derivative(f.u, g, f.params)
    c = dj.phase_row(g, x0)
    A = sp.bmat([[J, sp.csr_matrix(v[:, None])], [c, None]])
    z = dj.factorize(A).solve(np.concatenate([-rl, [-0.5]]))
    tu, tl = _normalise(z[:-1], 1.0)
    if (tl > 0) == (direction == "minus"):
        tu, tl = -tu, -tl
    return tu, tl


def secant_tangent(a: BranchPoint, b: BranchPoint) -> tuple[np.ndarray, float]:
    return _normalise((b.front.u - a.front.u).ravel(), b.lam - a.lam)


def unfolding_direction(point: BranchPoint) -> np.ndarray:
    f = point.front
    lu = dj.factorize(dj.dj_jacobian(f))
    return dj.left_null_direction(lu, f.u, f.grid)


def arclength_step(branch: Branch, ds: float | None = None) -> BranchPoint:
    """Advance one admitted point, halving ``ds`` on failure down to ``ds_min``.

    Raises :class:`StagnationViolationError` if the last failure came from
    leaving the admissible set, otherwise :class:`ConvergenceError`.
    """
    ctl = branch.control
    if not branch.points:
        raise InvalidParameterError("branch has no points")
    ds = branch.ds if ds is None else ds
    if ds <= 0:
        raise InvalidParameterError("ds must be positive")
    prev = branch.points[-1]
    v = unfolding_direction(prev)
    if len(branch.points) == 1:
        tangent = first_tangent(prev, branch.direction, v, branch.x0)
    else:
        tangent = secant_tangent(branch.points[-2], prev)
    lstar = branch.params.lambda_star
    last_error: BoreError | None = None
    while ds >= ctl.ds_min:
        try:
            front, mu, its = corrector(prev, tangent, ds, v, branch.x0, ctl.tol, ctl.max_newton)
        except (ConvergenceError, StagnationViolationError) as exc:
            last_error = exc
            branch.log.append(f"step failed ds={ds:.3e}: {exc}")
            ds *= 0.5
            branch.streak = 0
            continue
        if (front.lam - lstar) * (prev.lam - lstar) <= 0:
            last_error = ConvergenceError(f"lambda crossed lam* (lam={front.lam:.6f})")
            branch.log.append(f"step refused ds={ds:.3e}: {last_error}")
            ds *= 0.5
            continue
        diag = compute_diagnostics(front, branch.direction, mu)
        if not diag.monotone:
            last_error = ConvergenceError(f"non-monotone front at lam={front.lam:.6f}")
            branch.log.append(f"admission refused ds={ds:.3e}: {last_error}")
            ds *= 0.5
            branch.streak = 0
            continue
        point = BranchPoint(front, 0.0, diag, its, mu, v)
        point = BranchPoint(front, prev.s + point_distance(point, prev), diag, its, mu, v)
        branch.streak = branch.streak + 1 if its <= ctl.fast_iterations else 0
        branch.ds = ds
        if branch.streak >= ctl.grow_after:
            branch.ds = min(2.0 * ds, ctl.ds_max)
            branch.streak = 0
        return point
    branch.ds = ctl.ds_min
    if isinstance(last_error, StagnationViolationError):
        raise StagnationViolationError(f"step size floor reached: {last_error}")
    raise ConvergenceError(f"step size floor reached: {last_error}")


def run_branch(
    params: FluidParameters,
    direction: str,
    steps: int,
    delta_lambda0: float | None = None,
    grid: dict | None = None,
    thresholds: Thresholds | None = None,
    control: StepControl | None = None,
    callback=None,
) -> Branch:
    """Start a branch and take up to ``steps`` arclength steps, stopping at the first alternative."""
    if steps < 0:
        raise InvalidParameterError("steps must be non-negative")
    branch = start_branch(params, direction, delta_lambda0, grid, thresholds, control)
    if callback:
        callback(branch, branch.points[-1])
    onset = abs(branch.points[0].lam - params.lambda_star)
    for _ in range(steps):
        try:
            point = arclength_step(branch)
        except StagnationViolationError as exc:
            branch.log.append(f"terminated: {exc}")
            branch.termination = "A1_blowup"
            return branch
        except ConvergenceError as exc:
            branch.log.append(f"terminated: {exc}")
            branch.termination = "solver_failure"
            return branch
        branch.points.append(point)
        if callback:
            callback(branch, point)
        tag = classify_point(point, onset, branch.thresholds)
        if tag is not None:
            branch.termination = tag
            return branch
    branch.termination = "budget_exhausted"
    return branch
