"""Principal eigenvalue of the transversal linearisation about a laminar state.

The eigenproblem lives on one vertical column: ``w_pp = sigma w`` in each
layer, ``w = 0`` on both walls, ``w`` continuous at ``p = 0`` and

    [rho s**-3 w_p] - jump(rho)/F**2 w(0) = sigma w(0)

on the interface, where ``s`` are the laminar slopes ``h_p`` and ``[.]`` is
upper minus lower. This orientation makes the pencil self-adjoint with the
Rayleigh quotient

    sigma (sum int rho s**-3 w**2 + w(0)**2) = (rho1 - rho2)/F**2 w(0)**2 - sum int rho s**-3 w_p**2,

so the rightmost eigenvalue is real, simple, with a positive eigenfunction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, eigsh

from . import dj
from .conjugate_flow import FluidParameters
from .errors import InvalidParameterError, NumericalFailureError

SIGN_TOL = 1e-8


@dataclass(frozen=True)
class TransversalProblem:
    params: FluidParameters
    lam: float
    lower_slope: float
    upper_slope: float
    n_low: int = 41
    n_up: int = 41

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise InvalidParameterError("lambda must lie in (0, 1)")
        if self.lower_slope <= 0.0 or self.upper_slope <= 0.0:
            raise InvalidParameterError("laminar slopes must be positive")
        fill = self.lower_slope * self.lam + self.upper_slope * (1.0 - self.lam)
        if abs(fill - 1.0) > 1e-12:
            raise InvalidParameterError("layer depths must fill the unit channel")
        if self.n_low < 3 or self.n_up < 3:
            raise InvalidParameterError("need at least 3 nodes per layer")

    @property
    def n_nodes(self) -> int:
        return self.n_low + self.n_up - 1

    @property
    def p(self) -> np.ndarray:
        return dj.StripGrid(1.0, 3, self.n_low, self.n_up, self.lam).p


def upstream_problem(params: FluidParameters, lam: float, n_low: int = 41, n_up: int = 41) -> TransversalProblem:
    return TransversalProblem(params, lam, 1.0, 1.0, n_low, n_up)


def downstream_problem(params: FluidParameters, lam: float, n_low: int = 41, n_up: int = 41) -> TransversalProblem:
    ls = params.lambda_star
    return TransversalProblem(params, lam, ls / lam, (1.0 - ls) / (1.0 - lam), n_low, n_up)


def problem_for_side(params: FluidParameters, lam: float, side: str, n_nodes: int = 81) -> TransversalProblem:
    """``side`` is ``"up"`` or ``"down"``; ``n_nodes`` is split evenly between the layers."""
    if n_nodes < 5 or n_nodes % 2 == 0:
        raise InvalidParameterError("n must be odd and >= 5")
    n = (n_nodes + 1) // 2
    if side == "up":
        return upstream_problem(params, lam, n, n)
    if side == "down":
        return downstream_problem(params, lam, n, n)
    raise InvalidParameterError("side must be 'up' or 'down'")


def interface_stiffness(problem: TransversalProblem) -> float:
    """``-jump(rho)/F**2``, positive for stable stratification."""
    return -problem.params.density_jump / problem.params.froude_sq


def operator_matrix(problem: TransversalProblem) -> np.ndarray:
    """Dense matrix on the nodes strictly between the walls (interface included)."""
    nl, nu = problem.n_low, problem.n_up
    m = nl + nu - 3
    i0 = nl - 2  # interface position among the unknowns
    d1 = problem.lam / (nl - 1)
    d2 = (1.0 - problem.lam) / (nu - 1)
    A = np.zeros((m, m))
    for k in range(m):
        if k == i0:
            continue
        d = d1 if k < i0 else d2
        A[k, k] = -2.0 / d**2
        if k > 0:
            A[k, k - 1] = 1.0 / d**2
        if k < m - 1:
            A[k, k + 1] = 1.0 / d**2
    r1 = problem.params.rho1 / problem.lower_slope**3
    r2 = problem.params.rho2 / problem.upper_slope**3
    # one-sided second-order w_p; a wall node (value 0) simply drops out
    up = r2 / (2.0 * d2)
    lo = r1 / (2.0 * d1)
    A[i0, i0] = -3.0 * up - 3.0 * lo + interface_stiffness(problem)
    for off, cu, cl in ((1, 4.0, 4.0), (2, -1.0, -1.0)):
        if i0 + off < m:
            A[i0, i0 + off] += cu * up
        if i0 - off >= 0:
            A[i0, i0 - off] += cl * lo
    return A


@dataclass(frozen=True)
class Eigenpair:
    sigma: float
    p: np.ndarray
    w: np.ndarray

    @property
    def sign(self) -> int:
        if abs(self.sigma) <= SIGN_TOL:
            return 0
        return 1 if self.sigma > 0 else -1


def principal_eigenpair(problem: TransversalProblem) -> Eigenpair:
    """Rightmost eigenvalue and its eigenfunction (walls included, ``max w = 1``)."""
    A = operator_matrix(problem)
    try:
        vals, vecs = sla.eig(A)
    except (sla.LinAlgError, ValueError) as exc:
        raise NumericalFailureError(f"eigen-solver failed: {exc}") from exc
    k = int(np.argmax(vals.real))
    sigma = vals[k]
    if not np.isfinite(sigma) or abs(sigma.imag) > 1e-8 * max(1.0, abs(sigma.real)):
        raise NumericalFailureError("principal eigenvalue is not real")
    v = vecs[:, k].real
    v = v / v[np.argmax(np.abs(v))]
    w = np.concatenate([[0.0], v, [0.0]])
    return Eigenpair(float(sigma.real), problem.p, w)


def principal_eigenvalue(problem: TransversalProblem) -> float:
    return principal_eigenpair(problem).sigma


def refined(problem: TransversalProblem) -> TransversalProblem:
    """Same problem with the vertical spacing halved in both layers."""
    return replace(problem, n_low=2 * problem.n_low - 1, n_up=2 * problem.n_up - 1)


def richardson_eigenvalue(problem: TransversalProblem, levels: int = 2) -> float:
    """Romberg extrapolation over ``levels`` successive halvings of the vertical spacing.

    The one-sided interface stencil leaves a third-order term next to the
    second-order one, so level ``k`` removes the power ``k + 1`` of the
    spacing; ``levels=1`` is plain second-order Richardson.
    """
    if levels < 1:
        raise InvalidParameterError("levels must be >= 1")
    row = [principal_eigenvalue(problem)]
    for _ in range(levels):
        problem = refined(problem)
        row.append(principal_eigenvalue(problem))
    for k in range(1, levels + 1):
        f = 2.0 ** (k + 1)
        row = [(f * row[i + 1] - row[i]) / (f - 1.0) for i in range(len(row) - 1)]
    return row[0]


def _phi(a: float, sigma: float) -> float:
    """``w_p`` at the interface of ``w'' = sigma w`` on a layer of thickness ``a`` with ``w(0) = 1``."""
    if sigma > 0.0:
        r = math.sqrt(sigma)
        return r / math.tanh(r * a)
    if sigma == 0.0:
        return 1.0 / a
    k = math.sqrt(-sigma)
    return k / math.tan(k * a)


def characteristic_oracle(problem: TransversalProblem, sigma: float) -> float:
    """Transmission-row mismatch of the exact layer solutions; decreasing in ``sigma`` below the first pole."""
    r1 = problem.params.rho1 / problem.lower_slope**3
    r2 = problem.params.rho2 / problem.upper_slope**3
    lam = problem.lam
    return -r2 * _phi(1.0 - lam, sigma) - r1 * _phi(lam, sigma) + interface_stiffness(problem) - sigma


def oracle_root(problem: TransversalProblem, xtol: float = 1e-14) -> float:
    """Root of :func:`characteristic_oracle` between its first pole and the positive axis."""
    lam = problem.lam
    pole = -((math.pi / max(lam, 1.0 - lam)) ** 2)
    lo = pole * (1.0 - 1e-12)
    while characteristic_oracle(problem, lo) <= 0.0:
        lo = pole + 0.5 * (lo - pole)
        if lo - pole < 1e-14 * abs(pole):
            raise NumericalFailureError("no sign change next to the first pole")
    hi = 1.0
    while characteristic_oracle(problem, hi) >= 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise NumericalFailureError("characteristic function never turns negative")
    return brentq(lambda s: characteristic_oracle(problem, s), lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class KernelProxy:
    """Smallest singular values of a front Jacobian and how the first singular vector aligns with ``h_q``."""

    s_min: float
    s_next: float
    correlation: float

    @property
    def gap_ratio(self) -> float:
        return self.s_next / self.s_min if self.s_min > 0 else math.inf


def kernel_proxy(front: dj.DiscreteFront, jacobian=None) -> KernelProxy:
    """Heuristic check of a one-dimensional kernel via ``J^{-1} J^{-T}``."""
    J = dj.dj_jacobian(front) if jacobian is None else jacobian
    lu = dj.factorize(J)
    n = J.shape[0]
    op = LinearOperator((n, n), matvec=lambda x: lu.solve(lu.solve(np.ravel(x), trans="T")), dtype=float)
    v0 = np.ones(n) / math.sqrt(n)
    vals, vecs = eigsh(op, k=2, which="LA", v0=v0, tol=1e-10)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    s = 1.0 / np.sqrt(vals)
    t = dj.translation_mode(front.u, front.grid)
    tn = np.linalg.norm(t)
    corr = float(abs(vecs[:, 0] @ t) / tn) if tn > 0 else 0.0
    return KernelProxy(float(s[0]), float(s[1]), corr)


def spectrum_report(problem: TransversalProblem) -> dict:
    pair = principal_eigenpair(problem)
    root = oracle_root(problem)
    return {
        "lambda": problem.lam,
        "lower_slope": problem.lower_slope,
        "upper_slope": problem.upper_slope,
        "n_nodes": problem.n_nodes,
        "sigma": pair.sigma,
        "sign": pair.sign,
        "sigma_extrapolated": richardson_eigenvalue(problem),
        "oracle_sigma": root,
        "oracle_difference": pair.sigma - root,
        "eigenfunction": {"p": pair.p, "w": pair.w},
    }
