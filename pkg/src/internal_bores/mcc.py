"""Long-wave (Miyata / Choi-Camassa) bore model.

The integrated travelling-wave equation ``zeta_x**2 = G(zeta; lam)`` has
double zeros at the upstream and downstream interface deflections, and
``G`` factors as ``kappa0**2 * zeta**2 * (Z+ - zeta)**2 / D(zeta)``.
Bores are the monotone heteroclinic orbits between those zeros.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .conjugate_flow import FluidParameters
from .errors import DegenerateRestPointError, OutOfChannelError

# relative distance to a rest point below which the linearised tail is used
REST_SWITCH = 1e-8
PROPOSITION_TOL = 1e-10
PROPOSITION_MARGIN = 1e-8


@dataclass(frozen=True)
class MccState:
    params: FluidParameters
    lam: float
    z_minus: float
    z_plus: float
    kappa_minus: float
    kappa_plus: float

    @property
    def kappa0(self) -> float:
        return math.sqrt(3.0 * (self.params.rho1 - self.params.rho2) / (2.0 * self.params.froude_sq))

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.z_minus + self.z_plus)


def _denominator(params: FluidParameters, lam: float, zeta):
    return (1.0 - lam) ** 2 * (lam + zeta) * params.rho2 + lam**2 * (1.0 - lam - zeta) * params.rho1


def make_state(params: FluidParameters, lam: float) -> MccState:
    if not 0.0 < lam < 1.0:
        raise OutOfChannelError(f"lambda={lam} outside (0, 1)")
    z_plus = params.lambda_star - lam
    k0 = math.sqrt(3.0 * (params.rho1 - params.rho2) / (2.0 * params.froude_sq))
    amp = abs(z_plus)
    return MccState(
        params=params,
        lam=lam,
        z_minus=0.0,
        z_plus=z_plus,
        kappa_minus=k0 * amp / math.sqrt(_denominator(params, lam, 0.0)),
        kappa_plus=k0 * amp / math.sqrt(_denominator(params, lam, z_plus)),
    )


def _require_distinct(state: MccState) -> None:
    if state.z_plus == state.z_minus:
        raise DegenerateRestPointError("lambda == lambda*: the two rest points coincide")


def _check_channel(state: MccState, zeta: np.ndarray) -> None:
    depth = state.lam + zeta
    if np.any(depth <= 0.0) or np.any(depth >= 1.0):
        raise OutOfChannelError("lambda + zeta must lie in (0, 1)")


def denominator(state: MccState, zeta):
    return _denominator(state.params, state.lam, np.asarray(zeta, dtype=float))


def slope_squared(state: MccState, zeta):
    """Right-hand side of the integrated MCC equation, evaluated as written (unfactored)."""
    zeta = np.asarray(zeta, dtype=float)
    _check_channel(state, zeta)
    p = state.params
    lam, f2 = state.lam, p.froude_sq
    h1 = lam + zeta
    num = h1 * (1.0 - h1 + f2) * p.rho2 - (1.0 - h1) * (h1 - f2) * p.rho1
    return 1.5 * zeta**2 / f2 * num / _denominator(p, lam, zeta)


def slope_squared_factored(state: MccState, zeta):
    zeta = np.asarray(zeta, dtype=float)
    _check_channel(state, zeta)
    return state.kappa0**2 * zeta**2 * (state.z_plus - zeta) ** 2 / denominator(state, zeta)


def potential(state: MccState, zeta):
    """``V = -G/2`` so that ``zeta_xx + V'(zeta) = 0`` and ``zeta_x**2 = -2 V``."""
    return -0.5 * slope_squared(state, zeta)


def potential_curvature(state: MccState, zeta):
    """Analytic ``V''(zeta)`` from the factored form (``D`` is affine in zeta)."""
    zeta = np.asarray(zeta, dtype=float)
    _check_channel(state, zeta)
    zp = state.z_plus
    g = zeta * (zp - zeta)
    g1 = zp - 2.0 * zeta
    f, f1, f2 = g**2, 2.0 * g * g1, 2.0 * g1**2 - 4.0 * g
    d = denominator(state, zeta)
    d1 = (1.0 - state.lam) ** 2 * state.params.rho2 - state.lam**2 * state.params.rho1
    g_dd = f2 / d - 2.0 * f1 * d1 / d**2 + 2.0 * f * d1**2 / d**3
    return -0.5 * state.kappa0**2 * g_dd


def decay_rates(state: MccState) -> tuple[float, float]:
    _require_distinct(state)
    return state.kappa_minus, state.kappa_plus


def check_proposition_conditions(
    state: MccState, n: int = 2001, tol: float = PROPOSITION_TOL, margin: float = PROPOSITION_MARGIN
) -> dict:
    """Conjugacy, heteroclinic and spectral nondegeneracy of the rest points.

    Everything is measured after rescaling zeta by ``|Z+ - Z-|`` and V by
    its extreme value on the connecting interval.
    """
    _require_distinct(state)
    zm, zp = state.z_minus, state.z_plus
    width = zp - zm
    t = np.linspace(0.0, 1.0, n + 2)[1:-1]
    v_inner = potential(state, zm + t * width)
    scale = float(np.max(np.abs(v_inner)))
    if scale == 0.0:
        scale = 1.0
    v_ends = potential(state, np.array([zm, zp])) / scale
    v_hat = v_inner / scale
    curv = potential_curvature(state, np.array([zm, zp])) * width**2 / scale
    return {
        "conjugate": bool(abs(v_ends[1] - v_ends[0]) <= tol),
        "hetero_nondegen": bool(np.all(v_hat < np.max(v_ends) - margin)),
        "spectral_nondegen": bool(np.all(curv <= -margin)),
    }


def heteroclinic_slope(state: MccState, zeta):
    """Signed ``zeta_x`` on the heteroclinic; the root of G is taken analytically."""
    zeta = np.asarray(zeta, dtype=float)
    sign = math.copysign(1.0, state.z_plus)
    return sign * state.kappa0 * zeta * (state.z_plus - zeta) / np.sqrt(denominator(state, zeta))


def _integrate_half(state: MccState, x_end: float, targets: np.ndarray, forward: bool, rtol: float) -> np.ndarray:
    zm, zp = state.z_minus, state.z_plus
    gap = REST_SWITCH * abs(zp - zm)
    rest = zp if forward else zm
    kappa = state.kappa_plus if forward else state.kappa_minus
    out = np.empty_like(targets)
    if targets.size == 0:
        return out

    def near_rest(x, z):
        return abs(z[0] - rest) - gap

    near_rest.terminal = True

    sol = solve_ivp(
        lambda x, z: heteroclinic_slope(state, z),
        (0.0, x_end),
        [state.midpoint],
        method="DOP853",
        rtol=rtol,
        atol=gap * 1e-3,
        dense_output=True,
        events=near_rest,
    )
    if sol.status == -1:
        raise RuntimeError(f"heteroclinic integration failed: {sol.message}")
    x_stop = sol.t[-1]
    z_stop = sol.y[0, -1]
    inside = (targets <= x_stop) if forward else (targets >= x_stop)
    out[inside] = sol.sol(targets[inside])[0]
    tail = ~inside
    out[tail] = rest + (z_stop - rest) * np.exp(-kappa * np.abs(targets[tail] - x_stop))
    return out


def heteroclinic_profile(state: MccState, x, rtol: float = 1e-10) -> np.ndarray:
    """Monotone bore profile sampled at sorted ``x`` with ``zeta(0)`` at the midpoint."""
    _require_distinct(state)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or np.any(np.diff(x) < 0):
        raise ValueError("x must be a sorted 1-d array")
    z = np.empty_like(x)
    right = x >= 0.0
    left = ~right
    if np.any(right):
        z[right] = _integrate_half(state, max(x[-1], 1e-12), x[right], True, rtol)
    if np.any(left):
        z[left] = _integrate_half(state, min(x[0], -1e-12), x[left], False, rtol)
    return z
