"""Conjugate-state algebra for two constant-density layers in a unit channel.

Lengths are scaled by the channel height and velocities by the upstream
relative speed, so gravity only appears through ``1/F**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStratificationError, InvalidParameterError, InvalidStateError


@dataclass(frozen=True)
class FluidParameters:
    rho1: float
    rho2: float
    froude_sq: float
    lambda_star: float

    @property
    def density_jump(self) -> float:
        """Upper minus lower density (negative for stable stratification)."""
        return self.rho2 - self.rho1


@dataclass(frozen=True)
class LaminarState:
    """x-independent two-layer flow; ``lam`` is the upstream lower depth it was built from."""

    lam: float
    lower_depth: float
    lower_slope: float
    upper_slope: float

    @property
    def upper_depth(self) -> float:
        return 1.0 - self.lower_depth

    @property
    def interface_height(self) -> float:
        return self.lower_depth - self.lam

    @property
    def lower_speed(self) -> float:
        return 1.0 / self.lower_slope

    @property
    def upper_speed(self) -> float:
        return 1.0 / self.upper_slope


def make_parameters(rho1: float, rho2: float) -> FluidParameters:
    if not (math.isfinite(rho1) and math.isfinite(rho2)):
        raise InvalidParameterError("densities must be finite")
    if rho2 <= 0:
        raise InvalidParameterError("rho2 must be positive")
    if rho1 == rho2:
        raise DegenerateStratificationError("rho1 == rho2: no density jump, F^2 = 0")
    if rho1 < rho2:
        raise InvalidParameterError("rho1 must exceed rho2")
    s1, s2 = math.sqrt(rho1), math.sqrt(rho2)
    return FluidParameters(
        rho1=float(rho1),
        rho2=float(rho2),
        froude_sq=(s1 - s2) / (s1 + s2),
        lambda_star=s1 / (s1 + s2),
    )


def _check_lam(lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise InvalidStateError(f"upstream depth lambda={lam} outside (0, 1)")


def laminar_state(lam: float, d1: float) -> LaminarState:
    """Uniform state of lower depth ``d1`` carrying the upstream per-layer fluxes."""
    _check_lam(lam)
    if not 0.0 < d1 < 1.0:
        raise InvalidStateError(f"lower depth d1={d1} outside (0, 1)")
    return LaminarState(lam=lam, lower_depth=d1, lower_slope=d1 / lam, upper_slope=(1.0 - d1) / (1.0 - lam))


def upstream_state(lam: float) -> LaminarState:
    return laminar_state(lam, lam)


def downstream_state(params: FluidParameters, lam: float) -> LaminarState:
    return laminar_state(lam, params.lambda_star)


def mass_fluxes(state: LaminarState) -> tuple[float, float]:
    return state.lower_depth * state.lower_speed, state.upper_depth * state.upper_speed


def dynamic_condition_residual(
    params: FluidParameters, lam: float, d1: float, lower_speed: float, upper_speed: float
) -> float:
    """Pressure-jump residual at the flat interface ``y = d1 - lam``; zero on admissible states."""
    _check_lam(lam)
    if not 0.0 < d1 < 1.0:
        raise InvalidStateError(f"lower depth d1={d1} outside (0, 1)")
    jump = params.density_jump
    kinetic = 0.5 * (params.rho2 * upper_speed**2 - params.rho1 * lower_speed**2)
    return kinetic + jump / params.froude_sq * (d1 - lam) - 0.5 * jump


def state_residual(params: FluidParameters, state: LaminarState) -> float:
    return dynamic_condition_residual(params, state.lam, state.lower_depth, state.lower_speed, state.upper_speed)


def layer_pressure(params: FluidParameters, layer: int, y, speed: float):
    """Hydrostatic-Bernoulli pressure in layer 1 (lower) or 2 (upper).

    Bernoulli constants come from the upstream state, gauged so that the
    upstream interface pressure is zero.
    """
    rho = params.rho1 if layer == 1 else params.rho2
    return rho * (1.0 - speed**2) / 2.0 - rho * np.asarray(y) / params.froude_sq


def flow_force(params: FluidParameters, lam: float, d1: float, lower_speed: float, upper_speed: float) -> float:
    """Depth-integrated momentum flux plus pressure, closed form."""
    _check_lam(lam)
    if not 0.0 < d1 < 1.0:
        raise InvalidStateError(f"lower depth d1={d1} outside (0, 1)")
    eta = d1 - lam
    g = 1.0 / params.froude_sq
    r1, r2 = params.rho1, params.rho2
    # integrand per layer: rho*(1+u^2)/2 - rho*g*y
    lower = r1 * (1.0 + lower_speed**2) / 2.0 * d1 - r1 * g * (eta**2 - lam**2) / 2.0
    upper = r2 * (1.0 + upper_speed**2) / 2.0 * (1.0 - d1) - r2 * g * ((1.0 - lam) ** 2 - eta**2) / 2.0
    return lower + upper


def state_flow_force(params: FluidParameters, state: LaminarState) -> float:
    return flow_force(params, state.lam, state.lower_depth, state.lower_speed, state.upper_speed)


def conjugate_numerator(params: FluidParameters, h1):
    """Quadratic (rho1-rho2) h1^2 - (rho1-rho2)(1+F^2) h1 + F^2 rho1 in the lower depth h1."""
    d = params.rho1 - params.rho2
    f2 = params.froude_sq
    h1 = np.asarray(h1, dtype=float)
    return d * h1**2 - d * (1.0 + f2) * h1 + f2 * params.rho1


def conjugate_discriminant(params: FluidParameters) -> float:
    d = params.rho1 - params.rho2
    f2 = params.froude_sq
    return (d * (1.0 + f2)) ** 2 - 4.0 * d * f2 * params.rho1


def conjugate_report(params: FluidParameters, lam: float | None = None) -> dict:
    """Summary used by the ``conjugate`` subcommand."""
    out = {
        "rho1": params.rho1,
        "rho2": params.rho2,
        "froude_sq": params.froude_sq,
        "lambda_star": params.lambda_star,
        "discriminant": conjugate_discriminant(params),
    }
    if lam is None:
        return out
    states = {"upstream": upstream_state(lam), "downstream": downstream_state(params, lam)}
    table = {}
    for name, st in states.items():
        table[name] = {
            "lower_depth": st.lower_depth,
            "interface_height": st.interface_height,
            "lower_speed": st.lower_speed,
            "upper_speed": st.upper_speed,
            "lower_flux": mass_fluxes(st)[0],
            "upper_flux": mass_fluxes(st)[1],
            "dynamic_residual": state_residual(params, st),
            "flow_force": state_flow_force(params, st),
        }
    out["lambda"] = lam
    out["states"] = table
    out["flow_force_difference"] = table["downstream"]["flow_force"] - table["upstream"]["flow_force"]
    return out
