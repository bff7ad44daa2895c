"""Flux, forcing and noise models, addressable by catalog identifier."""

import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import stringcase
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError

logger = logging.getLogger("app." + __name__)

TimeFunction = Union[float, Callable[[float], float]]

ModelSpec = namedtuple("ModelSpec", ["flux", "forcing", "noise"])

# max of 2v/(1+v²)², attained at v = 1/√3
_BL_FORCING_SLOPE = 9.0 / (8.0 * math.sqrt(3.0))


def _as_function(value: TimeFunction) -> Callable[[float], float]:
    if callable(value):
        return value
    constant = float(value)
    return lambda t: constant


def _time_integral(func: Callable[[float], float], s: float, t: float, breakpoints=()) -> float:
    if t <= s:
        return 0.0
    points = [p for p in breakpoints if s < p < t] or None
    value, _ = quad(func, s, t, points=points, limit=200)
    return float(value)


@dataclass(frozen=True)
class FluxModel:
    """Flux B with kinetic velocity b = B′ on a declared C¹ range."""

    name: str
    eval_B: Callable
    eval_b: Callable
    domain: tuple = (-5.0, 5.0)
    critical_points: tuple = ()

    def max_speed(self, velocities) -> float:
        return float(np.abs(self.eval_b(np.asarray(velocities, dtype=float))).max(initial=0.0))


@dataclass(frozen=True)
class ForcingModel:
    """Forcing A(t, v) with A(t, 0) = 0 and its analytic ∂ᵥA."""

    name: str
    eval_A: Callable
    eval_dvA: Callable
    sup_dvA_plus: Callable[[float], float]
    lipschitz_bound: Callable[[float], float]
    is_zero: bool = False
    rate: Callable = None
    breakpoints: tuple = ()
    domain: tuple = (-3.0, 3.0)

    def growth_exponent(self, s: float, t: float) -> float:
        """∫ₛᵗ ‖[∂ᵥA(r, ·)]⁺‖_∞ dr."""
        if self.is_zero:
            return 0.0
        return _time_integral(self.sup_dvA_plus, s, t, self.breakpoints)

    def lipschitz_exponent(self, s: float, t: float) -> float:
        """∫ₛᵗ ‖∂ᵥA(r, ·)‖_∞ dr."""
        if self.is_zero:
            return 0.0
        return _time_integral(self.lipschitz_bound, s, t, self.breakpoints)

    def rate_integral(self, s: float, t: float) -> float:
        """∫ₛᵗ ξ(r) dr for linear forcing A = ξ(t)v."""
        if self.rate is None:
            raise ConfigError(
                description=f"forcing {self.name} is not of the form ξ(t)v",
                errors={"forcing": [self.name]},
            )
        return _time_integral(self.rate, s, t, self.breakpoints)


@dataclass(frozen=True)
class NoiseModel:
    """Deterministic noise amplitude σ(t) of the transport noise M(t) = ∫σ dW."""

    name: str
    sigma: Callable
    is_zero: bool = False
    breakpoints: tuple = field(default=())

    def square_integral(self, t_final: float) -> float:
        """∫₀ᵀ σ² dt, finite for every admissible model."""
        if self.is_zero:
            return 0.0
        value = _time_integral(lambda t: float(self.sigma(t)) ** 2, 0.0, t_final, self.breakpoints)
        if not math.isfinite(value):
            raise ConfigError(
                description=f"noise {self.name} is not square integrable on [0, {t_final}]",
            )
        return value


def buckley_leverett_flux() -> FluxModel:
    """B(ρ) = ρ²/(ρ² + (1-ρ)²) on [0, 1], 0 below and 1 above."""

    def eval_B(rho):
        r = np.clip(np.asarray(rho, dtype=float), 0.0, 1.0)
        return (r**2 / (r**2 + (1.0 - r) ** 2))[()]

    def eval_b(rho):
        rho = np.asarray(rho, dtype=float)
        r = np.clip(rho, 0.0, 1.0)
        denominator = (r**2 + (1.0 - r) ** 2) ** 2
        inside = (rho > 0.0) & (rho < 1.0)
        return np.where(inside, 2.0 * r * (1.0 - r) / denominator, 0.0)[()]

    return FluxModel(
        name="buckley_leverett",
        eval_B=eval_B,
        eval_b=eval_b,
        domain=(-0.5, 1.5),
    )


def burgers_flux() -> FluxModel:
    return FluxModel(
        name="burgers",
        eval_B=lambda rho: (0.5 * np.asarray(rho, dtype=float) ** 2)[()],
        eval_b=lambda rho: np.asarray(rho, dtype=float) * 1.0,
        critical_points=(0.0,),
    )


def linear_flux(c: float = 1.0) -> FluxModel:
    c = float(c)
    return FluxModel(
        name=f"linear:c={c:g}",
        eval_B=lambda rho: (c * np.asarray(rho, dtype=float))[()],
        eval_b=lambda rho: np.full_like(np.asarray(rho, dtype=float), c)[()],
    )


def tabulated_flux(nodes, values, name: str = "tabulated") -> FluxModel:
    """C¹ flux from samples, interpolated by a monotone cubic."""
    nodes = np.asarray(nodes, dtype=float)
    spline = PchipInterpolator(nodes, np.asarray(values, dtype=float), extrapolate=True)
    derivative = spline.derivative()
    roots = np.asarray(derivative.roots(extrapolate=False), dtype=float)
    critical = tuple(float(r) for r in roots[np.isfinite(roots)])
    logger.debug(f"Tabulated flux {name} with {nodes.size} nodes, critical points {critical}")
    return FluxModel(
        name=name,
        eval_B=lambda rho: spline(np.asarray(rho, dtype=float))[()],
        eval_b=lambda rho: derivative(np.asarray(rho, dtype=float))[()],
        domain=(float(nodes[0]), float(nodes[-1])),
        critical_points=critical,
    )


def zero_forcing() -> ForcingModel:
    return ForcingModel(
        name="zero",
        eval_A=lambda t, v: np.zeros_like(np.asarray(v, dtype=float))[()],
        eval_dvA=lambda t, v: np.zeros_like(np.asarray(v, dtype=float))[()],
        sup_dvA_plus=lambda t: 0.0,
        lipschitz_bound=lambda t: 0.0,
        is_zero=True,
        rate=lambda t: 0.0,
    )


def linear_decay_forcing(xi: TimeFunction, name: str = None, breakpoints=()) -> ForcingModel:
    """A(t, v) = ξ(t)v."""
    xi = _as_function(xi)
    return ForcingModel(
        name=name or "linear_decay",
        eval_A=lambda t, v: (xi(t) * np.asarray(v, dtype=float))[()],
        eval_dvA=lambda t, v: np.full_like(np.asarray(v, dtype=float), xi(t))[()],
        sup_dvA_plus=lambda t: max(xi(t), 0.0),
        lipschitz_bound=lambda t: abs(xi(t)),
        rate=xi,
        breakpoints=tuple(breakpoints),
    )


def inverse_time_decay(alpha: float, r1: float, xi1: float = 0.0) -> ForcingModel:
    """ξ(t) = -α/t on (r₁, ∞) and the constant ξ₁ on [0, r₁]."""
    if not (alpha > 0 and r1 > 0):
        raise ConfigError(
            description="inverse_time_decay needs alpha > 0 and r1 > 0",
            errors={"alpha": [f"got {alpha}"], "r1": [f"got {r1}"]},
        )
    alpha, r1, xi1 = float(alpha), float(r1), float(xi1)

    def xi(t):
        return -alpha / t if t > r1 else xi1

    return linear_decay_forcing(
        xi,
        name=f"inverse_time_decay:alpha={alpha:g},r1={r1:g},xi1={xi1:g}",
        breakpoints=(r1,),
    )


def bl_forcing(theta: TimeFunction = 1.0, mu: float = 1.0) -> ForcingModel:
    """A(t, v) = μθ(t)v²/(1 + v²)."""
    if mu < 0:
        raise ConfigError(description="bl_forcing needs mu >= 0", errors={"mu": [f"got {mu}"]})
    theta = _as_function(theta)
    mu = float(mu)

    def eval_A(t, v):
        v = np.asarray(v, dtype=float)
        return (mu * theta(t) * v**2 / (1.0 + v**2))[()]

    def eval_dvA(t, v):
        v = np.asarray(v, dtype=float)
        return (mu * theta(t) * 2.0 * v / (1.0 + v**2) ** 2)[()]

    def slope(t):
        return abs(mu * theta(t)) * _BL_FORCING_SLOPE

    return ForcingModel(
        name="bl_forcing",
        eval_A=eval_A,
        eval_dvA=eval_dvA,
        sup_dvA_plus=slope,
        lipschitz_bound=slope,
        is_zero=(mu == 0.0),
    )


def zero_noise() -> NoiseModel:
    return NoiseModel(
        name="zero",
        sigma=lambda t: np.zeros_like(np.asarray(t, dtype=float))[()],
        is_zero=True,
    )


def constant_noise(sigma: float = 1.0) -> NoiseModel:
    sigma = float(sigma)
    return NoiseModel(
        name=f"constant:sigma={sigma:g}",
        sigma=lambda t: np.full_like(np.asarray(t, dtype=float), sigma)[()],
        is_zero=(sigma == 0.0),
    )


def linear_noise(slope: float = 1.0) -> NoiseModel:
    """σ(t) = slope·t."""
    slope = float(slope)
    return NoiseModel(
        name=f"linear:slope={slope:g}",
        sigma=lambda t: (slope * np.asarray(t, dtype=float))[()],
        is_zero=(slope == 0.0),
    )


FLUXES = {
    "buckley_leverett": buckley_leverett_flux,
    "burgers": burgers_flux,
    "linear": linear_flux,
    "zero": lambda: linear_flux(0.0),
}

FORCINGS = {
    "zero": zero_forcing,
    "linear_decay": linear_decay_forcing,
    "inverse_time_decay": inverse_time_decay,
    "bl_forcing": bl_forcing,
}

NOISES = {
    "zero": zero_noise,
    "constant": constant_noise,
    "linear": linear_noise,
}


def parse_identifier(identifier: str) -> tuple[str, dict]:
    """Split 'name:key=value,key=value' into a snake_case name and float parameters."""
    name, _, parameter_string = identifier.strip().partition(":")
    parameters = {}
    for item in filter(None, (part.strip() for part in parameter_string.split(","))):
        key, separator, value = item.partition("=")
        if not separator:
            raise ConfigError(
                description=f"Malformed parameter [{item}] in model identifier {identifier}",
            )
        try:
            parameters[stringcase.snakecase(key.strip())] = float(value)
        except ValueError:
            raise ConfigError(
                description=f"Parameter {key.strip()} of {identifier} is not a number",
            )
    return stringcase.snakecase(name.strip()), parameters


def _resolve(catalog: dict, kind: str, identifier: str):
    name, parameters = parse_identifier(identifier)
    if (factory := catalog.get(name)) is None:
        raise ConfigError(
            description=f"Unknown {kind} model {name}",
            errors={kind: [f"expected one of {sorted(catalog)}"]},
        )
    try:
        model = factory(**parameters)
    except TypeError as err:
        raise ConfigError(
            description=f"Invalid parameters for {kind} model {name}: {err}",
            errors={kind: [identifier]},
        )
    logger.debug(f"Resolved {kind} [{identifier}] to {model.name}")
    return model


def resolve_flux(identifier: str) -> FluxModel:
    return _resolve(FLUXES, "flux", identifier)


def resolve_forcing(identifier: str) -> ForcingModel:
    return _resolve(FORCINGS, "forcing", identifier)


def resolve_noise(identifier: str) -> NoiseModel:
    return _resolve(NOISES, "noise", identifier)


def resolve_model(flux: str, forcing: str = "zero", noise: str = "zero") -> ModelSpec:
    return ModelSpec(
        flux=resolve_flux(flux),
        forcing=resolve_forcing(forcing),
        noise=resolve_noise(noise),
    )
