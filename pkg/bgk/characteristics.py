"""Characteristics of the kinetic transport operator b(v)∂ₓ + A(t, v)∂ᵥ.

The velocity component solves dV/dr = A(r, V) independently of x, so one
integration per velocity node serves every spatial cell. The log-Jacobian
log|∂ᵥV| = ∫∂ᵥA(r, V(r))dr and its one-sided envelopes are carried along with
the same fixed-step RK4 stages.
"""

import logging
import math
from collections import namedtuple

import numpy as np

from .errors import ConfigError, StepOverflow
from .kinetic import VelocityGrid

logger = logging.getLogger("app." + __name__)

DEFAULT_H_CHAR = 1e-2

FlowResult = namedtuple("FlowResult", ["X", "V", "J", "jac_upper", "jac_lower"])

_RK4_WEIGHTS = (1.0, 2.0, 2.0, 1.0)


def _unpack(model):
    flux, forcing = model[0], model[1]
    return flux, forcing


def _substeps(duration: float, h_char: float) -> int:
    if not h_char > 0:
        raise ConfigError(description="h_char must be positive", errors={"h_char": [f"got {h_char}"]})
    return max(1, math.ceil(abs(duration) / h_char - 1e-12))


def _integrate(flux, forcing, t0: float, t1: float, x, v, n_steps: int, v_bound=None) -> FlowResult:
    """RK4 from t0 to t1 (either direction) on the state (X, V, log J, envelopes)."""
    X = np.array(x, dtype=float)
    V = np.array(v, dtype=float)
    X, V = np.broadcast_arrays(X, V)
    X, V = X.copy(), V.copy()
    log_j = np.zeros_like(V)
    upper = np.zeros_like(V)
    lower = np.zeros_like(V)

    h = (t1 - t0) / n_steps
    direction = 1.0 if h >= 0 else -1.0
    for step in range(n_steps):
        r = t0 + step * h
        stage_times = (r, r + 0.5 * h, r + 0.5 * h, r + h)
        stage_v = V
        dx_sum = np.zeros_like(V)
        dv_sum = np.zeros_like(V)
        dj_sum = np.zeros_like(V)
        up_sum = np.zeros_like(V)
        low_sum = np.zeros_like(V)
        for stage, (weight, stage_t) in enumerate(zip(_RK4_WEIGHTS, stage_times)):
            k_v = forcing.eval_A(stage_t, stage_v)
            k_j = forcing.eval_dvA(stage_t, stage_v)
            dx_sum += weight * flux.eval_b(stage_v)
            dv_sum += weight * k_v
            dj_sum += weight * k_j
            up_sum += weight * np.maximum(direction * k_j, 0.0)
            low_sum += weight * np.maximum(-direction * k_j, 0.0)
            if stage < 3:
                step_fraction = 1.0 if stage == 2 else 0.5
                stage_v = V + step_fraction * h * k_v
        X = X + (h / 6.0) * dx_sum
        V = V + (h / 6.0) * dv_sum
        log_j = log_j + (h / 6.0) * dj_sum
        upper = upper + (abs(h) / 6.0) * up_sum
        lower = lower + (abs(h) / 6.0) * low_sum
        if v_bound is not None and V.size and np.abs(V).max() > v_bound:
            raise StepOverflow(
                description=f"characteristic reached |V| = {np.abs(V).max():.6g} beyond the "
                f"velocity band {v_bound:.6g} at t = {r + h:.6g}",
            )

    return FlowResult(
        X=X[()],
        V=V[()],
        J=np.exp(log_j)[()],
        jac_upper=np.exp(upper)[()],
        jac_lower=np.exp(-lower)[()],
    )


def _frozen_flow(flux, duration: float, x, v) -> FlowResult:
    X, V = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
    ones = np.ones_like(V)
    return FlowResult(
        X=(X + flux.eval_b(V) * duration)[()],
        V=V.copy()[()],
        J=ones[()],
        jac_upper=ones[()],
        jac_lower=ones[()],
    )


def flow(model, s: float, t: float, x, v, h_char: float = DEFAULT_H_CHAR, v_bound=None) -> FlowResult:
    """Forward flow (X_{s,t}(x, v), V_{s,t}(v)) with J = |∂ᵥV_{s,t}|.

    `model` is a (flux, forcing) pair or a ModelSpec. When the forcing vanishes the
    flow is exact: X = x + b(v)(t - s).
    """
    if t < s:
        raise ConfigError(description=f"flow needs s <= t, got s={s}, t={t}")
    flux, forcing = _unpack(model)
    if forcing.is_zero or t == s:
        return _frozen_flow(flux, t - s, x, v)
    return _integrate(flux, forcing, s, t, x, v, _substeps(t - s, h_char), v_bound)


def inverse_flow(model, s: float, t: float, x, v, h_char: float = DEFAULT_H_CHAR, v_bound=None) -> FlowResult:
    """Backward flow (X_{t,s}(x, v), V_{t,s}(v)): start at time t and integrate down to s."""
    if t < s:
        raise ConfigError(description=f"inverse_flow needs s <= t, got s={s}, t={t}")
    flux, forcing = _unpack(model)
    if forcing.is_zero or t == s:
        return _frozen_flow(flux, s - t, x, v)
    return _integrate(flux, forcing, t, s, x, v, _substeps(t - s, h_char), v_bound)


def jacobian_envelope(forcing, s: float, t: float) -> tuple[float, float]:
    """Path-independent (lower, upper) bounds on J over [s, t] from the forcing envelopes."""
    upper = math.exp(forcing.growth_exponent(s, t))
    lower = math.exp(-forcing.lipschitz_exponent(s, t))
    return lower, upper


def velocity_grid_for(rho_bound: float, forcing, t_final: float, n_cells: int) -> VelocityGrid:
    """Symmetric band [-v_max, v_max] with v_max = K·exp(∫₀ᵀ‖[∂ᵥA]⁺‖) + 2Δv.

    |V| grows at most like exp(∫‖[∂ᵥA]⁺‖) because A(t, 0) = 0, so the positive part
    of ∂ᵥA bounds the outward speed of every characteristic.
    """
    if n_cells <= 4 or n_cells % 2:
        raise ConfigError(
            description="velocity grid needs an even number of cells above 4",
            errors={"n_v": [f"got {n_cells}"]},
        )
    K = float(rho_bound) if rho_bound > 0 else 1.0
    growth = forcing.growth_exponent(0.0, t_final)
    v_max = K * math.exp(growth) / (1.0 - 4.0 / n_cells)
    logger.debug(f"Velocity band ±{v_max:.6g} for K={K:.6g}, growth exponent {growth:.6g}")
    return VelocityGrid.symmetric(v_max, n_cells)
