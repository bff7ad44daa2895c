import math

import numpy as np
import pytest

from bgk import (
    ConfigError,
    StepOverflow,
    bl_forcing,
    burgers_flux,
    flow,
    inverse_flow,
    jacobian_envelope,
    linear_decay_forcing,
    linear_flux,
    resolve_model,
    velocity_grid_for,
    zero_forcing,
)
from bgk.characteristics import DEFAULT_H_CHAR


def test_frozen_flow_is_exact():
    result = flow((burgers_flux(), zero_forcing()), 0.0, 2.0, 1.0, np.array([-1.0, 0.5]))
    np.testing.assert_allclose(result.X, [-1.0, 2.0])
    np.testing.assert_allclose(result.V, [-1.0, 0.5])
    np.testing.assert_allclose(result.J, 1.0)


@pytest.mark.parametrize("xi", [1.0, -1.0, 0.3])
def test_linear_forcing_flow(xi: float):
    model = (linear_flux(2.0), linear_decay_forcing(xi))
    v = np.array([-0.5, 0.25, 1.0])
    result = flow(model, 0.0, 1.0, 0.0, v)
    np.testing.assert_allclose(result.V, v * math.exp(xi), rtol=1e-9)
    np.testing.assert_allclose(result.J, math.exp(xi), rtol=1e-9)
    np.testing.assert_allclose(result.X, 2.0, rtol=1e-12)


def test_inverse_flow_inverts_flow():
    model = resolve_model("burgers", "bl_forcing:mu=1")
    v = np.linspace(-1.0, 1.0, 9)
    forward = flow(model, 0.5, 1.5, 0.0, v, h_char=1e-3)
    back = inverse_flow(model, 0.5, 1.5, forward.X, forward.V, h_char=1e-3)
    np.testing.assert_allclose(back.V, v, atol=1e-10)
    np.testing.assert_allclose(back.X, 0.0, atol=1e-10)


FORCED_MODELS = [
    (burgers_flux(), bl_forcing(1.0, 1.0)),
    (burgers_flux(), bl_forcing(lambda t: 1.0 + t, 2.0)),
    (linear_flux(2.0), linear_decay_forcing(-1.5)),
    (burgers_flux(), linear_decay_forcing(lambda t: math.sin(3.0 * t))),
]


@pytest.mark.parametrize("model", FORCED_MODELS)
def test_flow_group_property(model):
    v = np.linspace(-1.0, 1.0, 11)
    direct = flow(model, 0.0, 0.83, 0.1, v, h_char=2e-3)
    first = flow(model, 0.0, 0.37, 0.1, v, h_char=2e-3)
    composed = flow(model, 0.37, 0.83, first.X, first.V, h_char=2e-3)
    np.testing.assert_allclose(composed.V, direct.V, atol=2e-8)
    np.testing.assert_allclose(composed.X, direct.X, atol=2e-8)
    np.testing.assert_allclose(first.J * composed.J, direct.J, rtol=2e-8)


@pytest.mark.parametrize("model", FORCED_MODELS)
def test_flow_preserves_velocity_order(model):
    v = np.sort(np.random.default_rng(5).uniform(-1.5, 1.5, 200))
    V = flow(model, 0.0, 1.0, 0.0, v).V
    assert np.all(np.diff(V) > 0.0)
    V = inverse_flow(model, 0.0, 1.0, 0.0, v).V
    assert np.all(np.diff(V) > 0.0)


def test_flow_matches_refined_integration():
    model = (burgers_flux(), bl_forcing(1.0, 1.0))
    coarse = flow(model, 0.0, 0.5, 0.0, 1.0)
    fine = flow(model, 0.0, 0.5, 0.0, 1.0, h_char=DEFAULT_H_CHAR / 100)
    assert abs(coarse.V - fine.V) <= 1e-8
    assert abs(coarse.X - fine.X) <= 1e-8
    assert coarse.V > 1.0


def test_jacobian_within_envelope():
    forcing = bl_forcing(1.0, 2.0)
    lower, upper = jacobian_envelope(forcing, 0.0, 1.0)
    result = flow((burgers_flux(), forcing), 0.0, 1.0, 0.0, np.linspace(-2.0, 2.0, 41))
    assert np.all(result.J <= upper * (1 + 1e-12))
    assert np.all(result.J >= lower * (1 - 1e-12))
    assert np.all(result.jac_upper <= upper * (1 + 1e-12))


def test_flow_rejects_reversed_times():
    with pytest.raises(ConfigError):
        flow((burgers_flux(), zero_forcing()), 1.0, 0.5, 0.0, 0.0)


def test_flow_raises_on_band_exit():
    with pytest.raises(StepOverflow):
        flow((burgers_flux(), linear_decay_forcing(2.0)), 0.0, 1.0, 0.0, np.array([0.9]), v_bound=1.0)


@pytest.mark.parametrize(
    "rho_bound, forcing, t_final, n_cells",
    [
        (1.0, zero_forcing(), 1.0, 64),
        (0.5, linear_decay_forcing(1.0), 1.0, 32),
        (0.0, zero_forcing(), 1.0, 8),
    ],
)
def test_velocity_grid_for(rho_bound: float, forcing, t_final: float, n_cells: int):
    grid = velocity_grid_for(rho_bound, forcing, t_final, n_cells)
    K = rho_bound if rho_bound > 0 else 1.0
    reach = K * math.exp(forcing.growth_exponent(0.0, t_final))
    assert grid.v_max == pytest.approx(reach + 2 * grid.dv)
    assert grid.edges[grid.zero_edge] == 0.0


@pytest.mark.parametrize("n_cells", [4, 7])
def test_velocity_grid_for_rejects(n_cells: int):
    with pytest.raises(ConfigError):
        velocity_grid_for(1.0, zero_forcing(), 1.0, n_cells)
