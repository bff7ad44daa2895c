import math

import numpy as np
import pytest

from bgk import (
    ConfigError,
    bl_forcing,
    buckley_leverett_flux,
    burgers_flux,
    constant_noise,
    inverse_time_decay,
    linear_decay_forcing,
    linear_flux,
    linear_noise,
    resolve_flux,
    resolve_forcing,
    resolve_model,
    resolve_noise,
    tabulated_flux,
    zero_forcing,
)
from bgk.models import parse_identifier


@pytest.mark.parametrize(
    "identifier, name, parameters",
    [
        ("burgers", "burgers", {}),
        ("buckley-leverett", "buckley_leverett", {}),
        ("buckleyLeverett", "buckley_leverett", {}),
        ("linear:c=2", "linear", {"c": 2.0}),
        ("bl_forcing:theta=1, mu=0.25", "bl_forcing", {"theta": 1.0, "mu": 0.25}),
    ],
)
def test_parse_identifier(identifier: str, name: str, parameters: dict):
    assert parse_identifier(identifier) == (name, parameters)


@pytest.mark.parametrize(
    "identifier",
    [
        "linear:c",
        "linear:c=fast",
    ],
)
def test_parse_identifier_fails(identifier: str):
    with pytest.raises(ConfigError):
        parse_identifier(identifier)


@pytest.mark.parametrize(
    "resolver, identifier",
    [
        (resolve_flux, "euler"),
        (resolve_forcing, "gravity"),
        (resolve_noise, "levy"),
        (resolve_flux, "burgers:c=1"),
    ],
)
def test_resolve_unknown_fails(resolver, identifier: str):
    with pytest.raises(ConfigError):
        resolver(identifier)


def test_resolve_model():
    model = resolve_model("buckley_leverett", "bl_forcing:mu=0.5", "constant:sigma=0.25")
    assert model.flux.name == "buckley_leverett"
    assert model.forcing.eval_A(0.0, 1.0) == pytest.approx(0.25)
    assert float(model.noise.sigma(3.0)) == pytest.approx(0.25)


@pytest.mark.parametrize("rho", [-0.5, 0.0, 0.3, 0.5, 0.9, 1.0, 1.4])
def test_buckley_leverett_flux(rho: float):
    flux = buckley_leverett_flux()
    r = min(max(rho, 0.0), 1.0)
    assert flux.eval_B(rho) == pytest.approx(r**2 / (r**2 + (1 - r) ** 2))
    step = 1e-6
    if 0.0 < rho < 1.0:
        slope = (flux.eval_B(rho + step) - flux.eval_B(rho - step)) / (2 * step)
        assert flux.eval_b(rho) == pytest.approx(slope, rel=1e-5)
    else:
        assert flux.eval_b(rho) == 0.0


def test_buckley_leverett_flux_is_monotone_onto_unit_interval():
    flux = buckley_leverett_flux()
    rho = np.linspace(-0.5, 1.5, 200)
    values = flux.eval_B(rho)
    assert np.all(np.diff(values) >= 0.0)
    assert values.min() == 0.0
    assert values.max() == 1.0
    assert np.all(flux.eval_b(rho) >= 0.0)


@pytest.mark.parametrize(
    "forcing",
    [
        bl_forcing(1.0, 1.0),
        bl_forcing(lambda t: 1.0 + t, 2.0),
        linear_decay_forcing(-1.5),
        linear_decay_forcing(lambda t: math.sin(3.0 * t)),
    ],
    ids=["bl", "bl-varying", "linear", "linear-varying"],
)
@pytest.mark.parametrize("t", [0.0, 0.7])
def test_forcing_slope_matches_difference_quotient(forcing, t: float):
    v = np.linspace(-2.0, 2.0, 41)
    h = 1e-6
    quotient = (forcing.eval_A(t, v + h) - forcing.eval_A(t, v - h)) / (2 * h)
    np.testing.assert_allclose(forcing.eval_dvA(t, v), quotient, rtol=1e-7, atol=1e-8)


@pytest.mark.parametrize("theta, t, expected", [(1.0, 0.3, 0.5), (0.4, 0.0, 0.2), (lambda t: 1.0 + t, 2.0, 1.5)])
def test_bl_forcing_values(theta, t: float, expected: float):
    forcing = bl_forcing(theta, 1.0)
    assert forcing.eval_A(t, 1.0) == pytest.approx(expected)
    assert forcing.eval_A(t, 0.0) == 0.0
    assert forcing.eval_dvA(t, 0.0) == 0.0


def test_fluxes_speeds():
    assert burgers_flux().max_speed([-2.0, 0.5, 1.0]) == 2.0
    assert linear_flux(-1.5).max_speed([0.1, 0.2]) == 1.5
    assert buckley_leverett_flux().max_speed(np.linspace(0, 1, 101)) == pytest.approx(2.0)


def test_tabulated_flux_matches_burgers():
    nodes = np.linspace(-2.0, 2.0, 81)
    flux = tabulated_flux(nodes, 0.5 * nodes**2)
    v = np.linspace(-1.5, 1.5, 13)
    np.testing.assert_allclose(flux.eval_B(v), 0.5 * v**2, atol=1e-3)
    np.testing.assert_allclose(flux.eval_b(v), v, atol=5e-2)
    assert any(abs(point) < 1e-6 for point in flux.critical_points)


@pytest.mark.parametrize(
    "forcing, t, growth",
    [
        (zero_forcing(), 3.0, 0.0),
        (linear_decay_forcing(1.0), 1.0, 1.0),
        (linear_decay_forcing(-1.0), 2.0, 0.0),
        (bl_forcing(1.0, 1.0), 2.0, 2 * 9 / (8 * math.sqrt(3))),
        (inverse_time_decay(2.0, 0.1), 2.0, 0.0),
    ],
)
def test_growth_exponent(forcing, t: float, growth: float):
    assert forcing.growth_exponent(0.0, t) == pytest.approx(growth)
    assert forcing.eval_A(0.5 * t, 0.0) == 0.0


def test_inverse_time_decay_rate_integral():
    forcing = inverse_time_decay(2.0, 0.1)
    assert forcing.rate_integral(0.0, 0.1) == pytest.approx(0.0)
    assert forcing.rate_integral(0.0, 2.0) == pytest.approx(-2.0 * math.log(20.0))
    assert forcing.lipschitz_exponent(0.0, 2.0) == pytest.approx(2.0 * math.log(20.0))


def test_rate_integral_needs_linear_forcing():
    with pytest.raises(ConfigError):
        bl_forcing().rate_integral(0.0, 1.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"alpha": -1.0, "r1": 0.1},
        {"alpha": 2.0, "r1": 0.0},
    ],
)
def test_inverse_time_decay_rejects(kwargs: dict):
    with pytest.raises(ConfigError):
        inverse_time_decay(**kwargs)


@pytest.mark.parametrize(
    "noise, t_final, expected",
    [
        (constant_noise(0.2), 0.5, 0.02),
        (linear_noise(1.0), 1.0, 1.0 / 3.0),
        (constant_noise(0.0), 1.0, 0.0),
    ],
)
def test_noise_square_integral(noise, t_final: float, expected: float):
    assert noise.square_integral(t_final) == pytest.approx(expected)
