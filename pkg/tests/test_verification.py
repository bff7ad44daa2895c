import math

import numpy as np
import pytest

from bgk import (
    CflViolation,
    ConfigError,
    DensityField,
    SolverConfig,
    SpaceGrid,
    burgers_flux,
    burgers_riemann,
    calibrate_entropy_tolerance,
    check_comparison,
    check_contraction_pair,
    check_decay,
    check_defect_budget,
    check_defect_field,
    check_linf_bound,
    check_sign_preservation,
    check_translation,
    convergence_study,
    entropy_residual,
    expansion_shock_trace,
    godunov_reference,
    inverse_time_decay,
    kinetic_residual,
    linear_decay_forcing,
    linear_flux,
    run,
    velocity_grid_for,
    weak_form_residual,
    zero_forcing,
)
from bgk.solver import Trajectory
from bgk.verification import bump_battery, godunov_flux
from tests.utils import bump, l1


@pytest.mark.parametrize(
    "left, right, expected",
    [
        (-1.0, 1.0, 0.0),
        (1.0, 0.0, 0.5),
        (0.0, 1.0, 0.0),
        (0.5, -1.0, 0.5),
        (0.3, 0.3, 0.045),
    ],
)
def test_godunov_flux_burgers(left: float, right: float, expected: float):
    value = godunov_flux(burgers_flux(), np.array([left]), np.array([right]))
    assert value[0] == pytest.approx(expected)


@pytest.mark.parametrize(
    "left, right, x, t, expected",
    [
        (1.0, 0.0, 0.2, 0.5, 1.0),
        (1.0, 0.0, 0.3, 0.5, 0.0),
        (-1.0, 1.0, 0.25, 0.5, 0.5),
        (-1.0, 1.0, -0.9, 0.5, -1.0),
        (0.5, 0.5, 3.0, 1.0, 0.5),
    ],
)
def test_burgers_riemann(left: float, right: float, x: float, t: float, expected: float):
    assert burgers_riemann(left, right)(x, t) == pytest.approx(expected)


@pytest.fixture(scope="module")
def godunov_shock(shock_rho0):
    yield godunov_reference(burgers_flux(), zero_forcing(), shock_rho0, t_final=0.5, boundary="extrapolate")


def test_godunov_shock_front(godunov_shock):
    final = godunov_shock.final.density.values
    centers = godunov_shock.space.centers
    front = centers[int(np.argmin(np.abs(final - 0.5)))]
    assert abs(front - 0.25) <= 2 * godunov_shock.space.dx


def test_godunov_picks_rarefaction(shock_space):
    rho0 = DensityField.from_function(shock_space, lambda x: np.where(x < 0.0, -1.0, 1.0))
    final = godunov_reference(burgers_flux(), zero_forcing(), rho0, t_final=0.5, boundary="extrapolate").final
    exact = burgers_riemann(-1.0, 1.0)(shock_space.centers, 0.5)
    assert l1(final.density.values, exact, shock_space.dx) < 0.05


def test_godunov_constant_state_with_source():
    space = SpaceGrid(0.0, 1.0, 10)
    rho0 = DensityField(space=space, values=np.full(10, 0.5))
    final = godunov_reference(
        burgers_flux(), linear_decay_forcing(-1.0), rho0, dt=0.001, t_final=1.0, boundary="extrapolate"
    ).final
    np.testing.assert_allclose(final.density.values, 0.5 * math.exp(-1.0), rtol=1e-3)


def test_godunov_rejects_large_dt(shock_rho0):
    with pytest.raises(CflViolation):
        godunov_reference(burgers_flux(), zero_forcing(), shock_rho0, dt=1.0, t_final=0.5)


def test_bump_battery_stays_inside(shock_space):
    battery = bump_battery(shock_space, 0.5)
    assert len(battery) == 12
    for bump_ in battery:
        assert bump_.x_center - bump_.x_radius >= shock_space.x_min - 1e-12
        assert bump_.x_center + bump_.x_radius <= shock_space.x_max + 1e-12
        assert bump_.t_center - bump_.t_radius > 0.0


@pytest.fixture(scope="module")
def shock_tolerance(shock_config, godunov_shock):
    calibration = entropy_residual(godunov_shock, burgers_flux(), zero_forcing())
    _, dt = shock_config.time_grid
    return calibrate_entropy_tolerance(calibration, shock_config.space.dx, dt, shock_config.eps)


def test_entropy_residual_shock_passes(shock_trajectory, shock_tolerance):
    report = entropy_residual(shock_trajectory, burgers_flux(), zero_forcing(), tol=shock_tolerance)
    assert report.passed
    assert len(report.constants) == 21
    assert np.array(report.residuals).shape == (21, 12)


def test_entropy_residual_flags_expansion_shock(shock_space, shock_tolerance):
    planted = expansion_shock_trace(shock_space, t_final=1.0)
    report = entropy_residual(planted, burgers_flux(), zero_forcing(), tol=shock_tolerance)
    assert not report.passed
    assert report.min_residual < -shock_tolerance


def test_entropy_residual_smooth_linear_solution():
    space = SpaceGrid(-1.0, 2.0, 600)
    profile = bump(0.0, 0.4)
    times = np.linspace(0.0, 0.5, 101)
    trajectory = Trajectory(space=space)
    for t in times:
        trajectory.append(t, density=DensityField(space=space, values=profile(space.centers - t)))
    report = entropy_residual(trajectory, linear_flux(1.0), zero_forcing())
    assert abs(report.min_residual) < 1e-3


def test_weak_form_residual_small(shock_trajectory, shock_tolerance):
    report = weak_form_residual(shock_trajectory, burgers_flux(), zero_forcing(), tol=shock_tolerance)
    assert report.passed


def _kinetic_residual(nx: int) -> float:
    space = SpaceGrid(-1.0, 2.0, nx)
    rho0 = DensityField.from_function(space, bump(0.2, 0.5, 0.8))
    config = SolverConfig(
        space=space,
        velocity=velocity_grid_for(0.8, zero_forcing(), 0.5, 32),
        flux=burgers_flux(),
        forcing=zero_forcing(),
        eps=0.05,
        t_final=0.5,
    )
    return kinetic_residual(run(config, rho0), burgers_flux(), zero_forcing()).max_abs


def test_kinetic_residual_shrinks_under_refinement():
    coarse, fine = _kinetic_residual(60), _kinetic_residual(120)
    assert fine < 0.7 * coarse or fine < 1e-3


def test_kinetic_residual_needs_kinetic_snapshots(shock_space):
    with pytest.raises(ConfigError):
        kinetic_residual(expansion_shock_trace(shock_space, 0.5), burgers_flux(), zero_forcing())


def _pair(config, first, second):
    return run(config, first), run(config, second)


def test_contraction_identical_data(growth_config, growth_trajectory):
    report = check_contraction_pair(growth_trajectory, growth_trajectory, growth_config.forcing)
    assert report.passed
    assert max(report.values) == 0.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_contraction_unforced(seed: int):
    rng = np.random.default_rng(seed)
    space = SpaceGrid(-1.0, 2.0, 100)
    mask = np.abs(space.centers) < 0.5
    first = DensityField(space=space, values=rng.uniform(-0.5, 0.5, 100) * mask)
    second = DensityField(space=space, values=rng.uniform(-0.5, 0.5, 100) * mask)
    config = SolverConfig(
        space=space,
        velocity=velocity_grid_for(0.5, zero_forcing(), 0.5, 32),
        flux=burgers_flux(),
        forcing=zero_forcing(),
        eps=1e-3,
        t_final=0.5,
    )
    traj, other = _pair(config, first, second)
    report = check_contraction_pair(traj, other, zero_forcing(), slack=1e-10)
    assert report.passed
    assert check_contraction_pair(traj, other, zero_forcing(), kinetic=True).passed


def test_contraction_with_growth(growth_config, growth_trajectory, bump_rho0):
    other = run(growth_config, DensityField.from_function(bump_rho0.space, bump(0.1, 0.3, 0.5)))
    report = check_contraction_pair(growth_trajectory, other, growth_config.forcing)
    assert report.passed
    assert report.claimed == pytest.approx(math.e * report.details["initial_distance"])
    assert report.measured <= math.e * report.details["initial_distance"] * (1 + 1e-6)


def test_contraction_needs_matching_times(growth_config, growth_trajectory, bump_rho0):
    other = run(growth_config.with_changes(record_every=3), bump_rho0)
    with pytest.raises(ConfigError):
        check_contraction_pair(growth_trajectory, other, growth_config.forcing)


@pytest.mark.parametrize(
    "lower, upper",
    [
        (bump(0.0, 0.4, 0.5), bump(0.0, 0.4, 0.6)),
        (bump(0.0, 0.4, -0.5), bump(0.2, 0.4, 0.5)),
        (bump(0.0, 0.4, 0.5), bump(0.0, 0.4, 0.5)),
    ],
)
def test_comparison_preserved(lower, upper):
    space = SpaceGrid(-1.0, 2.0, 120)
    config = SolverConfig(
        space=space,
        velocity=velocity_grid_for(0.6, zero_forcing(), 0.8, 32),
        flux=burgers_flux(),
        forcing=zero_forcing(),
        eps=1e-3,
        t_final=0.8,
    )
    traj, other = _pair(
        config, DensityField.from_function(space, lower), DensityField.from_function(space, upper)
    )
    assert check_comparison(traj, other).passed
    assert check_comparison(traj, other, kinetic=True).passed


def test_comparison_detects_crossing(growth_trajectory):
    space = growth_trajectory.space
    config_free = SolverConfig(
        space=space,
        velocity=growth_trajectory.velocity,
        flux=burgers_flux(),
        forcing=zero_forcing(),
        eps=1e-2,
        t_final=1.0,
    )
    taller = run(config_free, DensityField.from_function(space, bump(0.0, 0.4, 0.8)))
    shorter = run(config_free, DensityField.from_function(space, bump(0.0, 0.4, 0.4)))
    assert not check_comparison(taller, shorter).passed


def test_linf_sign_and_defect(growth_trajectory):
    forcing = linear_decay_forcing(1.0)
    assert check_linf_bound(growth_trajectory, forcing).passed
    assert check_sign_preservation(growth_trajectory).passed
    assert check_defect_field(growth_trajectory).passed


def test_defect_budget(shock_trajectory):
    report = check_defect_budget(shock_trajectory, zero_forcing())
    assert report.passed
    assert report.measured >= 0.0


def test_translation(growth_config, bump_rho0):
    report = check_translation(growth_config, bump_rho0)
    assert report.passed
    assert report.details["cells"] == 1


@pytest.fixture(scope="module")
def decay_space():
    return SpaceGrid(-1.0, 3.0, 160)


@pytest.mark.parametrize("p", ["1", "inf"])
def test_exponential_decay(decay_space, p: str):
    forcing = linear_decay_forcing(-1.0)
    rho0 = DensityField.from_function(decay_space, bump(0.0, 0.5))
    config = SolverConfig(
        space=decay_space,
        velocity=velocity_grid_for(1.0, forcing, 1.0, 32),
        flux=burgers_flux(),
        forcing=forcing,
        eps=1e-3,
        t_final=1.0,
    )
    report = check_decay(run(config, rho0), forcing, p)
    assert report.passed
    assert report.details["classification"] == "exponential"


def test_unforced_norms_contract(decay_space):
    rho0 = DensityField.from_function(decay_space, bump(0.0, 0.5))
    config = SolverConfig(
        space=decay_space,
        velocity=velocity_grid_for(1.0, zero_forcing(), 1.0, 32),
        flux=burgers_flux(),
        forcing=zero_forcing(),
        eps=1e-3,
        t_final=1.0,
    )
    report = check_decay(run(config, rho0), zero_forcing(), "inf")
    assert report.passed
    assert report.details["classification"] == "contraction"


def test_algebraic_decay_slope(decay_space):
    forcing = inverse_time_decay(2.0, 0.1)
    rho0 = DensityField.from_function(decay_space, bump(0.0, 0.5))
    config = SolverConfig(
        space=decay_space,
        velocity=velocity_grid_for(1.0, forcing, 2.0, 32),
        flux=burgers_flux(),
        forcing=forcing,
        eps=1e-3,
        t_final=2.0,
    )
    report = check_decay(run(config, rho0), forcing, "1", alpha=2.0, r1=0.1)
    assert report.passed
    assert -2.2 <= report.details["slope"] <= -1.8


def test_decay_rejects_unknown_norm(growth_trajectory):
    with pytest.raises(ConfigError):
        check_decay(growth_trajectory, linear_decay_forcing(1.0), "2")


def test_linear_advection_first_order():
    report = convergence_study(
        linear_flux(1.0),
        lambda x: np.exp(-((x / 0.1) ** 2)),
        eps_list=[1e-6],
        nx_list=[300, 600],
        domain=(-1.0, 2.0),
        t_final=0.5,
        exact=lambda x, t: np.exp(-(((x - t) / 0.1) ** 2)),
    )
    ratio = report.table["ratio"].iloc[1]
    assert 1.6 <= ratio <= 2.4


def test_burgers_shock_refinement():
    report = convergence_study(
        burgers_flux(),
        lambda x: np.where(x < 0.0, 1.0, 0.0),
        eps_list=[4e-3, 2e-3, 1e-3],
        nx_list=[200, 400, 800],
        domain=(-1.0, 2.0),
        t_final=0.5,
        exact=burgers_riemann(1.0, 0.0),
    )
    errors = report.table["error"].to_numpy()
    assert np.all(np.diff(errors) < 0)
    assert errors[1] <= 0.05
    assert report.passed
    assert list(report.table.columns) == ["nx", "eps", "dx", "dt", "error", "ratio"]


def test_relaxation_bias_plateaus():
    report = convergence_study(
        burgers_flux(),
        lambda x: np.where(x < 0.0, 1.0, 0.0),
        eps_list=[0.1],
        nx_list=[200, 400, 800],
        domain=(-1.0, 2.0),
        t_final=0.5,
        exact=burgers_riemann(1.0, 0.0),
    )
    errors = report.table["error"].to_numpy()
    assert errors[-1] > 0.02
    assert errors[0] / errors[-1] < 1.5


def test_convergence_study_pairs_lists():
    with pytest.raises(ConfigError):
        convergence_study(burgers_flux(), bump(0.0, 0.5), [0.1, 0.2], [50, 100, 200], (-1.0, 2.0), 0.1)
