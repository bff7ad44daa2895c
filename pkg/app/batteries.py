"""Canned verification batteries behind `bgk verify SUITE`."""
import logging
from collections import namedtuple

import numpy as np

from app.config import Config
from bgk import (
    DensityField,
    SolverConfig,
    SpaceGrid,
    bl_forcing,
    buckley_leverett_flux,
    burgers_flux,
    constant_noise,
    inverse_time_decay,
    linear_decay_forcing,
    linear_flux,
    velocity_grid_for,
    zero_forcing,
)
from bgk.solver import run
from bgk.stochastic import ensemble, sample_shift, solve_pathwise_direct, solve_pathwise_shift
from bgk.verification import (
    ResidualReport,
    burgers_riemann,
    calibrate_entropy_tolerance,
    check_comparison,
    check_contraction_pair,
    check_decay,
    check_defect_field,
    check_linf_bound,
    check_shift_equivalence,
    check_sign_preservation,
    check_translation,
    convergence_study,
    entropy_residual,
    expansion_shock_trace,
    godunov_reference,
    l1_distance,
)

logger = logging.getLogger(__name__)

CheckResult = namedtuple("CheckResult", ["name", "passed", "report"])

BATTERY_SEED = 20240611
PAIR_DOMAIN = (-1.0, 2.0)
N_COMPARISON_PAIRS = 20


def _solve(flux, forcing, rho0: DensityField, t_final: float, eps: float = 1e-3, n_v: int = 32, **options):
    bound = options.pop("bound", rho0.linf_norm())
    config = SolverConfig(
        space=rho0.space,
        velocity=velocity_grid_for(bound, forcing, t_final, n_v),
        flux=flux,
        forcing=forcing,
        eps=eps,
        t_final=t_final,
        **options,
    )
    return config, run(config, rho0, label=flux.name)


def _random_pieces(rng, space: SpaceGrid, low: float, high: float, n_pieces: int = 8, span=(-0.5, 0.5)) -> np.ndarray:
    """Piecewise-constant random data on `span`, zero elsewhere."""
    levels = rng.uniform(low, high, n_pieces)
    x = space.centers
    inside = (x >= span[0]) & (x < span[1])
    index = np.clip(((x - span[0]) / (span[1] - span[0]) * n_pieces).astype(int), 0, n_pieces - 1)
    return np.where(inside, levels[index], 0.0), inside


def contraction_suite() -> list:
    rng = np.random.default_rng(BATTERY_SEED)
    space = SpaceGrid(*PAIR_DOMAIN, 120)
    results = []

    first, _ = _random_pieces(rng, space, -0.5, 0.5)
    second, _ = _random_pieces(rng, space, -0.5, 0.5)
    rho, rho_other = DensityField(space=space, values=first), DensityField(space=space, values=second)
    bound = max(rho.linf_norm(), rho_other.linf_norm())
    config, traj = _solve(burgers_flux(), zero_forcing(), rho, 0.5, bound=bound)
    other = run(config, rho_other, label="contraction-pair")
    report = check_contraction_pair(traj, other, config.forcing, slack=1e-10)
    results.append(CheckResult("contraction_unforced", report.passed, report))

    first, _ = _random_pieces(rng, space, 0.0, 0.5)
    second, _ = _random_pieces(rng, space, 0.0, 0.5)
    rho, rho_other = DensityField(space=space, values=first), DensityField(space=space, values=second)
    bound = max(rho.linf_norm(), rho_other.linf_norm())
    growth = linear_decay_forcing(1.0, name="linear_growth")
    config, traj = _solve(burgers_flux(), growth, rho, 1.0, bound=bound)
    other = run(config, rho_other, label="growth-pair")
    for kinetic in (False, True):
        report = check_contraction_pair(traj, other, growth, kinetic=kinetic)
        results.append(CheckResult(report.name + "_growth", report.passed, report))

    report = check_translation(config, rho)
    results.append(CheckResult("translation", report.passed, report))
    report = check_linf_bound(traj, growth)
    results.append(CheckResult("linf", report.passed, report))
    report = check_sign_preservation(traj)
    results.append(CheckResult("sign", report.passed, report))
    report = check_defect_field(traj)
    results.append(CheckResult("defect", report.passed, report))
    return results


def comparison_suite(n_pairs: int = N_COMPARISON_PAIRS) -> list:
    """Ordered random pairs across Burgers and Buckley-Leverett, with and without forcing."""
    rng = np.random.default_rng(BATTERY_SEED + 1)
    space = SpaceGrid(*PAIR_DOMAIN, 120)
    models = [
        (burgers_flux(), zero_forcing(), (-0.5, 0.5)),
        (burgers_flux(), linear_decay_forcing(0.5, name="linear_growth"), (-0.5, 0.5)),
        (buckley_leverett_flux(), zero_forcing(), (0.0, 0.7)),
        (buckley_leverett_flux(), bl_forcing(1.0, 1.0), (0.0, 0.7)),
    ]
    results = []
    for k in range(n_pairs):
        flux, forcing, (low, high) = models[k % len(models)]
        lower, inside = _random_pieces(rng, space, low, high)
        upper = lower + np.where(inside, rng.uniform(0.0, 0.3, space.n_cells), 0.0)
        rho, rho_upper = DensityField(space=space, values=lower), DensityField(space=space, values=upper)
        config, traj = _solve(flux, forcing, rho, 0.5, bound=rho_upper.linf_norm())
        other = run(config, rho_upper, label=f"comparison-{k:02d}-upper")
        report = check_comparison(traj, other, kinetic=(k == 0))
        results.append(CheckResult(f"comparison_{k:02d}", report.passed, report))
    return results


def entropy_suite() -> list:
    """BGK Riemann runs must satisfy every Kruzkov inequality; a planted expansion shock must not."""
    space = SpaceGrid(*PAIR_DOMAIN, 200)
    rho0 = DensityField.from_function(space, lambda x: np.where(x < 0.0, 1.0, 0.0))
    results = []
    tol_burgers = None
    for flux in (burgers_flux(), buckley_leverett_flux()):
        config, traj = _solve(flux, zero_forcing(), rho0, 0.5, eps=2e-3, n_v=64, boundary="extrapolate")
        reference = godunov_reference(flux, zero_forcing(), rho0, t_final=0.5, boundary="extrapolate")
        calibration = entropy_residual(reference, flux, zero_forcing())
        tol = calibrate_entropy_tolerance(calibration, space.dx, config.time_grid[1], config.eps)
        tol_burgers = tol_burgers or tol
        report = entropy_residual(traj, flux, zero_forcing(), tol=tol)
        results.append(CheckResult(f"entropy_{flux.name}", report.passed, report))

    planted = expansion_shock_trace(space, t_final=1.0)
    report = entropy_residual(planted, burgers_flux(), zero_forcing(), tol=tol_burgers)
    results.append(CheckResult("entropy_expansion_shock_flagged", not report.passed, report))
    return results


def decay_suite() -> list:
    space = SpaceGrid(-1.0, 3.0, 160)
    rho0 = DensityField.from_function(space, lambda x: np.exp(-((x / 0.25) ** 2)) * (np.abs(x) < 0.75))
    results = []
    damping = linear_decay_forcing(-1.0, name="linear_damping")
    _, traj = _solve(burgers_flux(), damping, rho0, 1.0)
    for p in ("1", "inf"):
        report = check_decay(traj, damping, p)
        results.append(CheckResult(f"decay_exponential_l{p}", report.passed, report))

    forcing = inverse_time_decay(2.0, 0.1)
    _, traj = _solve(burgers_flux(), forcing, rho0, 2.0)
    report = check_decay(traj, forcing, "1", alpha=2.0, r1=0.1)
    results.append(CheckResult("decay_algebraic_l1", report.passed, report))
    return results


def convergence_suite() -> list:
    """Burgers shock 1 | 0 refined along (Nx, ε) against the exact Riemann solution."""
    report = convergence_study(
        burgers_flux(),
        lambda x: np.where(x < 0.0, 1.0, 0.0),
        eps_list=[4e-3, 2e-3, 1e-3],
        nx_list=[200, 400, 800],
        domain=PAIR_DOMAIN,
        t_final=0.5,
        exact=burgers_riemann(1.0, 0.0),
    )
    errors = report.table["error"].to_numpy()
    strictly = bool(np.all(np.diff(errors) < 0))
    passed = strictly and bool(errors[1] <= 0.05)
    return [CheckResult("convergence_burgers_shock", passed, report)]


def _residual(name: str, values: list, tol: float) -> CheckResult:
    max_abs = float(np.max(np.abs(values)))
    report = ResidualReport(name=name, residuals=[float(v) for v in values], max_abs=max_abs, tol=tol, passed=max_abs <= tol)
    logger.info(f"Check {name}: passed={report.passed}, max {max_abs:.3e}, tol {tol:.3e}")
    return CheckResult(name, report.passed, report)


def stochastic_suite(n_seeds: int = 10, n_paths: int = 1000) -> list:
    results = []

    # pure noise transport is an exact translation of ρ₀ by M(T)
    still = linear_flux(0.0)
    space = SpaceGrid(-4.0, 4.0, 400)
    width, height, t_final = 0.2, 1.0, 0.25
    profile = lambda x: height * np.exp(-((x / width) ** 2))  # noqa: E731
    rho0 = DensityField.from_function(space, profile)
    config, _ = _solve(still, zero_forcing(), rho0, t_final, dt=t_final / 50)
    noise = constant_noise(1.0)
    shift = sample_shift(noise, BATTERY_SEED, config.time_grid[1], t_final)
    final = solve_pathwise_shift(config, rho0, shift).final.density.values
    exact = profile(space.centers - shift.at(t_final))
    results.append(_residual("shift_translation", [l1_distance(final, exact, space.dx)], space.dx))

    stats = ensemble(config, rho0, noise, n_paths, BATTERY_SEED, max_workers=Config.MAX_WORKERS)
    spread = width**2 + 2.0 * t_final
    heat = height * width / np.sqrt(spread) * np.exp(-(space.centers**2) / spread)
    results.append(_residual("ensemble_heat_kernel", [l1_distance(stats.mean[-1], heat, space.dx)], 0.05))

    # Burgers with σ = 0.2: the shift reduction and the direct splitting agree path by path
    space = SpaceGrid(-2.0, 3.0, 400)
    rho0 = DensityField.from_function(space, lambda x: np.exp(-((x / 0.5) ** 2)) * (np.abs(x) < 1.0))
    config, deterministic = _solve(burgers_flux(), zero_forcing(), rho0, 0.5, n_v=64, keep_kinetic=False)
    n_steps, dt = config.time_grid
    distances = []
    for seed in range(BATTERY_SEED, BATTERY_SEED + n_seeds):
        shift = sample_shift(constant_noise(0.2), seed, dt, config.t_final)
        by_shift = solve_pathwise_shift(config, rho0, shift, deterministic).final.density.values
        direct = solve_pathwise_direct(config, rho0, shift).final.density.values
        distances.append(l1_distance(by_shift, direct, space.dx))
    results.append(_residual("shift_vs_direct", distances, 0.05))

    # shifting never changes mass, and each mode keeps its own norm guarantees
    shift = sample_shift(constant_noise(0.2), BATTERY_SEED, dt, config.t_final)
    for mode in ("conservative", "nearest"):
        path = solve_pathwise_shift(config, rho0, shift, deterministic, mode)
        report = check_shift_equivalence(deterministic, path, mode)
        results.append(CheckResult(report.name, report.passed, report))
    return results


SUITES = {
    "contraction": contraction_suite,
    "comparison": comparison_suite,
    "entropy": entropy_suite,
    "decay": decay_suite,
    "convergence": convergence_suite,
    "stochastic-consistency": stochastic_suite,
}


def run_suite(name: str) -> list:
    """CheckResults of one suite, or of every suite in order for "all"."""
    names = list(SUITES) if name == "all" else [name]
    results = []
    for suite in names:
        logger.info(f"Running verification suite {suite}")
        results.extend(SUITES[suite]())
    return results
