"""Reference solver and checks of the a-priori estimates on computed trajectories.

Every bound report is one-sided: a check passes when the measured quantity stays
below the proven envelope, never because it is close to it.
"""

import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .characteristics import velocity_grid_for
from .errors import CflViolation, ConfigError
from .kinetic import DensityField, SpaceGrid
from .models import FluxModel, ForcingModel, zero_forcing
from .solver import SolverConfig, Trajectory, run
from .stochastic import SHIFT_MODES, EnsembleStats, decay_exponent

logger = logging.getLogger("app." + __name__)

BATTERY_VERSION = 1
N_ENTROPY_CONSTANTS = 21

Bump = namedtuple("Bump", ["x_center", "x_radius", "t_center", "t_radius"])


@dataclass
class BoundReport:
    """measured ≤ claimed·(1 + slack), with the per-snapshot series behind it."""

    name: str
    claimed: float
    measured: float
    slack: float
    passed: bool
    times: list = field(default_factory=list)
    bound: list = field(default_factory=list)
    values: list = field(default_factory=list)
    details: dict = field(default_factory=dict)


@dataclass
class OrderReport:
    name: str
    max_violation: float
    tolerance: float
    passed: bool
    n_snapshots: int


@dataclass
class EntropyReport:
    constants: list
    residuals: list
    min_residual: float
    tol: float
    passed: bool
    battery_version: int = BATTERY_VERSION


@dataclass
class ResidualReport:
    name: str
    residuals: list
    max_abs: float
    tol: float
    passed: bool


@dataclass
class ConvergenceReport:
    table: pd.DataFrame
    monotone: bool

    @property
    def passed(self) -> bool:
        return self.monotone


def l1_distance(first: np.ndarray, second: np.ndarray, dx: float) -> float:
    return float(np.abs(np.asarray(first) - np.asarray(second)).sum() * dx)


# Godunov reference


def godunov_flux(flux: FluxModel, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """min of B over [left, right] when left <= right, max over [right, left] otherwise."""
    b_left, b_right = flux.eval_B(left), flux.eval_B(right)
    low, high = np.minimum(b_left, b_right), np.maximum(b_left, b_right)
    lo, hi = np.minimum(left, right), np.maximum(left, right)
    for point in flux.critical_points:
        inside = (lo < point) & (point < hi)
        value = flux.eval_B(point)
        low = np.where(inside, np.minimum(low, value), low)
        high = np.where(inside, np.maximum(high, value), high)
    return np.where(left <= right, low, high)


def _reference_speed(flux: FluxModel, forcing: ForcingModel, rho0: np.ndarray, t_final: float) -> float:
    growth = math.exp(forcing.growth_exponent(0.0, t_final))
    lo = min(float(rho0.min()), 0.0) * growth
    hi = max(float(rho0.max()), 0.0) * growth
    samples = np.concatenate([np.linspace(lo, hi, 401), [p for p in flux.critical_points if lo < p < hi]])
    return float(np.abs(flux.eval_b(samples)).max(initial=0.0))


def godunov_reference(
    flux: FluxModel,
    forcing: ForcingModel,
    rho0: DensityField,
    dt: float = None,
    t_final: float = 1.0,
    boundary: str = "zero_inflow",
    cfl_target: float = 0.9,
    record_every: int = 1,
) -> Trajectory:
    """Monotone Godunov finite volumes with an explicit Euler source step ρ += dt·A(t, ρ)."""
    space = rho0.space
    speed = _reference_speed(flux, forcing, rho0.values, t_final)
    if dt is not None and dt * speed / space.dx > 1.0 + 1e-12:
        raise CflViolation(description=f"Godunov Courant number {dt * speed / space.dx:.6g} exceeds 1")
    if t_final == 0:
        n_steps, step = 0, 0.0
    else:
        target = dt if dt is not None else (cfl_target * space.dx / speed if speed > 0 else t_final)
        n_steps = max(1, math.ceil(t_final / target - 1e-9))
        step = t_final / n_steps
    logger.debug(f"Godunov reference {flux.name}: Nx={space.n_cells}, steps={n_steps}, dt={step:.4g}")

    trajectory = Trajectory(space=space, label="godunov")
    rho = np.array(rho0.values, dtype=float)
    trajectory.append(0.0, density=DensityField(space=space, values=rho))
    for k in range(1, n_steps + 1):
        if boundary == "extrapolate":
            padded = np.concatenate([rho[:1], rho, rho[-1:]])
        else:
            padded = np.concatenate([[0.0], rho, [0.0]])
        fluxes = godunov_flux(flux, padded[:-1], padded[1:])
        rho = rho - (step / space.dx) * np.diff(fluxes)
        if not forcing.is_zero:
            rho = rho + step * forcing.eval_A((k - 1) * step, rho)
        if k == n_steps or k % record_every == 0:
            t = t_final if k == n_steps else k * step
            trajectory.append(t, density=DensityField(space=space, values=rho))
    return trajectory


# Test functions and weak-form functionals


def _bump_profile(s):
    """ψ(s) = exp(-1/(1 - s²)) on |s| < 1 and its derivative."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    safe = np.where(inside, s, 0.0)
    denominator = 1.0 - safe**2
    value = np.where(inside, np.exp(-1.0 / denominator), 0.0)
    slope = np.where(inside, value * (-2.0 * safe / denominator**2), 0.0)
    return value, slope


def bump_battery(space: SpaceGrid, t_final: float) -> list:
    """Twelve tensor bumps: three spatial radii times four centers, one time window.

    The widest bumps reach the domain edges and vanish there, so no boundary flux enters.
    """
    length = space.x_max - space.x_min
    return [
        Bump(
            x_center=space.x_min + length * (k + 1) / 5.0,
            x_radius=length * scale,
            t_center=0.5 * t_final,
            t_radius=0.45 * t_final,
        )
        for scale in (1 / 5, 1 / 10, 1 / 20)
        for k in range(4)
    ]


def entropy_constants(rho0: np.ndarray, count: int = N_ENTROPY_CONSTANTS) -> np.ndarray:
    return np.linspace(float(np.min(rho0)) - 0.5, float(np.max(rho0)) + 0.5, count)


def _bump_factors(bump: Bump, x: np.ndarray, times: np.ndarray):
    psi_x, dpsi_x = _bump_profile((x - bump.x_center) / bump.x_radius)
    psi_t, dpsi_t = _bump_profile((times - bump.t_center) / bump.t_radius)
    psi_0, _ = _bump_profile((0.0 - bump.t_center) / bump.t_radius)
    return psi_x, dpsi_x / bump.x_radius, psi_t, dpsi_t / bump.t_radius, float(psi_0)


def _weak_functional(times, x, dx, density_term, flux_term, source_term, initial_term, bump) -> float:
    """∫∫[η∂ₜφ + Q∂ₓφ + hφ] dx dt + ∫η(ρ₀)φ(0) dx, midpoint in x and trapezoid in t."""
    psi_x, dpsi_x, psi_t, dpsi_t, psi_0 = _bump_factors(bump, x, times)
    integrand = (
        dpsi_t * (density_term @ psi_x)
        + psi_t * (flux_term @ dpsi_x)
        + psi_t * (source_term @ psi_x)
    ) * dx
    value = trapezoid(integrand, times) if times.size > 1 else 0.0
    return float(value + psi_0 * (initial_term @ psi_x) * dx)


def _source_values(forcing: ForcingModel, times: np.ndarray, rho: np.ndarray) -> np.ndarray:
    if forcing.is_zero:
        return np.zeros_like(rho)
    return np.array([forcing.eval_A(t, row) for t, row in zip(times, rho)])


def entropy_residual(
    traj: Trajectory,
    flux: FluxModel,
    forcing: ForcingModel,
    c=None,
    test_functions=None,
    tol: float = 0.0,
) -> EntropyReport:
    """Kruzkov residuals for η = |ρ - c|, Q = sign(ρ - c)(B(ρ) - B(c)), h = sign(ρ - c)A(t, ρ)."""
    times = traj.times
    rho = traj.densities
    x, dx = traj.space.centers, traj.space.dx
    rho_initial = rho[0]
    constants = entropy_constants(rho_initial) if c is None else np.atleast_1d(np.asarray(c, dtype=float))
    bumps = test_functions or bump_battery(traj.space, float(times[-1]))
    source = _source_values(forcing, times, rho)
    b_rho = flux.eval_B(rho)

    residuals = []
    for constant in constants:
        sign = np.sign(rho - constant)
        eta = np.abs(rho - constant)
        q = sign * (b_rho - flux.eval_B(constant))
        h = sign * source
        eta0 = np.abs(rho_initial - constant)
        residuals.append([_weak_functional(times, x, dx, eta, q, h, eta0, bump) for bump in bumps])
    residuals = np.array(residuals)
    minimum = float(residuals.min())
    passed = minimum >= -tol
    logger.debug(f"Entropy residuals over {len(constants)}x{len(bumps)}: min {minimum:.3e}, tol {tol:.3e}")
    return EntropyReport(
        constants=constants.tolist(),
        residuals=residuals.tolist(),
        min_residual=minimum,
        tol=tol,
        passed=bool(passed),
    )


def calibrate_entropy_tolerance(reference: EntropyReport, dx: float, dt: float, eps: float, floor: float = 1.0) -> float:
    """max(10·|most negative residual of the reference run|, floor·(Δx + dt + ε))."""
    return max(10.0 * max(0.0, -reference.min_residual), floor * (dx + dt + eps))


def expansion_shock_trace(space: SpaceGrid, t_final: float, n_times: int = 51, left=-1.0, right=1.0, x0=0.0):
    """Stationary non-entropic jump left | right, a weak solution of Burgers when left = -right."""
    values = np.where(space.centers < x0, left, right)
    trajectory = Trajectory(space=space, label="expansion-shock")
    for t in np.linspace(0.0, t_final, n_times):
        trajectory.append(t, density=DensityField(space=space, values=values))
    return trajectory


def burgers_riemann(left: float, right: float, x0: float = 0.0):
    """Exact entropy solution (x, t) -> ρ of Burgers with Riemann data left | right at x0."""

    def solution(x, t):
        x = np.asarray(x, dtype=float)
        if t <= 0:
            return np.where(x < x0, left, right)
        if left > right:
            return np.where(x - x0 < 0.5 * (left + right) * t, left, right)
        return np.clip((x - x0) / t, left, right)

    return solution


def weak_form_residual(
    traj: Trajectory,
    flux: FluxModel,
    forcing: ForcingModel,
    test_functions=None,
    tol: float = 0.0,
) -> ResidualReport:
    """Residual of ∫∫[ρ∂ₜφ + B(ρ)∂ₓφ + A(t, ρ)φ] + ∫ρ₀φ(0), the linear member of the entropy family."""
    times = traj.times
    rho = traj.densities
    bumps = test_functions or bump_battery(traj.space, float(times[-1]))
    source = _source_values(forcing, times, rho)
    b_rho = flux.eval_B(rho)
    residuals = [
        _weak_functional(times, traj.space.centers, traj.space.dx, rho, b_rho, source, rho[0], bump)
        for bump in bumps
    ]
    max_abs = float(np.abs(residuals).max())
    return ResidualReport(
        name="weak_form",
        residuals=residuals,
        max_abs=max_abs,
        tol=tol,
        passed=bool(max_abs <= tol),
    )


def kinetic_residual(
    traj: Trajectory,
    flux: FluxModel,
    forcing: ForcingModel,
    test_functions=None,
    v_bumps=None,
    tol: float = 0.0,
) -> ResidualReport:
    """Residual of the kinetic weak form ∫∫∫ u(∂ₜφ + b∂ₓφ + ∂ᵥ(Aφ)) - m∂ᵥφ + ∫∫u₀φ(0) = 0."""
    if traj.velocity is None or traj[0].kinetic is None or traj[0].defect is None:
        raise ConfigError(description="kinetic_residual needs kinetic and defect snapshots")
    vgrid = traj.velocity
    times = traj.times
    x, dx = traj.space.centers, traj.space.dx
    centers, edges = vgrid.centers, vgrid.edges
    bumps = test_functions or bump_battery(traj.space, float(times[-1]))
    if v_bumps is None:
        v_bumps = [(-0.5 * vgrid.v_max, 0.5 * vgrid.v_max), (0.5 * vgrid.v_max, 0.5 * vgrid.v_max), (0.0, vgrid.v_max)]
    u = np.array([snapshot.kinetic.values for snapshot in traj])
    m = np.array([snapshot.defect.values for snapshot in traj])
    speeds = flux.eval_b(centers)
    force = np.array([forcing.eval_A(t, centers) for t in times])
    slope = np.array([forcing.eval_dvA(t, centers) for t in times])

    residuals = []
    for v_center, v_radius in v_bumps:
        psi_v, dpsi_v = _bump_profile((centers - v_center) / v_radius)
        dpsi_v = dpsi_v / v_radius
        _, dpsi_edges = _bump_profile((edges - v_center) / v_radius)
        dpsi_edges = dpsi_edges / v_radius
        # ∂ᵥ(Aψ) = ∂ᵥA·ψ + A·ψ′ at the cell centers
        v_transport = slope * psi_v + force * dpsi_v
        for bump in bumps:
            psi_x, dpsi_x, psi_t, dpsi_t, psi_0 = _bump_factors(bump, x, times)
            time_part = np.einsum("kij,i,j->k", u, psi_x, psi_v) * dpsi_t
            space_part = np.einsum("kij,i,j->k", u, dpsi_x, speeds * psi_v) * psi_t
            velocity_part = np.einsum("kij,i,kj->k", u, psi_x, v_transport) * psi_t
            defect_part = np.einsum("kij,i,j->k", m, psi_x, dpsi_edges) * psi_t
            integrand = (time_part + space_part + velocity_part - defect_part) * dx * vgrid.dv
            initial = psi_0 * float(psi_x @ u[0] @ psi_v) * dx * vgrid.dv
            residuals.append(float(trapezoid(integrand, times) + initial))
    max_abs = float(np.abs(residuals).max())
    return ResidualReport(
        name="kinetic_weak_form",
        residuals=residuals,
        max_abs=max_abs,
        tol=tol,
        passed=bool(max_abs <= tol),
    )


# Bounds


def _bound_report(name, times, values, bound, slack, atol, details=None) -> BoundReport:
    values = np.asarray(values, dtype=float)
    bound = np.asarray(bound, dtype=float)
    passed = bool(np.all(values <= bound * (1.0 + slack) + atol))
    claimed = float(bound[-1]) if bound.size else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bound > 0, values / bound, np.where(values > atol, np.inf, 0.0))
    measured = float(claimed * ratios.max()) if claimed > 0 else float(values.max(initial=0.0))
    logger.info(f"Check {name}: passed={passed}, measured={measured:.6g}, claimed={claimed:.6g}")
    return BoundReport(
        name=name,
        claimed=claimed,
        measured=measured,
        slack=slack,
        passed=passed,
        times=[float(t) for t in times],
        bound=bound.tolist(),
        values=values.tolist(),
        details=details or {},
    )


def check_contraction_pair(
    traj: Trajectory,
    other: Trajectory,
    forcing: ForcingModel,
    kinetic: bool = False,
    slack: float = 1e-6,
    atol: float = 1e-10,
) -> BoundReport:
    """‖ρ(t) - ρ̃(t)‖₁ ≤ exp(∫₀ᵗ‖[∂ᵥA]⁺‖)·‖ρ₀ - ρ̃₀‖₁, or ∫∫[u - ũ]⁺ likewise when kinetic."""
    if len(traj) != len(other) or not np.allclose(traj.times, other.times):
        raise ConfigError(description="contraction check needs trajectories on the same snapshot times")
    dx = traj.space.dx
    if kinetic:
        dv = traj.velocity.dv
        distances = [
            float(np.clip(a.kinetic.values - b.kinetic.values, 0.0, None).sum() * dx * dv)
            for a, b in zip(traj, other)
        ]
    else:
        distances = [l1_distance(a.density.values, b.density.values, dx) for a, b in zip(traj, other)]
    factors = np.array([math.exp(forcing.growth_exponent(0.0, t)) for t in traj.times])
    return _bound_report(
        "kinetic_contraction" if kinetic else "contraction",
        traj.times,
        distances,
        distances[0] * factors,
        slack,
        atol,
        details={"initial_distance": distances[0]},
    )


def check_comparison(traj: Trajectory, other: Trajectory, tol: float = 1e-12, kinetic: bool = False) -> OrderReport:
    """ρ(t_k) ≤ ρ̃(t_k) + tol cellwise (u ≤ ũ when kinetic) at every snapshot."""
    violation = 0.0
    for a, b in zip(traj, other):
        lower = a.kinetic.values if kinetic else a.density.values
        upper = b.kinetic.values if kinetic else b.density.values
        violation = max(violation, float((lower - upper).max(initial=-np.inf)))
    passed = violation <= tol
    logger.info(f"Check comparison: passed={passed}, max violation {violation:.3e}")
    return OrderReport(
        name="kinetic_comparison" if kinetic else "comparison",
        max_violation=violation,
        tolerance=tol,
        passed=bool(passed),
        n_snapshots=len(traj),
    )


def check_linf_bound(traj: Trajectory, forcing: ForcingModel, slack: float = 0.0) -> BoundReport:
    """‖ρ(t)‖∞ ≤ exp(∫₀ᵗ‖[∂ᵥA]⁺‖)·‖ρ₀‖∞ + Δv."""
    values = [snapshot.density.linf_norm() for snapshot in traj]
    dv = traj.velocity.dv if traj.velocity is not None else 0.0
    bound = [math.exp(forcing.growth_exponent(0.0, t)) * values[0] + dv for t in traj.times]
    return _bound_report("linf", traj.times, values, bound, slack, 1e-12, details={"dv": dv})


def check_sign_preservation(traj: Trajectory, tol: float = 1e-12) -> OrderReport:
    """ρ₀ ≥ 0 implies ρ(t) ≥ -tol and, for kinetic snapshots, u ≥ -tol."""
    violation = 0.0
    for snapshot in traj:
        violation = max(violation, float(-snapshot.density.values.min()))
        if snapshot.kinetic is not None:
            violation = max(violation, float(-snapshot.kinetic.values.min()))
    return OrderReport(
        name="sign",
        max_violation=violation,
        tolerance=tol,
        passed=bool(violation <= tol),
        n_snapshots=len(traj),
    )


def check_decay(
    source,
    forcing: ForcingModel,
    p: str = "1",
    slack: float = 1e-6,
    atol: float = 1e-12,
    alpha: float = None,
    r1: float = None,
) -> BoundReport:
    """‖ρ(t)‖_p ≤ exp(∫₀ᵗξ)·‖ρ₀‖_p for A = ξ(t)v, plus the power-law slope on (r₁, T].

    `source` is a Trajectory or the EnsembleStats of a noisy run.
    """
    if p not in ("1", "inf"):
        raise ConfigError(description=f"decay norm must be '1' or 'inf', got {p}", errors={"p": [p]})
    if isinstance(source, EnsembleStats):
        times = np.asarray(source.times)
        norms = np.asarray(source.mean_l1 if p == "1" else source.mean_linf)
    else:
        times = source.times
        norms = np.array([s.density.l1_norm() if p == "1" else s.density.linf_norm() for s in source])
    bound = norms[0] * np.exp([forcing.rate_integral(0.0, t) for t in times])

    details = {"p": p}
    rates = np.array([forcing.rate(t) for t in times])
    if rates.size and rates.max() < 0:
        details["classification"] = "exponential"
        details["exponential_rate"] = float(-rates.max())
    elif rates.size and np.all(rates == 0):
        details["classification"] = "contraction"
    else:
        details["classification"] = "algebraic" if alpha is not None else "envelope"

    report = _bound_report(f"decay_l{p}", times, norms, bound, slack, atol, details)
    if alpha is not None and r1 is not None:
        slope = decay_exponent(times, norms, t_min=r1)
        slope_passed = bool(slope <= -alpha + 0.1 * alpha)
        report.details.update({"slope": slope, "alpha": alpha, "r1": r1, "slope_passed": slope_passed})
        report.passed = report.passed and slope_passed
        logger.info(f"Decay slope on ({r1}, {times[-1]}]: {slope:.4f} against -{alpha}")
    return report


def translate_density(rho: DensityField, cells: int = 1) -> DensityField:
    """ρ(· - cells·Δx) with zeros shifted in."""
    values = np.zeros_like(rho.values)
    if cells >= 0:
        values[cells:] = rho.values[: rho.values.size - cells]
    else:
        values[:cells] = rho.values[-cells:]
    return DensityField(space=rho.space, values=values)


def check_translation(config: SolverConfig, rho0: DensityField, cells: int = 1) -> BoundReport:
    """Distance between the solution and the solution of the translated data stays within the growth factor."""
    base = run(config, rho0, label="translation-base")
    moved = run(config, translate_density(rho0, cells), label="translation-shifted")
    report = check_contraction_pair(base, moved, config.forcing)
    report.name = "translation"
    report.details["cells"] = cells
    return report


def check_shift_equivalence(
    deterministic: Trajectory, path: Trajectory, mode: str = "conservative", tol: float = 1e-10
) -> ResidualReport:
    """Per-snapshot norm gaps between a shifted path and the deterministic run it was built from.

    Mass is kept by both shift modes. "nearest" also keeps L¹ and L∞ exactly. Linear
    interpolation ("conservative") keeps L¹ only for single-signed densities and can
    only lower either norm, so there just growth counts as a gap.
    """
    if mode not in SHIFT_MODES:
        raise ConfigError(description=f"unknown shift mode {mode}", errors={"mode": [f"expected one of {SHIFT_MODES}"]})
    det, moved = deterministic.densities, path.densities
    if det.shape != moved.shape:
        raise ConfigError(
            description="shift equivalence needs trajectories on the same snapshots",
            errors={"path": [f"shape {moved.shape} against {det.shape}"]},
        )
    dx = deterministic.space.dx
    mass = np.abs(moved.sum(axis=1) - det.sum(axis=1)) * dx
    l1_gap = (np.abs(moved).sum(axis=1) - np.abs(det).sum(axis=1)) * dx
    linf_gap = np.abs(moved).max(axis=1, initial=0.0) - np.abs(det).max(axis=1, initial=0.0)
    single_signed = det.min(initial=0.0) >= -tol or det.max(initial=0.0) <= tol
    if mode == "nearest":
        l1_gap, linf_gap = np.abs(l1_gap), np.abs(linf_gap)
    else:
        l1_gap = np.abs(l1_gap) if single_signed else np.maximum(l1_gap, 0.0)
        linf_gap = np.maximum(linf_gap, 0.0)
    residuals = np.max(np.stack([mass, l1_gap, linf_gap]), axis=0)
    max_abs = float(residuals.max(initial=0.0))
    report = ResidualReport(
        name=f"shift_equivalence_{mode}",
        residuals=[float(value) for value in residuals],
        max_abs=max_abs,
        tol=tol,
        passed=max_abs <= tol,
    )
    logger.info(f"Check {report.name}: passed={report.passed}, max gap {max_abs:.3e}, single-signed {single_signed}")
    return report


def check_defect_field(traj: Trajectory, tol: float = 1e-10) -> BoundReport:
    """Every recorded m_ε ≥ -tol and its last edge value (∫(χ_ρ - u)dv / ε) vanishes."""
    lowest = [float(snapshot.defect.values.min()) for snapshot in traj]
    closing = [float(np.abs(snapshot.defect.values[:, -1]).max()) for snapshot in traj]
    negative = [max(0.0, -value) for value in lowest]
    report = _bound_report(
        "defect",
        traj.times,
        np.maximum(negative, closing),
        np.full(len(traj), tol),
        0.0,
        0.0,
        details={"min_value": min(lowest), "max_closing": max(closing)},
    )
    return report


def check_defect_budget(traj: Trajectory, forcing: ForcingModel) -> BoundReport:
    """∫₀ᵀ∫∫ m_ε ≤ 4K²‖ρ₀‖₁ + (1 + 2K)∫₀ᵀ‖∂ᵥA‖∫∫|u|, K the velocity band bound."""
    times = traj.times
    dx, dv = traj.space.dx, traj.velocity.dv
    K = traj.velocity.v_max
    totals = np.array([snapshot.defect.total() for snapshot in traj])
    kinetic_l1 = np.array([float(np.abs(snapshot.kinetic.values).sum() * dx * dv) for snapshot in traj])
    lipschitz = np.array([forcing.lipschitz_bound(t) for t in times])
    measured = float(trapezoid(totals, times)) if times.size > 1 else 0.0
    forcing_part = float(trapezoid(lipschitz * kinetic_l1, times)) if times.size > 1 else 0.0
    claimed = 4.0 * K**2 * traj[0].density.l1_norm() + (1.0 + 2.0 * K) * forcing_part
    return _bound_report(
        "defect_budget",
        [times[-1]],
        [measured],
        [claimed],
        0.0,
        0.0,
        details={"eps": traj.eps, "K": K},
    )


# Convergence


def convergence_study(
    flux: FluxModel,
    profile,
    eps_list,
    nx_list,
    domain: tuple,
    t_final: float,
    forcing: ForcingModel = None,
    n_v: int = 64,
    boundary: str = "extrapolate",
    exact=None,
    reference_factor: int = 4,
    cfl_target: float = 0.9,
    noise_tolerance: float = 0.1,
) -> ConvergenceReport:
    """L¹ errors of BGK runs along a simultaneous refinement of (Δx, ε).

    The reference is exact(x, t) at the cell centers when given, otherwise a
    Godunov run on a grid `reference_factor` times finer, averaged back.
    """
    forcing = forcing or zero_forcing()
    eps_list = list(eps_list) * (len(nx_list) if len(eps_list) == 1 else 1)
    if len(eps_list) != len(nx_list):
        raise ConfigError(description="eps_list and nx_list must pair up", errors={"eps_list": ["length mismatch"]})

    rows = []
    for nx, eps in zip(nx_list, eps_list):
        space = SpaceGrid(domain[0], domain[1], nx)
        rho0 = DensityField.from_function(space, profile)
        velocity = velocity_grid_for(rho0.linf_norm(), forcing, t_final, n_v)
        config = SolverConfig(
            space=space,
            velocity=velocity,
            flux=flux,
            forcing=forcing,
            eps=eps,
            t_final=t_final,
            cfl_target=cfl_target,
            boundary=boundary,
            keep_kinetic=False,
            record_every=10**9,
        )
        final = run(config, rho0, label=f"convergence nx={nx}").final.density.values
        if exact is not None:
            reference = exact(space.centers, t_final)
        else:
            fine_space = SpaceGrid(domain[0], domain[1], nx * reference_factor)
            fine = godunov_reference(
                flux,
                forcing,
                DensityField.from_function(fine_space, profile),
                t_final=t_final,
                boundary=boundary,
                record_every=10**9,
            )
            reference = fine.final.density.values.reshape(nx, reference_factor).mean(axis=1)
        rows.append(
            {
                "nx": nx,
                "eps": eps,
                "dx": space.dx,
                "dt": config.time_grid[1],
                "error": l1_distance(final, reference, space.dx),
            }
        )

    table = pd.DataFrame(rows)
    table["ratio"] = table["error"].shift(1) / table["error"]
    errors = table["error"].to_numpy()
    monotone = bool(np.all(errors[1:] <= errors[:-1] * (1.0 + noise_tolerance)))
    if not monotone:
        logger.warning(f"Non-monotone convergence table: {errors.tolist()}")
    logger.info(f"Convergence study {flux.name}: errors {[f'{e:.3e}' for e in errors]}")
    return ConvergenceReport(table=table, monotone=monotone)
