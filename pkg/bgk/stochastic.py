"""Transport noise ∂ₓρ∘Ṁ with M(t) = ∫₀ᵗσ dW, realised as a random spatial shift.

With σ deterministic the noise only translates the solution: if ũ solves the
deterministic BGK problem then u(t, x, v) = ũ(t, x - M(t), v) solves the noisy one.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, SupportOverflow
from .kinetic import DefectField, DensityField, KineticField, project_density
from .solver import SolverConfig, Trajectory, advance, record_snapshot, run

logger = logging.getLogger("app." + __name__)

SHIFT_MODES = ("conservative", "nearest")


@dataclass(frozen=True, eq=False)
class WienerPath:
    """W(t_k) on t_k = k·dt_path, rebuilt bit-exactly from (seed, dt_path, n_steps)."""

    seed: int
    dt_path: float
    samples: np.ndarray

    @classmethod
    def sample(cls, seed: int, dt_path: float, n_steps: int) -> "WienerPath":
        rng = np.random.default_rng(seed)
        increments = rng.normal(0.0, math.sqrt(dt_path), n_steps)
        samples = np.concatenate([[0.0], np.cumsum(increments)])
        samples.setflags(write=False)
        return cls(seed=seed, dt_path=dt_path, samples=samples)

    @property
    def n_steps(self) -> int:
        return self.samples.size - 1

    @cached_property
    def times(self) -> np.ndarray:
        return self.dt_path * np.arange(self.samples.size)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.samples)


@dataclass(frozen=True, eq=False)
class ShiftPath:
    """M(t_k) = Σ_{l<k} σ(t_l)(W(t_{l+1}) - W(t_l)), the left-point Itô sum."""

    wiener: WienerPath
    values: np.ndarray
    noise_name: str = ""

    @property
    def times(self) -> np.ndarray:
        return self.wiener.times

    def at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))

    def max_abs(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))


@dataclass
class EnsembleStats:
    n_paths: int
    base_seed: int
    times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    mean_l1: np.ndarray
    mean_linf: np.ndarray
    decay_exponents: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_paths < 1:
            raise ConfigError(description="n_paths must be at least 1", errors={"n_paths": [f"got {self.n_paths}"]})


def _path_steps(dt_path: float, t_final: float) -> int:
    if t_final == 0:
        return 0
    if not dt_path > 0:
        raise ConfigError(description="dt_path must be positive", errors={"dt_path": [f"got {dt_path}"]})
    n_steps = round(t_final / dt_path)
    if n_steps < 1 or abs(n_steps * dt_path - t_final) > 1e-9 * max(1.0, t_final):
        raise ConfigError(
            description=f"dt_path={dt_path} does not divide t_final={t_final}",
            errors={"dt_path": ["must divide t_final"]},
        )
    return n_steps


def sample_shift(noise, seed: int, dt_path: float, t_final: float) -> ShiftPath:
    wiener = WienerPath.sample(seed, dt_path, _path_steps(dt_path, t_final))
    sigma = np.asarray(noise.sigma(wiener.times[:-1]), dtype=float)
    values = np.concatenate([[0.0], np.cumsum(sigma * wiener.increments)])
    values.setflags(write=False)
    return ShiftPath(wiener=wiener, values=values, noise_name=noise.name)


def cross_variation(noise, shift: ShiftPath) -> float:
    """Stratonovich minus Itô value of M(T): ½ Σ (σ(t_{k+1}) - σ(t_k))(W(t_{k+1}) - W(t_k)).

    Zero for constant σ and O(dt_path) for smooth deterministic σ, so both
    integrals define the same shift in the limit.
    """
    sigma = np.asarray(noise.sigma(shift.times), dtype=float)
    return float(0.5 * np.sum(np.diff(sigma) * shift.wiener.increments))


def shift_cells(
    values: np.ndarray,
    shift: float,
    dx: float,
    boundary: str = "zero_inflow",
    mode: str = "conservative",
    tol: float = 1e-10,
) -> np.ndarray:
    """Translate cell data along axis 0 by `shift` (new[i] ≈ old at x_i - shift).

    "conservative" interpolates linearly between the two covering cells, which keeps
    mass and order; "nearest" moves by the closest whole number of cells and is an
    isometry in every norm.
    """
    if mode not in SHIFT_MODES:
        raise ConfigError(description=f"unknown shift mode {mode}", errors={"mode": [f"expected one of {SHIFT_MODES}"]})
    values = np.asarray(values, dtype=float)
    ratio = shift / dx
    whole = int(round(ratio)) if mode == "nearest" else math.floor(ratio)
    fraction = 0.0 if mode == "nearest" else ratio - whole
    if whole == 0 and fraction == 0.0:
        return values.copy()

    reach = abs(whole) if mode == "nearest" else math.ceil(abs(ratio))
    if boundary == "zero_inflow" and reach:
        leaving = values[-reach:] if shift > 0 else values[:reach]
        if (lost := float(np.abs(leaving).max(initial=0.0))) > tol:
            raise SupportOverflow(
                description=f"shift by {shift:.4g} pushes |u| = {lost:.3e} outside the spatial grid",
            )

    pad = abs(whole) + 1
    widths = [(pad, pad)] + [(0, 0)] * (values.ndim - 1)
    padded = np.pad(values, widths, mode="edge" if boundary == "extrapolate" else "constant")
    index = np.arange(values.shape[0]) + pad - whole
    if fraction == 0.0:
        return padded[index]
    return (1.0 - fraction) * padded[index] + fraction * padded[index - 1]


def _shift_snapshot(snapshot, shift: float, config: SolverConfig, mode: str):
    dx = config.space.dx

    def move(array):
        return shift_cells(array, shift, dx, config.boundary, mode, config.support_tol)

    density = DensityField(space=config.space, values=move(snapshot.density.values))
    kinetic = None
    if snapshot.kinetic is not None:
        kinetic = KineticField(space=config.space, velocity=config.velocity, values=move(snapshot.kinetic.values))
    defect = None
    if snapshot.defect is not None:
        defect = DefectField(
            space=config.space,
            velocity=config.velocity,
            values=move(snapshot.defect.values),
            eps=snapshot.defect.eps,
        )
    return density, kinetic, defect


def solve_pathwise_shift(
    config: SolverConfig,
    rho0: DensityField,
    shift: ShiftPath,
    deterministic: Trajectory = None,
    mode: str = "conservative",
) -> Trajectory:
    """Shift every snapshot of the deterministic solution by M(t_k).

    Pass `deterministic` to reuse one solve across many paths.
    """
    if deterministic is None:
        deterministic = run(config, rho0)
    trajectory = Trajectory(space=config.space, velocity=config.velocity, eps=config.eps, label="shift")
    for snapshot in deterministic:
        density, kinetic, defect = _shift_snapshot(snapshot, shift.at(snapshot.t), config, mode)
        trajectory.append(snapshot.t, density=density, kinetic=kinetic, defect=defect)
    return trajectory


def solve_pathwise_direct(
    config: SolverConfig,
    rho0: DensityField,
    shift: ShiftPath,
    mode: str = "conservative",
) -> Trajectory:
    """Run the splitting scheme with an extra translation by ΔM after every step.

    ΔM is applied in pieces no longer than Δx; step k only reads M up to t_{k+1}.
    """
    n_steps, dt = config.time_grid
    dx = config.space.dx
    trajectory = Trajectory(space=config.space, velocity=config.velocity, eps=config.eps, label="direct")
    u = project_density(rho0, config.velocity)
    record_snapshot(trajectory, 0.0, u, config)
    for step in range(1, n_steps + 1):
        t = (step - 1) * dt
        u = advance(u, t, dt, config)
        if increment := shift.at(step * dt) - shift.at(t):
            pieces = max(1, math.ceil(abs(increment) / dx))
            values = u.values
            for _ in range(pieces):
                values = shift_cells(values, increment / pieces, dx, config.boundary, mode, config.support_tol)
            u = KineticField(space=config.space, velocity=config.velocity, values=values)
        if step == n_steps:
            record_snapshot(trajectory, config.t_final, u, config)
        elif step % config.record_every == 0:
            record_snapshot(trajectory, step * dt, u, config)
    return trajectory


def decay_exponent(times: np.ndarray, norms: np.ndarray, t_min: float = 0.0) -> float:
    """Least-squares slope of log‖ρ(t)‖ against log t over t > t_min."""
    keep = (times > t_min) & (norms > 0)
    if keep.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(times[keep]), np.log(norms[keep]), 1)
    return float(slope)


def ensemble(
    config: SolverConfig,
    rho0: DensityField,
    noise,
    n_paths: int,
    base_seed: int,
    scheme: str = "shift",
    mode: str = "conservative",
    max_workers: int = None,
) -> EnsembleStats:
    """Monte-Carlo statistics over paths seeded base_seed + k, reduced in path order."""
    if n_paths < 1:
        raise ConfigError(description="n_paths must be at least 1", errors={"n_paths": [f"got {n_paths}"]})
    if scheme not in ("shift", "direct"):
        raise ConfigError(description=f"unknown pathwise scheme {scheme}", errors={"scheme": ["shift or direct"]})
    n_steps, dt = config.time_grid
    dt_path = dt if n_steps else 1.0
    config = config.with_changes(keep_kinetic=False)
    deterministic = run(config, rho0, label="ensemble-base") if scheme == "shift" else None
    logger.info(f"Ensemble of {n_paths} paths ({scheme}, seeds {base_seed}..{base_seed + n_paths - 1})")
    started = time.perf_counter()

    def solve_path(index: int) -> Trajectory:
        shift = sample_shift(noise, base_seed + index, dt_path, config.t_final)
        if scheme == "shift":
            return solve_pathwise_shift(config, rho0, shift, deterministic, mode)
        return solve_pathwise_direct(config, rho0, shift, mode)

    count = 0
    times = mean = second_moment = None
    l1_sum = linf_sum = 0.0
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        for path in executor.map(solve_path, range(n_paths)):
            count += 1
            densities = path.densities
            if mean is None:
                times = path.times
                mean = np.zeros_like(densities)
                second_moment = np.zeros_like(densities)
            delta = densities - mean
            mean = mean + delta / count
            second_moment = second_moment + delta * (densities - mean)
            l1_sum = l1_sum + np.abs(densities).sum(axis=1) * config.space.dx
            linf_sum = linf_sum + np.abs(densities).max(axis=1)

    mean_l1 = l1_sum / n_paths
    mean_linf = linf_sum / n_paths
    stats = EnsembleStats(
        n_paths=n_paths,
        base_seed=base_seed,
        times=times,
        mean=mean,
        variance=np.maximum(second_moment / n_paths, 0.0),
        mean_l1=mean_l1,
        mean_linf=mean_linf,
        decay_exponents={"l1": decay_exponent(times, mean_l1), "linf": decay_exponent(times, mean_linf)},
    )
    logger.info(f"Ensemble finished in {time.perf_counter() - started:.2f}s")
    return stats
