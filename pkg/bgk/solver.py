"""Operator-splitting BGK scheme: upwind transport in x, characteristic remap in v
and exact exponential relaxation toward the local equilibrium χ_ρ.
"""

import logging
import math
import time
from collections import namedtuple
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np
import pandas as pd

from .characteristics import inverse_flow
from .errors import CflViolation, ConfigError, StepOverflow, SupportOverflow
from .kinetic import (
    DensityField,
    KineticField,
    SpaceGrid,
    VelocityGrid,
    defect_measure,
    equilibrium_rows,
    project_density,
    reconstruct_density,
)
from .models import FluxModel, ForcingModel, linear_flux

logger = logging.getLogger("app." + __name__)

BOUNDARIES = ("zero_inflow", "extrapolate")
SPLITTINGS = ("lie", "strang")

_CFL_SLACK = 1e-12
_STILL = linear_flux(0.0)

Snapshot = namedtuple("Snapshot", ["t", "kinetic", "density", "defect"])


@dataclass(frozen=True)
class SolverConfig:
    space: SpaceGrid
    velocity: VelocityGrid
    flux: FluxModel
    forcing: ForcingModel
    eps: float
    t_final: float
    dt: Optional[float] = None
    cfl_target: float = 0.9
    record_every: int = 1
    char_substeps: int = 4
    boundary: str = "zero_inflow"
    splitting: str = "lie"
    keep_kinetic: bool = True
    support_tol: float = 1e-10
    defect_tol: float = 1e-10

    def __post_init__(self):
        errors = {}
        if not self.eps > 0:
            errors["eps"] = [f"must be positive, got {self.eps}"]
        if not self.t_final >= 0:
            errors["t_final"] = [f"must be nonnegative, got {self.t_final}"]
        if self.dt is not None and not self.dt > 0:
            errors["dt"] = [f"must be positive, got {self.dt}"]
        if not 0 < self.cfl_target <= 1:
            errors["cfl_target"] = [f"must lie in (0, 1], got {self.cfl_target}"]
        if int(self.record_every) != self.record_every or self.record_every < 1:
            errors["record_every"] = [f"must be a positive integer, got {self.record_every}"]
        if int(self.char_substeps) != self.char_substeps or self.char_substeps < 1:
            errors["char_substeps"] = [f"must be a positive integer, got {self.char_substeps}"]
        if self.boundary not in BOUNDARIES:
            errors["boundary"] = [f"must be one of {BOUNDARIES}, got {self.boundary}"]
        if self.splitting not in SPLITTINGS:
            errors["splitting"] = [f"must be one of {SPLITTINGS}, got {self.splitting}"]
        if errors:
            raise ConfigError(
                description=f"Invalid solver configuration: {', '.join(sorted(errors))}",
                errors=errors,
            )
        if self.dt is not None and self.dt * self.max_speed / self.space.dx > 1.0 + _CFL_SLACK:
            raise ConfigError(
                description=f"dt={self.dt} violates the CFL condition dt·max|b|/Δx <= 1",
                errors={"dt": [f"largest admissible value is {self.space.dx / self.max_speed:.6g}"]},
            )

    @cached_property
    def max_speed(self) -> float:
        """max|b(vⱼ)| over the velocity cell centers."""
        return self.flux.max_speed(self.velocity.centers)

    @cached_property
    def time_grid(self) -> tuple[int, float]:
        """(n_steps, dt) with n_steps·dt = t_final exactly."""
        if self.t_final == 0:
            return 0, 0.0
        if self.dt is not None:
            target = self.dt
        elif self.max_speed > 0:
            target = self.cfl_target * self.space.dx / self.max_speed
        else:
            return 1, float(self.t_final)
        n_steps = max(1, math.ceil(self.t_final / target - 1e-9))
        dt = self.t_final / n_steps
        if self.dt is not None and not math.isclose(dt, self.dt, rel_tol=1e-12):
            logger.warning(f"dt reduced from {self.dt} to {dt} so that {n_steps} steps reach t_final")
        return n_steps, dt

    def with_changes(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass
class Trajectory:
    """Snapshots in strictly increasing time with their diagnostic series."""

    space: SpaceGrid
    velocity: Optional[VelocityGrid] = None
    eps: Optional[float] = None
    label: str = ""
    snapshots: list = field(default_factory=list)

    def append(self, t: float, density: DensityField, kinetic=None, defect=None):
        if self.snapshots and not t > self.snapshots[-1].t:
            raise ValueError(f"snapshot time {t} does not follow {self.snapshots[-1].t}")
        self.snapshots.append(Snapshot(t=float(t), kinetic=kinetic, density=density, defect=defect))

    def __len__(self):
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    def __getitem__(self, index) -> Snapshot:
        return self.snapshots[index]

    @property
    def times(self) -> np.ndarray:
        return np.array([snapshot.t for snapshot in self.snapshots])

    @property
    def densities(self) -> np.ndarray:
        return np.array([snapshot.density.values for snapshot in self.snapshots])

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def density_at(self, t: float) -> DensityField:
        """Density of the snapshot recorded closest to t."""
        index = int(np.abs(self.times - t).argmin())
        return self.snapshots[index].density

    def norms(self) -> pd.DataFrame:
        """Diagnostic series: mass, L¹, L∞ and total defect per snapshot."""
        return pd.DataFrame(
            {
                "t": self.times,
                "mass": [s.density.mass() for s in self.snapshots],
                "l1": [s.density.l1_norm() for s in self.snapshots],
                "linf": [s.density.linf_norm() for s in self.snapshots],
                "total_defect": [
                    s.defect.total() if s.defect is not None else np.nan for s in self.snapshots
                ],
            }
        )


def step_transport(
    u: KineticField,
    dt: float,
    flux: FluxModel,
    boundary: str = "zero_inflow",
    support_tol: float = 1e-10,
) -> KineticField:
    """First-order upwind advection of every velocity row with speed b(vⱼ)."""
    speeds = flux.eval_b(u.velocity.centers)
    courant = dt * np.asarray(speeds, dtype=float) / u.space.dx
    if (largest := float(np.abs(courant).max(initial=0.0))) > 1.0 + _CFL_SLACK:
        raise CflViolation(description=f"Courant number {largest:.6g} exceeds 1")

    values = u.values
    if boundary == "zero_inflow":
        edge = max(float(np.abs(values[0]).max()), float(np.abs(values[-1]).max()))
        if edge > support_tol:
            raise SupportOverflow(
                description=f"state reached the spatial boundary (|u| = {edge:.3e} in an edge cell)",
            )
        ghost_left = ghost_right = np.zeros((1, values.shape[1]))
    else:
        ghost_left, ghost_right = values[:1], values[-1:]
    padded = np.concatenate([ghost_left, values, ghost_right])

    right_moving = np.maximum(courant, 0.0)
    left_moving = np.minimum(courant, 0.0)
    new = values - right_moving * (values - padded[:-2]) - left_moving * (padded[2:] - values)
    return KineticField(space=u.space, velocity=u.velocity, values=new)


def remap_weights(feet: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """W[j, k] = |[f_j, f_{j+1}] ∩ [e_k, e_{k+1}]| / (f_{j+1} - f_j)."""
    lo = np.maximum(feet[:-1, np.newaxis], edges[np.newaxis, :-1])
    hi = np.minimum(feet[1:, np.newaxis], edges[np.newaxis, 1:])
    overlap = np.clip(hi - lo, 0.0, None)
    return overlap / np.diff(feet)[:, np.newaxis]


def step_forcing(
    u: KineticField,
    t: float,
    dt: float,
    forcing: ForcingModel,
    char_substeps: int = 4,
    support_tol: float = 1e-10,
) -> KineticField:
    """Semi-Lagrangian update of ∂ₜu + A(t, v)∂ᵥu = 0 over [t, t + dt].

    Each new cell takes the average of the old piecewise-constant profile over the
    backward image of the cell, i.e. the v-antiderivative interpolated linearly at
    the characteristic feet of the cell edges.
    """
    if forcing.is_zero or dt == 0:
        return u
    edges = u.velocity.edges
    # jumps of A stay on integration stop boundaries
    stops = [t, *sorted(p for p in forcing.breakpoints if t < p < t + dt), t + dt]
    feet = edges
    for start, end in zip(reversed(stops[:-1]), reversed(stops[1:])):
        feet = inverse_flow((_STILL, forcing), start, end, 0.0, feet, h_char=dt / char_substeps).V
    new = u.values @ remap_weights(np.asarray(feet), edges).T
    edge = max(float(np.abs(new[:, 0]).max()), float(np.abs(new[:, -1]).max()))
    if edge > support_tol:
        raise StepOverflow(
            description=f"velocity content reached the edge of the band ±{u.velocity.v_max:.6g} "
            f"at t = {t + dt:.6g}",
        )
    return KineticField(space=u.space, velocity=u.velocity, values=new)


def step_relax(u: KineticField, dt: float, eps: float) -> KineticField:
    """Exact solution of ∂ₜu = (χ_ρ - u)/ε over dt; ρ is invariant."""
    weight = math.exp(-dt / eps)
    rho = reconstruct_density(u).values
    equilibrium = equilibrium_rows(rho, u.velocity)
    return KineticField(
        space=u.space,
        velocity=u.velocity,
        values=weight * u.values + (1.0 - weight) * equilibrium,
    )


def advance(u: KineticField, t: float, dt: float, config: SolverConfig) -> KineticField:
    """One split step of the BGK scheme from t to t + dt."""

    def transport(state, tau):
        return step_transport(state, tau, config.flux, config.boundary, config.support_tol)

    def force(state, start, tau):
        return step_forcing(state, start, tau, config.forcing, config.char_substeps, config.support_tol)

    if config.splitting == "strang":
        half = 0.5 * dt
        u = force(transport(u, half), t, half)
        u = step_relax(u, dt, config.eps)
        return transport(force(u, t + half, half), half)
    u = force(transport(u, dt), t, dt)
    return step_relax(u, dt, config.eps)


def record_snapshot(trajectory: Trajectory, t: float, u: KineticField, config: SolverConfig):
    trajectory.append(
        t,
        density=reconstruct_density(u),
        kinetic=u if config.keep_kinetic else None,
        defect=defect_measure(u, config.eps, config.defect_tol),
    )


def _warn_on_margin(config: SolverConfig, rho0: DensityField):
    if config.boundary != "zero_inflow":
        return
    occupied = np.flatnonzero(np.abs(rho0.values) > config.support_tol)
    if not occupied.size:
        return
    centers = config.space.centers
    reach = config.max_speed * config.t_final
    if centers[occupied[0]] - reach < config.space.x_min or centers[occupied[-1]] + reach > config.space.x_max:
        logger.warning(
            f"Initial support [{centers[occupied[0]]:.4g}, {centers[occupied[-1]]:.4g}] lies within "
            f"max|b|·t_final = {reach:.4g} of the domain boundary"
        )


def run(config: SolverConfig, rho0: DensityField, label: str = "") -> Trajectory:
    """Solve the BGK Cauchy problem from u(0) = χ_{ρ₀}."""
    if rho0.space != config.space:
        raise ConfigError(description="initial density lives on a different space grid")
    n_steps, dt = config.time_grid
    logger.info(
        f"BGK run {label or config.flux.name}: Nx={config.space.n_cells}, Nv={config.velocity.n_cells}, "
        f"eps={config.eps:g}, steps={n_steps}, dt={dt:.4g}, splitting={config.splitting}"
    )
    _warn_on_margin(config, rho0)
    started = time.perf_counter()

    trajectory = Trajectory(space=config.space, velocity=config.velocity, eps=config.eps, label=label)
    u = project_density(rho0, config.velocity)
    record_snapshot(trajectory, 0.0, u, config)
    for step in range(1, n_steps + 1):
        u = advance(u, (step - 1) * dt, dt, config)
        if step == n_steps:
            record_snapshot(trajectory, config.t_final, u, config)
        elif step % config.record_every == 0:
            record_snapshot(trajectory, step * dt, u, config)

    logger.info(f"BGK run finished: {len(trajectory)} snapshots in {time.perf_counter() - started:.2f}s")
    return trajectory
