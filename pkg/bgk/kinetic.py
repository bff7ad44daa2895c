"""Kinetic representation of a scalar density by the signed indicator χ.

A density value ρ is lifted to the velocity profile χ_ρ(v), equal to 1 on (0, ρ),
to -1 on (ρ, 0) and to 0 elsewhere, so that ∫χ_ρ dv = ρ. Fields are stored as
exact cell averages of χ on a tensor grid, which keeps ∫χ dv = ρ and
∫[χ_a - χ_b]⁺ dv = [a - b]⁺ exact up to rounding.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, NegativeDefect, SupportOverflow

logger = logging.getLogger("app." + __name__)

_EDGE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform velocity cells on [v_min, v_max] with v = 0 on a cell edge."""

    v_min: float
    v_max: float
    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells <= 0:
            raise ConfigError(
                description="velocity.n_cells must be a positive integer",
                errors={"n_cells": [f"got {self.n_cells}"]},
            )
        if not self.v_min < 0.0 < self.v_max:
            raise ConfigError(
                description="velocity grid must straddle zero (v_min < 0 < v_max)",
                errors={"v_min": [f"got {self.v_min}"], "v_max": [f"got {self.v_max}"]},
            )
        offset = -self.v_min / self.dv
        if abs(offset - round(offset)) > _EDGE_TOLERANCE:
            raise ConfigError(
                description="velocity grid must place v = 0 on a cell edge",
                errors={"n_cells": [f"zero falls at fractional edge index {offset}"]},
            )

    @classmethod
    def symmetric(cls, bound: float, n_cells: int) -> "VelocityGrid":
        if n_cells % 2:
            raise ConfigError(
                description="symmetric velocity grid needs an even number of cells",
                errors={"n_cells": [f"got {n_cells}"]},
            )
        return cls(v_min=-bound, v_max=bound, n_cells=n_cells)

    @property
    def dv(self) -> float:
        return (self.v_max - self.v_min) / self.n_cells

    @property
    def zero_edge(self) -> int:
        """Index of the edge sitting at v = 0."""
        return int(round(-self.v_min / self.dv))

    @cached_property
    def edges(self) -> np.ndarray:
        edges = self.dv * (np.arange(self.n_cells + 1) - self.zero_edge)
        edges.setflags(write=False)
        return edges

    @cached_property
    def centers(self) -> np.ndarray:
        centers = 0.5 * (self.edges[:-1] + self.edges[1:])
        centers.setflags(write=False)
        return centers


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform spatial cells on [x_min, x_max]."""

    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells <= 0:
            raise ConfigError(
                description="space.n_cells must be a positive integer",
                errors={"n_cells": [f"got {self.n_cells}"]},
            )
        if not self.x_max > self.x_min:
            raise ConfigError(
                description="space grid needs x_min < x_max",
                errors={"x_max": [f"got {self.x_max} <= {self.x_min}"]},
            )

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @cached_property
    def edges(self) -> np.ndarray:
        edges = self.x_min + self.dx * np.arange(self.n_cells + 1)
        edges.setflags(write=False)
        return edges

    @cached_property
    def centers(self) -> np.ndarray:
        centers = self.x_min + self.dx * (np.arange(self.n_cells) + 0.5)
        centers.setflags(write=False)
        return centers


def _frozen(values, shape: tuple, label: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.shape != shape:
        raise ConfigError(
            description=f"{label} has shape {array.shape}, expected {shape}",
        )
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class KineticField:
    """Cell averages u[i, j] of u(t, x, v) over cell (x_i, v_j)."""

    space: SpaceGrid
    velocity: VelocityGrid
    values: np.ndarray

    def __post_init__(self):
        shape = (self.space.n_cells, self.velocity.n_cells)
        object.__setattr__(self, "values", _frozen(self.values, shape, "kinetic field"))

    def satisfies_invariants(self, tol: float = 1e-12) -> bool:
        """|u| <= 1, u in [0, 1] at positive velocities, u in [-1, 0] at negative ones."""
        positive = self.velocity.centers > 0
        upper = self.values[:, positive]
        lower = self.values[:, ~positive]
        return bool(
            upper.min(initial=0.0) >= -tol
            and upper.max(initial=0.0) <= 1.0 + tol
            and lower.max(initial=0.0) <= tol
            and lower.min(initial=0.0) >= -1.0 - tol
        )

    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum() * self.space.dx * self.velocity.dv)


@dataclass(frozen=True, eq=False)
class DensityField:
    """Cell averages ρ[i] of the density."""

    space: SpaceGrid
    values: np.ndarray

    def __post_init__(self):
        shape = (self.space.n_cells,)
        object.__setattr__(self, "values", _frozen(self.values, shape, "density field"))

    @classmethod
    def from_function(cls, space: SpaceGrid, profile) -> "DensityField":
        return cls(space=space, values=profile(space.centers))

    def mass(self) -> float:
        return float(self.values.sum() * self.space.dx)

    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum() * self.space.dx)

    def linf_norm(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class DefectField:
    """Defect measure m_ε sampled at the velocity edges of every spatial cell."""

    space: SpaceGrid
    velocity: VelocityGrid
    values: np.ndarray
    eps: float

    def __post_init__(self):
        shape = (self.space.n_cells, self.velocity.n_cells + 1)
        object.__setattr__(self, "values", _frozen(self.values, shape, "defect field"))

    def total(self) -> float:
        """Discrete ∫∫ m_ε dx dv."""
        return float(self.values.sum() * self.space.dx * self.velocity.dv)

    def v_derivative(self) -> np.ndarray:
        """∂ᵥm per velocity cell, equal to (χ_ρ - u)/ε."""
        return np.diff(self.values, axis=1) / self.velocity.dv


def chi(rho, v):
    """Signed indicator χ_ρ(v); zero at v = 0 and v = ρ."""
    rho = np.asarray(rho, dtype=float)
    v = np.asarray(v, dtype=float)
    inside = (0.0 < v) & (v < rho)
    inside_negative = (rho < v) & (v < 0.0)
    return np.where(inside, 1.0, np.where(inside_negative, -1.0, 0.0))[()]


def chi_cell_average(rho, v_lo, v_hi):
    """Average of χ_ρ over (v_lo, v_hi): signed overlap of (min(0,ρ), max(0,ρ)) per width."""
    rho = np.asarray(rho, dtype=float)
    v_lo = np.asarray(v_lo, dtype=float)
    v_hi = np.asarray(v_hi, dtype=float)
    lo = np.maximum(np.minimum(rho, 0.0), v_lo)
    hi = np.minimum(np.maximum(rho, 0.0), v_hi)
    overlap = np.clip(hi - lo, 0.0, None)
    return (np.sign(rho) * overlap / (v_hi - v_lo))[()]


def equilibrium_rows(rho: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """Rows of cell-averaged χ for every entry of rho, scaled by the uniform Δv.

    Values beyond the band are truncated; callers that need the support check use
    project_density.
    """
    rho = np.asarray(rho, dtype=float)[..., np.newaxis]
    edges = vgrid.edges
    lo = np.maximum(np.minimum(rho, 0.0), edges[:-1])
    hi = np.minimum(np.maximum(rho, 0.0), edges[1:])
    overlap = np.clip(hi - lo, 0.0, None)
    return np.clip(np.sign(rho) * overlap / vgrid.dv, -1.0, 1.0)


def check_support(rho: np.ndarray, vgrid: VelocityGrid):
    rho = np.asarray(rho, dtype=float)
    if rho.size and (rho.max() >= vgrid.v_max or rho.min() <= vgrid.v_min):
        raise SupportOverflow(
            description=f"density range [{rho.min():.6g}, {rho.max():.6g}] does not fit "
            f"the velocity band ({vgrid.v_min:.6g}, {vgrid.v_max:.6g})",
        )


def project_density(rho_field: DensityField, vgrid: VelocityGrid) -> KineticField:
    """Lift a density to its kinetic equilibrium χ_ρ, cell averaged."""
    check_support(rho_field.values, vgrid)
    return KineticField(
        space=rho_field.space,
        velocity=vgrid,
        values=equilibrium_rows(rho_field.values, vgrid),
    )


def reconstruct_density(u: KineticField) -> DensityField:
    """ρ[i] = Δv Σⱼ u[i, j]."""
    return DensityField(space=u.space, values=u.velocity.dv * u.values.sum(axis=1))


def chi_positive_distance(a: float, b: float, vgrid: VelocityGrid) -> float:
    """Δv-weighted positive part of χ_a - χ_b; equals max(a - b, 0)."""
    difference = equilibrium_rows(a, vgrid) - equilibrium_rows(b, vgrid)
    return float(vgrid.dv * np.clip(difference, 0.0, None).sum())


def defect_measure(u: KineticField, eps: float, tol: float = 1e-10) -> DefectField:
    """m_ε(v) = (1/ε) ∫_{-∞}^v (χ_ρ - u) dr at the velocity edges, ρ reconstructed from u."""
    if not eps > 0:
        raise ConfigError(description="eps must be positive", errors={"eps": [f"got {eps}"]})
    vgrid = u.velocity
    rho = reconstruct_density(u).values
    difference = equilibrium_rows(rho, vgrid) - u.values
    scale = vgrid.dv / eps
    values = np.zeros((u.space.n_cells, vgrid.n_cells + 1))
    values[:, 1:] = scale * np.cumsum(difference, axis=1)
    magnitude = scale * max(1.0, float(np.abs(difference).sum(axis=1).max(initial=0.0)))
    if (lowest := float(values.min(initial=0.0))) < -tol * magnitude:
        cell = np.unravel_index(int(values.argmin()), values.shape)
        raise NegativeDefect(
            description=f"defect measure reaches {lowest:.3e} at cell {cell}",
        )
    return DefectField(space=u.space, velocity=vgrid, values=values, eps=eps)
