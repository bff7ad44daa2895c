"""Mild-form fixed-point map of the BGK equation, used to cross-check the splitting solver.

Along backward characteristics the BGK equation integrates to

    u(t, x, v) = e^{-t/ε} χ_{ρ₀}(X_{t,0}, V_{t,0})
               + ∫₀ᵗ (1/ε) e^{(s-t)/ε} χ_{ρᵘ(s, X_{t,s})}(V_{t,s}) ds,

and the right-hand side, read as a map of u, contracts in C([0, T]; L¹) with factor
1 - e^{-T/ε}. Its cost grows with the square of the number of time levels, so it is
meant for small grids only.
"""

import logging
from collections import namedtuple

import numpy as np

from .characteristics import inverse_flow
from .errors import ConfigError
from .kinetic import DensityField, KineticField, chi_cell_average, project_density

logger = logging.getLogger("app." + __name__)

PicardHistory = namedtuple("PicardHistory", ["iterates", "increments"])


def kernel_weights(times: np.ndarray, k: int, eps: float) -> np.ndarray:
    """Weights w_l with Σ w_l g(s_l) = ∫₀^{t_k} (1/ε)e^{(s - t_k)/ε} g(s) ds for piecewise-linear g."""
    weights = np.zeros(k + 1)
    t = times[k]
    for left in range(k):
        a, b = times[left], times[left + 1]
        e_a, e_b = np.exp((a - t) / eps), np.exp((b - t) / eps)
        whole = e_b - e_a
        ramp = e_b - (eps / (b - a)) * whole
        weights[left + 1] += ramp
        weights[left] += whole - ramp
    return weights


def _shift_columns(columns: np.ndarray, offsets: np.ndarray, dx: float, boundary: str) -> np.ndarray:
    """Evaluate every column j at x_i + offsets[j] by linear interpolation between cell centers."""
    nx = columns.shape[0]
    position = np.arange(nx)[:, np.newaxis] + offsets[np.newaxis, :] / dx
    lower = np.floor(position).astype(int)
    fraction = position - lower
    upper = lower + 1
    rows = np.arange(columns.shape[1])[np.newaxis, :]
    if boundary == "extrapolate":
        left_values = columns[np.clip(lower, 0, nx - 1), rows]
        right_values = columns[np.clip(upper, 0, nx - 1), rows]
    else:
        left_values = np.where((lower >= 0) & (lower < nx), columns[np.clip(lower, 0, nx - 1), rows], 0.0)
        right_values = np.where((upper >= 0) & (upper < nx), columns[np.clip(upper, 0, nx - 1), rows], 0.0)
    return (1.0 - fraction) * left_values + fraction * right_values


def _equilibrium_along(rho: np.ndarray, t: float, s: float, config) -> np.ndarray:
    """χ_{ρ(s, X_{t,s}(xᵢ, v))} averaged over the backward image of every velocity cell."""
    model = (config.flux, config.forcing)
    vgrid = config.velocity
    h_char = max(t - s, 1e-300) / config.char_substeps
    feet = np.asarray(inverse_flow(model, s, t, 0.0, vgrid.edges, h_char=h_char).V)
    offsets = np.asarray(inverse_flow(model, s, t, 0.0, vgrid.centers, h_char=h_char).X)
    rows = chi_cell_average(rho[:, np.newaxis], feet[np.newaxis, :-1], feet[np.newaxis, 1:])
    return _shift_columns(np.asarray(rows), offsets, config.space.dx, config.boundary)


def picard_map(u_in, config, rho0: DensityField) -> list:
    """Apply S_ε to a trajectory given on the solver time grid t_k = k·dt."""
    n_steps, dt = config.time_grid
    if len(u_in) != n_steps + 1:
        raise ConfigError(
            description=f"picard_map needs {n_steps + 1} time levels, got {len(u_in)}",
            errors={"u_in": ["length must match the solver time grid"]},
        )
    times = dt * np.arange(n_steps + 1)
    densities = [config.velocity.dv * np.asarray(u.values).sum(axis=1) for u in u_in]
    logger.debug(f"Picard map over {n_steps + 1} time levels on {config.space.n_cells}x{config.velocity.n_cells}")

    output = []
    for k, t in enumerate(times):
        values = np.exp(-t / config.eps) * _equilibrium_along(rho0.values, t, 0.0, config)
        for level, weight in enumerate(kernel_weights(times, k, config.eps)):
            if weight != 0.0:
                values = values + weight * _equilibrium_along(densities[level], t, times[level], config)
        output.append(KineticField(space=config.space, velocity=config.velocity, values=values))
    return output


def sup_l1_distance(first, second) -> float:
    """max over time levels of ∫∫|u - ũ| dx dv."""
    return max(
        float(np.abs(a.values - b.values).sum() * a.space.dx * a.velocity.dv) for a, b in zip(first, second)
    )


def picard_iterate(config, rho0: DensityField, n_iter: int, u_start=None) -> PicardHistory:
    """Iterate S_ε from u_start (frozen initial data by default), recording sup-L¹ increments."""
    if n_iter < 1:
        raise ConfigError(description="n_iter must be at least 1", errors={"n_iter": [f"got {n_iter}"]})
    n_steps, _ = config.time_grid
    if u_start is None:
        u_start = [project_density(rho0, config.velocity)] * (n_steps + 1)
    iterates = [list(u_start)]
    increments = []
    for _ in range(n_iter):
        iterates.append(picard_map(iterates[-1], config, rho0))
        increments.append(sup_l1_distance(iterates[-1], iterates[-2]))
    logger.info(f"Picard iteration: {n_iter} sweeps, last increment {increments[-1]:.3e}")
    return PicardHistory(iterates=iterates, increments=increments)
