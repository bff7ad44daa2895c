import sys
import os

import numpy as np
import pytest as pytest

path = os.path.join(
    os.path.abspath(os.path.dirname(os.path.dirname(__file__))),
)

sys.path.append(path)

from bgk import (  # noqa
    DensityField,
    SolverConfig,
    SpaceGrid,
    burgers_flux,
    linear_decay_forcing,
    run,
    velocity_grid_for,
    zero_forcing,
)
from tests.utils import bump  # noqa


@pytest.fixture(scope="module")
def shock_space() -> SpaceGrid:
    return SpaceGrid(-1.0, 2.0, 200)


@pytest.fixture(scope="module")
def shock_rho0(shock_space) -> DensityField:
    return DensityField.from_function(shock_space, lambda x: np.where(x < 0.0, 1.0, 0.0))


@pytest.fixture(scope="module")
def shock_config(shock_space, shock_rho0) -> SolverConfig:
    return SolverConfig(
        space=shock_space,
        velocity=velocity_grid_for(shock_rho0.linf_norm(), zero_forcing(), 0.5, 64),
        flux=burgers_flux(),
        forcing=zero_forcing(),
        eps=2e-3,
        t_final=0.5,
        boundary="extrapolate",
    )


@pytest.fixture(scope="module")
def shock_trajectory(shock_config, shock_rho0):
    yield run(shock_config, shock_rho0, label="burgers-shock")


@pytest.fixture(scope="module")
def bump_space() -> SpaceGrid:
    return SpaceGrid(-1.0, 2.0, 120)


@pytest.fixture(scope="module")
def bump_rho0(bump_space) -> DensityField:
    return DensityField.from_function(bump_space, bump(0.0, 0.4, 0.8))


@pytest.fixture(scope="module")
def growth_config(bump_space, bump_rho0) -> SolverConfig:
    forcing = linear_decay_forcing(1.0, name="linear_growth")
    return SolverConfig(
        space=bump_space,
        velocity=velocity_grid_for(1.0, forcing, 1.0, 32),
        flux=burgers_flux(),
        forcing=forcing,
        eps=1e-2,
        t_final=1.0,
    )


@pytest.fixture(scope="module")
def growth_trajectory(growth_config, bump_rho0):
    yield run(growth_config, bump_rho0, label="burgers-growth")
