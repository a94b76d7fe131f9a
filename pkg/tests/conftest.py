import numpy as np
import pytest

from ibl_sbp import BoundarySpec, SbpSatScheme, build_grid, make_operators, solve_blasius
from ibl_sbp.boundary import default_specs


@pytest.fixture(scope="session")
def blasius_table():
    return solve_blasius()


def make_scheme(N=8, M=None, s=1, beta=None, alpha=0.0, mu=0.01, specs=None,
                domain=(0.0, 1.0, 0.0, 1.0)):
    M = N if M is None else M
    grid = build_grid(domain, N, M, beta=beta, s=s)
    ops = make_operators(grid, s)
    return SbpSatScheme(grid, ops, specs or default_specs(alpha=alpha), mu)


def zero_specs(alpha=0.0):
    return {
        "south": BoundarySpec("south", "no_slip", (0.0, 0.0)),
        "north": BoundarySpec("north", "robin_neumann_top", (0.0, 0.0), alpha=alpha),
        "west": BoundarySpec("west", "inflow_velocity", (0.0,)),
        "east": BoundarySpec("east", "pressure_outlet", (0.0,)),
    }


def random_state(scheme, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return scale * rng.standard_normal(scheme.size)
