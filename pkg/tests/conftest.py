"""Shared fixtures. Geometry is expensive (Lloyd sweeps, mesh generation),
so everything here is session-scoped and read-only: tests must not mutate
the returned objects."""
import numpy as np
import pytest

from nfrbf.geometry import delaunay, gen_nodes_square, gen_nodes_torus_spiral, gen_sphere_icosahedral
from nfrbf.interpolate import PhsSpec, PolySpec
from nfrbf.quad_flat import flat_rule
from nfrbf.quad_surface import assemble_surface_rule


@pytest.fixture(scope="session")
def square_nodes_2000():
    return gen_nodes_square("repulsion", 2000, seed=7)


@pytest.fixture(scope="session")
def square_mesh_2000(square_nodes_2000):
    return delaunay(square_nodes_2000)


@pytest.fixture(scope="session")
def square_rule_2000(square_mesh_2000):
    return flat_rule(square_mesh_2000, k=21, phs=PhsSpec(3), poly=PolySpec(3))


@pytest.fixture(scope="session")
def regular_nodes_2000():
    return gen_nodes_square("regular", 2000)


@pytest.fixture(scope="session")
def regular_mesh_2000(regular_nodes_2000):
    return delaunay(regular_nodes_2000)


@pytest.fixture(scope="session")
def torus_1024():
    return gen_nodes_torus_spiral(1024)


@pytest.fixture(scope="session")
def torus_rule_1024(torus_1024):
    return assemble_surface_rule(torus_1024, k=21, phs=PhsSpec(3), poly=PolySpec(2))


@pytest.fixture(scope="session")
def sphere_level2():
    return gen_sphere_icosahedral(2)


@pytest.fixture(scope="session")
def sphere_level3():
    return gen_sphere_icosahedral(3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(42)
