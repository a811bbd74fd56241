"""Geometry layer: node families, triangulations, surfaces, metrics, mesh IO."""

from .nodes import NodeSet, gen_nodes_square
from .planar import PlanarMesh, circumcenters, circumradii, covering_radius, delaunay, triangle_areas
from .surfaces import (
    BumpySphereSpec,
    CyclideSpec,
    DeformedSphereSpec,
    SurfaceMesh,
    build_adjacency,
    cyclide_implicit,
    cyclide_map,
    cyclide_partials,
    gen_cyclide_mesh,
    gen_implicit_surface_mesh,
    gen_nodes_torus_spiral,
    gen_sphere_fibonacci,
    gen_sphere_icosahedral,
    orient_triangles,
    sphere_bump_centers,
    torus_map,
    torus_unmap,
    TORUS_R,
    TORUS_r,
)
from .metrics import (
    geodesic_matrix,
    mesh_hash,
    periodic_distance,
    read_geodesic_cache,
    write_geodesic_cache,
)
from .meshio import read_mesh, read_nodes_csv, read_obj, read_off, write_nodes_csv, write_off
from .domains import (
    DomainSpec,
    FLAT_VARIANTS,
    SURFACE_VARIANTS,
    domain_from_string,
)

__all__ = [
    "DomainSpec",
    "FLAT_VARIANTS",
    "SURFACE_VARIANTS",
    "domain_from_string",
    "NodeSet",
    "gen_nodes_square",
    "PlanarMesh",
    "delaunay",
    "covering_radius",
    "circumradii",
    "circumcenters",
    "triangle_areas",
    "SurfaceMesh",
    "build_adjacency",
    "orient_triangles",
    "torus_map",
    "torus_unmap",
    "TORUS_R",
    "TORUS_r",
    "gen_nodes_torus_spiral",
    "gen_sphere_icosahedral",
    "gen_sphere_fibonacci",
    "sphere_bump_centers",
    "CyclideSpec",
    "cyclide_map",
    "cyclide_partials",
    "cyclide_implicit",
    "gen_cyclide_mesh",
    "DeformedSphereSpec",
    "BumpySphereSpec",
    "gen_implicit_surface_mesh",
    "periodic_distance",
    "geodesic_matrix",
    "mesh_hash",
    "read_geodesic_cache",
    "write_geodesic_cache",
    "read_off",
    "read_obj",
    "read_mesh",
    "write_off",
    "write_nodes_csv",
    "read_nodes_csv",
]
