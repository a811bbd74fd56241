"""Domain descriptions shared by the experiment drivers and the CLI.

A DomainSpec names one of the built-in integration domains (flat squares,
torus, spheres and their deformations, ring cyclide, or an external mesh
file) together with the metric its kernels should use.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, GeometryError
from .nodes import NodeSet, gen_nodes_square
from .planar import PlanarMesh, delaunay
from .meshio import read_mesh
from .surfaces import (
    TORUS_R,
    TORUS_r,
    BumpySphereSpec,
    CyclideSpec,
    DeformedSphereSpec,
    SurfaceMesh,
    gen_cyclide_mesh,
    gen_implicit_surface_mesh,
    gen_nodes_torus_spiral,
    gen_sphere_fibonacci,
    gen_sphere_icosahedral,
)

FLAT_VARIANTS = ("unit_square", "square_2pi")
SURFACE_VARIANTS = ("torus", "sphere", "deformed_sphere", "bumpy_sphere", "cyclide", "external_mesh")


@dataclass(frozen=True)
class DomainSpec:
    """One of the built-in domains plus the metric used on it.

    For flat variants ``kind`` picks the node family.  Sphere-topology
    surfaces are resolved by icosahedral subdivision level; torus and
    cyclide by target node count (see :meth:`build_surface`).
    """

    variant: str = "unit_square"
    kind: str = "repulsion"
    metric: str = None
    R: float = TORUS_R
    r: float = TORUS_r
    gamma: float = 0.0
    cyclide: CyclideSpec = field(default_factory=CyclideSpec)
    mesh_path: str = None
    cluster_boundary: bool = False

    def __post_init__(self):
        if self.variant not in FLAT_VARIANTS + SURFACE_VARIANTS:
            raise ConfigError(f"unknown domain variant {self.variant!r}")
        if self.variant == "torus" and not self.R > self.r > 0.0:
            raise GeometryError("torus needs R > r > 0")
        if self.variant == "deformed_sphere" and not 0.0 <= self.gamma < 1.0:
            raise GeometryError("gamma must lie in [0, 1)")
        if self.variant == "external_mesh" and not self.mesh_path:
            raise ConfigError("external_mesh needs a mesh path")
        if self.kind not in ("regular", "repulsion"):
            raise ConfigError(f"unknown node family {self.kind!r}")
        if self.metric is None:
            object.__setattr__(self, "metric", self.default_metric())
        if self.metric not in ("euclidean", "periodic", "geodesic"):
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.metric == "periodic" and not self.is_flat:
            raise ConfigError("the periodic wrap metric only applies to flat squares")

    @property
    def is_flat(self) -> bool:
        return self.variant in FLAT_VARIANTS

    def default_metric(self) -> str:
        if self.variant == "unit_square":
            return "euclidean"
        if self.variant == "square_2pi":
            return "periodic"
        return "geodesic"

    def bounds(self):
        if self.variant == "unit_square":
            return 0.0, 1.0
        if self.variant == "square_2pi":
            return -math.pi, math.pi
        raise ConfigError(f"{self.variant} has no planar bounds")

    @property
    def period(self) -> float:
        lo, hi = self.bounds()
        return hi - lo

    def label(self) -> str:
        bits = [self.variant]
        if self.is_flat:
            bits.append(self.kind)
        if self.variant == "deformed_sphere":
            bits.append(f"gamma={self.gamma:g}")
        return ":".join(bits)

    # -- construction -------------------------------------------------------

    def build_flat(self, n_target: int, seed: int = 0):
        lo, hi = self.bounds()
        nodes = gen_nodes_square(
            self.kind, n_target, seed=seed, cluster_boundary=self.cluster_boundary,
            lo=lo, hi=hi,
        )
        return nodes, delaunay(nodes)

    def build_surface(self, resolution: int) -> SurfaceMesh:
        """Mesh at the given resolution.

        Sphere-topology variants read ``resolution`` as the icosahedral
        subdivision level when it is small (< 16) and as a Fibonacci node
        count otherwise; torus and cyclide always read a node count.
        """
        if self.variant == "torus":
            return gen_nodes_torus_spiral(resolution, self.R, self.r)
        if self.variant == "cyclide":
            return gen_cyclide_mesh(self.cyclide, resolution)
        if self.variant == "external_mesh":
            return read_mesh(self.mesh_path)
        if self.variant in ("sphere", "deformed_sphere", "bumpy_sphere"):
            if resolution < 16:
                base = gen_sphere_icosahedral(resolution)
            else:
                base = gen_sphere_fibonacci(resolution)
            if self.variant == "sphere":
                return base
            spec = (DeformedSphereSpec(self.gamma) if self.variant == "deformed_sphere"
                    else BumpySphereSpec())
            return gen_implicit_surface_mesh(spec, base)
        raise ConfigError(f"cannot mesh domain variant {self.variant!r}")


def domain_from_string(text: str) -> DomainSpec:
    """Parse CLI shorthand like ``unit-square``, ``torus``, ``deformed-sphere:0.4``,
    ``mesh:path/to/file.off``."""
    head, _, arg = text.strip().partition(":")
    name = head.strip().lower().replace("-", "_")
    if name in ("unit_square", "square_2pi", "torus", "sphere", "bumpy_sphere", "cyclide"):
        return DomainSpec(variant=name)
    if name == "deformed_sphere":
        return DomainSpec(variant=name, gamma=float(arg) if arg else 0.0)
    if name in ("mesh", "external_mesh"):
        return DomainSpec(variant="external_mesh", mesh_path=arg)
    raise ConfigError(f"cannot parse domain {text!r}")
