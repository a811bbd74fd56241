"""Flat RBF quadrature: element integrals, assembled rules, serialization.

Frozen reference values were produced by independent oracles (recursive
subdivision quadrature for the PHS integral, closed-form monomial
integration) before the closed forms were implemented.
"""
import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from nfrbf.errors import ConfigError, QuadratureError
from nfrbf.geometry import NodeSet, delaunay, gen_nodes_square
from nfrbf.interpolate import PhsSpec, PolySpec, assemble_saddle, build_stencils, nearest_neighbors
from nfrbf.quad_flat import (
    QuadratureRule,
    apply_rule,
    element_weights,
    flat_element_weights_batch,
    flat_rule,
    read_rule_csv,
    tri_monomial_integral,
    tri_phs_integral,
    tri_phs_integral_subdivide,
    write_rule_csv,
)

UNIT_RIGHT = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

# independently computed by recursive-subdivision quadrature (tol 1e-13)
PHS3_UNIT_RIGHT_AT_ORIGIN = 0.110870946505259


def test_monomial_area():
    assert tri_monomial_integral((0, 0), UNIT_RIGHT) == pytest.approx(0.5, abs=1e-15)


def test_monomial_x():
    assert tri_monomial_integral((1, 0), UNIT_RIGHT) == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_monomial_xy():
    assert tri_monomial_integral((1, 1), UNIT_RIGHT) == pytest.approx(1.0 / 24.0, abs=1e-15)


def test_monomial_shifted_scaled():
    # int over T of ((x-o1)/s)^2: affine substitution against the plain forms
    o = np.array([0.2, -0.1])
    s = 0.5
    val = tri_monomial_integral((2, 0), UNIT_RIGHT, origin=o, scale=s)
    plain = (tri_monomial_integral((2, 0), UNIT_RIGHT)
             - 2 * o[0] * tri_monomial_integral((1, 0), UNIT_RIGHT)
             + o[0] ** 2 * tri_monomial_integral((0, 0), UNIT_RIGHT))
    assert val == pytest.approx(plain / s**2, rel=1e-13)


def test_phs_integral_frozen_oracle_value():
    val = tri_phs_integral((0.0, 0.0), UNIT_RIGHT, ell=3)
    assert val == pytest.approx(PHS3_UNIT_RIGHT_AT_ORIGIN, abs=1e-12)


def test_phs_integral_matches_subdivision_oracle(rng):
    for _ in range(4):
        tri = rng.random((3, 2)) * 2.0 - 0.5
        center = rng.random(2) * 2.0 - 0.5
        closed = tri_phs_integral(center, tri, ell=3)
        oracle = tri_phs_integral_subdivide(center, tri, ell=3, tol=1e-12)
        assert closed == pytest.approx(oracle, rel=1e-9, abs=1e-12)


def test_phs_integral_far_field():
    tri = UNIT_RIGHT * 0.01 + np.array([5.0, 7.0])
    center = np.array([0.0, 0.0])
    area = 0.5 * 0.01**2
    centroid = tri.mean(axis=0)
    approx = np.linalg.norm(centroid - center) ** 3 * area
    assert tri_phs_integral(center, tri, ell=3) == pytest.approx(approx, rel=1e-6)


def test_phs_integral_degenerate_triangle():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(QuadratureError):
        tri_phs_integral((0.3, 0.4), tri, ell=3)


def test_element_weights_constant_reproduction(square_nodes_2000, square_mesh_2000):
    pts = square_nodes_2000.points
    tri_idx = 77
    verts = pts[square_mesh_2000.triangles[tri_idx]]
    center = verts.mean(axis=0)
    sten = build_stencils(center[None], pts, k=21, element_ids=[tri_idx])[0]
    system = assemble_saddle(sten, pts, PhsSpec(3), PolySpec(2))
    w = element_weights(verts, sten, system)
    e1 = verts[1] - verts[0]
    e2 = verts[2] - verts[0]
    area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    assert np.sum(w) == pytest.approx(area, rel=1e-12)


def test_element_weights_integrate_polynomials(square_nodes_2000, square_mesh_2000):
    pts = square_nodes_2000.points
    tri_idx = 402
    verts = pts[square_mesh_2000.triangles[tri_idx]]
    center = verts.mean(axis=0)
    sten = build_stencils(center[None], pts, k=21, element_ids=[tri_idx])[0]
    system = assemble_saddle(sten, pts, PhsSpec(3), PolySpec(3))

    def p(x):
        return 2.0 - x[:, 0] ** 3 + 4.0 * x[:, 0] * x[:, 1] ** 2

    w = element_weights(verts, sten, system)
    exact = sum(
        c * tri_monomial_integral(a, verts)
        for a, c in (((0, 0), 2.0), ((3, 0), -1.0), ((1, 2), 4.0))
    )
    assert w @ p(pts[sten.node_indices]) == pytest.approx(exact, rel=1e-12)


def test_congruent_elements_identical_weights():
    """Two copies of the same stencil geometry, one translated.

    Coordinates are dyadic rationals and the shift a power of two, so the
    translated copy is bit-identical geometry and any weight difference
    comes from the construction itself, not from float re-rounding."""
    rng = np.random.default_rng(12)
    local = rng.integers(0, 1024, size=(21, 2)) / 1024.0
    shift = np.array([8.0, -4.0])
    pts = np.vstack([local, local + shift])
    verts = np.array([local[0], local[1], local[2]])
    tree_idx = np.arange(21, dtype=np.int64)
    w1 = flat_element_weights_batch(verts[None], tree_idx[None], pts, PhsSpec(3), PolySpec(2))
    w2 = flat_element_weights_batch(
        (verts + shift)[None], (tree_idx + 21)[None], pts, PhsSpec(3), PolySpec(2)
    )
    assert np.max(np.abs(w1 - w2)) < 1e-14 * max(1.0, np.max(np.abs(w1)))


def test_rule_weights_sum_to_one(square_rule_2000):
    assert abs(np.sum(square_rule_2000.weights) - 1.0) < 1e-12


def test_rule_matches_constant(square_rule_2000):
    val = apply_rule(square_rule_2000, np.full(len(square_rule_2000), 3.7))
    assert val == pytest.approx(3.7, rel=1e-12)


def test_degree4_polynomial_exact(square_nodes_2000, square_mesh_2000):
    rule = flat_rule(square_mesh_2000, k=32, phs=PhsSpec(3), poly=PolySpec(4))
    pts = square_nodes_2000.points
    f = pts[:, 0] ** 3 - pts[:, 1] ** 4
    exact = 1.0 / 4.0 - 1.0 / 5.0
    assert apply_rule(rule, f) == pytest.approx(exact, rel=1e-12)


def test_regular_grid_interior_weights(regular_nodes_2000, regular_mesh_2000):
    """Interior weights of the equilateral lattice all equal the cell area."""
    rule = flat_rule(regular_mesh_2000, k=21, phs=PhsSpec(3), poly=PolySpec(2))
    pts = regular_nodes_2000.points
    interior = (pts[:, 0] > 0.15) & (pts[:, 0] < 0.85) & (pts[:, 1] > 0.15) & (pts[:, 1] < 0.85)
    d, _ = cKDTree(pts).query(pts[interior], k=2)
    s = float(np.median(d[:, 1]))
    cell = s * s * math.sqrt(3.0) / 2.0
    assert np.max(np.abs(rule.weights[interior] - cell)) < 1e-12


def test_weight_histogram_mode_near_average(square_rule_2000):
    w = square_rule_2000.weights
    n = len(w)
    near = np.mean(np.abs(w - 1.0 / n) < 0.35 / n)
    assert near > 0.5


def test_stability_ratio_zero_when_positive():
    rule = QuadratureRule(node_indices=np.arange(3), weights=np.array([0.2, 0.3, 0.5]),
                          domain_measure=1.0)
    assert rule.stability_ratio() == 0.0
    assert rule.negative_count() == 0


def test_nonfinite_weights_rejected():
    with pytest.raises(QuadratureError):
        QuadratureRule(node_indices=np.arange(2), weights=np.array([np.nan, 1.0]),
                       domain_measure=1.0)


def test_apply_rule_length_check(square_rule_2000):
    with pytest.raises(ConfigError):
        apply_rule(square_rule_2000, np.ones(10))


def test_rule_csv_roundtrip(tmp_path, square_rule_2000):
    path = tmp_path / "rule.csv"
    write_rule_csv(square_rule_2000, path)
    back = read_rule_csv(path)
    assert np.array_equal(back.weights, square_rule_2000.weights)
    assert np.array_equal(back.node_indices, square_rule_2000.node_indices)
    assert back.domain_measure == square_rule_2000.domain_measure
    assert back.provenance["deg"] == square_rule_2000.provenance["deg"]


def test_rule_csv_rejects_other_files(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigError):
        read_rule_csv(path)


def test_incompatible_degree_rejected(square_mesh_2000):
    with pytest.raises(ConfigError):
        flat_rule(square_mesh_2000, k=21, phs=PhsSpec(3), poly=PolySpec(0))


def test_oversized_stencil_rejected():
    nodes = gen_nodes_square("repulsion", 60, seed=0)
    mesh = delaunay(nodes)
    with pytest.raises(ConfigError):
        flat_rule(mesh, k=len(nodes) + 5)
