"""Experiment drivers: rate fits, reference values, reports, error map, showcase."""
import math

import numpy as np
import pytest
from scipy import integrate as scipy_integrate

from nfrbf.errors import ConfigError
from nfrbf.geometry.domains import DomainSpec
from nfrbf.harness import (
    ConvergenceReport,
    _activity_centroid,
    _nearest_node,
    _rotation_to,
    cross_initial_condition,
    cyclide_oracle,
    error_map,
    fit_rate,
    get_test_function,
    nf_convergence,
    quad_convergence,
    reference_value,
    showcase,
)


# ---------------------------------------------------------------------------
# rate fitting

def test_fit_rate_two_point_slope():
    assert fit_rate([(0.1, 1e-2), (0.01, 1e-5)]) == pytest.approx(3.0, abs=1e-12)


def test_fit_rate_constant_errors():
    assert fit_rate([(0.1, 2.0), (0.05, 2.0), (0.025, 2.0)]) == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_quartic_power_law():
    hs = [0.1 / 2**i for i in range(5)]
    assert fit_rate([(h, h**4) for h in hs]) == pytest.approx(4.0, abs=1e-10)


def test_fit_rate_needs_two_records():
    with pytest.raises(ConfigError):
        fit_rate([(0.1, 1e-2)])


def test_fit_rate_drops_nonpositive_errors():
    # the zero-error record carries no log-scale information
    slope = fit_rate([(0.1, 1e-2), (0.05, 1e-2 / 8.0), (0.025, 0.0)])
    assert slope == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(ConfigError):
        fit_rate([(0.1, 1e-2), (0.05, 0.0)])


# ---------------------------------------------------------------------------
# built-in functions and references

def test_test_function_lookup_normalizes_names():
    assert get_test_function("Torus-Sin").name == "torus_sin"
    with pytest.raises(ConfigError):
        get_test_function("nope")


def test_reference_values_closed_forms():
    sq = DomainSpec(variant="unit_square")
    assert reference_value(get_test_function("chebyshev_product"), sq) == 1.0
    assert reference_value(get_test_function("deg4_poly"), sq) == pytest.approx(0.05)
    torus = DomainSpec(variant="torus")
    assert reference_value(get_test_function("torus_sin"), torus) == pytest.approx(
        12.0 * math.pi**2
    )
    sphere = DomainSpec(variant="sphere")
    assert reference_value(get_test_function("sphere_poly"), sphere) == pytest.approx(
        20.0 * math.pi
    )
    assert reference_value(get_test_function("trig_xyz"), sphere) == 0.0


def test_reference_value_gaussian_against_adaptive_quadrature():
    sq = DomainSpec(variant="unit_square")
    ref = reference_value(get_test_function("square_gaussian"), sq)
    val, est = scipy_integrate.dblquad(
        lambda y, x: math.exp(-10.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)),
        0.0, 1.0, 0.0, 1.0, epsabs=1e-13,
    )
    assert ref == pytest.approx(val, abs=1e-11)


def test_reference_value_rejects_wrong_domain():
    with pytest.raises(ConfigError):
        reference_value(get_test_function("torus_sin"), DomainSpec(variant="unit_square"))


def test_cyclide_oracle_resolution_converged():
    spec = DomainSpec(variant="cyclide")
    tf = get_test_function("const_one")
    a = cyclide_oracle(spec.cyclide, tf.fn, m=512)
    b = cyclide_oracle(spec.cyclide, tf.fn, m=1024)
    assert a > 0.0
    assert abs(a - b) < 1e-10 * abs(b)


# ---------------------------------------------------------------------------
# convergence report container

def _toy_report():
    report = ConvergenceReport(
        domain="unit_square", function="chebyshev_product",
        degrees=[2], resolutions=[100, 200, 400, 800],
    )
    for seed in (0, 1, 2):
        for idx, n in enumerate(report.resolutions):
            h = n ** -0.5
            err = (1.0 + 0.1 * seed) * h**3
            report.add(2, n, h, seed, err, stability=1.5, res_index=idx)
    return report


def test_report_median_and_slope():
    report = _toy_report()
    hs, meds = report.median_errors(2)
    assert len(hs) == 4
    # median of {1.0, 1.1, 1.2} prefactors is 1.1
    assert meds[0] == pytest.approx(1.1 * hs[0] ** 3)
    assert report.slope(2) == pytest.approx(3.0, abs=1e-12)
    report.validate()


def test_report_csv_layout(tmp_path):
    report = _toy_report()
    path = tmp_path / "report.csv"
    report.write_csv(str(path))
    lines = path.read_text().strip().split("\n")
    assert lines[0].startswith("# domain=unit_square function=chebyshev_product")
    assert lines[1] == "degree,n,h_proxy,seed,rel_error,stability"
    assert len(lines) == 2 + 12
    first = lines[2].split(",")
    assert first[0] == "2" and first[1] == "100"
    float(first[2]), float(first[4])

    spath = tmp_path / "slopes.csv"
    report.write_slopes_csv(str(spath))
    slines = spath.read_text().strip().split("\n")
    assert slines[0] == "degree,slope"
    deg, slope = slines[1].split(",")
    assert int(deg) == 2 and float(slope) == pytest.approx(3.0)


def test_report_validate_needs_four_resolutions():
    report = ConvergenceReport(domain="d", function="f", degrees=[2],
                               resolutions=[100, 200])
    report.add(2, 100, 0.1, 0, 1e-3)
    report.add(2, 200, 0.07, 0, 5e-4)
    with pytest.raises(ConfigError):
        report.validate()


def test_report_reproducible_csv(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    _toy_report().write_csv(str(a))
    _toy_report().write_csv(str(b))
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# sweep drivers (small ladders; slope magnitudes live in the acceptance suite)

def test_quad_convergence_regular_sweep():
    domain = DomainSpec(variant="unit_square", kind="regular")
    report = quad_convergence(domain, "chebyshev_product", degrees=[2],
                              resolutions=[300, 500, 800, 1200])
    assert len(report.records) == 4
    # regular meshes give all-positive weights, so stability can be exactly 0
    assert all(r[5] >= 0 for r in report.records)
    assert math.isfinite(report.slope(2))
    assert report.config["exact"] == "1"


def test_nf_convergence_regular_sweep():
    domain = DomainSpec(variant="square_2pi", kind="regular")
    report = nf_convergence(domain, degrees=[2], resolutions=[300, 500, 800, 1200],
                            dt=1e-3, t_end=0.01)
    assert len(report.records) == 4
    errs = [r[4] for r in report.records]
    assert all(e > 0 for e in errs)
    assert errs[-1] < errs[0]


def test_nf_convergence_rejects_surface_domains():
    with pytest.raises(ConfigError):
        nf_convergence(DomainSpec(variant="sphere"), degrees=[2],
                       resolutions=[1, 2, 3, 4])


# ---------------------------------------------------------------------------
# spatial error map

def test_error_map_statistics(square_nodes_2000, square_rule_2000):
    em = error_map(square_nodes_2000.points, square_rule_2000, sigma=0.1,
                   grid_size=20, period=1.0, lo=0.0)
    assert em.values.shape == (400,)
    assert em.max_abs < 5e-4
    assert abs(em.mean) < em.max_abs / 50.0
    assert em.has_both_signs


def test_error_map_csv(tmp_path, square_nodes_2000, square_rule_2000):
    em = error_map(square_nodes_2000.points, square_rule_2000, sigma=0.1,
                   grid_size=10, period=1.0, lo=0.0)
    path = tmp_path / "map.csv"
    em.write_csv(str(path))
    lines = path.read_text().strip().split("\n")
    assert lines[0].startswith("# sigma=")
    assert lines[1] == "x0,y0,rel_error"
    assert len(lines) == 2 + 100
    x0, y0, v = lines[2].split(",")
    assert 0.0 < float(x0) < 1.0 and 0.0 < float(y0) < 1.0


# ---------------------------------------------------------------------------
# showcase helpers

def test_rotation_carries_pole_to_target():
    target = np.array([0.5, 0.3, math.sqrt(0.34)])
    rot = _rotation_to(target)
    unit = target / np.linalg.norm(target)
    assert np.allclose(rot @ np.array([0.0, 0.0, 1.0]), unit, atol=1e-14)
    assert np.allclose(rot.T @ rot, np.eye(3), atol=1e-14)
    assert np.linalg.det(rot) == pytest.approx(1.0)
    flip = _rotation_to(np.array([0.0, 0.0, -1.0]))
    assert np.allclose(flip @ np.array([0.0, 0.0, 1.0]), [0.0, 0.0, -1.0], atol=1e-14)
    assert np.linalg.det(flip) == pytest.approx(1.0)


def test_cross_initial_condition_support(sphere_level3):
    pts = sphere_level3.nodes.points
    u0 = cross_initial_condition(pts)
    assert (u0 >= 0.0).all()
    assert u0.max() <= 5.0 + 1e-12
    assert u0.max() > 0.1
    # the rotated lower hemisphere carries no activity
    assert np.mean(u0 == 0.0) > 0.4


def test_activity_centroid_gates_background():
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    w = np.ones(3)
    cen = _activity_centroid(pts, w, np.array([0.4, 1.0, 0.45]))
    assert np.allclose(cen, [1.0, 0.0, 0.0])
    cen2 = _activity_centroid(pts, w, np.array([0.6, 1.0, 0.6]))
    assert np.allclose(cen2, [1.0, 0.0, 0.0])
    cen3 = _activity_centroid(pts, w, np.array([0.0, 0.0, 0.0]))
    assert np.allclose(cen3, pts[0])


def test_nearest_node():
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    assert _nearest_node(pts, np.array([0.9, 0.1, 0.0])) == 1


# ---------------------------------------------------------------------------
# showcase runs (tiny mesh; the full-size smoke lives in the acceptance suite)

def test_showcase_labyrinth_tiny(tmp_path):
    res = showcase("labyrinth:0.4", str(tmp_path), smoke=True,
                   overrides={"resolution": 512, "t_end": 2.0, "k": 21, "deg": 2},
                   n_frames=4)
    assert not res.aborted
    assert res.n_frames >= 4
    assert res.u_max >= res.u_min
    assert res.q_min is None
    assert (tmp_path / "labyrinth_summary.csv").exists()
    header = (tmp_path / "labyrinth_summary.csv").read_text().split("\n")[0]
    assert header == "t,u_min,u_max,cx,cy,cz"
    for f in res.frames:
        assert f.endswith(".vtk")


def test_showcase_rejections(tmp_path):
    with pytest.raises(ConfigError):
        showcase("vortex", str(tmp_path))
    with pytest.raises(ConfigError):
        showcase("cortex", str(tmp_path))
    with pytest.raises(ConfigError):
        showcase("labyrinth", str(tmp_path), overrides={"bogus": 1})
