import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from ratdyn.errors import SingularHit, DegenerateInput, IndeterminatePoint, TargetContainsImage
from ratdyn.proximity import (
    Target, lambda_hyperplane, lambda_point, m1_estimate, mpoint_estimate, proximity_estimate,
    mean_proximity_check, exceptional_scan, scan_to_csv, haar_targets, haar_constant,
    calibrate_constant, default_threshold,
)
from ratdyn.projcore import sample_fs_array
from ratdyn.ratmap import RationalMap, iterate
from conftest import mk

cplx = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)
vec3 = st.lists(cplx, min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-2)


# --- closed-form constants ----------------------------------------------------------

@pytest.mark.parametrize("m", [1, 2])
def test_c1m_quadrature(m):
    # oracle: |<W,u>|^2 ~ Beta(1, m) for unit u, so c_{1,m} = E[-log s]
    val, _ = quad(lambda s: -np.log(s) * m * (1 - s) ** (m - 1), 0, 1)
    assert haar_constant(1, m) == pytest.approx(val, abs=1e-10)


def test_c22_quadrature():
    # oracle for W = (1,0,0) and the identity: r = |u1|^2 + |u2|^2 = |u ^ W|^2.
    # Under w^2, r has density 2r.  Under g^*w ^ w (g the projection from W),
    # rho = r/(1-r) has CDF rho/(1+rho), so r is uniform on [0, 1].
    hyper, _ = quad(lambda r: -np.log(r) * 2 * r, 0, 1)
    wedge, _ = quad(lambda r: -np.log(r), 0, 1)
    assert haar_constant(2, 2) == pytest.approx(hyper + wedge, abs=1e-10)


def test_haar_constant_unavailable():
    with pytest.raises(DegenerateInput):
        haar_constant(2, 3)


# --- pointwise potentials ----------------------------------------------------------

@given(vec3, vec3)
def test_lambda_hyperplane_nonnegative(z, W):
    I = RationalMap.identity(2)
    try:
        assert lambda_hyperplane(I, W, np.array(z)) >= 0
    except SingularHit:
        pass


def test_lambda_hyperplane_zero_on_conjugate():
    I = RationalMap.identity(2)
    z = np.array([1, 2j, -1 + 1j])
    # |<W, z>| = |W||z| exactly when W is proportional to conj(z)
    assert lambda_hyperplane(I, z.conj(), z) == pytest.approx(0, abs=1e-14)
    assert lambda_hyperplane(I, [0, 1, 0], [0, 1, 0]) == 0


def test_lambda_hyperplane_closed_form():
    I = RationalMap.identity(2)
    z = np.array([1, 1, 0])
    # |z|^2 |W|^2 / |<W,z>|^2 = 2 * 1 / 1
    assert lambda_hyperplane(I, [1, 0, 0], z) == pytest.approx(np.log(2))


def test_lambda_hyperplane_singular_and_indeterminate(maps):
    I = RationalMap.identity(2)
    with pytest.raises(SingularHit):
        lambda_hyperplane(I, [1, 0, 0], [0, 1, 1])
    with pytest.raises(IndeterminatePoint):
        lambda_hyperplane(maps["cremona"], [1, 1, 1], [1, 0, 0])


def test_lambda_point():
    I = RationalMap.identity(2)
    assert lambda_point(I, [1, 0, 0], [1, 1, 0]) == pytest.approx(np.log(2))
    with pytest.raises(SingularHit):
        lambda_point(I, [1, 0, 0], [3j, 0, 0])


@given(vec3, vec3)
def test_lambda_point_nonnegative(z, W):
    # |u ^ W|^2 <= |u|^2 |W|^2
    I = RationalMap.identity(2)
    try:
        assert lambda_point(I, W, np.array(z)) >= 0
    except SingularHit:
        pass


# --- Monte-Carlo proximity --------------------------------------------------------

def test_m1_identity_p1():
    I = RationalMap.identity(1)
    est = m1_estimate(I, [1, 0.3j], samples=100_000, seed=0)
    assert abs(est.value - 1.0) < 0.02 and abs(est.value - 1.0) < 4 * est.std_error


def test_m1_unitary_invariance():
    I = RationalMap.identity(2)
    vals = [m1_estimate(I, T, 40_000, seed=i) for i, T in enumerate(haar_targets(2, 4, "hyperplane", 9))]
    for e in vals:
        assert abs(e.value - 1.5) < 4 * e.std_error


def test_m1_deterministic(maps):
    a = m1_estimate(maps["E1"], [1, 2, 3], 2000, seed=5)
    b = m1_estimate(maps["E1"], [1, 2, 3], 2000, seed=5)
    c = m1_estimate(maps["E1"], [1, 2, 3], 2000, seed=6)
    assert a == b and a.value != c.value


def test_m1_dimension_check(maps):
    with pytest.raises(DegenerateInput):
        m1_estimate(maps["E1"], [1, 0])


def test_m1_exceptional_line_grows(maps):
    I = RationalMap.identity(2)
    line = Target.hyperplane([0, 0, 1])
    base = m1_estimate(I, line, 20_000, 1).value
    vals = [m1_estimate(iterate(maps["E1"], k), line, 20_000, 1).value for k in (1, 2, 3)]
    assert vals[1] >= 2 * base
    assert vals[0] < vals[1] < vals[2]


def test_m1_target_containing_image():
    # the image of (t^2, z^2, t^2 - z^2) lies in the line v0 - v1 - v2 = 0
    P = mk("t^2", "z^2", "t^2 - z^2")
    with pytest.raises(TargetContainsImage):
        m1_estimate(P, [1, -1, -1], 1000)


def test_mpoint_identity_constant():
    I = RationalMap.identity(2)
    for T in haar_targets(2, 2, "point", 4):
        e = mpoint_estimate(I, T, 40_000, seed=2, method="density")
        assert abs(e.value - haar_constant(2, 2)) < 4 * e.std_error + 0.01


def test_mpoint_p1_reduces_to_hyperplane(maps):
    a = mpoint_estimate(maps["z2"], [1, 0.5], 5000, seed=1)
    b = m1_estimate(maps["z2"], [-0.5, 1], 5000, seed=1)
    assert a.value == pytest.approx(b.value, rel=1e-12)


@pytest.mark.parametrize("name", ["identity", "E1"])
def test_mpoint_crofton_matches_density(maps, name):
    # dual route: slicing by random lines vs FS-weighted pullback densities
    T = Target.point(sample_fs_array(2, 1, 31)[0])
    a = mpoint_estimate(maps[name], T, 40_000, seed=3, method="density")
    b = mpoint_estimate(maps[name], T, 40_000, seed=3, method="crofton")
    assert abs(a.value - b.value) < 4 * np.hypot(a.std_error, b.std_error)


def test_mpoint_exceptional_point_e1(maps):
    # (0, c) lies on an exceptional line of (z^2, w^2)
    P3 = iterate(maps["E1"], 3)
    special = mpoint_estimate(P3, Target.affine_point(0, 0.5), 10_000, 1).value
    generic = mpoint_estimate(P3, Target.point(sample_fs_array(2, 1, 77)[0]), 10_000, 1).value
    assert special >= 2 * generic


def test_mpoint_bad_method(maps):
    with pytest.raises(ValueError):
        mpoint_estimate(maps["E1"], [1, 2, 3], 100, method="grid")


def test_proximity_estimate_dispatch(maps):
    h = proximity_estimate(maps["E1"], Target.hyperplane([1, 2, 3]), 1000, 0)
    assert h == m1_estimate(maps["E1"], [1, 2, 3], 1000, 0)


# --- averages over targets ----------------------------------------------------------

def test_calibrate_constant_p2_lines():
    mean, se = calibrate_constant(1, 2, num_targets=10, samples_each=5000, seed=2)
    assert abs(mean - 1.5) < 4 * se + 0.02


def test_mean_proximity_map_independent(maps):
    # l = 1: the average over lines does not depend on the map
    for name in ("cremona", "E1"):
        mean, pred = mean_proximity_check(maps[name], 1, num_targets=20, samples_each=5000, seed=1)
        assert pred == 1.5 and abs(mean / pred - 1) < 0.1


def test_mean_proximity_unsupported_index():
    P = mk("x0^2", "x1^2", "x2^2", "x3^2", variables=["x0", "x1", "x2", "x3"])
    with pytest.raises(DegenerateInput):
        mean_proximity_check(P, 2)


# --- scanner --------------------------------------------------------------------------

def test_default_threshold(maps):
    assert default_threshold(maps["E1"], 1) == pytest.approx(np.sqrt(2))
    assert default_threshold(maps["E1"], 2) == pytest.approx(np.sqrt(8))


def test_scan_identity_has_no_flags(maps):
    rows = exceptional_scan(maps["identity"], 1, haar_targets(2, 3, "hyperplane", 0), 3,
                            a_base=1.3, samples=3000)
    assert all(r.flag == "generic" for r in rows)
    assert all(abs(r.growth_base - 1) < 0.2 for r in rows)


def test_scan_e1_flags_coordinate_line(maps):
    targets = [Target.hyperplane([0, 1, 0])] + haar_targets(2, 2, "hyperplane", 5)
    rows = exceptional_scan(maps["E1"], 1, targets, 4, a_base=1.3, samples=5000)
    assert [r.flag for r in rows] == ["exceptional_candidate", "generic", "generic"]
    assert rows[0].growth_base == pytest.approx(2, rel=0.15)


def test_scan_csv(tmp_path, maps):
    rows = exceptional_scan(maps["identity"], 1, haar_targets(2, 2, "hyperplane", 0), 2,
                            a_base=1.3, samples=1000)
    path = tmp_path / "scan.csv"
    scan_to_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[-6:] == ["m_1", "m_2", "growth_base", "flag", "fit_unstable", "reason"]
    assert len(lines) == 3


def test_scan_needs_self_map():
    P = mk("x0^2", "x1^2", "x2^2", "x3^2", variables=["x0", "x1", "x2", "x3"])
    with pytest.raises(DegenerateInput):
        exceptional_scan(P, 1, [], 2)
