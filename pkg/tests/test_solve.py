from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ratdyn.errors import CommonFactor, ChartDegeneracy, DegenerateInput, InfiniteFiber
from ratdyn.polyalg import parse, GaussianRational, HomoPoly
from ratdyn.projcore import sample_fs_array, fs_distance
from ratdyn.solve import roots_univariate, solve_bivariate, fiber, fiber_residual
from conftest import mk, VARS


def _match(found, expected, tol):
    """Greedy one-to-one matching of two point lists."""
    expected = list(expected)
    for f in found:
        d = [abs(f - e) for e in expected]
        i = int(np.argmin(d))
        if d[i] > tol:
            return False
        expected.pop(i)
    return not expected


# --- univariate -----------------------------------------------------------------

def test_roots_simple():
    rs = roots_univariate([-1, 0, 1])
    assert sorted(rs.values.real) == pytest.approx([-1, 1]) and list(rs.multiplicities) == [1, 1]


def test_roots_triple():
    rs = roots_univariate([-8, 12, -6, 1])  # (z-2)^3
    assert len(rs.roots) == 1 and rs.roots[0][1] == 3
    assert rs.roots[0][0] == pytest.approx(2, abs=1e-12)


def test_roots_of_unity_1024():
    rs = roots_univariate([-1] + [0] * 1023 + [1])
    vals = rs.values
    assert len(vals) == 1024 and rs.degree() == 1024
    assert np.max(np.abs(np.abs(vals) - 1)) < 1e-10
    # oracle: the exact 1024th roots of unity
    ang = np.sort(np.mod(np.angle(vals), 2 * np.pi))
    assert np.max(np.abs(ang - 2 * np.pi * np.arange(1024) / 1024)) < 1e-10


def test_roots_float_cluster():
    c = np.poly([1.5, 1.5, -0.3j])[::-1]  # float coefficients, double root
    rs = roots_univariate(c)
    assert rs.degree() == 3
    assert sorted(rs.multiplicities.tolist()) == [1, 2]


def test_roots_degenerate():
    with pytest.raises(DegenerateInput):
        roots_univariate([3])


@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), min_size=2, max_size=12)
       .filter(lambda c: c[-1] != (0, 0)))
def test_roots_match_numpy(coeffs):
    exact = [GaussianRational(a, b) for a, b in coeffs]
    rs = roots_univariate(exact)
    assert rs.degree() == len(coeffs) - 1
    ref = np.roots([complex(a, b) for a, b in coeffs][::-1])
    ours = np.repeat(rs.values, rs.multiplicities)
    # numpy's companion eigenvalues lose accuracy at multiple roots; scale tolerance
    assert _match(ours, ref, 1e-4 * max(1, np.max(np.abs(ref))))


@given(st.lists(st.integers(-6, 6), min_size=3, max_size=8).filter(lambda c: c[-1] != 0))
def test_roots_residuals(coeffs):
    rs = roots_univariate([Fraction(c) for c in coeffs])
    p = np.polynomial.Polynomial(np.array(coeffs, dtype=float))
    for r, _ in rs.roots:
        scale = sum(abs(c) * abs(r) ** k for k, c in enumerate(coeffs))
        assert abs(p(r)) <= 1e-10 * scale


# --- bivariate ------------------------------------------------------------------

def test_bivariate_separable():
    p = parse("z^2 - 4*t^2", VARS)
    q = parse("w^3 - 8*t^3", VARS)
    sols = solve_bivariate(p, q)
    assert sum(m for _, m in sols) == 6
    exp = [(a, 2 * np.exp(2j * np.pi * k / 3)) for a in (2, -2) for k in range(3)]
    found = [complex(z) + 10 * complex(w) for (z, w), _ in sols]
    assert _match(found, [a + 10 * b for a, b in exp], 1e-9)


def test_bivariate_common_factor():
    p = parse("z", VARS)
    with pytest.raises(CommonFactor):
        solve_bivariate(p, p)


def test_bivariate_at_infinity():
    # z = w and z = w + t meet only at infinity
    with pytest.raises(ChartDegeneracy):
        solve_bivariate(parse("z - w", VARS), parse("z - w - t", VARS))


def _random_cubic(rng):
    terms = {}
    for a in range(4):
        for b in range(4 - a):
            terms[(3 - a - b, a, b)] = GaussianRational(int(rng.integers(-5, 6)), int(rng.integers(-5, 6)))
    return HomoPoly(3, terms)


@pytest.mark.parametrize("seed", range(4))
def test_bivariate_bezout_cubics(seed):
    rng = np.random.default_rng(seed)
    p, q = _random_cubic(rng), _random_cubic(rng)
    sols = solve_bivariate(p, q)
    assert sum(m for _, m in sols) == 9 and all(m == 1 for _, m in sols)
    for (z, w), _ in sols:
        x = np.array([1, z, w])
        for f in (p, q):
            scale = sum(abs(complex(c)) * np.prod(np.abs(x) ** np.array(e)) for e, c in f.terms.items())
            assert abs(f.evaluate(x)) < 1e-9 * scale


# --- fibers ---------------------------------------------------------------------

def test_fiber_p1_z2(maps):
    F = fiber(maps["z2"], [1, 1])
    pts = F.points_array[:, 1] / F.points_array[:, 0]
    assert _match(pts, [1, -1], 1e-12) and F.count() == 2


def test_fiber_q_generic(maps):
    w = sample_fs_array(2, 1, 5)[0]
    F = fiber(maps["E2"], w)
    assert F.count() == 6 and fiber_residual(maps["E2"], F, w) < 1e-8


def test_fiber_via_elimination(maps):
    # a linear change of target coordinates keeps lambda = 6 but defeats the monomial fast path
    Q = mk("t^3 + w^3", "t*z^2 - t^3", "w^3 + 2*t*z^2")
    assert not Q.is_monomial()
    w = sample_fs_array(2, 1, 6)[0]
    F = fiber(Q, w)
    assert F.method != "monomial" and F.count() == 6 and fiber_residual(Q, F, w) < 1e-8
    assert fiber(maps["dense"], w).count() == 3


def test_fiber_cremona(maps):
    F = fiber(maps["cremona"], [1, 1, 1])
    assert F.count() == 1
    assert fs_distance(F.points_array[0], [1, 1, 1]) < 1e-10


@pytest.mark.parametrize("name", ["dense", "cremona", "E2"])
def test_fiber_residual_and_chart_independence(maps, name):
    P = maps[name]
    for i, w in enumerate(sample_fs_array(2, 3, 17)):
        A = fiber(P, w, chart_seed=1)
        B = fiber(P, w, chart_seed=2)
        assert fiber_residual(P, A, w) < 1e-8
        assert A.count() == B.count()
        D = fs_distance(A.points_array[:, None, :], B.points_array[None, :, :])
        assert np.all(D.min(axis=1) < 1e-7)


def test_fiber_excludes_indeterminacy(maps):
    # elimination also finds the base point (1,0,0); it must not be counted
    P = maps["dense"]
    w = sample_fs_array(2, 1, 8)[0]
    F = fiber(P, w)
    for z in F.points_array:
        assert max(abs(c.evaluate(z)) for c in P.components) > 1e-6
    assert len(F.excluded_array) == 1 and fs_distance(F.excluded_array[0], [1, 0, 0]) < 1e-8


def test_fiber_holomorphic_count_is_d_squared():
    P = mk("t^2", "z^2 + t*w", "w^2 + t*z")
    for w in sample_fs_array(2, 50, 21):
        assert fiber(P, w).count() == 4


def test_fiber_contracted_curve(maps):
    # the Cremona map contracts {t = 0} to (1,0,0)
    with pytest.raises(InfiniteFiber):
        fiber(maps["cremona"], [1, 0, 0])
