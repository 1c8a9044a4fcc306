import numpy as np
import pytest
from hypothesis import given, strategies as st

from ratdyn.errors import ZeroVector, IndeterminatePoint
from ratdyn.projcore import (
    normalize, fs_distance, sample_fs, sample_fs_array, fs_pullback_density,
    pullback_density_array, mc_pullback_integral,
)
from conftest import mk

cplx = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
vec3 = st.lists(cplx, min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3)


# --- normalize ------------------------------------------------------------------

def test_normalize_scaling():
    assert np.allclose(normalize([2, 0, 0]).coords, [1, 0, 0])  # trivial


def test_normalize_phase_removal():
    p = normalize([0, 3j, 3j]).coords
    assert np.allclose(p, [0, 1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-15)
    assert p[1].imag == 0 and p[1].real > 0


def test_normalize_same_point():
    assert np.allclose(normalize([1, 1, 1]).coords, normalize([1j, 1j, 1j]).coords, atol=1e-15)


def test_normalize_zero_vector():
    with pytest.raises(ZeroVector):
        normalize([0, 0, 0])


@given(vec3)
def test_normalize_idempotent(v):
    a = normalize(v)
    assert np.array_equal(normalize(a.coords).coords, a.coords)


@given(vec3, cplx.filter(lambda c: abs(c) > 1e-2))
def test_normalize_projective_invariance(v, c):
    assert fs_distance(normalize(v), normalize(np.array(v) * c)) < 1e-9


# --- fs_distance --------------------------------------------------------------

def test_fs_distance_examples():
    assert fs_distance(normalize([1, 2]), normalize([1, 2])) < 1e-15
    assert fs_distance(normalize([1, 0]), normalize([0, 1])) == pytest.approx(1.0)
    # |p ^ q| for p=(1,0), q=(1,1)/sqrt2 is 1/sqrt2
    assert fs_distance(normalize([1, 0]), normalize([1, 1])) == pytest.approx(1 / np.sqrt(2))


@given(vec3, vec3, vec3)
def test_fs_distance_metric(a, b, c):
    dab = fs_distance(a, b)
    assert 0 <= dab <= 1
    assert dab == pytest.approx(fs_distance(b, a), abs=1e-12)
    assert dab <= fs_distance(a, c) + fs_distance(c, b) + 1e-12


def test_fs_distance_oracle_angle(rng):
    # chordal distance = sin of the Hermitian angle, sqrt(1 - |<p,q>|^2)
    P = sample_fs_array(3, 200, 1)
    Q = sample_fs_array(3, 200, 2)
    ref = np.sqrt(np.clip(1 - np.abs(np.sum(P * Q.conj(), axis=1)) ** 2, 0, None))
    assert np.allclose(fs_distance(P, Q), ref, atol=1e-7)


# --- sampling ------------------------------------------------------------------

def test_sample_fs_coordinate_symmetry():
    Z = sample_fs_array(2, 100_000, 0)
    assert np.mean(np.abs(Z[:, 0]) ** 2) == pytest.approx(1 / 3, abs=0.005)


def test_sample_fs_log_mean_p1():
    # closed form: integral of log(|z1|^2/|z|^2) against FS area on P^1 equals -1
    Z = sample_fs_array(1, 100_000, 0)
    assert np.mean(np.log(np.abs(Z[:, 1]) ** 2)) == pytest.approx(-1, abs=0.02)


def test_sample_fs_log_mean_quadrature_oracle():
    from scipy.integrate import quad
    # on P^1, |z1|^2/|z|^2 = s is uniform on [0,1] under FS volume
    val, _ = quad(np.log, 0, 1)
    assert val == pytest.approx(-1, abs=1e-10)


def test_sample_fs_deterministic():
    a = sample_fs(2, 5, 11)
    b = sample_fs(2, 5, 11)
    assert all(np.array_equal(p.coords, q.coords) for p, q in zip(a, b))
    assert not np.array_equal(sample_fs_array(2, 5, 11), sample_fs_array(2, 5, 12))


def test_sample_fs_shards_independent():
    a = sample_fs_array(2, 4, 3, shard_index=0, shard_count=2)
    b = sample_fs_array(2, 4, 3, shard_index=1, shard_count=2)
    assert not np.allclose(a, b)


# --- pullback densities --------------------------------------------------------

def _fd_density(comps, x, j, h=1e-4):
    """Finite-difference oracle: Levi forms of log|f(1,x)|^2 and log(1+|x|^2)."""
    n = len(x)

    def phi(y):
        v = np.array([c.evaluate(np.concatenate([[1.0], y])) for c in comps])
        return np.log(np.sum(np.abs(v) ** 2))

    def fs(y):
        return np.log(1 + np.sum(np.abs(y) ** 2))

    def levi(fn):
        H = np.zeros((n, n), dtype=complex)
        E = np.eye(n)
        for a in range(n):
            for b in range(n):
                def d2(ua, ub):
                    return (fn(x + h * ua + h * ub) - fn(x + h * ua - h * ub)
                            - fn(x - h * ua + h * ub) + fn(x - h * ua - h * ub)) / (4 * h * h)
                ea, eb = E[a].astype(complex), E[b].astype(complex)
                xx = d2(ea, eb)
                yy = d2(1j * ea, 1j * eb)
                xy = d2(ea, 1j * eb)
                yx = d2(1j * ea, eb)
                H[a, b] = 0.25 * (xx + yy + 1j * (xy - yx))
        return H

    M = np.linalg.solve(levi(fs), levi(phi))
    if j == n:
        return np.linalg.det(M).real
    return np.trace(M).real / n


@pytest.mark.parametrize("name", ["E1", "E2", "cremona", "dense"])
@pytest.mark.parametrize("j", [1, 2])
def test_density_matches_finite_differences(maps, name, j):
    P = maps[name]
    for x in ([0.3 + 0.2j, -0.7 + 0.1j], [1.4 - 0.5j, 0.2 + 0.9j]):
        x = np.array(x)
        got = fs_pullback_density(P, np.concatenate([[1.0], x]), j)
        assert got == pytest.approx(_fd_density(P.components, x, j), rel=1e-4, abs=1e-8)


def test_density_identity_is_one(maps):
    Z = sample_fs_array(2, 50, 4)
    for j in (0, 1, 2):
        d, ok = pullback_density_array(maps["identity"], Z, j)
        assert ok.all() and np.allclose(d, 1.0)


def test_density_at_indeterminacy(maps):
    with pytest.raises(IndeterminatePoint):
        fs_pullback_density(maps["cremona"], [1, 0, 0], 1)


def test_density_nonnegative(maps):
    d, ok = pullback_density_array(maps["dense"], sample_fs_array(2, 2000, 5), 2)
    assert np.all(d[ok] >= 0)


def test_mc_integral_p1_degree():
    P = mk("t^3", "z^3 + t*z^2", variables=["t", "z"])
    mean, se, _ = mc_pullback_integral(P, 1, 50_000, 0)
    assert abs(mean - 3) < 3 * se + 1e-3


def test_mc_integral_holomorphic_p2(maps):
    mean, se, _ = mc_pullback_integral(maps["E1"], 2, 100_000, 0)
    assert abs(mean - 4) < 3 * se
