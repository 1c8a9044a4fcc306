import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ratdyn.errors import RankDeficient, DegenerateInput
from ratdyn.degrees import (
    topological_degree, intermediate_degree, degree_report, degree_table, inequality_report,
    mass_normalization, mc_degree, sample_monomial_map, sample_dense_map,
    FIBER_COUNT, CURVE_DEGREE, MONOMIAL_DETERMINANT,
)
from ratdyn.ratmap import compose, indeterminacy_points, exponent_matrix
from conftest import mk


# --- topological degree --------------------------------------------------------

@pytest.mark.parametrize("name,lam", [("cremona", 1), ("E2", 6), ("E1", 4), ("dense", 3), ("identity", 1)])
def test_topological_degree(maps, name, lam):
    assert topological_degree(maps[name]) == lam


def test_topological_degree_p1(maps):
    assert topological_degree(maps["z2"]) == 2
    assert topological_degree(mk("t^3 - z^3", "t*z^2", variables=["t", "z"])) == 3


def test_non_dominant_map():
    with pytest.raises(RankDeficient):
        topological_degree(mk("t^2", "t*z", "z^2"))


def test_monomial_determinant_matches_fiber_count(maps):
    # non-monomial presentation of Q's dynamics via a linear change of target coordinates
    Q = mk("t^3 + w^3", "t*z^2 - t^3", "w^3 + 2*t*z^2")
    assert topological_degree(Q) == exponent_matrix(maps["E2"]).topological_degree()


# --- intermediate degrees -------------------------------------------------------

@pytest.mark.parametrize("name,d1,d2", [("E2", 3, 6), ("cremona", 2, 1), ("identity", 1, 1), ("E1", 2, 4)])
def test_intermediate_degree(maps, name, d1, d2):
    assert intermediate_degree(maps[name], 1) == d1
    assert intermediate_degree(maps[name], 2) == d2


def test_intermediate_degree_bad_index(maps):
    with pytest.raises(ValueError):
        intermediate_degree(maps["E1"], 3)


def test_middle_index_unavailable_for_n3():
    # on P^3 only the endpoint indices are implemented; the monomial fast path gives l = 3
    P = mk("x0^2", "x1^2", "x2^2", "x3^2", variables=["x0", "x1", "x2", "x3"])
    with pytest.raises(DegenerateInput):
        intermediate_degree(P, 2)
    rep = degree_report(P)
    assert rep.deltas == [2, None, 8] and rep.methods[1] == "unavailable"


# --- tables and reports ---------------------------------------------------------

def test_degree_table_q(maps):
    reps = degree_table(maps["E2"], 3)
    assert [r.deltas for r in reps] == [[3, 6], [9, 36], [27, 216]]
    assert [r.q for r in reps] == [3, 45, 513]
    assert all(r.methods == [CURVE_DEGREE, MONOMIAL_DETERMINANT] for r in reps)


def test_degree_table_example3(maps):
    reps = degree_table(maps["E3"], 2)
    assert [r.deltas for r in reps] == [[3, 6], [6, 36]]


def test_degree_table_holomorphic(maps):
    reps = degree_table(maps["E1"], 2)
    assert [r.deltas for r in reps] == [[2, 4], [4, 16]]
    assert all(r.holomorphic for r in reps)


def test_report_serialization(maps):
    rep = degree_report(maps["dense"], seed=3)
    d = rep.to_dict()
    assert d["lambda"] == 3 and d["method_per_entry"] == [CURVE_DEGREE, FIBER_COUNT]
    assert d["seeds"] == [3] and d["q"] == 1 and d["holomorphic"] is False
    assert all(d["checks"].values())
    json.dumps(d)


def test_report_delta2_plus_q(maps):
    for name in ("E1", "E2", "E3", "cremona", "dense", "identity"):
        rep = degree_report(maps[name])
        assert rep.deltas[1] + rep.q == rep.d ** 2


def test_strict_inequality_implies_indeterminacy(maps):
    for name in ("E2", "cremona", "dense"):
        rep = degree_report(maps[name])
        assert rep.deltas[1] < rep.d ** 2 and not indeterminacy_points(maps[name]).is_empty()


# --- inequality reports ---------------------------------------------------------

def test_inequality_cremona_involution(maps):
    rep = inequality_report(maps["cremona"], maps["cremona"])
    assert rep["QP"]["degree"] == 1 and rep["QP"]["delta2"] == 1 and rep["all_pass"]


def test_inequality_q_equality_case(maps):
    rep = inequality_report(maps["E2"], maps["E2"])
    assert rep["QP"]["delta2"] == 36 == rep["P"]["delta2"] * rep["Q"]["delta2"]
    assert rep["all_pass"]


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6))
def test_inequalities_random_monomial(seed):
    rng = random.Random(seed)
    P = sample_monomial_map(rng, rng.randint(1, 3))
    Q = sample_monomial_map(rng, rng.randint(1, 3))
    rep = inequality_report(P, Q, seed=seed % 97)
    assert rep["all_pass"], rep


def test_monomial_degrees_match_exponent_oracle():
    # oracle: delta_2 = |det B|, delta_1 = row-reduced degree, q = d^2 - |det B|
    rng = random.Random(7)
    for _ in range(30):
        P = sample_monomial_map(rng, rng.randint(1, 3))
        A = exponent_matrix(P).matrix
        B = (A[1:, 1:] - A[0, 1:]).astype(float)
        rep = degree_report(P)
        assert rep.deltas[1] == round(abs(np.linalg.det(B)))
        assert rep.deltas[0] == P.degree == int(A.sum(axis=1)[0])


def test_inequalities_random_dense():
    rng = random.Random(11)
    for _ in range(3):
        P = sample_dense_map(rng, 2, density=0.7)
        Q = sample_dense_map(rng, rng.randint(1, 2), density=0.7)
        assert inequality_report(P, Q)["all_pass"]


def test_inequality_report_dimension_check(maps):
    with pytest.raises(DegenerateInput):
        inequality_report(maps["z2"], maps["z2"])


# --- Monte-Carlo route ----------------------------------------------------------

@pytest.mark.parametrize("name", ["cremona", "dense"])
def test_mc_degree_agrees_with_fiber_count(maps, name):
    mean, se = mc_degree(maps[name], 2, 40_000, 1)
    assert abs(mean - topological_degree(maps[name])) < 3 * se


def test_mc_degree_l1_holomorphic(maps):
    # finite variance needs an empty indeterminacy locus when l < n
    for P, d in ((maps["E1"], 2), (mk("t^2", "z^2 + t*w", "w^2 + t*z"), 2)):
        mean, se = mc_degree(P, 1, 40_000, 2)
        assert abs(mean - d) < 3 * se


def test_mc_degree_l1_heavy_tail_is_unbiased(maps):
    # near (0,1,0) the l = 1 density of Q has infinite variance; average many
    # independent runs and compare with their empirical spread instead
    means = np.array([mc_degree(maps["E2"], 1, 20_000, s)[0] for s in range(30)])
    assert abs(means.mean() - 3) < 3 * means.std(ddof=1) / np.sqrt(len(means)) + 0.02


def test_mass_normalization(maps):
    for k, Pk in ((1, maps["E2"]), (2, compose(maps["E2"], maps["E2"]))):
        m, se = mass_normalization(Pk, 2, 40_000, seed=k)
        assert abs(m - 1) < 3 * se
    for k, Pk in ((1, maps["E1"]), (2, compose(maps["E1"], maps["E1"]))):
        for l in (1, 2):
            m, se = mass_normalization(Pk, l, 40_000, seed=k)
            assert abs(m - 1) < 3 * se
