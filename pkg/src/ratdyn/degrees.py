"""Intermediate degrees, topological degree and degree-inequality reports."""

from collections import Counter
from dataclasses import dataclass, field, asdict
import random

import numpy as np

from .errors import (
    UnstableCount, RankDeficient, InfiniteFiber, ChartDegeneracy, DegenerateInput,
    RatDynError,
)
from .polyalg import GaussianRational
from .projcore import sample_fs_array, mc_pullback_integral
from .ratmap import compose, iterates, indeterminacy_points
from .solve import fiber

FIBER_COUNT = "fiber_count"
CURVE_DEGREE = "curve_degree"
MONOMIAL_DETERMINANT = "monomial_determinant"
MC_INTEGRAL = "mc_integral"


class InvariantViolation(RatDynError, RuntimeError):
    """A computed degree table breaks one of the degree inequalities."""


def _target(n, seed, trial, attempt):
    return sample_fs_array(n, 1, seed, shard_index=trial * 16 + attempt, shard_count=1 << 20)[0]


def fiber_count(P, seed=0, trial=0, retries=8):
    """Generic fiber cardinality for one seeded random target.

    Targets whose fiber is infinite are resampled (they lie in a proper
    algebraic subset).  Returns ``(count, target)``.
    """
    last = None
    for attempt in range(retries + 1):
        w = _target(P.source_dim, seed, trial, attempt)
        try:
            F = fiber(P, w, chart_seed=seed * 1009 + trial * 31 + attempt)
        except (InfiniteFiber, ChartDegeneracy) as exc:
            last = exc
            continue
        return F.count(), w
    raise last


def topological_degree(P, trials=7, seed=0, min_agree=None):
    """Number of pre-images of a generic point, counted with multiplicity.

    Dominant monomial maps use |det| of the affine exponent matrix; everything
    else counts fibers over ``trials`` random targets and requires a modal
    value shared by at least ``min_agree`` of them (5 of 7 by default).

    Raises
    ------
    UnstableCount
        If no count reaches the required agreement.
    """
    return _topological_degree(P, trials, seed, min_agree)[0]


def _topological_degree(P, trials, seed, min_agree=None):
    if P.source_dim != P.target_dim:
        raise DegenerateInput("topological degree needs a self-map")
    E = P.exponent_matrix()
    if E is not None:
        lam = E.topological_degree()
        if lam == 0:
            raise RankDeficient("monomial map is not dominant")
        return lam, MONOMIAL_DETERMINANT, []
    if P.source_dim > 2:
        raise DegenerateInput("fiber counting is implemented for n <= 2")
    if min_agree is None:
        min_agree = max(1, -(-5 * trials // 7))
    counts = []
    for t in range(trials):
        c, _ = fiber_count(P, seed, t)
        counts.append(c)
    mode, freq = Counter(counts).most_common(1)[0]
    # a non-generic target can only lose pre-images, so ties go to the larger
    top = max(c for c, f in Counter(counts).items() if f == freq)
    if freq < min_agree:
        raise UnstableCount(f"fiber counts disagree: {counts}", counts)
    if mode == 0:
        raise RankDeficient("generic fibers are empty: map is not dominant")
    return top, FIBER_COUNT, counts


def _generic_hyperplane_pullback(P, seed):
    rng = random.Random(seed)
    acc = None
    for c in P.components:
        if c.is_zero():
            continue
        a = GaussianRational(rng.randint(-9, 9) or 1, rng.randint(-9, 9))
        acc = c * a if acc is None else acc + c * a
    return acc


def intermediate_degree(P, l, seed=0, trials=7):
    """δ_l(P) for l = 1 (hyperplane pullback) or l = n (fiber count).

    Raises
    ------
    RankDeficient
        If the generic pullback is empty (constant map or rank below l).
    """
    return _intermediate_degree(P, l, seed, trials)[0]


def _intermediate_degree(P, l, seed, trials):
    n = P.source_dim
    if not 1 <= l <= min(n, P.target_dim):
        raise ValueError(f"l must lie in [1, {min(n, P.target_dim)}]")
    if l == n and n == P.target_dim:
        lam, method, _ = _topological_degree(P, trials, seed)
        return lam, method
    if l == 1:
        H = _generic_hyperplane_pullback(P, seed)
        if H is None or H.is_zero() or not H.degree:
            raise RankDeficient("generic hyperplane pulls back to nothing")
        return H.degree, CURVE_DEGREE
    raise DegenerateInput(f"δ_{l} for 1 < l < n is not implemented")


def mc_degree(P, l, samples=100_000, seed=0):
    """Monte-Carlo integral of the pulled-back FS form against FS volume.

    Returns ``(estimate, std_error)``.

    Notes
    -----
    For ``l < n`` the density has a heavy tail near indeterminacy points
    (for (t^3, t z^2, w^3) the tail decays like s^(-4/3)), so the sample
    variance is infinite and ``std_error`` understates the error.  The
    estimate stays unbiased.  For ``l = n`` and for holomorphic maps the
    variance is finite.
    """
    mean, se, _ = mc_pullback_integral(P.components, l, samples, seed)
    return mean, se


@dataclass
class DegreeReport:
    """Degrees of one map (typically an iterate P_k)."""

    map_id: str
    k: int
    d: int
    deltas: list
    methods: list
    lam: int = None
    holomorphic: bool = None
    q: int = None
    seeds: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def to_dict(self):
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        out["method_per_entry"] = out.pop("methods")
        return out


def degree_report(P, k=1, seed=0, trials=7, map_id=None):
    """All available δ_l of P plus indeterminacy data, with invariant checks."""
    n = min(P.source_dim, P.target_dim)
    deltas, methods = [], []
    for l in range(1, n + 1):
        try:
            v, m = _intermediate_degree(P, l, seed, trials)
        except DegenerateInput:
            v, m = None, "unavailable"
        deltas.append(v)
        methods.append(m)
    rep = DegreeReport(map_id or P.map_id(), k, P.degree, deltas, methods, seeds=[seed])
    if P.source_dim == P.target_dim:
        rep.lam = deltas[-1]
    if P.source_dim == 2 and P.target_dim == 2:
        ind = indeterminacy_points(P, seed=seed)
        rep.q = ind.q
        rep.holomorphic = ind.is_empty()
        rep.checks["delta2_plus_q_equals_d_squared"] = deltas[1] + ind.q == P.degree ** 2
    elif P.source_dim == 1:
        rep.holomorphic = True
    _check_report(rep)
    return rep


def _check_report(rep):
    d = rep.d
    ok = {}
    vals = rep.deltas
    ok["bounds"] = all(v is None or 1 <= v <= d ** (i + 1) for i, v in enumerate(vals))
    sub = True
    for a in range(len(vals)):
        for b in range(len(vals)):
            c = a + b + 1
            if c < len(vals) and None not in (vals[a], vals[b], vals[c]):
                sub &= vals[c] <= vals[a] * vals[b]
    ok["submultiplicative"] = sub
    if rep.holomorphic is not None and rep.lam is not None:
        ok["holomorphic_iff_top_degree"] = rep.holomorphic == (rep.lam == d ** len(vals))
    rep.checks.update(ok)
    failed = [k for k, v in rep.checks.items() if v is False]
    if failed:
        raise InvariantViolation(f"degree report for {rep.map_id} fails {failed}: {rep.to_dict()}")


def degree_table(P, k_max, seed=0, trials=7):
    """DegreeReports for the iterates P_1, ..., P_kmax."""
    if P.source_dim != P.target_dim:
        raise DegenerateInput("degree tables need a self-map")
    base = P.map_id()
    return [degree_report(Pk, k, seed, trials, map_id=f"{base}_k{k}")
            for k, Pk in enumerate(iterates(P, k_max), start=1)]


def inequality_report(P, Q, seed=0, trials=7):
    """Check submultiplicativity under composition and related identities.

    Computes δ_1 and δ_2 of P, Q and Q o P on P^2 and returns every value
    together with the boolean outcome of each inequality.
    """
    if not (P.source_dim == P.target_dim == Q.source_dim == Q.target_dim == 2):
        raise DegenerateInput("inequality report is defined for self-maps of P^2")
    QP = compose(Q, P)
    out = {}
    for label, M in (("P", P), ("Q", Q), ("QP", QP)):
        d1, _ = _intermediate_degree(M, 1, seed, trials)
        d2, _ = _intermediate_degree(M, 2, seed, trials)
        ind = indeterminacy_points(M, seed=seed)
        out[label] = {"degree": M.degree, "delta1": d1, "delta2": d2, "q": ind.q,
                      "holomorphic": ind.is_empty()}
    checks = {}
    for l in (1, 2):
        key = f"delta{l}"
        checks[f"composition_{key}"] = out["QP"][key] <= out["P"][key] * out["Q"][key]
    for label in ("P", "Q", "QP"):
        r = out[label]
        checks[f"{label}_delta2_le_delta1_sq"] = r["delta2"] <= r["delta1"] ** 2
        checks[f"{label}_delta2_plus_q"] = r["delta2"] + r["q"] == r["degree"] ** 2
        checks[f"{label}_holomorphic_iff_equality"] = r["holomorphic"] == (r["delta2"] == r["delta1"] ** 2)
    out["checks"] = checks
    out["all_pass"] = all(checks.values())
    return out


def mass_normalization(P, l, samples=100_000, seed=0, exact=None):
    """MC estimate of δ_l(P)^{-1} ∫ P^*ω^l ∧ ω^{n-l}; should be 1."""
    exact = exact or intermediate_degree(P, l, seed)
    mean, se = mc_degree(P, l, samples, seed)
    return mean / exact, se / exact


def sample_dense_map(rng, degree, n=2, density=1.0, coeff_range=3):
    """Random dominant self-map of P^n with small Gaussian-integer coefficients.

    Sparse draws (``density < 1``) can be non-dominant; those are rejected
    by a Jacobian test at a fixed random point.
    """
    from itertools import combinations_with_replacement
    from .polyalg import HomoPoly
    from .ratmap import reduce

    N = n + 1
    exps = []
    for combo in combinations_with_replacement(range(N), degree):
        e = [0] * N
        for v in combo:
            e[v] += 1
        exps.append(tuple(e))
    while True:
        comps = []
        for _ in range(N):
            terms = {}
            for e in exps:
                if rng.random() <= density:
                    terms[e] = GaussianRational(rng.randint(-coeff_range, coeff_range),
                                                rng.randint(-coeff_range, coeff_range))
            comps.append(HomoPoly(N, terms))
        if any(c.is_zero() for c in comps):
            continue
        P = reduce(comps)
        if P.degree == degree and _jacobian_full_rank(P):
            return P


def _jacobian_full_rank(P, h=1e-6, tol=1e-6):
    # the cone map C^{n+1} -> C^{n+1} is dominant iff P is; central differences
    z = np.array([1, 1j]) @ np.random.default_rng(0).standard_normal((2, P.source_dim + 1))
    N = len(z)
    steps = np.concatenate([z + h * np.eye(N), z - h * np.eye(N)])
    F = P.evaluate_many(steps)
    J = (F[:N] - F[N:]).T / (2 * h)
    scale = np.prod(np.linalg.norm(J, axis=0))
    return scale > 0 and abs(np.linalg.det(J)) > tol * scale


def sample_monomial_map(rng, degree, n=2):
    """Random dominant, reduced monomial self-map of P^n of the given degree."""
    from .polyalg import HomoPoly
    from .ratmap import RationalMap, exponent_matrix

    N = n + 1
    while True:
        rows = []
        for _ in range(N):
            cuts = sorted(rng.randint(0, degree) for _ in range(N - 1))
            parts = [b - a for a, b in zip([0] + cuts, cuts + [degree])]
            rows.append(tuple(parts))
        A = np.array(rows)
        if np.any(A.min(axis=0) > 0) or len(set(rows)) < N:
            continue
        P = RationalMap([HomoPoly.monomial(r) for r in rows], check=False)
        if exponent_matrix(P).det != 0:
            return P
