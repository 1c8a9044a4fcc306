"""Empirical measures from backward iteration, pushforwards, moments and Green functions."""

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DeadEnd, InfiniteFiber, ChartDegeneracy, ResourceLimit, DegenerateInput,
    IndeterminateOrbit, NoConvergence,
)
from .projcore import normalize_rows, INDETERMINACY_GUARD
from .ratmap import monomial_preimages
from .solve import fiber

DEFAULT_TREE_CAP = 100_000
REFERENCES = ("circle_haar", "torus_haar", "sample_measure")


class EmpiricalMeasure:
    """Weighted atoms on P^n.

    Parameters
    ----------
    coords : array_like, shape (S, n+1)
        Homogeneous coordinates of the atoms (normalized to unit rows).
    weights : array_like, shape (S,)
    exact_total : Fraction, optional
        Exact total mass when the weights are known rationals.
    shortfall : Fraction or float
        Mass lost to indeterminacy, empty fibers or contracted branches.
    """

    def __init__(self, coords, weights, exact_total=None, shortfall=0, info=None):
        Z = np.atleast_2d(np.asarray(coords, dtype=complex))
        self.coords = normalize_rows(Z) if len(Z) else Z
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != (len(self.coords),):
            raise ValueError("need exactly one weight per atom")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        self.exact_total = exact_total
        self.shortfall = shortfall
        self.info = dict(info or {})

    @property
    def total_weight(self):
        if self.exact_total is not None:
            return float(self.exact_total)
        return float(self.weights.sum())

    @property
    def dim(self):
        return self.coords.shape[1] - 1

    @property
    def points(self):
        from .projcore import normalize
        return [(normalize(z), float(w)) for z, w in zip(self.coords, self.weights)]

    def __len__(self):
        return len(self.coords)

    def affine(self, chart=0):
        """Affine coordinates in the chart ``z_chart = 1`` (inf where undefined)."""
        c = self.coords[:, chart:chart + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            A = np.delete(self.coords, chart, axis=1) / c
        return A

    def integrate(self, values):
        return float(np.dot(self.weights, values)) if np.isrealobj(values) else complex(np.dot(self.weights, values))

    def to_csv(self, path, chart=0):
        """One row per atom: re/im of each affine coordinate, weight, chart id."""
        A = self.affine(chart)
        n = A.shape[1]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            head = []
            for i in range(n):
                head += [f"re_x{i + 1}", f"im_x{i + 1}"]
            wr.writerow(head + ["weight", "chart"])
            for a, w in zip(A, self.weights):
                row = []
                for v in a:
                    row += [repr(float(v.real)), repr(float(v.imag))]
                wr.writerow(row + [repr(float(w)), chart])

    @classmethod
    def dirac(cls, w):
        w = np.asarray(getattr(w, "coords", w), dtype=complex)
        return cls(w[None, :], [1.0], exact_total=Fraction(1))


# --- backward iteration ---------------------------------------------------------

def _is_torus_monomial(P, Z):
    return P.is_monomial() and P.source_dim == P.target_dim and np.all(np.abs(Z) > 0)


def _preimages_of_level(P, Z, seed):
    """Pre-images of every row of Z.

    Returns ``(points, parent_index, multiplicity)``; rows whose fiber is
    empty or infinite simply contribute nothing.
    """
    if _is_torus_monomial(P, Z):
        X = monomial_preimages(P, Z)
        S, lam, N = X.shape
        return X.reshape(S * lam, N), np.repeat(np.arange(S), lam), np.ones(S * lam, dtype=int)
    pts, parents, mults = [], [], []
    for i, z in enumerate(Z):
        try:
            F = fiber(P, z, chart_seed=seed + i)
        except (InfiniteFiber, ChartDegeneracy, NoConvergence):
            continue
        pts.append(F.points_array)
        parents.append(np.full(len(F.points_array), i))
        mults.append(np.asarray(F.multiplicities, dtype=int))
    if not pts:
        N = Z.shape[1]
        return np.zeros((0, N), dtype=complex), np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    return np.concatenate(pts), np.concatenate(parents), np.concatenate(mults)


def backward_tree(P, w, depth, cap=DEFAULT_TREE_CAP, seed=0, lam=None):
    """All iterated pre-images of ``w`` down to ``depth``, weighted by mult / lambda^depth.

    Mass carried by branches that die (indeterminacy, empty or infinite
    fibers) is reported as ``shortfall`` rather than renormalized away.

    Raises
    ------
    ResourceLimit
        If lambda^depth exceeds ``cap``.
    """
    if P.source_dim != P.target_dim or P.source_dim not in (1, 2):
        if not (P.is_monomial() and P.source_dim == P.target_dim):
            raise DegenerateInput("backward trees need a self-map of P^1 or P^2")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if lam is None:
        from .degrees import topological_degree
        lam = topological_degree(P, seed=seed)
    if lam ** depth > cap:
        raise ResourceLimit(f"lambda^depth = {lam ** depth} exceeds cap {cap}")
    Z = np.asarray(getattr(w, "coords", w), dtype=complex)[None, :]
    Z = normalize_rows(Z)
    mult = np.ones(1, dtype=object)  # exact integers, product of multiplicities
    for level in range(depth):
        X, parent, m = _preimages_of_level(P, Z, seed + 7919 * level)
        Z = X
        mult = mult[parent] * m.astype(object)
    denom = lam ** depth
    total = Fraction(int(sum(mult)), denom) if len(mult) else Fraction(0)
    weights = np.array([float(Fraction(int(k), denom)) for k in mult]) if len(mult) else np.zeros(0)
    return EmpiricalMeasure(Z, weights, exact_total=total, shortfall=1 - total,
                            info={"depth": depth, "lambda": lam})


def backward_walk(P, w, burn_in=50, samples=10_000, seed=0, max_restarts=1000):
    """Random backward orbit: each step jumps to a multiplicity-weighted random pre-image.

    The states after ``burn_in`` are recorded with equal weights.  Dead ends
    (empty or infinite fibers) restart the chain from ``w``; the number of
    restarts is reported in ``info``.

    Raises
    ------
    DeadEnd
        If more than ``max_restarts`` restarts occur.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng([int(seed), 0xB0B])
    w0 = normalize_rows(np.asarray(getattr(w, "coords", w), dtype=complex)[None, :])[0]
    z = w0
    out = np.empty((samples, len(w0)), dtype=complex)
    restarts = 0
    step = 0
    recorded = 0
    while recorded < samples:
        X, _, m = _preimages_of_level(P, z[None, :], seed + step)
        step += 1
        if len(X) == 0:
            restarts += 1
            if restarts > max_restarts:
                raise DeadEnd(f"backward walk hit {restarts} dead ends")
            z = w0
            continue
        p = m / m.sum()
        z = X[rng.choice(len(X), p=p)]
        if step > burn_in:
            out[recorded] = z
            recorded += 1
    return EmpiricalMeasure(out, np.full(samples, 1.0 / samples), exact_total=Fraction(1),
                            info={"burn_in": burn_in, "restarts": restarts, "seed": seed})


def pushforward(P, m, guard=INDETERMINACY_GUARD):
    """Image measure P_* m; atoms on the indeterminacy locus are dropped and counted."""
    V = P.evaluate_many(m.coords)
    scale = max(c.coefficient_norm() for c in P.components)
    norms = np.linalg.norm(V, axis=1)
    keep = norms >= guard * scale
    dropped = int((~keep).sum())
    exact = m.exact_total if dropped == 0 else None
    info = dict(m.info)
    info["dropped"] = dropped
    return EmpiricalMeasure(V[keep], m.weights[keep], exact_total=exact,
                            shortfall=m.shortfall, info=info)


# --- comparing measures ----------------------------------------------------------

def _hermitian_embedding(Z):
    """z -> z z^* flattened to reals; Frobenius distance = sqrt(2) * chordal distance."""
    H = Z[:, :, None] * Z.conj()[:, None, :]
    H = H.reshape(len(Z), -1)
    return np.concatenate([H.real, H.imag], axis=1)


def aggregate(m, tol=1e-7):
    """Merge atoms closer than ``tol`` (chordal) into single weighted atoms."""
    E = _hermitian_embedding(m.coords)
    tree = cKDTree(E)
    pairs = tree.query_pairs(tol * np.sqrt(2), output_type="ndarray")
    parent = np.arange(len(E))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(len(E))])
    uniq, inv = np.unique(roots, return_inverse=True)
    W = np.bincount(inv, weights=m.weights)
    return m.coords[uniq], W


def measures_match(a, b, tol=1e-7, weight_tol=1e-12):
    """True when two measures agree as weighted multisets up to ``tol`` (chordal).

    Returns ``(ok, max_distance, max_weight_error)``.
    """
    Za, Wa = aggregate(a, tol)
    Zb, Wb = aggregate(b, tol)
    if len(Za) != len(Zb):
        return False, float("inf"), float("inf")
    tree = cKDTree(_hermitian_embedding(Zb))
    d, j = tree.query(_hermitian_embedding(Za))
    d = d / np.sqrt(2)
    bijective = len(np.unique(j)) == len(j)
    werr = float(np.max(np.abs(Wa - Wb[j]))) if len(j) else 0.0
    dmax = float(np.max(d)) if len(d) else 0.0
    return bool(bijective and dmax < tol and werr < weight_tol), dmax, werr


def _multi_indices(n, order):
    return [a for a in product(range(order + 1), repeat=n) if sum(a) <= order]


def _affine_for_moments(m, chart):
    A = m.affine(chart)
    finite = np.all(np.isfinite(A), axis=1)
    return A, finite


def moments(m, max_order, chart=0):
    """Dictionary (a, b) -> integral of x^a conj(x)^b over the affine chart, plus log moduli."""
    A, finite = _affine_for_moments(m, chart)
    A, w = A[finite], m.weights[finite]
    n = A.shape[1]
    idx = _multi_indices(n, max_order)
    pw = {a: np.prod(A ** np.array(a), axis=1) for a in idx}
    out = {}
    for a in idx:
        for b in idx:
            out[(a, b)] = complex(np.dot(w, pw[a] * pw[b].conj()))
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(A))
    out["log"] = np.dot(w, logs) / max(w.sum(), 1e-300)
    return out


def _haar_moments(n, max_order):
    idx = _multi_indices(n, max_order)
    out = {(a, b): (1.0 + 0j if a == b else 0j) for a in idx for b in idx}
    out["log"] = np.zeros(n)
    return out


def moment_discrepancy(m, reference="circle_haar", max_order=4, chart=0, sample=None):
    """Largest difference of affine moments (and mean log-moduli) against a reference.

    ``circle_haar`` (P^1) and ``torus_haar`` (P^2) are Haar measures on the
    unit circle / unit torus in the chart ``z_chart = 1``; their moments are
    used in closed form (delta_{ab}, zero mean log-modulus).  With
    ``sample_measure`` the reference is the EmpiricalMeasure ``sample``.
    """
    if reference not in REFERENCES:
        raise ValueError(f"reference must be one of {REFERENCES}")
    n = m.dim
    if reference == "circle_haar" and n != 1:
        raise DegenerateInput("circle_haar reference lives on P^1")
    if reference == "torus_haar" and n != 2:
        raise DegenerateInput("torus_haar reference lives on P^2")
    mine = moments(m, max_order, chart)
    if reference == "sample_measure":
        if sample is None:
            raise ValueError("sample_measure reference needs `sample`")
        ref = moments(sample, max_order, chart)
    else:
        ref = _haar_moments(n, max_order)
    worst = 0.0
    for key, v in mine.items():
        if key == "log":
            continue
        worst = max(worst, abs(v - ref[key]))
    worst = max(worst, float(np.max(np.abs(mine["log"] - ref["log"]))))
    return float(worst)


def cauchy_rate(P, w, depths, max_order=3, chart=0, seed=0, lam=None):
    """Successive-tree discrepancies D_k = |mu_k - mu_{k+1}| and their fitted geometric ratio.

    Returns ``(ratio, D)`` with ``D`` indexed like ``depths``.
    """
    depths = list(depths)
    trees = {k: backward_tree(P, w, k, seed=seed, lam=lam) for k in depths + [depths[-1] + 1]}
    D = np.array([moment_discrepancy(trees[k], "sample_measure", max_order, chart, sample=trees[k + 1])
                  for k in depths])
    slope = np.polyfit(np.array(depths, dtype=float), np.log(D), 1)[0]
    return float(np.exp(slope)), D


# --- Green functions --------------------------------------------------------------

@dataclass
class GreenEstimate:
    """G_k = base^{-k} log(1 + |P_k(x)|^2) on a grid of affine points."""

    k: int
    normalizer: float
    points: np.ndarray
    values: np.ndarray
    indeterminate: list = field(default_factory=list)

    @property
    def grid_values(self):
        return list(zip(map(tuple, self.points), self.values))


def _log_eval(poly, logX):
    """log of a polynomial at points given by complex logs of coordinates (log-sum-exp)."""
    terms = list(poly.terms.items())
    E = np.array([e for e, _ in terms], dtype=float)                      # (T, N)
    C = np.array([complex(c) for _, c in terms])
    finite = np.isfinite(logX.real)
    # 0 * log(0) must count as 0: handle zero coordinates separately
    T = np.where(finite, logX, 0) @ E.T + np.log(C)[None, :]           # (S, T)
    vanish = (~finite).astype(float) @ (E > 0).T.astype(float) > 0
    T = np.where(vanish, -np.inf + 0j, T)
    re = np.where(np.isnan(T.real), -np.inf, T.real)
    mx = np.max(re, axis=1)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(invalid="ignore"):
        s = np.sum(np.exp(np.where(np.isfinite(re), T - safe[:, None], -np.inf)), axis=1)
    with np.errstate(divide="ignore"):
        out = np.log(s) + safe
    return np.where(np.isfinite(mx), out, -np.inf + 0j), mx


def green_estimate(P, k, normalizer_base, grid, guard=INDETERMINACY_GUARD):
    """Evaluate base^{-k} log(1 + |affine P_k|^2) at affine grid points.

    The orbit of the homogeneous lift (1, x) is propagated in log coordinates
    (each component is evaluated by log-sum-exp over its monomials), so the
    doubly-exponential growth of |P_k| never overflows.  Points whose orbit
    reaches the indeterminacy locus are marked (value NaN) and listed.
    """
    if P.source_dim != P.target_dim:
        raise DegenerateInput("Green functions need a self-map")
    if normalizer_base <= 1:
        raise ValueError("normalizer_base must exceed 1")
    grid = np.atleast_2d(np.asarray(grid, dtype=complex))
    S = len(grid)
    H = np.concatenate([np.ones((S, 1), dtype=complex), grid], axis=1)
    with np.errstate(divide="ignore"):
        logX = np.log(H)
    bad = np.zeros(S, dtype=bool)
    comps = P.components
    log_guard = np.log(guard)
    for _ in range(k):
        pairs = [_log_eval(c, logX) for c in comps]
        new = np.stack([v for v, _ in pairs], axis=1)
        biggest_term = np.max(np.stack([t for _, t in pairs], axis=1), axis=1)
        top_out = np.max(new.real, axis=1)
        # P(v) is zero up to cancellation error: the orbit has hit I_P
        with np.errstate(invalid="ignore"):
            bad |= ~np.isfinite(top_out) | (top_out - biggest_term < log_guard)
        logX = new - np.where(np.isfinite(top_out), top_out, 0.0)[:, None]
    r = 2 * logX.real
    mx = np.max(r, axis=1)
    with np.errstate(invalid="ignore"):
        lse = mx + np.log(np.sum(np.exp(r - mx[:, None]), axis=1))
        vals = (lse - r[:, 0]) / normalizer_base ** k
    vals = np.where(bad, np.nan, vals)
    marked = [tuple(grid[i]) for i in np.flatnonzero(bad)]
    return GreenEstimate(k, float(normalizer_base) ** k, grid, vals, marked)


def green_at(P, k, normalizer_base, point):
    """Single-point Green estimate; raises IndeterminateOrbit when the orbit hits I_P."""
    est = green_estimate(P, k, normalizer_base, [point])
    if est.indeterminate:
        raise IndeterminateOrbit(f"orbit of {point} reaches the indeterminacy locus")
    return float(est.values[0])


def affine_grid(lo, hi, num, dims=2):
    """Real tensor grid in [lo, hi]^dims as complex affine points."""
    axis = np.linspace(lo, hi, num)
    G = np.meshgrid(*([axis] * dims), indexing="ij")
    return np.stack([g.ravel() for g in G], axis=1).astype(complex)


def indeterminacy_mass(m, points, radius=1e-3):
    """Mass of ``m`` within chordal ``radius`` of the given points (diagnostic only)."""
    if not len(points):
        return 0.0
    Z = np.asarray([getattr(p, "coords", p) for p in points], dtype=complex)
    E = _hermitian_embedding(normalize_rows(Z))
    d, _ = cKDTree(E).query(_hermitian_embedding(m.coords))
    return float(m.weights[d / np.sqrt(2) < radius].sum())


__all__ = [
    "EmpiricalMeasure", "GreenEstimate", "backward_tree", "backward_walk", "pushforward",
    "moment_discrepancy", "moments", "measures_match", "aggregate", "cauchy_rate",
    "green_estimate", "green_at", "affine_grid", "indeterminacy_mass",
]
