"""Rational self-maps of projective space as reduced homogeneous tuples."""

from dataclasses import dataclass
from fractions import Fraction
from math import comb
import hashlib
import json
import random
import re

import numpy as np

from .errors import (
    DegreeMismatch, AllZero, DimensionMismatch, CollapsedComposition,
    ResourceLimit, PositiveDimensionalLocus, ChartDegeneracy, DegenerateInput,
    InfiniteFiber,
)
from .polyalg import HomoPoly, GaussianRational, parse, gcd_many, default_variables
from .polyalg.algorithms import resultant_binary, u_gcd, u_trim, u_squarefree
from .projcore import normalize, normalize_rows

DEFAULT_TERM_CAP = 10 ** 6
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class RationalMap:
    """Rational map P^n --> P^m given by reduced components of equal degree.

    Parameters
    ----------
    components : sequence of HomoPoly
        ``m + 1`` forms in ``n + 1`` variables.
    variables : list of str, optional
        Display names of the source variables.
    name : str, optional
        Label used in reports.
    check : bool
        Verify that the components have no common factor.  Internal callers
        that have just reduced pass ``False``.
    """

    def __init__(self, components, variables=None, name=None, check=True):
        comps = list(components)
        if not comps:
            raise AllZero("a map needs at least one component")
        nv = comps[0].num_vars
        if any(c.num_vars != nv for c in comps):
            raise DimensionMismatch("components use different variable counts")
        nonzero = [c for c in comps if not c.is_zero()]
        if not nonzero:
            raise AllZero("all components vanish")
        degs = {c.degree for c in nonzero}
        if len(degs) != 1:
            raise DegreeMismatch(f"components have degrees {sorted(degs)}")
        self.components = tuple(comps)
        self.degree = degs.pop()
        self.source_dim = nv - 1
        self.target_dim = len(comps) - 1
        self.variables = list(variables) if variables else default_variables(nv)
        self.name = name
        if check:
            g = gcd_many(nonzero)
            if g.degree:
                raise DegenerateInput(f"components share a factor of degree {g.degree}; call reduce()")

    # --- basic -------------------------------------------------------------
    @property
    def n(self):
        return self.source_dim

    @property
    def m(self):
        return self.target_dim

    def is_monomial(self):
        return all(c.is_unit_monomial() for c in self.components)

    def exponent_matrix(self):
        return exponent_matrix(self)

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        return np.array([c.evaluate(z) for c in self.components])

    def evaluate_many(self, Z):
        return np.stack([c.evaluate_many(Z) for c in self.components], axis=1)

    __call__ = evaluate

    def render(self):
        return [c.render(self.variables) for c in self.components]

    def __eq__(self, other):
        if not isinstance(other, RationalMap):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return f"RationalMap({', '.join(self.render())})"

    def to_dict(self):
        return {"n": self.n, "m": self.m, "variables": self.variables,
                "components": self.render()}

    def map_id(self):
        if self.name:
            return self.name
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    # --- dynamics ------------------------------------------------------------
    def compose(self, inner, term_cap=DEFAULT_TERM_CAP):
        """``self o inner``."""
        return compose(self, inner, term_cap)

    def iterate(self, k, term_cap=DEFAULT_TERM_CAP):
        return iterate(self, k, term_cap)

    @classmethod
    def identity(cls, n):
        return cls([HomoPoly.variable(n + 1, i) for i in range(n + 1)], name=f"identity_P{n}", check=False)

    @classmethod
    def from_strings(cls, components, variables=None, name=None):
        """Parse component strings, then reduce."""
        if variables is None:
            variables = default_variables(_guess_num_vars(components))
        polys = [parse(s, variables) for s in components]
        return reduce(polys, variables=variables, name=name)


def _guess_num_vars(components):
    names = set()
    for s in components:
        names.update(tok for tok in _NAME.findall(s) if tok != "i")
    for nv in (2, 3):
        if names <= set(default_variables(nv)):
            return nv
    raise ValueError("cannot infer variables; pass them explicitly")


# --- reduction and composition ----------------------------------------------

def reduce(raw_components, variables=None, name=None):
    """Divide out the common factor of the components.

    Raises
    ------
    DegreeMismatch
        If the nonzero components have different degrees.
    AllZero
        If every component is zero.
    """
    comps = list(raw_components)
    nonzero = [c for c in comps if not c.is_zero()]
    if not nonzero:
        raise AllZero("all components vanish")
    degs = {c.degree for c in nonzero}
    if len(degs) != 1:
        raise DegreeMismatch(f"components have degrees {sorted(degs)}")
    if all(c.is_unit_monomial() for c in comps):
        A = np.array([next(iter(c.terms)) for c in comps], dtype=np.int64)
        A = A - A.min(axis=0)
        out = [HomoPoly.monomial(tuple(int(x) for x in row)) for row in A]
        return RationalMap(out, variables, name, check=False)
    g = gcd_many(nonzero)
    if g.degree:
        comps = [c if c.is_zero() else c.exact_div(g) for c in comps]
    return RationalMap(comps, variables, name, check=False)


def compose(Q, P, term_cap=DEFAULT_TERM_CAP):
    """Reduced composition ``Q o P``.

    Raises
    ------
    DimensionMismatch
        If P's target is not Q's source.
    CollapsedComposition
        If every composed component vanishes identically.
    ResourceLimit
        If a composed component would exceed ``term_cap`` terms.
    """
    if P.target_dim != Q.source_dim:
        raise DimensionMismatch(f"cannot compose P^{P.target_dim} target with P^{Q.source_dim} source")
    if P.is_monomial() and Q.is_monomial():
        AQ = exponent_matrix(Q).matrix
        AP = exponent_matrix(P).matrix
        A = AQ @ AP
        A = A - A.min(axis=0)
        comps = [HomoPoly.monomial(tuple(int(x) for x in row)) for row in A]
        return RationalMap(comps, P.variables, check=False)
    D = Q.degree * P.degree
    bound = comb(D + P.source_dim, P.source_dim)
    if bound > term_cap:
        raise ResourceLimit(f"composed degree {D} allows {bound} terms > cap {term_cap}")
    comps = []
    for q in Q.components:
        c = q.substitute(list(P.components))
        if len(c) > term_cap:
            raise ResourceLimit(f"composed component has {len(c)} terms > cap {term_cap}")
        comps.append(c)
    if all(c.is_zero() for c in comps):
        raise CollapsedComposition("image of the inner map lies in the zero set of every component")
    return reduce(comps, variables=P.variables)


def iterate(P, k, term_cap=DEFAULT_TERM_CAP):
    """k-th iterate with reduction after every step."""
    if P.source_dim != P.target_dim:
        raise DimensionMismatch("iteration needs a self-map")
    if k < 1:
        raise ValueError("k must be >= 1")
    out = P
    for _ in range(k - 1):
        out = compose(P, out, term_cap)
    return out


def iterates(P, k_max, term_cap=DEFAULT_TERM_CAP):
    """List [P_1, ..., P_kmax], each reduced."""
    out = [P]
    for _ in range(k_max - 1):
        out.append(compose(P, out[-1], term_cap))
    return out


def degree_sequence(P, k_max, term_cap=DEFAULT_TERM_CAP):
    return [Pk.degree for Pk in iterates(P, k_max, term_cap)]


# --- exponent matrices --------------------------------------------------------

def _int_det(M):
    """Exact integer determinant (Bareiss)."""
    M = [[int(x) for x in row] for row in M]
    n = len(M)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def _int_adj(M):
    n = len(M)
    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[M[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            adj[j][i] = (-1) ** (i + j) * _int_det(minor)
    return adj


@dataclass
class ExponentMatrix:
    """Exponents of a map whose components are unit monomials.

    ``matrix[i, j]`` is the exponent of variable ``j`` in component ``i``.
    """

    matrix: np.ndarray
    valid: bool = True

    @property
    def affine(self):
        """Exponents of P_i / P_0 in the chart z_0 = 1 (rows and columns 1..n)."""
        A = self.matrix
        return A[1:, 1:] - A[0, 1:][None, :]

    @property
    def det(self):
        B = self.affine
        if B.shape[0] != B.shape[1]:
            return 0
        return _int_det(B.tolist())

    def topological_degree(self):
        return abs(self.det)


def exponent_matrix(P):
    """ExponentMatrix of P, or None when some component is not a unit monomial."""
    if not P.is_monomial():
        return None
    A = np.array([next(iter(c.terms)) for c in P.components], dtype=np.int64)
    return ExponentMatrix(A)


def monomial_fiber(P, w, box_cap=10 ** 7):
    """Pre-images of a torus point under a dominant monomial self-map.

    On the torus the equations P_i/P_0 = w_i/w_0 become B log x = log c
    modulo 2 pi i Z^n.  Solutions correspond to cosets of Z^n / B Z^n, which
    are enumerated as the integer points m with B^{-1} m in [0, 1)^n.
    """
    from .solve import Fiber

    w = np.asarray(w, dtype=complex)
    E = exponent_matrix(P)
    B = E.affine
    n = B.shape[0]
    det = E.det
    if det == 0:
        raise InfiniteFiber("monomial map is not dominant (singular exponent matrix)")
    reps = _coset_representatives(B, det, box_cap)
    logc = np.log(w[1:] / w[0])
    rhs = logc[:, None] + 2j * np.pi * reps.T
    L = np.linalg.solve(B.astype(float), rhs)
    Z = np.concatenate([np.ones((1, L.shape[1]), dtype=complex), np.exp(L)], axis=0).T
    Z = normalize_rows(Z)
    excl = np.zeros((0, n + 1), dtype=complex)
    excl_m = np.zeros(0, dtype=int)
    if n == 2:
        rep = _monomial_indeterminacy(P)
        if rep.points:
            excl = np.array([p.coords for p, _ in rep.points])
            excl_m = np.array([m for _, m in rep.points], dtype=int)
    return Fiber(abs(det), Z, np.ones(len(Z), dtype=int), excl, excl_m, "monomial")


def monomial_preimages(P, W, box_cap=10 ** 7):
    """Vectorized torus pre-images of many targets under a dominant monomial map.

    ``W`` has shape (S, n+1) with all coordinates nonzero.  Returns an array of
    shape (S, lambda, n+1) of unit representatives (no phase fixing).
    """
    W = np.asarray(W, dtype=complex)
    E = exponent_matrix(P)
    if E is None or E.det == 0:
        raise InfiniteFiber("map is not a dominant monomial map")
    B = E.affine
    reps = _coset_representatives(B, E.det, box_cap)
    Binv = np.linalg.inv(B.astype(float))
    logc = np.log(W[:, 1:] / W[:, :1])                      # (S, n)
    base = logc @ Binv.T                                     # (S, n)
    shifts = (2j * np.pi) * (reps @ Binv.T)                  # (lam, n)
    L = base[:, None, :] + shifts[None, :, :]
    Z = np.concatenate([np.ones(L.shape[:2] + (1,), dtype=complex), np.exp(L)], axis=2)
    return Z / np.linalg.norm(Z, axis=2, keepdims=True)


_COSET_CACHE = {}


def _coset_representatives(B, det, box_cap):
    key = (B.tobytes(), B.shape)
    if key in _COSET_CACHE:
        return _COSET_CACHE[key]
    n = B.shape[0]
    lo = np.minimum(B, 0).sum(axis=1)
    hi = np.maximum(B, 0).sum(axis=1)
    size = int(np.prod(hi - lo + 1))
    if size > box_cap:
        raise ResourceLimit(f"monomial fiber enumeration box {size} exceeds cap")
    grids = np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)], indexing="ij")
    M = np.stack([g.ravel() for g in grids], axis=1)
    adj = np.array(_int_adj(B.tolist()), dtype=np.int64)
    T = M @ adj.T
    if det < 0:
        T = -T
    ad = abs(det)
    keep = np.all((T >= 0) & (T < ad), axis=1)
    reps = M[keep]
    if len(reps) != ad:
        raise ResourceLimit(f"found {len(reps)} coset representatives, expected {ad}")
    _COSET_CACHE[key] = reps
    return reps


# --- indeterminacy -------------------------------------------------------------

@dataclass
class IndeterminacyReport:
    """Points of the indeterminacy locus with local multiplicities.

    ``q`` is the total multiplicity (``None`` when unavailable, n >= 3).
    """

    points: list
    q: int
    method: str

    def is_empty(self):
        return not self.points

    def to_dict(self):
        return {
            "points": [[[z.real, z.imag] for z in p.coords] for p, _ in self.points],
            "multiplicities": [m for _, m in self.points],
            "q": self.q,
            "method": self.method,
        }


def _lower_covolume(points):
    """Area between the axes and the Newton polygon of local exponents."""
    pts = sorted(set(map(tuple, points)))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    # keep the lower-left chain from the y-axis point to the x-axis point
    start = min((p for p in hull if p[0] == 0), key=lambda p: p[1])
    end = min((p for p in hull if p[1] == 0), key=lambda p: p[0])
    chain = [p for p in hull if start[0] <= p[0] <= end[0]]
    area = Fraction(0)
    for (x1, y1), (x2, y2) in zip(chain[:-1], chain[1:]):
        area += Fraction((x2 - x1) * (y1 + y2), 2)
    return area


def _monomial_indeterminacy(P):
    A = exponent_matrix(P).matrix
    N = A.shape[1]
    d = P.degree
    # coordinate subspaces on which every monomial vanishes
    if N - 1 >= 3:
        for k in range(N):
            for l in range(k + 1, N):
                if np.all(A[:, k] + A[:, l] < d):
                    raise PositiveDimensionalLocus(f"coordinate line through e_{k}, e_{l} is indeterminate")
    pts = []
    for k in range(N):
        if np.all(A[:, k] < d):
            e = np.zeros(N, dtype=complex)
            e[k] = 1.0
            if N == 3:
                local = np.delete(A, k, axis=1)
                mult = 2 * _lower_covolume(local.tolist())
                pts.append((normalize(e), int(mult)))
            else:
                pts.append((normalize(e), None))
    if N == 3:
        q = sum(m for _, m in pts)
    else:
        q = None if pts else 0
    return IndeterminacyReport(pts, q, "newton_polygon")


def indeterminacy_points(P, seed=0, num_targets=3, max_tries=6):
    """Indeterminacy locus with multiplicities.

    For n = 2 the common zeros of two generic combinations vanishing at a
    target w consist of the fiber over w plus the indeterminacy points.
    Eliminating one variable in a random chart and taking the exact GCD of
    the resultants for several targets leaves only the indeterminacy
    points; root multiplicities of that GCD are the local intersection
    numbers.  Monomial maps use the local Newton polygon instead.
    """
    if P.source_dim == 1:
        return IndeterminacyReport([], 0, "empty")
    if P.is_monomial():
        return _monomial_indeterminacy(P)
    if P.source_dim != 2 or P.target_dim != 2:
        raise DegenerateInput("indeterminacy points are computed for self-maps of P^2 only")
    from .solve import _annihilator, _combine, _random_unimodularish, _back_substitute

    rng = random.Random(seed)
    comps = list(P.components)
    last = None
    for _ in range(max_tries):
        M, Mc = _random_unimodularish(rng, 3)
        moved = [c.linear_change(M) for c in comps]
        g = None
        first = None
        try:
            for _t in range(num_targets):
                w = [GaussianRational(rng.randint(-9, 9), rng.randint(-9, 9)) for _ in range(3)]
                if any(x.is_zero() for x in w):
                    w = [x if not x.is_zero() else GaussianRational(1, 1) for x in w]
                G = _combine(_annihilator(w), moved)
                R = resultant_binary(G[0], G[1])
                if R.is_zero():
                    raise PositiveDimensionalLocus("fiber equations share a curve")
                D = R.degree
                if (0, D) not in R.terms:
                    raise ChartDegeneracy("solution at infinity")
                u = [GaussianRational(0)] * (D + 1)
                for (e0, e1), c in R.terms.items():
                    u[e1] = c
                g = u if g is None else u_gcd(g, u)
                first = first or G
        except ChartDegeneracy as exc:
            last = exc
            continue
        g = u_trim(g)
        if len(g) <= 1:
            return IndeterminacyReport([], 0, "resultant_gcd")
        from .solve import roots_univariate
        pts = []
        for factor, mult in u_squarefree(g):
            for z0, _ in roots_univariate(factor).roots:
                pt = _back_substitute(moved, z0)
                pts.append((normalize(Mc @ pt), mult))
        return IndeterminacyReport(pts, sum(m for _, m in pts), "resultant_gcd")
    raise last


# --- map files ---------------------------------------------------------------

def parse_map(data, name=None):
    """Build a map from a dict with keys ``n``, ``m``, ``variables``, ``components``."""
    for key in ("n", "m", "variables", "components"):
        if key not in data:
            raise ValueError(f"map file lacks field '{key}'")
    variables = list(data["variables"])
    if len(variables) != data["n"] + 1:
        raise DimensionMismatch("number of variables must be n + 1")
    if len(data["components"]) != data["m"] + 1:
        raise DimensionMismatch("number of components must be m + 1")
    polys = [parse(s, variables) for s in data["components"]]
    return reduce(polys, variables=variables, name=name or data.get("name"))


def load_map(path):
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return parse_map(data)


def save_map(P, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(P.to_dict(), fh, indent=2)
        fh.write("\n")
