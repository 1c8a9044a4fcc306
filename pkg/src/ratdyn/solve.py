"""Root finding, bivariate elimination and fibers of rational maps.

Elimination is always done exactly (resultants over Q(i)); floating point
enters only when the final univariate factors are solved and when points
are polished by Newton's method.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import random

import gmpy2
import numpy as np

from .errors import (
    NoConvergence, CommonFactor, ChartDegeneracy, InfiniteFiber, DegenerateInput,
)
from .polyalg import HomoPoly, GaussianRational, gcd
from .polyalg.algorithms import u_trim, u_squarefree, resultant_binary
from .projcore import ProjPoint, normalize, normalize_rows, fs_distance

EPS = np.finfo(float).eps


# --- univariate ------------------------------------------------------------

@dataclass
class RootSet:
    """Roots with multiplicities.

    ``residual_bound`` is the worst relative residual
    ``|p(r)| / sum_k |c_k| |r|^k`` over the returned roots.
    """

    roots: list
    residual_bound: float
    converged: bool = True

    @property
    def values(self):
        return np.array([r for r, _ in self.roots], dtype=complex)

    @property
    def multiplicities(self):
        return np.array([m for _, m in self.roots], dtype=int)

    def degree(self):
        return int(sum(m for _, m in self.roots))


def _horner_ratio(c, z):
    """Return p(z)/p'(z) and the relative residual, stable for any |z|.

    ``c`` holds coefficients low degree first.  For |z| > 1 the reversed
    polynomial is evaluated at 1/z.
    """
    n = len(c) - 1
    out = np.empty_like(z)
    rel = np.empty(z.shape, dtype=float)
    inner = np.abs(z) <= 1
    ac = np.abs(c)
    if inner.any():
        x = z[inner]
        p = np.full_like(x, c[-1])
        dp = np.zeros_like(x)
        s = np.full(x.shape, ac[-1])
        ax = np.abs(x)
        for k in range(n - 1, -1, -1):
            dp = dp * x + p
            p = p * x + c[k]
            s = s * ax + ac[k]
        out[inner] = p / dp
        rel[inner] = np.abs(p) / s
    outer = ~inner
    if outer.any():
        y = 1.0 / z[outer]
        q = np.full_like(y, c[0])
        dq = np.zeros_like(y)
        s = np.full(y.shape, ac[0])
        ay = np.abs(y)
        for k in range(1, n + 1):
            dq = dq * y + q
            q = q * y + c[k]
            s = s * ay + ac[k]
        # p(z) = z^n q(1/z), so p/p' = z q / (n q - y q')
        out[outer] = z[outer] * q / (n * q - y * dq)
        rel[outer] = np.abs(q) / s
    return out, rel


def _initial_guesses(c, rng):
    """Circles from the upper convex hull of (k, log|c_k|)."""
    n = len(c) - 1
    with np.errstate(divide="ignore"):
        lg = np.log(np.abs(c))
    pts = [k for k in range(n + 1) if np.isfinite(lg[k])]
    hull = []
    for k in pts:
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            if (lg[j] - lg[i]) * (k - i) <= (lg[k] - lg[i]) * (j - i):
                hull.pop()
            else:
                break
        hull.append(k)
    z = []
    offset = rng.uniform(0, 2 * np.pi)
    for i, j in zip(hull[:-1], hull[1:]):
        r = np.exp((lg[i] - lg[j]) / (j - i))
        m = j - i
        ang = 2 * np.pi * np.arange(m) / m + offset + 2 * np.pi * len(z) / n
        z.extend(r * np.exp(1j * ang))
    return np.array(z, dtype=complex)


def _aberth(c, max_iter=800, seed=0):
    """Aberth-Ehrlich iteration on a polynomial with nonzero c[0] and c[-1]."""
    n = len(c) - 1
    if n == 1:
        return np.array([-c[0] / c[1]]), True
    rng = np.random.default_rng(seed)
    z = _initial_guesses(c, rng)
    active = np.ones(n, dtype=bool)
    tol = 4 * n * EPS
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ratio, rel = _horner_ratio(c, z[idx])
        diff = z[idx, None] - z[None, :]
        diff[np.arange(idx.size), idx] = 1.0
        s = np.sum(1.0 / diff, axis=1) - 1.0
        corr = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(corr)
        corr[bad] = 0.0
        z[idx] -= corr
        done = (rel <= tol) | (np.abs(corr) <= EPS * np.abs(z[idx]))
        active[idx[done]] = False
    return z, not active.any()


def _newton_polish(c, z, steps=3):
    for _ in range(steps):
        ratio, _ = _horner_ratio(c, z)
        ratio[~np.isfinite(ratio)] = 0.0
        z = z - ratio
    return z


def _relative_residual(c, z):
    return _horner_ratio(c, z)[1] if len(z) else np.zeros(0)


def _float_coeffs(u):
    """Complex coefficients of an exact polynomial, scaled to avoid overflow."""
    mags = [max(abs(c._a), abs(c._b)).bit_length() - c._d.bit_length() for c in u if not c.is_zero()]
    shift = max(mags) if mags else 0
    out = []
    for c in u:
        sc = Fraction(1, 2 ** shift) if shift >= 0 else Fraction(2 ** -shift)
        out.append(complex(float(c.re * sc), float(c.im * sc)))
    return np.array(out, dtype=complex)


def _cluster(values, mults, radius):
    """Merge roots closer than ``radius * max(1, |z|)`` (weighted centroid)."""
    order = np.argsort(-np.asarray(mults))
    groups = []
    for i in order:
        z = values[i]
        for g in groups:
            if abs(g[0] / g[1] - z) <= radius * max(1.0, abs(z)):
                g[0] += z * mults[i]
                g[1] += mults[i]
                break
        else:
            groups.append([z * mults[i], mults[i]])
    return [(g[0] / g[1], int(g[1])) for g in groups]


def _is_exact(coeffs):
    return all(isinstance(c, (int, Fraction, GaussianRational)) and not isinstance(c, bool)
               for c in coeffs)


def roots_univariate(coeffs, cluster_radius=1e-5, max_iter=800, seed=0):
    """All complex roots of a univariate polynomial.

    Parameters
    ----------
    coeffs : sequence
        Coefficients, lowest degree first.  Exact entries (int, Fraction,
        GaussianRational) trigger a square-free decomposition, so
        multiplicities are exact; float entries are solved directly and
        near-coincident roots are merged.
    cluster_radius : float
        Relative merge radius for the floating-point path.

    Raises
    ------
    NoConvergence
        Carries the best iterate as ``.best`` (a RootSet flagged unconverged).
    """
    coeffs = list(coeffs)
    if _is_exact(coeffs):
        u = u_trim([GaussianRational.coerce(c) for c in coeffs])
        if len(u) < 2:
            raise DegenerateInput("polynomial must have degree >= 1")
        roots = []
        worst = 0.0
        ok = True
        for factor, mult in u_squarefree(u):
            rs = _solve_float(_float_coeffs(factor), max_iter, seed, cluster_radius=None)
            if len(factor) > 3:
                rs = _refine_exact(factor, rs)
            ok &= rs.converged
            worst = max(worst, rs.residual_bound)
            roots.extend((r, mult) for r, _ in rs.roots)
        out = RootSet(roots, worst, ok)
    else:
        c = np.array(coeffs, dtype=complex)
        nz = np.flatnonzero(c)
        if nz.size == 0 or nz[-1] < 1:
            raise DegenerateInput("polynomial must have degree >= 1")
        out = _solve_float(c[: nz[-1] + 1], max_iter, seed, cluster_radius)
    if not out.converged:
        raise NoConvergence("Aberth iteration did not converge", best=out)
    return out


def _refine_exact(factor, rs, rel_target=1e-15, max_bits=4096, sweeps=80):
    """Make double roots of an exact square-free factor accurate.

    High-degree factors (resultants in particular) can be so badly
    conditioned that a backward-stable double solve is wrong in the first
    digit.  One extended-precision Newton step detects this; Aberth sweeps at
    increasing precision then repair the roots.
    """
    z = [r for r, _ in rs.roots]
    n = len(z)
    bits = 128
    with gmpy2.context(precision=bits):
        cu = _mpc_coeffs(factor)
        worst = max(abs(complex(_mpc_ratio(cu, gmpy2.mpc(x)))) / max(1.0, abs(x)) for x in z)
    if worst <= rel_target:
        return rs
    while bits <= max_bits:
        with gmpy2.context(precision=bits):
            cu = _mpc_coeffs(factor)
            zm = [gmpy2.mpc(x) for x in z]
            active = list(range(n))
            for _ in range(sweeps):
                still = []
                # the Aberth sum enters the correction at second order only, so
                # double precision suffices for it; p/p' is evaluated in full
                zd = np.array([complex(x) for x in zm])
                for i in active:
                    zi = zm[i]
                    r = _mpc_ratio(cu, zi)
                    diff = zd[i] - np.delete(zd, i)
                    with np.errstate(divide="ignore"):
                        acc_d = np.sum(1.0 / diff)
                    acc = gmpy2.mpc(acc_d) if np.isfinite(acc_d) else gmpy2.mpc(0)
                    corr = r / (1 - r * acc)
                    zd[i] = complex(zi - corr)
                    zm[i] = zi - corr
                    # converged roots are frozen; the rest keep sweeping
                    if float(abs(corr)) / max(1.0, float(abs(zm[i]))) >= 1e-20:
                        still.append(i)
                active = still
                if not active:
                    break
            converged = not active
            z = [complex(x) for x in zm]
        if converged:
            return RootSet([(x, 1) for x in z], rs.residual_bound, True)
        bits *= 2
    return RootSet([(x, 1) for x in z], rs.residual_bound, False)


def _mpc_coeffs(u):
    return [gmpy2.mpc(gmpy2.mpfr(gmpy2.mpq(c._a, c._d)), gmpy2.mpfr(gmpy2.mpq(c._b, c._d))) for c in u]


def _mpc_ratio(cu, z):
    """p(z)/p'(z) by Horner (coefficients low first)."""
    p = cu[-1]
    dp = gmpy2.mpc(0)
    for c in reversed(cu[:-1]):
        dp = dp * z + p
        p = p * z + c
    return p / dp if dp != 0 else gmpy2.mpc(0)


def _solve_float(c, max_iter, seed, cluster_radius):
    nz = np.flatnonzero(c)
    low = int(nz[0])
    c = c[low: nz[-1] + 1]
    roots, ok = (np.zeros(0, dtype=complex), True) if len(c) == 1 else _aberth(c, max_iter, seed)
    if len(roots):
        roots = _newton_polish(c, roots, 2) if cluster_radius is None else roots
        resid = float(np.max(_relative_residual(c, roots)))
    else:
        resid = 0.0
    values = list(roots)
    mults = [1] * len(values)
    if low:
        values.append(0j)
        mults.append(low)
    if cluster_radius is not None:
        pairs = _cluster(np.array(values), mults, cluster_radius)
    else:
        pairs = list(zip(values, mults))
    return RootSet([(complex(r), int(m)) for r, m in pairs], resid, ok)


# --- bivariate systems -----------------------------------------------------

def _eval_in_last(p, t, z):
    """Complex coefficients (low first) of p(t, z, x) as a polynomial in x."""
    deg = p.degree_in(2)
    out = np.zeros(deg + 1, dtype=complex)
    for (e0, e1, e2), c in p.terms.items():
        out[e2] += complex(c) * (t ** e0) * (z ** e1)
    return out


def _shear(p, c):
    # z -> z - c w, so that the new z-coordinate is z + c w
    m = [[1, 0, 0], [0, 1, -c], [0, 0, 1]]
    return p.linear_change(m)


def _solve_generic(f, g, seed=0):
    """Common zeros of two ternary forms in the chart t = 1.

    Assumes coordinates where both forms are monic-up-to-constant in the last
    variable and the projection to (t, z) separates solutions; violations
    raise ChartDegeneracy so the caller can change coordinates.
    """
    if f.degree_in(2) < f.degree or g.degree_in(2) < g.degree:
        # (0, 0, 1) is a zero of a form: solutions could escape to w = infinity
        raise ChartDegeneracy("a form vanishes at the elimination point")
    R = resultant_binary(f, g)
    if R.is_zero():
        raise CommonFactor("resultant vanishes identically")
    D = R.degree
    if (0, D) not in R.terms:
        # R(0, 1) = 0: some common zero lies on t = 0
        raise ChartDegeneracy("solutions on the line at infinity of the chart")
    u = [GaussianRational(0)] * (D + 1)
    for (e0, e1), c in R.terms.items():
        u[e1] = c
    roots = roots_univariate(u, seed=seed)
    out = []
    for z0, mult in roots.roots:
        pt, unique = _back_substitute([f, g], z0, with_uniqueness=True)
        if not unique and mult == 1:
            raise ChartDegeneracy("two solutions share a projection")
        out.append((pt, mult))
    return out


def _back_substitute(forms, z0, with_uniqueness=False):
    """Point (1, z0, w) where all ternary ``forms`` vanish (best match in w)."""
    polys = [_eval_in_last(f, 1.0, z0) for f in forms]
    polys = [np.trim_zeros(p, "b") for p in polys]
    polys.sort(key=len)
    base = next((p for p in polys if len(p) > 1), None)
    if base is None:
        raise ChartDegeneracy("no back-substitution candidate")
    cand = np.roots(base[::-1])
    others = [p for p in polys if p is not base]
    score = np.zeros(len(cand))
    for p in others:
        num = np.abs(np.polyval(p[::-1], cand))
        den = np.polyval(np.abs(p[::-1]), np.maximum(np.abs(cand), 1.0))
        score = np.maximum(score, num / den)
    order = np.argsort(score)
    w0 = cand[order[0]]
    pt = np.array([1.0, z0, w0], dtype=complex)
    if not with_uniqueness:
        return pt
    # scores are relative backward errors: genuine roots sit near machine precision
    unique = not (len(order) > 1 and score[order[1]] < 1e-11
                  and abs(cand[order[1]] - w0) > 1e-4 * max(1.0, abs(w0)))
    return pt, unique


def _newton_system(funcs, grads, x, steps=8):
    """Newton on F(1, x1, x2) = 0 in affine coordinates; returns refined x."""
    for _ in range(steps):
        z = np.array([1.0, x[0], x[1]], dtype=complex)
        F = np.array([f.evaluate(z) for f in funcs])
        J = np.array([[gr[1].evaluate(z), gr[2].evaluate(z)] for gr in grads])
        try:
            dx = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(dx)):
            break
        x = x - dx
        if np.linalg.norm(dx) <= 1e-15 * max(1.0, np.linalg.norm(x)):
            break
    return x


def solve_bivariate(p, q, seed=0, max_tries=6):
    """Isolated common zeros of two affine polynomials given homogenized.

    Parameters
    ----------
    p, q : HomoPoly
        Ternary forms in (t, z, w); the affine system is p(1, z, w) = q(1, z, w) = 0.

    Returns
    -------
    list of ((z, w), multiplicity)

    Raises
    ------
    CommonFactor
        If the polynomials share a factor of positive degree.
    ChartDegeneracy
        If some solution lies at infinity (t = 0).
    """
    if p.num_vars != 3 or q.num_vars != 3:
        raise ValueError("expected ternary forms")
    g = gcd(p, q)
    if g.degree and g.degree > 0:
        raise CommonFactor(f"common factor of degree {g.degree}")
    at_inf = _solutions_at_infinity(p, q)
    if at_inf:
        raise ChartDegeneracy("system has solutions at infinity of the chart")
    rng = random.Random(seed)
    last = None
    for _ in range(max_tries):
        c = GaussianRational(rng.randint(1, 7), rng.randint(-3, 3))
        ps, qs = _shear(p, c), _shear(q, c)
        try:
            sols = _solve_generic(ps, qs, seed)
        except ChartDegeneracy as exc:
            last = exc
            continue
        cc = complex(c)
        grads = [[f.differentiate(i) for i in range(3)] for f in (p, q)]
        out = []
        for pt, mult in sols:
            zs, w = pt[1], pt[2]
            x = np.array([zs - cc * w, w])
            if mult == 1:
                x = _newton_system((p, q), grads, x)
            out.append(((complex(x[0]), complex(x[1])), mult))
        return out
    raise last


def _solutions_at_infinity(p, q):
    """True when the leading forms share a zero on t = 0."""
    pt = HomoPoly(2, {(e[1], e[2]): c for e, c in p.terms.items() if e[0] == 0})
    qt = HomoPoly(2, {(e[1], e[2]): c for e, c in q.terms.items() if e[0] == 0})
    if pt.is_zero() or qt.is_zero():
        return True
    g = gcd(pt, qt)
    return bool(g.degree)


# --- fibers ---------------------------------------------------------------

@dataclass
class Fiber:
    """Pre-images of a target with multiplicities, indeterminacy removed.

    ``points_array`` holds unit representatives row-wise; ``excluded`` lists
    common zeros of the fiber equations that lie in the indeterminacy locus.
    """

    map_degree_context: int
    points_array: np.ndarray
    multiplicities: np.ndarray
    excluded_array: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))
    excluded_multiplicities: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    method: str = "resultant"

    @property
    def points(self):
        return [(normalize(z), int(m)) for z, m in zip(self.points_array, self.multiplicities)]

    @property
    def excluded_indeterminate(self):
        return [normalize(z) for z in self.excluded_array]

    def count(self):
        return int(self.multiplicities.sum())


def _target_array(w):
    if isinstance(w, ProjPoint):
        return w.coords, None
    vals = list(w)
    if _is_exact(vals):
        exact = [GaussianRational.coerce(v) for v in vals]
        arr = np.array([complex(v) for v in exact], dtype=complex)
        return arr, exact
    return np.asarray(vals, dtype=complex), None


def _rationalize(arr, bits=24):
    """Nearby exact target with power-of-two denominators."""
    arr = arr / np.max(np.abs(arr))
    s = 1 << bits
    return [GaussianRational(Fraction(int(round(v.real * s)), s), Fraction(int(round(v.imag * s)), s))
            for v in arr]


def _annihilator(w):
    """Rows A with sum_i A_i w_i = 0 spanning all such rows (bilinear pairing)."""
    mags = [abs(complex(v)) for v in w]
    k = int(np.argmax(mags))
    rows = []
    for j in range(len(w)):
        if j == k:
            continue
        row = [GaussianRational(0)] * len(w)
        row[j] = GaussianRational.coerce(w[k])
        row[k] = -GaussianRational.coerce(w[j])
        rows.append(row)
    return rows


def _combine(rows, comps):
    out = []
    for row in rows:
        acc = None
        for a, p in zip(row, comps):
            if a.is_zero():
                continue
            t = p * a
            acc = t if acc is None else acc + t
        out.append(acc)
    return out


def _indeterminacy_mask(comps, Z, tol):
    scale = max(c.coefficient_norm() for c in comps)
    vals = np.stack([c.evaluate_many(normalize_rows(Z)) for c in comps], axis=1)
    return np.linalg.norm(vals, axis=1) < tol * scale


def _random_unimodularish(rng, n):
    while True:
        M = [[GaussianRational(rng.randint(-3, 3), rng.randint(-2, 2)) for _ in range(n)] for _ in range(n)]
        Mc = np.array([[complex(x) for x in r] for r in M])
        if abs(np.linalg.det(Mc)) > 0.5:
            return M, Mc


def fiber(P, w, chart_seed=0, max_tries=8, indeterminacy_tol=1e-6):
    """Solve P(z) = w projectively, with multiplicities.

    Parameters
    ----------
    P : RationalMap
        Self-map of P^1 or P^2 (any dimension on the monomial fast path).
    w : ProjPoint or sequence
        Target.  Exact entries are used as given; float targets are solved
        exactly at a nearby Gaussian-rational point and then polished onto
        the float target by Newton's method.
    chart_seed : int
        Seeds the random change of coordinates that puts the system in
        general position.

    Raises
    ------
    InfiniteFiber
        When the fiber equations share a curve (w lies in the image of a
        contracted curve, or the map is not dominant).
    """
    from .ratmap import monomial_fiber  # local import avoids a cycle

    warr, wexact = _target_array(w)
    if not np.any(warr):
        raise DegenerateInput("target is the zero vector")
    if P.is_monomial() and np.all(warr != 0):
        return monomial_fiber(P, warr)
    n = P.source_dim
    if n != P.target_dim:
        raise DegenerateInput("fibers need a self-map")
    if n == 1:
        return _fiber_p1(P, warr, wexact, chart_seed)
    if n != 2:
        raise DegenerateInput("general fibers are implemented for n <= 2 only")
    return _fiber_p2(P, warr, wexact, chart_seed, max_tries, indeterminacy_tol)


def _fiber_p1(P, warr, wexact, seed):
    p0, p1 = P.components
    wq = wexact or _rationalize(warr)
    F = p0 * wq[1] - p1 * wq[0]
    if F.is_zero():
        raise InfiniteFiber("target equation vanishes identically")
    d = F.degree
    u = [GaussianRational(0)] * (d + 1)
    for (a, b), c in F.terms.items():
        u[b] = c
    u = u_trim(u)
    pts, mults = [], []
    if len(u) >= 2:
        for r, m in roots_univariate(u, seed=seed).roots:
            pts.append([1.0, r])
            mults.append(m)
    if len(u) - 1 < d:
        pts.append([0.0, 1.0])
        mults.append(d - (len(u) - 1))
    Z = normalize_rows(np.array(pts, dtype=complex))
    if wexact is None:
        Z = _polish_p1(P, Z, mults, warr)
    return Fiber(d, Z, np.array(mults, dtype=int), np.zeros((0, 2), dtype=complex),
                 np.zeros(0, dtype=int), "resultant")


def _polish_p1(P, Z, mults, warr):
    p0, p1 = P.components
    F = [p0, p1]
    dF = [[c.differentiate(i) for i in range(2)] for c in F]
    out = Z.copy()
    for k, (z, m) in enumerate(zip(Z, mults)):
        if m != 1:
            continue
        j = int(np.argmax(np.abs(z)))
        z = z / z[j]
        for _ in range(6):
            val = warr[1] * F[0].evaluate(z) - warr[0] * F[1].evaluate(z)
            der = warr[1] * dF[0][1 - j].evaluate(z) - warr[0] * dF[1][1 - j].evaluate(z)
            if der == 0:
                break
            step = val / der
            z[1 - j] -= step
            if abs(step) <= 1e-16 * max(1.0, abs(z[1 - j])):
                break
        out[k] = z / np.linalg.norm(z)
    return out


def _fiber_p2(P, warr, wexact, chart_seed, max_tries, tol):
    comps = list(P.components)
    wq = wexact or _rationalize(warr)
    G = _combine(_annihilator(wq), comps)
    if any(g is None or g.is_zero() for g in G):
        raise InfiniteFiber("a fiber equation vanishes identically")
    rng = random.Random(chart_seed)
    last = None
    for _ in range(max_tries):
        M, Mc = _random_unimodularish(rng, 3)
        Gs = [g.linear_change(M) for g in G]
        try:
            sols = _solve_generic(Gs[0], Gs[1], seed=chart_seed)
        except CommonFactor as exc:
            raise InfiniteFiber("fiber equations share a curve") from exc
        except ChartDegeneracy as exc:
            last = exc
            continue
        Z = np.array([Mc @ pt for pt, _ in sols], dtype=complex)
        mults = np.array([m for _, m in sols], dtype=int)
        Z = normalize_rows(Z)
        bad = _indeterminacy_mask(comps, Z, tol)
        good = ~bad
        Zg = _polish_p2(comps, Z[good], mults[good], warr)
        return Fiber(P.degree ** 2, Zg, mults[good], Z[bad], mults[bad], "resultant")
    raise last


def _polish_p2(comps, Z, mults, warr, steps=8):
    """Newton polish of simple fiber points onto the float target (all points at once)."""
    A = _annihilator_float(warr)
    grads = [[c.differentiate(i) for i in range(3)] for c in comps]
    out = Z.copy()
    idx = np.flatnonzero(np.asarray(mults) == 1)
    if idx.size == 0:
        return out
    z = Z[idx].copy()
    K = len(z)
    j = np.argmax(np.abs(z), axis=1)
    z = z / z[np.arange(K), j][:, None]
    free = np.array([[i for i in range(3) if i != jj] for jj in j])      # (K, 2)
    active = np.ones(K, dtype=bool)
    for _ in range(steps):
        if not active.any():
            break
        za = z[active]
        Pv = np.stack([c.evaluate_many(za) for c in comps], axis=1)       # (k, 3)
        J = np.stack([np.stack([g[i].evaluate_many(za) for i in range(3)], axis=1)
                      for g in grads], axis=1)                            # (k, comps, vars)
        fr = free[active]
        Jf = np.einsum("rc,kcv->krv", A, J)
        Jf = np.take_along_axis(Jf, fr[:, None, :].repeat(2, axis=1), axis=2)
        F = Pv @ A.T
        det = Jf[:, 0, 0] * Jf[:, 1, 1] - Jf[:, 0, 1] * Jf[:, 1, 0]
        ok = np.isfinite(det) & (det != 0)
        safe = np.where(ok, det, 1.0)
        dx = np.stack([(Jf[:, 1, 1] * F[:, 0] - Jf[:, 0, 1] * F[:, 1]) / safe,
                       (Jf[:, 0, 0] * F[:, 1] - Jf[:, 1, 0] * F[:, 0]) / safe], axis=1)
        ok &= np.all(np.isfinite(dx), axis=1)
        dx[~ok] = 0
        ai = np.flatnonzero(active)
        z[ai[:, None], fr] -= dx
        small = np.linalg.norm(dx, axis=1) <= 1e-16 * np.maximum(1.0, np.linalg.norm(z[ai], axis=1))
        active[ai[~ok | small]] = False
    out[idx] = z / np.linalg.norm(z, axis=1, keepdims=True)
    return out


def _annihilator_float(w):
    w = np.asarray(w, dtype=complex)
    k = int(np.argmax(np.abs(w)))
    rows = []
    for j in range(len(w)):
        if j == k:
            continue
        row = np.zeros(len(w), dtype=complex)
        row[j] = w[k]
        row[k] = -w[j]
        rows.append(row)
    return np.array(rows)


def fiber_residual(P, F, w):
    """Largest chordal distance between P(z) and w over fiber points."""
    warr, _ = _target_array(w)
    if len(F.points_array) == 0:
        return 0.0
    img = np.stack([c.evaluate_many(F.points_array) for c in P.components], axis=1)
    return float(np.max(fs_distance(img, warr[None, :])))
