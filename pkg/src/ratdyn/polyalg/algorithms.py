"""GCD, resultants and exact univariate helpers."""

from fractions import Fraction
from math import gcd as _igcd, isqrt as _isqrt

from ..errors import DegenerateInput
from . import _sparse as sp
from ._modgcd import homogeneous_gcd
from .gaussian import GaussianRational, ZERO, ONE
from .homopoly import HomoPoly


def gcd(p, q):
    """Greatest common divisor, monic in graded-lex leading term.

    The result is homogeneous (factors of homogeneous polynomials are).
    ``gcd(0, q)`` is ``q`` made monic.  In up to three variables a modular
    candidate is certified by trial division; otherwise, and as fallback,
    a primitive pseudo-remainder sequence is used.
    """
    if p.num_vars != q.num_vars:
        raise ValueError("polynomials live in different variable counts")
    if p.is_zero() and q.is_zero():
        raise DegenerateInput("gcd of two zero polynomials")
    if p.num_vars <= 3 and not p.is_zero() and not q.is_zero():
        g = homogeneous_gcd(p.terms, q.terms)
        if g is not None:
            return HomoPoly(p.num_vars, g)
    return HomoPoly(p.num_vars, sp.gcd(p.terms, q.terms))


def gcd_many(polys):
    polys = [p for p in polys if not p.is_zero()]
    if not polys:
        raise DegenerateInput("gcd of zero polynomials")
    nv = polys[0].num_vars
    if len(polys) == 1:
        return polys[0].monic()
    # shared monomial factor first, then a single certificate for the rest
    mono = sp.monomial_content(polys[0].terms)
    for p in polys[1:]:
        mono = tuple(min(a, b) for a, b in zip(mono, sp.monomial_content(p.terms)))
    stripped = [sp.shift_down(p.terms, mono) for p in polys]
    if sp.certify_coprime(stripped):
        return HomoPoly.monomial(mono)
    g = stripped[0]
    for p in stripped[1:]:
        h = homogeneous_gcd(g, p) if nv <= 3 else None
        # pseudo-remainder fallback: n >= 3 or the modular route gave up
        g = sp.gcd(g, p) if h is None else h
        if sp.is_const(g):
            break
    return HomoPoly(nv, sp.monic(sp.mul_term(g, mono, ONE)))


def _det_bareiss(M):
    """Fraction-free determinant of a square matrix of sparse polynomials."""
    n = len(M)
    if n == 0:
        raise DegenerateInput("empty matrix")
    M = [row[:] for row in M]
    nv = None
    for row in M:
        for c in row:
            if c:
                nv = len(next(iter(c)))
                break
        if nv is not None:
            break
    one = sp.const(1, nv)
    sign = 1
    prev = one
    for k in range(n - 1):
        if not M[k][k]:
            swap = next((i for i in range(k + 1, n) if M[i][k]), None)
            if swap is None:
                return {}
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = sp.sub(sp.mul(M[i][j], M[k][k]), sp.mul(M[i][k], M[k][j]))
                M[i][j] = sp.divexact(num, prev) if num else {}
            M[i][k] = {}
        prev = M[k][k]
    det = M[n - 1][n - 1]
    return sp.neg(det) if sign < 0 else det


def sylvester_matrix(p, q, var_index):
    """Sylvester matrix (entries are sparse term dicts) in ``var_index``."""
    m, n = p.degree_in(var_index), q.degree_in(var_index)
    cp = sp.coeffs_in(p.terms, var_index)
    cq = sp.coeffs_in(q.terms, var_index)
    size = m + n
    rows = []
    for r in range(n):
        row = [{} for _ in range(size)]
        for k in range(m + 1):
            row[r + (m - k)] = cp.get(k, {})
        rows.append(row)
    for r in range(m):
        row = [{} for _ in range(size)]
        for k in range(n + 1):
            row[r + (n - k)] = cq.get(k, {})
        rows.append(row)
    return rows


def resultant(p, q, var_index):
    """Sylvester resultant of ``p`` and ``q`` eliminating ``var_index``.

    Raises
    ------
    DegenerateInput
        If either polynomial is zero or has degree 0 in the variable.
    """
    if p.is_zero() or q.is_zero():
        raise DegenerateInput("resultant of a zero polynomial")
    if p.degree_in(var_index) < 1 or q.degree_in(var_index) < 1:
        raise DegenerateInput(f"polynomial has degree 0 in variable {var_index}")
    det = _det_bareiss(sylvester_matrix(p, q, var_index))
    return HomoPoly(p.num_vars, det)


# --- exact univariate polynomials: lists of GaussianRational, low first ----

def _is_probable_prime(n):
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


_PRIMES = []


def _gaussian_primes(count):
    """Primes p = 1 mod 4 below 2^62 with a square root of -1, cached."""
    cand = (_PRIMES[-1][0] - 4) if _PRIMES else (1 << 62) - 3  # = 1 mod 4
    while len(_PRIMES) < count:
        if cand % 4 == 1 and _is_probable_prime(cand):
            c = 2
            while pow(c, (cand - 1) // 2, cand) != cand - 1:
                c += 1
            _PRIMES.append((cand, pow(c, (cand - 1) // 4, cand)))
        cand -= 4
    return _PRIMES[:count]


def _embed(u, p, s):
    """Images of u under i -> s and i -> -s in F_p (None if a denominator dies)."""
    e1, e2 = [], []
    for c in u:
        if c._d % p == 0:
            return None
        inv = pow(c._d, -1, p)
        bs = c._b * s
        e1.append((c._a + bs) * inv % p)
        e2.append((c._a - bs) * inv % p)
    return e1, e2


def _mod_gcd(a, b, p):
    a = list(a)
    b = list(b)
    while a and a[-1] == 0:
        a.pop()
    while b and b[-1] == 0:
        b.pop()
    while b:
        inv = pow(b[-1], -1, p)
        lb = len(b)
        while len(a) >= lb:
            f = a[-1] * inv % p
            off = len(a) - lb
            if f:
                for i in range(lb - 1):
                    a[off + i] = (a[off + i] - f * b[i]) % p
            a.pop()
            while a and a[-1] == 0:
                a.pop()
        a, b = b, a
    inv = pow(a[-1], -1, p)
    return [x * inv % p for x in a]


def _rat_recon(x, m):
    """Rational r/s = x mod m with |r|, s below sqrt(m/2), or None."""
    bound = _isqrt(m // 2)
    r0, r1 = m, x % m
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    if s1 < 0:
        r1, s1 = -r1, -s1
    return Fraction(r1, s1)


def _u_gcd_modular(a, b, max_primes=80):
    best_deg = None
    crt_re = crt_im = None
    modulus = 1
    for p, s in _gaussian_primes(max_primes):
        ea, eb = _embed(a, p, s), _embed(b, p, s)
        if ea is None or eb is None:
            continue
        if ea[0][-1] == 0 or eb[0][-1] == 0 or ea[1][-1] == 0 or eb[1][-1] == 0:
            continue
        g1 = _mod_gcd(ea[0], eb[0], p)
        g2 = _mod_gcd(ea[1], eb[1], p)
        if len(g1) != len(g2):
            continue
        deg = len(g1) - 1
        if deg == 0:
            # leading coefficients survive, so the true gcd is 1
            return [ONE]
        if best_deg is not None and deg > best_deg:
            continue
        inv2 = pow(2, -1, p)
        inv2s = pow(2 * s, -1, p)
        re_ = [(x + y) * inv2 % p for x, y in zip(g1, g2)]
        im_ = [(x - y) * inv2s % p for x, y in zip(g1, g2)]
        if best_deg is None or deg < best_deg:
            best_deg, crt_re, crt_im, modulus = deg, re_, im_, p
            continue
        # Chinese remaindering into the running images
        t = pow(modulus, -1, p)
        new_mod = modulus * p
        crt_re = [(x + modulus * ((y - x) * t % p)) % new_mod for x, y in zip(crt_re, re_)]
        crt_im = [(x + modulus * ((y - x) * t % p)) % new_mod for x, y in zip(crt_im, im_)]
        modulus = new_mod
        cand = []
        for x, y in zip(crt_re, crt_im):
            fr, fi = _rat_recon(x, modulus), _rat_recon(y, modulus)
            if fr is None or fi is None:
                cand = None
                break
            cand.append(GaussianRational(fr, fi))
        if cand is None:
            continue
        _, ra = u_divmod(a, cand)
        if ra:
            continue
        _, rb = u_divmod(b, cand)
        if not rb:
            return cand
    return None



def u_trim(u):
    u = list(u)
    while u and u[-1].is_zero():
        u.pop()
    return u


def u_divmod(a, b):
    a, b = u_trim(a), u_trim(b)
    if not b:
        raise ZeroDivisionError("division by zero polynomial")
    inv = ONE / b[-1]
    q = [ZERO] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    while len(r) >= len(b) and r:
        f = r[-1] * inv
        off = len(r) - len(b)
        q[off] = f
        for i in range(len(b)):
            r[off + i] = r[off + i] - f * b[i]
        r.pop()
        r = u_trim(r)
    return u_trim(q), r


def u_monic(u):
    u = u_trim(u)
    if not u:
        return u
    inv = ONE / u[-1]
    return [c * inv for c in u]


def _u_gcd_euclid(a, b):
    a, b = u_trim(a), u_trim(b)
    while b:
        _, r = u_divmod(a, b)
        a, b = b, u_monic(r)
    return u_monic(a)


def u_gcd(a, b):
    """Monic GCD over Q(i).

    Long inputs go through a modular algorithm (two embeddings of Q(i) into
    F_p, Chinese remaindering, rational reconstruction, exact verification);
    plain Euclid suffers from coefficient swell there.
    """
    a, b = u_trim(a), u_trim(b)
    if not a:
        return u_monic(b)
    if not b:
        return u_monic(a)
    if min(len(a), len(b)) <= 6:
        return _u_gcd_euclid(a, b)
    g = _u_gcd_modular(a, b)
    return g if g is not None else _u_gcd_euclid(a, b)


def u_deriv(u):
    return u_trim([c * k for k, c in enumerate(u)][1:])


def u_squarefree(u):
    """Yun's square-free decomposition: list of (factor, multiplicity)."""
    u = u_monic(u)
    if len(u) <= 1:
        return []
    out = []
    a = u_gcd(u, u_deriv(u))
    b, _ = u_divmod(u, a)
    c, _ = u_divmod(u_deriv(u), a)
    d = _u_sub(c, u_deriv(b))
    k = 1
    while len(b) > 1:
        g = u_gcd(b, d)
        if len(g) > 1:
            out.append((g, k))
        b, _ = u_divmod(b, g)
        c, _ = u_divmod(d, g)
        d = _u_sub(c, u_deriv(b))
        k += 1
    return out


def _u_sub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [ZERO] * (n - len(a))
    b = list(b) + [ZERO] * (n - len(b))
    return u_trim([x - y for x, y in zip(a, b)])


def _det_field(M):
    n = len(M)
    M = [row[:] for row in M]
    det = ONE
    for k in range(n):
        piv = next((i for i in range(k, n) if not M[i][k].is_zero()), None)
        if piv is None:
            return ZERO
        if piv != k:
            M[k], M[piv] = M[piv], M[k]
            det = -det
        pk = M[k][k]
        det = det * pk
        inv = ONE / pk
        for i in range(k + 1, n):
            if M[i][k].is_zero():
                continue
            f = M[i][k] * inv
            row_k, row_i = M[k], M[i]
            for j in range(k + 1, n):
                if not row_k[j].is_zero():
                    row_i[j] = row_i[j] - f * row_k[j]
    return det


def _gi_det(M):
    """Fraction-free (Bareiss) determinant over Gaussian integers.

    Entries are ``(re, im)`` pairs of Python ints; plain-int arithmetic is
    far cheaper than normalizing rationals at every step.
    """
    n = len(M)
    M = [row[:] for row in M]
    sign = 1
    pr, pi = 1, 0
    for k in range(n - 1):
        if M[k][k] == (0, 0):
            swap = next((i for i in range(k + 1, n) if M[i][k] != (0, 0)), None)
            if swap is None:
                return 0, 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        kr, ki = M[k][k]
        den = pr * pr + pi * pi
        row_k = M[k]
        for i in range(k + 1, n):
            row_i = M[i]
            ar, ai = row_i[k]
            for j in range(k + 1, n):
                xr, xi = row_i[j]
                yr, yi = row_k[j]
                # x*kk - a*y, then exact division by the previous pivot
                nr = xr * kr - xi * ki - (ar * yr - ai * yi)
                ni = xr * ki + xi * kr - (ar * yi + ai * yr)
                qr = nr * pr + ni * pi
                qi = ni * pr - nr * pi
                row_i[j] = (qr // den, qi // den)
            row_i[k] = (0, 0)
        pr, pi = kr, ki
    dr, di = M[n - 1][n - 1]
    return (dr, di) if sign > 0 else (-dr, -di)


def _to_gaussian_ints(u):
    d = 1
    for c in u:
        d = d * c._d // _igcd(d, c._d)
    return [(c._a * (d // c._d), c._b * (d // c._d)) for c in u], d


def _u_sylvester_det(a, b):
    m, n = len(a) - 1, len(b) - 1
    A, da = _to_gaussian_ints(a)
    B, db = _to_gaussian_ints(b)
    size = m + n
    zero = (0, 0)
    rows = []
    for r in range(n):
        row = [zero] * size
        for k in range(m + 1):
            row[r + (m - k)] = A[k]
        rows.append(row)
    for r in range(m):
        row = [zero] * size
        for k in range(n + 1):
            row[r + (n - k)] = B[k]
        rows.append(row)
    re_, im_ = _gi_det(rows)
    return GaussianRational._raw(re_, im_, da ** n * db ** m)


def u_resultant(a, b):
    a, b = u_trim(a), u_trim(b)
    if len(a) < 2 or len(b) < 2:
        raise DegenerateInput("univariate resultant needs positive degrees")
    return _u_sylvester_det(a, b)


def _specialize_last(p, s):
    """Coefficients (low first) of p(1, s, x) as a polynomial in x."""
    deg = p.degree_in(2)
    out = [ZERO] * (deg + 1)
    for (e0, e1, e2), c in p.terms.items():
        out[e2] = out[e2] + c * (s ** e1)
    return out


def _newton_interp(xs, ys):
    n = len(xs)
    coef = [GaussianRational.coerce(y) for y in ys]
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j])
    poly = [coef[-1]]
    for k in range(n - 2, -1, -1):
        new = [ZERO] * (len(poly) + 1)
        for i, c in enumerate(poly):
            new[i + 1] = new[i + 1] + c
            new[i] = new[i] - c * xs[k]
        new[0] = new[0] + coef[k]
        poly = new
    return poly


def resultant_binary(f, g):
    """Resultant of two ternary forms eliminating the last variable.

    Computed by evaluation at integer points and exact interpolation, which is
    much faster than a polynomial-entry determinant.  Returns a binary form
    (a HomoPoly in 2 variables).
    """
    if f.num_vars != 3 or g.num_vars != 3:
        raise ValueError("resultant_binary expects ternary forms")
    if f.is_zero() or g.is_zero():
        raise DegenerateInput("resultant of a zero polynomial")
    m, n = f.degree_in(2), g.degree_in(2)
    if m < 1 or n < 1:
        raise DegenerateInput("polynomial has degree 0 in the eliminated variable")
    D = f.degree * n + g.degree * m - m * n
    xs, ys = [], []
    s = 0
    while len(xs) < D + 1:
        a = _specialize_last(f, s)
        b = _specialize_last(g, s)
        if not a[m].is_zero() and not b[n].is_zero():
            xs.append(s)
            ys.append(_u_sylvester_det(a, b))
        s = -s if s > 0 else -s + 1
        if abs(s) > 10 * (D + 10) + 100:
            raise DegenerateInput("could not find evaluation points")
    r = _newton_interp(xs, ys)
    r = r + [ZERO] * (D + 1 - len(r))
    terms = {(D - k, k): c for k, c in enumerate(r[: D + 1]) if not c.is_zero()}
    return HomoPoly(2, terms)
