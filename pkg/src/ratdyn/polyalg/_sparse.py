"""Low-level sparse polynomial kernels.

A polynomial here is a plain ``dict`` mapping exponent tuples to nonzero
:class:`GaussianRational` coefficients.  Nothing in this module assumes
homogeneity; the GCD recursion and the Sylvester determinants pass through
non-homogeneous intermediates.
"""

import random

from .gaussian import GaussianRational, ONE

# prime p = 1 mod 4, so sqrt(-1) exists in F_p; used only for a coprimality
# certificate (never for producing results)
_P = 2305843009213693973
_SQRT_M1 = 1035093963448091331


def glex_key(exp):
    return (sum(exp), exp)


def lead(p):
    e = max(p, key=glex_key)
    return e, p[e]


def add(p, q):
    r = dict(p)
    for e, c in q.items():
        v = r.get(e)
        if v is None:
            r[e] = c
        else:
            v = v + c
            if v.is_zero():
                del r[e]
            else:
                r[e] = v
    return r


def iadd(acc, q):
    """In-place ``acc += q``."""
    for e, c in q.items():
        v = acc.get(e)
        if v is None:
            acc[e] = c
        else:
            v = v + c
            if v.is_zero():
                del acc[e]
            else:
                acc[e] = v
    return acc


def neg(p):
    return {e: -c for e, c in p.items()}


def sub(p, q):
    return add(p, neg(q))


def scale(p, c):
    c = GaussianRational.coerce(c)
    if c.is_zero():
        return {}
    return {e: v * c for e, v in p.items()}


def mul_term(p, exp, c):
    return {tuple(a + b for a, b in zip(e, exp)): v * c for e, v in p.items()}


def mul(p, q):
    if len(p) < len(q):
        p, q = q, p
    r = {}
    for e2, c2 in q.items():
        for e1, c1 in p.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            v = r.get(e)
            r[e] = c1 * c2 if v is None else v + c1 * c2
    return {e: c for e, c in r.items() if not c.is_zero()}


def power(p, k, nvars):
    result = {(0,) * nvars: ONE}
    base = p
    while k:
        if k & 1:
            result = mul(result, base)
        k >>= 1
        if k:
            base = mul(base, base)
    return result


def const(c, nvars):
    c = GaussianRational.coerce(c)
    return {} if c.is_zero() else {(0,) * nvars: c}


def is_const(p):
    return all(not any(e) for e in p)


def divides_exp(a, b):
    return all(x <= y for x, y in zip(a, b))


def divmod_(p, q):
    """Multivariate division by leading terms (graded lex).

    Returns ``(quotient, remainder)``; the remainder is empty exactly when the
    division is exact (for exact division any term order certifies it).
    """
    if not q:
        raise ZeroDivisionError("division by zero polynomial")
    lq, cq = lead(q)
    rest = dict(p)
    quot, rem = {}, {}
    while rest:
        e, c = lead(rest)
        if divides_exp(lq, e):
            m = tuple(a - b for a, b in zip(e, lq))
            f = c / cq
            quot[m] = quot[m] + f if m in quot else f
            rest = sub(rest, mul_term(q, m, f))
        else:
            rem[e] = c
            del rest[e]
    quot = {e: c for e, c in quot.items() if not c.is_zero()}
    return quot, rem


def divexact(p, q):
    quot, rem = divmod_(p, q)
    if rem:
        raise ArithmeticError("polynomial division is not exact")
    return quot


def degree_in(p, v):
    return max((e[v] for e in p), default=-1)


def coeffs_in(p, v):
    """Split ``p`` as sum_k c_k(x) x_v^k; returns {k: c_k} with x_v removed."""
    out = {}
    for e, c in p.items():
        k = e[v]
        e2 = e[:v] + (0,) + e[v + 1:]
        out.setdefault(k, {})[e2] = c
    return out


def variables(p):
    nv = len(next(iter(p))) if p else 0
    return {i for i in range(nv) if any(e[i] for e in p)}


def monomial_content(p):
    """Componentwise minimum exponent over all terms."""
    it = iter(p)
    m = list(next(it))
    for e in it:
        m = [min(a, b) for a, b in zip(m, e)]
    return tuple(m)


def shift_down(p, m):
    return {tuple(a - b for a, b in zip(e, m)): c for e, c in p.items()}


def monic(p):
    if not p:
        return p
    _, c = lead(p)
    if c == ONE:
        return p
    inv = ONE / c
    return {e: v * inv for e, v in p.items()}


def prem(a, b, v):
    """Pseudo-remainder of ``a`` by ``b`` in the variable ``x_v``."""
    db = degree_in(b, v)
    cb = coeffs_in(b, v)
    lcb = cb[db]
    # b = lcb * x^db + tail
    r = a
    while r:
        dr = degree_in(r, v)
        if dr < db:
            break
        lcr = coeffs_in(r, v)[dr]
        shift = [0] * len(next(iter(a)))
        shift[v] = dr - db
        shift = tuple(shift)
        t = mul(lcr, {shift: ONE})
        r = sub(mul(r, lcb), mul(t, b))
    return r


# --- modular coprimality certificate --------------------------------------

def _to_mod(c):
    a, b, d = c._a, c._b, c._d
    num = (a + b * _SQRT_M1) % _P
    return num * pow(d, -1, _P) % _P


def _poly_mod_eval(terms_mod, point):
    nv = len(point)
    maxdeg = [0] * nv
    for e, _ in terms_mod:
        for i in range(nv):
            if e[i] > maxdeg[i]:
                maxdeg[i] = e[i]
    pw = []
    for i in range(nv):
        row = [1]
        x = point[i]
        for _ in range(maxdeg[i]):
            row.append(row[-1] * x % _P)
        pw.append(row)
    s = 0
    for e, c in terms_mod:
        t = c
        for i in range(nv):
            if e[i]:
                t = t * pw[i][e[i]] % _P
        s += t
    return s % _P


def _interp_mod(xs, ys):
    """Newton interpolation over F_p; returns coefficient list (low first)."""
    n = len(xs)
    coef = list(ys)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) * pow(xs[i] - xs[i - j], -1, _P) % _P
    poly = [0] * n
    poly[0] = coef[n - 1]
    deg = 0
    for k in range(n - 2, -1, -1):
        # poly = poly * (x - xs[k]) + coef[k]
        new = [0] * n
        for i in range(deg + 1):
            new[i + 1] = (new[i + 1] + poly[i]) % _P
            new[i] = (new[i] - poly[i] * xs[k]) % _P
        new[0] = (new[0] + coef[k]) % _P
        poly = new
        deg += 1
    return poly


def _trim(u):
    while u and u[-1] == 0:
        u.pop()
    return u


def _ugcd_mod(u, w):
    u, w = _trim(list(u)), _trim(list(w))
    while w:
        inv = pow(w[-1], -1, _P)
        while len(u) >= len(w):
            if u[-1] == 0:
                u.pop()
                continue
            f = u[-1] * inv % _P
            off = len(u) - len(w)
            for i in range(len(w)):
                u[off + i] = (u[off + i] - f * w[i]) % _P
            u.pop()
            _trim(u)
            if not u:
                break
        u, w = w, u
    return u


def certify_coprime(polys, rng=None):
    """Cheap sufficient test that the polynomials share no factor.

    Restricts every polynomial to a random affine line and takes the
    univariate GCD over F_p.  Returns True only when coprimality is
    certified; False means "unknown".
    """
    polys = [p for p in polys if p]
    if len(polys) < 2:
        return False
    nv = len(next(iter(polys[0])))
    rng = rng or random.Random(0x5EED)
    a = [rng.randrange(1, _P) for _ in range(nv)]
    b = [rng.randrange(1, _P) for _ in range(nv)]
    g = None
    full = False
    for p in polys:
        terms = [(e, _to_mod(c)) for e, c in p.items()]
        if any(c == 0 for _, c in terms):
            return False
        deg = max(sum(e) for e in p)
        xs = list(range(1, deg + 2))
        ys = [_poly_mod_eval(terms, [(ai + s * bi) % _P for ai, bi in zip(a, b)]) for s in xs]
        u = _trim(_interp_mod(xs, ys))
        if len(u) - 1 == deg:
            full = True
        g = u if g is None else _ugcd_mod(g, u)
        if g is not None and len(g) == 1:
            return full or _all_full(polys, a, b)
    return False


def _all_full(polys, a, b):
    for p in polys:
        terms = [(e, _to_mod(c)) for e, c in p.items()]
        deg = max(sum(e) for e in p)
        top = [(e, c) for e, c in terms if sum(e) == deg]
        if _poly_mod_eval(top, b) != 0:
            return True
    return False


# --- exact multivariate GCD -----------------------------------------------

def _content(p, v):
    cs = list(coeffs_in(p, v).values())
    g = cs[0]
    for c in cs[1:]:
        if is_const(g):
            break
        g = gcd(g, c)
    if is_const(g):
        nv = len(next(iter(p)))
        return const(1, nv)
    return g


def _primitive(p, v):
    c = _content(p, v)
    if not is_const(c):
        p = divexact(p, c)
    return monic(p)


def gcd(a, b):
    """Monic GCD of two sparse polynomials over Q(i).

    Monomial content is split off first; what remains goes through a
    primitive pseudo-remainder sequence in one shared variable, with the
    contents handled by recursion.
    """
    if not a:
        return monic(b)
    if not b:
        return monic(a)
    nv = len(next(iter(a)))
    ma, mb = monomial_content(a), monomial_content(b)
    mono = tuple(min(x, y) for x, y in zip(ma, mb))
    a, b = shift_down(a, ma), shift_down(b, mb)
    g = _gcd_stripped(a, b, nv)
    return monic(mul_term(g, mono, ONE))


def _gcd_stripped(a, b, nv):
    one = const(1, nv)
    if is_const(a) or is_const(b):
        return one
    if len(a) == 1 or len(b) == 1:
        # a monomial with no monomial content is a constant; handled above
        return one
    va, vb = variables(a), variables(b)
    only_a = va - vb
    only_b = vb - va
    if only_a:
        v = min(only_a)
        g = b
        for c in coeffs_in(a, v).values():
            g = gcd(g, c)
            if is_const(g):
                return one
        return g
    if only_b:
        return _gcd_stripped(b, a, nv)
    if certify_coprime([a, b]):
        return one
    # main variable: smallest positive max degree keeps the PRS short
    v = min(va, key=lambda i: (max(degree_in(a, i), degree_in(b, i)), i))
    ca, cb = _content(a, v), _content(b, v)
    c = gcd(ca, cb)
    pa = monic(divexact(a, ca)) if not is_const(ca) else monic(a)
    pb = monic(divexact(b, cb)) if not is_const(cb) else monic(b)
    if degree_in(pa, v) < degree_in(pb, v):
        pa, pb = pb, pa
    while True:
        r = prem(pa, pb, v)
        if not r:
            break
        if degree_in(r, v) == 0:
            pb = one
            break
        pa, pb = pb, _primitive(r, v)
    g = pb if is_const(pb) else _primitive(pb, v)
    return mul(c, g)
