"""Modular GCD of homogeneous polynomials in at most three variables over Q(i).

Dehomogenize at the last variable, compute the bivariate GCD over F_p by
evaluation in the second variable and interpolation (dense, Brown style),
and lift coefficients by CRT plus rational reconstruction.  Primes are
p = 1 mod 4, so Z[i]/(p) = F_p x F_p through i -> +-sqrt(-1); the two
images recover real and imaginary parts separately.  The candidate is
accepted only after exact trial division, so the result is always correct;
the modular part only proposes it.
"""

import gmpy2

from . import _sparse as sp
from .gaussian import GaussianRational, ONE


def _primes(start=(1 << 61)):
    p = start
    while True:
        p = int(gmpy2.next_prime(p))
        if p % 4 == 1:
            g = 2
            while pow(g, (p - 1) // 2, p) != p - 1:
                g += 1
            yield p, pow(g, (p - 1) // 4, p)


# --- univariate arithmetic over F_p (coefficient lists, low degree first) -----

def _trim(u):
    while u and u[-1] == 0:
        u.pop()
    return u


def _umonic(u, p):
    inv = pow(u[-1], -1, p)
    return [c * inv % p for c in u]


def _ugcd(u, w, p):
    u, w = _trim(list(u)), _trim(list(w))
    while w:
        u = _urem(u, w, p)
        u, w = w, u
    return _umonic(u, p) if u else u


def _urem(u, w, p):
    u = list(u)
    inv = pow(w[-1], -1, p)
    dw = len(w) - 1
    while len(u) > dw:
        f = u[-1] * inv % p
        if f:
            off = len(u) - 1 - dw
            for i in range(dw):
                u[off + i] = (u[off + i] - f * w[i]) % p
        u.pop()
    return _trim(u)


def _udiv(u, w, p):
    """Exact quotient u / w."""
    u = list(u)
    inv = pow(w[-1], -1, p)
    dw = len(w) - 1
    q = [0] * max(len(u) - dw, 0)
    while len(u) > dw:
        f = u[-1] * inv % p
        off = len(u) - 1 - dw
        q[off] = f
        if f:
            for i in range(dw):
                u[off + i] = (u[off + i] - f * w[i]) % p
        u.pop()
    return _trim(q)


def _ueval(u, x, p):
    s = 0
    for c in reversed(u):
        s = (s * x + c) % p
    return s


def _uinterp(xs, ys, p):
    """Newton interpolation; coefficient list of length len(xs)."""
    n = len(xs)
    coef = list(ys)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) * pow(xs[i] - xs[i - j], -1, p) % p
    poly = [coef[-1]]
    for k in range(n - 2, -1, -1):
        new = [0] * (len(poly) + 1)
        for i, c in enumerate(poly):
            new[i + 1] = (new[i + 1] + c) % p
            new[i] = (new[i] - c * xs[k]) % p
        new[0] = (new[0] + coef[k]) % p
        poly = new
    return poly


# --- bivariate GCD over F_p -------------------------------------------------------
# a bivariate polynomial is {i: [c_0(y), c_1(y), ...]}: x^i times a polynomial in y

def _reduce(poly, p, s):
    out = {}
    for (i, j), c in poly.items():
        d = c._d % p
        if d == 0:
            return None
        v = (c._a + c._b * s) * pow(d, -1, p) % p
        if v:
            row = out.setdefault(i, [])
            if len(row) <= j:
                row.extend([0] * (j + 1 - len(row)))
            row[j] = v
    return {i: _trim(r) for i, r in out.items() if _trim(r)}


def _content(F, p):
    g = []
    for row in F.values():
        g = _ugcd(g, row, p) if g else _umonic(row, p)
        if len(g) == 1:
            break
    return g


def _primitive(F, c, p):
    if len(c) == 1:
        return F
    return {i: _udiv(row, c, p) for i, row in F.items()}


def _eval_y(F, y, p):
    dx = max(F)
    u = [0] * (dx + 1)
    for i, row in F.items():
        u[i] = _ueval(row, y, p)
    return u


def _bigcd_mod(A, B, p):
    """Monic (in lex order on (x, y)) GCD of A, B in F_p[x, y], or None if unlucky."""
    cA, cB = _content(A, p), _content(B, p)
    cont = _ugcd(cA, cB, p)
    A, B = _primitive(A, cA, p), _primitive(B, cB, p)
    lcA, lcB = A[max(A)], B[max(B)]
    gamma = _ugcd(lcA, lcB, p)
    degy = lambda F: max(len(r) for r in F.values()) - 1
    need = len(gamma) + min(degy(A), degy(B))
    best, xs, vals = None, [], []
    y = 0
    while len(xs) < need:
        y += 1
        if y > 4 * need + 64:
            return None
        if _ueval(lcA, y, p) == 0 or _ueval(lcB, y, p) == 0:
            continue
        g = _ugcd(_eval_y(A, y, p), _eval_y(B, y, p), p)
        e = len(g) - 1
        if best is None or e < best:
            best, xs, vals = e, [], []
        elif e > best:
            continue
        gy = _ueval(gamma, y, p)
        xs.append(y)
        vals.append([c * gy % p for c in g])
    if best == 0:
        H = {0: [1]}
    else:
        H = {}
        for i in range(best + 1):
            row = _trim(_uinterp(xs, [v[i] for v in vals], p))
            if row:
                H[i] = row
        H = _primitive(H, _content(H, p), p)
    if len(cont) > 1:
        H = {i: _umul(row, cont, p) for i, row in H.items()}
    # lex-leading coefficient: highest x power, then highest y power
    top = H[max(H)]
    inv = pow(top[-1], -1, p)
    return {(i, j): c * inv % p for i, row in H.items() for j, c in enumerate(row) if c}


def _umul(u, w, p):
    out = [0] * (len(u) + len(w) - 1)
    for i, a in enumerate(u):
        if a:
            for j, b in enumerate(w):
                out[i + j] = (out[i + j] + a * b) % p
    return out


# --- lifting ----------------------------------------------------------------------

def _ratrec(a, m):
    """Rational reconstruction n/d = a mod m with |n|, d <= sqrt(m/2), or None."""
    bound = gmpy2.isqrt(m // 2)
    r0, r1, t0, t1 = m, a % m, 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    if t1 == 0 or abs(t1) > bound or gmpy2.gcd(r1, t1) != 1:
        return None
    if t1 < 0:
        r1, t1 = -r1, -t1
    return int(r1), int(t1)


def _lift(images, modulus):
    out = {}
    for e, (re, im) in images.items():
        a = _ratrec(re, modulus)
        b = _ratrec(im, modulus)
        if a is None or b is None:
            return None
        d = a[1] * b[1] // int(gmpy2.gcd(a[1], b[1]))
        c = GaussianRational._raw(a[0] * (d // a[1]), b[0] * (d // b[1]), d)
        if not c.is_zero():
            out[e] = c
    return out


def _dehomogenize(poly, nv):
    if nv == 2:
        return {(e[0], 0): c for e, c in poly.items()}
    return {(e[0], e[1]): c for e, c in poly.items()}


def _homogenize(biv, nv):
    D = max(i + j for i, j in biv)
    if nv == 2:
        return {(i, D - i): c for (i, j), c in biv.items()}
    return {(i, j, D - i - j): c for (i, j), c in biv.items()}


def homogeneous_gcd(a, b, max_primes=400):
    """Monic GCD of two homogeneous sparse polynomials in 2 or 3 variables.

    Returns None when the modular route gives up (the caller then falls
    back to the pseudo-remainder GCD).
    """
    nv = len(next(iter(a)))
    ma, mb = sp.monomial_content(a), sp.monomial_content(b)
    mono = tuple(min(x, y) for x, y in zip(ma, mb))
    a, b = sp.shift_down(a, mono), sp.shift_down(b, mono)
    if sp.is_const(a) or sp.is_const(b) or sp.certify_coprime([a, b]):
        return sp.monic({mono: ONE})
    A, B = _dehomogenize(a, nv), _dehomogenize(b, nv)
    acc, modulus, shape, last = None, 1, None, None
    primes = _primes()
    for _ in range(max_primes):
        p, s = next(primes)
        imgs = []
        for root in (s, p - s):
            Ap, Bp = _reduce(A, p, root), _reduce(B, p, root)
            if not Ap or not Bp:
                break
            g = _bigcd_mod(Ap, Bp, p)
            if g is None:
                break
            imgs.append(g)
        if len(imgs) < 2 or _shape(imgs[0]) != _shape(imgs[1]):
            continue
        key = _shape(imgs[0])
        if shape is not None and key > shape:
            continue                      # unlucky prime
        # a coefficient may vanish mod p by accident: merge supports with zeros
        inv2, inv2s = pow(2, -1, p), pow(2 * s, -1, p)
        img = {}
        for e in set(imgs[0]) | set(imgs[1]):
            u, v = imgs[0].get(e, 0), imgs[1].get(e, 0)
            img[e] = ((u + v) * inv2 % p, (u - v) * inv2s % p)
        if shape is None or key < shape:
            shape, acc, modulus, last = key, img, p, None
        else:
            acc = {e: (_crt(acc.get(e, (0, 0))[0], modulus, img.get(e, (0, 0))[0], p),
                       _crt(acc.get(e, (0, 0))[1], modulus, img.get(e, (0, 0))[1], p))
                   for e in set(acc) | set(img)}
            modulus *= p
        cand = _lift(acc, modulus)
        if cand is None or cand != last:
            last = cand
            continue
        g = _homogenize(cand, nv)
        if not sp.divmod_(a, g)[1] and not sp.divmod_(b, g)[1]:
            return sp.monic(sp.mul_term(g, mono, ONE))
        last = None
    return None


def _shape(g):
    return max(i + j for i, j in g), max(i for i, _ in g)


def _crt(r1, m1, r2, m2):
    t = (r2 - r1) * pow(m1, -1, m2) % m2
    return r1 + m1 * t
