"""Sparse homogeneous polynomials with exact Gaussian-rational coefficients."""

from functools import cached_property
import numpy as np

from ..errors import NotHomogeneous, DegreeMismatch, DegenerateInput
from . import _sparse as sp
from .gaussian import GaussianRational, ONE


class HomoPoly:
    """Homogeneous polynomial in ``num_vars`` variables.

    Parameters
    ----------
    num_vars : int
        Number of homogeneous variables (``n + 1`` for a polynomial on P^n).
    terms : dict
        Maps exponent tuples to coefficients (anything coercible to
        :class:`GaussianRational`).  Zero coefficients are dropped.

    Notes
    -----
    The zero polynomial has ``degree`` ``None``.  Instances are treated as
    immutable; arithmetic always returns new objects.
    """

    __slots__ = ("num_vars", "degree", "terms", "__dict__")

    def __init__(self, num_vars, terms=None):
        self.num_vars = int(num_vars)
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != self.num_vars or any(x < 0 for x in e):
                raise ValueError(f"bad exponent vector {e} for {num_vars} variables")
            c = GaussianRational.coerce(c)
            if c.is_zero():
                continue
            if e in clean:
                c = clean[e] + c
                if c.is_zero():
                    del clean[e]
                    continue
            clean[e] = c
        degs = {sum(e) for e in clean}
        if len(degs) > 1:
            by_deg = {}
            for e in clean:
                by_deg.setdefault(sum(e), []).append(e)
            raise NotHomogeneous(
                f"mixed degrees {sorted(degs)}",
                [e for d in sorted(by_deg) for e in by_deg[d]],
            )
        self.terms = clean
        self.degree = degs.pop() if degs else None

    @classmethod
    def zero(cls, num_vars):
        return cls(num_vars, {})

    @classmethod
    def monomial(cls, exponents, coeff=1):
        return cls(len(exponents), {tuple(exponents): coeff})

    @classmethod
    def variable(cls, num_vars, index):
        e = [0] * num_vars
        e[index] = 1
        return cls(num_vars, {tuple(e): 1})

    @classmethod
    def constant(cls, num_vars, c):
        return cls(num_vars, {(0,) * num_vars: c})

    # --- basic queries ----------------------------------------------------
    def is_zero(self):
        return not self.terms

    def is_monomial(self):
        return len(self.terms) == 1

    def is_unit_monomial(self):
        return len(self.terms) == 1 and next(iter(self.terms.values())) == ONE

    def sorted_terms(self):
        """Terms in decreasing graded-lex order."""
        return sorted(self.terms.items(), key=lambda t: sp.glex_key(t[0]), reverse=True)

    def leading_term(self):
        if not self.terms:
            raise DegenerateInput("zero polynomial has no leading term")
        return sp.lead(self.terms)

    def degree_in(self, var_index):
        return sp.degree_in(self.terms, var_index)

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, HomoPoly):
            return NotImplemented
        return self.num_vars == other.num_vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.num_vars, frozenset(self.terms.items())))

    def __repr__(self):
        return f"HomoPoly({self.num_vars}, {self.render()!r})"

    # --- arithmetic -------------------------------------------------------
    def _check(self, other):
        if self.num_vars != other.num_vars:
            raise ValueError("polynomials live in different variable counts")

    def __add__(self, other):
        if not isinstance(other, HomoPoly):
            return NotImplemented
        self._check(other)
        if self.degree is not None and other.degree is not None and self.degree != other.degree:
            raise DegreeMismatch(f"cannot add degree {self.degree} and {other.degree}")
        return HomoPoly(self.num_vars, sp.add(self.terms, other.terms))

    def __neg__(self):
        return HomoPoly(self.num_vars, sp.neg(self.terms))

    def __sub__(self, other):
        if not isinstance(other, HomoPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, HomoPoly):
            self._check(other)
            return HomoPoly(self.num_vars, sp.mul(self.terms, other.terms))
        try:
            c = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return HomoPoly(self.num_vars, sp.scale(self.terms, c))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        return HomoPoly(self.num_vars, sp.power(self.terms, k, self.num_vars))

    def divmod(self, other):
        """Division by leading terms; returns (quotient, remainder dict)."""
        q, r = sp.divmod_(self.terms, other.terms)
        return HomoPoly(self.num_vars, q), r

    def exact_div(self, other):
        return HomoPoly(self.num_vars, sp.divexact(self.terms, other.terms))

    def divides(self, other):
        if self.is_zero():
            return other.is_zero()
        _, r = sp.divmod_(other.terms, self.terms)
        return not r

    def monic(self):
        return HomoPoly(self.num_vars, sp.monic(self.terms))

    def differentiate(self, var_index):
        """Exact partial derivative in variable ``var_index``."""
        out = {}
        for e, c in self.terms.items():
            k = e[var_index]
            if k:
                e2 = e[:var_index] + (k - 1,) + e[var_index + 1:]
                out[e2] = c * k
        return HomoPoly(self.num_vars, out)

    def substitute(self, polys):
        """Compose: replace variable ``i`` by ``polys[i]`` (all HomoPolys)."""
        if len(polys) != self.num_vars:
            raise ValueError("need one polynomial per variable")
        nv = polys[0].num_vars
        if self.is_zero():
            return HomoPoly.zero(nv)
        cache = {}

        def pw(i, k):
            key = (i, k)
            if key not in cache:
                if k == 0:
                    cache[key] = sp.const(1, nv)
                elif k == 1:
                    cache[key] = polys[i].terms
                else:
                    half = pw(i, k // 2)
                    sq = sp.mul(half, half)
                    cache[key] = sp.mul(sq, polys[i].terms) if k % 2 else sq
            return cache[key]

        acc = {}
        for e, c in self.terms.items():
            t = sp.const(c, nv)
            for i, k in enumerate(e):
                if k:
                    t = sp.mul(t, pw(i, k))
                    if not t:
                        break
            sp.iadd(acc, t)
        return HomoPoly(nv, acc)

    def linear_change(self, matrix):
        """Return ``p(M z)`` for a square matrix of exact entries."""
        n = self.num_vars
        rows = []
        for i in range(n):
            lin = {}
            for j in range(n):
                c = GaussianRational.coerce(matrix[i][j])
                if not c.is_zero():
                    e = [0] * n
                    e[j] = 1
                    lin[tuple(e)] = c
            rows.append(HomoPoly(n, lin))
        return self.substitute(rows)

    # --- numeric evaluation ----------------------------------------------
    @cached_property
    def _numeric(self):
        items = self.sorted_terms()
        if not items:
            return np.zeros((0, self.num_vars), dtype=np.int64), np.zeros(0, dtype=complex)
        exps = np.array([e for e, _ in items], dtype=np.int64)
        coefs = np.array([complex(c) for _, c in items], dtype=complex)
        return exps, coefs

    def evaluate(self, z):
        """Evaluate at one complex point (double precision)."""
        z = np.asarray(z, dtype=complex)
        if z.shape != (self.num_vars,):
            raise ValueError(f"expected {self.num_vars} coordinates")
        return complex(self.evaluate_many(z[None, :])[0])

    def evaluate_many(self, Z):
        """Evaluate at every row of ``Z`` (shape (S, num_vars))."""
        Z = np.asarray(Z, dtype=complex)
        exps, coefs = self._numeric
        if len(coefs) == 0:
            return np.zeros(Z.shape[0], dtype=complex)
        vals = np.ones((Z.shape[0], len(coefs)), dtype=complex)
        for i in range(self.num_vars):
            col = exps[:, i]
            # only the powers that actually occur, by repeated squaring
            for e in np.unique(col[col > 0]):
                vals[:, col == e] *= (Z[:, i] ** int(e))[:, None]
        return vals @ coefs

    def coefficient_norm(self):
        _, coefs = self._numeric
        return float(np.sqrt(np.sum(np.abs(coefs) ** 2)))

    # --- text -------------------------------------------------------------
    def render(self, variables=None):
        """Text in the polynomial grammar; ``parse(render(p))`` round-trips."""
        variables = variables or default_variables(self.num_vars)
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                v if k == 1 else f"{v}^{k}" for v, k in zip(variables, e) if k
            )
            negative = c.is_real() and c.re < 0
            if negative:
                c = -c
            if not mono:
                body = _wrap(c.to_text())
            elif c == ONE:
                body = mono
            else:
                body = f"{_wrap(c.to_text())}*{mono}"
            parts.append((negative, body))
        neg0, body0 = parts[0]
        out = ("-" if neg0 else "") + body0
        for negative, body in parts[1:]:
            out += (" - " if negative else " + ") + body
        return out

    __str__ = render


def _wrap(text):
    if text.startswith("(") or "i" not in text:
        return text
    return f"({text})"


def default_variables(num_vars):
    if num_vars == 2:
        return ["z", "w"]
    if num_vars == 3:
        return ["t", "z", "w"]
    return [f"z{i}" for i in range(num_vars)]
