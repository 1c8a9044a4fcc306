"""Recursive-descent parser for the polynomial text grammar.

Grammar (whitespace insignificant, implicit multiplication forbidden)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' INT)?
    atom   := INT | INT 'i' | 'i' | NAME | '(' expr ')'

Division is allowed only by constants.  ``i`` is reserved for the imaginary
unit and cannot be a variable name.
"""

import re

from ..errors import PolynomialSyntaxError, NotHomogeneous
from . import _sparse as sp
from .gaussian import GaussianRational, I
from .homopoly import HomoPoly

_TOKEN = re.compile(r"\s*(?:(\d+i?)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        num, name, sym = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            tokens.append(("num", num, start))
        elif name is not None:
            tokens.append(("name", name, start))
        else:
            tokens.append(("sym", sym, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.vars = {v: k for k, v in enumerate(variables)}
        if "i" in self.vars:
            raise ValueError("'i' is reserved for the imaginary unit")
        self.nv = len(variables)
        self.toks = _tokenize(text)
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def take(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise PolynomialSyntaxError(msg, tok[2], self.text)

    def expect(self, sym):
        t = self.peek()
        if t[0] != "sym" or t[1] != sym:
            self.fail(f"expected '{sym}'")
        return self.take()

    def parse(self):
        p = self.expr()
        if self.peek()[0] != "end":
            self.fail("unexpected token")
        return p

    def expr(self):
        p = self.term()
        while self.peek()[0] == "sym" and self.peek()[1] in "+-":
            op = self.take()[1]
            q = self.term()
            p = sp.add(p, q) if op == "+" else sp.sub(p, q)
        return p

    def term(self):
        p = self.unary()
        while self.peek()[0] == "sym" and self.peek()[1] in "*/":
            tok = self.take()
            q = self.unary()
            if tok[1] == "*":
                p = sp.mul(p, q)
            else:
                if not q or not sp.is_const(q):
                    self.fail("division by a non-constant", tok)
                c = q[(0,) * self.nv]
                p = sp.scale(p, GaussianRational(1) / c)
        return p

    def unary(self):
        t = self.peek()
        if t[0] == "sym" and t[1] in "+-":
            self.take()
            p = self.unary()
            return sp.neg(p) if t[1] == "-" else p
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "sym" and self.peek()[1] == "^":
            self.take()
            t = self.peek()
            if t[0] != "num" or t[1].endswith("i"):
                self.fail("exponent must be a nonnegative integer")
            self.take()
            base = sp.power(base, int(t[1]), self.nv)
        return base

    def _no_juxtaposition(self):
        nxt = self.peek()
        if nxt[0] in ("name", "num") or (nxt[0] == "sym" and nxt[1] == "("):
            self.fail("implicit multiplication is not allowed")

    def atom(self):
        t = self.peek()
        if t[0] == "num":
            self.take()
            self._no_juxtaposition()
            if t[1].endswith("i"):
                return sp.const(GaussianRational(0, int(t[1][:-1])), self.nv)
            return sp.const(int(t[1]), self.nv)
        if t[0] == "name":
            self.take()
            if t[1] == "i":
                return sp.const(I, self.nv)
            if t[1] not in self.vars:
                self.fail(f"unknown variable '{t[1]}'", t)
            e = [0] * self.nv
            e[self.vars[t[1]]] = 1
            self._no_juxtaposition()
            return {tuple(e): GaussianRational(1)}
        if t[0] == "sym" and t[1] == "(":
            self.take()
            p = self.expr()
            self.expect(")")
            self._no_juxtaposition()
            return p
        if t[0] == "end":
            self.fail("unexpected end of input")
        self.fail(f"unexpected '{t[1]}'")


def parse(text, variables):
    """Parse ``text`` into a :class:`HomoPoly` over ``variables``.

    Raises
    ------
    PolynomialSyntaxError
        On malformed input; carries the character position.
    NotHomogeneous
        When terms of different total degree survive cancellation; the
        offending monomials are listed on the exception.
    """
    variables = list(variables)
    terms = _Parser(text, variables).parse()
    degs = sorted({sum(e) for e in terms})
    if len(degs) > 1:
        mons = sorted(terms, key=sp.glex_key, reverse=True)
        raise NotHomogeneous(
            f"polynomial mixes degrees {degs}: "
            + ", ".join(_mono_text(e, variables) for e in mons),
            mons,
        )
    return HomoPoly(len(variables), terms)


def _mono_text(e, variables):
    s = "*".join(v if k == 1 else f"{v}^{k}" for v, k in zip(variables, e) if k)
    return s or "1"
