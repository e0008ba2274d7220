"""Polynomials in noncommuting q, p with [q, p] = i hbar.

A ``WeylPolynomial`` stores terms ``c * (i hbar)^k * q^a p^b`` under the key
``(a, b, k)``: every word is kept with all q's to the left of all p's and the
power of ``i hbar`` produced by reordering is tracked explicitly. Setting
hbar to zero (``shadow``) recovers the commutative phase-space polynomial.

Expectation values in a quantum ME packet go through the ladder-operator
picture: q = Q + (dQ/sqrt(nu))(A + A^+), p = P - i (dP/sqrt(nu))(A - A^+),
terms with unequal numbers of A and A^+ are dropped, and the rest is
reduced to a polynomial in the number operator A^+A whose moments are
polynomials in nu.

Coefficients may be ``int``, ``Fraction``, ``float``, ``complex`` or sympy
expressions; the arithmetic never assumes more than a commutative ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import sympy as sp

from .core import PacketParams, gaussian_moment
from .errors import DegreeCapError, NotSelfAdjointError, UncertaintyViolationError

SYMBOLIC_DEGREE_CAP = 16


def _tidy(c):
    if isinstance(c, sp.Basic):
        return sp.expand(c)
    return c


def _is_zero(c) -> bool:
    if isinstance(c, sp.Basic):
        return sp.expand(c) == 0
    return c == 0


def _conj(c):
    if isinstance(c, complex):
        return c.conjugate()
    if isinstance(c, sp.Basic):
        return sp.conjugate(c)
    return c


def _accumulate(out: dict, key, value):
    out[key] = out.get(key, 0) + value


def _clean(terms: dict) -> dict:
    cleaned = {}
    for key, c in terms.items():
        c = _tidy(c)
        if not _is_zero(c):
            cleaned[key] = c
    return cleaned


class WeylPolynomial:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms: dict = _clean(dict(terms or {}))

    @classmethod
    def q(cls) -> "WeylPolynomial":
        return cls({(1, 0, 0): 1})

    @classmethod
    def p(cls) -> "WeylPolynomial":
        return cls({(0, 1, 0): 1})

    @classmethod
    def const(cls, c) -> "WeylPolynomial":
        return cls({(0, 0, 0): c})

    @classmethod
    def monomial(cls, a: int, b: int, c=1) -> "WeylPolynomial":
        return cls({(a, b, 0): c})

    @classmethod
    def word(cls, letters: str) -> "WeylPolynomial":
        """Product of the letters in order, e.g. ``word("pqqp")``."""
        out = cls.const(1)
        for ch in letters.replace(" ", ""):
            if ch == "q":
                out = out * cls.q()
            elif ch == "p":
                out = out * cls.p()
            else:
                raise ValueError(f"unknown letter {ch!r}")
        return out

    @classmethod
    def from_commutative(cls, poly: Mapping) -> "WeylPolynomial":
        """Read a commutative {(a, b): c} polynomial in q-before-p order."""
        return cls({(a, b, 0): c for (a, b), c in poly.items()})

    # arithmetic

    def _coerce(self, other) -> "WeylPolynomial":
        return other if isinstance(other, WeylPolynomial) else WeylPolynomial.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            _accumulate(out, key, c)
        return WeylPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return WeylPolynomial({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> "WeylPolynomial":
        return WeylPolynomial({k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, WeylPolynomial):
            return self.scale(other)
        out: dict = {}
        for (a, b, k1), c1 in self.terms.items():
            for (c, d, k2), c2 in other.terms.items():
                base = c1 * c2
                # p^b q^c = sum_j j! C(b,j) C(c,j) (-i hbar)^j q^(c-j) p^(b-j)
                for j in range(min(b, c) + 1):
                    w = math.comb(b, j) * math.comb(c, j) * math.factorial(j) * (-1) ** j
                    _accumulate(out, (a + c - j, b + d - j, k1 + k2 + j), w * base)
        return WeylPolynomial(out)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int):
        out = WeylPolynomial.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, WeylPolynomial):
            other = WeylPolynomial.const(other)
        return not (self - other).terms

    __hash__ = None

    def __repr__(self):
        return f"WeylPolynomial({self.to_text()!r})"

    # structure

    def adjoint(self) -> "WeylPolynomial":
        out = WeylPolynomial()
        for (a, b, k), c in self.terms.items():
            # (c (i hbar)^k q^a p^b)^+ = conj(c) (-1)^k (i hbar)^k p^b q^a
            out = out + WeylPolynomial.word("p" * b + "q" * a).scale(_conj(c) * (-1) ** k).shift_hbar(k)
        return out

    def shift_hbar(self, k: int) -> "WeylPolynomial":
        """Multiply by (i hbar)^k; negative k divides and must not underflow."""
        out = {}
        for (a, b, j), c in self.terms.items():
            if j + k < 0:
                raise ValueError("division by i*hbar leaves a negative hbar power")
            out[a, b, j + k] = c
        return WeylPolynomial(out)

    def is_self_adjoint(self) -> bool:
        return self == self.adjoint()

    def symmetrized(self) -> "WeylPolynomial":
        return (self + self.adjoint()).scale(Fraction(1, 2))

    def commutator(self, other) -> "WeylPolynomial":
        other = self._coerce(other)
        return self * other - other * self

    def heisenberg(self, hamiltonian: "WeylPolynomial") -> "WeylPolynomial":
        """Time derivative [X, H] / (i hbar)."""
        comm = self.commutator(hamiltonian)
        # the commutative part cancels identically; floats leave rounding dust
        free = [c for (_, _, k), c in comm.terms.items() if k == 0]
        if free:
            if any(isinstance(c, sp.Basic) for c in free):
                raise ArithmeticError("commutator has an hbar-free part; coefficients are inconsistent")
            scale = max(abs(c) for c in comm.terms.values())
            if max(abs(c) for c in free) > 1e-9 * scale:
                raise ArithmeticError("commutator has an hbar-free part; coefficients are inconsistent")
            comm = WeylPolynomial({key: c for key, c in comm.terms.items() if key[2] != 0})
        return comm.shift_hbar(-1)

    def shadow(self) -> dict:
        """Commutative part: the hbar -> 0 limit as a {(a, b): c} mapping."""
        return {(a, b): c for (a, b, k), c in self.terms.items() if k == 0}

    def drop_hbar(self) -> "WeylPolynomial":
        return WeylPolynomial({key: c for key, c in self.terms.items() if key[2] == 0})

    def degree(self) -> int:
        return max((a + b for (a, b, _) in self.terms), default=0)

    def hbar_order(self) -> int:
        return max((k for (_, _, k) in self.terms), default=0)

    def map_coeffs(self, fn) -> "WeylPolynomial":
        return WeylPolynomial({key: fn(c) for key, c in self.terms.items()})

    def coefficient(self, a: int, b: int, k: int = 0):
        return self.terms.get((a, b, k), 0)

    def to_text(self) -> str:
        """One line per word, e.g. ``q^2 p^1: 3/4 + 1/2 i hbar``."""
        if not self.terms:
            return "0"
        words: dict = {}
        for (a, b, k), c in self.terms.items():
            words.setdefault((a, b), []).append((k, c))
        lines = []
        for (a, b) in sorted(words, key=lambda w: (-(w[0] + w[1]), -w[0])):
            parts = []
            for k, c in sorted(words[a, b]):
                if k == 0:
                    parts.append(f"{c}")
                elif k == 1:
                    parts.append(f"{c} i hbar")
                else:
                    parts.append(f"{c} (i hbar)^{k}")
            lines.append(f"q^{a} p^{b}: " + " + ".join(parts))
        return "\n".join(lines)


# ladder-operator picture


class LadderPolynomial:
    """Normal-ordered polynomial: key (r, s) means (A^+)^r A^s."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms: dict = _clean(dict(terms or {}))

    @classmethod
    def const(cls, c) -> "LadderPolynomial":
        return cls({(0, 0): c})

    @classmethod
    def A(cls) -> "LadderPolynomial":
        return cls({(0, 1): 1})

    @classmethod
    def Adag(cls) -> "LadderPolynomial":
        return cls({(1, 0): 1})

    def __add__(self, other):
        if not isinstance(other, LadderPolynomial):
            other = LadderPolynomial.const(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            _accumulate(out, key, c)
        return LadderPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return LadderPolynomial({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LadderPolynomial":
        return LadderPolynomial({k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, LadderPolynomial):
            return self.scale(other)
        out: dict = {}
        for (r, s), c1 in self.terms.items():
            for (t, u), c2 in other.terms.items():
                base = c1 * c2
                # A^s (A^+)^t = sum_j j! C(s,j) C(t,j) (A^+)^(t-j) A^(s-j)
                for j in range(min(s, t) + 1):
                    w = math.comb(s, j) * math.comb(t, j) * math.factorial(j)
                    _accumulate(out, (r + t - j, s + u - j), w * base)
        return LadderPolynomial(out)

    __rmul__ = scale

    def __pow__(self, n: int):
        out = LadderPolynomial.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, LadderPolynomial):
            other = LadderPolynomial.const(other)
        return not (self - other).terms

    __hash__ = None

    def __repr__(self):
        return f"LadderPolynomial({self.terms!r})"

    def adjoint(self) -> "LadderPolynomial":
        return LadderPolynomial({(s, r): _conj(c) for (r, s), c in self.terms.items()})

    def balanced(self) -> "LadderPolynomial":
        return LadderPolynomial({k: c for k, c in self.terms.items() if k[0] == k[1]})


@dataclass(frozen=True)
class NumberPolynomial:
    """Polynomial sum_k z_k (A^+A)^k stored as {k: z_k}."""

    coeffs: dict

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _clean(dict(self.coeffs)))

    def degree(self) -> int:
        return max(self.coeffs, default=0)

    def __call__(self, n):
        return sum((c * n**k for k, c in self.coeffs.items()), 0)

    def expectation(self, nu):
        """Average in the ME packet with dimensionless uncertainty ``nu``."""
        return sum((c * number_moment(k, nu) for k, c in self.coeffs.items()), 0)

    def vacuum_expectation(self):
        return self.coeffs.get(0, 0)


@lru_cache(maxsize=None)
def falling_factorial_coeffs(r: int) -> tuple:
    """Integer coefficients of n(n-1)...(n-r+1) in powers of n."""
    coeffs = [1]
    for j in range(r):
        nxt = [0] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i + 1] += c
            nxt[i] -= j * c
        coeffs = nxt
    return tuple(coeffs)


def map_N(x: LadderPolynomial) -> NumberPolynomial:
    """Keep balanced words and rewrite (A^+)^r A^r as a polynomial in A^+A."""
    out: dict = {}
    for (r, s), c in x.terms.items():
        if r != s:
            continue
        for k, z in enumerate(falling_factorial_coeffs(r)):
            if z:
                _accumulate(out, k, z * c)
    return NumberPolynomial(out)


@lru_cache(maxsize=None)
def number_moment_poly(k: int) -> tuple:
    """Coefficients (ascending in nu) of <(A^+A)^k> as exact fractions.

    Applies ((nu^2 - 1)/2) d/dnu to (nu + 1) k times and divides by (nu + 1).
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    poly = [Fraction(1), Fraction(1)]  # nu + 1
    for _ in range(k):
        deriv = [i * c for i, c in enumerate(poly)][1:] or [Fraction(0)]
        nxt = [Fraction(0)] * (len(deriv) + 2)
        for i, c in enumerate(deriv):
            nxt[i + 2] += c / 2
            nxt[i] -= c / 2
        poly = nxt
    # synthetic division by (nu + 1)
    quotient = [Fraction(0)] * (len(poly) - 1)
    rem = list(poly)
    for i in range(len(poly) - 1, 0, -1):
        quotient[i - 1] = rem[i]
        rem[i - 1] -= rem[i]
        rem[i] = Fraction(0)
    if rem[0] != 0:
        raise ArithmeticError("number-moment polynomial not divisible by nu + 1")
    while len(quotient) > 1 and quotient[-1] == 0:
        quotient.pop()
    return tuple(quotient)


def _horner(coeffs, x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def number_moment(k: int, nu):
    """<(A^+A)^k> in the ME packet; exact for rational or symbolic ``nu``."""
    coeffs = number_moment_poly(k)
    if isinstance(nu, (float, complex)):
        coeffs = [float(c) for c in coeffs]
    elif isinstance(nu, sp.Basic):
        coeffs = [sp.Rational(c.numerator, c.denominator) for c in coeffs]
    return _horner(coeffs, nu)


@lru_cache(maxsize=None)
def _ladder_power(x: int, sign: int) -> LadderPolynomial:
    if x == 0:
        return LadderPolynomial.const(1)
    return _ladder_power(x - 1, sign) * (LadderPolynomial.A() + LadderPolynomial.Adag().scale(sign))


@lru_cache(maxsize=None)
def _pair_number_poly(x: int, y: int) -> NumberPolynomial:
    """map_N of (A + A^+)^x (A - A^+)^y (integer coefficients)."""
    return map_N(_ladder_power(x, 1) * _ladder_power(y, -1))


@lru_cache(maxsize=None)
def pair_moment_poly(x: int, y: int) -> tuple:
    """<(A + A^+)^x (A - A^+)^y> as exact coefficients ascending in nu."""
    num = _pair_number_poly(x, y)
    out: list = [Fraction(0)]
    for k, z in num.coeffs.items():
        mk = number_moment_poly(k)
        if len(mk) > len(out):
            out.extend([Fraction(0)] * (len(mk) - len(out)))
        for i, c in enumerate(mk):
            out[i] += z * c
    return tuple(out)


# packets as evaluation contexts


@dataclass(frozen=True)
class SymbolicPacket:
    """Packet whose Q, P, dQ, dP, nu are sympy symbols; hbar = 2 dQ dP / nu."""

    Q: sp.Symbol
    P: sp.Symbol
    dQ: sp.Symbol
    dP: sp.Symbol
    nu: sp.Symbol

    @classmethod
    def default(cls) -> "SymbolicPacket":
        Q, P = sp.symbols("Q P", real=True)
        dQ, dP, nu = sp.symbols("dQ dP nu", positive=True)
        return cls(Q, P, dQ, dP, nu)

    @property
    def hbar(self):
        return 2 * self.dQ * self.dP / self.nu

    @property
    def symbols(self):
        return (self.Q, self.P, self.dQ, self.dP, self.nu)


@dataclass(frozen=True)
class _Ctx:
    Q: object
    P: object
    dQ: object
    dP: object
    nu: object
    hbar: object
    symbolic: bool


def _context(params, dof: int) -> _Ctx:
    if isinstance(params, SymbolicPacket):
        return _Ctx(params.Q, params.P, params.dQ, params.dP, params.nu, params.hbar, True)
    d = params.dofs[dof]
    return _Ctx(d.Q, d.P, d.dQ, d.dP, params.nu[dof], params.hbar, False)


def to_ladder(x: WeylPolynomial, params, dof: int = 0) -> LadderPolynomial:
    """Substitute the ladder form of q and p and normal-order the result."""
    ctx = _context(params, dof)
    if ctx.symbolic:
        root = sp.sqrt(ctx.nu)
        ihbar = sp.I * ctx.hbar
        minus_i = -sp.I
    else:
        root = math.sqrt(ctx.nu)
        ihbar = 1j * ctx.hbar
        minus_i = -1j
    A, Ad = LadderPolynomial.A(), LadderPolynomial.Adag()
    q = LadderPolynomial.const(ctx.Q) + (A + Ad).scale(ctx.dQ / root)
    p = LadderPolynomial.const(ctx.P) + (A - Ad).scale(minus_i * ctx.dP / root)
    out = LadderPolynomial()
    qpow = {0: LadderPolynomial.const(1)}
    ppow = {0: LadderPolynomial.const(1)}
    for (a, b, k), c in x.terms.items():
        for i in range(max(qpow) + 1, a + 1):
            qpow[i] = qpow[i - 1] * q
        for i in range(max(ppow) + 1, b + 1):
            ppow[i] = ppow[i - 1] * p
        out = out + (qpow[a] * ppow[b]).scale(c * ihbar**k)
    return out


def _pair_value(x: int, y: int, ctx: _Ctx):
    if ctx.symbolic:
        coeffs = [sp.Rational(c.numerator, c.denominator) for c in pair_moment_poly(x, y)]
        return _horner(coeffs, ctx.nu)
    if ctx.nu == 1.0:
        # pure Gaussian state: only the vacuum term survives
        return float(_pair_number_poly(x, y).vacuum_expectation())
    return _horner([float(c) for c in pair_moment_poly(x, y)], ctx.nu)


def _monomial_expectation(a: int, b: int, ctx: _Ctx):
    """<q^a p^b> in the quantum ME packet (complex in general)."""
    minus_i = -sp.I if ctx.symbolic else -1j
    total = 0
    for x in range(a + 1):
        qpart = math.comb(a, x) * ctx.Q ** (a - x) * ctx.dQ**x
        for y in range(b + 1):
            if (x + y) % 2:
                continue
            half = (x + y) // 2
            scale = ctx.nu ** (-half) if ctx.symbolic else ctx.nu ** (-float(half))
            term = qpart * math.comb(b, y) * ctx.P ** (b - y) * ctx.dP**y
            total += term * scale * minus_i**y * _pair_value(x, y, ctx)
    return total


def _check_nu(ctx: _Ctx):
    if not ctx.symbolic and ctx.nu < 1.0:
        raise UncertaintyViolationError(
            f"nu = {ctx.nu} < 1 violates the uncertainty bound", nu=ctx.nu
        )


def expectation_raw(x: WeylPolynomial, params, dof: int = 0):
    """<x> without any self-adjointness check; complex for non-Hermitian x."""
    ctx = _context(params, dof)
    _check_nu(ctx)
    if ctx.symbolic and x.degree() > SYMBOLIC_DEGREE_CAP:
        raise DegreeCapError(f"degree {x.degree()} exceeds the symbolic cap {SYMBOLIC_DEGREE_CAP}")
    ihbar = sp.I * ctx.hbar if ctx.symbolic else 1j * ctx.hbar
    cache: dict = {}
    total = 0
    for (a, b, k), c in x.terms.items():
        if (a, b) not in cache:
            cache[a, b] = _monomial_expectation(a, b, ctx)
        total += c * ihbar**k * cache[a, b]
    if ctx.symbolic:
        return sp.expand(total)
    return total


def quantum_expectation(x: WeylPolynomial, params, symmetrize: bool = False, dof: int = 0,
                        check: bool = True):
    """Expectation of a self-adjoint polynomial in the quantum ME packet.

    ``params`` is a ``PacketParams`` (numeric result) or a ``SymbolicPacket``
    (sympy expression in Q, P, dQ, dP, nu). Non-self-adjoint input is rejected
    unless ``symmetrize`` asks for <(x + x^+)/2>.
    """
    if symmetrize:
        x = x.symmetrized()
    elif check and not x.is_self_adjoint():
        raise NotSelfAdjointError("polynomial is not self-adjoint; pass symmetrize=True")
    value = expectation_raw(x, params, dof)
    if isinstance(value, sp.Basic):
        return sp.expand(sp.re(value)) if value.has(sp.I) else value
    return complex(value).real


def classical_expectation(x, params, dof: int = 0):
    """Expectation of a commutative polynomial in the classical ME packet.

    ``x`` is a {(a, b): c} mapping or a ``WeylPolynomial`` (its commutative
    shadow is used).
    """
    poly = x.shadow() if isinstance(x, WeylPolynomial) else x
    if isinstance(params, SymbolicPacket):
        Q, P, dQ, dP = params.Q, params.P, params.dQ, params.dP
    else:
        d = params.dofs[dof]
        Q, P, dQ, dP = d.Q, d.P, d.dQ, d.dP
    qm: dict = {}
    pm: dict = {}
    total = 0
    for (a, b), c in poly.items():
        if a not in qm:
            qm[a] = gaussian_moment(a, Q, dQ**2)
        if b not in pm:
            pm[b] = gaussian_moment(b, P, dP**2)
        total += c * qm[a] * pm[b]
    return sp.expand(total) if isinstance(total, sp.Basic) else total


def classical_limit_part(expr, packet: SymbolicPacket):
    """nu-independent part of a symbolic expectation (polynomial in 1/nu)."""
    eps = sp.Symbol("eps", positive=True)
    series = sp.expand(expr.subs(packet.nu, 1 / eps))
    return sp.expand(series.coeff(eps, 0) if series.has(eps) else series)


__all__ = [
    "WeylPolynomial",
    "LadderPolynomial",
    "NumberPolynomial",
    "SymbolicPacket",
    "to_ladder",
    "map_N",
    "number_moment",
    "number_moment_poly",
    "pair_moment_poly",
    "quantum_expectation",
    "classical_expectation",
    "classical_limit_part",
    "expectation_raw",
    "PacketParams",
]
