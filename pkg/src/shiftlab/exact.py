"""Exact rational polynomials and real-root counting.

Rationals are :class:`fractions.Fraction`; :class:`Poly` stores its
coefficients constant term first. Root counting uses Sturm sequences on the
square-free part, so every count is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

Number = Union[int, Fraction]


def as_fraction(x: Union[int, str, Fraction]) -> Fraction:
    """Parse ``x`` as an exact rational; strings use the ``"num/den"`` form."""
    if isinstance(x, float):
        raise TypeError("floats are not accepted as exact rationals")
    return Fraction(x)


def fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Infinity:
    """A signed infinite endpoint for root-counting intervals."""

    sign: int

    def __repr__(self) -> str:
        return "+inf" if self.sign > 0 else "-inf"


POS_INF = Infinity(1)
NEG_INF = Infinity(-1)

Endpoint = Union[int, Fraction, Infinity]


class Poly:
    """Univariate polynomial with rational coefficients (constant term first)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Union[int, str, Fraction]] = ()):
        cs = [as_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    # construction helpers

    @classmethod
    def const(cls, c: Number) -> Poly:
        return cls([c])

    @classmethod
    def x(cls) -> Poly:
        return cls([0, 1])

    @classmethod
    def from_roots(cls, roots: Iterable[Number], lead: Number = 1) -> Poly:
        p = cls([lead])
        for r in roots:
            p = p * cls([-Fraction(r), 1])
        return p

    @classmethod
    def from_json(cls, data: Sequence[str]) -> Poly:
        return cls(as_fraction(c) for c in data)

    def to_json(self) -> list[str]:
        return [fraction_str(c) for c in self.coeffs] or ["0/1"]

    # basic properties

    @property
    def degree(self) -> float:
        """Degree, with ``-inf`` for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else -math.inf

    @property
    def lead(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x: Number) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "Poly(0)"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            terms.append(f"{c}{'*' if mono else ''}{mono}")
        return "Poly(" + " + ".join(terms) + ")"

    # ring operations

    @staticmethod
    def _coerce(other) -> Poly:
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return Poly(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self) -> Poly:
        return Poly(-c for c in self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.coeffs or not other.coeffs:
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Poly:
        out = Poly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __divmod__(self, other: Poly) -> tuple[Poly, Poly]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Poly(), self
        quo = [Fraction(0)] * (dq + 1)
        lead = other.lead
        for i in range(dq, -1, -1):
            c = rem[i + len(other.coeffs) - 1] / lead
            quo[i] = c
            if c:
                for j, b in enumerate(other.coeffs):
                    rem[i + j] -= c * b
        return Poly(quo), Poly(rem[: len(other.coeffs) - 1])

    def __floordiv__(self, other: Poly) -> Poly:
        return divmod(self, other)[0]

    def __mod__(self, other: Poly) -> Poly:
        return divmod(self, other)[1]

    def derivative(self) -> Poly:
        return Poly(i * c for i, c in enumerate(self.coeffs) if i)

    def shift(self, c: Number) -> Poly:
        """Return the polynomial ``x -> p(x + c)``."""
        out = Poly()
        lin = Poly([c, 1])
        for a in reversed(self.coeffs):
            out = out * lin + a
        return out

    def monic(self) -> Poly:
        if self.is_zero():
            return self
        return Poly(c / self.lead for c in self.coeffs)

    def sign_at(self, x: Endpoint) -> int:
        if isinstance(x, Infinity):
            if self.is_zero():
                return 0
            s = 1 if self.lead > 0 else -1
            if x.sign < 0 and int(self.degree) % 2:
                s = -s
            return s
        v = self(x)
        return (v > 0) - (v < 0)


def poly_eval(p: Poly, x: Number) -> Fraction:
    return p(Fraction(x))


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic greatest common divisor (zero if both inputs vanish)."""
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def square_free_part(p: Poly) -> Poly:
    if p.is_zero():
        raise ValueError("zero polynomial has no square-free part")
    if p.degree < 1:
        return Poly.const(1)
    return p // poly_gcd(p, p.derivative())


def square_free_decomposition(p: Poly) -> list[tuple[Poly, int]]:
    """Yun's algorithm: ``p = lead * prod(f_i ** i)`` with square-free, coprime ``f_i``."""
    if p.is_zero():
        raise ValueError("zero polynomial has no square-free decomposition")
    out: list[tuple[Poly, int]] = []
    if p.degree < 1:
        return out
    a = p.monic()
    b = a.derivative()
    c = poly_gcd(a, b)
    w = a // c
    y = b // c
    i = 1
    while w.degree >= 1:
        z = y - w.derivative()
        g = poly_gcd(w, z)
        if g.degree >= 1:
            out.append((g, i))
        w = w // g
        y = z // g
        i += 1
    return out


def sturm_chain(p: Poly) -> list[Poly]:
    chain = [p, p.derivative()]
    while not chain[-1].is_zero():
        chain.append(-(chain[-2] % chain[-1]))
    chain.pop()
    return chain


def _variations(chain: Sequence[Poly], x: Endpoint) -> int:
    signs = [s for s in (q.sign_at(x) for q in chain) if s]
    return sum(1 for u, v in zip(signs, signs[1:]) if u != v)


def _lt(a: Endpoint, b: Endpoint) -> bool:
    if isinstance(a, Infinity) and isinstance(b, Infinity):
        return a.sign < b.sign
    if isinstance(a, Infinity):
        return a.sign < 0
    if isinstance(b, Infinity):
        return b.sign > 0
    return a < b


def real_root_count(p: Poly, a: Endpoint, b: Endpoint) -> int:
    """Number of distinct real roots of ``p`` in the half-open interval ``(a, b]``."""
    if p.is_zero():
        raise ValueError("real_root_count: zero polynomial")
    if not _lt(a, b):
        raise ValueError(f"real_root_count: need a < b, got {a!r}, {b!r}")
    if p.degree < 1:
        return 0
    chain = sturm_chain(square_free_part(p))
    return _variations(chain, a) - _variations(chain, b)


def cauchy_bound(p: Poly) -> Fraction:
    """Every real root of ``p`` has absolute value strictly below this bound."""
    lead = abs(p.lead)
    return 1 + max((abs(c) / lead for c in p.coeffs[:-1]), default=Fraction(0))


def isolate_real_roots(p: Poly, lo: Fraction, hi: Fraction,
                       width: Fraction = Fraction(1)) -> list[tuple[Fraction, Fraction]]:
    """Disjoint intervals ``(a, b]`` of width at most ``width``, one per root in ``(lo, hi]``.

    Intervals are returned in increasing order.
    """
    sf = square_free_part(p)
    if sf.degree < 1:
        return []
    chain = sturm_chain(sf)

    def count(a, b):
        return _variations(chain, a) - _variations(chain, b)

    out = []
    stack = [(Fraction(lo), Fraction(hi))]
    while stack:
        a, b = stack.pop()
        n = count(a, b)
        if n == 0:
            continue
        if n == 1 and b - a <= width:
            out.append((a, b))
            continue
        mid = (a + b) / 2
        stack.append((mid, b))
        stack.append((a, mid))
    out.sort()
    return out


def all_roots_negative_real(p: Poly) -> bool:
    """True iff the leading coefficient is positive and all complex roots lie in ``(-inf, 0)``."""
    if p.is_zero():
        raise ValueError("all_roots_negative_real: zero polynomial")
    if p.lead <= 0:
        return False
    total = 0
    for f, mult in square_free_decomposition(p):
        n = real_root_count(f, NEG_INF, Fraction(0))
        if f(0) == 0:
            n -= 1
        total += mult * n
    return total == p.degree if p.degree >= 1 else True


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def poly_nonneg_on_integer_ray(q: Poly, k: int) -> bool:
    """Decide exactly whether ``q(n) >= 0`` for every integer ``n >= k``.

    The sign of ``q`` is constant between consecutive real roots, so after
    isolating the roots above ``k`` in unit-width intervals it is enough to
    test the integers inside those intervals plus one integer per gap.
    """
    if q.is_zero():
        raise ValueError("poly_nonneg_on_integer_ray: zero polynomial")
    k = int(k)
    if q(k) < 0:
        return False
    if q.degree < 1:
        return True
    if q.lead < 0:
        return False
    if real_root_count(q, Fraction(k), POS_INF) == 0:
        return True

    hi = max(cauchy_bound(q), Fraction(k + 1))
    intervals = isolate_real_roots(q, Fraction(k), hi)
    probes = {k}
    prev_right = Fraction(k)
    for a, b in intervals:
        # one integer strictly inside the root-free gap (prev_right, a]
        g = _floor(prev_right) + 1
        if g <= a:
            probes.add(g)
        probes.update(range(max(k, _ceil(a)), _floor(b) + 1))
        prev_right = b
    probes.add(max(k, _floor(prev_right) + 1))
    return all(q(n) >= 0 for n in probes if n >= k)
