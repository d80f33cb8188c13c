"""Weight-sequence generators and the weighted-shift model.

A unilateral weighted shift ``W e_n = w_n e_{n+1}`` is handled entirely
through its squared weights ``w_n**2``, which stay rational.  Every
generator carries a :class:`TailCertificate` with sound bounds on the
whole (infinite) sequence, so downstream predicates can tell exact
verdicts from finite-window evidence.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Any, Optional, Union

import numpy as np

from .exact import (
    POS_INF,
    Poly,
    as_fraction,
    fraction_str,
    isolate_real_roots,
    cauchy_bound,
    poly_nonneg_on_integer_ray,
    real_root_count,
)

DEFAULT_WINDOW = 64


class SpecError(ValueError):
    """Malformed or inadmissible weight specification."""


class NotLeftInvertible(ValueError):
    """Raised when an operation needs ``inf w_n > 0``."""


@dataclass(frozen=True)
class TailCertificate:
    """Sound facts about the full squared-weight sequence.

    ``monotone_from``/``direction`` say the sequence is monotone (in the
    given direction) for all indices ``>= monotone_from``.
    """

    limit_sq: Optional[Fraction]
    monotone_from: Optional[int]
    direction: Optional[str]
    inf_sq: Fraction
    sup_sq: Fraction

    def to_json(self) -> dict:
        return {
            "limit_sq": None if self.limit_sq is None else fraction_str(self.limit_sq),
            "monotone_from": self.monotone_from,
            "direction": self.direction,
            "inf_sq": fraction_str(self.inf_sq),
            "sup_sq": fraction_str(self.sup_sq),
        }

    def inverted(self) -> TailCertificate:
        flip = {"increasing": "decreasing", "decreasing": "increasing"}
        return TailCertificate(
            limit_sq=None if self.limit_sq is None else 1 / self.limit_sq,
            monotone_from=self.monotone_from,
            direction=flip.get(self.direction, self.direction),
            inf_sq=1 / self.sup_sq,
            sup_sq=1 / self.inf_sq,
        )

    def shifted(self, k: int) -> TailCertificate:
        return TailCertificate(
            limit_sq=self.limit_sq,
            monotone_from=None if self.monotone_from is None else max(0, self.monotone_from - k),
            direction=self.direction,
            inf_sq=self.inf_sq,
            sup_sq=self.sup_sq,
        )


class WeightSeq(ABC):
    """Squared weights ``n -> w_n**2`` plus a tail certificate."""

    kind: str = "abstract"

    @property
    @abstractmethod
    def certificate(self) -> TailCertificate: ...

    @abstractmethod
    def sq(self, n: int) -> Fraction: ...

    def sq_array(self, ns) -> np.ndarray:
        return np.array([float(self.sq(int(n))) for n in ns], dtype=float)

    def symbolic(self) -> Optional[tuple[Poly, Poly]]:
        """``(num, den)`` with ``w_n**2 = num(n)/den(n)`` and both positive on ``n >= 0``."""
        return None

    def constant_from(self) -> Optional[int]:
        """Index from which the sequence is constant, when known."""
        return None

    @abstractmethod
    def dual(self) -> WeightSeq: ...

    @abstractmethod
    def shifted(self, k: int) -> WeightSeq: ...

    @abstractmethod
    def to_json(self) -> dict: ...

    @property
    def exact(self) -> bool:
        return self.symbolic() is not None or self.constant_from() is not None

    def tail_sup(self, start: int) -> Fraction:
        """Sound upper bound for ``w_n**2`` over ``n >= start``."""
        c = self.certificate
        if c.monotone_from is not None and c.monotone_from <= start:
            if c.direction in ("decreasing", "constant"):
                return self.sq(start)
            if c.limit_sq is not None:
                return c.limit_sq
        return c.sup_sq

    def tail_inf(self, start: int) -> Fraction:
        """Sound lower bound for ``w_n**2`` over ``n >= start``."""
        c = self.certificate
        if c.monotone_from is not None and c.monotone_from <= start:
            if c.direction in ("increasing", "constant"):
                return self.sq(start)
            if c.limit_sq is not None:
                return c.limit_sq
        return c.inf_sq


def _positive_on_integers(q: Poly) -> bool:
    if q.is_zero() or not poly_nonneg_on_integer_ray(q, 0):
        return False
    if q.degree < 1:
        return True
    # nonnegative on Z_+; rule out integer roots
    hi = max(cauchy_bound(q), Fraction(1))
    for a, b in isolate_real_roots(q, Fraction(-1), hi):
        lo = max(0, -((-a.numerator) // a.denominator))
        for n in range(lo, b.numerator // b.denominator + 1):
            if q(n) == 0:
                return False
    return True


class RatioWeights(WeightSeq):
    """``w_n**2 = num(n) / den(n)`` for polynomials of equal degree.

    A polynomial generator ``p`` is the special case ``num = p(x+1)``,
    ``den = p(x)``; duals and index shifts stay in this family.
    """

    def __init__(self, num: Poly, den: Poly, generator: Optional[Poly] = None,
                 _checked: bool = False):
        if num.degree != den.degree:
            raise SpecError("numerator and denominator must have equal degree")
        if not _checked and not (_positive_on_integers(num) and _positive_on_integers(den)):
            raise SpecError("squared weights must be positive at every non-negative integer")
        self.num = num
        self.den = den
        self.generator = generator
        self.kind = "polynomial" if generator is not None else "ratio"
        self._cert = self._certify()
        self._num_f = np.array([float(c) for c in reversed(num.coeffs)])
        self._den_f = np.array([float(c) for c in reversed(den.coeffs)])

    @classmethod
    def from_generator(cls, p: Poly) -> RatioWeights:
        if p.is_zero() or not _positive_on_integers(p):
            raise SpecError("generator polynomial must be positive at every non-negative integer")
        return cls(p.shift(1), p, generator=p, _checked=True)

    def _certify(self) -> TailCertificate:
        limit = self.num.lead / self.den.lead
        # sign of w_{n+1}^2 - w_n^2
        d = self.num.shift(1) * self.den - self.num * self.den.shift(1)
        if d.is_zero():
            n0, direction = 0, "constant"
        else:
            n0 = 0
            if real_root_count(d, Fraction(-1), POS_INF):
                roots = isolate_real_roots(d, Fraction(-1), max(cauchy_bound(d), Fraction(1)))
                b = roots[-1][1]
                n0 = max(0, b.numerator // b.denominator + 1)
            direction = "increasing" if d.lead > 0 else "decreasing"
        vals = [self.sq(n) for n in range(n0 + 1)] + [limit]
        return TailCertificate(limit, n0, direction, min(vals), max(vals))

    @property
    def certificate(self) -> TailCertificate:
        return self._cert

    def sq(self, n: int) -> Fraction:
        return self.num(n) / self.den(n)

    def sq_array(self, ns) -> np.ndarray:
        x = np.asarray(ns, dtype=float)
        return np.polyval(self._num_f, x) / np.polyval(self._den_f, x)

    def symbolic(self):
        return self.num, self.den

    def dual(self) -> RatioWeights:
        return RatioWeights(self.den, self.num, _checked=True)

    def shifted(self, k: int) -> RatioWeights:
        if k == 0:
            return self
        return RatioWeights(self.num.shift(k), self.den.shift(k), _checked=True)

    def to_json(self) -> dict:
        if self.generator is not None:
            return {"kind": "polynomial", "p": self.generator.to_json()}
        return {"kind": "ratio", "num": self.num.to_json(), "den": self.den.to_json()}


class ExplicitWeights(WeightSeq):
    """Finite prefix of squared weights followed by a constant tail."""

    kind = "explicit"

    def __init__(self, prefix_sq, tail_sq):
        prefix = tuple(as_fraction(x) for x in prefix_sq)
        tail = as_fraction(tail_sq)
        if not prefix:
            raise SpecError("explicit weights need a non-empty prefix")
        if tail <= 0 or any(x <= 0 for x in prefix):
            raise SpecError("squared weights must be positive")
        self.prefix = prefix
        self.tail = tail
        vals = prefix + (tail,)
        self._cert = TailCertificate(tail, len(prefix), "constant", min(vals), max(vals))

    @property
    def certificate(self) -> TailCertificate:
        return self._cert

    def sq(self, n: int) -> Fraction:
        return self.prefix[n] if n < len(self.prefix) else self.tail

    def sq_array(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        pre = np.array([float(x) for x in self.prefix])
        out = np.full(ns.shape, float(self.tail))
        inside = ns < len(self.prefix)
        out[inside] = pre[ns[inside]]
        return out

    def constant_from(self) -> int:
        return len(self.prefix)

    def dual(self) -> ExplicitWeights:
        return ExplicitWeights([1 / x for x in self.prefix], 1 / self.tail)

    def shifted(self, k: int) -> ExplicitWeights:
        rest = self.prefix[k:]
        return ExplicitWeights(rest or (self.tail,), self.tail)

    def to_json(self) -> dict:
        return {"kind": "explicit", "prefix_sq": [fraction_str(x) for x in self.prefix],
                "tail_sq": fraction_str(self.tail)}


@lru_cache(maxsize=None)
def _block_starts(count: int) -> tuple[int, ...]:
    starts = [0]
    for level in range(1, count + 1):
        starts.append(starts[-1] + 2 ** (level + 1) + 1)
    return tuple(starts)


def blocky_level(n: int) -> tuple[int, int]:
    """``(l, i)``: index ``n`` is entry ``i`` of block ``l`` (blocks start at ``l = 1``)."""
    level = 1
    start = 0
    while True:
        length = 2 ** (level + 1) + 1
        if n < start + length:
            return level, n - start
        start += length
        level += 1


def blocky_block_start(level: int) -> int:
    return _block_starts(level)[level - 1]


class BlockyWeights(WeightSeq):
    """Block ``l`` holds ``2**(l+1) + 1`` weights alternating ``a_l, a_{l+1}, ..., a_l``
    with ``a_l**2 = 1 + 2**-l``."""

    kind = "blocky"
    _cert = TailCertificate(Fraction(1), None, None, Fraction(1), Fraction(3, 2))

    @property
    def certificate(self) -> TailCertificate:
        return self._cert

    @staticmethod
    def alpha_sq(level: int) -> Fraction:
        return 1 + Fraction(1, 2 ** level)

    def sq(self, n: int) -> Fraction:
        level, i = blocky_level(n)
        return self.alpha_sq(level if i % 2 == 0 else level + 1)

    def dual(self) -> WeightSeq:
        return DerivedWeights(self, 0, True)

    def shifted(self, k: int) -> WeightSeq:
        return DerivedWeights(self, k, False) if k else self

    def to_json(self) -> dict:
        return {"kind": "blocky"}


class DerivedWeights(WeightSeq):
    """``n -> base.sq(n + offset)``, optionally reciprocated."""

    kind = "derived"

    def __init__(self, base: WeightSeq, offset: int, inverted: bool):
        self.base = base
        self.offset = offset
        self.inverted = inverted
        cert = base.certificate.shifted(offset)
        self._cert = cert.inverted() if inverted else cert

    @property
    def certificate(self) -> TailCertificate:
        return self._cert

    def sq(self, n: int) -> Fraction:
        v = self.base.sq(n + self.offset)
        return 1 / v if self.inverted else v

    def dual(self) -> WeightSeq:
        if self.inverted and self.offset == 0:
            return self.base
        return DerivedWeights(self.base, self.offset, not self.inverted)

    def shifted(self, k: int) -> WeightSeq:
        return DerivedWeights(self.base, self.offset + k, self.inverted) if k else self

    def to_json(self) -> dict:
        return {"kind": "derived", "base": self.base.to_json(), "offset": self.offset,
                "inverted": self.inverted}


# -- specs ---------------------------------------------------------------

def przyk_poly(u, v) -> Poly:
    """``|x + u + iv|**2 = x**2 + 2ux + u**2 + v**2``."""
    u, v = as_fraction(u), as_fraction(v)
    return Poly([u * u + v * v, 2 * u, 1])


SEPAR1_POLY = Poly([1, 2, 1])

SUGAR = {
    "separ1": {"kind": "separ1"},
    "blocky": {"kind": "blocky"},
    "isometry": {"kind": "explicit", "prefix_sq": ["1/1"], "tail_sq": "1/1"},
}


def parse_weight_spec(text: str) -> dict:
    """Accept a sugar name, inline JSON, or a path to a JSON file."""
    text = text.strip()
    if text in SUGAR:
        return dict(SUGAR[text])
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"bad weight spec JSON: {exc}") from exc
    try:
        with open(text) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"unknown weight spec {text!r}") from exc


def make_weights(spec: Union[dict, str]) -> WeightSeq:
    if isinstance(spec, str):
        spec = parse_weight_spec(spec)
    try:
        kind = spec["kind"]
        if kind == "polynomial":
            return RatioWeights.from_generator(Poly.from_json(spec["p"]))
        if kind == "separ1":
            return RatioWeights.from_generator(SEPAR1_POLY)
        if kind == "przyk":
            v = as_fraction(spec["v"])
            if v == 0:
                raise SpecError("przyk needs v != 0")
            return RatioWeights.from_generator(przyk_poly(spec["u"], v))
        if kind == "explicit":
            return ExplicitWeights(spec["prefix_sq"], spec["tail_sq"])
        if kind == "blocky":
            return BlockyWeights()
        if kind == "ratio":
            return RatioWeights(Poly.from_json(spec["num"]), Poly.from_json(spec["den"]))
        if kind == "constant":
            return ExplicitWeights([spec["c_sq"]], spec["c_sq"])
    except SpecError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"malformed weight spec {spec!r}: {exc}") from exc
    raise SpecError(f"unknown weight kind {spec.get('kind')!r}")


# -- the shift -----------------------------------------------------------

@dataclass(frozen=True)
class ShiftOp:
    weights: WeightSeq
    label: str = "W"

    def sq(self, n: int) -> Fraction:
        return self.weights.sq(n)

    @property
    def certificate(self) -> TailCertificate:
        return self.weights.certificate

    @property
    def left_invertible(self) -> bool:
        return self.certificate.inf_sq > 0


def make_shift(spec: Union[dict, str], label: Optional[str] = None) -> ShiftOp:
    if isinstance(spec, str):
        name = spec.strip()
        spec = parse_weight_spec(spec)
        label = label or (name if not name.startswith("{") else spec.get("kind", "W"))
    return ShiftOp(make_weights(spec), label or spec.get("kind", "W"))


def isometry() -> ShiftOp:
    return make_shift("isometry")


def constant_shift(c_sq) -> ShiftOp:
    c = as_fraction(c_sq)
    return ShiftOp(ExplicitWeights([c], c), f"const({fraction_str(c)})")


def squared_weight(W: ShiftOp, n: int) -> Fraction:
    if n < 0:
        raise ValueError("index must be non-negative")
    return W.sq(n)


def _require_left_invertible(W: ShiftOp) -> None:
    if not W.left_invertible:
        raise NotLeftInvertible(f"{W.label}: inf w_n = 0")


def dual_weights(W: ShiftOp) -> ShiftOp:
    """Cauchy dual: the shift with squared weights ``1 / w_n**2``."""
    _require_left_invertible(W)
    label = W.label[:-1] if W.label.endswith("'") else W.label + "'"
    return ShiftOp(W.weights.dual(), label)


@dataclass(frozen=True)
class PowerShift:
    """``W**k`` maps ``e_n`` to ``e_{n+k}``; ``sq(n)`` is the squared k-step weight."""

    base: ShiftOp
    k: int

    def sq(self, n: int) -> Fraction:
        out = Fraction(1)
        for j in range(self.k):
            out *= self.base.sq(n + j)
        return out


def power_weights(W: ShiftOp, k: int) -> PowerShift:
    if k < 1:
        raise ValueError("power must be >= 1")
    return PowerShift(W, k)


def moment(W: ShiftOp, n: int) -> Fraction:
    """``||W^n e_0||**2 = prod_{j<n} w_j**2``."""
    out = Fraction(1)
    for j in range(n):
        out *= W.sq(j)
    return out


def bm_diag(W: ShiftOp, m: int, n: int) -> Fraction:
    """Diagonal entry ``<B_m(W) e_n, e_n>`` with ``B_m = sum (-1)^k C(m,k) W*^k W^k``."""
    if m < 1 or n < 0:
        raise ValueError("need m >= 1 and n >= 0")
    total = Fraction(0)
    prod = Fraction(1)
    for k in range(m + 1):
        total += (-1) ** k * comb(m, k) * prod
        prod *= W.sq(n + k)
    return total


def _newton_interpolant(values: list[Fraction]) -> Poly:
    """Polynomial through ``(i, values[i])`` via forward differences."""
    diffs = list(values)
    p = Poly()
    binom = Poly.const(1)
    for i in range(len(values)):
        p = p + binom * diffs[0]
        diffs = [b - a for a, b in zip(diffs, diffs[1:])]
        binom = binom * Poly([Fraction(-i, i + 1), Fraction(1, i + 1)])
    return p


def moment_fit(W: ShiftOp, m: int, window: int = DEFAULT_WINDOW) -> tuple[Optional[Poly], str]:
    """Like :func:`moment_poly_fit` but also reports ``"exact"`` or ``"window"``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    p = _newton_interpolant([moment(W, n) for n in range(m)])
    ws = W.weights
    sym = ws.symbolic()
    if sym is not None:
        num, den = sym
        ok = (p.shift(1) * den - p * num).is_zero()
        return (p if ok else None), "exact"
    stop = ws.constant_from()
    status = "exact"
    if stop is None:
        stop, status = window, "window"
    else:
        stop = stop + m
    val = p(0)
    for n in range(stop):
        if val <= 0:
            return None, status
        nxt = p(n + 1)
        if nxt != W.sq(n) * val:
            return None, status
        val = nxt
    return p, status


def moment_poly_fit(W: ShiftOp, m: int, window: int = DEFAULT_WINDOW) -> Optional[Poly]:
    """Degree ``<= m-1`` polynomial ``p`` with ``p(0) = 1`` and ``w_n**2 = p(n+1)/p(n)``, if any."""
    if m < 2:
        raise ValueError("m must be >= 2")
    return moment_fit(W, m, window)[0]


def self_commutator_diag(W: ShiftOp, n: int) -> Fraction:
    """Signed diagonal entry ``w_n**2 - w_{n-1}**2`` of ``[W*, W]`` (``w_{-1} = 0``)."""
    if n < 0:
        raise ValueError("index must be non-negative")
    return W.sq(n) - (W.sq(n - 1) if n else 0)


def sk_weights(W: ShiftOp, k: int) -> ShiftOp:
    """``C_k^{1/2} W' C_k^{-1/2}``: the shift with squared weights ``1 / w_{n+k}**2``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    _require_left_invertible(W)
    return ShiftOp(W.weights.shifted(k).dual(), f"S_{k}({W.label})")
