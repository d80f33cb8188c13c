"""Exact and window-verified predicates on weighted shifts.

Every predicate here has the form "some expression in finitely many
consecutive squared weights is >= 0 for all n >= n0".  For rational
generators the expression is cleared of (positive) denominators and the
resulting polynomial is decided on the integer ray exactly; for
eventually-constant sequences a finite scan is exact; anything else gets a
window scan that can only prove failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

from .exact import Poly, all_roots_negative_real, as_fraction, poly_nonneg_on_integer_ray
from .weights import (
    DEFAULT_WINDOW,
    NotLeftInvertible,
    RatioWeights,
    ShiftOp,
    moment_fit,
    przyk_poly,
    sk_weights,
)


class ConsistencyError(RuntimeError):
    """A chain invariant between verdicts failed; indicates a bug."""


@dataclass(frozen=True)
class Verdict:
    state: str
    window: Optional[int] = None

    @classmethod
    def windowed(cls, n: int) -> Verdict:
        return cls("window", n)

    @property
    def is_true(self) -> bool:
        return self.state == "true"

    @property
    def is_false(self) -> bool:
        return self.state == "false"

    @property
    def holds(self) -> bool:
        """True or window-verified."""
        return self.state != "false"

    def __and__(self, other: Verdict) -> Verdict:
        if self.is_false or other.is_false:
            return FALSE
        if self.state == "window" or other.state == "window":
            ws = [v.window for v in (self, other) if v.state == "window"]
            return Verdict.windowed(min(ws))
        return TRUE

    def __bool__(self):
        raise TypeError("use .is_true / .holds on a Verdict")

    def to_json(self) -> str:
        return f"window:{self.window}" if self.state == "window" else self.state

    def __repr__(self) -> str:
        return f"Verdict({self.to_json()})"


TRUE = Verdict("true")
FALSE = Verdict("false")


def verdict_of(flag: bool) -> Verdict:
    return TRUE if flag else FALSE


class _RatFunc:
    """num/den with den positive on the integers of interest; ring ops only."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly):
        self.num = num
        self.den = den

    @staticmethod
    def _lift(x) -> _RatFunc:
        if isinstance(x, _RatFunc):
            return x
        return _RatFunc(Poly.const(x), Poly.const(1))

    def __add__(self, other):
        o = self._lift(other)
        if self.den == o.den:
            return _RatFunc(self.num + o.num, self.den)
        return _RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return _RatFunc(-self.num, self.den)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        return _RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__


# cond(s) -> value, where s(j) is the squared weight at offset j from n
Condition = Callable[[Callable[[int], object]], object]


def decide(W: ShiftOp, cond: Condition, span: int, start: int = 0,
           window: int = DEFAULT_WINDOW) -> Verdict:
    """Decide ``cond >= 0`` at every index ``n >= start``.

    ``span`` is the largest offset ``cond`` reads.
    """
    ws = W.weights
    sym = ws.symbolic()
    if sym is not None:
        num, den = sym
        terms = [_RatFunc(num.shift(j), den.shift(j)) for j in range(span + 1)]
        val = _RatFunc._lift(cond(lambda j: terms[j]))
        if val.num.is_zero():
            return TRUE
        return verdict_of(poly_nonneg_on_integer_ray(val.num, start))
    stop = ws.constant_from()
    exact = stop is not None
    stop = max(start, stop) + 1 if exact else start + window
    for n in range(start, stop):
        if cond(lambda j: ws.sq(n + j)) < 0:
            return FALSE
    return TRUE if exact else Verdict.windowed(window)


def _prod(s, lo: int, hi: int):
    out = 1
    for j in range(lo, hi):
        out = s(j) * out
    return out


def _require_li(W: ShiftOp) -> None:
    if not W.left_invertible:
        raise NotLeftInvertible(f"{W.label}: inf w_n = 0")


# -- predicates ----------------------------------------------------------

def is_expansion(W: ShiftOp, window: int = DEFAULT_WINDOW) -> Verdict:
    """``w_n >= 1`` for all ``n``."""
    if W.certificate.inf_sq >= 1:
        return TRUE
    return decide(W, lambda s: s(0) - 1, 0, window=window)


def is_concave(W: ShiftOp, window: int = DEFAULT_WINDOW) -> Verdict:
    """``B_2(W) <= 0``, i.e. ``1 - 2 w_n^2 + w_n^2 w_{n+1}^2 <= 0``."""
    return decide(W, lambda s: 2 * s(0) - 1 - s(0) * s(1), 1, window=window)


def limsup_at_most_one(W: ShiftOp) -> Verdict:
    c = W.certificate
    if c.limit_sq is not None:
        return verdict_of(c.limit_sq <= 1)
    if c.sup_sq <= 1:
        return TRUE
    return Verdict.windowed(0)


def spectral_radius_at_most_one(W: ShiftOp) -> Verdict:
    """``r(W) <= 1`` from the limit certificate (``r(W)**2 = lim w_n**2``)."""
    return limsup_at_most_one(W)


def is_weakly_concave_power(W: ShiftOp, k: int, window: int = DEFAULT_WINDOW) -> Verdict:
    """Weak concavity of ``W**k``.

    (a) ``W**k`` expansive, (b) ``r(W) <= 1``, (c) the product inequality
    ``prod_{j<k} w_{n+j}**2 >= prod_{j<k} w_{n+k+j}**2`` for ``n >= k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _require_li(W)
    expansive = decide(W, lambda s: _prod(s, 0, k) - 1, k - 1, window=window)
    radius = spectral_radius_at_most_one(W)
    wc = decide(W, lambda s: _prod(s, 0, k) - _prod(s, k, 2 * k), 2 * k - 1,
                start=k, window=window)
    return expansive & radius & wc


def is_weakly_concave(W: ShiftOp, window: int = DEFAULT_WINDOW) -> Verdict:
    return is_weakly_concave_power(W, 1, window)


def moj_wnu_poly(p: Poly, k: int) -> Poly:
    """``p(x+k)**2 - p(x) p(x+2k)``; nonnegative for ``n >= k`` iff the power condition holds."""
    return p.shift(k) ** 2 - p * p.shift(2 * k)


def dual_restriction_hyponormal(W: ShiftOp, k: int, window: int = DEFAULT_WINDOW) -> Verdict:
    """``W'`` restricted to ``ran W'^k`` is hyponormal iff ``w_{k+n}`` is non-increasing."""
    if k < 0:
        raise ValueError("k must be non-negative")
    _require_li(W)
    return decide(W, lambda s: s(0) - s(1), 1, start=k, window=window)


def sk_hyponormal(W: ShiftOp, k: int, window: int = DEFAULT_WINDOW) -> Verdict:
    """Hyponormality of ``S_k`` (a shift is hyponormal iff its weights are non-decreasing)."""
    return decide(sk_weights(W, k), lambda s: s(1) - s(0), 1, window=window)


def class_Ak(W: ShiftOp, k: int, window: int = DEFAULT_WINDOW) -> Verdict:
    if not W.left_invertible:
        return FALSE
    return (is_expansion(W, window) & dual_restriction_hyponormal(W, k, window)
            & limsup_at_most_one(W))


def class_Ainf_sufficient(W: ShiftOp, window: int = DEFAULT_WINDOW) -> Verdict:
    """Expansion plus ``limsup w_n <= 1``; a sufficient condition only."""
    return is_expansion(W, window) & limsup_at_most_one(W)


def two_hypercontraction_check(W: ShiftOp, k: int, window: int = DEFAULT_WINDOW) -> Verdict:
    S = sk_weights(W, k)
    m1 = decide(S, lambda s: 1 - s(0), 0, window=window)
    m2 = decide(S, lambda s: 1 - 2 * s(0) + s(0) * s(1), 1, window=window)
    return m1 & m2


def is_hausdorff_reciprocal(p: Poly) -> bool:
    """Whether ``p`` has only negative real roots and positive leading coefficient.

    When it does, ``p(n) <= p(n+1)`` and ``p(n) p(n+2) <= p(n+1)**2`` are
    checked exactly as well; a failure there is a bug.
    """
    if p.is_zero():
        raise ValueError("zero polynomial")
    if not all_roots_negative_real(p):
        return False
    inc = p.shift(1) - p
    logc = p.shift(1) ** 2 - p * p.shift(2)
    for q, k in ((inc, 0), (logc, 1)):
        if not q.is_zero() and not poly_nonneg_on_integer_ray(q, k):
            raise ConsistencyError(f"{p!r}: negative-root generator violates concavity inequality")
    return True


def m_isometry_order(W: ShiftOp, m_max: int = 8,
                     window: int = DEFAULT_WINDOW) -> tuple[Optional[int], str]:
    """Least ``m <= m_max`` with ``B_m(W) = 0``, and whether that was decided exactly."""
    status = "exact"
    for m in range(1, m_max + 1):
        p, st = moment_fit(W, m, window)
        if st == "window":
            status = "window"
        if p is not None:
            return m, st
    return None, status


# -- the przyk family ------------------------------------------------------

@dataclass(frozen=True)
class PrzykClass:
    u: Fraction
    v: Fraction
    weakly_concave: bool
    sufficient_k: int
    minimal_k: int
    scan: dict

    def to_json(self) -> dict:
        return {"u": str(self.u), "v": str(self.v), "weakly_concave": self.weakly_concave,
                "sufficient_k": self.sufficient_k, "minimal_k": self.minimal_k,
                "scan": {str(k): v for k, v in self.scan.items()}}


def przyk_weakly_concave_closed_form(u, v) -> bool:
    u, v = as_fraction(u), as_fraction(v)
    return u >= Fraction(-1, 2) and 2 * ((1 + u) ** 2 - v * v) + 4 * (1 + u) + 1 >= 0


def sufficient_power(v) -> int:
    """Least integer ``k >= 1`` with ``k**2 >= 2 v**2``."""
    v = as_fraction(v)
    target = 2 * v * v
    k = max(1, math.isqrt(math.floor(target)))
    while k * k < target:
        k += 1
    while k > 1 and (k - 1) ** 2 >= target:
        k -= 1
    return k


def przyk_classify(u, v) -> PrzykClass:
    u, v = as_fraction(u), as_fraction(v)
    if v == 0:
        raise ValueError("v must be nonzero")
    if u < Fraction(-1, 2):
        raise ValueError("power statement needs u >= -1/2")
    W = ShiftOp(RatioWeights.from_generator(przyk_poly(u, v)), f"przyk({u},{v})")
    wc = is_weakly_concave(W).is_true
    if wc != przyk_weakly_concave_closed_form(u, v):
        raise ConsistencyError(f"przyk({u},{v}): engine and closed form disagree")
    ks = sufficient_power(v)
    scan = {}
    minimal = None
    for k in range(1, ks + 1):
        ok = is_weakly_concave_power(W, k).is_true
        scan[k] = ok
        if ok and minimal is None:
            minimal = k
    if not scan[ks]:
        raise ConsistencyError(f"przyk({u},{v}): sufficient power k={ks} fails")
    return PrzykClass(u, v, wc, ks, minimal, scan)


# -- aggregate report -----------------------------------------------------

@dataclass
class ClassReport:
    label: str
    left_invertible: bool
    expansion: Verdict
    m_isometry_order: Optional[int]
    m_isometry_status: str
    concave: Verdict
    weakly_concave: Verdict
    class_Ak: dict[int, Verdict]
    class_Ainf_sufficient: Verdict
    hausdorff_reciprocal: Optional[bool]
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "left_invertible": self.left_invertible,
            "expansion": self.expansion.to_json(),
            "m_isometry_order": self.m_isometry_order,
            "m_isometry_status": self.m_isometry_status,
            "concave": self.concave.to_json(),
            "weakly_concave": self.weakly_concave.to_json(),
            "class_Ak": {str(k): v.to_json() for k, v in self.class_Ak.items()},
            "class_Ainf_sufficient": self.class_Ainf_sufficient.to_json(),
            "class_Ainf_note": "sufficient-condition",
            "hausdorff_reciprocal": self.hausdorff_reciprocal,
            "notes": list(self.notes),
        }


def build_class_report(W: ShiftOp, k_max: int, window: int = DEFAULT_WINDOW,
                       m_max: int = 8) -> ClassReport:
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    li = W.left_invertible
    notes = []
    expansion = is_expansion(W, window)
    concave = is_concave(W, window)
    if li:
        wc = is_weakly_concave(W, window)
    else:
        wc = FALSE
        notes.append("not left-invertible: weak concavity and A_k fail")
    ak = {k: class_Ak(W, k, window) for k in range(k_max + 1)}
    ainf = class_Ainf_sufficient(W, window)
    order, status = m_isometry_order(W, m_max, window)
    gen = getattr(W.weights, "generator", None)
    hr = is_hausdorff_reciprocal(gen) if gen is not None else None

    if concave.is_true and wc.is_false:
        raise ConsistencyError(f"{W.label}: concave but not weakly concave")
    for k in range(k_max):
        if ak[k].is_true and ak[k + 1].is_false:
            raise ConsistencyError(f"{W.label}: in A_{k} but not A_{k + 1}")
    if concave.is_true and order is not None and order > 2:
        raise ConsistencyError(f"{W.label}: concave {order}-isometry")
    if any(v.is_true for v in ak.values()) and ainf.is_false:
        raise ConsistencyError(f"{W.label}: in some A_k but fails the A_inf sufficient test")
    if hr and order is not None and not wc.is_true:
        raise ConsistencyError(f"{W.label}: negative-root m-isometry not weakly concave")
    if status == "window":
        notes.append(f"m-isometry order window-verified on n < {window}")
    return ClassReport(W.label, li, expansion, order, status, concave, wc, ak, ainf, hr, notes)
