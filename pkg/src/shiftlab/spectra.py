"""Spectral radii, spectral pictures, the dichotomy check and Fredholm indices.

For a weighted shift,

* ``r(W) = lim_m (sup_n prod_{j<m} w_{n+j})**(1/m)`` and
  ``i(W) = lim_m (inf_n prod_{j<m} w_{n+j})**(1/m)``;
* ``sigma(W)`` is the closed disk of radius ``r(W)`` and ``sigma_ap(W)``
  the closed annulus ``[i(W), r(W)]``.

Windowed bounds are always sound: ``r <= ||W^m||**(1/m)`` for every ``m``
and ``i >= (inf_n ||W^m e_n||)**(1/m)`` for every ``m`` (the inner sequence
is supermultiplicative).  When ``w_n**2 -> L`` is certified, both radii
equal ``sqrt(L)`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .classify import is_expansion
from .exact import fraction_str
from .weights import DEFAULT_WINDOW, NotLeftInvertible, ShiftOp, dual_weights


class IndeterminateError(ValueError):
    """The requested verdict sits on the essential spectrum."""


@dataclass(frozen=True)
class RadiusEstimate:
    """Sound interval ``[lower, upper]``, plus ``exact_sq`` when certified."""

    lower: float
    upper: float
    exact_sq: Optional[Fraction]
    horizon: int
    rule: str = ""

    @property
    def exact(self) -> Optional[float]:
        return None if self.exact_sq is None else math.sqrt(self.exact_sq)

    @property
    def best_lower(self) -> float:
        return self.exact if self.exact_sq is not None else self.lower

    @property
    def best_upper(self) -> float:
        return self.exact if self.exact_sq is not None else self.upper

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "exact_sq": None if self.exact_sq is None else fraction_str(self.exact_sq),
            "horizon": self.horizon,
            "rule": self.rule,
        }


def _radius_bounds(W: ShiftOp, horizon: int, window: int) -> tuple[float, float]:
    """Interval containing both ``i(W)`` and ``r(W)`` from ``m <= horizon`` step products."""
    ws = W.weights
    logs = [math.log(W.sq(n)) for n in range(window + horizon)]
    tail_sup = math.log(ws.tail_sup(window))
    tail_inf = math.log(ws.tail_inf(window))
    best_lo = math.log(W.certificate.inf_sq) / 2
    best_hi = math.log(W.certificate.sup_sq) / 2
    for m in range(1, horizon + 1):
        acc = sum(logs[:m])
        hi = lo = acc
        for n in range(1, window):
            acc += logs[n + m - 1] - logs[n - 1]
            hi = max(hi, acc)
            lo = min(lo, acc)
        # products starting at n >= window only see tail weights
        hi = max(hi, m * tail_sup)
        lo = min(lo, m * tail_inf)
        best_hi = min(best_hi, hi / (2 * m))
        best_lo = max(best_lo, lo / (2 * m))
    return math.exp(best_lo), math.exp(best_hi)


def spectral_radius(W: ShiftOp, horizon: int = 40, window: int = DEFAULT_WINDOW) -> RadiusEstimate:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    lo, hi = _radius_bounds(W, horizon, window)
    c = W.certificate
    exact, rule = None, "windowed Gelfand bound"
    if c.limit_sq is not None:
        exact = c.limit_sq
        rule = "limit of squared weights"
        if c.limit_sq <= 1 and is_expansion(W).is_true:
            rule = "expansion with limsup w_n <= 1"
    elif c.inf_sq == c.sup_sq:
        exact, rule = c.inf_sq, "constant weights"
    return RadiusEstimate(lo, hi, exact, horizon, rule)


def inner_radius(W: ShiftOp, horizon: int = 40, window: int = DEFAULT_WINDOW) -> RadiusEstimate:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    lo, hi = _radius_bounds(W, horizon, window)
    c = W.certificate
    exact, rule = None, "windowed inner bound"
    if c.limit_sq is not None:
        exact, rule = c.limit_sq, "limit of squared weights"
    elif c.inf_sq == c.sup_sq:
        exact, rule = c.inf_sq, "constant weights"
    return RadiusEstimate(lo, hi, exact, horizon, rule)


@dataclass(frozen=True)
class SpectralPicture:
    label: str
    spectral_radius: RadiusEstimate
    inner_radius: RadiusEstimate
    essential_radius: Optional[float]
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        r = self.spectral_radius
        i = self.inner_radius
        return {
            "label": self.label,
            "spectrum": {"kind": "closed_disk", "radius": r.best_upper if r.exact_sq is not None else None,
                         "radius_bounds": [r.best_lower, r.best_upper]},
            "right_spectrum": {"kind": "closed_disk", "radius_bounds": [r.best_lower, r.best_upper]},
            "left_spectrum": {"kind": "closed_annulus",
                              "inner_bounds": [i.best_lower, i.best_upper],
                              "outer_bounds": [r.best_lower, r.best_upper]},
            "approximate_point_spectrum": {"kind": "closed_annulus",
                                           "inner_bounds": [i.best_lower, i.best_upper],
                                           "outer_bounds": [r.best_lower, r.best_upper]},
            "essential_spectrum": (None if self.essential_radius is None
                                   else {"kind": "circle", "radius": self.essential_radius}),
            "radius": r.to_json(),
            "inner_radius": i.to_json(),
            "provenance": dict(self.provenance),
        }


def spectral_picture(W: ShiftOp, horizon: int = 40) -> SpectralPicture:
    if not W.left_invertible:
        raise NotLeftInvertible(f"{W.label}: inf w_n = 0")
    r = spectral_radius(W, horizon)
    i = inner_radius(W, horizon)
    prov = {
        "spectrum": "weighted shift: sigma(W) = sigma_r(W) = closed disk of radius r(W)",
        "right_spectrum": "equals the spectrum for a weighted shift",
        "left_spectrum": "left-invertible weighted shift: sigma_l(W) = closed annulus [i(W), r(W)]",
        "approximate_point_spectrum": "coincides with the left spectrum",
    }
    essential = None
    if (is_expansion(W).is_true and r.exact_sq == 1 and i.exact_sq == 1):
        essential = 1.0
        prov["essential_spectrum"] = ("analytic cyclic expansion with sigma_ap inside the unit "
                                      "circle: essential spectrum is the unit circle")
    return SpectralPicture(W.label, r, i, essential, prov)


@dataclass(frozen=True)
class DichotomyResult:
    branch: str
    inclusion: str
    inclusion_holds: bool
    product_bound_holds: bool
    margins: dict

    def to_json(self) -> dict:
        return {"branch": self.branch, "inclusion": self.inclusion,
                "inclusion_holds": self.inclusion_holds,
                "product_bound_holds": self.product_bound_holds, "margins": dict(self.margins)}


def dichotomy_check(W: ShiftOp, horizon: int = 40, tol: float = 1e-9) -> DichotomyResult:
    """Check ``D_{1/r(W')} subset D_{i(W)}`` and ``r(W) r(W'*) >= 1``.

    ``0`` is always in the spectrum of a shift, so only the non-invertible
    branch arises.  The inclusion is reported ``"true"`` only when certified
    bounds force it, ``"false"`` only when they exclude it.
    """
    Wd = dual_weights(W)
    r = spectral_radius(W, horizon)
    rd = spectral_radius(Wd, horizon)
    i = inner_radius(W, horizon)
    if rd.exact_sq is not None and i.exact_sq is not None:
        # exact comparison of 1/r(W')**2 with i(W)**2
        ok = 1 / rd.exact_sq <= i.exact_sq
        inclusion = "true" if ok else "false"
    elif 1 / rd.best_lower <= i.best_lower:
        inclusion = "true"
    elif 1 / rd.best_upper > i.best_upper:
        inclusion = "false"
    else:
        inclusion = "inconclusive"
    product = r.best_lower * rd.best_lower
    margins = {
        "inner_minus_reciprocal_dual_radius": i.best_lower - 1 / rd.best_lower,
        "radius_product_minus_one": product - 1,
    }
    return DichotomyResult("noninvertible", inclusion, inclusion == "true",
                           product >= 1 - tol, margins)


# -- adjoint kernel and index ---------------------------------------------

Lam = Union[int, Fraction, float, complex, str]


def modulus_sq(lam: Lam) -> Fraction:
    """``|lam|**2`` as an exact rational.

    Strings are read as decimals (``"0.6+0.8j"`` is exactly on the unit
    circle); float and complex arguments are taken at their binary value.
    """
    if isinstance(lam, str):
        if "j" not in lam:
            return Fraction(lam) ** 2
        z = complex(lam)
        return Fraction(repr(z.real)) ** 2 + Fraction(repr(z.imag)) ** 2
    if isinstance(lam, complex):
        return Fraction(lam.real) ** 2 + Fraction(lam.imag) ** 2
    return Fraction(lam) ** 2


@dataclass(frozen=True)
class KernelDim:
    dim: int
    certificate: str
    partial_sum: float

    def to_json(self) -> dict:
        return {"dim": self.dim, "certificate": self.certificate, "partial_sum": self.partial_sum}


def adjoint_kernel_dim(W: ShiftOp, lam: Lam, terms: int = 200) -> KernelDim:
    """``dim ker(W* - conj(lam))``: 1 iff ``sum |lam|^{2n} / prod_{j<n} w_j**2`` converges."""
    lsq = modulus_sq(lam)
    partial, term = 0.0, 1.0
    for n in range(terms):
        partial += term
        term *= float(lsq) / float(W.sq(n))
        if term == 0.0 or term > 1e300:
            break
    if lsq == 0:
        return KernelDim(1, "lambda = 0: e_0 spans ker W*", partial)
    c = W.certificate
    if c.limit_sq is not None:
        if lsq < c.limit_sq:
            return KernelDim(1, f"ratio test: |lam|^2 = {lsq} < lim w_n^2 = {c.limit_sq}", partial)
        if lsq > c.limit_sq:
            return KernelDim(0, f"ratio test: |lam|^2 = {lsq} > lim w_n^2 = {c.limit_sq}", partial)
        raise IndeterminateError(
            f"|lam|^2 = lim w_n^2 = {c.limit_sq}: on the essential spectrum, ratio test indeterminate")
    if lsq < c.inf_sq:
        return KernelDim(1, f"ratio bound: |lam|^2 < inf w_n^2 = {c.inf_sq}", partial)
    if lsq > c.sup_sq:
        return KernelDim(0, f"ratio bound: |lam|^2 > sup w_n^2 = {c.sup_sq}", partial)
    raise IndeterminateError("no tail certificate decides the series")


def fredholm_index(W: ShiftOp, lam: Lam) -> int:
    """``ind(W - lam) = -dim ker(W* - conj(lam))`` (``W - lam`` is always injective)."""
    c = W.certificate
    if c.limit_sq is not None and modulus_sq(lam) == c.limit_sq:
        raise IndeterminateError("lambda lies on the essential spectrum")
    return -adjoint_kernel_dim(W, lam).dim
