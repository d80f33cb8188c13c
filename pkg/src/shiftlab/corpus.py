"""Reproducible families of test shifts.

Three generator kinds: polynomial generators with roots in ``(-1, 0]`` or
complex pairs, explicit prefixes with a constant tail, and constant weights.
Every member is left-invertible.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .exact import Poly, fraction_str
from .weights import ShiftOp, make_shift


def _rat(rng: random.Random, lo: int, hi: int, den: int = 8) -> Fraction:
    return Fraction(rng.randint(lo * den, hi * den), den)


def random_polynomial_spec(rng: random.Random, max_degree: int = 3) -> dict:
    p = Poly.const(1)
    deg = rng.randint(1, max_degree)
    while p.degree < deg:
        if deg - p.degree >= 2 and rng.random() < 0.4:
            u = _rat(rng, 0, 2)
            v = _rat(rng, 1, 3)
            p = p * Poly([u * u + v * v, 2 * u, 1])
        else:
            # root in (-1, 0] keeps p(n) > 0 for n >= 0
            p = p * Poly([1 - _rat(rng, 0, 1) * Fraction(7, 8), 1])
    p = Poly(c / p.coeffs[0] for c in p.coeffs)
    return {"kind": "polynomial", "p": p.to_json()}


def random_explicit_spec(rng: random.Random, max_prefix: int = 6) -> dict:
    prefix = [fraction_str(_rat(rng, 1, 4) / 2) for _ in range(rng.randint(1, max_prefix))]
    return {"kind": "explicit", "prefix_sq": prefix, "tail_sq": fraction_str(_rat(rng, 1, 4) / 2)}


def random_constant_spec(rng: random.Random) -> dict:
    return {"kind": "constant", "c_sq": fraction_str(_rat(rng, 1, 4) / 2)}


_MAKERS = (random_polynomial_spec, random_explicit_spec, random_constant_spec)


def random_spec(rng: random.Random) -> dict:
    return rng.choice(_MAKERS)(rng)


def dichotomy_corpus(size: int = 30, seed: int = 2024) -> list[ShiftOp]:
    """``size`` shifts split evenly over the three generator kinds, plus the named ones."""
    rng = random.Random(seed)
    out = [make_shift("separ1"), make_shift("isometry")]
    i = 0
    while len(out) < size:
        spec = _MAKERS[i % 3](rng)
        out.append(make_shift(spec, f"{spec['kind']}#{i}"))
        i += 1
    return out
