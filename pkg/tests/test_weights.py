import json
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import conjugated_sk_sq, dense_bm_diag
from shiftlab.corpus import random_spec
from shiftlab.exact import Poly
from shiftlab.weights import (
    SpecError,
    blocky_level,
    bm_diag,
    dual_weights,
    isometry,
    make_shift,
    moment,
    moment_poly_fit,
    power_weights,
    self_commutator_diag,
    sk_weights,
    squared_weight,
)

SEPAR1 = make_shift("separ1")
BLOCKY = make_shift("blocky")
PRZYK01 = make_shift({"kind": "przyk", "u": "0", "v": "1"})


def corpus(count, seed=7):
    rng = random.Random(seed)
    return [make_shift(random_spec(rng)) for _ in range(count)]


# separ-1 weights (n+2)/(n+1); przyk z = i gives p = x^2 + 1


def test_separ1_weights():
    assert [SEPAR1.sq(n) for n in range(3)] == [4, F(9, 4), F(16, 9)]
    assert SEPAR1.certificate.limit_sq == 1
    assert all(SEPAR1.sq(n) == F(n + 2, n + 1) ** 2 for n in range(200))


def test_przyk_weights():
    assert PRZYK01.sq(0) == 2 and PRZYK01.sq(1) == F(5, 2)


def test_blocky_weights():
    # first block is alpha_1 repeated: alpha_1^2 = 3/2
    assert squared_weight(BLOCKY, 0) == F(3, 2)
    assert BLOCKY.certificate.inf_sq == 1 and BLOCKY.certificate.sup_sq == F(3, 2)


def test_blocky_pattern():
    # block l alternates alpha_l and alpha_{l+1} with alpha_l at both ends
    for n in range(2000):
        level, _ = blocky_level(n)
        assert level >= 1
    vals = [BLOCKY.sq(n) for n in range(40)]
    assert set(vals) <= {1 + F(1, 2 ** l) for l in range(1, 8)}


def test_isometry_and_dual_values():
    I = isometry()
    assert all(I.sq(n) == 1 for n in range(50))
    d = dual_weights(SEPAR1)
    assert [d.sq(n) for n in range(2)] == [F(1, 4), F(4, 9)]
    assert all(d.sq(n) < d.sq(n + 1) for n in range(100))


def test_bm_diag_examples():
    assert bm_diag(SEPAR1, 3, 0) == 0
    assert bm_diag(SEPAR1, 2, 0) == 2
    assert all(bm_diag(isometry(), 2, n) == 0 for n in range(5))
    assert self_commutator_diag(SEPAR1, 0) == 4
    assert self_commutator_diag(isometry(), 1) == 0


def test_sk_examples():
    S1 = sk_weights(SEPAR1, 1)
    assert [S1.sq(n) for n in range(2)] == [F(4, 9), F(9, 16)]
    d = dual_weights(SEPAR1)
    S0 = sk_weights(SEPAR1, 0)
    assert all(S0.sq(n) == d.sq(n) for n in range(50))
    assert all(sk_weights(isometry(), 5).sq(n) == 1 for n in range(20))


@pytest.mark.parametrize("W", [SEPAR1, PRZYK01, BLOCKY] + corpus(40))
def test_dual_involution(W):
    dd = dual_weights(dual_weights(W))
    assert all(dd.sq(n) == W.sq(n) for n in range(257))


@pytest.mark.parametrize("W", [SEPAR1, PRZYK01] + corpus(10, seed=3))
def test_power_telescoping(W):
    q = [moment(W, n) for n in range(130)]
    for k in (1, 2, 5, 17, 64):
        P = power_weights(W, k)
        for n in range(0, 65, 7):
            assert P.sq(n) == q[n + k] / q[n]


@pytest.mark.parametrize("W", [SEPAR1, PRZYK01, BLOCKY] + corpus(12, seed=11))
def test_bm_diag_dense_oracle(W):
    sq = [W.sq(n) for n in range(20)]
    for m in range(1, 5):
        for n in range(9):
            assert bm_diag(W, m, n) == dense_bm_diag(sq, m, n)


@pytest.mark.parametrize("W", [SEPAR1, PRZYK01, BLOCKY] + corpus(12, seed=5))
def test_sk_conjugation_oracle(W):
    sq = [W.sq(n) for n in range(40)]
    for k in range(5):
        ref = conjugated_sk_sq(sq, k, 16)
        S = sk_weights(W, k)
        got = np.array([float(S.sq(n)) for n in range(len(ref))])
        assert np.allclose(got, ref, rtol=1e-9, atol=0)


def test_moment_fit_separ1_and_consistency():
    assert moment_poly_fit(SEPAR1, 2) is None
    p = moment_poly_fit(SEPAR1, 3)
    assert p == Poly([1, 2, 1])
    assert all(bm_diag(SEPAR1, 3, n) == 0 for n in range(65))
    assert moment_poly_fit(isometry(), 2) == Poly([1])


@given(st.lists(st.fractions(min_value=F(1, 8), max_value=4, max_denominator=8), min_size=1, max_size=3))
def test_generator_weight_identity(roots):
    # w_n^2 = p(n+1)/p(n) for p with roots in (-inf, 0)
    p = Poly.from_roots([-r for r in roots])
    W = make_shift({"kind": "polynomial", "p": p.to_json()})
    for n in range(30):
        assert W.sq(n) == p(n + 1) / p(n)
    fit = moment_poly_fit(W, len(roots) + 1)
    assert fit == Poly(c / p(0) for c in p.coeffs)
    assert all(bm_diag(W, len(roots) + 1, n) == 0 for n in range(20))


def test_tail_certificate_sound():
    for W in [SEPAR1, PRZYK01, BLOCKY] + corpus(60, seed=13):
        c = W.certificate
        vals = [W.sq(n) for n in range(300)]
        assert c.inf_sq <= min(vals) and max(vals) <= c.sup_sq


@pytest.mark.parametrize("text", [
    "nonsense", '{"kind": "polynomial"}', '{"kind": "przyk", "u": "0", "v": "0"}',
    '{"kind": "explicit", "prefix_sq": ["-1"], "tail_sq": "1"}', '{"kind": "weird"}', "{bad json",
    '{"kind": "polynomial", "p": ["1", "-3", "1"]}',
])
def test_malformed_specs(text):
    with pytest.raises(SpecError):
        make_shift(text)


def test_spec_from_file(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"kind": "constant", "c_sq": "4"}))
    W = make_shift(str(path))
    assert W.sq(0) == 4 and W.certificate.limit_sq == 4
