import cmath
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import dense_sigma_min
from shiftlab.corpus import random_spec
from shiftlab.trunc import (
    GridSpec,
    Model,
    ap_spectrum_grid,
    carey_pincus_monomial,
    gram_of_shifted,
    range_projection,
    range_tprime_k_check,
    sigma_min_batch,
    sigma_min_lower,
    sturm_count,
    trace_partial_sums,
    trace_self_commutator,
    uv_limits,
    wold_split,
)
from shiftlab.weights import constant_shift, dual_weights, isometry, make_shift

SEPAR1 = make_shift("separ1")
lams = st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False)


def test_isometry_sigma_min_at_zero():
    for N in (1, 5, 40, 300):
        assert sigma_min_lower(isometry(), 0, N) == pytest.approx(1.0, abs=1e-12)


@given(lams, st.integers(1, 8), st.integers(0, 10_000))
def test_sigma_min_against_dense_svd(lam, N, seed):
    W = make_shift(random_spec(random.Random(seed)))
    sq = [W.sq(n) for n in range(N)]
    assert sigma_min_lower(W, lam, N, tol=1e-11) == pytest.approx(
        dense_sigma_min(sq, lam, N), abs=1e-9)


@given(lams, st.integers(0, 10_000))
def test_sigma_min_monotone_in_N(lam, seed):
    W = make_shift(random_spec(random.Random(seed)))
    vals = [sigma_min_lower(W, lam, N, tol=1e-11) for N in range(5, 80, 10)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_sturm_count_matches_eigvalsh():
    g = gram_of_shifted(SEPAR1, 0.9 + 0.3j, 30)
    ev = np.linalg.eigvalsh(g.dense())
    xs = np.linspace(-0.5, ev.max() + 0.5, 57)
    P = len(xs)
    diag = np.tile(g.diagonal, (P, 1))
    off_sq = np.tile(g.off_diagonal ** 2, (P, 1))
    counts = sturm_count(diag, off_sq, xs)
    assert counts.tolist() == [int((ev < x).sum()) for x in xs]


def test_constant_shift_ring_exact():
    # c times an isometry: sigma_min(W - lam) >= | |lam| - c |, so the mask is the eps-ring
    W = constant_shift(4)
    g = ap_spectrum_grid(W, GridSpec.parse("-2.6:2.6:-2.6:2.6:41"), 120, 0.1)
    mods = g.flagged_moduli()
    assert len(mods) > 0 and np.all(np.abs(mods - 2) < 0.1)


def test_grid_rows_and_threads(monkeypatch):
    grid = GridSpec.parse("-1.5:1.5:-1.5:1.5:11")
    monkeypatch.setenv("SHIFTLAB_THREADS", "1")
    a = ap_spectrum_grid(SEPAR1, grid, 60)
    monkeypatch.setenv("SHIFTLAB_THREADS", "4")
    b = ap_spectrum_grid(SEPAR1, grid, 60)
    assert np.array_equal(a.sigma_min, b.sigma_min)
    assert len(list(a.rows())) == 121
    m = a.flagged_moduli()
    assert m.size and np.all((m > 0.8) & (m < 1.3))


@pytest.mark.parametrize("text", ["1:0:0:1:5", "0:1:0:1:1", "0:1:0:1", "a:b:c:d:3"])
def test_bad_grids(text):
    with pytest.raises(ValueError):
        GridSpec.parse(text)


def test_sigma_min_batch_consistent():
    pts = [0.2, 1j, -1.1 + 0.4j]
    got = sigma_min_batch(SEPAR1, pts, 50)
    assert got == pytest.approx([sigma_min_lower(SEPAR1, p, 50) for p in pts], abs=1e-12)


# -- trace -------------------------------------------------------------------

def test_trace_separ1():
    t = trace_self_commutator(SEPAR1)
    # sum |w_n^2 - w_{n-1}^2| = 4 + (4 - 1) by telescoping the decreasing tail
    assert t.verdict == "trace_class" and t.value == 1 and t.abs_sum == 7
    raw, ext = trace_partial_sums(SEPAR1, 10 ** 6)
    assert abs(ext - 1) < 1e-9
    # raw partial sum is 1 + O(1/M): S(M) = (M+2)^2/(M+1)^2
    assert raw == pytest.approx(((10 ** 6 + 2) / (10 ** 6 + 1)) ** 2, abs=1e-9)


def test_trace_blocky_and_isometry():
    t = trace_self_commutator(make_shift("blocky"))
    assert t.verdict == "not_trace_class" and "block" in t.certificate
    assert trace_self_commutator(isometry()).value == 1


@pytest.mark.parametrize("seed", range(20))
def test_trace_explicit_exact(seed):
    rng = random.Random(seed)
    spec = {"kind": "explicit", "prefix_sq": [str(F(rng.randint(1, 30), 7)) for _ in range(rng.randint(1, 6))],
            "tail_sq": str(F(rng.randint(1, 30), 7))}
    W = make_shift(spec)
    t = trace_self_commutator(W)
    L = len(spec["prefix_sq"]) + 2
    diffs = [W.sq(n) - (W.sq(n - 1) if n else 0) for n in range(L)]
    assert t.value == sum(diffs) == W.certificate.limit_sq
    assert t.abs_sum == sum(abs(d) for d in diffs)


def test_carey_pincus():
    for W in (SEPAR1, make_shift({"kind": "przyk", "u": "0", "v": "1"}), isometry()):
        cp = carey_pincus_monomial(W)
        assert cp.matches and cp.rhs == 1
    with pytest.raises(ValueError):
        carey_pincus_monomial(make_shift("blocky"))


# -- models --------------------------------------------------------------------

def model(d, shift, N=60):
    phases = tuple(np.linspace(0, np.pi / 2, d))
    return Model(phases, None if shift is None else make_shift(shift), 0 if shift is None else N)


def test_unitary_only_model():
    M = model(3, None)
    uv = uv_limits(M, 20)
    assert np.allclose(uv.A, np.eye(3)) and np.allclose(uv.B, np.eye(3)) and uv.A_le_B
    assert wold_split(M, 20).detected_unitary_dim == 3


@pytest.mark.parametrize("d", range(4))
@pytest.mark.parametrize("shift", ["separ1", "isometry"])
def test_wold_and_uv(d, shift):
    M = model(d, shift)
    ws = wold_split(M, 20)
    assert ws.detected_unitary_dim == d and ws.residual < 1e-8
    uv = uv_limits(M, 20)
    assert uv.A_le_B and uv.closed_form_error < 1e-9


@pytest.mark.parametrize("k", range(6))
def test_projection_identity(k):
    M = model(2, "separ1", 30)
    P = range_projection(M, k, M.dim + k + 1)
    assert np.allclose(P @ P, P, atol=1e-9) and np.allclose(P, P.conj().T, atol=1e-9)


def test_range_check_and_guard():
    for M in (model(0, "separ1", 40), Model((0.0, 1.57), isometry(), 40)):
        assert all(range_tprime_k_check(M, k) for k in range(6))
    with pytest.raises(ValueError):
        wold_split(model(1, "separ1", 10), 20)


def test_unit_phases():
    M = model(3, "separ1", 40)
    T = M.square()
    assert np.allclose(np.abs(np.diag(T)[:3]), 1)
    assert cmath.isclose(T[0, 0], 1)
