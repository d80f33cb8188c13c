"""The seven acceptance criteria, each timed and logged as one PASS/FAIL line."""

import math
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from oracles import conjugated_sk_sq, dense_bm_diag, dense_sigma_min, sympy_ray_oracle
from shiftlab.classify import (
    class_Ainf_sufficient,
    class_Ak,
    is_concave,
    is_expansion,
    is_weakly_concave,
    is_weakly_concave_power,
    m_isometry_order,
    przyk_classify,
    sufficient_power,
)
from shiftlab.corpus import dichotomy_corpus, random_spec
from shiftlab.exact import Poly
from shiftlab.spectra import dichotomy_check, fredholm_index, inner_radius, spectral_radius
from shiftlab.trunc import (
    GridSpec,
    Model,
    ap_spectrum_grid,
    range_tprime_k_check,
    sigma_min_lower,
    trace_partial_sums,
    trace_self_commutator,
    uv_limits,
    wold_split,
)
from shiftlab.weights import (
    bm_diag,
    dual_weights,
    isometry,
    make_shift,
    moment_fit,
    przyk_poly,
    sk_weights,
)


class Criterion:
    def __init__(self, log, number, budget):
        self.log, self.number, self.budget = log, number, budget
        self.failures = []
        self.notes = []

    def check(self, ok, label):
        if not ok:
            self.failures.append(label)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        if exc is not None:
            self.failures.append(f"error: {exc!r}")
        if elapsed >= self.budget:
            self.failures.append(f"runtime {elapsed:.2f}s >= {self.budget}s")
        budget = "no budget" if math.isinf(self.budget) else f"budget {self.budget}s"
        detail = f"{elapsed:.2f}s ({budget})"
        if self.notes:
            detail += "; " + "; ".join(self.notes)
        if self.failures:
            detail += "; failed: " + ", ".join(self.failures[:5])
        self.log[self.number] = (not self.failures, detail)
        print(f"criterion {self.number}: {'PASS' if not self.failures else 'FAIL'}  {detail}")
        assert not self.failures, self.failures
        return False


def test_criterion_1_separ1(acceptance_log):
    with Criterion(acceptance_log, 1, 5.0) as c:
        W = make_shift("separ1")
        c.check(is_expansion(W).is_true, "(a) expansion")
        c.check(all(bm_diag(W, 3, n) == 0 for n in range(65)), "(b) B_3 diagonal vanishes")
        p, status = moment_fit(W, 3)
        # exact identity p(x+1) = w^2(x) p(x) for the generator (x+1)^2
        c.check(status == "exact" and p == Poly([1, 2, 1]), "(b) exact polynomial identity")
        order, _ = m_isometry_order(W)
        c.check(order == 3, "(b)/(c) 3-isometry and not a 2-isometry")
        c.check(moment_fit(W, 2)[0] is None and bm_diag(W, 2, 0) == 2, "(c) not a 2-isometry")
        c.check(is_concave(W).is_false, "(d) not concave")
        c.check(all(class_Ak(W, k).is_true for k in range(9)), "(e) A_k for k = 0..8")
        t = trace_self_commutator(W)
        c.check(t.verdict == "trace_class" and t.value == 1, "(f) telescoping trace 1")
        raw, ext = trace_partial_sums(W, 10 ** 6)
        c.check(abs(ext - 1) < 1e-9, "(f) partial sums within 1e-9")
        c.notes.append(f"partial sum at 1e6: raw error {raw - 1:.1e}, extrapolated error {ext - 1:.1e}")


def _wnu_oracle_minimal_k(u, v, k_cap):
    p = przyk_poly(u, v).coeffs
    for k in range(1, k_cap + 1):
        def expansive(s, k=k):
            out = 1
            for j in range(k):
                out = out * s(j)
            return out - 1

        def product(s, k=k):
            a = b = 1
            for j in range(k):
                a, b = a * s(j), b * s(k + j)
            return a - b

        if sympy_ray_oracle(p, expansive, k - 1, 0) and sympy_ray_oracle(p, product, 2 * k - 1, k):
            return k
    return None


def test_criterion_2_przyk(acceptance_log):
    with Criterion(acceptance_log, 2, 10.0) as c:
        c.check(is_weakly_concave(make_shift({"kind": "przyk", "u": "0", "v": "1"})).is_true,
                "(0,1) weakly concave")
        u, v = F(-1, 2), F(3)
        W = make_shift({"kind": "przyk", "u": "-1/2", "v": "3"})
        c.check(is_weakly_concave(W).is_false, "(-1/2,3) not weakly concave")
        c.check(sufficient_power(v) == 5 and is_weakly_concave_power(W, 5).is_true, "k=5 passes")
        pc = przyk_classify(u, v)
        oracle_k = _wnu_oracle_minimal_k(u, v, 5)
        c.check(pc.minimal_k == oracle_k and pc.minimal_k is not None and pc.minimal_k <= 5,
                f"minimal k {pc.minimal_k} vs oracle {oracle_k}")
        c.notes.append(f"minimal k = {pc.minimal_k}")
        rng = random.Random(424242)
        bad = []
        for _ in range(50):
            uu = F(rng.randint(-6, 36), 12)
            vv = F(rng.choice([-1, 1]) * rng.randint(1, 48), 12)
            k = sufficient_power(vv)
            Wr = make_shift({"kind": "przyk", "u": str(uu), "v": str(vv)})
            if not is_weakly_concave_power(Wr, k).is_true:
                bad.append((uu, vv, k))
        c.check(not bad, f"sufficient power fails at {bad[:3]}")
        c.notes.append("50 random (u,v): sufficient power always passes" if not bad else "")


def test_criterion_3_blocky(acceptance_log):
    with Criterion(acceptance_log, 3, 2.0) as c:
        W = make_shift("blocky")
        c.check(class_Ainf_sufficient(W).is_true, "A_inf sufficient")
        c.check(all(class_Ak(W, k).is_false for k in range(9)), "not A_k for k = 0..8")
        t = trace_self_commutator(W)
        c.check(t.verdict == "not_trace_class" and "block 1:" in t.certificate, "per-block certificate")


def test_criterion_4_dichotomy(acceptance_log):
    with Criterion(acceptance_log, 4, 10.0) as c:
        corpus = dichotomy_corpus(30)
        c.check(len(corpus) == 30, "corpus size")
        families = set()
        for W in corpus:
            Wd = dual_weights(W)
            prod = spectral_radius(W).best_lower * spectral_radius(Wd).best_lower
            c.check(prod >= 1 - 1e-9, f"{W.label}: radius product {prod}")
            d = dichotomy_check(W)
            r_d, i_w = spectral_radius(Wd), inner_radius(W)
            if r_d.exact_sq is not None and i_w.exact_sq is not None:
                c.check(d.inclusion == "true" and 1 / r_d.exact_sq <= i_w.exact_sq,
                        f"{W.label}: inclusion")
                cert = W.certificate
                if cert.inf_sq == cert.sup_sq:
                    families.add("constant")
                elif cert.limit_sq == 1 and is_expansion(W).is_true:
                    families.add("expansion with limit 1")
                else:
                    families.add(W.weights.to_json()["kind"])
        c.check({"constant", "expansion with limit 1"} <= families,
                f"certified families {sorted(families)}")
        c.notes.append(f"certified inclusion in families {sorted(families)}")


def test_criterion_5_index_and_grid(acceptance_log):
    with Criterion(acceptance_log, 5, 60.0) as c:
        rng = random.Random(5)
        for W in (make_shift("separ1"), isometry()):
            inside = [cmath_polar(rng.uniform(0, 0.9), rng.uniform(0, 2 * math.pi)) for _ in range(20)]
            outside = [cmath_polar(rng.uniform(1.1, 3.0), rng.uniform(0, 2 * math.pi)) for _ in range(20)]
            c.check(all(fredholm_index(W, z) == -1 for z in inside), f"{W.label}: index -1 inside")
            c.check(all(fredholm_index(W, z) == 0 for z in outside), f"{W.label}: index 0 outside")
            g = ap_spectrum_grid(W, GridSpec.parse("-1.5:1.5:-1.5:1.5:61"), 200, 0.1)
            lo = inner_radius(W).lower - 0.1
            hi = spectral_radius(W).upper + 0.1
            mods = g.flagged_moduli()
            c.check(mods.size > 0 and mods.min() >= lo and mods.max() <= hi,
                    f"{W.label}: flagged moduli [{mods.min():.4f}, {mods.max():.4f}] vs [{lo:.4f}, {hi:.4f}]")
            c.notes.append(f"{W.label} flagged |lam| in [{mods.min():.3f}, {mods.max():.3f}] "
                           f"within [{lo:.3f}, {hi:.3f}]")


def cmath_polar(r, t):
    return complex(r * math.cos(t), r * math.sin(t))


def test_criterion_6_wold(acceptance_log):
    with Criterion(acceptance_log, 6, 20.0) as c:
        shifts = {"separ1": make_shift("separ1"), "isometry": isometry(),
                  "przyk(0,1)": make_shift({"kind": "przyk", "u": "0", "v": "1"})}
        configs = 0
        for d in range(4):
            for name, W in shifts.items():
                M = Model(tuple(np.linspace(0, np.pi / 2, d)), W, 100)
                ws = wold_split(M, 20)
                c.check(ws.detected_unitary_dim == d and ws.residual < 1e-8, f"d={d} {name}: split")
                uv = uv_limits(M, 20)
                c.check(uv.A_le_B, f"d={d} {name}: A <= B")
                c.check(all(range_tprime_k_check(M, k) for k in range(6)), f"d={d} {name}: ranges")
                configs += 1
        c.check(configs == 12, "12 configurations")
        c.notes.append(f"{configs} configurations")


def _property_instance(rng, stats):
    W = make_shift(random_spec(rng))
    violations = []
    ak = [class_Ak(W, k) for k in range(5)]
    if any(a.is_true and b.is_false for a, b in zip(ak, ak[1:])):
        violations.append("chain")
    if is_concave(W).is_true:
        stats["concave"] += 1
        if not is_weakly_concave(W).holds:
            violations.append("concave => weakly concave")
        order, _ = m_isometry_order(W)
        if order is not None and order > 2:
            violations.append("concave m-isometry order")
    dd = dual_weights(dual_weights(W))
    if any(dd.sq(n) != W.sq(n) for n in range(257)):
        violations.append("dual involution")
    sq = [W.sq(n) for n in range(40)]
    k = rng.randint(0, 4)
    ref = conjugated_sk_sq(sq, k, 16)
    S = sk_weights(W, k)
    got = np.array([float(S.sq(n)) for n in range(len(ref))])
    if not np.allclose(got, ref, rtol=1e-9, atol=0):
        violations.append("S_k conjugation")
    m, n = rng.randint(1, 4), rng.randint(0, 8)
    if bm_diag(W, m, n) != dense_bm_diag(sq, m, n):
        violations.append("bm_diag")
    N = rng.randint(1, 8)
    lam = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
    if abs(sigma_min_lower(W, lam, N, tol=1e-11) - dense_sigma_min(sq, lam, N)) > 1e-9:
        violations.append("sigma_min")
    return violations


def test_criterion_7_properties(acceptance_log):
    with Criterion(acceptance_log, 7, math.inf) as c:
        rng = random.Random(777)
        stats = {"concave": 0}
        count, bad = 0, []
        for _ in range(520):
            v = _property_instance(rng, stats)
            count += 1
            if v:
                bad.append(v)
        c.check(count >= 500 and not bad, f"{len(bad)} violating instances {bad[:3]}")
        c.notes.append(f"{count} instances, {len(bad)} violations, {stats['concave']} concave")
