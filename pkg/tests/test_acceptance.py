"""Acceptance gate: one test per release criterion, at the stated tolerances.

Each test prints a PASS line when its criterion holds (visible with -s; the
-v test names give the per-criterion pass/fail report either way).  Sizes are
desk scale: the whole module runs in well under five minutes.
"""

import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy.stats import binom

from liptail import FunctionalSpec, InnovationLaw, ProcessSpec
from liptail import bounds as tb
from liptail import montecarlo as mc
from liptail.oracle import enumerate_decomposition, random_finite_instance
from liptail.processes import contraction_certificate
from liptail.profiles import (
    ContractionProfile,
    build_lipschitz_table,
    diagonal_convolution_gap,
    diagonal_uniform_bound,
)

from test_profiles import brute_force_table

SUM = FunctionalSpec("sum")
SEED = 20260810


def _pass(num, message):
    print(f"CRITERION {num:>2} PASS: {message}")


# -- 1 ------------------------------------------------------------------------


def test_criterion_01_coefficient_recursion():
    gen = np.random.default_rng(SEED)
    checked_monotone = 0
    for trial in range(100):
        length = int(gen.integers(1, 21))
        raw = gen.uniform(0.0, 1.0, length)
        raw *= gen.uniform(0.05, 0.95) / max(raw.sum(), 1e-12)
        if trial % 2 == 0:
            raw = np.sort(raw)[::-1]  # non-increasing half
        prof = ContractionProfile.from_coeffs(raw)
        n = 50
        table = build_lipschitz_table(prof, n)
        expected = brute_force_table(list(raw), n)
        for (k, i), val in expected.items():
            assert abs(table.table[k, i] - val) <= 1e-12 * abs(val)
        assert diagonal_convolution_gap(table, prof) <= 1e-12
        if prof.is_nonincreasing():
            checked_monotone += 1
            diag = table.diagonal
            assert np.all(np.diff(diag) >= -1e-12)
            assert diag.max() <= diagonal_uniform_bound(prof) * (1 + 1e-12)
    assert checked_monotone >= 50
    _pass(1, "recursion == brute force to 1e-12; convolution identity holds; "
             f"monotone diagonal and uniform cap on {checked_monotone} profiles")


# -- 2 ------------------------------------------------------------------------


def _ell_vec(ts):
    """Independent vectorized transcription of l(t) for the grid oracle."""
    ts = np.asarray(ts, dtype=float)
    out = np.empty_like(ts)
    small = ts < 0.02
    s = ts[small]
    out[small] = s * s / 8.0 - s**4 / 576.0
    t = ts[~small]
    q = np.exp(-t)
    out[~small] = (t - np.log(t) - 1.0) + t * q / (1.0 - q) + np.log1p(-q)
    return out


def _ell_star_grid(x):
    ts = np.geomspace(1e-8, 4000.0, 300_000)
    vals = x * ts - _ell_vec(ts)
    i = int(np.argmax(vals))
    lo, hi = ts[max(0, i - 1)], ts[min(len(ts) - 1, i + 1)]
    fine = np.linspace(lo, hi, 20_000)
    return float(np.max(x * fine - _ell_vec(fine)))


def test_criterion_02_young_transform_chain():
    xs = np.arange(1, 1000) / 1000.0
    worst_gap = 0.0
    for x in xs:
        star = tb.rio_ell_star(float(x))
        lower1 = (x * x - 2 * x) * math.log1p(-x)
        lower2 = 2 * x * x + x**4 / 6
        assert star >= lower1 - 1e-11
        assert lower1 >= lower2 - 1e-12
    for x in (0.001, 0.123, 0.5, 0.77, 0.9, 0.99, 0.999):
        gap = abs(tb.rio_ell_star(x) - _ell_star_grid(x))
        worst_gap = max(worst_gap, gap)
        assert gap <= 1e-8
    _pass(2, f"l* chain holds on 999 points; bisection vs dense grid gap "
             f"{worst_gap:.2e} <= 1e-8")


# -- 3 ------------------------------------------------------------------------


def test_criterion_03_hoeffding_bennett_bernstein_chain():
    for n in (1, 10, 100, 1000):
        for x in np.linspace(0.0, n, 41):
            for v in np.linspace(0.25, 10.0, 14):
                log_h = tb.log_hn(float(x), float(v), n)
                log_b = tb.log_bennett_b(float(x), float(v))
                log_b1 = -x * x / (2 * (v * v + x / 3)) if x > 0 else 0.0
                assert np.isfinite(log_b) and np.isfinite(log_b1)
                assert log_h <= log_b + 1e-12
                assert log_b <= log_b1 + 1e-12
        v = 3.7
        exact = (v * v / (n + v * v)) ** n
        assert tb.hn_function(float(n), v, n) == pytest.approx(exact, rel=1e-12)
        lim = tb.hn_function(n * (1 - 1e-12), v, n)
        assert lim == pytest.approx(exact, rel=1e-8)
    _pass(3, "H_n <= B <= B1 on all grids in log space; H_n(n, v) matches the "
             "left limit to 1e-8 relative")


# -- 4 ------------------------------------------------------------------------


def _bisect_root(deriv, hi):
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if deriv(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)


def test_criterion_04_closed_form_optimizers():
    gen = np.random.default_rng(SEED + 4)
    worst_b = worst_c = 0.0
    for _ in range(1000):
        x = gen.uniform(0.05, 10.0)
        v = gen.uniform(0.05, 6.0)
        delta = gen.uniform(0.0, 2.5)
        t_closed = tb.bernstein_optimal_t(x, v, delta)
        deriv = lambda t: -x + v * (2 * t - t * t * delta) / (2 * (1 - t * delta) ** 2)
        hi = (1 - 1e-10) / delta if delta > 0 else 10 * t_closed + 10
        worst_b = max(worst_b, abs(t_closed - _bisect_root(deriv, hi)))
        assert worst_b <= 1e-8

        big_k = gen.uniform(0.2, 20.0)
        dl = gen.uniform(0.05, 3.0)
        t_cr = tb.cramer_optimal_t(x, big_k, dl)
        deriv_c = lambda t: -x + big_k / dl**2 * (2 * t - t * t / dl) / (1 - t / dl) ** 2
        worst_c = max(worst_c, abs(t_cr - _bisect_root(deriv_c, dl * (1 - 1e-10))))
        assert worst_c <= 1e-8

        t1 = build_lipschitz_table(ContractionProfile.zeros(), 1)
        bern = tb.bernstein_bound(tb.BernsteinSpec(m=delta, v_k=(v,)), t1, x)
        assert bern.raw_value <= bern.extras["loose"] + 1e-15
        cram = tb.cramer_bound(tb.CramerSpec(t0=dl, k_k=(max(1.0, big_k),)), t1, x)
        assert cram.raw_value <= cram.extras["loose"] + 1e-15
    _pass(4, f"minimizers match numeric optimization: bernstein {worst_b:.2e}, "
             f"cramer {worst_c:.2e} (<= 1e-8); sharper <= looser throughout")


# -- 5 ------------------------------------------------------------------------


def test_criterion_05_martingale_oracle():
    worst = {"dom": 0.0, "lip": 0.0, "cond": 0.0, "tel": 0.0}
    for seed in range(50):
        inst = random_finite_instance(seed, max_horizon=6)
        table = build_lipschitz_table(inst.profile, inst.horizon)
        report = enumerate_decomposition(inst, table)
        worst["cond"] = max(worst["cond"], report.max_conditional_mean)
        worst["tel"] = max(worst["tel"], report.max_telescoping_gap)
        worst["dom"] = max(worst["dom"], report.domination_ratio)
        worst["lip"] = max(worst["lip"], report.lipschitz_ratio)
        assert report.max_conditional_mean <= 1e-12, inst.label
        assert report.max_telescoping_gap <= 1e-12, inst.label
        assert report.domination_ratio <= 1.0 + 1e-9, inst.label
        assert report.lipschitz_ratio <= 1.0 + 1e-9, inst.label
    _pass(5, "50 instances: telescoping/martingale to 1e-12, domination "
             f"{worst['dom']:.9f} and Lipschitz {worst['lip']:.9f} <= 1 + 1e-9")


# -- 6 ------------------------------------------------------------------------


def test_criterion_06_exact_binomial_cross_check(iid_sign_spec):
    n = 20
    table = build_lipschitz_table(contraction_certificate(iid_sign_spec), n)
    dom = mc.estimate_dominating_constants(iid_sign_spec, "hoeffding", n, 1000,
                                           seed=SEED)
    assert max(dom.m_k) == pytest.approx(1.0)

    def exact_tail(threshold):
        k = math.ceil((threshold + n) / 2)
        return float(binom.sf(k - 1, n, 0.5))

    grid = np.arange(1.0, 21.0)
    for x in grid:
        bound = tb.hoeffding_bound(dom, table, float(x)).value
        assert exact_tail(x) <= bound * (1 + 1e-12) + 1e-18

    est = mc.empirical_tail(iid_sign_spec, SUM, n, grid, 100_000, seed=SEED,
                            ci_level=0.999)
    inside = 0
    for x, lo, hi in zip(grid, est.lower_ci, est.upper_ci):
        truth = exact_tail(x + est.center)  # the estimator centers at the pilot mean
        assert lo <= truth <= hi
        inside += 1
    _pass(6, f"Hoeffding dominates the exact binomial tail at 20 thresholds; "
             f"empirical tail within 99.9% Wilson bands at all {inside}")


# -- 7 ------------------------------------------------------------------------


COVERAGE_BOUNDS = ("bernstein", "cramer", "hoeffding", "fuk_nagaev_pth",
                   "mcdiarmid", "von_bahr_esseen")


def _coverage_constants(spec, n):
    return {
        "bernstein": mc.estimate_dominating_constants(spec, "bernstein", n, 20000, SEED),
        "cramer": mc.estimate_dominating_constants(spec, "cramer", n, 20000, SEED, t0=0.5),
        "hoeffding": mc.estimate_dominating_constants(spec, "hoeffding", n, 20000, SEED),
        "fuk_nagaev_pth": mc.estimate_dominating_constants(spec, "pth_moment", n, 20000,
                                                           SEED, p=3.0),
        "mcdiarmid": mc.estimate_dominating_constants(spec, "mcdiarmid", n, 20000, SEED),
        "von_bahr_esseen": mc.estimate_dominating_constants(spec, "pth_moment", n, 20000,
                                                            SEED, p=1.5),
    }


@pytest.mark.parametrize("fixture", ["memory_one_spec", "mean_field_spec"])
def test_criterion_07_monte_carlo_coverage(fixture, request):
    spec = request.getfixturevalue(fixture)
    n, replicates = 200, 100_000
    table = build_lipschitz_table(contraction_certificate(spec), n)
    doms = _coverage_constants(spec, n)
    v = tb.aggregate_v(table, doms["bernstein"].v_k)
    grid = np.linspace(0.5, 6.0, 23) * math.sqrt(v)
    estimate = mc.empirical_tail(spec, SUM, n, grid, replicates, seed=SEED,
                                 ci_level=0.999)
    coverages = {}
    for kind in COVERAGE_BOUNDS:
        report = mc.verify_bound(spec, SUM, n, kind, doms[kind], grid, replicates,
                                 seed=SEED, estimate=estimate)
        coverages[kind] = report.coverage
        assert report.coverage == 1.0, f"{fixture}/{kind}: {report.coverage}"
        assert all(v == "ok" for v in report.validity)
    _pass(7, f"{fixture}: coverage 1.0 for all of {', '.join(COVERAGE_BOUNDS)} "
             f"over x in [0.5, 6.0] sqrt(V), n={n}, {replicates} replicates")


# -- 8 ------------------------------------------------------------------------


@pytest.mark.parametrize("fixture", ["memory_one_spec", "mean_field_spec"])
def test_criterion_08_moment_bounds(fixture, request):
    spec = request.getfixturevalue(fixture)
    n, replicates = 200, 20_000
    table = build_lipschitz_table(contraction_certificate(spec), n)
    for p in (2.0, 4.0):
        est = mc.empirical_moment(spec, SUM, n, p, replicates, seed=SEED)
        dom = mc.estimate_dominating_constants(spec, "pth_moment", n, 20000, SEED, p=p)
        assert est.upper <= tb.mz_norm_bound(dom, table)
    ros = mc.estimate_dominating_constants(spec, "rosenthal", n, 20000, SEED, p=4.0)
    max_norm = mc.estimate_max_term_norm(spec, table, 4.0, 20000, SEED)
    est4 = mc.empirical_moment(spec, SUM, n, 4.0, replicates, seed=SEED)
    assert est4.upper <= tb.rosenthal_bound(ros, table, 4.0, max_norm)
    vbe = mc.estimate_dominating_constants(spec, "pth_moment", n, 20000, SEED, p=1.5)
    est15 = mc.empirical_moment(spec, SUM, n, 1.5, replicates, seed=SEED)
    assert est15.upper <= tb.von_bahr_esseen_norm(vbe, table)
    _pass(8, f"{fixture}: bootstrap upper CI of ||S_n||_p below the MZ (p=2,4), "
             "Rosenthal (p=4) and von Bahr-Esseen (p=1.5) bounds")


# -- 9 ------------------------------------------------------------------------


def test_criterion_09_rate_orders(memory_one_spec):
    rates = []
    for n in (100, 200, 400, 800):
        table = build_lipschitz_table(contraction_certificate(memory_one_spec), n)
        dom = mc.estimate_dominating_constants(memory_one_spec, "cramer", n, 2000,
                                               SEED, t0=0.5)
        bound = tb.cramer_bound(dom, table, float(n))
        rates.append(-math.log(bound.raw_value) / n)
    assert min(rates) > 0
    assert max(rates) / min(rates) <= 2.0

    small = ProcessSpec(family="mean_field_memory",
                        innovation=InnovationLaw.uniform(-0.1, 0.1),
                        coeffs=(0.2,), response="tanh")
    alpha = 0.5
    a_cap = build_lipschitz_table(contraction_certificate(small), 800).diagonal[-1]
    x_step = 8.0 * a_cap
    se_rates = []
    for n in (100, 200, 400, 800):
        table = build_lipschitz_table(contraction_certificate(small), n)
        dom = mc.estimate_dominating_constants(small, "semiexp_h", n, 2000, SEED,
                                               alpha=alpha)
        bound = tb.semiexp_h_bound(dom, table, x_step)
        se_rates.append(-math.log(bound.raw_value) / n**alpha)
    assert min(se_rates) > 0
    assert max(se_rates) / min(se_rates) <= 2.0
    _pass(9, f"-ln(cramer)/n in [{min(rates):.4f}, {max(rates):.4f}] and "
             f"-ln(semiexp_h)/n^a in [{min(se_rates):.3f}, {max(se_rates):.3f}], "
             "each within a factor 2 across n = 100..800")


# -- 10 -----------------------------------------------------------------------


def test_criterion_10_determinism_across_thread_counts(tmp_path):
    cfg = {
        "schema_version": 1,
        "process": {
            "family": "memory_one_infinite",
            "innovation": {"kind": "rademacher"},
            "coeffs": [0.6, 0.3, 0.15],
            "lag_law": {"support": [1, 2, 3], "probs": [0.5, 0.3, 0.2],
                        "truncated_mass": 0.0},
            "initial_past": {"kind": "zeros"},
            "memory_truncation": 32,
        },
        "functional": {"kind": "sum"},
        "horizon": 40,
        "replicates": 20_000,
        "seed": 424242,
        "ci_level": 0.999,
        "x_grid": {"count": 10, "lo": 0.5, "hi": 6.0, "spacing": "linear",
                   "units": "sqrt_v"},
        "bounds": [
            {"kind": "bernstein", "estimate": {"samples": 4000}},
            {"kind": "hoeffding", "estimate": {}},
            {"kind": "von_bahr_esseen", "estimate": {"p": 1.5}},
        ],
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outputs = []
    for threads in ("1", "4", "16"):
        out_dir = tmp_path / f"t{threads}"
        proc = subprocess.run(
            [sys.executable, "-m", "liptail.cli", "verify", "--config",
             str(cfg_path), "--out", str(out_dir), "--threads", threads],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        report = next(out_dir.glob("*.report.json")).read_bytes()
        curve = next(out_dir.glob("verify-*.csv")).read_bytes()
        outputs.append((report, curve))
    assert outputs[0] == outputs[1] == outputs[2]
    _pass(10, "verify outputs byte-identical for thread counts 1, 4 and 16")
