import math

import numpy as np
import pytest
from scipy.stats import binom

from liptail import FunctionalSpec, InnovationLaw, ProcessSpec
from liptail import bounds as tb
from liptail import montecarlo as mc
from liptail.errors import InapplicableBoundError, SpecError
from liptail.processes import contraction_certificate
from liptail.profiles import build_lipschitz_table

SUM = FunctionalSpec("sum")


def binomial_tail(threshold, n):
    """P(sum of n iid +-1 >= threshold), exact."""
    k = math.ceil((threshold + n) / 2)
    return float(binom.sf(k - 1, n, 0.5))


def test_functional_catalog():
    vals = np.array([[1.0, -2.0, 0.5]])
    assert FunctionalSpec("sum").evaluate(vals) == pytest.approx([-0.5])
    assert FunctionalSpec("sum_abs").evaluate(vals) == pytest.approx([3.5])
    assert FunctionalSpec("sum_clipped", clip=1.0).evaluate(vals) == pytest.approx([0.5])
    assert FunctionalSpec("max").evaluate(vals) == pytest.approx([1.0])
    with pytest.raises(SpecError):
        FunctionalSpec("median")
    with pytest.raises(SpecError):
        FunctionalSpec("sum_clipped")
    with pytest.raises(SpecError):
        FunctionalSpec("sum", clip=1.0)


def test_wilson_limits():
    assert mc.wilson_upper(0, 1000, 0.999) == pytest.approx(
        mc.wilson_upper(0, 1000, 0.999))
    assert mc.wilson_lower(0, 1000, 0.999) == 0.0
    assert mc.wilson_upper(1000, 1000, 0.999) == 1.0
    assert 0.0 < mc.wilson_upper(0, 1000, 0.999) < 0.02
    # monotone in the count
    ups = [mc.wilson_upper(k, 100, 0.99) for k in range(0, 101, 10)]
    assert all(a < b for a, b in zip(ups, ups[1:]))
    assert mc.wilson_lower(50, 100, 0.99) < 0.5 < mc.wilson_upper(50, 100, 0.99)


def test_empirical_tail_degenerate_process():
    spec = ProcessSpec(family="mean_field_memory",
                       innovation=InnovationLaw.two_point(1.0, (0.0, 0.0)),
                       coeffs=(0.3,))
    est = mc.empirical_tail(spec, SUM, 10, [0.5, 1.0, 2.0], 2000, seed=1)
    assert est.tail_freq == (0.0, 0.0, 0.0)
    assert est.center == 0.0


def test_empirical_tail_matches_exact_binomial(iid_sign_spec):
    n = 20
    grid = np.arange(1.0, 21.0)
    est = mc.empirical_tail(iid_sign_spec, SUM, n, grid, 100_000, seed=2026)
    # the estimator measures P(sum >= x + center); account for the lattice
    exact = [binomial_tail(x + est.center, n) for x in grid]
    for lo, e, hi in zip(est.lower_ci, exact, est.upper_ci):
        assert lo <= e <= hi
    # monotone tail frequencies along the grid
    assert all(a >= b for a, b in zip(est.tail_freq, est.tail_freq[1:]))
    assert all(f <= u for f, u in zip(est.tail_freq, est.upper_ci))
    assert all(l <= f for f, l in zip(est.tail_freq, est.lower_ci))


def test_empirical_tail_center_near_zero(iid_sign_spec):
    est = mc.empirical_tail(iid_sign_spec, SUM, 100, [1.0], 20_000, seed=3)
    # E f = 0; the pilot mean must sit within 5 standard errors
    assert abs(est.center) <= 5 * est.center_se


def test_empirical_tail_validation(iid_sign_spec):
    with pytest.raises(SpecError):
        mc.empirical_tail(iid_sign_spec, SUM, 10, [1.0], 100, seed=0)
    with pytest.raises(SpecError):
        mc.empirical_tail(iid_sign_spec, SUM, 10, [2.0, 1.0], 2000, seed=0)
    with pytest.raises(SpecError):
        mc.empirical_tail(iid_sign_spec, SUM, 10, [-1.0, 1.0], 2000, seed=0)


def test_thread_count_does_not_change_results(iid_sign_spec):
    grid = [2.0, 4.0, 8.0]
    runs = [mc.empirical_tail(iid_sign_spec, SUM, 30, grid, 30_000, seed=7, threads=t)
            for t in (1, 4)]
    assert runs[0] == runs[1]


def test_empirical_moment_iid_signs(iid_sign_spec):
    est = mc.empirical_moment(iid_sign_spec, SUM, 100, 2.0, 40_000, seed=5)
    assert est.lower <= 10.0 <= est.upper  # ||S_100||_2 = 10 exactly
    assert est.value == pytest.approx(10.0, rel=0.05)


def test_empirical_moment_degenerate():
    spec = ProcessSpec(family="mean_field_memory",
                       innovation=InnovationLaw.two_point(1.0, (0.0, 0.0)),
                       coeffs=(0.1,))
    est = mc.empirical_moment(spec, SUM, 10, 3.0, 2000, seed=5)
    assert est.value == 0.0


def test_weak_norm_examples():
    assert mc.estimate_weak_norm(np.full(50, 2.0), 1.5) == pytest.approx(2.0**1.5)
    assert mc.estimate_weak_norm(np.zeros(50), 2.0) == 0.0
    two = mc.estimate_weak_norm(np.array([0.0, 1.0] * 25), 2.0)
    assert two == pytest.approx(0.5)
    with pytest.raises(SpecError):
        mc.estimate_weak_norm([], 2.0)


def test_estimate_constants_rademacher_analytic(iid_sign_spec):
    dom = mc.estimate_dominating_constants(iid_sign_spec, "bernstein", 5, 1000, seed=0)
    assert dom.m == pytest.approx(1.0)
    assert dom.v_k == pytest.approx((1.0,) * 5)
    assert dom.provenance["v_k"].kind == "analytic"
    bounded = mc.estimate_dominating_constants(iid_sign_spec, "hoeffding", 5, 1000, seed=0)
    assert max(bounded.m_k) == pytest.approx(1.0)


def test_estimate_constants_degenerate_innovation():
    spec = ProcessSpec(family="mean_field_memory",
                       innovation=InnovationLaw.two_point(1.0, (0.3, 0.0)),
                       coeffs=(0.2,))
    dom = mc.estimate_dominating_constants(spec, "bernstein", 4, 1000, seed=0)
    assert dom.v_k == pytest.approx((0.0,) * 4)
    cram = mc.estimate_dominating_constants(spec, "cramer", 4, 1000, seed=0, t0=1.0)
    assert cram.k_k == pytest.approx((1.0,) * 4)


def test_estimate_constants_gaussian_mc_vs_quadrature():
    spec = ProcessSpec(family="mean_field_memory",
                       innovation=InnovationLaw.gaussian(0, 1), coeffs=(0.3,))
    dom = mc.estimate_dominating_constants(spec, "pth_moment", 3, 200_000, seed=9, p=2.0)
    law = spec.innovation
    exact = law.expectation(lambda e: law.mad_about(e) ** 2)
    # MC upper confidence limit sits above, but within 1 percent of, the truth
    assert dom.a_k[0] >= exact
    assert dom.a_k[0] == pytest.approx(exact, rel=0.01)
    assert dom.provenance["a_k"].kind == "mc_upper_ci"


def test_estimate_constants_mcdiarmid_and_subgaussian(memory_one_spec):
    dom = mc.estimate_dominating_constants(memory_one_spec, "mcdiarmid", 4, 100, seed=0)
    assert dom.m_k[0] == pytest.approx(2.0 + 2.5 * 0.9)
    sub = mc.estimate_dominating_constants(memory_one_spec, "subgaussian", 8, 4000, seed=0)
    assert len(sub.h2_k) == 8
    assert sub.epsilon > 0
    assert sub.provenance["h2_k"].note == "trajectory-dependent"


def test_estimate_constants_semiexp_h_arch():
    arch = ProcessSpec(family="arch_type", innovation=InnovationLaw.uniform(-1, 1),
                       coeffs=(0.5,), arch_floor=0.5)
    dom = mc.estimate_dominating_constants(arch, "semiexp_h", 6, 3000, seed=0, alpha=0.5)
    assert dom.c1 >= 1.0
    assert dom.provenance["c1"].note == "trajectory-dependent"


def test_verify_bound_degenerate_process():
    spec = ProcessSpec(family="mean_field_memory",
                       innovation=InnovationLaw.two_point(1.0, (0.0, 0.0)),
                       coeffs=(0.3,))
    dom = tb.BernsteinSpec(m=1.0, v_k=(1.0,) * 10)
    report = mc.verify_bound(spec, SUM, 10, "bernstein", dom, [0.5, 1.0], 2000, seed=1)
    assert report.coverage == 1.0


def test_verify_bound_hoeffding_vs_exact_binomial(iid_sign_spec):
    n = 20
    table = build_lipschitz_table(contraction_certificate(iid_sign_spec), n)
    dom = mc.estimate_dominating_constants(iid_sign_spec, "hoeffding", n, 1000, seed=0)
    grid = np.arange(1.0, 21.0)
    report = mc.verify_bound(iid_sign_spec, SUM, n, "hoeffding", dom, grid, 20_000, seed=11)
    assert report.coverage == 1.0
    # the bound must also dominate the exact law at every integer threshold
    for x in grid:
        bound = tb.hoeffding_bound(dom, table, float(x)).value
        assert binomial_tail(x, n) <= bound + 1e-15


def test_verify_bound_gating():
    arch = ProcessSpec(family="arch_type", innovation=InnovationLaw.uniform(-1, 1),
                       coeffs=(0.5,), arch_floor=0.5)
    dom = tb.BernsteinSpec(m=1.0, v_k=(1.0,) * 10)
    with pytest.raises(InapplicableBoundError):
        mc.verify_bound(arch, SUM, 10, "bernstein", dom, [1.0], 2000, seed=1)


def test_verify_reports_are_reproducible(memory_one_spec):
    dom = mc.estimate_dominating_constants(memory_one_spec, "bernstein", 30, 2000, seed=3)
    kwargs = dict(x_grid=[5.0, 10.0], replicates=4000, seed=3)
    a = mc.verify_bound(memory_one_spec, SUM, 30, "bernstein", dom, **kwargs)
    b = mc.verify_bound(memory_one_spec, SUM, 30, "bernstein", dom, **kwargs, threads=4)
    assert a == b


def test_verify_bound_subgaussian_threshold_scaling(mean_field_spec):
    # the subgaussian evaluator takes thresholds in V_n units; the verification
    # path must rescale absolute thresholds accordingly
    n = 60
    dom = mc.estimate_dominating_constants(mean_field_spec, "subgaussian", n, 6000,
                                           seed=4)
    table = build_lipschitz_table(contraction_certificate(mean_field_spec), n)
    vn = math.sqrt(tb.aggregate_v(table, dom.h2_k))
    grid = np.array([1.0, 2.0, 4.0]) * vn
    report = mc.verify_bound(mean_field_spec, SUM, n, "subgaussian", dom, grid,
                             20_000, seed=4)
    assert report.coverage == 1.0
    # the bound must actually engage (not sit at the trivial clamp) yet stay
    # above the observed tail
    assert report.theoretical[-1] < 0.5
    assert report.theoretical[0] >= report.tail_freq[0]


def test_max_term_norm_bounded_by_sup(memory_one_spec):
    table = build_lipschitz_table(contraction_certificate(memory_one_spec), 20)
    norm = mc.estimate_max_term_norm(memory_one_spec, table, 4.0, 4000, seed=0)
    cap = table.diagonal.max() * 2.35  # sup of the dominating variable
    # the estimate carries confidence-interval slack above the true norm
    assert 0 < norm <= cap * 1.05
