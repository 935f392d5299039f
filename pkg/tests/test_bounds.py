import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liptail import bounds as tb
from liptail.errors import DomainError, OutOfDomainError
from liptail.profiles import ContractionProfile, build_lipschitz_table

GEO = ContractionProfile.geometric(0.25, 0.5)
T1 = build_lipschitz_table(ContractionProfile.zeros(), 1)
T3 = build_lipschitz_table(GEO, 3)


def bisect_argmin(deriv, hi, tol=1e-12):
    """Root of an increasing derivative on (0, hi) by plain bisection."""
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if deriv(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def test_aggregate_v_examples():
    t5 = build_lipschitz_table(ContractionProfile.zeros(), 5)
    assert tb.aggregate_v(t5, [1] * 5) == 5.0
    assert tb.aggregate_v(T3, [1, 1, 1]) == pytest.approx(4.62890625, rel=1e-15)
    assert tb.aggregate_v(T3, [0, 0, 0]) == 0.0
    with pytest.raises(DomainError):
        tb.aggregate_v(T3, [1, 1])


def test_bernstein_examples():
    spec = tb.BernsteinSpec(m=0.5, v_k=(1.0,))
    out = tb.bernstein_bound(spec, T1, 2.0)
    assert out.value == pytest.approx(math.exp(-4 / (1 + math.sqrt(3) + 1)), rel=1e-12)
    assert out.extras["loose"] == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert tb.bernstein_bound(spec, T1, 1e-12).value == pytest.approx(1.0, abs=1e-9)
    # delta = 0 collapses to the gaussian form
    out0 = tb.bernstein_bound(tb.BernsteinSpec(m=0.0, v_k=(1.0,)), T1, 2.0)
    assert out0.value == pytest.approx(math.exp(-2.0), rel=1e-12)
    # degenerate variance
    dz = tb.bernstein_bound(tb.BernsteinSpec(m=1.0, v_k=(0.0,)), T1, 2.0)
    assert dz.value == 0.0 and "degenerate" in dz.reason


def test_bernstein_optimal_t_examples():
    assert tb.bernstein_optimal_t(2.0, 1.0, 0.5) == pytest.approx(
        4 / (2 + 1 + math.sqrt(3)), rel=1e-12)
    assert tb.bernstein_optimal_t(2.0, 1.0, 0.0) == pytest.approx(2.0)
    assert tb.bernstein_optimal_t(1e-14, 1.0, 0.5) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        tb.bernstein_optimal_t(-1.0, 1.0, 0.5)


def test_bernstein_optimal_t_matches_numeric():
    gen = np.random.default_rng(5)
    for _ in range(100):
        x, v = gen.uniform(0.05, 8, 2)
        delta = gen.uniform(0.0, 2.0)
        t_closed = tb.bernstein_optimal_t(x, v, delta)
        deriv = lambda t: -x + v * (2 * t - t * t * delta) / (2 * (1 - t * delta) ** 2)
        hi = (1 - 1e-9) / delta if delta > 0 else 100 * t_closed + 10
        t_num = bisect_argmin(deriv, hi)
        assert t_closed == pytest.approx(t_num, abs=1e-8)
        assert t_closed < (1 / delta if delta > 0 else math.inf)


def test_cramer_examples_and_minimizer():
    # table of ones, K_k = e^2/2, n = 1 -> K = 1
    out = tb.cramer_bound(tb.CramerSpec(t0=2.0, k_k=(math.e**2 / 2,)), T1, 1.0)
    assert out.aggregates["K"] == pytest.approx(1.0, rel=1e-12)
    assert out.extras["loose"] == pytest.approx(math.exp(-0.5), rel=1e-12)
    gen = np.random.default_rng(6)
    for _ in range(100):
        x = gen.uniform(0.1, 10)
        big_k = gen.uniform(0.3, 20)
        delta = gen.uniform(0.05, 3.0)
        t_closed = tb.cramer_optimal_t(x, big_k, delta)
        deriv = lambda t: -x + big_k / delta**2 * (2 * t - t * t / delta) / (1 - t / delta) ** 2
        t_num = bisect_argmin(deriv, delta * (1 - 1e-9))
        assert t_closed == pytest.approx(t_num, abs=1e-8)
        # closed form equals the exponential evaluated at its minimizer
        expo = lambda t: -t * x + t * t * big_k / delta**2 / (1 - t / delta)
        sharp = math.exp(-(x * delta) ** 2 / (
            2 * big_k * (1 + math.sqrt(1 + x * delta / big_k)) + x * delta))
        assert math.exp(expo(t_closed)) == pytest.approx(sharp, rel=1e-10)


def test_subgaussian_examples():
    spec = tb.SubgaussianSpec(epsilon=0.0, h2_k=(1.0,))
    out = tb.subgaussian_bound(spec, T1, 1.3)
    assert out.value == pytest.approx(math.exp(-1.3**2 / 2), rel=1e-12)
    # eps*a/sigma = 1 at x = 1
    spec1 = tb.SubgaussianSpec(epsilon=1.0, h2_k=(1.0,))
    out1 = tb.subgaussian_bound(spec1, T1, 1.0)
    assert out1.value == pytest.approx(math.exp(-1 / (1 + math.sqrt(3) + 1)), rel=1e-12)
    degenerate = tb.SubgaussianSpec(epsilon=1.0, h2_k=(0.0,))
    assert tb.subgaussian_bound(degenerate, T1, 1.0).validity == "out_of_domain"


def test_semiexp_g_bound_and_preform():
    spec = tb.SemiexpGSpec(p=0.5, k_k=(1.0,))
    out = tb.semiexp_g_bound(spec, T1, 4.0)
    assert out.value == pytest.approx(2 * math.exp(-16 / (2 * 9)), rel=1e-12)
    assert tb.semiexp_g_bound(spec, T1, 0.0).value == 1.0  # raw 2 clamps
    small = tb.SemiexpGSpec(p=0.5, k_k=(0.25,))
    assert tb.semiexp_g_bound(small, T1, 1.0).validity == "out_of_domain"
    # asymptotic slope: -log(bound) ~ (x/a)^p / 2 for x >> K^{1/(2-p)}
    for x in (1e4, 1e6):
        got = -math.log(tb.semiexp_g_bound(spec, T1, x).raw_value / 2.0)
        assert got == pytest.approx(x**0.5 / 2, rel=0.02)
    # two-regime diagnostic stays finite and positive on both branches
    assert tb.semiexp_g_preform(4.0, 0.5, 1.0) > 0
    assert tb.semiexp_g_preform(4.0, 0.5, 10.0) > 0


def test_semiexp_h_constant_example():
    spec = tb.SemiexpHSpec(alpha=0.5, c1=1.0)
    assert tb.semiexp_h_constant(spec, 1.0, 1.0) == pytest.approx(229.5)
    # both corrections vanish as x grows
    assert tb.semiexp_h_constant(spec, 1.0, 1e9) == pytest.approx(2.0, abs=1e-6)
    out = tb.semiexp_h_bound(spec, T1, 0.05)
    assert out.value == 1.0 and out.clamped
    with pytest.raises(OutOfDomainError):
        tb.SemiexpHSpec(alpha=1.0, c1=1.0)


def test_hn_conventions():
    assert tb.hn_function(0.0, 2.0, 10) == 1.0
    assert tb.hn_function(11.0, 2.0, 10) == 0.0
    v = 3.0
    assert tb.hn_function(10.0, v, 10) == pytest.approx((v * v / (10 + v * v)) ** 10, rel=1e-12)
    # limit from the left matches the convention value
    lim = tb.hn_function(10.0 * (1 - 1e-12), v, 10)
    assert lim == pytest.approx(tb.hn_function(10.0, v, 10), rel=1e-8)
    with pytest.raises(DomainError):
        tb.hn_function(1.0, 0.0, 10)


def test_bennett_bernstein_chain():
    assert tb.bennett_b(0.0, 1.0) == 1.0
    assert tb.bernstein_b1(0.0, 1.0) == 1.0
    assert tb.bernstein_b1(1.0, 1.0) == pytest.approx(math.exp(-0.375), rel=1e-12)
    for n in (1, 10, 100):
        for x in np.linspace(0, n, 25):
            for v in np.linspace(0.3, 10, 12):
                h = tb.log_hn(x, v, n)
                b = tb.log_bennett_b(x, v)
                b1 = math.log(tb.bernstein_b1(x, v)) if x > 0 else 0.0
                assert h <= b + 1e-12
                assert b <= b1 + 1e-12


def test_fuk_nagaev_truncated_cases():
    spec = tb.BoundedSpec(m_k=(1.0,), v_k=(1.0,))
    assert tb.fuk_nagaev_truncated(spec, T1, 1.0, 2.0, 1.0).value == 1.0
    out = tb.fuk_nagaev_truncated(spec, T1, 1.0, 1e9, 0.0)
    assert out.value == pytest.approx(1.0, abs=1e-6)  # H_n(~0, .) -> 1
    # with y = M and no tail mass this is exactly the hoeffding bound
    hoeff = tb.hoeffding_bound(spec, T1, 0.7)
    trunc = tb.fuk_nagaev_truncated(spec, T1, 0.7, 1.0, 0.0)
    assert trunc.value == pytest.approx(hoeff.value, rel=1e-15)


def test_fuk_nagaev_pth_constants():
    spec = tb.PthMomentSpec(p=2.0, a_k=(1.0,), v_k=(1.0,))
    out = tb.fuk_nagaev_pth(spec, T1, 10.0)
    explicit = 2 * 4 * 1 / 100 + 2 * math.exp(-2 / (16 * math.e**2) * 100)
    assert out.raw_value == pytest.approx(explicit, rel=1e-12)
    # polynomial part dominates far out
    far = tb.fuk_nagaev_pth(spec, T1, 1e6)
    assert far.raw_value == pytest.approx(8 / 1e12, rel=1e-6)
    zero = tb.fuk_nagaev_pth(tb.PthMomentSpec(p=2.0, a_k=(0.0,), v_k=(0.0,)), T1, 1.0)
    assert zero.value == 0.0
    with pytest.raises(DomainError):
        tb.fuk_nagaev_pth(tb.PthMomentSpec(p=1.5, a_k=(1.0,), v_k=(1.0,)), T1, 1.0)


def test_rio_ell_matches_high_precision():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 50

    def ell_mp(t):
        t = mp.mpf(t)
        return (t - mp.log(t) - 1) + t / mp.expm1(t) + mp.log(1 - mp.e**(-t))

    def ell_prime_mp(t):
        t = mp.mpf(t)
        em = mp.expm1(t)
        return 1 - 1 / t + 2 / em - t * mp.e**t / em**2

    for t in (1e-9, 1e-6, 1e-4, 0.005, 0.009, 0.011, 0.1, 1.0, 5.0, 50.0, 500.0):
        assert tb.rio_ell(t) == pytest.approx(float(ell_mp(t)), rel=1e-9, abs=1e-300)
        assert tb.rio_ell_prime(t) == pytest.approx(float(ell_prime_mp(t)),
                                                    rel=1e-9, abs=1e-300)


def test_rio_ell_chain_and_guards():
    assert tb.rio_ell_star(0.0) == 0.0
    # small-t series continuity across the crossover
    for t in (0.009999, 0.010001):
        assert tb.rio_ell(t) == pytest.approx(t * t / 8 - t**4 / 576, rel=1e-6)
    x = 0.5
    star = tb.rio_ell_star(x)
    lower1 = (x * x - 2 * x) * math.log1p(-x)
    assert lower1 == pytest.approx(0.51986, abs=1e-4)
    assert star >= lower1 >= 2 * x * x + x**4 / 6
    with pytest.raises(OutOfDomainError):
        tb.rio_ell_star(1.0)


def test_mcdiarmid_examples():
    spec = tb.McDiarmidSpec(m_k=(1.0,))
    out = tb.mcdiarmid_bound(spec, T1, 0.0)
    assert out.value == 1.0
    mid = tb.mcdiarmid_bound(spec, T1, 0.5)
    assert mid.extras["product_form"] == pytest.approx(0.5**0.75, rel=1e-12)
    assert mid.extras["classical"] == pytest.approx(math.exp(-0.5), rel=1e-12)
    assert mid.value <= mid.extras["product_form"] <= mid.extras["classical"]
    edge = tb.mcdiarmid_bound(spec, T1, 1.0)
    assert edge.value == 0.0 and edge.extras["product_form"] == 0.0
    assert tb.mcdiarmid_bound(spec, T1, 1.5).validity == "out_of_domain"


def test_vbe_examples():
    t2 = build_lipschitz_table(GEO, 2)
    n5 = build_lipschitz_table(ContractionProfile.zeros(), 5)
    assert tb.von_bahr_esseen_norm(tb.PthMomentSpec(p=2.0, a_k=(1.0,) * 5), n5) ** 2 \
        == pytest.approx(5.0)
    got = tb.von_bahr_esseen_norm(tb.PthMomentSpec(p=1.5, a_k=(1.0, 1.0)), t2)
    assert got**1.5 == pytest.approx(1.25**1.5 + math.sqrt(2), rel=1e-12)
    # p = 1 endpoint constant
    got1 = tb.von_bahr_esseen_norm(tb.PthMomentSpec(p=1.0, a_k=(1.0, 1.0)), t2)
    assert got1 == pytest.approx(1.25 + 2.0, rel=1e-12)
    tail = tb.von_bahr_esseen_tail(tb.PthMomentSpec(p=1.5, a_k=(1.0, 1.0)), t2, 10.0)
    assert tail.value == pytest.approx((1.25**1.5 + math.sqrt(2)) / 10**1.5, rel=1e-12)
    with pytest.raises(DomainError):
        tb.von_bahr_esseen_norm(tb.PthMomentSpec(p=2.5, a_k=(1.0, 1.0)), t2)


def test_weak_vbe():
    out = tb.weak_vbe_tail(tb.WeakPthSpec(p=1.5, a_k=(1.0,)), T1, 2.0)
    assert out.aggregates["C_p"] == pytest.approx(28.0)
    assert tb.weak_vbe_tail(tb.WeakPthSpec(p=1.5, a_k=(0.0,)), T1, 2.0).value == 0.0
    for bad in (1.0, 2.0):
        res = tb.weak_vbe_tail(tb.WeakPthSpec(p=bad, a_k=(1.0,)), T1, 2.0)
        assert res.validity == "out_of_domain"


def test_mz_examples():
    n4 = build_lipschitz_table(ContractionProfile.zeros(), 4)
    assert tb.mz_norm_bound(tb.PthMomentSpec(p=2.0, a_k=(1.0,) * 4), n4) \
        == pytest.approx(2.0)
    t2 = build_lipschitz_table(GEO, 2)
    assert tb.mz_norm_bound(tb.PthMomentSpec(p=4.0, a_k=(16.0, 16.0)), t2) \
        == pytest.approx(math.sqrt(18.25), rel=1e-12)
    assert tb.mz_norm_bound(tb.PthMomentSpec(p=3.0, a_k=(0.0, 0.0)), t2) == 0.0


def test_rosenthal_constants_and_minimization():
    assert tb.rosenthal_constants(4.0, 4.0) == pytest.approx((240.0, 240 * math.e))
    c1, c2 = tb.rosenthal_constants(4.0, 1.0)
    assert (c1, c2) == pytest.approx((60.0, 120 * math.e**4))
    spec = tb.RosenthalSpec(v_k=(1.0,))
    assert tb.rosenthal_bound(spec, T1, 2.0, max_norm=0.0) == pytest.approx(60.0)
    weak = tb.rosenthal_weak_tail(tb.RosenthalSpec(v_k=(1.0,), weak_max=0.0), T1, 2.0, 100.0)
    assert weak.value == pytest.approx(60.0 / 100.0**2, rel=1e-12)
    assert "constant-uncertain" in weak.reason


def test_two_sided_rule():
    spec = tb.BernsteinSpec(m=0.5, v_k=(1.0,))
    one = tb.bernstein_bound(spec, T1, 2.0, side="upper")
    two = tb.bernstein_bound(spec, T1, 2.0, side="two_sided")
    assert two.value == pytest.approx(min(1.0, 2 * one.value))
    near0 = tb.bernstein_bound(spec, T1, 1e-6, side="two_sided")
    assert near0.value == 1.0 and near0.clamped


@settings(max_examples=80, deadline=None)
@given(x1=st.floats(0.01, 20), x2=st.floats(0.01, 20),
       v=st.floats(0.1, 5), m=st.floats(0.0, 2))
def test_bernstein_monotone_in_threshold(x1, x2, v, m):
    lo, hi = sorted((x1, x2))
    spec = tb.BernsteinSpec(m=m, v_k=(v,))
    assert tb.bernstein_bound(spec, T1, hi).value \
        <= tb.bernstein_bound(spec, T1, lo).value + 1e-15


@settings(max_examples=80, deadline=None)
@given(x=st.floats(0.01, 30), v=st.floats(0.05, 5), m=st.floats(0.01, 3),
       t0=st.floats(0.1, 3), kk=st.floats(1.0, 10))
def test_sharper_forms_never_exceed_looser(x, v, m, t0, kk):
    bern = tb.bernstein_bound(tb.BernsteinSpec(m=m, v_k=(v,)), T1, x)
    assert bern.raw_value <= bern.extras["loose"] + 1e-15
    cram = tb.cramer_bound(tb.CramerSpec(t0=t0, k_k=(kk,)), T1, x)
    assert cram.raw_value <= cram.extras["loose"] + 1e-15


_MONOTONE_CASES = [
    ("bernstein", tb.BernsteinSpec(m=0.7, v_k=(1.5,) * 8)),
    ("subgaussian", tb.SubgaussianSpec(epsilon=0.5, h2_k=(1.2,) * 8)),
    ("cramer", tb.CramerSpec(t0=0.8, k_k=(2.0,) * 8)),
    ("semiexp_g", tb.SemiexpGSpec(p=0.4, k_k=(1.0,) * 8)),
    ("semiexp_h", tb.SemiexpHSpec(alpha=0.6, c1=1.3)),
    ("hoeffding", tb.BoundedSpec(m_k=(1.0,) * 8, v_k=(0.8,) * 8)),
    ("fuk_nagaev_pth", tb.PthMomentSpec(p=3.0, a_k=(1.0,) * 8, v_k=(1.0,) * 8)),
    ("mcdiarmid", tb.McDiarmidSpec(m_k=(1.0,) * 8)),
    ("von_bahr_esseen", tb.PthMomentSpec(p=1.5, a_k=(1.0,) * 8)),
    ("weak_von_bahr_esseen", tb.WeakPthSpec(p=1.5, a_k=(1.0,) * 8)),
]


@pytest.mark.parametrize("kind,spec", _MONOTONE_CASES, ids=[c[0] for c in _MONOTONE_CASES])
def test_bounds_non_increasing_in_threshold(kind, spec):
    from liptail.montecarlo import evaluate_bound

    table = build_lipschitz_table(GEO, 8)
    d_cap = float(table.reversed_diagonal.sum())  # mcdiarmid domain ends at D
    xs = np.linspace(1e-6, min(40.0, d_cap * 0.99), 60)
    vals = [evaluate_bound(kind, spec, table, float(x)).value for x in xs]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))
    assert all(0.0 <= v <= 1.0 for v in vals)
