"""Deviation and moment bounds for separately Lipschitz functionals.

Every bound consumes the reversed diagonal w_k = a_{n-k}(n-k), k = 1..n, of a
Lipschitz weight table together with per-increment dominating constants, and
returns a one-sided tail probability (clamp at 1 happens after any internal
form comparisons, never before).  The exponential families:

  bernstein      exp(-x^2 / (V (1 + sqrt(1 + 2 x d / V)) + x d)),
                 V = sum w_k^2 V_k, d = M a_{n-1}(n-1)
  subgaussian    exp(-x^2 / (1 + sqrt(1 + 2 x e a / s) + x e a / s)) at
                 threshold x * V_n, s = V_n / sqrt(n)
  cramer         exp(-(x d)^2 / (2 K (1 + sqrt(1 + x d / K)) + x d)),
                 K = (2/e^2) sum (w_k / a)^2 K_k, d = t0 / a
  semiexp_g      2 exp(-x^2 / (2 (K a^2 + x^{2-p} a^p)))
  semiexp_h      C(alpha, x) exp(-(x / (8 a))^{2 alpha} n^alpha)

the occupation-function family built on

  H_n(x, v) = {(v^2/(x+v^2))^{x+v^2} (n/(n-x))^{n-x}}^{n/(n+v^2)} 1{x <= n}

(with (+inf)^0 = 1 at x = n), its Bennett and Bernstein relaxations
B(x, v) = (v^2/(x+v^2))^{x+v^2} e^x and B1(x, v) = exp(-x^2/(2(v^2+x/3))),
the Fuk-Nagaev polynomial-plus-gaussian mixture, the sharpened McDiarmid bound
through the Young transform of

  l(t) = (t - ln t - 1) + t (e^t - 1)^{-1} + ln(1 - e^{-t}),

and the von Bahr-Esseen / Marcinkiewicz-Zygmund / Rosenthal moment bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DomainError, OutOfDomainError
from .profiles import LipschitzTable

_E = math.e


# ---------------------------------------------------------------------------
# constant specifications


@dataclass(frozen=True)
class Provenance:
    """Where a dominating constant came from."""

    kind: str = "analytic"            # "analytic" | "mc_upper_ci"
    level: float | None = None
    samples: int | None = None
    note: str = ""

    def to_config(self) -> dict:
        out = {"kind": self.kind}
        if self.level is not None:
            out["level"] = self.level
        if self.samples is not None:
            out["samples"] = self.samples
        if self.note:
            out["note"] = self.note
        return out


def _as_vector(values, n, name) -> tuple[float, ...]:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise DomainError(f"{name} must have length {n}, got shape {arr.shape}")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be nonnegative")
    return tuple(arr.tolist())


@dataclass(frozen=True)
class BernsteinSpec:
    """E[G^l] <= (l!/2) V_k M^(l-2) for every l >= 2."""

    m: float
    v_k: tuple[float, ...]
    provenance: Mapping[str, Provenance] = field(default_factory=dict)


@dataclass(frozen=True)
class SubgaussianSpec:
    """Sub-gaussian growth of the past-dependent dominating moments."""

    epsilon: float
    h2_k: tuple[float, ...]
    provenance: Mapping[str, Provenance] = field(default_factory=dict)


@dataclass(frozen=True)
class CramerSpec:
    """E[exp(t0 G)] <= K_k with K_k >= 1."""

    t0: float
    k_k: tuple[float, ...]
    provenance: Mapping[str, Provenance] = field(default_factory=dict)

    def __post_init__(self):
        if self.t0 <= 0:
            raise DomainError("cramer constant t0 must be > 0")
        if any(k < 1.0 for k in self.k_k):
            raise DomainError("cramer constants K_k must be >= 1")


@dataclass(frozen=True)
class SemiexpGSpec:
    """E[G^2 exp(G^p)] <= K_k with p in (0, 1)."""

    p: float
    k_k: tuple[float, ...]
    provenance: Mapping[str, Provenance] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DomainError("semiexp_g exponent p must lie in (0, 1)")


@dataclass(frozen=True)
class SemiexpHSpec:
    """E[exp(H^(2 alpha / (1 - alpha)))] <= C1 with alpha in (0, 1)."""

    alpha: float
    c1: float
    provenance: Mapping[str, Provenance] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise OutOfDomainError("semiexp_h exponent alpha must lie in (0, 1)")


@dataclass(frozen=True)
class BoundedSpec:
    """G <= M_k almost surely and E[G^2] <= V_k."""

    m_k: tuple[float, ...]
    v_k: tuple[float, ...]
    provenance: Mapping[str, Provenance] = field(default_factory=dict)


@dataclass(frozen=True)
class McDiarmidSpec:
    """Almost-sure innovation-replacement bounds M_k."""

    m_k: tuple[float, ...]
    provenance: Mapping[str, Provenance] = field(default_factory=dict)


@dataclass(frozen=True)
class PthMomentSpec:
    """E[G^p] <= A_k(p); optionally E[G^2] <= V_k for mixed bounds."""

    p: float
    a_k: tuple[float, ...]
    v_k: tuple[float, ...] | None = None
    provenance: Mapping[str, Provenance] = field(default_factory=dict)


@dataclass(frozen=True)
class WeakPthSpec:
    """Weak moments sup_x x^p P(G > x) <= A_k(p)."""

    p: float
    a_k: tuple[float, ...]
    provenance: Mapping[str, Provenance] = field(default_factory=dict)


@dataclass(frozen=True)
class RosenthalSpec:
    """Variance proxies plus the max-increment norm for Rosenthal bounds."""

    v_k: tuple[float, ...]
    max_norm: float = 0.0
    weak_max: float = 0.0
    p: float = 2.0
    provenance: Mapping[str, Provenance] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# tail-bound result


@dataclass(frozen=True)
class TailBound:
    kind: str
    x: float
    value: float
    side: str = "upper"
    raw_value: float = float("nan")
    clamped: bool = False
    validity: str = "ok"
    reason: str = ""
    aggregates: Mapping[str, float] = field(default_factory=dict)
    extras: Mapping[str, float] = field(default_factory=dict)

    def to_config(self) -> dict:
        return {
            "kind": self.kind, "x": self.x, "value": self.value,
            "side": self.side, "raw_value": self.raw_value,
            "clamped": self.clamped, "validity": self.validity,
            "reason": self.reason, "aggregates": dict(self.aggregates),
            "extras": dict(self.extras),
        }


def _finish(kind, x, raw, side, aggregates, extras=None, notes="") -> TailBound:
    """Clamps to [0, 1] after all raw-form comparisons and applies the side rule."""
    raw = float(raw)
    one_sided = min(1.0, max(0.0, raw))
    if side == "two_sided":
        value = min(1.0, 2.0 * one_sided)
    else:
        value = one_sided
    return TailBound(
        kind=kind, x=float(x), value=value, side=side, raw_value=raw,
        clamped=raw > 1.0 or (side == "two_sided" and 2.0 * one_sided > 1.0),
        aggregates=dict(aggregates), extras=dict(extras or {}), reason=notes,
    )


def _out_of_domain(kind, x, side, reason, aggregates=None) -> TailBound:
    return TailBound(kind=kind, x=float(x), value=float("nan"), side=side,
                     validity="out_of_domain", reason=reason,
                     aggregates=dict(aggregates or {}))


def _weights(table: LipschitzTable, constants, name) -> tuple[np.ndarray, np.ndarray]:
    w = table.reversed_diagonal
    c = np.asarray(constants, dtype=float)
    if c.shape != w.shape:
        raise DomainError(
            f"{name} has length {c.size}, table horizon is {table.horizon}"
        )
    return w, c


# ---------------------------------------------------------------------------
# aggregates


def aggregate_v(table: LipschitzTable, v_k) -> float:
    """V = sum_k (a_{n-k}(n-k))^2 V_k."""
    w, c = _weights(table, v_k, "v_k")
    return float(np.dot(w * w, c))


def scale_delta(table: LipschitzTable, m: float) -> float:
    """Bernstein scale M * a_{n-1}(n-1)."""
    return float(m * table.diagonal[-1])


# ---------------------------------------------------------------------------
# Bernstein family


def bernstein_bound(spec: BernsteinSpec, table: LipschitzTable, x: float,
                    side: str = "upper") -> TailBound:
    """Sharper Bernstein form; the looser 2(V + x d) form rides in extras."""
    v = aggregate_v(table, spec.v_k)
    delta = scale_delta(table, spec.m)
    agg = {"V": v, "bernstein_scale": delta}
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    if x == 0:
        return _finish("bernstein", x, 1.0, side, agg, {"loose": 1.0})
    if v == 0.0:
        # V = 0 forces G = 0 a.s., hence S_n = 0 a.s.
        return _finish("bernstein", x, 0.0, side, agg, {"loose": 0.0},
                       notes="degenerate variance: V = 0")
    ratio = 2.0 * x * delta / v
    sharp = math.exp(-x * x / (v * (1.0 + math.sqrt(1.0 + ratio)) + x * delta))
    loose = math.exp(-x * x / (2.0 * (v + x * delta)))
    return _finish("bernstein", x, sharp, side, agg, {"loose": loose})


def bernstein_optimal_t(x: float, v: float, delta: float) -> float:
    """Argmin over t in [0, 1/delta) of -t x + t^2 V / (2 (1 - t delta))."""
    if x <= 0 or v <= 0:
        raise DomainError("bernstein_optimal_t needs x > 0 and V > 0")
    if delta < 0:
        raise DomainError("bernstein_optimal_t needs delta >= 0")
    ratio = 2.0 * x * delta / v
    return (2.0 * x / v) / (ratio + 1.0 + math.sqrt(1.0 + ratio))


def subgaussian_bound(spec: SubgaussianSpec, table: LipschitzTable, x: float,
                      side: str = "upper") -> TailBound:
    """Tail of P(+-S_n >= x V_n) under the sub-gaussian moment growth.

    V_n^2 = sum w_k^2 E[H^2]_k and sigma_n = V_n / sqrt(n); the threshold is
    expressed in V_n units.
    """
    w, h2 = _weights(table, spec.h2_k, "h2_k")
    n = table.horizon
    vn2 = float(np.dot(w * w, h2))
    vn = math.sqrt(vn2)
    sigma = vn / math.sqrt(n)
    a = float(table.diagonal[-1])
    agg = {"V_n": vn, "sigma_n": sigma, "a_top": a}
    if sigma == 0.0:
        return _out_of_domain("subgaussian", x, side, "sigma_n = 0", agg)
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    if x == 0:
        return _finish("subgaussian", x, 1.0, side, agg, {"loose": 1.0})
    u = x * spec.epsilon * a / sigma
    sharp = math.exp(-x * x / (1.0 + math.sqrt(1.0 + 2.0 * u) + u))
    loose = math.exp(-x * x / (2.0 * (1.0 + u)))
    return _finish("subgaussian", x, sharp, side, agg, {"loose": loose})


def cramer_bound(spec: CramerSpec, table: LipschitzTable, x: float,
                 side: str = "upper") -> TailBound:
    """Exponential-moment bound; the constant 2/e^2 is the sharp supremum of
    t^i e^{-t} / i! over i >= 2 (attained at t = i = 2)."""
    w, kk = _weights(table, spec.k_k, "k_k")
    a = float(table.diagonal[-1])
    big_k = float((2.0 / (_E**2)) * np.dot((w / a) ** 2, kk))
    delta = spec.t0 / a
    agg = {"K": big_k, "cramer_scale": delta}
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    if x == 0:
        return _finish("cramer", x, 1.0, side, agg, {"loose": 1.0})
    xd = x * delta
    sharp = math.exp(-(xd * xd) / (2.0 * big_k * (1.0 + math.sqrt(1.0 + xd / big_k)) + xd))
    loose = math.exp(-(xd * xd) / (4.0 * big_k + 2.0 * xd))
    return _finish("cramer", x, sharp, side, agg, {"loose": loose})


def cramer_optimal_t(x: float, big_k: float, delta: float) -> float:
    """Argmin over t in [0, delta) of -t x + t^2 K delta^{-2} / (1 - t/delta)."""
    if x <= 0 or big_k <= 0 or delta <= 0:
        raise DomainError("cramer_optimal_t needs positive x, K, delta")
    s = x * delta / big_k
    return (x * delta * delta / big_k) / (s + 1.0 + math.sqrt(1.0 + s))


# ---------------------------------------------------------------------------
# semi-exponential family


def semiexp_g_bound(spec: SemiexpGSpec, table: LipschitzTable, x: float,
                    side: str = "upper") -> TailBound:
    """2 exp(-x^2 / (2 (K a^2 + x^{2-p} a^p))); stated for K >= 1."""
    w, kk = _weights(table, spec.k_k, "k_k")
    a = float(table.diagonal[-1])
    big_k = float(np.dot((w / a) ** 2, kk))
    agg = {"K": big_k, "a_top": a, "p": spec.p}
    if big_k < 1.0:
        return _out_of_domain(
            "semiexp_g", x, side,
            f"aggregate K = {big_k} < 1; the unified form needs K >= 1 "
            "(see semiexp_g_preform for the two-regime diagnostic)", agg)
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    raw = 2.0 * math.exp(-x * x / (2.0 * (big_k * a * a + x ** (2.0 - spec.p) * a**spec.p)))
    return _finish("semiexp_g", x, raw, side, agg)


def semiexp_g_preform(big_k: float, p: float, x_scaled: float) -> float:
    """Two-regime pre-form bound at the rescaled threshold x/a (diagnostic).

    Below K^{1/(2-p)} a gaussian term plus a stretched-exponential correction;
    above it a pure semi-exponential envelope.
    """
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in (0, 1)")
    if x_scaled <= 0 or big_k <= 0:
        return 1.0
    split = big_k ** (1.0 / (2.0 - p))
    if x_scaled < split:
        main = math.exp(-x_scaled * x_scaled / (2.0 * big_k))
        corr = big_k * (x_scaled / big_k) ** (2.0 / (1.0 - p)) * math.exp(
            -((big_k / x_scaled) ** (p / (1.0 - p))))
        return main + corr
    main = math.exp(-(x_scaled**p) * (1.0 - big_k / (2.0 * x_scaled ** (2.0 - p))))
    corr = big_k / (x_scaled * x_scaled) * math.exp(-(x_scaled**p))
    return main + corr


def semiexp_h_constant(spec: SemiexpHSpec, a_top: float, x: float) -> float:
    """C(alpha, x) = 2 + 35 C1 (a^{2a}/(x^{2a} 4^{2-3a})
    + (4 a^2/x^2)(3(1-a)/(2a))^{(1-a)/a})."""
    al = spec.alpha
    if x <= 0:
        raise DomainError("semiexp_h needs a positive per-step threshold")
    term1 = a_top ** (2 * al) / (x ** (2 * al) * 4.0 ** (2.0 - 3.0 * al))
    term2 = (4.0 * a_top**2 / (x * x)) * (3.0 * (1.0 - al) / (2.0 * al)) ** ((1.0 - al) / al)
    return 2.0 + 35.0 * spec.c1 * (term1 + term2)


def semiexp_h_bound(spec: SemiexpHSpec, table: LipschitzTable, x_per_step: float,
                    side: str = "upper") -> TailBound:
    """P(+-S_n >= n x) <= C(alpha, x) exp(-(x/(8a))^{2 alpha} n^alpha).

    The constant depends on the horizon only through a_{n-1}(n-1).
    """
    a = float(table.diagonal[-1])
    n = table.horizon
    c = semiexp_h_constant(spec, a, x_per_step)
    rate = (x_per_step / (8.0 * a)) ** (2.0 * spec.alpha) * n**spec.alpha
    raw = c * math.exp(-rate)
    return _finish("semiexp_h", x_per_step, raw, side,
                   {"C": c, "rate": rate, "a_top": a, "alpha": spec.alpha})


# ---------------------------------------------------------------------------
# occupation-function family (log space throughout)


def log_hn(x: float, v: float, n: int) -> float:
    """log H_n(x, v); -inf for x > n; the (+inf)^0 = 1 convention at x = n."""
    if v <= 0:
        raise DomainError("H_n needs v > 0")
    if x < 0:
        raise DomainError("H_n is defined for x >= 0")
    if x > n:
        return -math.inf
    v2 = v * v
    t1 = (x + v2) * math.log(v2 / (x + v2)) if x > 0 else 0.0
    t2 = (n - x) * math.log(n / (n - x)) if x < n else 0.0
    return (n / (n + v2)) * (t1 + t2)


def hn_function(x: float, v: float, n: int) -> float:
    out = log_hn(x, v, n)
    return 0.0 if out == -math.inf else math.exp(out)


def log_bennett_b(x: float, v: float) -> float:
    if v <= 0:
        raise DomainError("B needs v > 0")
    if x < 0:
        raise DomainError("B is defined for x >= 0")
    v2 = v * v
    return ((x + v2) * math.log(v2 / (x + v2)) if x > 0 else 0.0) + x


def bennett_b(x: float, v: float) -> float:
    return math.exp(log_bennett_b(x, v))


def bernstein_b1(x: float, v: float) -> float:
    if v <= 0:
        raise DomainError("B1 needs v > 0")
    if x < 0:
        raise DomainError("B1 is defined for x >= 0")
    return math.exp(-x * x / (2.0 * (v * v + x / 3.0)))


def fuk_nagaev_truncated(spec: BoundedSpec, table: LipschitzTable, x: float,
                         y: float, tail_of_max: float, side: str = "upper") -> TailBound:
    """H_n at truncation level y plus the tail of the maximal dominating draw."""
    if y <= 0:
        raise DomainError("truncation level y must be > 0")
    if not 0.0 <= tail_of_max <= 1.0:
        raise DomainError("tail_of_max must be a probability")
    v = aggregate_v(table, spec.v_k)
    a = float(table.diagonal[-1])
    scale = y * a
    agg = {"V": v, "truncation_scale": scale, "tail_of_max": tail_of_max}
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    if v == 0.0:
        raw = (1.0 if x == 0 else 0.0) + tail_of_max
        return _finish("fuk_nagaev_truncated", x, raw, side, agg)
    raw = hn_function(x / scale, math.sqrt(v) / scale, table.horizon) + tail_of_max
    return _finish("fuk_nagaev_truncated", x, raw, side, agg)


def hoeffding_bound(spec: BoundedSpec, table: LipschitzTable, x: float,
                    side: str = "upper") -> TailBound:
    """H_n(x/(M a), sqrt(V)/(M a)) with M = max_k M_k (bounded increments)."""
    m = max(spec.m_k)
    if m <= 0:
        raise DomainError("hoeffding needs a positive bound M")
    v = aggregate_v(table, spec.v_k)
    a = float(table.diagonal[-1])
    scale = m * a
    agg = {"V": v, "M": m, "hoeffding_scale": scale}
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    if v == 0.0:
        return _finish("hoeffding", x, 1.0 if x == 0 else 0.0, side, agg,
                       notes="degenerate variance: V = 0")
    raw = hn_function(x / scale, math.sqrt(v) / scale, table.horizon)
    return _finish("hoeffding", x, raw, side, agg)


def fuk_nagaev_pth(spec: PthMomentSpec, table: LipschitzTable, x: float,
                   side: str = "two_sided") -> TailBound:
    """2 (1 + 2/p)^p A(p)/x^p + 2 exp(-(2/((p+2)^2 e^p)) x^2 / V).

    Already two-sided (it bounds P(|S_n| >= x)); the one-sided reading keeps
    the same value.
    """
    if spec.p < 2.0:
        raise DomainError("fuk_nagaev_pth needs p >= 2")
    if spec.v_k is None:
        raise DomainError("fuk_nagaev_pth needs variance constants v_k")
    p = spec.p
    w, ak = _weights(table, spec.a_k, "a_k")
    a_p = float(np.dot(w**p, ak))
    v = aggregate_v(table, spec.v_k)
    agg = {"A_p": a_p, "V": v, "p": p}
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    if x == 0:
        return TailBound(kind="fuk_nagaev_pth", x=0.0, value=1.0, side=side,
                         raw_value=math.inf, clamped=True, aggregates=agg)
    poly = 2.0 * (1.0 + 2.0 / p) ** p * a_p / x**p
    expo = 2.0 * math.exp(-(2.0 / ((p + 2.0) ** 2 * _E**p)) * x * x / v) if v > 0 else 0.0
    raw = poly + expo
    value = min(1.0, raw)
    return TailBound(kind="fuk_nagaev_pth", x=float(x), value=value, side=side,
                     raw_value=raw, clamped=raw > 1.0, aggregates=agg)


# ---------------------------------------------------------------------------
# McDiarmid via the Young transform of Rio's l(t)


_ELL_SERIES_CUT = 0.01


def rio_ell(t: float) -> float:
    """l(t) = (t - ln t - 1) + t (e^t - 1)^{-1} + ln(1 - e^{-t}), t > 0.

    Small t uses the series t^2/8 - t^4/576 (the direct formula cancels
    catastrophically); large t uses exp(-t) forms to avoid overflow.
    """
    if t <= 0:
        raise DomainError("l(t) is defined for t > 0")
    if t < _ELL_SERIES_CUT:
        return t * t / 8.0 - t**4 / 576.0
    q = math.exp(-t)
    return (t - math.log(t) - 1.0) + t * q / (1.0 - q) + math.log1p(-q)


def rio_ell_prime(t: float) -> float:
    """dl/dt; increasing from 0 to 1, so l* inverts it by bisection."""
    if t <= 0:
        raise DomainError("l'(t) is defined for t > 0")
    if t < _ELL_SERIES_CUT:
        return t / 4.0 - t**3 / 144.0
    q = math.exp(-t)
    om = 1.0 - q
    return 1.0 - 1.0 / t + 2.0 * q / om - t * q / (om * om)


def rio_ell_star(x: float) -> float:
    """Young transform l*(x) = sup_{t>0} (x t - l(t)) for x in [0, 1).

    Solved by bisection on l'(t) = x after geometric bracket expansion from
    t = 1 (tolerance 1e-10 in t), with a golden-section fallback.  Satisfies
    l*(x) >= (x^2 - 2x) ln(1 - x) >= 2 x^2 + x^4/6.
    """
    if x < 0 or x >= 1.0:
        raise OutOfDomainError(f"l* is evaluated on [0, 1), got {x}")
    if x < 1e-8:
        # leading term of the transform; the bracket search would underflow
        return 2.0 * x * x
    lo = hi = 1.0
    for _ in range(2000):
        if rio_ell_prime(lo) <= x:
            break
        lo /= 2.0
    for _ in range(2000):
        if rio_ell_prime(hi) >= x:
            break
        hi *= 2.0
    if rio_ell_prime(lo) > x or rio_ell_prime(hi) < x:
        return _ell_star_golden(x)
    while hi - lo > 1e-10 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if rio_ell_prime(mid) < x:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    return x * t - rio_ell(t)


def _ell_star_golden(x: float) -> float:
    """Golden-section maximization of x t - l(t) on [1e-8, 50]."""
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 1e-8, 50.0
    obj = lambda t: x * t - rio_ell(t)
    c = hi - phi * (hi - lo)
    d = lo + phi * (hi - lo)
    fc, fd = obj(c), obj(d)
    for _ in range(200):
        if fc < fd:
            lo, c, fc = c, d, fd
            d = lo + phi * (hi - lo)
            fd = obj(d)
        else:
            hi, d, fd = d, c, fc
            c = hi - phi * (hi - lo)
            fc = obj(c)
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    t = 0.5 * (lo + hi)
    return obj(t)


def mcdiarmid_bound(spec: McDiarmidSpec, table: LipschitzTable, x: float,
                    side: str = "upper") -> TailBound:
    """exp(-(D^2/M^2) l*(x/D)) with the product and classical relaxations.

    D = sum w_k M_k and M^2 = sum (w_k M_k)^2; valid for x in [0, D].
    Guaranteed ordering: Young form <= product form <= exp(-2 x^2 / M^2).
    """
    w, mk = _weights(table, spec.m_k, "m_k")
    d_sum = float(np.dot(w, mk))
    m2 = float(np.dot(w * w, mk * mk))
    agg = {"D": d_sum, "M2": m2}
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    if x > d_sum:
        return _out_of_domain("mcdiarmid", x, side,
                              f"x = {x} exceeds D = {d_sum}; the bound is "
                              "stated on [0, D]", agg)
    if x == 0.0 or m2 == 0.0:
        return _finish("mcdiarmid", x, 1.0, side, agg,
                       {"product_form": 1.0, "classical": 1.0})
    # l* diverges as its argument reaches 1, so the Young form vanishes at x = D
    young = 0.0 if x == d_sum else math.exp(-(d_sum * d_sum / m2) * rio_ell_star(x / d_sum))
    # ((D - x)/D)^((2 D x - x^2)/M^2) in log space; 0^positive = 0 at x = D
    expo = (2.0 * d_sum * x - x * x) / m2
    product = 0.0 if x == d_sum else math.exp(expo * math.log((d_sum - x) / d_sum))
    classical = math.exp(-2.0 * x * x / m2)
    return _finish("mcdiarmid", x, young, side, agg,
                   {"product_form": product, "classical": classical})


# ---------------------------------------------------------------------------
# von Bahr-Esseen / weak moments


def von_bahr_esseen_norm(spec: PthMomentSpec, table: LipschitzTable) -> float:
    """||S_n||_p <= A(n,p)^{1/p} for p in [1, 2].

    A(n,p) = A_1(p) a_{n-1}(n-1)^p + 2^{2-p} sum_{k>=2} w_k^p A_k(p).
    """
    if not 1.0 <= spec.p <= 2.0:
        raise DomainError("von Bahr-Esseen needs p in [1, 2]")
    w, ak = _weights(table, spec.a_k, "a_k")
    total = ak[0] * w[0] ** spec.p
    if table.horizon > 1:
        total += 2.0 ** (2.0 - spec.p) * float(np.dot(w[1:] ** spec.p, ak[1:]))
    return float(total) ** (1.0 / spec.p)


def von_bahr_esseen_tail(spec: PthMomentSpec, table: LipschitzTable, x: float,
                         side: str = "two_sided") -> TailBound:
    """A(n, p) / x^p (a bound on P(|S_n| >= x), so two-sided by nature)."""
    a_np = von_bahr_esseen_norm(spec, table) ** spec.p
    agg = {"A_np": a_np, "p": spec.p}
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    raw = math.inf if x == 0 else a_np / x**spec.p
    value = min(1.0, raw)
    return TailBound(kind="von_bahr_esseen", x=float(x), value=value, side=side,
                     raw_value=raw, clamped=raw > 1.0, aggregates=agg)


def weak_vbe_tail(spec: WeakPthSpec, table: LipschitzTable, x: float,
                  side: str = "two_sided") -> TailBound:
    """C_p B(n,p)/x^p with C_p = 4p/(p-1) + 8/(2-p), p strictly inside (1, 2)."""
    if not 1.0 < spec.p < 2.0:
        return _out_of_domain("weak_von_bahr_esseen", x, side,
                              f"C_p diverges at p = {spec.p}; need p in (1, 2)")
    p = spec.p
    w, ak = _weights(table, spec.a_k, "a_k")
    b_np = float(np.dot(w**p, ak))
    c_p = 4.0 * p / (p - 1.0) + 8.0 / (2.0 - p)
    agg = {"B_np": b_np, "C_p": c_p, "p": p}
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    raw = math.inf if x == 0 else c_p * b_np / x**p
    if b_np == 0.0:
        raw = 0.0
    value = min(1.0, raw)
    return TailBound(kind="weak_von_bahr_esseen", x=float(x), value=value,
                     side=side, raw_value=raw, clamped=raw > 1.0, aggregates=agg)


# ---------------------------------------------------------------------------
# moment bounds


def mz_norm_bound(spec: PthMomentSpec, table: LipschitzTable) -> float:
    """||S_n||_p <= sqrt(a_{n-1}(n-1)^2 A_1^{2/p} + (p-1) sum_{k>=2} w_k^2 A_k^{2/p})."""
    if spec.p < 2.0:
        raise DomainError("Marcinkiewicz-Zygmund needs p >= 2")
    w, ak = _weights(table, spec.a_k, "a_k")
    total = w[0] ** 2 * ak[0] ** (2.0 / spec.p)
    if table.horizon > 1:
        total += (spec.p - 1.0) * float(np.dot(w[1:] ** 2, ak[1:] ** (2.0 / spec.p)))
    return math.sqrt(float(total))


_ROSENTHAL_GRID = 64


def rosenthal_constants(p: float, c: float) -> tuple[float, float]:
    """C1 = 60 c and C2 = 120 sqrt(c) e^{p/c} for c in [1, p]."""
    return 60.0 * c, 120.0 * math.sqrt(c) * math.exp(p / c)


def rosenthal_bound(spec: RosenthalSpec, table: LipschitzTable, p: float,
                    max_norm: float | None = None) -> float:
    """min over c in [1, p] of C1(c) sqrt(V) + C2(c) ||max_k w_k G_k||_p."""
    if p < 2.0:
        raise DomainError("Rosenthal needs p >= 2")
    v = aggregate_v(table, spec.v_k)
    mn = spec.max_norm if max_norm is None else max_norm
    best = math.inf
    for c in np.geomspace(1.0, p, _ROSENTHAL_GRID):
        c1, c2 = rosenthal_constants(p, float(c))
        best = min(best, c1 * math.sqrt(v) + c2 * mn)
    return float(best)


def rosenthal_weak_tail(spec: RosenthalSpec, table: LipschitzTable, p: float,
                        x: float, weak_max: float | None = None,
                        side: str = "two_sided") -> TailBound:
    """(C1 V^{p/2} + C2 ||max||_{w,p}^p) / x^p, constants minimized on the grid.

    The weak-variant constants are not pinned down by theory; the explicit
    (60c, 120 sqrt(c) e^{p/c}) pair is reused and the result is flagged
    constant-uncertain.
    """
    if p < 2.0:
        raise DomainError("weak Rosenthal needs p >= 2")
    v = aggregate_v(table, spec.v_k)
    wm = spec.weak_max if weak_max is None else weak_max
    best = math.inf
    for c in np.geomspace(1.0, p, _ROSENTHAL_GRID):
        c1, c2 = rosenthal_constants(p, float(c))
        best = min(best, c1 * v ** (p / 2.0) + c2 * wm**p)
    agg = {"V": v, "weak_max": wm, "p": p}
    if x < 0:
        raise DomainError("threshold x must be >= 0")
    raw = math.inf if x == 0 else best / x**p
    value = min(1.0, raw)
    return TailBound(kind="rosenthal_weak", x=float(x), value=value, side=side,
                     raw_value=raw, clamped=raw > 1.0, aggregates=agg,
                     reason="constant-uncertain: weak variant reuses the "
                            "explicit strong-form constants")
