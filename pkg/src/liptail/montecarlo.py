"""Seeded, block-parallel Monte-Carlo estimation and bound verification.

Replicates are partitioned into fixed-size blocks; each block draws from a
counter-based stream keyed by (master seed, block index, time index) and the
per-block partials are reduced in block order, so results are bit-identical
for any worker count.  Tail estimation is split-sample: a pilot half centers
the functional, the other half estimates tail frequencies, and the pilot's
standard error is folded into the thresholds when comparing against bounds so
centering noise cannot produce spurious violations.

A threshold "fails" verification only when the one-sided lower confidence
limit of the empirical tail exceeds the bound (evidence of violation at the
stated confidence); the stricter certificate comparison upper-CI <= bound is
reported alongside, but deep thresholds where the bound drops below the
resolution floor of the replicate budget would otherwise flag unavoidably.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import ndtri

from . import bounds as tb
from . import rng
from .errors import DomainError, InapplicableBoundError, SpecError, UnsupportedFamilyError
from .functionals import FunctionalSpec
from .processes import (
    GDescription,
    ProcessSpec,
    c2_supported,
    contraction_certificate,
    simulate_block,
    innovation_replacement_sup,
    state_bound,
)
from .profiles import LipschitzTable, build_lipschitz_table

BLOCK_SIZE = 8192
MIN_REPLICATES = 1000
PILOT_SE_FOLD = 3.0


# ---------------------------------------------------------------------------
# binomial confidence limits


def wilson_upper(successes: int, trials: int, level: float) -> float:
    """One-sided Wilson upper limit; well behaved at zero counts."""
    if trials < 1:
        raise DomainError("need at least one trial")
    if successes >= trials:
        return 1.0
    z = float(ndtri(level))
    phat = successes / trials
    z2 = z * z
    center = phat + z2 / (2 * trials)
    spread = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials))
    return min(1.0, (center + spread) / (1 + z2 / trials))


def wilson_lower(successes: int, trials: int, level: float) -> float:
    if trials < 1:
        raise DomainError("need at least one trial")
    if successes <= 0:
        return 0.0
    z = float(ndtri(level))
    phat = successes / trials
    z2 = z * z
    center = phat + z2 / (2 * trials)
    spread = z * math.sqrt(phat * (1 - phat) / trials + z2 / (4 * trials * trials))
    return max(0.0, (center - spread) / (1 + z2 / trials))


# ---------------------------------------------------------------------------
# block scheduling


def _blocks(start_row: int, rows: int):
    """Fixed partition into (block_index, row_count) pieces of BLOCK_SIZE."""
    out = []
    offset = 0
    while offset < rows:
        take = min(BLOCK_SIZE, rows - offset)
        out.append((start_row // BLOCK_SIZE + offset // BLOCK_SIZE, take))
        offset += take
    return out


def _run_blocks(fn, blocks, threads):
    """Maps fn over blocks, returning results in block order regardless of
    scheduling."""
    if threads is None or threads <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, blocks))


# ---------------------------------------------------------------------------
# empirical tail


@dataclass(frozen=True)
class EmpiricalEstimate:
    x_grid: tuple[float, ...]
    tail_freq: tuple[float, ...]
    upper_ci: tuple[float, ...]
    lower_ci: tuple[float, ...]
    replicates: int
    pilot_replicates: int
    center: float
    center_se: float
    ci_level: float
    truncations: int = 0

    def to_config(self) -> dict:
        return {
            "x_grid": list(self.x_grid), "tail_freq": list(self.tail_freq),
            "upper_ci": list(self.upper_ci), "lower_ci": list(self.lower_ci),
            "replicates": self.replicates, "pilot_replicates": self.pilot_replicates,
            "center": self.center, "center_se": self.center_se,
            "ci_level": self.ci_level, "truncations": self.truncations,
        }


def empirical_tail(spec: ProcessSpec, f: FunctionalSpec, n: int, x_grid,
                   replicates: int, seed: int, ci_level: float = 0.999,
                   threads: int | None = None) -> EmpiricalEstimate:
    """Split-sample tail estimate of P(f(X) - E f(X) >= x) over x_grid."""
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size == 0 or np.any(np.diff(x) < 0) or np.any(x <= 0):
        raise SpecError("x_grid must be a sorted vector of positive thresholds")
    if replicates < MIN_REPLICATES:
        raise SpecError(f"need at least {MIN_REPLICATES} replicates")
    pilot_n = replicates // 2
    main_n = replicates - pilot_n

    def pilot_block(b):
        idx, rows = b
        values, clamped, _ = simulate_block(spec, n, rows, seed, idx)
        s = f.evaluate(values)
        return float(s.sum()), float(np.dot(s, s)), rows, clamped

    pilot = _run_blocks(pilot_block, _blocks(0, pilot_n), threads)
    total = math.fsum(p[0] for p in pilot)
    total_sq = math.fsum(p[1] for p in pilot)
    clamps = sum(p[3] for p in pilot)
    center = total / pilot_n
    var = max(0.0, (total_sq - pilot_n * center * center) / max(1, pilot_n - 1))
    center_se = math.sqrt(var / pilot_n)

    main_start = (pilot_n + BLOCK_SIZE - 1) // BLOCK_SIZE * BLOCK_SIZE

    def main_block(b):
        idx, rows = b
        values, clamped, _ = simulate_block(spec, n, rows, seed, idx)
        s = f.evaluate(values) - center
        return (s[:, None] >= x[None, :]).sum(axis=0).astype(np.int64), clamped

    main = _run_blocks(main_block, _blocks(main_start, main_n), threads)
    counts = np.sum([m[0] for m in main], axis=0)
    clamps += sum(m[1] for m in main)

    freq = counts / main_n
    upper = np.array([wilson_upper(int(k), main_n, ci_level) for k in counts])
    lower = np.array([wilson_lower(int(k), main_n, ci_level) for k in counts])
    return EmpiricalEstimate(
        x_grid=tuple(x.tolist()), tail_freq=tuple(freq.tolist()),
        upper_ci=tuple(upper.tolist()), lower_ci=tuple(lower.tolist()),
        replicates=main_n, pilot_replicates=pilot_n, center=center,
        center_se=center_se, ci_level=ci_level, truncations=clamps,
    )


# ---------------------------------------------------------------------------
# empirical moments


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    lower: float
    upper: float
    p: float
    replicates: int

    def to_config(self) -> dict:
        return {"value": self.value, "lower": self.lower, "upper": self.upper,
                "p": self.p, "replicates": self.replicates}


_BOOTSTRAP_RESAMPLES = 200


def empirical_moment(spec: ProcessSpec, f: FunctionalSpec, n: int, p: float,
                     replicates: int, seed: int, ci_level: float = 0.99,
                     threads: int | None = None) -> MomentEstimate:
    """Plug-in ||S_n||_p with a bootstrap confidence interval (200 resamples)."""
    if p < 1:
        raise SpecError("moment order p must be >= 1")
    if replicates < MIN_REPLICATES:
        raise SpecError(f"need at least {MIN_REPLICATES} replicates")
    pilot_n = replicates // 2
    main_n = replicates - pilot_n

    def run(b):
        idx, rows = b
        values, _, _ = simulate_block(spec, n, rows, seed, idx)
        return f.evaluate(values)

    pilot_vals = np.concatenate(_run_blocks(run, _blocks(0, pilot_n), threads))
    center = float(pilot_vals.mean())
    main_start = (pilot_n + BLOCK_SIZE - 1) // BLOCK_SIZE * BLOCK_SIZE
    s = np.concatenate(_run_blocks(run, _blocks(main_start, main_n), threads)) - center

    powered = np.abs(s) ** p
    value = float(powered.mean() ** (1.0 / p))
    gen = rng.stream(seed, rng.BOOTSTRAP)
    idx = gen.integers(0, main_n, size=(_BOOTSTRAP_RESAMPLES, main_n))
    stats = powered[idx].mean(axis=1) ** (1.0 / p)
    alpha = 1.0 - ci_level
    lower, upper = np.quantile(stats, [alpha / 2, 1.0 - alpha / 2])
    return MomentEstimate(value=value, lower=float(lower), upper=float(upper),
                          p=p, replicates=main_n)


def estimate_weak_norm(samples, p: float, ci_level: float | None = None) -> float:
    """Empirical weak moment sup_x x^p P(Z >= x) over the sample grid.

    With a ci_level, each grid tail is replaced by its Wilson upper limit so
    the norm estimate is biased upward (conservative).
    """
    s = np.sort(np.asarray(samples, dtype=float))
    if s.size == 0:
        raise SpecError("empty sample")
    if p <= 0:
        raise SpecError("weak norm order p must be > 0")
    m = s.size
    tail_counts = m - np.arange(m)  # count of samples >= s[i]
    if ci_level is None:
        tails = tail_counts / m
    else:
        tails = np.array([wilson_upper(int(k), m, ci_level) for k in tail_counts])
    vals = np.where(s > 0, s, 0.0) ** p * tails
    return float(max(0.0, vals.max()))


# ---------------------------------------------------------------------------
# dominating-constant estimation


def _mc_upper(values: np.ndarray, level: float) -> float:
    """One-sided normal-approximation upper limit of a mean."""
    mean = float(values.mean())
    if values.size < 2:
        return mean
    se = float(values.std(ddof=1) / math.sqrt(values.size))
    return mean + float(ndtri(level)) * se


_SUBGAUSSIAN_RATIO = max(
    math.exp((math.log(2.0) + (l / 2.0) * math.log(l - 1.0) - math.lgamma(l + 1.0))
             / (l - 2.0))
    for l in range(3, 200)
)


def _g_moment(desc: GDescription, fn, samples: int, seed: int, level: float,
              tag: int):
    """(value, Provenance): exact for discrete dominating laws, MC upper limit
    otherwise."""
    exact = desc.moment(fn)
    if exact is not None:
        return exact, tb.Provenance("analytic")
    gen = rng.stream(seed, rng.CONSTANTS, tag)
    draws = desc.sample(gen, samples)
    return _mc_upper(fn(draws), level), tb.Provenance("mc_upper_ci", level=level,
                                                      samples=samples)


def _h_matrix(spec: ProcessSpec, n: int, samples: int, seed: int,
              threads: int | None = None) -> np.ndarray:
    """Realized past-dependent dominating values H_k along simulated paths."""
    rows_total = max(1, samples // n)

    def run(b):
        idx, rows = b
        _, _, h = simulate_block(spec, n, rows, seed, idx, record_h=True)
        return h

    parts = _run_blocks(run, _blocks(0, rows_total), threads)
    return np.concatenate(parts, axis=0)


def estimate_dominating_constants(spec: ProcessSpec, kind: str, n: int,
                                  samples: int, seed: int,
                                  ci_level: float = 0.99, *,
                                  t0: float = 1.0, p: float | None = None,
                                  alpha: float | None = None,
                                  threads: int | None = None):
    """Builds the dominating-constant record a bound kind needs.

    Innovation-only constants (bernstein, cramer, hoeffding, moment kinds)
    come from the dominating variable G: exact enumeration for discrete laws,
    otherwise seeded Monte-Carlo using the upper limit of a one-sided
    confidence interval at ci_level, so downstream bounds stay conservative.
    Past-dependent kinds (subgaussian, and semiexp_h for families without the
    innovation-replacement property) are estimated along simulated
    trajectories and flagged trajectory-dependent.
    """
    if kind in ("bernstein", "hoeffding", "cramer", "semiexp_g", "pth_moment",
                "weak_pth", "rosenthal"):
        desc = GDescription(spec)

    if kind == "bernstein":
        m = desc.sup()
        if m is None:
            raise UnsupportedFamilyError(
                "bernstein constants need a bounded dominating variable")
        v, prov = _g_moment(desc, lambda g: g * g, samples, seed, ci_level, 0)
        return tb.BernsteinSpec(m=m, v_k=(v,) * n,
                                provenance={"m": tb.Provenance("analytic"), "v_k": prov})
    if kind == "hoeffding":
        m = desc.sup()
        if m is None:
            raise UnsupportedFamilyError(
                "hoeffding constants need a bounded dominating variable")
        v, prov = _g_moment(desc, lambda g: g * g, samples, seed, ci_level, 0)
        return tb.BoundedSpec(m_k=(m,) * n, v_k=(v,) * n,
                              provenance={"m_k": tb.Provenance("analytic"), "v_k": prov})
    if kind == "cramer":
        k, prov = _g_moment(desc, lambda g: np.exp(t0 * g), samples, seed, ci_level, 1)
        return tb.CramerSpec(t0=t0, k_k=(max(1.0, k),) * n, provenance={"k_k": prov})
    if kind == "semiexp_g":
        if p is None:
            raise SpecError("semiexp_g estimation needs the exponent p")
        k, prov = _g_moment(desc, lambda g: g * g * np.exp(g**p), samples, seed,
                            ci_level, 2)
        return tb.SemiexpGSpec(p=p, k_k=(k,) * n, provenance={"k_k": prov})
    if kind == "pth_moment":
        if p is None:
            raise SpecError("pth_moment estimation needs p")
        a, prov_a = _g_moment(desc, lambda g: g**p, samples, seed, ci_level, 3)
        v, prov_v = _g_moment(desc, lambda g: g * g, samples, seed, ci_level, 0)
        return tb.PthMomentSpec(p=p, a_k=(a,) * n, v_k=(v,) * n,
                                provenance={"a_k": prov_a, "v_k": prov_v})
    if kind == "weak_pth":
        if p is None:
            raise SpecError("weak_pth estimation needs p")
        at = desc.atoms()
        if at is not None:
            vals, probs = at
            order = np.argsort(vals)
            vals, probs = vals[order], probs[order]
            tails = np.cumsum(probs[::-1])[::-1]  # P(G >= v)
            a = float(np.max(np.where(vals > 0, vals, 0.0) ** p * tails))
            prov = tb.Provenance("analytic")
        else:
            gen = rng.stream(seed, rng.CONSTANTS, 4)
            a = estimate_weak_norm(desc.sample(gen, samples), p, ci_level)
            prov = tb.Provenance("mc_upper_ci", level=ci_level, samples=samples)
        return tb.WeakPthSpec(p=p, a_k=(a,) * n, provenance={"a_k": prov})
    if kind == "rosenthal":
        v, prov = _g_moment(desc, lambda g: g * g, samples, seed, ci_level, 0)
        return tb.RosenthalSpec(v_k=(v,) * n, p=p if p is not None else 2.0,
                                provenance={"v_k": prov})
    if kind == "mcdiarmid":
        m = innovation_replacement_sup(spec)
        return tb.McDiarmidSpec(m_k=(m,) * n,
                                provenance={"m_k": tb.Provenance("analytic")})
    if kind == "semiexp_h":
        if alpha is None:
            raise SpecError("semiexp_h estimation needs alpha")
        q = 2.0 * alpha / (1.0 - alpha)
        if c2_supported(spec):
            desc = GDescription(spec)
            c1, prov = _g_moment(desc, lambda g: np.exp(g**q), samples, seed,
                                 ci_level, 5)
            return tb.SemiexpHSpec(alpha=alpha, c1=c1, provenance={"c1": prov})
        h = _h_matrix(spec, n, samples, seed, threads)
        c1 = _mc_upper(np.exp(h.ravel() ** q), ci_level)
        prov = tb.Provenance("mc_upper_ci", level=ci_level, samples=h.size,
                             note="trajectory-dependent")
        return tb.SemiexpHSpec(alpha=alpha, c1=c1, provenance={"c1": prov})
    if kind == "subgaussian":
        h = _h_matrix(spec, n, samples, seed, threads)
        m = h.shape[0]
        h2 = h * h
        means = h2.mean(axis=0)
        ses = h2.std(axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.zeros(n)
        h2_k = means + float(ndtri(ci_level)) * ses
        hmax = _h_sup(spec)
        eps = _SUBGAUSSIAN_RATIO * hmax
        prov = tb.Provenance("mc_upper_ci", level=ci_level, samples=h.size,
                             note="trajectory-dependent")
        return tb.SubgaussianSpec(epsilon=eps, h2_k=tuple(h2_k.tolist()),
                                  provenance={"h2_k": prov,
                                              "epsilon": tb.Provenance("analytic")})
    raise SpecError(f"unknown dominating-constant kind {kind!r}")


def _h_sup(spec: ProcessSpec) -> float:
    """Analytic almost-sure bound on the past-dependent dominating values."""
    if c2_supported(spec):
        top = GDescription(spec).sup()
        if top is not None:
            return top
    if spec.family == "arch_type":
        b = state_bound(spec)
        if b is None:
            raise UnsupportedFamilyError("arch_type state is unbounded here")
        L = spec.coeff_length_for_tol(1e-15)
        s2 = math.fsum(spec.coeff_value(i) ** 2 for i in range(1, L + 1))
        vol_max = math.sqrt(s2 * b * b + spec.arch_floor**2)
        return vol_max * spec.innovation.mad_sup()
    raise UnsupportedFamilyError(
        f"no analytic dominating supremum for family {spec.family}")


def _max_term_draws(spec: ProcessSpec, table: LipschitzTable, samples: int,
                    seed: int) -> np.ndarray:
    desc = GDescription(spec)
    n = table.horizon
    gen = rng.stream(seed, rng.CONSTANTS, 6)
    rows = max(2, samples // n)
    g = desc.sample(gen, rows * n).reshape(rows, n)
    return (g * table.reversed_diagonal[None, :]).max(axis=1)


def estimate_max_term_norm(spec: ProcessSpec, table: LipschitzTable, p: float,
                           samples: int, seed: int, ci_level: float = 0.99) -> float:
    """Upper CI of || max_k a_{n-k}(n-k) G_k ||_p over seeded joint draws."""
    m = _max_term_draws(spec, table, samples, seed)
    return _mc_upper(m**p, ci_level) ** (1.0 / p)


def estimate_max_term_weak(spec: ProcessSpec, table: LipschitzTable, p: float,
                           samples: int, seed: int, ci_level: float = 0.99) -> float:
    """Conservative weak-norm estimate of the maximal weighted increment."""
    m = _max_term_draws(spec, table, samples, seed)
    return estimate_weak_norm(m, p, ci_level) ** (1.0 / p)


# ---------------------------------------------------------------------------
# bound verification


_G_BASED_KINDS = ("bernstein", "cramer", "hoeffding", "fuk_nagaev_pth",
                  "semiexp_g", "mcdiarmid", "rosenthal_weak")
_H_BASED_KINDS = ("subgaussian", "semiexp_h", "von_bahr_esseen", "weak_von_bahr_esseen")
VERIFIABLE_KINDS = _G_BASED_KINDS + _H_BASED_KINDS


def evaluate_bound(kind: str, dominating, table: LipschitzTable, x: float,
                   side: str = "upper") -> tb.TailBound:
    """Dispatches a bound kind to its evaluator."""
    if kind == "bernstein":
        return tb.bernstein_bound(dominating, table, x, side)
    if kind == "subgaussian":
        return tb.subgaussian_bound(dominating, table, x, side)
    if kind == "cramer":
        return tb.cramer_bound(dominating, table, x, side)
    if kind == "semiexp_g":
        return tb.semiexp_g_bound(dominating, table, x, side)
    if kind == "semiexp_h":
        return tb.semiexp_h_bound(dominating, table, x, side)
    if kind == "hoeffding":
        return tb.hoeffding_bound(dominating, table, x, side)
    if kind == "fuk_nagaev_pth":
        return tb.fuk_nagaev_pth(dominating, table, x)
    if kind == "mcdiarmid":
        return tb.mcdiarmid_bound(dominating, table, x, side)
    if kind == "von_bahr_esseen":
        return tb.von_bahr_esseen_tail(dominating, table, x)
    if kind == "weak_von_bahr_esseen":
        return tb.weak_vbe_tail(dominating, table, x)
    if kind == "rosenthal_weak":
        return tb.rosenthal_weak_tail(dominating, table, dominating_p(dominating), x)
    raise SpecError(f"unknown bound kind {kind!r}")


def dominating_p(dominating) -> float:
    p = getattr(dominating, "p", None)
    if p is None:
        raise SpecError("this bound kind needs a moment order p on its constants")
    return float(p)


@dataclass(frozen=True)
class VerificationReport:
    bound_kind: str
    spec_digest: str
    seed: int
    horizon: int
    x_grid: tuple[float, ...]
    empirical_upper: tuple[float, ...]
    empirical_lower: tuple[float, ...]
    tail_freq: tuple[float, ...]
    theoretical: tuple[float, ...]
    passes: tuple[bool, ...]       # no evidenced violation at the CI level
    certified: tuple[bool, ...]    # strict upper-CI <= bound comparison
    coverage: float
    certified_fraction: float
    center: float
    center_se: float
    ci_level: float
    experimental: bool
    aggregates: Mapping[str, float] = field(default_factory=dict)
    provenance: Mapping[str, dict] = field(default_factory=dict)
    validity: tuple[str, ...] = ()

    def to_config(self) -> dict:
        # out-of-domain thresholds carry NaN bounds; strict JSON wants null
        theo = [t if math.isfinite(t) else None for t in self.theoretical]
        return {
            "bound_kind": self.bound_kind, "spec_digest": self.spec_digest,
            "seed": self.seed, "horizon": self.horizon,
            "x_grid": list(self.x_grid),
            "empirical_upper": list(self.empirical_upper),
            "empirical_lower": list(self.empirical_lower),
            "tail_freq": list(self.tail_freq),
            "theoretical": theo,
            "passes": list(self.passes), "certified": list(self.certified),
            "coverage": self.coverage,
            "certified_fraction": self.certified_fraction,
            "center": self.center, "center_se": self.center_se,
            "ci_level": self.ci_level, "experimental": self.experimental,
            "aggregates": dict(self.aggregates),
            "provenance": dict(self.provenance),
            "validity": list(self.validity),
        }


def verify_bound(spec: ProcessSpec, f: FunctionalSpec, n: int, bound_kind: str,
                 dominating, x_grid, replicates: int, seed: int,
                 ci_level: float = 0.999, threads: int | None = None,
                 estimate: EmpiricalEstimate | None = None) -> VerificationReport:
    """Compares the empirical tail of S_n against one theoretical bound.

    The bound is evaluated at x - 3 SE(pilot center) so centering noise keeps
    the comparison conservative.  A threshold passes unless the empirical
    lower confidence limit exceeds the bound; the certificate flag records the
    stricter upper-CI comparison.
    """
    if bound_kind not in VERIFIABLE_KINDS:
        raise SpecError(f"unknown bound kind {bound_kind!r}")
    if bound_kind in _G_BASED_KINDS and not c2_supported(spec):
        raise InapplicableBoundError(
            f"{bound_kind} needs the innovation-only dominating variable, "
            f"which {spec.family} does not admit; use one of {_H_BASED_KINDS}"
        )
    profile = contraction_certificate(spec, horizon=n)
    table = build_lipschitz_table(profile, n)
    est = estimate if estimate is not None else empirical_tail(
        spec, f, n, x_grid, replicates, seed, ci_level, threads)

    # some bounds are stated in rescaled threshold units
    x_scale = 1.0
    if bound_kind == "semiexp_h":
        x_scale = float(n)  # per-step threshold
    elif bound_kind == "subgaussian":
        w = table.reversed_diagonal
        vn = math.sqrt(float(np.dot(w * w, np.asarray(dominating.h2_k, dtype=float))))
        if vn == 0.0:
            raise InapplicableBoundError("subgaussian scale V_n is zero")
        x_scale = vn  # threshold expressed in V_n units

    theoretical, passes, certified, validity = [], [], [], []
    aggregates: dict = {}
    for x, up, lo in zip(est.x_grid, est.upper_ci, est.lower_ci):
        x_eff = max(x - PILOT_SE_FOLD * est.center_se, np.nextafter(0.0, 1.0))
        result = evaluate_bound(bound_kind, dominating, table, x_eff / x_scale)
        if result.validity != "ok":
            theoretical.append(float("nan"))
            passes.append(False)
            certified.append(False)
            validity.append(result.validity)
            continue
        aggregates = dict(result.aggregates)
        theoretical.append(result.value)
        passes.append(not lo > result.value)
        certified.append(up <= result.value)
        validity.append("ok")

    prov = {}
    for name, pv in getattr(dominating, "provenance", {}).items():
        prov[name] = pv.to_config() if isinstance(pv, tb.Provenance) else dict(pv)
    return VerificationReport(
        bound_kind=bound_kind, spec_digest=spec.digest(), seed=int(seed),
        horizon=n, x_grid=est.x_grid, empirical_upper=est.upper_ci,
        empirical_lower=est.lower_ci, tail_freq=est.tail_freq,
        theoretical=tuple(theoretical), passes=tuple(passes),
        certified=tuple(certified),
        coverage=float(np.mean(passes)) if passes else 1.0,
        certified_fraction=float(np.mean(certified)) if certified else 1.0,
        center=est.center, center_se=est.center_se, ci_level=est.ci_level,
        experimental=profile.experimental, aggregates=aggregates,
        provenance=prov, validity=tuple(validity),
    )
