"""Exact martingale decomposition on small finite-alphabet instances.

For an instance with horizon n and per-step innovation alphabets we enumerate
every innovation path, compute the conditional expectations

    g_k(X_1..X_k) = E[f(X_1..X_n) | X_1..X_k]

by exact weighted grouping, and form the increments d_k = g_k - g_{k-1}.
This gives a ground-truth check of three structural facts:

  * telescoping: sum_k d_k = f - E[f] on every path,
  * the martingale property: E[d_k | atom of level k-1] = 0,
  * the increment domination |d_k| <= a_{n-k}(n-k) * G_k(eps_k) and the
    per-coordinate Lipschitz property of g_k, with weights from the
    instance's contraction profile.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rng
from .errors import PathCountError, SpecError, UnsupportedFamilyError
from .functionals import FunctionalSpec
from .profiles import ContractionProfile, LipschitzTable

MAX_PATHS = 10**6
MAX_HORIZON = 8
_PROB_TOL = 1e-12


@dataclass(frozen=True)
class FiniteInstance:
    """Small instance amenable to exact enumeration.

    alphabets[k-1] lists (value, probability) pairs for the step-k innovation.
    step_fn(k, past_rev, eps) applies the update map at step k; past_rev has
    the most recent value first and already includes the fixed pre-history.
    additive_innovation marks maps of the form h(past) + eps, for which the
    innovation-only dominating variable G applies.
    """

    horizon: int
    alphabets: tuple[tuple[tuple[float, float], ...], ...]
    step_fn: Callable
    initial_past: tuple[float, ...]
    profile: ContractionProfile
    functional: FunctionalSpec
    additive_innovation: bool = True
    label: str = ""

    def __post_init__(self):
        if not 1 <= self.horizon <= MAX_HORIZON:
            raise SpecError(f"horizon must be in [1, {MAX_HORIZON}], got {self.horizon}")
        if len(self.alphabets) != self.horizon:
            raise SpecError("need one innovation alphabet per time index")
        count = 1
        for k, alpha in enumerate(self.alphabets, start=1):
            total = math.fsum(p for _, p in alpha)
            if abs(total - 1.0) > _PROB_TOL:
                raise SpecError(f"alphabet {k} probabilities sum to {total}, not 1")
            if any(p < 0 for _, p in alpha):
                raise SpecError(f"alphabet {k} has negative probabilities")
            count *= len(alpha)
        if count > MAX_PATHS:
            raise PathCountError(f"{count} paths exceed the {MAX_PATHS} budget")

    @property
    def path_count(self) -> int:
        out = 1
        for alpha in self.alphabets:
            out *= len(alpha)
        return out

    def innovation_mad(self, k: int, y) -> np.ndarray:
        """G_k(y) = sum_j p_j |y - v_j| for the step-k alphabet."""
        vals = np.array([v for v, _ in self.alphabets[k - 1]])
        probs = np.array([p for _, p in self.alphabets[k - 1]])
        y = np.asarray(y, dtype=float)
        return (probs[None, :] * np.abs(y[..., None] - vals[None, :])).sum(axis=-1)


@dataclass(frozen=True)
class DecompositionReport:
    """Per-path decomposition values plus worst-case structural violations."""

    path_count: int
    weights: np.ndarray          # (P,)
    states: np.ndarray           # (P, n) realized X values
    eps_values: np.ndarray       # (P, n)
    g: np.ndarray                # (P, n+1), g[:, k] = g_k along the path
    d: np.ndarray                # (P, n), d[:, k-1] = d_k
    max_conditional_mean: float
    max_telescoping_gap: float
    domination_ratio: float | None = None
    lipschitz_ratio: float | None = None

    def to_json(self) -> str:
        payload = {
            "path_count": self.path_count,
            "max_conditional_mean": self.max_conditional_mean,
            "max_telescoping_gap": self.max_telescoping_gap,
            "domination_ratio": self.domination_ratio,
            "lipschitz_ratio": self.lipschitz_ratio,
            "weights": self.weights.tolist(),
            "states": self.states.tolist(),
            "eps_values": self.eps_values.tolist(),
            "g": self.g.tolist(),
            "d": self.d.tolist(),
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def _enumerate_paths(instance: FiniteInstance):
    """(eps_values, weights, states, f) over the full product alphabet."""
    n = instance.horizon
    sizes = [len(a) for a in instance.alphabets]
    P = instance.path_count
    idx = np.unravel_index(np.arange(P), sizes)
    eps = np.empty((P, n))
    w = np.ones(P)
    for k in range(n):
        vals = np.array([v for v, _ in instance.alphabets[k]])
        probs = np.array([p for _, p in instance.alphabets[k]])
        eps[:, k] = vals[idx[k]]
        w = w * probs[idx[k]]
    states = np.empty((P, n))
    pre = np.tile(np.asarray(instance.initial_past, dtype=float), (P, 1))
    for k in range(1, n + 1):
        past_rev = np.hstack([states[:, k - 2::-1], pre]) if k > 1 else pre
        states[:, k - 1] = instance.step_fn(k, past_rev, eps[:, k - 1])
    f = instance.functional.evaluate(states)
    return eps, w, states, f


def _atom_labels(states: np.ndarray, k: int) -> np.ndarray:
    """Integer labels of the sigma(X_1..X_k) atoms (exact float grouping)."""
    if k == 0:
        return np.zeros(states.shape[0], dtype=np.int64)
    # + 0.0 normalizes -0.0 so bit-level grouping matches value equality
    key = (states[:, :k] + 0.0).copy().view(np.int64).reshape(states.shape[0], k)
    _, labels = np.unique(key, axis=0, return_inverse=True)
    return labels


def enumerate_decomposition(instance: FiniteInstance,
                            table: LipschitzTable | None = None) -> DecompositionReport:
    """Exact decomposition by full path enumeration and atom grouping.

    When a weight table is supplied the domination and Lipschitz ratios are
    verified as part of the report.
    """
    n = instance.horizon
    eps, w, states, f = _enumerate_paths(instance)
    P = len(w)

    g = np.empty((P, n + 1))
    g[:, 0] = float(np.dot(w, f))
    labels_prev = np.zeros(P, dtype=np.int64)
    max_cond = 0.0
    for k in range(1, n + 1):
        labels = _atom_labels(states, k)
        wf = np.bincount(labels, weights=w * f)
        wsum = np.bincount(labels, weights=w)
        g[:, k] = (wf / wsum)[labels]
        # martingale property on every level-(k-1) atom
        d_k = g[:, k] - g[:, k - 1]
        num = np.bincount(labels_prev, weights=w * d_k)
        den = np.bincount(labels_prev, weights=w)
        max_cond = max(max_cond, float(np.max(np.abs(num / den))))
        labels_prev = labels
    d = np.diff(g, axis=1)
    telescope = float(np.max(np.abs(d.sum(axis=1) - (f - g[:, 0]))))

    dom = lip = None
    if table is not None:
        dom = verify_increment_domination(instance, table, _precomputed=(eps, d))
        lip = verify_g_lipschitz(instance, table)
    return DecompositionReport(
        path_count=P, weights=w, states=states, eps_values=eps, g=g, d=d,
        max_conditional_mean=max_cond, max_telescoping_gap=telescope,
        domination_ratio=dom, lipschitz_ratio=lip,
    )


def verify_increment_domination(instance: FiniteInstance, table: LipschitzTable,
                                _precomputed=None) -> float:
    """max over paths and k of |d_k| / (a_{n-k}(n-k) G_k(eps_k)); 0/0 -> 0.

    Requires maps with additive innovations (the innovation-only domination
    does not hold otherwise).
    """
    if not instance.additive_innovation:
        raise UnsupportedFamilyError(
            "instance maps are not additive in the innovation; the "
            "innovation-only domination does not apply"
        )
    if table.horizon != instance.horizon:
        raise SpecError("table horizon does not match the instance")
    n = instance.horizon
    if _precomputed is None:
        eps, w, states, f = _enumerate_paths(instance)
        g = np.empty((len(w), n + 1))
        g[:, 0] = float(np.dot(w, f))
        for k in range(1, n + 1):
            labels = _atom_labels(states, k)
            wf = np.bincount(labels, weights=w * f)
            wsum = np.bincount(labels, weights=w)
            g[:, k] = (wf / wsum)[labels]
        d = np.diff(g, axis=1)
    else:
        eps, d = _precomputed
    worst = 0.0
    for k in range(1, n + 1):
        cap = table.diagonal[n - k] * instance.innovation_mad(k, eps[:, k - 1])
        num = np.abs(d[:, k - 1])
        ratio = np.where(num == 0.0, 0.0, num / np.where(cap == 0.0, np.nan, cap))
        ratio = np.where(np.isnan(ratio), np.inf, ratio)
        worst = max(worst, float(ratio.max()))
    return worst


def conditional_value(instance: FiniteInstance, prefix: np.ndarray) -> np.ndarray:
    """g_k evaluated at arbitrary prefixes (Q, k) by enumerating the future."""
    prefix = np.atleast_2d(np.asarray(prefix, dtype=float))
    Q, k = prefix.shape
    n = instance.horizon
    if k == n:
        return instance.functional.evaluate(prefix)
    sizes = [len(a) for a in instance.alphabets[k:]]
    F = int(np.prod(sizes))
    idx = np.unravel_index(np.arange(F), sizes)
    eps = np.empty((F, n - k))
    w = np.ones(F)
    for j in range(n - k):
        vals = np.array([v for v, _ in instance.alphabets[k + j]])
        probs = np.array([p for _, p in instance.alphabets[k + j]])
        eps[:, j] = vals[idx[j]]
        w = w * probs[idx[j]]
    # expand prefixes against every future innovation path
    states = np.empty((Q * F, n))
    states[:, :k] = np.repeat(prefix, F, axis=0)
    eps_full = np.tile(eps, (Q, 1))
    pre = np.tile(np.asarray(instance.initial_past, dtype=float), (Q * F, 1))
    for step_k in range(k + 1, n + 1):
        past_rev = np.hstack([states[:, step_k - 2::-1], pre]) if step_k > 1 else pre
        states[:, step_k - 1] = instance.step_fn(step_k, past_rev, eps_full[:, step_k - k - 1])
    f = instance.functional.evaluate(states).reshape(Q, F)
    return f @ w


def verify_g_lipschitz(instance: FiniteInstance, table: LipschitzTable, *,
                       atoms_per_level: int = 12, deltas=(0.5, -0.37),
                       seed: int = 0) -> float:
    """Worst ratio of measured g_k increments to their table-weighted budget.

    Perturbs realized prefixes coordinate by coordinate (plus one random
    multi-coordinate perturbation per prefix) and compares |g_k(x') - g_k(x)|
    against sum_l a_{n-k}(n-l) |x_l - x'_l|.
    """
    if table.horizon != instance.horizon:
        raise SpecError("table horizon does not match the instance")
    n = instance.horizon
    _, w, states, _ = _enumerate_paths(instance)
    gen = rng.stream(seed, rng.ORACLE)
    worst = 0.0
    for k in range(1, n + 1):
        prefixes = np.unique(states[:, :k] + 0.0, axis=0)
        if len(prefixes) > atoms_per_level:
            pick = gen.choice(len(prefixes), size=atoms_per_level, replace=False)
            prefixes = prefixes[pick]
        base = conditional_value(instance, prefixes)
        weights = np.array([table.weight(n - k, n - l) for l in range(1, k + 1)])
        for l in range(1, k + 1):
            for dh in deltas:
                shifted = prefixes.copy()
                shifted[:, l - 1] += dh
                gap = np.abs(conditional_value(instance, shifted) - base)
                worst = max(worst, float((gap / (weights[l - 1] * abs(dh))).max()))
        # one random multi-coordinate perturbation per prefix batch
        bump = gen.uniform(-0.5, 0.5, size=prefixes.shape)
        budget = (weights * np.abs(bump)).sum(axis=1)
        gap = np.abs(conditional_value(instance, prefixes + bump) - base)
        ok = budget > 0
        if ok.any():
            worst = max(worst, float((gap[ok] / budget[ok]).max()))
    return worst


# ---------------------------------------------------------------------------
# instance builders


def memory_one_instance(horizon, coeff, lag, alphabets, initial_past=None,
                        functional=None, label="memory_one"):
    """X_k = coeff * X_{k-lag} + eps_k with a fixed lag (pre-history padded)."""
    if lag < 1:
        raise SpecError("lag must be >= 1")
    pre = tuple(initial_past) if initial_past is not None else (0.0,) * lag
    if len(pre) < lag:
        raise SpecError(f"pre-history must cover the lag ({lag})")

    def step_fn(k, past_rev, eps):
        return coeff * past_rev[:, lag - 1] + eps

    profile_coeffs = [0.0] * lag
    profile_coeffs[lag - 1] = abs(coeff)
    return FiniteInstance(
        horizon=horizon, alphabets=tuple(tuple(a) for a in alphabets),
        step_fn=step_fn, initial_past=pre,
        profile=ContractionProfile(tuple(profile_coeffs)),
        functional=functional or FunctionalSpec("sum"), label=label,
    )


def mean_field_instance(horizon, coeffs, alphabets, response="tanh",
                        response_scale=1.0, initial_past=None, functional=None,
                        label="mean_field"):
    """X_k = r(sum_i a_i X_{k-i}) + eps_k with a 1-Lipschitz response."""
    coeffs = np.asarray(coeffs, dtype=float)
    pre = tuple(initial_past) if initial_past is not None else (0.0,) * len(coeffs)
    if len(pre) < len(coeffs):
        raise SpecError("pre-history must cover the coefficient span")
    if response == "identity":
        r = lambda u: u
    elif response == "tanh":
        r = lambda u: response_scale * np.tanh(u / response_scale)
    elif response == "clipped_linear":
        r = lambda u: np.clip(u, -response_scale, response_scale)
    else:
        raise SpecError(f"unknown response {response!r}")

    def step_fn(k, past_rev, eps):
        return r(past_rev[:, : len(coeffs)] @ coeffs) + eps

    return FiniteInstance(
        horizon=horizon, alphabets=tuple(tuple(a) for a in alphabets),
        step_fn=step_fn, initial_past=pre,
        profile=ContractionProfile(tuple(np.abs(coeffs))),
        functional=functional or FunctionalSpec("sum"), label=label,
    )


def random_finite_instance(seed: int, max_horizon: int = 6) -> FiniteInstance:
    """Randomized binary/ternary instance over the two built-in map families."""
    gen = rng.stream(seed, rng.ORACLE, 1)
    n = int(gen.integers(2, max_horizon + 1))
    alphabets = []
    for _ in range(n):
        size = int(gen.integers(2, 4))
        vals = np.round(gen.uniform(-1.0, 1.0, size), 3)
        probs = gen.uniform(0.2, 1.0, size)
        probs /= probs.sum()
        probs[-1] = 1.0 - math.fsum(probs[:-1])
        alphabets.append(tuple(zip(vals.tolist(), probs.tolist())))
    if gen.random() < 0.5:
        lag = int(gen.integers(1, 4))
        coeff = float(np.round(gen.uniform(-0.9, 0.9), 3))
        pre = tuple(np.round(gen.uniform(-1, 1, lag), 3))
        return memory_one_instance(n, coeff, lag, alphabets, initial_past=pre,
                                   label=f"memory_one[{seed}]")
    depth = int(gen.integers(1, 4))
    raw = gen.uniform(-1.0, 1.0, depth)
    raw *= gen.uniform(0.3, 0.9) / max(1e-12, np.abs(raw).sum())
    response = ["identity", "tanh", "clipped_linear"][int(gen.integers(0, 3))]
    pre = tuple(np.round(gen.uniform(-1, 1, depth), 3))
    return mean_field_instance(n, np.round(raw, 3), alphabets, response=response,
                               initial_past=pre, label=f"mean_field[{seed}]")
