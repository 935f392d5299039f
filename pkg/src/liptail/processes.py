"""Built-in contractive infinite-memory process families.

Five families, all real-valued with metric d(x, y) = |x - y|:

    random_memory_ar    X_t = sum_{i=1}^{J_t} a_i X_{t-i} + xi_t
    memory_one_infinite X_t = a_{J_t} X_{t-J_t} + xi_t
    mean_field_memory   X_t = r(sum_i a_i X_{t-i}) + eps_t,  r 1-Lipschitz
    arch_type           X_t = sqrt(sum_i a_i^2 X_{t-i}^2 + b^2) * eps_t
    step_reinforced_erw X_t = gamma_t X_{t-k_t} + (1 - |gamma_t|) xi_t

The infinite past is approximated by a rolling window whose length is chosen
so the neglected certificate tail sums below 1e-12 (coefficient tails) or the
lag law is already truncated at quantile 1 - 1e-9.  Lag draws that exceed the
window are clamped and counted, never silently dropped.

Innovation draws come from counter-based streams keyed by
(master seed, purpose, block index, time index), so neither scheduling nor
worker count can change a trajectory.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .errors import CertificateError, SpecError, UnsupportedFamilyError
from .innovations import InnovationLaw
from .profiles import ContractionProfile, GeometricTail

_log = logging.getLogger(__name__)

FAMILIES = (
    "random_memory_ar",
    "step_reinforced_erw",
    "mean_field_memory",
    "memory_one_infinite",
    "arch_type",
)

_LAG_FAMILIES = ("random_memory_ar", "memory_one_infinite")

COEFF_TAIL_TOL = 1e-12
LAG_QUANTILE = 1.0 - 1e-9


# ---------------------------------------------------------------------------
# lag laws


@dataclass(frozen=True)
class LagLaw:
    """Discrete law on positive integers with finite (possibly truncated) support."""

    support: tuple[int, ...]
    probs: tuple[float, ...]
    truncated_mass: float = 0.0

    def __post_init__(self):
        sup = tuple(int(k) for k in self.support)
        pr = tuple(float(p) for p in self.probs)
        if not sup or len(sup) != len(pr):
            raise SpecError("lag law needs matching nonempty support and probs")
        if any(k < 1 for k in sup) or list(sup) != sorted(set(sup)):
            raise SpecError(f"lag support must be strictly increasing positive ints, got {sup}")
        if any(p < 0 for p in pr) or abs(sum(pr) - 1.0) > 1e-9:
            raise SpecError(f"lag probabilities must be >= 0 and sum to 1, got {pr}")
        total = math.fsum(pr)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "probs", tuple(p / total for p in pr))

    @classmethod
    def degenerate(cls, lag: int) -> "LagLaw":
        return cls((lag,), (1.0,))

    @classmethod
    def from_pmf(cls, pmf) -> "LagLaw":
        items = sorted((int(k), float(p)) for k, p in dict(pmf).items())
        return cls(tuple(k for k, _ in items), tuple(p for _, p in items))

    @classmethod
    def geometric(cls, q: float, quantile: float = LAG_QUANTILE) -> "LagLaw":
        """P(J = i) proportional to (1-q)^(i-1) q, truncated at the quantile.

        The discarded mass is recorded in truncated_mass and the retained
        probabilities are renormalized.
        """
        if not 0.0 < q < 1.0:
            raise SpecError(f"geometric lag parameter must be in (0, 1), got {q}")
        m = max(1, math.ceil(math.log(1.0 - quantile) / math.log(1.0 - q)))
        raw = [(1.0 - q) ** (i - 1) * q for i in range(1, m + 1)]
        dropped = (1.0 - q) ** m
        total = math.fsum(raw)
        law = cls(tuple(range(1, m + 1)), tuple(p / total for p in raw))
        object.__setattr__(law, "truncated_mass", dropped)
        return law

    @property
    def max_lag(self) -> int:
        return self.support[-1]

    @property
    def is_degenerate(self) -> bool:
        return len(self.support) == 1

    def prob_of(self, i: int) -> float:
        try:
            return self.probs[self.support.index(i)]
        except ValueError:
            return 0.0

    def prob_at_least(self, i: int) -> float:
        return math.fsum(p for k, p in zip(self.support, self.probs) if k >= i)

    def sample(self, gen: np.random.Generator, size) -> np.ndarray:
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, gen.random(size), side="right")
        idx = np.minimum(idx, len(self.support) - 1)
        return np.asarray(self.support, dtype=np.int64)[idx]

    def to_config(self) -> dict:
        return {
            "support": list(self.support),
            "probs": list(self.probs),
            "truncated_mass": self.truncated_mass,
        }

    @classmethod
    def from_config(cls, obj: dict) -> "LagLaw":
        from .serde import require_keys

        require_keys(obj, {"support", "probs", "truncated_mass"},
                     optional={"truncated_mass"}, context="lag_law")
        law = cls(tuple(obj["support"]), tuple(obj["probs"]))
        object.__setattr__(law, "truncated_mass", float(obj.get("truncated_mass", 0.0)))
        return law


@dataclass(frozen=True)
class InitialPast:
    """Pre-history policy: zeros, a constant level, or a discarded burn-in."""

    kind: str = "zeros"
    value: float = 0.0
    steps: int = 0

    def __post_init__(self):
        if self.kind not in ("zeros", "constant", "burn_in"):
            raise SpecError(f"unknown initial past policy {self.kind!r}")
        if self.kind == "burn_in" and self.steps < 1:
            raise SpecError("burn_in needs steps >= 1")

    def to_config(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "constant":
            out["value"] = self.value
        if self.kind == "burn_in":
            out["steps"] = self.steps
        return out

    @classmethod
    def from_config(cls, obj: dict) -> "InitialPast":
        from .serde import require_keys

        require_keys(obj, {"kind", "value", "steps"},
                     optional={"value", "steps"}, context="initial_past")
        return cls(obj.get("kind", "zeros"), float(obj.get("value", 0.0)),
                   int(obj.get("steps", 0)))


# ---------------------------------------------------------------------------
# process specification


_RESPONSES = ("identity", "tanh", "clipped_linear")


@dataclass(frozen=True)
class ProcessSpec:
    family: str
    innovation: InnovationLaw
    coeffs: tuple[float, ...] = ()
    coeff_tail_ratio: float | None = None
    lag_law: LagLaw | None = None
    response: str = "identity"
    response_scale: float = 1.0
    arch_floor: float = 1.0
    erw_keep: float | None = None
    erw_sign_p: float | None = None
    initial_past: InitialPast = field(default_factory=InitialPast)
    memory_truncation: int = 512

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}")
        if self.memory_truncation < 1:
            raise SpecError("memory_truncation must be >= 1")
        if self.coeff_tail_ratio is not None and not 0.0 <= abs(self.coeff_tail_ratio) < 1.0:
            raise SpecError("coeff_tail_ratio must satisfy |ratio| < 1")
        if self.family in _LAG_FAMILIES:
            if self.lag_law is None:
                raise SpecError(f"{self.family} needs a lag law")
            if not self.coeffs:
                raise SpecError(f"{self.family} needs coefficients")
        elif self.family == "mean_field_memory":
            if self.response not in _RESPONSES:
                raise SpecError(f"unknown response {self.response!r}")
            if self.response_scale <= 0:
                raise SpecError("response_scale must be > 0")
            if not self.coeffs:
                raise SpecError("mean_field_memory needs coefficients")
        elif self.family == "arch_type":
            if self.arch_floor <= 0:
                raise SpecError("arch_type needs a floor b > 0")
            if not self.coeffs:
                raise SpecError("arch_type needs coefficients")
        elif self.family == "step_reinforced_erw":
            if self.erw_keep is None or not 0.0 < self.erw_keep <= 1.0:
                raise SpecError("step_reinforced_erw needs keep probability t in (0, 1]")
            if self.erw_sign_p is None or not 0.0 <= self.erw_sign_p <= 1.0:
                raise SpecError("step_reinforced_erw needs sign probability p in [0, 1]")
            if self.coeffs or self.lag_law is not None:
                raise SpecError("step_reinforced_erw takes no coefficients or lag law")
            if self.initial_past.kind != "zeros":
                raise SpecError("step_reinforced_erw starts from its first step; "
                                "initial past must be zeros")
        # Stationarity condition must hold at construction (ERW is checked
        # through its keep probability above; its profile is per-horizon).
        if self.family != "step_reinforced_erw":
            contraction_certificate(self)

    # -- coefficients ---------------------------------------------------------

    def coeff_value(self, i: int) -> float:
        """Signed a_i with lazy geometric continuation."""
        L = len(self.coeffs)
        if i < 1:
            raise SpecError(f"coefficient index must be >= 1, got {i}")
        if i <= L:
            return self.coeffs[i - 1]
        if self.coeff_tail_ratio is None:
            return 0.0
        return self.coeffs[-1] * self.coeff_tail_ratio ** (i - L)

    def coeff_array(self, m: int) -> np.ndarray:
        return np.array([self.coeff_value(i) for i in range(1, m + 1)])

    def abs_coeff_sum(self) -> float:
        total = math.fsum(abs(a) for a in self.coeffs)
        if self.coeff_tail_ratio is not None and self.coeffs:
            r = abs(self.coeff_tail_ratio)
            total += abs(self.coeffs[-1]) * r / (1.0 - r) if r > 0 else 0.0
        return total

    def coeff_length_for_tol(self, tol: float = COEFF_TAIL_TOL) -> int:
        """Smallest L so the absolute coefficient tail beyond L is < tol."""
        L = len(self.coeffs)
        if self.coeff_tail_ratio is None or not self.coeffs:
            return L
        r = abs(self.coeff_tail_ratio)
        head = abs(self.coeffs[-1])
        if r == 0.0 or head == 0.0:
            return L
        # tail beyond L + k sums to head * r^(k+1) / (1 - r)
        k = math.ceil(math.log(tol * (1.0 - r) / (head * r)) / math.log(r)) if head * r / (1 - r) >= tol else 0
        return L + max(0, k)

    def digest(self) -> str:
        payload = json.dumps(self.to_config(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    # -- serialization ----------------------------------------------------------

    def to_config(self) -> dict:
        out = {"family": self.family, "innovation": self.innovation.to_config(),
               "initial_past": self.initial_past.to_config(),
               "memory_truncation": self.memory_truncation}
        if self.family in _LAG_FAMILIES:
            out["coeffs"] = list(self.coeffs)
            out["lag_law"] = self.lag_law.to_config()
            if self.coeff_tail_ratio is not None:
                out["coeff_tail_ratio"] = self.coeff_tail_ratio
        elif self.family == "mean_field_memory":
            out["coeffs"] = list(self.coeffs)
            out["response"] = self.response
            out["response_scale"] = self.response_scale
            if self.coeff_tail_ratio is not None:
                out["coeff_tail_ratio"] = self.coeff_tail_ratio
        elif self.family == "arch_type":
            out["coeffs"] = list(self.coeffs)
            out["arch_floor"] = self.arch_floor
            if self.coeff_tail_ratio is not None:
                out["coeff_tail_ratio"] = self.coeff_tail_ratio
        elif self.family == "step_reinforced_erw":
            out["erw_keep"] = self.erw_keep
            out["erw_sign_p"] = self.erw_sign_p
        return out

    @classmethod
    def from_config(cls, obj: dict) -> "ProcessSpec":
        from .serde import require_keys

        require_keys(
            obj,
            {"family", "innovation", "initial_past", "memory_truncation", "coeffs",
             "coeff_tail_ratio", "lag_law", "response", "response_scale",
             "arch_floor", "erw_keep", "erw_sign_p"},
            optional={"initial_past", "memory_truncation", "coeffs",
                      "coeff_tail_ratio", "lag_law", "response", "response_scale",
                      "arch_floor", "erw_keep", "erw_sign_p"},
            context="process",
        )
        kwargs = dict(
            family=obj["family"],
            innovation=InnovationLaw.from_config(obj["innovation"]),
            coeffs=tuple(obj.get("coeffs", ())),
            coeff_tail_ratio=obj.get("coeff_tail_ratio"),
            response=obj.get("response", "identity"),
            response_scale=float(obj.get("response_scale", 1.0)),
            arch_floor=float(obj.get("arch_floor", 1.0)),
            erw_keep=obj.get("erw_keep"),
            erw_sign_p=obj.get("erw_sign_p"),
            memory_truncation=int(obj.get("memory_truncation", 512)),
        )
        if "lag_law" in obj and obj["lag_law"] is not None:
            kwargs["lag_law"] = LagLaw.from_config(obj["lag_law"])
        if "initial_past" in obj:
            kwargs["initial_past"] = InitialPast.from_config(obj["initial_past"])
        return cls(**kwargs)


@dataclass(frozen=True)
class Trajectory:
    """Simulated path X_1..X_n with full replay information."""

    values: np.ndarray
    seed: int
    spec_digest: str
    truncations: int = 0


class TruncationCounter:
    """Counts lag draws clamped to the available window."""

    def __init__(self):
        self.count = 0


# ---------------------------------------------------------------------------
# response catalog (all 1-Lipschitz)


def response_fn(spec: ProcessSpec):
    s = spec.response_scale
    if spec.response == "identity":
        return (lambda u: u), 1.0
    if spec.response == "tanh":
        return (lambda u: s * np.tanh(u / s)), 1.0
    return (lambda u: np.clip(u, -s, s)), 1.0


# ---------------------------------------------------------------------------
# contraction certificates


def contraction_certificate(spec: ProcessSpec, horizon: int | None = None) -> ContractionProfile:
    """Dominating coefficient profile for the family's one-step sensitivity.

    random_memory_ar:    c_i = |a_i| * P(J >= i)   (coordinate i enters iff J >= i)
    memory_one_infinite: c_i = |a_i| * P(J = i)
    mean_field_memory:   c_i = Lip(r) * |a_i|
    arch_type:           c_i = |a_i| * E|eps|
    step_reinforced_erw: per-row weights (1-t)/(horizon-1); requires the
                         horizon and is flagged experimental because no
                         horizon-free summable sequence exists.

    Raises CertificateError (carrying the computed sum) when the family
    condition fails.
    """
    try:
        if spec.family == "memory_one_infinite":
            m = spec.lag_law.max_lag
            coeffs = [abs(spec.coeff_value(i)) * spec.lag_law.prob_of(i) for i in range(1, m + 1)]
            return ContractionProfile(tuple(coeffs))
        if spec.family == "random_memory_ar":
            m = spec.lag_law.max_lag
            coeffs = [abs(spec.coeff_value(i)) * spec.lag_law.prob_at_least(i) for i in range(1, m + 1)]
            return ContractionProfile(tuple(coeffs))
        if spec.family == "mean_field_memory":
            _, lip = response_fn(spec)
            return _scaled_profile(spec, lip)
        if spec.family == "arch_type":
            return _scaled_profile(spec, spec.innovation.mean_abs())
        # step_reinforced_erw
        if horizon is None:
            raise UnsupportedFamilyError(
                "step_reinforced_erw has row-dependent weights; pass the horizon "
                "to obtain its (experimental) per-horizon profile"
            )
        if horizon < 1:
            raise SpecError("horizon must be >= 1")
        row = (1.0 - spec.erw_keep) / (horizon - 1) if horizon > 1 else 0.0
        return ContractionProfile(tuple([row] * (horizon - 1)), experimental=True)
    except (ValueError, OverflowError) as exc:
        if isinstance(exc, (CertificateError, UnsupportedFamilyError, SpecError)):
            raise
        total = _certificate_sum(spec)
        raise CertificateError(
            f"{spec.family} stationarity condition fails: dominating sum "
            f"{total} is not < 1",
            computed_sum=total,
        ) from exc


def _scaled_profile(spec: ProcessSpec, scale: float) -> ContractionProfile:
    explicit = tuple(scale * abs(a) for a in spec.coeffs)
    tail = None
    if spec.coeff_tail_ratio is not None and spec.coeffs:
        tail = GeometricTail(ratio=abs(spec.coeff_tail_ratio), first_index=len(explicit) + 1)
    return ContractionProfile(explicit, tail)


def _certificate_sum(spec: ProcessSpec) -> float:
    if spec.family == "memory_one_infinite":
        return math.fsum(abs(spec.coeff_value(i)) * spec.lag_law.prob_of(i)
                         for i in range(1, spec.lag_law.max_lag + 1))
    if spec.family == "random_memory_ar":
        return math.fsum(abs(spec.coeff_value(i)) * spec.lag_law.prob_at_least(i)
                         for i in range(1, spec.lag_law.max_lag + 1))
    if spec.family == "mean_field_memory":
        return response_fn(spec)[1] * spec.abs_coeff_sum()
    if spec.family == "arch_type":
        return spec.innovation.mean_abs() * spec.abs_coeff_sum()
    return 1.0 - (spec.erw_keep or 0.0)


def window_length(spec: ProcessSpec) -> int:
    """Rolling-window length; the certificate tail beyond it is < 1e-12."""
    if spec.family in _LAG_FAMILIES:
        need = spec.lag_law.max_lag
    elif spec.family in ("mean_field_memory", "arch_type"):
        need = spec.coeff_length_for_tol()
    else:
        raise UnsupportedFamilyError("step_reinforced_erw keeps its whole history")
    if need > spec.memory_truncation:
        _log.warning(
            "window capped at memory_truncation=%d (< needed %d); lag draws "
            "beyond the cap will be clamped and counted",
            spec.memory_truncation, need,
        )
    return min(need, spec.memory_truncation)


# ---------------------------------------------------------------------------
# single-step evaluation


def step(spec: ProcessSpec, past, innovation_draw, counter: TruncationCounter | None = None) -> float:
    """One update-map application.  past[0] is X_{t-1}, past[1] is X_{t-2}, ...

    Draw formats: (j, xi) for the lag families, a scalar for mean-field and
    ARCH, (gamma, lag, xi) for the step-reinforced walk.  A drawn lag beyond
    the window is clamped to the window length and counted.
    """
    past = np.asarray(past, dtype=float)
    if spec.family in _LAG_FAMILIES:
        j, xi = innovation_draw
        j = int(j)
        if past.size == 0:
            raise SpecError("lag families need a nonempty past window")
        if j > past.size:
            if counter is not None:
                counter.count += 1
            j = past.size
        if spec.family == "memory_one_infinite":
            return float(spec.coeff_value(j) * past[j - 1] + xi)
        a = spec.coeff_array(j)
        return float(np.dot(a, past[:j]) + xi)
    if spec.family == "mean_field_memory":
        r, _ = response_fn(spec)
        a = spec.coeff_array(past.size)
        return float(r(np.dot(a, past)) + innovation_draw)
    if spec.family == "arch_type":
        a = spec.coeff_array(past.size)
        vol = math.sqrt(float(np.dot(a * a, past * past)) + spec.arch_floor**2)
        return float(vol * innovation_draw)
    # step_reinforced_erw
    gamma, lag, xi = innovation_draw
    if past.size == 0:
        return float(xi)
    lag = int(lag)
    if lag > past.size:
        if counter is not None:
            counter.count += 1
        lag = past.size
    return float(gamma * past[lag - 1] + (1.0 - abs(gamma)) * xi)


# ---------------------------------------------------------------------------
# vectorized block simulation


def _draw_block(spec: ProcessSpec, gen: np.random.Generator, rows: int, t: int):
    """Family-specific innovation vectors for time t (1-based), fixed order."""
    if spec.family in _LAG_FAMILIES:
        j = spec.lag_law.sample(gen, rows)
        xi = spec.innovation.sample(gen, rows)
        return j, xi
    if spec.family == "step_reinforced_erw":
        u = gen.random(rows)
        lag = gen.integers(1, t, rows) if t >= 2 else np.ones(rows, dtype=np.int64)
        xi = spec.innovation.sample(gen, rows)
        t_keep = spec.erw_keep
        p = spec.erw_sign_p
        gamma = np.where(u < t_keep, 0.0, np.where(u < t_keep + (1 - t_keep) * p, 1.0, -1.0))
        return gamma, lag, xi
    return (spec.innovation.sample(gen, rows),)


def simulate_block(spec: ProcessSpec, n: int, rows: int, master_seed: int,
                    block_index: int, record_h: bool = False):
    """Simulates `rows` trajectories of length n for one replicate block.

    Returns (values (rows, n), clamp_count, h_matrix or None).  h_matrix[:, k-1]
    holds the past-dependent dominating value H_k evaluated along the path.
    """
    if spec.family == "step_reinforced_erw":
        return _simulate_block_erw(spec, n, rows, master_seed, block_index, record_h)

    burn = spec.initial_past.steps if spec.initial_past.kind == "burn_in" else 0
    total = burn + n
    W = window_length(spec)
    fill = spec.initial_past.value if spec.initial_past.kind == "constant" else 0.0
    window = np.full((rows, W), fill)
    out = np.empty((rows, n))
    h_out = np.empty((rows, n)) if record_h else None
    clamped = 0
    a = spec.coeff_array(W)
    ridx = np.arange(rows)
    r, _ = response_fn(spec)

    for t in range(1, total + 1):
        gen = rng.stream(master_seed, rng.SIMULATION, block_index, t - 1)
        draw = _draw_block(spec, gen, rows, t)
        if spec.family in _LAG_FAMILIES:
            j, xi = draw
            over = j > W
            clamped += int(over.sum())
            j_eff = np.minimum(j, W)
            if spec.family == "memory_one_infinite":
                x = a[j_eff - 1] * window[ridx, j_eff - 1] + xi
            else:
                prefix = np.cumsum(window * a, axis=1)
                x = prefix[ridx, j_eff - 1] + xi
            if record_h and t > burn:
                h_out[:, t - burn - 1] = _h_lag_family(spec, a, window, j_eff, xi)
        elif spec.family == "mean_field_memory":
            (xi,) = draw
            x = r(window @ a) + xi
            if record_h and t > burn:
                h_out[:, t - burn - 1] = spec.innovation.mad_about(xi)
        else:  # arch_type
            (eps,) = draw
            vol = np.sqrt((window * window) @ (a * a) + spec.arch_floor**2)
            x = vol * eps
            if record_h and t > burn:
                h_out[:, t - burn - 1] = vol * spec.innovation.mad_about(eps)
        if t > burn:
            out[:, t - burn - 1] = x
        window[:, 1:] = window[:, :-1]
        window[:, 0] = x

    return out, clamped, h_out


def _simulate_block_erw(spec, n, rows, master_seed, block_index, record_h):
    values = np.empty((rows, n))
    h_out = np.empty((rows, n)) if record_h else None
    ridx = np.arange(rows)
    t_keep, p = spec.erw_keep, spec.erw_sign_p
    for t in range(1, n + 1):
        gen = rng.stream(master_seed, rng.SIMULATION, block_index, t - 1)
        gamma, lag, xi = _draw_block(spec, gen, rows, t)
        if t == 1:
            x = xi.astype(float)
        else:
            ref = values[ridx, t - 1 - lag]
            x = gamma * ref + (1.0 - np.abs(gamma)) * xi
        values[:, t - 1] = x
        if record_h:
            h_out[:, t - 1] = _h_erw(spec, values[:, : t - 1], gamma, lag, xi, t)
    return values, 0, h_out


def _h_lag_family(spec, a, window, j_eff, xi):
    """H(past, (j, xi)) = sum_{j'} P(j') E_xi'|F(past,(j,xi)) - F(past,(j',xi'))|.

    The inner expectation over xi' is the innovation law's mean absolute
    deviation about the deterministic gap, so H has a closed form given the
    realized window.
    """
    ridx = np.arange(window.shape[0])
    W = window.shape[1]
    if spec.family == "memory_one_infinite":
        own = a[j_eff - 1] * window[ridx, j_eff - 1]
        parts = np.zeros(window.shape[0])
        for jp, pj in zip(spec.lag_law.support, spec.lag_law.probs):
            jp_eff = min(jp, W)
            other = a[jp_eff - 1] * window[:, jp_eff - 1]
            parts += pj * spec.innovation.mad_about(own + xi - other)
        return parts
    prefix = np.cumsum(window * a, axis=1)
    own = prefix[ridx, j_eff - 1]
    parts = np.zeros(window.shape[0])
    for jp, pj in zip(spec.lag_law.support, spec.lag_law.probs):
        jp_eff = min(jp, W)
        parts += pj * spec.innovation.mad_about(own + xi - prefix[:, jp_eff - 1])
    return parts


def _h_erw(spec, history, gamma, lag, xi, t):
    """H for the step-reinforced walk by enumeration over (gamma', k')."""
    rows = len(gamma)
    t_keep, p = spec.erw_keep, spec.erw_sign_p
    if t == 1:
        return spec.innovation.mad_about(xi)
    ridx = np.arange(rows)
    ref = history[ridx, t - 1 - lag]
    c = gamma * ref + (1.0 - np.abs(gamma)) * xi
    out = t_keep * spec.innovation.mad_about(c)
    w = 1.0 / (t - 1)
    plus = (1 - t_keep) * p
    minus = (1 - t_keep) * (1 - p)
    for kp in range(1, t):
        other = history[:, t - 1 - kp]
        out += w * (plus * np.abs(c - other) + minus * np.abs(c + other))
    return out


def simulate(spec: ProcessSpec, n: int, seed: int) -> Trajectory:
    """Single trajectory of length n; pure function of (spec, n, seed)."""
    if n < 1:
        raise SpecError(f"trajectory length must be >= 1, got {n}")
    values, clamped, _ = simulate_block(spec, n, 1, seed, 0)
    vals = values[0].copy()
    vals.setflags(write=False)
    return Trajectory(values=vals, seed=int(seed), spec_digest=spec.digest(),
                      truncations=clamped)


# ---------------------------------------------------------------------------
# dominating variables (innovation-only bounds on the increments)


def state_bound(spec: ProcessSpec) -> float | None:
    """Almost-sure bound on |X_t| valid for every t, or None if unbounded."""
    bounds = spec.innovation.support_bounds()
    if bounds is None:
        return None
    m = max(abs(bounds[0]), abs(bounds[1]))
    init = abs(spec.initial_past.value) if spec.initial_past.kind == "constant" else 0.0
    L = spec.coeff_length_for_tol(1e-15) if spec.family not in _LAG_FAMILIES else 0
    if spec.family == "memory_one_infinite":
        amax = max(abs(spec.coeff_value(i)) for i in range(1, spec.lag_law.max_lag + 1))
        if amax >= 1.0:
            return None
        return max(init, m / (1.0 - amax))
    if spec.family == "random_memory_ar":
        s = math.fsum(abs(spec.coeff_value(i)) for i in range(1, spec.lag_law.max_lag + 1))
        if s >= 1.0:
            return None
        return max(init, m / (1.0 - s))
    if spec.family == "mean_field_memory":
        if spec.response in ("tanh", "clipped_linear"):
            return max(init, spec.response_scale + m)
        s = spec.abs_coeff_sum()
        if s >= 1.0:
            return None
        return max(init, m / (1.0 - s))
    if spec.family == "arch_type":
        s2 = math.fsum(spec.coeff_value(i) ** 2 for i in range(1, L + 1))
        if m * m * s2 >= 1.0:
            return None
        b = m * spec.arch_floor / math.sqrt(1.0 - m * m * s2)
        return max(init, b)
    # step_reinforced_erw: |X_t| <= max over past steps and |xi|
    return max(init, m)


def c2_kind(spec: ProcessSpec) -> str | None:
    """How the innovation-replacement condition holds for this family.

    "scalar": the innovation enters additively (or the lag is deterministic),
    so the dominating variable is the scalar mean absolute deviation.
    "lag_aware": random lags are covered by adding the worst lag-mismatch term
    on the invariant bounded state set (needs bounded innovations and stable
    coefficients).  None: only past-dependent domination is available.
    """
    if spec.family == "mean_field_memory":
        return "scalar"
    if spec.family in _LAG_FAMILIES:
        if spec.lag_law.is_degenerate:
            return "scalar"
        if state_bound(spec) is not None:
            return "lag_aware"
        return None
    return None


def c2_supported(spec: ProcessSpec) -> bool:
    return c2_kind(spec) is not None


def lag_mismatch_gaps(spec: ProcessSpec) -> np.ndarray:
    """Per-lag additive term covering a_J X_{t-J} vs a_{J'} X_{t-J'} swaps.

    For lag j the returned value bounds E_{J'} sup_x |contribution gap| on the
    invariant set |x| <= state_bound.
    """
    B = state_bound(spec)
    if B is None:
        raise UnsupportedFamilyError(
            f"{spec.family} with a random lag needs bounded innovations and "
            "stable coefficients for an innovation-only dominating variable"
        )
    law = spec.lag_law
    m = law.max_lag
    a = np.abs(spec.coeff_array(m))
    gaps = np.zeros(len(law.support))
    for idx, j in enumerate(law.support):
        total = 0.0
        for jp, pj in zip(law.support, law.probs):
            if jp == j:
                continue
            if spec.family == "memory_one_infinite":
                total += pj * (a[j - 1] + a[jp - 1])
            else:
                lo, hi = min(j, jp), max(j, jp)
                total += pj * float(a[lo:hi].sum())
        gaps[idx] = B * total
    return gaps


class GDescription:
    """Law of the dominating variable G evaluated at a fresh innovation.

    Exposes exact atoms when everything is discrete, a sampler otherwise, and
    the essential supremum when the law is bounded.
    """

    def __init__(self, spec: ProcessSpec):
        kind = c2_kind(spec)
        if kind is None:
            raise UnsupportedFamilyError(
                f"{spec.family} does not admit an innovation-only dominating "
                "variable; use the past-dependent constants instead"
            )
        self.spec = spec
        self.kind = kind
        self._gaps = lag_mismatch_gaps(spec) if kind == "lag_aware" else None

    def atoms(self):
        """(values, probs) when the dominating law is purely discrete."""
        law = self.spec.innovation
        if not law.is_discrete:
            return None
        vals, probs = law.atoms()
        g_scalar = np.array([law.mad_about(v) for v in vals])
        if self.kind == "scalar":
            return g_scalar, probs
        lag = self.spec.lag_law
        gv, gp = [], []
        for gap, pj in zip(self._gaps, lag.probs):
            for g, pv in zip(g_scalar, probs):
                gv.append(g + gap)
                gp.append(pj * pv)
        return np.array(gv), np.array(gp)

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        law = self.spec.innovation
        g = law.mad_about(law.sample(gen, size))
        if self.kind == "lag_aware":
            j = self.spec.lag_law.sample(gen, size)
            lookup = dict(zip(self.spec.lag_law.support, self._gaps))
            g = g + np.array([lookup[int(v)] for v in j])
        return np.asarray(g)

    def sup(self) -> float | None:
        law = self.spec.innovation
        if law.support_bounds() is None:
            return None
        top = law.mad_sup()
        if self.kind == "lag_aware":
            top += float(self._gaps.max())
        return top

    def moment(self, fn) -> float | None:
        """Exact E[fn(G)] when discrete, else None (sample instead)."""
        at = self.atoms()
        if at is None:
            return None
        vals, probs = at
        return float(np.dot(probs, fn(vals)))


def dominating_sample(spec: ProcessSpec, seed: int) -> float:
    """One draw of the dominating variable G evaluated at a fresh innovation."""
    desc = GDescription(spec)
    gen = rng.stream(seed, rng.DOMINATING)
    return float(desc.sample(gen, 1)[0])


def innovation_replacement_sup(spec: ProcessSpec) -> float:
    """Essential supremum of d(F(past; eps), F(past; eps')) over the invariant set.

    This is the bounded-increment constant for the McDiarmid-type bound; it
    needs a bounded innovation law (and for lag families a stable model).
    """
    bounds = spec.innovation.support_bounds()
    if bounds is None:
        raise UnsupportedFamilyError(f"{spec.family}: innovation law is unbounded")
    width = bounds[1] - bounds[0]
    if spec.family == "mean_field_memory":
        return width
    if spec.family in _LAG_FAMILIES:
        B = state_bound(spec)
        if B is None:
            raise UnsupportedFamilyError(f"{spec.family}: state is unbounded here")
        law = spec.lag_law
        m = law.max_lag
        a = np.abs(spec.coeff_array(m))
        worst = 0.0
        for j in law.support:
            for jp in law.support:
                if spec.family == "memory_one_infinite":
                    gap = 0.0 if j == jp else a[j - 1] + a[jp - 1]
                else:
                    lo, hi = min(j, jp), max(j, jp)
                    gap = float(a[lo:hi].sum())
                worst = max(worst, gap)
        return width + B * worst
    if spec.family == "arch_type":
        B = state_bound(spec)
        if B is None:
            raise UnsupportedFamilyError("arch_type state is unbounded here")
        L = spec.coeff_length_for_tol(1e-15)
        s2 = math.fsum(spec.coeff_value(i) ** 2 for i in range(1, L + 1))
        vol_max = math.sqrt(s2 * B * B + spec.arch_floor**2)
        return vol_max * width
    # step_reinforced_erw: |gamma X - gamma' X'| + ... <= 2 B + width-ish
    B = state_bound(spec)
    if B is None:
        raise UnsupportedFamilyError("step_reinforced_erw with unbounded steps")
    return 2.0 * B + width


# ---------------------------------------------------------------------------
# coupled two-window discrepancy


@dataclass(frozen=True)
class CoupledEstimate:
    mean: float
    std_error: float
    draws: int


def coupled_discrepancy(spec: ProcessSpec, past_a, past_b, draws: int, seed: int) -> CoupledEstimate:
    """Monte-Carlo estimate of E|F(past_a; eps) - F(past_b; eps)| (shared eps)."""
    past_a = np.asarray(past_a, dtype=float)
    past_b = np.asarray(past_b, dtype=float)
    if past_a.shape != past_b.shape:
        raise SpecError("coupled windows must have identical length")
    if draws < 1:
        raise SpecError("draws must be >= 1")
    gen = rng.stream(seed, rng.COUPLING)
    W = past_a.size

    if spec.family in _LAG_FAMILIES:
        j = np.minimum(spec.lag_law.sample(gen, draws), W)
        xi = spec.innovation.sample(gen, draws)
        a = spec.coeff_array(W)
        if spec.family == "memory_one_infinite":
            fa = a[j - 1] * past_a[j - 1] + xi
            fb = a[j - 1] * past_b[j - 1] + xi
        else:
            pa = np.concatenate(([0.0], np.cumsum(a * past_a)))
            pb = np.concatenate(([0.0], np.cumsum(a * past_b)))
            fa = pa[j] + xi
            fb = pb[j] + xi
    elif spec.family == "mean_field_memory":
        xi = spec.innovation.sample(gen, draws)
        r, _ = response_fn(spec)
        a = spec.coeff_array(W)
        fa = r(float(np.dot(a, past_a))) + xi
        fb = r(float(np.dot(a, past_b))) + xi
    elif spec.family == "arch_type":
        eps = spec.innovation.sample(gen, draws)
        a = spec.coeff_array(W)
        va = math.sqrt(float(np.dot(a * a, past_a * past_a)) + spec.arch_floor**2)
        vb = math.sqrt(float(np.dot(a * a, past_b * past_b)) + spec.arch_floor**2)
        fa, fb = va * eps, vb * eps
    else:  # step_reinforced_erw at time W + 1
        gamma, lag, xi = _draw_block(spec, gen, draws, W + 1)
        lag = np.minimum(lag, W)
        fa = gamma * past_a[lag - 1] + (1 - np.abs(gamma)) * xi
        fb = gamma * past_b[lag - 1] + (1 - np.abs(gamma)) * xi

    gaps = np.abs(fa - fb)
    mean = float(gaps.mean())
    se = float(gaps.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return CoupledEstimate(mean=mean, std_error=se, draws=draws)
