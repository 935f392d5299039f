"""Innovation laws: sampling, closed-form mean absolute deviations, moments.

The central quantity is mad_about(y) = E|y - eps'|, the mean absolute
deviation of the law about y.  For additive-innovation update maps this is
exactly the innovation-only dominating variable evaluated at y.  Closed forms:

    gaussian(mu, sd):  sd*sqrt(2/pi)*exp(-z^2/(2 sd^2)) + z*(1 - 2*Phi(-z/sd)),
                       z = y - mu
    uniform(lo, hi):   ((y-lo)^2 + (hi-y)^2) / (2(hi-lo)) inside the support,
                       |y - midpoint| outside it
    two_point(p; a,b): p|y-a| + (1-p)|y-b|
    laplace(b):        b*exp(-|y|/b) + |y|

mad_about is convex in y, so its supremum over a bounded support is attained
at the support endpoints; that gives the analytic essential supremum used by
bounded-increment constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .errors import SpecError, UnboundedLawError

_QUAD_TOL = 1e-10

_KINDS = ("gaussian", "uniform", "rademacher", "two_point", "laplace")


@dataclass(frozen=True)
class InnovationLaw:
    kind: str
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SpecError(f"unknown innovation kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        p = self.params
        if self.kind == "gaussian":
            if len(p) != 2 or p[1] <= 0:
                raise SpecError(f"gaussian needs (mean, std>0), got {p}")
        elif self.kind == "uniform":
            if len(p) != 2 or not p[0] < p[1]:
                raise SpecError(f"uniform needs lo < hi, got {p}")
        elif self.kind == "rademacher":
            if p:
                raise SpecError("rademacher takes no parameters")
        elif self.kind == "two_point":
            if len(p) != 3 or not 0.0 <= p[0] <= 1.0:
                raise SpecError(f"two_point needs (p in [0,1], v1, v2), got {p}")
        elif self.kind == "laplace":
            if len(p) != 1 or p[0] <= 0:
                raise SpecError(f"laplace needs (scale>0,), got {p}")

    # -- constructors --------------------------------------------------------

    @classmethod
    def gaussian(cls, mean: float = 0.0, std: float = 1.0):
        return cls("gaussian", (mean, std))

    @classmethod
    def uniform(cls, lo: float, hi: float):
        return cls("uniform", (lo, hi))

    @classmethod
    def rademacher(cls):
        return cls("rademacher")

    @classmethod
    def two_point(cls, p: float, values=(1.0, -1.0)):
        return cls("two_point", (p, values[0], values[1]))

    @classmethod
    def laplace(cls, scale: float = 1.0):
        return cls("laplace", (scale,))

    # -- structure -----------------------------------------------------------

    def atoms(self):
        """(values, probs) for discrete kinds, else None."""
        if self.kind == "rademacher":
            return np.array([1.0, -1.0]), np.array([0.5, 0.5])
        if self.kind == "two_point":
            p, v1, v2 = self.params
            return np.array([v1, v2]), np.array([p, 1.0 - p])
        return None

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("rademacher", "two_point")

    def support_bounds(self):
        """(lo, hi) for laws with bounded support, else None.

        Zero-probability atoms are outside the support.
        """
        if self.kind == "uniform":
            return self.params
        if self.is_discrete:
            vals, probs = self.atoms()
            live = vals[probs > 0]
            return float(live.min()), float(live.max())
        return None

    # -- sampling ------------------------------------------------------------

    def sample(self, gen: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            mean, std = self.params
            return gen.normal(mean, std, size)
        if self.kind == "uniform":
            lo, hi = self.params
            return gen.uniform(lo, hi, size)
        if self.kind == "laplace":
            return gen.laplace(0.0, self.params[0], size)
        vals, probs = self.atoms()
        u = gen.random(size)
        return np.where(u < probs[0], vals[0], vals[1])

    # -- closed-form functionals ----------------------------------------------

    def mean_abs(self) -> float:
        """E|eps|."""
        return float(self.mad_about(0.0))

    def mad_about(self, y):
        """E|y - eps'|, vectorized over y."""
        y = np.asarray(y, dtype=float)
        if self.kind == "gaussian":
            mean, sd = self.params
            z = y - mean
            out = sd * math.sqrt(2.0 / math.pi) * np.exp(-z * z / (2 * sd * sd)) + z * (
                1.0 - 2.0 * ndtr(-z / sd)
            )
            return out if out.shape else float(out)
        if self.kind == "uniform":
            lo, hi = self.params
            width = hi - lo
            mid = 0.5 * (lo + hi)
            inside = ((y - lo) ** 2 + (hi - y) ** 2) / (2.0 * width)
            out = np.where((y >= lo) & (y <= hi), inside, np.abs(y - mid))
            return out if out.shape else float(out)
        if self.kind == "laplace":
            b = self.params[0]
            out = b * np.exp(-np.abs(y) / b) + np.abs(y)
            return out if out.shape else float(out)
        vals, probs = self.atoms()
        out = probs[0] * np.abs(y - vals[0]) + probs[1] * np.abs(y - vals[1])
        return out if out.shape else float(out)

    def mad_sup(self) -> float:
        """sup over the support of mad_about; errors for unbounded laws."""
        bounds = self.support_bounds()
        if bounds is None:
            raise UnboundedLawError(
                f"{self.kind} has unbounded support; no essential supremum exists"
            )
        if self.is_discrete:
            vals, probs = self.atoms()
            return float(max(self.mad_about(v) for v, p in zip(vals, probs) if p > 0))
        return float(max(self.mad_about(bounds[0]), self.mad_about(bounds[1])))

    def expectation(self, fn, tol: float = _QUAD_TOL) -> float:
        """E[fn(eps)]: exact sums for discrete laws, adaptive quadrature else."""
        if self.is_discrete:
            vals, probs = self.atoms()
            return float(sum(p * fn(v) for v, p in zip(vals, probs)))
        if self.kind == "uniform":
            lo, hi = self.params
            val, _ = integrate.quad(fn, lo, hi, epsabs=tol, limit=200)
            return val / (hi - lo)
        if self.kind == "gaussian":
            mean, sd = self.params
            pdf = lambda x: math.exp(-((x - mean) ** 2) / (2 * sd * sd)) / (
                sd * math.sqrt(2 * math.pi)
            )
            val, _ = integrate.quad(
                lambda x: fn(x) * pdf(x), -np.inf, np.inf,
                epsabs=tol, limit=400, points=None,
            )
            return val
        # laplace
        b = self.params[0]
        pdf = lambda x: math.exp(-abs(x) / b) / (2 * b)
        val, _ = integrate.quad(
            lambda x: fn(x) * pdf(x), -np.inf, np.inf, epsabs=tol, limit=400
        )
        return val

    # -- serialization ---------------------------------------------------------

    def to_config(self) -> dict:
        names = {
            "gaussian": ("mean", "std"),
            "uniform": ("lo", "hi"),
            "rademacher": (),
            "two_point": ("p", "v1", "v2"),
            "laplace": ("scale",),
        }[self.kind]
        out = {"kind": self.kind}
        out.update(dict(zip(names, self.params)))
        return out

    @classmethod
    def from_config(cls, obj: dict) -> "InnovationLaw":
        from .serde import require_keys

        kind = obj.get("kind")
        names = {
            "gaussian": ("mean", "std"),
            "uniform": ("lo", "hi"),
            "rademacher": (),
            "two_point": ("p", "v1", "v2"),
            "laplace": ("scale",),
        }.get(kind)
        if names is None:
            raise SpecError(f"unknown innovation kind {kind!r}")
        require_keys(obj, {"kind", *names}, context="innovation")
        return cls(kind, tuple(obj[n] for n in names))
