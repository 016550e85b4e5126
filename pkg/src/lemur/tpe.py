"""Tree-structured Parzen Estimator over a SearchSpace.

Observations are split into good/bad sets by objective quantile; each
parameter gets an independent density pair (l from good, g from bad) and the
next suggestion maximizes l(x)/g(x) over candidates drawn from l.

Numeric parameters are modeled in a transformed coordinate (log space for
log-uniform, exponent space for power-of-two) as an equal-weight mixture of
one truncated Gaussian per observation plus one uniform prior component over
the domain, so densities are strictly positive everywhere and the
no-observations model is exactly flat. Categorical parameters use
Laplace-smoothed counts.

Determinism: each call derives its generator from (seed, len(history)), so a
study resumed from a checkpoint replays the identical suggestion sequence.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .space import (
    Categorical,
    IntPow2,
    LogUniform,
    ParamSpec,
    SearchSpace,
    Uniform,
    conforms,
    space_from_dict,
    space_to_dict,
)

GAMMA = 0.25
N_STARTUP = 10
N_CANDIDATES = 24


class NonFinite(ValueError):
    """Objective value is NaN or infinite."""


def sample_prior(space: SearchSpace, rng: np.random.Generator) -> dict:
    """One draw per parameter: uniform in the native scale of each kind."""
    prm: dict = {}
    for name, spec in space.items():
        if isinstance(spec, LogUniform):
            if spec.lo == spec.hi:  # keep pinned values bit-exact
                prm[name] = spec.lo
            else:
                prm[name] = float(
                    np.exp(rng.uniform(math.log(spec.lo), math.log(spec.hi)))
                )
        elif isinstance(spec, Uniform):
            prm[name] = spec.lo if spec.lo == spec.hi else float(rng.uniform(spec.lo, spec.hi))
        elif isinstance(spec, IntPow2):
            prm[name] = 2 ** int(rng.integers(spec.pmin, spec.pmax + 1))
        elif isinstance(spec, Categorical):
            prm[name] = spec.choices[int(rng.integers(0, len(spec.choices)))]
        else:
            raise TypeError(f"unknown spec {spec!r}")
    return prm


def split_good_bad(
    history: Sequence[tuple[dict, float]], gamma: float, direction: str = "maximize"
) -> tuple[list[tuple[dict, float]], list[tuple[dict, float]]]:
    """Sort by objective and take the top max(1, floor(gamma*n)) as good."""
    if direction != "maximize":
        raise ValueError(f"unsupported direction {direction!r}")
    if not history:
        raise ValueError("history is empty")
    ordered = sorted(history, key=lambda entry: -entry[1])
    n_good = max(1, math.floor(gamma * len(ordered)))
    return list(ordered[:n_good]), list(ordered[n_good:])


# -- density models ----------------------------------------------------------


@dataclass(frozen=True)
class _TruncGauss:
    mu: float
    sigma: float
    lo: float
    hi: float

    def _z(self) -> tuple[float, float]:
        alpha = ndtr((self.lo - self.mu) / self.sigma)
        beta = ndtr((self.hi - self.mu) / self.sigma)
        return alpha, beta - alpha

    def pdf(self, x: float) -> float:
        alpha, z = self._z()
        u = (x - self.mu) / self.sigma
        return math.exp(-0.5 * u * u) / (math.sqrt(2 * math.pi) * self.sigma * z)

    def cdf(self, x: float) -> float:
        alpha, z = self._z()
        return (ndtr((x - self.mu) / self.sigma) - alpha) / z

    def sample(self, rng: np.random.Generator) -> float:
        alpha, z = self._z()
        x = self.mu + self.sigma * float(ndtri(alpha + rng.uniform() * z))
        return min(max(x, self.lo), self.hi)


class ParzenModel:
    """Density/mass over one parameter domain: sample() and logpdf()."""

    def sample(self, rng: np.random.Generator):
        raise NotImplementedError

    def pdf(self, value) -> float:
        raise NotImplementedError

    def logpdf(self, value) -> float:
        return math.log(self.pdf(value))


class _PointModel(ParzenModel):
    """Degenerate single-value domain (pinned parameter)."""

    def __init__(self, value):
        self.value = value

    def sample(self, rng: np.random.Generator):
        return self.value

    def pdf(self, value) -> float:
        return 1.0


class _NumericModel(ParzenModel):
    """Mixture over a transformed interval [lo_t, hi_t], with the density
    reported in original coordinates (Jacobian included), so it integrates
    to one over the original domain."""

    def __init__(self, spec: LogUniform | Uniform, t_means: Sequence[float]):
        self.spec = spec
        if isinstance(spec, LogUniform):
            self._fwd = math.log
            self._inv = math.exp
            self._jac = lambda x: 1.0 / x
        else:
            self._fwd = lambda x: x
            self._inv = lambda x: x
            self._jac = lambda x: 1.0
        self.lo_t = self._fwd(spec.lo)
        self.hi_t = self._fwd(spec.hi)
        width = self.hi_t - self.lo_t
        self.components = [
            _TruncGauss(mu, sigma, self.lo_t, self.hi_t)
            for mu, sigma in zip(t_means, _bandwidths(t_means, width))
        ]
        self.weight = 1.0 / (len(self.components) + 1)
        self.width = width

    def pdf_t(self, t: float) -> float:
        total = self.weight / self.width  # uniform prior component
        for comp in self.components:
            total += self.weight * comp.pdf(t)
        return total

    def cdf_t(self, t: float) -> float:
        total = self.weight * (t - self.lo_t) / self.width
        for comp in self.components:
            total += self.weight * comp.cdf(t)
        return total

    def sample_t(self, rng: np.random.Generator) -> float:
        idx = int(rng.integers(0, len(self.components) + 1))
        if idx == len(self.components):
            return float(rng.uniform(self.lo_t, self.hi_t))
        return self.components[idx].sample(rng)

    def sample(self, rng: np.random.Generator) -> float:
        x = self._inv(self.sample_t(rng))
        return min(max(x, self.spec.lo), self.spec.hi)

    def pdf(self, value) -> float:
        return self.pdf_t(self._fwd(value)) * self._jac(value)


class _Pow2Model(ParzenModel):
    """Continuous mixture in exponent space; values are the rounded powers,
    so pdf() is the probability mass of each value's rounding cell."""

    def __init__(self, spec: IntPow2, exponents: Sequence[float]):
        self.spec = spec
        self.lo_t = float(spec.pmin)
        self.hi_t = float(spec.pmax)
        width = self.hi_t - self.lo_t
        self.components = [
            _TruncGauss(mu, sigma, self.lo_t, self.hi_t)
            for mu, sigma in zip(exponents, _bandwidths(exponents, width))
        ]
        self.weight = 1.0 / (len(self.components) + 1)
        self.width = width

    def _cdf_t(self, t: float) -> float:
        total = self.weight * (t - self.lo_t) / self.width
        for comp in self.components:
            total += self.weight * comp.cdf(t)
        return total

    def sample(self, rng: np.random.Generator) -> int:
        idx = int(rng.integers(0, len(self.components) + 1))
        if idx == len(self.components):
            t = float(rng.uniform(self.lo_t, self.hi_t))
        else:
            t = self.components[idx].sample(rng)
        k = int(math.floor(t + 0.5))
        return 2 ** min(max(k, self.spec.pmin), self.spec.pmax)

    def pdf(self, value) -> float:
        k = int(value).bit_length() - 1
        lo = max(k - 0.5, self.lo_t)
        hi = min(k + 0.5, self.hi_t)
        return self._cdf_t(hi) - self._cdf_t(lo)


class _CategoricalModel(ParzenModel):
    def __init__(self, spec: Categorical, observations: Sequence):
        self.choices = spec.choices
        counts = [0] * len(spec.choices)
        for obs in observations:
            counts[spec.choices.index(obs)] += 1
        total = len(observations) + len(spec.choices)
        self.weights = [(c + 1) / total for c in counts]

    def sample(self, rng: np.random.Generator):
        idx = int(rng.choice(len(self.choices), p=self.weights))
        return self.choices[idx]

    def pdf(self, value) -> float:
        return self.weights[self.choices.index(value)]


def _bandwidths(means: Sequence[float], width: float) -> list[float]:
    """Per-component sigma: the larger neighbor gap in sorted order, clipped
    to [width/min(100, n*10), width]. A lone observation gets width."""
    n = len(means)
    if n == 0:
        return []
    lo_clip = width / min(100, n * 10)
    order = sorted(range(n), key=lambda i: means[i])
    sorted_means = [means[i] for i in order]
    out = [0.0] * n
    for rank, idx in enumerate(order):
        gaps = []
        if rank > 0:
            gaps.append(sorted_means[rank] - sorted_means[rank - 1])
        if rank < n - 1:
            gaps.append(sorted_means[rank + 1] - sorted_means[rank])
        raw = max(gaps) if gaps else width
        out[idx] = min(max(raw, lo_clip), width)
    return out


def fit_parzen(observations: Sequence, spec: ParamSpec) -> ParzenModel:
    """Density estimate for one parameter; empty observations give the
    prior alone (flat over the domain)."""
    for obs in observations:
        if not spec.contains(obs):
            raise ValueError(f"observation {obs!r} outside {spec!r}")
    if isinstance(spec, Categorical):
        return _CategoricalModel(spec, observations)
    if isinstance(spec, IntPow2):
        if spec.pmin == spec.pmax:
            return _PointModel(2**spec.pmin)
        exponents = [float(int(v).bit_length() - 1) for v in observations]
        return _Pow2Model(spec, exponents)
    if spec.lo == spec.hi:
        return _PointModel(spec.lo)
    fwd = math.log if isinstance(spec, LogUniform) else (lambda x: x)
    return _NumericModel(spec, [fwd(v) for v in observations])


# -- the study loop ----------------------------------------------------------


@dataclass
class Study:
    """Sampler state: immutable settings plus the append-only history of
    (prm, objective) pairs, always maximizing."""

    space: SearchSpace
    seed: int
    gamma: float = GAMMA
    n_startup: int = N_STARTUP
    n_candidates: int = N_CANDIDATES
    history: list[tuple[dict, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.n_startup < 1 or self.n_candidates < 1:
            raise ValueError("n_startup and n_candidates must be >= 1")
        for prm, _ in self.history:
            if not conforms(self.space, prm):
                raise ValueError(f"history entry {prm!r} does not conform to space")

    def _rng(self) -> np.random.Generator:
        return np.random.default_rng([self.seed, len(self.history)])

    def suggest(self) -> dict:
        rng = self._rng()
        if len(self.history) < self.n_startup:
            return sample_prior(self.space, rng)
        good, bad = split_good_bad(self.history, self.gamma)
        prm: dict = {}
        for name, spec in self.space.items():
            l_model = fit_parzen([entry[0][name] for entry in good], spec)
            g_model = fit_parzen([entry[0][name] for entry in bad], spec)
            candidates = [l_model.sample(rng) for _ in range(self.n_candidates)]
            scores = [l_model.logpdf(c) - g_model.logpdf(c) for c in candidates]
            prm[name] = candidates[int(np.argmax(scores))]
        return prm

    def observe(self, prm: dict, objective: float) -> "Study":
        if not conforms(self.space, prm):
            raise ValueError(f"{prm!r} does not conform to the search space")
        if not math.isfinite(objective):
            raise NonFinite(f"objective {objective!r}")
        self.history.append((dict(prm), float(objective)))
        return self

    # -- checkpointing ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "gamma": self.gamma,
            "n_startup": self.n_startup,
            "n_candidates": self.n_candidates,
            "space": space_to_dict(self.space),
            "history": [
                {"prm": prm, "objective": objective} for prm, objective in self.history
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Study":
        return cls(
            space=space_from_dict(raw["space"]),
            seed=raw["seed"],
            gamma=raw["gamma"],
            n_startup=raw["n_startup"],
            n_candidates=raw["n_candidates"],
            history=[(dict(e["prm"]), float(e["objective"])) for e in raw["history"]],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Study":
        return cls.from_dict(json.loads(text))


def suggest(study: Study) -> dict:
    return study.suggest()


def observe(study: Study, prm: dict, objective: float) -> Study:
    return study.observe(prm, objective)
