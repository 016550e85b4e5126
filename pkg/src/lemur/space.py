"""Hyperparameter domains: typed parameter specs and the search-space mapping.

A search space is a plain ``dict[str, ParamSpec]``; insertion order is
significant because samplers consume RNG draws per parameter in order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


class InvalidSpace(ValueError):
    """A parameter spec violates its domain constraints."""


@dataclass(frozen=True)
class LogUniform:
    """Positive real sampled uniformly in log space; lo == hi pins the value."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo > 0 and math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidSpace(f"log-uniform bounds must be finite and positive, got ({self.lo}, {self.hi})")
        if self.lo > self.hi:
            raise InvalidSpace(f"log-uniform lo {self.lo} > hi {self.hi}")

    @property
    def pinned(self) -> bool:
        return self.lo == self.hi

    def contains(self, value) -> bool:
        return isinstance(value, (int, float)) and self.lo <= value <= self.hi


@dataclass(frozen=True)
class Uniform:
    """Real sampled uniformly on [lo, hi]; lo == hi pins the value."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidSpace(f"uniform bounds must be finite, got ({self.lo}, {self.hi})")
        if self.lo > self.hi:
            raise InvalidSpace(f"uniform lo {self.lo} > hi {self.hi}")

    @property
    def pinned(self) -> bool:
        return self.lo == self.hi

    def contains(self, value) -> bool:
        return isinstance(value, (int, float)) and self.lo <= value <= self.hi


@dataclass(frozen=True)
class IntPow2:
    """Integer power of two: values 2**k for k in [pmin, pmax]."""

    pmin: int
    pmax: int

    def __post_init__(self):
        if self.pmin < 0:
            raise InvalidSpace(f"binary power must be >= 0, got {self.pmin}")
        if self.pmin > self.pmax:
            raise InvalidSpace(f"binary power pmin {self.pmin} > pmax {self.pmax}")

    @property
    def pinned(self) -> bool:
        return self.pmin == self.pmax

    def values(self) -> list[int]:
        return [2**k for k in range(self.pmin, self.pmax + 1)]

    def contains(self, value) -> bool:
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            return False
        k = value.bit_length() - 1
        return value == 2**k and self.pmin <= k <= self.pmax


@dataclass(frozen=True)
class Categorical:
    """Finite unordered choice set (strings)."""

    choices: tuple[str, ...]

    def __post_init__(self):
        if len(self.choices) == 0:
            raise InvalidSpace("categorical choice set is empty")
        if len(set(self.choices)) != len(self.choices):
            raise InvalidSpace(f"duplicate categorical choices: {self.choices}")

    @property
    def pinned(self) -> bool:
        return len(self.choices) == 1

    def contains(self, value) -> bool:
        return value in self.choices


ParamSpec = Union[LogUniform, Uniform, IntPow2, Categorical]
SearchSpace = dict[str, ParamSpec]


def conforms(space: SearchSpace, prm: dict) -> bool:
    """True when *prm* assigns an in-domain value to every space parameter."""
    if set(prm) != set(space):
        return False
    return all(spec.contains(prm[name]) for name, spec in space.items())


_KINDS = {
    "log_uniform": LogUniform,
    "uniform": Uniform,
    "int_pow2": IntPow2,
    "categorical": Categorical,
}


def spec_to_dict(spec: ParamSpec) -> dict:
    if isinstance(spec, LogUniform):
        return {"kind": "log_uniform", "lo": spec.lo, "hi": spec.hi}
    if isinstance(spec, Uniform):
        return {"kind": "uniform", "lo": spec.lo, "hi": spec.hi}
    if isinstance(spec, IntPow2):
        return {"kind": "int_pow2", "pmin": spec.pmin, "pmax": spec.pmax}
    if isinstance(spec, Categorical):
        return {"kind": "categorical", "choices": list(spec.choices)}
    raise TypeError(f"not a ParamSpec: {spec!r}")


def spec_from_dict(d: dict) -> ParamSpec:
    kind = d.get("kind")
    if kind == "log_uniform":
        return LogUniform(float(d["lo"]), float(d["hi"]))
    if kind == "uniform":
        return Uniform(float(d["lo"]), float(d["hi"]))
    if kind == "int_pow2":
        return IntPow2(int(d["pmin"]), int(d["pmax"]))
    if kind == "categorical":
        return Categorical(tuple(d["choices"]))
    raise InvalidSpace(f"unknown parameter kind {kind!r}")


def space_to_dict(space: SearchSpace) -> dict:
    return {name: spec_to_dict(spec) for name, spec in space.items()}


def space_from_dict(d: dict) -> SearchSpace:
    return {name: spec_from_dict(spec) for name, spec in d.items()}
