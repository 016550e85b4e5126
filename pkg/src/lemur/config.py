"""Canonical benchmark-configuration identifiers and hyperparameter-range arguments.

A configuration names one benchmark setting as ``task_dataset_metric_nn``:
four underscore-joined fields, hyphens allowed inside a field, underscores
forbidden, so the string form parses unambiguously and round-trips.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .space import Categorical, IntPow2, LogUniform, SearchSpace, Uniform

LOWER_TOKEN = re.compile(r"[a-z0-9]+(-[a-z0-9]+)*\Z")
NAME_TOKEN = re.compile(r"[A-Za-z0-9]+(-[A-Za-z0-9]+)*\Z")

MAX_EPOCH_BOUND = 50

# Built-in preprocessing transform names. The engine treats a transform as an
# opaque categorical choice forwarded to the trainer plugin.
DEFAULT_TRANSFORMS = ("identity", "normalize")

_transforms: list[str] = list(DEFAULT_TRANSFORMS)


class MalformedConfig(ValueError):
    """Configuration string does not match the task_dataset_metric_nn grammar."""


class EmptyChoiceSet(ValueError):
    """A categorical domain would be empty."""


def register_transform(name: str) -> None:
    """Add a transform name to the categorical domain offered to studies."""
    if not NAME_TOKEN.match(name):
        raise ValueError(f"transform name {name!r} is not a valid token")
    if name not in _transforms:
        _transforms.append(name)


def registered_transforms() -> tuple[str, ...]:
    return tuple(_transforms)


@dataclass(frozen=True)
class ConfigId:
    """The (task, dataset, metric, nn) 4-tuple naming one benchmark configuration."""

    task: str
    dataset: str
    metric: str
    nn: str

    def __post_init__(self):
        for fname in ("task", "dataset", "metric"):
            value = getattr(self, fname)
            if not isinstance(value, str) or not LOWER_TOKEN.match(value):
                raise MalformedConfig(f"{fname} field {value!r} is not a lowercase token")
        if not isinstance(self.nn, str) or not NAME_TOKEN.match(self.nn):
            raise MalformedConfig(f"nn field {self.nn!r} is not a valid model name")

    def __str__(self) -> str:
        return format_config(self)


def parse_config(s: str) -> ConfigId:
    """Parse ``task_dataset_metric_nn`` into a ConfigId.

    Raises MalformedConfig naming the offending field on any grammar violation.
    """
    if not s:
        raise MalformedConfig("configuration string is empty")
    parts = s.split("_")
    if len(parts) != 4:
        raise MalformedConfig(
            f"expected 4 underscore-separated fields (task_dataset_metric_nn), got {len(parts)} in {s!r}"
        )
    task, dataset, metric, nn = parts
    for fname, value in (("task", task), ("dataset", dataset), ("metric", metric)):
        if not LOWER_TOKEN.match(value):
            raise MalformedConfig(f"{fname} field {value!r} must match [a-z0-9]+(-[a-z0-9]+)*")
    if not NAME_TOKEN.match(nn):
        raise MalformedConfig(f"nn field {nn!r} must match [A-Za-z0-9]+(-[A-Za-z0-9]+)*")
    return ConfigId(task, dataset, metric, nn)


def format_config(c: ConfigId) -> str:
    """Render the canonical string form; inverse of parse_config."""
    return f"{c.task}_{c.dataset}_{c.metric}_{c.nn}"


@dataclass
class RangeArgs:
    """Hyperparameter ranges as given on the command line.

    Setting a minimum equal to its maximum pins that hyperparameter to a
    single value.
    """

    min_learning_rate: float = 1e-4
    max_learning_rate: float = 1.0
    min_batch_binary_power: int = 0
    max_batch_binary_power: int = 6
    min_momentum: float = 0.0
    max_momentum: float = 0.99
    transform: str | None = None
    trials: int = 100
    max_epochs: int = MAX_EPOCH_BOUND

    def validate(self) -> None:
        if not (0 < self.min_learning_rate <= self.max_learning_rate):
            raise ValueError(
                "learning-rate range must satisfy 0 < min <= max, got "
                f"[{self.min_learning_rate}, {self.max_learning_rate}]"
            )
        if not (0 <= self.min_batch_binary_power <= self.max_batch_binary_power):
            raise ValueError(
                "batch binary-power range must satisfy 0 <= min <= max, got "
                f"[{self.min_batch_binary_power}, {self.max_batch_binary_power}]"
            )
        if not (0.0 <= self.min_momentum <= self.max_momentum <= 1.0):
            raise ValueError(
                f"momentum range must lie in [0, 1] with min <= max, got "
                f"[{self.min_momentum}, {self.max_momentum}]"
            )
        if self.transform is not None and not NAME_TOKEN.match(self.transform):
            raise ValueError(f"transform {self.transform!r} is not a valid token")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not (1 <= self.max_epochs <= MAX_EPOCH_BOUND):
            raise ValueError(f"max_epochs must be in [1, {MAX_EPOCH_BOUND}], got {self.max_epochs}")


def space_from_args(args: RangeArgs) -> SearchSpace:
    """Build the study search space {lr, batch, momentum, transform} from ranges."""
    args.validate()
    if args.transform is not None:
        transform_choices = (args.transform,)
    else:
        transform_choices = registered_transforms()
        if not transform_choices:
            raise EmptyChoiceSet("no transforms registered and none pinned via --transform")
    return {
        "lr": LogUniform(args.min_learning_rate, args.max_learning_rate),
        "batch": IntPow2(args.min_batch_binary_power, args.max_batch_binary_power),
        "momentum": Uniform(args.min_momentum, args.max_momentum),
        "transform": Categorical(transform_choices),
    }
