import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lemur.config import (
    DEFAULT_TRANSFORMS,
    ConfigId,
    EmptyChoiceSet,
    MalformedConfig,
    RangeArgs,
    format_config,
    parse_config,
    register_transform,
    space_from_args,
)
from lemur.space import Categorical, IntPow2, LogUniform, Uniform

LOWER = st.from_regex(r"[a-z0-9]+(-[a-z0-9]+)*", fullmatch=True)
NAME = st.from_regex(r"[A-Za-z0-9]+(-[A-Za-z0-9]+)*", fullmatch=True)


def test_parse_splits_four_fields():
    c = parse_config("img-classification_cifar-10_acc_AlexNet")
    assert c == ConfigId("img-classification", "cifar-10", "acc", "AlexNet")


def test_format_is_parse_inverse():
    c = ConfigId("img-classification", "cifar-10", "acc", "AlexNet")
    assert format_config(c) == "img-classification_cifar-10_acc_AlexNet"
    assert parse_config(format_config(c)) == c


def test_minimal_tokens():
    assert format_config(ConfigId("t", "d", "m", "N")) == "t_d_m_N"


@pytest.mark.parametrize(
    "bad",
    [
        "a_b_c",
        "a_b_c_d_e",
        "",
        "a__c_D",
        "_b_c_D",
        "a_b_c_",
        "A_b_c_D",
        "a_b_c_d!",
        "a_b-_c_D",
        "-a_b_c_D",
    ],
)
def test_rejects_bad_strings(bad):
    with pytest.raises(MalformedConfig):
        parse_config(bad)


def test_error_names_offending_field():
    with pytest.raises(MalformedConfig, match="task"):
        parse_config("BAD_b_c_D")
    with pytest.raises(MalformedConfig, match="nn"):
        parse_config("a_b_c_d!")


def test_constructor_validates_fields():
    with pytest.raises(MalformedConfig):
        ConfigId("Upper", "d", "m", "N")
    with pytest.raises(MalformedConfig):
        ConfigId("t", "d", "m", "has_underscore")


@given(LOWER, LOWER, LOWER, NAME)
def test_round_trip_property(task, dataset, metric, nn):
    c = ConfigId(task, dataset, metric, nn)
    assert parse_config(format_config(c)) == c


def test_round_trip_1000_random_ids():
    rng = np.random.default_rng(7)
    lower_alpha = "abcdefghijklmnopqrstuvwxyz0123456789"
    mixed_alpha = lower_alpha + lower_alpha.upper()

    def token(alphabet):
        parts = []
        for _ in range(int(rng.integers(1, 4))):
            length = int(rng.integers(1, 6))
            parts.append("".join(alphabet[int(i)] for i in rng.integers(0, len(alphabet), length)))
        return "-".join(parts)

    for _ in range(1000):
        c = ConfigId(token(lower_alpha), token(lower_alpha), token(lower_alpha), token(mixed_alpha))
        assert parse_config(format_config(c)) == c


def test_space_has_exactly_four_keys():
    space = space_from_args(RangeArgs())
    assert set(space) == {"lr", "batch", "momentum", "transform"}


def test_space_kinds_and_defaults():
    space = space_from_args(RangeArgs())
    assert space["lr"] == LogUniform(1e-4, 1.0)
    assert space["batch"] == IntPow2(0, 6)
    assert space["momentum"] == Uniform(0.0, 0.99)
    assert space["transform"] == Categorical(DEFAULT_TRANSFORMS)


def test_pinned_learning_rate():
    space = space_from_args(RangeArgs(min_learning_rate=0.01, max_learning_rate=0.01))
    assert space["lr"].pinned
    assert space["lr"].lo == 0.01


def test_batch_domain_enumeration():
    space = space_from_args(RangeArgs(min_batch_binary_power=0, max_batch_binary_power=3))
    assert space["batch"].values() == [1, 2, 4, 8]


def test_pinned_transform():
    space = space_from_args(RangeArgs(transform="flip"))
    assert space["transform"] == Categorical(("flip",))


def test_register_transform_extends_choices():
    register_transform("extra-aug")
    try:
        space = space_from_args(RangeArgs())
        assert "extra-aug" in space["transform"].choices
    finally:
        import lemur.config as cfg

        cfg._transforms.remove("extra-aug")


def test_empty_choice_set():
    import lemur.config as cfg

    saved = list(cfg._transforms)
    cfg._transforms.clear()
    try:
        with pytest.raises(EmptyChoiceSet):
            space_from_args(RangeArgs())
    finally:
        cfg._transforms.extend(saved)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"min_learning_rate": 0.1, "max_learning_rate": 0.01},
        {"min_learning_rate": 0.0},
        {"min_batch_binary_power": 4, "max_batch_binary_power": 2},
        {"min_batch_binary_power": -1},
        {"min_momentum": 0.5, "max_momentum": 0.2},
        {"max_momentum": 1.5},
        {"transform": "bad name"},
        {"trials": 0},
        {"max_epochs": 0},
        {"max_epochs": 51},
    ],
)
def test_invalid_ranges_rejected(kwargs):
    with pytest.raises(ValueError):
        space_from_args(RangeArgs(**kwargs))
