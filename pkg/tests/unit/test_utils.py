import numpy as np
import pytest

from malliavin_inspector.utils import (
    is_version_supported,
    mask_members,
    parallel_map,
    popcount,
    spawn_streams,
    split_counts,
    version_string,
)


@pytest.mark.parametrize(
    "version_spec, expected",
    [
        # Descriptor versions that should be accepted
        ("1.0", True),
        ("1", True),
        ("1.0.1", True),
        ("2.3", True),
        # Descriptor versions that are too old
        ("0.9", False),
        ("0.9.9", False),
        # Invalid version strings
        ("invalid", False),
        ("v-one", False),
    ],
)
def test_is_version_supported(version_spec, expected):
    """Test the is_version_supported function with various descriptor versions."""
    result = is_version_supported(version_spec, "1.0")
    assert result == expected, f"Expected {expected} for version spec: {version_spec}"


@pytest.mark.parametrize("version_spec, min_version", [("", "1.0"), ("1.0", ""), (None, "1.0")])
def test_is_version_supported_requires_both(version_spec, min_version):
    with pytest.raises(ValueError):
        is_version_supported(version_spec, min_version)


@pytest.mark.parametrize(
    "total, parts, expected",
    [
        (10, 3, [4, 3, 3]),
        (2, 4, [1, 1, 0, 0]),
        (6, 1, [6]),
    ],
)
def test_split_counts(total, parts, expected):
    assert split_counts(total, parts) == expected


def test_spawn_streams_are_reproducible():
    first = [stream.random(3) for stream in spawn_streams(42, 3)]
    second = [stream.random(3) for stream in spawn_streams(42, 3)]
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a, b)
    assert not np.array_equal(first[0], first[1])
    with pytest.raises(ValueError):
        spawn_streams(42, 0)


@pytest.mark.parametrize("workers", [1, 4])
def test_parallel_map_keeps_order(workers):
    assert parallel_map(lambda x: x * x, list(range(10)), workers) == [x * x for x in range(10)]


@pytest.mark.parametrize("mask, members", [(0, []), (1, [0]), (0b1011, [0, 1, 3])])
def test_mask_members(mask, members):
    assert mask_members(mask) == members
    assert popcount(mask) == len(members)


def test_version_string():
    assert version_string().startswith("0.")
