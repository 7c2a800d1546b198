import os
import subprocess
from concurrent import futures
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np
from packaging import version

T = TypeVar("T")
R = TypeVar("R")


def is_version_supported(version_spec: str, min_version: str) -> bool:
    """Check if a descriptor format version meets the minimum requirement.

    Args:
        version_spec: Version string found in the descriptor (e.g. '1.0')
        min_version: Minimum version string (e.g. '1.0')

    Returns:
        bool: True if the version is at least the minimum, False otherwise
    """
    if not version_spec or not min_version:
        raise ValueError("Version specification and minimum version must be provided")

    try:
        return version.parse(str(version_spec)) >= version.parse(min_version)
    except version.InvalidVersion:
        return False


def make_rng(seed: Optional[int]) -> np.random.Generator:
    """Counter-based generator for a single stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_streams(seed: Optional[int], workers: int) -> List[np.random.Generator]:
    """Derive one independent counter-based stream per worker from (seed, worker index).

    The streams only depend on the seed and the worker index, so a fixed
    (seed, workers) pair always reproduces the same draws.
    """
    if workers < 1:
        raise ValueError("Worker count must be at least 1")
    children = np.random.SeedSequence(seed).spawn(workers)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def split_counts(total: int, parts: int) -> List[int]:
    """Split total into parts nearly equal chunks, larger chunks first."""
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def parallel_map(fn: Callable[[T], R], tasks: Sequence[T], workers: int) -> List[R]:
    """Run fn over tasks on a thread pool and return results in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def mask_members(mask: int) -> List[int]:
    """Positions of the set bits of mask, ascending."""
    members = []
    position = 0
    while mask:
        if mask & 1:
            members.append(position)
        mask >>= 1
        position += 1
    return members


@lru_cache(maxsize=1)
def version_string() -> str:
    """Package version, extended with `git describe` output when run from a checkout."""
    from . import __version__  # pylint: disable=import-outside-toplevel

    try:
        described = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
            check=True,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        described = ""
    if described:
        return f"{__version__}+{described}"
    return __version__
