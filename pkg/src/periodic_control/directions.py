"""Direction sampling policies for support-function approximations."""

from __future__ import annotations

import numpy as np

DEFAULT_COUNTS = {1: 2, 2: 64, 3: 256}
DEFAULT_HIGH_DIM_COUNT = 512

_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def default_direction_count(dim: int) -> int:
    return DEFAULT_COUNTS.get(dim, DEFAULT_HIGH_DIM_COUNT)


def sample_directions(dim: int, n: int | None = None, seed: int = 0) -> np.ndarray:
    """Sample unit directions in ``dim`` dimensions, returned as rows.

    Policies: the two signs for dim 1, uniformly spaced angles for dim 2,
    a Fibonacci sphere for dim 3, and seeded Gaussian directions for
    dim >= 4 (the seed must be recorded alongside any output built from
    the samples).
    """
    if dim < 1:
        raise ValueError(f"direction dimension must be >= 1, got {dim}")
    if n is None:
        n = default_direction_count(dim)
    if n < 1:
        raise ValueError("need at least one direction")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        angles = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if dim == 3:
        i = np.arange(n)
        z = 1.0 - 2.0 * (i + 0.5) / n
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = _GOLDEN_ANGLE * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, dim))
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    # resample the (measure-zero) degenerate draws
    bad = norms[:, 0] < 1e-12
    while np.any(bad):
        raw[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        bad = norms[:, 0] < 1e-12
    return raw / norms
