"""Shared containers, error types, and deterministic RNG derivation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DataShapeError(ValueError):
    """Inputs have incompatible or invalid dimensions."""


class DegenerateSampleError(ValueError):
    """The sample admits no meaningful statistic (e.g. all rows identical)."""


class DegenerateFeatureError(ValueError):
    """A feature's estimated variance is zero."""


class InsufficientScalesError(RuntimeError):
    """Fewer than three usable scales survive for the scaling-law fit."""


class DataFormatError(ValueError):
    """Malformed input file."""


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator that is a pure function of ``(seed, key)``.

    Distinct keys yield statistically independent streams, so work items
    (features, scales, trials) can be computed in any order or in parallel
    without changing results.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def derive_seed(seed: int, *key: int) -> int:
    """64-bit integer sub-seed derived deterministically from ``(seed, key)``."""
    words = np.random.SeedSequence(seed, spawn_key=key).generate_state(2)
    return (int(words[0]) << 32) | int(words[1])


@dataclass(frozen=True)
class Design:
    """Index tuples defining an incomplete U-statistic over ``n`` items.

    ``tuples`` is an (l, arity) integer array; arity is 2 for two-sample
    pair statistics and 4 for independence statistics.  Tuples may repeat
    (sampling with replacement) but indices within a tuple are distinct.
    """

    tuples: np.ndarray
    n: int

    def __post_init__(self) -> None:
        tuples = np.asarray(self.tuples, dtype=np.intp)
        if tuples.ndim != 2:
            raise DataShapeError("design tuples must form a 2-D index array")
        object.__setattr__(self, "tuples", tuples)
        if len(tuples) == 0:
            raise DataShapeError("design is empty")
        if tuples.min() < 0 or tuples.max() >= self.n:
            raise DataShapeError(f"design indices must lie in [0, {self.n})")
        sorted_rows = np.sort(tuples, axis=1)
        if (np.diff(sorted_rows, axis=1) == 0).any():
            raise DataShapeError("design tuples must have distinct indices")

    def __len__(self) -> int:
        return len(self.tuples)

    @property
    def arity(self) -> int:
        return self.tuples.shape[1]


@dataclass
class MultiStat:
    """Scaled per-feature statistic vector with its estimated covariance.

    ``t[i]`` is the scaled estimate for feature i and ``sigma`` the sample
    covariance of the per-tuple kernel evaluations across features, which
    estimates the covariance of ``t`` itself.
    """

    t: np.ndarray
    sigma: np.ndarray
    l: int
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        d = self.t.shape[0]
        if self.sigma.shape != (d, d):
            raise DataShapeError("sigma must be d x d for a d-vector t")
        if not self.feature_names:
            self.feature_names = [f"f{i}" for i in range(d)]
        if len(self.feature_names) != d:
            raise DataShapeError("feature_names length must match t")

    @property
    def dim(self) -> int:
        return self.t.shape[0]
