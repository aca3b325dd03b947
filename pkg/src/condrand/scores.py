"""Score vectors and linear rank statistics.

The test statistic throughout the package is the inner product of a
centered score vector with the 0/1 assignment vector.  Scores are either
centered midranks of the responses ("simple-rank", the default; ties get
midranks) or the centered raw responses.  Interim statistics re-rank and
re-center within the observed prefix, so scores at a look depend only on
the responses seen by that look.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .design import DesignSpec, TreatmentSequence

SIMPLE_RANK = "simple-rank"
RAW = "raw"

_KINDS = (SIMPLE_RANK, RAW)


@dataclass(frozen=True)
class ScoreVector:
    """Centered scores; their sum is zero by construction."""

    values: np.ndarray = field(repr=False)
    kind: str = SIMPLE_RANK

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("scores must form a nonempty 1-D vector")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown score kind {self.kind!r}")
        scale = max(1.0, float(np.abs(arr).max()))
        if abs(float(arr.sum())) > 1e-9 * scale * arr.size:
            raise ValueError("scores must be centered (sum to zero)")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


def centered_scores(responses, kind: str = SIMPLE_RANK) -> ScoreVector:
    """Build a centered score vector from raw responses.

    Args:
        responses: Nonempty sequence of outcomes.
        kind: ``"simple-rank"`` for centered midranks, ``"raw"`` for
            centered raw values.
    """
    x = np.asarray(responses, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("responses must be a nonempty 1-D sequence")
    if kind == SIMPLE_RANK:
        a = rankdata(x, method="average")
    elif kind == RAW:
        a = x
    else:
        raise ValueError(f"unknown score kind {kind!r}")
    return ScoreVector(a - a.mean(), kind)


def _assignment_array(t) -> np.ndarray:
    if isinstance(t, TreatmentSequence):
        return t.assignments
    return np.asarray(t)


def linear_rank_statistic(scores: ScoreVector, t) -> float:
    """V = scores . t for one assignment vector."""
    arr = _assignment_array(t)
    if arr.shape[-1] != len(scores):
        raise ValueError(
            f"length mismatch: {len(scores)} scores vs {arr.shape[-1]} assignments"
        )
    return float(scores.values @ arr)


def statistic_batch(scores: ScoreVector, batch: np.ndarray) -> np.ndarray:
    """V for every row of a (draws, n) assignment matrix."""
    if batch.shape[1] != len(scores):
        raise ValueError("assignment matrix width does not match scores")
    return batch @ scores.values


def interim_statistic(responses, t, cut: int, kind: str = SIMPLE_RANK) -> float:
    """Statistic at an interim look: scores re-ranked over the first ``cut``
    responses, against the first ``cut`` assignments."""
    arr = _assignment_array(t)
    x = np.asarray(responses, dtype=float)
    if not 1 <= cut <= x.size:
        raise ValueError(f"cut {cut} out of range for {x.size} responses")
    if arr.shape[-1] < cut:
        raise ValueError(f"need at least {cut} assignments, got {arr.shape[-1]}")
    return linear_rank_statistic(centered_scores(x[:cut], kind), arr[:cut])


@dataclass(frozen=True)
class Stratum:
    """One independent stratum of a stratified test."""

    scores: ScoreVector
    n1: int
    design: DesignSpec

    def __post_init__(self) -> None:
        if not 0 <= self.n1 <= len(self.scores):
            raise ValueError(
                f"stratum count {self.n1} out of range for {len(self.scores)} subjects"
            )


@dataclass(frozen=True)
class StratifiedData:
    """Disjoint strata, each with its own design and observed group size."""

    strata: tuple[Stratum, ...]

    def __post_init__(self) -> None:
        if not self.strata:
            raise ValueError("need at least one stratum")
        object.__setattr__(self, "strata", tuple(self.strata))

    def __len__(self) -> int:
        return len(self.strata)


def stratified_statistic(data: StratifiedData, sequences) -> float:
    """Sum of per-stratum linear rank statistics."""
    sequences = list(sequences)
    if len(sequences) != len(data):
        raise ValueError(
            f"got {len(sequences)} sequences for {len(data)} strata"
        )
    return float(
        sum(
            linear_rank_statistic(s.scores, t)
            for s, t in zip(data.strata, sequences)
        )
    )
