"""Direct sampling from conditional reference sets.

Sequences are generated one assignment at a time with transition
probabilities that condition on the running count and on the next count
constraint; by a Bayes/Markov argument this reproduces exactly the law of
the procedure restricted to the constrained set, with no rejection step.
A schedule of several interim constraints is handled segment by segment:
within segment k only the next look's constraint enters the transition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .design import DesignSpec, TreatmentSequence, _probability_row, assignment_probability
from .distributions import ConditionalKernel, backward_log_table
from .errors import InfeasibleError
from .streams import as_generator

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class Look:
    """One interim constraint: ``count`` subjects on treatment 1 after
    ``position`` assignments."""

    position: int
    count: int


@dataclass(frozen=True)
class LookSchedule:
    """Ordered interim constraints; the last position is the horizon."""

    looks: tuple[Look, ...]

    def __post_init__(self) -> None:
        looks = tuple(
            l if isinstance(l, Look) else Look(int(l[0]), int(l[1])) for l in self.looks
        )
        if not looks:
            raise ValueError("a schedule needs at least one look")
        prev = Look(0, 0)
        for l in looks:
            if l.position <= prev.position:
                raise ValueError(
                    f"look positions must increase, got {l.position} after {prev.position}"
                )
            gain = l.count - prev.count
            if not 0 <= gain <= l.position - prev.position:
                raise ValueError(
                    f"count {l.count} at position {l.position} is not reachable "
                    f"from count {prev.count} at position {prev.position}"
                )
            prev = l
        object.__setattr__(self, "looks", looks)

    @property
    def horizon(self) -> int:
        return self.looks[-1].position

    @property
    def final_count(self) -> int:
        return self.looks[-1].count

    def __len__(self) -> int:
        return len(self.looks)

    def prefix(self, through_look: int) -> "LookSchedule":
        """Schedule truncated to the first ``through_look`` looks (1-based)."""
        if not 1 <= through_look <= len(self.looks):
            raise ValueError(f"look index {through_look} out of range")
        return LookSchedule(self.looks[:through_look])

    def segments(self) -> Iterable[tuple[int, int, int, int]]:
        """Yield (start, start_count, end, end_count) per segment."""
        prev = Look(0, 0)
        for l in self.looks:
            yield prev.position, prev.count, l.position, l.count
            prev = l

    def segment_of(self, j: int) -> tuple[int, int, int, int]:
        """Segment (start, start_count, end, end_count) with start <= j < end."""
        if not 0 <= j < self.horizon:
            raise ValueError(f"step {j} outside the schedule span")
        for seg in self.segments():
            if seg[0] <= j < seg[2]:
                return seg
        raise AssertionError("unreachable")

    @classmethod
    def single(cls, n: int, n1: int) -> "LookSchedule":
        return cls((Look(int(n), int(n1)),))

    @classmethod
    def from_pairs(cls, pairs) -> "LookSchedule":
        return cls(tuple(Look(int(r), int(c)) for r, c in pairs))

    @classmethod
    def from_json(cls, obj: dict | str) -> "LookSchedule":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls.from_pairs((l["r"], l["n1"]) for l in obj["looks"])

    def to_json(self) -> dict:
        return {"looks": [{"r": l.position, "n1": l.count} for l in self.looks]}


def conditional_transition(
    design: DesignSpec, n: int, n1: int, j: int, m: int, kernel: ConditionalKernel | None = None
) -> float:
    """P(T_{j+1} = 1 | N1(j) = m, N1(n) = n1).

    The assignment probability is reweighted by the ratio of conditional
    reach probabilities of the target; at ``j = 0`` the denominator is the
    unconditional law.
    """
    if kernel is None:
        kernel = ConditionalKernel(design, n)
    denom = kernel.conditional(n1, j, m)
    if denom <= 0.0:
        raise InfeasibleError(
            f"state (j={j}, m={m}) cannot reach N1({n}) = {n1} under {design.label()}"
        )
    numer = kernel.conditional(n1, j + 1, m + 1)
    # forced moves are exact: when one continuation cannot reach the target
    # the other happens with probability 1
    if numer == 0.0:
        return 0.0
    if kernel.conditional(n1, j + 1, m) == 0.0:
        return 1.0
    value = assignment_probability(design, j, m) * numer / denom
    if value > 1.0 + 1e-9:
        raise AssertionError(f"transition probability {value} exceeds 1")
    return min(max(value, 0.0), 1.0)


def multilook_transition(design: DesignSpec, schedule: LookSchedule, j: int, m: int) -> float:
    """Transition probability under a schedule: targets only the next look."""
    start, start_count, end, end_count = schedule.segment_of(j)
    if not start_count <= m <= j:
        raise InfeasibleError(f"count {m} at step {j} violates the look at {start}")
    return conditional_transition(design, end, end_count, j, m)


class MultilookSampler:
    """Draws sequences satisfying every constraint of a schedule.

    Transition probabilities for all reachable states are tabulated once
    (one backward recursion per segment), so repeated draws and batch
    draws cost O(n) lookups per sequence.
    """

    def __init__(self, design: DesignSpec, schedule: LookSchedule):
        self.design = design
        self.schedule = schedule
        n = schedule.horizon
        self.n = n
        psi = np.zeros((n, n + 1))
        for start, start_count, end, end_count in schedule.segments():
            table = backward_log_table(design, start, end, end_count)
            if table[0, start_count] == _NEG_INF:
                raise InfeasibleError(
                    f"look (position {end}, count {end_count}) is unreachable "
                    f"from count {start_count} at position {start} under {design.label()}"
                )
            for j in range(start, end):
                idx = j - start
                mvec = np.arange(j + 1)
                cur = table[idx, : j + 1]
                nxt_up = table[idx + 1, 1 : j + 2]
                with np.errstate(invalid="ignore"):
                    ratio = np.where(cur > _NEG_INF, np.exp(nxt_up - cur), 0.0)
                row = _probability_row(design, j, mvec) * ratio
                if row.max(initial=0.0) > 1.0 + 1e-9:
                    raise AssertionError("transition probability exceeds 1")
                psi[j, : j + 1] = np.clip(row, 0.0, 1.0)
        self._psi = psi

    def transition(self, j: int, m: int) -> float:
        """Tabulated P(T_{j+1} = 1 | state, constraints ahead)."""
        if not 0 <= j < self.n or not 0 <= m <= j:
            raise ValueError(f"invalid state (j={j}, m={m})")
        return float(self._psi[j, m])

    def draw_batch(self, rng: np.random.Generator | int | None, size: int) -> np.ndarray:
        """A (size, n) int8 matrix of independent constrained sequences."""
        rng = as_generator(rng)
        size = int(size)
        out = np.empty((size, self.n), dtype=np.int8)
        m = np.zeros(size, dtype=np.int64)
        for j in range(self.n):
            t = rng.random(size) < self._psi[j, m]
            out[:, j] = t
            m += t
        return out

    def draw(self, rng: np.random.Generator | int | None = None) -> TreatmentSequence:
        return TreatmentSequence(self.draw_batch(rng, 1)[0])

    def accumulate_statistics(
        self,
        rng: np.random.Generator | int | None,
        size: int,
        score_vectors,
    ) -> np.ndarray:
        """Statistics at each look for ``size`` draws, without storing sequences.

        Args:
            score_vectors: One centered score array per look, the l-th
                covering the first r_l positions.

        Returns:
            Array of shape (size, L) of look statistics.
        """
        rng = as_generator(rng)
        ends = [l.position for l in self.schedule.looks]
        padded = []
        for r, sv in zip(ends, score_vectors):
            vals = np.asarray(getattr(sv, "values", sv), dtype=float)
            if vals.size != r:
                raise ValueError(f"score vector for look at {r} has length {vals.size}")
            padded.append(vals)
        size = int(size)
        stats = np.zeros((size, len(ends)))
        m = np.zeros(size, dtype=np.int64)
        look_idx = 0
        for j in range(self.n):
            t = rng.random(size) < self._psi[j, m]
            m += t
            for l in range(look_idx, len(ends)):
                if j < ends[l]:
                    stats[:, l] += t * padded[l][j]
            if j + 1 == ends[look_idx]:
                look_idx += 1
        return stats

    def sequence_log_probability(self, seq) -> float:
        """Log-probability of one admissible sequence under the sampler."""
        bits = seq.assignments if isinstance(seq, TreatmentSequence) else np.asarray(seq)
        if bits.shape[-1] != self.n:
            raise ValueError("sequence length does not match the schedule horizon")
        logp = 0.0
        m = 0
        for j, t in enumerate(bits):
            pr = float(self._psi[j, m])
            step = pr if t else 1.0 - pr
            if step <= 0.0:
                return _NEG_INF
            logp += np.log(step)
            m += int(t)
        return logp


class ConditionalSampler(MultilookSampler):
    """Sampler for a single final-count constraint N1(n) = n1."""

    def __init__(self, design: DesignSpec, n: int, n1: int):
        super().__init__(design, LookSchedule.single(n, n1))


def sample_conditional(
    design: DesignSpec,
    n: int,
    n1: int,
    rng: np.random.Generator | int | None = None,
    size: int | None = None,
):
    """Draw from the reference set {N1(n) = n1}.

    Returns a :class:`TreatmentSequence` when ``size`` is None, else a
    (size, n) int8 matrix.
    """
    sampler = ConditionalSampler(design, n, n1)
    if size is None:
        return sampler.draw(rng)
    return sampler.draw_batch(rng, size)


def sample_multilook(
    design: DesignSpec,
    schedule: LookSchedule,
    rng: np.random.Generator | int | None = None,
    size: int | None = None,
):
    """Draw from the reference set satisfying every look of ``schedule``."""
    sampler = MultilookSampler(design, schedule)
    if size is None:
        return sampler.draw(rng)
    return sampler.draw_batch(rng, size)
