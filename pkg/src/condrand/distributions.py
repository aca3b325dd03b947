"""Exact laws of the treatment-1 count under restricted randomization.

The biased coin design drives a reflected random walk on the group-size
imbalance, so both the unconditional law of N1(n) and the law of N1(n)
conditional on an interim count N1(j) have closed forms built from
ballot coefficients.  Every probability is available from two backends:

* ``"float"``: log-scale evaluation with exact integer combinatorics,
  safe for horizons of several hundred;
* ``"exact"``: arbitrary-precision rational arithmetic, intended for
  verification and small-sample exact work (horizons up to a few dozen).

Branches of the conditional law are classified by the walk geometry
(start in deficit / balanced / surplus; end below / at / above balance;
or no return to balance at all), and the classification is exposed for
test coverage via :func:`walk_branch`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .design import COMPLETE, DesignSpec, _probability_row
from .errors import InfeasibleError

__all__ = [
    "ballot_coefficient",
    "unconditional_pmf",
    "conditional_pmf",
    "pmf_table",
    "walk_branch",
    "ConditionalKernel",
    "backward_log_table",
    "backward_exact_table",
]

_NEG_INF = float("-inf")


def _ballot_int(x: int, l: int) -> int:
    """Ballot coefficient C(x, l) as an exact integer.

    C(x, l) counts lattice paths with ``x`` up-steps and ``l`` down-steps
    that never return to their starting level; C(0, 0) = 1 by convention.
    """
    if l < 0 or x < 0:
        raise ValueError(f"ballot coefficient needs nonnegative arguments, got ({x}, {l})")
    if l > x:
        raise ValueError(f"ballot coefficient undefined for l > x ({l} > {x})")
    if l == 0:
        return 1
    if l == x:
        return 0
    num = (x - l) * math.comb(x + l, l)
    assert num % (x + l) == 0
    return num // (x + l)


def ballot_coefficient(x: int, l: int, exact: bool = False):
    """C(x, l) = (x - l)/(x + l) * binom(x + l, l), an integer-valued count.

    Args:
        x: Up-step count, >= 0.
        l: Down-step count, 0 <= l <= x.
        exact: Return the exact integer instead of a float.
    """
    value = _ballot_int(x, l)
    return value if exact else float(value)


# ---------------------------------------------------------------------------
# Branch plans for the closed-form laws.


@dataclass(frozen=True)
class _SeriesPlan:
    """One closed-form branch: optionally halved ballot series plus an
    optional no-return correction term, all times a power of p."""

    label: str
    halved: bool
    p_exp: int
    x: int
    l_max: int
    q_base: int
    trials: int = 0
    correction: tuple[int, int, int] | None = None  # (k1, k2, q_exp)


@dataclass(frozen=True)
class _PurePlan:
    """A branch where the walk never returns to balance: a single binomial
    term ``binom(trials, ones) p^p_exp q^q_exp``."""

    label: str
    trials: int
    ones: int
    p_exp: int
    q_exp: int


def _plan_unconditional(n: int, n1: int):
    if 2 * n1 == n:
        return _SeriesPlan("end_balanced", False, n1, n1, n1 - 1, 0)
    if 2 * n1 < n:
        return _SeriesPlan("end_below", True, n1, n - n1, n1, n - 2 * n1 - 1)
    return _SeriesPlan("end_above", True, n - n1, n1, n - n1, 2 * n1 - n - 1)


def _plan_conditional(n: int, n1: int, j: int, m: int):
    """Branch plan for P(N1(n) = n1 | N1(j) = m), 1 <= j < n, feasible state."""
    if 2 * m < j:
        # start in deficit: imbalance 2m - j < 0
        if n1 < j - m:
            # too few future ones to ever reach balance
            return _PurePlan("deficit_no_return", n - j, n1 - m, n1 - m, n - j - n1 + m)
        if 2 * n1 < n:
            corr = (n1 - m, n1 - j + m, n - j - n1 + m)
            return _SeriesPlan(
                "deficit_end_below", True, n1 - m, n - n1 - m, n1 + m - j,
                n - 2 * n1 - 1, n - j, corr,
            )
        if 2 * n1 == n:
            return _SeriesPlan("deficit_end_balanced", False, n1 - m, n1 - m, n - j - n1 + m, 0)
        return _SeriesPlan(
            "deficit_end_above", True, n - n1 - m, n1 - m, n - j - n1 + m, 2 * n1 - n - 1
        )
    # start in surplus: imbalance 2m - j > 0 (the balanced start is handled
    # by restarting the unconditional law, see conditional_pmf)
    if 2 * n1 < n:
        return _SeriesPlan(
            "surplus_end_below", True, n1 + m - j, n - j - n1 + m, n1 - m, n - 2 * n1 - 1
        )
    if 2 * n1 == n:
        return _SeriesPlan("surplus_end_balanced", False, n - j - n1 + m, n - j - n1 + m, n1 - m, 0)
    if n1 <= n - m:
        corr = (n1 - m, n1 - j + m, n1 - m)
        return _SeriesPlan(
            "surplus_end_above", True, n - j - n1 + m, n1 + m - j, n - n1 - m,
            2 * n1 - n - 1, n - j, corr,
        )
    # too few future zeros to ever reach balance
    return _PurePlan("surplus_no_return", n - j, n1 - m, n - j - n1 + m, n1 - m)


def walk_branch(n: int, n1: int, j: int, m: int) -> str:
    """Name of the closed-form branch used for P(N1(n)=n1 | N1(j)=m).

    Exposed so tests can assert that a sweep exercises every branch.
    """
    _validate_conditional_args(n, n1, j, m)
    if j == n:
        return "certain" if n1 == m else "impossible"
    if m > n1 or n - j < n1 - m:
        return "impossible"
    if j == 0:
        return "unconditional"
    if 2 * m == j:
        return "balanced_restart"
    return _plan_conditional(n, n1, j, m).label


# ---------------------------------------------------------------------------
# Evaluation backends.


def _correction_value(trials: int, corr: tuple[int, int, int]) -> int:
    """No-return path count: difference of a binomial and its reflection.

    k2 may be negative, in which case the reflected term is empty.
    """
    k1, k2, _ = corr
    d = math.comb(trials, k1)
    if 0 <= k2 <= trials:
        d -= math.comb(trials, k2)
    assert d >= 0
    return d


def _eval_series_float(plan: _SeriesPlan, p: float) -> float:
    q = 1.0 - p
    logs: list[float] = []
    if q == 0.0:
        # permuted-block limit: only terms with a zero q-exponent survive
        l0 = -plan.q_base
        if 0 <= l0 <= plan.l_max:
            c = _ballot_int(plan.x, l0)
            if c > 0:
                logs.append(math.log(c))
    else:
        lq = math.log(q)
        for l in range(plan.l_max + 1):
            c = _ballot_int(plan.x, l)
            if c > 0:
                logs.append(math.log(c) + (plan.q_base + l) * lq)
    main = _NEG_INF
    if logs:
        top = max(logs)
        main = top + math.log(sum(math.exp(v - top) for v in logs))
        if plan.halved:
            main += math.log(0.5)
    if plan.correction is not None:
        d = _correction_value(plan.trials, plan.correction)
        q_exp = plan.correction[2]
        if d > 0 and (q > 0.0 or q_exp == 0):
            ld = math.log(d) + (q_exp * math.log(q) if q_exp else 0.0)
            main = np.logaddexp(main, ld)
    if main == _NEG_INF:
        return 0.0
    return math.exp(plan.p_exp * math.log(p) + main)


def _eval_series_exact(plan: _SeriesPlan, p: Fraction) -> Fraction:
    q = 1 - p
    total = Fraction(0)
    for l in range(plan.l_max + 1):
        c = _ballot_int(plan.x, l)
        if c > 0:
            total += c * q ** (plan.q_base + l)
    if plan.halved:
        total /= 2
    if plan.correction is not None:
        d = _correction_value(plan.trials, plan.correction)
        total += d * q ** plan.correction[2]
    return p**plan.p_exp * total


def _eval_pure_float(plan: _PurePlan, p: float) -> float:
    q = 1.0 - p
    if q == 0.0 and plan.q_exp > 0:
        return 0.0
    log_val = math.log(math.comb(plan.trials, plan.ones)) + plan.p_exp * math.log(p)
    if plan.q_exp:
        log_val += plan.q_exp * math.log(q)
    return math.exp(log_val)


def _eval_pure_exact(plan: _PurePlan, p: Fraction) -> Fraction:
    q = 1 - p
    return math.comb(plan.trials, plan.ones) * p**plan.p_exp * q**plan.q_exp


def _eval_plan(plan, p, exact: bool):
    if isinstance(plan, _SeriesPlan):
        return _eval_series_exact(plan, p) if exact else _eval_series_float(plan, p)
    return _eval_pure_exact(plan, p) if exact else _eval_pure_float(plan, p)


def _complete_pmf(trials: int, ones: int, exact: bool):
    if ones < 0 or ones > trials:
        return Fraction(0) if exact else 0.0
    if exact:
        return Fraction(math.comb(trials, ones), 2**trials)
    return math.exp(math.log(math.comb(trials, ones)) - trials * math.log(2.0))


# ---------------------------------------------------------------------------
# Public laws.


def _validate_backend(backend: str) -> bool:
    if backend not in ("float", "exact"):
        raise ValueError(f"backend must be 'float' or 'exact', got {backend!r}")
    return backend == "exact"


def unconditional_pmf(design: DesignSpec, n: int, n1: int, backend: str = "float"):
    """P(N1(n) = n1) under the design.

    Args:
        design: Randomization procedure.
        n: Horizon, >= 1.
        n1: Treatment-1 count, 0 <= n1 <= n.
        backend: ``"float"`` (log-scale) or ``"exact"`` (rational).
    """
    exact = _validate_backend(backend)
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    if not 0 <= n1 <= n:
        raise ValueError(f"count {n1} out of range for horizon {n}")
    if design.kind == COMPLETE:
        return _complete_pmf(n, n1, exact)
    p = design.exact_p() if exact else design.p
    return _eval_plan(_plan_unconditional(n, n1), p, exact)


def _validate_conditional_args(n: int, n1: int, j: int, m: int) -> None:
    if n < 1:
        raise ValueError(f"horizon must be >= 1, got {n}")
    if not 0 <= n1 <= n:
        raise ValueError(f"target count {n1} out of range for horizon {n}")
    if not 0 <= j <= n:
        raise ValueError(f"step {j} out of range for horizon {n}")
    if not 0 <= m <= j:
        raise ValueError(f"interim count {m} out of range for step {j}")


def conditional_pmf(
    design: DesignSpec, n: int, n1: int, j: int, m: int, backend: str = "float"
):
    """P(N1(n) = n1 | N1(j) = m) under the design.

    Conventions: equals 1 when ``j == n`` and ``n1 == m``; equals 0 when the
    target is unreachable; equals the unconditional law when ``j == 0``.
    """
    exact = _validate_backend(backend)
    _validate_conditional_args(n, n1, j, m)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    if j == n:
        return one if n1 == m else zero
    if m > n1 or n - j < n1 - m:
        return zero
    if j == 0:
        return unconditional_pmf(design, n, n1, backend)
    if design.kind == COMPLETE:
        return _complete_pmf(n - j, n1 - m, exact)
    if 2 * m == j:
        # balanced interim state: the walk restarts afresh
        return unconditional_pmf(design, n - j, n1 - m, backend)
    p = design.exact_p() if exact else design.p
    value = _eval_plan(_plan_conditional(n, n1, j, m), p, exact)
    if not exact:
        value = min(value, 1.0)
    return value


def pmf_table(design: DesignSpec, n: int, backend: str = "float"):
    """The full vector of P(N1(n) = n1) for n1 = 0..n."""
    exact = _validate_backend(backend)
    values = [unconditional_pmf(design, n, n1, backend) for n1 in range(n + 1)]
    if exact:
        return values
    return np.asarray(values)


# ---------------------------------------------------------------------------
# Bulk tables by backward recursion.
#
# The closed forms above price one state at a time.  Samplers and
# covariance assembly need every reachable state for a fixed target, which
# the one-step backward recursion over the assignment probabilities
# delivers in O(horizon^2); tests pin it to the closed forms.


def backward_log_table(
    design: DesignSpec, start: int, end: int, target: int
) -> np.ndarray:
    """Log-probability table B[idx, m] = log P(N1(end) = target | N1(start+idx) = m).

    Rows run over steps ``start..end``; entries for unreachable states
    are ``-inf``.
    """
    if not 0 <= start < end:
        raise ValueError(f"need 0 <= start < end, got ({start}, {end})")
    if not 0 <= target <= end:
        raise ValueError(f"target {target} out of range for horizon {end}")
    steps = end - start
    table = np.full((steps + 1, end + 2), _NEG_INF)
    table[steps, target] = 0.0
    with np.errstate(divide="ignore"):
        for j in range(end - 1, start - 1, -1):
            idx = j - start
            mvec = np.arange(j + 1)
            pr = _probability_row(design, j, mvec)
            lp1 = np.log(pr)
            lp0 = np.log1p(-pr)
            nxt = table[idx + 1]
            table[idx, : j + 1] = np.logaddexp(
                lp1 + nxt[1 : j + 2], lp0 + nxt[: j + 1]
            )
            table[idx, j + 1 :] = _NEG_INF
    return table


def backward_exact_table(
    design: DesignSpec, start: int, end: int, target: int
) -> list[list[Fraction]]:
    """Rational version of :func:`backward_log_table` (linear scale)."""
    from .design import assignment_probability_exact

    if not 0 <= start < end:
        raise ValueError(f"need 0 <= start < end, got ({start}, {end})")
    if not 0 <= target <= end:
        raise ValueError(f"target {target} out of range for horizon {end}")
    steps = end - start
    zero = Fraction(0)
    table = [[zero] * (end + 2) for _ in range(steps + 1)]
    table[steps][target] = Fraction(1)
    for j in range(end - 1, start - 1, -1):
        idx = j - start
        nxt = table[idx + 1]
        row = table[idx]
        for m in range(j + 1):
            phi = assignment_probability_exact(design, j, m)
            row[m] = phi * nxt[m + 1] + (1 - phi) * nxt[m]
    return table


class ConditionalKernel:
    """Memoized access to the laws of one design at one horizon.

    Sampling revisits the same conditional values many times per drawn
    sequence, so values are cached per instance; there is no global cache.
    """

    def __init__(self, design: DesignSpec, n: int, backend: str = "float"):
        _validate_backend(backend)
        if n < 1:
            raise ValueError(f"horizon must be >= 1, got {n}")
        self.design = design
        self.n = int(n)
        self.backend = backend
        self._cond: dict[tuple[int, int, int], object] = {}
        self._uncond: dict[int, object] = {}
        self._tables: dict[tuple[int, int, int], np.ndarray] = {}

    def unconditional(self, n1: int):
        if n1 not in self._uncond:
            self._uncond[n1] = unconditional_pmf(self.design, self.n, n1, self.backend)
        return self._uncond[n1]

    def conditional(self, n1: int, j: int, m: int):
        key = (n1, j, m)
        if key not in self._cond:
            self._cond[key] = conditional_pmf(self.design, self.n, n1, j, m, self.backend)
        return self._cond[key]

    def support(self, j: int, m: int) -> range:
        """Counting-feasible final counts from state (j, m)."""
        return range(m, self.n - j + m + 1)

    def backward(self, start: int, end: int, target: int) -> np.ndarray:
        """Cached :func:`backward_log_table` segment (float backend only)."""
        key = (start, end, target)
        if key not in self._tables:
            self._tables[key] = backward_log_table(self.design, start, end, target)
        return self._tables[key]


def require_feasible(design: DesignSpec, n: int, n1: int) -> float:
    """Return P(N1(n) = n1), raising if the conditioning event is null."""
    pi = unconditional_pmf(design, n, n1)
    if pi <= 0.0:
        raise InfeasibleError(
            f"N1({n}) = {n1} has probability zero under {design.label()}"
        )
    return pi
