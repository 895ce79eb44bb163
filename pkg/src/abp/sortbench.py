"""Self-tuning hybrid sort: per-size choice between insertion and merge sort.

Each sort call looks up its size context (the integer square root of the
list length, to keep the table small), asks a cost-minimizing action
table which algorithm to run, measures what the complete sort of that
sublist cost (including the recursive sub-sorts inside merge sort, which
go back through the same adaptive selection), and feeds the cost back to
the table.  Over many lists the table converges to "insertion sort below
some size, merge sort above it".

Three cost models are provided: wall-clock seconds, exact comparison
counts (deterministic, the default for reproducible benchmarks), and a
synthetic per-(context, algorithm) cost table for planted-ground-truth
tests.
"""

from __future__ import annotations

import random
import time
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from math import isqrt
from typing import Any, ClassVar, Mapping

from .core import Contextual, decode, encode, register_enum, register_kind

__all__ = [
    "SortAlg",
    "ActionTable",
    "running_average",
    "action_value",
    "action_adapt",
    "fresh_sort_action",
    "fresh_sort_table",
    "isort",
    "msort",
    "asort",
    "policy_sort",
    "fixed_cutoff_sort",
    "WallClock",
    "ComparisonCount",
    "SyntheticCost",
    "make_cost_model",
    "planted_cost_table",
    "SortBenchConfig",
    "train_sort_table",
    "inferred_cutoff",
    "run_sort_benchmark",
]

EXPLORE_CUTOFF = 8


@register_enum
class SortAlg(Enum):
    MSORT = "msort"
    ISORT = "isort"


def running_average(count: int, avg: float, cost: float) -> float:
    """Average of ``count`` samples at ``avg`` extended by one more ``cost``."""
    return (count * avg + cost) / (count + 1)


@register_kind
@dataclass(frozen=True)
class ActionTable:
    """Cost-minimizing action chooser with forced exploration.

    Entries are ``(action, chosen_count, avg_cost)``.  While any action
    has fewer than ``explore_cutoff`` observations the first such action
    is chosen; afterwards the cheapest on average wins, ties going to
    the earlier entry.  Feedback ``(action, cost)`` bumps the count and
    folds the cost into the running average.
    """

    entries: tuple
    explore_cutoff: int = EXPLORE_CUTOFF

    kind: ClassVar[str] = "action_table"

    def __post_init__(self) -> None:
        entries = tuple((a, int(n), float(c)) for a, n, c in self.entries)
        if not entries:
            raise ValueError("an action table needs at least one entry")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def fresh(cls, actions: Any, explore_cutoff: int = EXPLORE_CUTOFF) -> "ActionTable":
        return cls(tuple((a, 0, 0.0) for a in actions), explore_cutoff)

    def value(self) -> Any:
        for action, count, _ in self.entries:
            if count < self.explore_cutoff:
                return action
        best = None
        best_cost = None
        for action, _, avg in self.entries:
            if best_cost is None or avg < best_cost:
                best, best_cost = action, avg
        return best

    def adapt(self, feedback: tuple[Any, float]) -> "ActionTable":
        action, cost = feedback
        for i, (a, count, avg) in enumerate(self.entries):
            if a == action:
                entry = (a, count + 1, running_average(count, avg, cost))
                return _action_table_unchecked(
                    self.entries[:i] + (entry,) + self.entries[i + 1:], self.explore_cutoff
                )
        return self

    def _payload(self) -> dict:
        return {
            "entries": [[encode(a), n, c] for a, n, c in self.entries],
            "cutoff": self.explore_cutoff,
        }

    @classmethod
    def _from_payload(cls, payload: dict) -> "ActionTable":
        return cls(tuple((decode(a), n, c) for a, n, c in payload["entries"]), payload["cutoff"])


def _action_table_unchecked(entries: tuple, explore_cutoff: int) -> ActionTable:
    # adapt-path constructor: entries come from an already-validated table.
    obj = object.__new__(ActionTable)
    object.__setattr__(obj, "entries", entries)
    object.__setattr__(obj, "explore_cutoff", explore_cutoff)
    return obj


def action_value(table: ActionTable) -> Any:
    return table.value()


def action_adapt(feedback: tuple[Any, float], table: ActionTable) -> ActionTable:
    return table.adapt(feedback)


def fresh_sort_action(explore_cutoff: int = EXPLORE_CUTOFF) -> ActionTable:
    return ActionTable.fresh((SortAlg.MSORT, SortAlg.ISORT), explore_cutoff)


def fresh_sort_table(explore_cutoff: int = EXPLORE_CUTOFF) -> Contextual:
    """Size-keyed table of sort-method choosers, empty except the prototype."""
    return Contextual(prototype=fresh_sort_action(explore_cutoff))


# ---------------------------------------------------------------------------
# Counting sorts.  Every sort returns (sorted list, comparison count) so the
# comparison-count cost model needs no global instrumentation.
# ---------------------------------------------------------------------------


def _isort(xs: list) -> tuple[list, int]:
    # Backward-scan insertion sort.  The scan compares out[j] > key for
    # j = i-1 down to the insertion point p (bisect_right of the sorted
    # prefix, since the scan stops at equal keys), so it costs i - p
    # true comparisons plus one false comparison unless the scan ran off
    # the front.  Counting from p lets the shifts run as one slice move.
    out = list(xs)
    comps = 0
    for i in range(1, len(out)):
        key = out[i]
        p = bisect_right(out, key, 0, i)
        comps += (i - p) + (1 if p > 0 else 0)
        if p != i:
            out[p + 1 : i + 1] = out[p:i]
            out[p] = key
    return out, comps


def _merge(us: list, vs: list) -> tuple[list, int]:
    out: list = []
    i = j = comps = 0
    nu, nv = len(us), len(vs)
    while i < nu and j < nv:
        comps += 1
        if us[i] <= vs[j]:
            out.append(us[i])
            i += 1
        else:
            out.append(vs[j])
            j += 1
    out.extend(us[i:])
    out.extend(vs[j:])
    return out, comps


def isort(xs: list) -> list:
    """Plain insertion sort (non-recursive)."""
    return _isort(xs)[0]


def _asort(q: Contextual, xs: list, model: Any) -> tuple[list, Contextual, int]:
    n = len(xs)
    context = isqrt(n)
    algorithm = q.value_at(context)
    started = time.perf_counter() if model.needs_time else 0.0
    if algorithm is SortAlg.ISORT:
        ys, comps = _isort(xs)
    else:
        ys, q, comps = _msort(q, n, xs, model)
    elapsed = (time.perf_counter() - started) if model.needs_time else 0.0
    cost = model.cost(elapsed, comps, context, algorithm)
    return ys, q.adapt((context, (algorithm, cost))), comps


def _msort(q: Contextual, n: int, xs: list, model: Any) -> tuple[list, Contextual, int]:
    if n < 2:
        return list(xs), q, 0
    k = n // 2
    left, q, comps_left = _asort(q, xs[:k], model)
    right, q, comps_right = _asort(q, xs[k:], model)
    merged, comps_merge = _merge(left, right)
    return merged, q, comps_left + comps_right + comps_merge


def asort(q: Contextual, xs: list, cost_model: Any) -> tuple[list, Contextual]:
    """Adaptive sort: one method choice and one table update per call.

    Merge sort delegates both halves back to ``asort``, so a single
    top-level call adapts the table once per node of the recursion tree,
    each update covering the complete cost of sorting that sublist.
    """
    ys, q, _ = _asort(q, xs, cost_model)
    return ys, q


def msort(q: Contextual, n: int, xs: list, cost_model: Any) -> tuple[list, Contextual]:
    """Merge sort step: split at n // 2 and adaptively sort both halves."""
    ys, q, _ = _msort(q, n, xs, cost_model)
    return ys, q


def policy_sort(q: Contextual, xs: list) -> tuple[list, int]:
    """Sort with the table's current policy, without adapting it."""
    n = len(xs)
    if q.value_at(isqrt(n)) is SortAlg.ISORT:
        return _isort(xs)
    if n < 2:
        return list(xs), 0
    k = n // 2
    left, comps_left = policy_sort(q, xs[:k])
    right, comps_right = policy_sort(q, xs[k:])
    merged, comps_merge = _merge(left, right)
    return merged, comps_left + comps_right + comps_merge


def fixed_cutoff_sort(xs: list, cutoff: int) -> tuple[list, int]:
    """Classic hybrid: insertion sort at or below ``cutoff``, else merge sort.

    ``cutoff=1`` degenerates to pure merge sort.
    """
    n = len(xs)
    if n <= cutoff or n < 2:
        return _isort(xs)
    k = n // 2
    left, comps_left = fixed_cutoff_sort(xs[:k], cutoff)
    right, comps_right = fixed_cutoff_sort(xs[k:], cutoff)
    merged, comps_merge = _merge(left, right)
    return merged, comps_left + comps_right + comps_merge


# ---------------------------------------------------------------------------
# Cost models.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WallClock:
    """Elapsed seconds, timer overhead and all.  Not reproducible."""

    needs_time: ClassVar[bool] = True
    deterministic: ClassVar[bool] = False

    def cost(self, elapsed: float, comparisons: int, context: int, algorithm: SortAlg) -> float:
        return elapsed


@dataclass(frozen=True)
class ComparisonCount:
    """Number of element comparisons; deterministic given the input list."""

    needs_time: ClassVar[bool] = False
    deterministic: ClassVar[bool] = True

    def cost(self, elapsed: float, comparisons: int, context: int, algorithm: SortAlg) -> float:
        return float(comparisons)


@dataclass(frozen=True)
class SyntheticCost:
    """Planted per-(context, algorithm) costs for ground-truth tests."""

    table: Mapping[tuple[int, SortAlg], float]

    needs_time: ClassVar[bool] = False
    deterministic: ClassVar[bool] = True

    def cost(self, elapsed: float, comparisons: int, context: int, algorithm: SortAlg) -> float:
        return self.table[(context, algorithm)]


def planted_cost_table(max_context: int, crossover_context: int) -> dict:
    """Synthetic costs whose best algorithm flips to merge sort at a context."""
    table = {}
    for context in range(max_context + 1):
        msort_wins = context >= crossover_context
        table[(context, SortAlg.MSORT)] = 0.25 if msort_wins else 0.75
        table[(context, SortAlg.ISORT)] = 0.75 if msort_wins else 0.25
    return table


def make_cost_model(name: str, max_len: int, synthetic_crossover: int = 17) -> Any:
    if name == "wall":
        return WallClock()
    if name == "cmp":
        return ComparisonCount()
    if name == "synthetic":
        return SyntheticCost(planted_cost_table(isqrt(max_len), synthetic_crossover))
    raise ValueError(f"unknown cost model: {name!r} (expected wall, cmp, or synthetic)")


# ---------------------------------------------------------------------------
# Benchmark harness.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SortBenchConfig:
    """Knobs for one benchmark run."""

    max_len: int = 2048
    episodes: int = 5000
    cost_model: str = "cmp"
    seed: int = 0
    min_len: int = 4
    eval_lists: int = 100
    eval_len: int | None = None
    sweep_cutoffs: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)
    baseline_cutoffs: tuple[int, ...] = (10, 1000)
    synthetic_crossover: int = 17

    def __post_init__(self) -> None:
        if self.max_len < 1:
            raise ValueError("max_len must be at least 1")
        if not 1 <= self.min_len <= self.max_len:
            raise ValueError("min_len must lie in 1..max_len")
        if self.episodes < 0 or self.eval_lists < 0:
            raise ValueError("episodes and eval_lists must be nonnegative")
        max_context = isqrt(self.max_len)
        if self.cost_model == "synthetic" and self.synthetic_crossover > max_context + 1:
            raise ValueError(
                f"synthetic crossover context {self.synthetic_crossover} exceeds the "
                f"largest reachable context {max_context}"
            )


def _random_list(rng: random.Random, length: int) -> list[int]:
    return [rng.randrange(1_000_000) for _ in range(length)]


def train_sort_table(
    config: SortBenchConfig, model: Any, rng: random.Random, table: Contextual | None = None
) -> Contextual:
    """Adaptively sort ``episodes`` random lists, threading the table through."""
    q = table if table is not None else fresh_sort_table()
    for _ in range(config.episodes):
        xs = _random_list(rng, rng.randint(config.min_len, config.max_len))
        _, q = asort(q, xs, model)
    return q


def inferred_cutoff(q: Contextual) -> dict:
    """Where the learned policy switches to merge sort.

    The cutoff context is the smallest context from which merge sort
    wins at every decided context upward (a context is decided once both
    algorithms are past the exploration cutoff).  Contexts aggregate all
    lengths with the same integer square root, so the cutoff is also
    reported as the midpoint length of the cutoff context's bucket.
    """
    decided: dict[int, SortAlg] = {}
    for context, table in q.overrides.items():
        counts = {a: n for a, n, _ in table.entries}
        if all(n >= table.explore_cutoff for n in counts.values()):
            decided[context] = table.value()
    if not decided:
        return {"context": None, "length": None}
    contexts = sorted(decided)
    cutoff_context = contexts[-1] + 1
    for context in reversed(contexts):
        if decided[context] is SortAlg.MSORT:
            cutoff_context = context
        else:
            break
    return {"context": cutoff_context, "length": cutoff_context * (cutoff_context + 1)}


def run_sort_benchmark(config: SortBenchConfig) -> dict:
    """Train, freeze, and score the learned policy against fixed baselines.

    Evaluation always counts comparisons on fresh lists (deterministic
    and machine-independent), whatever cost model drove the training.
    """
    model = make_cost_model(config.cost_model, config.max_len, config.synthetic_crossover)
    rng = random.Random(config.seed)
    q = train_sort_table(config, model, rng)

    policy_rows = []
    for context in sorted(q.overrides):
        table = q.overrides[context]
        entry = {a: (n, c) for a, n, c in table.entries}
        policy_rows.append(
            {
                "context": context,
                "algorithm": table.value().value,
                "counts": {a.value: entry[a][0] for a in (SortAlg.MSORT, SortAlg.ISORT)},
                "avg_costs": {a.value: entry[a][1] for a in (SortAlg.MSORT, SortAlg.ISORT)},
            }
        )

    cutoff = inferred_cutoff(q)

    eval_len = config.eval_len if config.eval_len is not None else config.max_len
    eval_rng = random.Random(1_000_003 * config.seed + 1)
    eval_lists = [_random_list(eval_rng, eval_len) for _ in range(config.eval_lists)]

    learned_total = 0
    for xs in eval_lists:
        _, comps = policy_sort(q, xs)
        learned_total += comps

    sweep = {}
    for cutoff_len in config.sweep_cutoffs:
        total = 0
        for xs in eval_lists:
            _, comps = fixed_cutoff_sort(xs, cutoff_len)
            total += comps
        sweep[str(cutoff_len)] = total
    best_fixed_cutoff = min(sweep, key=lambda k: (sweep[k], int(k)))

    baselines = {
        "no_cutoff": sum(fixed_cutoff_sort(xs, 1)[1] for xs in eval_lists),
        **{
            f"cutoff_{c}": sum(fixed_cutoff_sort(xs, c)[1] for xs in eval_lists)
            for c in config.baseline_cutoffs
        },
        "sweep": sweep,
        "best_fixed": {"cutoff": int(best_fixed_cutoff), "comparisons": sweep[best_fixed_cutoff]},
    }

    return {
        "config": {
            "max_len": config.max_len,
            "episodes": config.episodes,
            "cost_model": config.cost_model,
            "seed": config.seed,
            "min_len": config.min_len,
            "eval_lists": config.eval_lists,
            "eval_len": eval_len,
        },
        "deterministic": model.deterministic,
        "policy": policy_rows,
        "cutoff": cutoff["length"],
        "cutoff_context": cutoff["context"],
        "learned": {"comparisons": learned_total},
        "baselines": baselines,
    }
