"""Drivers that turn one-step adaptation into runs, tournaments, and traces.

All drivers return the full list of intermediate states (the trace), so
the final state is ``trace[-1]`` and the value history is
``values_of(trace)``.  Iterator variants exist for monitor-driven
stopping where the run length is not known up front.

Feedback functions must be pure; stochastic opponents should close over
an explicitly seeded RNG so traces replay exactly.
"""

from __future__ import annotations

import csv
import json
from typing import Any, Callable, Iterable, Iterator, Sequence

from .core import Pair, encode

__all__ = [
    "train_by",
    "train_by_iter",
    "trans_by",
    "evolve",
    "evolve_iter",
    "distr",
    "coevolve",
    "vs",
    "transform_by",
    "cotransform",
    "values_of",
    "write_trace_csv",
    "write_trace_jsonl",
]


def train_by(initial: Any, feedbacks: Iterable[Any]) -> list:
    """Fold feedback into the state, keeping every intermediate state."""
    trace = [initial]
    state = initial
    for fb in feedbacks:
        state = state.adapt(fb)
        trace.append(state)
    return trace


def train_by_iter(initial: Any, feedbacks: Iterable[Any]) -> Iterator:
    """Lazy ``train_by``: yields the initial state, then each successor."""
    state = initial
    yield state
    for fb in feedbacks:
        state = state.adapt(fb)
        yield state


def trans_by(state: Any, feedbacks: Iterable[Any]) -> Any:
    """Fold feedback into the state without keeping history."""
    for fb in feedbacks:
        state = state.adapt(fb)
    return state


def evolve(feedback_fn: Callable[[Any], Any], initial: Any, steps: int) -> list:
    """Self-feedback loop: each step adapts with feedback on the current value."""
    trace = [initial]
    state = initial
    for _ in range(steps):
        state = state.adapt(feedback_fn(state.value()))
        trace.append(state)
    return trace


def evolve_iter(feedback_fn: Callable[[Any], Any], initial: Any) -> Iterator:
    """Unbounded ``evolve``; consume with a monitor or ``itertools.islice``."""
    state = initial
    while True:
        yield state
        state = state.adapt(feedback_fn(state.value()))


def distr(f: Callable[[Any, Any], Any], g: Callable[[Any, Any], Any]) -> Callable:
    """Turn two two-argument feedback functions into pair feedback."""

    def paired(values: tuple[Any, Any]) -> tuple[Any, Any]:
        va, vb = values
        return (f(va, vb), g(va, vb))

    return paired


def coevolve(
    f: Callable[[Any, Any], Any],
    g: Callable[[Any, Any], Any],
    pair: tuple[Any, Any],
    steps: int,
) -> list[Pair]:
    """Evolve two adaptives in lockstep; both values feed both functions."""
    a, b = pair
    return evolve(distr(f, g), Pair(a, b), steps)


def vs(
    player_a: tuple[Any, Callable[[Any, Any], Any]],
    player_b: tuple[Any, Callable[[Any, Any], Any]],
    rounds: int,
) -> list[Pair]:
    """Tournament: each player's feedback function sees (own, opponent) values."""
    a, f = player_a
    b, g = player_b
    return coevolve(f, lambda va, vb: g(vb, va), (a, b), rounds)


def transform_by(state: Any, transforms: Iterable[Callable[[Any], Any]]) -> list:
    """Apply whole-state transforms in order, keeping every intermediate state."""
    trace = [state]
    for transform in transforms:
        state = transform(state)
        trace.append(state)
    return trace


def cotransform(
    f: Callable[[Any, Any], Any],
    g: Callable[[Any, Any], Any],
    pair: tuple[Any, Any],
    steps: int,
) -> list[tuple[Any, Any]]:
    """Big-step co-evolution over whole-state transforms.

    Each step replaces the pair ``(x, y)`` by ``(f(x, y), g(y, x))``;
    note that ``g`` receives its own state first.
    """
    x, y = pair
    trace = [(x, y)]
    for _ in range(steps):
        x, y = f(x, y), g(y, x)
        trace.append((x, y))
    return trace


def values_of(trace: Sequence[Any]) -> list:
    """Value history of a trace."""
    return [state.value() for state in trace]


# ---------------------------------------------------------------------------
# Trace emission.  Row i holds snapshot i and the feedback that produced it
# (empty for the initial snapshot).
# ---------------------------------------------------------------------------


def _feedback_cells(trace: Sequence[Any], feedbacks: Sequence[Any] | None) -> list:
    cells: list[Any] = [None] * len(trace)
    if feedbacks is not None:
        for i, fb in enumerate(feedbacks[: len(trace) - 1]):
            cells[i + 1] = fb
    return cells


def write_trace_csv(path: Any, trace: Sequence[Any], feedbacks: Sequence[Any] | None = None) -> None:
    """Write a trace as CSV with columns step, value_json, feedback_json."""
    cells = _feedback_cells(trace, feedbacks)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", "value_json", "feedback_json"])
        for step, state in enumerate(trace):
            value_json = json.dumps(encode(state.value()), sort_keys=True, separators=(",", ":"))
            fb = cells[step]
            fb_json = "" if fb is None else json.dumps(encode(fb), sort_keys=True, separators=(",", ":"))
            writer.writerow([step, value_json, fb_json])


def write_trace_jsonl(path: Any, trace: Sequence[Any], feedbacks: Sequence[Any] | None = None) -> None:
    """Write a trace as JSON lines with step, value, and feedback fields."""
    cells = _feedback_cells(trace, feedbacks)
    with open(path, "w") as handle:
        for step, state in enumerate(trace):
            record = {
                "step": step,
                "value": encode(state.value()),
                "feedback": None if cells[step] is None else encode(cells[step]),
            }
            handle.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            handle.write("\n")
