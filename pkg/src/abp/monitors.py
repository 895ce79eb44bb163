"""Monitors: pure observations over trace prefixes, and monitor-driven stops.

A monitor is any function from a trace prefix (a list of adaptive
states) to an observation; stopping monitors return booleans.
"""

from __future__ import annotations

from typing import Any, Callable, Iterable, Sequence

__all__ = [
    "Monitor",
    "monitor",
    "ensure_last",
    "all_eq",
    "are_close",
    "convergence",
    "until",
]

Monitor = Callable[[Sequence[Any]], Any]


def monitor(m: Monitor, trace: Sequence[Any]) -> list:
    """Observations of ``m`` on every prefix, empty prefix included.

    The output has one more element than the trace.
    """
    return [m(list(trace[:i])) for i in range(len(trace) + 1)]


def ensure_last(n: int, predicate: Callable[[Sequence[Any]], bool]) -> Monitor:
    """Monitor that holds when ``predicate`` does on the last n values.

    False on prefixes shorter than n.  The window is passed most recent
    first.
    """

    def check(trace: Sequence[Any]) -> bool:
        if len(trace) < n:
            return False
        window = [state.value() for state in trace[-n:]][::-1]
        return bool(predicate(window))

    return check


def all_eq(values: Iterable[Any]) -> bool:
    """True when all values are equal (vacuously true for empty input)."""
    items = list(values)
    return all(item == items[0] for item in items[1:])


def are_close(tolerance: float = 0.001) -> Callable[[Sequence[Any]], bool]:
    """Two-line predicate: slopes and intercepts within ``tolerance``."""

    def close(lines: Sequence[Any]) -> bool:
        a, b = lines
        return max(abs(a.slope - b.slope), abs(a.intercept - b.intercept)) <= tolerance

    return close


convergence: Monitor = ensure_last(3, all_eq)
"""Stopping monitor: the last three values are identical."""


def until(states: Iterable[Any], stop: Monitor) -> list:
    """Shortest prefix of ``states`` satisfying ``stop``.

    Prefixes are checked in increasing length starting with the empty
    prefix, so a monitor that accepts the empty prefix stops before any
    adaptation happens.  If the producer runs out and not even the full
    trace satisfies the monitor, the result is the empty list.
    """
    prefix: list = []
    for state in states:
        if stop(prefix):
            return prefix
        prefix.append(state)
    return prefix if stop(prefix) else []
