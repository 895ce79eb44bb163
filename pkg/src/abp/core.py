"""Adaptive values and the generic ways of combining them.

An adaptive is an immutable state with two operations: ``value()`` returns
the state's current value, and ``adapt(feedback)`` consumes one feedback
item and returns the successor state.  The original state is never
modified, so states can be shared freely, replayed, and snapshotted.

This module defines that contract plus the generic compositions every
other module builds on: lockstep pairs, element-wise lists, keyed families
(one independent copy per context key), and nested adaptives whose value
is itself an adaptive.  It also provides a canonical JSON codec so any
adaptive state can be written into a trace and parsed back unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, ClassVar, Mapping, Protocol, runtime_checkable

__all__ = [
    "Adaptive",
    "Dedaptive",
    "Pair",
    "ListOf",
    "Contextual",
    "value",
    "adapt",
    "value_ctx",
    "propagate",
    "nested_value",
    "encode",
    "decode",
    "to_json",
    "from_json",
    "register_kind",
    "register_enum",
]


@runtime_checkable
class Adaptive(Protocol):
    """Anything exposing a current value and a feedback-driven transition."""

    def value(self) -> Any: ...

    def adapt(self, feedback: Any) -> "Adaptive": ...


@runtime_checkable
class Dedaptive(Protocol):
    """An adaptive whose value is itself an adaptive.

    ``value_ctx`` returns the selected child together with a function that
    re-inserts a (possibly adapted) child into the parent's slot.
    ``propagate`` derives parent feedback from child feedback.
    """

    def value_ctx(self) -> tuple[Any, Callable[[Any], Any]]: ...

    def propagate(self, child_feedback: Any) -> Any: ...


def value(state: Adaptive) -> Any:
    """Current value of an adaptive state."""
    return state.value()


def adapt(feedback: Any, state: Adaptive) -> Any:
    """Successor state after one feedback item; ``state`` is unchanged."""
    return state.adapt(feedback)


def value_ctx(state: Dedaptive) -> tuple[Any, Callable[[Any], Any]]:
    """Selected child of a nested adaptive plus its re-insertion function."""
    return state.value_ctx()


def propagate(state: Dedaptive, child_feedback: Any) -> Any:
    """Feedback for the outer adaptive derived from child feedback."""
    return state.propagate(child_feedback)


def nested_value(state: Dedaptive) -> Any:
    """Value of the value: what a nested adaptive ultimately plays."""
    return state.value().value()


# ---------------------------------------------------------------------------
# Canonical JSON codec.
#
# Every adaptive kind registers under a string tag; enums register by class
# name.  Tuples are tagged so they survive a round trip (JSON has no tuple).
# ---------------------------------------------------------------------------

_KINDS: dict[str, type] = {}
_ENUMS: dict[str, type[Enum]] = {}


def register_kind(cls: type) -> type:
    """Class decorator: make a state kind serializable by its ``kind`` tag."""
    _KINDS[cls.kind] = cls
    return cls


def register_enum(cls: type[Enum]) -> type[Enum]:
    """Enum decorator: make enum members serializable by class and name."""
    _ENUMS[cls.__name__] = cls
    return cls


def encode(obj: Any) -> Any:
    """Encode a state, enum, tuple, or scalar into plain JSON data."""
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    if isinstance(obj, Enum):
        return {"enum": type(obj).__name__, "name": obj.name}
    if isinstance(obj, tuple):
        return {"tuple": [encode(x) for x in obj]}
    kind = getattr(obj, "kind", None)
    if isinstance(kind, str) and kind in _KINDS:
        return {"kind": kind, "state": obj._payload()}
    raise TypeError(f"cannot serialize value of type {type(obj).__name__}")


def decode(data: Any) -> Any:
    """Inverse of :func:`encode`."""
    if isinstance(data, dict):
        if "kind" in data:
            return _KINDS[data["kind"]]._from_payload(data["state"])
        if "enum" in data:
            return _ENUMS[data["enum"]][data["name"]]
        if "tuple" in data:
            return tuple(decode(x) for x in data["tuple"])
        raise TypeError(f"unrecognized encoded object: {sorted(data)}")
    if isinstance(data, list):
        return [decode(x) for x in data]
    return data


def to_json(obj: Any) -> str:
    """Canonical JSON text: sorted keys, no whitespace, round-trippable."""
    return json.dumps(encode(obj), sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> Any:
    """Parse canonical JSON text back into the original state."""
    return decode(json.loads(text))


# ---------------------------------------------------------------------------
# Generic compositions.
# ---------------------------------------------------------------------------


@register_kind
@dataclass(frozen=True)
class Pair:
    """Two adaptives evolving in lockstep; feedback is a (left, right) pair."""

    left: Any
    right: Any

    kind: ClassVar[str] = "pair"

    def value(self) -> tuple[Any, Any]:
        return (self.left.value(), self.right.value())

    def adapt(self, feedback: tuple[Any, Any]) -> "Pair":
        u, v = feedback
        return Pair(self.left.adapt(u), self.right.adapt(v))

    def _payload(self) -> dict:
        return {"left": encode(self.left), "right": encode(self.right)}

    @classmethod
    def _from_payload(cls, payload: dict) -> "Pair":
        return cls(decode(payload["left"]), decode(payload["right"]))


@register_kind
@dataclass(frozen=True)
class ListOf:
    """Homogeneous adaptives adapted element-wise.

    Feedback items pair with states positionally.  A shorter feedback
    sequence leaves the trailing states unadapted; extra feedback items
    are ignored.
    """

    items: tuple = ()

    kind: ClassVar[str] = "list"

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))

    def value(self) -> tuple:
        return tuple(item.value() for item in self.items)

    def adapt(self, feedbacks: Any) -> "ListOf":
        fbs = list(feedbacks)
        adapted = tuple(item.adapt(fb) for item, fb in zip(self.items, fbs))
        return ListOf(adapted + self.items[len(adapted):])

    def _payload(self) -> dict:
        return {"items": [encode(x) for x in self.items]}

    @classmethod
    def _from_payload(cls, payload: dict) -> "ListOf":
        return cls(tuple(decode(x) for x in payload["items"]))


@register_kind
@dataclass(frozen=True)
class Contextual:
    """A family of adaptives keyed by context.

    Unseen keys answer with the shared prototype; feedback ``(key, fb)``
    adapts exactly the entry for ``key`` and leaves every other key's
    state untouched.  Keys must be mutually orderable (needed for
    deterministic serialization); mixing incomparable key types fails at
    construction time rather than deep inside a run.
    """

    prototype: Any
    overrides: Mapping[Any, Any] = field(default_factory=dict)

    kind: ClassVar[str] = "contextual"

    def __post_init__(self) -> None:
        try:
            sorted(self.overrides)
        except TypeError as exc:
            raise TypeError("context keys must be mutually orderable") from exc

    def child(self, key: Any) -> Any:
        """State at ``key``: its override if present, else the prototype."""
        return self.overrides.get(key, self.prototype)

    def value(self) -> Callable[[Any], Any]:
        """The value is itself keyed: a function from context to value."""
        return lambda key: self.child(key).value()

    def value_at(self, key: Any) -> Any:
        return self.child(key).value()

    def adapt(self, feedback: tuple[Any, Any]) -> "Contextual":
        key, fb = feedback
        child = self.overrides.get(key)
        if child is None:
            if self.overrides:
                probe = next(iter(self.overrides))
                try:
                    key < probe  # noqa: B015  (comparability check only)
                except TypeError as exc:
                    raise TypeError("context keys must be mutually orderable") from exc
            child = self.prototype
        new = dict(self.overrides)
        new[key] = child.adapt(fb)
        return _contextual_unchecked(self.prototype, new)

    def _payload(self) -> dict:
        entries = [[encode(k), encode(self.overrides[k])] for k in sorted(self.overrides)]
        return {"prototype": encode(self.prototype), "entries": entries}

    @classmethod
    def _from_payload(cls, payload: dict) -> "Contextual":
        overrides = {decode(k): decode(v) for k, v in payload["entries"]}
        return cls(decode(payload["prototype"]), overrides)


def _contextual_unchecked(prototype: Any, overrides: dict) -> Contextual:
    # Keys already in the map were validated when they were first added;
    # skipping __post_init__ keeps adapt O(map size), not O(n log n).
    obj = object.__new__(Contextual)
    object.__setattr__(obj, "prototype", prototype)
    object.__setattr__(obj, "overrides", overrides)
    return obj
