"""Stability-gated Q-table for recursive programs with one adaptive.

The table tracks, per (context, action), an update count and a running
average cost.  A context-action pair is stable once it has been updated
``threshold`` times; a context is stable once all of its actions are.
Value selection explores the first unstable action of an unstable
context and otherwise plays the cheapest action on average.  An update
is accepted only when every context visited below the episode's call was
already stable and the pair is still below the threshold, so learning
proceeds bottom-up along the recursion order and the total number of
accepted updates can never exceed ``threshold * n_contexts * n_actions``.

``learning_threshold`` computes the smallest threshold for which, with
probability at least ``1 - delta``, the stabilized policy is optimal in
every context, given a minimum cost gap ``epsilon`` between the best and
second-best action (costs normalized to [0, 1]).

A synthetic recursive harness with integer contexts, strictly
descending recursion, and bounded per-(context, action) cost noise is
included for statistical convergence experiments.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, ClassVar, Mapping

from .core import decode, encode, register_kind

__all__ = [
    "QTable",
    "EpisodeFeedback",
    "is_stable",
    "principled_value",
    "principled_adapt",
    "learning_threshold",
    "SyntheticSarf",
    "synthetic_sarf_run",
    "run_convergence_trials",
]


@dataclass(frozen=True)
class EpisodeFeedback:
    """Cost observed for one (context, action) episode.

    ``descendants_stable`` records whether every context visited below
    this one was stable when the episode started; updates are refused
    otherwise.
    """

    context: Any
    action: Any
    cost: float
    descendants_stable: bool = True

    def __post_init__(self) -> None:
        if not math.isfinite(self.cost):
            raise ValueError("episode cost must be finite")


@register_kind
@dataclass(frozen=True)
class QTable:
    """(context, action) -> (update count, running-average cost).

    Contexts appear with a full row of per-action entries; unseen
    contexts read as all-zero and unstable.
    """

    actions: tuple
    threshold: int
    entries: Mapping[tuple[Any, Any], tuple[int, float]] = field(default_factory=dict)

    kind: ClassVar[str] = "qtable"

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        if not self.actions:
            raise ValueError("a QTable needs at least one action")
        if self.threshold < 1:
            raise ValueError("threshold must be a positive integer")

    @classmethod
    def fresh(cls, actions: Any, threshold: int) -> "QTable":
        return cls(tuple(actions), threshold, {})

    def entry(self, context: Any, action: Any) -> tuple[int, float]:
        return self.entries.get((context, action), (0, 0.0))

    def value(self) -> Callable[[Any], Any]:
        return lambda context: principled_value(self, context)

    def adapt(self, feedback: EpisodeFeedback) -> "QTable":
        return principled_adapt(feedback, self)

    def _payload(self) -> dict:
        rows = [
            [encode(ctx), encode(action), count, avg]
            for (ctx, action), (count, avg) in self.entries.items()
        ]
        rows.sort(key=lambda row: str(row[:2]))
        return {"actions": [encode(a) for a in self.actions], "threshold": self.threshold, "rows": rows}

    @classmethod
    def _from_payload(cls, payload: dict) -> "QTable":
        entries = {
            (decode(ctx), decode(action)): (count, avg)
            for ctx, action, count, avg in payload["rows"]
        }
        return cls(tuple(decode(a) for a in payload["actions"]), payload["threshold"], entries)


def is_stable(q: QTable, context: Any) -> bool:
    """True once every action in the context has ``threshold`` updates."""
    return all(q.entry(context, action)[0] >= q.threshold for action in q.actions)


def principled_value(q: QTable, context: Any) -> Any:
    """Cheapest action if the context is stable, else its first unstable action."""
    if is_stable(q, context):
        best = None
        best_avg = math.inf
        for action in q.actions:
            _, avg = q.entry(context, action)
            if avg < best_avg:
                best, best_avg = action, avg
        return best
    for action in q.actions:
        if q.entry(context, action)[0] < q.threshold:
            return action
    raise AssertionError("unreachable: unstable context with no unstable action")


def principled_adapt(feedback: EpisodeFeedback, q: QTable) -> QTable:
    """Running-average update, gated on descendant stability and the threshold.

    Returns ``q`` itself (the same object) when the update is refused.
    """
    if not feedback.descendants_stable:
        return q
    count, avg = q.entry(feedback.context, feedback.action)
    if count >= q.threshold:
        return q
    entries = dict(q.entries)
    entries[(feedback.context, feedback.action)] = (
        count + 1,
        (count * avg + feedback.cost) / (count + 1),
    )
    # Keep the full action row present for any context we have touched.
    for action in q.actions:
        entries.setdefault((feedback.context, action), (0, 0.0))
    return QTable(q.actions, q.threshold, entries)


def learning_threshold(epsilon: float, delta: float, n_contexts: int, n_actions: int) -> int:
    """Smallest integer threshold exceeding 4 * eps^-2 * ln(N * A / delta).

    ``epsilon`` is the minimum per-context gap between the expected costs
    of the best and second-best actions; ``delta`` is the acceptable
    failure probability.  Costs are assumed normalized to [0, 1].
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie strictly between 0 and 1")
    if n_contexts < 1 or n_actions < 1:
        raise ValueError("context and action counts must be positive")
    bound = 4.0 * epsilon**-2 * math.log(n_contexts * n_actions / delta)
    return math.floor(bound) + 1


# ---------------------------------------------------------------------------
# Synthetic recursive harness.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSarf:
    """A synthetic recursive program with one Q-table decision per context.

    Contexts are the integers 0..n_contexts-1 and recursion strictly
    descends: every child of context k is smaller than k.  Each visit to
    a context draws a cost ``mean_costs[context][action] + U(-noise, +noise)``,
    guaranteed to stay within [0, 1] by construction, and the cost
    distribution at a context does not depend on how the recursion got
    there.
    """

    n_contexts: int
    n_actions: int
    mean_costs: tuple[tuple[float, ...], ...]
    noise_half_width: float
    children: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.n_contexts < 1 or self.n_actions < 1:
            raise ValueError("need at least one context and one action")
        if len(self.mean_costs) != self.n_contexts or any(
            len(row) != self.n_actions for row in self.mean_costs
        ):
            raise ValueError("mean_costs must be n_contexts rows of n_actions costs")
        if len(self.children) != self.n_contexts:
            raise ValueError("children must list one tuple per context")
        for ctx, kids in enumerate(self.children):
            for kid in kids:
                if not 0 <= kid < ctx:
                    raise ValueError(
                        f"context {ctx} recurses into {kid}; children must be strictly lower"
                    )
        if self.noise_half_width < 0:
            raise ValueError("noise_half_width must be nonnegative")
        for row in self.mean_costs:
            for mean in row:
                if mean - self.noise_half_width < 0 or mean + self.noise_half_width > 1:
                    raise ValueError("costs must stay within [0, 1] including noise")

    @classmethod
    def chain(
        cls,
        n_contexts: int,
        n_actions: int,
        gap: float = 0.2,
        base: float | None = None,
        noise: float | None = None,
    ) -> "SyntheticSarf":
        """Linear recursion k -> k-1 with a planted optimal action per context.

        The optimal action of context k is k mod n_actions, with every
        other action exactly ``gap`` more expensive on average.  Unless
        given, the base cost and the uniform noise half-width are both
        ``min(0.4, (1 - gap) / 2)``, the widest symmetric choice that
        keeps every cost inside [0, 1] for the requested gap.
        """
        if not 0 < gap < 1:
            raise ValueError("gap must lie strictly between 0 and 1")
        if base is None:
            base = min(0.4, (1.0 - gap) / 2.0)
        if noise is None:
            noise = min(0.4, (1.0 - gap) / 2.0)
        means = tuple(
            tuple(base if a == k % n_actions else base + gap for a in range(n_actions))
            for k in range(n_contexts)
        )
        children = tuple((() if k == 0 else (k - 1,)) for k in range(n_contexts))
        return cls(n_contexts, n_actions, means, noise, children)

    def actions(self) -> tuple:
        return tuple(range(self.n_actions))

    def optimal_action(self, context: int) -> int:
        row = self.mean_costs[context]
        return min(range(self.n_actions), key=lambda a: (row[a], a))

    def draw_cost(self, context: int, action: int, rng: random.Random) -> float:
        mean = self.mean_costs[context][action]
        if self.noise_half_width == 0:
            return mean
        return mean + rng.uniform(-self.noise_half_width, self.noise_half_width)


def synthetic_sarf_run(
    sarf: SyntheticSarf, q: QTable, top_context: int, rng: random.Random
) -> tuple[tuple, float, tuple[EpisodeFeedback, ...]]:
    """One recursive episode starting at ``top_context``.

    Actions are chosen from ``q`` as it stands; one feedback item is
    emitted per visited context (children before parents), with
    ``descendants_stable`` judged against the same pre-episode table.
    Returns the (context, action) decisions, the episode's total cost,
    and the feedback items for the caller to apply.
    """
    if not 0 <= top_context < sarf.n_contexts:
        raise ValueError(f"top context {top_context} outside 0..{sarf.n_contexts - 1}")
    feedbacks: list[EpisodeFeedback] = []

    def visit(context: int) -> tuple[float, set[int]]:
        action = principled_value(q, context)
        below: set[int] = set()
        subtree_cost = 0.0
        for child in sarf.children[context]:
            child_cost, child_visited = visit(child)
            subtree_cost += child_cost
            below |= child_visited
        local = sarf.draw_cost(context, action, rng)
        feedbacks.append(
            EpisodeFeedback(
                context=context,
                action=action,
                cost=local,
                descendants_stable=all(is_stable(q, d) for d in below),
            )
        )
        below.add(context)
        return subtree_cost + local, below

    total_cost, _ = visit(top_context)
    decisions = tuple((fb.context, fb.action) for fb in feedbacks)
    return decisions, total_cost, tuple(feedbacks)


@dataclass(frozen=True)
class TrialOutcome:
    stabilized: bool
    episodes: int
    update_episodes: int
    total_updates: int
    optimal_everywhere: bool


def run_convergence_trials(
    sarf: SyntheticSarf,
    threshold: int,
    trials: int,
    seed: int,
    max_episodes: int = 500_000,
) -> dict:
    """Repeat the convergence experiment and summarize it.

    Each trial feeds uniformly random top contexts to a fresh table
    until every context is stable, applying the emitted feedback after
    each episode, then checks the stabilized policy against the planted
    optimum.  The returned summary includes the fraction of trials whose
    stabilized policy is optimal in every context and the worst-case
    number of update-bearing episodes (provably at most
    ``threshold * n_contexts * n_actions``).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    contexts = range(sarf.n_contexts)
    outcomes: list[TrialOutcome] = []
    for trial in range(trials):
        rng = random.Random(1_000_003 * seed + trial)
        q = QTable.fresh(sarf.actions(), threshold)
        episodes = update_episodes = total_updates = 0
        while episodes < max_episodes:
            if all(is_stable(q, c) for c in contexts):
                break
            top = rng.randrange(sarf.n_contexts)
            _, _, feedbacks = synthetic_sarf_run(sarf, q, top, rng)
            bearing = False
            for fb in feedbacks:
                updated = principled_adapt(fb, q)
                if updated is not q:
                    q = updated
                    total_updates += 1
                    bearing = True
            episodes += 1
            if bearing:
                update_episodes += 1
        stabilized = all(is_stable(q, c) for c in contexts)
        optimal = stabilized and all(
            principled_value(q, c) == sarf.optimal_action(c) for c in contexts
        )
        outcomes.append(
            TrialOutcome(stabilized, episodes, update_episodes, total_updates, optimal)
        )
    update_budget = threshold * sarf.n_contexts * sarf.n_actions
    return {
        "trials": trials,
        "threshold": threshold,
        "update_budget": update_budget,
        "all_stabilized": all(o.stabilized for o in outcomes),
        "max_update_episodes": max(o.update_episodes for o in outcomes),
        "max_total_updates": max(o.total_updates for o in outcomes),
        "mean_episodes": sum(o.episodes for o in outcomes) / trials,
        "fraction_optimal": sum(o.optimal_everywhere for o in outcomes) / trials,
    }
