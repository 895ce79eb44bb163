"""Concrete adaptives: regression lines, UCB bandits, and move strategies.

The bandits come in two flavors.  The immediate bandit takes one
``(arm, reward)`` feedback per play.  The transactional bandit splits a
play into separate ``Pull`` and ``Reward`` feedback items so several
pulls can happen per reward; ``big_step`` recombines the two into one
semantic transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, ClassVar

from .core import decode, encode, register_enum, register_kind

__all__ = [
    "Move",
    "win",
    "score",
    "RegressionConfig",
    "DEFAULT_REGRESSION",
    "Line",
    "line_adapt",
    "Bandit",
    "ucb_value",
    "bandit_adapt",
    "TransactionalBandit",
    "Pull",
    "Reward",
    "txn_adapt",
    "big_step",
    "BeatLast",
    "MaxFreq",
    "Const",
]


# ---------------------------------------------------------------------------
# Rock-Paper-Scissors moves.
# ---------------------------------------------------------------------------


@register_enum
class Move(Enum):
    ROCK = "rock"
    PAPER = "paper"
    SCISSORS = "scissors"


_WINS_AGAINST = {Move.ROCK: Move.PAPER, Move.PAPER: Move.SCISSORS, Move.SCISSORS: Move.ROCK}


def win(move: Move) -> Move:
    """The move that beats ``move``."""
    return _WINS_AGAINST[move]


def score(mine: Move, theirs: Move) -> int:
    """+1 if ``mine`` beats ``theirs``, -1 if beaten, 0 on a draw."""
    if win(mine) == theirs:
        return -1
    if win(theirs) == mine:
        return 1
    return 0


def my_score(mine: Move, theirs: Move) -> tuple[Move, float]:
    """Bandit feedback for an RPS round: the move played and its score."""
    return (mine, float(score(mine, theirs)))


def opponents_move(mine: Move, theirs: Move) -> Move:
    """Feedback selector that hands a strategy the opponent's last move."""
    return theirs


# ---------------------------------------------------------------------------
# Incremental line regression.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegressionConfig:
    """Learning rate for incremental line fitting."""

    eta: float = 0.01

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ValueError("eta must be positive")


DEFAULT_REGRESSION = RegressionConfig()


@register_kind
@dataclass(frozen=True)
class Line:
    """A line y = slope * x + intercept; feedback is a sample point (x, y).

    The line is its own value.  Each point nudges both coefficients
    toward reducing that point's prediction error.
    """

    slope: float
    intercept: float

    kind: ClassVar[str] = "line"

    def value(self) -> "Line":
        return self

    def adapt(self, point: tuple[float, float]) -> "Line":
        return line_adapt(DEFAULT_REGRESSION, point, self)

    def _payload(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept}

    @classmethod
    def _from_payload(cls, payload: dict) -> "Line":
        return cls(payload["slope"], payload["intercept"])


def line_adapt(cfg: RegressionConfig, point: tuple[float, float], line: Line) -> Line:
    """One gradient step on the squared prediction error at ``point``."""
    x, y = point
    predicted = line.slope * x + line.intercept
    error = y - predicted
    return Line(line.slope + cfg.eta * x * error, line.intercept + cfg.eta * error)


# ---------------------------------------------------------------------------
# UCB bandits.
# ---------------------------------------------------------------------------


def _normalized_arms(arms: Any) -> tuple:
    entries = tuple((arm, int(pulls), reward) for arm, pulls, reward in arms)
    if not entries:
        raise ValueError("a bandit needs at least one arm")
    for _, pulls, _ in entries:
        if pulls < 0:
            raise ValueError("pull counts must be nonnegative")
    for i, (arm, _, _) in enumerate(entries):
        for other, _, _ in entries[i + 1:]:
            if arm == other:
                raise ValueError(f"duplicate arm: {arm!r}")
    return entries


def _ucb_pick(arms: tuple, scale: float) -> Any:
    # Any never-pulled arm is played first, in list order.
    for arm, pulls, _ in arms:
        if pulls == 0:
            return arm
    total = sum(pulls for _, pulls, _ in arms)
    log_total = math.log(total)
    best = None
    best_bound = -math.inf
    for arm, pulls, reward in arms:
        bound = reward / pulls + scale * math.sqrt(log_total / pulls)
        if bound > best_bound:
            best, best_bound = arm, bound
    return best


def _credit_arm(arms: tuple, arm: Any, pulls_inc: int, reward_inc: float) -> tuple | None:
    """Arms with one entry updated; None when the arm is absent."""
    for i, (a, pulls, reward) in enumerate(arms):
        if a == arm:
            entry = (a, pulls + pulls_inc, reward + reward_inc)
            return arms[:i] + (entry,) + arms[i + 1:]
    return None


def _bandit_unchecked(cls: type, arms: tuple, scale: float, last_arm: Any = None) -> Any:
    # adapt-path constructor: arms come from an already-validated bandit.
    obj = object.__new__(cls)
    if last_arm is not None or cls is TransactionalBandit:
        object.__setattr__(obj, "last_arm", last_arm)
    object.__setattr__(obj, "arms", arms)
    object.__setattr__(obj, "exploration_scale", scale)
    return obj


@register_kind
@dataclass(frozen=True)
class Bandit:
    """Multi-armed bandit choosing by upper confidence bound.

    Each entry is ``(arm, pulls, total_reward)``.  The value is the arm
    with the highest ``mean + scale * sqrt(ln(total_pulls) / pulls)``,
    except that never-pulled arms are explored first.  Feedback
    ``(arm, reward)`` credits one pull and the reward to that arm;
    feedback for an unknown arm is a no-op.

    ``exploration_scale`` widens the confidence term, e.g. 2.0 for
    rewards spanning [-1, 1] instead of [0, 1].
    """

    arms: tuple
    exploration_scale: float = 1.0

    kind: ClassVar[str] = "bandit"

    def __post_init__(self) -> None:
        object.__setattr__(self, "arms", _normalized_arms(self.arms))
        if not self.exploration_scale > 0:
            raise ValueError("exploration_scale must be positive")

    @classmethod
    def fresh(cls, arm_ids: Any, exploration_scale: float = 1.0) -> "Bandit":
        return cls(tuple((arm, 0, 0.0) for arm in arm_ids), exploration_scale)

    def value(self) -> Any:
        return _ucb_pick(self.arms, self.exploration_scale)

    def adapt(self, feedback: tuple[Any, float]) -> "Bandit":
        arm, reward = feedback
        updated = _credit_arm(self.arms, arm, 1, reward)
        if updated is None:
            return self
        return _bandit_unchecked(Bandit, updated, self.exploration_scale)

    # Nested use: when the arms are themselves adaptives, the bandit is a
    # nested adaptive whose selected child can be extracted and replaced.

    def value_ctx(self) -> tuple[Any, Callable[[Any], "Bandit"]]:
        chosen = self.value()
        for i, (arm, pulls, reward) in enumerate(self.arms):
            if arm == chosen:
                prefix, suffix = self.arms[:i], self.arms[i + 1:]

                def reinsert(child: Any, _p=pulls, _r=reward) -> "Bandit":
                    return Bandit(prefix + ((child, _p, _r),) + suffix, self.exploration_scale)

                return chosen, reinsert
        raise RuntimeError("bandit value not present in its own play map")

    def propagate(self, child_feedback: tuple[Any, float]) -> tuple[Any, float]:
        """Outer feedback: the currently selected child gets the child's reward."""
        return (self.value(), child_feedback[1])

    def _payload(self) -> dict:
        return {
            "arms": [[encode(a), p, r] for a, p, r in self.arms],
            "scale": self.exploration_scale,
        }

    @classmethod
    def _from_payload(cls, payload: dict) -> "Bandit":
        arms = tuple((decode(a), p, r) for a, p, r in payload["arms"])
        return cls(arms, payload["scale"])


def ucb_value(bandit: Bandit) -> Any:
    """Arm the bandit currently plays."""
    return bandit.value()


def bandit_adapt(feedback: tuple[Any, float], bandit: Bandit) -> Bandit:
    return bandit.adapt(feedback)


# ---------------------------------------------------------------------------
# Transactional bandit: pulls and rewards arrive separately.
# ---------------------------------------------------------------------------


@register_kind
@dataclass(frozen=True)
class Pull:
    """Feedback: an arm was pulled."""

    arm: Any

    kind: ClassVar[str] = "pull"

    def _payload(self) -> dict:
        return {"arm": encode(self.arm)}

    @classmethod
    def _from_payload(cls, payload: dict) -> "Pull":
        return cls(decode(payload["arm"]))


@register_kind
@dataclass(frozen=True)
class Reward:
    """Feedback: a reward for the last pulled arm."""

    amount: float

    kind: ClassVar[str] = "reward"

    def _payload(self) -> dict:
        return {"amount": self.amount}

    @classmethod
    def _from_payload(cls, payload: dict) -> "Reward":
        return cls(payload["amount"])


@register_kind
@dataclass(frozen=True)
class TransactionalBandit:
    """UCB bandit that remembers the last pulled arm.

    ``Pull(arm)`` bumps the arm's pull count and records it as last;
    ``Reward(r)`` credits r to the last pulled arm.  A pull of an unknown
    arm leaves the whole state unchanged so the last arm always stays a
    member of the play map.
    """

    last_arm: Any
    arms: tuple
    exploration_scale: float = 1.0

    kind: ClassVar[str] = "txn_bandit"

    def __post_init__(self) -> None:
        object.__setattr__(self, "arms", _normalized_arms(self.arms))
        if not self.exploration_scale > 0:
            raise ValueError("exploration_scale must be positive")
        if not any(arm == self.last_arm for arm, _, _ in self.arms):
            raise ValueError("last_arm must be one of the bandit's arms")

    @classmethod
    def fresh(cls, arm_ids: Any, exploration_scale: float = 1.0) -> "TransactionalBandit":
        ids = tuple(arm_ids)
        return cls(ids[0], tuple((arm, 0, 0.0) for arm in ids), exploration_scale)

    def value(self) -> Any:
        return _ucb_pick(self.arms, self.exploration_scale)

    def adapt(self, feedback: Any) -> "TransactionalBandit":
        if isinstance(feedback, Pull):
            updated = _credit_arm(self.arms, feedback.arm, 1, 0.0)
            if updated is None:
                return self
            return _bandit_unchecked(
                TransactionalBandit, updated, self.exploration_scale, feedback.arm
            )
        if isinstance(feedback, Reward):
            updated = _credit_arm(self.arms, self.last_arm, 0, feedback.amount)
            return _bandit_unchecked(
                TransactionalBandit, updated, self.exploration_scale, self.last_arm
            )
        raise TypeError(f"expected Pull or Reward, got {type(feedback).__name__}")

    def _payload(self) -> dict:
        return {
            "last": encode(self.last_arm),
            "arms": [[encode(a), p, r] for a, p, r in self.arms],
            "scale": self.exploration_scale,
        }

    @classmethod
    def _from_payload(cls, payload: dict) -> "TransactionalBandit":
        arms = tuple((decode(a), p, r) for a, p, r in payload["arms"])
        return cls(decode(payload["last"]), arms, payload["scale"])


def txn_adapt(feedback: Any, bandit: TransactionalBandit) -> TransactionalBandit:
    return bandit.adapt(feedback)


def big_step(feedback: tuple[Any, float], bandit: TransactionalBandit) -> TransactionalBandit:
    """One pull-then-reward transaction as a single state transition."""
    arm, reward = feedback
    return bandit.adapt(Pull(arm)).adapt(Reward(reward))


# ---------------------------------------------------------------------------
# Simple RPS strategies.
# ---------------------------------------------------------------------------


@register_kind
@dataclass(frozen=True)
class BeatLast:
    """Plays a stored move; adapts to beat the opponent's last move."""

    move: Move = Move.ROCK

    kind: ClassVar[str] = "beat_last"

    def value(self) -> Move:
        return self.move

    def adapt(self, opponent_move: Move) -> "BeatLast":
        return BeatLast(win(opponent_move))

    def _payload(self) -> dict:
        return {"move": encode(self.move)}

    @classmethod
    def _from_payload(cls, payload: dict) -> "BeatLast":
        return cls(decode(payload["move"]))


_RPS_ORDER = (Move.ROCK, Move.PAPER, Move.SCISSORS)


@register_kind
@dataclass(frozen=True)
class MaxFreq:
    """Plays the move that beats the opponent's most frequent move.

    Counts are kept in fixed rock, paper, scissors order; frequency ties
    go to the earlier entry.
    """

    counts: tuple = tuple((m, 0) for m in _RPS_ORDER)

    kind: ClassVar[str] = "max_freq"

    def __post_init__(self) -> None:
        counts = tuple((move, int(n)) for move, n in self.counts)
        if tuple(move for move, _ in counts) != _RPS_ORDER or any(n < 0 for _, n in counts):
            raise ValueError("counts must cover rock, paper, scissors with nonnegative counts")
        object.__setattr__(self, "counts", counts)

    def value(self) -> Move:
        best_move, best_count = self.counts[0]
        for move, count in self.counts[1:]:
            if count > best_count:
                best_move, best_count = move, count
        return win(best_move)

    def adapt(self, opponent_move: Move) -> "MaxFreq":
        counts = tuple(
            (move, count + 1 if move == opponent_move else count) for move, count in self.counts
        )
        return MaxFreq(counts)

    def _payload(self) -> dict:
        return {"counts": [[encode(m), n] for m, n in self.counts]}

    @classmethod
    def _from_payload(cls, payload: dict) -> "MaxFreq":
        return cls(tuple((decode(m), n) for m, n in payload["counts"]))


@register_kind
@dataclass(frozen=True)
class Const:
    """A fixed value that ignores all feedback."""

    constant: Any

    kind: ClassVar[str] = "const"

    def value(self) -> Any:
        return self.constant

    def adapt(self, feedback: Any) -> "Const":
        return self

    def _payload(self) -> dict:
        return {"value": encode(self.constant)}

    @classmethod
    def _from_payload(cls, payload: dict) -> "Const":
        return cls(decode(payload["value"]))
