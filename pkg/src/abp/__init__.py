"""Adaptive values: states that expose a value and adapt to feedback.

The core contract is two operations, ``value()`` and ``adapt(feedback)``,
on immutable states.  On top of it the package provides generic
compositions (pairs, lists, keyed families, nesting), concrete learners
(regression lines, UCB bandits, move strategies), run drivers that
produce traces, monitors for convergence-driven stopping, a
stability-gated Q-table with a computable learning threshold, and two
self-optimizing applications: a hybrid sort that learns its insertion
sort cutoff and a budgeted Levenberg-Marquardt damping controller.
"""

from .core import (
    Adaptive,
    Contextual,
    Dedaptive,
    ListOf,
    Pair,
    adapt,
    from_json,
    nested_value,
    propagate,
    to_json,
    value,
    value_ctx,
)
from .adaptives import (
    Bandit,
    BeatLast,
    Const,
    Line,
    MaxFreq,
    Move,
    Pull,
    RegressionConfig,
    Reward,
    TransactionalBandit,
    bandit_adapt,
    big_step,
    line_adapt,
    score,
    txn_adapt,
    ucb_value,
    win,
)
from .combinators import (
    coevolve,
    cotransform,
    evolve,
    evolve_iter,
    train_by,
    train_by_iter,
    trans_by,
    transform_by,
    values_of,
    vs,
)
from .monitors import all_eq, are_close, convergence, ensure_last, monitor, until
from .principled import (
    EpisodeFeedback,
    QTable,
    SyntheticSarf,
    is_stable,
    learning_threshold,
    principled_adapt,
    principled_value,
    synthetic_sarf_run,
)
from . import lmopt, sortbench  # noqa: F401  (registers their snapshot kinds)

__version__ = "0.1.0"
