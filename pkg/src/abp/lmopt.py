"""Budgeted Levenberg-Marquardt with a learned damping controller.

``standard_lm`` is the classic control: accept the candidate and shrink
the damping factor when the loss improved, otherwise reject and grow it.
``adaptive_lm`` replaces that rule with a seven-action policy read from
a cost-minimizing table keyed by (remaining budget, improved last step,
improved two steps back): grow, shrink, or keep the damping factor,
each combined with accepting or discarding the pending candidate, plus
an action that restarts from the best point seen.  Both spend exactly
one residual evaluation per iteration and the first evaluation is the
start point itself, so a budget of B means B residual evaluations.

Training assigns each finished episode's scaled loss reduction (negated,
so cheaper is better) to every (context, action) the episode visited.
Evaluation reports the averaged scaled reduction in loss (ASRL): the
mean over starts of (initial loss - best loss) / initial loss.

The three bundled benchmark problems are the standard residual forms of
Rosenbrock (n=2, m=2), Helical Valley (n=3, m=3), and Brown & Dennis
(n=4, m=20, sample points i/5), with analytic Jacobians and the
[-10, 10]^n start box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

import numpy as np

from .core import Contextual, register_enum
from .sortbench import ActionTable

__all__ = [
    "ResidualProblem",
    "rosenbrock",
    "helical_valley",
    "brown_dennis",
    "benchmark_functions",
    "LambdaAction",
    "LAMBDA_ACTIONS",
    "lm_step",
    "standard_lm",
    "adaptive_lm",
    "fresh_controller_table",
    "standard_mimic_table",
    "train_controller",
    "asrl",
    "asrl_report",
]

LAMBDA_MIN = 1e-12
LAMBDA_MAX = 1e12
DEFAULT_LAMBDA0 = 1e-3
DEFAULT_NU = 10.0
DIAG_FLOOR = 1e-12
PIVOT_TOL = 1e-14
TINY_LOSS = 1e-12


@dataclass(frozen=True)
class ResidualProblem:
    """Nonlinear least squares problem: minimize |residual(x)|^2."""

    name: str
    n_params: int
    n_residuals: int
    residual: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    init_low: float = -10.0
    init_high: float = 10.0

    def loss(self, x: Any) -> float:
        r = self.residual(np.asarray(x, dtype=float))
        return float(r @ r)

    def sample_start(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.init_low, self.init_high, self.n_params)


# ---------------------------------------------------------------------------
# Benchmark problems.
# ---------------------------------------------------------------------------


def _rosenbrock_residual(x: np.ndarray) -> np.ndarray:
    return np.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]])


def _rosenbrock_jacobian(x: np.ndarray) -> np.ndarray:
    return np.array([[-20.0 * x[0], 10.0], [-1.0, 0.0]])


def rosenbrock() -> ResidualProblem:
    return ResidualProblem("rosenbrock", 2, 2, _rosenbrock_residual, _rosenbrock_jacobian)


_TWO_PI = 2.0 * math.pi


def _helical_theta(x1: float, x2: float) -> float:
    if x1 > 0:
        return math.atan(x2 / x1) / _TWO_PI
    if x1 < 0:
        return math.atan(x2 / x1) / _TWO_PI + 0.5
    return 0.25 * float(np.sign(x2))


def _helical_residual(x: np.ndarray) -> np.ndarray:
    theta = _helical_theta(float(x[0]), float(x[1]))
    radius = math.hypot(float(x[0]), float(x[1]))
    return np.array([10.0 * (x[2] - 10.0 * theta), 10.0 * (radius - 1.0), x[2]])


def _helical_jacobian(x: np.ndarray) -> np.ndarray:
    x1, x2 = float(x[0]), float(x[1])
    squared = x1 * x1 + x2 * x2
    if squared == 0.0:
        return np.full((3, 3), np.nan)
    radius = math.sqrt(squared)
    return np.array(
        [
            [100.0 * x2 / (_TWO_PI * squared), -100.0 * x1 / (_TWO_PI * squared), 10.0],
            [10.0 * x1 / radius, 10.0 * x2 / radius, 0.0],
            [0.0, 0.0, 1.0],
        ]
    )


def helical_valley() -> ResidualProblem:
    return ResidualProblem("helical_valley", 3, 3, _helical_residual, _helical_jacobian)


_BD_T = np.arange(1, 21) / 5.0
_BD_EXP = np.exp(_BD_T)
_BD_SIN = np.sin(_BD_T)
_BD_COS = np.cos(_BD_T)


def _brown_dennis_residual(x: np.ndarray) -> np.ndarray:
    first = x[0] + _BD_T * x[1] - _BD_EXP
    second = x[2] + _BD_SIN * x[3] - _BD_COS
    return first**2 + second**2


def _brown_dennis_jacobian(x: np.ndarray) -> np.ndarray:
    first = x[0] + _BD_T * x[1] - _BD_EXP
    second = x[2] + _BD_SIN * x[3] - _BD_COS
    return np.column_stack(
        [2.0 * first, 2.0 * first * _BD_T, 2.0 * second, 2.0 * second * _BD_SIN]
    )


def brown_dennis() -> ResidualProblem:
    return ResidualProblem("brown_dennis", 4, 20, _brown_dennis_residual, _brown_dennis_jacobian)


def benchmark_functions() -> dict[str, ResidualProblem]:
    problems = [rosenbrock(), helical_valley(), brown_dennis()]
    return {p.name: p for p in problems}


# ---------------------------------------------------------------------------
# One damped step.
# ---------------------------------------------------------------------------


def _solve_pivoted(matrix: list[list[float]], rhs: list[float]) -> list[float] | None:
    """Gaussian elimination with partial pivoting; None when near-singular."""
    n = len(rhs)
    rows = [list(row) + [r] for row, r in zip(matrix, rhs)]
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(rows[r][col]))
        if abs(rows[pivot_row][col]) < PIVOT_TOL:
            return None
        if pivot_row != col:
            rows[col], rows[pivot_row] = rows[pivot_row], rows[col]
        pivot = rows[col][col]
        for r in range(col + 1, n):
            factor = rows[r][col] / pivot
            if factor != 0.0:
                for c in range(col, n + 1):
                    rows[r][c] -= factor * rows[col][c]
    solution = [0.0] * n
    for row in range(n - 1, -1, -1):
        acc = rows[row][n]
        for col in range(row + 1, n):
            acc -= rows[row][col] * solution[col]
        solution[row] = acc / rows[row][row]
    return solution


def _damped_delta(
    jac: np.ndarray, fx: np.ndarray, lam: float, damping: str
) -> np.ndarray | None:
    normal = jac.T @ jac
    gradient = jac.T @ fx
    if damping == "marquardt":
        scaled = np.maximum(np.diag(normal), DIAG_FLOOR)
        damped = normal + lam * np.diag(scaled)
    elif damping == "identity":
        damped = normal + lam * np.eye(normal.shape[0])
    else:
        raise ValueError(f"unknown damping form: {damping!r}")
    solution = _solve_pivoted(damped.tolist(), (-gradient).tolist())
    if solution is None:
        return None
    return np.asarray(solution)


def lm_step(
    prob: ResidualProblem, x: Any, lam: float, damping: str = "marquardt"
) -> tuple[np.ndarray, bool]:
    """One damped Gauss-Newton step from ``x``.

    Solves ``(J'J + lam * diag(J'J)) delta = -J' f(x)`` with the diagonal
    floored at 1e-12.  Returns ``(x, False)`` when the residuals or
    Jacobian are not finite at ``x`` or the damped system is numerically
    singular.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    x = np.asarray(x, dtype=float)
    fx = prob.residual(x)
    if not np.all(np.isfinite(fx)):
        return x, False
    jac = prob.jacobian(x)
    if not np.all(np.isfinite(jac)):
        return x, False
    delta = _damped_delta(jac, fx, lam, damping)
    if delta is None:
        return x, False
    return x + delta, True


def _clamp_lambda(lam: float) -> float:
    return min(max(lam, LAMBDA_MIN), LAMBDA_MAX)


def _finite_loss(fx: np.ndarray) -> float:
    if not np.all(np.isfinite(fx)):
        return math.inf
    return float(fx @ fx)


def _propose(
    prob: ResidualProblem, x: np.ndarray, fx: np.ndarray, lam: float, damping: str
) -> np.ndarray:
    """Candidate point from the cached residual; the current x on failure."""
    if not np.all(np.isfinite(fx)):
        return x
    jac = prob.jacobian(x)
    if not np.all(np.isfinite(jac)):
        return x
    delta = _damped_delta(jac, fx, lam, damping)
    if delta is None:
        return x
    return x + delta


# ---------------------------------------------------------------------------
# Drivers.
# ---------------------------------------------------------------------------


def standard_lm(
    prob: ResidualProblem,
    x0: Any,
    budget: int,
    lambda0: float = DEFAULT_LAMBDA0,
    nu: float = DEFAULT_NU,
    damping: str = "marquardt",
) -> tuple[np.ndarray, float, list[tuple[np.ndarray, float]]]:
    """Classic damping control within a budget of residual evaluations.

    Returns the best point seen, its loss, and the (point, loss) pairs
    in evaluation order (the start point first).
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    x = np.asarray(x0, dtype=float)
    fx = prob.residual(x)
    loss = _finite_loss(fx)
    trace = [(x, loss)]
    best_x, best_loss = x, loss
    lam = lambda0
    remaining = budget - 1
    while remaining > 0:
        candidate = _propose(prob, x, fx, lam, damping)
        f_cand = prob.residual(candidate)
        remaining -= 1
        cand_loss = _finite_loss(f_cand)
        trace.append((candidate, cand_loss))
        if cand_loss < best_loss:
            best_x, best_loss = candidate, cand_loss
        if cand_loss < loss:
            x, fx, loss = candidate, f_cand, cand_loss
            lam = _clamp_lambda(lam / nu)
        else:
            lam = _clamp_lambda(lam * nu)
    return best_x, best_loss, trace


@register_enum
class LambdaAction(Enum):
    """The seven controller actions: damping move x candidate disposition."""

    INC_ACCEPT = "inc_accept"
    INC_REJECT = "inc_reject"
    DEC_ACCEPT = "dec_accept"
    DEC_REJECT = "dec_reject"
    KEEP_ACCEPT = "keep_accept"
    KEEP_REJECT = "keep_reject"
    RESET_TO_BEST = "reset_to_best"


LAMBDA_ACTIONS = tuple(LambdaAction)

_ACCEPTING = {LambdaAction.INC_ACCEPT, LambdaAction.DEC_ACCEPT, LambdaAction.KEEP_ACCEPT}
_INCREASING = {LambdaAction.INC_ACCEPT, LambdaAction.INC_REJECT}
_DECREASING = {LambdaAction.DEC_ACCEPT, LambdaAction.DEC_REJECT}


def fresh_controller_table(explore_cutoff: int = 8) -> Contextual:
    """Untrained controller: one action table per visited context."""
    return Contextual(prototype=ActionTable.fresh(LAMBDA_ACTIONS, explore_cutoff))


def adaptive_lm(
    prob: ResidualProblem,
    x0: Any,
    budget: int,
    table: Contextual,
    lambda0: float = DEFAULT_LAMBDA0,
    nu: float = DEFAULT_NU,
    damping: str = "marquardt",
) -> tuple[np.ndarray, float, list[tuple[tuple[int, bool, bool], LambdaAction]]]:
    """Run the table-driven damping controller for ``budget`` evaluations.

    Each iteration reads one action at context ``(remaining budget,
    improved last step, improved two steps back)``, applies its
    accept/reject/reset decision to the candidate evaluated on the
    previous iteration, scales the damping factor, and spends one
    residual evaluation (the first iteration's evaluation is the start
    point, before any candidate exists).  Returns the best point, its
    loss, and the visited (context, action) list, one entry per
    evaluation.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    x = np.asarray(x0, dtype=float)
    fx: np.ndarray | None = None
    loss = math.inf
    pending: tuple[np.ndarray, np.ndarray, float] | None = None
    best: tuple[np.ndarray, np.ndarray, float] | None = None
    h1 = h2 = False
    lam = lambda0
    remaining = budget
    visited: list[tuple[tuple[int, bool, bool], LambdaAction]] = []
    while remaining > 0:
        context = (remaining, h1, h2)
        action = table.value_at(context)
        visited.append((context, action))
        if action is LambdaAction.RESET_TO_BEST:
            if best is not None:
                x, fx, loss = best
            pending = None
        elif action in _ACCEPTING and pending is not None:
            x, fx, loss = pending
            pending = None
        if action in _INCREASING:
            lam = _clamp_lambda(lam * nu)
        elif action in _DECREASING:
            lam = _clamp_lambda(lam / nu)
        if fx is None:
            fx = prob.residual(x)
            remaining -= 1
            loss = _finite_loss(fx)
            best = (x, fx, loss)
        else:
            candidate = _propose(prob, x, fx, lam, damping)
            f_cand = prob.residual(candidate)
            remaining -= 1
            cand_loss = _finite_loss(f_cand)
            h2, h1 = h1, cand_loss < loss
            pending = (candidate, f_cand, cand_loss)
            if best is None or cand_loss < best[2]:
                best = (candidate, f_cand, cand_loss)
    assert best is not None
    return best[0], best[2], visited


def standard_mimic_table(budget: int, explore_cutoff: int = 8) -> Contextual:
    """Frozen controller that replays the classic damping control exactly.

    The first two evaluations (start point, then the first candidate
    computed with the untouched damping factor) map to keep-and-reject;
    afterwards an improvement means accept-and-shrink and anything else
    means reject-and-grow, the same rule ``standard_lm`` applies after
    each evaluation.
    """

    def frozen(action: LambdaAction) -> ActionTable:
        entries = tuple(
            (a, explore_cutoff, 0.0 if a is action else 1.0) for a in LAMBDA_ACTIONS
        )
        return ActionTable(entries, explore_cutoff)

    overrides = {}
    for remaining in range(1, budget + 1):
        for h1 in (False, True):
            for h2 in (False, True):
                if remaining >= budget - 1:
                    action = LambdaAction.KEEP_REJECT
                elif h1:
                    action = LambdaAction.DEC_ACCEPT
                else:
                    action = LambdaAction.INC_REJECT
                overrides[(remaining, h1, h2)] = frozen(action)
    return Contextual(prototype=frozen(LambdaAction.KEEP_REJECT), overrides=overrides)


# ---------------------------------------------------------------------------
# Training and evaluation.
# ---------------------------------------------------------------------------


def _sample_start(prob: ResidualProblem, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    while True:
        x0 = prob.sample_start(rng)
        loss0 = prob.loss(x0)
        if loss0 >= TINY_LOSS:
            return x0, loss0


def train_controller(
    problems: list[ResidualProblem],
    episodes: int,
    budget: int,
    seed: int,
    table: Contextual | None = None,
    lambda0: float = DEFAULT_LAMBDA0,
    nu: float = DEFAULT_NU,
) -> Contextual:
    """Monte Carlo training of the damping controller.

    Every episode draws a problem and a start uniformly, runs the
    current controller, and credits the episode cost (the negated scaled
    loss reduction, so better episodes are cheaper) to every visited
    (context, action) pair through the tables' running averages.
    """
    rng = np.random.default_rng(seed)
    q = table if table is not None else fresh_controller_table()
    for _ in range(episodes):
        prob = problems[int(rng.integers(len(problems)))]
        x0, loss0 = _sample_start(prob, rng)
        _, best_loss, visited = adaptive_lm(prob, x0, budget, q, lambda0, nu)
        cost = -(loss0 - best_loss) / loss0
        for context, action in visited:
            q = q.adapt((context, (action, cost)))
    return q


def asrl(
    optimize: Callable[[ResidualProblem, np.ndarray], float],
    prob: ResidualProblem,
    trials: int,
    rng: np.random.Generator,
) -> float:
    """Averaged scaled reduction in loss over random starts.

    ``optimize`` maps (problem, start) to the best loss it found; starts
    with numerically zero loss are resampled to keep the ratio defined.
    """
    total = 0.0
    for _ in range(trials):
        x0, loss0 = _sample_start(prob, rng)
        best_loss = optimize(prob, x0)
        total += (loss0 - best_loss) / loss0
    return total / trials


def asrl_report(
    problems: list[ResidualProblem],
    table: Contextual,
    trials: int,
    budget: int,
    seed: int,
    lambda0: float = DEFAULT_LAMBDA0,
    nu: float = DEFAULT_NU,
) -> dict:
    """Paired comparison of standard and learned control on each problem.

    Both controls see the same start points (one RNG stream per problem
    derived from the seed), so differences are not sampling noise.
    """
    report: dict[str, dict[str, float]] = {}
    for index, prob in enumerate(problems):
        standard_value = asrl(
            lambda p, x0: standard_lm(p, x0, budget, lambda0, nu)[1],
            prob,
            trials,
            np.random.default_rng([seed, index]),
        )
        adaptive_value = asrl(
            lambda p, x0: adaptive_lm(p, x0, budget, table, lambda0, nu)[1],
            prob,
            trials,
            np.random.default_rng([seed, index]),
        )
        report[prob.name] = {
            "standard": standard_value,
            "adaptive": adaptive_value,
            "delta": adaptive_value - standard_value,
        }
    return report
