"""Command-line harness for the experiments.

Subcommands: regress, rps, bandit, principled, sortbench, lmopt.  Every
stochastic subcommand requires --seed and replays byte-identically from
the same flags (wall-clock cost measurements excepted; reports flag
themselves as non-deterministic in that case).  When --out is given the
report or trace is written there and a PNG figure is rendered next to
it unless --no-figure is passed.

Exit codes: 0 on success, 2 on a configuration error, 3 when an output
path cannot be written.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from . import adaptives, combinators, figures, lmopt, monitors, principled, sortbench
from .adaptives import Move
from .core import to_json, from_json

__all__ = ["main", "build_parser"]


def _write_text(path: str, text: str) -> None:
    Path(path).write_text(text)


def _write_report(path: str, report: dict) -> None:
    _write_text(path, json.dumps(report, sort_keys=True, indent=2) + "\n")


def _figure_path(out: str) -> str:
    return str(Path(out).with_suffix(".png"))


def _emit_trace(path: str, fmt: str, trace: Sequence[Any], feedbacks: Sequence[Any]) -> None:
    if fmt == "csv":
        combinators.write_trace_csv(path, trace, feedbacks)
    else:
        combinators.write_trace_jsonl(path, trace, feedbacks)


# ---------------------------------------------------------------------------
# regress
# ---------------------------------------------------------------------------


def _read_points(path: str, parser: argparse.ArgumentParser) -> list[tuple[float, float]]:
    points: list[tuple[float, float]] = []
    try:
        with open(path, newline="") as handle:
            for row_number, row in enumerate(csv.reader(handle)):
                if not row:
                    continue
                try:
                    points.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if row_number == 0:
                        continue  # header line
                    parser.error(f"--points: malformed row {row_number + 1} in {path}")
    except OSError as err:
        parser.error(f"--points: cannot read {path}: {err}")
    if not points:
        parser.error(f"--points: no data rows in {path}")
    return points


def _cmd_regress(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not args.eta > 0:
        parser.error("--eta must be positive")
    points = _read_points(args.points, parser)
    cfg = adaptives.RegressionConfig(eta=args.eta)
    line = adaptives.Line(0.0, 0.0)

    def states():
        state = line
        yield state
        for point in points:
            state = adaptives.line_adapt(cfg, point, state)
            yield state

    if args.until_close is not None:
        stop = monitors.ensure_last(2, monitors.are_close(args.until_close))
        trace = monitors.until(states(), stop)
        if not trace:
            print("did not converge within the provided points", file=sys.stderr)
            trace = combinators.train_by(line, points)
    else:
        trace = list(states())
    final = trace[-1]
    used = len(trace) - 1
    print(f"points used: {used}")
    print(f"m={final.slope!r} b={final.intercept!r}")
    if args.out:
        try:
            _emit_trace(args.out, args.format, trace, points[:used])
            if not args.no_figure:
                figures.save_regression_figure(
                    _figure_path(args.out),
                    [s.slope for s in trace],
                    [s.intercept for s in trace],
                )
        except OSError as err:
            print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
            return 3
    return 0


# ---------------------------------------------------------------------------
# rps
# ---------------------------------------------------------------------------

_CONST_MOVES = {"rock": Move.ROCK, "paper": Move.PAPER, "scissors": Move.SCISSORS}
_PLAYER_CHOICES = ["bandit", "beatlast", "maxfreq", *_CONST_MOVES]


def _make_player(name: str) -> tuple[Any, Callable[[Any, Any], Any]]:
    if name == "bandit":
        bandit = adaptives.Bandit.fresh(
            (Move.ROCK, Move.PAPER, Move.SCISSORS), exploration_scale=2.0
        )
        return bandit, adaptives.my_score
    if name == "beatlast":
        return adaptives.BeatLast(Move.ROCK), adaptives.opponents_move
    if name == "maxfreq":
        return adaptives.MaxFreq(), adaptives.opponents_move
    return adaptives.Const(_CONST_MOVES[name]), adaptives.opponents_move


def _cmd_rps(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    player_a = _make_player(args.a)
    player_b = _make_player(args.b)
    trace = combinators.vs(player_a, player_b, args.rounds)
    played = combinators.values_of(trace[:-1])
    score_a = score_b = 0
    cumulative_a: list[int] = []
    cumulative_b: list[int] = []
    for move_a, move_b in played:
        score_a += adaptives.score(move_a, move_b)
        score_b += adaptives.score(move_b, move_a)
        cumulative_a.append(score_a)
        cumulative_b.append(score_b)
    print(f"{args.a}: {score_a}")
    print(f"{args.b}: {score_b}")
    if args.out:
        feedbacks = [
            (player_a[1](va, vb), player_b[1](vb, va)) for va, vb in played
        ]
        try:
            _emit_trace(args.out, args.format, trace, feedbacks)
            if not args.no_figure:
                figures.save_rps_figure(
                    _figure_path(args.out), cumulative_a, cumulative_b, args.a, args.b
                )
        except OSError as err:
            print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
            return 3
    return 0


# ---------------------------------------------------------------------------
# bandit
# ---------------------------------------------------------------------------


def _cmd_bandit(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        means = [float(m) for m in args.means.split(",")]
    except ValueError:
        parser.error("--means must be a comma-separated list of numbers")
    if not means:
        parser.error("--means needs at least one arm")
    rng = random.Random(args.seed)
    arm_ids = list(range(len(means)))
    state = adaptives.Bandit.fresh(arm_ids)
    trace = [state]
    feedbacks: list[tuple[int, float]] = []
    for _ in range(args.steps):
        arm = state.value()
        fb = (arm, 1.0 if rng.random() < means[arm] else 0.0)
        feedbacks.append(fb)
        state = state.adapt(fb)
        trace.append(state)
    final = trace[-1]
    print("arm  pulls  mean_reward")
    for arm, pulls, reward in final.arms:
        mean = reward / pulls if pulls else 0.0
        print(f"{arm:>3}  {pulls:>5}  {mean:.4f}")
    print(f"current choice: arm {final.value()}")
    if args.out:
        try:
            _emit_trace(args.out, args.format, trace, feedbacks)
            if not args.no_figure:
                history = [[] for _ in arm_ids]
                for snapshot in trace:
                    for i, (_, pulls, _) in enumerate(snapshot.arms):
                        history[i].append(pulls)
                figures.save_bandit_figure(
                    _figure_path(args.out), [f"arm {a}" for a in arm_ids], history
                )
        except OSError as err:
            print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
            return 3
    return 0


# ---------------------------------------------------------------------------
# principled
# ---------------------------------------------------------------------------


def _cmd_principled(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not 0 < args.epsilon < 1:
        parser.error("--epsilon must lie strictly between 0 and 1 (it is also the planted cost gap)")
    if not 0 < args.delta < 1:
        parser.error("--delta must lie strictly between 0 and 1")
    if args.contexts < 1 or args.actions < 1:
        parser.error("--contexts and --actions must be at least 1")
    if args.trials < 1:
        parser.error("--trials must be at least 1")
    threshold = principled.learning_threshold(args.epsilon, args.delta, args.contexts, args.actions)
    sarf = principled.SyntheticSarf.chain(args.contexts, args.actions, gap=args.epsilon)
    summary = principled.run_convergence_trials(sarf, threshold, args.trials, args.seed)
    report = {
        "trials": args.trials,
        "t": threshold,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "fraction_optimal_after_stabilization": summary["fraction_optimal"],
        "contexts": args.contexts,
        "actions": args.actions,
        "seed": args.seed,
        "update_budget": summary["update_budget"],
        "max_update_episodes": summary["max_update_episodes"],
        "mean_episodes": summary["mean_episodes"],
    }
    print(f"learning threshold t: {threshold}")
    print(f"fraction optimal after stabilization: {summary['fraction_optimal']:.4f}")
    if args.out:
        try:
            _write_report(args.out, report)
            if not args.no_figure:
                figures.save_principled_figure(
                    _figure_path(args.out), summary["fraction_optimal"], threshold, args.trials
                )
        except OSError as err:
            print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
            return 3
    return 0


# ---------------------------------------------------------------------------
# sortbench
# ---------------------------------------------------------------------------


def _cmd_sortbench(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        config = sortbench.SortBenchConfig(
            max_len=args.max_len,
            episodes=args.episodes,
            cost_model=args.cost_model,
            seed=args.seed,
            min_len=args.min_len,
            eval_lists=args.eval_lists,
            synthetic_crossover=args.synthetic_crossover,
        )
    except ValueError as err:
        parser.error(str(err))
    report = sortbench.run_sort_benchmark(config)
    print(f"learned cutoff (length): {report['cutoff']}")
    print(f"learned policy comparisons: {report['learned']['comparisons']}")
    print(f"best fixed cutoff: {report['baselines']['best_fixed']}")
    if args.out:
        try:
            _write_report(args.out, report)
            if not args.no_figure:
                figures.save_sortbench_figure(_figure_path(args.out), report)
        except OSError as err:
            print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
            return 3
    return 0


# ---------------------------------------------------------------------------
# lmopt
# ---------------------------------------------------------------------------


def _cmd_lmopt_train(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.budget < 1:
        parser.error("--budget must be at least 1")
    if args.episodes < 0:
        parser.error("--episodes must be nonnegative")
    problems = list(lmopt.benchmark_functions().values())
    table = lmopt.train_controller(problems, args.episodes, args.budget, args.seed)
    if args.out:
        try:
            _write_text(args.out, to_json(table) + "\n")
        except OSError as err:
            print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
            return 3
    print(f"trained on {args.episodes} episodes (budget {args.budget})")
    return 0


def _cmd_lmopt_eval(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.budget < 1:
        parser.error("--budget must be at least 1")
    if args.trials < 1:
        parser.error("--trials must be at least 1")
    try:
        table = from_json(Path(args.table).read_text().strip())
    except OSError as err:
        parser.error(f"--table: cannot read {args.table}: {err}")
    problems = list(lmopt.benchmark_functions().values())
    report = lmopt.asrl_report(problems, table, args.trials, args.budget, args.seed)
    for name in sorted(report):
        row = report[name]
        print(
            f"{name}: standard={row['standard']:.4f} adaptive={row['adaptive']:.4f} "
            f"delta={row['delta']:+.4f}"
        )
    if args.out:
        try:
            _write_report(args.out, report)
            if not args.no_figure:
                figures.save_lmopt_figure(_figure_path(args.out), report)
        except OSError as err:
            print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
            return 3
    return 0


# ---------------------------------------------------------------------------
# Parser.
# ---------------------------------------------------------------------------


def _add_output_flags(sub: argparse.ArgumentParser, formats: bool = False) -> None:
    sub.add_argument("--out", help="output path for the report or trace")
    sub.add_argument("--no-figure", action="store_true", help="skip the PNG sidecar")
    if formats:
        sub.add_argument("--format", choices=["csv", "json"], default="csv",
                         help="trace format (csv or json lines)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abp", description="Adaptive-value experiments and benchmarks."
    )
    subs = parser.add_subparsers(dest="command", required=True)

    regress = subs.add_parser("regress", help="fit a line to points from a CSV file")
    regress.add_argument("--points", required=True, help="CSV with x,y columns (header optional)")
    regress.add_argument("--eta", type=float, default=0.01, help="learning rate")
    regress.add_argument("--until-close", type=float, default=None, metavar="TOL",
                         help="stop once consecutive lines differ at most TOL in both coefficients")
    _add_output_flags(regress, formats=True)
    regress.set_defaults(handler=_cmd_regress)

    rps = subs.add_parser("rps", help="play a rock-paper-scissors tournament")
    rps.add_argument("--a", choices=_PLAYER_CHOICES, required=True)
    rps.add_argument("--b", choices=_PLAYER_CHOICES, required=True)
    rps.add_argument("--rounds", type=int, default=1000)
    rps.add_argument("--seed", type=int, required=True)
    _add_output_flags(rps, formats=True)
    rps.set_defaults(handler=_cmd_rps)

    bandit = subs.add_parser("bandit", help="run a Bernoulli bandit demo")
    bandit.add_argument("--means", default="0.9,0.5,0.1",
                        help="comma-separated Bernoulli means, one per arm")
    bandit.add_argument("--steps", type=int, default=10000)
    bandit.add_argument("--seed", type=int, required=True)
    _add_output_flags(bandit, formats=True)
    bandit.set_defaults(handler=_cmd_bandit)

    pr = subs.add_parser("principled", help="stability-gated Q-table convergence trials")
    pr.add_argument("--contexts", type=int, default=4)
    pr.add_argument("--actions", type=int, default=2)
    pr.add_argument("--epsilon", type=float, default=0.2, help="cost gap and threshold input")
    pr.add_argument("--delta", type=float, default=0.05, help="failure probability")
    pr.add_argument("--trials", type=int, default=200)
    pr.add_argument("--seed", type=int, required=True)
    _add_output_flags(pr)
    pr.set_defaults(handler=_cmd_principled)

    sb = subs.add_parser("sortbench", help="train and score the adaptive hybrid sort")
    sb.add_argument("--max-len", type=int, default=2048)
    sb.add_argument("--episodes", type=int, default=5000)
    sb.add_argument("--cost-model", choices=["wall", "cmp", "synthetic"], default="cmp")
    sb.add_argument("--seed", type=int, required=True)
    sb.add_argument("--min-len", type=int, default=4)
    sb.add_argument("--eval-lists", type=int, default=100)
    sb.add_argument("--synthetic-crossover", type=int, default=17)
    _add_output_flags(sb)
    sb.set_defaults(handler=_cmd_sortbench)

    lm = subs.add_parser("lmopt", help="budgeted Levenberg-Marquardt controller")
    lm_subs = lm.add_subparsers(dest="lmopt_command", required=True)

    train = lm_subs.add_parser("train", help="train the damping controller")
    train.add_argument("--episodes", type=int, default=100_000)
    train.add_argument("--budget", type=int, default=5)
    train.add_argument("--seed", type=int, required=True)
    train.add_argument("--out", help="path for the controller table (JSON)")
    train.set_defaults(handler=_cmd_lmopt_train)

    ev = lm_subs.add_parser("eval", help="compare standard and learned control")
    ev.add_argument("--table", required=True, help="controller table from `lmopt train`")
    ev.add_argument("--trials", type=int, default=10_000)
    ev.add_argument("--budget", type=int, default=5)
    ev.add_argument("--seed", type=int, required=True)
    _add_output_flags(ev)
    ev.set_defaults(handler=_cmd_lmopt_eval)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args, parser)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code is not None else 0


if __name__ == "__main__":
    sys.exit(main())
