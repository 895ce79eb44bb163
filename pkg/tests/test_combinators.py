"""Tests for the adaptation drivers and trace machinery."""

from __future__ import annotations

import csv
import json

from hypothesis import given, strategies as st

from abp.adaptives import (
    Bandit,
    Const,
    Line,
    Move,
    Pull,
    Reward,
    TransactionalBandit,
    big_step,
    my_score,
)
from abp.combinators import (
    coevolve,
    cotransform,
    distr,
    evolve,
    evolve_iter,
    train_by,
    train_by_iter,
    trans_by,
    transform_by,
    values_of,
    vs,
    write_trace_csv,
    write_trace_jsonl,
)
from abp.core import Pair

lines = st.builds(
    Line,
    st.floats(-5, 5, allow_nan=False, allow_infinity=False),
    st.floats(-5, 5, allow_nan=False, allow_infinity=False),
)
points = st.tuples(
    st.floats(-3, 3, allow_nan=False, allow_infinity=False),
    st.floats(-3, 3, allow_nan=False, allow_infinity=False),
)


def rps_bandit() -> Bandit:
    return Bandit.fresh((Move.ROCK, Move.PAPER, Move.SCISSORS), exploration_scale=2.0)


class TestTrainBy:
    def test_empty_feedback(self):
        line = Line(1.0, 2.0)
        assert train_by(line, []) == [line]

    def test_single_regression_step(self):
        assert train_by(Line(0.0, 0.0), [(1.0, 1.0)]) == [Line(0.0, 0.0), Line(0.01, 0.01)]

    @given(lines, st.lists(points, max_size=10))
    def test_length_law(self, line, feedbacks):
        assert len(train_by(line, feedbacks)) == len(feedbacks) + 1

    @given(lines, st.lists(points, max_size=10))
    def test_iter_matches_list(self, line, feedbacks):
        assert list(train_by_iter(line, feedbacks)) == train_by(line, feedbacks)

    @given(lines, st.lists(points, max_size=10))
    def test_scanl_foldl_coherence(self, line, feedbacks):
        assert train_by(line, feedbacks)[-1] == trans_by(line, feedbacks)


class TestEvolve:
    def test_zero_steps(self):
        bandit = rps_bandit()
        assert evolve(lambda v: (v, 1.0), bandit, 0) == [bandit]

    def test_bandit_learns_the_rewarded_arm(self):
        feedback = lambda v: (v, 1.0 if v == Move.PAPER else 0.0)
        trace = evolve(feedback, rps_bandit(), 1000)
        assert trace[-1].value() == Move.PAPER

    def test_definitional_replay(self):
        feedback = lambda v: (v, 0.5 if v == Move.ROCK else -0.5)
        trace = evolve(feedback, rps_bandit(), 25)
        for i in range(25):
            assert trace[i + 1] == trace[i].adapt(feedback(trace[i].value()))

    def test_deterministic_reproducibility(self):
        feedback = lambda v: (v, 1.0 if v == Move.SCISSORS else 0.0)
        assert evolve(feedback, rps_bandit(), 200) == evolve(feedback, rps_bandit(), 200)

    def test_iter_matches_bounded(self):
        feedback = lambda v: (v, 1.0)
        stream = evolve_iter(feedback, rps_bandit())
        prefix = [next(stream) for _ in range(11)]
        assert prefix == evolve(feedback, rps_bandit(), 10)


class TestCoevolve:
    def test_constant_feedback_degenerates_to_parallel_training(self):
        left, right = Line(0.0, 0.0), Line(1.0, 1.0)
        fb_left, fb_right = (1.0, 1.0), (0.0, 5.0)
        trace = coevolve(lambda a, b: fb_left, lambda a, b: fb_right, (left, right), 4)
        left_trace = train_by(left, [fb_left] * 4)
        right_trace = train_by(right, [fb_right] * 4)
        assert [p.left for p in trace] == left_trace
        assert [p.right for p in trace] == right_trace

    def test_equals_evolve_over_pair_with_distributed_feedback(self):
        f = lambda va, vb: my_score(va, vb)
        g = lambda va, vb: vb
        pair = (rps_bandit(), Const(Move.ROCK))
        assert coevolve(f, g, pair, 50) == evolve(distr(f, g), Pair(*pair), 50)

    def test_definitional_replay(self):
        f = lambda va, vb: my_score(va, vb)
        g = lambda va, vb: va
        trace = coevolve(f, g, (rps_bandit(), Const(Move.SCISSORS)), 20)
        for i in range(20):
            va, vb = trace[i].value()
            assert trace[i + 1].left == trace[i].left.adapt(f(va, vb))
            assert trace[i + 1].right == trace[i].right.adapt(g(va, vb))

    def test_vs_flips_second_players_arguments(self):
        seen = []

        def g(own, opponent):
            seen.append((own, opponent))
            return opponent

        trace = vs((Const(Move.ROCK), lambda a, b: b), (Const(Move.PAPER), g), 3)
        assert len(trace) == 4
        assert seen == [(Move.PAPER, Move.ROCK)] * 3


class TestTransforms:
    def test_transform_by_replays_big_steps(self):
        bandit = TransactionalBandit.fresh(tuple(Move), exploration_scale=2.0)
        plays = [(Move.ROCK, 1.0), (Move.PAPER, -1.0), (Move.ROCK, 0.0)]
        trace = transform_by(bandit, [lambda b, fb=fb: big_step(fb, b) for fb in plays])
        direct = bandit
        expected = [direct]
        for fb in plays:
            direct = big_step(fb, direct)
            expected.append(direct)
        assert trace == expected

    def test_transform_by_empty(self):
        bandit = TransactionalBandit.fresh(("A",))
        assert transform_by(bandit, []) == [bandit]

    def test_transform_by_identity(self):
        bandit = TransactionalBandit.fresh(("A", "B"))
        assert transform_by(bandit, [lambda b: b]) == [bandit, bandit]

    def test_trans_by_equals_big_step(self):
        bandit = TransactionalBandit.fresh(("A", "B"))
        assert trans_by(bandit, [Pull("A"), Reward(1.0)]) == big_step(("A", 1.0), bandit)

    def test_trans_by_empty(self):
        bandit = TransactionalBandit.fresh(("A",))
        assert trans_by(bandit, []) is bandit

    def test_cotransform_constant_transforms_run_independently(self):
        a = TransactionalBandit.fresh(("A", "B"))
        b = TransactionalBandit.fresh(("C", "D"))
        fa = lambda x, y: x.adapt(Pull("A"))
        fb = lambda y, x: y.adapt(Pull("D"))
        trace = cotransform(fa, fb, (a, b), 3)
        assert [x for x, _ in trace] == transform_by(a, [lambda s: s.adapt(Pull("A"))] * 3)
        assert [y for _, y in trace] == transform_by(b, [lambda s: s.adapt(Pull("D"))] * 3)

    def test_cotransform_single_step(self):
        a = TransactionalBandit.fresh(("A", "B"))
        b = TransactionalBandit.fresh(("C", "D"))
        f = lambda x, y: big_step(("A", 1.0), x)
        g = lambda y, x: big_step(("C", -1.0), y)
        trace = cotransform(f, g, (a, b), 1)
        assert trace == [(a, b), (f(a, b), g(b, a))]

    def test_transactional_tournament_matches_immediate_tournament(self):
        # Big-step self-play between transactional bandits mirrors the
        # fine-grained tournament between immediate bandits.
        immediate = vs((rps_bandit(), my_score), (rps_bandit(), my_score), 1000)
        immediate_values = values_of(immediate[:-1])

        txn_a = TransactionalBandit.fresh(tuple(Move), exploration_scale=2.0)
        txn_b = TransactionalBandit.fresh(tuple(Move), exploration_scale=2.0)
        f = lambda x, y: big_step(my_score(x.value(), y.value()), x)
        g = lambda y, x: big_step(my_score(y.value(), x.value()), y)
        txn_trace = cotransform(f, g, (txn_a, txn_b), 1000)
        txn_values = [(x.value(), y.value()) for x, y in txn_trace[:-1]]

        def modal(moves):
            return max(set(moves), key=lambda m: (moves.count(m), m.value))

        tail_imm = immediate_values[-100:]
        tail_txn = txn_values[-100:]
        assert modal([a for a, _ in tail_imm]) == modal([a for a, _ in tail_txn])
        assert modal([b for _, b in tail_imm]) == modal([b for _, b in tail_txn])


class TestValuesOf:
    def test_empty(self):
        assert values_of([]) == []

    def test_singleton(self):
        assert values_of([Line(2.0, 1.0)]) == [Line(2.0, 1.0)]

    @given(st.lists(lines, max_size=8))
    def test_length_preserving(self, items):
        assert len(values_of(items)) == len(items)


class TestTraceEmission:
    def test_csv_columns_and_feedback_alignment(self, tmp_path):
        trace = train_by(Line(0.0, 0.0), [(1.0, 1.0)])
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace, [(1.0, 1.0)])
        rows = list(csv.reader(path.read_text().splitlines()))
        assert rows[0] == ["step", "value_json", "feedback_json"]
        assert rows[1][0] == "0" and rows[1][2] == ""
        assert json.loads(rows[2][1]) == {"kind": "line", "state": {"intercept": 0.01, "slope": 0.01}}
        assert json.loads(rows[2][2]) == {"tuple": [1.0, 1.0]}

    def test_jsonl_round_trip(self, tmp_path):
        trace = train_by(Line(0.0, 0.0), [(0.0, 5.0), (1.0, 1.0)])
        path = tmp_path / "trace.jsonl"
        write_trace_jsonl(path, trace, [(0.0, 5.0), (1.0, 1.0)])
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert [r["step"] for r in records] == [0, 1, 2]
        assert records[0]["feedback"] is None
        assert records[1]["feedback"] == {"tuple": [0.0, 5.0]}
