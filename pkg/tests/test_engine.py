"""Review sessions: trace law, decisions, replay determinism."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spreadaudit import (
    BetaParams,
    Decision,
    DuplicateVerdictError,
    NothingToReviewError,
    Ordering,
    Outcome,
    ReviewPolicy,
    SessionStateError,
    SessionStatus,
    TestRecord,
    UnknownBlockError,
    Verdict,
    beta_quantile,
    format_trace_csv,
    load_workbook,
    new_session,
    posterior_update,
    reliability,
    replay,
)

from fixtures import fig_grid_workbook, isolated_blocks_workbook
from oracles import posterior_mean_exact


def run_verdicts(session, verdicts, auto_reopen=True):
    """Feed single-letter verdicts (c/d/q) in order, reopening on stops."""
    mapping = {"c": Verdict.CORRECT, "d": Verdict.DEFECT, "q": Verdict.QUALITATIVE}
    for v in verdicts:
        if auto_reopen and session.status in (
            SessionStatus.STOPPED_ACCEPTED,
            SessionStatus.STOPPED_REJECTED,
        ):
            session.reopen()
        block = session.next_block()
        session.record(block.id, mapping[v], timestamp="2026-01-01T00:00:00+00:00")
    return session


def redevelop_pattern() -> str:
    """150 blocks; defects every 3rd block through 30, one more at 75.

    Reliability collapses toward zero mid-run and recovers to roughly 20%
    by exhaustion.
    """
    verdicts = []
    for i in range(1, 151):
        if i <= 30 and i % 3 == 0:
            verdicts.append("d")
        elif i == 75:
            verdicts.append("d")
        else:
            verdicts.append("c")
    return "".join(verdicts)


def stop_accept_pattern() -> str:
    """120 blocks, one early defect; reliability crosses target near 109."""
    return "".join("d" if i == 10 else "c" for i in range(1, 121))


class TestSessionBasics:
    def test_no_formula_blocks_is_an_error(self):
        wb = load_workbook({"name": "w", "sheets": [{"name": "S", "cells": [{"ref": "A1", "value": "1"}]}]})
        with pytest.raises(NothingToReviewError):
            new_session(wb, BetaParams(5, 95))

    def test_demo_grid_order(self):
        session = new_session(fig_grid_workbook(), BetaParams(5, 95))
        assert [b.id for b in session.order] == ["Sheet1!A5", "Sheet1!D5"]

    def test_shuffled_order_deterministic(self):
        wb = isolated_blocks_workbook(12)
        s1 = new_session(wb, BetaParams(5, 95), ordering=Ordering.shuffled(7))
        s2 = new_session(wb, BetaParams(5, 95), ordering=Ordering.shuffled(7))
        assert [b.id for b in s1.order] == [b.id for b in s2.order]

    def test_next_block_idempotent(self):
        session = new_session(fig_grid_workbook(), BetaParams(5, 95))
        assert session.next_block().id == session.next_block().id == "Sheet1!A5"

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            ReviewPolicy(acceptable_cer=0.0)
        with pytest.raises(ValueError):
            ReviewPolicy(floor_reliability=0.95, target_reliability=0.95)
        with pytest.raises(ValueError):
            ReviewPolicy(consecutive_required=0)


class TestRecording:
    def test_table_law_means_exact(self):
        # pass, pass, pass, defect, pass, defect, defect with prior (5, 95)
        session = new_session(isolated_blocks_workbook(7), BetaParams(5, 95))
        run_verdicts(session, "cccdcdd")
        means = [p.mean for p in session.trace]
        expected = [
            float(Fraction(5, 101)),
            float(Fraction(5, 102)),
            float(Fraction(5, 103)),
            float(Fraction(6, 104)),
            float(Fraction(6, 105)),
            float(Fraction(7, 106)),
            float(Fraction(8, 107)),
        ]
        assert means == expected

    def test_first_correct_gives_5_over_101(self):
        session = new_session(fig_grid_workbook(), BetaParams(5, 95))
        point = session.record("Sheet1!A5", Verdict.CORRECT)
        assert point.mean == 5 / 101

    def test_worked_example_posterior(self):
        session = new_session(isolated_blocks_workbook(25), BetaParams(2, 8))
        run_verdicts(session, "c" * 9 + "d" + "c" * 9 + "d")  # 20 blocks, 2 defects
        point = session.trace[-1]
        assert (point.posterior.alpha, point.posterior.beta) == (4.0, 26.0)
        assert point.mean == pytest.approx(0.13333333333333333, abs=1e-15)

    def test_qualitative_counts_block_not_defect(self):
        session = new_session(fig_grid_workbook(), BetaParams(5, 95))
        point = session.record("Sheet1!A5", Verdict.QUALITATIVE, note="hardcoded rate")
        assert point.n == 1
        assert point.x == 0
        assert point.mean == 5 / 101
        assert session.qualitative_count == 1

    def test_duplicate_verdict_rejected(self):
        session = new_session(fig_grid_workbook(), BetaParams(5, 95))
        session.record("Sheet1!A5", Verdict.CORRECT)
        with pytest.raises(DuplicateVerdictError):
            session.record("Sheet1!A5", Verdict.DEFECT)

    def test_unknown_block_rejected(self):
        session = new_session(fig_grid_workbook(), BetaParams(5, 95))
        with pytest.raises(UnknownBlockError):
            session.record("Sheet1!Z9", Verdict.CORRECT)

    def test_out_of_order_allowed_and_flagged(self):
        session = new_session(fig_grid_workbook(), BetaParams(5, 95))
        session.record("Sheet1!D5", Verdict.CORRECT)
        assert (1, "out_of_order:Sheet1!D5") in session.decision_log
        assert session.next_block().id == "Sheet1!A5"

    def test_record_after_stop_needs_reopen(self):
        session = new_session(isolated_blocks_workbook(150), BetaParams(5, 95))
        run_verdicts(session, "d" * 20, auto_reopen=False)
        assert session.status is SessionStatus.STOPPED_REJECTED
        with pytest.raises(SessionStateError):
            session.record(session.next_block().id, Verdict.CORRECT)
        session.reopen()
        session.record(session.next_block().id, Verdict.CORRECT)

    def test_reopen_errors(self):
        session = new_session(fig_grid_workbook(), BetaParams(5, 95))
        with pytest.raises(SessionStateError):
            session.reopen()
        run_verdicts(session, "cc")
        assert session.status is SessionStatus.EXHAUSTED
        with pytest.raises(SessionStateError):
            session.reopen()


class TestTraceInvariants:
    def test_mean_law_and_band_meaning(self):
        session = new_session(isolated_blocks_workbook(40), BetaParams(5, 95))
        rng = np.random.default_rng(3)
        verdicts = "".join("d" if rng.random() < 0.1 else "c" for _ in range(40))
        run_verdicts(session, verdicts)
        for point in session.trace:
            assert point.mean == posterior_mean_exact(5.0, 95.0, point.n, point.x)
            assert point.q05 < point.mean < point.q95
            # 90% of posterior mass between the band edges
            mass = reliability(point.posterior, point.q95) - reliability(
                point.posterior, point.q05
            )
            assert mass == pytest.approx(0.90, abs=1e-8)
            # band nesting: reliability >= 0.95 iff q95 <= acceptable rate
            if abs(point.reliability - 0.95) > 1e-9:
                assert (point.reliability >= 0.95) == (
                    point.q95 <= session.policy.acceptable_cer
                )

    @given(n=st.integers(1, 400), x=st.integers(0, 50))
    @settings(max_examples=60)
    def test_extra_defect_never_raises_final_reliability(self, n, x):
        x = min(x, n)
        prior = BetaParams(5, 95)
        base = posterior_update(prior, TestRecord(n, x))
        worse = posterior_update(prior, TestRecord(n + 1, x + 1))
        assert reliability(worse, 0.05) < reliability(base, 0.05)

    def test_defect_position_does_not_matter(self):
        wb = isolated_blocks_workbook(12)
        final = []
        for verdicts in ("dccccccccccc"[:12], "ccccccdccccc"[:12], "cccccccccccd"[:12]):
            session = run_verdicts(new_session(wb, BetaParams(5, 95)), verdicts)
            final.append(session.trace[-1].posterior)
        assert final[0] == final[1] == final[2]


class TestDecisions:
    def test_empty_trace_continues(self):
        session = new_session(fig_grid_workbook(), BetaParams(5, 95))
        assert session.evaluate_decision() is Decision.CONTINUE

    def test_small_workbook_exhausts(self):
        session = run_verdicts(new_session(fig_grid_workbook(), BetaParams(5, 95)), "cc")
        assert session.status is SessionStatus.EXHAUSTED
        assert session.evaluate_decision() is Decision.EXHAUSTED

    def test_stop_accept_fires_after_sustained_target(self):
        session = new_session(isolated_blocks_workbook(120), BetaParams(5, 95))
        verdicts = stop_accept_pattern()
        mapping = {"c": Verdict.CORRECT, "d": Verdict.DEFECT}
        fired_at = None
        for v in verdicts:
            block = session.next_block()
            session.record(block.id, mapping[v])
            if session.status is SessionStatus.STOPPED_ACCEPTED:
                fired_at = session.judged_count
                break
        assert fired_at is not None
        # first crossing at 109, sustained; the rule waits for 5 in a row
        rels = [p.reliability for p in session.trace]
        first_crossing = next(i + 1 for i, r in enumerate(rels) if r >= 0.95)
        assert first_crossing == 109
        assert fired_at == first_crossing + session.policy.consecutive_required - 1
        assert (fired_at, "stop_accept") in session.decision_log

    def test_redevelop_fires_then_recovery_to_twenty_percent(self):
        session = new_session(isolated_blocks_workbook(150), BetaParams(5, 95))
        run_verdicts(session, redevelop_pattern())
        assert session.status is SessionStatus.EXHAUSTED
        events = [e for _, e in session.decision_log]
        assert "recommend_redevelop" in events
        assert "reopened" in events
        rels = [p.reliability for p in session.trace]
        assert min(rels) < 0.01
        assert 0.15 <= rels[-1] <= 0.25
        report = session.trace_report()
        assert "redevelopment" in report.advisory

    def test_single_touch_does_not_stop(self):
        # four points above target then a defect: no stop with the default
        # five-in-a-row rule
        policy = ReviewPolicy(min_blocks=1)
        session = new_session(isolated_blocks_workbook(90), BetaParams(1, 99), policy=policy)
        # reliability of beta(1, 99+n) at 0.05 is already > 0.95 at n=0
        run_verdicts(session, "cccd")
        assert session.status is SessionStatus.IN_PROGRESS

    def test_muted_decision_does_not_refire_while_tail_holds(self):
        session = new_session(isolated_blocks_workbook(150), BetaParams(5, 95))
        run_verdicts(session, "d" * 20, auto_reopen=False)
        assert session.status is SessionStatus.STOPPED_REJECTED
        session.reopen()
        session.record(session.next_block().id, Verdict.CORRECT)
        assert session.status is SessionStatus.IN_PROGRESS
        stops = [e for _, e in session.decision_log if e == "recommend_redevelop"]
        assert len(stops) == 1


class TestReports:
    def test_prior_assessment_uniform_reliability(self):
        session = new_session(
            isolated_blocks_workbook(10),
            BetaParams(1, 1),
            policy=ReviewPolicy(acceptable_cer=0.05),
        )
        assert session.prior_assessment().reliability == pytest.approx(0.05, abs=1e-12)

    def test_prior_assessment_five_ninety_five(self):
        session = new_session(isolated_blocks_workbook(10), BetaParams(5, 95))
        assessment = session.prior_assessment()
        assert assessment.mean == 0.05
        assert assessment.total_blocks == 10

    def test_prior_assessment_predictive_geometry(self):
        session = new_session(isolated_blocks_workbook(900), BetaParams(2, 8))
        assessment = session.prior_assessment()
        assert assessment.predictive_argmax == 112  # exhaustive-scan oracle value

    def test_report_after_worked_example(self):
        session = new_session(isolated_blocks_workbook(900), BetaParams(2, 8))
        run_verdicts(session, "c" * 9 + "d" + "c" * 9 + "d")
        report = session.trace_report()
        assert report.remaining_blocks == 880
        assert report.predictive_argmax == 94  # posterior (4, 26) over 880 left
        last = report.points[-1]
        assert last.q05 < 0.13333333333333333 < last.q95
        assert last.q05 == pytest.approx(beta_quantile(BetaParams(4, 26), 0.05), abs=1e-12)

    def test_empty_report_uses_prior_predictive(self):
        session = new_session(isolated_blocks_workbook(10), BetaParams(2, 8))
        report = session.trace_report()
        assert report.points == ()
        assert report.remaining_blocks == 10

    def test_full_review_predictive_degenerates(self):
        session = run_verdicts(new_session(fig_grid_workbook(), BetaParams(5, 95)), "cc")
        report = session.trace_report()
        assert report.remaining_blocks == 0
        assert report.predictive_argmax == 0
        assert report.predictive_interval == (0, 0)


class TestReplay:
    def test_replay_reproduces_trace_bit_for_bit(self):
        wb = isolated_blocks_workbook(150)
        live = new_session(wb, BetaParams(5, 95))
        run_verdicts(live, redevelop_pattern())
        rebuilt = replay(wb, BetaParams(5, 95), live.policy, live.ordering, live.outcomes)
        assert format_trace_csv(rebuilt.trace) == format_trace_csv(live.trace)
        assert rebuilt.status == live.status
        assert rebuilt.decision_log == live.decision_log

    def test_truncated_log_gives_prefix(self):
        wb = isolated_blocks_workbook(40)
        live = run_verdicts(new_session(wb, BetaParams(5, 95)), "ccdcc" * 8)
        rebuilt = replay(wb, BetaParams(5, 95), live.policy, live.ordering, live.outcomes[:13])
        assert rebuilt.trace == live.trace[:13]

    def test_permuted_log_same_final_posterior(self):
        wb = isolated_blocks_workbook(10)
        live = run_verdicts(new_session(wb, BetaParams(5, 95)), "ccdccccdcc")
        shuffled = [live.outcomes[i] for i in (3, 0, 9, 1, 7, 2, 8, 4, 6, 5)]
        rebuilt = replay(wb, BetaParams(5, 95), live.policy, live.ordering, shuffled)
        assert rebuilt.trace[-1].posterior == live.trace[-1].posterior
        assert rebuilt.trace != live.trace  # different path, same endpoint

    def test_replay_unknown_block_is_integrity_error(self):
        wb = isolated_blocks_workbook(5)
        bad = [Outcome(block_id="Sheet1!Z99", verdict=Verdict.CORRECT)]
        with pytest.raises(UnknownBlockError):
            replay(wb, BetaParams(5, 95), ReviewPolicy(), Ordering.sequential(), bad)


class TestCalibration:
    @pytest.mark.parametrize("theta,seed", [(0.01, 11), (0.05, 12), (0.2, 13)])
    def test_posterior_mean_converges_to_truth(self, theta, seed):
        wb = isolated_blocks_workbook(2000)
        session = new_session(wb, BetaParams(2, 8))
        rng = np.random.default_rng(seed)
        verdicts = "".join("d" if rng.random() < theta else "c" for _ in range(2000))
        run_verdicts(session, verdicts)
        last = session.trace[-1]
        posterior_sd = (
            (last.posterior.alpha * last.posterior.beta)
            / (
                (last.posterior.alpha + last.posterior.beta) ** 2
                * (last.posterior.alpha + last.posterior.beta + 1)
            )
        ) ** 0.5
        assert abs(last.mean - theta) <= 3 * posterior_sd
