"""Sequential review sessions over a workbook's formula blocks.

A session walks the block queue, takes one verdict per block, and after
every verdict appends a trace point: cumulative counts, the conjugate
posterior, its mean, the 5%/95% band, and the reliability (posterior
probability that the error rate is at or below the acceptable rate).
The trace is a pure fold over the append-only outcome log, so replaying
a log reproduces a live session bit for bit.

Stopping is sustained-signal based: accept when the last
``consecutive_required`` points all meet the target reliability, recommend
redevelopment when they all sit at or below the floor. A single touch of
the threshold never stops the review, since reliability can spike
transiently. Both stops are advisory: a stopped session can be explicitly
reopened and reviewed to exhaustion.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Sequence

from .blocks import FormulaBlock, review_order, shuffled_order
from .stats import (
    BetaParams,
    PredictiveSpec,
    TestRecord,
    beta_binomial_argmax,
    beta_binomial_interval,
    beta_mean,
    beta_quantile,
    posterior_update,
    reliability,
)
from .workbook import Workbook

__all__ = [
    "Verdict",
    "Decision",
    "SessionStatus",
    "ReviewPolicy",
    "Ordering",
    "Outcome",
    "TracePoint",
    "PriorAssessment",
    "TraceReport",
    "ReviewSession",
    "SessionError",
    "NothingToReviewError",
    "UnknownBlockError",
    "DuplicateVerdictError",
    "SessionStateError",
    "new_session",
    "replay",
    "decide",
]


class SessionError(Exception):
    """Base class for review-session failures."""


class NothingToReviewError(SessionError):
    """The workbook has no formula blocks."""


class UnknownBlockError(SessionError):
    """A verdict references a block that is not in the session's order."""


class DuplicateVerdictError(SessionError):
    """The block already has a verdict."""


class SessionStateError(SessionError):
    """The operation is not valid in the session's current status."""


class Verdict(str, Enum):
    CORRECT = "correct"
    DEFECT = "defect"
    QUALITATIVE = "qualitative"


class Decision(str, Enum):
    CONTINUE = "continue"
    STOP_ACCEPT = "stop_accept"
    RECOMMEND_REDEVELOP = "recommend_redevelop"
    EXHAUSTED = "exhausted"


class SessionStatus(str, Enum):
    IN_PROGRESS = "in_progress"
    STOPPED_ACCEPTED = "stopped_accepted"
    STOPPED_REJECTED = "stopped_rejected"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class ReviewPolicy:
    """Thresholds driving the stop/continue/redevelop decision."""

    acceptable_cer: float = 0.05
    target_reliability: float = 0.95
    floor_reliability: float = 0.05
    min_blocks: int = 20
    consecutive_required: int = 5

    def __post_init__(self) -> None:
        if not 0.0 < self.acceptable_cer < 1.0:
            raise ValueError(f"acceptable_cer must lie in (0, 1), got {self.acceptable_cer!r}")
        if not 0.0 < self.target_reliability < 1.0:
            raise ValueError(
                f"target_reliability must lie in (0, 1), got {self.target_reliability!r}"
            )
        if not 0.0 < self.floor_reliability < 1.0:
            raise ValueError(
                f"floor_reliability must lie in (0, 1), got {self.floor_reliability!r}"
            )
        if self.floor_reliability >= self.target_reliability:
            raise ValueError("floor_reliability must be below target_reliability")
        if self.min_blocks < 0:
            raise ValueError(f"min_blocks must be non-negative, got {self.min_blocks}")
        if self.consecutive_required < 1:
            raise ValueError(
                f"consecutive_required must be positive, got {self.consecutive_required}"
            )


@dataclass(frozen=True)
class Ordering:
    """Block queue order: sequential (column-major) or seeded shuffle."""

    kind: str = "sequential"
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("sequential", "shuffled"):
            raise ValueError(f"ordering kind must be sequential or shuffled, got {self.kind!r}")
        if self.kind == "shuffled" and self.seed is None:
            raise ValueError("shuffled ordering requires a seed")

    @classmethod
    def sequential(cls) -> "Ordering":
        return cls(kind="sequential")

    @classmethod
    def shuffled(cls, seed: int) -> "Ordering":
        return cls(kind="shuffled", seed=seed)


@dataclass(frozen=True)
class Outcome:
    """One recorded verdict."""

    block_id: str
    verdict: Verdict
    note: str = ""
    timestamp: str = ""


@dataclass(frozen=True)
class TracePoint:
    """One row of the audit trace after the n-th verdict."""

    n: int
    x: int
    posterior: BetaParams
    mean: float
    q05: float
    q95: float
    reliability: float


@dataclass(frozen=True)
class PriorAssessment:
    """Pre-review summary: what the prior alone says about the workbook."""

    mean: float
    q05: float
    q95: float
    reliability: float
    total_blocks: int
    predictive_argmax: int
    predictive_interval: tuple[int, int]
    predictive_mass: float


@dataclass(frozen=True)
class TraceReport:
    """Everything needed to plot the mean/band and reliability curves."""

    points: tuple[TracePoint, ...]
    status: SessionStatus
    decision: Decision
    decision_log: tuple[tuple[int, str], ...]
    remaining_blocks: int
    predictive_argmax: int
    predictive_interval: tuple[int, int]
    predictive_mass: float
    advisory: str


def decide(
    n_judged: int,
    total_blocks: int,
    recent_reliabilities: Sequence[float],
    policy: ReviewPolicy,
) -> Decision:
    """Decision rule on the reliability tail.

    ``recent_reliabilities`` holds the last ``consecutive_required``
    reliability values (fewer while the trace is still short). Stop rules
    take precedence over exhaustion.
    """
    if n_judged == 0:
        return Decision.CONTINUE
    recent = list(recent_reliabilities)[-policy.consecutive_required :]
    if n_judged >= policy.min_blocks and len(recent) >= policy.consecutive_required:
        if all(r >= policy.target_reliability for r in recent):
            return Decision.STOP_ACCEPT
        if all(r <= policy.floor_reliability for r in recent):
            return Decision.RECOMMEND_REDEVELOP
    if n_judged >= total_blocks:
        return Decision.EXHAUSTED
    return Decision.CONTINUE


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class ReviewSession:
    """Mutable audit session; one writer at a time (callers serialize)."""

    def __init__(
        self,
        workbook: Workbook,
        prior: BetaParams,
        policy: ReviewPolicy,
        ordering: Ordering,
    ) -> None:
        self.workbook = workbook
        self.prior = prior
        self.policy = policy
        self.ordering = ordering
        if ordering.kind == "shuffled":
            order = shuffled_order(workbook, int(ordering.seed))  # type: ignore[arg-type]
        else:
            order = review_order(workbook)
        if not order:
            raise NothingToReviewError(
                f"workbook {workbook.name!r} has no formula blocks to review"
            )
        self.order: tuple[FormulaBlock, ...] = tuple(order)
        self._by_id = {b.id: b for b in self.order}
        self.outcomes: list[Outcome] = []
        self.trace: list[TracePoint] = []
        self.status = SessionStatus.IN_PROGRESS
        self.decision_log: list[tuple[int, str]] = []
        self._judged: dict[str, Outcome] = {}
        # After an explicit reopen, the decision kind that caused the stop
        # stays muted until its qualifying tail breaks at least once.
        self._muted_decision: Decision | None = None

    # -- queue ---------------------------------------------------------

    def block(self, block_id: str) -> FormulaBlock:
        try:
            return self._by_id[block_id]
        except KeyError:
            raise UnknownBlockError(f"no block {block_id!r} in this session") from None

    def next_block(self) -> FormulaBlock | None:
        """First unjudged block in order; None when all are judged."""
        for b in self.order:
            if b.id not in self._judged:
                return b
        return None

    def position(self, block_id: str) -> int:
        """1-based position of a block in the review order."""
        for i, b in enumerate(self.order):
            if b.id == block_id:
                return i + 1
        raise UnknownBlockError(f"no block {block_id!r} in this session")

    # -- counts --------------------------------------------------------

    @property
    def judged_count(self) -> int:
        return len(self.outcomes)

    @property
    def defect_count(self) -> int:
        return sum(1 for o in self.outcomes if o.verdict is Verdict.DEFECT)

    @property
    def qualitative_count(self) -> int:
        return sum(1 for o in self.outcomes if o.verdict is Verdict.QUALITATIVE)

    @property
    def remaining_count(self) -> int:
        return len(self.order) - len(self.outcomes)

    # -- recording -----------------------------------------------------

    def record(
        self,
        block_id: str,
        verdict: Verdict | str,
        note: str = "",
        timestamp: str | None = None,
    ) -> TracePoint:
        """Record a verdict, append the trace point, re-evaluate the decision.

        Raises SessionStateError on a stopped session (explicit reopen
        required), UnknownBlockError / DuplicateVerdictError on bad ids.
        """
        if self.status is not SessionStatus.IN_PROGRESS:
            raise SessionStateError(
                f"session is {self.status.value}; reopen it to record further verdicts"
            )
        block = self.block(block_id)
        if block.id in self._judged:
            raise DuplicateVerdictError(f"block {block_id!r} already has a verdict")
        verdict = Verdict(verdict)

        pending = self.next_block()
        if pending is not None and pending.id != block.id:
            self.decision_log.append((len(self.outcomes) + 1, f"out_of_order:{block.id}"))

        outcome = Outcome(
            block_id=block.id,
            verdict=verdict,
            note=note,
            timestamp=timestamp if timestamp is not None else _utc_now_iso(),
        )
        self.outcomes.append(outcome)
        self._judged[block.id] = outcome

        n = len(self.outcomes)
        x = self.defect_count
        posterior = posterior_update(self.prior, TestRecord(n=n, x=x))
        point = TracePoint(
            n=n,
            x=x,
            posterior=posterior,
            mean=beta_mean(posterior),
            q05=beta_quantile(posterior, 0.05),
            q95=beta_quantile(posterior, 0.95),
            reliability=reliability(posterior, self.policy.acceptable_cer),
        )
        self.trace.append(point)

        decision = self._current_rule_decision()
        if decision is not self._muted_decision:
            self._muted_decision = None
        stopped = False
        if self._muted_decision is None:
            if decision is Decision.STOP_ACCEPT:
                self.status = SessionStatus.STOPPED_ACCEPTED
                self.decision_log.append((n, Decision.STOP_ACCEPT.value))
                stopped = True
            elif decision is Decision.RECOMMEND_REDEVELOP:
                self.status = SessionStatus.STOPPED_REJECTED
                self.decision_log.append((n, Decision.RECOMMEND_REDEVELOP.value))
                stopped = True
        if not stopped and n >= len(self.order):
            self.status = SessionStatus.EXHAUSTED
            self.decision_log.append((n, Decision.EXHAUSTED.value))
        return point

    def reopen(self) -> None:
        """Resume a session the stopping rule halted."""
        if self.status is SessionStatus.IN_PROGRESS:
            raise SessionStateError("session is already in progress")
        if self.status is SessionStatus.EXHAUSTED:
            raise SessionStateError("session is exhausted; every block has a verdict")
        self._muted_decision = (
            Decision.STOP_ACCEPT
            if self.status is SessionStatus.STOPPED_ACCEPTED
            else Decision.RECOMMEND_REDEVELOP
        )
        self.status = SessionStatus.IN_PROGRESS
        self.decision_log.append((len(self.outcomes), "reopened"))

    # -- decisions and reports ------------------------------------------

    def _current_rule_decision(self) -> Decision:
        recent = [p.reliability for p in self.trace[-self.policy.consecutive_required :]]
        return decide(len(self.outcomes), len(self.order), recent, self.policy)

    def evaluate_decision(self) -> Decision:
        """Current decision for the session as it stands."""
        if self.status is SessionStatus.STOPPED_ACCEPTED:
            return Decision.STOP_ACCEPT
        if self.status is SessionStatus.STOPPED_REJECTED:
            return Decision.RECOMMEND_REDEVELOP
        if self.status is SessionStatus.EXHAUSTED:
            return Decision.EXHAUSTED
        return self._current_rule_decision()

    def prior_assessment(self, predictive_mass: float = 0.90) -> PriorAssessment:
        """What the prior alone says, before any verdicts."""
        total = len(self.order)
        spec = PredictiveSpec(remaining=total, posterior=self.prior)
        return PriorAssessment(
            mean=beta_mean(self.prior),
            q05=beta_quantile(self.prior, 0.05),
            q95=beta_quantile(self.prior, 0.95),
            reliability=reliability(self.prior, self.policy.acceptable_cer),
            total_blocks=total,
            predictive_argmax=beta_binomial_argmax(spec),
            predictive_interval=beta_binomial_interval(spec, predictive_mass),
            predictive_mass=predictive_mass,
        )

    def trace_report(self, predictive_mass: float = 0.90) -> TraceReport:
        """Trace plus the predictive summary for the unjudged remainder."""
        posterior = self.trace[-1].posterior if self.trace else self.prior
        remaining = self.remaining_count
        spec = PredictiveSpec(remaining=remaining, posterior=posterior)
        decision = self.evaluate_decision()
        return TraceReport(
            points=tuple(self.trace),
            status=self.status,
            decision=decision,
            decision_log=tuple(self.decision_log),
            remaining_blocks=remaining,
            predictive_argmax=beta_binomial_argmax(spec),
            predictive_interval=beta_binomial_interval(spec, predictive_mass),
            predictive_mass=predictive_mass,
            advisory=self._advisory(decision),
        )

    def _advisory(self, decision: Decision) -> str:
        if decision is Decision.STOP_ACCEPT:
            return (
                "stop: reliability has held at or above target; the acceptable "
                "error rate is met with the required confidence"
            )
        if decision is Decision.RECOMMEND_REDEVELOP:
            return (
                "redevelop: reliability has held at or below the floor; "
                "further testing or redevelopment is advised"
            )
        if decision is Decision.EXHAUSTED:
            final = self.trace[-1].reliability if self.trace else 0.0
            if final >= self.policy.target_reliability:
                return "fully reviewed: reliability meets the target"
            return (
                f"fully reviewed: final reliability {final:.1%} is below target; "
                "further testing or redevelopment is advised"
            )
        return "continue testing"


def new_session(
    workbook: Workbook,
    prior: BetaParams,
    policy: ReviewPolicy | None = None,
    ordering: Ordering | None = None,
) -> ReviewSession:
    """Create a session over a workbook's formula blocks."""
    return ReviewSession(
        workbook=workbook,
        prior=prior,
        policy=policy if policy is not None else ReviewPolicy(),
        ordering=ordering if ordering is not None else Ordering.sequential(),
    )


def replay(
    workbook: Workbook,
    prior: BetaParams,
    policy: ReviewPolicy,
    ordering: Ordering,
    outcomes: Iterable[Outcome],
) -> ReviewSession:
    """Rebuild a session from its outcome log.

    Stops encountered mid-log are reopened automatically (the log itself
    proves the auditor reopened and continued), so the rebuilt trace is
    bit-identical to the live session's.
    """
    session = ReviewSession(workbook, prior, policy, ordering)
    for outcome in outcomes:
        if session.status in (SessionStatus.STOPPED_ACCEPTED, SessionStatus.STOPPED_REJECTED):
            session.reopen()
        session.record(
            outcome.block_id,
            outcome.verdict,
            note=outcome.note,
            timestamp=outcome.timestamp,
        )
    return session
