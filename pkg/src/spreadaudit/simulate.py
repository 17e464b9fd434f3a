"""Monte Carlo operating characteristics of a stopping policy.

Each trial draws block verdicts i.i.d. Bernoulli(true_theta) and runs the
live decision rule until it fires or the blocks run out. Reliability
depends only on the cumulative counts, so values are memoized on (n, x)
across trials; ten thousand trials over hundreds of blocks take seconds.
"""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass

import numpy as np

from .engine import Decision, ReviewPolicy, decide
from .stats import BetaParams, TestRecord, posterior_update, reliability

__all__ = ["PolicySimulation", "simulate_policy"]


@dataclass(frozen=True)
class PolicySimulation:
    """Aggregate outcome rates and stopping-time summaries."""

    true_theta: float
    n_blocks: int
    trials: int
    seed: int
    stop_accept_rate: float
    redevelop_rate: float
    exhausted_rate: float
    mean_blocks_at_stop: float
    blocks_at_stop_p10: float
    blocks_at_stop_p50: float
    blocks_at_stop_p90: float
    false_accept_rate: float | None
    false_reject_rate: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def simulate_policy(
    true_theta: float,
    n_blocks: int,
    prior: BetaParams,
    policy: ReviewPolicy,
    trials: int,
    seed: int,
) -> PolicySimulation:
    """Operating characteristics of ``policy`` at a known error rate.

    false_accept_rate is the stop-accept rate when true_theta exceeds the
    acceptable rate (accepting a bad workbook); false_reject_rate is the
    redevelop rate when true_theta is below it (rejecting a good one).
    Each is None on the side where the notion does not apply.
    """
    if not 0.0 <= true_theta <= 1.0:
        raise ValueError(f"true_theta must lie in [0, 1], got {true_theta!r}")
    if n_blocks < 1:
        raise ValueError(f"n_blocks must be positive, got {n_blocks}")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")

    rng = np.random.default_rng(seed)
    rel_memo: dict[tuple[int, int], float] = {}

    def rel(n: int, x: int) -> float:
        key = (n, x)
        value = rel_memo.get(key)
        if value is None:
            posterior = posterior_update(prior, TestRecord(n=n, x=x))
            value = reliability(posterior, policy.acceptable_cer)
            rel_memo[key] = value
        return value

    counts = {
        Decision.STOP_ACCEPT: 0,
        Decision.RECOMMEND_REDEVELOP: 0,
        Decision.EXHAUSTED: 0,
    }
    blocks_at_stop = np.empty(trials, dtype=np.int64)

    for t in range(trials):
        defects = rng.random(n_blocks) < true_theta
        recent: deque[float] = deque(maxlen=policy.consecutive_required)
        n = 0
        x = 0
        decision = Decision.EXHAUSTED
        for d in defects:
            n += 1
            x += int(d)
            recent.append(rel(n, x))
            decision = decide(n, n_blocks, recent, policy)
            if decision is not Decision.CONTINUE:
                break
        counts[decision] += 1
        blocks_at_stop[t] = n

    accept_rate = counts[Decision.STOP_ACCEPT] / trials
    redevelop_rate = counts[Decision.RECOMMEND_REDEVELOP] / trials
    exhausted_rate = counts[Decision.EXHAUSTED] / trials
    p10, p50, p90 = np.percentile(blocks_at_stop, [10, 50, 90])
    return PolicySimulation(
        true_theta=true_theta,
        n_blocks=n_blocks,
        trials=trials,
        seed=seed,
        stop_accept_rate=accept_rate,
        redevelop_rate=redevelop_rate,
        exhausted_rate=exhausted_rate,
        mean_blocks_at_stop=float(blocks_at_stop.mean()),
        blocks_at_stop_p10=float(p10),
        blocks_at_stop_p50=float(p50),
        blocks_at_stop_p90=float(p90),
        false_accept_rate=accept_rate if true_theta > policy.acceptable_cer else None,
        false_reject_rate=redevelop_rate if true_theta < policy.acceptable_cer else None,
    )
