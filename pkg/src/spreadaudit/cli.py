"""Command-line interface.

Subcommands: analyze (workbook structure and block preview), elicit (turn
expert knowledge into beta parameters), review (interactive block-by-block
audit loop), report (trace export plus decision narrative), simulate
(Monte Carlo operating characteristics of a stopping policy), and serve
(run the HTTP session service).

Exit codes: 0 success, 1 runtime failure, 2 invalid invocation. Settings
precedence: flags override the SPREADAUDIT_DATA_DIR environment variable,
which overrides built-in defaults.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .blocks import review_order
from .engine import (
    Ordering,
    ReviewPolicy,
    ReviewSession,
    SessionStatus,
    Verdict,
    new_session,
)
from .sessionfile import (
    SessionFileError,
    format_trace_csv,
    load_session,
    save_session,
)
from .simulate import simulate_policy
from .stats import (
    BetaParams,
    InfeasiblePriorError,
    beta_mean,
    beta_quantile,
    beta_variance,
    elicit_prior,
    elicit_prior_from_sd,
    elicit_prior_pseudocounts,
    reliability,
)
from .workbook import WorkbookError, load_workbook, workbook_from_csv

DATA_DIR_ENV = "SPREADAUDIT_DATA_DIR"
DEFAULT_BIND = "127.0.0.1:8033"

_VERDICT_KEYS = {
    "c": Verdict.CORRECT,
    "correct": Verdict.CORRECT,
    "d": Verdict.DEFECT,
    "defect": Verdict.DEFECT,
    "q": Verdict.QUALITATIVE,
    "qualitative": Verdict.QUALITATIVE,
}


def _load_workbook_path(path: Path):
    try:
        if path.suffix.lower() == ".csv":
            return workbook_from_csv(path.stem, [(path.stem, path.read_text("utf-8"))])
        return load_workbook(path.read_bytes())
    except OSError as exc:
        raise click.ClickException(f"cannot read {path}: {exc}") from exc
    except WorkbookError as exc:
        raise click.ClickException(str(exc)) from exc


def _prior_from_flags(
    alpha: float | None,
    beta: float | None,
    mean: float | None,
    variance: float | None,
    sd: float | None,
    errors: float | None,
    cells: float | None,
) -> BetaParams | None:
    given = {
        "alpha/beta": alpha is not None or beta is not None,
        "mean/variance": variance is not None,
        "mean/sd": sd is not None,
        "errors/cells": errors is not None or cells is not None,
    }
    forms = [name for name, used in given.items() if used]
    if len(forms) > 1:
        raise click.UsageError(f"give one prior form, not {' and '.join(forms)}")
    try:
        if alpha is not None or beta is not None:
            if alpha is None or beta is None:
                raise click.UsageError("--alpha and --beta go together")
            return BetaParams(alpha, beta)
        if variance is not None or sd is not None:
            if mean is None:
                raise click.UsageError("--variance/--sd need --mean")
            return elicit_prior(mean, variance) if variance is not None else elicit_prior_from_sd(mean, sd)
        if errors is not None or cells is not None:
            if errors is None or cells is None:
                raise click.UsageError("--errors and --cells go together")
            return elicit_prior_pseudocounts(errors, cells)
        if mean is not None:
            raise click.UsageError("--mean needs --variance or --sd")
    except InfeasiblePriorError as exc:
        raise click.UsageError(str(exc)) from exc
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    return None


def _policy_from_flags(acceptable, target, floor, min_blocks, consecutive) -> ReviewPolicy:
    try:
        return ReviewPolicy(
            acceptable_cer=acceptable,
            target_reliability=target,
            floor_reliability=floor,
            min_blocks=min_blocks,
            consecutive_required=consecutive,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def _ordering_from_flag(order: str) -> Ordering:
    if order == "sequential":
        return Ordering.sequential()
    if order.startswith("shuffled:"):
        try:
            return Ordering.shuffled(int(order.split(":", 1)[1]))
        except ValueError as exc:
            raise click.UsageError(f"bad shuffle seed in {order!r}") from exc
    raise click.UsageError("--order must be sequential or shuffled:SEED")


def _policy_options(f):
    f = click.option("--consecutive", default=5, show_default=True, help="Consecutive qualifying points required to stop.")(f)
    f = click.option("--min-blocks", default=20, show_default=True, help="Minimum blocks before any stop decision.")(f)
    f = click.option("--floor", default=0.05, show_default=True, help="Reliability floor; sustained at or below recommends redevelopment.")(f)
    f = click.option("--target", default=0.95, show_default=True, help="Reliability target for stop-accept.")(f)
    f = click.option("--acceptable", default=0.05, show_default=True, help="Acceptable cell error rate.")(f)
    return f


def _prior_options(f):
    f = click.option("--cells", type=float, default=None, help="Cells' worth of prior experience.")(f)
    f = click.option("--errors", type=float, default=None, help="Errors seen in that experience.")(f)
    f = click.option("--sd", type=float, default=None, help="Prior standard deviation (with --mean).")(f)
    f = click.option("--variance", type=float, default=None, help="Prior variance (with --mean).")(f)
    f = click.option("--mean", type=float, default=None, help="Prior mean error rate.")(f)
    f = click.option("--beta", type=float, default=None, help="Beta parameter (correct pseudo-count).")(f)
    f = click.option("--alpha", type=float, default=None, help="Alpha parameter (error pseudo-count).")(f)
    return f


@click.group()
@click.version_option(package_name="spreadaudit")
def main() -> None:
    """Estimate a workbook's cell error rate during block-by-block review."""


@main.command()
@click.argument("workbook_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def analyze(workbook_path: Path, as_json: bool) -> None:
    """Summarize a workbook: cells, formulas, unique blocks, review order."""
    wb = _load_workbook_path(workbook_path)
    order = review_order(wb)
    largest = max((b.size for b in order), default=0)
    summary = {
        "workbook": wb.name,
        "sheets": len(wb.sheets),
        "cells": wb.cell_count,
        "formula_cells": wb.formula_count,
        "unparseable_formulas": wb.unparseable_count,
        "unique_blocks": len(order),
        "largest_block": largest,
        "review_order_preview": [b.id for b in order[:10]],
    }
    if as_json:
        click.echo(json.dumps(summary, indent=2))
        return
    click.echo(f"workbook      {summary['workbook']}")
    click.echo(f"sheets        {summary['sheets']}")
    click.echo(f"cells         {summary['cells']}")
    click.echo(f"formula cells {summary['formula_cells']}")
    if summary["unparseable_formulas"]:
        click.echo(f"unparseable   {summary['unparseable_formulas']} (flagged for manual review)")
    click.echo(f"unique blocks {summary['unique_blocks']}")
    click.echo(f"largest block {summary['largest_block']} cells")
    if order:
        click.echo("review order  " + ", ".join(summary["review_order_preview"])
                   + (" ..." if len(order) > 10 else ""))


@main.command()
@_prior_options
@click.option("--acceptable", default=0.05, show_default=True, help="Acceptable cell error rate for the reliability readout.")
@click.option("--json", "as_json", is_flag=True)
def elicit(alpha, beta, mean, variance, sd, errors, cells, acceptable, as_json) -> None:
    """Turn expert knowledge into beta prior parameters."""
    prior = _prior_from_flags(alpha, beta, mean, variance, sd, errors, cells)
    if prior is None:
        raise click.UsageError(
            "give a prior as --alpha/--beta, --mean/--variance, --mean/--sd, "
            "or --errors/--cells"
        )
    out = {
        "alpha": prior.alpha,
        "beta": prior.beta,
        "mean": beta_mean(prior),
        "variance": beta_variance(prior),
        "q05": beta_quantile(prior, 0.05),
        "q95": beta_quantile(prior, 0.95),
        "acceptable_cer": acceptable,
        "reliability": reliability(prior, acceptable),
    }
    if as_json:
        click.echo(json.dumps(out, indent=2))
        return
    click.echo(f"prior beta(alpha={prior.alpha:g}, beta={prior.beta:g})")
    click.echo(f"mean {out['mean']:.6g}   variance {out['variance']:.6g}")
    click.echo(f"90% band [{out['q05']:.6g}, {out['q95']:.6g}]")
    click.echo(
        f"reliability at acceptable rate {acceptable:g}: {out['reliability']:.4f}"
    )


def _print_block(session: ReviewSession, block) -> None:
    pos = session.position(block.id)
    click.echo(f"\nblock {pos} of {len(session.order)}: {block.id}")
    click.echo(f"  members  {', '.join(m.a1 for m in block.members)}")
    click.echo(f"  formula  {block.source}")
    if block.relative is not None:
        click.echo(f"  relative {block.relative.canonical}")
    if block.flagged:
        click.echo("  [!] formula did not parse; judge manually")


def _print_point(session: ReviewSession) -> None:
    p = session.trace[-1]
    click.echo(
        f"  n={p.n} x={p.x} mean={p.mean:.6g} "
        f"band=[{p.q05:.6g}, {p.q95:.6g}] reliability={p.reliability:.4f}"
    )


@main.command()
@click.argument("workbook_path", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_prior_options
@_policy_options
@click.option("--order", default="sequential", show_default=True, help="sequential or shuffled:SEED")
@click.option("--session", "session_path", type=click.Path(path_type=Path), default=None, help="Session file to write (default: <workbook>.session.json).")
@click.option("--resume", "resume_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="Resume a saved session.")
def review(workbook_path, alpha, beta, mean, variance, sd, errors, cells,
           acceptable, target, floor, min_blocks, consecutive,
           order, session_path, resume_path) -> None:
    """Interactive review loop: read verdicts, update the trace, persist.

    Verdicts on stdin, one per line: c(orrect), d(efect), q(ualitative),
    each optionally followed by a note; 'stop' saves and exits; 'reopen'
    resumes after a stop decision.
    """
    if resume_path is not None:
        try:
            session = load_session(resume_path)
        except (SessionFileError, WorkbookError) as exc:
            raise click.ClickException(str(exc)) from exc
        session_path = resume_path
        workbook_ref = None  # keep whatever reference style the file used
        raw = json.loads(Path(resume_path).read_text("utf-8"))
        if isinstance(raw.get("workbook"), str):
            workbook_ref = raw["workbook"]
    else:
        if workbook_path is None:
            raise click.UsageError("give a workbook path or --resume SESSION")
        prior = _prior_from_flags(alpha, beta, mean, variance, sd, errors, cells)
        if prior is None:
            raise click.UsageError("a new session needs a prior (try --errors/--cells)")
        policy = _policy_from_flags(acceptable, target, floor, min_blocks, consecutive)
        wb = _load_workbook_path(workbook_path)
        try:
            session = new_session(wb, prior, policy, _ordering_from_flag(order))
        except Exception as exc:
            raise click.ClickException(str(exc)) from exc
        session_path = session_path or workbook_path.with_suffix(".session.json")
        workbook_ref = None

    assessment = session.prior_assessment()
    click.echo(
        f"prior beta({session.prior.alpha:g}, {session.prior.beta:g}); "
        f"mean {assessment.mean:.6g}; reliability {assessment.reliability:.4f} "
        f"at acceptable rate {session.policy.acceptable_cer:g}"
    )
    click.echo(
        f"{len(session.order)} blocks to review; "
        f"{session.judged_count} already judged; session file {session_path}"
    )

    while True:
        if session.status is SessionStatus.IN_PROGRESS:
            block = session.next_block()
            if block is None:  # defensive; record() flips to exhausted
                break
            _print_block(session, block)
            prompt = "verdict [c/d/q, note after a space; stop]"
        else:
            click.echo(f"\nsession is {session.status.value}: {session.trace_report().advisory}")
            if session.status is SessionStatus.EXHAUSTED:
                break
            prompt = "type 'reopen' to continue or 'stop' to exit"
        line = sys.stdin.readline()
        if not line:  # EOF: save and leave
            break
        line = line.strip()
        if not line:
            continue
        head, _, tail = line.partition(" ")
        head = head.lower()
        if head == "stop":
            break
        if head == "reopen":
            if session.status is SessionStatus.IN_PROGRESS:
                click.echo("session is already in progress")
            else:
                session.reopen()
                save_session(session, session_path, workbook_ref=workbook_ref)
            continue
        verdict = _VERDICT_KEYS.get(head)
        if verdict is None:
            click.echo(f"  ({prompt})")
            continue
        if session.status is not SessionStatus.IN_PROGRESS:
            click.echo("session is stopped; type 'reopen' first")
            continue
        session.record(session.next_block().id, verdict, note=tail.strip())
        save_session(session, session_path, workbook_ref=workbook_ref)
        _print_point(session)
        if session.status is not SessionStatus.IN_PROGRESS:
            click.echo(f"  decision: {session.evaluate_decision().value}")

    save_session(session, session_path, workbook_ref=workbook_ref)
    report = session.trace_report()
    click.echo(
        f"\nsaved {session_path}; status {session.status.value}; "
        f"{session.judged_count}/{len(session.order)} blocks judged"
    )
    click.echo(f"advisory: {report.advisory}")


@main.command()
@click.argument("session_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--acceptable", type=float, default=None, help="Recompute the reliability column at this rate (log untouched).")
@click.option("--output", "-o", type=click.Path(path_type=Path), default=None, help="Write to a file instead of stdout.")
def report(session_file: Path, fmt: str, acceptable: float | None, output: Path | None) -> None:
    """Export the trace (the plotting data) plus a decision narrative."""
    from dataclasses import replace as dc_replace

    try:
        session = load_session(session_file)
    except (SessionFileError, WorkbookError) as exc:
        raise click.ClickException(str(exc)) from exc
    rep = session.trace_report()
    points = list(rep.points)
    if acceptable is not None:
        if not 0.0 < acceptable <= 1.0:
            raise click.UsageError("--acceptable must lie in (0, 1]")
        points = [
            dc_replace(p, reliability=reliability(p.posterior, acceptable))
            for p in points
        ]
    if fmt == "csv":
        payload = format_trace_csv(points)
    else:
        payload = json.dumps(
            {
                "status": rep.status.value,
                "decision": rep.decision.value,
                "decision_log": [list(e) for e in rep.decision_log],
                "acceptable_cer": acceptable
                if acceptable is not None
                else session.policy.acceptable_cer,
                "points": [
                    {
                        "n": p.n,
                        "x": p.x,
                        "alpha": p.posterior.alpha,
                        "beta": p.posterior.beta,
                        "mean": p.mean,
                        "q05": p.q05,
                        "q95": p.q95,
                        "reliability": p.reliability,
                    }
                    for p in points
                ],
                "predictive": {
                    "remaining": rep.remaining_blocks,
                    "argmax": rep.predictive_argmax,
                    "interval": list(rep.predictive_interval),
                    "mass": rep.predictive_mass,
                },
                "advisory": rep.advisory,
            },
            indent=2,
        ) + "\n"
    if output is not None:
        output.write_text(payload, encoding="utf-8")
    else:
        click.echo(payload, nl=False)
    click.echo(
        f"status {rep.status.value}; decision {rep.decision.value}; {rep.advisory}",
        err=True,
    )


@main.command()
@click.option("--theta", type=float, required=True, help="True per-block error rate to simulate.")
@click.option("--blocks", default=500, show_default=True, help="Blocks in the simulated workbook.")
@_prior_options
@_policy_options
@click.option("--trials", default=10000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def simulate(theta, blocks, alpha, beta, mean, variance, sd, errors, cells,
             acceptable, target, floor, min_blocks, consecutive,
             trials, seed, as_json) -> None:
    """Monte Carlo operating characteristics of the stopping policy."""
    prior = _prior_from_flags(alpha, beta, mean, variance, sd, errors, cells)
    if prior is None:
        prior = BetaParams(5, 95)
    policy = _policy_from_flags(acceptable, target, floor, min_blocks, consecutive)
    try:
        result = simulate_policy(theta, blocks, prior, policy, trials, seed)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    if as_json:
        click.echo(json.dumps(result.to_dict(), indent=2))
        return
    click.echo(f"theta={theta:g} blocks={blocks} prior=({prior.alpha:g},{prior.beta:g}) "
               f"trials={trials} seed={seed}")
    click.echo(f"stop-accept rate  {result.stop_accept_rate:.4f}")
    click.echo(f"redevelop rate    {result.redevelop_rate:.4f}")
    click.echo(f"exhausted rate    {result.exhausted_rate:.4f}")
    click.echo(
        f"blocks at stop    mean {result.mean_blocks_at_stop:.1f}  "
        f"p10 {result.blocks_at_stop_p10:.0f}  p50 {result.blocks_at_stop_p50:.0f}  "
        f"p90 {result.blocks_at_stop_p90:.0f}"
    )
    if result.false_accept_rate is not None:
        click.echo(f"false-accept rate {result.false_accept_rate:.4f} (theta above acceptable)")
    if result.false_reject_rate is not None:
        click.echo(f"false-reject rate {result.false_reject_rate:.4f} (theta below acceptable)")


@main.command()
@click.option("--bind", default=DEFAULT_BIND, show_default=True, help="HOST:PORT to listen on.")
@click.option("--data-dir", type=click.Path(path_type=Path), default=None,
              help=f"Session storage directory (or ${DATA_DIR_ENV}).")
def serve(bind: str, data_dir: Path | None) -> None:
    """Run the HTTP session service until interrupted."""
    import os

    import uvicorn

    from .service import create_app

    if data_dir is None:
        env = os.environ.get(DATA_DIR_ENV)
        data_dir = Path(env) if env else Path("./spreadaudit-data")
    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise click.UsageError(f"--bind must look like HOST:PORT, got {bind!r}")
    app = create_app(data_dir)
    try:
        uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    except (OSError, SystemExit) as exc:
        raise click.ClickException(f"server failed to start on {bind}: {exc}") from exc


if __name__ == "__main__":
    main()
