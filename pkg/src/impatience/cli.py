"""Command line interface.

Exit codes: 0 when the property holds or the command succeeded, 1 when a
property is falsified or a verification fails, 2 on malformed input.
Data products go to ``--output`` (or stdout); diagnostics go to stderr
unless the report is the product.
"""

from __future__ import annotations

import contextlib
import io
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import formats
from .aggregate import (
    Profile,
    Weights,
    fit_weights,
    geometric_aggregator,
    geometric_mean,
    run_axiom_suites,
)
from .decompose import decompose, max_relative_error, reconstruct
from .discount import (
    DiscountFactor,
    find_convexity_violation,
    impatience_ratios,
    is_decreasing_impatience,
    is_increasing_impatience,
    is_stationary,
)
from .errors import ImpatienceError, InvalidInput, NoConvergence, PropertyFailure
from .market import (
    METHODS,
    envelope_branches,
    solve_equilibrium,
    synthesize_economy,
    uniqueness_probe,
    verify_equilibrium,
)
from .suites import SUITE_NAMES, run_suites

EXIT_OK, EXIT_FALSIFIED, EXIT_INPUT = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    tol: float
    seed: int
    horizon: Optional[int]
    output: Optional[Path]


def _config(ctx: click.Context) -> RunConfig:
    return ctx.find_root().obj


def _truncate(values: np.ndarray, cfg: RunConfig) -> np.ndarray:
    if cfg.horizon is None:
        return values
    if cfg.horizon + 1 > values.shape[-1]:
        raise InvalidInput(f"--horizon {cfg.horizon} exceeds the input horizon {values.shape[-1] - 1}")
    return values[..., : cfg.horizon + 1]


@contextlib.contextmanager
def _sink(path: Optional[Path]):
    """Yield a text stream writing to ``path`` or stdout."""
    if path is None:
        yield sys.stdout
        return
    buffer = io.StringIO()
    yield buffer
    path.write_text(buffer.getvalue())


def _emit(path: Optional[Path], text: str) -> None:
    with _sink(path) as out:
        out.write(text)


def _note(message: str) -> None:
    click.echo(message, err=True)


def _fmt(values) -> str:
    return ", ".join(formats.format_float(v) for v in values)


class _Group(click.Group):
    """Maps library errors onto the exit-code contract."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except InvalidInput as exc:
            _note(f"error: {exc}")
            ctx.exit(EXIT_INPUT)
        except (PropertyFailure, NoConvergence) as exc:
            _note(f"falsified: {type(exc).__name__}: {exc}")
            ctx.exit(EXIT_FALSIFIED)
        except ImpatienceError as exc:
            _note(f"error: {exc}")
            ctx.exit(EXIT_INPUT)


@click.group(cls=_Group)
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=1e-10, show_default=True,
              help="Numerical tolerance for the command's main check.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for random instance generators.")
@click.option("--horizon", type=click.IntRange(min=2), default=None,
              help="Truncate inputs to t = 0..HORIZON (envelope: horizon of the curves).")
@click.option("--output", type=click.Path(path_type=Path), default=None,
              help="Output file (or directory for market commands); stdout if omitted.")
@click.version_option(package_name="artifact")
@click.pass_context
def cli(ctx, tol, seed, horizon, output):
    """Discount factors with decreasing impatience: checks, decompositions, aggregation and markets."""
    ctx.obj = RunConfig(tol=tol, seed=seed, horizon=horizon, output=output)


@cli.command()
@click.argument("csv_path", type=click.Path(dir_okay=False, path_type=Path))
@click.pass_context
def check(ctx, csv_path):
    """Decide decreasing impatience of a t,value discount factor."""
    cfg = _config(ctx)
    f = DiscountFactor(_truncate(formats.read_sequence(csv_path), cfg))
    di = is_decreasing_impatience(f, cfg.tol)
    lines = [
        f"horizon: {f.horizon}",
        f"ratios: {_fmt(impatience_ratios(f))}",
        f"stationary: {str(is_stationary(f, cfg.tol)).lower()}",
        f"DI: {str(di).lower()}",
        f"increasing impatience: {str(is_increasing_impatience(f, cfg.tol)).lower()}",
    ]
    witness = None if di else find_convexity_violation(f)
    if witness is not None:
        (early, late), lump = witness.bundles(1.0)
        lines += [
            f"witness: t={witness.period} r={formats.format_float(witness.rate)}",
            "lab question (k=1): which do you prefer?",
            f"  A: {formats.format_float(early.amount)} at t={early.date} and "
            f"{formats.format_float(late.amount)} at t={late.date}  (value {formats.format_float(witness.lhs)})",
            f"  B: {formats.format_float(lump.amount)} at t={lump.date}  (value {formats.format_float(witness.rhs)})",
            "  compound-interest convexity requires A to be weakly preferred; this factor prefers B.",
        ]
    _emit(cfg.output, "\n".join(lines) + "\n")
    ctx.exit(EXIT_OK if di else EXIT_FALSIFIED)


@cli.command(name="decompose")
@click.argument("input_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--reconstruct", "rebuild", is_flag=True,
              help="Treat INPUT as a decomposition document and write the factor it encodes.")
@click.option("--h-csv", type=click.Path(dir_okay=False, path_type=Path), help="Also write h as t,value CSV.")
@click.option("--alpha-csv", type=click.Path(dir_okay=False, path_type=Path),
              help="Also write the basis weights as t,value CSV (t = s).")
@click.pass_context
def decompose_cmd(ctx, input_path, rebuild, h_csv, alpha_csv):
    """Factor a DI discount factor into generalized beta-delta components."""
    cfg = _config(ctx)
    if rebuild:
        d = formats.read_decomposition(input_path)
        horizon = d.horizon if cfg.horizon is None else cfg.horizon
        with _sink(cfg.output) as out:
            formats.write_sequence(out, reconstruct(d, horizon).values)
        return
    f = DiscountFactor(_truncate(formats.read_sequence(input_path), cfg))
    d = decompose(f)
    error = max_relative_error(f, d)
    _emit(cfg.output, formats.dumps(formats.decomposition_to_dict(d)))
    if h_csv:
        with open(h_csv, "w") as out:
            formats.write_sequence(out, d.h)
    if alpha_csv:
        with open(alpha_csv, "w") as out:
            formats.write_sequence(out, d.basis.alpha)
    _note(f"components: {len(d.components)}")
    _note(f"max relative reconstruction error: {error:.3e}")
    ctx.exit(EXIT_OK if error <= 1e-9 else EXIT_FALSIFIED)


def _parse_eta(text: Optional[str], m: int) -> Weights:
    if text is None:
        return Weights.uniform(m)
    try:
        eta = [float(x) for x in text.split(",")]
    except ValueError:
        raise InvalidInput(f"--eta must be comma-separated numbers, got {text!r}") from None
    if len(eta) != m:
        raise InvalidInput(f"--eta has {len(eta)} weights for {m} members")
    return Weights(eta)


@cli.command()
@click.argument("profile_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--eta", help="Comma-separated weights, one per member (default uniform).")
@click.option("--check", "run_checks", is_flag=True, help="Run the three axiom suites on this profile.")
@click.option("--fit", "fit_path", type=click.Path(dir_okay=False, path_type=Path),
              help="Least-squares fit of weights to a target t,value factor (diagnostic).")
@click.pass_context
def aggregate(ctx, profile_path, eta, run_checks, fit_path):
    """Geometric mean of a profile of normalized discount factors."""
    cfg = _config(ctx)
    profile = Profile(tuple(_truncate(formats.read_profile(profile_path), cfg)))
    weights = _parse_eta(eta, profile.size)
    with _sink(cfg.output) as out:
        formats.write_sequence(out, geometric_mean(profile, weights).values)
    status = EXIT_OK
    if run_checks:
        report = run_axiom_suites(geometric_aggregator(weights), profile, rel_tol=cfg.tol)
        for axiom, holds in report.as_dict().items():
            _note(f"{axiom}: {'pass' if holds else 'fail'}")
        if not all(report.as_dict().values()):
            status = EXIT_FALSIFIED
    if fit_path:
        target = DiscountFactor(_truncate(formats.read_sequence(fit_path), cfg))
        _note(f"fitted eta: {_fmt(fit_weights(profile, target))}")
    ctx.exit(status)


@cli.group()
def market():
    """Parimutuel economies of exponential discounters."""


def _write_market(cfg: RunConfig, documents: dict, result) -> None:
    """Write JSON documents plus price and allocation CSVs into a directory, or one JSON to stdout."""
    if cfg.output is None:
        click.echo(formats.dumps(documents), nl=False)
        return
    cfg.output.mkdir(parents=True, exist_ok=True)
    for name, doc in documents.items():
        (cfg.output / f"{name}.json").write_text(formats.dumps(doc))
    with open(cfg.output / "prices.csv", "w") as out:
        formats.write_sequence(out, result.prices)
    with open(cfg.output / "allocation.csv", "w") as out:
        formats.write_allocation(out, result.allocation.shares)


@market.command()
@click.argument("csv_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--merge", is_flag=True, help="Merge consecutive agents with equal discount rates.")
@click.pass_context
def synthesize(ctx, csv_path, merge):
    """Build an economy whose equilibrium prices reproduce a DI factor."""
    cfg = _config(ctx)
    f = DiscountFactor(_truncate(formats.read_sequence(csv_path), cfg))
    e, result = synthesize_economy(f, merge=merge)
    report = verify_equilibrium(e, result.prices, result.allocation, cfg.tol)
    _write_market(
        cfg,
        {
            "economy": formats.economy_to_dict(e),
            "result": formats.result_to_dict(result),
            "verification": formats.report_to_dict(report),
        },
        result,
    )
    _note(f"agents: {e.size}")
    _note(f"verification: {'pass' if report.ok else 'fail'}")
    ctx.exit(EXIT_OK if report.ok else EXIT_FALSIFIED)


@market.command()
@click.argument("economy_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--method", type=click.Choice(METHODS), default="envelope", show_default=True)
@click.option("--max-iters", type=click.IntRange(min=1), default=1_000_000, show_default=True)
@click.option("--probe", type=click.IntRange(min=0), default=0,
              help="Also run the uniqueness probe with this many starts.")
@click.pass_context
def solve(ctx, economy_path, method, max_iters, probe):
    """Solve the equilibrium of an economy JSON document."""
    cfg = _config(ctx)
    e = formats.read_economy(economy_path)
    result = solve_equilibrium(e, tol=cfg.tol, max_iters=max_iters, method=method)
    _write_market(cfg, {"result": formats.result_to_dict(result)}, result)
    _note(f"method: {method}")
    _note(f"iterations: {result.iterations}")
    _note(f"residual: {result.residual:.3e}")
    if probe:
        _note(f"uniqueness probe ({probe} starts): {uniqueness_probe(e, probe):.3e}")


@market.command()
@click.argument("economy_path", type=click.Path(dir_okay=False, path_type=Path))
@click.argument("prices_path", type=click.Path(dir_okay=False, path_type=Path))
@click.argument("allocation_path", type=click.Path(dir_okay=False, path_type=Path))
@click.pass_context
def verify(ctx, economy_path, prices_path, allocation_path):
    """Check a candidate equilibrium (prices CSV, allocation CSV)."""
    cfg = _config(ctx)
    e = formats.read_economy(economy_path)
    report = verify_equilibrium(
        e, formats.read_sequence(prices_path), formats.read_allocation(allocation_path), cfg.tol
    )
    lines = [f"verification: {'pass' if report.ok else 'fail'}", f"residual: {report.residual:.3e}"]
    lines += [f"  {v}" for v in report.violations]
    _emit(cfg.output, "\n".join(lines) + "\n")
    ctx.exit(EXIT_OK if report.ok else EXIT_FALSIFIED)


def _parse_pair(text: str) -> tuple[float, float]:
    try:
        alpha, delta = (float(x) for x in text.split(":"))
    except ValueError:
        raise InvalidInput(f"pairs are written ALPHA:DELTA, got {text!r}") from None
    return alpha, delta


@market.command()
@click.option("--pair", "pairs", multiple=True, required=True, help="ALPHA:DELTA, repeatable.")
@click.pass_context
def envelope(ctx, pairs):
    """Upper envelope of scaled exponentials, with one column per branch.

    The leader column gives the 1-based index of the pair attaining the
    envelope (first on ties).
    """
    cfg = _config(ctx)
    horizon = 20 if cfg.horizon is None else cfg.horizon
    branches = envelope_branches([_parse_pair(p) for p in pairs], horizon)
    names = ["price", *(f"agent_{i + 1}" for i in range(len(branches))), "leader"]
    columns = [branches.max(axis=0), *branches, branches.argmax(axis=0) + 1]
    with _sink(cfg.output) as out:
        formats.write_table(out, names, columns)


@cli.command()
@click.option("--sizes", type=click.Choice(["full", "small"]), default="full", show_default=True,
              help="Case counts: 'full' matches the acceptance suite.")
@click.option("--suite", "only", multiple=True, type=click.Choice(SUITE_NAMES), help="Run only these suites.")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker processes across independent cases.")
@click.option("--expect-fail", is_flag=True,
              help="Plant a non-DI factor among the DI cases; succeed only if the suite catches it.")
@click.pass_context
def selftest(ctx, sizes, only, jobs, expect_fail):
    """Run the property suites and report counts and worst residuals."""
    cfg = _config(ctx)
    names = tuple(only) or None
    if expect_fail:
        names = ("convexity",)
    results = run_suites(seed=cfg.seed, sizes=sizes, jobs=jobs, inject_failure=expect_fail, names=names)
    lines = [r.line() for r in results]
    for r in results:
        lines += [f"  {r.name}[{i}]: {note}" for i, note in r.failures[:5]]
    failed = any(not r.passed for r in results)
    if expect_fail:
        lines.append("negative control: " + ("caught" if failed else "MISSED"))
        status = EXIT_OK if failed else EXIT_FALSIFIED
    else:
        status = EXIT_FALSIFIED if failed else EXIT_OK
    _emit(cfg.output, "\n".join(lines) + "\n")
    ctx.exit(status)


def main() -> None:
    cli(prog_name="impatience")


if __name__ == "__main__":
    main()
