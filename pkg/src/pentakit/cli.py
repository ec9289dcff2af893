"""CLI interface: check, gen, solve, cocycles, symmetry and convert subcommands."""

from __future__ import annotations

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Iterator

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn
from rich.table import Table

from .builders import fibonacci_solution, pointed_solution, trivial_solution
from .cocycles import MAX_ORDER, enumerate_cocycles
from .documents import dump_cocycles, load_rules, load_solution, load_weights, save_solution
from .errors import (
    ConstructionError,
    DocumentError,
    PentaError,
    RangeError,
    UnsupportedRulesError,
)
from .groups import GroupTable, cocycle_cyclic, cyclic_exponents
from .models import FSolution, FusionRules
from .normalized import (
    WeightSystem,
    check_all_biedenharn_elliott,
    check_all_symmetry,
    normalize,
)
from .pentagon import DEFAULT_TOLERANCE, check_all
from .report import print_report, report_json
from .solver import RESIDUAL_FLOOR, SolveOptions, solve_multiplicity_free
from .tensor import check_all_tensor, to_tensor

console = Console()
err_console = Console(stderr=True)

EXIT_FAIL = 1
EXIT_IO = 3


class DocumentFailure(click.ClickException):
    """Unreadable or invalid input file."""

    exit_code = EXIT_IO


def _load(path: Path) -> tuple[FSolution, WeightSystem | None]:
    try:
        return load_solution(path)
    except DocumentError as exc:
        raise DocumentFailure(f"{path}: {exc}") from None
    except OSError as exc:
        raise DocumentFailure(f"cannot read {path}: {exc.strerror or exc}") from None


def _weights(path: Path | None, rules: FusionRules, fallback: WeightSystem | None) -> WeightSystem | None:
    if path is None:
        return fallback
    try:
        return load_weights(path, rules)
    except DocumentError as exc:
        raise DocumentFailure(f"{path}: {exc}") from None
    except OSError as exc:
        raise DocumentFailure(f"cannot read {path}: {exc.strerror or exc}") from None


def _save(sol: FSolution, path: Path, weights: WeightSystem | None = None, kind: str = "F") -> None:
    try:
        save_solution(sol, path, weights, kind)
    except OSError as exc:
        raise DocumentFailure(f"cannot write {path}: {exc.strerror or exc}") from None


@contextmanager
def _progress(description: str, enabled: bool = True) -> Iterator[Callable[[int, int], None]]:
    """A rich progress bar driven by ``on_progress(done, total)`` callbacks."""
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        console=err_console,
        transient=True,
        disable=not (enabled and err_console.is_terminal),
    ) as progress:
        task = progress.add_task(description, total=None)

        def on_progress(done: int, total: int) -> None:
            progress.update(task, total=total, completed=done)

        yield on_progress


class PentaGroup(click.Group):
    """Reports library errors as one-line messages instead of tracebacks."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (RangeError, UnsupportedRulesError) as exc:
            raise click.UsageError(str(exc)) from None
        except DocumentError as exc:
            raise DocumentFailure(str(exc)) from None
        except PentaError as exc:
            raise click.ClickException(str(exc)) from None


@click.group(cls=PentaGroup)
@click.version_option(package_name="pentakit")
@click.option("--verbose", "-v", is_flag=True, default=False, help="Log solver and sweep details.")
def cli(verbose: bool):
    """Check, convert, build and solve solutions of the pentagon relation."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


@cli.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.option(
    "--form",
    type=click.Choice(["global", "component", "tensor", "be"]),
    default="global",
    show_default=True,
    help="Which form of the relation to evaluate.",
)
@click.option("--tol", type=float, default=DEFAULT_TOLERANCE, show_default=True, help="Pass threshold.")
@click.option(
    "--weights",
    "weights_path",
    type=click.Path(path_type=Path),
    default=None,
    help="Weights file for the normalized (be) form; defaults to the document's weights.",
)
@click.option(
    "--report",
    "report_format",
    type=click.Choice(["text", "json"]),
    default="text",
    show_default=True,
    help="Report format.",
)
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Sweep threads (default: PENTA_THREADS).")
@click.pass_context
def check(
    ctx: click.Context,
    path: Path,
    form: str,
    tol: float,
    weights_path: Path | None,
    report_format: str,
    workers: int | None,
):
    """Evaluate the pentagon relation on every colour tuple of a solution file.

    Exits 0 when the largest residual is within --tol and 1 otherwise.
    """
    sol, doc_weights = _load(path)
    weights = _weights(weights_path, sol.rules, doc_weights)
    if form == "be" and weights is None:
        raise click.UsageError("--form be needs weights (--weights or a weights list in the document)")

    with _progress(f"Checking ({form})...", report_format == "text") as on_progress:
        if form == "tensor":
            report = check_all_tensor(sol, tol, workers, on_progress)
        elif form == "be":
            report = check_all_biedenharn_elliott(normalize(sol, weights), weights, tol, workers, on_progress)
        else:
            report = check_all(sol, tol, form, workers, on_progress)

    if report_format == "json":
        click.echo(report_json(report, sol.rules))
    else:
        print_report(console, report, sol.rules, f"{path} ")
    ctx.exit(0 if report.passed else EXIT_FAIL)


@cli.command()
@click.argument("kind", type=click.Choice(["trivial", "pointed", "fibonacci"]))
@click.option("--n", "order", type=click.IntRange(min=1), default=2, show_default=True, help="Cyclic group order (pointed).")
@click.option("--k", type=int, default=1, show_default=True, help="Cocycle index k mod n (pointed).")
@click.option(
    "--output",
    "-o",
    type=click.Path(path_type=Path),
    required=True,
    help="Path of the solution document to write.",
)
def gen(kind: str, order: int, k: int, output: Path):
    """Write a known solution: trivial, pointed Z/n with cocycle k, or Fibonacci."""
    try:
        if kind == "trivial":
            sol = trivial_solution()
        elif kind == "pointed":
            sol = pointed_solution(GroupTable.cyclic(order), cocycle_cyclic(order, k))
        else:
            with console.status("Solving Fibonacci rules (cached after the first run)..."):
                sol = fibonacci_solution()
    except ConstructionError as exc:
        raise click.ClickException(str(exc)) from None
    _save(sol, output)
    console.print(f"[bold green]Written:[/bold green] {output} ({len(sol)} blocks, {sol.rules.size} colours)")


@cli.command()
@click.argument("rules_path", type=click.Path(path_type=Path))
@click.option("--starts", type=click.IntRange(min=1), default=50, show_default=True, help="Random starts.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the start generator.")
@click.option(
    "--target",
    type=float,
    default=1e-10,
    show_default=True,
    help="Residual target; values below 1e-14 are raised to 1e-14.",
)
@click.option("--max-iterations", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True, help="Starts run in parallel.")
@click.option(
    "--output",
    "-o",
    type=click.Path(path_type=Path),
    required=True,
    help="Path of the solution document to write.",
)
@click.pass_context
def solve(
    ctx: click.Context,
    rules_path: Path,
    starts: int,
    seed: int,
    target: float,
    max_iterations: int,
    workers: int,
    output: Path,
):
    """Search for a solution of multiplicity-free fusion rules and write the best one."""
    try:
        rules = load_rules(rules_path)
    except DocumentError as exc:
        raise DocumentFailure(f"{rules_path}: {exc}") from None
    except OSError as exc:
        raise DocumentFailure(f"cannot read {rules_path}: {exc.strerror or exc}") from None
    if 0 < target < RESIDUAL_FLOOR:
        console.print(f"[yellow]Target {target:.1e} is below {RESIDUAL_FLOOR:.0e}; solving to {RESIDUAL_FLOOR:.0e}.[/yellow]")
        target = RESIDUAL_FLOOR
    try:
        opts = SolveOptions(
            max_iterations=max_iterations,
            residual_target=target,
            starts=starts,
            seed=seed,
            workers=workers,
        )
    except RangeError as exc:
        raise click.BadParameter(str(exc), param_hint="--target") from None

    console.print(f"[bold]Solving[/bold] {rules.size} colours, {starts} starts, target {target:.1e}")
    try:
        with _progress("Random starts...") as on_progress:
            results = solve_multiplicity_free(rules, opts, on_progress, include_failed=True)
    except UnsupportedRulesError as exc:
        raise click.UsageError(str(exc)) from None

    converged = [r for r in results if r.converged]
    if not converged:
        best = results[0] if results else None
        detail = f"best residual {best.residual:.3e} (start {best.start})" if best else "no starts ran"
        console.print(f"[red]No start reached {target:.1e}:[/red] {detail}")
        ctx.exit(EXIT_FAIL)

    table = Table(title=f"{len(converged)} distinct solutions", title_justify="left")
    table.add_column("#", justify="right", style="dim")
    table.add_column("start", justify="right")
    table.add_column("residual", justify="right")
    table.add_column("iterations", justify="right")
    table.add_column("invertible maps", justify="right")
    for rank, result in enumerate(converged, 1):
        table.add_row(
            str(rank),
            str(result.start),
            f"{result.residual:.2e}",
            str(result.iterations),
            f"{result.invertible_total} ({result.invertible_large} of size >= 2)",
        )
    console.print(table)
    _save(converged[0].solution, output)
    console.print(f"[bold green]Written:[/bold green] {output}")


@cli.command()
@click.option("--n", "order", type=click.IntRange(1, MAX_ORDER), required=True, help="Cyclic group order.")
@click.option(
    "--output",
    "-o",
    type=click.Path(path_type=Path),
    default=None,
    help="Also write the class representatives' exponent tables as YAML.",
)
def cocycles(order: int, output: Path | None):
    """List the cohomology classes of 3-cocycles on Z/n and match the cyclic family."""
    found = enumerate_cocycles(order)
    factors = " x ".join(f"Z/{m}" for m in found.invariant_factors) or "trivial"
    console.print(f"[bold]Z/{order}:[/bold] {found.order} classes ({factors})")

    table = Table(title_justify="left")
    table.add_column("k", justify="right")
    table.add_column("class")
    for k in range(order):
        coords = found.class_of(cyclic_exponents(order, k))
        table.add_row(str(k), str(tuple(int(v) for v in coords)))
    console.print(table)

    if output is not None:
        tables = [(coords, found.exponents(coords)) for coords in found.class_coords()]
        try:
            dump_cocycles(order, tables, output)
        except OSError as exc:
            raise DocumentFailure(f"cannot write {output}: {exc.strerror or exc}") from None
        console.print(f"[bold green]Written:[/bold green] {output}")


@cli.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--weights", "weights_path", type=click.Path(path_type=Path), default=None, help="Weights file.")
@click.option("--tol", type=float, default=DEFAULT_TOLERANCE, show_default=True)
@click.option("--report", "report_format", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.pass_context
def symmetry(ctx: click.Context, path: Path, weights_path: Path | None, tol: float, report_format: str):
    """Compare |a b x; c d y|, |b a x; d c y| and |y d a; x b c| for every label tuple.

    Uses the document's weights, or all weights 1 when none are given.
    """
    sol, doc_weights = _load(path)
    weights = _weights(weights_path, sol.rules, doc_weights) or WeightSystem.uniform(sol.rules)
    report = check_all_symmetry(normalize(sol, weights), tol)
    if report_format == "json":
        click.echo(report_json(report, sol.rules))
    else:
        print_report(console, report, sol.rules, f"{path} ")
    ctx.exit(0 if report.passed else EXIT_FAIL)


@cli.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--to", "target", type=click.Choice(["normalized", "tensor"]), required=True)
@click.option("--weights", "weights_path", type=click.Path(path_type=Path), default=None, help="Weights file.")
@click.option(
    "--output",
    "-o",
    type=click.Path(path_type=Path),
    required=True,
    help="Path of the converted document.",
)
def convert(path: Path, target: str, weights_path: Path | None, output: Path):
    """Rewrite a solution as normalized symbols or as 6j-tensor coordinates."""
    sol, doc_weights = _load(path)
    weights = _weights(weights_path, sol.rules, doc_weights)
    if target == "normalized":
        if weights is None:
            raise click.UsageError("--to normalized needs weights (--weights or a weights list in the document)")
        family = normalize(sol, weights)
        blocks = {labels: symbol.coords for labels, symbol in family.symbols.items()}
    else:
        blocks = {block.labels: to_tensor(block).coords for block in sol.blocks()}
    _save(FSolution.from_blocks(sol.rules, blocks), output, weights, kind=target)
    console.print(f"[bold green]Written:[/bold green] {output} ({target})")

