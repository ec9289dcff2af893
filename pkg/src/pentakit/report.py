"""Report rendering: rich tables for people, a fixed JSON schema for scripts."""

from __future__ import annotations

import json

from rich.console import Console
from rich.table import Table

from .models import FusionRules, ResidualReport

REPORT_KEYS = ("overall", "tolerance", "passed", "worst", "vacuous_count", "tuples_checked", "wall_ms")
WORST_COUNT = 10


def tuple_names(rules: FusionRules, labels: tuple[int, ...]) -> list[str]:
    return [rules.names[i] for i in labels]


def report_dict(report: ResidualReport, rules: FusionRules, count: int = WORST_COUNT) -> dict:
    worst = [
        {"tuple": list(labels), "labels": tuple_names(rules, labels), "residual": residual}
        for labels, residual in report.worst(count)
    ]
    values = {
        "overall": report.overall,
        "tolerance": report.tolerance,
        "passed": report.passed,
        "worst": worst,
        "vacuous_count": report.vacuous_count,
        "tuples_checked": report.tuples_checked,
        "wall_ms": round(report.wall_ms, 3),
    }
    return {key: values[key] for key in REPORT_KEYS}


def report_json(report: ResidualReport, rules: FusionRules) -> str:
    return json.dumps(report_dict(report, rules), indent=2)


def print_report(console: Console, report: ResidualReport, rules: FusionRules, title: str = "") -> None:
    status = "[bold green]PASS[/bold green]" if report.passed else "[bold red]FAIL[/bold red]"
    console.print(f"{status} {title}[dim]({report.form} form)[/dim]")
    console.print(f"  Overall residual: {report.overall:.3e} (tolerance {report.tolerance:.1e})")
    console.print(f"  Tuples checked: {report.tuples_checked}, vacuous: {report.vacuous_count}")
    console.print(f"  Wall time: {report.wall_ms:.1f} ms")

    worst = [item for item in report.worst(WORST_COUNT) if item[1] > 0.0]
    if not worst:
        return
    table = Table(title="Worst tuples", title_justify="left")
    table.add_column("#", justify="right", style="dim")
    table.add_column("labels")
    table.add_column("residual", justify="right")
    for rank, (labels, residual) in enumerate(worst, 1):
        table.add_row(
            str(rank),
            " ".join(tuple_names(rules, labels)),
            f"{residual:.3e}",
            style="red" if residual > report.tolerance else None,
        )
    console.print(table)
