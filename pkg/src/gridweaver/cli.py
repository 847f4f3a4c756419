"""Command-line pipeline driver.

Exit codes: 0 success, 1 stage error (parse/model/configure/export), 2 usage
or I/O problems (click's own convention).
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import yaml

from . import export as ex
from . import pipeline
from .errors import GridWeaverError
from .fixtures import FIXTURE_NAMES, fixture_path
from .grid_io import parse_grid, validate_grid
from .blueprint import parse_blueprint
from .netconfig import ROUTE_METRICS
from .pipeline import STAGE_CHOICES

DEFAULT_OUTPUT_ENV = "GRIDWEAVER_OUTPUT_DIR"


class InputDocument(click.ParamType):
    """A path to a document, or the name of a bundled fixture."""

    name = "document"

    def convert(self, value, param, ctx):
        path = Path(value)
        if path.exists():
            return path
        stem = str(value).removesuffix(".yaml")
        if stem in FIXTURE_NAMES:
            return fixture_path(stem)
        self.fail(f"path '{value}' does not exist and is not a bundled fixture", param, ctx)


INPUT = InputDocument()


def _default_output() -> str:
    return os.environ.get(DEFAULT_OUTPUT_ENV, "out")


def _fail(error: Exception) -> None:
    click.echo(f"error: {error}", err=True)
    sys.exit(1)


@click.group()
def main():
    """Generate integrated smart-grid ICT infrastructure models."""


@main.command()
@click.argument("grid", type=INPUT)
@click.argument("blueprint", type=INPUT)
@click.option("-o", "--output-dir", default=_default_output, show_default="out", help="Artifact directory.")
@click.option("--paradigm", type=click.Choice(["fiber", "plc", "mobile"]), default=None, help="Override the blueprint WAN paradigm.")
@click.option("--stage", type=click.Choice(STAGE_CHOICES), default="full", show_default=True, help="Run the pipeline only up to this stage.")
@click.option("--format", "formats", type=click.Choice(["dot", "graphml"]), multiple=True, help="Graph export formats (default: both).")
@click.option("--route-metric", type=click.Choice(ROUTE_METRICS), default=None, help="Override the route weight metric.")
@click.option("--seed", type=int, default=None, help="Reserved; generation is deterministic.")
def generate(grid, blueprint, output_dir, paradigm, stage, formats, route_metric, seed):
    """Run the full pipeline on GRID with BLUEPRINT and write all artifacts."""
    del seed
    grid_text = grid.read_text()
    blueprint_text = blueprint.read_text()
    try:
        model, report = pipeline.run_pipeline(
            grid_text, blueprint_text, stage=stage, paradigm=paradigm, route_metric=route_metric
        )
    except GridWeaverError as exc:
        report = getattr(exc, "partial_report", None)
        if report is not None:
            Path(output_dir).mkdir(parents=True, exist_ok=True)
            (Path(output_dir) / "report.yaml").write_text(
                yaml.safe_dump(report.to_dict(), sort_keys=False)
            )
            click.echo(pipeline.report_text(report), err=True)
        _fail(exc)
        return
    pipeline.write_outputs(model, report, output_dir, formats or ("dot", "graphml"))
    click.echo(pipeline.report_text(report))


@main.command()
@click.argument("grid", type=INPUT)
@click.argument("blueprint", type=INPUT, required=False)
def validate(grid, blueprint):
    """Check a grid document (and optionally a blueprint) without generating."""
    try:
        model = parse_grid(grid.read_text())
    except GridWeaverError as exc:
        _fail(exc)
        return
    report = validate_grid(model)
    for finding in report.findings:
        click.echo(f"{finding.rule}: {finding.message}")
    if blueprint is not None:
        try:
            parse_blueprint(blueprint.read_text())
        except GridWeaverError as exc:
            _fail(exc)
            return
    if not report.ok:
        sys.exit(1)
    click.echo(
        f"ok: {len(model.buses)} buses, {len(model.branches)} branches, "
        f"{len(model.transformers)} transformers"
    )


@main.command()
@click.argument("grid", type=INPUT)
@click.argument("blueprint", type=INPUT)
@click.option("-o", "--output-dir", default=_default_output, show_default="out")
@click.option("--route-metric", type=click.Choice(ROUTE_METRICS), default=None)
def plan(grid, blueprint, output_dir, route_metric):
    """Generate the model and print the network-planning analysis."""
    try:
        model, report = pipeline.run_pipeline(
            grid.read_text(), blueprint.read_text(), stage="planning", route_metric=route_metric
        )
    except GridWeaverError as exc:
        _fail(exc)
        return
    pipeline.write_outputs(model, report, output_dir)
    plan_result = model.planning
    click.echo(f"{'link':<42} {'mean_bps':>12} {'burst_bps':>12} {'util':>9}")
    for load in plan_result.loads:
        click.echo(
            f"{load.link:<42} {load.mean_bps:>12.1f} {load.burst_bps:>12.1f} {load.utilization:>9.6f}"
        )
    if plan_result.violations:
        click.echo("capacity violations:")
        for violation in plan_result.violations:
            click.echo(
                f"  {violation.link}: burst {violation.burst_bps:.0f} bps exceeds "
                f"{violation.threshold:.0%} of {violation.bandwidth_bps:.0f} bps"
            )
        for proposal in plan_result.proposals:
            click.echo(
                f"  proposal: add {proposal.candidate} ({proposal.distance_km:.2f} km), "
                f"relieves {proposal.relieves} by {proposal.burst_reduction_bps:.0f} bps"
            )
        for note in plan_result.notes:
            click.echo(f"  note: {note}")
    else:
        click.echo("no capacity violations")


@main.command(name="export")
@click.argument("model_document", type=click.Path(exists=True, path_type=Path))
@click.option("-o", "--output-dir", default=_default_output, show_default="out")
@click.option(
    "--format",
    "formats",
    type=click.Choice(["dot", "graphml", "netconfig", "whitelist-csv", "whitelist-rules"]),
    multiple=True,
    help="Artifacts to write (default: everything the model supports).",
)
def export_cmd(model_document, output_dir, formats):
    """Re-export artifacts from a saved model document."""
    try:
        model = ex.load_model(model_document.read_text())
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        selected = formats or ("dot", "graphml", "netconfig", "whitelist-csv", "whitelist-rules")
        written = []
        for fmt in selected:
            if fmt in ("dot", "graphml"):
                path = out / f"graph.{fmt}"
                path.write_text(ex.export_graph(model.graph, fmt))
            elif fmt == "netconfig":
                if model.netcfg is None:
                    continue
                path = out / "netconfig.yaml"
                path.write_text(ex.export_network_config(model))
            elif fmt == "whitelist-csv":
                if model.whitelist is None:
                    continue
                path = out / "whitelist.csv"
                path.write_text(ex.export_whitelist(model.whitelist, "tabular"))
            else:
                if model.whitelist is None:
                    continue
                path = out / "whitelist.rules"
                path.write_text(ex.export_whitelist(model.whitelist, "rule-text"))
            written.append(str(path))
    except GridWeaverError as exc:
        _fail(exc)
        return
    for path in written:
        click.echo(path)


@main.command()
@click.argument("grids", type=INPUT, nargs=-1, required=True)
@click.option("--blueprint", type=INPUT, default="blueprint_default", show_default=True)
@click.option("-r", "--repetitions", type=int, default=10, show_default=True)
def benchmark(grids, blueprint, repetitions):
    """Time the full pipeline over the given grids."""
    blueprint_text = blueprint.read_text()
    inputs = [(Path(g).stem, Path(g).read_text(), blueprint_text) for g in grids]
    try:
        rows = pipeline.benchmark(inputs, repetitions)
    except GridWeaverError as exc:
        _fail(exc)
        return
    click.echo(f"{'model':<18} {'reps':>5} {'mean_ms':>10} {'std_ms':>9} {'nodes':>7}")
    for row in rows:
        click.echo(
            f"{row['model']:<18} {row['repetitions']:>5} {row['mean_ms']:>10.2f} "
            f"{row['std_ms']:>9.2f} {row['nodes']:>7}"
        )


if __name__ == "__main__":
    main()
