"""End-to-end pipeline: blueprint -> modeling -> configuration -> analytics
-> export, with per-stage timing and a machine-readable report."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import datapoints as dp
from . import export as ex
from . import netconfig as nc
from . import planning as pl
from . import topology
from .blueprint import parse_blueprint
from .errors import GridWeaverError
from .grid_io import parse_grid
from .model import MODEL_FORMAT, InfraModel, ModelMeta

STAGES = ("parse", "modeling", "netconfig", "datapoints", "whitelist", "planning")
STAGE_CHOICES = ("modeling", "configuration", "planning", "full")


@dataclass
class StageRecord:
    name: str
    millis: float
    nodes: int
    edges: int


@dataclass
class PipelineReport:
    stages: list[StageRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    ok: bool = True
    failed_stage: str | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "stages": [
                {"name": s.name, "millis": round(s.millis, 3), "nodes": s.nodes, "edges": s.edges}
                for s in self.stages
            ],
            "warnings": list(self.warnings),
            "outputs": list(self.outputs),
        }


def _stage_limit(stage: str) -> int:
    mapping = {
        "modeling": STAGES.index("modeling"),
        "configuration": STAGES.index("whitelist"),
        "planning": STAGES.index("planning"),
        "full": STAGES.index("planning"),
    }
    if stage not in mapping:
        raise GridWeaverError(f"unknown stage '{stage}' (choices: {STAGE_CHOICES})")
    return mapping[stage]


def run_pipeline(
    grid_text: str,
    blueprint_text: str,
    stage: str = "full",
    paradigm: str | None = None,
    route_metric: str | None = None,
) -> tuple[InfraModel, PipelineReport]:
    """Execute the pipeline up to `stage`.

    On a stage failure the partial report (stages completed so far, the
    failing stage and its error) is attached to the re-raised error as
    ``partial_report``."""
    limit = _stage_limit(stage)
    report = PipelineReport()
    current = "parse"

    try:
        t0 = time.perf_counter()
        grid = parse_grid(grid_text)
        bp = parse_blueprint(blueprint_text)
        report.stages.append(
            StageRecord("parse", (time.perf_counter() - t0) * 1000.0, 0, 0)
        )
        metric = route_metric or str(bp.setting("route_metric", "latency"))

        current = "modeling"
        t0 = time.perf_counter()
        graph, stations, notes = topology.build_topology(grid, bp, paradigm=paradigm)
        report.warnings.extend(notes)
        report.stages.append(
            StageRecord("modeling", (time.perf_counter() - t0) * 1000.0, len(graph.nodes), len(graph.edges))
        )
        model = InfraModel(
            meta=ModelMeta(
                format_version=MODEL_FORMAT,
                grid_fingerprint=ex.fingerprint_text(grid_text),
                blueprint_fingerprint=ex.fingerprint_text(blueprint_text),
                wan_paradigm=paradigm or bp.wan_paradigm,
                route_metric=metric,
                protocols=bp.protocol_specs,
                settings=dict(bp.settings),
            ),
            graph=graph,
            stations=stations,
        )

        if limit >= STAGES.index("netconfig"):
            current = "netconfig"
            t0 = time.perf_counter()
            graph, netcfg = nc.configure_network(graph, bp, metric)
            model.graph = graph
            model.netcfg = netcfg
            report.stages.append(
                StageRecord("netconfig", (time.perf_counter() - t0) * 1000.0, len(graph.nodes), len(graph.edges))
            )

            current = "datapoints"
            t0 = time.perf_counter()
            model.datapoints = dp.configure_datapoints(graph, stations, bp)
            report.stages.append(
                StageRecord("datapoints", (time.perf_counter() - t0) * 1000.0, len(graph.nodes), len(graph.edges))
            )

            current = "whitelist"
            t0 = time.perf_counter()
            model.whitelist = nc.derive_whitelist(graph, netcfg.interfaces, model.datapoints)
            report.stages.append(
                StageRecord("whitelist", (time.perf_counter() - t0) * 1000.0, len(graph.nodes), len(graph.edges))
            )

        if limit >= STAGES.index("planning"):
            current = "planning"
            t0 = time.perf_counter()
            model.planning = pl.analyze(
                graph, stations, model.datapoints, model.netcfg.paths, bp, metric
            )
            report.stages.append(
                StageRecord("planning", (time.perf_counter() - t0) * 1000.0, len(graph.nodes), len(graph.edges))
            )

        return model, report
    except GridWeaverError as exc:
        report.ok = False
        report.failed_stage = current
        report.error = str(exc)
        exc.partial_report = report
        raise


def write_outputs(
    model: InfraModel,
    report: PipelineReport,
    out_dir: str | Path,
    graph_formats: tuple[str, ...] = ("dot", "graphml"),
) -> list[str]:
    """Write every artifact the model's completed stages support; the report
    itself goes last so it can list all produced files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    def emit(name: str, content: str):
        path = out / name
        path.write_text(content)
        written.append(str(path))

    for fmt in graph_formats:
        emit(f"graph.{fmt}", ex.export_graph(model.graph, fmt))
    if model.netcfg is not None and model.datapoints is not None:
        emit("netconfig.yaml", ex.export_network_config(model))
    if model.whitelist is not None:
        emit("whitelist.csv", ex.export_whitelist(model.whitelist, "tabular"))
        emit("whitelist.rules", ex.export_whitelist(model.whitelist, "rule-text"))
    if model.planning is not None:
        emit("planning.yaml", yaml.safe_dump(_planning_dict(model), sort_keys=False))
    emit("model.yaml", ex.save_model(model))

    report.outputs = list(written)
    report_path = out / "report.yaml"
    report_path.write_text(yaml.safe_dump(report.to_dict(), sort_keys=False))
    return written


def _planning_dict(model: InfraModel) -> dict:
    plan = model.planning
    return {
        "flows": [
            {
                "connection": f.connection,
                "bytes_per_cycle": f.bytes_per_cycle,
                "mean_bps": round(f.mean_bps, 3),
                "burst_bps": round(f.burst_bps, 3),
            }
            for f in plan.flows
        ],
        "link_loads": [
            {
                "link": l.link,
                "mean_bps": round(l.mean_bps, 3),
                "burst_bps": round(l.burst_bps, 3),
                "utilization": round(l.utilization, 9),
            }
            for l in plan.loads
        ],
        "violations": [
            {"link": v.link, "burst_bps": round(v.burst_bps, 3), "bandwidth_bps": v.bandwidth_bps}
            for v in plan.violations
        ],
        "proposals": [
            {
                "candidate": p.candidate,
                "stations": list(p.stations),
                "distance_km": round(p.distance_km, 6),
                "relieves": p.relieves,
                "burst_reduction_bps": round(p.burst_reduction_bps, 3),
            }
            for p in plan.proposals
        ],
        "notes": list(plan.notes),
    }


def report_text(report: PipelineReport) -> str:
    lines = [f"{'stage':<12} {'time_ms':>9} {'nodes':>7} {'edges':>7}"]
    for s in report.stages:
        lines.append(f"{s.name:<12} {s.millis:>9.2f} {s.nodes:>7} {s.edges:>7}")
    if report.warnings:
        lines.append("warnings:")
        lines.extend(f"  - {w}" for w in report.warnings)
    if report.outputs:
        lines.append("outputs:")
        lines.extend(f"  - {o}" for o in report.outputs)
    if not report.ok:
        lines.append(f"FAILED at stage {report.failed_stage}: {report.error}")
    return "\n".join(lines)


def benchmark(
    inputs: list[tuple[str, str, str]], repetitions: int = 10
) -> list[dict]:
    """Wall-time statistics for the full pipeline.

    `inputs` are (label, grid text, blueprint text) triples; each is run
    `repetitions` times and reported with mean/std in milliseconds plus the
    resulting model size."""
    rows = []
    for label, grid_text, blueprint_text in inputs:
        times = []
        nodes = edges = 0
        for _ in range(repetitions):
            t0 = time.perf_counter()
            model, _report = run_pipeline(grid_text, blueprint_text, stage="full")
            times.append((time.perf_counter() - t0) * 1000.0)
            nodes, edges = len(model.graph.nodes), len(model.graph.edges)
        rows.append(
            {
                "model": label,
                "repetitions": repetitions,
                "mean_ms": round(statistics.fmean(times), 3),
                "std_ms": round(statistics.pstdev(times), 3),
                "nodes": nodes,
                "edges": edges,
            }
        )
    return rows
