"""Electrical grid model: interchange format parser, validator, serializer.

The interchange document is YAML with top-level sections ``buses``,
``branches``, ``transformers``, ``loads``, ``generators``, ``switches`` and
``external_grid``.  See docs/formats.md for the field-by-field description.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import yaml

from .errors import FormatError, InvariantViolation, UnresolvedReference

GRID_FORMAT = "grid-v1"


@dataclass(frozen=True)
class Bus:
    id: str
    nominal_voltage_kv: float
    coordinates: tuple[float, float] | None = None


@dataclass(frozen=True)
class Branch:
    """A line or cable between two buses."""

    id: str
    from_bus: str
    to_bus: str
    length_km: float
    kind: str = "cable"  # cable | line


@dataclass(frozen=True)
class Transformer:
    id: str
    hv_bus: str
    lv_bus: str
    tap_position: int = 0
    tap_min: int = -9
    tap_max: int = 9


@dataclass(frozen=True)
class Load:
    id: str
    bus: str
    p_mw: float
    q_mvar: float = 0.0


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    p_mw: float


@dataclass(frozen=True)
class Switch:
    """Disconnector on a branch/transformer, or a bus coupler.

    Exactly one of ``branch`` (branch or transformer id) and ``other_bus``
    is set.  An open switch removes the corresponding edge from the
    electrical graph; an open coupler keeps its two buses apart.
    """

    id: str
    bus: str
    branch: str | None = None
    other_bus: str | None = None
    closed: bool = True


@dataclass(frozen=True)
class PowerGridModel:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    transformers: tuple[Transformer, ...]
    loads: tuple[Load, ...]
    generators: tuple[Generator, ...]
    switches: tuple[Switch, ...]
    external_grid_bus: str

    def bus_ids(self) -> set[str]:
        return {b.id for b in self.buses}


@dataclass(frozen=True)
class Finding:
    element: str
    rule: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _load_yaml(text: str) -> dict:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise FormatError(f"not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError("grid document must be a mapping of sections")
    return data


def _str_field(entry: dict, key: str, ctx: str) -> str:
    value = entry.get(key)
    if not isinstance(value, str) or not value:
        raise FormatError(f"{ctx}: field '{key}' must be a non-empty string")
    return value


def _num_field(entry: dict, key: str, ctx: str, default=None):
    value = entry.get(key, default)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise FormatError(f"{ctx}: field '{key}' must be a number")
    return value


def _section(data: dict, name: str) -> list[dict]:
    raw = data.get(name, [])
    if raw is None:
        return []
    if not isinstance(raw, list):
        raise FormatError(f"section '{name}' must be a list")
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise FormatError(f"section '{name}' entry {i} must be a mapping")
    return raw


def parse_grid(text: str) -> PowerGridModel:
    """Parse and validate a grid interchange document.

    Raises FormatError on malformed input, UnresolvedReference on dangling
    element references and InvariantViolation on domain-rule breaches.
    Element order is normalized by ascending id.
    """
    data = _load_yaml(text)

    buses = []
    for entry in _section(data, "buses"):
        bid = _str_field(entry, "id", "bus")
        coords = entry.get("coordinates")
        if coords is not None:
            if (
                not isinstance(coords, (list, tuple))
                or len(coords) != 2
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in coords)
            ):
                raise FormatError(f"bus {bid}: 'coordinates' must be [x, y]")
            coords = (float(coords[0]), float(coords[1]))
        buses.append(
            Bus(
                id=bid,
                nominal_voltage_kv=float(_num_field(entry, "nominal_voltage_kv", f"bus {bid}")),
                coordinates=coords,
            )
        )

    branches = []
    for entry in _section(data, "branches"):
        bid = _str_field(entry, "id", "branch")
        kind = entry.get("kind", "cable")
        if kind not in ("cable", "line"):
            raise FormatError(f"branch {bid}: kind must be 'cable' or 'line'")
        branches.append(
            Branch(
                id=bid,
                from_bus=_str_field(entry, "from_bus", f"branch {bid}"),
                to_bus=_str_field(entry, "to_bus", f"branch {bid}"),
                length_km=float(_num_field(entry, "length_km", f"branch {bid}")),
                kind=kind,
            )
        )

    transformers = []
    for entry in _section(data, "transformers"):
        tid = _str_field(entry, "id", "transformer")
        transformers.append(
            Transformer(
                id=tid,
                hv_bus=_str_field(entry, "hv_bus", f"transformer {tid}"),
                lv_bus=_str_field(entry, "lv_bus", f"transformer {tid}"),
                tap_position=int(_num_field(entry, "tap_position", f"transformer {tid}", 0)),
                tap_min=int(_num_field(entry, "tap_min", f"transformer {tid}", -9)),
                tap_max=int(_num_field(entry, "tap_max", f"transformer {tid}", 9)),
            )
        )

    loads = []
    for entry in _section(data, "loads"):
        lid = _str_field(entry, "id", "load")
        loads.append(
            Load(
                id=lid,
                bus=_str_field(entry, "bus", f"load {lid}"),
                p_mw=float(_num_field(entry, "p_mw", f"load {lid}")),
                q_mvar=float(_num_field(entry, "q_mvar", f"load {lid}", 0.0)),
            )
        )

    generators = []
    for entry in _section(data, "generators"):
        gid = _str_field(entry, "id", "generator")
        generators.append(
            Generator(
                id=gid,
                bus=_str_field(entry, "bus", f"generator {gid}"),
                p_mw=float(_num_field(entry, "p_mw", f"generator {gid}")),
            )
        )

    switches = []
    for entry in _section(data, "switches"):
        sid = _str_field(entry, "id", "switch")
        branch = entry.get("branch")
        other = entry.get("other_bus")
        if (branch is None) == (other is None):
            raise FormatError(f"switch {sid}: exactly one of 'branch'/'other_bus' required")
        closed = entry.get("closed", True)
        if not isinstance(closed, bool):
            raise FormatError(f"switch {sid}: 'closed' must be a boolean")
        switches.append(
            Switch(id=sid, bus=_str_field(entry, "bus", f"switch {sid}"), branch=branch, other_bus=other, closed=closed)
        )

    ext = data.get("external_grid")
    if not isinstance(ext, dict) or not isinstance(ext.get("bus"), str):
        raise FormatError("section 'external_grid' must be a mapping with a 'bus' id")

    model = PowerGridModel(
        buses=tuple(sorted(buses, key=lambda b: b.id)),
        branches=tuple(sorted(branches, key=lambda b: b.id)),
        transformers=tuple(sorted(transformers, key=lambda t: t.id)),
        loads=tuple(sorted(loads, key=lambda l: l.id)),
        generators=tuple(sorted(generators, key=lambda g: g.id)),
        switches=tuple(sorted(switches, key=lambda s: s.id)),
        external_grid_bus=ext["bus"],
    )

    report = validate_grid(model)
    if not report.ok:
        reference = [f for f in report.findings if f.rule in ("dangling-ref", "empty-grid")]
        grouped = reference or list(report.findings)
        message = "; ".join(f.message for f in grouped)
        if reference:
            raise UnresolvedReference(message)
        raise InvariantViolation(message)
    return model


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_grid(model: PowerGridModel) -> ValidationReport:
    """Check all model invariants; findings are data, never raised."""
    findings: list[Finding] = []

    if not model.buses:
        findings.append(Finding("", "empty-grid", "grid has no buses"))

    bus_ids = model.bus_ids()

    def check_duplicates(elements, category):
        seen = set()
        for el in elements:
            if el.id in seen:
                findings.append(
                    Finding(el.id, "duplicate-id", f"duplicate {category} id '{el.id}'")
                )
            seen.add(el.id)

    check_duplicates(model.buses, "bus")
    for cat, elements in (
        ("branch", model.branches),
        ("transformer", model.transformers),
        ("load", model.loads),
        ("generator", model.generators),
        ("switch", model.switches),
    ):
        check_duplicates(elements, cat)

    def check_bus_ref(element_id, key, bus):
        if bus not in bus_ids:
            findings.append(
                Finding(element_id, "dangling-ref", f"{element_id}: {key} references unknown bus '{bus}'")
            )

    for br in model.branches:
        check_bus_ref(br.id, "from_bus", br.from_bus)
        check_bus_ref(br.id, "to_bus", br.to_bus)
    for tr in model.transformers:
        check_bus_ref(tr.id, "hv_bus", tr.hv_bus)
        check_bus_ref(tr.id, "lv_bus", tr.lv_bus)
        if not (tr.tap_min <= tr.tap_position <= tr.tap_max):
            findings.append(
                Finding(
                    tr.id,
                    "tap-range",
                    f"{tr.id}: tap position {tr.tap_position} outside [{tr.tap_min}, {tr.tap_max}]",
                )
            )
    for ld in model.loads:
        check_bus_ref(ld.id, "bus", ld.bus)
    for gen in model.generators:
        check_bus_ref(gen.id, "bus", gen.bus)

    edge_ids = {b.id for b in model.branches} | {t.id for t in model.transformers}
    for sw in model.switches:
        check_bus_ref(sw.id, "bus", sw.bus)
        if sw.branch is not None and sw.branch not in edge_ids:
            findings.append(
                Finding(sw.id, "dangling-ref", f"{sw.id}: branch references unknown element '{sw.branch}'")
            )
        if sw.other_bus is not None:
            check_bus_ref(sw.id, "other_bus", sw.other_bus)

    if model.buses and model.external_grid_bus not in bus_ids:
        findings.append(
            Finding(
                model.external_grid_bus,
                "dangling-ref",
                f"external_grid references unknown bus '{model.external_grid_bus}'",
            )
        )

    for bus in model.buses:
        if bus.nominal_voltage_kv <= 0:
            findings.append(
                Finding(bus.id, "voltage-positive", f"bus {bus.id}: nominal voltage must be > 0")
            )

    return ValidationReport(findings=tuple(findings))


# ---------------------------------------------------------------------------
# serialization and helpers
# ---------------------------------------------------------------------------


def serialize_grid(model: PowerGridModel) -> str:
    """Render the model back into the interchange format (normalized order)."""
    doc: dict = {"format": GRID_FORMAT}
    doc["buses"] = [
        {
            "id": b.id,
            "nominal_voltage_kv": b.nominal_voltage_kv,
            **({"coordinates": [b.coordinates[0], b.coordinates[1]]} if b.coordinates else {}),
        }
        for b in model.buses
    ]
    doc["branches"] = [
        {"id": b.id, "from_bus": b.from_bus, "to_bus": b.to_bus, "length_km": b.length_km, "kind": b.kind}
        for b in model.branches
    ]
    doc["transformers"] = [
        {
            "id": t.id,
            "hv_bus": t.hv_bus,
            "lv_bus": t.lv_bus,
            "tap_position": t.tap_position,
            "tap_min": t.tap_min,
            "tap_max": t.tap_max,
        }
        for t in model.transformers
    ]
    doc["loads"] = [{"id": l.id, "bus": l.bus, "p_mw": l.p_mw, "q_mvar": l.q_mvar} for l in model.loads]
    doc["generators"] = [{"id": g.id, "bus": g.bus, "p_mw": g.p_mw} for g in model.generators]
    doc["switches"] = [
        {
            "id": s.id,
            "bus": s.bus,
            **({"branch": s.branch} if s.branch is not None else {"other_bus": s.other_bus}),
            "closed": s.closed,
        }
        for s in model.switches
    ]
    doc["external_grid"] = {"bus": model.external_grid_bus}
    return yaml.safe_dump(doc, sort_keys=False)


def closed_electrical_edges(model: PowerGridModel) -> list[tuple[str, str, str]]:
    """(element id, bus a, bus b) for each branch/transformer not opened by a switch."""
    open_on = {s.branch for s in model.switches if s.branch is not None and not s.closed}
    edges = []
    for br in model.branches:
        if br.id not in open_on:
            edges.append((br.id, br.from_bus, br.to_bus))
    for tr in model.transformers:
        if tr.id not in open_on:
            edges.append((tr.id, tr.hv_bus, tr.lv_bus))
    return edges


def ensure_coordinates(model: PowerGridModel) -> PowerGridModel:
    """Fill in missing bus coordinates with a deterministic BFS layering.

    Layers spread outward from the external-grid bus with unit spacing; buses
    unreachable over branches/transformers are appended in extra layers.  The
    layout ignores switch states so that switching does not move stations.
    """
    if all(b.coordinates is not None for b in model.buses):
        return model

    adjacency: dict[str, set[str]] = {b.id: set() for b in model.buses}
    for br in model.branches:
        adjacency[br.from_bus].add(br.to_bus)
        adjacency[br.to_bus].add(br.from_bus)
    for tr in model.transformers:
        adjacency[tr.hv_bus].add(tr.lv_bus)
        adjacency[tr.lv_bus].add(tr.hv_bus)

    layer_of: dict[str, int] = {}
    queue = deque([(model.external_grid_bus, 0)])
    while queue:
        bus, layer = queue.popleft()
        if bus in layer_of:
            continue
        layer_of[bus] = layer
        for nxt in sorted(adjacency[bus]):
            if nxt not in layer_of:
                queue.append((nxt, layer + 1))
    leftover_layer = (max(layer_of.values()) + 1) if layer_of else 0
    for bus in sorted(adjacency):
        if bus not in layer_of:
            layer_of[bus] = leftover_layer
            leftover_layer += 1

    by_layer: dict[int, list[str]] = {}
    for bus, layer in layer_of.items():
        by_layer.setdefault(layer, []).append(bus)

    synthesized: dict[str, tuple[float, float]] = {}
    for layer, members in by_layer.items():
        for pos, bus in enumerate(sorted(members)):
            synthesized[bus] = (float(layer), float(pos))

    buses = tuple(
        b if b.coordinates is not None else replace(b, coordinates=synthesized[b.id])
        for b in model.buses
    )
    return replace(model, buses=buses)
