"""Declarative architecture template: station classes, devices, protocols,
link qualities and data-point templates.

A blueprint is a YAML document (see docs/formats.md).  Everything the
generator produces is driven by it: which devices a station receives, how
the WAN is shaped, which protocol/data-point parameters are assigned and
which link qualities apply.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field

import yaml

from .errors import FormatError, InvariantViolation, NoMatchingStationClass, UnresolvedReference

BLUEPRINT_FORMAT = "blueprint-v1"

WAN_PARADIGMS = ("fiber", "mobile", "plc")
ZONES = ("process", "field", "station", "operation")
ZONE_RANK = {zone: i for i, zone in enumerate(ZONES)}
DEVICE_KINDS = (
    "ied_control",
    "ied_measurement",
    "ied_protection",
    "rtu",
    "switch",
    "router",
    "modem",
    "base_station",
    "scada_host",
    "firewall",
)
PLACEMENTS = ("per_transformer", "per_load", "per_generator", "per_switch", "per_feeder", "fixed")
PRIMARY_CATEGORIES = ("bus", "transformer", "load", "generator", "switch")


@dataclass(frozen=True)
class LinkClass:
    name: str
    bandwidth_bps: float
    latency_ms: float
    jitter_ms: float
    loss_rate: float


@dataclass(frozen=True)
class DeviceTemplate:
    name: str
    kind: str
    interfaces: str = "degree"  # "degree" or "fixed:<n>"


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    transport_port: int
    cycle_seconds: float
    payload_bytes_per_point: int
    master_zones: tuple[str, ...]
    slave_zones: tuple[str, ...]


@dataclass(frozen=True)
class DataPointTemplate:
    name: str
    category: str  # "<element>.<attribute>", e.g. "transformer.tap_position"
    direction: str  # monitoring | control
    type_id: str
    cot: str
    size_bytes: int
    protocol: str


@dataclass(frozen=True)
class DevicePlacement:
    template: str
    placement: str


@dataclass(frozen=True)
class StationClass:
    name: str
    priority: int
    match: str
    devices: tuple[DevicePlacement, ...]
    lan_topology: str = "star_switch"
    control_center: bool = False
    places_rtu: bool = True


@dataclass(frozen=True)
class BindingRule:
    """Which data-point templates a device kind picks up from an element kind."""

    device_kind: str
    element_kind: str
    templates: tuple[str, ...]


@dataclass(frozen=True)
class Blueprint:
    wan_paradigm: str
    address_pool: str
    station_classes: tuple[StationClass, ...]  # sorted by (priority, name)
    device_templates: tuple[DeviceTemplate, ...]
    protocol_specs: tuple[ProtocolSpec, ...]
    link_classes: tuple[LinkClass, ...]
    datapoint_templates: tuple[DataPointTemplate, ...]
    bindings: tuple[BindingRule, ...]
    command_type_tokens: tuple[str, ...]
    lan_link_class: str
    wan_link_classes: dict[str, str]  # paradigm -> LinkClass name
    infrastructure: dict[str, str]  # role -> DeviceTemplate name
    settings: dict = field(default_factory=dict)

    def link_class(self, name: str) -> LinkClass | None:
        for lc in self.link_classes:
            if lc.name == name:
                return lc
        return None

    def device_template(self, name: str) -> DeviceTemplate | None:
        for dt in self.device_templates:
            if dt.name == name:
                return dt
        return None

    def datapoint_template(self, name: str) -> DataPointTemplate | None:
        for tpl in self.datapoint_templates:
            if tpl.name == name:
                return tpl
        return None

    def binding_for(self, device_kind: str, element_kind: str) -> tuple[str, ...]:
        for rule in self.bindings:
            if rule.device_kind == device_kind and rule.element_kind == element_kind:
                return rule.templates
        return ()

    def control_center_class(self) -> StationClass:
        return next(sc for sc in self.station_classes if sc.control_center)

    def setting(self, key: str, default):
        return self.settings.get(key, default)


# ---------------------------------------------------------------------------
# match-rule predicate language
# ---------------------------------------------------------------------------
#
#   expr    := term ('or' term)*
#   term    := factor ('and' factor)*
#   factor  := 'not' factor | '(' expr ')' | atom
#   atom    := 'true' | 'false' | 'has(<category>)' | 'hv_connects(external_grid)'

_TOKEN_RE = re.compile(r"\(|\)|[a-z_]+")


@dataclass(frozen=True)
class StationFacts:
    """What a match rule can see about an aggregated station."""

    categories: frozenset[str]
    hv_connects_external: bool


class _RuleParser:
    def __init__(self, rule: str):
        self.tokens = _TOKEN_RE.findall(rule)
        if "".join(self.tokens) != re.sub(r"\s+", "", rule):
            raise FormatError(f"match rule {rule!r}: unexpected characters")
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise FormatError(f"match rule: expected {expected or 'token'}, got {tok!r}")
        self.pos += 1
        return tok

    def parse(self, facts: StationFacts) -> bool:
        value = self._expr(facts)
        if self.peek() is not None:
            raise FormatError(f"match rule: trailing token {self.peek()!r}")
        return value

    def _expr(self, facts):
        value = self._term(facts)
        while self.peek() == "or":
            self.take()
            value = self._term(facts) or value
        return value

    def _term(self, facts):
        value = self._factor(facts)
        while self.peek() == "and":
            self.take()
            value = self._factor(facts) and value
        return value

    def _factor(self, facts):
        tok = self.peek()
        if tok == "not":
            self.take()
            return not self._factor(facts)
        if tok == "(":
            self.take()
            value = self._expr(facts)
            self.take(")")
            return value
        return self._atom(facts)

    def _atom(self, facts):
        tok = self.take()
        if tok == "true":
            return True
        if tok == "false":
            return False
        if tok == "has":
            self.take("(")
            category = self.take()
            self.take(")")
            if category not in PRIMARY_CATEGORIES:
                raise FormatError(f"match rule: unknown category '{category}'")
            return category in facts.categories
        if tok == "hv_connects":
            self.take("(")
            self.take("external_grid")
            self.take(")")
            return facts.hv_connects_external
        raise FormatError(f"match rule: unknown token '{tok}'")


def evaluate_match(rule: str, facts: StationFacts) -> bool:
    return _RuleParser(rule).parse(facts)


def _check_rule_syntax(rule: str) -> None:
    evaluate_match(rule, StationFacts(categories=frozenset(), hv_connects_external=False))


def resolve_station_template(bp: Blueprint, facts: StationFacts) -> StationClass:
    """Pick the highest-priority matching non-control-center station class."""
    if not facts.categories:
        raise InvariantViolation("cannot classify an empty station")
    for sc in bp.station_classes:
        if sc.control_center:
            continue
        if evaluate_match(sc.match, facts):
            return sc
    raise NoMatchingStationClass(
        f"no station class matches a station with {sorted(facts.categories)}"
    )


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _as_list(data: dict, key: str) -> list[dict]:
    raw = data.get(key, [])
    if not isinstance(raw, list) or not all(isinstance(e, dict) for e in raw):
        raise FormatError(f"blueprint section '{key}' must be a list of mappings")
    return raw


def _get(entry: dict, key: str, ctx: str):
    if key not in entry:
        raise FormatError(f"{ctx}: missing field '{key}'")
    return entry[key]


def parse_blueprint(text: str) -> Blueprint:
    """Parse and validate a blueprint document.

    Template lists are sorted so that declaration order never matters;
    station-class precedence comes from the explicit ``priority`` field.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise FormatError(f"not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError("blueprint document must be a mapping")

    paradigm = data.get("wan_paradigm")
    if paradigm not in WAN_PARADIGMS:
        raise FormatError(f"wan_paradigm must be one of {WAN_PARADIGMS}, got {paradigm!r}")

    pool = data.get("address_pool")
    try:
        ipaddress.ip_network(pool)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"address_pool is not a valid network prefix: {pool!r}") from exc

    link_classes = []
    for entry in _as_list(data, "link_classes"):
        name = _get(entry, "name", "link class")
        lc = LinkClass(
            name=name,
            bandwidth_bps=float(_get(entry, "bandwidth_bps", f"link class {name}")),
            latency_ms=float(_get(entry, "latency_ms", f"link class {name}")),
            jitter_ms=float(entry.get("jitter_ms", 0.0)),
            loss_rate=float(entry.get("loss_rate", 0.0)),
        )
        if lc.bandwidth_bps <= 0:
            raise InvariantViolation(f"link class {name}: bandwidth must be > 0")
        if lc.latency_ms < 0 or lc.jitter_ms < 0:
            raise InvariantViolation(f"link class {name}: latency/jitter must be >= 0")
        if not (0.0 <= lc.loss_rate <= 1.0):
            raise InvariantViolation(f"link class {name}: loss_rate must be within [0, 1]")
        link_classes.append(lc)

    device_templates = []
    for entry in _as_list(data, "device_templates"):
        name = _get(entry, "name", "device template")
        kind = _get(entry, "kind", f"device template {name}")
        if kind not in DEVICE_KINDS:
            raise InvariantViolation(f"device template {name}: unknown kind '{kind}'")
        interfaces = entry.get("interfaces", "degree")
        if interfaces != "degree" and not re.fullmatch(r"fixed:\d+", str(interfaces)):
            raise FormatError(f"device template {name}: interfaces must be 'degree' or 'fixed:<n>'")
        device_templates.append(DeviceTemplate(name=name, kind=kind, interfaces=str(interfaces)))
    template_names = {t.name for t in device_templates}

    protocol_specs = []
    for entry in _as_list(data, "protocols"):
        name = _get(entry, "name", "protocol")
        port = int(_get(entry, "transport_port", f"protocol {name}"))
        if not (1 <= port <= 65535):
            raise InvariantViolation(f"protocol {name}: transport_port outside [1, 65535]")
        cycle = float(_get(entry, "cycle_seconds", f"protocol {name}"))
        if cycle <= 0:
            raise InvariantViolation(f"protocol {name}: cycle_seconds must be > 0")
        master_zones = tuple(entry.get("master_zones", []))
        slave_zones = tuple(entry.get("slave_zones", []))
        for zone in (*master_zones, *slave_zones):
            if zone not in ZONES:
                raise FormatError(f"protocol {name}: unknown zone '{zone}'")
        protocol_specs.append(
            ProtocolSpec(
                name=name,
                transport_port=port,
                cycle_seconds=cycle,
                payload_bytes_per_point=int(entry.get("payload_bytes_per_point", 10)),
                master_zones=master_zones,
                slave_zones=slave_zones,
            )
        )
    protocol_names = {p.name for p in protocol_specs}

    command_tokens = tuple(sorted(data.get("command_type_tokens", [])))

    datapoint_templates = []
    for entry in _as_list(data, "datapoint_templates"):
        name = _get(entry, "name", "datapoint template")
        category = _get(entry, "category", f"datapoint template {name}")
        element_kind = category.split(".", 1)[0]
        if "." not in category or element_kind not in PRIMARY_CATEGORIES:
            raise UnresolvedReference(
                f"datapoint template {name}: category '{category}' does not name a primary element attribute"
            )
        direction = _get(entry, "direction", f"datapoint template {name}")
        if direction not in ("monitoring", "control"):
            raise FormatError(f"datapoint template {name}: direction must be monitoring/control")
        type_id = _get(entry, "type_id", f"datapoint template {name}")
        protocol = _get(entry, "protocol", f"datapoint template {name}")
        if protocol not in protocol_names:
            raise UnresolvedReference(f"datapoint template {name}: unknown protocol '{protocol}'")
        is_command = type_id in command_tokens
        if (direction == "control") != is_command:
            raise InvariantViolation(
                f"datapoint template {name}: direction '{direction}' inconsistent with "
                f"type '{type_id}' (command tokens: {list(command_tokens)})"
            )
        datapoint_templates.append(
            DataPointTemplate(
                name=name,
                category=category,
                direction=direction,
                type_id=type_id,
                cot=str(_get(entry, "cot", f"datapoint template {name}")),
                size_bytes=int(_get(entry, "size_bytes", f"datapoint template {name}")),
                protocol=protocol,
            )
        )
    datapoint_names = {t.name for t in datapoint_templates}

    bindings = []
    for entry in _as_list(data, "bindings"):
        device_kind = _get(entry, "device", "binding")
        element_kind = _get(entry, "element", "binding")
        if device_kind not in DEVICE_KINDS:
            raise UnresolvedReference(f"binding: unknown device kind '{device_kind}'")
        if element_kind not in PRIMARY_CATEGORIES:
            raise UnresolvedReference(f"binding: unknown element category '{element_kind}'")
        tpl_names = tuple(_get(entry, "points", f"binding {device_kind}/{element_kind}"))
        for tpl_name in tpl_names:
            if tpl_name not in datapoint_names:
                raise UnresolvedReference(
                    f"binding {device_kind}/{element_kind}: unknown datapoint template '{tpl_name}'"
                )
            tpl = next(t for t in datapoint_templates if t.name == tpl_name)
            if tpl.category.split(".", 1)[0] != element_kind:
                raise InvariantViolation(
                    f"binding {device_kind}/{element_kind}: template '{tpl_name}' targets "
                    f"'{tpl.category}'"
                )
        bindings.append(BindingRule(device_kind=device_kind, element_kind=element_kind, templates=tpl_names))

    station_classes = []
    for entry in _as_list(data, "station_classes"):
        name = _get(entry, "name", "station class")
        devices = []
        for dev in entry.get("devices", []):
            template = _get(dev, "template", f"station class {name} device")
            placement = dev.get("placement", "fixed")
            if template not in template_names:
                raise UnresolvedReference(f"station class {name}: unknown device template '{template}'")
            if placement not in PLACEMENTS:
                raise FormatError(f"station class {name}: unknown placement '{placement}'")
            devices.append(DevicePlacement(template=template, placement=placement))
        match = str(entry.get("match", "false"))
        _check_rule_syntax(match)
        lan_topology = entry.get("lan_topology", "star_switch")
        if lan_topology != "star_switch":
            raise FormatError(f"station class {name}: unsupported lan_topology '{lan_topology}'")
        station_classes.append(
            StationClass(
                name=name,
                priority=int(entry.get("priority", 100)),
                match=match,
                devices=tuple(devices),
                lan_topology=lan_topology,
                control_center=bool(entry.get("control_center", False)),
                places_rtu=bool(entry.get("rtu", True)),
            )
        )

    cc_classes = [sc for sc in station_classes if sc.control_center]
    if len(cc_classes) != 1:
        raise InvariantViolation(
            f"exactly one station class must be marked control_center, found {len(cc_classes)}"
        )
    cc_kinds = {
        next(t for t in device_templates if t.name == dev.template).kind
        for dev in cc_classes[0].devices
    }
    if "scada_host" not in cc_kinds or "router" not in cc_kinds:
        raise InvariantViolation("control_center class must place a scada_host and a router")

    infrastructure = data.get("station_infrastructure", {})
    if not isinstance(infrastructure, dict):
        raise FormatError("station_infrastructure must be a mapping of role -> template")
    for role in ("lan_switch", "rtu", "wan_router", "modem", "base_station", "core_router"):
        if role not in infrastructure:
            raise FormatError(f"station_infrastructure: missing role '{role}'")
        if infrastructure[role] not in template_names:
            raise UnresolvedReference(
                f"station_infrastructure: unknown device template '{infrastructure[role]}'"
            )

    lan_link_class = data.get("lan_link_class")
    class_names = {lc.name for lc in link_classes}
    if lan_link_class not in class_names:
        raise UnresolvedReference(f"lan_link_class '{lan_link_class}' is not a defined link class")
    wan_link_classes = data.get("wan_link_classes", {})
    for par in WAN_PARADIGMS:
        if par not in wan_link_classes:
            raise FormatError(f"wan_link_classes: missing entry for paradigm '{par}'")
        if wan_link_classes[par] not in class_names:
            raise UnresolvedReference(
                f"wan_link_classes[{par}] '{wan_link_classes[par]}' is not a defined link class"
            )

    settings = data.get("settings", {}) or {}
    if not isinstance(settings, dict):
        raise FormatError("settings must be a mapping")

    return Blueprint(
        wan_paradigm=paradigm,
        address_pool=pool,
        station_classes=tuple(sorted(station_classes, key=lambda sc: (sc.priority, sc.name))),
        device_templates=tuple(sorted(device_templates, key=lambda t: t.name)),
        protocol_specs=tuple(sorted(protocol_specs, key=lambda p: p.name)),
        link_classes=tuple(sorted(link_classes, key=lambda lc: lc.name)),
        datapoint_templates=tuple(sorted(datapoint_templates, key=lambda t: t.name)),
        bindings=tuple(sorted(bindings, key=lambda b: (b.device_kind, b.element_kind))),
        command_type_tokens=command_tokens,
        lan_link_class=lan_link_class,
        wan_link_classes={p: wan_link_classes[p] for p in WAN_PARADIGMS},
        infrastructure={k: infrastructure[k] for k in sorted(infrastructure)},
        settings={k: settings[k] for k in sorted(settings)},
    )
