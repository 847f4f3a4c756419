"""Blueprint parsing, validation and station-class resolution."""

import random

import pytest
import yaml

from gridweaver.blueprint import (
    StationFacts,
    evaluate_match,
    parse_blueprint,
    resolve_station_template,
)
from gridweaver.errors import (
    FormatError,
    InvariantViolation,
    NoMatchingStationClass,
    UnresolvedReference,
)


def facts(*categories, hv_external=False):
    return StationFacts(categories=frozenset(categories), hv_connects_external=hv_external)


class TestParseDefault:
    def test_default_fixture_contents(self, default_blueprint):
        class_names = {sc.name for sc in default_blueprint.station_classes}
        assert {"control_center", "primary_substation", "secondary_substation"} <= class_names
        assert default_blueprint.wan_paradigm == "fiber"
        assert [p.name for p in default_blueprint.protocol_specs] == ["iec60870-104"]
        assert default_blueprint.protocol_specs[0].transport_port == 2404

    def test_lan_class_values(self, default_blueprint):
        lan = default_blueprint.link_class("lan_1g")
        assert lan.bandwidth_bps == 1e9
        assert lan.latency_ms == 0.1

    def test_exactly_one_control_center(self, default_blueprint):
        assert sum(sc.control_center for sc in default_blueprint.station_classes) == 1

    def test_order_insensitive(self, default_blueprint_text, default_blueprint):
        doc = yaml.safe_load(default_blueprint_text)
        rng = random.Random(7)
        for trial in range(5):
            shuffled = dict(doc)
            for section in (
                "link_classes",
                "device_templates",
                "protocols",
                "datapoint_templates",
                "bindings",
                "station_classes",
            ):
                entries = list(shuffled[section])
                rng.shuffle(entries)
                shuffled[section] = entries
            assert parse_blueprint(yaml.safe_dump(shuffled)) == default_blueprint


class TestParseErrors:
    def test_unknown_device_template(self, default_blueprint_text):
        doc = yaml.safe_load(default_blueprint_text)
        doc["station_classes"][1]["devices"].append({"template": "ied_x", "placement": "per_load"})
        with pytest.raises(UnresolvedReference, match="ied_x"):
            parse_blueprint(yaml.safe_dump(doc))

    def test_loss_rate_out_of_range(self, default_blueprint_text):
        doc = yaml.safe_load(default_blueprint_text)
        doc["link_classes"][0]["loss_rate"] = 1.5
        with pytest.raises(InvariantViolation, match="loss_rate"):
            parse_blueprint(yaml.safe_dump(doc))

    def test_missing_control_center(self, default_blueprint_text):
        doc = yaml.safe_load(default_blueprint_text)
        doc["station_classes"] = [
            sc for sc in doc["station_classes"] if not sc.get("control_center")
        ]
        with pytest.raises(InvariantViolation, match="control_center"):
            parse_blueprint(yaml.safe_dump(doc))

    def test_control_direction_must_use_command_token(self, default_blueprint_text):
        doc = yaml.safe_load(default_blueprint_text)
        for tpl in doc["datapoint_templates"]:
            if tpl["name"] == "voltage_setpoint":
                tpl["type_id"] = "M_ME_NC_1"
        with pytest.raises(InvariantViolation, match="voltage_setpoint"):
            parse_blueprint(yaml.safe_dump(doc))

    def test_datapoint_template_bad_category(self, default_blueprint_text):
        doc = yaml.safe_load(default_blueprint_text)
        doc["datapoint_templates"][0]["category"] = "busbar.voltage"
        with pytest.raises(UnresolvedReference, match="busbar"):
            parse_blueprint(yaml.safe_dump(doc))

    def test_bad_port(self, default_blueprint_text):
        doc = yaml.safe_load(default_blueprint_text)
        doc["protocols"][0]["transport_port"] = 70000
        with pytest.raises(InvariantViolation, match="transport_port"):
            parse_blueprint(yaml.safe_dump(doc))

    def test_not_yaml(self):
        with pytest.raises(FormatError):
            parse_blueprint("{{{{")


class TestMatchRules:
    def test_predicates(self):
        assert evaluate_match("has(load)", facts("load", "bus"))
        assert not evaluate_match("has(load)", facts("bus"))
        assert evaluate_match("has(generator) and not has(load)", facts("generator", "bus"))
        assert evaluate_match("hv_connects(external_grid)", facts("bus", hv_external=True))
        assert evaluate_match("true", facts("bus"))
        assert evaluate_match("has(load) or has(generator)", facts("generator"))
        assert evaluate_match("not (has(load) or has(generator))", facts("bus"))

    def test_unknown_category_rejected(self):
        with pytest.raises(FormatError):
            evaluate_match("has(widget)", facts("bus"))

    def test_trailing_garbage_rejected(self):
        with pytest.raises(FormatError):
            evaluate_match("true true", facts("bus"))


class TestResolve:
    def test_transformer_at_external_bus_is_primary(self, default_blueprint):
        sc = resolve_station_template(
            default_blueprint, facts("bus", "transformer", "switch", hv_external=True)
        )
        assert sc.name == "primary_substation"

    def test_generator_only_is_der(self, default_blueprint):
        sc = resolve_station_template(default_blueprint, facts("bus", "generator"))
        assert sc.name == "der"

    def test_load_station_is_secondary(self, default_blueprint):
        sc = resolve_station_template(default_blueprint, facts("bus", "load", "generator"))
        assert sc.name == "secondary_substation"

    def test_bare_bus_falls_through_to_secondary(self, default_blueprint):
        sc = resolve_station_template(default_blueprint, facts("bus"))
        assert sc.name == "secondary_substation"

    def test_empty_station_rejected(self, default_blueprint):
        with pytest.raises(InvariantViolation):
            resolve_station_template(default_blueprint, facts())

    def test_no_match_error(self, default_blueprint_text):
        doc = yaml.safe_load(default_blueprint_text)
        for sc in doc["station_classes"]:
            if sc["name"] == "secondary_substation":
                sc["match"] = "has(load)"
        bp = parse_blueprint(yaml.safe_dump(doc))
        with pytest.raises(NoMatchingStationClass):
            resolve_station_template(bp, facts("bus"))
