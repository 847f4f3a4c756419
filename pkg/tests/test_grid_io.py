"""Grid interchange format: parsing, validation, serialization."""

import pytest

from gridweaver.errors import FormatError, InvariantViolation, UnresolvedReference
from gridweaver.fixtures import fixture_text
from gridweaver.grid_io import (
    Bus,
    ensure_coordinates,
    parse_grid,
    serialize_grid,
    validate_grid,
)

from oracles import random_grid_document

MINIMAL = """
buses:
  - {id: b0, nominal_voltage_kv: 110.0}
  - {id: b1, nominal_voltage_kv: 20.0}
branches: []
transformers:
  - {id: t0, hv_bus: b0, lv_bus: b1}
loads:
  - {id: ld1, bus: b1, p_mw: 0.5, q_mvar: 0.1}
external_grid: {bus: b0}
"""


class TestParse:
    def test_cigre_fixture_golden_counts(self):
        model = parse_grid(fixture_text("grid_cigre_mv"))
        assert len(model.buses) == 15
        assert len(model.branches) == 15
        assert len(model.transformers) == 2
        assert len(model.loads) == 18
        assert len(model.generators) == 9
        assert len(model.switches) == 8

    def test_element_order_normalized(self):
        model = parse_grid(MINIMAL)
        assert [b.id for b in model.buses] == ["b0", "b1"]

    def test_zero_buses_rejected(self):
        with pytest.raises(UnresolvedReference, match="no buses"):
            parse_grid("buses: []\nexternal_grid: {bus: b0}\n")

    def test_dangling_branch_reference_names_bus(self):
        doc = MINIMAL + "\ngenerators:\n  - {id: g1, bus: b99, p_mw: 0.1}\n"
        with pytest.raises(UnresolvedReference, match="b99"):
            parse_grid(doc)

    def test_malformed_yaml(self):
        with pytest.raises(FormatError):
            parse_grid("buses: [unclosed")

    def test_non_mapping_document(self):
        with pytest.raises(FormatError):
            parse_grid("- just\n- a\n- list\n")

    def test_negative_voltage_rejected(self):
        doc = MINIMAL.replace("nominal_voltage_kv: 20.0", "nominal_voltage_kv: -5.0")
        with pytest.raises(InvariantViolation, match="voltage"):
            parse_grid(doc)

    def test_tap_out_of_range_rejected(self):
        doc = MINIMAL.replace(
            "{id: t0, hv_bus: b0, lv_bus: b1}",
            "{id: t0, hv_bus: b0, lv_bus: b1, tap_position: 12, tap_min: -10, tap_max: 10}",
        )
        with pytest.raises(InvariantViolation, match="tap"):
            parse_grid(doc)

    def test_switch_requires_branch_or_other_bus(self):
        doc = MINIMAL + "\nswitches:\n  - {id: s1, bus: b1}\n"
        with pytest.raises(FormatError):
            parse_grid(doc)


class TestValidate:
    def test_valid_fixture_has_no_findings(self):
        model = parse_grid(fixture_text("grid_4bus"))
        assert validate_grid(model).ok

    def test_tap_range_finding(self, grid_4bus):
        import dataclasses

        bad_trafo = dataclasses.replace(grid_4bus.transformers[0], tap_position=12, tap_max=10)
        model = dataclasses.replace(grid_4bus, transformers=(bad_trafo,))
        report = validate_grid(model)
        assert [(f.element, f.rule) for f in report.findings] == [("t0", "tap-range")]

    def test_duplicate_bus_id_finding(self, grid_4bus):
        import dataclasses

        model = dataclasses.replace(
            grid_4bus, buses=grid_4bus.buses + (Bus(id="b1", nominal_voltage_kv=20.0),)
        )
        report = validate_grid(model)
        assert any(f.rule == "duplicate-id" and f.element == "b1" for f in report.findings)

    def test_every_parse_accepted_grid_validates_clean(self):
        for seed in range(30):
            model = parse_grid(random_grid_document(seed))
            assert validate_grid(model).ok


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["grid_4bus", "grid_12bus", "grid_cigre_mv"])
    def test_fixture_round_trip_identity(self, name):
        model = parse_grid(fixture_text(name))
        assert parse_grid(serialize_grid(model)) == model

    def test_random_grids_round_trip(self):
        for seed in range(25):
            model = parse_grid(random_grid_document(seed))
            again = parse_grid(serialize_grid(model))
            assert again == model
            assert serialize_grid(again) == serialize_grid(model)


class TestCoordinates:
    def test_synthesized_layout_is_deterministic(self):
        model = parse_grid(MINIMAL)
        first = ensure_coordinates(model)
        second = ensure_coordinates(model)
        assert first == second
        assert all(b.coordinates is not None for b in first.buses)

    def test_layers_spread_from_external_bus(self):
        model = ensure_coordinates(parse_grid(MINIMAL))
        by_id = {b.id: b for b in model.buses}
        assert by_id["b0"].coordinates[0] == 0.0
        assert by_id["b1"].coordinates[0] == 1.0

    def test_existing_coordinates_untouched(self, cigre_grid):
        assert ensure_coordinates(cigre_grid) == cigre_grid
