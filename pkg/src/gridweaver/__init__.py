"""gridweaver: derive integrated smart-grid ICT infrastructure models from
electrical distribution grid models and a declarative architecture template.
"""

from .blueprint import Blueprint, parse_blueprint, resolve_station_template
from .datapoints import (
    assign_field_datapoints,
    bind_primary_data,
    configure_datapoints,
    inherit_datapoints,
    merge_scada_views,
)
from .errors import GridWeaverError
from .export import (
    export_graph,
    export_network_config,
    export_whitelist,
    load_model,
    save_model,
)
from .grid_io import PowerGridModel, parse_grid, serialize_grid, validate_grid
from .model import InfraModel, InfrastructureGraph, Station
from .netconfig import (
    allocate_addresses,
    compute_routes,
    configure_network,
    derive_whitelist,
    init_interfaces,
    install_routes,
    parameterize_links,
    split_subnets,
)
from .pipeline import benchmark, run_pipeline
from .planning import (
    accumulate_link_loads,
    analyze,
    check_capacity,
    estimate_device_traffic,
    suggest_reinforcement,
)
from .topology import (
    aggregate_stations,
    build_station_lan,
    build_topology,
    build_wan,
    instantiate_primary_objects,
    minimum_spanning_tree,
    place_field_devices,
    place_rtu,
)

__version__ = "0.1.0"

__all__ = [
    "Blueprint",
    "GridWeaverError",
    "InfraModel",
    "InfrastructureGraph",
    "PowerGridModel",
    "Station",
    "accumulate_link_loads",
    "aggregate_stations",
    "allocate_addresses",
    "analyze",
    "assign_field_datapoints",
    "benchmark",
    "bind_primary_data",
    "build_station_lan",
    "build_topology",
    "build_wan",
    "check_capacity",
    "compute_routes",
    "configure_datapoints",
    "configure_network",
    "derive_whitelist",
    "estimate_device_traffic",
    "export_graph",
    "export_network_config",
    "export_whitelist",
    "inherit_datapoints",
    "init_interfaces",
    "install_routes",
    "instantiate_primary_objects",
    "load_model",
    "merge_scada_views",
    "minimum_spanning_tree",
    "parameterize_links",
    "parse_blueprint",
    "parse_grid",
    "place_field_devices",
    "place_rtu",
    "resolve_station_template",
    "run_pipeline",
    "save_model",
    "serialize_grid",
    "split_subnets",
    "suggest_reinforcement",
    "validate_grid",
]
