from __future__ import annotations

from .flows import Demand, DemandError, Flow, FlowError, Infeasible, RoutingWitness
from .io import FormatError, format_cut, format_graph, parse_cut, parse_demand, parse_graph, read_graph, write_graph
from .multigraph import UNREACHABLE, GraphError, MultiGraph, ball, diam, dist, edge_key
from .routing import (
    PathBudgetExceeded,
    RoutingSolution,
    enumerate_paths,
    route_demand_exact,
    route_within,
    solve_routing,
    verify_routing,
)

__all__ = [
    "Demand", "DemandError", "Flow", "FlowError", "FormatError", "GraphError", "Infeasible",
    "MultiGraph", "PathBudgetExceeded", "RoutingSolution", "RoutingWitness", "UNREACHABLE",
    "ball", "diam", "dist", "edge_key", "enumerate_paths", "format_cut", "format_graph",
    "parse_cut", "parse_demand", "parse_graph", "read_graph", "route_demand_exact",
    "route_within", "solve_routing", "verify_routing", "write_graph",
]
