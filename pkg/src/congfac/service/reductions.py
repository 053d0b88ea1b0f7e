"""
Cost-Distance instances, their reduction to FLCC and the way back.

Every Cost-Distance edge becomes a shared-fixed-cost edge l(x) = c/x + l, so an edge carrying
flow x costs c + l*x: its build cost once plus its length per unit. The sink joins the sources
with the total demand, and a common facility cost larger than any routing cost makes every
optimal solution open exactly one facility.
"""
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Union

from congfac.exceptions import InfeasibleError, InfeasibleSolutionError, InstanceFormatError
from congfac.models import (
    CostDistanceEdge, CostDistanceInstance, CostDistanceResult, Edge, FacilityCosts, Instance, SharedFixed, Solution,
    Source
)
from congfac.service.flow import check_feasible, edge_flow
from congfac.service.instance import check_keys, read_int, read_real
from congfac.service.oracle import cost_distance_value

logger = logging.getLogger("congfac")

# >>>>> JSON FORMAT >>>>>

def cost_distance_to_json(cd: CostDistanceInstance) -> Dict[str, Any]:
    return {
        "name": cd.name,
        "n": cd.n,
        "edges": [{"u": edge.u, "v": edge.v, "c": edge.c, "l": edge.l} for edge in cd.edges],
        "sources": [{"node": source.node, "w": source.w} for source in cd.sources],
        "sink": cd.sink,
    }

def cost_distance_from_json(obj: Any) -> CostDistanceInstance:
    check_keys(obj, "cost_distance", {"n", "edges", "sources", "sink"}, {"name"})
    name = obj.get("name", "")
    if not isinstance(name, str):
        raise InstanceFormatError(f"cost_distance.name: expected a string, got {name!r}")
    n = read_int(obj["n"], "cost_distance.n")
    if not isinstance(obj["edges"], list) or not isinstance(obj["sources"], list):
        raise InstanceFormatError("cost_distance: 'edges' and 'sources' must be lists")
    edges = []
    for i, edge in enumerate(obj["edges"]):
        check_keys(edge, f"edges[{i}]", {"u", "v", "c", "l"})
        edges.append(CostDistanceEdge(
            read_int(edge["u"], f"edges[{i}].u"), read_int(edge["v"], f"edges[{i}].v"),
            read_real(edge["c"], f"edges[{i}].c"), read_real(edge["l"], f"edges[{i}].l"),
        ))
    sources = []
    for i, source in enumerate(obj["sources"]):
        check_keys(source, f"sources[{i}]", {"node", "w"})
        sources.append(Source(read_int(source["node"], f"sources[{i}].node"), read_real(source["w"], f"sources[{i}].w")))
    return CostDistanceInstance(n, tuple(edges), tuple(sources), read_int(obj["sink"], "cost_distance.sink"), name)

def serialize_cost_distance(cd: CostDistanceInstance) -> str:
    return json.dumps(cost_distance_to_json(cd), indent=2)

def parse_cost_distance(text: str) -> CostDistanceInstance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exception:
        raise InstanceFormatError(f"Cost-Distance instance is not valid JSON: {exception}") from exception
    return cost_distance_from_json(obj)

def load_cost_distance(path: Union[str, Path]) -> CostDistanceInstance:
    if isinstance(path, str):
        path = Path(path)
    return parse_cost_distance(path.read_text(encoding="utf-8"))

def dump_cost_distance(cd: CostDistanceInstance, path: Union[str, Path]):
    if isinstance(path, str):
        path = Path(path)
    path.write_text(serialize_cost_distance(cd) + "\n", encoding="utf-8")

# <<<<< JSON FORMAT <<<<<

def check_cost_distance(cd: CostDistanceInstance):
    """
    Raise InstanceFormatError on malformed data and InfeasibleError when a source cannot reach the sink.
    """
    if cd.n < 1:
        raise InstanceFormatError(f"Cost-Distance instance needs at least one node, n = {cd.n}")
    if not (0 <= cd.sink < cd.n):
        raise InstanceFormatError(f"Sink {cd.sink} outside [0, {cd.n})")
    if not cd.sources:
        raise InstanceFormatError("Cost-Distance instance has no sources")
    for i, edge in enumerate(cd.edges):
        if not (0 <= edge.u < cd.n and 0 <= edge.v < cd.n) or edge.u == edge.v:
            raise InstanceFormatError(f"edges[{i}] ({edge.u}, {edge.v}) is not an edge between two distinct nodes")
        if not (math.isfinite(edge.c) and math.isfinite(edge.l)) or edge.c < 0 or edge.l < 0:
            raise InstanceFormatError(f"edges[{i}] has a negative or non-finite cost or length")
    seen = set()
    for source in cd.sources:
        if not (0 <= source.node < cd.n) or not math.isfinite(source.w) or source.w <= 0 or source.node in seen:
            raise InstanceFormatError(f"Invalid source {source.node} with demand {source.w}")
        seen.add(source.node)
    if math.isinf(cost_distance_value(cd, range(cd.m))):
        raise InfeasibleError("Cost-Distance instance is disconnected: some source cannot reach the sink.")

def reduction_facility_cost(cd: CostDistanceInstance) -> float:
    """
    B = sum c + (sum w_s + w_t) * sum l + 1, more than the routing cost of any flow.
    """
    demand = sum(source.w for source in cd.sources)
    return float(sum(edge.c for edge in cd.edges) + 2 * demand * sum(edge.l for edge in cd.edges) + 1)

def reduce_cost_distance(cd: CostDistanceInstance) -> Instance:
    """
    FLCC instance on the same undirected graph with SharedFixed{c_e, l_e, min w_s} edges,
    the sink as an extra source of the total demand and a common facility cost B.
    When the sink already is a source, the total demand is added to it.
    """
    check_cost_distance(cd)
    demand = float(sum(source.w for source in cd.sources))
    w_min = min(source.w for source in cd.sources)
    edges = tuple(Edge(edge.u, edge.v, SharedFixed(edge.c, edge.l, w_min)) for edge in cd.edges)
    sources = []
    sink_is_source = False
    for source in cd.sources:
        if source.node == cd.sink:
            sources.append(Source(source.node, source.w + demand))
            sink_is_source = True
        else:
            sources.append(source)
    if not sink_is_source:
        sources.append(Source(cd.sink, demand))
    B = reduction_facility_cost(cd)
    logger.debug(f"[reduce_cost_distance] {cd.m} edges, sink {cd.sink} with demand {demand}, B = {B}")
    return Instance(False, cd.n, edges, tuple(sources), FacilityCosts(common=B), cd.name)

def extract_cost_distance_solution(sol: Solution, cd: CostDistanceInstance) -> CostDistanceResult:
    """
    Cost-Distance subgraph used by a one-facility FLCC solution of the reduced instance.
    The sink's demand also reaches the open facility, so the flow support connects every
    source to the sink; the edges are kept and the distances are measured to the sink on them.
    """
    if len(sol.facilities) != 1:
        raise InfeasibleSolutionError(
            f"Reduced solutions open exactly one facility, got {sorted(sol.facilities)}; the facility cost is too small."
        )
    inst = reduce_cost_distance(cd)
    check_feasible(inst, sol)
    (facility,) = sol.facilities
    if facility != cd.sink:
        logger.info(
            f"[extract_cost_distance_solution] facility {facility} is not the sink {cd.sink}; "
            "distances are measured to the sink on the flow support."
        )
    ef = edge_flow(inst, sol.assignment)
    support = tuple(e for e in range(cd.m) if ef.x[e] > 0)
    cost = cost_distance_value(cd, support)
    if math.isinf(cost):
        raise InfeasibleSolutionError("Flow support does not connect every source to the sink!")
    return CostDistanceResult(edges=support, cost=cost)

def cost_distance_sha1(cd: CostDistanceInstance) -> str:
    sha1 = hashlib.sha1()
    sha1.update(serialize_cost_distance(cd).encode("utf-8"))
    return sha1.hexdigest()
