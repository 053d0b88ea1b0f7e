"""
Instance validation, solver eligibility and the on-disk JSON format.
"""
import functools
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import networkx as nx

from congfac.enums import CostFnKind, FnClassKind, SolverName
from congfac.exceptions import InstanceFormatError, UnsupportedInstanceError
from congfac.models import (
    Affine, Constant, CostFn, Edge, FacilityCosts, FnClass, Instance, Polynomial, PowerShare, SharedFixed,
    Source, ValidationReport
)
from congfac.service.costfn import classify
from congfac.utils.graph import GraphT, build_graph

logger = logging.getLogger("congfac")

INSTANCE_KEYS = {"name", "directed", "n", "edges", "sources", "facility_costs"}
REQUIRED_INSTANCE_KEYS = INSTANCE_KEYS - {"name"}
COMMON_COST_REASON = "requires a common facility cost"
FN_PARAMS = {
    CostFnKind.CONSTANT: ({"b"}, set()),
    CostFnKind.AFFINE: ({"a", "b"}, set()),
    CostFnKind.POLYNOMIAL: ({"coeffs"}, set()),
    CostFnKind.SHARED_FIXED: ({"c", "l", "w_min"}, set()),
    CostFnKind.POWER_SHARE: ({"c", "beta"}, {"w_floor"}),
}

@functools.lru_cache(maxsize=128)
def instance_graph(inst: Instance) -> GraphT:
    """
    Multigraph view of an instance keyed by edge index. Shared between callers: do not mutate.
    """
    return build_graph(inst.n, [(edge.u, edge.v) for edge in inst.edges], inst.directed)

def edge_classes(inst: Instance) -> List[FnClass]:
    W = inst.total_demand if inst.sources and inst.total_demand > 0 else 1.0
    return [classify(edge.fn, W) for edge in inst.edges]

def summarize_classes(classes: List[FnClass]) -> FnClass:
    """
    Instance-level class: the common class of all edges, NEITHER when they mix.
    """
    kinds = {edge_class.kind for edge_class in classes}
    if kinds == {FnClassKind.GOOD}:
        return FnClass(FnClassKind.GOOD)
    if kinds <= {FnClassKind.NONDECREASING_LIPSCHITZ}:
        lipschitz = max((edge_class.lipschitz for edge_class in classes), default=0.0)
        return FnClass(FnClassKind.NONDECREASING_LIPSCHITZ, lipschitz)
    return FnClass(FnClassKind.NEITHER)

def validate_instance(inst: Instance) -> ValidationReport:
    """
    Report structural violations, per-edge classes, nodes unreachable from each source
    and which solvers accept the instance. Never raises for a bad instance.
    """
    report = ValidationReport()
    violations = report.violations

    if inst.n < 1:
        violations.append(f"instance needs at least one node, n = {inst.n}")
    for index, edge in enumerate(inst.edges):
        if not (0 <= edge.u < inst.n and 0 <= edge.v < inst.n):
            violations.append(f"edge {index} ({edge.u}, {edge.v}) has a node id outside [0, {inst.n})")
        elif edge.u == edge.v:
            violations.append(f"edge {index} is a self-loop on node {edge.u}")
    if not inst.sources:
        violations.append("instance has no sources")
    seen_sources = set()
    for source in inst.sources:
        if not (0 <= source.node < inst.n):
            violations.append(f"source node {source.node} outside [0, {inst.n})")
        if not math.isfinite(source.w) or source.w <= 0:
            violations.append(f"source {source.node} has a non-positive or non-finite demand {source.w}")
        if source.node in seen_sources:
            violations.append(f"source node {source.node} appears more than once")
        seen_sources.add(source.node)
    costs = inst.facility_costs
    if costs.is_common:
        if not math.isfinite(costs.common) or costs.common < 0:
            violations.append(f"common facility cost {costs.common} is negative or not finite")
    else:
        if len(costs.per_node) != inst.n:
            violations.append(f"per-node facility costs have {len(costs.per_node)} entries for {inst.n} nodes")
        for node, cost in enumerate(costs.per_node):
            if not math.isfinite(cost) or cost < 0:
                violations.append(f"facility cost of node {node} is negative or not finite: {cost}")

    report.edge_classes = edge_classes(inst)
    report.instance_class = summarize_classes(report.edge_classes)

    if inst.n >= 1:
        graph = instance_graph(inst)
        for source in inst.sources:
            if not (0 <= source.node < inst.n):
                continue
            if inst.directed:
                reachable = nx.descendants(graph, source.node) | {source.node}
            else:
                reachable = nx.node_connected_component(graph, source.node)
            missing = [node for node in range(inst.n) if node not in reachable]
            if missing:
                report.unreachable[source.node] = missing

    kinds = {edge_class.kind for edge_class in report.edge_classes}
    mixed = len(kinds) > 1

    sparse_reasons = []
    if violations:
        sparse_reasons.append("structural violations")
    if len(inst.sources) != 1:
        sparse_reasons.append(f"requires exactly one source, found {len(inst.sources)}")
    if not inst.directed:
        sparse_reasons.append("requires a directed instance")
    if mixed:
        sparse_reasons.append("mixed class")
    elif FnClassKind.GOOD in kinds:
        sparse_reasons.append("requires nondecreasing Lipschitz cost functions")

    merge_reasons = []
    if violations:
        merge_reasons.append("structural violations")
    if inst.directed:
        merge_reasons.append("requires an undirected instance")
    if mixed:
        merge_reasons.append("mixed class")
    elif FnClassKind.NONDECREASING_LIPSCHITZ in kinds:
        merge_reasons.append("requires good cost functions")
    if not costs.is_common:
        merge_reasons.append(COMMON_COST_REASON)

    for solver, reasons in ((SolverName.SPARSE, sparse_reasons), (SolverName.MERGE, merge_reasons)):
        if reasons:
            report.reasons[solver] = reasons
        else:
            report.eligible.append(solver)
    return report

def require_eligible(inst: Instance, solver: SolverName, ignore: Tuple[str, ...]=()) -> ValidationReport:
    """
    Raise UnsupportedInstanceError unless the solver accepts the instance; reasons listed in
    ignore do not count.
    """
    report = validate_instance(inst)
    blocking = [reason for reason in report.reasons.get(solver, []) if reason not in ignore]
    if blocking:
        reasons = "; ".join(blocking)
        raise UnsupportedInstanceError(f"Instance {inst.name or '<unnamed>'} is not eligible for {solver.value}: {reasons}")
    return report

def require_valid(inst: Instance) -> ValidationReport:
    report = validate_instance(inst)
    if report.violations:
        raise UnsupportedInstanceError(f"Instance has structural violations: {'; '.join(report.violations)}")
    return report

# >>>>> JSON FORMAT >>>>>

def check_keys(obj: Any, where: str, required: set, optional: set=frozenset()):
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - required - optional
    if unknown:
        raise InstanceFormatError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise InstanceFormatError(f"{where}: missing keys {sorted(missing)}")

def read_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(f"{where}: expected an integer, got {value!r}")
    return value

def read_real(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise InstanceFormatError(f"{where}: expected a finite number, got {value!r}")
    return value

def fn_to_json(fn: CostFn) -> Dict[str, Any]:
    if isinstance(fn, Constant):
        params = {"b": fn.b}
    elif isinstance(fn, Affine):
        params = {"a": fn.a, "b": fn.b}
    elif isinstance(fn, Polynomial):
        params = {"coeffs": list(fn.coeffs)}
    elif isinstance(fn, SharedFixed):
        params = {"c": fn.c, "l": fn.l, "w_min": fn.w_min}
    elif isinstance(fn, PowerShare):
        params = {"c": fn.c, "beta": fn.beta, "w_floor": fn.w_floor}
    else:
        raise TypeError(f"Unsupported cost function type: {type(fn)}")
    return {"kind": fn.kind.value, "params": params}

def fn_from_json(obj: Any, where: str, default_floor: float) -> CostFn:
    check_keys(obj, where, {"kind", "params"})
    try:
        kind = CostFnKind(obj["kind"])
    except ValueError:
        raise InstanceFormatError(f"{where}: unknown cost function kind {obj['kind']!r}") from None
    required, optional = FN_PARAMS[kind]
    params = obj["params"]
    check_keys(params, f"{where}.params", required, optional)
    try:
        if kind == CostFnKind.CONSTANT:
            return Constant(read_real(params["b"], f"{where}.b"))
        elif kind == CostFnKind.AFFINE:
            return Affine(read_real(params["a"], f"{where}.a"), read_real(params["b"], f"{where}.b"))
        elif kind == CostFnKind.POLYNOMIAL:
            coeffs = params["coeffs"]
            if not isinstance(coeffs, list):
                raise InstanceFormatError(f"{where}.coeffs: expected a list")
            return Polynomial(tuple(read_real(coeff, f"{where}.coeffs") for coeff in coeffs))
        elif kind == CostFnKind.SHARED_FIXED:
            return SharedFixed(
                read_real(params["c"], f"{where}.c"), read_real(params["l"], f"{where}.l"), read_real(params["w_min"], f"{where}.w_min")
            )
        else:
            w_floor = params.get("w_floor", default_floor)
            return PowerShare(read_real(params["c"], f"{where}.c"), read_real(params["beta"], f"{where}.beta"), read_real(w_floor, f"{where}.w_floor"))
    except (ValueError, TypeError) as exception:
        raise InstanceFormatError(f"{where}: {exception}") from exception

def instance_to_json(inst: Instance) -> Dict[str, Any]:
    costs = inst.facility_costs
    return {
        "name": inst.name,
        "directed": inst.directed,
        "n": inst.n,
        "edges": [{"u": edge.u, "v": edge.v, "fn": fn_to_json(edge.fn)} for edge in inst.edges],
        "sources": [{"node": source.node, "w": source.w} for source in inst.sources],
        "facility_costs": {"common": costs.common} if costs.is_common else {"per_node": list(costs.per_node)},
    }

def instance_from_json(obj: Any) -> Instance:
    check_keys(obj, "instance", REQUIRED_INSTANCE_KEYS, {"name"})
    name = obj.get("name", "")
    if not isinstance(name, str):
        raise InstanceFormatError(f"instance.name: expected a string, got {name!r}")
    directed = obj["directed"]
    if not isinstance(directed, bool):
        raise InstanceFormatError(f"instance.directed: expected a boolean, got {directed!r}")
    n = read_int(obj["n"], "instance.n")

    if not isinstance(obj["sources"], list):
        raise InstanceFormatError("instance.sources: expected a list")
    sources = []
    for i, source in enumerate(obj["sources"]):
        check_keys(source, f"sources[{i}]", {"node", "w"})
        sources.append(Source(read_int(source["node"], f"sources[{i}].node"), read_real(source["w"], f"sources[{i}].w")))
    positive = [source.w for source in sources if source.w > 0]
    default_floor = min(positive) if positive else 1.0

    if not isinstance(obj["edges"], list):
        raise InstanceFormatError("instance.edges: expected a list")
    edges = []
    for i, edge in enumerate(obj["edges"]):
        check_keys(edge, f"edges[{i}]", {"u", "v", "fn"})
        edges.append(Edge(
            read_int(edge["u"], f"edges[{i}].u"), read_int(edge["v"], f"edges[{i}].v"),
            fn_from_json(edge["fn"], f"edges[{i}].fn", default_floor)
        ))

    costs = obj["facility_costs"]
    if not isinstance(costs, dict) or len(costs) != 1 or not ({"common", "per_node"} & set(costs)):
        raise InstanceFormatError("instance.facility_costs: expected exactly one of 'common' or 'per_node'")
    if "common" in costs:
        facility_costs = FacilityCosts(common=read_real(costs["common"], "facility_costs.common"))
    else:
        if not isinstance(costs["per_node"], list):
            raise InstanceFormatError("facility_costs.per_node: expected a list")
        facility_costs = FacilityCosts(per_node=tuple(read_real(cost, "facility_costs.per_node") for cost in costs["per_node"]))
    return Instance(directed, n, tuple(edges), tuple(sources), facility_costs, name)

def serialize_instance(inst: Instance) -> str:
    return json.dumps(instance_to_json(inst), indent=2)

def parse_instance(text: str) -> Instance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exception:
        raise InstanceFormatError(f"Instance is not valid JSON: {exception}") from exception
    return instance_from_json(obj)

def load_instance(path: Union[str, Path]) -> Instance:
    if isinstance(path, str):
        path = Path(path)
    return parse_instance(path.read_text(encoding="utf-8"))

def dump_instance(inst: Instance, path: Union[str, Path]):
    if isinstance(path, str):
        path = Path(path)
    path.write_text(serialize_instance(inst) + "\n", encoding="utf-8")

def instance_sha1(inst: Instance) -> str:
    sha1 = hashlib.sha1()
    sha1.update(serialize_instance(inst).encode("utf-8"))
    return sha1.hexdigest()

# <<<<< JSON FORMAT <<<<<
