"""
Flows on an instance: aggregation, routing and total cost, feasibility, eps-Nash verification
and the solution JSON format.
"""
import json
import logging
import math
from pathlib import Path as FilePath
from typing import Any, Dict, Iterable, List, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from congfac.constants import EXHAUSTIVE_PATH_GUARD, TOLERANCE
from congfac.exceptions import (
    DomainError, GuardExceededError, InfeasibleSolutionError, InstanceFormatError, InvalidPathError, NotADagError,
    UnsupportedInstanceError
)
from congfac.models import EdgeFlow, Instance, NashCertificate, Path, PathAssignment, PathFlow, Solution
from congfac.service.costfn import eval_cost, eval_total
from congfac.service.instance import check_keys, instance_graph, read_int, read_real
from congfac.utils.graph import dijkstra, iter_simple_paths, nearest_target

logger = logging.getLogger("congfac")

# >>>>> PATHS >>>>>

def is_forward(inst: Instance, tail: int, edge: int) -> bool:
    """
    Whether traversing edge from tail follows its stored (u, v) orientation.
    """
    return inst.edges[edge].u == tail

def hop_candidates(inst: Instance, a: int, b: int) -> List[int]:
    graph = instance_graph(inst)
    if a not in graph.adj or b not in graph.adj[a]:
        return []
    return sorted(graph.adj[a][b])

def resolve_path(inst: Instance, nodes: Sequence[int]) -> Path:
    """
    Map a node sequence to a path; every hop must be joined by exactly one edge.
    """
    edges = []
    for a, b in zip(nodes[:-1], nodes[1:]):
        candidates = hop_candidates(inst, a, b)
        if not candidates:
            raise InvalidPathError(f"No edge joins {a} -> {b}!")
        if len(candidates) > 1:
            raise InvalidPathError(f"Hop {a} -> {b} is ambiguous between edges {candidates}; give the edge indices.")
        edges.append(candidates[0])
    return Path(tuple(nodes), tuple(edges))

def check_path(inst: Instance, source: int, path: Path, where: str="path"):
    if path.start != source:
        raise InvalidPathError(f"{where}: starts at {path.start}, not at its source {source}")
    for a, b, e in path.hops():
        if not (0 <= e < inst.m):
            raise InvalidPathError(f"{where}: edge index {e} outside [0, {inst.m})")
        edge = inst.edges[e]
        if a == b:
            raise InvalidPathError(f"{where}: hop {a} -> {b} is a self-loop")
        if inst.directed:
            joined = (edge.u, edge.v) == (a, b)
        else:
            joined = {edge.u, edge.v} == {a, b}
        if not joined:
            raise InvalidPathError(f"{where}: edge {e} ({edge.u}, {edge.v}) does not join {a} -> {b}")

def path_cost(path: Path, lengths: np.ndarray) -> float:
    return float(sum(lengths[e] for e in path.edges))

# <<<<< PATHS <<<<<

# >>>>> COSTS >>>>>

def _accumulate(inst: Instance, entries: Iterable[PathFlow], validate: bool=True) -> EdgeFlow:
    forward = np.zeros(inst.m)
    backward = np.zeros(inst.m)
    for index, entry in enumerate(entries):
        if validate:
            where = f"entry {index} (source {entry.source})"
            if not entry.amount > 0:
                raise InvalidPathError(f"{where}: amount must be positive, got {entry.amount}")
            check_path(inst, entry.source, entry.path, where)
        for a, _, e in entry.path.hops():
            if is_forward(inst, a, e):
                forward[e] += entry.amount
            else:
                backward[e] += entry.amount
    return EdgeFlow(forward, backward)

def edge_flow(inst: Instance, assignment: PathAssignment) -> EdgeFlow:
    """
    Aggregate path amounts per edge. Opposite traversals of an undirected edge add up.
    """
    return _accumulate(inst, assignment.entries)

def source_flow(inst: Instance, assignment: PathAssignment, source: int) -> EdgeFlow:
    return _accumulate(inst, (entry for entry in assignment.entries if entry.source == source), validate=False)

def routing_cost(inst: Instance, ef: EdgeFlow) -> float:
    return float(sum(eval_total(edge.fn, float(ef.x[e])) for e, edge in enumerate(inst.edges)))

def edge_lengths(inst: Instance, ef: EdgeFlow) -> np.ndarray:
    """
    Per-unit edge costs l_e(x_e) at the given flow.
    """
    return np.array([eval_cost(edge.fn, float(ef.x[e])) for e, edge in enumerate(inst.edges)], dtype=float)

def check_feasible(inst: Instance, sol: Solution):
    """
    Every path ends at an open facility and every source ships exactly its demand.
    """
    if not sol.facilities:
        raise InfeasibleSolutionError("Solution opens no facility!")
    for node in sol.facilities:
        if not (0 <= node < inst.n):
            raise InfeasibleSolutionError(f"Facility {node} is not a node of the instance!")
    shipped: Dict[int, float] = {}
    for index, entry in enumerate(sol.assignment.entries):
        if entry.path.end not in sol.facilities:
            raise InfeasibleSolutionError(f"entry {index} (source {entry.source}) ends at {entry.path.end}, not at a facility")
        shipped[entry.source] = shipped.get(entry.source, 0.0) + entry.amount
    demands = {source.node: source.w for source in inst.sources}
    for node in shipped:
        if node not in demands:
            raise InfeasibleSolutionError(f"Flow is routed from {node}, which is not a source!")
    for node, w in demands.items():
        amount = shipped.get(node, 0.0)
        if abs(amount - w) > TOLERANCE * max(1.0, w):
            raise InfeasibleSolutionError(f"Source {node} ships {amount} but has demand {w}!")

def total_cost(inst: Instance, sol: Solution) -> float:
    """
    C(F): routing cost of the flow plus the opening costs of F.
    """
    check_feasible(inst, sol)
    return routing_cost(inst, edge_flow(inst, sol.assignment)) + inst.facility_costs.total(sol.facilities)

# <<<<< COSTS <<<<<

# >>>>> NASH VERIFICATION >>>>>

def support_graph(inst: Instance, ef: EdgeFlow) -> nx.MultiDiGraph:
    """
    Directed graph of the traversals carrying positive flow, keyed by edge index.
    """
    support = nx.MultiDiGraph()
    support.add_nodes_from(range(inst.n))
    for e, edge in enumerate(inst.edges):
        if ef.forward[e] > 0:
            support.add_edge(edge.u, edge.v, key=e)
        if ef.backward[e] > 0:
            support.add_edge(edge.v, edge.u, key=e)
    return support

def _dag_extremes(
        support: nx.MultiDiGraph, lengths: np.ndarray, source: int, facilities: Iterable[int]
) -> Tuple[float, Path, float, Path]:
    """
    Shortest and longest source -> facility paths in an acyclic support graph.
    """
    shortest = {source: (0.0, Path.at(source))}
    longest = {source: (0.0, Path.at(source))}
    for node in nx.lexicographical_topological_sort(support):
        if node not in shortest:
            continue
        for _, nbr, key in sorted(support.out_edges(node, keys=True)):
            low = shortest[node][0] + lengths[key]
            if nbr not in shortest or low < shortest[nbr][0]:
                shortest[nbr] = (low, shortest[node][1].concat(Path((node, nbr), (key,))))
            high = longest[node][0] + lengths[key]
            if nbr not in longest or high > longest[nbr][0]:
                longest[nbr] = (high, longest[node][1].concat(Path((node, nbr), (key,))))
    reached = [node for node in sorted(facilities) if node in shortest]
    if not reached:
        raise InfeasibleSolutionError(f"No flow-carrying path from {source} reaches a facility!")
    c_min, min_path = min((shortest[node] for node in reached), key=lambda item: item[0])
    c_max, max_path = max((longest[node] for node in reached), key=lambda item: item[0])
    return float(c_min), min_path, float(c_max), max_path

def verify_eps_nash(inst: Instance, sol: Solution, eps: float) -> NashCertificate:
    """
    eps-Nash test for single-source flows with acyclic support: with edge lengths fixed at
    l_e(x_e), the shortest (c_min) and longest (c_max) flow-carrying paths to F differ by at most
    eps, and no path to F in the whole graph is cheaper than c_max - eps.
    """
    if len(inst.sources) != 1:
        raise UnsupportedInstanceError(f"verify_eps_nash supports single-source instances, got {len(inst.sources)} sources.")
    if eps < 0:
        raise DomainError(f"eps must be non-negative, got {eps}!")
    check_feasible(inst, sol)
    ef = edge_flow(inst, sol.assignment)
    lengths = edge_lengths(inst, ef)
    source = inst.sources[0].node

    support = support_graph(inst, ef)
    if not nx.is_directed_acyclic_graph(support):
        cycle = nx.find_cycle(support)
        raise NotADagError(f"Flow support contains a directed cycle: {[(u, v) for u, v, *_ in cycle]}")
    c_min, min_path, c_max, max_path = _dag_extremes(support, lengths, source, sol.facilities)

    dist, paths = dijkstra(instance_graph(inst), source, lambda e: float(lengths[e]))
    c_sp, sp_path = nearest_target(dist, paths, sol.facilities)

    certificate = NashCertificate()
    certificate.eps = eps
    certificate.c_min = c_min
    certificate.c_max = c_max
    certificate.c_sp = float(c_sp)
    certificate.min_path = min_path
    certificate.max_path = max_path
    certificate.sp_path = sp_path
    certificate.holds = bool(c_max - c_min <= eps + TOLERANCE and c_sp >= c_max - eps - TOLERANCE)
    return certificate

def _is_used(inst: Instance, path: Path, own: EdgeFlow) -> bool:
    for a, _, e in path.hops():
        if own.directional(e, is_forward(inst, a, e)) <= 0:
            return False
    return True

def verify_eps_nash_exhaustive(inst: Instance, sol: Solution, eps: float, guard: int=EXHAUSTIVE_PATH_GUARD) -> bool:
    """
    Literal eps-Nash check over every simple source -> F path: each path used by a source
    (every edge carries that source's flow in the traversal direction) costs at most eps more
    than any path available to it. Works for multi-source instances.
    """
    if eps < 0:
        raise DomainError(f"eps must be non-negative, got {eps}!")
    check_feasible(inst, sol)
    ef = edge_flow(inst, sol.assignment)
    lengths = edge_lengths(inst, ef)
    graph = instance_graph(inst)
    targets = set(sol.facilities)
    for source in inst.sources:
        own = source_flow(inst, sol.assignment, source.node)
        max_used = -math.inf
        min_all = math.inf
        for path in iter_simple_paths(graph, source.node, targets=targets, guard=guard, guard_name="exhaustive_paths"):
            cost = path_cost(path, lengths)
            min_all = min(min_all, cost)
            if _is_used(inst, path, own):
                max_used = max(max_used, cost)
        if max_used > min_all + eps + TOLERANCE:
            logger.debug(f"[verify_eps_nash_exhaustive] source {source.node}: used path cost {max_used} > {min_all} + {eps}")
            return False
    return True

def nash_slack(inst: Instance, sol: Solution, guard: int=EXHAUSTIVE_PATH_GUARD) -> float:
    """
    Smallest eps for which the flow is eps-Nash: the largest gap, over sources, between the
    costliest used path and the cheapest available path. Acyclic supports are handled by dynamic
    programming, cyclic ones by enumerating the support; past the guard the sum of support
    lengths is used as an upper bound.
    """
    check_feasible(inst, sol)
    ef = edge_flow(inst, sol.assignment)
    lengths = edge_lengths(inst, ef)
    graph = instance_graph(inst)
    slack = 0.0
    for source in inst.sources:
        own = source_flow(inst, sol.assignment, source.node)
        support = support_graph(inst, own)
        dist, paths = dijkstra(graph, source.node, lambda e: float(lengths[e]))
        c_sp, _ = nearest_target(dist, paths, sol.facilities)
        if nx.is_directed_acyclic_graph(support):
            _, _, c_max, _ = _dag_extremes(support, lengths, source.node, sol.facilities)
        else:
            try:
                c_max = max(
                    path_cost(path, lengths)
                    for path in iter_simple_paths(support, source.node, targets=set(sol.facilities), guard=guard)
                )
            except GuardExceededError:
                c_max = float(sum(lengths[key] for _, _, key in support.edges(keys=True)))
        slack = max(slack, c_max - c_sp)
    return float(slack)

# <<<<< NASH VERIFICATION <<<<<

# >>>>> JSON FORMAT >>>>>

def solution_to_json(inst: Instance, sol: Solution) -> Dict[str, Any]:
    paths = []
    for entry in sol.assignment.entries:
        item = {"source": entry.source, "nodes": list(entry.path.nodes), "amount": entry.amount}
        if any(len(hop_candidates(inst, a, b)) > 1 for a, b, _ in entry.path.hops()):
            item["edges"] = list(entry.path.edges)
        paths.append(item)
    return {"facilities": sorted(sol.facilities), "paths": paths}

def solution_from_json(inst: Instance, obj: Any) -> Solution:
    check_keys(obj, "solution", {"facilities", "paths"})
    facilities = obj["facilities"]
    if not isinstance(facilities, list) or not isinstance(obj["paths"], list):
        raise InstanceFormatError("solution: 'facilities' and 'paths' must be lists")
    facilities = frozenset(read_int(node, "solution.facilities") for node in facilities)
    entries = []
    for i, item in enumerate(obj["paths"]):
        check_keys(item, f"paths[{i}]", {"source", "nodes", "amount"}, {"edges"})
        if not isinstance(item["nodes"], list) or not item["nodes"]:
            raise InstanceFormatError(f"paths[{i}].nodes: expected a non-empty list")
        nodes = tuple(read_int(node, f"paths[{i}].nodes") for node in item["nodes"])
        if "edges" in item:
            try:
                path = Path(nodes, tuple(read_int(e, f"paths[{i}].edges") for e in item["edges"]))
            except (TypeError, ValueError) as exception:
                raise InstanceFormatError(f"paths[{i}]: {exception}") from exception
        else:
            path = resolve_path(inst, nodes)
        entries.append(PathFlow(read_int(item["source"], f"paths[{i}].source"), path, read_real(item["amount"], f"paths[{i}].amount")))
    return Solution(facilities, PathAssignment(tuple(entries)))

def serialize_solution(inst: Instance, sol: Solution) -> str:
    return json.dumps(solution_to_json(inst, sol), indent=2)

def parse_solution(inst: Instance, text: str) -> Solution:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exception:
        raise InstanceFormatError(f"Solution is not valid JSON: {exception}") from exception
    return solution_from_json(inst, obj)

def load_solution(inst: Instance, path: Union[str, FilePath]) -> Solution:
    if isinstance(path, str):
        path = FilePath(path)
    return parse_solution(inst, path.read_text(encoding="utf-8"))

# <<<<< JSON FORMAT <<<<<
