"""
Exact brute-force solvers for desk-scale instances, used as ground truth for the approximation solvers.
"""
import itertools
import logging
import math
from typing import Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np

from congfac.constants import (
    COST_DISTANCE_MAX_EDGES, DEFAULT_NASH_MAX_ITERS, DEFAULT_NASH_TOL, ORACLE_ASSIGNMENT_GUARD, ORACLE_MAX_NODES,
    ORACLE_NASH_TOL
)
from congfac.enums import FnClassKind
from congfac.exceptions import GuardExceededError, InfeasibleError, UnsupportedInstanceError
from congfac.models import (
    CostDistanceInstance, CostDistanceResult, EdgeFlow, Instance, OracleResult, PathAssignment, PathFlow, RoutingResult
)
from congfac.service.equilibrium import nash_flow, require_nondecreasing, social_optimum
from congfac.service.flow import edge_flow, is_forward, routing_cost
from congfac.service.instance import edge_classes, instance_graph, require_valid, summarize_classes
from congfac.utils.graph import dijkstra, iter_simple_paths
from congfac.utils.parallel import partition_count, run_partitions

logger = logging.getLogger("congfac")

# (total cost, subset index, facilities); None when no subset of the partition is feasible.
SubsetBest = Optional[Tuple[float, int, Tuple[int, ...]]]

# >>>>> ROUTING FOR A FIXED FACILITY SET >>>>>

def min_routing_unsplittable(inst: Instance, facilities: Iterable[int], guard: int=ORACLE_ASSIGNMENT_GUARD) -> RoutingResult:
    """
    Exact minimum routing cost over assignments that send each source's demand along one
    simple path to a facility. Ties go to the first assignment in lexicographic path order.
    """
    facilities = frozenset(facilities)
    graph = instance_graph(inst)
    choices = []
    for source in inst.sources:
        paths = list(iter_simple_paths(graph, source.node, targets=set(facilities), guard=guard, guard_name="assignment_guard"))
        if not paths:
            raise InfeasibleError(f"Source {source.node} cannot reach any facility in {sorted(facilities)}!")
        choices.append(paths)
    needed = math.prod(len(paths) for paths in choices)
    if needed > guard:
        raise GuardExceededError("assignment_guard", guard, needed=needed, hint="use fewer facilities or a smaller instance")

    # per-source edge loads of every candidate path, in the traversal direction.
    loads = []
    for source, paths in zip(inst.sources, choices):
        forward = np.zeros((len(paths), inst.m))
        backward = np.zeros((len(paths), inst.m))
        for i, path in enumerate(paths):
            for a, _, e in path.hops():
                if is_forward(inst, a, e):
                    forward[i, e] += source.w
                else:
                    backward[i, e] += source.w
        loads.append((forward, backward))

    best_cost = math.inf
    best_choice = None
    for choice in itertools.product(*(range(len(paths)) for paths in choices)):
        forward = sum(loads[s][0][i] for s, i in enumerate(choice))
        backward = sum(loads[s][1][i] for s, i in enumerate(choice))
        cost = routing_cost(inst, EdgeFlow(forward, backward))
        if cost < best_cost:
            best_cost = cost
            best_choice = choice

    result = RoutingResult()
    result.cost = float(best_cost)
    result.assignment = PathAssignment(tuple(
        PathFlow(source.node, choices[s][i], source.w) for s, (source, i) in enumerate(zip(inst.sources, best_choice))
    ))
    return result

def min_routing_fixed_F_good(inst: Instance, facilities: Iterable[int], guard: int=ORACLE_ASSIGNMENT_GUARD) -> RoutingResult:
    """
    Optimal routing on good instances, where optimal flows send every demand along a single path.
    """
    if summarize_classes(edge_classes(inst)).kind != FnClassKind.GOOD:
        raise UnsupportedInstanceError("min_routing_fixed_F_good needs good cost functions on every edge.")
    return min_routing_unsplittable(inst, facilities, guard)

def min_routing_fixed_F_convex(
        inst: Instance, facilities: Iterable[int], tol: float=DEFAULT_NASH_TOL, max_iters: int=DEFAULT_NASH_MAX_ITERS
) -> RoutingResult:
    """
    Socially optimal (fractional) routing on nondecreasing instances.
    """
    outcome = social_optimum(inst, facilities, tol, max_iters)
    result = RoutingResult()
    result.cost = outcome.objective
    result.assignment = outcome.assignment
    result.gap = outcome.gap
    return result

def min_routing(inst: Instance, facilities: Iterable[int], tol: float=ORACLE_NASH_TOL) -> RoutingResult:
    """
    Dispatch on the instance class: enumeration for good instances, convex optimization for nondecreasing ones.
    """
    kind = summarize_classes(edge_classes(inst)).kind
    if kind == FnClassKind.GOOD:
        return min_routing_unsplittable(inst, facilities)
    if kind == FnClassKind.NONDECREASING_LIPSCHITZ:
        return min_routing_fixed_F_convex(inst, facilities, tol)
    raise UnsupportedInstanceError("Instances mixing good and nondecreasing cost functions have no exact routing oracle.")

# <<<<< ROUTING FOR A FIXED FACILITY SET <<<<<

# >>>>> FACILITY SUBSETS >>>>>

def facility_subsets(n: int) -> Iterable[Tuple[int, ...]]:
    """
    Every nonempty subset of range(n), fewest facilities first, then lexicographic.
    """
    for size in range(1, n + 1):
        yield from itertools.combinations(range(n), size)

def _check_subset_guard(inst: Instance, max_nodes: int):
    require_valid(inst)
    if inst.n > max_nodes:
        raise GuardExceededError("oracle_nodes", max_nodes, needed=inst.n, hint="brute force enumerates 2^n facility sets")

def _flcc_partition(inst: Instance, partition: int, num_partitions: int) -> SubsetBest:
    best = None
    for index, facilities in enumerate(facility_subsets(inst.n)):
        if index % num_partitions != partition:
            continue
        opening = inst.facility_costs.total(facilities)
        if best is not None and opening > best[0]:
            continue
        try:
            routing = min_routing(inst, facilities).cost
        except InfeasibleError:
            continue
        total = routing + opening
        if best is None or (total, index) < best[:2]:
            best = (total, index, facilities)
    return best

def _flsc_partition(inst: Instance, partition: int, num_partitions: int, tol: float) -> SubsetBest:
    best = None
    for index, facilities in enumerate(facility_subsets(inst.n)):
        if index % num_partitions != partition:
            continue
        opening = inst.facility_costs.total(facilities)
        if best is not None and opening > best[0]:
            continue
        try:
            equilibrium = nash_flow(inst, facilities, tol=tol)
        except InfeasibleError:
            continue
        if not equilibrium.converged:
            logger.warning(f"[brute_force_flsc] skipping F = {list(facilities)}: equilibrium did not converge.")
            continue
        total = routing_cost(inst, edge_flow(inst, equilibrium.assignment)) + opening
        if best is None or (total, index) < best[:2]:
            best = (total, index, facilities)
    return best

def _reduce(inst: Instance, results: List[SubsetBest], operation: str) -> Tuple[float, Tuple[int, ...]]:
    found = [result for result in results if result is not None]
    if not found:
        raise InfeasibleError(f"[{operation}] no facility set admits a feasible flow.")
    total, _, facilities = min(found, key=lambda result: result[:2])
    return total, facilities

def _oracle_result(inst: Instance, facilities: Tuple[int, ...], routing: RoutingResult) -> OracleResult:
    result = OracleResult()
    result.facilities = facilities
    result.routing_cost = routing.cost
    result.facility_cost = inst.facility_costs.total(facilities)
    result.cost = result.routing_cost + result.facility_cost
    result.assignment = routing.assignment
    return result

def brute_force_flcc(inst: Instance, num_workers: int=1, max_nodes: int=ORACLE_MAX_NODES) -> OracleResult:
    """
    Optimal FLCC solution over every nonempty facility set; ties go to fewer facilities, then lexicographic order.
    """
    _check_subset_guard(inst, max_nodes)
    num_partitions = partition_count(num_workers)
    tasks = [(inst, partition, num_partitions) for partition in range(num_partitions)]
    _, facilities = _reduce(inst, run_partitions(_flcc_partition, tasks, num_workers, "brute_force_flcc"), "brute_force_flcc")
    result = _oracle_result(inst, facilities, min_routing(inst, facilities))
    logger.info(f"[brute_force_flcc] F = {list(facilities)}, cost = {result.cost}")
    return result

def brute_force_flsc(
        inst: Instance, num_workers: int=1, max_nodes: int=ORACLE_MAX_NODES, tol: float=ORACLE_NASH_TOL
) -> OracleResult:
    """
    Optimal FLSC solution: per facility set the flow is the (approximate) Nash flow.
    """
    _check_subset_guard(inst, max_nodes)
    require_nondecreasing(inst, "brute_force_flsc")
    num_partitions = partition_count(num_workers)
    tasks = [(inst, partition, num_partitions, tol) for partition in range(num_partitions)]
    _, facilities = _reduce(inst, run_partitions(_flsc_partition, tasks, num_workers, "brute_force_flsc"), "brute_force_flsc")
    equilibrium = nash_flow(inst, facilities, tol=tol)
    routing = RoutingResult()
    routing.cost = routing_cost(inst, edge_flow(inst, equilibrium.assignment))
    routing.assignment = equilibrium.assignment
    routing.gap = equilibrium.gap
    result = _oracle_result(inst, facilities, routing)
    logger.info(f"[brute_force_flsc] F = {list(facilities)}, cost = {result.cost}")
    return result

# <<<<< FACILITY SUBSETS <<<<<

# >>>>> COST-DISTANCE >>>>>

def cost_distance_value(cd: CostDistanceInstance, edges: Iterable[int]) -> float:
    """
    Build cost of the edge subset plus demand-weighted shortest distances to the sink inside it;
    infinite when a source is cut off from the sink.
    """
    edges = sorted(set(edges))
    graph = nx.MultiGraph()
    graph.add_nodes_from(range(cd.n))
    for e in edges:
        edge = cd.edges[e]
        if edge.u != edge.v:
            graph.add_edge(edge.u, edge.v, key=e)
    dist, _ = dijkstra(graph, cd.sink, lambda e: cd.edges[e].l)
    total = float(sum(cd.edges[e].c for e in edges))
    for source in cd.sources:
        if source.node not in dist:
            return math.inf
        total += source.w * dist[source.node]
    return total

def brute_force_cost_distance(cd: CostDistanceInstance, max_edges: int=COST_DISTANCE_MAX_EDGES) -> CostDistanceResult:
    """
    Optimal Cost-Distance subgraph over every edge subset; ties go to the smallest subset bitmask.
    """
    if cd.m > max_edges:
        raise GuardExceededError("cost_distance_edges", max_edges, needed=cd.m, hint="brute force enumerates 2^m edge sets")
    best_cost = math.inf
    best_edges = None
    for mask in range(1 << cd.m):
        edges = tuple(e for e in range(cd.m) if mask >> e & 1)
        if sum(cd.edges[e].c for e in edges) >= best_cost:
            continue
        cost = cost_distance_value(cd, edges)
        if cost < best_cost:
            best_cost = cost
            best_edges = edges
    if best_edges is None:
        raise InfeasibleError("Cost-Distance instance is disconnected: some source cannot reach the sink.")
    logger.info(f"[brute_force_cost_distance] edges = {list(best_edges)}, cost = {best_cost}")
    return CostDistanceResult(edges=best_edges, cost=float(best_cost))

# <<<<< COST-DISTANCE <<<<<

# >>>>> STRUCTURE >>>>>

def flow_support_is_forest(inst: Instance, assignment: PathAssignment) -> bool:
    """
    Whether the edges carrying flow form a forest (as an undirected multigraph).
    """
    ef = edge_flow(inst, assignment)
    support = nx.MultiGraph()
    support.add_nodes_from(range(inst.n))
    for e, edge in enumerate(inst.edges):
        if ef.x[e] > 0:
            support.add_edge(edge.u, edge.v, key=e)
    return nx.is_forest(support)

def sources_unsplit(assignment: PathAssignment) -> bool:
    """
    Whether every source sends its whole demand along a single path.
    """
    return all(len({entry.path for entry in entries}) == 1 for entries in assignment.by_source().values())

# <<<<< STRUCTURE <<<<<
