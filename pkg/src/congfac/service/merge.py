"""
Randomized matching-and-merge solver for undirected instances with good cost functions.

Every phase pairs up active demand points with a minimum-cost matching on the pairing cost K,
sends both demands of a pair to their best meeting point, and keeps one endpoint at random
(with probability proportional to its weight) as the merged point the joint demand returns to.
Phases repeat until k points remain; they become the facilities.
"""
import logging
import math
import time
from typing import Any, Dict, List, Tuple

import numpy as np

from congfac.constants import DEFAULT_EXACT_MATCHING_LIMIT, DEFAULT_REPEATS, TOLERANCE
from congfac.enums import MovementKind, SolverName
from congfac.exceptions import DomainError, InfeasibleError
from congfac.models import (
    Instance, KMedianResult, KMedianRun, MergeResult, Movement, PairCost, Path, PathAssignment, PathFlow, PhaseLog,
    PhaseState, Solution
)
from congfac.service.costfn import eval_cost
from congfac.service.flow import edge_flow, routing_cost
from congfac.service.instance import COMMON_COST_REASON, instance_graph, require_eligible
from congfac.service.matching import constrained_matching
from congfac.utils.graph import dijkstra
from congfac.utils.parallel import partition_count, run_partitions
from congfac.utils.rng import make_rng

logger = logging.getLogger("congfac")

Distances = Tuple[Dict[int, float], Dict[int, Path]]

def phase_bound(num_sources: int) -> int:
    """
    Expected ceiling on the number of phases for k = 1.
    """
    return math.ceil(math.log2(max(num_sources, 1))) + 2

# >>>>> METRIC >>>>>

def g_distances(inst: Instance, u: int, w: float) -> Distances:
    """
    Distances from u when every edge is priced at w * l_e(w).
    """
    if w <= 0:
        raise DomainError(f"Carried weight must be positive, got {w}!")
    prices = [w * eval_cost(edge.fn, w) for edge in inst.edges]
    return dijkstra(instance_graph(inst), u, lambda e: prices[e])

def g_metric(inst: Instance, u: int, v: int, w: float) -> Tuple[float, Path]:
    """
    Cost of moving weight w from u to v along the cheapest path at per-edge cost w * l_e(w);
    infinite (and no path) when v is unreachable.
    """
    dist, paths = g_distances(inst, u, w)
    if v not in dist:
        return math.inf, None
    return dist[v], paths[v]

class DistanceCache:
    """
    Memo of g-metric trees keyed by (node, weight), valid for one instance.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        self.trees: Dict[Tuple[int, float], Distances] = {}

    def get(self, node: int, w: float) -> Distances:
        key = (node, w)
        if key not in self.trees:
            self.trees[key] = g_distances(self.inst, node, w)
        return self.trees[key]

def pair_cost_K(inst: Instance, u: int, wu: float, v: int, wv: float, cache: DistanceCache=None) -> PairCost:
    """
    K(u, v) = min_z g(u,z,wu) + g(v,z,wv) + wu/W * g(z,u,W) + wv/W * g(z,v,W) with W = wu + wv.
    The meeting point z is the smallest node id among minimizers.
    """
    if cache is None:
        cache = DistanceCache(inst)
    total = wu + wv
    du, pu = cache.get(u, wu)
    dv, pv = cache.get(v, wv)
    Du, Pu = cache.get(u, total)
    Dv, Pv = cache.get(v, total)
    best = math.inf
    meeting = None
    for z in range(inst.n):
        if z not in du or z not in dv:
            continue
        value = du[z] + dv[z] + (wu / total) * Du[z] + (wv / total) * Dv[z]
        if value < best - TOLERANCE:
            best = value
            meeting = z
    if meeting is None:
        return PairCost(u, v, wu, wv, math.inf, None, None, None, None, None, math.inf, math.inf, math.inf, math.inf)
    return PairCost(
        u=u, v=v, wu=wu, wv=wv, K=float(best), meeting=meeting,
        path_u=pu[meeting], path_v=pv[meeting], back_u=Pu[meeting].reversed(), back_v=Pv[meeting].reversed(),
        path_u_cost=float(du[meeting]), path_v_cost=float(dv[meeting]),
        back_u_cost=float(Du[meeting]), back_v_cost=float(Dv[meeting]),
    )

# <<<<< METRIC <<<<<

# >>>>> PHASES >>>>>

def initial_state(inst: Instance) -> PhaseState:
    active = tuple(sorted((source.node, source.w) for source in inst.sources))
    return PhaseState(active=active, members=tuple((node, (node,)) for node, _ in active))

def run_phase(
        inst: Instance, state: PhaseState, k: int, rng: np.random.Generator,
        exact_limit: int=DEFAULT_EXACT_MATCHING_LIMIT
) -> Tuple[PhaseState, PhaseLog]:
    """
    One matching-and-merge phase. Survivor draws take exactly one rng.random() per pair, in
    ascending pair order; u survives when the draw is below wu / (wu + wv).
    """
    n = len(state.active)
    if n <= k:
        raise DomainError(f"Phase needs more than k = {k} active points, got {n}!")
    cache = DistanceCache(inst)
    costs = np.zeros((n, n))
    pair_costs: Dict[Tuple[int, int], PairCost] = {}
    for i in range(n):
        for j in range(i + 1, n):
            (u, wu), (v, wv) = state.active[i], state.active[j]
            pair = pair_cost_K(inst, u, wu, v, wv, cache)
            pair_costs[(i, j)] = pair
            costs[i, j] = costs[j, i] = pair.K
    match = constrained_matching(costs, k, exact_limit)
    if math.isinf(match.cost):
        raise InfeasibleError(f"Phase {state.phase}: active points cannot be paired inside their components (k = {k}).")

    log = PhaseLog(state.phase, state.active)
    log.heuristic = match.heuristic
    log.forced = match.forced
    members = dict(state.members)
    new_active: Dict[int, float] = {}
    for i, j in match.pairs:
        pair = pair_costs[(i, j)]
        total = pair.wu + pair.wv
        log.movements.append(Movement(state.phase, MovementKind.TO_MEETING, pair.u, pair.wu, pair.path_u, pair.path_u_cost))
        log.movements.append(Movement(state.phase, MovementKind.TO_MEETING, pair.v, pair.wv, pair.path_v, pair.path_v_cost))
        if rng.random() < pair.wu / total:
            survivor, back, back_cost = pair.u, pair.back_u, pair.back_u_cost
        else:
            survivor, back, back_cost = pair.v, pair.back_v, pair.back_v_cost
        log.movements.append(Movement(state.phase, MovementKind.BACK_FROM_MEETING, survivor, total, back, back_cost))
        log.pairs.append(pair)
        log.survivors.append(survivor)
        new_active[survivor] = total
        merged = state.members_of(pair.u) + state.members_of(pair.v)
        members.pop(pair.u, None)
        members.pop(pair.v, None)
        members[survivor] = tuple(sorted(merged))
    for i in match.unmatched:
        node, weight = state.active[i]
        log.unmatched.append(node)
        new_active[node] = weight

    new_state = PhaseState(
        active=tuple(sorted(new_active.items())),
        phase=state.phase + 1,
        movements=state.movements + tuple(log.movements),
        members=tuple(sorted((node, members.get(node, (node,))) for node in new_active)),
    )
    logger.debug(f"[run_phase] phase {state.phase}: {n} -> {len(new_active)} active, {len(match.pairs)} pairs, cost {log.cost}")
    return new_state, log

def _advance_walks(walks: Dict[int, Path], state: PhaseState, log: PhaseLog):
    """
    Extend every merged source's walk by its group's movement to the meeting point and back to the survivor.
    """
    for pair, survivor in zip(log.pairs, log.survivors):
        back = pair.back_u if survivor == pair.u else pair.back_v
        for node, to_meeting in ((pair.u, pair.path_u), (pair.v, pair.path_v)):
            for member in state.members_of(node):
                walks[member] = walks[member].concat(to_meeting).concat(back)

def run_k_median(
        inst: Instance, k: int, seed: int, run: int, exact_limit: int=DEFAULT_EXACT_MATCHING_LIMIT
) -> KMedianRun:
    """
    One randomized run with the generator derived from (seed, run).
    """
    rng = make_rng(seed, run)
    state = initial_state(inst)
    walks = {source.node: Path.at(source.node) for source in inst.sources}
    logs: List[PhaseLog] = []
    while len(state.active) > k:
        new_state, log = run_phase(inst, state, k, rng, exact_limit)
        _advance_walks(walks, state, log)
        logs.append(log)
        state = new_state

    facilities = tuple(node for node, _ in state.active)
    assignment = PathAssignment(tuple(PathFlow(source.node, walks[source.node], source.w) for source in inst.sources))
    result = KMedianRun()
    result.run = run
    result.facilities = facilities
    result.phases = len(logs)
    result.solution = Solution(frozenset(facilities), assignment)
    result.routing_cost = routing_cost(inst, edge_flow(inst, assignment))
    result.movement_cost = float(sum(log.cost for log in logs))
    result.logs = logs
    return result

def _run_partition(inst: Instance, k: int, seed: int, runs: List[int], exact_limit: int) -> List[KMedianRun]:
    return [run_k_median(inst, k, seed, run, exact_limit) for run in runs]

# <<<<< PHASES <<<<<

def solve_k_median(
        inst: Instance, k: int, seed: int, repeats: int=DEFAULT_REPEATS, num_workers: int=1,
        exact_limit: int=DEFAULT_EXACT_MATCHING_LIMIT
) -> KMedianResult:
    """
    Best of `repeats` randomized runs, by the routing cost of the superposed movements re-evaluated
    under true congestion; ties go to the lowest run index.
    """
    require_eligible(inst, SolverName.MERGE, ignore=(COMMON_COST_REASON,))
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}!")
    if repeats < 1:
        raise DomainError(f"repeats must be at least 1, got {repeats}!")

    start_time = time.perf_counter()
    result = KMedianResult()
    result.k = k
    if k >= len(inst.sources):
        assignment = PathAssignment(tuple(PathFlow(source.node, Path.at(source.node), source.w) for source in inst.sources))
        result.solution = Solution(frozenset(inst.source_nodes), assignment)
        result.routing_cost = 0.0
        result.phases = 0
        result.best_run = 0
        result.runs = []
        result.logs = []
        return result

    num_partitions = min(partition_count(num_workers), repeats)
    tasks = [
        (inst, k, seed, list(range(partition, repeats, num_partitions)), exact_limit) for partition in range(num_partitions)
    ]
    runs = sorted(
        (run for partition in run_partitions(_run_partition, tasks, num_workers, "solve_k_median") for run in partition),
        key=lambda run: run.run,
    )
    bound = phase_bound(len(inst.sources))
    for run in runs:
        logger.debug(f"[solve_k_median] k = {k}, run {run.run + 1}/{repeats}: phases = {run.phases}, routing = {run.routing_cost}")
        if k == 1 and run.phases > bound:
            logger.warning(f"[solve_k_median] run {run.run} took {run.phases} phases, above the bound {bound}.")
    best = min(runs, key=lambda run: (run.routing_cost, run.run))
    result.solution = best.solution
    result.routing_cost = best.routing_cost
    result.phases = best.phases
    result.best_run = best.run
    result.runs = runs
    result.logs = best.logs
    result.wall_time = time.perf_counter() - start_time
    logger.info(f"[solve_k_median] k = {k}: best of {repeats} runs is run {best.run}, routing = {best.routing_cost}")
    return result

def solve_flcc_merge(
        inst: Instance, seed: int, repeats: int=DEFAULT_REPEATS, num_workers: int=1,
        exact_limit: int=DEFAULT_EXACT_MATCHING_LIMIT
) -> MergeResult:
    """
    Solve the k-median variant for every k = 1..|S| and keep the k minimizing routing + k*B
    (ties to the smaller k). Values of k that cannot be served are skipped.
    """
    require_eligible(inst, SolverName.MERGE)
    per_k: List[KMedianResult] = []
    best = None
    for k in range(1, len(inst.sources) + 1):
        try:
            k_result = solve_k_median(inst, k, seed, repeats, num_workers, exact_limit)
        except InfeasibleError as exception:
            logger.warning(f"[solve_flcc_merge] skipping k = {k}: {exception}")
            continue
        per_k.append(k_result)
        total = k_result.routing_cost + inst.facility_costs.total(k_result.solution.facilities)
        if best is None or total < best[0]:
            best = (total, k_result)
    if best is None:
        raise InfeasibleError("No k admits a solution!")

    total, k_result = best
    result = MergeResult()
    result.k = k_result.k
    result.solution = k_result.solution
    result.routing_cost = k_result.routing_cost
    result.facility_cost = inst.facility_costs.total(k_result.solution.facilities)
    result.total_cost = total
    result.phases = k_result.phases
    result.per_k = per_k
    logger.info(f"[solve_flcc_merge] best k = {result.k}: routing = {result.routing_cost}, total = {result.total_cost}")
    return result

def phase_log_records(result: KMedianResult) -> List[Dict[str, Any]]:
    """
    One JSON-ready record per phase of the reported run.
    """
    records = []
    for log in result.logs:
        record = {"k": result.k, "run": result.best_run}
        record.update(log.to_json())
        records.append(record)
    return records
