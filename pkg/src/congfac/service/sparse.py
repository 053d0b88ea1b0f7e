"""
Sparse search for single-source directed instances with nondecreasing Lipschitz costs.

A near-optimal equilibrium can be approximated by a flow that sends w/k units along each
element of a k-multiset of paths, so searching every k-multiset of simple paths from the
source finds a solution within eps/2 of the best FLSC cost. Facilities sit at path endpoints;
the empty multiset stands for opening the source and routing nothing.
"""
import itertools
import logging
import math
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np

from congfac.constants import DEFAULT_C_K, DEFAULT_ITERATION_GUARD, DEFAULT_PATH_GUARD
from congfac.enums import SolverName, SparseMode
from congfac.exceptions import DomainError, GuardExceededError
from congfac.models import EdgeFlow, Instance, Path, PathAssignment, PathFlow, Solution, SparseParams, SparseResult
from congfac.service.costfn import eval_total
from congfac.service.flow import support_graph, verify_eps_nash
from congfac.service.instance import edge_classes, instance_graph, require_eligible
from congfac.utils.graph import iter_simple_paths
from congfac.utils.parallel import partition_count, run_partitions

logger = logging.getLogger("congfac")

# (cost, multiset, examined, skipped cyclic)
PartitionBest = Tuple[float, Optional[Tuple[int, ...]], int, int]

def enumerate_paths(inst: Instance, M: int, guard: int=DEFAULT_PATH_GUARD) -> List[Path]:
    """
    Every simple path from the single source with 1..M edges, in lexicographic order.
    """
    if M < 1:
        raise DomainError(f"Path length cap M must be at least 1, got {M}!")
    source = inst.sources[0].node
    return list(iter_simple_paths(
        instance_graph(inst), source, cutoff=M, min_edges=1, guard=guard, guard_name="path_guard"
    ))

def caratheodory_k(eps: float, a: float, M: int, c_k: float=DEFAULT_C_K) -> int:
    """
    Multiset size k = c_k * p * gamma^2 / eps1^2 with p = 2, gamma^2 = M + 1 and eps1 = eps / (2aM).
    """
    if eps <= 0 or a < 0 or M < 1 or c_k <= 0:
        raise DomainError(f"Invalid sparse parameters: eps={eps}, a={a}, M={M}, c_k={c_k}")
    k = c_k * 2 * (M + 1) * (2 * a * M / eps) ** 2
    return max(1, math.ceil(k - 1e-9))

def default_lipschitz(inst: Instance) -> float:
    """
    Largest structural Lipschitz constant over edges on [0, w_s].
    """
    return float(max((edge_class.lipschitz or 0.0 for edge_class in edge_classes(inst)), default=0.0))

def make_params(
        inst: Instance, eps: float, M: Optional[int]=None, k: Optional[int]=None, a: Optional[float]=None,
        c_k: float=DEFAULT_C_K
) -> SparseParams:
    """
    Fill in defaults: a from the edge classes, M = n - 1, k from the Caratheodory bound.
    """
    if a is None:
        a = default_lipschitz(inst)
    if M is None:
        M = max(1, inst.n - 1)
    if k is None:
        k = caratheodory_k(eps, a, M, c_k)
    elif k < 1:
        raise DomainError(f"Multiset size k must be at least 1, got {k}!")
    return SparseParams(eps=eps, a=a, M=M, k=k, c_k=c_k)

def _incidence(inst: Instance, paths: List[Path]) -> np.ndarray:
    incidence = np.zeros((len(paths), inst.m))
    for i, path in enumerate(paths):
        for e in path.edges:
            incidence[i, e] += 1
    return incidence

def _candidate(inst: Instance, paths: List[Path], multiset: Tuple[int, ...], k: int) -> Solution:
    source = inst.sources[0]
    if not multiset:
        # the empty multiset stands for a facility at the source itself
        return Solution(frozenset({source.node}), PathAssignment((PathFlow(source.node, Path.at(source.node), source.w),)))
    counts = {}
    for index in multiset:
        counts[index] = counts.get(index, 0) + 1
    entries = tuple(
        PathFlow(source.node, paths[index], source.w * count / k) for index, count in sorted(counts.items())
    )
    return Solution(frozenset(paths[index].end for index in counts), PathAssignment(entries))

def _search_partition(
        inst: Instance, paths: List[Path], params: SparseParams, mode: SparseMode, partition: int, num_partitions: int
) -> PartitionBest:
    """
    Best candidate among multisets whose enumeration index falls in this partition.
    """
    k = params.k
    amount = inst.sources[0].w / k
    incidence = _incidence(inst, paths)
    zeros = np.zeros(inst.m)
    best_cost = math.inf
    best_multiset = None
    examined = 0
    skipped = 0
    for index, multiset in enumerate(itertools.combinations_with_replacement(range(len(paths)), k)):
        if index % num_partitions != partition:
            continue
        examined += 1
        counts = np.bincount(multiset, minlength=len(paths))
        x = amount * (counts @ incidence)
        if not nx.is_directed_acyclic_graph(support_graph(inst, EdgeFlow(x, zeros))):
            skipped += 1
            continue
        facilities = {paths[i].end for i in set(multiset)}
        cost = float(sum(eval_total(edge.fn, float(x[e])) for e, edge in enumerate(inst.edges)))
        cost += inst.facility_costs.total(facilities)
        if cost >= best_cost:
            continue
        if mode == SparseMode.FLSC:
            candidate = _candidate(inst, paths, multiset, k)
            if not verify_eps_nash(inst, candidate, params.eps).holds:
                continue
        best_cost = cost
        best_multiset = multiset
    return best_cost, best_multiset, examined, skipped

def _solve(inst: Instance, params: SparseParams, mode: SparseMode, num_workers: int, path_guard: int, iteration_guard: int) -> SparseResult:
    require_eligible(inst, SolverName.SPARSE)
    paths = enumerate_paths(inst, params.M, guard=path_guard)
    needed = math.comb(len(paths) + params.k - 1, params.k) if paths else 0
    if needed > iteration_guard:
        raise GuardExceededError("iteration_guard", iteration_guard, needed=needed, hint="lower k, M or raise eps")
    logger.info(f"[solve_sparse] {len(paths)} paths, k = {params.k}: searching {needed} multisets ({mode.value}).")

    # opening the source and routing nothing is always 0-Nash; () sorts before every multiset
    source = inst.sources[0].node
    found = [(float(inst.facility_costs.total({source})), ())]
    examined = 1
    skipped = 0
    if paths:
        num_partitions = partition_count(num_workers)
        tasks = [(inst, paths, params, mode, partition, num_partitions) for partition in range(num_partitions)]
        results = run_partitions(_search_partition, tasks, num_workers, "solve_sparse")
        examined += sum(result[2] for result in results)
        skipped += sum(result[3] for result in results)
        found.extend((cost, multiset) for cost, multiset, _, _ in results if multiset is not None)
    best_cost, best_multiset = min(found)
    solution = _candidate(inst, paths, best_multiset, params.k)

    result = SparseResult()
    result.solution = solution
    result.certificate = verify_eps_nash(inst, solution, params.eps)
    result.multiset = best_multiset
    result.paths = paths
    result.params = params
    result.mode = mode
    result.facility_cost = inst.facility_costs.total(solution.facilities)
    result.total_cost = best_cost
    result.routing_cost = best_cost - result.facility_cost
    result.examined = examined
    result.skipped_cyclic = skipped
    logger.info(
        f"[solve_sparse] F = {sorted(solution.facilities)}, total = {best_cost}; "
        f"examined {examined}, skipped {skipped} cyclic."
    )
    return result

def solve_flsc_sparse(
        inst: Instance, params: SparseParams, num_workers: int=1, path_guard: int=DEFAULT_PATH_GUARD,
        iteration_guard: int=DEFAULT_ITERATION_GUARD
) -> SparseResult:
    """
    Cheapest candidate that passes the eps-Nash test. Ties go to the lexicographically smallest multiset.
    """
    return _solve(inst, params, SparseMode.FLSC, num_workers, path_guard, iteration_guard)

def solve_flcc_sparse(
        inst: Instance, params: SparseParams, num_workers: int=1, path_guard: int=DEFAULT_PATH_GUARD,
        iteration_guard: int=DEFAULT_ITERATION_GUARD
) -> SparseResult:
    """
    Same search without the equilibrium filter.
    """
    return _solve(inst, params, SparseMode.FLCC, num_workers, path_guard, iteration_guard)
