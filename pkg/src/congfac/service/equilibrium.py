"""
Nash flows for a fixed facility set on nondecreasing instances.

The conditional-gradient engine here minimizes a separable convex objective over the flows that
route every source's demand to the facility set. Its linear subproblem is a shortest path to the
nearest facility under the current edge lengths, and the step length comes from bisection on the
derivative of the one-dimensional restriction. With l_e as lengths the objective is the potential
sum_e int_0^{x_e} l_e, whose minimizers are Nash flows; with marginal costs as lengths it is the
routing cost, which gives socially optimal routings.
"""
import logging
import math
from typing import Callable, Dict, FrozenSet, Iterable, List, NamedTuple

import numpy as np

from congfac.constants import DEFAULT_NASH_MAX_ITERS, DEFAULT_NASH_TOL, LINE_SEARCH_TOL
from congfac.enums import FnClassKind
from congfac.exceptions import DomainError, InfeasibleError, UnsupportedInstanceError
from congfac.models import (
    EdgeFlow, EquilibriumResult, FlscBound, Instance, Path, PathAssignment, PathFlow, Solution
)
from congfac.service.costfn import eval_cost, eval_integral, eval_marginal
from congfac.service.flow import edge_flow, nash_slack, routing_cost
from congfac.service.instance import edge_classes, instance_graph
from congfac.utils.graph import dijkstra, nearest_target

logger = logging.getLogger("congfac")

# path amounts below this fraction of the source demand are dropped between iterations.
PRUNE_FRACTION = 1e-12

class DescentOutcome(NamedTuple):
    assignment: PathAssignment
    flow: EdgeFlow
    objective: float
    iterations: int
    converged: bool
    gap: float
    history: List[float]

def potential(inst: Instance, ef: EdgeFlow) -> float:
    """
    Rosenthal-type potential sum_e int_0^{x_e} l_e(t) dt.
    """
    return float(sum(eval_integral(edge.fn, float(ef.x[e])) for e, edge in enumerate(inst.edges)))

def require_nondecreasing(inst: Instance, operation: str):
    for e, edge_class in enumerate(edge_classes(inst)):
        if edge_class.kind != FnClassKind.NONDECREASING_LIPSCHITZ:
            raise UnsupportedInstanceError(
                f"{operation} needs nondecreasing cost functions; edge {e} is {inst.edges[e].fn.kind.value}."
            )

def _lengths(inst: Instance, x: np.ndarray, length_fn: Callable) -> np.ndarray:
    return np.array([length_fn(edge.fn, max(float(x[e]), 0.0)) for e, edge in enumerate(inst.edges)], dtype=float)

def _all_or_nothing(inst: Instance, facilities: FrozenSet[int], lengths: np.ndarray) -> Dict[int, Path]:
    graph = instance_graph(inst)
    targets = {}
    for source in inst.sources:
        dist, paths = dijkstra(graph, source.node, lambda e: float(lengths[e]))
        _, path = nearest_target(dist, paths, facilities)
        if path is None:
            raise InfeasibleError(f"Source {source.node} cannot reach any facility in {sorted(facilities)}!")
        targets[source.node] = path
    return targets

def _assignment(inst: Instance, amounts: Dict[int, Dict[Path, float]]) -> PathAssignment:
    entries = []
    for source in inst.sources:
        for path, amount in amounts[source.node].items():
            entries.append(PathFlow(source.node, path, amount))
    return PathAssignment(tuple(entries))

def _prune(inst: Instance, amounts: Dict[int, Dict[Path, float]]):
    for source in inst.sources:
        kept = {path: amount for path, amount in amounts[source.node].items() if amount > PRUNE_FRACTION * source.w}
        total = sum(kept.values())
        amounts[source.node] = {path: amount * source.w / total for path, amount in kept.items()}

def _line_search(inst: Instance, x: np.ndarray, d: np.ndarray, length_fn: Callable) -> float:
    """
    Step in [0, 1] where the derivative sum_e d_e * length_e(x + alpha*d) changes sign.
    """
    def slope(alpha: float) -> float:
        trial = np.maximum(x + alpha * d, 0.0)
        return float(np.dot(d, _lengths(inst, trial, length_fn)))

    if slope(1.0) <= 0:
        return 1.0
    if slope(0.0) >= 0:
        return 0.0
    low, high = 0.0, 1.0
    while high - low > LINE_SEARCH_TOL:
        mid = (low + high) / 2
        if slope(mid) < 0:
            low = mid
        else:
            high = mid
    return (low + high) / 2

def conditional_gradient(
        inst: Instance, facilities: Iterable[int], length_fn: Callable, objective_fn: Callable[[EdgeFlow], float],
        tol: float, max_iters: int, operation: str
) -> DescentOutcome:
    """
    Minimize objective_fn over feasible flows to facilities, where length_fn(fn, x) is the
    derivative of the per-edge objective term. Stops once the duality gap is at most
    tol * (total demand) or after max_iters iterations.
    """
    facilities = frozenset(facilities)
    if not facilities:
        raise InfeasibleError("No facility is open!")
    if tol <= 0:
        raise ValueError(f"Invalid range for tol: {tol} must be positive.")
    threshold = tol * inst.total_demand

    zero = np.zeros(inst.m)
    start = _all_or_nothing(inst, facilities, _lengths(inst, zero, length_fn))
    amounts: Dict[int, Dict[Path, float]] = {source.node: {start[source.node]: source.w} for source in inst.sources}
    assignment = _assignment(inst, amounts)
    ef = edge_flow(inst, assignment)
    value = objective_fn(ef)
    history = [value]

    gap = math.inf
    converged = False
    iterations = 0
    while True:
        lengths = _lengths(inst, ef.x, length_fn)
        targets = _all_or_nothing(inst, facilities, lengths)
        target_entries = [PathFlow(source.node, targets[source.node], source.w) for source in inst.sources]
        y = edge_flow(inst, PathAssignment(tuple(target_entries)))
        d = y.x - ef.x
        gap = float(-np.dot(lengths, d))
        if gap <= threshold:
            converged = True
            break
        if iterations >= max_iters:
            logger.warning(f"[{operation}] stopped after {iterations} iterations with gap {gap} > {threshold}.")
            break
        alpha = _line_search(inst, ef.x, d, length_fn)
        if alpha <= 0:
            logger.warning(f"[{operation}] line search stalled at gap {gap}.")
            break
        iterations += 1
        for source in inst.sources:
            own = amounts[source.node]
            for path in own:
                own[path] *= (1 - alpha)
            target = targets[source.node]
            own[target] = own.get(target, 0.0) + alpha * source.w
        _prune(inst, amounts)
        assignment = _assignment(inst, amounts)
        ef = edge_flow(inst, assignment)
        new_value = objective_fn(ef)
        if new_value > value + LINE_SEARCH_TOL * max(1.0, abs(value)):
            logger.warning(f"[{operation}] objective increased at iteration {iterations}: {value} -> {new_value}")
        value = new_value
        history.append(value)
        logger.debug(f"[{operation}] iteration {iterations}: alpha = {alpha}, gap = {gap}, objective = {value}")
    return DescentOutcome(assignment, ef, value, iterations, converged, gap, history)

def nash_flow(
        inst: Instance, facilities: Iterable[int], tol: float=DEFAULT_NASH_TOL, max_iters: int=DEFAULT_NASH_MAX_ITERS
) -> EquilibriumResult:
    """
    Approximate Nash flow to the facility set by minimizing the potential.

    The certified slack is the larger of gap / min demand and the slack measured on the final
    flow (costliest used path minus cheapest available path, over sources).
    """
    require_nondecreasing(inst, "nash_flow")
    facilities = frozenset(facilities)
    outcome = conditional_gradient(
        inst, facilities, eval_cost, lambda ef: potential(inst, ef), tol, max_iters, "nash_flow"
    )
    measured = nash_slack(inst, Solution(facilities, outcome.assignment))

    result = EquilibriumResult()
    result.assignment = outcome.assignment
    result.certified_eps = float(max(max(outcome.gap, 0.0) / inst.min_demand, measured, 0.0))
    result.potential_value = outcome.objective
    result.iterations = outcome.iterations
    result.converged = outcome.converged
    result.gap = outcome.gap
    result.potential_history = outcome.history
    logger.debug(
        f"[nash_flow] F = {sorted(facilities)}: iterations = {result.iterations}, gap = {result.gap}, "
        f"certified_eps = {result.certified_eps}"
    )
    return result

def social_optimum(inst: Instance, facilities: Iterable[int], tol: float, max_iters: int=DEFAULT_NASH_MAX_ITERS) -> DescentOutcome:
    """
    Socially optimal routing to the facility set: marginal costs as lengths, routing cost as objective.
    """
    require_nondecreasing(inst, "social_optimum")
    return conditional_gradient(
        inst, facilities, eval_marginal, lambda ef: routing_cost(inst, ef), tol, max_iters, "social_optimum"
    )

def report_flsc_bound(routing: float, facility: float, poa: float) -> FlscBound:
    """
    Analytic FLSC bound poa * routing + facility for a user-supplied price of anarchy.
    """
    if not poa >= 1:
        raise DomainError(f"Price of anarchy must be at least 1, got {poa}!")
    return FlscBound(value=float(poa * routing + facility), routing=float(routing), facility=float(facility), poa=float(poa))
