"""
Instance generators: the local-search gap family with its local-move checker, and seeded random instances.
"""
import itertools
import logging
from typing import Callable, Dict, FrozenSet, Iterable, List, Tuple

import numpy as np

from congfac.constants import LOCAL_MOVES_GUARD, TOLERANCE
from congfac.enums import LocalMoveKind, RandomFamily, ReroutingMode
from congfac.exceptions import DomainError, GuardExceededError, InfeasibleError
from congfac.models import (
    Affine, Constant, CostDistanceEdge, CostDistanceInstance, CostFn, Edge, FacilityCosts, GenerateParams, Instance,
    LocalMove, LocalMovesReport, Polynomial, PowerShare, SharedFixed, Source
)
from congfac.service.oracle import min_routing, min_routing_unsplittable
from congfac.utils.rng import make_rng

logger = logging.getLogger("congfac")

# >>>>> LOCAL SEARCH GAP >>>>>

def gen_local_search_gap(k: int, d: int, eps_fac: float) -> Instance:
    """
    Clients c_i (nodes 0..k-1, unit demand) each see a private facility o_i (nodes k..2k-1,
    opening cost eps_fac) over a constant-1 edge and a shared hub S (node 2k, opening cost
    (k-1)^(d+1)) over an edge with l(x) = x^d. Opening S alone is locally optimal while opening
    every o_i is optimal.
    """
    if k < 2 or d < 1:
        raise DomainError(f"Need k >= 2 and d >= 1, got k = {k}, d = {d}!")
    if eps_fac <= 0:
        raise DomainError(f"eps_fac must be positive, got {eps_fac}!")
    hub = 2 * k
    hub_cost = float((k - 1) ** (d + 1))
    edges = [Edge(i, k + i, Constant(1.0)) for i in range(k)]
    edges += [Edge(i, hub, Polynomial(tuple([0.0] * d + [1.0]))) for i in range(k)]
    # clients never pay off as facilities: opening one costs more than the whole hub solution.
    per_node = [hub_cost + k + 1] * k + [float(eps_fac)] * k + [hub_cost]
    return Instance(
        directed=False, n=2 * k + 1, edges=tuple(edges), sources=tuple(Source(i, 1.0) for i in range(k)),
        facility_costs=FacilityCosts(per_node=tuple(per_node)), name=f"local-gap-k{k}-d{d}",
    )

def local_moves(n: int, facilities: FrozenSet[int]) -> Iterable[LocalMove]:
    """
    Open, close (keeping at least one facility) and swap neighbors, without costs.
    """
    closed = [node for node in range(n) if node not in facilities]
    opened = sorted(facilities)
    for node in closed:
        yield LocalMove(LocalMoveKind.OPEN, facilities | {node}, 0.0, opened=node)
    if len(opened) > 1:
        for node in opened:
            yield LocalMove(LocalMoveKind.CLOSE, facilities - {node}, 0.0, closed=node)
    for out, into in itertools.product(opened, closed):
        yield LocalMove(LocalMoveKind.SWAP, (facilities - {out}) | {into}, 0.0, opened=into, closed=out)

def local_moves_check(
        inst: Instance, facilities: Iterable[int], mode: ReroutingMode=ReroutingMode.UNSPLITTABLE,
        guard: int=LOCAL_MOVES_GUARD
) -> LocalMovesReport:
    """
    Evaluate every open/close/swap neighbor of F with optimal rerouting. Unsplittable rerouting
    keeps every source on a single path; splittable rerouting uses the socially optimal
    fractional flow.
    """
    facilities = frozenset(facilities)
    if not facilities:
        raise InfeasibleError("Local search needs at least one open facility!")
    num_closed = inst.n - len(facilities)
    count = num_closed + (len(facilities) if len(facilities) > 1 else 0) + len(facilities) * num_closed
    if count > guard:
        raise GuardExceededError("local_moves", guard, needed=count)
    route: Callable = min_routing_unsplittable if mode == ReroutingMode.UNSPLITTABLE else min_routing

    def total(candidate: FrozenSet[int]) -> float:
        return route(inst, candidate).cost + inst.facility_costs.total(candidate)

    current = total(facilities)
    report = LocalMovesReport()
    report.cost = current
    report.best_move = None
    report.evaluated = 0
    for move in local_moves(inst.n, facilities):
        try:
            cost = total(move.facilities)
        except InfeasibleError:
            continue
        report.evaluated += 1
        if cost < current - TOLERANCE and (report.best_move is None or cost < report.best_move.cost):
            report.best_move = LocalMove(move.kind, move.facilities, cost, move.opened, move.closed)
    report.is_local_opt = report.best_move is None
    logger.info(
        f"[local_moves_check] F = {sorted(facilities)}: cost = {current}, evaluated {report.evaluated} moves, "
        f"local optimum = {report.is_local_opt}"
    )
    return report

# <<<<< LOCAL SEARCH GAP <<<<<

# >>>>> RANDOM INSTANCES >>>>>

DEFAULT_RANGES: Dict[str, Tuple[float, float]] = {
    "b": (0.5, 2.0),
    "a": (0.1, 2.0),
    "coeff": (0.0, 1.0),
    "degree": (2, 2),
    "c": (0.5, 3.0),
    "l": (0.0, 1.0),
    "beta": (0.3, 0.9),
}

def _uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    low, high = bounds
    if low == high:
        return float(low)
    return round(float(rng.uniform(low, high)), 4)

def _random_fn(rng: np.random.Generator, family: RandomFamily, ranges: Dict[str, Tuple[float, float]], w_min: float) -> CostFn:
    if family == RandomFamily.CONSTANT:
        return Constant(_uniform(rng, ranges["b"]))
    elif family == RandomFamily.AFFINE:
        return Affine(_uniform(rng, ranges["a"]), _uniform(rng, ranges["b"]))
    elif family == RandomFamily.POLYNOMIAL:
        low, high = ranges["degree"]
        degree = int(rng.integers(int(low), int(high) + 1))
        return Polynomial(tuple(_uniform(rng, ranges["coeff"]) for _ in range(degree + 1)))
    elif family == RandomFamily.SHARED_FIXED:
        return SharedFixed(_uniform(rng, ranges["c"]), _uniform(rng, ranges["l"]), w_min)
    else:
        return PowerShare(_uniform(rng, ranges["c"]), _uniform(rng, ranges["beta"]), w_min)

def _check_params(params: GenerateParams):
    n, m = params.n, params.m
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}!")
    if not (n - 1 <= m <= n * (n - 1) // 2):
        raise DomainError(f"m = {m} cannot make a connected simple graph on {n} nodes!")
    if not (1 <= params.sources <= n):
        raise DomainError(f"Number of sources must lie in [1, {n}], got {params.sources}!")
    low, high = params.demand_range
    if not (0 < low <= high):
        raise DomainError(f"Invalid demand range {params.demand_range}!")
    low, high = params.facility_cost_range
    if not (0 <= low <= high):
        raise DomainError(f"Invalid facility cost range {params.facility_cost_range}!")
    if params.facility_cost is not None and params.facility_cost < 0:
        raise DomainError(f"Facility cost must be non-negative, got {params.facility_cost}!")
    for key in params.extra:
        if key not in DEFAULT_RANGES:
            raise DomainError(f"Unknown parameter range {key!r}; expected one of {sorted(DEFAULT_RANGES)}")

def _skeleton(rng: np.random.Generator, n: int, m: int) -> List[Tuple[int, int]]:
    """
    Random recursive tree (node v attaches to a uniform earlier node) plus m - n + 1 distinct extra edges.
    """
    pairs = [(int(rng.integers(0, v)), v) for v in range(1, n)]
    tree = set(pairs)
    spare = [pair for pair in itertools.combinations(range(n), 2) if pair not in tree]
    extra = m - len(pairs)
    if extra > 0:
        chosen = rng.choice(len(spare), size=extra, replace=False)
        pairs += [spare[i] for i in sorted(int(i) for i in chosen)]
    return pairs

def gen_random(params: GenerateParams, seed: int) -> Instance:
    """
    Seeded connected instance: a random recursive tree plus extra edges, one cost family on
    every edge, values rounded to four decimals. Directed instances orient edges from the
    lower to the higher node id and always have node 0 as a source.
    """
    _check_params(params)
    try:
        family = RandomFamily(params.family)
    except ValueError:
        raise DomainError(f"Unknown cost family {params.family!r}; expected one of {[f.value for f in RandomFamily]}") from None
    rng = make_rng(seed)
    n = params.n

    pairs = _skeleton(rng, n, params.m)

    if params.directed:
        others = rng.choice(np.arange(1, n), size=params.sources - 1, replace=False) if n > 1 else []
        source_nodes = [0] + sorted(int(node) for node in others)
    else:
        source_nodes = sorted(int(node) for node in rng.choice(n, size=params.sources, replace=False))
    sources = tuple(Source(node, _uniform(rng, params.demand_range)) for node in source_nodes)
    w_min = min(source.w for source in sources)

    ranges = dict(DEFAULT_RANGES)
    ranges.update(params.extra)
    edges = tuple(Edge(u, v, _random_fn(rng, family, ranges, w_min)) for u, v in pairs)
    if params.facility_cost is not None:
        facility_costs = FacilityCosts(common=float(params.facility_cost))
    else:
        facility_costs = FacilityCosts(per_node=tuple(_uniform(rng, params.facility_cost_range) for _ in range(n)))
    name = params.name or f"random-{family.value}-n{n}-m{params.m}-seed{seed}"
    return Instance(params.directed, n, edges, sources, facility_costs, name)

def gen_random_cost_distance(
        n: int, m: int, sources: int, seed: int, cost_range: Tuple[float, float]=(0.0, 5.0),
        length_range: Tuple[float, float]=(0.0, 3.0), demand_range: Tuple[float, float]=(1.0, 3.0)
) -> CostDistanceInstance:
    """
    Seeded connected Cost-Distance instance on the same tree-plus-extra-edges skeleton; the
    sink is drawn among the nodes that are not sources.
    """
    _check_params(GenerateParams(n=n, m=m, sources=sources, family=RandomFamily.SHARED_FIXED.value, demand_range=demand_range))
    if sources >= n:
        raise DomainError(f"Need a node left for the sink: {sources} sources on {n} nodes!")
    rng = make_rng(seed)
    pairs = _skeleton(rng, n, m)
    nodes = [int(node) for node in rng.permutation(n)]
    sink = nodes[0]
    cd_sources = tuple(Source(node, _uniform(rng, demand_range)) for node in sorted(nodes[1:sources + 1]))
    edges = tuple(CostDistanceEdge(u, v, _uniform(rng, cost_range), _uniform(rng, length_range)) for u, v in pairs)
    return CostDistanceInstance(n, edges, cd_sources, sink, f"random-cd-n{n}-m{m}-seed{seed}")
