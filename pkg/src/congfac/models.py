import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import numpy as np

from congfac.enums import CostFnKind, FnClassKind, LocalMoveKind, MovementKind, SolverName, SparseMode

# >>>>> COST FUNCTIONS >>>>>

def _check_nonnegative(name: str, value: float):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise TypeError(f"Incorrect type for {name}: {type(value)}!")
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"Invalid range for {name}: {value}")

def _check_positive(name: str, value: float):
    _check_nonnegative(name, value)
    if value <= 0:
        raise ValueError(f"Invalid range for {name}: {value} must be positive.")

@dataclass(frozen=True)
class Constant:
    """
    l(x) = b
    """
    b: float

    def __post_init__(self):
        _check_nonnegative("b", self.b)

    @property
    def kind(self) -> CostFnKind:
        return CostFnKind.CONSTANT

@dataclass(frozen=True)
class Affine:
    """
    l(x) = a*x + b
    """
    a: float
    b: float

    def __post_init__(self):
        _check_nonnegative("a", self.a)
        _check_nonnegative("b", self.b)

    @property
    def kind(self) -> CostFnKind:
        return CostFnKind.AFFINE

@dataclass(frozen=True)
class Polynomial:
    """
    l(x) = sum_j coeffs[j] * x^j
    """
    coeffs: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        for j, coeff in enumerate(self.coeffs):
            _check_nonnegative(f"coeffs[{j}]", coeff)

    @property
    def kind(self) -> CostFnKind:
        return CostFnKind.POLYNOMIAL

@dataclass(frozen=True)
class SharedFixed:
    """
    l(x) = c/x + l for x >= w_min, and c/w_min + l below w_min, so that x*l(x) -> 0 as x -> 0.
    """
    c: float
    l: float
    w_min: float

    def __post_init__(self):
        _check_nonnegative("c", self.c)
        _check_nonnegative("l", self.l)
        _check_positive("w_min", self.w_min)

    @property
    def kind(self) -> CostFnKind:
        return CostFnKind.SHARED_FIXED

@dataclass(frozen=True)
class PowerShare:
    """
    l(x) = c * x^(beta-1) for x > 0, with l(0) = l(w_floor).
    """
    c: float
    beta: float
    w_floor: float

    def __post_init__(self):
        _check_nonnegative("c", self.c)
        _check_positive("beta", self.beta)
        if self.beta > 1:
            raise ValueError(f"Invalid range for beta: {self.beta} must lie in (0, 1].")
        _check_positive("w_floor", self.w_floor)

    @property
    def kind(self) -> CostFnKind:
        return CostFnKind.POWER_SHARE

CostFn = Union[Constant, Affine, Polynomial, SharedFixed, PowerShare]

@dataclass(frozen=True)
class FnClass:
    kind: FnClassKind
    lipschitz: Optional[float] = None

    def to_json(self) -> dict:
        data = {"class": self.kind.value}
        if self.lipschitz is not None:
            data["lipschitz"] = self.lipschitz
        return data

# <<<<< COST FUNCTIONS <<<<<

# >>>>> INSTANCE >>>>>

@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    fn: CostFn

@dataclass(frozen=True)
class Source:
    node: int
    w: float

@dataclass(frozen=True)
class FacilityCosts:
    """
    Either a common opening cost B for every node, or one cost per node.
    """
    common: Optional[float] = None
    per_node: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if (self.common is None) == (self.per_node is None):
            raise ValueError("Facility costs need exactly one of common or per_node!")
        if self.per_node is not None:
            object.__setattr__(self, "per_node", tuple(self.per_node))

    @property
    def is_common(self) -> bool:
        return self.common is not None

    def cost(self, node: int) -> float:
        if self.common is not None:
            return self.common
        return self.per_node[node]

    def total(self, facilities: Iterable[int]) -> float:
        return float(sum(self.cost(node) for node in facilities))

@dataclass(frozen=True)
class Instance:
    """
    An FLCC/FLSC instance: network, congestion cost functions, sources with demands
    and per-node facility opening costs. Immutable and safe to share between workers.
    """
    directed: bool
    n: int
    edges: Tuple[Edge, ...]
    sources: Tuple[Source, ...]
    facility_costs: FacilityCosts
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "sources", tuple(self.sources))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def source_nodes(self) -> Tuple[int, ...]:
        return tuple(source.node for source in self.sources)

    @property
    def total_demand(self) -> float:
        return float(sum(source.w for source in self.sources))

    @property
    def min_demand(self) -> float:
        return float(min(source.w for source in self.sources))

    def demand_of(self, node: int) -> float:
        return float(sum(source.w for source in self.sources if source.node == node))

# <<<<< INSTANCE <<<<<

# >>>>> FLOWS >>>>>

@dataclass(frozen=True)
class Path:
    """
    A walk through the instance: node sequence plus the index of the edge used for every hop.
    A single node with no edges is the zero-length path.
    """
    nodes: Tuple[int, ...]
    edges: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        if not self.nodes:
            raise ValueError("Path cannot be empty!")
        if len(self.edges) != len(self.nodes) - 1:
            raise ValueError(f"Path has {len(self.nodes)} nodes but {len(self.edges)} edges!")

    @classmethod
    def at(cls, node: int) -> "Path":
        return cls((node,), ())

    @property
    def start(self) -> int:
        return self.nodes[0]

    @property
    def end(self) -> int:
        return self.nodes[-1]

    @property
    def length(self) -> int:
        return len(self.edges)

    def hops(self) -> Iterable[Tuple[int, int, int]]:
        """
        Yield (from, to, edge index) for every hop.
        """
        for i, edge in enumerate(self.edges):
            yield self.nodes[i], self.nodes[i+1], edge

    def reversed(self) -> "Path":
        return Path(self.nodes[::-1], self.edges[::-1])

    def concat(self, other: "Path") -> "Path":
        if self.end != other.start:
            raise ValueError(f"Cannot join path ending at {self.end} with path starting at {other.start}!")
        return Path(self.nodes + other.nodes[1:], self.edges + other.edges)

@dataclass(frozen=True)
class PathFlow:
    source: int
    path: Path
    amount: float

@dataclass(frozen=True)
class PathAssignment:
    entries: Tuple[PathFlow, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def by_source(self) -> Dict[int, List[PathFlow]]:
        grouped: Dict[int, List[PathFlow]] = {}
        for entry in self.entries:
            grouped.setdefault(entry.source, []).append(entry)
        return grouped

class EdgeFlow:
    """
    Aggregate flow per edge. For undirected instances the forward (u->v as stored) and
    backward components are kept separately and add up in x.
    """

    def __init__(self, forward: np.ndarray, backward: np.ndarray):
        self.forward = forward
        self.backward = backward
        self.x = forward + backward

    def directional(self, edge: int, forward: bool) -> float:
        return float(self.forward[edge] if forward else self.backward[edge])

    def __repr__(self):
        return f"EdgeFlow(x={self.x.tolist()})"

@dataclass(frozen=True)
class Solution:
    facilities: FrozenSet[int]
    assignment: PathAssignment

    def __post_init__(self):
        object.__setattr__(self, "facilities", frozenset(self.facilities))

# <<<<< FLOWS <<<<<

# >>>>> REPORTS >>>>>

class ValidationReport:
    """
    Result of validate_instance. Report-only: nothing is raised for a bad instance.
    """

    def __init__(self):
        self.violations: List[str] = []
        self.edge_classes: List[FnClass] = []
        self.instance_class: FnClass = FnClass(FnClassKind.NEITHER)
        self.unreachable: Dict[int, List[int]] = {}
        self.eligible: List[SolverName] = []
        self.reasons: Dict[SolverName, List[str]] = {}

    def is_eligible(self, solver: SolverName) -> bool:
        return solver in self.eligible

    def to_json(self) -> dict:
        return {
            "violations": list(self.violations),
            "edge_classes": [edge_class.to_json() for edge_class in self.edge_classes],
            "instance_class": self.instance_class.to_json(),
            "unreachable": {str(source): nodes for source, nodes in sorted(self.unreachable.items())},
            "eligible": [solver.value for solver in self.eligible],
            "reasons": {solver.value: reasons for solver, reasons in self.reasons.items()},
        }

    def __repr__(self) -> str:
        return str(self.to_json())

class NashCertificate:
    """
    Outcome of an eps-Nash check with the three path costs and witness paths.
    """
    holds: bool
    eps: float
    c_min: float
    c_max: float
    c_sp: float
    min_path: Path
    max_path: Path
    sp_path: Path

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "eps": self.eps,
            "c_min": self.c_min,
            "c_max": self.c_max,
            "c_sp": self.c_sp,
            "min_path": list(self.min_path.nodes),
            "max_path": list(self.max_path.nodes),
            "sp_path": list(self.sp_path.nodes),
        }

class EquilibriumResult:
    assignment: PathAssignment
    certified_eps: float
    potential_value: float
    iterations: int
    converged: bool
    gap: float
    potential_history: List[float]

    def to_json(self) -> dict:
        return {
            "certified_eps": self.certified_eps,
            "potential_value": self.potential_value,
            "iterations": self.iterations,
            "converged": self.converged,
            "gap": self.gap,
        }

class RoutingResult:
    """
    Routing cost for a fixed facility set together with the assignment achieving it.
    """
    cost: float
    assignment: PathAssignment
    gap: float = 0.0

@dataclass(frozen=True)
class FlscBound:
    value: float
    routing: float
    facility: float
    poa: float
    label: str = "bound, not measurement"

    def to_json(self) -> dict:
        return {"value": self.value, "routing": self.routing, "facility": self.facility, "poa": self.poa, "label": self.label}

# <<<<< REPORTS <<<<<

# >>>>> SPARSE SOLVER >>>>>

@dataclass(frozen=True)
class SparseParams:
    """
    eps: Nash slack; a: Lipschitz constant; M: path length cap (edges); k: multiset size;
    c_k: constant inside k = O(a^2 M^3 / eps^2).
    """
    eps: float
    a: float
    M: int
    k: int
    c_k: float = 1.0

class SparseResult:
    solution: Solution
    certificate: Optional[NashCertificate]
    multiset: Tuple[int, ...]
    paths: List[Path]
    params: SparseParams
    mode: SparseMode
    total_cost: float
    routing_cost: float
    facility_cost: float
    examined: int
    skipped_cyclic: int

# <<<<< SPARSE SOLVER <<<<<

# >>>>> MERGE SOLVER >>>>>

@dataclass(frozen=True)
class Movement:
    phase: int
    kind: MovementKind
    origin: int
    weight: float
    path: Path
    cost: float

    def to_json(self) -> dict:
        return {
            "phase": self.phase,
            "kind": self.kind.value,
            "origin": self.origin,
            "weight": self.weight,
            "path": list(self.path.nodes),
            "edges": list(self.path.edges),
            "cost": self.cost,
        }

@dataclass(frozen=True)
class PhaseState:
    """
    active: (node, aggregated weight) pairs sorted by node; members maps an active node to the
    original sources merged into it; movements accumulate over all phases so far.
    """
    active: Tuple[Tuple[int, float], ...]
    phase: int = 0
    movements: Tuple[Movement, ...] = ()
    members: Tuple[Tuple[int, Tuple[int, ...]], ...] = ()

    @property
    def total_weight(self) -> float:
        return float(sum(weight for _, weight in self.active))

    def members_of(self, node: int) -> Tuple[int, ...]:
        return dict(self.members).get(node, (node,))

@dataclass(frozen=True)
class PairCost:
    """
    Pairing cost K(u, v) at the best meeting point z with the four stored paths.
    """
    u: int
    v: int
    wu: float
    wv: float
    K: float
    meeting: Optional[int]
    path_u: Optional[Path]
    path_v: Optional[Path]
    back_u: Optional[Path]
    back_v: Optional[Path]
    path_u_cost: float
    path_v_cost: float
    back_u_cost: float
    back_v_cost: float

    @property
    def to_meeting_cost(self) -> float:
        return self.path_u_cost + self.path_v_cost

    @property
    def expected_back_cost(self) -> float:
        total = self.wu + self.wv
        return (self.wu / total) * self.back_u_cost + (self.wv / total) * self.back_v_cost

@dataclass(frozen=True)
class MatchResult:
    pairs: Tuple[Tuple[int, int], ...]
    unmatched: Tuple[int, ...]
    cost: float
    heuristic: bool = False
    forced: bool = False

class PhaseLog:
    """
    Per-phase record of the merge algorithm.
    """

    def __init__(self, phase: int, active: Tuple[Tuple[int, float], ...]):
        self.phase = phase
        self.active = active
        self.pairs: List[PairCost] = []
        self.unmatched: List[int] = []
        self.survivors: List[int] = []
        self.movements: List[Movement] = []
        self.heuristic = False
        self.forced = False

    @property
    def cost(self) -> float:
        return float(sum(movement.cost for movement in self.movements))

    @property
    def to_meeting_cost(self) -> float:
        return float(sum(movement.cost for movement in self.movements if movement.kind == MovementKind.TO_MEETING))

    def to_json(self) -> dict:
        return {
            "phase": self.phase,
            "active": [[node, weight] for node, weight in self.active],
            "matching": [
                {"u": pair.u, "v": pair.v, "meeting": pair.meeting, "K": pair.K, "survivor": survivor}
                for pair, survivor in zip(self.pairs, self.survivors)
            ],
            "unmatched": list(self.unmatched),
            "heuristic": self.heuristic,
            "forced": self.forced,
            "movements": [movement.to_json() for movement in self.movements],
            "cost": self.cost,
        }

class KMedianRun:
    run: int
    facilities: Tuple[int, ...]
    phases: int
    routing_cost: float
    movement_cost: float
    solution: Solution
    logs: List[PhaseLog]

class KMedianResult:
    k: int
    solution: Solution
    routing_cost: float
    phases: int
    best_run: int
    runs: List[KMedianRun]
    logs: List[PhaseLog]
    wall_time: float = 0.0

class MergeResult:
    k: int
    solution: Solution
    routing_cost: float
    facility_cost: float
    total_cost: float
    phases: int
    per_k: List[KMedianResult]

# <<<<< MERGE SOLVER <<<<<

# >>>>> ORACLE >>>>>

class OracleResult:
    facilities: Tuple[int, ...]
    cost: float
    routing_cost: float
    facility_cost: float
    assignment: Optional[PathAssignment]

    def to_json(self) -> dict:
        return {
            "facilities": list(self.facilities),
            "cost": self.cost,
            "routing_cost": self.routing_cost,
            "facility_cost": self.facility_cost,
        }

@dataclass(frozen=True)
class CostDistanceResult:
    edges: Tuple[int, ...]
    cost: float

    def to_json(self) -> dict:
        return {"edges": list(self.edges), "cost": self.cost}

# <<<<< ORACLE <<<<<

# >>>>> REDUCTIONS >>>>>

@dataclass(frozen=True)
class CostDistanceEdge:
    u: int
    v: int
    c: float
    l: float

@dataclass(frozen=True)
class CostDistanceInstance:
    """
    Undirected graph with per-edge build cost c and length l, weighted sources and one sink.
    """
    n: int
    edges: Tuple[CostDistanceEdge, ...]
    sources: Tuple[Source, ...]
    sink: int
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "sources", tuple(self.sources))

    @property
    def m(self) -> int:
        return len(self.edges)

@dataclass(frozen=True)
class LocalMove:
    kind: LocalMoveKind
    facilities: FrozenSet[int]
    cost: float
    opened: Optional[int] = None
    closed: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "opened": self.opened,
            "closed": self.closed,
            "facilities": sorted(self.facilities),
            "cost": self.cost,
        }

class LocalMovesReport:
    is_local_opt: bool
    cost: float
    best_move: Optional[LocalMove]
    evaluated: int

    def to_json(self) -> dict:
        return {
            "is_local_opt": self.is_local_opt,
            "cost": self.cost,
            "best_move": self.best_move.to_json() if self.best_move else None,
            "evaluated": self.evaluated,
        }

@dataclass(frozen=True)
class GenerateParams:
    """
    Parameters for seeded random instances. Ranges are closed intervals (low, high).
    """
    n: int
    m: int
    sources: int
    family: str
    demand_range: Tuple[float, float] = (1.0, 1.0)
    facility_cost: Optional[float] = 1.0
    facility_cost_range: Tuple[float, float] = (0.0, 2.0)
    directed: bool = False
    name: str = ""
    extra: Dict[str, Tuple[float, float]] = field(default_factory=dict)

# <<<<< REDUCTIONS <<<<<
