"""
Graph helpers over networkx multigraphs built from an instance. Edge keys are edge indices,
so parallel edges stay distinguishable and paths can be mapped back to instance edges.
"""
import heapq
import math
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from congfac.exceptions import GuardExceededError
from congfac.models import Path

GraphT = Union[nx.MultiGraph, nx.MultiDiGraph]

def build_graph(n: int, endpoints: Sequence[Tuple[int, int]], directed: bool) -> GraphT:
    """
    Build a multigraph on nodes 0..n-1; edge i joins endpoints[i] and is keyed by i.
    Self-loops and out-of-range endpoints are left out (validation reports them).
    """
    graph = nx.MultiDiGraph() if directed else nx.MultiGraph()
    graph.add_nodes_from(range(n))
    for index, (u, v) in enumerate(endpoints):
        if u == v or not (0 <= u < n and 0 <= v < n):
            continue
        graph.add_edge(u, v, key=index)
    return graph

def neighbors(graph: GraphT, node: int) -> Iterator[Tuple[int, int]]:
    """
    Yield (neighbor, edge index) in ascending (neighbor, edge index) order.
    """
    for nbr in sorted(graph.adj[node]):
        for key in sorted(graph.adj[node][nbr]):
            yield nbr, key

def dijkstra(
        graph: GraphT, source: int, weight: Callable[[int], float]
) -> Tuple[Dict[int, float], Dict[int, Path]]:
    """
    Single-source shortest paths with non-negative edge weights given per edge index.
    Ties between equal-length paths go to the lexicographically smallest node sequence
    (then edge sequence), so results are deterministic. Unreached nodes are absent.
    """
    dist: Dict[int, float] = {}
    paths: Dict[int, Path] = {}
    frontier: List[Tuple[float, Tuple[int, ...], Tuple[int, ...]]] = [(0.0, (source,), ())]
    best: Dict[int, Tuple[float, Tuple[int, ...], Tuple[int, ...]]] = {source: frontier[0]}
    while frontier:
        d, nodes, edges = heapq.heappop(frontier)
        node = nodes[-1]
        if node in dist:
            continue
        dist[node] = d
        paths[node] = Path(nodes, edges)
        for nbr, key in neighbors(graph, node):
            if nbr in dist:
                continue
            w = weight(key)
            if w < 0:
                raise ValueError(f"Negative edge weight {w} on edge {key}!")
            entry = (d + w, nodes + (nbr,), edges + (key,))
            if nbr not in best or entry < best[nbr]:
                best[nbr] = entry
                heapq.heappush(frontier, entry)
    return dist, paths

def nearest_target(
        dist: Dict[int, float], paths: Dict[int, Path], targets: Iterable[int]
) -> Tuple[float, Optional[Path]]:
    """
    Closest target from a dijkstra result; ties go to the smallest node id.
    """
    best_cost = math.inf
    best_path = None
    for target in sorted(targets):
        if target in dist and dist[target] < best_cost:
            best_cost = dist[target]
            best_path = paths[target]
    return best_cost, best_path

def iter_simple_paths(
        graph: GraphT, source: int, targets: Optional[Set[int]]=None, cutoff: Optional[int]=None,
        min_edges: int=0, guard: Optional[int]=None, guard_name: str="paths"
) -> Iterator[Path]:
    """
    Depth-first enumeration of simple paths from source in lexicographic order
    (a path comes before its extensions). With targets, only paths ending in a target
    are yielded; without, every path with at least min_edges edges is.
    """
    count = 0
    stack: List[Tuple[Tuple[int, ...], Tuple[int, ...], Iterator[Tuple[int, int]]]] = [
        ((source,), (), neighbors(graph, source))
    ]
    visited = {source}

    def _accept(nodes: Tuple[int, ...], edges: Tuple[int, ...]) -> bool:
        if len(edges) < min_edges:
            return False
        return targets is None or nodes[-1] in targets

    if _accept((source,), ()):
        count += 1
        yield Path((source,), ())
    while stack:
        nodes, edges, children = stack[-1]
        child = next(children, None)
        if child is None:
            stack.pop()
            visited.discard(nodes[-1])
            continue
        nbr, key = child
        if nbr in visited:
            continue
        new_nodes = nodes + (nbr,)
        new_edges = edges + (key,)
        if _accept(new_nodes, new_edges):
            count += 1
            if guard is not None and count > guard:
                raise GuardExceededError(guard_name, guard, hint="reduce the path length cap or the instance size")
            yield Path(new_nodes, new_edges)
        if cutoff is None or len(new_edges) < cutoff:
            visited.add(nbr)
            stack.append((new_nodes, new_edges, neighbors(graph, nbr)))
