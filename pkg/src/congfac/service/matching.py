"""
Minimum-cost matchings of a prescribed cardinality on a symmetric cost matrix.
"""
import functools
import logging
import math
from typing import Sequence, Tuple, Union

import numpy as np

from congfac.constants import DEFAULT_EXACT_MATCHING_LIMIT, TOLERANCE
from congfac.exceptions import DomainError
from congfac.models import MatchResult

logger = logging.getLogger("congfac")

Pairs = Tuple[Tuple[int, int], ...]

def _check_costs(costs: np.ndarray):
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
        raise DomainError(f"Cost matrix must be square, got shape {costs.shape}!")
    if np.isnan(costs).any():
        raise DomainError("Cost matrix contains NaN!")
    if (costs < 0).any():
        raise DomainError("Cost matrix contains negative entries!")
    n = costs.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            a, b = costs[i, j], costs[j, i]
            if math.isinf(a) or math.isinf(b):
                if a != b:
                    raise DomainError(f"Cost matrix is not symmetric at ({i}, {j}): {a} != {b}")
            elif abs(a - b) > TOLERANCE * max(1.0, abs(a)):
                raise DomainError(f"Cost matrix is not symmetric at ({i}, {j}): {a} != {b}")

def _exact(costs: np.ndarray, num_pairs: int) -> Tuple[float, Pairs]:
    """
    Bitmask dynamic program: the lowest remaining node is either left unmatched or paired
    with a higher remaining node. Unmatched options are tried first, then partners in ascending
    order, so ties resolve deterministically.
    """
    n = costs.shape[0]

    @functools.lru_cache(maxsize=None)
    def best(mask: int, pairs: int) -> Tuple[float, Pairs]:
        if pairs == 0:
            return 0.0, ()
        free = bin(mask).count("1")
        if free < 2 * pairs:
            return math.inf, ()
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        result = best(rest, pairs) if free - 1 >= 2 * pairs else (math.inf, ())
        for j in range(i + 1, n):
            if not rest & (1 << j):
                continue
            sub_cost, sub_pairs = best(rest & ~(1 << j), pairs - 1)
            candidate = float(costs[i, j]) + sub_cost
            if candidate < result[0]:
                result = (candidate, ((i, j),) + sub_pairs)
        return result

    return best((1 << n) - 1, num_pairs)

def _greedy(costs: np.ndarray, num_pairs: int) -> Tuple[float, Pairs]:
    """
    Repeatedly take the globally cheapest pair of still unmatched nodes.
    """
    n = costs.shape[0]
    candidates = sorted((float(costs[i, j]), i, j) for i in range(n) for j in range(i + 1, n))
    taken = set()
    pairs = []
    total = 0.0
    for cost, i, j in candidates:
        if len(pairs) == num_pairs:
            break
        if i in taken or j in taken:
            continue
        taken.update((i, j))
        pairs.append((i, j))
        total += cost
    return total, tuple(pairs)

def constrained_matching(
        costs: Union[np.ndarray, Sequence[Sequence[float]]], k: int, exact_limit: int=DEFAULT_EXACT_MATCHING_LIMIT
) -> MatchResult:
    """
    Minimum-cost matching with floor((n - k) / 2) pairs, leaving k (or k + 1 on odd parity)
    nodes unmatched. When that cardinality is zero the single cheapest pair is matched instead.
    Exact up to exact_limit nodes, greedy (and flagged heuristic) above.

    Infinite costs are allowed; the result cost is infinite when no finite matching exists.
    """
    costs = np.asarray(costs, dtype=float)
    _check_costs(costs)
    n = costs.shape[0]
    if k < 0:
        raise DomainError(f"Number of unmatched nodes must be non-negative, got {k}!")
    if n <= k:
        raise DomainError(f"Need more than {k} nodes to match, got {n}!")
    num_pairs = (n - k) // 2
    forced = False
    if num_pairs == 0:
        num_pairs = 1
        forced = True

    heuristic = n > exact_limit
    if heuristic:
        logger.warning(f"[constrained_matching] {n} nodes exceed the exact limit {exact_limit}; using greedy matching.")
        cost, pairs = _greedy(costs, num_pairs)
    else:
        cost, pairs = _exact(costs, num_pairs)
    pairs = tuple(sorted(pairs))
    matched = {node for pair in pairs for node in pair}
    unmatched = tuple(node for node in range(n) if node not in matched)
    return MatchResult(pairs=pairs, unmatched=unmatched, cost=float(cost), heuristic=heuristic, forced=forced)
