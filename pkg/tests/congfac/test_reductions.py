import json
from pathlib import Path
import tempfile

import pytest

from congfac.exceptions import InfeasibleError, InfeasibleSolutionError, InstanceFormatError
from congfac.models import CostDistanceEdge, CostDistanceInstance, PathAssignment, PathFlow, SharedFixed, Solution, Source
from congfac.models import Path as FlowPath
from congfac.service.generators import gen_random_cost_distance
from congfac.service.oracle import brute_force_cost_distance, brute_force_flcc
from congfac.service.reductions import (
    cost_distance_sha1, cost_distance_to_json, dump_cost_distance, extract_cost_distance_solution, load_cost_distance,
    parse_cost_distance, reduce_cost_distance, reduction_facility_cost
)


def test_reduction_facility_cost(parallel_cost_distance):
    # 6 + 2 * 2 * 3 + 1
    assert reduction_facility_cost(parallel_cost_distance) == pytest.approx(19.0)

def test_reduce_cost_distance(parallel_cost_distance):
    inst = reduce_cost_distance(parallel_cost_distance)
    assert not inst.directed
    assert inst.edges[0].fn == SharedFixed(5.0, 0.0, 2.0)
    assert inst.edges[1].fn == SharedFixed(1.0, 3.0, 2.0)
    assert inst.sources == (Source(0, 2.0), Source(1, 2.0))
    assert inst.facility_costs.common == pytest.approx(19.0)

def test_sink_already_a_source():
    cd = CostDistanceInstance(
        n=3, edges=(CostDistanceEdge(0, 1, 1.0, 1.0), CostDistanceEdge(1, 2, 1.0, 1.0)),
        sources=(Source(0, 2.0), Source(1, 1.0)), sink=1,
    )
    inst = reduce_cost_distance(cd)
    assert inst.sources == (Source(0, 2.0), Source(1, 4.0))

def test_reduction_round_trip(parallel_cost_distance):
    inst = reduce_cost_distance(parallel_cost_distance)
    oracle = brute_force_flcc(inst)
    B = reduction_facility_cost(parallel_cost_distance)
    assert len(oracle.facilities) == 1
    assert oracle.cost == pytest.approx(5.0 + B)
    extracted = extract_cost_distance_solution(Solution(frozenset(oracle.facilities), oracle.assignment), parallel_cost_distance)
    expected = brute_force_cost_distance(parallel_cost_distance)
    assert extracted.edges == expected.edges == (0,)
    assert extracted.cost == pytest.approx(expected.cost)

@pytest.mark.parametrize("seed", range(20))
def test_reduction_matches_cost_distance_optimum(seed):
    cd = gen_random_cost_distance(5, 7, 2, seed)
    inst = reduce_cost_distance(cd)
    B = reduction_facility_cost(cd)
    oracle = brute_force_flcc(inst)
    expected = brute_force_cost_distance(cd)
    assert len(oracle.facilities) == 1
    assert oracle.cost == pytest.approx(expected.cost + B, abs=1e-6)
    extracted = extract_cost_distance_solution(Solution(frozenset(oracle.facilities), oracle.assignment), cd)
    assert extracted.cost == pytest.approx(expected.cost, abs=1e-6)

def test_extract_rejects_two_facilities(parallel_cost_distance):
    sol = Solution(frozenset({0, 1}), PathAssignment((PathFlow(0, FlowPath.at(0), 2.0), PathFlow(1, FlowPath.at(1), 2.0))))
    with pytest.raises(InfeasibleSolutionError):
        extract_cost_distance_solution(sol, parallel_cost_distance)

def test_disconnected_cost_distance():
    cd = CostDistanceInstance(n=3, edges=(CostDistanceEdge(0, 1, 1.0, 1.0),), sources=(Source(2, 1.0),), sink=0)
    with pytest.raises(InfeasibleError):
        reduce_cost_distance(cd)

@pytest.mark.parametrize("cd", [
    CostDistanceInstance(n=2, edges=(CostDistanceEdge(0, 1, 1.0, 1.0),), sources=(), sink=1),
    CostDistanceInstance(n=2, edges=(CostDistanceEdge(0, 1, 1.0, 1.0),), sources=(Source(0, 1.0),), sink=2),
    CostDistanceInstance(n=2, edges=(CostDistanceEdge(0, 0, 1.0, 1.0),), sources=(Source(0, 1.0),), sink=1),
    CostDistanceInstance(n=2, edges=(CostDistanceEdge(0, 1, -1.0, 1.0),), sources=(Source(0, 1.0),), sink=1),
    CostDistanceInstance(n=2, edges=(CostDistanceEdge(0, 1, float("inf"), 1.0),), sources=(Source(0, 1.0),), sink=1),
    CostDistanceInstance(n=2, edges=(CostDistanceEdge(0, 1, 1.0, 1.0),), sources=(Source(0, float("nan")),), sink=1),
])
def test_malformed_cost_distance(cd):
    with pytest.raises(InstanceFormatError):
        reduce_cost_distance(cd)

def test_cost_distance_json(parallel_cost_distance):
    with tempfile.TemporaryDirectory() as tmpdir:
        path = Path(tmpdir) / "cd.json"
        dump_cost_distance(parallel_cost_distance, path)
        loaded = load_cost_distance(path)
    assert loaded == parallel_cost_distance
    assert cost_distance_sha1(loaded) == cost_distance_sha1(parallel_cost_distance)
    obj = cost_distance_to_json(parallel_cost_distance)
    obj["edges"][0]["w"] = 1
    with pytest.raises(InstanceFormatError):
        parse_cost_distance(json.dumps(obj))
    obj = cost_distance_to_json(parallel_cost_distance)
    obj["sources"][0]["w"] = float("nan")
    with pytest.raises(InstanceFormatError, match="finite"):
        parse_cost_distance(json.dumps(obj))
