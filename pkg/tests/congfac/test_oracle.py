import pytest

from congfac.exceptions import GuardExceededError, InfeasibleError, UnsupportedInstanceError
from congfac.models import Constant, Edge, FacilityCosts, GenerateParams, Instance, SharedFixed, Source
from congfac.service.generators import gen_random
from congfac.service.oracle import (
    _flcc_partition, _reduce, brute_force_cost_distance, brute_force_flcc, brute_force_flsc, cost_distance_value,
    facility_subsets, flow_support_is_forest, min_routing, min_routing_fixed_F_convex, min_routing_fixed_F_good,
    min_routing_unsplittable, sources_unsplit
)


def test_facility_subsets():
    assert list(facility_subsets(3)) == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]

def test_unsplittable_routing_prefers_shared_hub(hub_routes):
    result = min_routing_fixed_F_good(hub_routes, {3})
    assert result.cost == pytest.approx(1.2)
    paths = {entry.source: entry.path.nodes for entry in result.assignment.entries}
    assert paths == {0: (0, 2, 3), 1: (1, 2, 3)}
    assert flow_support_is_forest(hub_routes, result.assignment)
    assert sources_unsplit(result.assignment)

def test_unsplittable_routing_errors(hub_routes, pigou):
    with pytest.raises(GuardExceededError):
        min_routing_unsplittable(hub_routes, {3}, guard=2)
    with pytest.raises(UnsupportedInstanceError):
        min_routing_fixed_F_good(pigou, {1})
    cut = Instance(True, 3, pigou.edges[:1], pigou.sources, pigou.facility_costs)
    with pytest.raises(InfeasibleError):
        min_routing_unsplittable(cut, {2})

def test_convex_routing_pigou(pigou):
    result = min_routing_fixed_F_convex(pigou, {1, 2}, tol=1e-8)
    assert result.cost == pytest.approx(0.75, abs=1e-6)
    assert min_routing(pigou, {1}).cost == pytest.approx(1.0)

def test_min_routing_rejects_mixed_instances():
    inst = Instance(
        directed=True, n=2, edges=(Edge(0, 1, Constant(1.0)), Edge(0, 1, SharedFixed(1.0, 0.0, 1.0))),
        sources=(Source(0, 1.0),), facility_costs=FacilityCosts(common=1.0),
    )
    with pytest.raises(UnsupportedInstanceError):
        min_routing(inst, {1})

def test_brute_force_pigou(pigou):
    flsc = brute_force_flsc(pigou)
    assert flsc.facilities == (1,)
    assert flsc.cost == pytest.approx(1.1, abs=1e-6)
    flcc = brute_force_flcc(pigou)
    assert flcc.facilities == (1, 2)
    assert flcc.cost == pytest.approx(0.95, abs=1e-6)
    assert flcc.cost <= flsc.cost

def test_brute_force_flcc_good(hub_routes):
    result = brute_force_flcc(hub_routes)
    # one facility: 0.8 routing + 5 opening; nodes 0, 1 and 2 tie and the smallest set wins
    assert result.facilities == (0,)
    assert result.cost == pytest.approx(5.8)
    assert result.routing_cost + result.facility_cost == pytest.approx(result.cost)

def test_partitions_reduce_to_the_same_answer(hub_routes):
    _, single = _reduce(hub_routes, [_flcc_partition(hub_routes, 0, 1)], "test")
    _, strided = _reduce(hub_routes, [_flcc_partition(hub_routes, p, 3) for p in range(3)], "test")
    assert single == strided == (0,)

def test_brute_force_guards(pigou):
    with pytest.raises(GuardExceededError):
        brute_force_flcc(pigou, max_nodes=2)
    broken = Instance(True, 3, pigou.edges, (Source(0, -1.0),), pigou.facility_costs)
    with pytest.raises(UnsupportedInstanceError):
        brute_force_flcc(broken)

def test_cost_distance_oracle(parallel_cost_distance):
    result = brute_force_cost_distance(parallel_cost_distance)
    assert result.edges == (0,)
    assert result.cost == pytest.approx(5.0)
    assert cost_distance_value(parallel_cost_distance, (1,)) == pytest.approx(7.0)
    assert cost_distance_value(parallel_cost_distance, (0, 1)) == pytest.approx(6.0)
    assert cost_distance_value(parallel_cost_distance, ()) == float("inf")
    with pytest.raises(GuardExceededError):
        brute_force_cost_distance(parallel_cost_distance, max_edges=1)

@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_good_optimum_is_unsplit_forest(seed):
    params = GenerateParams(n=6, m=8, sources=3, family="shared_fixed", demand_range=(1.0, 2.0), facility_cost=3.0)
    inst = gen_random(params, seed)
    result = brute_force_flcc(inst)
    assert sources_unsplit(result.assignment)
    assert flow_support_is_forest(inst, result.assignment)
