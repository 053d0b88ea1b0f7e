import pytest

from congfac.enums import SparseMode
from congfac.exceptions import DomainError, GuardExceededError, UnsupportedInstanceError
from congfac.models import Constant, Edge, FacilityCosts, GenerateParams, Instance, Path, Source, SparseParams
from congfac.service.flow import total_cost, verify_eps_nash
from congfac.service.generators import gen_random
from congfac.service.oracle import brute_force_flsc
from congfac.service.sparse import (
    caratheodory_k, default_lipschitz, enumerate_paths, make_params, solve_flcc_sparse, solve_flsc_sparse
)


def test_caratheodory_k():
    # 2 * (M + 1) * (2aM / eps)^2
    assert caratheodory_k(1.0, 1.0, 1) == 16
    assert caratheodory_k(0.5, 1.0, 2, c_k=0.5) == 192
    assert caratheodory_k(1.0, 0.0, 3) == 1
    with pytest.raises(DomainError):
        caratheodory_k(0.0, 1.0, 1)
    with pytest.raises(DomainError):
        caratheodory_k(1.0, 1.0, 0)

def test_make_params(pigou):
    assert default_lipschitz(pigou) == pytest.approx(1.0)
    params = make_params(pigou, 1.0)
    assert params.M == 2
    assert params.a == pytest.approx(1.0)
    assert params.k == caratheodory_k(1.0, 1.0, 2)
    assert make_params(pigou, 1.0, M=1, k=5).k == 5
    with pytest.raises(DomainError):
        make_params(pigou, 1.0, k=0)

def test_enumerate_paths(pigou):
    assert enumerate_paths(pigou, 1) == [Path((0, 1), (0,)), Path((0, 2), (1,))]
    with pytest.raises(DomainError):
        enumerate_paths(pigou, 0)
    with pytest.raises(GuardExceededError):
        enumerate_paths(pigou, 1, guard=1)

def test_sparse_pigou_equilibrium_filter(pigou):
    params = SparseParams(eps=0.1, a=1.0, M=1, k=2)
    result = solve_flsc_sparse(pigou, params)
    assert result.solution.facilities == frozenset({1})
    assert result.multiset == (0, 0)
    assert result.total_cost == pytest.approx(1.1)
    assert result.certificate.holds
    assert result.examined == 4
    assert total_cost(pigou, result.solution) == pytest.approx(result.total_cost)

def test_sparse_pigou_without_filter(pigou):
    params = SparseParams(eps=0.1, a=1.0, M=1, k=2)
    result = solve_flcc_sparse(pigou, params)
    assert result.mode == SparseMode.FLCC
    assert result.solution.facilities == frozenset({1, 2})
    assert result.multiset == (0, 1)
    assert result.total_cost == pytest.approx(0.95)
    assert result.routing_cost == pytest.approx(0.75)
    assert not result.certificate.holds

def test_sparse_larger_eps_admits_split(pigou):
    result = solve_flsc_sparse(pigou, SparseParams(eps=0.6, a=1.0, M=1, k=2))
    assert result.total_cost == pytest.approx(0.95)

def test_sparse_parallel_affine(parallel_affine):
    result = solve_flsc_sparse(parallel_affine, make_params(parallel_affine, 0.1, k=8))
    assert result.multiset == (0, 0, 0, 0, 1, 1, 1, 1)
    assert result.routing_cost == pytest.approx(0.5)
    assert result.total_cost == pytest.approx(1.5)
    assert verify_eps_nash(parallel_affine, result.solution, 0.1).holds

def test_sparse_falls_back_to_source_facility(parallel_affine):
    # k = 1 puts everything on one edge and the idle edge is a profitable deviation
    result = solve_flsc_sparse(parallel_affine, SparseParams(eps=0.5, a=1.0, M=1, k=1))
    assert result.solution.facilities == frozenset({0})
    assert result.multiset == ()
    assert result.routing_cost == 0.0
    assert result.total_cost == pytest.approx(10.0)
    assert result.certificate.holds
    assert result.examined == 3

def test_sparse_prefers_cheap_source_facility(pigou):
    cheap_source = Instance(True, 3, pigou.edges, pigou.sources, FacilityCosts(per_node=(0.5, 0.1, 0.1)))
    result = solve_flsc_sparse(cheap_source, SparseParams(eps=0.5, a=1.0, M=1, k=4))
    assert result.solution.facilities == frozenset({0})
    assert result.total_cost == pytest.approx(0.5)
    assert result.total_cost <= brute_force_flsc(cheap_source).cost + 1e-9
    assert solve_flcc_sparse(cheap_source, SparseParams(eps=0.5, a=1.0, M=1, k=4)).total_cost == pytest.approx(0.5)

def test_sparse_without_out_edges():
    inst = Instance(True, 2, (Edge(1, 0, Constant(1.0)),), (Source(0, 2.0),), FacilityCosts(common=3.0))
    result = solve_flsc_sparse(inst, SparseParams(eps=0.1, a=0.0, M=1, k=2))
    assert result.solution.facilities == frozenset({0})
    assert result.total_cost == pytest.approx(3.0)

@pytest.mark.parametrize("seed", range(5))
def test_sparse_within_bound_when_source_is_optimal(seed):
    # a common opening cost of 1 makes F = {source} optimal, since every route costs more than nothing
    params = GenerateParams(n=4, m=4, sources=1, family="affine", directed=True, facility_cost=1.0)
    inst = gen_random(params, seed)
    eps = 0.5
    result = solve_flsc_sparse(inst, SparseParams(eps=eps, a=1.0, M=3, k=4))
    oracle = brute_force_flsc(inst)
    assert oracle.facilities == (0,)
    assert result.solution.facilities == frozenset({0})
    assert result.total_cost <= oracle.cost + eps / 2 + 1e-9

@pytest.mark.slow
@pytest.mark.parametrize("eps", [0.25, 0.5])
@pytest.mark.parametrize("seed", range(25))
def test_sparse_within_bound_of_brute_force(seed, eps):
    # constant lengths: the equilibrium uses one shortest path, which k copies of a path reproduce
    params = GenerateParams(n=4, m=5, sources=1, family="constant", directed=True, facility_cost=None)
    inst = gen_random(params, seed)
    result = solve_flsc_sparse(inst, make_params(inst, eps, M=3, k=2))
    assert result.certificate.holds
    assert result.total_cost <= brute_force_flsc(inst).cost + eps / 2 + 1e-9

@pytest.mark.parametrize("seed", range(5))
def test_sparse_cost_does_not_grow_with_k(seed, parallel_affine):
    params = GenerateParams(n=4, m=5, sources=1, family="affine", directed=True, facility_cost=None)
    inst = gen_random(params, seed)
    costs = [solve_flsc_sparse(inst, SparseParams(eps=0.5, a=1.0, M=3, k=k)).total_cost for k in (1, 2, 4)]
    assert costs[1] <= costs[0] + 1e-9
    assert costs[2] <= costs[1] + 1e-9
    doubled = [solve_flsc_sparse(parallel_affine, SparseParams(eps=0.1, a=1.0, M=1, k=k)).total_cost for k in (2, 4)]
    assert doubled[1] <= doubled[0] + 1e-9

def test_sparse_guards(parallel_affine, shared_pair):
    with pytest.raises(GuardExceededError):
        solve_flsc_sparse(parallel_affine, SparseParams(eps=0.1, a=1.0, M=1, k=8), iteration_guard=5)
    with pytest.raises(UnsupportedInstanceError):
        solve_flsc_sparse(shared_pair, SparseParams(eps=0.1, a=0.0, M=1, k=2))

@pytest.mark.slow
def test_sparse_worker_count_does_not_change_result(parallel_affine):
    params = SparseParams(eps=0.1, a=1.0, M=1, k=8)
    single = solve_flsc_sparse(parallel_affine, params, num_workers=1)
    pooled = solve_flsc_sparse(parallel_affine, params, num_workers=2)
    assert single.multiset == pooled.multiset
    assert single.total_cost == pooled.total_cost
    assert single.examined == pooled.examined
