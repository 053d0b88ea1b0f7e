import pytest

from congfac.enums import FnClassKind, LocalMoveKind, ReroutingMode
from congfac.exceptions import DomainError, GuardExceededError, InfeasibleError
from congfac.models import GenerateParams
from congfac.service.generators import (
    gen_local_search_gap, gen_random, gen_random_cost_distance, local_moves, local_moves_check
)
from congfac.service.instance import instance_sha1, validate_instance
from congfac.service.oracle import min_routing_unsplittable
from congfac.service.reductions import reduce_cost_distance


def test_local_search_gap_shape():
    inst = gen_local_search_gap(3, 1, 0.1)
    assert inst.n == 7
    assert inst.m == 6
    assert inst.facility_costs.per_node == (8.0, 8.0, 8.0, 0.1, 0.1, 0.1, 4.0)
    assert validate_instance(inst).instance_class.kind == FnClassKind.NONDECREASING_LIPSCHITZ

def test_hub_is_a_local_optimum():
    k, d = 3, 1
    inst = gen_local_search_gap(k, d, 0.1)
    hub = 2 * k
    report = local_moves_check(inst, {hub})
    assert report.is_local_opt
    assert report.best_move is None
    assert report.cost == pytest.approx(k + (k - 1) ** (d + 1))
    # all private facilities: k * (1 + eps_fac)
    private = set(range(k, 2 * k))
    optimum = min_routing_unsplittable(inst, private).cost + inst.facility_costs.total(private)
    assert optimum == pytest.approx(3.3)
    assert report.cost / optimum > 2

@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("k", [4, pytest.param(8, marks=pytest.mark.slow)])
def test_hub_gap_grows_with_k_and_d(k, d):
    eps_fac = 0.01
    inst = gen_local_search_gap(k, d, eps_fac)
    report = local_moves_check(inst, {2 * k})
    assert report.is_local_opt
    assert report.cost == pytest.approx(k + (k - 1) ** (d + 1))
    # every client on its private facility; enumerating that routing exceeds the assignment guard for k = 8
    optimum = k * (1 + eps_fac)
    assert report.cost / optimum >= (k - 1) ** (d + 1) / (k * (1 + eps_fac) + k)

def test_local_moves_finds_improvement():
    inst = gen_local_search_gap(3, 1, 0.1)
    report = local_moves_check(inst, {0})
    assert not report.is_local_opt
    assert report.best_move.cost < report.cost
    assert report.best_move.kind in (LocalMoveKind.OPEN, LocalMoveKind.SWAP)

def test_local_moves_enumeration():
    moves = list(local_moves(3, frozenset({0, 1})))
    kinds = [move.kind for move in moves]
    assert kinds.count(LocalMoveKind.OPEN) == 1
    assert kinds.count(LocalMoveKind.CLOSE) == 2
    assert kinds.count(LocalMoveKind.SWAP) == 2
    single = list(local_moves(3, frozenset({0})))
    assert not any(move.kind == LocalMoveKind.CLOSE for move in single)

def test_local_moves_check_errors():
    inst = gen_local_search_gap(3, 1, 0.1)
    with pytest.raises(InfeasibleError):
        local_moves_check(inst, set())
    with pytest.raises(GuardExceededError):
        local_moves_check(inst, {6}, guard=3)
    with pytest.raises(DomainError):
        gen_local_search_gap(1, 1, 0.1)
    with pytest.raises(DomainError):
        gen_local_search_gap(3, 1, 0.0)

@pytest.mark.slow
def test_splittable_rerouting():
    inst = gen_local_search_gap(3, 1, 0.1)
    report = local_moves_check(inst, {6}, mode=ReroutingMode.SPLITTABLE)
    assert report.evaluated > 0

def test_gen_random_is_seeded():
    params = GenerateParams(n=8, m=12, sources=3, family="affine")
    first = gen_random(params, seed=42)
    assert instance_sha1(first) == instance_sha1(gen_random(params, seed=42))
    assert instance_sha1(first) != instance_sha1(gen_random(params, seed=43))
    assert first.m == 12
    assert len(first.sources) == 3
    report = validate_instance(first)
    assert not report.violations
    assert not report.unreachable

def test_gen_random_shared_fixed_is_good():
    params = GenerateParams(n=6, m=7, sources=2, family="shared_fixed", facility_cost=None, facility_cost_range=(1.0, 2.0))
    inst = gen_random(params, seed=1)
    report = validate_instance(inst)
    assert all(edge_class.kind == FnClassKind.GOOD for edge_class in report.edge_classes)
    assert all(1.0 <= cost <= 2.0 for cost in inst.facility_costs.per_node)

def test_gen_random_directed():
    params = GenerateParams(n=7, m=9, sources=2, family="polynomial", directed=True)
    inst = gen_random(params, seed=5)
    assert inst.sources[0].node == 0
    assert all(edge.u < edge.v for edge in inst.edges)
    assert 0 not in validate_instance(inst).unreachable

@pytest.mark.parametrize("params", [
    GenerateParams(n=4, m=2, sources=1, family="affine"),
    GenerateParams(n=4, m=7, sources=1, family="affine"),
    GenerateParams(n=4, m=3, sources=5, family="affine"),
    GenerateParams(n=4, m=3, sources=1, family="cubic"),
    GenerateParams(n=4, m=3, sources=1, family="affine", extra={"gamma": (0.0, 1.0)}),
])
def test_gen_random_rejects_bad_params(params):
    with pytest.raises(DomainError):
        gen_random(params, seed=0)

def test_gen_random_cost_distance():
    cd = gen_random_cost_distance(6, 8, 3, seed=2)
    assert cd.sink not in {source.node for source in cd.sources}
    assert len(cd.sources) == 3
    inst = reduce_cost_distance(cd)
    assert len(inst.sources) == 4
    with pytest.raises(DomainError):
        gen_random_cost_distance(3, 2, 3, seed=0)
