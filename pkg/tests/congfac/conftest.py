import pytest

from congfac.models import (
    Affine, Constant, CostDistanceEdge, CostDistanceInstance, Edge, FacilityCosts, Instance, SharedFixed, Source
)


@pytest.fixture
def pigou() -> Instance:
    """
    s = 0 reaches v1 = 1 over l(x) = x and v2 = 2 over l(x) = 1; opening s is expensive.
    """
    return Instance(
        directed=True, n=3,
        edges=(Edge(0, 1, Affine(1.0, 0.0)), Edge(0, 2, Constant(1.0))),
        sources=(Source(0, 1.0),),
        facility_costs=FacilityCosts(per_node=(10.0, 0.1, 0.1)),
        name="pigou",
    )

@pytest.fixture
def parallel_affine() -> Instance:
    return Instance(
        directed=True, n=2,
        edges=(Edge(0, 1, Affine(1.0, 0.0)), Edge(0, 1, Affine(1.0, 0.0))),
        sources=(Source(0, 1.0),),
        facility_costs=FacilityCosts(per_node=(10.0, 1.0)),
        name="parallel-affine",
    )

@pytest.fixture
def shared_pair() -> Instance:
    """
    Two unit sources joined by one shared-fixed edge of build cost 1.
    """
    return Instance(
        directed=False, n=2,
        edges=(Edge(0, 1, SharedFixed(1.0, 0.0, 1.0)),),
        sources=(Source(0, 1.0), Source(1, 1.0)),
        facility_costs=FacilityCosts(common=1.0),
        name="shared-pair",
    )

@pytest.fixture
def shared_path() -> Instance:
    """
    Four unit sources on the path 0 - 1 - 2 - 3.
    """
    return Instance(
        directed=False, n=4,
        edges=tuple(Edge(i, i + 1, SharedFixed(1.0, 0.0, 1.0)) for i in range(3)),
        sources=tuple(Source(i, 1.0) for i in range(4)),
        facility_costs=FacilityCosts(common=2.0),
        name="shared-path",
    )

@pytest.fixture
def hub_routes() -> Instance:
    """
    Sources 0 and 1 reach the facility 3 over private edges of cost 1 or over a hub 2 with
    three edges of cost 0.4.
    """
    private = SharedFixed(1.0, 0.0, 1.0)
    shared = SharedFixed(0.4, 0.0, 1.0)
    return Instance(
        directed=False, n=4,
        edges=(Edge(0, 3, private), Edge(1, 3, private), Edge(0, 2, shared), Edge(1, 2, shared), Edge(2, 3, shared)),
        sources=(Source(0, 1.0), Source(1, 1.0)),
        facility_costs=FacilityCosts(common=5.0),
        name="hub-routes",
    )

@pytest.fixture
def parallel_cost_distance() -> CostDistanceInstance:
    """
    Source 0 (demand 2) and sink 1 joined by a cheap-to-use edge (c=5, l=0) and a cheap-to-build one (c=1, l=3).
    """
    return CostDistanceInstance(
        n=2,
        edges=(CostDistanceEdge(0, 1, 5.0, 0.0), CostDistanceEdge(0, 1, 1.0, 3.0)),
        sources=(Source(0, 2.0),),
        sink=1,
        name="parallel-cd",
    )
