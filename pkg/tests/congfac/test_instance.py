import json
from pathlib import Path
import tempfile

import pytest

from congfac.enums import FnClassKind, SolverName
from congfac.exceptions import InstanceFormatError, UnsupportedInstanceError
from congfac.models import Affine, Constant, Edge, FacilityCosts, Instance, PowerShare, SharedFixed, Source
from congfac.service.instance import (
    COMMON_COST_REASON, dump_instance, instance_sha1, instance_to_json, load_instance, parse_instance, require_eligible,
    serialize_instance, validate_instance
)


def test_validate_pigou(pigou):
    report = validate_instance(pigou)
    assert not report.violations
    assert report.eligible == [SolverName.SPARSE]
    assert "requires an undirected instance" in report.reasons[SolverName.MERGE]
    assert report.instance_class.kind == FnClassKind.NONDECREASING_LIPSCHITZ
    assert report.instance_class.lipschitz == pytest.approx(1.0)
    assert not report.unreachable

def test_validate_shared_pair(shared_pair):
    report = validate_instance(shared_pair)
    assert report.eligible == [SolverName.MERGE]
    assert any("exactly one source" in reason for reason in report.reasons[SolverName.SPARSE])
    assert all(edge_class.kind == FnClassKind.GOOD for edge_class in report.edge_classes)

def test_validate_violations():
    inst = Instance(
        directed=False, n=3,
        edges=(Edge(0, 0, Constant(1.0)), Edge(1, 5, Constant(1.0))),
        sources=(Source(1, 1.0), Source(1, 2.0), Source(4, 1.0), Source(2, -1.0)),
        facility_costs=FacilityCosts(per_node=(1.0, 1.0)),
    )
    report = validate_instance(inst)
    violations = " | ".join(report.violations)
    assert "self-loop" in violations
    assert "outside [0, 3)" in violations
    assert "appears more than once" in violations
    assert "non-positive or non-finite demand" in violations
    assert "2 entries for 3 nodes" in violations
    assert not report.eligible

def test_validate_unreachable():
    inst = Instance(
        directed=True, n=3, edges=(Edge(1, 0, Constant(1.0)), Edge(0, 2, Constant(1.0))),
        sources=(Source(0, 1.0),), facility_costs=FacilityCosts(common=1.0),
    )
    assert validate_instance(inst).unreachable == {0: [1]}

def test_mixed_classes_block_both_solvers():
    inst = Instance(
        directed=True, n=2, edges=(Edge(0, 1, Constant(1.0)), Edge(0, 1, SharedFixed(1.0, 0.0, 1.0))),
        sources=(Source(0, 1.0),), facility_costs=FacilityCosts(common=1.0),
    )
    report = validate_instance(inst)
    assert report.instance_class.kind == FnClassKind.NEITHER
    assert "mixed class" in report.reasons[SolverName.SPARSE]
    assert "mixed class" in report.reasons[SolverName.MERGE]

def test_require_eligible(pigou, shared_pair):
    with pytest.raises(UnsupportedInstanceError):
        require_eligible(pigou, SolverName.MERGE)
    per_node = Instance(
        False, shared_pair.n, shared_pair.edges, shared_pair.sources, FacilityCosts(per_node=(1.0, 2.0))
    )
    with pytest.raises(UnsupportedInstanceError):
        require_eligible(per_node, SolverName.MERGE)
    require_eligible(per_node, SolverName.MERGE, ignore=(COMMON_COST_REASON,))

def test_instance_json_round_trip(pigou):
    with tempfile.TemporaryDirectory() as tmpdir:
        path = Path(tmpdir) / "pigou.json"
        dump_instance(pigou, path)
        assert load_instance(path) == pigou
        assert load_instance(str(path)) == pigou

def test_power_share_floor_defaults_to_min_demand():
    obj = {
        "directed": False, "n": 2,
        "edges": [{"u": 0, "v": 1, "fn": {"kind": "power_share", "params": {"c": 1.0, "beta": 0.5}}}],
        "sources": [{"node": 0, "w": 3.0}, {"node": 1, "w": 0.5}],
        "facility_costs": {"common": 1.0},
    }
    inst = parse_instance(json.dumps(obj))
    assert inst.edges[0].fn == PowerShare(1.0, 0.5, 0.5)
    assert inst.name == ""

@pytest.mark.parametrize("mutate", [
    lambda obj: obj.update({"extra": 1}),
    lambda obj: obj.pop("sources"),
    lambda obj: obj.update({"n": "three"}),
    lambda obj: obj.update({"directed": 1}),
    lambda obj: obj["edges"][0]["fn"].update({"kind": "cubic"}),
    lambda obj: obj["edges"][0]["fn"]["params"].update({"c": 1.0}),
    lambda obj: obj["edges"][0]["fn"]["params"].update({"a": -1.0}),
    lambda obj: obj.update({"facility_costs": {"common": 1.0, "per_node": [1.0, 1.0, 1.0]}}),
    lambda obj: obj["sources"][0].update({"w": float("nan")}),
    lambda obj: obj.update({"facility_costs": {"common": float("inf")}}),
    lambda obj: obj["edges"][1]["fn"]["params"].update({"b": float("-inf")}),
])
def test_instance_format_errors(pigou, mutate):
    obj = instance_to_json(pigou)
    mutate(obj)
    with pytest.raises(InstanceFormatError):
        parse_instance(json.dumps(obj))

def test_parse_rejects_non_finite_literals():
    text = (
        '{"directed": true, "n": 2, "edges": [{"u": 0, "v": 1, "fn": {"kind": "constant", "params": {"b": 1.0}}}],'
        ' "sources": [{"node": 0, "w": NaN}], "facility_costs": {"common": Infinity}}'
    )
    with pytest.raises(InstanceFormatError, match="finite"):
        parse_instance(text)

def test_validate_non_finite_values():
    inst = Instance(
        directed=True, n=2, edges=(Edge(0, 1, Constant(1.0)),),
        sources=(Source(0, float("nan")),), facility_costs=FacilityCosts(common=float("inf")),
    )
    report = validate_instance(inst)
    violations = " | ".join(report.violations)
    assert "non-finite demand" in violations
    assert "not finite" in violations
    assert not report.eligible
    per_node = Instance(True, 2, inst.edges, (Source(0, 1.0),), FacilityCosts(per_node=(1.0, float("nan"))))
    assert validate_instance(per_node).violations

def test_parse_invalid_json():
    with pytest.raises(InstanceFormatError):
        parse_instance("{not json")

def test_instance_sha1(pigou):
    assert instance_sha1(pigou) == instance_sha1(parse_instance(serialize_instance(pigou)))
    renamed = Instance(pigou.directed, pigou.n, pigou.edges, pigou.sources, pigou.facility_costs, "other")
    assert instance_sha1(renamed) != instance_sha1(pigou)
    changed = Instance(pigou.directed, pigou.n, (pigou.edges[0], Edge(0, 2, Affine(0.0, 1.0))), pigou.sources, pigou.facility_costs, pigou.name)
    assert instance_sha1(changed) != instance_sha1(pigou)
