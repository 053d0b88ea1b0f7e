import numpy as np
import pytest

from congfac.enums import FnClassKind
from congfac.exceptions import DomainError, UnsupportedInstanceError
from congfac.models import Affine, Constant, Polynomial, PowerShare, SharedFixed
from congfac.service.costfn import classify, eval_cost, eval_integral, eval_marginal, eval_total


@pytest.mark.parametrize("fn, x, expected_cost, expected_total", [
    (Constant(2.0), 3.0, 2.0, 6.0),
    (Affine(1.0, 2.0), 3.0, 5.0, 15.0),
    (Polynomial((1.0, 0.0, 2.0)), 2.0, 9.0, 18.0),
    (SharedFixed(4.0, 1.0, 2.0), 4.0, 2.0, 8.0),
    (SharedFixed(4.0, 1.0, 2.0), 1.0, 3.0, 3.0),
    (PowerShare(2.0, 0.5, 1.0), 4.0, 1.0, 4.0),
])
def test_eval_cost_and_total(fn, x, expected_cost, expected_total):
    assert eval_cost(fn, x) == pytest.approx(expected_cost)
    assert eval_total(fn, x) == pytest.approx(expected_total)

@pytest.mark.parametrize("fn", [
    Constant(2.0), Affine(1.0, 2.0), Polynomial((1.0, 1.0)), SharedFixed(4.0, 1.0, 2.0), PowerShare(2.0, 0.5, 1.0),
])
def test_unused_edge_costs_nothing(fn):
    assert eval_total(fn, 0.0) == 0.0

def test_power_share_floor():
    fn = PowerShare(2.0, 0.5, 1.0)
    assert eval_cost(fn, 0.0) == pytest.approx(eval_cost(fn, 1.0)), "l(0) should be taken at the floor"

def test_negative_congestion():
    with pytest.raises(DomainError):
        eval_cost(Constant(1.0), -0.5)
    with pytest.raises(DomainError):
        eval_total(Affine(1.0, 0.0), -1.0)

def test_integral_and_marginal():
    assert eval_integral(Affine(2.0, 1.0), 3.0) == pytest.approx(12.0)
    assert eval_integral(Polynomial((1.0, 0.0, 3.0)), 2.0) == pytest.approx(10.0)
    assert eval_marginal(Affine(2.0, 1.0), 3.0) == pytest.approx(13.0)
    assert eval_marginal(Polynomial((1.0, 0.0, 3.0)), 2.0) == pytest.approx(37.0)
    with pytest.raises(UnsupportedInstanceError):
        eval_integral(SharedFixed(1.0, 0.0, 1.0), 1.0)
    with pytest.raises(UnsupportedInstanceError):
        eval_marginal(PowerShare(1.0, 0.5, 1.0), 1.0)

@pytest.mark.parametrize("fn", [
    Constant(1.5), Affine(0.7, 1.3), Polynomial((0.5, 0.25, 1.0)), Polynomial((1.0, 0.0, 0.0, 0.4)),
])
def test_marginal_matches_finite_differences(fn):
    h = 1e-5
    for x in np.linspace(0.1, 3.0, 20):
        x = float(x)
        difference = (eval_total(fn, x + h) - eval_total(fn, x - h)) / (2 * h)
        assert eval_marginal(fn, x) == pytest.approx(difference, abs=1e-6), f"marginal at x = {x}"

def test_classify():
    assert classify(Constant(3.0), 1.0).kind == FnClassKind.NONDECREASING_LIPSCHITZ
    assert classify(Constant(3.0), 1.0).lipschitz == 0.0
    assert classify(Affine(2.5, 1.0), 10.0).lipschitz == pytest.approx(2.5)
    assert classify(Polynomial((1.0, 2.0, 3.0)), 2.0).lipschitz == pytest.approx(14.0)
    assert classify(SharedFixed(1.0, 0.0, 1.0), 5.0).kind == FnClassKind.GOOD
    assert classify(PowerShare(1.0, 0.5, 1.0), 5.0).kind == FnClassKind.GOOD
    with pytest.raises(ValueError):
        classify(Constant(1.0), 0.0)

def test_good_functions_have_concave_totals():
    for fn in (SharedFixed(2.0, 0.5, 1.0), PowerShare(1.5, 0.4, 0.5)):
        xs = [0.5 + 0.25 * i for i in range(20)]
        totals = [eval_total(fn, x) for x in xs]
        costs = [eval_cost(fn, x) for x in xs]
        assert all(a <= b + 1e-12 for a, b in zip(totals, totals[1:])), "x*l(x) must be nondecreasing"
        assert all(a >= b - 1e-12 for a, b in zip(costs, costs[1:])), "l(x) must be nonincreasing"
        increments = [b - a for a, b in zip(totals, totals[1:])]
        assert all(a >= b - 1e-12 for a, b in zip(increments, increments[1:])), "x*l(x) must be concave"

@pytest.mark.parametrize("build", [
    lambda: Constant(-1.0),
    lambda: Affine(1.0, float("nan")),
    lambda: Polynomial((1.0, -2.0)),
    lambda: SharedFixed(1.0, 0.0, 0.0),
    lambda: PowerShare(1.0, 1.5, 1.0),
])
def test_invalid_parameters(build):
    with pytest.raises(ValueError):
        build()
