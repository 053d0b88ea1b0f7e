"""
Evaluation and structural classification of congestion cost functions.
"""
from congfac.enums import FnClassKind
from congfac.exceptions import DomainError, UnsupportedInstanceError
from congfac.models import Affine, Constant, CostFn, FnClass, Polynomial, PowerShare, SharedFixed


def _check_congestion(x: float):
    if x < 0:
        raise DomainError(f"Congestion must be non-negative, got {x}!")

def eval_cost(fn: CostFn, x: float) -> float:
    """
    Per-unit edge cost l(x).
    """
    _check_congestion(x)
    if isinstance(fn, Constant):
        return float(fn.b)
    elif isinstance(fn, Affine):
        return float(fn.a * x + fn.b)
    elif isinstance(fn, Polynomial):
        value = 0.0
        for coeff in reversed(fn.coeffs):
            value = value * x + coeff
        return float(value)
    elif isinstance(fn, SharedFixed):
        if x >= fn.w_min:
            return float(fn.c / x + fn.l)
        return float(fn.c / fn.w_min + fn.l)
    elif isinstance(fn, PowerShare):
        if x == 0:
            x = fn.w_floor
        return float(fn.c * x ** (fn.beta - 1))
    else:
        raise TypeError(f"Unsupported cost function type: {type(fn)}")

def eval_total(fn: CostFn, x: float) -> float:
    """
    Total edge cost x*l(x); exactly 0 when no flow uses the edge.
    """
    _check_congestion(x)
    if x == 0:
        return 0.0
    if isinstance(fn, SharedFixed) and x >= fn.w_min:
        return float(fn.c + fn.l * x)
    if isinstance(fn, PowerShare):
        return float(fn.c * x ** fn.beta)
    return float(x * eval_cost(fn, x))

def eval_integral(fn: CostFn, x: float) -> float:
    """
    Closed-form integral of l over [0, x] for nondecreasing families.
    """
    _check_congestion(x)
    if isinstance(fn, Constant):
        return float(fn.b * x)
    elif isinstance(fn, Affine):
        return float(fn.a * x * x / 2 + fn.b * x)
    elif isinstance(fn, Polynomial):
        return float(sum(coeff * x ** (j + 1) / (j + 1) for j, coeff in enumerate(fn.coeffs)))
    raise UnsupportedInstanceError(f"No convex potential for {fn.kind.value} cost functions!")

def eval_marginal(fn: CostFn, x: float) -> float:
    """
    Marginal total cost d/dx [x*l(x)] for nondecreasing families.
    """
    _check_congestion(x)
    if isinstance(fn, Constant):
        return float(fn.b)
    elif isinstance(fn, Affine):
        return float(2 * fn.a * x + fn.b)
    elif isinstance(fn, Polynomial):
        return float(sum((j + 1) * coeff * x ** j for j, coeff in enumerate(fn.coeffs)))
    raise UnsupportedInstanceError(f"Socially optimal routing is not convex for {fn.kind.value} cost functions!")

def classify(fn: CostFn, W: float) -> FnClass:
    """
    Structural classification on [0, W], where W is the largest congestion any edge can see.
    Nondecreasing families get their tightest structural Lipschitz constant.
    """
    if W <= 0:
        raise ValueError(f"Invalid range for W: {W} must be positive.")
    if isinstance(fn, Constant):
        return FnClass(FnClassKind.NONDECREASING_LIPSCHITZ, 0.0)
    elif isinstance(fn, Affine):
        return FnClass(FnClassKind.NONDECREASING_LIPSCHITZ, float(fn.a))
    elif isinstance(fn, Polynomial):
        lipschitz = sum(j * coeff * W ** (j - 1) for j, coeff in enumerate(fn.coeffs) if j >= 1)
        return FnClass(FnClassKind.NONDECREASING_LIPSCHITZ, float(lipschitz))
    elif isinstance(fn, (SharedFixed, PowerShare)):
        return FnClass(FnClassKind.GOOD)
    else:
        raise TypeError(f"Unsupported cost function type: {type(fn)}")
