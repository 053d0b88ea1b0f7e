import enum


class CostFnKind(enum.Enum):
    CONSTANT = "constant"
    AFFINE = "affine"
    POLYNOMIAL = "polynomial"
    SHARED_FIXED = "shared_fixed"
    POWER_SHARE = "power_share"

class FnClassKind(enum.Enum):
    """
    NONDECREASING_LIPSCHITZ: l(x) nondecreasing with a structural Lipschitz constant on [0, W].
    GOOD: l(x) nonincreasing, x*l(x) nondecreasing and concave.
    NEITHER: no single class applies (used for instances mixing classes).
    """
    NONDECREASING_LIPSCHITZ = "nondecreasing_lipschitz"
    GOOD = "good"
    NEITHER = "neither"

class SolverName(enum.Enum):
    SPARSE = "sparse_solver"
    MERGE = "merge_solver"

class SparseMode(enum.Enum):
    FLSC = "flsc"
    FLCC = "flcc"

class MovementKind(enum.Enum):
    TO_MEETING = "to-meeting"
    BACK_FROM_MEETING = "back-from-meeting"

class LocalMoveKind(enum.Enum):
    OPEN = "open"
    CLOSE = "close"
    SWAP = "swap"

class ReroutingMode(enum.Enum):
    UNSPLITTABLE = "unsplittable"
    SPLITTABLE = "splittable"

class RandomFamily(enum.Enum):
    CONSTANT = "constant"
    AFFINE = "affine"
    POLYNOMIAL = "polynomial"
    SHARED_FIXED = "shared_fixed"
    POWER_SHARE = "power_share"

class ExitCode(enum.IntEnum):
    SUCCESS = 0
    USAGE = 1
    INFEASIBLE = 2
