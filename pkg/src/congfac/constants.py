# all cost comparisons use this tolerance.
TOLERANCE = 1e-9

DEFAULT_PATH_GUARD = 100_000
DEFAULT_ITERATION_GUARD = 10_000_000
EXHAUSTIVE_PATH_GUARD = 1_000_000
ORACLE_ASSIGNMENT_GUARD = 1_000_000
ORACLE_MAX_NODES = 12
COST_DISTANCE_MAX_EDGES = 20
LOCAL_MOVES_GUARD = 10_000

DEFAULT_EXACT_MATCHING_LIMIT = 22
DEFAULT_REPEATS = 8
DEFAULT_NASH_TOL = 1e-6
DEFAULT_NASH_MAX_ITERS = 10_000
ORACLE_NASH_TOL = 1e-8
LINE_SEARCH_TOL = 1e-12

DEFAULT_C_K = 1.0

PRNG_NAME = "numpy-pcg64-seedsequence"
PRNG_VERSION = 1

TOOL_NAME = "congfac"
