import multiprocessing
import os

import dotenv

from congfac.constants import DEFAULT_EXACT_MATCHING_LIMIT, DEFAULT_ITERATION_GUARD, DEFAULT_PATH_GUARD


class CongfacConfig:
    """
    Configuration for solver runs, read from the environment (and a .env file if present).
    """

    def __init__(self):
        dotenv.load_dotenv()

        self.CONGFAC_THREADS = int(os.getenv("CONGFAC_THREADS", 0))
        self.CONGFAC_LOG_LEVEL = os.getenv("CONGFAC_LOG_LEVEL", "INFO").upper()
        self.CONGFAC_PATH_GUARD = int(os.getenv("CONGFAC_PATH_GUARD", DEFAULT_PATH_GUARD))
        self.CONGFAC_ITERATION_GUARD = int(os.getenv("CONGFAC_ITERATION_GUARD", DEFAULT_ITERATION_GUARD))
        self.CONGFAC_EXACT_MATCHING_LIMIT = int(os.getenv("CONGFAC_EXACT_MATCHING_LIMIT", DEFAULT_EXACT_MATCHING_LIMIT))

        if self.CONGFAC_THREADS < 0:
            raise ValueError(f"Invalid CONGFAC_THREADS: {self.CONGFAC_THREADS} must be non-negative.")

def resolve_num_workers(num_workers: int) -> int:
    """
    0 means all available cpus; more workers than cpus are reduced to the cpu count.
    """
    if num_workers < 0:
        raise ValueError(f"Invalid number of workers: {num_workers} must be non-negative integer.")
    cpu_count = multiprocessing.cpu_count()
    if num_workers == 0 or num_workers > cpu_count:
        return cpu_count
    return num_workers
