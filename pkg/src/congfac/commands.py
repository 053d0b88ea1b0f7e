"""
Command line entry point. Every command prints one JSON report to stdout; logs go to stderr.
"""
import argparse
import csv
import json
import logging
import sys
import time
from typing import Any, Dict, FrozenSet, List, Optional, Sequence

from congfac.config import CongfacConfig
from congfac.constants import DEFAULT_C_K, DEFAULT_NASH_MAX_ITERS, DEFAULT_NASH_TOL, DEFAULT_REPEATS, TOOL_NAME
from congfac.enums import ExitCode, RandomFamily, ReroutingMode, SparseMode
from congfac.exceptions import CongfacException, InfeasibleError
from congfac.models import GenerateParams, Instance, KMedianResult, Solution
from congfac.service.equilibrium import nash_flow, report_flsc_bound
from congfac.service.flow import (
    edge_flow, load_solution, routing_cost, solution_to_json, verify_eps_nash, verify_eps_nash_exhaustive
)
from congfac.service.generators import gen_local_search_gap, gen_random, gen_random_cost_distance, local_moves_check
from congfac.service.instance import dump_instance, instance_sha1, instance_to_json, load_instance, validate_instance
from congfac.service.merge import phase_log_records, solve_flcc_merge, solve_k_median
from congfac.service.oracle import (
    brute_force_cost_distance, brute_force_flcc, brute_force_flsc, min_routing_fixed_F_convex, min_routing_fixed_F_good
)
from congfac.service.reductions import (
    cost_distance_sha1, cost_distance_to_json, dump_cost_distance, extract_cost_distance_solution, load_cost_distance,
    reduce_cost_distance, reduction_facility_cost
)
from congfac.service.sparse import make_params, solve_flcc_sparse, solve_flsc_sparse
from congfac.utils.rng import describe_prng
from congfac.utils.version import get_version

logger = logging.getLogger("congfac")

LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(message)s (%(filename)s:%(lineno)s)"
CSV_FIELDS = ["k", "seed", "phases", "routing_cost", "facility_cost", "total_cost", "wall_time"]

class CongfacArgumentParser(argparse.ArgumentParser):
    """
    Usage errors exit with code 1.
    """

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(ExitCode.USAGE, f"{self.prog}: error: {message}\n")

# >>>>> HELPERS >>>>>

def configure_logging(level: str):
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    logger.setLevel(level.upper())

def node_set(text: str) -> FrozenSet[int]:
    try:
        nodes = frozenset(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated node ids, got {text!r}") from None
    if not nodes:
        raise argparse.ArgumentTypeError("expected at least one node id")
    return nodes

def report(command: str, result: Dict[str, Any], seeds: Optional[List[int]]=None, sha1: Optional[str]=None) -> Dict[str, Any]:
    return {
        "tool": TOOL_NAME,
        "version": get_version(),
        "command": command,
        "seeds": seeds or [],
        "instance_sha1": sha1,
        "prng": describe_prng(),
        "result": result,
    }

def write_csv(path: str, rows: List[Dict[str, Any]]):
    with open(path, "w", newline="", encoding="utf-8") as file:
        writer = csv.DictWriter(file, fieldnames=CSV_FIELDS)
        writer.writeheader()
        writer.writerows(rows)

def k_row(inst: Instance, result: KMedianResult, seed: int) -> Dict[str, Any]:
    facility = inst.facility_costs.total(result.solution.facilities)
    return {
        "k": result.k, "seed": seed, "phases": result.phases, "routing_cost": result.routing_cost,
        "facility_cost": facility, "total_cost": result.routing_cost + facility, "wall_time": result.wall_time,
    }

def solution_report(inst: Instance, sol: Solution) -> Dict[str, Any]:
    routing = routing_cost(inst, edge_flow(inst, sol.assignment))
    facility = inst.facility_costs.total(sol.facilities)
    return {
        "facilities": sorted(sol.facilities),
        "routing_cost": routing,
        "facility_cost": facility,
        "total_cost": routing + facility,
        "solution": solution_to_json(inst, sol),
    }

# <<<<< HELPERS <<<<<

# >>>>> COMMANDS >>>>>

def cmd_validate(args: argparse.Namespace, config: CongfacConfig) -> int:
    inst = load_instance(args.instance)
    validation = validate_instance(inst)
    print_report(report("validate", validation.to_json(), sha1=instance_sha1(inst)))
    return ExitCode.USAGE if validation.violations else ExitCode.SUCCESS

def cmd_solve_sparse(args: argparse.Namespace, config: CongfacConfig) -> int:
    inst = load_instance(args.instance)
    params = make_params(inst, args.eps, M=args.max_path_len, k=args.k, a=args.lipschitz, c_k=args.c_k)
    solve = solve_flsc_sparse if args.mode == SparseMode.FLSC.value else solve_flcc_sparse
    result = solve(
        inst, params, num_workers=args.threads, path_guard=config.CONGFAC_PATH_GUARD,
        iteration_guard=args.guard_iters or config.CONGFAC_ITERATION_GUARD
    )
    body = solution_report(inst, result.solution)
    body.update({
        "mode": result.mode.value,
        "params": {"eps": params.eps, "a": params.a, "M": params.M, "k": params.k, "c_k": params.c_k},
        "multiset": list(result.multiset),
        "examined": result.examined,
        "skipped_cyclic": result.skipped_cyclic,
        "certificate": result.certificate.to_json(),
    })
    print_report(report("solve sparse", body, sha1=instance_sha1(inst)))
    return ExitCode.SUCCESS

def cmd_solve_merge(args: argparse.Namespace, config: CongfacConfig) -> int:
    inst = load_instance(args.instance)
    exact_limit = config.CONGFAC_EXACT_MATCHING_LIMIT
    if args.all_k:
        result = solve_flcc_merge(inst, args.seed, args.repeats, args.threads, exact_limit)
        best = next(row for row in result.per_k if row.k == result.k)
        per_k = result.per_k
    else:
        if args.k is None:
            raise CongfacException("solve merge needs --k or --all-k")
        best = solve_k_median(inst, args.k, args.seed, args.repeats, args.threads, exact_limit)
        per_k = [best]
    body = solution_report(inst, best.solution)
    body.update({
        "k": best.k,
        "phases": best.phases,
        "best_run": best.best_run,
        "per_k": [{key: value for key, value in k_row(inst, row, args.seed).items() if key != "wall_time"} for row in per_k],
    })
    if args.compare_oracle:
        oracle = brute_force_flcc(inst, num_workers=args.threads)
        bound = 2 * max(best.phases, 1) * oracle.cost
        body["comparison"] = {
            "oracle_total": oracle.cost,
            "ratio": body["total_cost"] / oracle.cost if oracle.cost > 0 else None,
            "bound": bound,
            "within_bound": body["total_cost"] <= bound + 1e-9,
        }
    if args.emit_phase_log:
        with open(args.emit_phase_log, "w", encoding="utf-8") as file:
            for record in phase_log_records(best):
                file.write(json.dumps(record) + "\n")
    if args.csv:
        write_csv(args.csv, [k_row(inst, row, args.seed) for row in per_k])
    print_report(report("solve merge", body, seeds=[args.seed], sha1=instance_sha1(inst)))
    return ExitCode.SUCCESS

def cmd_nash(args: argparse.Namespace, config: CongfacConfig) -> int:
    inst = load_instance(args.instance)
    result = nash_flow(inst, args.facilities, tol=args.tol, max_iters=args.max_iters)
    sol = Solution(args.facilities, result.assignment)
    body = solution_report(inst, sol)
    body["equilibrium"] = result.to_json()
    if args.poa is not None:
        body["flsc_bound"] = report_flsc_bound(body["routing_cost"], body["facility_cost"], args.poa).to_json()
    print_report(report("nash", body, sha1=instance_sha1(inst)))
    return ExitCode.SUCCESS

def cmd_verify_nash(args: argparse.Namespace, config: CongfacConfig) -> int:
    inst = load_instance(args.instance)
    sol = load_solution(inst, args.solution)
    if args.exhaustive:
        body = {"holds": verify_eps_nash_exhaustive(inst, sol, args.eps), "eps": args.eps, "exhaustive": True}
    else:
        body = verify_eps_nash(inst, sol, args.eps).to_json()
        body["exhaustive"] = False
    print_report(report("verify-nash", body, sha1=instance_sha1(inst)))
    return ExitCode.SUCCESS

def cmd_oracle(args: argparse.Namespace, config: CongfacConfig) -> int:
    command = f"oracle {args.which}"
    if args.which == "cost-distance":
        cd = load_cost_distance(args.instance)
        print_report(report(command, brute_force_cost_distance(cd).to_json(), sha1=cost_distance_sha1(cd)))
        return ExitCode.SUCCESS
    inst = load_instance(args.instance)
    if args.which in ("flcc", "flsc"):
        oracle = brute_force_flcc if args.which == "flcc" else brute_force_flsc
        result = oracle(inst, num_workers=args.threads)
        body = result.to_json()
        body["solution"] = solution_to_json(inst, Solution(result.facilities, result.assignment))
    else:
        if args.facilities is None:
            raise CongfacException(f"oracle {args.which} needs --facilities")
        if args.which == "routing-good":
            routing = min_routing_fixed_F_good(inst, args.facilities)
        else:
            routing = min_routing_fixed_F_convex(inst, args.facilities, tol=args.tol)
        body = {"facilities": sorted(args.facilities), "routing_cost": routing.cost, "gap": routing.gap}
        body["solution"] = solution_to_json(inst, Solution(args.facilities, routing.assignment))
    print_report(report(command, body, sha1=instance_sha1(inst)))
    return ExitCode.SUCCESS

def cmd_reduce(args: argparse.Namespace, config: CongfacConfig) -> int:
    cd = load_cost_distance(args.instance)
    inst = reduce_cost_distance(cd)
    body: Dict[str, Any] = {"B": reduction_facility_cost(cd), "instance_sha1": instance_sha1(inst)}
    if args.out:
        dump_instance(inst, args.out)
        body["out"] = args.out
    else:
        body["instance"] = instance_to_json(inst)
    if args.solve:
        oracle = brute_force_flcc(inst, num_workers=args.threads)
        sol = Solution(oracle.facilities, oracle.assignment)
        body["flcc_cost"] = oracle.cost
        body["cost_distance"] = extract_cost_distance_solution(sol, cd).to_json()
    print_report(report("reduce", body, sha1=cost_distance_sha1(cd)))
    return ExitCode.SUCCESS

def cmd_gen(args: argparse.Namespace, config: CongfacConfig) -> int:
    seeds = []
    if args.which == "cost-distance":
        cd = gen_random_cost_distance(args.n, args.m, args.sources, args.seed)
        body: Dict[str, Any] = {"name": cd.name}
        if args.out:
            dump_cost_distance(cd, args.out)
            body["out"] = args.out
        else:
            body["cost_distance"] = cost_distance_to_json(cd)
        print_report(report("gen cost-distance", body, seeds=[args.seed], sha1=cost_distance_sha1(cd)))
        return ExitCode.SUCCESS
    if args.which == "local-gap":
        inst = gen_local_search_gap(args.k, args.d, args.eps)
    else:
        params = GenerateParams(
            n=args.n, m=args.m, sources=args.sources, family=args.family, demand_range=tuple(args.demand),
            facility_cost=None if args.per_node_costs else args.facility_cost,
            facility_cost_range=tuple(args.per_node_costs or (0.0, 2.0)), directed=args.directed, name=args.name or "",
        )
        inst = gen_random(params, args.seed)
        seeds = [args.seed]
    body = {"name": inst.name}
    if args.which == "local-gap" and args.check:
        hub = 2 * args.k
        body["local_moves"] = local_moves_check(inst, {hub}, ReroutingMode(args.rerouting)).to_json()
    if args.out:
        dump_instance(inst, args.out)
        body["out"] = args.out
    else:
        body["instance"] = instance_to_json(inst)
    print_report(report(f"gen {args.which}", body, seeds=seeds, sha1=instance_sha1(inst)))
    return ExitCode.SUCCESS

def cmd_bench(args: argparse.Namespace, config: CongfacConfig) -> int:
    inst = load_instance(args.instance)
    exact_limit = config.CONGFAC_EXACT_MATCHING_LIMIT
    rows = []
    for seed in range(args.seeds):
        start_time = time.perf_counter()
        if args.k is None:
            result = solve_flcc_merge(inst, seed, args.repeats, args.threads, exact_limit)
            best = next(row for row in result.per_k if row.k == result.k)
        else:
            best = solve_k_median(inst, args.k, seed, args.repeats, args.threads, exact_limit)
        row = k_row(inst, best, seed)
        row["wall_time"] = time.perf_counter() - start_time
        rows.append(row)
        logger.info(f"[bench] seed {seed}: k = {row['k']}, total = {row['total_cost']}")
    if args.csv:
        write_csv(args.csv, rows)
    body = {"runs": [{key: value for key, value in row.items() if key != "wall_time"} for row in rows]}
    totals = [row["total_cost"] for row in rows]
    body["best_total"] = min(totals)
    body["mean_total"] = sum(totals) / len(totals)
    print_report(report("bench", body, seeds=list(range(args.seeds)), sha1=instance_sha1(inst)))
    return ExitCode.SUCCESS

# <<<<< COMMANDS <<<<<

def print_report(data: Dict[str, Any]):
    sys.stdout.write(json.dumps(data, indent=2) + "\n")

def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value

def build_parser() -> CongfacArgumentParser:
    parser = CongfacArgumentParser(prog="congfac", description="Facility location with congestion: solvers, oracles and generators.")
    parser.add_argument("--threads", type=int, default=None, help="Worker processes (0 = all cpus; default CONGFAC_THREADS).")
    parser.add_argument("--log-level", default=None, help="Logging level (default CONGFAC_LOG_LEVEL).")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="Validate an instance and report solver eligibility.")
    validate.add_argument("instance")
    validate.set_defaults(handler=cmd_validate)

    solve = commands.add_parser("solve", help="Run an approximation solver.")
    solvers = solve.add_subparsers(dest="solver", required=True)
    sparse = solvers.add_parser("sparse", help="k-multiset path search (single source, directed).")
    sparse.add_argument("instance")
    sparse.add_argument("--eps", type=float, required=True)
    sparse.add_argument("--max-path-len", type=positive_int, default=None)
    sparse.add_argument("--k", type=positive_int, default=None, help="Multiset size; overrides the formula.")
    sparse.add_argument("--c-k", type=float, default=DEFAULT_C_K)
    sparse.add_argument("--lipschitz", type=float, default=None)
    sparse.add_argument("--guard-iters", type=positive_int, default=None)
    sparse.add_argument("--mode", choices=[mode.value for mode in SparseMode], default=SparseMode.FLSC.value)
    sparse.set_defaults(handler=cmd_solve_sparse)
    merge = solvers.add_parser("merge", help="Randomized matching-and-merge (undirected, good costs).")
    merge.add_argument("instance")
    merge.add_argument("--seed", type=int, required=True)
    merge.add_argument("--k", type=positive_int, default=None)
    merge.add_argument("--all-k", action="store_true")
    merge.add_argument("--repeats", type=positive_int, default=DEFAULT_REPEATS)
    merge.add_argument("--emit-phase-log", default=None)
    merge.add_argument("--compare-oracle", action="store_true")
    merge.add_argument("--csv", default=None)
    merge.set_defaults(handler=cmd_solve_merge)

    nash = commands.add_parser("nash", help="Nash flow for a fixed facility set.")
    nash.add_argument("instance")
    nash.add_argument("--facilities", type=node_set, required=True)
    nash.add_argument("--tol", type=float, default=DEFAULT_NASH_TOL)
    nash.add_argument("--max-iters", type=positive_int, default=DEFAULT_NASH_MAX_ITERS)
    nash.add_argument("--poa", type=float, default=None)
    nash.set_defaults(handler=cmd_nash)

    verify = commands.add_parser("verify-nash", help="Check a solution for the eps-Nash property.")
    verify.add_argument("instance")
    verify.add_argument("solution")
    verify.add_argument("--eps", type=float, required=True)
    verify.add_argument("--exhaustive", action="store_true")
    verify.set_defaults(handler=cmd_verify_nash)

    oracle = commands.add_parser("oracle", help="Exact brute-force solvers.")
    oracle.add_argument("which", choices=["flcc", "flsc", "routing-good", "routing-convex", "cost-distance"])
    oracle.add_argument("instance")
    oracle.add_argument("--facilities", type=node_set, default=None)
    oracle.add_argument("--tol", type=float, default=DEFAULT_NASH_TOL)
    oracle.set_defaults(handler=cmd_oracle)

    reduce = commands.add_parser("reduce", help="Reduce a Cost-Distance instance to FLCC.")
    reduce.add_argument("instance")
    reduce.add_argument("--out", default=None)
    reduce.add_argument("--solve", action="store_true", help="Also solve the reduction exactly and extract the subgraph.")
    reduce.set_defaults(handler=cmd_reduce)

    gen = commands.add_parser("gen", help="Generate instances.")
    generators = gen.add_subparsers(dest="which", required=True)
    local_gap = generators.add_parser("local-gap")
    local_gap.add_argument("--k", type=int, required=True)
    local_gap.add_argument("--d", type=int, required=True)
    local_gap.add_argument("--eps", type=float, required=True)
    local_gap.add_argument("--check", action="store_true", help="Run the local-move check on the hub-only solution.")
    local_gap.add_argument("--rerouting", choices=[mode.value for mode in ReroutingMode], default=ReroutingMode.UNSPLITTABLE.value)
    local_gap.add_argument("--out", default=None)
    random_gen = generators.add_parser("random")
    random_gen.add_argument("--n", type=positive_int, required=True)
    random_gen.add_argument("--m", type=int, required=True)
    random_gen.add_argument("--sources", type=positive_int, required=True)
    random_gen.add_argument("--family", choices=[family.value for family in RandomFamily], required=True)
    random_gen.add_argument("--seed", type=int, required=True)
    random_gen.add_argument("--directed", action="store_true")
    random_gen.add_argument("--demand", type=float, nargs=2, default=(1.0, 1.0), metavar=("LOW", "HIGH"))
    random_gen.add_argument("--facility-cost", type=float, default=1.0)
    random_gen.add_argument("--per-node-costs", type=float, nargs=2, default=None, metavar=("LOW", "HIGH"))
    random_gen.add_argument("--name", default=None)
    random_gen.add_argument("--out", default=None)
    cd_gen = generators.add_parser("cost-distance")
    cd_gen.add_argument("--n", type=positive_int, required=True)
    cd_gen.add_argument("--m", type=int, required=True)
    cd_gen.add_argument("--sources", type=positive_int, required=True)
    cd_gen.add_argument("--seed", type=int, required=True)
    cd_gen.add_argument("--out", default=None)
    gen.set_defaults(handler=cmd_gen)

    bench = commands.add_parser("bench", help="Run the merge solver over seeds 0..N-1.")
    bench.add_argument("instance")
    bench.add_argument("--seeds", type=positive_int, required=True)
    bench.add_argument("--k", type=positive_int, default=None, help="Fixed k; default solves over all k.")
    bench.add_argument("--repeats", type=positive_int, default=DEFAULT_REPEATS)
    bench.add_argument("--csv", default=None)
    bench.set_defaults(handler=cmd_bench)
    return parser

def main(argv: Optional[Sequence[str]]=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exception:
        return int(exception.code or 0)
    try:
        config = CongfacConfig()
    except ValueError as exception:
        sys.stderr.write(f"congfac: {exception}\n")
        return ExitCode.USAGE
    try:
        configure_logging(args.log_level or config.CONGFAC_LOG_LEVEL)
    except ValueError as exception:
        sys.stderr.write(f"congfac: {exception}\n")
        return ExitCode.USAGE
    if args.threads is None:
        args.threads = config.CONGFAC_THREADS
    if args.threads < 0:
        sys.stderr.write(f"congfac: --threads must be non-negative, got {args.threads}\n")
        return ExitCode.USAGE

    try:
        return int(args.handler(args, config))
    except InfeasibleError as exception:
        logger.error(f"[{args.command}] {exception}")
        return ExitCode.INFEASIBLE
    except (CongfacException, ValueError, OSError) as exception:
        logger.error(f"[{args.command}] {type(exception).__name__}: {exception}")
        return ExitCode.USAGE

def execute_command():
    sys.exit(main())
