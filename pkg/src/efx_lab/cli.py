"""Command-line surface: machine-readable JSON on stdout, logs on stderr.

Exit codes: 0 success, 1 domain error (reported as
``{"error": {"kind": ..., "detail": ...}}``), 2 usage errors (argparse).
All randomness flows through ``--seed``; the default seed is 0, never the
clock, so identical invocations produce byte-identical output.
"""

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional

from . import serde
from .efx_core import is_efx, strong_envy_witness
from .efx_three import solve_three_agent_efx
from .errors import EfxLabError, PreconditionError
from .oracle import (
    GeneratorConfig,
    brute_force_rainbow_cycle,
    enumerate_efx,
    random_instance,
    random_layered_graph,
)
from .rainbow import (
    PermutationLayeredDigraph,
    find_rainbow_cycle_derandomized,
    find_rainbow_cycle_permutation,
    find_rainbow_cycle_randomized,
    threshold_k,
)
from .valuations import (
    is_mms_feasible,
    is_monotone,
    is_nice_cancelable,
    is_non_degenerate,
    perturb_instance,
)

CHECKERS = {
    "mms": is_mms_feasible,
    "nice": is_nice_cancelable,
    "monotone": is_monotone,
    "nondegenerate": is_non_degenerate,
}


def _read_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh, parse_float=_reject_float)


def _reject_float(text: str):
    raise PreconditionError(f"floats are not accepted in input files: {text}")


def _emit(obj) -> None:
    sys.stdout.write(serde.dumps(obj))


def _cmd_solve(args) -> int:
    instance = serde.instance_from_json(_read_json(args.instance))
    trace = [] if args.trace else None
    alloc = solve_three_agent_efx(instance, trace=trace)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for record in trace:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    _emit(serde.allocation_to_json(alloc, efx=True))
    return 0


def _cmd_verify(args) -> int:
    instance = serde.instance_from_json(_read_json(args.instance))
    alloc = serde.allocation_from_json(_read_json(args.allocation))
    witness = strong_envy_witness(instance, alloc)
    _emit({"efx": witness is None, "witness": serde.witness_to_json(witness)})
    return 0


def _cmd_check(args) -> int:
    instance = serde.instance_from_json(_read_json(args.instance))
    checker = CHECKERS[args.cls]
    if args.agent is None:
        result = all(checker(v) for v in instance.valuations)
    else:
        if not 1 <= args.agent <= 3:
            raise PreconditionError("--agent must be 1, 2 or 3")
        result = checker(instance.valuations[args.agent - 1])
    _emit({"result": result})
    return 0


def _cmd_perturb(args) -> int:
    instance = serde.instance_from_json(_read_json(args.instance))
    eps = serde.parse_rational(args.epsilon) if args.epsilon else None
    _emit(serde.instance_to_json(perturb_instance(instance, eps=eps)))
    return 0


def _cmd_gen_instance(args) -> int:
    cfg = _config_from_args(args)
    _emit(serde.instance_to_json(random_instance(cfg)))
    return 0


def _cmd_gen_graph(args) -> int:
    cfg = GeneratorConfig(seed=args.seed, k=args.k, d=args.d, graph_kind=args.kind)
    _emit(serde.graph_to_json(random_layered_graph(cfg)))
    return 0


def _config_from_args(args) -> GeneratorConfig:
    if args.config:
        raw = _read_json(args.config)
        kwargs = {}
        for key in (
            "seed",
            "m",
            "k",
            "d",
            "kinds",
            "value_range",
            "denominator",
            "graph_kind",
            "ensure_nondegenerate",
        ):
            if key in raw:
                value = raw[key]
                if key in ("kinds", "value_range"):
                    value = tuple(value)
                kwargs[key] = value
        return GeneratorConfig(**kwargs)
    cfg = GeneratorConfig(seed=args.seed, m=args.m)
    if args.kinds:
        kinds = tuple(args.kinds.split(","))
        if len(kinds) != 3:
            raise PreconditionError("--kinds needs 3 comma-separated valuation kinds")
        cfg.kinds = kinds
    if args.ensure_nondegenerate:
        cfg.ensure_nondegenerate = True
    return cfg


def _parse_root(raw: Optional[str]):
    if raw is None:
        return None
    try:
        part, off = raw.split(":")
        return (int(part), int(off))
    except ValueError:
        raise PreconditionError(f"--root must look like part:offset, got {raw!r}") from None


def _cmd_rainbow_find(args) -> int:
    graph = serde.graph_from_json(_read_json(args.graph))
    if args.method == "random":
        cycle = find_rainbow_cycle_randomized(graph, seed=args.seed, max_trials=args.trials)
    elif args.method == "derandomized":
        cycle = find_rainbow_cycle_derandomized(graph)
    else:
        if not isinstance(graph, PermutationLayeredDigraph):
            raise PreconditionError("the permutation method needs a permutation graph")
        root = _parse_root(args.root) or (0, 0)
        cycle = find_rainbow_cycle_permutation(graph, root)
    if cycle is None:
        _emit({"found": False})
    else:
        _emit(serde.cycle_to_json(cycle))
    return 0


def _cmd_rainbow_threshold(args) -> int:
    _emit({"k": threshold_k(args.d)})
    return 0


def _cmd_oracle_efx(args) -> int:
    instance = serde.instance_from_json(_read_json(args.instance))
    allocations = enumerate_efx(instance)
    _emit(
        {
            "count": len(allocations),
            "allocations": [serde.allocation_to_json(a)["bundles"] for a in allocations],
        }
    )
    return 0


def _cmd_oracle_rainbow(args) -> int:
    graph = serde.graph_from_json(_read_json(args.graph))
    cycle = brute_force_rainbow_cycle(graph)
    if cycle is None:
        _emit({"found": False})
    else:
        _emit(serde.cycle_to_json(cycle))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="efx-lab",
        description="EFX allocation solver and rainbow-cycle finders with brute-force oracles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute an EFX allocation for a 3-agent instance")
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("--trace", help="write solver trace as JSON lines to this path")
    p.add_argument("--seed", type=int, default=0, help="reserved; the solver is deterministic")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("verify", help="check an allocation for strong envy")
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("-a", "--allocation", required=True)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("check", help="run a valuation class checker")
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("--class", dest="cls", required=True, choices=sorted(CHECKERS))
    p.add_argument("--agent", type=int, help="1-based agent; default checks all three")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("perturb", help="non-degeneracy perturbation of an instance")
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("--epsilon", help="rational 'p/q'; default delta / 2**(m+2)")
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("gen-instance", help="seeded random instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-m", type=int, default=4)
    p.add_argument("--kinds", help="3 comma-separated kinds, e.g. table,table,additive")
    p.add_argument("--ensure-nondegenerate", action="store_true")
    p.add_argument("--config", help="JSON file with GeneratorConfig fields")
    p.set_defaults(func=_cmd_gen_instance)

    p = sub.add_parser("gen-graph", help="seeded random layered digraph")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", default="layered", choices=["layered", "permutation"])
    p.add_argument("-k", type=int, required=True, help="number of parts")
    p.add_argument("-d", type=int, required=True, help="vertices per part")
    p.set_defaults(func=_cmd_gen_graph)

    p = sub.add_parser("rainbow-find", help="find a rainbow cycle")
    p.add_argument("-g", "--graph", required=True)
    p.add_argument("--method", required=True, choices=["random", "derandomized", "permutation"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--root", help="part:offset start vertex for the permutation method")
    p.set_defaults(func=_cmd_rainbow_find)

    p = sub.add_parser("rainbow-threshold", help="smallest k with k*(1-1/d)^(k-1) < 1")
    p.add_argument("-d", type=int, required=True)
    p.set_defaults(func=_cmd_rainbow_threshold)

    p = sub.add_parser("oracle-efx", help="enumerate all EFX allocations (brute force)")
    p.add_argument("-i", "--instance", required=True)
    p.set_defaults(func=_cmd_oracle_efx)

    p = sub.add_parser("oracle-rainbow", help="exhaustive rainbow-cycle search")
    p.add_argument("-g", "--graph", required=True)
    p.set_defaults(func=_cmd_oracle_rainbow)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EfxLabError as exc:
        _emit({"error": {"kind": exc.kind, "detail": exc.detail}})
        return 1
    except FileNotFoundError as exc:
        _emit({"error": {"kind": "io", "detail": str(exc)}})
        return 1


if __name__ == "__main__":
    sys.exit(main())
