"""JSON wire formats.

Rationals travel as decimal integer strings or ``"p/q"`` strings; floats
are rejected so no reader can smuggle rounding into the exact pipeline.
Agent numbers are 1-based on the wire, good indices and graph offsets
0-based, matching the instance and graph schemas.
"""

import json
from fractions import Fraction
from typing import Any, Dict, Optional

from .bitsets import goods_from_mask, mask_from_goods
from .efx_core import Allocation, EnvyWitness
from .errors import MalformedValuationError, PreconditionError
from .rainbow import LayeredDigraph, PermutationLayeredDigraph, RainbowCycle
from .valuations import Instance, Valuation


def parse_rational(raw: Any) -> Fraction:
    """Accepts "p/q" strings, decimal integer strings, and JSON integers."""
    if isinstance(raw, bool):
        raise MalformedValuationError(f"expected a rational, got {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        raise MalformedValuationError(
            f"floats are not accepted as rationals, got {raw!r}; use 'p/q' strings"
        )
    if isinstance(raw, str):
        text = raw.strip()
        try:
            if "/" in text:
                num, den = text.split("/")
                return Fraction(int(num), int(den))
            return Fraction(int(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedValuationError(f"bad rational literal {raw!r}: {exc}") from None
    raise MalformedValuationError(f"expected a rational, got {type(raw).__name__}")


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def valuation_to_json(v: Valuation) -> Dict[str, Any]:
    out: Dict[str, Any] = {"kind": v.kind}
    if v.kind == "table":
        out["table"] = {str(mask): format_rational(val) for mask, val in sorted(v.table.items())}
    else:
        out["values"] = [format_rational(x) for x in v.values]
        if v.kind == "budget_additive":
            out["cap"] = format_rational(v.cap)
    return out


def valuation_from_json(obj: Dict[str, Any], m: int) -> Valuation:
    kind = obj.get("kind")
    if kind == "table":
        table_raw = obj.get("table")
        if not isinstance(table_raw, dict):
            raise MalformedValuationError("table valuation needs a 'table' object")
        table = {int(mask): parse_rational(val) for mask, val in table_raw.items()}
        return Valuation(kind="table", m=m, table=table)
    if kind in ("additive", "budget_additive", "unit_demand", "multiplicative"):
        values = tuple(parse_rational(x) for x in obj.get("values", []))
        cap = parse_rational(obj["cap"]) if kind == "budget_additive" else None
        return Valuation(kind=kind, m=m, values=values, cap=cap)
    raise MalformedValuationError(f"unknown valuation kind {kind!r}")


def instance_to_json(instance: Instance) -> Dict[str, Any]:
    return {
        "m": instance.m,
        "agents": [valuation_to_json(v) for v in instance.valuations],
    }


def instance_from_json(obj: Dict[str, Any]) -> Instance:
    if not isinstance(obj, dict) or "m" not in obj or "agents" not in obj:
        raise PreconditionError("instance JSON needs 'm' and 'agents'")
    m = obj["m"]
    if not isinstance(m, int) or m < 0:
        raise PreconditionError(f"bad good count {m!r}")
    agents = obj["agents"]
    if not isinstance(agents, list) or len(agents) != 3:
        raise PreconditionError("instance JSON needs exactly 3 agents")
    return Instance(m=m, valuations=tuple(valuation_from_json(a, m) for a in agents))


def allocation_to_json(alloc: Allocation, efx: Optional[bool] = None) -> Dict[str, Any]:
    out: Dict[str, Any] = {"bundles": [goods_from_mask(b) for b in alloc.agent_bundles]}
    if efx is not None:
        out["efx"] = efx
    return out


def allocation_from_json(obj: Dict[str, Any]) -> Allocation:
    bundles = obj.get("bundles")
    if not isinstance(bundles, list) or len(bundles) != 3:
        raise PreconditionError("allocation JSON needs a 3-element 'bundles' list")
    return Allocation(agent_bundles=tuple(mask_from_goods(b) for b in bundles))


def witness_to_json(witness: Optional[EnvyWitness]) -> Optional[Dict[str, int]]:
    if witness is None:
        return None
    return {
        "envier": witness.envier + 1,
        "envied": witness.envied + 1,
        "good": witness.good,
    }


def graph_to_json(graph: LayeredDigraph) -> Dict[str, Any]:
    kind = "permutation" if isinstance(graph, PermutationLayeredDigraph) else "layered"
    in_edges: Dict[str, Dict[str, int]] = {}
    for i, size in enumerate(graph.sizes):
        for o in range(size):
            in_edges[f"{i}:{o}"] = {
                str(j): graph.in_nbr[i][j][o]
                for j in range(len(graph.sizes))
                if j != i
            }
    return {"kind": kind, "parts": list(graph.sizes), "in_edges": in_edges}


def graph_from_json(obj: Dict[str, Any]) -> LayeredDigraph:
    kind = obj.get("kind")
    sizes = obj.get("parts")
    edges = obj.get("in_edges")
    if kind not in ("layered", "permutation"):
        raise PreconditionError(f"unknown graph kind {kind!r}")
    if not isinstance(sizes, list) or not all(isinstance(s, int) and s > 0 for s in sizes):
        raise PreconditionError("graph JSON needs a list of positive part sizes")
    if not isinstance(edges, dict):
        raise PreconditionError("graph JSON needs an 'in_edges' object")
    k = len(sizes)
    rows = [
        [None if i == j else [-1] * sizes[i] for j in range(k)] for i in range(k)
    ]
    for key, nbrs in edges.items():
        try:
            part_s, off_s = key.split(":")
            part, off = int(part_s), int(off_s)
        except ValueError:
            raise PreconditionError(f"bad vertex key {key!r}") from None
        if not (0 <= part < k and 0 <= off < sizes[part]):
            raise PreconditionError(f"vertex {key!r} out of range")
        for js, u in nbrs.items():
            j = int(js)
            if j == part or not 0 <= j < k:
                raise PreconditionError(f"bad in-edge part {js!r} for vertex {key!r}")
            if not isinstance(u, int) or not 0 <= u < sizes[j]:
                raise PreconditionError(f"bad in-edge offset {u!r} for vertex {key!r}")
            rows[part][j][off] = u
    for i in range(k):
        for j in range(k):
            if i != j and any(x < 0 for x in rows[i][j]):
                raise PreconditionError(f"missing in-edges from part {j} to part {i}")
    in_nbr = tuple(
        tuple(None if col is None else tuple(col) for col in row) for row in rows
    )
    cls = PermutationLayeredDigraph if kind == "permutation" else LayeredDigraph
    return cls(sizes=tuple(sizes), in_nbr=in_nbr)


def cycle_to_json(cycle: RainbowCycle) -> Dict[str, Any]:
    return {"cycle": [[p, o] for p, o in cycle.vertices]}


def cycle_from_json(obj: Dict[str, Any]) -> RainbowCycle:
    verts = obj.get("cycle")
    if not isinstance(verts, list):
        raise PreconditionError("cycle JSON needs a 'cycle' list")
    return RainbowCycle(vertices=tuple((int(p), int(o)) for p, o in verts))


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, compact separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"
