"""Brute-force ground truth and seeded random generators.

The enumerators are deliberately naive: they exist to cross-check the
solver and the cycle finders at desk scale, so they share as little code
with them as possible. Generators are pure functions of their seed.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import List, Optional, Tuple

import numpy as np

from .bitsets import iter_goods
from .efx_core import Allocation, is_efx
from .errors import InstanceTooLargeError, PreconditionError
from .limits import ENUMERATE_EFX_CAP, RAINBOW_BRUTE_CAP, resolve_m_cap
from .rainbow import LayeredDigraph, PermutationLayeredDigraph, RainbowCycle, validate
from .valuations import Instance, Valuation, dense_values, is_non_degenerate, min_value_gap, _perturb_valuation


@dataclass
class GeneratorConfig:
    """Knobs for the random generators; ``m`` drives instances, ``(k, d)`` graphs.

    Table values are drawn as ``numerator / denominator`` with numerators
    uniform over ``value_range``; ``denominator=1`` yields integer instances
    (typically degenerate, which is what the perturbation tests want).
    """

    seed: int = 0
    m: int = 4
    k: int = 4
    d: int = 2
    kinds: Tuple[str, str, str] = ("table", "table", "additive")
    value_range: Tuple[int, int] = (0, 16)
    denominator: int = 64
    graph_kind: str = "layered"
    ensure_nondegenerate: bool = False


def _rng(cfg: GeneratorConfig) -> np.random.Generator:
    key = cfg.seed & ((1 << 128) - 1)
    return np.random.Generator(np.random.Philox(key=key))


def enumerate_efx(instance: Instance, cap: Optional[int] = None) -> List[Allocation]:
    """All EFX allocations, by checking every one of the ``3**m`` assignments.

    Returned in lexicographic order of the good-to-agent assignment vector.
    """
    limit = resolve_m_cap(cap, ENUMERATE_EFX_CAP)
    if instance.m > limit:
        raise InstanceTooLargeError(
            f"enumerate_efx walks 3**m allocations; m={instance.m} exceeds cap {limit}"
        )
    found = []
    for assignment in product(range(3), repeat=instance.m):
        bundles = [0, 0, 0]
        for good, agent in enumerate(assignment):
            bundles[agent] |= 1 << good
        alloc = Allocation(agent_bundles=tuple(bundles))
        if is_efx(instance, alloc):
            found.append(alloc)
    return found


def brute_force_rainbow_cycle(
    graph: LayeredDigraph, cap: Optional[int] = None
) -> Optional[RainbowCycle]:
    """Exhaustive DFS for a rainbow cycle; None only if truly none exists.

    Walks backward along in-edges (exactly one per foreign part), keeping the
    visited parts distinct; reaching the start vertex closes a cycle.
    """
    problems = validate(graph)
    if problems:
        raise PreconditionError("invalid graph: " + "; ".join(problems))
    limit = cap if cap is not None else RAINBOW_BRUTE_CAP
    k = len(graph.sizes)
    if k * graph.max_part > limit:
        raise InstanceTooLargeError(
            f"brute-force search capped at k*d <= {limit}, got {k * graph.max_part}"
        )

    def search(start, current, used_parts, path):
        for j in range(k):
            if j == current[0]:
                continue
            u = (j, graph.in_nbr[current[0]][j][current[1]])
            if j == start[0]:
                if u == start:
                    return list(reversed(path))
                continue
            if j in used_parts:
                continue
            hit = search(start, u, used_parts | {j}, path + [u])
            if hit is not None:
                return hit
        return None

    for p in range(k):
        for o in range(graph.sizes[p]):
            start = (p, o)
            hit = search(start, start, {p}, [start])
            if hit is not None:
                return RainbowCycle(vertices=tuple(hit))
    return None


def _random_fraction(rng, lo: int, hi: int, denominator: int) -> Fraction:
    return Fraction(int(rng.integers(lo, hi + 1)), denominator)


def _random_monotone_table(rng, m: int, cfg: GeneratorConfig) -> Valuation:
    """Random raw values forced monotone by running maxima over the lattice."""
    lo, hi = cfg.value_range
    size = 1 << m
    raw = [Fraction(int(x), cfg.denominator) for x in rng.integers(lo, hi + 1, size=size)]
    vals = list(raw)
    for mask in range(1, size):
        best = vals[mask]
        for g in iter_goods(mask):
            prev = vals[mask ^ (1 << g)]
            if prev > best:
                best = prev
        vals[mask] = best
    return Valuation(kind="table", m=m, table={mask: vals[mask] for mask in range(size)})


def _random_parametric(rng, m: int, kind: str, cfg: GeneratorConfig) -> Valuation:
    lo, hi = cfg.value_range
    lo = max(lo, 1)  # keep parametric families strictly positive
    values = tuple(_random_fraction(rng, lo, max(hi, lo), cfg.denominator) for _ in range(m))
    if kind == "budget_additive":
        total = sum(values, Fraction(0))
        cap = _random_fraction(rng, 1, max(int(total * cfg.denominator), 1), cfg.denominator)
        return Valuation(kind=kind, m=m, values=values, cap=cap)
    if kind == "multiplicative":
        # factors >= 1 keep the product monotone
        values = tuple(v + 1 for v in values)
        return Valuation(kind=kind, m=m, values=values)
    return Valuation(kind=kind, m=m, values=values)


def random_instance(cfg: GeneratorConfig) -> Instance:
    """Instance with the configured per-agent kinds; deterministic per seed.

    With ``ensure_nondegenerate`` set, value collisions are cleared with a
    tiny order-preserving perturbation per offending agent.
    """
    rng = _rng(cfg)
    m = cfg.m
    vs = []
    for kind in cfg.kinds:
        if kind == "table":
            vs.append(_random_monotone_table(rng, m, cfg))
        else:
            vs.append(_random_parametric(rng, m, kind, cfg))
    instance = Instance(m=m, valuations=tuple(vs))
    if cfg.ensure_nondegenerate:
        fixed = []
        for v in instance.valuations:
            if is_non_degenerate(v):
                fixed.append(v)
                continue
            probe = Instance(m=m, valuations=(v, v, v))
            delta = min_value_gap(probe)
            eps = Fraction(1) if delta is None else delta / (1 << (m + 2))
            fixed.append(_perturb_valuation(v, eps))
        instance = Instance(m=m, valuations=tuple(fixed))
    return instance


def random_layered_graph(cfg: GeneratorConfig):
    """Uniform random graph of the configured kind; deterministic per seed.

    Layered: every (vertex, foreign part) in-neighbor drawn uniformly.
    Permutation: one uniform permutation per ordered part pair.
    """
    rng = _rng(cfg)
    k, d = cfg.k, cfg.d
    if k < 2 or d < 1:
        raise PreconditionError("graphs need k >= 2 parts and d >= 1 vertices per part")
    sizes = tuple(d for _ in range(k))
    if cfg.graph_kind == "layered":
        in_nbr = tuple(
            tuple(
                None if i == j else tuple(int(x) for x in rng.integers(0, d, size=d))
                for j in range(k)
            )
            for i in range(k)
        )
        return LayeredDigraph(sizes=sizes, in_nbr=in_nbr)
    if cfg.graph_kind == "permutation":
        in_rows = [[None] * k for _ in range(k)]
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                # out-edges of part i into part j form a permutation; invert
                # it to get part j's in-neighbors from part i
                perm = [int(x) for x in rng.permutation(d)]
                inv = [0] * d
                for src, dst in enumerate(perm):
                    inv[dst] = src
                in_rows[j][i] = tuple(inv)
        in_nbr = tuple(tuple(row) for row in in_rows)
        return PermutationLayeredDigraph(sizes=sizes, in_nbr=in_nbr)
    raise PreconditionError(f"unknown graph kind {cfg.graph_kind!r}")
