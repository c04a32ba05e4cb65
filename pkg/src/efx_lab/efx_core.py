"""EFX predicates, strong-envy witnesses, and the single-valuation
reallocation procedure used as a subroutine by the three-agent solver.

A partition is a tuple of disjoint bitmask bundles covering all goods; an
allocation assigns bundle ``agent_bundles[i]`` to agent ``i`` (0-based
internally, agents are reported 1-based at the JSON boundary).
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from .bitsets import is_partition, iter_goods
from .errors import DegeneracyError, InternalInvariantError, PreconditionError
from .valuations import Instance, Valuation, dense_values


@dataclass(eq=True, frozen=True)
class Allocation:
    """Complete allocation: ``agent_bundles[i]`` is the bitmask agent ``i`` receives."""

    agent_bundles: Tuple[int, int, int]


@dataclass(eq=True, frozen=True)
class EnvyWitness:
    """One strong-envy certificate: ``envier`` values ``envied``'s bundle minus
    ``good`` strictly above her own bundle. Agent indices 0-based, good in [0, m)."""

    envier: int
    envied: int
    good: int


def removal_max(vals, bundles: Tuple[int, ...]) -> Optional[Fraction]:
    """Largest value, under ``vals``, of any bundle with one good removed.

    Returns None when no bundle has a removable good (all empty).
    """
    best = None
    for b in bundles:
        for g in iter_goods(b):
            w = vals[b ^ (1 << g)]
            if best is None or w > best:
                best = w
    return best


def efx_feasible(bundles: Tuple[int, ...], v: Valuation, k: int) -> bool:
    """True iff bundle ``k`` is EFX-feasible to an agent with valuation ``v``:
    she values it at least as much as every bundle with any single good removed."""
    if not is_partition(bundles, v.m):
        raise PreconditionError("efx_feasible needs a complete partition")
    if not 0 <= k < len(bundles):
        raise PreconditionError(f"bundle index {k} out of range")
    vals = dense_values(v)
    threshold = removal_max(vals, bundles)
    return threshold is None or vals[bundles[k]] >= threshold


def strong_envy_witness(instance: Instance, alloc: Allocation) -> Optional[EnvyWitness]:
    """Lexicographically smallest (envier, envied, good) strong-envy triple, or None."""
    bundles = alloc.agent_bundles
    if not is_partition(bundles, instance.m):
        raise PreconditionError("allocation must be a complete partition")
    for i in range(3):
        vals = dense_values(instance.valuations[i])
        own = vals[bundles[i]]
        for j in range(3):
            if j == i:
                continue
            for g in iter_goods(bundles[j]):
                if own < vals[bundles[j] ^ (1 << g)]:
                    return EnvyWitness(envier=i, envied=j, good=g)
    return None


def is_efx(instance: Instance, alloc: Allocation) -> bool:
    """True iff no agent strongly envies another."""
    return strong_envy_witness(instance, alloc) is None


def pr_algorithm(
    bundles: Tuple[int, ...], v: Valuation, max_iters: Optional[int] = None
) -> Tuple[int, ...]:
    """Reallocate single goods until every bundle is EFX-feasible under ``v``.

    While some bundle beats another-minus-one-good, the lowest-valued bundle
    receives the good whose removal leaves the most valuable donor remainder
    (ties: smallest donor index, then smallest good). Each step strictly
    raises the minimum bundle value, so for non-degenerate ``v`` the walk
    terminates; a non-improving step means degenerate input and aborts.

    Returns a partition with ``min_i v(P'_i) >= min_i v(P_i)``, equality only
    if the input was already EFX with respect to ``v``.
    """
    n = len(bundles)
    if n not in (2, 3):
        raise PreconditionError("the reallocation procedure runs on 2 or 3 bundles")
    m = v.m
    if max_iters is None:
        max_iters = (3**m) * max(m, 1)
    vals = dense_values(v)
    cur = list(bundles)
    for _ in range(max_iters):
        threshold = removal_max(vals, tuple(cur))
        cur_min = min(vals[b] for b in cur)
        if threshold is None or cur_min >= threshold:
            return tuple(cur)
        # receiver: lowest-valued bundle, smallest index on (degenerate) ties
        recv = min(range(n), key=lambda i: (vals[cur[i]], i))
        donor, good, best = -1, -1, None
        for j in range(n):
            if j == recv:
                continue
            for g in iter_goods(cur[j]):
                w = vals[cur[j] ^ (1 << g)]
                if best is None or w > best:
                    donor, good, best = j, g, w
        if best is None or best <= vals[cur[recv]]:
            raise InternalInvariantError("no improving reallocation despite EFX violation")
        cur[donor] ^= 1 << good
        cur[recv] |= 1 << good
        new_min = min(vals[b] for b in cur)
        if new_min <= cur_min:
            raise DegeneracyError(
                "reallocation step did not raise the minimum bundle value; "
                "input valuation is degenerate"
            )
    raise InternalInvariantError(f"no EFX partition after {max_iters} reallocation steps")
