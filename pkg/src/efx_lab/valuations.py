"""Exact-rational valuation functions and their class checkers.

Five kinds are supported: explicit ``table`` over all subsets, and the
parametric families ``additive``, ``budget_additive``, ``unit_demand`` and
``multiplicative``. All arithmetic is ``fractions.Fraction``: the algorithms
downstream branch on strict comparisons, and floats would manufacture ties
that the exact theory excludes.

Checkers (monotone, non-degenerate, MMS-feasible, nice-cancelable) are
exhaustive over the subset lattice up to a configurable good-count cap.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Tuple

from .bitsets import iter_goods, iter_submasks
from .errors import (
    InstanceTooLargeError,
    InvalidEpsilonError,
    MalformedValuationError,
    PreconditionError,
)
from .limits import MMS_CAP, MONOTONE_CAP, resolve_m_cap

VALUATION_KINDS = ("table", "additive", "budget_additive", "unit_demand", "multiplicative")
PARAMETRIC_KINDS = ("additive", "budget_additive", "unit_demand", "multiplicative")


@dataclass(eq=True)
class Valuation:
    """A monotone-candidate set function over ``m`` goods.

    ``values`` holds the per-good parameters for parametric kinds; ``table``
    maps bitmask -> value and must cover all ``2**m`` subsets to be well
    formed. Instances are treated as immutable after construction.
    """

    kind: str
    m: int
    values: Tuple[Fraction, ...] = ()
    cap: Optional[Fraction] = None
    table: Optional[Dict[int, Fraction]] = None

    def __post_init__(self):
        if self.kind not in VALUATION_KINDS:
            raise MalformedValuationError(f"unknown valuation kind {self.kind!r}")
        if self.kind == "table":
            if self.table is None:
                raise MalformedValuationError("table valuation without a table")
        else:
            if len(self.values) != self.m:
                raise MalformedValuationError(
                    f"{self.kind} valuation needs {self.m} per-good values, got {len(self.values)}"
                )
            if any(v < 0 for v in self.values):
                raise MalformedValuationError("per-good values must be nonnegative")
            if self.kind == "budget_additive":
                if self.cap is None or self.cap < 0:
                    raise MalformedValuationError("budget_additive needs a nonnegative cap")

    @cached_property
    def _dense(self) -> Tuple[Fraction, ...]:
        """Value of every subset, indexed by bitmask. Computed once, then shared."""
        m = self.m
        size = 1 << m
        out: List[Fraction] = [Fraction(0)] * size
        if self.kind == "table":
            table = self.table
            for mask in range(size):
                try:
                    out[mask] = table[mask]
                except KeyError:
                    raise MalformedValuationError(
                        f"table valuation missing entry for subset mask {mask}"
                    ) from None
            return tuple(out)
        values = self.values
        if self.kind == "additive":
            for mask in range(1, size):
                low = mask & -mask
                out[mask] = out[mask ^ low] + values[low.bit_length() - 1]
        elif self.kind == "budget_additive":
            for mask in range(1, size):
                low = mask & -mask
                out[mask] = out[mask ^ low] + values[low.bit_length() - 1]
            out = [v if v <= self.cap else self.cap for v in out]
        elif self.kind == "unit_demand":
            for mask in range(1, size):
                low = mask & -mask
                out[mask] = max(out[mask ^ low], values[low.bit_length() - 1])
        else:  # multiplicative; empty product is 1
            out[0] = Fraction(1)
            for mask in range(1, size):
                low = mask & -mask
                out[mask] = out[mask ^ low] * values[low.bit_length() - 1]
        return tuple(out)


@dataclass(eq=True)
class Instance:
    """Three agents over the same ``m`` goods. Agent ``i`` (1-based) is ``valuations[i-1]``."""

    m: int
    valuations: Tuple[Valuation, Valuation, Valuation]

    def __post_init__(self):
        if len(self.valuations) != 3:
            raise PreconditionError("an instance has exactly 3 agents")
        for v in self.valuations:
            if v.m != self.m:
                raise PreconditionError("all valuations must share the instance's good count")


def value(v: Valuation, bundle: int) -> Fraction:
    """Exact value of a bundle (bitmask) under ``v``."""
    if bundle < 0 or bundle >= (1 << v.m):
        raise PreconditionError(f"bundle mask {bundle} out of range for m={v.m}")
    if v.kind == "table":
        try:
            return v.table[bundle]
        except KeyError:
            raise MalformedValuationError(
                f"table valuation missing entry for subset mask {bundle}"
            ) from None
    if v.kind == "additive":
        return sum((v.values[g] for g in iter_goods(bundle)), Fraction(0))
    if v.kind == "budget_additive":
        total = sum((v.values[g] for g in iter_goods(bundle)), Fraction(0))
        return min(total, v.cap)
    if v.kind == "unit_demand":
        return max((v.values[g] for g in iter_goods(bundle)), default=Fraction(0))
    # multiplicative
    prod = Fraction(1)
    for g in iter_goods(bundle):
        prod *= v.values[g]
    return prod


def dense_values(v: Valuation) -> Tuple[Fraction, ...]:
    """Materialized table of all ``2**m`` subset values, cached on the valuation."""
    return v._dense


def _check_cap(m: int, cap, default: int, what: str) -> None:
    limit = resolve_m_cap(cap, default)
    if m > limit:
        raise InstanceTooLargeError(f"{what} enumerates 2**m subsets; m={m} exceeds cap {limit}")


def is_monotone(v: Valuation, cap: Optional[int] = None) -> bool:
    """True iff ``v(S | {g}) >= v(S)`` for every subset S and good g not in S.

    Parametric kinds short-circuit when their parameters force monotonicity
    (nonnegative values; multiplicative additionally needs every value >= 1).
    """
    if v.kind in ("additive", "budget_additive", "unit_demand"):
        return True  # nonnegative parameters enforced at construction
    if v.kind == "multiplicative" and all(x >= 1 for x in v.values):
        return True
    _check_cap(v.m, cap, MONOTONE_CAP, "is_monotone")
    vals = dense_values(v)
    for mask in range(1 << v.m):
        mv = vals[mask]
        rest = ((1 << v.m) - 1) ^ mask
        for g in iter_goods(rest):
            if vals[mask | (1 << g)] < mv:
                return False
    return True


def is_non_degenerate(v: Valuation, cap: Optional[int] = None) -> bool:
    """True iff all ``2**m`` subset values are pairwise distinct."""
    _check_cap(v.m, cap, MONOTONE_CAP, "is_non_degenerate")
    vals = dense_values(v)
    return len(set(vals)) == len(vals)


def is_mms_feasible(v: Valuation, cap: Optional[int] = None) -> bool:
    """Exhaustive two-partition check.

    For every subset S and every pair of 2-partitions A, B of S the function
    must satisfy ``max(v(B1), v(B2)) >= min(v(A1), v(A2))``. Quantifying over
    all pairs reduces to one pass per S: the smallest max over partitions B
    must still beat the largest min over partitions A.
    """
    _check_cap(v.m, cap, MMS_CAP, "is_mms_feasible")
    vals = dense_values(v)
    for s in range(1 << v.m):
        worst_max = None
        best_min = None
        for sub in iter_submasks(s):
            a, b = vals[sub], vals[s ^ sub]
            hi = a if a >= b else b
            lo = b if a >= b else a
            if worst_max is None or hi < worst_max:
                worst_max = hi
            if best_min is None or lo > best_min:
                best_min = lo
        if worst_max < best_min:
            return False
    return True


def is_nice_cancelable(v: Valuation, cap: Optional[int] = None) -> bool:
    """True iff ``v(S|{g}) > v(T|{g})`` implies ``v(S) > v(T)`` for all S, T, g disjoint from both."""
    _check_cap(v.m, cap, MMS_CAP, "is_nice_cancelable")
    vals = dense_values(v)
    full = (1 << v.m) - 1
    for g in range(v.m):
        gbit = 1 << g
        others = full ^ gbit
        for s in iter_submasks(others):
            vs, vsg = vals[s], vals[s | gbit]
            for t in iter_submasks(others):
                if vsg > vals[t | gbit] and vs <= vals[t]:
                    return False
    return True


def min_value_gap(instance: Instance, cap: Optional[int] = None) -> Optional[Fraction]:
    """Smallest nonzero ``|v_i(S) - v_i(T)|`` over all agents and subset pairs.

    Returns ``None`` (the all-equal sentinel) when every agent values all
    subsets identically; any positive epsilon is then a valid perturbation.
    """
    _check_cap(instance.m, cap, MONOTONE_CAP, "min_value_gap")
    delta: Optional[Fraction] = None
    for v in instance.valuations:
        vals = sorted(dense_values(v))
        for lo, hi in zip(vals, vals[1:]):
            gap = hi - lo
            if gap != 0 and (delta is None or gap < delta):
                delta = gap
    return delta


def _perturb_valuation(v: Valuation, eps: Fraction) -> Valuation:
    """Apply ``v'(S) = v(S) + eps * sum_{g_j in S} 2**j`` with goods numbered j = 1..m.

    Good index ``i`` (0-based) is ``g_{i+1}``, so it contributes ``eps * 2**(i+1)``.
    The result is materialized as a table valuation.
    """
    vals = dense_values(v)
    table = {}
    for mask in range(1 << v.m):
        bump = 0
        for g in iter_goods(mask):
            bump += 1 << (g + 1)
        table[mask] = vals[mask] + eps * bump
    return Valuation(kind="table", m=v.m, table=table)


def perturb_instance(
    instance: Instance, eps: Optional[Fraction] = None, cap: Optional[int] = None
) -> Instance:
    """Non-degeneracy perturbation of every agent's valuation.

    Requires ``eps > 0`` and ``eps * 2**(m+1) < delta`` where ``delta`` is
    :func:`min_value_gap`; when ``eps`` is omitted the default
    ``delta / 2**(m+2)`` is used (or 1 when all values are equal). The output
    preserves every strict comparison of the original and is non-degenerate
    per agent, so any EFX allocation of the output is EFX in the original.
    """
    delta = min_value_gap(instance, cap=cap)
    if eps is None:
        eps = Fraction(1) if delta is None else delta / (1 << (instance.m + 2))
    if eps <= 0:
        raise InvalidEpsilonError(f"epsilon must be positive, got {eps}")
    if delta is not None and eps * (1 << (instance.m + 1)) >= delta:
        raise InvalidEpsilonError(
            f"epsilon {eps} too large: need eps * 2**(m+1) < {delta}"
        )
    perturbed = tuple(_perturb_valuation(v, eps) for v in instance.valuations)
    return Instance(m=instance.m, valuations=perturbed)
