"""Three-agent EFX solver.

The solver walks the space of complete partitions ``(X1, X2, X3)`` keeping
two invariants: agent 1 finds X1 and X2 EFX-feasible, and at least one of
agents 2, 3 finds X3 EFX-feasible. While no EFX allocation can be assembled
from the current partition, one of two reallocation cases strictly raises
the potential ``phi = min(v1(X1), v1(X2))``, so the walk terminates.

Agents 1 and 2 may hold any monotone valuation; agent 3 must be
MMS-feasible. Degenerate instances are perturbed up front and the answer is
reported (and re-verified) against the original valuations.
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import List, Optional, Tuple

from .bitsets import iter_goods
from .errors import (
    InstanceTooLargeError,
    InternalInvariantError,
    NotMmsFeasibleError,
    PreconditionError,
)
from .efx_core import Allocation, efx_feasible, is_efx, pr_algorithm
from .limits import MMS_CAP, MONOTONE_CAP, resolve_m_cap
from .valuations import (
    Instance,
    Valuation,
    dense_values,
    is_mms_feasible,
    is_monotone,
    is_non_degenerate,
    perturb_instance,
)


@dataclass
class SolverState:
    """Partition plus progress bookkeeping for one solver run.

    ``trace`` is an append-only event log shared across the states of one
    run; ``final_allocation`` is set when a step already produced an EFX
    allocation (case B with no strong envy from agent 1).
    """

    bundles: Tuple[int, int, int]  # (X1, X2, X3)
    iteration: int = 0
    potential: Fraction = Fraction(0)
    trace: List[dict] = field(default_factory=list)
    final_allocation: Optional[Allocation] = None


def _vals(instance: Instance, agent: int):
    return dense_values(instance.valuations[agent])


def _favorite(vals, bundles) -> int:
    """Index of the most valued bundle; ties (degenerate input only) break low."""
    return max(range(len(bundles)), key=lambda i: (vals[bundles[i]], -i))


def _record(state: SolverState, case: str) -> None:
    state.trace.append({"iter": state.iteration, "case": case, "phi": str(state.potential)})


def min_improving_subset(v: Valuation, base: int, threshold: Fraction) -> int:
    """Inclusion-minimal subset of ``base`` valued strictly above ``threshold``.

    Greedy: sweep goods in ascending index order, dropping any good whose
    removal keeps the value above the threshold; repeat until a full pass
    removes nothing. For monotone ``v`` one pass already reaches a fixpoint.
    """
    vals = dense_values(v)
    if vals[base] <= threshold:
        raise PreconditionError("base bundle does not exceed the threshold")
    cur = base
    changed = True
    while changed:
        changed = False
        for g in iter_goods(cur):
            without = cur ^ (1 << g)
            if vals[without] > threshold:
                cur = without
                changed = True
    return cur


def _potential(instance: Instance, bundles) -> Fraction:
    v1 = _vals(instance, 0)
    return min(v1[bundles[0]], v1[bundles[1]])


def initialize_state(instance: Instance) -> SolverState:
    """Starting partition satisfying both invariants.

    Agent 1 runs the reallocation procedure with her own valuation from a
    round-robin split, making every bundle EFX-feasible for her; agent 2's
    favorite bundle is then labeled X3.
    """
    start = [0, 0, 0]
    for g in range(instance.m):
        start[g % 3] |= 1 << g
    part = pr_algorithm(tuple(start), instance.valuations[0])
    bundles = _relabel_by_agent2_pick(instance, part)
    state = SolverState(bundles=bundles, potential=_potential(instance, bundles))
    _check_invariants(state, instance)
    _record(state, "init")
    return state


def _relabel_by_agent2_pick(instance: Instance, part) -> Tuple[int, int, int]:
    """Agent 2's favorite bundle becomes the new X3; the others keep their order."""
    fav = _favorite(_vals(instance, 1), part)
    rest = [part[i] for i in range(3) if i != fav]
    return (rest[0], rest[1], part[fav])


def _check_invariants(state: SolverState, instance: Instance) -> None:
    b = state.bundles
    v1 = instance.valuations[0]
    if not (efx_feasible(b, v1, 0) and efx_feasible(b, v1, 1)):
        raise InternalInvariantError("X1/X2 not EFX-feasible for agent 1")
    if not (
        efx_feasible(b, instance.valuations[1], 2)
        or efx_feasible(b, instance.valuations[2], 2)
    ):
        raise InternalInvariantError("X3 not EFX-feasible for either of agents 2, 3")


def assemble_if_possible(state: SolverState, instance: Instance) -> Optional[Allocation]:
    """Try to hand out the current bundles as an EFX allocation.

    With F the agent among {2, 3} who finds X3 EFX-feasible (agent 2
    preferred when both do) and O the other: if O likes X1 or X2 she takes
    it, F takes X3 and agent 1 the rest; if instead F likes X1 or X2, O
    picks her favorite of all three bundles and the case table fills in
    agents 1 and F. Returns None when neither agent finds X1 or X2
    EFX-feasible, the only situation needing a reallocation step.
    """
    b = state.bundles
    feas = {
        (a, k): efx_feasible(b, instance.valuations[a], k) for a in (1, 2) for k in (0, 1, 2)
    }
    if feas[(1, 2)]:
        f, o = 1, 2
    elif feas[(2, 2)]:
        f, o = 2, 1
    else:
        raise InternalInvariantError("X3 not EFX-feasible for either of agents 2, 3")

    def build(assignment) -> Allocation:
        out = [0, 0, 0]
        for agent, bundle in assignment:
            out[agent] = bundle
        return Allocation(agent_bundles=tuple(out))

    for k in (0, 1):
        if feas[(o, k)]:
            return build([(o, b[k]), (f, b[2]), (0, b[1 - k])])
    if feas[(f, 0)] or feas[(f, 1)]:
        pick = _favorite(_vals(instance, o), b)
        if pick == 0:
            return build([(o, b[0]), (0, b[1]), (f, b[2])])
        if pick == 1:
            return build([(o, b[1]), (0, b[0]), (f, b[2])])
        f_bundle = 0 if feas[(f, 0)] else 1
        return build([(o, b[2]), (f, b[f_bundle]), (0, b[1 - f_bundle])])
    return None


def _best_single_removal(vals, bundle: int) -> int:
    """Good whose removal leaves the most valued remainder (smallest index on ties)."""
    best_g, best = -1, None
    for g in iter_goods(bundle):
        w = vals[bundle ^ (1 << g)]
        if best is None or w > best:
            best_g, best = g, w
    if best_g < 0:
        raise InternalInvariantError("X3 is empty at a reallocation step")
    return best_g


def _assert_observation_one(b, instance: Instance, g_for) -> None:
    # With no assembly possible, X3 minus agent i's best removal must beat
    # both X1 and X2 for i in {2, 3}; anything else is an invariant bug.
    for a in (1, 2):
        vals = _vals(instance, a)
        rest = vals[b[2] ^ (1 << g_for[a])]
        if rest <= vals[b[0]] or rest <= vals[b[1]]:
            raise InternalInvariantError(
                f"reduced X3 does not dominate X1, X2 for agent {a + 1}"
            )


def improvement_step(state: SolverState, instance: Instance) -> SolverState:
    """One potential-raising reallocation; requires that assembly just failed.

    Case A fires when some agent i in {2, 3} still prefers the reduced X3
    over X1 plus the removed good: X1 absorbs that good and shrinks to a
    minimal improvement for agent 1 (agent 2's condition is tested first).
    Case B regroups X1 and X3 under agent 2's valuation, lets agent 3 pick,
    and branches on agent 1's strong envy; its guarantee leans on agent 3
    being MMS-feasible and is checked at runtime.
    """
    b = state.bundles
    v1 = _vals(instance, 0)
    if v1[b[0]] > v1[b[1]]:
        b = (b[1], b[0], b[2])
    v2 = _vals(instance, 1)
    v3 = _vals(instance, 2)
    g_for = {1: _best_single_removal(v2, b[2]), 2: _best_single_removal(v3, b[2])}
    _assert_observation_one(b, instance, g_for)

    new_bundles = None
    final = None
    case = ""
    for agent, vals in ((1, v2), (2, v3)):
        g = g_for[agent]
        if vals[b[2] ^ (1 << g)] > vals[b[0] | (1 << g)]:
            new_bundles = _case_a(instance, b, g)
            case = "A"
            break
    if new_bundles is None:
        new_bundles, final, case = _case_b(instance, b)

    out = replace(
        state,
        bundles=new_bundles,
        iteration=state.iteration + 1,
        final_allocation=final,
    )
    if final is None:
        out.potential = _potential(instance, new_bundles)
        if out.potential <= state.potential:
            raise InternalInvariantError("potential did not strictly increase")
    _record(out, case)
    return out


def _case_a(instance: Instance, b, g: int) -> Tuple[int, int, int]:
    """Move the chosen agent's best-removal good from X3 into X1 and re-shrink."""
    x1, x2, x3 = b
    v1 = _vals(instance, 0)
    gbit = 1 << g
    base = x1 | gbit
    new_x1 = min_improving_subset(instance.valuations[0], base, v1[x1])
    new_x3 = (x3 ^ gbit) | (base ^ new_x1)
    cand = (new_x1, x2, new_x3)
    _assert_observation_two(v1, cand)
    if efx_feasible(cand, instance.valuations[0], 0) and efx_feasible(
        cand, instance.valuations[0], 1
    ):
        return cand
    part = pr_algorithm(cand, instance.valuations[0])
    return _relabel_by_agent2_pick(instance, part)


def _assert_observation_two(v1, cand) -> None:
    # After the shrink, each of the first two bundles must beat every
    # single-good removal of the other under agent 1's valuation.
    a, b2 = cand[0], cand[1]
    for g in iter_goods(b2):
        if v1[a] <= v1[b2 ^ (1 << g)]:
            raise InternalInvariantError("shrunk X1 fails to dominate X2 removals")
    for h in iter_goods(a):
        if v1[b2] <= v1[a ^ (1 << h)]:
            raise InternalInvariantError("X2 fails to dominate shrunk X1 removals")


def _case_b(instance: Instance, b):
    """Regroup X1 and X3 under agent 2, let agent 3 pick, resolve agent 1's envy.

    Returns ``(bundles, final_allocation_or_None, case_label)``; a non-None
    allocation means the candidate was already EFX and the run is over.
    """
    x1, x2, x3 = b
    v1 = _vals(instance, 0)
    v2 = _vals(instance, 1)
    v3 = _vals(instance, 2)
    g2 = _best_single_removal(v2, x3)
    pair = pr_algorithm((x1 | (1 << g2), x3 ^ (1 << g2)), instance.valuations[1])
    pick = 0 if v3[pair[0]] >= v3[pair[1]] else 1
    y3, y2 = pair[pick], pair[1 - pick]
    if v3[y3] <= v3[x2]:
        # the two-partition guarantee failed: agent 3 cannot be MMS-feasible
        raise NotMmsFeasibleError(
            f"agent 3 values both regrouped bundles at most v3(X2)={v3[x2]}; "
            f"partition masks ({pair[0]}, {pair[1]})",
            partition=pair,
        )
    cand = (x2, y2, y3)
    if not efx_feasible(cand, instance.valuations[1], 1):
        raise InternalInvariantError("regrouped Y2 not EFX-feasible for agent 2")
    if not efx_feasible(cand, instance.valuations[2], 2):
        raise InternalInvariantError("picked Y3 not EFX-feasible for agent 3")
    envy_y2 = _strongly_envies(v1, x2, y2)
    envy_y3 = _strongly_envies(v1, x2, y3)
    if not envy_y2 and not envy_y3:
        return cand, Allocation(agent_bundles=(x2, y2, y3)), "B-none"
    if envy_y2 and envy_y3:
        part = pr_algorithm(cand, instance.valuations[0])
        return _relabel_by_agent2_pick(instance, part), None, "B-both"
    envied, other, grown_holder = (y2, y3, 2) if envy_y2 else (y3, y2, 1)
    shrunk = min_improving_subset(instance.valuations[0], envied, v1[x2])
    grown = other | (envied ^ shrunk)
    rebuilt = (x2, shrunk, grown)
    if not efx_feasible(rebuilt, instance.valuations[grown_holder], 2):
        raise InternalInvariantError("grown bundle lost EFX-feasibility for its holder")
    if efx_feasible(rebuilt, instance.valuations[0], 0) and efx_feasible(
        rebuilt, instance.valuations[0], 1
    ):
        return rebuilt, None, "B-one"
    part = pr_algorithm(rebuilt, instance.valuations[0])
    return _relabel_by_agent2_pick(instance, part), None, "B-one"


def _strongly_envies(vals, own: int, other: int) -> bool:
    for g in iter_goods(other):
        if vals[own] < vals[other ^ (1 << g)]:
            return True
    return False


def _check_preconditions(instance: Instance, cap) -> None:
    limit = resolve_m_cap(cap, MONOTONE_CAP)
    if instance.m > limit:
        raise InstanceTooLargeError(
            f"solver needs exhaustive checks; m={instance.m} exceeds cap {limit}"
        )
    for i, v in enumerate(instance.valuations):
        if not is_monotone(v, cap=limit):
            raise PreconditionError(f"agent {i + 1}'s valuation is not monotone")
    v3 = instance.valuations[2]
    if v3.kind == "table" and instance.m <= resolve_m_cap(None, MMS_CAP):
        # parametric kinds are nice-cancelable hence MMS-feasible; explicit
        # tables are checked exhaustively while the instance is small enough
        if not is_mms_feasible(v3):
            raise PreconditionError("agent 3's valuation is not MMS-feasible")


def solve_three_agent_efx(
    instance: Instance,
    trace: Optional[List[dict]] = None,
    max_iters: Optional[int] = None,
    cap: Optional[int] = None,
) -> Allocation:
    """Complete EFX allocation for a 3-agent instance.

    Verifies preconditions (all agents monotone, agent 3 MMS-feasible when
    checkable), perturbs to a non-degenerate instance when needed, then
    alternates assembly attempts with potential-raising steps. The returned
    allocation is re-verified EFX under the original valuations.

    ``trace``, when given, receives one record per solver event:
    ``{"iter": n, "case": "init|assemble|A|B-none|B-both|B-one", "phi": "p/q"}``.
    """
    _check_preconditions(instance, cap)
    work = instance
    if any(not is_non_degenerate(v, cap=cap) for v in instance.valuations):
        work = perturb_instance(instance, cap=cap)
    if max_iters is None:
        max_iters = 4 ** max(instance.m, 1)
    state = initialize_state(work)
    for _ in range(max_iters):
        b = state.bundles
        v1 = _vals(work, 0)
        if v1[b[0]] > v1[b[1]]:
            state.bundles = (b[1], b[0], b[2])
        _check_invariants(state, work)
        alloc = assemble_if_possible(state, work)
        if alloc is not None:
            _record(state, "assemble")
        else:
            state = improvement_step(state, work)
            alloc = state.final_allocation
        if alloc is not None:
            if not is_efx(work, alloc):
                raise InternalInvariantError("assembled allocation is not EFX")
            if work is not instance and not is_efx(instance, alloc):
                raise InternalInvariantError(
                    "allocation EFX under perturbation but not under the original"
                )
            if trace is not None:
                trace.extend(state.trace)
            return alloc
    raise InternalInvariantError(f"no EFX allocation after {max_iters} iterations")
