"""Layered (k-partite) digraphs and rainbow-cycle finders.

A layered digraph has k parts of at most d vertices each, and every vertex
has exactly one incoming edge from every part other than its own. A rainbow
cycle is a directed cycle visiting each part at most once. Three finders are
provided: seeded random sampling, a deterministic greedy driven by exact
conditional expectations, and a constructive procedure for permutation
graphs (one outgoing edge per foreign part as well) that needs only
``k >= 2d - 1`` parts.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    InternalInvariantError,
    PreconditionError,
    StructuralContradictionError,
    ThresholdNotMetError,
)

Vertex = Tuple[int, int]  # (part, offset)


@dataclass(eq=True)
class LayeredDigraph:
    """``in_nbr[i][j][o]`` is the offset in part ``j`` of the unique in-neighbor
    of vertex ``(i, o)`` from part ``j``; ``in_nbr[i][i]`` is None. Treated as
    immutable after construction."""

    sizes: Tuple[int, ...]
    in_nbr: Tuple[Tuple[Optional[Tuple[int, ...]], ...], ...]

    @property
    def k(self) -> int:
        return len(self.sizes)

    @property
    def max_part(self) -> int:
        return max(self.sizes)


@dataclass(eq=True)
class PermutationLayeredDigraph(LayeredDigraph):
    """Layered digraph whose inter-part edge sets are permutations: every
    vertex also has exactly one outgoing edge to every foreign part, and all
    parts have the same size."""

    @cached_property
    def out_nbr(self) -> Tuple[Tuple[Optional[Tuple[int, ...]], ...], ...]:
        """``out_nbr[i][j][o]``: offset in part ``j`` of the out-edge of ``(i, o)``."""
        k = self.k
        out: List[List[Optional[List[int]]]] = [
            [None if i == j else [-1] * self.sizes[i] for j in range(k)] for i in range(k)
        ]
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                for o, u in enumerate(self.in_nbr[i][j]):
                    if out[j][i][u] != -1:
                        raise PreconditionError(
                            f"edges from part {j} to part {i} are not a permutation"
                        )
                    out[j][i][u] = o
        return tuple(tuple(None if col is None else tuple(col) for col in row) for row in out)


def validate(graph: LayeredDigraph) -> List[str]:
    """All type-invariant violations, empty when the graph is well formed."""
    problems: List[str] = []
    k = len(graph.sizes)
    if k < 2:
        problems.append(f"need at least 2 parts, got {k}")
    for i, size in enumerate(graph.sizes):
        if size < 1:
            problems.append(f"part {i} is empty")
    if len(graph.in_nbr) != k:
        problems.append("in-neighbor table does not cover every part")
        return problems
    for i in range(k):
        row = graph.in_nbr[i]
        if len(row) != k:
            problems.append(f"part {i}: in-neighbor row has wrong width")
            continue
        for j in range(k):
            if i == j:
                if row[j] is not None:
                    problems.append(f"part {i}: unexpected intra-part edges")
                continue
            col = row[j]
            if col is None or len(col) != graph.sizes[i]:
                problems.append(f"part {i}: missing in-edges from part {j}")
                continue
            for o, u in enumerate(col):
                if not 0 <= u < graph.sizes[j]:
                    problems.append(
                        f"vertex ({i}, {o}): in-neighbor offset {u} invalid for part {j}"
                    )
    if isinstance(graph, PermutationLayeredDigraph) and not problems:
        if len(set(graph.sizes)) > 1:
            problems.append("permutation graph parts must all have the same size")
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                seen = set(graph.in_nbr[i][j])
                if len(seen) != graph.sizes[j]:
                    problems.append(
                        f"edges from part {j} to part {i} do not form a permutation"
                    )
    return problems


def _require_valid(graph: LayeredDigraph) -> None:
    problems = validate(graph)
    if problems:
        raise PreconditionError("invalid graph: " + "; ".join(problems))


@dataclass(eq=True, frozen=True)
class RainbowCycle:
    """Directed cycle as a vertex sequence; the edge from the last vertex back
    to the first is implied."""

    vertices: Tuple[Vertex, ...]


def cycle_violations(graph: LayeredDigraph, cycle: RainbowCycle) -> List[str]:
    """Why ``cycle`` is not a valid rainbow cycle of ``graph`` (empty if it is)."""
    problems: List[str] = []
    verts = cycle.vertices
    if len(verts) < 2:
        problems.append("cycle must have at least 2 vertices")
        return problems
    parts = [p for p, _ in verts]
    if len(set(parts)) != len(parts):
        problems.append("cycle visits some part more than once")
    for (p1, o1), (p2, o2) in zip(verts, verts[1:] + verts[:1]):
        if p1 == p2 or graph.in_nbr[p2][p1] is None or graph.in_nbr[p2][p1][o2] != o1:
            problems.append(f"missing edge ({p1},{o1}) -> ({p2},{o2})")
    return problems


def threshold_k(d: int) -> int:
    """Smallest k with ``k * (1 - 1/d)**(k-1) < 1``, in exact arithmetic."""
    if d < 1:
        raise PreconditionError("d must be positive")
    q = Fraction(d - 1, d)
    k = 1
    power = Fraction(1)  # q**(k-1)
    while k * power >= 1:
        k += 1
        power *= q
    return k


def extract_cycle(graph: LayeredDigraph, selection: Sequence[int], start_part: int = 0) -> RainbowCycle:
    """Walk in-neighbors inside a one-vertex-per-part selection until a repeat.

    Every selected vertex must have an in-neighbor among the selected
    vertices (smallest-part in-neighbor is followed, making the walk a
    function). The vertices between the first and second visit of the repeat
    form a directed cycle; each part contributes at most one vertex.
    """
    k = len(graph.sizes)
    if len(selection) != k:
        raise PreconditionError("selection must pick one vertex per part")

    def pred(vertex: Vertex) -> Vertex:
        i, o = vertex
        for j in range(k):
            if j != i and graph.in_nbr[i][j][o] == selection[j]:
                return (j, selection[j])
        raise PreconditionError(f"selected vertex ({i},{o}) has no selected in-neighbor")

    walk: List[Vertex] = [(start_part, selection[start_part])]
    seen: Dict[Vertex, int] = {walk[0]: 0}
    while True:
        nxt = pred(walk[-1])
        if nxt in seen:
            segment = walk[seen[nxt]:]
            return RainbowCycle(vertices=tuple(reversed(segment)))
        seen[nxt] = len(walk)
        walk.append(nxt)


def find_rainbow_cycle_randomized(
    graph: LayeredDigraph, seed: int, max_trials: int
) -> Optional[RainbowCycle]:
    """Sample one vertex per part uniformly per trial; succeed when every
    sampled vertex has a sampled in-neighbor.

    Trials use a counter-based generator keyed by ``seed`` with the trial
    number as counter, so runs are reproducible and trials independent.
    """
    _require_valid(graph)
    sizes = np.array(graph.sizes)
    key = seed & ((1 << 128) - 1)
    for trial in range(max_trials):
        rng = np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, trial]))
        sel = [int(x) for x in rng.integers(0, sizes)]
        if _selection_covered(graph, sel):
            return extract_cycle(graph, sel)
    return None


def _selection_covered(graph: LayeredDigraph, sel: Sequence[int]) -> bool:
    k = len(graph.sizes)
    for i in range(k):
        o = sel[i]
        if not any(graph.in_nbr[i][j][o] == sel[j] for j in range(k) if j != i):
            return False
    return True


def conditional_expectation(graph: LayeredDigraph, decided: Dict[int, int]) -> Fraction:
    """Expected number of uncovered selected vertices given partial choices.

    For each vertex v, the event counted is "v is selected and no selected
    vertex is an in-neighbor of v". Decided parts contribute only their
    chosen vertex (0 if a decided choice already covers it); undecided parts
    contribute ``1/|V_j|`` per vertex, in both cases times ``(1 - 1/|V_t|)``
    over the undecided parts that could still cover the vertex.
    """
    _require_valid(graph)
    k = len(graph.sizes)
    for part, off in decided.items():
        if not 0 <= part < k or not 0 <= off < graph.sizes[part]:
            raise PreconditionError(f"decided choice ({part}, {off}) out of range")
    undecided = [t for t in range(k) if t not in decided]
    total = Fraction(0)
    for i in range(k):
        offsets = [decided[i]] if i in decided else range(graph.sizes[i])
        for o in offsets:
            covered = any(
                graph.in_nbr[i][j][o] == decided[j] for j in decided if j != i
            )
            if covered:
                continue
            p = Fraction(1) if i in decided else Fraction(1, graph.sizes[i])
            for t in undecided:
                if t != i:
                    p *= Fraction(graph.sizes[t] - 1, graph.sizes[t])
            total += p
    return total


def find_rainbow_cycle_derandomized(
    graph: LayeredDigraph, phi_log: Optional[List[Fraction]] = None
) -> RainbowCycle:
    """Deterministic finder: pick each part's vertex minimizing the conditional
    expectation of uncovered vertices; below 1 throughout, it ends at 0, so
    the final selection induces a cycle.

    Requires ``k * (1 - 1/d_max)**(k-1) < 1`` with ``d_max`` the largest part
    size (the conservative bound the expectation argument uses). The greedy
    maintains per-vertex contributions incrementally; ``phi_log``, when
    given, receives the potential after each choice.
    """
    _require_valid(graph)
    k = len(graph.sizes)
    d_max = graph.max_part
    if k * Fraction(d_max - 1, d_max) ** (k - 1) >= 1:
        raise ThresholdNotMetError(
            f"k={k} parts with max size {d_max} do not satisfy k*(1-1/d)^(k-1) < 1"
        )
    # contrib[(i, o)]: probability that (i, o) is selected and uncovered,
    # given choices so far; kept exact and updated per decision.
    contrib: Dict[Vertex, Fraction] = {}
    for i in range(k):
        base = Fraction(1, graph.sizes[i])
        for t in range(k):
            if t != i:
                base *= Fraction(graph.sizes[t] - 1, graph.sizes[t])
        for o in range(graph.sizes[i]):
            contrib[(i, o)] = base
    phi = sum(contrib.values(), Fraction(0))
    selection: List[int] = []
    for j in range(k):
        size = graph.sizes[j]
        own = [contrib[(j, o)] for o in range(size)]
        if size == 1:
            best_o = 0
        else:
            shrink = Fraction(size, size - 1)  # removes the (1 - 1/|V_j|) factor
            # kill[u]: total contribution of foreign vertices whose part-j
            # in-neighbor is u; choosing u zeroes exactly those.
            kill = [Fraction(0)] * size
            foreign_total = Fraction(0)
            for (i, o), c in contrib.items():
                if i != j and c != 0:
                    foreign_total += c
                    kill[graph.in_nbr[i][j][o]] += c
            best_o, best_phi = 0, None
            for u in range(size):
                cand = own[u] * size + (foreign_total - kill[u]) * shrink
                if best_phi is None or cand < best_phi:
                    best_o, best_phi = u, cand
        # apply the choice
        for o in range(size):
            contrib[(j, o)] = own[o] * size if o == best_o else Fraction(0)
        for (i, o), c in list(contrib.items()):
            if i == j or c == 0:
                continue
            if graph.in_nbr[i][j][o] == best_o:
                contrib[(i, o)] = Fraction(0)
            else:
                # a size-1 part's factor is 0, so c == 0 was already skipped
                contrib[(i, o)] = c * size / (size - 1)
        new_phi = sum(contrib.values(), Fraction(0))
        if new_phi > phi:
            raise InternalInvariantError("conditional expectation increased")
        phi = new_phi
        selection.append(best_o)
        if phi_log is not None:
            phi_log.append(phi)
    if phi != 0:
        raise InternalInvariantError("greedy ended with uncovered vertices")
    return extract_cycle(graph, selection)


def find_rainbow_cycle_permutation(
    graph: PermutationLayeredDigraph, root: Vertex
) -> RainbowCycle:
    """Constructive finder for permutation graphs with ``k >= 2d - 1`` parts.

    Grows a table of vertices reachable from ``root`` through paths that use
    each part at most once, two new parts per round. Out-edges of the current
    table hit distinct vertices (edges between parts are permutations), so
    the table never shrinks; when an unreached vertex gains an edge from a
    reached one the table grows by one. Once every vertex of the current
    part is reached, the root's in-edge from that part closes the cycle.

    When no round applies, the unreached remainders of all open parts form a
    closed permutation subgraph with strictly smaller parts and enough of
    them, so the finder recurses into it and lifts the cycle back.
    """
    _require_valid(graph)
    k = graph.k
    d = graph.sizes[0]
    p_root, o_root = root
    if not (0 <= p_root < k and 0 <= o_root < graph.sizes[p_root]):
        raise PreconditionError(f"root {root} out of range")
    if k < 2 * d - 1:
        raise PreconditionError(f"need k >= 2d-1 parts, got k={k}, d={d}")
    out = graph.out_nbr
    if d == 1:
        other = 0 if p_root != 0 else 1
        return RainbowCycle(vertices=(root, (other, out[p_root][other][o_root])))

    chosen = {p_root}
    cur = p_root
    # reach: offset in the current part -> witness path from the root to it
    # (inclusive); the root starts as reachable from itself.
    reach: Dict[int, Tuple[Vertex, ...]] = {o_root: (root,)}
    for i in range(1, d):
        open_parts = [p for p in range(k) if p not in chosen]
        if len(reach) >= i + 1:
            # the skipped part may be any open one; take the smallest index
            w_part = open_parts[0]
            u_part = open_parts[1]
            reach = {
                out[cur][u_part][o]: path + ((u_part, out[cur][u_part][o]),)
                for o, path in reach.items()
            }
            chosen.update((w_part, u_part))
            cur = u_part
            continue
        images = {
            p: {out[cur][p][o]: o for o in reach} for p in open_parts
        }
        step = _find_extending_edge(out, open_parts, images)
        if step is not None:
            w_part, u_part, w_off, src_off = step
            new_reach = {
                out[cur][u_part][o]: path + ((u_part, out[cur][u_part][o]),)
                for o, path in reach.items()
            }
            u_off = out[w_part][u_part][w_off]
            new_reach[u_off] = reach[src_off] + ((w_part, w_off), (u_part, u_off))
            reach = new_reach
            chosen.update((w_part, u_part))
            cur = u_part
            continue
        # no round applies: recurse into the closed subgraph on the
        # unreached remainders of the open parts
        return _recurse_on_remainders(graph, open_parts, images, cur, i)

    if len(reach) != d:
        raise InternalInvariantError("final part not fully reached")
    closer = graph.in_nbr[p_root][cur][o_root]
    return RainbowCycle(vertices=reach[closer])


def _find_extending_edge(out, open_parts, images):
    """First (W, U, w_off, src_off) edge from a reached image into an unreached
    remainder, scanning parts and offsets in ascending order."""
    for u_part in open_parts:
        u_image = images[u_part]
        for w_part in open_parts:
            if w_part == u_part:
                continue
            for w_off in sorted(images[w_part]):
                if out[w_part][u_part][w_off] not in u_image:
                    return (w_part, u_part, w_off, images[w_part][w_off])
    return None


def _recurse_on_remainders(
    graph: PermutationLayeredDigraph, open_parts, images, cur: int, i: int
) -> RainbowCycle:
    """Build the permutation subgraph on the unreached vertices and lift its cycle."""
    d = graph.sizes[0]
    out = graph.out_nbr
    remainders = {}
    for p in open_parts:
        rem = [o for o in range(graph.sizes[p]) if o not in images[p]]
        if len(rem) != d - i:
            raise StructuralContradictionError(
                f"part {p} has {len(rem)} unreached vertices, expected {d - i}"
            )
        remainders[p] = rem
    index_of = {p: {o: idx for idx, o in enumerate(rem)} for p, rem in remainders.items()}
    sub_k = len(open_parts)
    sub_in: List[List[Optional[Tuple[int, ...]]]] = [[None] * sub_k for _ in range(sub_k)]
    for bi, pb in enumerate(open_parts):
        for ai, pa in enumerate(open_parts):
            if ai == bi:
                continue
            col = []
            for o in remainders[pb]:
                u = graph.in_nbr[pb][pa][o]
                if u not in index_of[pa]:
                    raise StructuralContradictionError(
                        f"unreached vertex ({pb},{o}) has its part-{pa} in-edge "
                        "from a reached vertex"
                    )
                col.append(index_of[pa][u])
            sub_in[bi][ai] = tuple(col)
    sub = PermutationLayeredDigraph(
        sizes=tuple(d - i for _ in open_parts),
        in_nbr=tuple(tuple(row) for row in sub_in),
    )
    sub_cycle = find_rainbow_cycle_permutation(sub, (0, 0))
    lifted = tuple(
        (open_parts[p], remainders[open_parts[p]][o]) for p, o in sub_cycle.vertices
    )
    return RainbowCycle(vertices=lifted)
