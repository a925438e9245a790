"""Visit-order optimisation over paired region endpoints.

Node 0 is the laser's starting position.  Region k (1-based, detection
order) contributes node 2k-1 (its entry point) and node 2k (its exit point),
so n regions yield 2n+1 nodes.  A valid tour is a permutation of all node
ids that starts at 0 and, after the start, walks the two endpoints of one
region back to back: positions (2i-1, 2i) of the sequence hold {2k-1, 2k}
for some region k, either orientation, each region exactly once.  Tour cost
is the sum of Euclidean gaps between consecutive sequence entries, which
includes the fixed entry-to-exit hop inside each region.

Three solvers share this contract:

* ``solve_brute_force`` enumerates every region order and orientation
  (reference oracle, n <= 7);
* ``solve_exact`` runs dynamic programming over (visited-region set, last
  region, orientation) states (n <= 14);
* ``solve_heuristic`` chains nearest-endpoint insertion with segment
  reversals and per-region flips until no move improves.

Both optimal solvers break cost ties toward the lexicographically smallest
node sequence.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import TourSizeError

EXACT_REGION_CAP = 14
BRUTE_FORCE_REGION_CAP = 7


@dataclass(eq=False)
class NodeSet:
    """Node positions indexed by node id (row 0 is the laser position)."""

    positions: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if (
            self.positions.ndim != 2
            or self.positions.shape[1] != 2
            or self.positions.shape[0] % 2 == 0
            or self.positions.shape[0] < 3
        ):
            raise ValueError("node positions must be a (2n+1, 2) array with n >= 1")

    @property
    def region_count(self) -> int:
        return (len(self.positions) - 1) // 2

    def entry_id(self, region: int, flipped: bool = False) -> int:
        return 2 * region - 1 + int(flipped)

    def exit_id(self, region: int, flipped: bool = False) -> int:
        return 2 * region - int(flipped)


@dataclass(eq=False)
class Tour:
    sequence: list
    total_length: float


def build_nodes(laser_position, plans) -> NodeSet:
    """Assemble the node table from the laser position and region plans."""
    if len(plans) == 0:
        raise ValueError("need at least one region plan")
    rows = [np.asarray(laser_position, dtype=float)]
    for plan in plans:
        rows.append(np.asarray(plan.entry_point, dtype=float))
        rows.append(np.asarray(plan.exit_point, dtype=float))
    return NodeSet(np.vstack(rows))


def tour_length(tour, nodes: NodeSet) -> float:
    """Sum of Euclidean distances along consecutive sequence entries."""
    seq = list(getattr(tour, "sequence", tour))
    pts = nodes.positions[seq]
    return float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))


def validate_tour(tour, nodes: NodeSet) -> list[str]:
    """Return all constraint violations of a candidate tour (empty if valid)."""
    seq = list(getattr(tour, "sequence", tour))
    n = nodes.region_count
    problems = []
    if len(seq) != 2 * n + 1:
        problems.append(f"sequence has {len(seq)} entries, expected {2 * n + 1}")
        return problems
    if seq[0] != 0:
        problems.append(f"sequence starts at node {seq[0]}, must start at 0")
    if sorted(seq) != list(range(2 * n + 1)):
        problems.append("sequence is not a permutation of all node ids")
    seen = set()
    for i in range(1, n + 1):
        a, b = seq[2 * i - 1], seq[2 * i]
        if abs(a - b) != 1:
            problems.append(f"pair position {i}: nodes ({a}, {b}) are not adjacent ids")
        k4 = 1 + a + b
        if k4 % 4 != 0:
            problems.append(f"pair position {i}: nodes ({a}, {b}) span two regions")
            continue
        k = k4 // 4
        if not (1 <= k <= n):
            problems.append(f"pair position {i}: region {k} out of range")
        elif k in seen:
            problems.append(f"pair position {i}: region {k} visited twice")
        else:
            seen.add(k)
    return problems


def _pair_ids(region: int, flipped: int) -> tuple[int, int]:
    # (first endpoint visited, second endpoint visited) for one region.
    return 2 * region - 1 + flipped, 2 * region - flipped


def solve_brute_force(nodes: NodeSet) -> Tour:
    """Exhaustive reference solver over all region orders and orientations."""
    n = nodes.region_count
    if n > BRUTE_FORCE_REGION_CAP:
        raise TourSizeError(
            f"instance too large for brute force: {n} regions (cap {BRUTE_FORCE_REGION_CAP})"
        )
    pos = nodes.positions
    flips = np.array(
        [[(m >> i) & 1 for i in range(n)] for m in range(1 << n)], dtype=int
    )
    best_len = np.inf
    best_seq: tuple | None = None
    for perm in itertools.permutations(range(1, n + 1)):
        regions = np.asarray(perm, dtype=int)
        first = 2 * regions - 1 + flips  # (2^n, n) node visited first per region
        second = 2 * regions - flips
        ids = np.zeros((len(flips), 2 * n + 1), dtype=int)
        ids[:, 1::2] = first
        ids[:, 2::2] = second
        seg = np.diff(pos[ids], axis=1)
        lengths = np.hypot(seg[..., 0], seg[..., 1]).sum(axis=1)
        local = float(lengths.min())
        if local > best_len:
            continue
        candidates = [tuple(ids[i]) for i in np.nonzero(lengths == local)[0]]
        lex = min(candidates)
        if local < best_len or (best_seq is not None and lex < best_seq):
            best_len, best_seq = local, lex
    seq = [int(i) for i in best_seq]
    return Tour(sequence=seq, total_length=tour_length(seq, nodes))


def solve_exact(nodes: NodeSet) -> Tour:
    """Optimal tour by dynamic programming over subsets of regions.

    State (mask, r, f): regions in ``mask`` already visited, currently at the
    second endpoint of region r traversed with flip f.  The table stores the
    cheapest cost to finish the tour from that state; a forward walk then
    picks, at every step, the smallest next entry node id among choices whose
    completion cost matches the optimum, which yields the lexicographically
    smallest optimal sequence.
    """
    n = nodes.region_count
    if n > EXACT_REGION_CAP:
        raise TourSizeError(
            f"instance too large for exact solver: {n} regions (cap {EXACT_REGION_CAP})"
        )
    pos = nodes.positions
    m = len(pos)
    dist = np.hypot(
        pos[:, 0][:, None] - pos[:, 0][None, :], pos[:, 1][:, None] - pos[:, 1][None, :]
    )
    within = [0.0] + [dist[2 * k - 1, 2 * k] for k in range(1, n + 1)]
    full = (1 << n) - 1

    def idx(mask: int, r: int, f: int) -> int:
        return (mask * n + (r - 1)) * 2 + f

    # remaining[state]: cost to visit all regions outside mask and stop.
    remaining = [np.inf] * ((full + 1) * n * 2)
    for r in range(1, n + 1):
        remaining[idx(full, r, 0)] = 0.0
        remaining[idx(full, r, 1)] = 0.0
    for mask in range(full - 1, 0, -1):
        todo = [r for r in range(1, n + 1) if not mask & (1 << (r - 1))]
        for r in range(1, n + 1):
            if not mask & (1 << (r - 1)):
                continue
            for f in (0, 1):
                here = nodes.exit_id(r, bool(f))
                best = np.inf
                for r2 in todo:
                    grown = mask | (1 << (r2 - 1))
                    for f2 in (0, 1):
                        t = (
                            dist[here, nodes.entry_id(r2, bool(f2))]
                            + within[r2]
                            + remaining[idx(grown, r2, f2)]
                        )
                        if t < best:
                            best = t
                remaining[idx(mask, r, f)] = best

    def start_cost(r: int, f: int) -> float:
        mask = 1 << (r - 1)
        return (
            dist[0, nodes.entry_id(r, bool(f))]
            + within[r]
            + remaining[idx(mask, r, f)]
        )

    optimum = min(start_cost(r, f) for r in range(1, n + 1) for f in (0, 1))

    seq = [0]
    mask, here, target = 0, 0, optimum
    for _ in range(n):
        choices = []
        for r in range(1, n + 1):
            if mask & (1 << (r - 1)):
                continue
            grown = mask | (1 << (r - 1))
            for f in (0, 1):
                t = (
                    dist[here, nodes.entry_id(r, bool(f))]
                    + within[r]
                    + remaining[idx(grown, r, f)]
                )
                if t == target:
                    choices.append((nodes.entry_id(r, bool(f)), r, f, grown))
        entry, r, f, mask = min(choices)
        seq += [entry, nodes.exit_id(r, bool(f))]
        here = nodes.exit_id(r, bool(f))
        target = remaining[idx(mask, r, f)]
    return Tour(sequence=seq, total_length=tour_length(seq, nodes))


def _order_cost(order, dist, within) -> float:
    total, here = 0.0, 0
    for r, f in order:
        a, b = _pair_ids(r, f)
        total += dist[here, a] + within[r]
        here = b
    return total


def solve_heuristic(nodes: NodeSet) -> Tour:
    """Nearest-endpoint construction refined by reversals and flips."""
    n = nodes.region_count
    pos = nodes.positions
    dist = np.hypot(
        pos[:, 0][:, None] - pos[:, 0][None, :], pos[:, 1][:, None] - pos[:, 1][None, :]
    )
    within = [0.0] + [dist[2 * k - 1, 2 * k] for k in range(1, n + 1)]

    order: list[tuple[int, int]] = []
    here, left = 0, set(range(1, n + 1))
    while left:
        r, f = min(
            ((r, f) for r in sorted(left) for f in (0, 1)),
            key=lambda rf: (dist[here, _pair_ids(*rf)[0]], rf),
        )
        order.append((r, f))
        here = _pair_ids(r, f)[1]
        left.discard(r)

    cost = _order_cost(order, dist, within)
    improved = True
    while improved:
        improved = False
        best_move, best_cost = None, cost
        for i in range(n):  # orientation flip of a single region
            trial = list(order)
            r, f = trial[i]
            trial[i] = (r, 1 - f)
            c = _order_cost(trial, dist, within)
            if c < best_cost - 1e-12:
                best_move, best_cost = trial, c
        for i in range(n - 1):  # reverse a block, flipping every member
            for j in range(i + 1, n):
                trial = (
                    order[:i]
                    + [(r, 1 - f) for r, f in reversed(order[i : j + 1])]
                    + order[j + 1 :]
                )
                c = _order_cost(trial, dist, within)
                if c < best_cost - 1e-12:
                    best_move, best_cost = trial, c
        if best_move is not None:
            order, cost, improved = best_move, best_cost, True

    seq = [0]
    for r, f in order:
        seq.extend(_pair_ids(r, f))
    return Tour(sequence=seq, total_length=tour_length(seq, nodes))


def dump_nodes(nodes: NodeSet) -> str:
    """Plain-text instance dump: one 'id x y' line per node, ordered by id."""
    lines = [
        f"{i} {float(pos[0])!r} {float(pos[1])!r}"
        for i, pos in enumerate(nodes.positions)
    ]
    return "\n".join(lines) + "\n"


def parse_nodes(text: str) -> NodeSet:
    rows = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        i, x, y = line.split()
        rows[int(i)] = (float(x), float(y))
    if sorted(rows) != list(range(len(rows))):
        raise ValueError("node dump ids must be contiguous from 0")
    return NodeSet(np.array([rows[i] for i in range(len(rows))]))
