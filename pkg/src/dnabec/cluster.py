"""Consistency graphs over erasure-corrupted reads and clique-partition search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .channel import ChannelParams, Strand


def consistent(a: Strand, b: Strand) -> bool:
    """True iff ``a`` and ``b`` agree wherever both are non-erased."""
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} vs {b.length}")
    return not ((a.bits ^ b.bits) & a.known & b.known)


@dataclass(frozen=True)
class ConsistencyGraph:
    """Undirected graph on reads; ``adjacency[i]`` is a neighbour bitmask."""

    n_reads: int
    adjacency: tuple[int, ...]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [
            (i, j)
            for i, nbrs in enumerate(self.adjacency)
            for j in range(i + 1, self.n_reads)
            if (nbrs >> j) & 1
        ]

    @property
    def edge_count(self) -> int:
        return sum(nbrs.bit_count() for nbrs in self.adjacency) // 2

    def has_edge(self, i: int, j: int) -> bool:
        return bool((self.adjacency[i] >> j) & 1)

    def components(self) -> list[list[int]]:
        seen = 0
        comps = []
        for start in range(self.n_reads):
            if (seen >> start) & 1:
                continue
            comp = 0
            frontier = 1 << start
            while frontier:
                comp |= frontier
                nxt = 0
                f = frontier
                while f:
                    low = f & -f
                    nxt |= self.adjacency[low.bit_length() - 1]
                    f ^= low
                frontier = nxt & ~comp
            seen |= comp
            comps.append([i for i in range(self.n_reads) if (comp >> i) & 1])
        return comps


def build_graph(reads: Sequence[Strand]) -> ConsistencyGraph:
    n = len(reads)
    adj = [0] * n
    for i in range(n):
        a = reads[i]
        for j in range(i + 1, n):
            if consistent(a, reads[j]):
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return ConsistencyGraph(n, tuple(adj))


@dataclass(frozen=True)
class Clustering:
    """A partition of read indices; groups are sorted tuples ordered by first member."""

    groups: tuple[tuple[int, ...], ...]

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Clustering":
        by_label: dict[int, list[int]] = {}
        for i, lab in enumerate(labels):
            by_label.setdefault(lab, []).append(i)
        return cls(tuple(sorted(tuple(g) for g in by_label.values())))

    @property
    def n_clusters(self) -> int:
        return len(self.groups)

    def is_partition_of(self, n: int) -> bool:
        members = sorted(i for g in self.groups for i in g)
        return members == list(range(n)) and all(self.groups)

    def is_valid_for(self, g: ConsistencyGraph) -> bool:
        """Partition of all vertices whose every group is a clique."""
        if not self.is_partition_of(g.n_reads):
            return False
        return all(g.has_edge(a, b) for grp in self.groups for k, a in enumerate(grp) for b in grp[k + 1 :])


def consensus(group: Sequence[Strand]) -> Strand:
    """Merge a consistent group by taking any non-erased symbol per position."""
    if not group:
        raise ValueError("consensus of an empty group")
    length = group[0].length
    bits = known = 0
    for s in group:
        if s.length != length:
            raise ValueError("length mismatch inside group")
        if (bits ^ s.bits) & known & s.known:
            raise ValueError("group is not pairwise consistent")
        bits |= s.bits
        known |= s.known
    return Strand(length, bits, known)


def enumerate_clusterings(g: ConsistencyGraph, min_clusters: int, max_clusters: int) -> Iterator[Clustering]:
    """Yield every partition of the vertices into cliques with a group count in range.

    Vertices are placed in index order, each into an existing group whose
    members are all adjacent to it or into a fresh group, so each partition
    is produced exactly once.
    """
    if min_clusters > max_clusters:
        raise ValueError("min_clusters must not exceed max_clusters")
    n = g.n_reads
    adj = g.adjacency
    masks: list[int] = []
    members: list[list[int]] = []

    def place(v: int) -> Iterator[Clustering]:
        k = len(masks)
        if k > max_clusters or k + (n - v) < min_clusters:
            return
        if v == n:
            yield Clustering(tuple(tuple(m) for m in members))
            return
        nb = adj[v]
        for gi in range(k):
            if masks[gi] & ~nb == 0:
                masks[gi] |= 1 << v
                members[gi].append(v)
                yield from place(v + 1)
                members[gi].pop()
                masks[gi] ^= 1 << v
        if k < max_clusters:
            masks.append(1 << v)
            members.append([v])
            yield from place(v + 1)
            members.pop()
            masks.pop()

    yield from place(0)


def greedy_cluster(reads: Sequence[Strand]) -> Clustering:
    """Code-oblivious single pass: join the first group consistent with every member."""
    groups: list[list[int]] = []
    for i, r in enumerate(reads):
        for grp in groups:
            if all(consistent(r, reads[j]) for j in grp):
                grp.append(i)
                break
        else:
            groups.append([i])
    return Clustering(tuple(tuple(grp) for grp in groups))


def true_clustering(origins: Sequence[int]) -> Clustering:
    return Clustering.from_labels(origins)


@dataclass(frozen=True)
class EdgeStats:
    correct_edges: int
    incorrect_edges: int
    gamma: float

    @property
    def total(self) -> int:
        return self.correct_edges + self.incorrect_edges


def edge_stats(g: ConsistencyGraph, origins: Sequence[int], params: ChannelParams) -> EdgeStats:
    """Split edges into same-origin (correct) and cross-origin (incorrect). Oracle only."""
    if len(origins) != g.n_reads:
        raise ValueError("origins must label every read")
    correct = incorrect = 0
    for i, j in g.edges:
        if origins[i] == origins[j]:
            correct += 1
        else:
            incorrect += 1
    return EdgeStats(correct, incorrect, params.gamma)


def pair_consistency_probability(p: float, L: int) -> float:
    """Probability that two reads of independent uniform strands are consistent."""
    if not 0.0 <= p <= 1.0 or L < 0:
        raise ValueError("need p in [0, 1] and L >= 0")
    return (1.0 - 0.5 * (1.0 - p) ** 2) ** L

