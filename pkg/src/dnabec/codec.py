"""Random linear coding scheme with genie-aided and exhaustive code-aware decoders.

A codeword is ``G t`` for a random ``ML x B`` generator ``G`` and a message
vector ``t`` from a random message set; it is cut into ``M`` strands of
``L`` bits (strand ``m`` holds codeword bits ``mL .. mL+L-1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Sequence

import numpy as np

from . import gf2
from .channel import ChannelParams, ReadPool, SamplingDistribution, Strand, p_eff
from .cluster import build_graph, consensus, enumerate_clusterings
from .errors import ConfigError

DEFAULT_EPSILON = 0.05
MATERIALIZE_LIMIT = 2**20


def cluster_range(M: int, q0: float, epsilon: float) -> tuple[int, int]:
    """Integer cluster-count window ``[p_L M, p_U M]`` with ``p_L,U = 1 - q0 -/+ eps``."""
    lo = math.ceil((1.0 - q0 - epsilon) * M - 1e-9)
    hi = math.floor((1.0 - q0 + epsilon) * M + 1e-9)
    return max(lo, 0), min(hi, M)


def choose_B(params: ChannelParams, dist: SamplingDistribution, epsilon: float = DEFAULT_EPSILON) -> int:
    """Message length that leaves the true system overdetermined w.h.p."""
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    p_low = 1.0 - dist.q0 - epsilon
    keep = 1.0 - p_eff(dist, params.p) - epsilon
    if p_low <= 0 or keep <= 0:
        raise ConfigError(f"epsilon={epsilon} too large for q0={dist.q0}, p={params.p}")
    B = math.floor(params.n_bits * p_low * keep * (1.0 - epsilon) + 1e-9)
    if B < 1:
        raise ConfigError("parameters give B < 1")
    return B


def collision_safe_B(
    params: ChannelParams,
    dist: SamplingDistribution,
    R: float,
    epsilon: float = DEFAULT_EPSILON,
    alpha: float = 0.0,
) -> int:
    """Smallest B whose collision-bound exponent at rate R is <= 0 (may exceed ML)."""
    p_up = 1.0 - dist.q0 + epsilon
    ML = params.n_bits
    return max(1, math.ceil(ML * (alpha / params.L + p_up / params.beta + R) - 1e-9))


@dataclass(frozen=True)
class CollisionBound:
    exponent: float

    @property
    def bound(self) -> float:
        return 2.0**self.exponent if self.exponent < 1024 else math.inf


def collision_bound(
    params: ChannelParams,
    dist: SamplingDistribution,
    R: float,
    B: int,
    alpha: float,
    epsilon: float = DEFAULT_EPSILON,
) -> CollisionBound:
    """Union bound on a wrong system hitting a wrong message, multi-draw case."""
    p_up = 1.0 - dist.q0 + epsilon
    ML = params.n_bits
    return CollisionBound(ML * (alpha / params.L + p_up / params.beta + R - B / ML))


def single_draw_collision_bound(params: ChannelParams, R: float, epsilon: float = DEFAULT_EPSILON) -> CollisionBound:
    """Union bound over all M! orderings when each strand is read exactly once."""
    return CollisionBound(params.n_bits * (R - (1.0 - params.p - epsilon - 1.0 / params.beta)))


def cluster_count_bound(M: int, epsilon: float) -> float:
    """Hoeffding bound on the cluster count straying more than ``eps*M`` from its mean."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return 2.0 * math.exp(-2.0 * M * epsilon**2)


@dataclass(frozen=True, eq=False)
class Codebook:
    """Generator matrix plus a seeded message set.

    Message ``i`` is regenerated on demand from ``(message_seed, i)``, so the
    set never has to be stored; for up to ``MATERIALIZE_LIMIT`` messages a
    value-to-index table is built on first lookup.
    """

    G: gf2.BitMatrix
    B: int
    num_messages: int
    params: ChannelParams
    message_seed: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.G.rows != self.params.n_bits or self.G.cols != self.B:
            raise ValueError("G must be ML x B")
        if self.B > self.params.n_bits:
            raise ValueError("B must not exceed ML")
        if self.num_messages < 2:
            raise ValueError("need at least two messages")

    @property
    def rate(self) -> float:
        return math.log2(self.num_messages) / self.params.n_bits

    @property
    def materialized(self) -> bool:
        return self.num_messages <= MATERIALIZE_LIMIT

    def message_int(self, index: int) -> int:
        if not 0 <= index < self.num_messages:
            raise IndexError(f"message index {index} out of range")
        cached = self._cache.get(index)
        if cached is None:
            rng = np.random.default_rng(np.random.SeedSequence(self.message_seed, spawn_key=(index,)))
            cached = gf2.random_vector(self.B, rng).to_int()
            self._cache[index] = cached
        return cached

    def message(self, index: int) -> gf2.BitVector:
        return gf2.BitVector.from_int(self.message_int(index), self.B)

    @cached_property
    def _lookup(self) -> dict[int, int]:
        table: dict[int, int] = {}
        for i in range(self.num_messages):
            table.setdefault(self.message_int(i), i)
        return table

    def index_of(self, t: int) -> int | None:
        """Smallest message index whose vector equals ``t``."""
        if self.materialized:
            return self._lookup.get(t)
        for i in range(self.num_messages):
            if self.message_int(i) == t:
                return i
        return None

    @cached_property
    def g_rows(self) -> list[int]:
        return self.G.row_ints()


def build_codebook(params: ChannelParams, B: int, num_messages: int, rng: np.random.Generator) -> Codebook:
    if num_messages < 2:
        raise ConfigError("num_messages must be at least 2")
    if not 1 <= B <= params.n_bits:
        raise ConfigError(f"B={B} must lie in [1, ML={params.n_bits}]")
    G = gf2.random_matrix(params.n_bits, B, rng)
    seed = int(rng.integers(0, 2**63))
    return Codebook(G, B, num_messages, params, seed)


def encode(cb: Codebook, message_index: int) -> list[Strand]:
    cw = gf2.mat_vec_mul(cb.G, cb.message(message_index)).to_int()
    L = cb.params.L
    full = (1 << L) - 1
    return [Strand.clean((cw >> (m * L)) & full, L) for m in range(cb.params.M)]


class DecodeStatus(str, Enum):
    SUCCESS = "success"
    NO_VALID_SYSTEM = "failure_no_valid_system"
    AMBIGUOUS = "failure_ambiguous"
    BUDGET_EXHAUSTED = "failure_budget_exhausted"


@dataclass(frozen=True)
class DecodeResult:
    status: DecodeStatus
    message_index: int | None = None
    systems_tried: int = 0

    def __post_init__(self):
        if (self.message_index is not None) != (self.status is DecodeStatus.SUCCESS):
            raise ValueError("message_index is present iff status is success")


def _absorb_strand(elim: gf2.Eliminator, g_rows: Sequence[int], strand: Strand, index: int) -> None:
    base = index * strand.length
    known = strand.known
    bits = strand.bits
    while known:
        low = known & -known
        pos = low.bit_length() - 1
        elim.absorb(g_rows[base + pos], (bits >> pos) & 1)
        if elim.inconsistent:
            return
        known ^= low


def _valid_message(cb: Codebook, elim: gf2.Eliminator) -> int | None:
    if elim.inconsistent or elim.rank < cb.B:
        return None
    return cb.index_of(elim.witness())


def genie_decode(cb: Codebook, pool: ReadPool) -> DecodeResult:
    """Decode with the true clustering and ordering revealed by the oracle origins."""
    by_origin: dict[int, list[Strand]] = {}
    for read, origin in zip(pool.reads, pool.origins):
        by_origin.setdefault(origin, []).append(read)
    elim = gf2.Eliminator(cb.B)
    for origin, group in by_origin.items():
        _absorb_strand(elim, cb.g_rows, consensus(group), origin)
    idx = _valid_message(cb, elim)
    if idx is None:
        return DecodeResult(DecodeStatus.NO_VALID_SYSTEM, systems_tried=1)
    return DecodeResult(DecodeStatus.SUCCESS, idx, systems_tried=1)


@dataclass
class _Search:
    cb: Codebook
    budget: int
    first_hit: bool
    tried: int = 0
    hits: set = field(default_factory=set)
    stop: bool = False
    exhausted: bool = False

    def charge(self) -> bool:
        self.tried += 1
        if self.tried > self.budget:
            self.exhausted = self.stop = True
        return not self.stop

    def record(self, idx: int) -> None:
        self.hits.add(idx)
        if len(self.hits) >= 2 or self.first_hit:
            self.stop = True

    def assign(self, strands: Sequence[Strand], depth: int, used: int, elim: gf2.Eliminator) -> None:
        if depth == len(strands):
            if self.charge():
                idx = _valid_message(self.cb, elim)
                if idx is not None:
                    self.record(idx)
            return
        strand = strands[depth]
        for m in range(self.cb.params.M):
            if self.stop:
                return
            if (used >> m) & 1:
                continue
            nxt = elim.copy()
            _absorb_strand(nxt, self.cb.g_rows, strand, m)
            if nxt.inconsistent:
                # every completion of this partial system is inconsistent too
                self.charge()
                continue
            self.assign(strands, depth + 1, used | (1 << m), nxt)


def _reduce_reads(reads: Sequence[Strand]) -> tuple[list[Strand], int]:
    """Drop all-erased reads and merge identical ones.

    Returns the distinct informative reads and how many extra clusters the
    dropped/merged reads could have formed on their own.
    """
    seen: dict[tuple[int, int], int] = {}
    spare = 0
    for r in reads:
        if r.known == 0:
            spare += 1
            continue
        key = (r.bits, r.known)
        if key in seen:
            spare += 1
        else:
            seen[key] = len(seen)
    distinct = [Strand(reads[0].length, b, k) for b, k in seen] if seen else []
    return distinct, spare


def exhaustive_decode(
    cb: Codebook,
    reads: Sequence[Strand],
    dist: SamplingDistribution,
    epsilon: float = DEFAULT_EPSILON,
    budget: int = 1_000_000,
    first_hit: bool = False,
    max_strands: int = 8,
    max_reads: int = 16,
) -> DecodeResult:
    """Code-aware decoding over every clique clustering and label assignment.

    A system is valid when its unique solution is a codebook message.  The
    search stops early once two distinct messages are found, or on the first
    valid system in ``first_hit`` mode.  ``budget`` caps the number of
    systems examined; a subtree pruned at an inconsistent partial system
    counts as one examined system.
    """
    M = cb.params.M
    if M > max_strands or len(reads) > max_reads:
        raise ConfigError(
            f"exhaustive decoding limited to M <= {max_strands} and <= {max_reads} reads "
            f"(got M={M}, {len(reads)} reads)"
        )
    lo, hi = cluster_range(M, dist.q0, epsilon)
    distinct, spare = _reduce_reads(reads)
    graph = build_graph(distinct)
    search = _Search(cb, budget, first_hit)
    if lo <= hi:
        for clustering in enumerate_clusterings(graph, max(lo - spare, 0), hi):
            strands = [consensus([distinct[i] for i in grp]) for grp in clustering.groups]
            strands.sort(key=lambda s: -s.known.bit_count())
            search.assign(strands, 0, 0, gf2.Eliminator(cb.B))
            if search.stop:
                break
    if len(search.hits) >= 2:
        return DecodeResult(DecodeStatus.AMBIGUOUS, systems_tried=search.tried)
    if search.exhausted:
        return DecodeResult(DecodeStatus.BUDGET_EXHAUSTED, systems_tried=search.tried)
    if search.hits:
        return DecodeResult(DecodeStatus.SUCCESS, next(iter(search.hits)), search.tried)
    return DecodeResult(DecodeStatus.NO_VALID_SYSTEM, systems_tried=search.tried)
