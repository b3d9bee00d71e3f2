"""BEC multi-draw shuffling-sampling channel and its closed-form analysis.

All logarithms are base 2, so ``L = beta * log2(M)`` and rates are in bits
per channel bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError

PMF_TOL = 1e-9


@dataclass(frozen=True)
class SamplingDistribution:
    """Finite pmf ``q_0..q_nmax`` of the per-strand draw count Q."""

    pmf: tuple[float, ...]
    name: str | None = None

    def __post_init__(self):
        pmf = tuple(float(q) for q in self.pmf)
        object.__setattr__(self, "pmf", pmf)
        if not pmf:
            raise ConfigError("pmf must be non-empty")
        if any(q < 0 or not math.isfinite(q) for q in pmf):
            raise ConfigError("pmf entries must be finite and non-negative")
        total = math.fsum(pmf)
        if abs(total - 1.0) > PMF_TOL:
            raise ConfigError(f"pmf sums to {total!r}, not 1")
        if pmf[0] >= 1.0:
            raise ConfigError("q_0 must be < 1: no strand would ever be read")

    @classmethod
    def exactly(cls, n: int) -> "SamplingDistribution":
        pmf = [0.0] * (n + 1)
        pmf[n] = 1.0
        return cls(tuple(pmf), f"exactly({n})")

    @classmethod
    def bernoulli_draw(cls, q0: float) -> "SamplingDistribution":
        """One draw with probability ``1 - q0``, none otherwise."""
        return cls((q0, 1.0 - q0), f"bernoulli_draw({q0})")

    @classmethod
    def poisson(cls, lam: float, nmax: int) -> "SamplingDistribution":
        if lam <= 0:
            raise ConfigError("lambda must be positive")
        w = np.array([math.exp(n * math.log(lam) - lam - math.lgamma(n + 1)) for n in range(nmax + 1)])
        return cls(tuple(w / w.sum()), f"poisson({lam}, nmax={nmax})")

    @classmethod
    def geometric(cls, r: float, nmax: int) -> "SamplingDistribution":
        """``q_n`` proportional to ``(1 - r) r^n`` on ``0..nmax``."""
        if not 0 <= r < 1:
            raise ConfigError("geometric ratio must be in [0, 1)")
        w = (1.0 - r) * r ** np.arange(nmax + 1)
        return cls(tuple(w / w.sum()), f"geometric({r}, nmax={nmax})")

    @classmethod
    def from_json(cls, obj: Mapping[str, Any], where: str = "distribution") -> "SamplingDistribution":
        """Parse ``{"pmf": [...]}`` or ``{"family": ..., ...}``."""
        if not isinstance(obj, Mapping):
            raise ConfigError("expected an object", where)
        if "pmf" in obj:
            pmf = obj["pmf"]
            if not isinstance(pmf, list) or not all(_is_number(q) for q in pmf):
                raise ConfigError("expected a list of numbers", f"{where}.pmf")
            try:
                return cls(tuple(pmf), obj.get("name"))
            except ConfigError as exc:
                raise ConfigError(exc.message, f"{where}.pmf") from None
        family = obj.get("family")
        builders = {
            "poisson": (cls.poisson, ("lambda", "nmax")),
            "geometric": (cls.geometric, ("r", "nmax")),
            "bernoulli-draw": (cls.bernoulli_draw, ("q0",)),
            "exactly": (cls.exactly, ("n",)),
        }
        if family not in builders:
            raise ConfigError(
                f"unknown family {family!r}; expected one of {sorted(builders)} or a 'pmf' list",
                f"{where}.family",
            )
        build, keys = builders[family]
        args = []
        for key in keys:
            if key not in obj:
                raise ConfigError("missing field", f"{where}.{key}")
            val = obj[key]
            if not _is_number(val):
                raise ConfigError("expected a number", f"{where}.{key}")
            if key in ("nmax", "n"):
                if int(val) != val or val < 0:
                    raise ConfigError("expected a non-negative integer", f"{where}.{key}")
                val = int(val)
            args.append(val)
        try:
            return build(*args)
        except ConfigError as exc:
            raise ConfigError(exc.message, where) from None

    @property
    def q0(self) -> float:
        return self.pmf[0]

    @property
    def nmax(self) -> int:
        return len(self.pmf) - 1

    def mean(self) -> float:
        return math.fsum(n * q for n, q in enumerate(self.pmf))

    def second_moment(self) -> float:
        return math.fsum(n * n * q for n, q in enumerate(self.pmf))

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class Regime(str, Enum):
    CAPACITY_KNOWN_BLUE = "capacity_known_blue"
    ACHIEVABLE_GREEN = "achievable_green"
    ZERO_RED = "zero_red"
    OPEN_GRAY = "open_gray"


@dataclass(frozen=True)
class ChannelParams:
    M: int
    L: int
    p: float
    beta: float | None = None

    def __post_init__(self):
        if self.M < 2:
            raise ConfigError("M must be at least 2")
        if self.L < 1:
            raise ConfigError("L must be at least 1")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p must lie in [0, 1]")
        if self.beta is None:
            object.__setattr__(self, "beta", self.L / math.log2(self.M))
        if self.beta <= 0:
            raise ConfigError("beta must be positive")
        if abs(self.L - self.beta * math.log2(self.M)) > 1.0:
            raise ConfigError("L must equal beta * log2(M) to within 1")

    @classmethod
    def from_beta(cls, M: int, beta: float, p: float) -> "ChannelParams":
        L = max(1, round(beta * math.log2(M)))
        return cls(M, L, p, beta)

    @property
    def n_bits(self) -> int:
        return self.M * self.L

    @property
    def gamma(self) -> float:
        return gamma(self.p, self.beta)

    @property
    def regime(self) -> Regime:
        return regime(self.p, self.beta)


@dataclass(frozen=True)
class Strand:
    """Length-``length`` string over {0, 1, erased}.

    ``bits`` holds the symbol values and ``known`` marks non-erased
    positions; position ``l`` is bit ``l`` of each.  Erased positions always
    carry value bit 0.
    """

    length: int
    bits: int
    known: int

    def __post_init__(self):
        full = (1 << self.length) - 1
        if self.known & ~full or self.bits & ~self.known:
            raise ValueError("value bits must lie inside the known mask")

    @classmethod
    def clean(cls, bits: int, length: int) -> "Strand":
        return cls(length, bits, (1 << length) - 1)

    @classmethod
    def parse(cls, text: str) -> "Strand":
        """Parse ``"01e"``-style text; ``e``, ``ε``, ``?`` and ``-`` mark erasures."""
        syms = [c for c in text if not c.isspace()]
        bits = known = 0
        for i, c in enumerate(syms):
            if c in "01":
                known |= 1 << i
                bits |= int(c) << i
            elif c not in "eε?-":
                raise ValueError(f"bad symbol {c!r}")
        return cls(len(syms), bits, known)

    @property
    def n_erased(self) -> int:
        return self.length - self.known.bit_count()

    @property
    def is_clean(self) -> bool:
        return self.known == (1 << self.length) - 1

    def __str__(self) -> str:
        return "".join(
            (str((self.bits >> i) & 1) if (self.known >> i) & 1 else "e") for i in range(self.length)
        )


@dataclass(frozen=True)
class ReadPool:
    """Shuffled channel output; ``origins`` is oracle knowledge only."""

    reads: tuple[Strand, ...]
    origins: tuple[int, ...]

    def __post_init__(self):
        if len(self.reads) != len(self.origins):
            raise ValueError("reads and origins must have equal length")

    def view(self) -> tuple[Strand, ...]:
        """The reads a decoder is allowed to see."""
        return self.reads

    def __len__(self) -> int:
        return len(self.reads)


def sample_draw_counts(dist: SamplingDistribution, M: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(len(dist.pmf), size=M, p=np.asarray(dist.pmf))


def erase(strand: Strand, p: float, rng: np.random.Generator) -> Strand:
    keep = rng.random(strand.length) >= p
    known = _pack(keep) & strand.known
    return Strand(strand.length, strand.bits & known, known)


def _pack(mask: np.ndarray) -> int:
    return int.from_bytes(np.packbits(mask.astype(np.uint8), bitorder="little").tobytes(), "little")


def random_reads(n: int, L: int, p: float, rng: np.random.Generator) -> list[Strand]:
    """``n`` reads of independent uniform strands, each symbol erased with probability ``p``."""
    values = rng.integers(0, 2, size=(n, L), dtype=np.uint8)
    keep = (rng.random((n, L)) >= p).astype(np.uint8)
    vals = _pack_rows(values & keep)
    masks = _pack_rows(keep)
    return [Strand(L, v, k) for v, k in zip(vals, masks)]


def _pack_rows(bits: np.ndarray) -> list[int]:
    packed = np.packbits(bits, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def transmit(
    strands: Sequence[Strand],
    params: ChannelParams,
    dist: SamplingDistribution,
    rng: np.random.Generator,
) -> ReadPool:
    for s in strands:
        if s.length != params.L or not s.is_clean:
            raise ValueError("input strands must be erasure-free and of length L")
    counts = sample_draw_counts(dist, len(strands), rng)
    reads: list[Strand] = []
    origins: list[int] = []
    for i, (s, n) in enumerate(zip(strands, counts)):
        for _ in range(int(n)):
            reads.append(erase(s, params.p, rng))
            origins.append(i)
    order = rng.permutation(len(reads))
    return ReadPool(tuple(reads[k] for k in order), tuple(origins[k] for k in order))


def _seen_weights(dist: SamplingDistribution) -> list[tuple[int, float]]:
    # conditional pmf of Q given Q >= 1; normalising by the summed tail keeps
    # the single-draw case exact (weight q1/q1 == 1.0)
    seen = math.fsum(dist.pmf[1:])
    return [(n, q / seen) for n, q in enumerate(dist.pmf) if n >= 1]


def p_eff(dist: SamplingDistribution, p: float) -> float:
    """Average residual erasure probability ``E[p^Q | Q >= 1]``."""
    return math.fsum(w * p**n for n, w in _seen_weights(dist))


def expected_draw_capacity(dist: SamplingDistribution, p: float) -> float:
    """``E[C_BEC,Q | Q >= 1]`` with ``C_BEC,n = 1 - p^n``, summed directly."""
    return math.fsum(w * (1.0 - p**n) for n, w in _seen_weights(dist))


def capacity_from_draw_capacity(dist: SamplingDistribution, p: float, beta: float) -> float:
    """``(1 - q0)(E[C_BEC,Q | Q >= 1] - 1/beta)``, unclamped."""
    return (1.0 - dist.q0) * (expected_draw_capacity(dist, p) - 1.0 / beta)


def capacity_from_peff(dist: SamplingDistribution, p: float, beta: float) -> float:
    """``(1 - q0)(1 - p_eff - 1/beta)``, unclamped."""
    return (1.0 - dist.q0) * (1.0 - p_eff(dist, p) - 1.0 / beta)


def capacity(dist: SamplingDistribution, p: float, beta: float) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    return max(0.0, capacity_from_peff(dist, p, beta))


def gamma(p: float, beta: float) -> float:
    """Exponent of the spurious-consistency probability ``M^-gamma``."""
    return -beta * math.log2(1.0 - 0.5 * (1.0 - p) ** 2)


def beta_blue(p: float) -> float:
    return 2.0 / (1.0 - 2.0 * p + p * p)


def beta_green(p: float) -> float:
    return -1.0 / math.log2(1.0 - 0.5 * (1.0 - p) ** 2)


def regime(p: float, beta: float) -> Regime:
    if not 0.0 <= p < 1.0:
        raise ValueError("p must lie in [0, 1)")
    if beta <= 0:
        raise ValueError("beta must be positive")
    if beta > beta_blue(p):
        return Regime.CAPACITY_KNOWN_BLUE
    if gamma(p, beta) > 1.0:
        return Regime.ACHIEVABLE_GREEN
    if beta < 1.0:
        return Regime.ZERO_RED
    return Regime.OPEN_GRAY


def boundary_curves(p_grid: Sequence[float]) -> list[tuple[float, float, float]]:
    """Rows ``(p, beta_blue, beta_green)`` for each grid point."""
    rows = []
    for p in map(float, p_grid):
        if not 0.0 < p < 1.0:
            raise ValueError(f"p={p} outside (0, 1)")
        rows.append((p, beta_blue(p), beta_green(p)))
    return rows
