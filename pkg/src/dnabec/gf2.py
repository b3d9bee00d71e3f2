"""Dense linear algebra over GF(2).

Rows are bit-packed into little-endian ``uint64`` words: bit ``j`` of a row
lives in word ``j // 64`` at position ``j % 64``.  Two elimination engines
are provided:

* a batched numpy kernel (:func:`batch_rank`) that eliminates many matrices
  at once, used for rank queries and the random full-rank statistics;
* :class:`Eliminator`, an incremental XOR basis over Python integers that
  absorbs equations one at a time.  :func:`solve` and the exhaustive decoder
  are built on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

WORD = 64


def _nwords(nbits: int) -> int:
    return (nbits + WORD - 1) // WORD


def _tail_mask(nbits: int) -> np.uint64:
    rem = nbits % WORD
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


def _words_to_int(words: np.ndarray) -> int:
    return int.from_bytes(words.astype("<u8").tobytes(), "little")


def _int_to_words(value: int, nbits: int) -> np.ndarray:
    nw = _nwords(nbits)
    raw = value.to_bytes(nw * 8, "little") if nw else b""
    return np.frombuffer(raw, dtype="<u8").astype(np.uint64)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a ``(..., n)`` array of 0/1 values into ``(..., ceil(n/64))`` words."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    nw = _nwords(n)
    pad = nw * WORD - n
    if pad:
        bits = np.concatenate(
            [bits, np.zeros(bits.shape[:-1] + (pad,), dtype=np.uint8)], axis=-1
        )
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return packed.view("<u8").astype(np.uint64).reshape(bits.shape[:-1] + (nw,))


def unpack_bits(words: np.ndarray, nbits: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype="<u8")
    as_bytes = words.view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return bits[..., :nbits]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.uint64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BitVector:
    """Immutable packed binary vector."""

    len: int
    words: np.ndarray

    def __post_init__(self):
        if self.words.shape != (_nwords(self.len),):
            raise ValueError("word count does not match length")
        if self.len % WORD and self.words.size:
            if self.words[-1] & ~_tail_mask(self.len):
                raise ValueError("bits set beyond vector length")
        object.__setattr__(self, "words", _frozen(self.words))

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls(n, np.zeros(_nwords(n), dtype=np.uint64))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        arr = np.asarray(list(bits), dtype=np.uint8)
        return cls(arr.size, pack_bits(arr))

    @classmethod
    def from_int(cls, value: int, n: int) -> "BitVector":
        if value < 0 or value >> n:
            raise ValueError(f"value does not fit in {n} bits")
        return cls(n, _int_to_words(value, n))

    def to_int(self) -> int:
        return _words_to_int(self.words)

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.len)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.len:
            raise IndexError(i)
        return int((self.words[i // WORD] >> np.uint64(i % WORD)) & np.uint64(1))

    def __len__(self) -> int:
        return self.len

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.len == other.len and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.len, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitVector({''.join(map(str, self.to_bits()))})"


@dataclass(frozen=True, eq=False)
class BitMatrix:
    """Immutable row-major packed binary matrix."""

    rows: int
    cols: int
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != (self.rows, _nwords(self.cols)):
            raise ValueError("data shape does not match dimensions")
        if self.cols % WORD and self.data.size:
            if np.any(self.data[:, -1] & ~_tail_mask(self.cols)):
                raise ValueError("bits set beyond column count")
        object.__setattr__(self, "data", _frozen(self.data))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, np.zeros((rows, _nwords(cols)), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_array(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        if np.any(arr > 1):
            raise ValueError("entries must be 0 or 1")
        return cls(arr.shape[0], arr.shape[1], pack_bits(arr))

    @classmethod
    def from_rows(cls, rows: Sequence[int], cols: int) -> "BitMatrix":
        """Build from integer rows (bit ``j`` of the int is column ``j``)."""
        data = np.zeros((len(rows), _nwords(cols)), dtype=np.uint64)
        for i, r in enumerate(rows):
            if r < 0 or r >> cols:
                raise ValueError(f"row {i} does not fit in {cols} columns")
            data[i] = _int_to_words(r, cols)
        return cls(len(rows), cols, data)

    def to_array(self) -> np.ndarray:
        return unpack_bits(self.data, self.cols)

    def row_ints(self) -> list[int]:
        return [_words_to_int(row) for row in self.data]

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.data[i].copy())

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(ij)
        return int((self.data[i, j // WORD] >> np.uint64(j % WORD)) & np.uint64(1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and bool(np.array_equal(self.data, other.data))
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


def random_matrix(rows: int, cols: int, rng: np.random.Generator) -> BitMatrix:
    """i.i.d. Bernoulli(1/2) matrix drawn from ``rng``."""
    if rows < 0 or cols < 0:
        raise ValueError("dimensions must be non-negative")
    return BitMatrix(rows, cols, _random_words((rows,), cols, rng))


def random_vector(n: int, rng: np.random.Generator) -> BitVector:
    return BitVector(n, _random_words((), n, rng))


def _random_words(shape: tuple[int, ...], nbits: int, rng: np.random.Generator) -> np.ndarray:
    nw = _nwords(nbits)
    words = rng.integers(0, 2**64, size=shape + (nw,), dtype=np.uint64, endpoint=False)
    if nw:
        words[..., -1] &= _tail_mask(nbits)
    return words


def mat_vec_mul(A: BitMatrix, x: BitVector) -> BitVector:
    if A.cols != x.len:
        raise ValueError(f"dimension mismatch: A has {A.cols} columns, x has length {x.len}")
    if A.rows == 0:
        return BitVector.zeros(0)
    prod = A.data & x.words[None, :]
    # parity of each row's AND with x
    acc = np.bitwise_xor.reduce(prod, axis=1) if prod.shape[1] else np.zeros(A.rows, np.uint64)
    for shift in (32, 16, 8, 4, 2, 1):
        acc ^= acc >> np.uint64(shift)
    bits = (acc & np.uint64(1)).astype(np.uint8)
    return BitVector(A.rows, pack_bits(bits))


def select_rows(A: BitMatrix, indices: Sequence[int]) -> BitMatrix:
    idx = np.asarray(list(indices), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= A.rows):
        raise IndexError("row index out of range")
    return BitMatrix(idx.size, A.cols, A.data[idx].reshape(idx.size, A.data.shape[1]))


def batch_rank(data: np.ndarray, cols: int) -> np.ndarray:
    """GF(2) ranks of a stack of packed matrices with shape ``(T, rows, words)``.

    Works on a copy; one pivot column is processed per step for all matrices
    simultaneously.
    """
    work = np.array(data, dtype=np.uint64, copy=True)
    T, R, _ = work.shape
    ranks = np.zeros(T, dtype=np.int64)
    if R == 0 or cols == 0:
        return ranks
    used = np.zeros((T, R), dtype=bool)
    tidx = np.arange(T)
    for c in range(cols):
        w, b = divmod(c, WORD)
        col = ((work[:, :, w] >> np.uint64(b)) & np.uint64(1)).astype(bool)
        cand = col & ~used
        found = cand.any(axis=1)
        if not found.any():
            continue
        piv = cand.argmax(axis=1)
        # columns left of c are finished, so only words from w onward matter
        prow = work[tidx, piv, w:]
        hit = col & found[:, None]
        hit[tidx, piv] = False
        fill = np.uint64(0) - hit.astype(np.uint64)
        work[:, :, w:] ^= fill[:, :, None] & prow[:, None, :]
        used[tidx[found], piv[found]] = True
        ranks += found
        if (ranks >= R).all():
            break
    return ranks


def rank(A: BitMatrix) -> int:
    return int(batch_rank(A.data[None], A.cols)[0])


class Eliminator:
    """Incremental Gaussian elimination for a system ``A x = y`` over GF(2).

    Each absorbed equation is a coefficient row (int, bit ``j`` = column
    ``j``) and a right-hand-side bit.  The basis is keyed by the highest set
    coefficient bit.  Once an absorbed equation reduces to ``0 = 1`` the
    system is permanently inconsistent.
    """

    __slots__ = ("ncols", "_basis", "_rhs_bit", "_coef_mask", "inconsistent")

    def __init__(self, ncols: int):
        self.ncols = ncols
        self._basis: dict[int, int] = {}
        self._rhs_bit = 1 << ncols
        self._coef_mask = self._rhs_bit - 1
        self.inconsistent = False

    @property
    def rank(self) -> int:
        return len(self._basis)

    def copy(self) -> "Eliminator":
        new = Eliminator.__new__(Eliminator)
        new.ncols = self.ncols
        new._basis = dict(self._basis)
        new._rhs_bit = self._rhs_bit
        new._coef_mask = self._coef_mask
        new.inconsistent = self.inconsistent
        return new

    def absorb(self, row: int, rhs: int) -> bool:
        """Add one equation. Returns True if it raised the rank."""
        r = row | (self._rhs_bit if rhs else 0)
        basis = self._basis
        mask = self._coef_mask
        while True:
            coef = r & mask
            if not coef:
                if r:
                    self.inconsistent = True
                return False
            lead = coef.bit_length() - 1
            other = basis.get(lead)
            if other is None:
                basis[lead] = r
                return True
            r ^= other

    def witness(self) -> int | None:
        """One solution (free variables set to 0), or None if inconsistent."""
        if self.inconsistent:
            return None
        x = 0
        mask = self._coef_mask
        for lead in sorted(self._basis):
            r = self._basis[lead]
            bit = (r >> self.ncols) & 1
            bit ^= ((r & mask & ~(1 << lead)) & x).bit_count() & 1
            if bit:
                x |= 1 << lead
        return x

    def satisfied_by(self, x: int) -> bool:
        if self.inconsistent:
            return False
        n = self.ncols
        mask = self._coef_mask
        return all(((r & mask & x).bit_count() & 1) == (r >> n) & 1 for r in self._basis.values())


class SolveStatus(str, Enum):
    UNIQUE = "unique"
    MULTIPLE = "multiple"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class SolveReport:
    status: SolveStatus
    witness: BitVector | None = None


def solve(A: BitMatrix, y: BitVector) -> SolveReport:
    if A.rows != y.len:
        raise ValueError(f"dimension mismatch: A has {A.rows} rows, y has length {y.len}")
    elim = Eliminator(A.cols)
    ybits = y.to_bits()
    for row, bit in zip(A.row_ints(), ybits):
        elim.absorb(row, int(bit))
    x = elim.witness()
    if x is None:
        return SolveReport(SolveStatus.INCONSISTENT)
    status = SolveStatus.UNIQUE if elim.rank == A.cols else SolveStatus.MULTIPLE
    return SolveReport(status, BitVector.from_int(x, A.cols))


def fullrank_probability_exact(B: int, nrows: int) -> float:
    """Probability that ``nrows`` uniform rows of length ``B`` are independent."""
    if nrows > B:
        return 0.0
    prob = 1.0
    for i in range(B - nrows + 1, B + 1):
        prob *= 1.0 - 2.0 ** (-i)
    return prob


def fullrank_rows(B: int, delta: float) -> int:
    return int(np.floor((1.0 - delta) * B + 1e-9))


def fullrank_probability_trial(
    B: int,
    delta: float,
    trials: int,
    rng: np.random.Generator,
    batch: int = 1000,
) -> float:
    """Fraction of random ``floor((1-delta)B) x B`` matrices with full row rank.

    Rows of an i.i.d. matrix are themselves i.i.d., so drawing the selected
    rows directly is equivalent to selecting them from a taller matrix.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= delta < 1:
        raise ValueError("delta must be in [0, 1)")
    k = fullrank_rows(B, delta)
    if k < 1:
        raise ValueError("(1 - delta) * B must be at least 1")
    hits = 0
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        stack = _random_words((n, k), B, rng)
        hits += int((batch_rank(stack, B) == k).sum())
        done += n
    return hits / trials
