import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnabec import gf2
from dnabec.gf2 import BitMatrix, BitVector, SolveStatus


def span_rank(arr: np.ndarray) -> int:
    """Rank via the size of the row span (2^rank), by enumeration."""
    rows = [int("".join(map(str, r[::-1])), 2) if len(r) else 0 for r in arr]
    span = {0}
    for r in rows:
        span |= {s ^ r for s in span}
    return len(span).bit_length() - 1


def brute_solutions(arr: np.ndarray, y: np.ndarray) -> list[tuple[int, ...]]:
    return [x for x in itertools.product((0, 1), repeat=arr.shape[1]) if np.array_equal(arr @ np.array(x, dtype=int) % 2, y)]


matrices = st.integers(0, 5).flatmap(
    lambda r: st.integers(0, 5).flatmap(
        lambda c: st.lists(st.lists(st.integers(0, 1), min_size=c, max_size=c), min_size=r, max_size=r).map(
            lambda rows, c=c: np.array(rows, dtype=np.uint8).reshape(len(rows), c)
        )
    )
)


def test_random_matrix_empty_and_deterministic():
    m = gf2.random_matrix(0, 5, np.random.default_rng(0))
    assert (m.rows, m.cols) == (0, 5)
    a = gf2.random_matrix(64, 64, np.random.default_rng(42))
    b = gf2.random_matrix(64, 64, np.random.default_rng(42))
    assert a == b


def test_random_matrix_density():
    # 3 sigma for 65536 fair bits is 0.0059
    m = gf2.random_matrix(256, 256, np.random.default_rng(7))
    assert abs(m.to_array().mean() - 0.5) < 3 * 0.5 / 256
    assert 0.47 <= m.to_array().mean() <= 0.53


def test_random_matrix_tail_bits_clear():
    m = gf2.random_matrix(10, 70, np.random.default_rng(1))
    assert not np.any(m.data[:, -1] >> np.uint64(6))


def test_bitvector_roundtrip():
    bits = [1, 0, 1, 1, 0, 0, 1] * 20
    v = BitVector.from_bits(bits)
    assert v.len == 140
    assert list(v.to_bits()) == bits
    assert BitVector.from_int(v.to_int(), 140) == v
    with pytest.raises(ValueError):
        BitVector(3, np.array([0b1000], dtype=np.uint64))


def test_mat_vec_identity_and_zero():
    x = BitVector.from_bits([1, 0, 1, 1])
    assert gf2.mat_vec_mul(BitMatrix.identity(4), x) == x
    A = gf2.random_matrix(9, 4, np.random.default_rng(3))
    assert gf2.mat_vec_mul(A, BitVector.zeros(4)) == BitVector.zeros(9)


def test_mat_vec_small_example():
    arr = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=np.uint8)
    x = np.array([1, 1, 1])
    expected = [sum(int(a) & int(b) for a, b in zip(row, x)) % 2 for row in arr]
    assert expected == [0, 0, 0]
    out = gf2.mat_vec_mul(BitMatrix.from_array(arr), BitVector.from_bits(x))
    assert list(out.to_bits()) == expected


def test_mat_vec_matches_numpy_wide():
    rng = np.random.default_rng(5)
    A = gf2.random_matrix(30, 150, rng)
    x = gf2.random_vector(150, rng)
    ref = A.to_array().astype(int) @ x.to_bits().astype(int) % 2
    assert list(gf2.mat_vec_mul(A, x).to_bits()) == list(ref)


def test_mat_vec_dimension_mismatch():
    with pytest.raises(ValueError):
        gf2.mat_vec_mul(BitMatrix.identity(3), BitVector.zeros(4))


def test_rank_basics():
    assert gf2.rank(BitMatrix.zeros(5, 5)) == 0
    assert gf2.rank(BitMatrix.identity(7)) == 7


def test_rank_does_not_mutate():
    A = gf2.random_matrix(20, 20, np.random.default_rng(0))
    before = A.data.copy()
    gf2.rank(A)
    gf2.solve(A, BitVector.zeros(20))
    assert np.array_equal(A.data, before)


def test_rank_all_3x3_against_span_enumeration():
    for code in range(512):
        arr = np.array([(code >> k) & 1 for k in range(9)], dtype=np.uint8).reshape(3, 3)
        assert gf2.rank(BitMatrix.from_array(arr)) == span_rank(arr)


def test_rank_engines_agree_on_wide_matrices():
    rng = np.random.default_rng(11)
    for rows, cols in [(10, 130), (130, 70), (64, 64), (65, 65)]:
        A = gf2.random_matrix(rows, cols, rng)
        elim = gf2.Eliminator(cols)
        for r in A.row_ints():
            elim.absorb(r, 0)
        assert gf2.rank(A) == elim.rank <= min(rows, cols)


def test_solve_examples():
    rep = gf2.solve(BitMatrix.identity(3), BitVector.from_bits([1, 0, 1]))
    assert rep.status is SolveStatus.UNIQUE
    assert list(rep.witness.to_bits()) == [1, 0, 1]
    assert gf2.solve(BitMatrix.zeros(3, 3), BitVector.zeros(3)).status is SolveStatus.MULTIPLE
    rep = gf2.solve(BitMatrix.zeros(3, 3), BitVector.from_bits([0, 1, 0]))
    assert rep.status is SolveStatus.INCONSISTENT and rep.witness is None


def test_solve_dimension_mismatch():
    with pytest.raises(ValueError):
        gf2.solve(BitMatrix.identity(3), BitVector.zeros(2))


def test_solve_random_4x3_against_brute_force():
    rng = np.random.default_rng(9)
    for _ in range(300):
        arr = rng.integers(0, 2, size=(4, 3)).astype(np.uint8)
        y = rng.integers(0, 2, size=4)
        sols = brute_solutions(arr, y)
        rep = gf2.solve(BitMatrix.from_array(arr), BitVector.from_bits(y))
        expected = {0: SolveStatus.INCONSISTENT, 1: SolveStatus.UNIQUE}.get(len(sols), SolveStatus.MULTIPLE)
        assert rep.status is expected
        if sols:
            assert tuple(rep.witness.to_bits()) in sols


def test_select_rows():
    A = BitMatrix.from_array([[1, 0], [0, 1], [1, 1]])
    assert gf2.select_rows(A, [0, 1, 2]) == A
    empty = gf2.select_rows(A, [])
    assert (empty.rows, empty.cols) == (0, 2)
    assert gf2.select_rows(A, [2, 0]).to_array().tolist() == [[1, 1], [1, 0]]
    with pytest.raises(IndexError):
        gf2.select_rows(A, [3])


def test_eliminator_incremental_matches_batch():
    rng = np.random.default_rng(2)
    A = gf2.random_matrix(40, 25, rng)
    elim = gf2.Eliminator(25)
    for k, r in enumerate(A.row_ints(), start=1):
        elim.absorb(r, 0)
        assert elim.rank == gf2.rank(gf2.select_rows(A, range(k)))


def test_eliminator_copy_is_independent():
    e = gf2.Eliminator(3)
    e.absorb(0b001, 1)
    f = e.copy()
    f.absorb(0b001, 0)
    assert f.inconsistent and not e.inconsistent
    assert e.rank == 1


@settings(max_examples=200, deadline=None)
@given(matrices, st.data())
def test_rank_of_selected_rows_never_exceeds_rank(arr, data):
    A = BitMatrix.from_array(arr) if arr.size else BitMatrix.zeros(*arr.shape)
    idx = data.draw(st.lists(st.integers(0, max(A.rows - 1, 0)), max_size=A.rows)) if A.rows else []
    assert gf2.rank(gf2.select_rows(A, idx)) <= gf2.rank(A) <= min(A.rows, A.cols)


@settings(max_examples=200, deadline=None)
@given(matrices, st.data())
def test_solve_unique_implies_witness_solves(arr, data):
    A = BitMatrix.from_array(arr) if arr.size else BitMatrix.zeros(*arr.shape)
    y = BitVector.from_bits(data.draw(st.lists(st.integers(0, 1), min_size=A.rows, max_size=A.rows)))
    rep = gf2.solve(A, y)
    if rep.status is SolveStatus.UNIQUE:
        assert gf2.mat_vec_mul(A, rep.witness) == y
        assert gf2.rank(A) == A.cols
    if rep.status is SolveStatus.MULTIPLE:
        assert gf2.mat_vec_mul(A, rep.witness) == y
        assert gf2.rank(A) < A.cols


def test_fullrank_exact_product():
    assert gf2.fullrank_probability_exact(200, 200) == pytest.approx(0.28879, abs=5e-6)
    # delta = 0.1, B = 200 leaves 180 rows: product over i = 21..200
    assert gf2.fullrank_probability_exact(200, 180) > 1 - 2.0**-19
    assert gf2.fullrank_probability_exact(1, 1) == 0.5


def test_fullrank_trial_single_bit():
    est = gf2.fullrank_probability_trial(1, 0.0, 20000, np.random.default_rng(0))
    assert abs(est - 0.5) < 4 * np.sqrt(0.25 / 20000)


@pytest.mark.parametrize("B", [20, 100])
@pytest.mark.parametrize("delta", [0.0, 0.1, 0.5])
def test_fullrank_trial_matches_exact(B, delta):
    trials = 4000
    est = gf2.fullrank_probability_trial(B, delta, trials, np.random.default_rng(B * 10 + int(delta * 10)))
    exact = gf2.fullrank_probability_exact(B, gf2.fullrank_rows(B, delta))
    se = max(np.sqrt(exact * (1 - exact) / trials), 1e-12)
    assert abs(est - exact) <= 4 * se + 1e-12


def test_fullrank_trial_rejects_bad_args():
    with pytest.raises(ValueError):
        gf2.fullrank_probability_trial(10, 0.0, 0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        gf2.fullrank_probability_trial(1, 0.5, 10, np.random.default_rng(0))
