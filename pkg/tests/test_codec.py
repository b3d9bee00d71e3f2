import math

import numpy as np
import pytest

from dnabec import codec, gf2
from dnabec.channel import ChannelParams, ReadPool, SamplingDistribution, Strand, capacity, transmit
from dnabec.cluster import consistent
from dnabec.codec import DecodeStatus
from dnabec.errors import ConfigError

Q1 = SamplingDistribution.exactly(1)


def instance(params, dist, B, num_messages, seed):
    rng = np.random.default_rng(seed)
    cb = codec.build_codebook(params, B, num_messages, rng)
    sent = int(rng.integers(num_messages))
    pool = transmit(codec.encode(cb, sent), params, dist, rng)
    return cb, sent, pool


def test_choose_B_example():
    params = ChannelParams(10, 20, 0.2, beta=20 / math.log2(10))
    dist = SamplingDistribution((0.1, 0.9))
    # 200 * 0.85 * 0.75 * 0.95 = 121.125
    assert codec.choose_B(params, dist, 0.05) == 121


def test_choose_B_single_draw_limit():
    params = ChannelParams(10, 20, 0.2, beta=20 / math.log2(10))
    B = codec.choose_B(params, Q1, 1e-6)
    assert abs(B - 200 * 0.8) <= 1


def test_choose_B_rejects_large_epsilon():
    params = ChannelParams(10, 20, 0.2, beta=20 / math.log2(10))
    with pytest.raises(ConfigError):
        codec.choose_B(params, SamplingDistribution((0.5, 0.5)), 0.6)


def test_build_codebook():
    params = ChannelParams(4, 8, 0.1)
    cb = codec.build_codebook(params, 16, 2, np.random.default_rng(0))
    assert cb.rate == 1 / 32
    assert (cb.G.rows, cb.G.cols) == (32, 16)
    again = codec.build_codebook(params, 16, 2, np.random.default_rng(0))
    assert cb.G == again.G
    assert [cb.message_int(i) for i in range(2)] == [again.message_int(i) for i in range(2)]
    with pytest.raises(ConfigError):
        codec.build_codebook(params, 33, 2, np.random.default_rng(0))


def test_messages_distinct_within_birthday_bound():
    params = ChannelParams(4, 8, 0.1)
    n, B, seeds = 64, 16, 300
    collisions = 0
    for s in range(seeds):
        cb = codec.build_codebook(params, B, n, np.random.default_rng(s))
        collisions += len({cb.message_int(i) for i in range(n)}) < n
    # P(collision) <= n^2 2^-B = 1/16; allow 4 sigma of binomial noise
    bound = n * n * 2.0**-B
    assert collisions / seeds <= bound + 4 * math.sqrt(bound / seeds)


def test_encode():
    params = ChannelParams(4, 8, 0.1)
    cb = codec.build_codebook(params, 16, 4, np.random.default_rng(1))
    strands = codec.encode(cb, 2)
    assert strands == codec.encode(cb, 2)
    assert len(strands) == 4 and all(s.length == 8 and s.is_clean for s in strands)
    cw = gf2.mat_vec_mul(cb.G, cb.message(2)).to_int()
    assert sum(s.bits << (8 * m) for m, s in enumerate(strands)) == cw
    with pytest.raises(IndexError):
        codec.encode(cb, 4)


def test_encode_zero_message():
    params = ChannelParams(4, 8, 0.1)
    cb = codec.build_codebook(params, 16, 2, np.random.default_rng(1))
    object.__setattr__(cb, "_cache", {0: 0})
    assert all(s.bits == 0 for s in codec.encode(cb, 0))


def test_codewords_in_column_space():
    params = ChannelParams(4, 8, 0.1)
    cb = codec.build_codebook(params, 12, 8, np.random.default_rng(2))
    for i in range(8):
        cw = gf2.BitVector.from_int(sum(s.bits << (8 * m) for m, s in enumerate(codec.encode(cb, i))), 32)
        assert gf2.solve(cb.G, cw).status is not gf2.SolveStatus.INCONSISTENT


def test_implicit_message_set_lookup(monkeypatch):
    params = ChannelParams(4, 8, 0.1)
    cb = codec.build_codebook(params, 16, 40, np.random.default_rng(3))
    expected = cb.message_int(17)
    monkeypatch.setattr(codec, "MATERIALIZE_LIMIT", 8)
    assert not cb.materialized
    assert cb.index_of(expected) == min(i for i in range(40) if cb.message_int(i) == expected)


def test_decode_result_invariant():
    with pytest.raises(ValueError):
        codec.DecodeResult(DecodeStatus.SUCCESS)
    with pytest.raises(ValueError):
        codec.DecodeResult(DecodeStatus.AMBIGUOUS, 3)


def test_genie_noiseless_always_succeeds():
    params = ChannelParams(6, 16, 0.0)
    for seed in range(20):
        cb, sent, pool = instance(params, Q1, 60, 8, seed)
        res = codec.genie_decode(cb, pool)
        assert res.status is DecodeStatus.SUCCESS and res.systems_tried == 1
        assert cb.message_int(res.message_index) == cb.message_int(sent)


def test_genie_empty_pool():
    params = ChannelParams(4, 8, 0.1)
    cb = codec.build_codebook(params, 16, 2, np.random.default_rng(0))
    res = codec.genie_decode(cb, ReadPool((), ()))
    assert res.status is DecodeStatus.NO_VALID_SYSTEM


def test_genie_below_capacity_success_rate():
    params = ChannelParams.from_beta(16, 8.0, 0.1)
    C = capacity(Q1, 0.1, params.beta)
    B = codec.collision_safe_B(params, Q1, 0.8 * C)
    assert B < params.n_bits * 0.9
    ok = 0
    for seed in range(200):
        cb, sent, pool = instance(params, Q1, B, 16, seed)
        res = codec.genie_decode(cb, pool)
        ok += res.status is DecodeStatus.SUCCESS and res.message_index == sent
    assert ok / 200 >= 0.95


def test_exhaustive_tiny_noiseless():
    # 32 equations in 12 unknowns: full rank except with probability ~2^-20
    params = ChannelParams(2, 16, 0.0)
    for seed in range(10):
        cb, sent, pool = instance(params, Q1, 12, 2, seed)
        res = codec.exhaustive_decode(cb, pool.view(), Q1)
        assert res.status is DecodeStatus.SUCCESS
        assert res.message_index == sent
        assert res.systems_tried <= 2


def test_exhaustive_small_noisy_success_rate():
    params = ChannelParams(4, 16, 0.1)
    R = 0.3
    assert R < 1 - 0.1 - 1 / params.beta
    B = codec.collision_safe_B(params, Q1, R)
    ok = 0
    for seed in range(100):
        cb, sent, pool = instance(params, Q1, B, 16, seed)
        res = codec.exhaustive_decode(cb, pool.view(), Q1)
        ok += res.status is DecodeStatus.SUCCESS and res.message_index == sent
    assert ok >= 90


def test_exhaustive_success_reproduces_reads_and_agrees_with_genie():
    dist = SamplingDistribution((0.1, 0.5, 0.4))
    params = ChannelParams(4, 16, 0.2)
    B = codec.choose_B(params, dist, 0.05)
    agree = 0
    for seed in range(60):
        cb, sent, pool = instance(params, dist, B, 8, seed)
        ex = codec.exhaustive_decode(cb, pool.view(), dist, epsilon=0.3)
        ge = codec.genie_decode(cb, pool)
        if ex.status is DecodeStatus.SUCCESS:
            strands = codec.encode(cb, ex.message_index)
            assert all(any(consistent(r, s) for s in strands) for r in pool.reads)
            if ge.status is DecodeStatus.SUCCESS:
                assert ge.message_index == ex.message_index
                agree += 1
    assert agree > 20


def test_exhaustive_first_hit_and_budget():
    params = ChannelParams(4, 16, 0.1)
    cb, sent, pool = instance(params, Q1, 20, 4, 5)
    full = codec.exhaustive_decode(cb, pool.view(), Q1)
    fast = codec.exhaustive_decode(cb, pool.view(), Q1, first_hit=True)
    assert fast.systems_tried <= full.systems_tried
    starved = codec.exhaustive_decode(cb, pool.view(), Q1, budget=1)
    assert starved.status is DecodeStatus.BUDGET_EXHAUSTED


def test_exhaustive_detects_ambiguity():
    # B=2 with heavy erasures: several messages fit the surviving equations
    params = ChannelParams(3, 4, 0.5)
    found = set()
    for seed in range(40):
        cb, sent, pool = instance(params, Q1, 2, 4, seed)
        found.add(codec.exhaustive_decode(cb, pool.view(), Q1).status)
    assert DecodeStatus.AMBIGUOUS in found


def test_exhaustive_guard():
    params = ChannelParams(9, 8, 0.1)
    cb = codec.build_codebook(params, 16, 2, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        codec.exhaustive_decode(cb, [], Q1)


def test_exhaustive_handles_all_erased_and_duplicate_reads():
    params = ChannelParams(3, 12, 0.0)
    dist = SamplingDistribution((0.0, 0.5, 0.5))
    cb = codec.build_codebook(params, 20, 4, np.random.default_rng(2))
    strands = codec.encode(cb, 1)
    reads = [strands[0], strands[1], strands[1], strands[2], Strand(12, 0, 0)]
    res = codec.exhaustive_decode(cb, reads, dist, epsilon=0.05)
    assert res.status is DecodeStatus.SUCCESS and res.message_index == 1


def test_collision_bound():
    params = ChannelParams(8, 24, 0.1)
    dist = SamplingDistribution((0.1, 0.9))
    B, alpha, eps = 100, 1.5, 0.05
    p_up = 1 - 0.1 + eps
    R = B / params.n_bits - p_up / params.beta - alpha / params.L
    cb = codec.collision_bound(params, dist, R, B, alpha, eps)
    assert cb.exponent == pytest.approx(0.0, abs=1e-9)
    assert cb.bound == pytest.approx(1.0, abs=1e-9)
    assert codec.collision_bound(params, dist, 0.2, 120, alpha).bound < codec.collision_bound(params, dist, 0.2, 100, alpha).bound


@pytest.mark.parametrize("M", [10**3, 10**6])
def test_collision_exponent_negative_below_capacity(M):
    dist = SamplingDistribution((0.2, 0.3, 0.5))
    beta, p, eps, alpha = 10.0, 0.2, 1e-3, 2.0
    params = ChannelParams.from_beta(M, beta, p)
    R = 0.9 * capacity(dist, p, beta)
    B = codec.choose_B(params, dist, eps)
    assert codec.collision_bound(params, dist, R, B, alpha, eps).exponent < 0


def test_single_draw_collision_bound():
    params = ChannelParams(16, 32, 0.1)
    eps = 0.05
    R = 1 - 0.1 - eps - 1 / params.beta
    assert codec.single_draw_collision_bound(params, R, eps).exponent == pytest.approx(0.0, abs=1e-9)
    assert codec.single_draw_collision_bound(params, R - 0.1, eps).bound < 1


def test_cluster_count_bound():
    assert codec.cluster_count_bound(100, 0.3) == pytest.approx(2 * math.exp(-18), rel=1e-12)
    assert codec.cluster_count_bound(100, 0.3) == pytest.approx(3.0e-8, rel=0.02)
    assert codec.cluster_count_bound(100, 1e-9) == pytest.approx(2.0)


def test_cluster_range():
    assert codec.cluster_range(6, 0.0, 0.05) == (6, 6)
    assert codec.cluster_range(10, 0.2, 0.1) == (7, 9)


def test_error_rate_increases_with_rate():
    params = ChannelParams(5, 12, 0.15)
    C = capacity(Q1, 0.15, params.beta)
    errs = []
    for frac in (0.3, 0.6, 0.9, 1.2, 1.5):
        B = min(params.n_bits, codec.collision_safe_B(params, Q1, frac * C))
        bad = 0
        for seed in range(200):
            cb, sent, pool = instance(params, Q1, B, 16, 1000 + seed)
            res = codec.genie_decode(cb, pool)
            bad += not (res.status is DecodeStatus.SUCCESS and res.message_index == sent)
        errs.append(bad / 200)
    # trend: allow binomial noise between neighbours, require overall growth
    assert all(b >= a - 0.05 for a, b in zip(errs, errs[1:]))
    assert errs[-1] > errs[0]
