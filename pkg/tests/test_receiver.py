import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stccpm.channel import sample_fading, transmit, transmit_batch
from stccpm.cpm import CpmParams, InputError
from stccpm.encoder import StcCodeSpec, encode_batch, encode_continuous
from stccpm.receiver import build_trellis, detect_batch, gray_map, mlsd_detect, path_distance


def test_trellis_sizes():
    t = build_trellis(CpmParams(M=4, h=Fraction(1, 2), gamma=2), StcCodeSpec(2, "linPC"))
    assert t.n_states == 16 and t.next_state.shape == (16, 4)
    t = build_trellis(CpmParams(M=2, h=Fraction(1, 2), gamma=1), StcCodeSpec(1, "none"))
    assert t.n_states == 4 and t.next_state.shape == (4, 2)
    # every state has exactly M incoming branches
    assert t.pred.shape == (4, 2)


@pytest.mark.parametrize("corr", ["linPC", "offPC"])
def test_branch_segments_period(corr):
    t = build_trellis(CpmParams(), StcCodeSpec(3, corr, (0.1, 0.45, 0.0)))
    b = [t.branch_segments(r) for r in range(1, 8)]
    assert b[0].shape == (16, 4, 3, 12)
    assert np.allclose(b[0], b[3]) and np.allclose(b[1], b[4]) and np.allclose(b[3], b[6])
    assert not np.allclose(b[0], b[1])
    amp = np.sqrt(1 / 3)
    assert np.allclose(np.abs(b[2]), amp, atol=1e-12)


def _burst(p, spec, n, rng, N0, Lr=1):
    d = rng.choice(p.alphabet, n)
    waves = encode_continuous(spec, p, d)
    A = sample_fading(spec.Lt, Lr, rng, n // spec.Lt)
    R = transmit(waves, A, N0, rng, p)
    return d, A, R


def _stack(waves):
    return np.stack([w.samples for w in waves])


VARIANTS = [(1, "none", "REC"), (1, "none", "RC")] + [
    (Lt, c, pl) for Lt in (2, 3) for c in ("linPC", "offPC") for pl in ("REC", "RC")]


@pytest.mark.parametrize("Lt,corr,pulse", VARIANTS)
def test_noiseless_recovery(Lt, corr, pulse):
    p = CpmParams(pulse=pulse)
    spec = StcCodeSpec(Lt, corr, (0.0, 0.19, 0.4)[:Lt])
    trellis = build_trellis(p, spec)
    rng = np.random.default_rng(10)
    n_bursts, n = 84, 120  # 10080 symbols
    D = rng.choice(p.alphabet, (n_bursts, n))
    A = sample_fading(Lt, 1, rng, (n_bursts, n // Lt))
    R = transmit_batch(encode_batch(spec, p, D), A, 0.0, None, p)
    D_hat, metric = detect_batch(R, A, trellis)
    assert np.array_equal(D_hat, D)
    assert np.all(np.abs(metric) < 1e-9)


@pytest.mark.parametrize("gamma", [1, 3])
def test_noiseless_recovery_other_memory(gamma):
    p = CpmParams(gamma=gamma, pulse="RC")
    spec = StcCodeSpec(3, "offPC", (0.1, 0.45, 0.0))
    d, A, R = _burst(p, spec, 30, np.random.default_rng(gamma), 0.0, Lr=2)
    res = mlsd_detect(R, A, build_trellis(p, spec))
    assert np.array_equal(res.symbols, d)
    assert np.array_equal(res.bits, gray_map(d, p.M))


CONFIGS = [(1, "none", 4), (2, "linPC", 4), (2, "offPC", 4), (3, "linPC", 6), (3, "offPC", 6)]


@pytest.mark.parametrize("Lt,corr,n", CONFIGS)
@pytest.mark.parametrize("pulse", ["REC", "RC"])
def test_viterbi_matches_exhaustive_search(Lt, corr, n, pulse):
    p = CpmParams(M=2, pulse=pulse)
    spec = StcCodeSpec(Lt, corr, (0.0, 0.3, 0.7)[:Lt])
    trellis = build_trellis(p, spec)
    rng = np.random.default_rng(hash((Lt, corr, pulse)) % 2**32)
    cands = [np.array(c) for c in itertools.product(p.alphabet, repeat=n)]
    for _ in range(20):
        d, A, R = _burst(p, spec, n, rng, N0=1.0)
        dist = [path_distance(_stack(R), A, c, p, spec) for c in cands]
        best = int(np.argmin(dist))
        res = mlsd_detect(R, A, trellis)
        assert np.array_equal(res.symbols, cands[best])
        assert res.path_metric == pytest.approx(dist[best], rel=1e-9, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dth=st.floats(0, 1, exclude_max=True))
def test_single_antenna_phase_rotation(seed, dth):
    p = CpmParams()
    rng = np.random.default_rng(seed)
    d = rng.choice(p.alphabet, 20)
    a = sample_fading(1, 1, rng, 20)
    noise = rng.standard_normal((2, 20 * p.sps)) * 0.8
    s0 = encode_continuous(StcCodeSpec(1, "none", (0.0,)), p, d)[0].samples
    R = np.repeat(a[:, 0, 0], p.sps) * s0 + noise[0] + 1j * noise[1]
    t0 = build_trellis(p, StcCodeSpec(1, "none", (0.0,)))
    t1 = build_trellis(p, StcCodeSpec(1, "none", (dth,)))
    r0 = mlsd_detect(R[None], a, t0)
    r1 = mlsd_detect(R[None], a * np.exp(-2j * np.pi * dth), t1)
    assert np.array_equal(r0.symbols, r1.symbols)


def test_metric_grows_with_noise():
    p = CpmParams()
    spec = StcCodeSpec(2, "linPC", (0.0, 0.19))
    trellis = build_trellis(p, spec)
    rng = np.random.default_rng(0)
    D = rng.choice(p.alphabet, (1000, 12))
    A = sample_fading(2, 1, rng, (1000, 6))
    X = transmit_batch(encode_batch(spec, p, D), A, 0.0, None, p)
    W = rng.standard_normal(X.shape) + 1j * rng.standard_normal(X.shape)
    means = [detect_batch(X + s * W, A, trellis)[1].mean() for s in (0.0, 0.3, 0.6, 1.2)]
    assert np.all(np.diff(means) > 0)


def test_mlsd_shape_errors():
    p = CpmParams()
    spec = StcCodeSpec(2, "linPC")
    trellis = build_trellis(p, spec)
    with pytest.raises(InputError):
        mlsd_detect(np.zeros((1, 3 * p.sps)), np.ones((1, 2)), trellis)
    with pytest.raises(InputError):
        mlsd_detect(np.zeros((1, 4 * p.sps)), np.ones((3, 1, 2)), trellis)


def test_gray_examples():
    bits = gray_map(np.array([-3, -1, 1, 3]), 4)
    assert bits.tolist() == [0, 0, 0, 1, 1, 1, 1, 0]
    assert gray_map(np.array([-1, 1]), 2).tolist() == [0, 1]


@pytest.mark.parametrize("M", [2, 4, 8, 16])
def test_gray_round_trip_and_adjacency(M):
    alph = np.arange(-M + 1, M, 2)
    bits = gray_map(alph, M)
    assert np.array_equal(gray_map(bits, M, "to_symbols"), alph)
    rows = bits.reshape(M, -1)
    assert np.all(np.abs(np.diff(rows, axis=0)).sum(axis=1) == 1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from([-7, -5, -3, -1, 1, 3, 5, 7]), min_size=1, max_size=30))
def test_gray_round_trip_sequences(d):
    d = np.array(d)
    assert np.array_equal(gray_map(gray_map(d, 8), 8, "to_symbols"), d)
