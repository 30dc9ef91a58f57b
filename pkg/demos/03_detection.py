"""
Maximum-likelihood detection
============================

With parallel mapping the noiseless received signal is one CPM signal
times a known per-block gain, so a single CPM trellis is enough.
"""

import itertools

import numpy as np

from stccpm import CpmParams, StcCodeSpec, build_trellis, encode_continuous, mlsd_detect
from stccpm.channel import block_fading, snr_to_n0, transmit
from stccpm.receiver import path_distance

params = CpmParams()
spec = StcCodeSpec(Lt=3, correction="offPC", theta_init=(0.1, 0.45, 0.0))
trellis = build_trellis(params, spec)
print(f"{trellis.n_states} trellis states, {params.M} branches each")

rng = np.random.default_rng(1)
data = rng.choice(params.alphabet, 60)
A = block_fading(20, spec.Lt, 1, rng)          # one 1x3 channel per code block
N0 = snr_to_n0(10.0, params)
rx = transmit(encode_continuous(spec, params, data), A, N0, rng, params)
res = mlsd_detect(rx, A, trellis)
print("symbol errors at 10 dB:", np.count_nonzero(res.symbols != data))

# the Viterbi answer is the exhaustive minimum on a short binary burst
p2 = CpmParams(M=2)
s2 = StcCodeSpec(Lt=2, correction="linPC", theta_init=(0.0, 0.19))
d2 = rng.choice(p2.alphabet, 6)
A2 = block_fading(3, 2, 1, rng)
R2 = np.stack([w.samples for w in transmit(encode_continuous(s2, p2, d2), A2, 1.0, rng, p2)])
cands = [np.array(c) for c in itertools.product(p2.alphabet, repeat=6)]
best = min(cands, key=lambda c: path_distance(R2, A2, c, p2, s2))
vit = mlsd_detect(R2, A2, build_trellis(p2, s2))
print("viterbi:   ", vit.symbols, f"metric {vit.path_metric:.4f}")
print("exhaustive:", best, f"metric {path_distance(R2, A2, best, p2, s2):.4f}")
