"""
Parallel-coded CPM signals
==========================

Every antenna sends the same data.  The antennas only differ in a
correction phase that keeps each code block orthogonal.
"""

from fractions import Fraction

import numpy as np

from stccpm import CpmParams, StcCodeSpec, encode_continuous
from stccpm.analysis import block_gram

# quaternary 2REC CPM with h = 1/2, 12 samples per symbol
params = CpmParams(M=4, h=Fraction(1, 2), gamma=2, pulse="REC", sps=12)
rng = np.random.default_rng(0)
data = rng.choice(params.alphabet, 12)
print("data:", data)

# two antennas, linear phase correction, second antenna started 0.19 cycles ahead
spec = StcCodeSpec(Lt=2, correction="linPC", theta_init=(0.0, 0.19))
waves = encode_continuous(spec, params, data)

# constant envelope sqrt(Es / (Lt T)) on both antennas
for w in waves:
    print(f"antenna {w.antenna_id}: |s| in [{np.abs(w.samples).min():.6f}, {np.abs(w.samples).max():.6f}]")

# the phase difference of antenna 2 grows by half a cycle per symbol
diff = np.angle(waves[1].samples * waves[0].samples.conj()) / (2 * np.pi)
print("phase difference at symbol boundaries:", np.round(diff[::params.sps] % 1, 3))

# ... which makes each two-symbol block orthogonal
for l in range(3):
    G = block_gram(waves, l).values
    print(f"block {l} Gram matrix:\n{np.round(G, 12)}")

# offPC can be seen as antenna 2 using a shifted alphabet
off = StcCodeSpec(Lt=2, correction="offPC")
a = encode_continuous(off, params, data, representation="correction")
b = encode_continuous(off, params, data, representation="offset")
print("offPC correction vs offset alphabet, max difference:",
      max(np.abs(x.samples - y.samples).max() for x, y in zip(a, b)))
