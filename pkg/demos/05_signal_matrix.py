"""
Pairwise error analysis
=======================

The signal-difference matrix C_s of an error event decides the
diversity order (its rank) and the coding gain (its eigenvalues).
"""

import numpy as np

from stccpm import CpmParams, StcCodeSpec
from stccpm.analysis import (coding_gain_metric, default_error_events, factored_signal_matrix,
                             pwep, signal_matrix)
from stccpm.channel import sample_fading

params = CpmParams()
spec = StcCodeSpec(Lt=3, correction="offPC", theta_init=(0.1, 0.45, 0.0))

d = np.array([1, 3, -1, -3, 1, 1, 3, -1, -3, 3, 1, -1])
e = d.copy()
e[4] = -1                                     # a single symbol error
sm = signal_matrix(spec, params, d, e)
print("eigenvalues of C_s:", np.round(sm.eigenvalues, 5))
print("full rank:", bool(sm.eigenvalues[-1] > 0))

# C_s factors into initial phases, correction correlation and the data difference
F = factored_signal_matrix(spec, params, d, e)
print("factored form error:", np.abs(F - sm.Cs).max())

# the eigenvalues do not depend on the initial phases
for theta in [(0, 0, 0), (0.1, 0.45, 0), (0.4, 0.15, 0)]:
    w = signal_matrix(spec.with_phases(theta), params, d, e).eigenvalues
    print(theta, np.round(w, 5))

events = default_error_events(params, spec, rng=0, n_random=50)
print("worst eigenvalue product over short events:", coding_gain_metric(spec, params, events))

# pairwise error probability for a few channel draws
for A in sample_fading(3, 1, 0, 3):
    print("PWEP:", pwep(sm, A, N0=2.0))
