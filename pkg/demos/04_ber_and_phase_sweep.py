"""
BER curves and initial-phase sweeps
===================================

Monte Carlo bit error rates over Rayleigh block fading.  Runs in about
a minute at these reduced bit counts.
"""

from stccpm.experiments import (decay_db_per_decade, find_minima_1d, preset, run_ber_sweep,
                                run_phase_sweep_1d)

for name in ("fig5_ber_1tx", "fig5_ber_2tx_linpc_opt"):
    cfg = preset(name, n_bits=200_000, snr_grid_dB=(0.0, 5.0, 10.0, 15.0, 20.0))
    recs = run_ber_sweep(cfg)
    print(name)
    for r in recs:
        print(f"  {r.snr_dB:5.1f} dB  BER {r.ber:.2e}  95% [{r.ci95[0]:.2e}, {r.ci95[1]:.2e}]")
    print(f"  high-SNR decay: {decay_db_per_decade(recs):.1f} dB/decade")

# BER versus the initial phase of antenna 2 at 12.5 dB, common random numbers
cfg = preset("fig3_sweep2tx_linpc_rec", phase_grid=0.1, n_bits=20_000)
recs = run_phase_sweep_1d(cfg)
for r in recs:
    print(f"dtheta {r.theta2:.1f}: BER {r.ber:.2e}")
best = find_minima_1d(recs)[0]
print(f"lowest BER at dtheta = {best.theta2}")
