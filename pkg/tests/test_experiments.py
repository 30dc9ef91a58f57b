import json

import numpy as np
import pytest

from stccpm.cpm import ConfigurationError
from stccpm.encoder import StcCodeSpec
from stccpm.experiments import (PRESET_GROUPS, PRESETS, BerRecord, ExperimentConfig,
                                SweepRecord, decay_db_per_decade, find_minima_1d, find_minima_2d,
                                load_config, preset, run_ber_sweep, run_experiment,
                                run_phase_sweep_1d, simulate_ber_point, snr_at_ber,
                                wilson_interval, write_outputs)


def small_ber(**kw):
    base = dict(spec=StcCodeSpec(2, "linPC", (0.0, 0.19)), snr_grid_dB=(5.0, 10.0),
                n_bits=4800, n_symbols=24, batch_bursts=20, seed=3, name="small")
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(experiment="nope")
    with pytest.raises(ConfigurationError):
        ExperimentConfig(phase_grid=0.3)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(n_bits=0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(spec=StcCodeSpec(3, "linPC"), n_symbols=100)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(seed=-1)
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"bogus": 1})


def test_config_round_trip():
    cfg = preset("fig5_ber_3tx_offpc_opt")
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_load_yaml(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(
        "experiment: ber_sweep\n"
        "params: {M: 4, h: 1/2, gamma: 2, pulse: RC}\n"
        "spec: {Lt: 2, correction: offPC, theta_init: [0.0, 0.4]}\n"
        "snr_grid_dB: [0, 5]\n"
        "n_bits: 1000\n"
        "seed: 9\n")
    cfg = load_config(path)
    assert cfg.params.pulse == "RC" and cfg.spec.theta_init == (0.0, 0.4) and cfg.seed == 9
    path.write_text("- not a mapping\n")
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_presets_cover_figures():
    for group in ("fig2_psd", "fig3_sweep2tx", "fig4_sweep3tx", "table1_minima", "fig5_ber", "ortho"):
        assert PRESET_GROUPS[group] and all(n in PRESETS for n in PRESET_GROUPS[group])
    assert len(PRESET_GROUPS["fig5_ber"]) == 6
    assert len(PRESET_GROUPS["fig4_sweep3tx"]) == 3
    with pytest.raises(ConfigurationError):
        preset("missing")


def test_wilson_interval():
    lo, hi = wilson_interval(10, 1000)
    assert lo < 0.01 < hi
    assert wilson_interval(0, 100)[0] == 0.0
    # closed-form Wilson score interval
    z, n, ph = 1.959963984540054, 1000, 0.01
    c = (ph + z * z / (2 * n)) / (1 + z * z / n)
    w = z / (1 + z * z / n) * np.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n))
    assert (lo, hi) == pytest.approx((c - w, c + w), rel=1e-9)


def test_high_snr_is_error_free():
    cfg = small_ber(snr_grid_dB=(60.0,), n_bits=10_000)
    rec = run_ber_sweep(cfg)[0]
    assert rec.bits_sent >= 10_000 and rec.bit_errors == 0


def test_early_stop_at_max_errors():
    cfg = small_ber(max_errors=50, n_bits=10**6)
    bits, errs = simulate_ber_point(cfg, cfg.spec, -5.0)
    assert errs >= 50 and bits < 10**6


def test_ber_decreases_with_snr():
    recs = run_ber_sweep(small_ber(snr_grid_dB=(0.0, 10.0, 20.0), n_bits=20_000))
    ber = [r.ber for r in recs]
    assert ber[0] > ber[1] > ber[2]


def test_thread_count_does_not_change_results():
    cfg = small_ber()
    a = run_ber_sweep(cfg, threads=1)
    b = run_ber_sweep(cfg, threads=3)
    assert [(r.bits_sent, r.bit_errors) for r in a] == [(r.bits_sent, r.bit_errors) for r in b]


def test_phase_sweep_common_random_numbers():
    # Lt=2 without noise-dependent phase effects: with identical draws every grid
    # point sees the same data and channel, so bit counts line up exactly
    cfg = ExperimentConfig(spec=StcCodeSpec(2, "linPC"), experiment="phase_sweep_1d",
                           phase_grid=0.25, n_bits=2400, n_symbols=24, batch_bursts=10,
                           sweep_snr_dB=60.0)
    recs = run_phase_sweep_1d(cfg)
    assert [r.theta2 for r in recs] == [0.0, 0.25, 0.5, 0.75]
    assert len({r.bits_sent for r in recs}) == 1
    assert all(r.bit_errors == 0 for r in recs)


def test_find_minima():
    recs = [SweepRecord(0.0, t, 100, e, e / 100, (0, 1)) for t, e in
            zip([0.0, 0.25, 0.5, 0.75], [5, 1, 6, 3])]
    assert [r.theta2 for r in find_minima_1d(recs)] == [0.25, 0.75]
    grid = [SweepRecord(a, b, 100, 9, 0.09, (0, 1)) for a in (0, 0.25, 0.5, 0.75)
            for b in (0, 0.25, 0.5, 0.75)]
    grid[6] = SweepRecord(0.25, 0.5, 100, 1, 0.01, (0, 1))
    assert (find_minima_2d(grid)[0].theta1, find_minima_2d(grid)[0].theta2) == (0.25, 0.5)


def test_curve_helpers():
    recs = [BerRecord(s, 10**7, int(10**7 * 10 ** (-s / 5)), 10 ** (-s / 5), (0, 1), 0.0)
            for s in (5.0, 10.0, 15.0, 20.0)]
    assert snr_at_ber(recs, 1e-3) == pytest.approx(15.0)
    assert decay_db_per_decade(recs) == pytest.approx(5.0, rel=1e-3)


def test_outputs_deterministic(tmp_path):
    cfg = small_ber()
    p1 = write_outputs(cfg, run_experiment(cfg), tmp_path / "a.csv")
    p2 = write_outputs(cfg, run_experiment(cfg), tmp_path / "b.csv")
    assert p1.read_bytes() == p2.read_bytes()
    text = p1.read_text().splitlines()
    assert text[0].startswith("# stccpm") and text[1] == "# seed: 3"
    assert text[3] == "snr_db,bits,errors,ber,ci_lo,ci_hi"
    side = json.loads((tmp_path / "a.csv.json").read_text())
    assert side["seed"] == 3 and side["config"]["name"] == "small"


def test_ortho_and_psd_runs():
    res = run_experiment(preset("ortho_3tx_offpc_rc", n_blocks=20))
    assert res["status"] == "PASS"
    res = run_experiment(preset("ortho_2tx_none", n_blocks=5))
    assert res["status"] == "FAIL" and res["max_offdiag"] > 0.5
    psd = run_experiment(preset("fig2_psd", psd_symbols=3000, psd_segment=32 * 12))
    assert len(psd["psds"]) == 3 and psd["summary"]["shift_error_bins"][0] == 0.0


def test_amplitude_fading_option():
    cfg = small_ber(fading="amplitude", snr_grid_dB=(10.0,))
    assert run_ber_sweep(cfg)[0].bits_sent > 0
    with pytest.raises(ConfigurationError):
        small_ber(fading="rician")
