from stccpm.cli import main


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    assert "fig5_ber" in capsys.readouterr().out


def test_config_errors(tmp_path, capsys):
    assert main(["ber", "--preset", "does_not_exist"]) == 2
    assert main(["ber"]) == 2
    assert main(["ber", "--preset", "fig2_psd"]) == 2  # wrong experiment kind
    bad = tmp_path / "bad.yaml"
    bad.write_text("experiment: ber_sweep\nn_bits: -4\n")
    assert main(["ber", "--config", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err


def test_ortho_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "ok.yaml"
    cfg.write_text("experiment: ortho_check\nspec: {Lt: 2, correction: linPC}\nn_blocks: 10\n")
    assert main(["ortho", "--config", str(cfg), "--out", str(tmp_path / "ok.csv")]) == 0
    bad = tmp_path / "bad.yaml"
    bad.write_text("experiment: ortho_check\nspec: {Lt: 2, correction: none}\nn_blocks: 10\n")
    assert main(["ortho", "--config", str(bad), "--out", str(tmp_path / "bad.csv")]) == 3
    assert "FAIL" in capsys.readouterr().out


def test_ber_run_is_reproducible(tmp_path):
    cfg = tmp_path / "ber.yaml"
    cfg.write_text("experiment: ber_sweep\nspec: {Lt: 2, correction: offPC, theta_init: [0, 0.4]}\n"
                   "snr_grid_dB: [6, 12]\nn_bits: 4800\nn_symbols: 24\nbatch_bursts: 25\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["ber", "--config", str(cfg), "--seed", "5", "--out", str(a)]) == 0
    assert main(["ber", "--config", str(cfg), "--seed", "5", "--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "# seed: 5" in a.read_text()


def test_group_output_directory(tmp_path):
    out = tmp_path / "ortho"
    assert main(["ortho", "--preset", "ortho", "--out", str(out)]) == 3  # the group contains the invalid code
    assert (out / "ortho_3tx_offpc_rc.csv").exists()
