import math
from pathlib import Path

import pytest

from parlife.cli import main
from parlife.config import ConfigError, DEFAULTS, RunConfig, parse_number


class TestConfig:
    def test_defaults_build_base_scenario(self):
        s = RunConfig.load().scenario()
        assert s.v0 == 100.0
        assert s.contract.g_total == pytest.approx(0.02 * 95.0)
        assert s.contract.k_threshold == 150.0

    def test_percent_suffix(self):
        assert parse_number("2%") == pytest.approx(0.02)
        assert parse_number("0.02") == pytest.approx(0.02)
        assert parse_number(" 45.36% ") == pytest.approx(0.4536)

    def test_ratio_and_absolute_forms_coincide(self):
        by_ratio = RunConfig.load(overrides=["g_over_p=0.03", "k_over_v0=1.2",
                                             "p_over_v0=0.8"]).scenario()
        by_abs = RunConfig.load(overrides=["g_total=2.4", "k_threshold=120",
                                           "p_lump=80"]).scenario()
        assert by_ratio == by_abs

    def test_mutually_exclusive_forms_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.load(overrides=["g_total=2", "g_over_p=0.02"])

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.load(overrides=["gg_total=2"])

    def test_config_file_round_trip(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            "# scenario\nr = 1%\nnu = 5%\nsigma = 20%\ng_over_p = 2%\n",
            encoding="utf-8")
        cfg = RunConfig.load(str(cfg_file))
        s = cfg.scenario()
        assert s.market.r == pytest.approx(0.01)
        assert s.contract.g_total == pytest.approx(1.9)

    def test_override_beats_file(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("sigma = 20%\n", encoding="utf-8")
        cfg = RunConfig.load(str(cfg_file), overrides=["sigma=0.3"])
        assert cfg.scenario().market.sigma == pytest.approx(0.3)


class TestExitCodes:
    def test_broken_market_is_config_error(self, capsys):
        assert main(["price", "--set", "sigma=0"]) == 2

    def test_bad_override_is_config_error(self, capsys):
        assert main(["price", "--set", "sigma"]) == 2

    def test_price_runs_clean(self, capsys):
        assert main(["price"]) == 0


class TestPrice:
    def test_value_identity_in_output(self, capsys):
        assert main(["price"]) == 0
        lines = dict(line.split(None, 1)
                     for line in capsys.readouterr().out.strip().splitlines())
        v = float(lines["firm_value"])
        e = float(lines["equity"])
        l = float(lines["liability"])
        assert e == pytest.approx(v - l, rel=1e-5)

    def test_no_participation_zeroes_tb2(self, capsys):
        assert main(["price", "--set", "alpha=0"]) == 0
        lines = dict(line.split(None, 1)
                     for line in capsys.readouterr().out.strip().splitlines())
        assert float(lines["tb2"]) == 0.0

    def test_reference_barrier_ratio_at_optimum(self, capsys):
        assert main(["price", "--set", "alpha=0.0999",
                     "--set", "g_over_p=1.9019%"]) == 0
        lines = dict(line.split(None, 1)
                     for line in capsys.readouterr().out.strip().splitlines())
        assert float(lines["vb_over_v0"]) == pytest.approx(0.4536, abs=0.005)


class TestSweepCsv:
    def test_csv_format_and_determinism(self, tmp_path, capsys):
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        args = ["sweep", "--axis", "alpha", "--grid", "0:0.1:5", "--no-plot"]
        assert main(args + ["--out", str(out_a)]) == 0
        assert main(args + ["--out", str(out_b)]) == 0
        raw = out_a.read_bytes()
        assert raw == out_b.read_bytes()
        assert b"\r" not in raw
        header = raw.decode("utf-8").splitlines()[0]
        assert header.split(",")[0] == "alpha"

    def test_empty_grid_yields_header_only(self, tmp_path, capsys):
        out = tmp_path / "empty.csv"
        assert main(["sweep", "--axis", "alpha", "--grid", "0:0.1:0",
                     "--no-plot", "--out", str(out)]) == 0
        assert out.read_text(encoding="utf-8").count("\n") == 1

    def test_plot_rendered_alongside_csv(self, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        assert main(["sweep", "--axis", "g-over-p", "--grid", "0:0.06:4",
                     "--out", str(out)]) == 0
        assert (tmp_path / "curve.png").exists()

    def test_no_plot_suppresses_figure(self, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        assert main(["sweep", "--axis", "alpha", "--grid", "0:0.05:3",
                     "--no-plot", "--out", str(out)]) == 0
        assert not (tmp_path / "curve.png").exists()


class TestAssetSub:
    def test_reports_onset(self, tmp_path, capsys):
        out = tmp_path / "sub.csv"
        assert main(["asset-sub", "--alphas", "0.0", "--t-mats", "30",
                     "--v-grid", "0.5:2.0:31", "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "substitution onset" in text
        assert (tmp_path / "sub.png").exists()


class TestValidate:
    def test_fast_validation_passes(self, capsys):
        assert main(["validate", "--fast", "--set", "paths=5000"]) == 0
        out = capsys.readouterr().out
        assert "PASS closed-form time integrals vs quadrature" in out
        assert "FAIL" not in out


class TestOptimizeCommand:
    def test_paper_mode_within_reference_bands(self, tmp_path, capsys):
        out = tmp_path / "opt.csv"
        assert main(["optimize", "--out", str(out)]) == 0
        lines = dict(line.split(None, 1)
                     for line in capsys.readouterr().out.strip().splitlines())
        assert float(lines["alpha_star"]) == pytest.approx(0.099, abs=0.005)
        assert float(lines["g_star_over_p"]) == pytest.approx(0.0191, abs=0.0005)
        assert float(lines["vb_over_v0"]) == pytest.approx(0.4536, abs=0.005)
        assert out.exists()
