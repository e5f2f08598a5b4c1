import csv
import dataclasses
import io
import json
import math

import numpy as np
import pytest

from tensorcfo import cli, harness
from tensorcfo.harness import (
    CSV_HEADER,
    ExperimentConfig,
    achievable_rate,
    paired_difference_ci,
    run_trial,
    summarize,
    sweep,
    to_csv_string,
)
from tensorcfo.selftest import selftest

SMALL = dict(N_t=8, N_r=4, M=(32,), trials=4, snr_db=(0.0, 10.0), tau=(0.27,), f_max=140e3, f_e=130e3)


class TestRate:
    def test_zero_gain(self):
        assert achievable_rate(np.zeros((2, 2)), np.ones(2) / np.sqrt(2), np.ones(2) / np.sqrt(2), 1, 1) == 0

    def test_unit(self):
        assert achievable_rate(np.ones((1, 1)), [1], [1], 1.0, 1.0) == pytest.approx(1.0)

    def test_monotone(self):
        rates = [achievable_rate(np.array([[g]]), [1], [1], 1.0, 0.5) for g in (0.1, 0.5, 1.0, 3.0)]
        assert np.all(np.diff(rates) > 0)

    def test_noiseless(self):
        assert math.isinf(achievable_rate(np.ones((1, 1)), [1], [1], 1.0, 0.0))


class TestConfig:
    def test_desk_defaults(self):
        cfg = ExperimentConfig()
        assert (cfg.N_t, cfg.N_r, cfg.N_cl, cfg.N_ray, cfg.q, cfg.oversampling) == (32, 16, 2, 10, 8, 2)
        assert cfg.f_e == 265.625e3 and cfg.tau == (0.27,) and cfg.M == (64,)

    @pytest.mark.parametrize("kw", [dict(methods=()), dict(methods=("agile",)), dict(trials=0),
                                    dict(snr_db=()), dict(tau=(-1.0,)), dict(M=(0,))])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(**kw)

    def test_file_round_trip(self, tmp_path):
        cfg = ExperimentConfig(**SMALL)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert ExperimentConfig.from_file(path) == cfg

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            ExperimentConfig.from_dict({"N_t": 8, "bogus": 1})


class TestTrials:
    def test_deterministic(self):
        cfg = ExperimentConfig(**SMALL)
        assert run_trial(cfg, 5.0, 0.27, 32, 3) == run_trial(cfg, 5.0, 0.27, 32, 3)

    def test_methods_share_realization(self):
        cfg = ExperimentConfig(**SMALL)
        alone = run_trial(dataclasses.replace(cfg, methods=("perfect_csi",)), 5.0, 0.27, 32, 1)
        together = run_trial(cfg, 5.0, 0.27, 32, 1)
        assert alone[0] == together[2]
        assert len({r.seed for r in together}) == 1

    def test_records(self):
        cfg = ExperimentConfig(**SMALL)
        recs = run_trial(cfg, 10.0, 0.27, 32, 0)
        assert [r.method for r in recs] == list(harness.METHODS)
        assert all(r.rate_bps_hz >= 0 for r in recs)
        t, b, p = recs
        assert math.isfinite(t.cfo_err_hz) and math.isnan(b.cfo_err_hz) and math.isnan(p.cfo_err_hz)
        assert t.omp_iters >= 1

    def test_failure_falls_back(self, monkeypatch):
        def boom(*args, **kwargs):
            raise np.linalg.LinAlgError("forced")
        monkeypatch.setattr(harness, "estimate", boom)
        cfg = ExperimentConfig(**SMALL)
        rec = run_trial(cfg, 5.0, 0.27, 32, 0)[0]
        assert rec.flag == "fallback:LinAlgError"
        # fallback beams are the first training pair
        seed, rngs = harness.trial_rngs(cfg.master_seed, 0)
        sys_cfg = cfg.system(32, 5.0)
        H = harness.draw_channel(cfg.channel_params(), rngs["channel"]).H
        cb = harness.random_codebook(sys_cfg, rngs["codebook"])
        assert rec.rate_bps_hz == pytest.approx(achievable_rate(H, cb.F[0], cb.W[0], 1.0, sys_cfg.sigma2))

    def test_perfect_csi_upper_bounds(self):
        cfg = ExperimentConfig(N_t=8, N_r=4, M=(32,), trials=30, snr_db=(5.0,), f_max=140e3, f_e=130e3)
        recs = list(sweep(cfg))
        means = {r["method"]: r["mean_rate"] for r in summarize(recs)}
        assert means["perfect_csi"] >= means["tensor_omp"]
        assert means["perfect_csi"] >= means["omp_cfo_ignored"]


class TestSweep:
    def test_row_count_and_order(self):
        cfg = ExperimentConfig(**SMALL)
        recs = list(sweep(cfg))
        assert len(recs) == 2 * 4 * 3
        keys = [(cfg.snr_db.index(r.snr_db), r.trial, harness.METHODS.index(r.method)) for r in recs]
        assert keys == sorted(keys)

    def test_csv_header_and_determinism(self):
        cfg = ExperimentConfig(**SMALL)
        text = to_csv_string(sweep(cfg))
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == CSV_HEADER == [
            "method", "snr_db", "tau_rad", "num_meas", "trial", "seed",
            "rate_bps_hz", "cfo_err_hz", "chan_nmse_db", "omp_iters", "flag"]
        assert len(rows) == 1 + 24
        assert to_csv_string(sweep(cfg)) == text

    def test_worker_count_does_not_change_output(self):
        cfg = ExperimentConfig(**dict(SMALL, trials=3))
        assert to_csv_string(sweep(cfg, workers=2)) == to_csv_string(sweep(cfg))

    def test_paired_ci(self):
        cfg = ExperimentConfig(**SMALL)
        recs = list(sweep(cfg))
        mean, lo, hi = paired_difference_ci(recs, "perfect_csi", "tensor_omp", 10.0, 0.27, 32)
        assert lo <= mean <= hi
        with pytest.raises(ValueError):
            paired_difference_ci(recs, "perfect_csi", "tensor_omp", 99.0, 0.27, 32)


class TestSelftest:
    def test_passes(self):
        report = selftest()
        assert report.passed, str(report)
        assert report.elapsed < 60

    def test_detects_bad_adjoint(self):
        report = selftest(adjoint=lambda op, y: -op.adjoint(y))
        assert not report.passed
        assert [name for name, ok, _ in report.results if not ok] == ["adjoint identity"]


class TestCli:
    def test_selftest_ok(self, capsys):
        assert cli.main(["selftest"]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_selftest_failure_exit_code(self, monkeypatch):
        monkeypatch.setattr(cli, "selftest", lambda seed: selftest(seed, adjoint=lambda op, y: 2 * op.adjoint(y)))
        assert cli.main(["selftest"]) == 2

    def test_config_error(self, capsys):
        assert cli.main(["sweep-snr", "--methods", "agile"]) == 1
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["sweep-snr", "--config", str(tmp_path / "nope.json")]) == 1

    def test_sweep_snr(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text(json.dumps(dict(N_t=8, N_r=4, f_max=140e3, f_e=130e3)))
        out = tmp_path / "o.csv"
        code = cli.main(["sweep-snr", "--config", str(cfg_path), "--trials", "2", "--snr", "0,5",
                         "--measurements", "32", "--seed", "9", "--out", str(out)])
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 2 * 2 * 3
        assert {r["snr_db"] for r in rows} == {"0.0", "5.0"}

    def test_sweep_tau_defaults(self, tmp_path, monkeypatch):
        seen = {}

        def fake_sweep(cfg, workers=1):
            seen["cfg"] = cfg
            return iter(())
        monkeypatch.setattr(harness, "sweep", fake_sweep)
        assert cli.main(["sweep-tau", "--out", str(tmp_path / "t.csv")]) == 0
        assert seen["cfg"].snr_db == (5.0,) and seen["cfg"].tau == (0.0, 0.27, 0.8, 1.6)

    def test_single_run(self, capsys):
        code = cli.main(["single-run", "--snr", "10", "--tau", "0", "--methods", "perfect_csi,tensor_omp",
                         "--measurements", "32", "--trial", "2"])
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert [r["method"] for r in rows] == ["perfect_csi", "tensor_omp"]
        assert all(r["trial"] == "2" for r in rows)
