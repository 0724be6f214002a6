import json
import math

import numpy as np
import pytest

from dcsi_rzf.channel import SystemConfig
from dcsi_rzf.detequiv import deterministic_equivalents, sinr_det
from dcsi_rzf.errors import ConfigError
from dcsi_rzf.harness import (
    AlphaGrid,
    ExperimentRecord,
    config_from_dict,
    find_optimal_alpha,
    load_config,
    m_tx_for,
    records_to_csv,
    run_alpha_sweep,
    run_lemma_suite,
    run_user_sweep,
    write_reports_jsonl,
)
from dcsi_rzf.harness.cli import main
from dcsi_rzf.harness.config import with_sweep
from dcsi_rzf.harness.experiments import RECORD_FIELDS

HEADER = ("K,M,n,M_TX,beta,alpha,P_dB,sigma_sq,trials,empirical_rate_mean,empirical_rate_stderr,"
          "deterministic_rate,deterministic_sinr,delta,seed")


def small(**doc):
    base = {"n": 3, "K": 6, "beta": 1.0, "P_dB": 10.0, "alpha": 0.1, "sigma_sq": 0.1, "trials": 3}
    base.update(doc.pop("base", {}))
    return config_from_dict({"base": base, **doc})


class TestConfig:
    def test_defaults(self):
        cfg = config_from_dict({})
        b = cfg.base
        assert (b.n, b.K, b.M_TX, b.trials) == (3, 30, 10, 500)
        assert b.P == pytest.approx(10.0) and cfg.P_dB == 10.0
        assert b.sigma_sq == pytest.approx((0.1,) * 3)
        assert cfg.sweep_values == (30, 60, 90)

    def test_overrides(self):
        cfg = config_from_dict({"base": {"seed": 1}}, {"seed": 9, "trials": 2, "centralized_baseline": True})
        assert cfg.base.base_seed == 9 and cfg.base.trials == 2 and cfg.centralized_baseline

    def test_per_tx_sigma(self):
        cfg = small(base={"sigma_sq": [0.0, 0.1, 0.2]})
        assert cfg.base.sigma_sq == pytest.approx((0.0, 0.1, 0.2))
        assert cfg.centralized(cfg.base).sigma_sq == pytest.approx((0.1,))

    def test_explicit_m_tx(self):
        cfg = small(base={"M_TX": 4})
        assert cfg.base.M == 12 and cfg.base.beta == 2.0

    @pytest.mark.parametrize("doc", [
        {"sweep_values": [60, 30]},
        {"sweep_variable": "P"},
        {"sweep_variable": "alpha", "sweep_values": [0.0, 1.0]},
        {"sweep_values": [30.5]},
        {"base": {"K": 7}},
        {"base": {"sigma_sq": [0.1, 0.1]}},
        {"refine_rounds": -1},
    ])
    def test_rejects(self, doc):
        with pytest.raises(ConfigError):
            small(**doc)

    def test_alpha_default_values(self):
        cfg = small(sweep_variable="alpha", alpha_grid={"min": 0.01, "max": 1.0, "points": 5})
        assert cfg.sweep_values == pytest.approx(tuple(np.logspace(-2, 0, 5)))

    def test_bad_grid(self):
        with pytest.raises(ConfigError):
            AlphaGrid(1.0, 0.1, 5).values()

    def test_load(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"base": {"K": 12}, "sweep_values": [12]}))
        assert load_config(p).base.K == 12
        p.write_text("[1]")
        with pytest.raises(ConfigError):
            load_config(p)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_m_tx_for(self):
        assert m_tx_for(30, 1.0, 3) == 10
        assert m_tx_for(31, 1.0, 3) is None
        assert m_tx_for(20, 1.5, 3) == 10


class TestUserSweep:
    def test_records(self):
        cfg = small(sweep_values=[6, 12], centralized_baseline=True)
        recs = run_user_sweep(cfg)
        assert len(recs) == 4
        assert [(r.K, r.n) for r in recs] == [(6, 3), (6, 1), (12, 3), (12, 1)]
        for r in recs:
            assert r.beta == r.M / r.K and r.M == r.n * r.M_TX and r.empirical_rate_stderr >= 0

    def test_deterministic_rate_is_passthrough(self):
        cfg = small(sweep_values=[6, 12])
        for r in run_user_sweep(cfg):
            det = deterministic_equivalents(r.alpha, r.beta, 10 ** (r.P_dB / 10), [math.sqrt(s) for s in r.sigma_sq])
            assert r.deterministic_rate == det.rate and r.delta == det.delta

    def test_single_trial(self):
        recs = run_user_sweep(small(base={"trials": 1}, sweep_values=[6]))
        assert len(recs) == 1 and recs[0].empirical_rate_stderr == 0.0

    def test_perfect_csit_settings_coincide(self):
        recs = run_user_sweep(small(base={"sigma_sq": 0.0}, sweep_values=[6], centralized_baseline=True))
        a, b = recs
        assert a.empirical_rate_mean == b.empirical_rate_mean
        assert a.deterministic_rate == pytest.approx(b.deterministic_rate, rel=1e-12)

    def test_non_integral(self):
        with pytest.raises(ConfigError, match=r"\[7, 8\]"):
            run_user_sweep(small(sweep_values=[6, 7, 8]))

    def test_wrong_variable(self):
        with pytest.raises(ConfigError):
            run_user_sweep(small(sweep_variable="alpha"))


class TestAlphaSweep:
    def test_single_alpha_matches_det_eq(self):
        cfg = small(sweep_variable="alpha", sweep_values=[0.1])
        (rec,) = run_alpha_sweep(cfg)
        det = sinr_det(cfg.base)
        assert rec.deterministic_rate == det.rate and rec.deterministic_sinr == det.sinr

    def test_operating_point(self):
        cfg = small(sweep_variable="alpha", sweep_values=[0.01, 0.1, 1.0], centralized_baseline=True)
        recs = run_alpha_sweep(cfg)
        assert len(recs) == 6
        op = [r for r in recs if r.alpha == 0.1]
        assert all(r.P_dB == 10.0 and r.alpha == pytest.approx(1 / 10 ** (r.P_dB / 10)) for r in op)

    def test_unimodal_on_grid(self):
        grid = np.logspace(-2, 0, 25)
        for n, sig in ((3, [math.sqrt(0.1)] * 3), (1, [math.sqrt(0.1)])):
            rates = np.array([deterministic_equivalents(a, 1.0, 10.0, sig).rate for a in grid])
            peak = int(np.argmax(rates))
            assert np.all(np.diff(rates[: peak + 1]) > 0) and np.all(np.diff(rates[peak:]) < 0)


class TestOptimalAlpha:
    base = SystemConfig(n=3, M_TX=10, K=30, P=10.0, alpha=0.1, sigma=(math.sqrt(0.1),) * 3)

    def test_boundary_argmax(self):
        grid = [5.0, 10.0, 20.0, 40.0]
        rates = [deterministic_equivalents(a, 1.0, 10.0, self.base.sigma).rate for a in grid]
        assert all(np.diff(rates) < 0)
        opt = find_optimal_alpha(self.base, grid, refine_rounds=10)
        assert opt.alpha_star == 5.0

    def test_no_refinement(self):
        grid = list(np.logspace(-3, 1, 50))
        rates = [deterministic_equivalents(a, 1.0, 10.0, self.base.sigma).rate for a in grid]
        opt = find_optimal_alpha(self.base, grid, refine_rounds=0)
        assert opt.alpha_star == grid[int(np.argmax(rates))]

    def test_refinement_improves(self):
        grid = list(np.logspace(-3, 1, 50))
        coarse = find_optimal_alpha(self.base, grid, 0)
        fine = find_optimal_alpha(self.base, grid, 20)
        assert fine.rate_star >= coarse.rate_star
        assert fine.bracket[0] <= fine.alpha_star <= fine.bracket[1]
        assert find_optimal_alpha(self.base, grid, 20) == fine

    def test_perfect_csit_optimum(self):
        # with exact CSIT, regularization 1/(beta P) is the optimum
        base = self.base.replace(sigma=(0.0,) * 3)
        opt = find_optimal_alpha(base, list(np.logspace(-3, 1, 50)), 30)
        assert opt.alpha_star == pytest.approx(0.1, rel=1e-4)

    def test_empty_grid(self):
        with pytest.raises(ConfigError):
            find_optimal_alpha(self.base, [], 3)
        with pytest.raises(ConfigError):
            find_optimal_alpha(self.base, [0.2, 0.1], 3)


class TestOutput:
    def test_header_and_rows(self):
        recs = run_user_sweep(small(sweep_values=[6, 12], centralized_baseline=True))
        text = records_to_csv(recs)
        lines = text.splitlines()
        assert lines[0] == HEADER == ",".join(RECORD_FIELDS)
        assert len(lines) == 1 + 4
        row = dict(zip(RECORD_FIELDS, lines[1].split(",")))
        assert row["sigma_sq"] == "0.1;0.1;0.1"
        assert float(row["deterministic_rate"]) == recs[0].deterministic_rate

    def test_record_fields(self):
        assert RECORD_FIELDS == tuple(HEADER.split(","))
        assert ExperimentRecord.__dataclass_fields__.keys() == set(RECORD_FIELDS)

    def test_jsonl(self, tmp_path):
        reports = run_lemma_suite("fast", 0)[:3]
        p = tmp_path / "r.jsonl"
        assert write_reports_jsonl(reports, p) == 3
        rows = [json.loads(line) for line in p.read_text().splitlines()]
        assert [r["lemma_id"] for r in rows] == [r.lemma_id for r in reports]


class TestLemmaSuite:
    def test_fast(self):
        reports = run_lemma_suite("fast", 0)
        exact = [r for r in reports if r.lemma_id.startswith(("lemma2", "lemma5"))]
        assert exact and all(r.passed for r in exact)
        assert all(r.passed for r in reports)
        assert max(r.dimension for r in reports) <= 64

    def test_deterministic(self):
        a = [r.to_json() for r in run_lemma_suite("fast", 3)]
        b = [r.to_json() for r in run_lemma_suite("fast", 3)]
        assert a == b

    def test_bad_tier(self):
        with pytest.raises(ConfigError):
            run_lemma_suite("medium")


class TestCli:
    def _config(self, tmp_path, **doc):
        base = {"n": 3, "K": 6, "beta": 1.0, "P_dB": 10.0, "alpha": 0.1, "sigma_sq": 0.1, "trials": 4}
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"base": base, **doc}))
        return p

    def test_det_eq(self, tmp_path, capsys):
        assert main(["det-eq", "--config", str(self._config(tmp_path))]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["numerator_mode"] == "squared"
        assert out["delta"] == pytest.approx((math.sqrt(41) - 1) / 2)

    def test_literal_flag(self, tmp_path, capsys):
        main(["det-eq", "--config", str(self._config(tmp_path)), "--numerator-mode", "literal"])
        assert json.loads(capsys.readouterr().out)["numerator_mode"] == "literal"

    def test_sweep_users_byte_identical(self, tmp_path):
        cfg = self._config(tmp_path, sweep_values=[6, 12])
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert main(["sweep-users", "--config", str(cfg), "--out", str(out), "--baseline", "--seed", "5"]) == 0
        assert a.read_bytes() == b.read_bytes()
        lines = a.read_text().splitlines()
        assert lines[0] == HEADER and len(lines) == 5
        assert all(line.endswith(",5") for line in lines[1:])

    def test_workers_byte_identical(self, tmp_path):
        cfg = self._config(tmp_path, sweep_values=[6])
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["sweep-users", "--config", str(cfg), "--out", str(a)])
        main(["sweep-users", "--config", str(cfg), "--out", str(b), "--workers", "2"])
        assert a.read_bytes() == b.read_bytes()

    def test_sweep_alpha_stdout(self, tmp_path, capsys):
        cfg = self._config(tmp_path, alpha_grid={"min": 0.01, "max": 1.0, "points": 3})
        assert main(["sweep-alpha", "--config", str(cfg), "--trials", "2"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == HEADER and len(lines) == 4

    def test_optimal_alpha(self, tmp_path, capsys):
        assert main(["optimal-alpha", "--config", str(self._config(tmp_path)), "--baseline"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["distributed"]["n"] == 3 and out["centralized"]["n"] == 1

    def test_verify_lemmas(self, tmp_path, capsys):
        out = tmp_path / "lemmas.jsonl"
        assert main(["verify-lemmas", "--tier", "fast", "--out", str(out)]) == 0
        assert "checks passed" in capsys.readouterr().out
        assert all(json.loads(line)["passed"] for line in out.read_text().splitlines())

    def test_verify_lemmas_failure_status(self, monkeypatch, capsys):
        from dcsi_rzf.harness import cli
        from dcsi_rzf.rmt_lab import LemmaCheckReport

        monkeypatch.setattr(cli, "run_lemma_suite",
                            lambda tier, seed: [LemmaCheckReport("bad", 1, 1, 0.0, 1.0, 1.0, 0.1)])
        assert main(["verify-lemmas"]) == 1
        assert "FAIL bad" in capsys.readouterr().out

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = self._config(tmp_path, sweep_values=[6, 7])
        assert main(["sweep-users", "--config", str(cfg)]) == 2
        assert "error:" in capsys.readouterr().err


def test_with_sweep():
    cfg = with_sweep(small(), "alpha", [0.1, 0.2])
    assert cfg.sweep_variable == "alpha" and cfg.sweep_values == (0.1, 0.2)
