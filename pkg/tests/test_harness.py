"""Harness tests: datasets, config round-trip, experiment outputs, CLI contracts."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from drmmd import (
    ExperimentConfig,
    GaussianKernel,
    gen_gaussian,
    gen_three_rings,
    mmd2_estimate,
    parse_config,
    run_experiment,
    serialize_config,
    setup_student_teacher,
)
from drmmd.config import ConfigError
from drmmd.datasets import RING_CENTERS, gen_gaussian_mixture
from drmmd.runio import read_metrics

MINI_CONFIG = """
schema_version: 1
scenario: gaussian_shift
n_source: 12
n_target: 12
seed: 3
output_dir: "{out}"
kernel:
  family: gaussian
  bandwidth: 0.5
flow:
  step_size: 0.05
  n_max: {n_max}
  snapshot_every: 2
  lam:
    mode: adaptive
    initial: 0.1
    regularity: 0.5
algorithms:
  - name: drmmd
  - name: mmd
    overrides:
      flow: {{step_size: 0.1}}
"""


def ring_distance(points):
    centers = np.asarray(RING_CENTERS)
    dists = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
    return np.min(np.abs(dists - 1.0), axis=1)


class TestDatasets:
    def test_three_rings_one_point_per_ring(self):
        sys_ = gen_three_rings(3, noise=0.0, seed=0)
        assert len(sys_) == 3
        assert np.max(ring_distance(sys_.positions)) <= 1e-12

    def test_three_rings_exact_radius_without_noise(self):
        sys_ = gen_three_rings(300, noise=0.0, seed=1)
        assert np.max(ring_distance(sys_.positions)) <= 1e-12

    def test_three_rings_noise_tail_bound(self):
        sys_ = gen_three_rings(300, noise=0.02, seed=2)
        within = ring_distance(sys_.positions) <= 3 * 0.02
        assert within.mean() >= 0.99

    def test_three_rings_minimum_count(self):
        with pytest.raises(ValueError):
            gen_three_rings(2)

    def test_gaussian_zero_cov_collapses_to_mean(self):
        sys_ = gen_gaussian(5, (2.0, -1.0), 0.0, seed=3)
        assert np.allclose(sys_.positions, [2.0, -1.0], atol=0, rtol=0)

    def test_gaussian_clt_mean_bound(self):
        sys_ = gen_gaussian(1000, (0.0, 0.0), 1.0, seed=4)
        assert np.all(np.abs(sys_.positions.mean(axis=0)) <= 4 / np.sqrt(1000))

    def test_gaussian_seed_determinism(self):
        a = gen_gaussian(20, (0.0,), 1.0, seed=5)
        b = gen_gaussian(20, (0.0,), 1.0, seed=5)
        assert np.array_equal(a.positions, b.positions)

    def test_mixture_round_robins_components(self):
        sys_ = gen_gaussian_mixture(9, [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]], 1e-6, seed=6)
        lab = np.argmin(
            np.linalg.norm(
                sys_.positions[:, None, :]
                - np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])[None],
                axis=2,
            ),
            axis=1,
        )
        assert np.array_equal(lab, np.arange(9) % 3)


class TestStudentTeacher:
    def test_shapes_and_param_count(self):
        setup = setup_student_teacher(m_teacher=10, n_student=1000, seed=0)
        assert setup.teacher.positions.shape == (10, 157)
        assert setup.student.positions.shape == (1000, 157)
        assert setup.kernel.param_dim == 3 * 50 + 3 + 3 + 1

    def test_probe_sets(self):
        setup = setup_student_teacher(m_teacher=4, n_student=8, z_train=64,
                                      z_validation=64, z_batch_size=16, seed=1)
        assert setup.kernel.z_pool.shape == (64, 50)
        assert setup.kernel.z_batch.shape == (16, 50)
        assert setup.validation_kernel.z_batch.shape == (64, 50)
        # all probes on the unit sphere
        for z in (setup.kernel.z_pool, setup.validation_kernel.z_batch):
            assert np.allclose(np.linalg.norm(z, axis=1), 1.0, atol=1e-12)
        # train and validation sets are disjoint
        train = {tuple(r) for r in setup.kernel.z_pool}
        assert not any(tuple(r) in train for r in setup.validation_kernel.z_batch)

    def test_identical_clouds_zero_validation_mmd(self):
        setup = setup_student_teacher(m_teacher=6, n_student=6, z_train=32,
                                      z_validation=32, z_batch_size=8, seed=2)
        same = setup.teacher
        assert mmd2_estimate(same, same, setup.validation_kernel) <= 1e-14


class TestConfig:
    def test_round_trip(self):
        cfg = parse_config(MINI_CONFIG.format(out="runs/x", n_max=4))
        assert parse_config(serialize_config(cfg)) == cfg

    def test_defaults_applied(self):
        cfg = parse_config("scenario: three_rings\n")
        assert cfg.kernel.family == "gaussian"
        assert cfg.flow.lam.mode == "adaptive"

    @pytest.mark.parametrize(
        "text",
        [
            "scenario: ringz\n",
            "unknown_key: 1\n",
            "flow: {step_size: -1}\n",
            "flow: {lam: {mode: adaptive, initial: 5.0}}\n",
            "schema_version: 99\n",
            "algorithms: []\n",
            "kernel: {family: gaussian, bandwidth: -0.3}\n",
            ": not yaml : [",
        ],
    )
    def test_rejects_bad_configs(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)


class TestRunExperiment:
    def run_mini(self, tmp_path, n_max=3):
        cfg = parse_config(MINI_CONFIG.format(out=tmp_path / "out", n_max=n_max))
        return cfg, run_experiment(cfg, quiet=True)

    def test_smoke_zero_iterations(self, tmp_path):
        cfg = parse_config(MINI_CONFIG.format(out=tmp_path / "out", n_max=0))
        results = run_experiment(cfg, quiet=True)
        assert [name for name, _, _ in results] == ["drmmd", "mmd"]
        for _, record, run_dir in results:
            metrics = read_metrics(run_dir / "metrics.csv")
            assert metrics["iteration"].shape == (1,)

    def test_output_completeness(self, tmp_path):
        _, results = self.run_mini(tmp_path, n_max=4)
        for name, record, run_dir in results:
            assert (run_dir / "config.yaml").exists()
            assert (run_dir / "target.csv").exists()
            assert (run_dir / "snapshot_4.csv").exists()  # final snapshot
            metrics = read_metrics(run_dir / "metrics.csv")
            assert metrics["iteration"].shape == (5,)  # n_max + 1 rows
            assert list(metrics) == ["iteration", "lambda", "drmmd", "mmd2", "w2"]
            summary = json.loads((run_dir / "summary.json").read_text())
            assert summary["algorithm"] == name
            assert summary["rows"] == 5
            echo = yaml.safe_load((run_dir / "config.yaml").read_text())
            assert echo["algorithms"][0]["name"] == name

    def test_override_applied_per_algorithm(self, tmp_path):
        _, results = self.run_mini(tmp_path)
        echos = {
            name: yaml.safe_load((run_dir / "config.yaml").read_text())
            for name, _, run_dir in results
        }
        assert echos["drmmd"]["flow"]["step_size"] == 0.05
        assert echos["mmd"]["flow"]["step_size"] == 0.1

    def test_seed_isolation_byte_identical_metrics(self, tmp_path):
        cfg1 = parse_config(MINI_CONFIG.format(out=tmp_path / "a", n_max=3))
        cfg2 = parse_config(MINI_CONFIG.format(out=tmp_path / "b", n_max=3))
        run_experiment(cfg1, quiet=True)
        run_experiment(cfg2, quiet=True)
        for algo in ("drmmd", "mmd"):
            a = (tmp_path / "a" / algo / "metrics.csv").read_bytes()
            b = (tmp_path / "b" / algo / "metrics.csv").read_bytes()
            assert a == b

    def test_algo_filter(self, tmp_path):
        cfg = parse_config(MINI_CONFIG.format(out=tmp_path / "out", n_max=1))
        results = run_experiment(cfg, algo_filter="mmd", quiet=True)
        assert [name for name, _, _ in results] == ["mmd"]

    def test_student_teacher_smoke(self, tmp_path):
        text = """
scenario: student_teacher
n_source: 12
n_target: 4
seed: 0
output_dir: "%s"
kernel: {family: neural, input_dim: 10, hidden_dim: 3, z_batch_size: 8}
scenario_params: {z_train: 32, z_validation: 32}
flow:
  step_size: 0.1
  n_max: 2
  snapshot_every: 10
  lam: {mode: adaptive, initial: 0.1, regularity: 0.5}
algorithms: [{name: drmmd}]
""" % (tmp_path / "st")
        cfg = parse_config(text)
        (name, record, run_dir), = run_experiment(cfg, quiet=True)
        # probe batch resampled per iteration -> per-iteration factorization
        assert record.factorizations == 3
        metrics = read_metrics(run_dir / "metrics.csv")
        assert np.all(np.isnan(metrics["w2"]))  # sizes differ
        assert np.all(np.isfinite(metrics["mmd2"]))


class TestCli:
    def drmmd(self, *args, **kw):
        return subprocess.run(
            [sys.executable, "-m", "drmmd.cli", *args],
            capture_output=True, text=True, **kw,
        )

    def test_gen_data_and_eval_round_trip(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        r1 = self.drmmd("gen-data", "--scenario", "three_rings", "--n", "30",
                        "--seed", "1", "--out", str(a))
        r2 = self.drmmd("gen-data", "--scenario", "gaussian", "--n", "30",
                        "--seed", "2", "--out", str(b), "--mean", "1,1",
                        "--cov-scale", "0.5")
        assert r1.returncode == 0 and r2.returncode == 0
        out = self.drmmd("eval", "--a", str(a), "--b", str(b),
                         "--kernel", "gaussian", "--bandwidth", "0.5")
        assert out.returncode == 0
        payload = json.loads(out.stdout)
        assert payload["mmd2"] > 0 and payload["w2"] > 0

    def test_eval_unequal_sizes_null_w2(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        self.drmmd("gen-data", "--scenario", "gaussian", "--n", "5", "--seed", "0", "--out", str(a))
        self.drmmd("gen-data", "--scenario", "gaussian", "--n", "7", "--seed", "0", "--out", str(b))
        out = self.drmmd("eval", "--a", str(a), "--b", str(b))
        assert out.returncode == 0
        assert json.loads(out.stdout)["w2"] is None

    def test_run_smoke_and_quiet(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text(MINI_CONFIG.format(out=tmp_path / "out", n_max=1))
        res = self.drmmd("run", "--config", str(cfg_path), "--algo", "drmmd", "--quiet")
        assert res.returncode == 0
        assert res.stdout == ""
        assert (tmp_path / "out" / "drmmd" / "metrics.csv").exists()

    def test_run_seed_and_out_overrides(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text(MINI_CONFIG.format(out=tmp_path / "ignored", n_max=1))
        res = self.drmmd("run", "--config", str(cfg_path), "--algo", "drmmd",
                         "--seed", "9", "--out", str(tmp_path / "o2"), "--quiet")
        assert res.returncode == 0
        summary = json.loads((tmp_path / "o2" / "drmmd" / "summary.json").read_text())
        assert summary["seed"] == 9

    def test_exit_code_config_error(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("scenario: nope\n")
        res = self.drmmd("run", "--config", str(bad))
        assert res.returncode == 1
        assert "error" in res.stderr

    def test_exit_code_missing_args(self):
        res = self.drmmd("run")
        assert res.returncode == 1

    def test_exit_code_io_error(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        res = self.drmmd("gen-data", "--scenario", "gaussian", "--n", "3",
                         "--seed", "0", "--out", str(blocker / "sub" / "o.csv"))
        assert res.returncode == 3

    def test_thread_cap_env(self, tmp_path):
        a = tmp_path / "a.csv"
        self.drmmd("gen-data", "--scenario", "gaussian", "--n", "4", "--seed", "0", "--out", str(a))
        res = self.drmmd("eval", "--a", str(a), "--b", str(a),
                         env={"DRMMD_THREADS": "1", "PATH": "/usr/bin:/bin", "PYTHONPATH": "src"})
        assert res.returncode == 0
