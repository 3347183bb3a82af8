"""Command-line surface: exit codes, determinism, restart, sweep."""

import math
import os

import numpy as np
import pytest

from dpmflow import read_snapshot
from dpmflow.cli import main

DECAY_RUN = """\
domain.dim = 2
domain.n = 32, 32
solver.nu = 0.05
solver.alpha = 1.5
solver.dt = 0.002
solver.t_end = {t_end}
initial.kind = single_mode
initial.axis = 0
initial.function = sin
diagnostics.p_list = 1, 2, 4, inf
diagnostics.sample_every = 0.1
diagnostics.checks = decay, dissipation_budget
output.dir = {outdir}
output.checkpoint = final.dpmf
"""


def write_config(path, text):
    path.write_text(text)
    return str(path)


class TestVerify:
    def test_exit_zero_and_reports_enough_identities(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        passes = [line for line in out.splitlines() if line.startswith("PASS")]
        assert len(passes) >= 25
        assert "FAIL" not in out


class TestRunCommand:
    def test_decay_run_passes_checks(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "run.cfg",
                           DECAY_RUN.format(t_end=1.0, outdir=tmp_path / "out"))
        assert main(["run", cfg]) == 0
        csv = (tmp_path / "out" / "diagnostics.csv").read_text()
        lines = csv.splitlines()
        assert lines[0].split(",")[0] == "t"
        pass_col = lines[0].split(",").index("decay_pass")
        assert all(line.split(",")[pass_col] == "1" for line in lines[1:])

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg_a = write_config(tmp_path / "a.cfg",
                             DECAY_RUN.format(t_end=0.5, outdir=tmp_path / "a"))
        cfg_b = write_config(tmp_path / "b.cfg",
                             DECAY_RUN.format(t_end=0.5, outdir=tmp_path / "b"))
        assert main(["run", cfg_a]) == 0
        assert main(["run", cfg_b]) == 0
        csv_a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
        csv_b = (tmp_path / "b" / "diagnostics.csv").read_bytes()
        assert csv_a == csv_b

    def test_checkpoint_restart_agrees_with_straight_run(self, tmp_path):
        random_run = """\
domain.dim = 2
domain.n = 32, 32
solver.nu = 0.1
solver.alpha = 1.2
solver.dt = 0.002
solver.t_end = {t_end}
initial.kind = {kind}
{initial_detail}
diagnostics.p_list = 2
diagnostics.sample_every = 0.1
output.dir = {outdir}
output.checkpoint = final.dpmf
"""
        first = write_config(tmp_path / "first.cfg", random_run.format(
            t_end=0.25, kind="random", initial_detail="initial.seed = 3", outdir=tmp_path / "p1"))
        assert main(["run", first]) == 0
        resumed = write_config(tmp_path / "resumed.cfg", random_run.format(
            t_end=0.5, kind="file",
            initial_detail=f"initial.path = {tmp_path / 'p1' / 'final.dpmf'}",
            outdir=tmp_path / "p2"))
        assert main(["run", resumed]) == 0
        straight = write_config(tmp_path / "straight.cfg", random_run.format(
            t_end=0.5, kind="random", initial_detail="initial.seed = 3", outdir=tmp_path / "p3"))
        assert main(["run", straight]) == 0
        _, f_resumed, _ = read_snapshot(tmp_path / "p2" / "final.dpmf")
        _, f_straight, _ = read_snapshot(tmp_path / "p3" / "final.dpmf")
        assert np.abs(f_resumed.values - f_straight.values).max() <= 1e-12

    def test_malformed_config_exits_4(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "bad.cfg", "domain.dim: 2\n")
        assert main(["run", cfg]) == 4
        assert "config error" in capsys.readouterr().err

    def test_unknown_check_exits_4(self, tmp_path):
        text = DECAY_RUN.format(t_end=0.5, outdir=tmp_path / "o")
        cfg = write_config(tmp_path / "bad.cfg",
                           text.replace("decay, dissipation_budget", "magic"))
        assert main(["run", cfg]) == 4

    def test_decay_check_on_forced_run_exits_4(self, tmp_path):
        text = DECAY_RUN.format(t_end=0.5, outdir=tmp_path / "o")
        cfg = write_config(tmp_path / "forced.cfg",
                           text + "forcing.kind = single_mode\nforcing.axis = 1\n")
        assert main(["run", cfg]) == 4

    def test_snapshot_output(self, tmp_path):
        text = DECAY_RUN.format(t_end=0.3, outdir=tmp_path / "o")
        cfg = write_config(tmp_path / "snap.cfg", text + "output.snapshots = true\n")
        assert main(["run", cfg]) == 0
        snaps = sorted((tmp_path / "o").glob("snapshot_*.dpmf"))
        assert len(snaps) >= 3
        t, field, g = read_snapshot(snaps[0])
        assert t == 0.0 and g is None and field.domain.n == (32, 32)

    def test_failing_bound_check_exits_2(self, tmp_path):
        # inviscid first-order Euler grows energy (u + dt*N is never shorter
        # than u for skew N), so the budget inequality must fail
        text = """\
domain.dim = 2
domain.n = 32, 32
solver.nu = 0
solver.alpha = 1.0
solver.dt = 0.02
solver.t_end = 2.0
solver.scheme = ifeuler
initial.kind = random
initial.seed = 1
initial.l2_norm = 2.0
diagnostics.p_list = 2
diagnostics.sample_every = 0.5
diagnostics.checks = dissipation_budget
output.dir = {outdir}
"""
        cfg = write_config(tmp_path / "grow.cfg", text.format(outdir=tmp_path / "o"))
        assert main(["run", cfg]) == 2

    def test_unexpected_blowup_exits_3(self, tmp_path, capsys):
        unstable = """\
domain.dim = 2
domain.n = 16, 16
solver.nu = 0
solver.alpha = 1.0
solver.dt = 50.0
solver.t_end = 2500.0
initial.kind = random
initial.seed = 0
initial.l2_norm = 50.0
diagnostics.p_list = 2
diagnostics.sample_every = 500
output.dir = {outdir}
"""
        cfg = write_config(tmp_path / "u.cfg", unstable.format(outdir=tmp_path / "o"))
        assert main(["run", cfg]) == 3
        cfg2 = write_config(tmp_path / "u2.cfg",
                            unstable.format(outdir=tmp_path / "o2")
                            + "solver.allow_blowup = true\n")
        assert main(["run", cfg2]) == 0


BLOWUP_CFG = """\
blowup.n = 128
blowup.dt = 0.001
blowup.t_end = {t_end}
blowup.amplitude = 1.0
blowup.sample_every = 0.05
blowup.threshold = 1e6
blowup.oracle_rtol = 1e-4
output.dir = {outdir}
"""


class TestBlowupCommand:
    def test_short_oracle_run(self, tmp_path):
        cfg = write_config(tmp_path / "b.cfg",
                           BLOWUP_CFG.format(t_end=0.4, outdir=tmp_path / "o"))
        assert main(["blowup1d", cfg]) == 0
        header = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()[0]
        assert header.split(",") == ["t", "l2", "linf", "max", "g", "h2",
                                     "oracle_beta", "oracle_r"]

    def test_blowup_detected_with_accurate_t_star(self, tmp_path):
        cfg = write_config(tmp_path / "b.cfg",
                           BLOWUP_CFG.format(t_end=3.0, outdir=tmp_path / "o"))
        assert main(["blowup1d", cfg]) == 0
        summary = (tmp_path / "o" / "summary.csv").read_text().splitlines()
        row = dict(zip(summary[0].split(","), summary[1].split(",")))
        assert row["blew_up"] == "1"
        assert abs(float(row["t_star_est"]) - math.pi / 2) / (math.pi / 2) < 0.01
        assert row["checks_passed"] == "1"

    def test_quasilinear_run_with_max_bound(self, tmp_path):
        text = """\
blowup.n = 128
blowup.dt = 0.001
blowup.t_end = 0.5
blowup.amplitude = 5.0
blowup.mode = quasilinear
blowup.nu = 0.1
blowup.sample_every = 0.02
blowup.max_bound_check = true
output.dir = {outdir}
"""
        cfg = write_config(tmp_path / "q.cfg", text.format(outdir=tmp_path / "o"))
        assert main(["blowup1d", cfg]) == 0
        header = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()[0]
        assert "max_bound_pass" in header

    def test_unattainable_oracle_tolerance_exits_2(self, tmp_path):
        text = BLOWUP_CFG.format(t_end=0.4, outdir=tmp_path / "o")
        text = text.replace("blowup.oracle_rtol = 1e-4",
                            "blowup.oracle_rtol = 1e-18")
        cfg = write_config(tmp_path / "b.cfg", text)
        assert main(["blowup1d", cfg]) == 2

    def test_oracle_on_with_incompatible_mode_exits_4(self, tmp_path):
        text = BLOWUP_CFG.format(t_end=0.4, outdir=tmp_path / "o")
        cfg = write_config(tmp_path / "b.cfg",
                           text + "blowup.mode = quasilinear\nblowup.nu = 0.1\n"
                           + "blowup.oracle = on\n")
        assert main(["blowup1d", cfg]) == 4


class TestSweep:
    def test_cartesian_sweep(self, tmp_path):
        text = DECAY_RUN.format(t_end=0.3, outdir=tmp_path / "sweep")
        text = text.replace("diagnostics.checks = decay, dissipation_budget",
                            "diagnostics.checks = decay")
        text += ("sweep.solver.alpha = 1.0 | 2.0\n"
                 "sweep.solver.nu = 0.05 | 0.1\n"
                 "sweep.workers = 2\n")
        cfg = write_config(tmp_path / "s.cfg", text)
        assert main(["sweep", cfg]) == 0
        outdir = tmp_path / "sweep"
        points = sorted(p for p in os.listdir(outdir) if p.startswith("pt"))
        assert len(points) == 4
        for p in points:
            assert (outdir / p / "diagnostics.csv").exists()
            assert (outdir / p / "config.txt").exists()
        summary = (outdir / "summary.csv").read_text().splitlines()
        assert summary[0].split(",")[:3] == ["point", "solver.alpha", "solver.nu"]
        assert len(summary) == 5
        assert all(line.split(",")[3] == "0" for line in summary[1:])

    def test_sweep_without_axes_exits_4(self, tmp_path):
        cfg = write_config(tmp_path / "s.cfg",
                           DECAY_RUN.format(t_end=0.3, outdir=tmp_path / "o"))
        assert main(["sweep", cfg]) == 4
