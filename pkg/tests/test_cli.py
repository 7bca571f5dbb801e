import csv
import json
import math
from pathlib import Path

import pytest

from micromaser_fpe.cli import CSV_COLUMNS, main
from micromaser_fpe.config import ConfigError, load_scenario
from micromaser_fpe.models import ResultRow, RunResult
from micromaser_fpe.scenarios import _flag_nans

I_TARGET = 2 * math.sin(2.0) ** 2 / 0.08
GT = 2.0 / math.sqrt(I_TARGET)

PRODUCT_CONFIG = f"""
[pump]
family = product_upper
n_atoms = 2

[cavity]
gT = {GT:.12g}
CT = 0.08

[run]
mode = noise
seed = 7
"""

Z_CONFIG = f"""
[pump]
family = zstate
n_atoms = 2
alpha_re = {math.sqrt(0.95):.12g}
beta_re = {math.sqrt(0.05):.12g}
b = 1

[cavity]
gT = 1.0
CT = 0.05
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestRunCommand:
    def test_noise_run_writes_csv_and_manifest(self, tmp_path, capsys):
        cfg = write(tmp_path, "point.ini", PRODUCT_CONFIG)
        out = tmp_path / "point.csv"
        assert main(["run", str(cfg), "--out", str(out)]) == 0
        rows = read_rows(out)
        assert list(rows[0].keys()) == list(CSV_COLUMNS)
        assert abs(float(rows[0]["xi"]) + 0.69372) < 1e-3
        assert rows[0]["stable"] == "true"
        manifest = json.loads((tmp_path / "point.manifest.json").read_text())
        assert manifest["seed"] == 7
        assert manifest["config"]["pump"]["family"] == "product_upper"

    def test_deterministic_reruns_are_byte_identical(self, tmp_path):
        cfg = write(tmp_path, "point.ini", PRODUCT_CONFIG)
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert main(["run", str(cfg), "--out", str(out1)]) == 0
        assert main(["run", str(cfg), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        m1 = (tmp_path / "a.manifest.json").read_bytes()
        m2 = (tmp_path / "b.manifest.json").read_bytes()
        assert m1 == m2

    def test_manifest_round_trip(self, tmp_path):
        cfg = write(tmp_path, "point.ini", PRODUCT_CONFIG)
        out1 = tmp_path / "a.csv"
        assert main(["run", str(cfg), "--out", str(out1)]) == 0
        manifest = tmp_path / "a.manifest.json"
        out2 = tmp_path / "b.csv"
        assert main(["run", str(manifest), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_discrepancy_report_written_for_coherent_pump(self, tmp_path):
        cfg = write(tmp_path, "z.ini", Z_CONFIG)
        out = tmp_path / "z.csv"
        assert main(["run", str(cfg), "--out", str(out)]) == 0
        report = json.loads((tmp_path / "z.discrepancies.json").read_text())
        assert any(not entry["within_tol"] for entry in report)

    def test_steady_state_mode(self, tmp_path):
        cfg = write(tmp_path, "point.ini", PRODUCT_CONFIG)
        out = tmp_path / "roots.csv"
        assert main(["run", str(cfg), "--mode", "steady-state",
                     "--out", str(out)]) == 0
        rows = read_rows(out)
        assert any(r["stable"] == "true" for r in rows)

    def test_coefficients_mode(self, tmp_path):
        cfg = write(tmp_path, "point.ini", PRODUCT_CONFIG + "\n[field]\nI = 25.0\nphi = 0.0\n")
        out = tmp_path / "coeff.csv"
        assert main(["run", str(cfg), "--mode", "coefficients",
                     "--out", str(out)]) == 0
        rows = read_rows(out)
        b_angle = GT * 5.0
        expected = 2 * (b_angle * math.sin(b_angle) * math.cos(b_angle)
                        - 0.5 * math.sin(b_angle) ** 4)
        assert abs(float(rows[0]["Q_II"]) - expected) < 1e-5

    def test_sde_mode(self, tmp_path):
        b_angle = 1.2
        i_target = 0.8 * math.sin(b_angle) ** 2 / 0.01
        cfg = write(tmp_path, "sde.ini", f"""
[pump]
family = clone
n_atoms = 2
lambda1 = 0.7

[cavity]
gT = {b_angle / math.sqrt(i_target):.12g}
CT = 0.01

[sde]
n_traj = 400
dt = 5.0
t_end = 1200.0

[run]
mode = sde
seed = 5
""")
        out = tmp_path / "sde.csv"
        assert main(["run", str(cfg), "--out", str(out)]) == 0
        rows = read_rows(out)
        assert rows[0]["method"] == "SDE"
        assert float(rows[0]["xi"]) > 0


class TestSweepCommand:
    def test_lambda_sweep(self, tmp_path):
        cfg = write(tmp_path, "clone.ini", """
[pump]
family = clone
n_atoms = 2
lambda1 = 0.9

[cavity]
gT = 0.6
CT = 0.03
""")
        out = tmp_path / "sweep.csv"
        assert main(["sweep", str(cfg), "--axis", "pump.lambda1",
                     "--from", "0.65", "--to", "0.95", "--points", "5",
                     "--out", str(out), "--threads", "2"]) == 0
        rows = read_rows(out)
        assert len(rows) == 5
        assert [float(r["swept_value"]) for r in rows] == pytest.approx(
            [0.65, 0.725, 0.8, 0.875, 0.95])

    def test_infeasible_axis_values_flush_partials_and_fail(self, tmp_path):
        cfg = write(tmp_path, "z.ini", Z_CONFIG.replace("b = 1", "b = 0"))
        out = tmp_path / "sweep.csv"
        # |alpha beta| beyond 1/2 cannot exist for normalized amplitudes
        code = main(["sweep", str(cfg), "--axis", "pump.ab_abs",
                     "--from", "0.4", "--to", "0.7", "--points", "4",
                     "--out", str(out)])
        assert code == 2
        rows = read_rows(out)
        assert 0 < len(rows) < 4  # feasible prefix flushed
        manifest = json.loads((tmp_path / "sweep.manifest.json").read_text())
        assert manifest["failures"]


class TestErrorHandling:
    def test_missing_file(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.ini")]) == 1
        assert "config error" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        cfg = write(tmp_path, "bad.ini", PRODUCT_CONFIG + "\n[pump2]\nx = 1\n")
        assert main(["run", str(cfg)]) == 1
        assert "unknown section" in capsys.readouterr().err

    def test_invalid_field_names_section(self, tmp_path, capsys):
        cfg = write(tmp_path, "bad.ini", """
[pump]
family = clone
lambda1 = 1.2

[cavity]
gT = 0.5
CT = 0.05
""")
        assert main(["run", str(cfg)]) == 1
        err = capsys.readouterr().err
        assert "lambda1" in err

    def test_flag_nans_marks_rows(self):
        result = RunResult(
            rows=[ResultRow(point_id=0, xi=float("nan"), method="closed-form")],
            manifest={},
        )
        _flag_nans(result)
        assert result.failures
        assert "non-finite" in result.rows[0].note


class TestConfigParsing:
    def test_run_section_extras(self, tmp_path):
        cfg = write(tmp_path, "point.ini", PRODUCT_CONFIG)
        scenario, extras = load_scenario(cfg)
        assert scenario.mode == "noise"
        assert scenario.seed == 7
        assert extras == {"mode": "noise", "seed": 7}

    def test_sweep_section_keys(self, tmp_path):
        cfg = write(tmp_path, "s.ini", PRODUCT_CONFIG + """
[sweep]
axis = cavity.CT
from = 0.02
to = 0.08
points = 3
""")
        scenario, _ = load_scenario(cfg)
        assert scenario.sweep.axis == "cavity.CT"
        assert scenario.sweep.values() == pytest.approx([0.02, 0.05, 0.08])

    def test_unknown_sweep_axis_rejected(self, tmp_path):
        cfg = write(tmp_path, "s.ini", PRODUCT_CONFIG + """
[sweep]
axis = pump.alpha_im
from = 0
to = 1
points = 2
""")
        with pytest.raises(ConfigError):
            load_scenario(cfg)
