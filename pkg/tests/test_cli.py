import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_dft.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION, main
from spectral_dft.config import SCENARIOS, ConfigError, dump_config, parse_config

HS_WALL = """\
scenario: hs-wall-1d
physics:
  n_bulk: 0.7151
numerics:
  N2: 30
  scheme: newton
"""


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "spectral_dft.cli", *map(str, args)], capture_output=True, text=True)


class TestConfig:
    def test_unknown_key_names_path(self):
        with pytest.raises(ConfigError, match="numerics.N3"):
            parse_config(HS_WALL + "  N3: 4\n")

    def test_missing_required_field(self):
        with pytest.raises(ConfigError, match="physics.eps_w"):
            parse_config("scenario: bh-wall-1d\nphysics:\n  temperature: 0.75\n  r_c: 2.5\n")

    def test_alternatives_reported(self):
        with pytest.raises(ConfigError, match="physics.n_bulk or physics.mu"):
            parse_config("scenario: hs-wall-1d\n")

    @pytest.mark.parametrize("text", ["[1, 2]", "scenario: [", "scenario: nope\n"])
    def test_malformed(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_lists_must_increase(self):
        with pytest.raises(ConfigError, match="N_list"):
            parse_config("scenario: convergence-study\nphysics:\n  n_bulk: 0.7\nnumerics:\n  N_list: [50, 50]\n")

    def test_hard_disk_mixture_needs_two_species(self):
        text = "scenario: multispecies-hd\nphysics:\n  species:\n    - particles: 10\n"
        with pytest.raises(ConfigError, match="two"):
            parse_config(text)

    def test_round_trip_fixed_point(self):
        once = dump_config(parse_config(HS_WALL))
        assert dump_config(parse_config(once)) == once

    @settings(max_examples=40, deadline=None)
    @given(
        st.sampled_from(["hs-wall-1d", "convergence-study"]),
        st.floats(0.05, 0.9),
        st.integers(10, 200),
        st.sampled_from(["picard", "newton"]),
        st.booleans(),
    )
    def test_round_trip_idempotent(self, scenario, n_bulk, N2, scheme, wd):
        data = f"scenario: {scenario}\nphysics:\n  n_bulk: {n_bulk!r}\nnumerics:\n  N2: {N2}\n  scheme: {scheme}\n"
        if scenario == "convergence-study":
            data += "  N_list: [20, 30]\n"
        data += f"output:\n  weighted_densities: {str(wd).lower()}\n"
        once = dump_config(parse_config(data))
        assert dump_config(parse_config(once)) == once
        assert parse_config(once) == parse_config(data)

    def test_every_scenario_has_requirements(self):
        from spectral_dft.config import REQUIRED

        assert set(REQUIRED) == set(SCENARIOS)


class TestExitCodes:
    def test_config_error(self, tmp_path, capsys):
        assert main(["run", str(write(tmp_path, HS_WALL + "  bogus: 1\n"))]) == EXIT_CONFIG
        assert "numerics.bogus" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.yaml")]) == EXIT_CONFIG

    def test_solver_failure(self, tmp_path, capsys):
        cfg = write(tmp_path, HS_WALL.replace("scheme: newton", "scheme: picard\n  max_iter: 5"))
        assert main(["run", str(cfg), "--output-dir", str(tmp_path / "out")]) == EXIT_SOLVER
        assert "ConvergenceError" in capsys.readouterr().err

    def test_validation_failure(self, tmp_path, capsys):
        # ten points cannot resolve the wall-liquid profile: sum-rule error near 3e-2
        text = "scenario: bh-wall-1d\nphysics:\n  temperature: 0.75\n  r_c: 2.5\n  eps_w: 0.865\nnumerics:\n  N2: 10\n  scheme: newton\n"
        assert main(["run", str(write(tmp_path, text)), "--output-dir", str(tmp_path / "out")]) == EXIT_VALIDATION
        assert "sum_rule" in capsys.readouterr().err
        assert (tmp_path / "out" / "summary.json").exists()


class TestArtifacts:
    @pytest.fixture(scope="class")
    @classmethod
    def runs(cls, tmp_path_factory):
        base = tmp_path_factory.mktemp("golden")
        cfg = write(base, HS_WALL.replace("newton\n", "newton\noutput:\n  weighted_densities: true\n"))
        procs = [run_cli("run", cfg, "--verify", "--dump-operators", "--output-dir", base / f"run{k}") for k in range(2)]
        return base, procs

    def test_success(self, runs):
        _, procs = runs
        assert [p.returncode for p in procs] == [EXIT_OK, EXIT_OK]

    @pytest.mark.parametrize("name", ["profile.csv", "weighted_densities.csv", "summary.json"])
    def test_byte_identical_reruns(self, runs, name):
        base, _ = runs
        assert (base / "run0" / name).read_bytes() == (base / "run1" / name).read_bytes()

    def test_profile_columns(self, runs):
        base, _ = runs
        lines = (base / "run0" / "profile.csv").read_text().splitlines()
        assert lines[0] == "y1,y2,n0"
        assert len(lines) == 31
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        assert np.all(data[:, 0] == 0.0)
        assert np.isposinf(data[0, 1])
        assert data[0, 2] == pytest.approx(0.7151, abs=1e-12)

    def test_weighted_density_columns(self, runs):
        base, _ = runs
        header = (base / "run0" / "weighted_densities.csv").read_text().splitlines()[0]
        assert header.split(",")[:4] == ["y1", "y2", "n2", "n3"]

    def test_summary_holds_sum_rule_and_config(self, runs):
        base, _ = runs
        doc = json.loads((base / "run0" / "summary.json").read_text())
        assert doc["checks"] == {"converged": True, "sum_rule": True}
        assert doc["summary"]["sum_rule"]["contact_relative_error"] < 1e-2
        assert parse_config(doc["config"]) == parse_config(HS_WALL.replace("newton\n", "newton\noutput:\n  weighted_densities: true\n"))

    def test_operators_dumped(self, runs):
        base, _ = runs
        with np.load(base / "run0" / "operators_0.npz") as z:
            assert any(k.startswith("fmt_forward") for k in z.files)
