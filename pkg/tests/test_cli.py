import csv

import numpy as np
import pytest

from spinlind.cli import main
from spinlind.ensemble import random_modes, save_modes
from spinlind.fitting import stretched_exp
from spinlind.gksl import CoherenceProfile
from spinlind.model import EnsembleInput, load_ensemble, save_ensemble, save_system
from spinlind.rates import ensemble_rates, pair_table
from spinlind.report import RATE_HEADER, SIGMA_HEADER, read_profile, write_profile
from spinlind.synth import random_molecule, synthesize

from conftest import make_system


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def write_ensemble(ens, path):
    save_ensemble(ens, path)
    return str(path)


class TestRates:
    def test_three_protons(self, tmp_path, three_protons):
        save_system(three_protons, tmp_path / "s.json")
        assert main(["rates", str(tmp_path / "s.json"), "--out", str(tmp_path / "o")]) == 0
        table = rows(tmp_path / "o" / "rates.csv")
        assert table[0] == RATE_HEADER
        assert len(table) == 4
        assert not (tmp_path / "o" / "sigma.csv").exists()

    def test_ensemble_adds_sigma(self, tmp_path):
        ens = synthesize("barrier-demo")[0]
        path = write_ensemble(ens, tmp_path / "e.json")
        assert main(["rates", path, "--out", str(tmp_path)]) == 0
        sigma = rows(tmp_path / "sigma.csv")
        assert sigma[0] == SIGMA_HEADER
        assert len(sigma) == 7
        assert len(rows(tmp_path / "rates.csv")) == 1 + 6 * len(ens.geometries)

    def test_two_nuclei_zero_mode(self, tmp_path, capsys):
        save_system(make_system([[0, 0, 0], [0, 1.8, 0.4]], [1.0, 1.0]), tmp_path / "s.json")
        code = main(["rates", str(tmp_path / "s.json"), "--delta-mode", "zero", "--out", str(tmp_path)])
        assert code == 3
        assert "pair (0, 1)" in capsys.readouterr().err

    def test_invalid_direction_exits_2(self, tmp_path):
        (tmp_path / "s.json").write_text(
            '{"name": "x", "field": {"magnitude_T": 1, "direction": [0, 0, 2]}, "electron": {"g": 2},'
            ' "nuclei": [{"id": 0, "isotope": "1H", "spin": 0.5, "position_angstrom": [0, 0, 0], "hyperfine_MHz": 0}]}'
        )
        assert main(["rates", str(tmp_path / "s.json"), "--out", str(tmp_path)]) == 2


class TestSimulate:
    def test_trivial_ensemble(self, tmp_path):
        # single geometry, equal hyperfine, couplings refocused: L == 1
        eq = make_system([[0, 0, 0], [1.9, 0.3, 0.2], [0.4, 2.0, 1.1]], [0.8, 0.8, 0.8])
        path = write_ensemble(EnsembleInput(eq, (eq,)), tmp_path / "e.json")
        assert main(["simulate", path, "--out", str(tmp_path)]) == 0
        prof = read_profile(tmp_path / "coherence.csv")
        assert len(prof) == 400
        assert np.max(np.abs(prof.values - 1)) < 1e-9

    def test_envelope(self, tmp_path):
        ens = synthesize("ladder:2")[1]
        path = write_ensemble(ens, tmp_path / "e.json")
        assert main(["simulate", path, "--out", str(tmp_path)]) == 0
        prof = read_profile(tmp_path / "coherence.csv")
        sigma = ensemble_rates(ens).sigma
        envelope = np.exp(-sigma.sum() * prof.t_ms * 1e-3 / 2)
        assert np.all(np.diff(envelope) <= 0)
        assert np.all(prof.values <= envelope + 1e-9)
        assert prof.values[0] == 1.0 and prof.values[-1] < 0.5

    def test_zero_mode_monotone(self, tmp_path):
        path = write_ensemble(synthesize("ladder:2")[1], tmp_path / "e.json")
        assert main(["simulate", path, "--delta-mode", "zero", "--out", str(tmp_path)]) == 0
        prof = read_profile(tmp_path / "coherence.csv")
        assert np.all(np.diff(prof.values) <= 1e-12)

    def test_per_cluster(self, tmp_path):
        ens = synthesize("barrier-demo")[0]
        path = write_ensemble(ens, tmp_path / "e.json")
        out = tmp_path / "o"
        assert main(["simulate", path, "--per-cluster", "--steps", "50", "--out", str(out)]) == 0
        files = sorted(p.name for p in out.glob("*.csv"))
        assert len(files) == 6 + 1
        assert "cluster_2_3.csv" in files
        product = np.prod([read_profile(out / f).values for f in files if f.startswith("cluster")], axis=0)
        assert np.allclose(read_profile(out / "coherence.csv").values, product, rtol=1e-13, atol=1e-300)

    def test_system_file_rejected(self, tmp_path, three_protons):
        save_system(three_protons, tmp_path / "s.json")
        assert main(["simulate", str(tmp_path / "s.json"), "--out", str(tmp_path)]) == 2


def test_fit_through_files(tmp_path):
    t = np.linspace(0, 0.1, 400)
    write_profile(CoherenceProfile(t, stretched_exp(t, 0.0274, 1.3)), tmp_path / "c.csv")
    assert main(["fit", str(tmp_path / "c.csv"), "--out", str(tmp_path)]) == 0
    header, row = rows(tmp_path / "fit.csv")
    assert header == ["name", "T2_ms", "beta", "rmse", "converged"]
    assert float(row[1]) == pytest.approx(0.0274, rel=1e-2)
    assert float(row[2]) == pytest.approx(1.3, rel=1e-2)


class TestCompare:
    def test_single_ensemble(self, tmp_path):
        path = write_ensemble(synthesize("barrier-demo")[0], tmp_path / "e.json")
        assert main(["compare", path, "--steps", "100", "--out", str(tmp_path)]) == 0
        report = rows(tmp_path / "report.csv")
        assert len(report) == 2 and report[1][0] == "barrier_demo"
        assert (tmp_path / "profiles.svg").read_text().count('class="profile"') == 2

    def test_reversal(self, tmp_path, capsys):
        paths = [write_ensemble(e, tmp_path / f"{e.equilibrium.name}.json") for e in synthesize("ladder:2")]
        assert main(["compare", *paths, "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "ab-initio ordering (longest first): ladder_1 > ladder_2" in out
        assert "zero ordering      (longest first): ladder_2 > ladder_1" in out

    def test_missing_file(self, tmp_path):
        assert main(["compare", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


class TestSynth:
    def test_barrier_demo(self, tmp_path):
        assert main(["synth", "barrier-demo", "--out", str(tmp_path)]) == 0
        ens = load_ensemble(tmp_path / "barrier_demo.json")
        assert ens.equilibrium.n_nuclei == 4
        assert len(ens.geometries) == 2 * (3 * 4 - 6)
        pairs = pair_table(ens.equilibrium, "ab-initio").pairs
        assert any(p.delta > 100 * p.kappa for p in pairs)

    def test_ladder_distances(self, tmp_path):
        assert main(["synth", "ladder:3", "--out", str(tmp_path)]) == 0
        dists = []
        for k in (1, 2, 3):
            eq = load_ensemble(tmp_path / f"ladder_{k}.json").equilibrium
            dists.append(np.linalg.norm(eq.positions - np.array(eq.electron_position), axis=1).min())
        assert dists[0] < dists[1] < dists[2]

    def test_bad_template(self, tmp_path):
        assert main(["synth", "ladder:x", "--out", str(tmp_path)]) == 2


def test_ensemble_command(tmp_path, three_protons):
    save_system(three_protons, tmp_path / "s.json")
    save_modes(random_modes(3, seed=1), tmp_path / "m.json")
    out = tmp_path / "e.json"
    assert main(["ensemble", str(tmp_path / "s.json"), str(tmp_path / "m.json"), "--out", str(out),
                 "--amplitude", "fixed:0.02"]) == 0
    assert len(load_ensemble(out).geometries) == 6


class TestOracle:
    def test_separable(self, tmp_path, capsys):
        path = write_ensemble(synthesize("ladder:2")[1], tmp_path / "e.json")
        assert main(["oracle", path, "--pairs", "0-1,2-3"]) == 0
        dev = float(capsys.readouterr().out.split("=")[-1])
        assert dev < 1e-6

    def test_coupled_is_informational(self, tmp_path, capsys):
        path = write_ensemble(synthesize("barrier-demo")[0], tmp_path / "e.json")
        assert main(["oracle", path, "--steps", "50"]) == 0
        assert "max |oracle - CCE|" in capsys.readouterr().out

    def test_too_many_nuclei(self, tmp_path):
        save_system(random_molecule(6, seed=2), tmp_path / "s.json")
        assert main(["oracle", str(tmp_path / "s.json")]) == 2
