import math
import subprocess
import sys

import numpy as np
import pytest

from cpbtem.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, main
from cpbtem.fileio import read_csv, read_kv, read_phasemap, write_phasemap
from cpbtem.imaging import SpecimenPhaseMap, dog_target

SMALL = ["--set", "specimen.width=30", "--set", "specimen.height=30", "--set", "specimen.n_blobs=40"]


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    return main([*argv, "--out", str(out)]), out


def tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_simulate_outputs(tmp_path):
    code, out = run(tmp_path, "simulate", *SMALL)
    assert code == EXIT_OK
    assert set(tree(out)) == {"config.txt", "metadata.txt", "specimen.phasemap", "proposed.csv", "proposed.pgm",
                              "proposed.pgm.txt", "target.csv", "target.pgm", "target.pgm.txt"}
    meta = read_kv(out / "metadata.txt")
    assert meta["k"] == "9" and meta["measurements_per_position"] == "2"
    img = read_csv(out / "proposed.csv")
    assert img.shape == (30, 30) and set(np.unique(img)) <= {0.0, 0.5, 1.0}


def test_simulate_analytic_matches_readout_law(tmp_path):
    code, out = run(tmp_path, "simulate", "--analytic", "--k", "4", *SMALL)
    assert code == EXIT_OK
    spec = read_phasemap(out / "specimen.phasemap")
    expected = (1 + np.sin(4 * dog_target(spec).values)) / 2
    np.testing.assert_allclose(read_csv(out / "proposed.csv"), expected, atol=1e-12)


def test_same_seed_same_bytes_and_seed_matters(tmp_path):
    _, a = run(tmp_path, "simulate", "--seed", "5", *SMALL, name="a")
    _, b = run(tmp_path, "--seed", "5", "simulate", *SMALL, name="b")
    _, c = run(tmp_path, "simulate", "--seed", "6", *SMALL, name="c")
    assert tree(a) == tree(b)
    assert tree(a)["proposed.csv"] != tree(c)["proposed.csv"]


def test_config_echo_reproduces_run(tmp_path):
    _, a = run(tmp_path, "simulate", "--seed", "3", "--dose", "90", *SMALL, name="a")
    code, b = run(tmp_path, "simulate", "--config", str(a / "config.txt"), name="b")
    assert code == EXIT_OK
    assert tree(a) == tree(b)


def test_phasemap_input(tmp_path):
    theta = np.zeros((12, 12))
    theta[4:8, 4:8] = 0.05
    write_phasemap(tmp_path / "s.phasemap", SpecimenPhaseMap(theta, 0.3))
    code, out = run(tmp_path, "simulate", "--phasemap", str(tmp_path / "s.phasemap"), "--analytic")
    assert code == EXIT_OK
    assert read_csv(out / "proposed.csv").shape == (12, 12)


def test_baseline_zero_contrast(tmp_path):
    theta = np.zeros((20, 20))
    write_phasemap(tmp_path / "z.phasemap", SpecimenPhaseMap(theta, 0.3))
    code, out = run(tmp_path, "baseline", "--phasemap", str(tmp_path / "z.phasemap"), "--analytic")
    assert code == EXIT_OK
    np.testing.assert_allclose(read_csv(out / "baseline.csv"), 180 * 0.09)
    np.testing.assert_allclose(read_csv(out / "highres.csv"), 0.0, atol=1e-12)


def test_baseline_counts(tmp_path):
    code, out = run(tmp_path, "baseline", *SMALL)
    assert code == EXIT_OK
    counts = read_csv(out / "baseline.csv")
    assert np.all(counts == np.round(counts)) and abs(counts.mean() - 16.2) < 1.0


def test_feasibility_nominal_and_failing(tmp_path, capsys):
    code, out = run(tmp_path, "feasibility")
    assert code == EXIT_OK
    assert read_kv(out / "feasibility.txt")["ok"] == "true"
    code, out = run(tmp_path, "feasibility", "--e-mirror", "1e5", name="bad")
    assert code == EXIT_INFEASIBLE
    assert read_kv(out / "feasibility.txt")["ok"] == "false"
    assert "bump_exceeds_wavelength" in capsys.readouterr().err


def test_scaling_outputs(tmp_path):
    code, out = run(tmp_path, "scaling", "--k", "1,4", "--budget", "256", "--replicates", "20")
    assert code == EXIT_OK
    lines = (out / "scaling.csv").read_text().splitlines()
    assert lines[0] == "k,measurements,mean,std,predicted_std,resolution_nm"
    assert [r.split(",")[:2] for r in lines[1:]] == [["1", "256"], ["4", "64"]]
    summary = read_kv(out / "summary.txt")
    assert math.isfinite(float(summary["slope"]))


def test_filter_command(tmp_path):
    theta = np.zeros((15, 15))
    theta[7, 7] = 1.0
    write_phasemap(tmp_path / "d.phasemap", SpecimenPhaseMap(theta, 0.3))
    code, out = run(tmp_path, "filter", str(tmp_path / "d.phasemap"))
    assert code == EXIT_OK
    dog = read_phasemap(out / "filtered.phasemap").theta
    assert dog.sum() == pytest.approx(0.0, abs=1e-12) and dog.argmax() == 7 * 15 + 7
    code, out = run(tmp_path, "filter", str(tmp_path / "d.phasemap"), "--sigma", "0.3", name="g")
    assert read_phasemap(out / "filtered.phasemap").theta.sum() == pytest.approx(1.0)


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["feasibility", "--temperature", "-1"], EXIT_CONFIG),
        (["scaling", "--k", ""], EXIT_CONFIG),
        (["bogus"], EXIT_CONFIG),
        (["simulate", "--set", "nope=1"], EXIT_CONFIG),
        (["simulate", "--set", "protocol.k"], EXIT_CONFIG),
        (["simulate", "--threads", "0"], EXIT_CONFIG),
        (["simulate", "--dose", "-5"], EXIT_CONFIG),
        (["simulate", "--phasemap", "/nonexistent/x.phasemap"], EXIT_IO),
        (["filter", "/nonexistent/x.phasemap"], EXIT_IO),
        (["simulate", "--config", "/nonexistent/run.cfg"], EXIT_IO),
    ],
)
def test_exit_codes(tmp_path, argv, expected):
    assert main([*argv, "--out", str(tmp_path / "o")]) == expected


def test_malformed_phasemap_is_io_error(tmp_path):
    (tmp_path / "bad.phasemap").write_text("nonsense\n")
    code, _ = run(tmp_path, "filter", str(tmp_path / "bad.phasemap"))
    assert code == EXIT_IO


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "cpbtem", "feasibility", "--out", str(tmp_path / "m")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "ok = true" in r.stdout
