import csv

import pytest

from multiboltz.cli import main

SMALL = """
[species]
masses = {masses}

[kernel]
gamma = {gamma}
c_phi = 1.0

[grid]
nodes = 6
extent = 4.0

[sphere]
kind = product
n_theta = 2
n_phi = 4
"""


def write(tmp_path, text, name="s.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("# ") and "columns:" in lines[0]
    return list(csv.DictReader(lines[1:]))


@pytest.mark.parametrize("body", [
    SMALL.format(masses="1.0, 0.0", gamma=1),
    SMALL.format(masses="1.0", gamma=1) + "\n[solver]\nwarp = 9\n",
    SMALL.format(masses="1.0", gamma=1) + "\n[plotting]\ncolor = red\n",
    SMALL.format(masses="1.0", gamma=2),
    "[species]\nmasses = 1\n",
    "this is not an ini file",
])
def test_config_errors_exit_2(tmp_path, body, capsys):
    assert main(["spectrum", "--config", write(tmp_path, body), "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path):
    assert main(["povzner", "--config", str(tmp_path / "nope.ini")]) == 2


def test_spectrum_single_species(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(masses="1.0", gamma=0) + "\n[analysis]\nsamples = 20\n")
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "kernel_dim_check=5" in out
    rows = read_csv(tmp_path / "eigenvalues.csv")
    assert len(rows) == 216


def test_povzner_equal_mass(tmp_path):
    cfg = write(tmp_path, SMALL.format(masses="1.0, 1.0", gamma=1)
                + "\n[analysis]\nk_values = 4, 6\nsamples = 200\n")
    assert main(["povzner", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "povzner.csv")
    assert float(rows[1]["C_k"]) == 0.5
    report = (tmp_path / "povzner_report.txt").read_text()
    assert "k0_real=2.0" in report and "closed_form_passed=200" in report


def test_relax_zero_perturbation(tmp_path):
    cfg = write(tmp_path, SMALL.format(masses="1.0, 2.0", gamma=0)
                + "\n[solver]\nshape = zero\ndt = 0.5\nt_end = 1.0\n")
    assert main(["relax", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "relaxation.csv")
    assert len(rows) == 3
    assert all(float(r["norm_L2_mu"]) == 0.0 for r in rows)


def test_splitting_rejects_small_k(tmp_path):
    cfg = write(tmp_path, SMALL.format(masses="1.0", gamma=1) + "\n[analysis]\nk = 2\n")
    assert main(["splitting", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_relax_is_deterministic(tmp_path):
    cfg = write(tmp_path, SMALL.format(masses="1.0, 2.0", gamma=0)
                + "\n[solver]\nshape = random\ndt = 0.5\nt_end = 1.0\nlinear_only = true\n")
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["relax", "--config", cfg, "--out", str(d), "--seed", "7",
                     "--threads", "1"]) == 0
        outs.append((d / "relaxation.csv").read_bytes())
    assert outs[0] == outs[1]
