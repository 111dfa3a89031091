import textwrap

import pytest

from netavg.cli import main


def write(tmp_path, body, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(body))
    return path


def test_single_run_writes_trace(tmp_path, capsys):
    cfg = write(tmp_path, """
        seed: 3
        topology: {kind: star, n: 10}
        model: {b: 2.0, sigma: 1.0}
        algorithm: {name: sda, params: theorem1}
        experiment: {family: single, T: 30}
        output: {path: trace.csv}
    """)
    assert main(["--out", str(tmp_path / "o"), "run", str(cfg)]) == 0
    text = (tmp_path / "o" / "trace.csv").read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# netavg") and lines[2] == "# master_seed: 3"
    header = lines.index("t,sum_sq_error")
    assert len(lines) - header - 1 == 30
    assert main(["--out", str(tmp_path / "o"), "run", str(cfg)]) == 0
    assert (tmp_path / "o" / "trace.csv").read_text() == text


@pytest.mark.parametrize("alg, params", [("dsg", "theorem2"), ("dmasg", "dmasg-schedule"),
                                         ("sda", "{eta: 0.5, zeta: 0.1, t_burn: 3}")])
def test_single_run_other_algorithms(tmp_path, alg, params):
    cfg = write(tmp_path, f"""
        topology: {{kind: cycle, n: 6}}
        algorithm: {{name: {alg}, params: {params}}}
        experiment: {{T: 12}}
    """)
    assert main(["--out", str(tmp_path), "run", str(cfg)]) == 0
    assert (tmp_path / "single.csv").exists()


def test_convergence_run(tmp_path):
    cfg = write(tmp_path, """
        topology: {kind: [path, star], n: 6}
        algorithm: {name: [sda, dsg]}
        experiment: {family: convergence, n_reps: 3, t_grid: [10, 20]}
    """)
    assert main(["--threads", "2", "--out", str(tmp_path), "run", str(cfg)]) == 0
    lines = (tmp_path / "convergence.csv").read_text().splitlines()
    assert sum(1 for line in lines if line.startswith("convergence,")) == 8


def test_grid_size_validation(tmp_path, capsys):
    ok = write(tmp_path, "topology: {kind: grid, n: 100}\n", "ok.yaml")
    assert main(["spectrum", str(ok)]) == 0
    bad = write(tmp_path, "topology: {kind: grid, n: 50}\n", "bad.yaml")
    assert main(["spectrum", str(bad)]) == 1
    assert "topology.n" in capsys.readouterr().err


def test_unknown_key_and_missing_file(tmp_path, capsys):
    cfg = write(tmp_path, "topology: {kind: star, n: 5}\nmodel: {bb: 1}\n")
    assert main(["spectrum", str(cfg)]) == 1
    assert "model" in capsys.readouterr().err
    missing = tmp_path / "absent.yaml"
    assert main(["run", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_runtime_failure_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "topology: {kind: erdos_renyi, n: 30, p: 0.001}\n")
    assert main(["spectrum", str(cfg)]) == 2
    assert "TopologyError" in capsys.readouterr().err


def test_spectrum_values(tmp_path, capsys):
    cfg = write(tmp_path, "topology: {kind: [star, path], n: 100}\n")
    assert main(["--out", str(tmp_path / "m"), "spectrum", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "star N=100: kappa(L)=100" in out and "kappa(L)=4052.18" in out
    assert (tmp_path / "m" / "star_W.csv").exists() and (tmp_path / "m" / "path_edges.txt").exists()
    tri = write(tmp_path, "topology: {kind: cycle, n: 3}\n", "tri.yaml")
    assert main(["spectrum", str(tri)]) == 0
    assert "kappa(L)=1 " in capsys.readouterr().out


def test_bound_command(tmp_path, capsys):
    cfg = write(tmp_path, """
        topology: {kind: star, n: 100}
        model: {b: 0.0, sigma: 1.0}
        algorithm: {name: [sda, dsg]}
        experiment: {T: 1000}
    """)
    assert main(["bound", str(cfg)]) == 0
    out = capsys.readouterr().out
    sda_row = [line for line in out.splitlines() if line.startswith("sda,")][0].split(",")
    assert float(sda_row[5]) == pytest.approx(24 * (18 + 10) * 100 / 1e6 + 2 / 1000, rel=1e-9)
    assert any(line.startswith("dsg,") for line in out.splitlines())
