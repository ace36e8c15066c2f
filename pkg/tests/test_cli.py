import json

import pytest

from randlip.cli import int_list, parse_and_dispatch, read_header


def run(capsys, *argv):
    code = parse_and_dispatch(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_count_c41(capsys):
    code, out, _ = run(capsys, "count", "--graph", "cnk:n=4,k=1", "--M", "1")
    assert code == 0 and json.loads(out)["count"] == "19"
    code, out, _ = run(capsys, "count", "--graph", "cycle:n=4", "--M", "1")
    assert json.loads(out)["count"] == "19" and json.loads(out)["method"] == "bruteforce"


def test_sample_replayable(capsys, tmp_path):
    argv = ["sample", "--graph", "cnk:n=4,k=2", "--M", "1", "--method", "cftp", "--seed", "7", "--trials", "10"]
    code, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert code == 0 and a == b and len(a.splitlines()) == 10
    path = tmp_path / "s.jsonl"
    run(capsys, *argv, "--output", str(path))
    text = path.read_text()
    assert text.splitlines()[1:] == a.splitlines()
    assert read_header(str(path))["version"]
    _, c, _ = run(capsys, "replay", str(path))
    assert c == a


def test_sweep_config_file(capsys, tmp_path):
    cfgp = tmp_path / "sweep.cfg"
    cfgp.write_text("[sweep]\nn = 4,6\nk = 1-3\nM = 1\nthreads = 1\n")
    code, out, _ = run(capsys, "sweep", "--config", str(cfgp))
    lines = out.splitlines()
    assert code == 0 and len(lines) == 1 + 6 and lines[1].startswith("cnk,4,1,1,lip,exact,2,,0.78947")
    # flags override file values
    _, out2, _ = run(capsys, "sweep", "--config", str(cfgp), "--k", "2")
    assert len(out2.splitlines()) == 3
    outp = tmp_path / "o.csv"
    plots = tmp_path / "plots"
    run(capsys, "sweep", "--config", str(cfgp), "-o", str(outp), "--plot-data", str(plots))
    assert outp.read_text().startswith("# {")
    assert sorted(p.name for p in plots.iterdir()) == ["lip_n4_M1_pr_range_le.dat", "lip_n6_M1_pr_range_le.dat"]
    _, replayed, _ = run(capsys, "replay", str(outp))
    assert replayed == out


def test_exit_codes(capsys):
    assert run(capsys, "count", "--graph", "cnk:n=5,k=1")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "count", "--graph", "cycle:n=30", "--M", "3", "--method", "bruteforce", "--cap", "1000")[0] == 3
    code, _, err = run(capsys, "sample", "--graph", "cycle:n=64", "--M", "3", "--max-updates", "1000")
    assert code == 4 and "coalesce" in err


def test_entropy_and_verify(capsys):
    _, out, _ = run(capsys, "entropy", "--graph", "cnk:n=4,k=1", "--M", "1")
    d = json.loads(out)
    assert d["count"] == "19" and d["slack"] >= -1e-9
    _, out, _ = run(capsys, "verify", "--check", "ratio", "--n", "4", "--k", "1", "--M", "1")
    assert json.loads(out)["ratio"] == "1/8"
    _, out, _ = run(capsys, "verify", "--graph", "complete:n=2", "--M", "1", "--r", "1", "--trials", "50")
    assert json.loads(out)["hits"] == 0


def test_construct(capsys, tmp_path):
    b = tmp_path / "f.csv"
    b.write_text("vertex,value\n0,0\n1,1\n2,0\n")
    emit = tmp_path / "ext.csv"
    code, out, _ = run(capsys, "construct", "--graph", "path:n=3", "--center", "1", "--radius", "1",
                       "--M", "4", "--boundary", str(b), "--emit", str(emit))
    d = json.loads(out)
    assert code == 0 and d["family_size"] == "2" and d["emitted"] == 2
    assert emit.read_text().splitlines()[1:] == ["0,0,2,0", "1,0,3,0"]
    code, out, _ = run(capsys, "construct", "--graph", "path:n=3", "--center", "1", "--radius", "1",
                       "--M", "1", "--boundary", str(b))
    assert json.loads(out)["center_value"] == 1


def test_int_list():
    assert int_list("1-3,6") == [1, 2, 3, 6]
    assert int_list("2..4") == [2, 3, 4]
    assert int_list("-1") == [-1]
