import json

import pytest
from hypothesis import given, strategies as st

from gelfand import cli
from gelfand.cli import RunConfig, main, parse_range
from gelfand.errors import BlowupError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_params_khessian(capsys):
    code, out, _ = run(capsys, "params", "--khessian", "3", "1")
    assert code == 0
    assert "theta=2," in out and "lambda*=2 " in out and "regime=Oscillatory" in out


def test_params_plaplacian(capsys):
    code, out, _ = run(capsys, "params", "--plaplacian", "5", "3")
    assert code == 0
    assert "theta=3," in out and "lambda*=18 " in out


def test_params_domain_error(capsys):
    code, _, err = run(capsys, "params", "--khessian", "1", "1")
    assert code == 2
    assert "d > 2k" in err


def test_params_json(capsys):
    code, out, _ = run(capsys, "params", "--khessian", "11", "1", "--format", "json")
    doc = json.loads(out[:out.rindex("}") + 1])
    assert code == 0
    assert doc["regime"] == "NonIntersecting" and doc["fixed_point"] == "UnstableNode"


def test_bifurcate_csv(capsys, tmp_path):
    out_file = tmp_path / "curve.csv"
    code, out, _ = run(capsys, "bifurcate", "--khessian", "3", "1", "--f", "identity",
                       "--rho", "0.1:30:256", "--out", str(out_file))
    assert code == 0
    assert out.startswith("lambda*=2, sign changes=")
    n = int(out.split("sign changes=")[1].split(",")[0])
    assert n >= 3
    lines = out_file.read_text().splitlines()
    assert lines[0] == "rho,lambda" and len(lines) == 257


def test_byte_identical_output(capsys, tmp_path):
    files = []
    for i in range(2):
        f = tmp_path / f"c{i}.csv"
        run(capsys, "bifurcate", "--khessian", "3", "1", "--rho", "0.5:10:40", "--out", str(f))
        files.append(f.read_bytes())
    assert files[0] == files[1]


def test_intersect_node_regime(capsys):
    code, out, err = run(capsys, "intersect", "--khessian", "11", "1", "--f", "identity", "--rho", "10")
    assert code == 0
    assert err.startswith("count=0,")
    assert out.splitlines() == ["r"]  # header only


def test_intersect_oscillatory(capsys, tmp_path):
    f = tmp_path / "x.csv"
    code, out, _ = run(capsys, "intersect", "--khessian", "3", "1", "--rho", "20", "--out", str(f))
    assert code == 0 and "count=5" in out
    assert len(f.read_text().splitlines()) == 6


def test_check_passes(capsys):
    code, out, _ = run(capsys, "check")
    assert code == 0
    assert "FAIL" not in out


def test_check_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "run_checks", lambda tol: [("broken", False, "x")])
    code, out, _ = run(capsys, "check")
    assert code == 4 and "FAIL  broken" in out


def test_numeric_failure_exit_code(capsys, monkeypatch):
    def boom(*a, **k):
        raise BlowupError("exponent guard")

    monkeypatch.setattr(cli, "solve_ivp", boom)
    code, _, err = run(capsys, "solve", "--khessian", "3", "1", "--rho", "1", "--r-max", "1")
    assert code == 3 and "BlowupError" in err


@pytest.mark.parametrize("argv", [
    ["solve", "--khessian", "3", "1", "--rho", "1", "--tol", "1e-1"],
    ["solve", "--khessian", "3", "1"],
    ["solve", "--khessian", "3", "1", "--rho", "1:2"],
    ["bifurcate", "--khessian", "3", "1", "--rho", "0:5:10", "--log"],
    ["solve", "--khessian", "3", "1", "--rho", "1", "--f", "nope"],
    ["solve", "--khessian", "3", "1", "--rho", "1", "--f", "power", "--fparam", "p"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "params", "operator": {"kind": "khessian", "d": 5, "k": 2}}))
    code, out, _ = run(capsys, "params", "--config", str(cfg))
    assert code == 0 and "lambda*=16 " in out
    code, out, _ = run(capsys, "params", "--config", str(cfg), "--khessian", "3", "1")
    assert "lambda*=2 " in out


def test_config_equivalent_to_flags(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "solve", "--khessian", "3", "1", "--f", "power", "--fparam", "p=2", "--rho", "1.5",
        "--out", str(a))
    cfg = tmp_path / "c.json"
    cfg.write_text(RunConfig(command="solve", operator={"kind": "khessian", "d": 3, "k": 1},
                             nonlinearity={"family": "power", "params": {"p": 2}}, rho="1.5",
                             out=str(b)).to_json())
    run(capsys, "solve", "--config", str(cfg))
    assert a.read_bytes() == b.read_bytes()


def test_bad_config_file(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert run(capsys, "params", "--config", str(cfg))[0] == 2
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "params", "--config", str(cfg))[0] == 2
    assert run(capsys, "params", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_formats(capsys, tmp_path):
    g = tmp_path / "t.dat"
    j = tmp_path / "t.json"
    run(capsys, "solve", "--khessian", "3", "1", "--rho", "2", "--format", "gnuplot", "--out", str(g))
    run(capsys, "solve", "--khessian", "3", "1", "--rho", "2", "--format", "json", "--out", str(j))
    text = g.read_text()
    assert text.startswith("# ") and "# r u uprime" in text
    doc = json.loads(j.read_text())
    assert doc["columns"] == ["r", "u", "uprime"]
    assert doc["metadata"]["rho"] == 2.0
    assert abs(doc["data"]["u"][-1]) < 1e-9  # default r_max = R(0, rho)


def test_singular_and_phase(capsys, tmp_path):
    s = tmp_path / "s.csv"
    code, out, _ = run(capsys, "singular", "--khessian", "3", "1", "--f", "iterexp", "--out", str(s))
    assert code == 0 and out.startswith("lambda*=0.690639")
    assert s.read_text().splitlines()[0] == "r,Z,u_approx,u_star"
    code, out, _ = run(capsys, "phase", "--khessian", "3", "1", "--rho", "10",
                       "--out", str(tmp_path / "p.csv"))
    assert code == 0 and out.startswith("UnstableFocus")
    code, out, _ = run(capsys, "phase", "--khessian", "3", "1", "--x0", "0.1", "--y0", "0",
                       "--t-span", "0:-10", "--out", str(tmp_path / "q.csv"))
    assert code == 0


def test_data_on_stdout_summary_on_stderr(capsys):
    code, out, err = run(capsys, "bifurcate", "--khessian", "3", "1", "--rho", "1:2:3")
    assert code == 0
    assert out.startswith("rho,lambda\n")
    assert err.startswith("lambda*=2")


def test_parse_range():
    assert list(parse_range("1:3:3")) == [1.0, 2.0, 3.0]
    assert parse_range("1:100:3", log=True) == pytest.approx([1, 10, 100])
    assert list(parse_range("4")) == [4.0]


@given(
    st.sampled_from(cli.COMMANDS),
    st.floats(1e-14, 1e-3),
    st.one_of(st.none(), st.floats(0.01, 100).map(lambda x: f"{x!r}")),
    st.booleans(),
    st.sampled_from(["csv", "json", "gnuplot"]),
    st.one_of(st.none(), st.integers(1, 8)),
)
def test_runconfig_roundtrip(command, tol, rho, log, fmt, workers):
    cfg = RunConfig(command=command, tol=tol, rho=rho, log=log, format=fmt, workers=workers,
                    operator={"kind": "plaplacian", "d": 5, "p": 3},
                    nonlinearity={"family": "power", "params": {"p": 2.5}}).validate()
    again = RunConfig.from_json(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()
