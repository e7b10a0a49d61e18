import pytest

from conftest import SMALL_BOX
from wormcover.cli import RunConfig, UsageError, main


def _kv(out):
    body = out.split("--- summary ---", 1)[1]
    return dict(line.split("=", 1) for line in body.strip().splitlines())


def _subbox():
    lo, hi = SMALL_BOX
    return ",".join(f"{a},{b}" for a, b in zip(lo, hi))


def test_prove_subbox_exits_zero(capsys, tmp_path):
    report = tmp_path / "r.txt"
    log = tmp_path / "p.csv"
    code = main(["prove", "--subbox", _subbox(), "--report", str(report), "--log", str(log)])
    out = capsys.readouterr().out
    kv = _kv(out)
    assert code == 0
    assert kv["proven"] == "1" and kv["passed"] == "1"
    assert float(kv["volume"]) == pytest.approx(0.003 ** 4 * 0.02)
    assert report.read_text().strip().splitlines()[-1] == "passed=1"
    assert log.read_text().startswith("percent,iterations,best_value,elapsed_s")


def test_prove_high_threshold_fails_with_witness(capsys):
    code = main(["prove", "--threshold", "0.12"])
    kv = _kv(capsys.readouterr().out)
    assert code == 1 and kv["passed"] == "0" and kv["status"] == "counterexample"
    lo_hi = [float(t) for t in kv["witness_box"].split(",")]
    assert len(lo_hi) == 10
    x = [float(t) for t in kv["witness_polished"].split(",")]
    target = [0.00434, 0.00648, 0.00434, -0.00434, 0.857]
    assert all(abs(a - b) < 0.005 for a, b in zip(x, target))


def test_prove_resumes_from_checkpoint(capsys, tmp_path):
    ck = tmp_path / "c.ckpt"
    assert main(["prove", "--subbox", _subbox(), "--checkpoint", str(ck),
                 "--max-iterations", "3000"]) == 1
    first = _kv(capsys.readouterr().out)
    assert first["status"] == "budget"
    assert main(["prove", "--subbox", _subbox(), "--checkpoint", str(ck)]) == 0
    out = capsys.readouterr().out
    assert "resuming from" in out and _kv(out)["iterations"] == "27871"


def test_minimize_is_deterministic(capsys):
    main(["minimize", "--starts", "3", "--seed", "4"])
    a = _kv(capsys.readouterr().out)
    main(["minimize", "--starts", "3", "--seed", "4"])
    b = _kv(capsys.readouterr().out)
    assert a["best_params"] == b["best_params"] and a["best_value"] == b["best_value"]


def test_minimize_single_start_from_centre(capsys):
    assert main(["minimize", "--starts", "1"]) == 0
    assert float(_kv(capsys.readouterr().out)["best_value"]) >= 0.10043


def test_validate_zero_samples_skips_sampling(capsys):
    code = main(["validate", "--samples", "0"])
    out = capsys.readouterr().out
    kv = _kv(out)
    assert code == 0 and kv["warnings"] == "2"
    assert "skipped" in out
    assert sum(k.endswith(".passed") and k.count(".") == 1 for k in kv) >= 10


def test_validate_large_eps_fails_on_psi(capsys):
    code = main(["validate", "--samples", "0", "--eps", "0.05"])
    kv = _kv(capsys.readouterr().out)
    assert code == 1
    assert kv["psi_x1_edge.passed"] == "0" and kv["psi_y1_edge.passed"] == "0"


def test_render(capsys, tmp_path):
    out = tmp_path / "f.svg"
    assert main(["render", "--params", "0,0,0,0,0", "--out", str(out)]) == 0
    assert out.read_text().startswith("<?xml")
    assert main(["render", "--params", "0,0,0,0,0", "--out", str(tmp_path / "x" / "f.svg")]) == 3


def test_render_bad_params(capsys, tmp_path):
    assert main(["render", "--params", "0,0,0", "--out", str(tmp_path / "f.svg")]) == 2


def test_shapes_small_run(capsys, tmp_path):
    spec = tmp_path / "exp.txt"
    spec.write_text("counts=2,3 starts=3 verify_starts=3 max_evals=8\n")
    out = tmp_path / "res.csv"
    assert main(["shapes", "--spec", str(spec), "--out", str(out)]) == 0
    assert out.read_text().splitlines()[1].startswith("2+3,")
    assert (tmp_path / "res.shapes.csv").exists()


def test_shapes_empty_spec_is_usage_error(capsys, tmp_path):
    spec = tmp_path / "exp.txt"
    spec.write_text("\n# nothing here\n")
    assert main(["shapes", "--spec", str(spec), "--out", str(tmp_path / "o.csv")]) == 2
    assert "no cases" in capsys.readouterr().err


def test_shapes_bad_line_named(capsys, tmp_path):
    spec = tmp_path / "exp.txt"
    spec.write_text("counts=2,3\nnonsense\n")
    assert main(["shapes", "--spec", str(spec), "--out", str(tmp_path / "o.csv")]) == 2
    assert "exp.txt:2" in capsys.readouterr().err


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig("prove", threshold=0.3)
    with pytest.raises(UsageError):
        RunConfig("prove", workers=0)


def test_bad_threshold_exit_code(capsys):
    assert main(["prove", "--threshold", "0"]) == 2


def test_missing_command():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
