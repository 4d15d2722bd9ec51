import json

import numpy as np
import pytest

from qbp.cli import main
from qbp.ldpc import all_codewords, generator, load_alist


def run(argv, tmp_path, name):
    out = tmp_path / name
    code = main(argv + ["--out-dir", str(out)])
    return code, out


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


def test_pipeline(workspace, capsys):
    t = workspace
    assert run(["construct", "--n", "12", "--seed", "3"], t, "c")[0] == 0
    alist = str(t / "c" / "code.alist")
    assert run(["encode", "--alist", alist, "--seed", "1"], t, "e")[0] == 0
    cw = json.loads((t / "e" / "codeword.json").read_text())["codeword"]
    assert run(["transmit", "--codeword", str(t / "e" / "codeword.json"), "--snr", "4", "--seed", "2"], t, "t")[0] == 0
    rx = str(t / "t" / "received.csv")
    assert run(["decode-bp", "--alist", alist, "--received", rx], t, "b")[0] == 0
    assert run(["decode-qbp", "--alist", alist, "--received", rx, "--backend", "exhaustive", "--w2", "0.02"], t, "q")[0] == 0
    dec = json.loads((t / "q" / "decoded.json").read_text())
    assert dec["valid_codeword"]
    for d in ("c", "e", "t", "b", "q"):
        m = json.loads((t / d / "manifest.json").read_text())
        assert m["versions"]["kernel_backend"] in ("compiled", "python") and "arguments" in m


def test_decode_qbp_exhaustive_is_ml(workspace):
    t = workspace
    alist = t / "c" / "code.alist"
    if not alist.exists():
        pytest.skip("pipeline test did not run")
    H = load_alist(alist)
    words = all_codewords(generator(H))
    from qbp.channel import ReceivedVector

    rv = ReceivedVector.from_csv(t / "t" / "received.csv")
    p = rv.posterior()
    assert run(["decode-qbp", "--alist", str(alist), "--received", str(t / "t" / "received.csv"),
                "--backend", "exhaustive", "--w2", repr(float(0.5 / np.abs(2 * p - 1).sum()))], t, "ml")[0] == 0
    bits = json.loads((t / "ml" / "decoded.json").read_text())["bits"]
    assert bits == words[np.argmin(((words - p) ** 2).sum(1))].tolist()


def test_code_construct_alias_and_env(tmp_path, monkeypatch):
    monkeypatch.setenv("QBP_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["code", "construct", "--native-grid", "4", "--region", "4", "4", "--level2", "0", "--allow-dangling"]) == 0
    assert (tmp_path / "env" / "code.alist").exists() and (tmp_path / "env" / "layout.json").exists()


def test_embed_native(tmp_path):
    assert run(["construct", "--native-grid", "8", "--region", "7", "4", "--level2", "2", "--allow-dangling"], tmp_path, "n")[0] == 0
    code, out = run(["embed", "--alist", str(tmp_path / "n" / "code.alist"), "--grid", "8"], tmp_path, "emb")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["ok"] and rep["level2_checks"] >= 1
    assert "chains" in json.loads((out / "embedding.json").read_text())


def test_error_codes(tmp_path, capsys):
    assert main(["frobnicate"]) == 2
    assert main(["encode", "--alist", str(tmp_path / "none.alist"), "--out-dir", str(tmp_path)]) == 2
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert json.loads(err)["error"] == "config_error"
    (tmp_path / "bad.json").write_text('{"seed": 1, "code": {"n": 12}, "extra": 3}')
    assert main(["evaluate", "--config", str(tmp_path / "bad.json"), "--out-dir", str(tmp_path)]) == 2
    run(["construct", "--n", "12"], tmp_path, "c")
    assert main(["embed", "--alist", str(tmp_path / "c" / "code.alist"), "--grid", "1", "--out-dir", str(tmp_path)]) == 3


def test_evaluate_and_calibrate(tmp_path):
    run(["construct", "--n", "12", "--seed", "3"], tmp_path, "c")
    cfg = {
        "seed": 2,
        "code": {"alist": str(tmp_path / "c" / "code.alist")},
        "channel": {"snr_db": [3.0, 6.0]},
        "weights": {"w2": 0.2},
        "anneal": {"num_reads": 100, "num_sweeps": 50, "n_a": [1, 10]},
        "frames": {"n_instances": 6, "n_f_bits": [12, 24]},
        "workers": 1,
    }
    (tmp_path / "smoke.json").write_text(json.dumps(cfg))
    for name in ("r1", "r2"):
        assert main(["evaluate", "--config", str(tmp_path / "smoke.json"), "--out-dir", str(tmp_path / name)]) == 0
    for f in ("ber.csv", "fer.csv"):
        assert (tmp_path / "r1" / f).read_bytes() == (tmp_path / "r2" / f).read_bytes()
    assert main(["evaluate", "--config", str(tmp_path / "smoke.json"), "--reads", "20",
                 "--set", "frames.n_instances=4", "--out-dir", str(tmp_path / "r3")]) == 0
    m = json.loads((tmp_path / "r3" / "manifest.json").read_text())
    assert m["config"]["anneal"]["num_reads"] == 20 and m["config"]["frames"]["n_instances"] == 4
    assert main(["calibrate", "--config", str(tmp_path / "smoke.json"), "--grid", "0.1", "0.4",
                 "--out-dir", str(tmp_path / "cal")]) == 0
    table = json.loads((tmp_path / "cal" / "w2_table.json").read_text())
    assert set(table) == {"3.0", "6.0"} and set(table.values()) <= {0.1, 0.4}


def test_sample_command(tmp_path):
    from qbp.qubo import QuadraticBinaryProblem

    p = QuadraticBinaryProblem(3, {0: 1.0, 1: -1.0}, {(1, 2): -2.0})
    (tmp_path / "p.json").write_text(p.dumps())
    assert main(["sample", "--problem", str(tmp_path / "p.json"), "--exhaustive", "--out-dir", str(tmp_path / "s")]) == 0
    ss = json.loads((tmp_path / "s" / "samples.json").read_text())
    assert ss["samples"] == [[0, 1, 1]] and ss["energies"] == [-3.0]
