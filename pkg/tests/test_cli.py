import csv
import io
import json
import math

import pytest

from ldselect import cli

BASE = {
    "alphabet_size": 2,
    "source": "uniform",
    "storage": "uniform",
    "weight": {"kind": "additive", "phi": [0, 1]},
    "eta": 0.75,
    "eps": 0.2,
}


@pytest.fixture
def write_cfg(tmp_path):
    def _write(**overrides):
        cfg = dict(BASE, **overrides)
        path = tmp_path / f"cfg{len(list(tmp_path.iterdir()))}.json"
        path.write_text(json.dumps(cfg))
        return str(path)
    return _write


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ldr_curve(capsys):
    code, out, _ = run(capsys, "ldr-curve", "--alpha", "0.5", "--beta", "0.1", "--points", "99")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["y0", "m_star_closed", "m_star_numeric", "abs_diff"]
    assert len(rows) == 100
    assert max(float(r[3]) for r in rows[1:]) <= 1e-6
    assert "\r" not in out


def test_rate_and_log_base(capsys, write_cfg):
    path = write_cfg()
    code, out, _ = run(capsys, "rate", path)
    nats = json.loads(out)
    assert code == 0
    assert nats["gamma"] == pytest.approx(0.56234, abs=1e-5)
    assert nats["status"] == "at_boundary"
    code, out, _ = run(capsys, "--log-base", "2", "rate", path)
    bits = json.loads(out)
    assert bits["gamma"] == pytest.approx(0.81128, abs=1e-5)
    for key in ("gamma", "kappa", "v"):
        assert abs(bits[key] - nats[key] / math.log(2)) <= 1e-12


def test_rate_multiplicative_reports_iota(capsys, write_cfg):
    path = write_cfg(weight={"kind": "multiplicative", "psi": [1, math.e]})
    code, out, _ = run(capsys, "rate", path)
    data = json.loads(out)
    assert code == 0 and data["iota"] == pytest.approx(0.5623351446, abs=1e-8)


def test_infeasible_exit(capsys, write_cfg):
    code, out, _ = run(capsys, "rate", write_cfg(eta=1.5))
    assert code == 3
    assert json.loads(out)["status"] == "infeasible"


def test_config_errors(capsys, write_cfg, tmp_path):
    assert run(capsys, "rate", write_cfg(colour="red"))[0] == 2
    assert run(capsys, "rate", write_cfg(eps=-1))[0] == 2
    assert run(capsys, "rate", write_cfg(source={"kind": "markov", "rows": [[0, 1], [1, 0]]}))[0] == 2
    assert run(capsys, "rate", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "no-such-command")[0] == 2


def test_size_guard_exit(capsys, write_cfg):
    assert run(capsys, "enumerate", write_cfg(), "--n", "30")[0] == 4


def test_enumerate_and_simulate(capsys, write_cfg):
    path = write_cfg(eta=0.5, eps=0.1)
    code, out, _ = run(capsys, "enumerate", path, "--n", "2")
    assert code == 0
    assert json.loads(out) == {"n": 2, "b_n": 3, "p_st": 0.75, "log_rate": math.log(3) / 2}
    path = write_cfg(storage={"kind": "markov", "rows": [[0.7, 0.3], [0.3, 0.7]]}, seed=3)
    code, out, _ = run(capsys, "simulate", path, "--n", "12", "--trials", "20000")
    data = json.loads(out)
    assert code == 0 and set(data) >= {"estimate", "stderr"}


def test_output_is_deterministic(capsys, write_cfg, tmp_path):
    target = tmp_path / "out.json"
    path = write_cfg(storage={"kind": "markov", "rows": [[0.7, 0.3], [0.3, 0.7]]}, seed=5, output_path=str(target))
    blobs = []
    for _ in range(2):
        assert cli.main(["simulate", path, "--n", "10", "--trials", "5000"]) == 0
        blobs.append(target.read_bytes())
    assert blobs[0] == blobs[1]


def test_chain_info(capsys, write_cfg):
    path = write_cfg(source={"kind": "markov", "rows": [[0.5, 0.5], [0.1, 0.9]]})
    code, out, _ = run(capsys, "chain-info", path)
    data = json.loads(out)
    assert code == 0
    assert data["source"]["stationary"] == pytest.approx([1 / 6, 5 / 6], abs=1e-14)
    assert data["source"]["validation"]["valid"] is True
    assert data["storage"]["entropy_rate"] == pytest.approx(math.log(2), abs=1e-15)


def test_convergence_table(capsys, write_cfg):
    code, out, _ = run(capsys, "convergence", write_cfg(), "--n-list", "8,12")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["n", "empirical", "analytic", "gap"]
    assert float(rows[2][3]) < float(rows[1][3])


def test_order_k_config(capsys, write_cfg):
    path = write_cfg(source={"kind": "markov_order_k", "order": 2,
                             "rows": [[0.6, 0.4, 0, 0], [0, 0, 0.3, 0.7], [0.5, 0.5, 0, 0], [0, 0, 0.2, 0.8]]},
                     weight={"kind": "additive_k", "k": 2, "phi": [0, 0, 1, 1]}, eta=0.5)
    code, out, _ = run(capsys, "rate", path)
    assert code == 0
    assert 0 < json.loads(out)["gamma"] <= math.log(2)
