from __future__ import annotations

import json

import numpy as np
import pytest

from auxbandit.arrivals import load_matrix
from auxbandit.cli import run_command
from auxbandit.config import PRESETS, parse_config, preset
from auxbandit.core import ConfigError


def small_sim(**over) -> dict:
    doc = {
        "instance": {"mu": [0.7, 0.5], "sigma": 0.5, "aux_equals_reward": True},
        "T": 60,
        "n_reps": 3,
        "arrivals": {"kind": "stationary", "lam": 0.1},
        "policies": [{"kind": "UCB1", "c": 1.0}, {"kind": "aUCB1", "c": 1.0}],
    }
    doc.update(over)
    return doc


def test_fig2_preset_expands():
    cfg = parse_config("fig2")
    assert cfg.instance.mu == (0.7, 0.5, 0.5) and cfg.instance.sigma == 0.5
    assert cfg.instance.sigma_hat == 0.5 and cfg.instance.y == cfg.instance.mu
    assert cfg.T == 10_000 and cfg.n_reps == 200 and cfg.seed == 42
    lams = [sc.arrivals.lam for sc in cfg.scenarios]
    assert lams == [None, 0.001, 0.01, 0.05]


def test_every_preset_parses():
    for name in PRESETS:
        cfg = parse_config(preset(name))
        assert parse_config(cfg.to_dict()).to_dict() == cfg.to_dict()
    for name in ("fig2", "appF-stationary-500", "appF-stationary-100", "appF-stationary-10",
                 "appF-diminishing-4", "appF-diminishing-2", "appF-diminishing-1", "appE-replay"):
        assert name in PRESETS


def test_empty_document_lists_every_required_field():
    with pytest.raises(ConfigError) as info:
        parse_config({})
    text = " ".join(info.value.errors)
    for field in ("instance", "T", "n_reps", "arrivals", "policies"):
        assert field in text


def test_range_and_unknown_key_errors_are_collected():
    doc = small_sim(arrivals={"kind": "stationary", "lam": 1.5}, bogus=1)
    doc["policies"].append({"kind": "Nope"})
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    errs = info.value.errors
    assert len(errs) >= 3
    assert any("lam" in e for e in errs) and any("bogus" in e for e in errs) and any("Nope" in e for e in errs)


def test_aux_equals_reward_conflicts():
    doc = small_sim(instance={"mu": [0.7, 0.5], "sigma": 0.5, "aux_equals_reward": True, "sigma_hat": 0.1})
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_seed_precedence():
    assert parse_config(small_sim()).seed == 42
    assert parse_config(small_sim(seed=5)).seed == 5
    assert parse_config(small_sim(seed=5), seed=9).seed == 9


def test_json_text_and_file_sources(tmp_path):
    text = json.dumps(small_sim())
    assert parse_config(text).T == 60
    path = tmp_path / "c.json"
    path.write_text(text)
    assert parse_config(str(path)).n_reps == 3


def test_cli_simulate_writes_outputs_and_manifest_reruns(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_command(["simulate", "--config", json.dumps(small_sim()), "--out", str(out1)]) == 0
    for f in ("trajectories.csv", "summary.csv", "manifest.json"):
        assert (out1 / f).exists()
    man = json.loads((out1 / "manifest.json").read_text())
    assert man["seed"] == 42 and man["command"] == "simulate"
    assert run_command(["simulate", "--manifest", str(out1 / "manifest.json"), "--out", str(out2)]) == 0
    for f in ("trajectories.csv", "summary.csv", "manifest.json"):
        assert (out1 / f).read_bytes() == (out2 / f).read_bytes()


def test_cli_replay(tmp_path):
    doc = {
        "kind": "replay",
        "n_cases": 3,
        "n_reps": 2,
        "corpus": {"T": 100, "arrival_rate": 1.0},
        "policies": [{"kind": "UCB1", "c": 0.05}, {"kind": "TwoUCBs", "c": 0.05, "alpha_bar": 1.1, "label": "2-UCBs"}],
    }
    corpus = tmp_path / "corpus.jsonl"
    assert run_command(["replay", "--config", json.dumps(doc), "--out", str(tmp_path / "r"),
                        "--save-corpus", str(corpus)]) == 0
    first = (tmp_path / "r" / "replay_results.csv").read_bytes()
    assert first.startswith(b"case_id,policy,mean_regret,RI,AIE,RMM\n")
    assert run_command(["replay", "--config", json.dumps(doc), "--out", str(tmp_path / "s"),
                        "--corpus", str(corpus)]) == 0
    assert (tmp_path / "s" / "replay_results.csv").read_bytes() == first


def test_cli_gen_arrivals_and_bound(tmp_path, capsys):
    path = tmp_path / "zeros.csv"
    assert run_command(["gen-arrivals", "--kind", "stationary", "--lambda", "0", "--K", "2", "--T", "50",
                        "--out", str(path)]) == 0
    assert not load_matrix(path).h.any()
    capsys.readouterr()
    assert run_command(["bound", "--op", "aie", "--matrix", str(path), "--Delta", "0.03", "--sigma-hat", "0.25"]) == 0
    assert json.loads(capsys.readouterr().out)["values"] == [0.0, 0.0]
    assert run_command(["bound", "--op", "minimax", "--matrix", str(path), "--Delta", "0.2",
                        "--sigma", "0.5", "--sigma-hat", "0.5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == pytest.approx(0.3125 * np.log(0.04 * 50 / 0.5)) and out["vacuous"] == [False]
    assert run_command(["bound", "--op", "corollary", "--kind", "stationary", "--gaps", "0.2", "--sigma", "0.5",
                        "--sigma-hat", "0.5", "--c", "1", "--T", "100", "--lam", "0"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] > 0


def test_cli_exit_codes(tmp_path, capsys):
    assert run_command(["presets"]) == 0
    assert "fig2" in capsys.readouterr().out
    assert run_command(["presets", "--name", "appE-replay"]) == 0
    assert json.loads(capsys.readouterr().out)["appE-replay"]["kind"] == "replay"
    bad = json.dumps(small_sim(arrivals={"kind": "stationary", "lam": 1.5}))
    assert run_command(["simulate", "--config", bad, "--out", str(tmp_path)]) == 2
    assert "lam" in capsys.readouterr().err
    assert run_command(["gen-arrivals", "--kind", "weird", "--K", "2", "--T", "5"]) == 2
    assert run_command(["bound", "--op", "lse"]) == 2
    assert run_command(["nonsense"]) == 2
    bad_matrix = tmp_path / "bad.csv"
    bad_matrix.write_text("0,1\n0,-1\n")
    assert run_command(["bound", "--op", "lse", "--rate", "1", "--matrix", str(bad_matrix)]) == 2
    assert "row 2, column 2" in capsys.readouterr().err
    # A directory where a file is expected is a runtime failure, not a validation one.
    assert run_command(["bound", "--op", "lse", "--rate", "1", "--matrix", str(tmp_path)]) == 1
