import json
import os

import pytest

from stagescore.cli import main
from stagescore.model import bundle_to_mapping
from stagescore.records import read_breakdown_records, read_ndjson
from stagescore.reward import DEFAULT_CONFIG, report as build_report, score_candidate
from stagescore.selection import CandidateSet
from stagescore.synth import gen_greedy_oracle, gen_random, make_bundle
from stagescore.records import write_candidate_sets


@pytest.fixture
def workdir(tmp_path):
    bundle = make_bundle(5, n_characters=3, n_quotes=10)
    bundle_path = tmp_path / "bundle.json"
    bundle_path.write_text(json.dumps(bundle_to_mapping(bundle)))
    candidate_path = tmp_path / "oracle.json"
    candidate_path.write_text(gen_greedy_oracle(bundle))
    sets_path = tmp_path / "sets.ndjson"
    candidates = tuple(gen_random(bundle, i, 0.6) for i in range(6)) + ("{broken",)
    write_candidate_sets(str(sets_path), [CandidateSet(bundle.bundle_id, candidates)])
    return {
        "dir": tmp_path,
        "bundle": bundle,
        "bundle_path": str(bundle_path),
        "candidate_path": str(candidate_path),
        "sets_path": str(sets_path),
        "candidates": candidates,
    }


def test_score_golden_fixture(workdir, capsys):
    code = main(["score", "--bundles", workdir["bundle_path"],
                 "--candidates", workdir["candidate_path"]])
    out = capsys.readouterr().out
    assert code == 0
    assert "r 1.000000" in out
    assert "valid true" in out
    assert DEFAULT_CONFIG.config_id in out


def test_score_malformed_candidate_is_not_a_tool_error(workdir, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"scene_1": {')
    code = main(["score", "--bundles", workdir["bundle_path"], "--candidates", str(bad)])
    out = capsys.readouterr().out
    assert code == 0
    assert "r 0.000000" in out
    assert "malformed_syntax" in out


def test_score_records_format(workdir, capsys):
    code = main(["score", "--bundles", workdir["bundle_path"],
                 "--candidates", workdir["candidate_path"], "--format", "records"])
    assert code == 0
    record = json.loads(capsys.readouterr().out)
    assert record["r"] == 1.0
    assert record["valid"] is True


def test_missing_file_exits_one(workdir, capsys):
    code = main(["score", "--bundles", workdir["bundle_path"],
                 "--candidates", str(workdir["dir"] / "nope.json")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_bad_bundle_exits_one(tmp_path, capsys):
    bad = tmp_path / "bundle.json"
    bad.write_text("{broken")
    candidate = tmp_path / "c.json"
    candidate.write_text("{}")
    code = main(["score", "--bundles", str(bad), "--candidates", str(candidate)])
    assert code == 1


def test_batch_score_then_report_matches_in_process(workdir, tmp_path, capsys):
    records_path = tmp_path / "records.ndjson"
    code = main(["batch-score", "--bundles", workdir["bundle_path"],
                 "--candidates", workdir["sets_path"],
                 "--system", "noisy", "--out", str(records_path)])
    assert code == 0
    records = read_breakdown_records(str(records_path))
    assert len(records) == 7

    code = main(["report", str(records_path), "--format", "records"])
    assert code == 0
    table = json.loads(capsys.readouterr().out)

    from stagescore.records import breakdown_record

    entries = []
    for i, raw in enumerate(workdir["candidates"]):
        breakdown = score_candidate(raw, workdir["bundle"])
        record = breakdown_record(workdir["bundle"].bundle_id, i, breakdown, system="noisy")
        entries.append((record.system, record.to_mapping()["components"], record.valid))
    expected = build_report(entries).to_records()
    assert table["rows"] == expected


def test_report_byte_stability(workdir, tmp_path):
    records_path = tmp_path / "records.ndjson"
    main(["batch-score", "--bundles", workdir["bundle_path"],
          "--candidates", workdir["sets_path"], "--out", str(records_path)])
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    main(["report", str(records_path), "--format", "records", "--out", str(out1)])
    main(["report", str(records_path), "--format", "records", "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_rank_selects_best(workdir, capsys):
    code = main(["rank", "--bundles", workdir["bundle_path"],
                 "--candidates", workdir["sets_path"]])
    assert code == 0
    record = json.loads(capsys.readouterr().out.strip())
    rewards = [score_candidate(raw, workdir["bundle"]).r for raw in workdir["candidates"]]
    assert record["candidate_index"] == rewards.index(max(rewards))
    assert record["r"] == pytest.approx(max(rewards), abs=1e-6)


def test_filter_threshold(workdir, capsys):
    code = main(["filter", "--bundles", workdir["bundle_path"],
                 "--candidates", workdir["sets_path"], "--threshold", "0.8"])
    assert code == 0
    lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    for record in lines:
        assert record["r"] >= 0.8


def test_build_sft(workdir, tmp_path, capsys):
    out = tmp_path / "sft.ndjson"
    code = main(["build-sft", "--bundles", workdir["bundle_path"],
                 "--candidates", workdir["sets_path"], "--threshold", "0.0",
                 "--out", str(out)])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["emitted"] == 1
    rows = read_ndjson(str(out))
    assert rows[0]["bundle_id"] == workdir["bundle"].bundle_id


def test_advantages_zero_mean(workdir, capsys):
    code = main(["advantages", "--bundles", workdir["bundle_path"],
                 "--candidates", workdir["sets_path"]])
    assert code == 0
    row = json.loads(capsys.readouterr().out.strip())
    advantages = row["advantages"]
    assert abs(sum(advantages) / len(advantages)) < 1e-5


def test_synth_make_bundles_and_candidates(tmp_path, capsys):
    bundles_dir = tmp_path / "bundles"
    out = tmp_path / "sets.ndjson"
    code = main(["synth", "--make-bundles", "3", "--bundles-out", str(bundles_dir),
                 "--n", "4", "--kind", "random", "--seed", "11", "--out", str(out)])
    assert code == 0
    assert len(list(bundles_dir.glob("*.json"))) == 3
    from stagescore.records import load_bundles, read_candidate_sets

    bundles = load_bundles(str(bundles_dir))
    sets = read_candidate_sets(str(out))
    assert len(sets) == 3
    assert all(len(s.candidates) == 4 for s in sets)
    assert all(s.bundle_id in bundles for s in sets)


def test_chunk_command(tmp_path, capsys):
    passage = tmp_path / "p.txt"
    passage.write_text(" ".join(f"w{i}" for i in range(100)))
    code = main(["chunk", str(passage), "--n", "40"])
    assert code == 0
    rows = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert len(rows) == 3
    assert "".join(r["text"] for r in rows) == passage.read_text()


def test_disable_component_changes_reward(workdir, capsys):
    main(["score", "--bundles", workdir["bundle_path"],
          "--candidates", workdir["candidate_path"], "--format", "records"])
    base = json.loads(capsys.readouterr().out)
    main(["score", "--bundles", workdir["bundle_path"],
          "--candidates", workdir["candidate_path"], "--format", "records",
          "--disable-component", "movement"])
    ablated = json.loads(capsys.readouterr().out)
    assert base["config_id"] != ablated["config_id"]
    assert base["components"] == ablated["components"]


def test_config_file_and_env(workdir, tmp_path, capsys, monkeypatch):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"top_k": 2}))
    monkeypatch.setenv("STAGESCORE_CONFIG", str(config_path))
    code = main(["score", "--bundles", workdir["bundle_path"],
                 "--candidates", workdir["candidate_path"], "--format", "records"])
    assert code == 0
    record = json.loads(capsys.readouterr().out)
    from stagescore.reward import RewardConfig

    assert record["config_id"] == RewardConfig(top_k=2).config_id


def test_unknown_component_rejected(workdir, capsys):
    code = main(["score", "--bundles", workdir["bundle_path"],
                 "--candidates", workdir["candidate_path"],
                 "--disable-component", "sparkle"])
    assert code == 1


def test_agree_command(tmp_path, capsys):
    from stagescore.agreement import PairwiseRecord
    from stagescore.records import write_pairwise_records
    import random

    rng = random.Random(3)
    records = []
    for i in range(60):
        a, b = rng.sample(["good", "bad"], 2)
        sa = 0.8 if a == "good" else 0.3
        sb = 0.8 if b == "good" else 0.3
        label = "A_better" if sa > sb else "B_better"
        if i % 10 == 0:
            label = "same"
        records.append(PairwiseRecord(f"i{i}", a, b, label, sa, sb))
    path = tmp_path / "pairs.ndjson"
    write_pairwise_records(str(path), records)
    code = main(["agree", str(path), "--format", "records"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["rank_accuracy"] == 1.0
    elos = {row["system"]: row["elo"] for row in payload["systems"]}
    assert elos["good"] > elos["bad"]


def test_internal_error_exits_two(workdir, monkeypatch, capsys):
    import stagescore.cli as cli_module

    def boom(*args, **kwargs):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(cli_module, "score_candidate", boom)
    code = main(["score", "--bundles", workdir["bundle_path"],
                 "--candidates", workdir["candidate_path"]])
    assert code == 2
    assert "internal error" in capsys.readouterr().err


def test_batch_score_byte_determinism(workdir, tmp_path):
    out1 = tmp_path / "a.ndjson"
    out2 = tmp_path / "b.ndjson"
    for out in (out1, out2):
        main(["batch-score", "--bundles", workdir["bundle_path"],
              "--candidates", workdir["sets_path"], "--out", str(out)])
    assert out1.read_bytes() == out2.read_bytes()
