import json
import shlex
import sys
from pathlib import Path

import pytest

from keying import MasterKey, derive_seed, secret_vector
from main import main

KEY = "5a" * 32
ECHO = Path(__file__).resolve().parent.parent / "echo_provider.py"


@pytest.fixture(autouse=True)
def _isolated(tmp_config):
    return tmp_config


def read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def stderr_error(capsys) -> dict:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


def test_keygen(capsys):
    assert main(["keygen"]) == 0
    value = capsys.readouterr().out.strip()
    assert len(value) == 64
    MasterKey.from_hex(value)


def test_help_exits_cleanly():
    assert main(["--help"]) == 0


def test_vanilla_generation_is_reproducible(tmp_path):
    outputs = []
    for name in ("a.jsonl", "b.jsonl"):
        out = tmp_path / name
        args = ["generate", "--scheme", "vanilla", "--model", "toy:medium:64", "--length", "32", "--seed", "5"]
        assert main(args + ["--out", str(out)]) == 0
        outputs.append(out.read_text(encoding="utf-8"))
    assert outputs[0] == outputs[1]
    (record,) = [json.loads(line) for line in outputs[0].splitlines()]
    assert len(record["tokens"]) == 32 and record["vocab_size"] == 64


@pytest.mark.parametrize(
    "argv",
    [
        ["generate", "--key", KEY, "--message", "3"],
        ["generate", "--key", KEY, "--message", "16", "--num-messages", "16"],
        ["generate", "--key", KEY, "--bogus-flag"],
        ["generate", "--scheme", "exponential"],
        ["generate", "--key", KEY, "--model", "llm:gpt"],
        ["identify", "--key", KEY, "--num-messages", "0"],
        ["identify", "--key", KEY],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == 1
    assert stderr_error(capsys)["kind"] in {"usage", "configuration"}


def test_generate_then_detect(tmp_path, capsys):
    texts, reports = tmp_path / "texts.jsonl", tmp_path / "reports.jsonl"
    gen = ["generate", "--key", KEY, "--scheme", "exponential", "--model", "toy:medium:64", "--length", "128"]
    assert main(gen + ["--count", "3", "--out", str(texts)]) == 0
    assert main(["detect", "--key", KEY, "--in", str(texts), "--out", str(reports)]) == 0
    rows = read_jsonl(reports)
    assert [r["record"] for r in rows] == [1, 2, 3]
    for row in rows:
        assert row["test"] == "gamma"
        assert row["p_value"] < 1e-3
        assert 0 < row["scored_tokens"] <= row["total_tokens"]

    other = tmp_path / "other.jsonl"
    assert main(["detect", "--key", "a5" * 32, "--in", str(texts), "--out", str(other)]) == 0
    assert all(r["p_value"] > 1e-3 for r in read_jsonl(other))


def test_detect_greenlist_with_ztest(tmp_path):
    texts, reports = tmp_path / "texts.jsonl", tmp_path / "reports.jsonl"
    gen = ["generate", "--key", KEY, "--scheme", "greenlist", "--delta", "4", "--model", "toy:medium:64"]
    assert main(gen + ["--length", "200", "--out", str(texts)]) == 0
    assert main(["detect", "--key", KEY, "--test", "ztest", "--in", str(texts), "--out", str(reports)]) == 0
    (row,) = read_jsonl(reports)
    assert row["test"] == "ztest" and row["p_value"] < 1e-3


def test_np_test_needs_model(tmp_path, capsys):
    texts = tmp_path / "texts.jsonl"
    texts.write_text(json.dumps({"tokens": [1, 2, 3], "vocab_size": 64}) + "\n", encoding="utf-8")
    assert main(["detect", "--key", KEY, "--scheme", "exponential", "--test", "np", "--in", str(texts)]) == 1
    assert stderr_error(capsys)["kind"] == "model_access"


def test_np_test_with_model(tmp_path):
    texts, reports = tmp_path / "texts.jsonl", tmp_path / "reports.jsonl"
    gen = ["generate", "--key", KEY, "--scheme", "exponential", "--model", "toy:medium:64", "--length", "128"]
    assert main(gen + ["--out", str(texts)]) == 0
    det = ["detect", "--key", KEY, "--test", "np", "--model", "toy:medium:64"]
    assert main(det + ["--in", str(texts), "--out", str(reports)]) == 0
    (row,) = read_jsonl(reports)
    assert row["test"] == "np" and row["p_value"] < 1e-3


def test_dedup_off_overstates_evidence_on_repetition(tmp_path):
    key = MasterKey.from_hex(KEY)
    green = lambda a, b: secret_vector(derive_seed(key, [a], 1), 64).entries[b] < 0.25
    a, b = next((a, b) for a in range(64) for b in range(a + 1, 64) if green(a, b) and green(b, a))
    texts = tmp_path / "texts.jsonl"
    texts.write_text(json.dumps({"tokens": [a, b] * 20, "vocab_size": 64}) + "\n", encoding="utf-8")

    p_values = {}
    for rule in ("tuple", "off"):
        out = tmp_path / f"{rule}.jsonl"
        flags = ["--scheme", "greenlist", "--gamma", "0.25", "--h", "1", "--dedup", rule]
        assert main(["detect", "--key", KEY, *flags, "--in", str(texts), "--out", str(out)]) == 0
        (row,) = read_jsonl(out)
        p_values[rule] = row["p_value"]
        if rule == "tuple":
            assert row["scored_tokens"] == 2
    assert p_values["tuple"] == pytest.approx(0.0625)
    assert p_values["off"] < p_values["tuple"]


def test_broken_records_are_reported_and_skipped(tmp_path):
    texts, reports = tmp_path / "texts.jsonl", tmp_path / "reports.jsonl"
    texts.write_text(
        "{not json\n" + json.dumps({"tokens": [1, 2, 3, 4], "vocab_size": 64}) + "\n" + json.dumps([1, 2]) + "\n",
        encoding="utf-8",
    )
    assert main(["detect", "--key", KEY, "--scheme", "exponential", "--in", str(texts), "--out", str(reports)]) == 0
    rows = read_jsonl(reports)
    assert [r["record"] for r in rows] == [1, 2, 3]
    assert rows[0]["kind"] == "configuration" and "error" in rows[0]
    assert "p_value" in rows[1]
    assert rows[2]["kind"] == "configuration"


def test_identify_round_trip(tmp_path):
    texts, reports = tmp_path / "texts.jsonl", tmp_path / "reports.jsonl"
    gen = ["generate", "--key", KEY, "--scheme", "exponential", "--model", "toy:medium:64", "--length", "256"]
    assert main(gen + ["--message", "3", "--num-messages", "16", "--out", str(texts)]) == 0
    (record,) = read_jsonl(texts)
    assert record["message"] == 3 and record["num_messages"] == 16
    assert main(["identify", "--key", KEY, "--num-messages", "16", "--in", str(texts), "--out", str(reports)]) == 0
    (row,) = read_jsonl(reports)
    assert row["best_message"] == 3
    assert row["flagged"] and row["global_pvalue"] < 1e-3
    assert len(row["scores"]) == 16


def test_experiment_command(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(
        json.dumps({"experiment": "fpr_calibration", "trials": 5, "text_length": 32, "model": "toy:medium:64"}),
        encoding="utf-8",
    )
    out = tmp_path / "run"
    assert main(["experiment", "--spec", str(spec), "--out", str(out), "--workers", "1", "--seed", "3"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["experiment"] == "fpr_calibration" and summary["rows"] > 0
    assert Path(summary["paths"]["jsonl"]).parent == out
    assert json.loads((out / "spec.json").read_text(encoding="utf-8"))["seed"] == 3


def test_experiment_with_bad_spec(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"experiment": "fpr_calibration", "colour": "blue"}), encoding="utf-8")
    assert main(["experiment", "--spec", str(spec)]) == 1
    assert stderr_error(capsys)["kind"] == "configuration"


def test_generate_through_provider(tmp_path):
    command = " ".join(shlex.quote(p) for p in (sys.executable, str(ECHO), "--vocab-size", "16"))
    out = tmp_path / "texts.jsonl"
    gen = ["generate", "--key", KEY, "--scheme", "exponential", "--model", f"provider:{command}", "--length", "12"]
    assert main(gen + ["--out", str(out)]) == 0
    (record,) = read_jsonl(out)
    assert record["vocab_size"] == 16 and len(record["tokens"]) == 12


@pytest.mark.parametrize("flag", ["--bad-length", "--nan"])
def test_broken_provider_exits_with_code_three(flag, capsys):
    command = " ".join(shlex.quote(p) for p in (sys.executable, str(ECHO), flag))
    assert main(["generate", "--key", KEY, "--model", f"provider:{command}", "--length", "4"]) == 3
    assert stderr_error(capsys)["kind"] == "provider"


def test_random_prompt_makes_records_distinct(tmp_path):
    texts = tmp_path / "texts.jsonl"
    gen = ["generate", "--key", KEY, "--scheme", "exponential", "--model", "toy:medium:64", "--length", "32"]
    assert main(gen + ["--count", "10", "--random-prompt", "4", "--out", str(texts)]) == 0
    records = read_jsonl(texts)
    assert len({tuple(r["tokens"]) for r in records}) == 10
    assert all(r["prompt_len"] == 4 for r in records)

    again = tmp_path / "again.jsonl"
    assert main(gen + ["--count", "10", "--random-prompt", "4", "--out", str(again)]) == 0
    assert again.read_text(encoding="utf-8") == texts.read_text(encoding="utf-8")


def test_smoke_detection_rates(tmp_path):
    wm, plain = tmp_path / "wm.jsonl", tmp_path / "plain.jsonl"
    common = ["--model", "toy:medium:64", "--length", "128", "--h", "4", "--count", "100", "--random-prompt", "4"]
    assert main(["generate", "--key", KEY, "--scheme", "exponential", *common, "--out", str(wm)]) == 0
    assert main(["generate", "--scheme", "vanilla", *common, "--seed", "1", "--out", str(plain)]) == 0

    flagged = {}
    for name, path in (("wm", wm), ("plain", plain)):
        out = tmp_path / f"{name}-reports.jsonl"
        det = ["detect", "--key", KEY, "--scheme", "exponential", "--h", "4", "--in", str(path), "--out", str(out)]
        assert main(det) == 0
        flagged[name] = sum(r["p_value"] < 1e-3 for r in read_jsonl(out))
    assert flagged["wm"] >= 90
    assert flagged["plain"] <= 2


def test_missing_input_file(tmp_path, capsys):
    assert main(["detect", "--key", KEY, "--in", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "r")]) == 1
    error = stderr_error(capsys)
    assert error["kind"] == "storage" and "missing.jsonl" in error["error"]


def test_unwritable_output(tmp_path, capsys):
    out = tmp_path / "no" / "such" / "dir.jsonl"
    assert main(["generate", "--key", KEY, "--model", "toy:medium:64", "--length", "4", "--out", str(out)]) == 1
    assert stderr_error(capsys)["kind"] == "storage"


def test_experiment_into_unwritable_directory(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(
        json.dumps({"experiment": "fpr_calibration", "trials": 2, "text_length": 16, "model": "toy:medium:64"}),
        encoding="utf-8",
    )
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    assert main(["experiment", "--spec", str(spec), "--out", str(blocker / "run"), "--workers", "1"]) == 1
    assert stderr_error(capsys)["kind"] == "storage"
