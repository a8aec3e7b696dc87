import json

import pytest
from click.testing import CliRunner

from flowforge.cli import main

from test_flow import diamond_doc


@pytest.fixture
def runner():
    return CliRunner()


def write_flow(tmp_path, doc_text, name="flow.json"):
    path = tmp_path / name
    path.write_text(doc_text, encoding="utf-8")
    return str(path)


def test_validate_ok(runner, tmp_path):
    path = write_flow(tmp_path, diamond_doc())
    result = runner.invoke(main, ["flow", "validate", path])
    assert result.exit_code == 0
    assert "valid" in result.output


def test_validate_reports_issues_and_fails(runner, tmp_path):
    doc = json.loads(diamond_doc())
    doc["nodes"].append({"id": "t", "kind": "tokenizer", "params": {}})
    path = write_flow(tmp_path, json.dumps(doc))
    result = runner.invoke(main, ["flow", "validate", path])
    assert result.exit_code == 1
    assert "PARAM_MISSING" in result.output


def test_plan_prints_wave_table(runner, tmp_path):
    path = write_flow(tmp_path, diamond_doc())
    result = runner.invoke(main, ["flow", "plan", path])
    assert result.exit_code == 0
    assert "4 waves" in result.output
    assert "wave 1: b c" in result.output

    as_json = runner.invoke(main, ["flow", "plan", path, "--json"])
    plan = json.loads(as_json.output)
    assert plan["mode"] == "optimized"
    assert plan["waves"][1] == ["b", "c"]

    sequential = runner.invoke(main, ["flow", "plan", path, "--mode", "sequential"])
    assert "5 waves" in sequential.output


def test_run_emits_record(runner, tmp_path):
    path = write_flow(tmp_path, diamond_doc())
    result = runner.invoke(
        main, ["flow", "run", path, "--workers", "2", "--spill-dir", str(tmp_path / "sp")]
    )
    assert result.exit_code == 0, result.output
    record = json.loads(result.output)
    assert record["status"] == "finished"
    assert set(record["tasks"]) == {"a", "b", "c", "d", "e"}


def test_agent_ask_with_fixture(runner, tmp_path):
    prices = tmp_path / "prices.csv"
    prices.write_text("price\n1\n3\n", encoding="utf-8")
    script = tmp_path / "script.json"
    script.write_text(
        json.dumps(
            {
                "steps": [
                    {"completion": "Thought: look\nAction: list_tables\nAction Input: "},
                    {
                        "completion": "Thought: avg\nAction: query\n"
                        "Action Input: SELECT AVG(price) FROM t"
                    },
                    {"completion": "Thought: ok\nFinal Answer: 2.0"},
                ]
            }
        ),
        encoding="utf-8",
    )
    result = runner.invoke(
        main,
        ["agent", "ask", "What is the average of column price?",
         "--tables", f"t={prices}", "--script", str(script)],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["answer"] == "2.0"


def test_bench_scale_writes_reports(runner, tmp_path):
    out_dir = tmp_path / "bench"
    result = runner.invoke(
        main,
        ["bench", "scale", "--workers", "2", "--seed", "3", "--rows", "60",
         "--out", str(out_dir)],
    )
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert lines[0] == "fraction,rows,sequential_ms,optimized_ms"
    assert (out_dir / "bench.csv").exists()
    assert (out_dir / "bench.json").exists()
    assert (out_dir / "bench.png").exists()
    report = json.loads((out_dir / "bench.json").read_text())
    assert len(report["fractions"]) == 10
    assert report["rows"][-1] == 60
