from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from normforge.cli import main

from .conftest import FIXTURES, build_exemplar_store


@pytest.fixture()
def runner():
    return CliRunner()


def test_taxonomy_validate_partial(runner):
    result = runner.invoke(
        main, ["taxonomy", "validate", str(FIXTURES / "taxonomy"), "--partial"]
    )
    assert result.exit_code == 0, result.output
    assert "10 subnorms across 3 language(s)" in result.output


def test_taxonomy_validate_complete_fails_on_desk_fixture(runner):
    result = runner.invoke(main, ["taxonomy", "validate", str(FIXTURES / "taxonomy")])
    assert result.exit_code == 1
    assert "expected 10" in result.output


def test_gen_subnorms_scripted(runner, tmp_path):
    result = runner.invoke(main, [
        "taxonomy", "gen-subnorms",
        "--category", "Apology", "--language", "KR",
        "--seed-file", str(FIXTURES / "seeds.txt"),
        "--mode", "record", "--provider", "scripted",
        "--cache", str(tmp_path / "cache.jsonl"),
        "--out", str(tmp_path / "kr.yaml"),
    ])
    assert result.exit_code == 0, result.output
    assert "wrote 10 subnorms" in result.output


def test_pipeline_then_stats_and_strategies(runner, tmp_path, desk_taxonomy):
    build_exemplar_store(tmp_path / "exemplars", desk_taxonomy)
    cache = tmp_path / "cache.jsonl"
    result = runner.invoke(main, [
        "pipeline",
        "--taxonomy", str(FIXTURES / "taxonomy"),
        "--exemplars", str(tmp_path / "exemplars"),
        "--out", str(tmp_path / "out"),
        "--mode", "record", "--provider", "scripted",
        "--cache", str(cache),
    ])
    assert result.exit_code == 0, result.output
    assert "pipeline complete: 12 instances" in result.output

    stats = runner.invoke(main, ["stats", str(tmp_path / "out" / "corpus.jsonl")])
    assert stats.exit_code == 0, stats.output
    assert "Total Dialogues: 12" in stats.output

    stats_json = runner.invoke(
        main, ["stats", str(tmp_path / "out" / "corpus.jsonl"), "--json"]
    )
    record = json.loads(stats_json.output)
    assert record["total_dialogues"] == 12

    strategies = runner.invoke(
        main, ["eval", "strategies", "--corpus", str(tmp_path / "out" / "corpus.jsonl")]
    )
    assert strategies.exit_code == 0, strategies.output
    assert "Apology (A)" in strategies.output

    rq = runner.invoke(
        main, ["eval", "rq", "--traces", str(tmp_path / "out" / "traces.jsonl")]
    )
    assert rq.exit_code == 0, rq.output
    assert "norm_alignment" in rq.output

    ls = runner.invoke(main, ["cache", "ls", str(cache)])
    assert ls.exit_code == 0
    verify = runner.invoke(main, ["cache", "verify", str(cache)])
    assert verify.exit_code == 0, verify.output
    assert "digests verified" in verify.output


def test_agreement_command(runner, tmp_path):
    matrix = {
        "r1": {"a": 1, "b": 2, "c": 3},
        "r2": {"a": 1, "b": 2, "c": 3},
    }
    path = tmp_path / "matrix.json"
    path.write_text(json.dumps(matrix), encoding="utf-8")
    result = runner.invoke(main, ["eval", "agreement", str(path), "--level", "ordinal"])
    assert result.exit_code == 0, result.output
    assert "alpha=1.0000" in result.output


def test_exemplars_listing(runner, tmp_path, desk_taxonomy):
    build_exemplar_store(tmp_path / "exemplars", desk_taxonomy)
    result = runner.invoke(main, ["exemplars", "--dir", str(tmp_path / "exemplars")])
    assert result.exit_code == 0, result.output
    assert "ex-en-apology-01" in result.output
    assert "v1" in result.output
