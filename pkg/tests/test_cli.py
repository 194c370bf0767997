import json
import subprocess
import sys

import pytest

from backlink import cli, evaluation

from conftest import make_article_line


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def workspace(tmp_path, fixture_paths):
    """Fixture corpus indexed into a temp dir, ready for CLI commands."""
    idx = tmp_path / "fixture.idx"
    code = run_cli("index", fixture_paths["corpus"], idx)
    assert code == 0
    return {
        "dir": tmp_path,
        "index": idx,
        "corpus": fixture_paths["corpus"],
        "topics": fixture_paths["topics"],
        "qrels": fixture_paths["qrels"],
    }


class TestIndexCommand:
    def test_summary_counts(self, tmp_path, capsys):
        corpus_path = tmp_path / "c.jsonl"
        lines = [
            make_article_line(f"d{i}", title="words here", date=i) for i in range(18)
        ]
        lines.insert(3, make_article_line("op1", kicker="Opinion"))
        lines.insert(9, make_article_line("op2", kicker="Opinion"))
        corpus_path.write_text("\n".join(lines) + "\n")
        assert run_cli("index", corpus_path, tmp_path / "i.idx") == 0
        out = capsys.readouterr().out
        assert "indexed 18" in out
        assert "filtered 2" in out
        assert "rejected 0" in out

    def test_rejected_lines_counted(self, tmp_path, capsys):
        corpus_path = tmp_path / "c.jsonl"
        corpus_path.write_text(
            make_article_line("d0") + "\nnot json at all\n" + make_article_line("d1") + "\n"
        )
        assert run_cli("index", corpus_path, tmp_path / "i.idx") == 0
        assert "rejected 1" in capsys.readouterr().out

    def test_empty_corpus_warns_but_succeeds(self, tmp_path, capsys, caplog):
        corpus_path = tmp_path / "c.jsonl"
        corpus_path.write_text("")
        assert run_cli("index", corpus_path, tmp_path / "i.idx") == 0
        assert "indexed 0" in capsys.readouterr().out

    def test_unreadable_corpus_exits_2(self, tmp_path):
        assert run_cli("index", tmp_path / "missing.jsonl", tmp_path / "i.idx") == 2

    def test_no_partial_output_on_failure(self, tmp_path):
        target = tmp_path / "i.idx"
        assert run_cli("index", tmp_path / "missing.jsonl", target) == 2
        assert not target.exists()
        assert not target.with_name(target.name + ".partial").exists()


class TestSearchCommand:
    def test_writes_ranked_rows(self, workspace, capsys):
        out = workspace["dir"] / "a1.run"
        code = run_cli(
            "search", workspace["index"], workspace["topics"], workspace["corpus"], out,
        )
        assert code == 0
        run = evaluation.parse_run(out)
        topics = {r.topic_id for r in run.rows}
        assert topics == {"801", "802", "803", "804", "805"}

    def test_limit_caps_rows(self, workspace):
        out = workspace["dir"] / "a1.run"
        assert run_cli(
            "search", workspace["index"], workspace["topics"], workspace["corpus"], out,
            "--limit", 5,
        ) == 0
        per_topic = {}
        for row in evaluation.parse_run(out).rows:
            per_topic[row.topic_id] = per_topic.get(row.topic_id, 0) + 1
        assert all(v <= 5 for v in per_topic.values())

    def test_missing_query_doc_skipped(self, workspace, tmp_path, caplog):
        topics = tmp_path / "topics.txt"
        topics.write_text("901 no-such-doc\n801 volcano-query\n")
        out = tmp_path / "a1.run"
        with caplog.at_level("WARNING"):
            code = run_cli(
                "search", workspace["index"], topics, workspace["corpus"], out,
            )
        assert code == 0
        rows = evaluation.parse_run(out).rows
        assert {r.topic_id for r in rows} == {"801"}
        assert any("no-such-doc" in rec.message for rec in caplog.records)

    def test_jobs_flag_does_not_change_output(self, workspace):
        out1 = workspace["dir"] / "j1.run"
        out2 = workspace["dir"] / "j2.run"
        run_cli("search", workspace["index"], workspace["topics"], workspace["corpus"], out1)
        run_cli("search", workspace["index"], workspace["topics"], workspace["corpus"], out2,
                "--jobs", 4)
        assert out1.read_bytes() == out2.read_bytes()

    def test_query_article_never_returned(self, workspace):
        out = workspace["dir"] / "a1.run"
        run_cli("search", workspace["index"], workspace["topics"], workspace["corpus"], out)
        topics = dict(
            line.split() for line in open(workspace["topics"], encoding="utf-8")
        )
        for row in evaluation.parse_run(out).rows:
            assert row.doc_id != topics[row.topic_id]


class TestRerankCommand:
    def test_offline_hash_backend(self, workspace):
        out = workspace["dir"] / "a2.run"
        code = run_cli(
            "rerank", workspace["index"], workspace["topics"], workspace["corpus"], out,
            "--backend", "hash", "-p", 20, "-t", 5,
        )
        assert code == 0
        per_topic = {}
        for row in evaluation.parse_run(out).rows:
            per_topic.setdefault(row.topic_id, []).append(row)
        assert set(per_topic) == {"801", "802", "803", "804", "805"}
        assert all(len(rows) == 5 for rows in per_topic.values())

    def test_p_less_than_t_usage_error(self, workspace):
        out = workspace["dir"] / "a2.run"
        code = run_cli(
            "rerank", workspace["index"], workspace["topics"], workspace["corpus"], out,
            "-p", 3, "-t", 10,
        )
        assert code == 2
        assert not out.exists()

    def test_unreachable_backend_exits_3_and_cleans_up(self, workspace):
        out = workspace["dir"] / "a2.run"
        code = run_cli(
            "rerank", workspace["index"], workspace["topics"], workspace["corpus"], out,
            "--backend", "http:127.0.0.1:9", "--retries", 0,
        )
        assert code == 3
        assert not out.exists()
        assert not out.with_name(out.name + ".partial").exists()

    def test_deterministic_across_invocations(self, workspace):
        out1 = workspace["dir"] / "r1.run"
        out2 = workspace["dir"] / "r2.run"
        for out in (out1, out2):
            assert run_cli(
                "rerank", workspace["index"], workspace["topics"], workspace["corpus"],
                out, "--backend", "hash", "-p", 20, "-t", 5,
            ) == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestEvalCommand:
    @pytest.fixture
    def perfect_run(self, workspace):
        # rank each topic's judged docs in relevance order
        qrels = evaluation.parse_qrels(workspace["qrels"])
        runs = []
        for topic in qrels.topics():
            ranked = sorted(
                qrels.judgments[topic].items(), key=lambda e: (-e[1], e[0])
            )
            entries = [(d, float(r)) for d, r in ranked if r > 0]
            runs.append(evaluation.RankedList(topic, entries))
        path = workspace["dir"] / "perfect.run"
        evaluation.write_run(runs, path, "perfect")
        return path

    def test_perfect_run_scores_one(self, workspace, perfect_run, capsys):
        assert run_cli("eval", perfect_run, workspace["qrels"], "--k", "5") == 0
        out = capsys.readouterr().out
        assert "ndcg@5" in out
        last = [l for l in out.splitlines() if l.startswith("all")][-1]
        assert "1.0000" in last

    def test_json_lines_mode(self, workspace, perfect_run, capsys):
        assert run_cli(
            "eval", perfect_run, workspace["qrels"], "--k", "5,10", "--json",
        ) == 0
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert lines[-1]["topic"] == "all"
        assert lines[-1]["ndcg@5"] == pytest.approx(1.0)
        assert {l["topic"] for l in lines[:-1]} == {"801", "802", "803", "804", "805"}

    def test_diversity_requires_index(self, workspace, perfect_run):
        assert run_cli("eval", perfect_run, workspace["qrels"], "--diversity") == 2

    def test_diversity_reported(self, workspace, perfect_run, capsys):
        assert run_cli(
            "eval", perfect_run, workspace["qrels"], "--diversity",
            "--index", workspace["index"],
        ) == 0
        assert "diversity" in capsys.readouterr().out

    def test_topic_mismatch_warns_and_intersects(self, workspace, perfect_run, tmp_path, caplog, capsys):
        qrels_path = tmp_path / "q.txt"
        qrels_lines = [
            l for l in open(workspace["qrels"], encoding="utf-8") if l.startswith("801")
        ]
        qrels_path.write_text("".join(qrels_lines) + "999 0 ghost 1\n")
        with caplog.at_level("WARNING"):
            assert run_cli("eval", perfect_run, qrels_path, "--json") == 0
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert {l["topic"] for l in lines} == {"801", "all"}
        assert any("differ" in rec.message for rec in caplog.records)

    def test_metrics_match_library_values(self, workspace, capsys):
        out = workspace["dir"] / "a1.run"
        run_cli("search", workspace["index"], workspace["topics"], workspace["corpus"], out,
                "--limit", 10)
        capsys.readouterr()  # drop the search summary line
        assert run_cli("eval", out, workspace["qrels"], "--k", "5", "--json") == 0
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        qrels = evaluation.parse_qrels(workspace["qrels"])
        lists = evaluation.parse_run(out).ranked_lists()
        for line in lines:
            if line["topic"] == "all":
                continue
            ranked = lists[line["topic"]]
            assert line["ndcg@5"] == pytest.approx(
                evaluation.ndcg_at_k(ranked, qrels, 5)
            )
            assert line["p@5"] == pytest.approx(
                evaluation.precision_at_k(ranked, qrels, 5)
            )


class TestSweepCommand:
    def test_three_values_three_rows(self, workspace, capsys):
        assert run_cli(
            "sweep", workspace["index"], workspace["topics"], workspace["corpus"],
            workspace["qrels"], "--param", "n=5,20,100",
        ) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "param,value,ndcg@5,p@5"
        assert len(lines) == 4
        assert [l.split(",")[1] for l in lines[1:]] == ["5", "20", "100"]

    def test_rep_max_sweep_csv_well_formed(self, workspace, capsys):
        assert run_cli(
            "sweep", workspace["index"], workspace["topics"], workspace["corpus"],
            workspace["qrels"], "--param", "rep_max=1,3,5",
        ) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 4
        for line in lines[1:]:
            param, value, ndcg5, p5 = line.split(",")
            assert param == "rep_max"
            assert 0.0 <= float(ndcg5) <= 1.0
            assert 0.0 <= float(p5) <= 1.0

    def test_unknown_parameter_rejected(self, workspace):
        assert run_cli(
            "sweep", workspace["index"], workspace["topics"], workspace["corpus"],
            workspace["qrels"], "--param", "warp=1,2",
        ) == 2

    def test_kept_runs_reproduce_reported_numbers(self, workspace, tmp_path, capsys):
        keep = tmp_path / "runs"
        assert run_cli(
            "sweep", workspace["index"], workspace["topics"], workspace["corpus"],
            workspace["qrels"], "--param", "n=5,50", "--keep-runs", keep,
        ) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        for line in lines[1:]:
            _, value, ndcg5, p5 = line.split(",")
            # re-evaluate the kept run through the eval command itself
            assert run_cli(
                "eval", keep / f"sweep_n_{value}.run", workspace["qrels"],
                "--k", "5", "--json",
            ) == 0
            summary = [
                json.loads(l) for l in capsys.readouterr().out.splitlines()
            ][-1]
            assert summary["topic"] == "all"
            assert float(ndcg5) == pytest.approx(summary["ndcg@5"], abs=1e-12)
            assert float(p5) == pytest.approx(summary["p@5"], abs=1e-12)

    def test_rerank_pipeline_inferred(self, workspace, capsys):
        assert run_cli(
            "sweep", workspace["index"], workspace["topics"], workspace["corpus"],
            workspace["qrels"], "--param", "min_phrases=2,5", "-p", 10, "-t", 5,
        ) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 3


def test_module_entrypoint_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "backlink", "--help"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert "index" in proc.stdout and "rerank" in proc.stdout
