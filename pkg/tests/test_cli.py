import csv
import io as stdio
import json

import numpy as np
import pytest

from hetesim import cli
from hetesim import io
from hetesim.exceptions import FormatError
from hetesim.graph import adjacency
from hetesim.synthetic import bench_graph, random_hin, toy_graph


@pytest.fixture
def toy_files(tmp_path):
    paths = io.write_graph(toy_graph(), tmp_path / "toy")
    return ["--schema", str(paths[0]), "--nodes", str(paths[1]), "--edges", str(paths[2])]


@pytest.fixture
def bench_files(tmp_path):
    paths = io.write_graph(bench_graph(5, n_authors=120, n_papers=250, n_terms=200), tmp_path / "bench")
    return ["--schema", str(paths[0]), "--nodes", str(paths[1]), "--edges", str(paths[2])]


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def data_lines(path):
    return [l for l in open(path, encoding="utf-8").read().splitlines() if not l.startswith("#")]


class TestFiles:
    @pytest.mark.parametrize("seed", range(5))
    def test_round_trip(self, tmp_path, seed):
        g = random_hin(seed, weighted=True)
        paths = io.write_graph(g, tmp_path)
        g2 = io.load_graph(*paths)
        for rel in g.schema.relations:
            np.testing.assert_array_equal(adjacency(g, rel.id).toarray(), adjacency(g2, rel.id).toarray())
        assert g.content_hash() == g2.content_hash()

    def test_line_numbers(self, tmp_path):
        paths = io.write_graph(toy_graph(), tmp_path)
        with open(paths[2], "a", encoding="utf-8") as fh:
            fh.write("a1\tb1\tAB\tabc\n")
        with pytest.raises(FormatError, match=r"edges.tsv:7: "):
            io.load_graph(*paths)

    def test_type_mismatch_line(self, tmp_path):
        paths = io.write_graph(toy_graph(), tmp_path)
        text = open(paths[2]).read().splitlines()
        text.insert(2, "b1\ta1\tAB")
        open(paths[2], "w").write("\n".join(text) + "\n")
        with pytest.raises(FormatError, match=r"edges.tsv:3: .*does not fit"):
            io.load_graph(*paths)

    def test_bad_schema_line(self, tmp_path):
        f = tmp_path / "s.tsv"
        f.write_text("TYPE\tA\nRELATION\tx\n")
        with pytest.raises(FormatError, match=r"s.tsv:2: "):
            io.read_schema(f)

    def test_ranked_list_must_be_sorted(self, tmp_path):
        f = tmp_path / "r.tsv"
        f.write_text("a\t0.1\nb\t0.5\n")
        with pytest.raises(FormatError, match=r"r.tsv:2: "):
            io.read_ranked(f)


class TestValidate:
    def test_toy(self, toy_files, capsys):
        code, out, _ = run(["validate", *toy_files], capsys)
        assert code == 0
        assert out.strip() == "2 A, 4 B, 6 AB edges"

    def test_unknown_node(self, toy_files, capsys):
        with open(toy_files[5], "a") as fh:
            fh.write("a9\tb1\tAB\n")
        code, _, err = run(["validate", *toy_files], capsys)
        assert code == 2
        assert "edges.tsv:7:" in err and "a9" in err

    def test_empty_edges(self, toy_files, capsys):
        open(toy_files[5], "w").close()
        code, out, _ = run(["validate", *toy_files], capsys)
        assert code == 0 and out.strip() == "2 A, 4 B, 0 AB edges"


class TestCompute:
    def test_toy_raw(self, toy_files, tmp_path, capsys):
        out = tmp_path / "ab.tsv"
        assert run(["compute", *toy_files, "--path", "A-B", "--raw", "--out", str(out)], capsys)[0] == 0
        lines = open(out).read().splitlines()
        assert [l.split("\t")[0] for l in lines[:3]] == ["# path", "# strategy", "# graph-hash"]
        rows = [l.split("\t") for l in lines[3:]]
        assert len(rows) == 6
        a2 = {c: float(v) for r, c, v in rows if r == "a2"}
        assert a2 == pytest.approx({"b2": 1 / 6, "b3": 1 / 3, "b4": 1 / 6}, abs=1e-12)
        timing = json.load(open(f"{out}.timing.json"))
        for key in ("mul_seconds", "rel_seconds", "total_seconds", "peak_nnz"):
            assert key in timing

    def test_normalised_variant(self, toy_files, tmp_path, capsys):
        out = tmp_path / "ab.tsv"
        run(["compute", *toy_files, "--path", "A-B", "--out", str(out)], capsys)
        a2 = {c: float(v) for r, c, v in (l.split("\t") for l in data_lines(out)) if r == "a2"}
        assert a2["b3"] == pytest.approx(1 / np.sqrt(3), abs=1e-11)

    def test_dp_matches_exact(self, bench_files, tmp_path, capsys):
        for s in ("exact", "dp"):
            run(["compute", *bench_files, "--path", "A-P-T-P-A", "--strategy", s, "--out", str(tmp_path / s)], capsys)
        assert data_lines(tmp_path / "exact") == data_lines(tmp_path / "dp")

    def test_mc_is_reproducible(self, bench_files, tmp_path, capsys):
        for name in ("m1", "m2"):
            argv = ["compute", *bench_files, "--path", "A-P-C-P-A", "--strategy", "mc", "--K", "50", "--seed", "4"]
            run(argv + ["--out", str(tmp_path / name)], capsys)
        assert open(tmp_path / "m1").read() == open(tmp_path / "m2").read()

    @pytest.mark.parametrize("measure, path", [("pcrw", "A-B"), ("pathsim", "A-B-A"), ("simrank", "A-B-A")])
    def test_other_measures(self, toy_files, measure, path, capsys):
        code, out, _ = run(["compute", *toy_files, "--path", path, "--measure", measure], capsys)
        assert code == 0 and out.startswith("# path")

    def test_bad_parameter_is_usage_error(self, toy_files, capsys):
        assert run(["compute", *toy_files, "--path", "A-B", "--W", "0"], capsys)[0] == 1
        assert run(["compute", *toy_files, "--path", "A-Q"], capsys)[0] == 1
        assert run(["compute", *toy_files], capsys)[0] == 1


class TestQuery:
    def test_top_two(self, toy_files, capsys):
        code, out, _ = run(["query", *toy_files, "--path", "A-B", "--source", "a2", "--topk", "2"], capsys)
        rows = [l.split("\t") for l in out.splitlines()]
        assert code == 0 and [r[0] for r in rows] == ["b3", "b2"]
        assert float(rows[0][1]) == pytest.approx(0.57735, abs=1e-5)

    def test_k_larger_than_type(self, toy_files, capsys):
        _, out, _ = run(["query", *toy_files, "--path", "A-B", "--source", "a2", "--topk", "50"], capsys)
        assert [l.split("\t")[0] for l in out.splitlines()] == ["b3", "b2", "b4"]

    def test_dangling_source(self, tmp_path, capsys):
        g = toy_graph()
        paths = io.write_graph(g, tmp_path)
        with open(paths[1], "a") as fh:
            fh.write("a3\tA\n")
        argv = ["query", "--schema", str(paths[0]), "--nodes", str(paths[1]), "--edges", str(paths[2])]
        code, out, _ = run(argv + ["--path", "A-B", "--source", "a3"], capsys)
        assert code == 0 and out == ""

    def test_unknown_or_mistyped_source(self, toy_files, capsys):
        assert run(["query", *toy_files, "--path", "A-B", "--source", "zz"], capsys)[0] == 2
        assert run(["query", *toy_files, "--path", "A-B", "--source", "b1"], capsys)[0] == 2

    def test_sampling_strategy(self, toy_files, capsys):
        code, out, _ = run(["query", *toy_files, "--path", "A-B-A", "--source", "a2", "--strategy", "mc"], capsys)
        assert code == 0 and out.splitlines()[0].startswith("a2\t1")


class TestMaterialize:
    def test_store_and_query(self, bench_files, tmp_path, capsys):
        store = tmp_path / "store"
        for path in ("A-P-C-P-A", "A-P-T"):
            assert run(["materialize", *bench_files, "--path", path, "--store", str(store)], capsys)[0] == 0
        manifest = json.load(open(store / "manifest.json"))
        assert sorted(e["path"] for e in manifest["entries"]) == ["AP.PC.PC~.AP~", "AP.PT"]
        direct = run(["query", *bench_files, "--path", "A-P-C-P-A", "--source", "a3", "--topk", "15"], capsys)[1]
        stored = run(["query", *bench_files, "--path", "A-P-C-P-A", "--source", "a3", "--topk", "15", "--store", str(store)], capsys)
        assert stored[1] == direct and stored[2] == ""

    def test_rematerialize_replaces_entry(self, toy_files, tmp_path, capsys):
        store = tmp_path / "s"
        for _ in range(2):
            run(["materialize", *toy_files, "--path", "A-B", "--store", str(store)], capsys)
        assert len(json.load(open(store / "manifest.json"))["entries"]) == 1

    def test_stale_store_warns(self, toy_files, tmp_path, capsys):
        store = tmp_path / "s"
        run(["materialize", *toy_files, "--path", "A-B-A", "--store", str(store)], capsys)
        with open(toy_files[5], "a") as fh:
            fh.write("a2\tb1\tAB\n")
        code, out, err = run(["query", *toy_files, "--path", "A-B-A", "--source", "a2", "--store", str(store)], capsys)
        assert code == 0 and "stale" in err
        assert out.splitlines()[1].split("\t")[0] == "a1"


class TestBench:
    def test_report(self, bench_files, capsys):
        argv = ["bench", *bench_files, "--path", "A-P-C-P-A", "A-P-T-P-A", "--strategy", "exact", "dp", "--reps", "5"]
        code, out, _ = run(argv, capsys)
        assert code == 0
        rows = list(csv.DictReader(stdio.StringIO(out)))
        assert list(rows[0]) == ["path", "strategy", "rep", "mul_seconds", "rel_seconds", "total_seconds", "recall_at_100"]
        assert len(rows) == 2 * 2 * 6
        for cell in range(4):
            block = rows[cell * 6 : cell * 6 + 6]
            assert [r["rep"] for r in block] == ["0", "1", "2", "3", "4", "mean"]
        assert all(float(r["recall_at_100"]) == 1.0 for r in rows if r["strategy"] == "dp")


class TestMetricsCommand:
    def test_auc(self, tmp_path, capsys):
        (tmp_path / "r.tsv").write_text("x\t0.9\ny\t0.5\nz\t0.1\n")
        (tmp_path / "l.tsv").write_text("x\tDB\ny\tAI\nz\tDB\n")
        argv = ["metrics", "auc", "--ranked", str(tmp_path / "r.tsv"), "--labels", str(tmp_path / "l.tsv"), "--positive", "DB"]
        code, out, _ = run(argv, capsys)
        assert code == 0 and out == "auc\t0.5\n"

    def test_nmi_and_recall_and_rankdiff(self, tmp_path, capsys):
        (tmp_path / "a.tsv").write_text("x\t1\ny\t1\nz\t2\n")
        code, out, _ = run(["metrics", "nmi", "--clustering", str(tmp_path / "a.tsv"), "--truth", str(tmp_path / "a.tsv")], capsys)
        assert out == "nmi_arithmetic\t1\n"
        (tmp_path / "r.tsv").write_text("x\t3\ny\t2\nz\t1\n")
        (tmp_path / "q.tsv").write_text("z\t3\ny\t2\nx\t1\n")
        _, out, _ = run(["metrics", "recall", "--exact", str(tmp_path / "r.tsv"), "--approx", str(tmp_path / "q.tsv"), "--topk", "1"], capsys)
        assert out == "recall\t0\n"
        _, out, _ = run(["metrics", "rankdiff", "--ranked", str(tmp_path / "q.tsv"), "--truth", str(tmp_path / "r.tsv"), "--topk", "3"], capsys)
        assert out == "rankdiff\t1.33333333333\n"

    def test_missing_option(self, capsys):
        assert run(["metrics", "auc"], capsys)[0] == 1

    def test_degenerate_labels_is_data_error(self, tmp_path, capsys):
        (tmp_path / "r.tsv").write_text("x\t0.9\n")
        (tmp_path / "l.tsv").write_text("x\tDB\n")
        argv = ["metrics", "auc", "--ranked", str(tmp_path / "r.tsv"), "--labels", str(tmp_path / "l.tsv"), "--positive", "DB"]
        assert run(argv, capsys)[0] == 2


def test_generate_and_validate(tmp_path, capsys):
    code, out, _ = run(["generate", "bench", "--seed", "1", "--out", str(tmp_path)], capsys)
    assert code == 0
    files = out.split()
    code, out, _ = run(["validate", "--schema", files[0], "--nodes", files[1], "--edges", files[2]], capsys)
    assert code == 0 and out.startswith("1500 A")


def test_internal_error_exit_code(monkeypatch, toy_files, capsys):
    def broken(args):
        raise AssertionError("row sums exceed one")

    monkeypatch.setitem(cli.COMMANDS, "validate", broken)
    assert run(["validate", *toy_files], capsys)[0] == 3


def test_unknown_command(capsys):
    assert run(["frobnicate"], capsys)[0] == 1
