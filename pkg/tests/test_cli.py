import csv

import numpy as np
import pytest

from gridot import GridShape, from_dense, load_csv, write_csv
from gridot.cli import main

from conftest import random_integer_pair


def write_pair(tmp_path, dims=(4, 4), seed=0, total=200):
    shape = GridShape(dims)
    mu, nu = random_integer_pair(shape, total, np.random.default_rng(seed))
    a = tmp_path / "mu.csv"
    b = tmp_path / "nu.csv"
    write_csv(mu, a)
    write_csv(nu, b)
    return a, b


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestCompute:
    def test_identical_files_distance_zero(self, tmp_path, capsys):
        a, _ = write_pair(tmp_path)
        assert main(["compute", str(a), str(a), "--total", "1000"]) == 0
        out = capsys.readouterr().out
        assert "distance: 0" in out
        assert "objective: 0" in out

    def test_diagonal_fixture(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        a.write_text("# shape: 2,2\n1\n0\n0\n0\n")
        b.write_text("# shape: 2,2\n0\n0\n0\n1\n")
        assert main(["compute", str(a), str(b), "--p", "2", "--total", "1"]) == 0
        out = capsys.readouterr().out
        assert "objective: 2" in out
        assert "distance: 1.41421356237" in out

    def test_methods_print_identical_objectives(self, tmp_path, capsys):
        a, b = write_pair(tmp_path, seed=3)
        main(["compute", str(a), str(b), "--method", "multipartite", "--total", "500"])
        line_multi = [l for l in capsys.readouterr().out.splitlines() if l.startswith("objective")]
        main(["compute", str(a), str(b), "--method", "bipartite", "--total", "500"])
        line_bip = [l for l in capsys.readouterr().out.splitlines() if l.startswith("objective")]
        assert line_multi == line_bip

    def test_report_includes_graph_sizes_and_pivots(self, tmp_path, capsys):
        a, b = write_pair(tmp_path, seed=4)
        main(["compute", str(a), str(b), "--total", "300"])
        out = capsys.readouterr().out
        for key in ("nodes:", "arcs:", "runtime_s:", "pivots:", "distance:", "objective:"):
            assert key in out

    def test_plan_and_dimacs_outputs(self, tmp_path, capsys):
        a, b = write_pair(tmp_path, dims=(3, 3), seed=5, total=50)
        plan_out = tmp_path / "plan.csv"
        dimacs_out = tmp_path / "net.dimacs"
        code = main([
            "compute", str(a), str(b), "--total", "50",
            "--plan-out", str(plan_out), "--dimacs-out", str(dimacs_out),
        ])
        assert code == 0
        assert plan_out.read_text().startswith("# columns: x1,x2,y1,y2,mass")
        assert dimacs_out.read_text().splitlines()[1].startswith("p min ")

    def test_sinkhorn_methods(self, tmp_path, capsys):
        a, b = write_pair(tmp_path, seed=6)
        for method in ("sinkhorn", "improved-sinkhorn"):
            code = main([
                "compute", str(a), str(b), "--method", method,
                "--lambda", "3", "--max-iters", "500", "--tol", "1e-9",
            ])
            assert code == 0
            out = capsys.readouterr().out
            assert "upper_bound:" in out
            assert "iterations:" in out

    def test_sinkhorn_rejects_plan_out(self, tmp_path, capsys):
        a, b = write_pair(tmp_path, seed=7)
        code = main(["compute", str(a), str(b), "--method", "sinkhorn",
                     "--plan-out", str(tmp_path / "p.csv")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        code = main(["compute", str(tmp_path / "nope.csv"), str(tmp_path / "nope.csv")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_pgm_input(self, tmp_path, capsys):
        a, _ = write_pair(tmp_path, dims=(2, 3), seed=8, total=20)
        img = tmp_path / "img.pgm"
        img.write_text("P2\n3 2\n9\n1 2 3 4 5 6\n")
        assert main(["compute", str(a), str(img), "--total", "100"]) == 0

    def test_unknown_method_rejected_by_parser(self, tmp_path):
        a, b = write_pair(tmp_path, seed=9)
        with pytest.raises(SystemExit):
            main(["compute", str(a), str(b), "--method", "nope"])


class TestBatch:
    def make_dir(self, tmp_path, k, dims=(3, 3), identical=False):
        d = tmp_path / "hists"
        d.mkdir()
        shape = GridShape(dims)
        rng = np.random.default_rng(1)
        base, _ = random_integer_pair(shape, 60, rng)
        for i in range(k):
            h = base if identical else random_integer_pair(shape, 60, rng)[0]
            write_csv(h, d / f"h{i:02d}.csv")
        return d

    def test_ten_files_give_45_rows(self, tmp_path):
        d = self.make_dir(tmp_path, 10)
        out = tmp_path / "batch.csv"
        assert main(["batch", str(d), "--total", "60", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 46
        assert rows[-1]["file_a"] == "summary"
        assert all(r["status"] == "ok" for r in rows[:-1])

    def test_identical_files_all_zero(self, tmp_path):
        d = self.make_dir(tmp_path, 3, identical=True)
        out = tmp_path / "batch.csv"
        main(["batch", str(d), "--total", "60", "--out", str(out)])
        rows = read_rows(out)
        assert len(rows) == 4
        for r in rows[:-1]:
            assert r["distance"] == "0"

    def test_summary_statistics(self, tmp_path):
        d = self.make_dir(tmp_path, 3, identical=True)
        out = tmp_path / "batch.csv"
        main(["batch", str(d), "--total", "60", "--out", str(out)])
        summary = read_rows(out)[-1]
        mean = float(summary["runtime_s"])
        std = float(summary["runtime_stddev_s"])
        assert mean >= 0
        # trivial identical solves take near-constant time
        assert 0 <= std < 0.1

    def test_errors_recorded_and_batch_continues(self, tmp_path):
        d = self.make_dir(tmp_path, 3)
        (d / "broken.csv").write_text("not a histogram\n")
        out = tmp_path / "batch.csv"
        assert main(["batch", str(d), "--total", "60", "--out", str(out)]) == 0
        rows = read_rows(out)
        errors = [r for r in rows if r["status"] == "error"]
        oks = [r for r in rows if r["status"] == "ok"]
        assert len(errors) == 3
        assert len(oks) == 3
        assert all(r["error"] for r in errors)

    def test_jobs_match_serial(self, tmp_path):
        d = self.make_dir(tmp_path, 4)
        out1 = tmp_path / "serial.csv"
        out2 = tmp_path / "par.csv"
        main(["batch", str(d), "--total", "60", "--out", str(out1)])
        main(["batch", str(d), "--total", "60", "--jobs", "3", "--out", str(out2)])
        key = lambda rows: [(r["file_a"], r["file_b"], r["objective"]) for r in rows[:-1]]
        assert key(read_rows(out1)) == key(read_rows(out2))

    def test_needs_two_files(self, tmp_path, capsys):
        d = tmp_path / "one"
        d.mkdir()
        write_csv(from_dense(GridShape((2,)), [1, 1]), d / "only.csv")
        assert main(["batch", str(d)]) == 1
        assert "error:" in capsys.readouterr().err


class TestBench:
    def test_multipartite_sizes_row(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main([
            "bench", "--sizes", "16", "--dims", "2", "--methods", "multipartite",
            "--pairs", "2", "--total", "2000", "--seed", "5", "--out", str(out),
        ])
        assert code == 0
        rows = read_rows(out)
        assert len(rows) == 1
        r = rows[0]
        assert (r["N"], r["d"], r["method"]) == ("16", "2", "multipartite")
        assert (r["nodes"], r["arcs"]) == ("768", "8192")
        assert r["status"] == "ok"
        assert float(r["mean_runtime_s"]) > 0

    def test_oom_row_keeps_size_columns(self, tmp_path):
        out = tmp_path / "bench.csv"
        main([
            "bench", "--sizes", "16", "--dims", "3",
            "--methods", "bipartite,multipartite", "--pairs", "1",
            "--total", "1000", "--max-arcs", "1000000", "--out", str(out),
        ])
        rows = {r["method"]: r for r in read_rows(out)}
        assert rows["bipartite"]["status"] == "oom"
        assert rows["bipartite"]["arcs"] == "16777216"
        assert rows["bipartite"]["mean_runtime_s"] == ""
        assert rows["multipartite"]["status"] == "ok"

    def test_seeded_generation_is_deterministic(self, tmp_path):
        outs = []
        for name in ("b1.csv", "b2.csv"):
            out = tmp_path / name
            main([
                "bench", "--sizes", "4,8", "--dims", "2", "--methods", "multipartite",
                "--pairs", "2", "--total", "500", "--seed", "13", "--out", str(out),
            ])
            rows = read_rows(out)
            outs.append([
                {k: v for k, v in r.items() if "runtime" not in k} for r in rows
            ])
        assert outs[0] == outs[1]

    def test_jobs_flag(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main([
            "bench", "--sizes", "8", "--dims", "2", "--methods", "multipartite",
            "--pairs", "3", "--jobs", "3", "--total", "500", "--out", str(out),
        ])
        assert code == 0
        assert read_rows(out)[0]["status"] == "ok"

    def test_rejects_scaling_methods(self, capsys):
        assert main(["bench", "--methods", "sinkhorn"]) == 1
        assert "error:" in capsys.readouterr().err


class TestVerify:
    def test_agreement_suite_passes(self, capsys):
        assert main(["verify", "--trials", "6", "--seed", "2"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 3
        assert "FAIL" not in out


class TestBin:
    def test_binning_corners(self, tmp_path, capsys):
        pts = tmp_path / "pts.csv"
        pts.write_text("0.0,0.0\n0.99,0.99\n")
        out = tmp_path / "h.csv"
        code = main([
            "bin", str(pts), "--shape", "2,2", "--bounds", "0:1,0:1",
            "--out", str(out),
        ])
        assert code == 0
        h = load_csv(out)
        assert list(h.mass) == [1, 0, 0, 1]

    def test_default_bounds(self, tmp_path):
        pts = tmp_path / "pts.csv"
        pts.write_text("0.0\n1.0\n2.0\n3.0\n")
        out = tmp_path / "h.csv"
        main(["bin", str(pts), "--shape", "2", "--out", str(out)])
        assert list(load_csv(out).mass) == [2, 2]
