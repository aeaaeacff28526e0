import json
import subprocess
import sys

import pytest

from resonet.cli import main

SCENE = {
    "objects": [
        {"color": "cyan", "digit": 7, "v": "top", "h": "left"},
        {"color": "pink", "digit": 3, "v": "top", "h": "right"},
        {"color": "red", "digit": 8, "v": "middle", "h": "left"},
    ]
}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def make_problem_files(tmp_path, capsys, dim=256, size=8):
    labels = ",".join(str(i) for i in range(size))
    paths = []
    for name in ("x", "y", "z"):
        path = tmp_path / f"cb_{name}.json"
        code, _, _ = run(capsys, "codebook", "--name", name, "--labels", labels, "--dim", dim,
                         "--seed", 3, "--output", path.name, "--out-dir", tmp_path)
        assert code == 0
        paths.append(str(path))
    code, _, _ = run(capsys, "product", "--codebooks", *paths, "--labels", "1,2,3",
                     "--output", "input.json", "--out-dir", tmp_path)
    assert code == 0
    return paths, str(tmp_path / "input.json")


class TestTree:
    def test_query_label(self, tmp_path, capsys):
        code, out, _ = run(capsys, "tree", "--query-label", "c", "--out-dir", tmp_path)
        assert code == 0
        assert out.strip() == "RRL"
        for d in range(5):
            lines = (tmp_path / f"trajectory_depth{d}.csv").read_text().splitlines()
            assert lines[0] == "L,R,STOP"
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["subcommand"] == "tree"
        assert manifest["config"]["dim"] == 2048
        assert "trajectory_depth0.csv" in manifest["artifacts"]

    def test_query_path(self, tmp_path, capsys):
        code, out, _ = run(capsys, "tree", "--query-path", "LRL", "--out-dir", tmp_path)
        assert code == 0 and out.strip() == "b"

    def test_absent_path(self, tmp_path, capsys):
        code, out, _ = run(capsys, "tree", "--query-path", "LLR", "--out-dir", tmp_path)
        assert code == 0 and out.strip() == "no leaf"

    def test_tree_file_roundtrip(self, tmp_path, capsys):
        src = tmp_path / "in.json"
        src.write_text(json.dumps({"max_depth": 3, "leaves": [{"path": "LRL", "label": "b"},
                                                               {"path": "RR", "label": "q"}]}))
        code, out, _ = run(capsys, "tree", src, "--query-label", "q", "--dim", 1024,
                           "--out-dir", tmp_path / "o")
        assert code == 0 and out.strip() == "RR"
        written = json.loads((tmp_path / "o" / "tree.json").read_text())
        assert written == json.loads(src.read_text())

    def test_malformed_tree(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run(capsys, "tree", bad, "--query-path", "L", "--out-dir", tmp_path)
        assert code == 2 and "error" in err
        bad.write_text(json.dumps({"leaves": [{"path": "L", "label": "a"}, {"path": "LR", "label": "b"}]}))
        code, _, err = run(capsys, "tree", bad, "--query-path", "L", "--out-dir", tmp_path)
        assert code == 2 and "prefix" in err

    def test_unknown_label(self, tmp_path, capsys):
        code, _, _ = run(capsys, "tree", "--query-label", "zz", "--out-dir", tmp_path)
        assert code == 2

    def test_non_convergence_is_not_fatal(self, tmp_path, capsys):
        code, out, _ = run(capsys, "tree", "--query-label", "f", "--dim", 32, "--max-iters", 1,
                           "--out-dir", tmp_path)
        assert code == 0
        result = json.loads((tmp_path / "result.json").read_text())
        assert result["reliable"] is False
        assert result["result"]["converged"] is False
        assert "unreliable" in out


class TestScene:
    def test_example_scene(self, tmp_path, capsys):
        src = tmp_path / "scene.json"
        src.write_text(json.dumps(SCENE))
        code, out, _ = run(capsys, "scene", src, "--out-dir", tmp_path / "o")
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 4 and lines[-1] == "correct: yes"
        result = json.loads((tmp_path / "o" / "result.json").read_text())
        got = {(o["color"], o["digit"], o["v"], o["h"]) for o in result["objects"]}
        assert got == {(o["color"], o["digit"], o["v"], o["h"]) for o in SCENE["objects"]}

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_random_single_exact(self, tmp_path, capsys, seed):
        code, out, _ = run(capsys, "scene", "--random", "--objects", 1, "--similarity", 1.0,
                           "--seed", seed, "--trajectories", "--out-dir", tmp_path)
        assert code == 0 and out.strip().endswith("correct: yes")
        assert (tmp_path / "trajectory_obj0_color.csv").exists()

    def test_sweep(self, tmp_path, capsys):
        code, _, _ = run(capsys, "scene", "--sweep", "--trials", 3, "--counts", "1,2",
                         "--similarities", "0.8,1.0", "--out-dir", tmp_path)
        assert code == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == "object_count,target_similarity,trials,correct,accuracy"
        assert len(lines) == 5

    def test_invalid(self, tmp_path, capsys):
        assert run(capsys, "scene", "--out-dir", tmp_path)[0] == 2
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"objects": [{"color": "mauve", "digit": 1, "v": "top", "h": "left"}]}))
        assert run(capsys, "scene", bad, "--out-dir", tmp_path)[0] == 2
        assert run(capsys, "scene", "--random", "--objects", 1, "--similarity", 0,
                   "--out-dir", tmp_path)[0] == 2


class TestSolve:
    def test_exact(self, tmp_path, capsys):
        cbs, inp = make_problem_files(tmp_path, capsys)
        code, out, _ = run(capsys, "solve", "--codebooks", *cbs, "--input", inp, "--out-dir", tmp_path / "s")
        assert code == 0
        result = json.loads((tmp_path / "s" / "result.json").read_text())["resonator"]
        assert result["labels"] == ["1", "2", "3"] and result["residual"] == 1.0
        assert result["converged"] is True
        lines = (tmp_path / "s" / "trajectory_0_x.csv").read_text().splitlines()
        assert len(lines) == result["iterations"] + 1

    def test_oracle(self, tmp_path, capsys):
        cbs, inp = make_problem_files(tmp_path, capsys)
        code, out, _ = run(capsys, "solve", "--codebooks", *cbs, "--input", inp, "--oracle",
                           "--out-dir", tmp_path / "s")
        assert code == 0
        assert "oracle:" in out and "agreement: yes" in out
        assert json.loads((tmp_path / "s" / "result.json").read_text())["agree"] is True

    def test_oracle_guard(self, tmp_path, capsys):
        cbs, inp = make_problem_files(tmp_path, capsys, dim=64, size=101)
        code, _, err = run(capsys, "solve", "--codebooks", *cbs, "--input", inp, "--oracle",
                           "--max-iters", 2, "--out-dir", tmp_path / "s")
        assert code == 2 and "oracle" in err

    def test_dim_mismatch(self, tmp_path, capsys):
        cbs, inp = make_problem_files(tmp_path, capsys)
        run(capsys, "codebook", "--name", "w", "--labels", "a,b", "--dim", 128,
            "--output", "w.json", "--out-dir", tmp_path)
        code, _, _ = run(capsys, "solve", "--codebooks", cbs[0], str(tmp_path / "w.json"),
                         "--input", inp, "--out-dir", tmp_path / "s")
        assert code == 2

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "solve", "--codebooks", "nope.json", "nope2.json",
                           "--input", "x.json", "--out-dir", tmp_path)
        assert code == 2 and "cannot read" in err

    def test_bad_label(self, tmp_path, capsys):
        cbs, _ = make_problem_files(tmp_path, capsys)
        code, _, _ = run(capsys, "product", "--codebooks", *cbs, "--labels", "1,2,99",
                         "--out-dir", tmp_path)
        assert code == 2


class TestBench:
    def test_flags(self, tmp_path, capsys):
        code, out, _ = run(capsys, "bench", "--dims", "64", "--sizes", "5,10", "--trials", 3,
                           "--kernel-timings", "--repetitions", 2, "--out-dir", tmp_path)
        assert code == 0 and "max D" in out
        assert (tmp_path / "capacity.csv").read_text().startswith("N,D,F,trials,accuracy")
        assert (tmp_path / "timings.csv").exists()

    def test_experiment_file(self, tmp_path, capsys):
        exp = tmp_path / "exp.json"
        exp.write_text(json.dumps({"dims": [128], "codebook_sizes": [5], "trials": 2}))
        code, _, _ = run(capsys, "bench", "--experiment", exp, "--out-dir", tmp_path / "o")
        assert code == 0
        exp.write_text(json.dumps({"dims": [128], "nonsense": 1}))
        assert run(capsys, "bench", "--experiment", exp, "--out-dir", tmp_path / "o")[0] == 2


class TestReplay:
    def test_byte_identical(self, tmp_path, capsys):
        src = tmp_path / "scene.json"
        src.write_text(json.dumps(SCENE))
        run(capsys, "scene", str(src), "--trajectories", "--out-dir", tmp_path / "a")
        code, _, _ = run(capsys, "replay", tmp_path / "a" / "manifest.json", "--out-dir", tmp_path / "b")
        assert code == 0
        names = json.loads((tmp_path / "a" / "manifest.json").read_text())["artifacts"]
        for name in names + ["manifest.json"]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_bad_manifest(self, tmp_path, capsys):
        bad = tmp_path / "m.json"
        bad.write_text("[]")
        assert run(capsys, "replay", bad, "--out-dir", tmp_path / "o")[0] == 2


def test_usage_errors_exit_2(capsys):
    assert main([]) == 2
    assert main(["tree"]) == 2
    assert main(["bogus"]) == 2


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "resonet.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
