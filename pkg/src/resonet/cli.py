"""Command-line entry point: ``resonet <subcommand> ...``.

Every subcommand writes its artifacts plus ``manifest.json`` into
``--out-dir``. ``resonet replay manifest.json`` re-runs the recorded command
line into a new directory. Exit status is 0 when a run completes (including
runs that fail to converge) and 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bench import CapacityExperiment, capacity_summary, kernel_timings, rows_to_csv, run_capacity
from .codebook import build_codebook, codebook_from_json, codebook_to_json
from .resonator import FactorizationProblem, ResonatorConfig, brute_force_oracle, solve
from .scene import (
    SceneCodebooks,
    SceneDescription,
    accuracy_sweep,
    encode_scene,
    noisy_scene,
    parse_scene,
    random_scene,
    scene_correct,
    sweep_to_csv,
)
from .tree import TreeDescription, TreeMemory, demo_tree
from .vsa import bind_all
from .vsa import from_json as vector_from_json
from .vsa import to_json as vector_to_json

MANIFEST = "manifest.json"


class UsageError(Exception):
    """Invalid input or configuration; reported with exit status 2."""


# ---------------------------------------------------------------------------
# output helpers


class Run:
    """Collects the artifacts of one invocation and writes the manifest."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str]):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.artifacts: list = []
        self.inputs: dict = {}

    def read_json(self, path: str):
        p = Path(path)
        try:
            data = p.read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
        self.inputs[str(path)] = hashlib.sha256(data).hexdigest()
        try:
            return json.loads(data)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path} is not valid JSON: {exc}") from exc

    def write_json(self, name: str, obj) -> None:
        (self.out / name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        self.artifacts.append(name)

    def write_text(self, name: str, text: str) -> None:
        (self.out / name).write_text(text)
        self.artifacts.append(name)

    def write_trajectory(self, name: str, labels: Sequence[str], trajectory, factor: int) -> None:
        lines = _csv_lines([list(labels)] + [[float(x) for x in step[factor]] for step in trajectory])
        self.write_text(name, lines)

    def finish(self, seeds: dict) -> None:
        config = {k: v for k, v in vars(self.args).items() if k not in ("func", "out_dir")}
        manifest = {
            "subcommand": self.args.command,
            "config": config,
            "seeds": seeds,
            "inputs": self.inputs,
            "artifacts": sorted(self.artifacts),
            "version": __version__,
            "argv": self.argv,
        }
        (self.out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _csv_lines(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _config(args, record: bool = True) -> ResonatorConfig:
    return ResonatorConfig(
        max_iterations=args.max_iters,
        record_trajectory=record,
        seed=args.seed,
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_codebook(args, run: Run) -> None:
    labels = [s for s in args.labels.split(",") if s]
    cb = build_codebook(args.name, labels, args.dim, args.seed)
    run.write_json(args.output, codebook_to_json(cb))
    print(f"codebook {cb.name}: {cb.size} entries at N={cb.dim}")
    run.finish({"seed": args.seed})


def _load_codebooks(run: Run, paths) -> tuple:
    return tuple(codebook_from_json(run.read_json(p)) for p in paths)


def cmd_product(args, run: Run) -> None:
    cbs = _load_codebooks(run, args.codebooks)
    labels = args.labels.split(",")
    if len(labels) != len(cbs):
        raise UsageError(f"{len(cbs)} codebooks but {len(labels)} labels")
    for cb, label in zip(cbs, labels):
        if label not in cb:
            raise UsageError(f"label {label!r} not in codebook {cb.name!r}")
    v = bind_all(cb[label] for cb, label in zip(cbs, labels))
    if args.similarity is not None:
        from .scene import corrupt_to_similarity

        v = corrupt_to_similarity(v, args.similarity, args.seed)
    run.write_json(args.output, vector_to_json(v))
    print(f"product of {','.join(labels)} at N={v.dim}")
    run.finish({"seed": args.seed})


def cmd_solve(args, run: Run) -> None:
    cbs = _load_codebooks(run, args.codebooks)
    s = vector_from_json(run.read_json(args.input))
    problem = FactorizationProblem(s, cbs)
    result, state = solve(problem, _config(args))
    out = {"resonator": result.to_json()}
    print(f"resonator: {','.join(result.labels)} residual={result.residual_similarity:.4f}"
          f" converged={result.converged} iterations={result.iterations_used}")
    if not result.converged:
        print("unreliable: resonator did not reach a fixed point")
    if args.oracle:
        oracle = brute_force_oracle(problem, normalize=True)
        agree = oracle.labels == result.labels
        out["oracle"] = {"labels": list(oracle.labels), "residual": oracle.residual_similarity}
        out["agree"] = agree
        print(f"oracle:    {','.join(oracle.labels)} residual={oracle.residual_similarity:.4f}")
        print(f"agreement: {'yes' if agree else 'no'}")
    run.write_json("result.json", out)
    for f, cb in enumerate(cbs):
        run.write_trajectory(f"trajectory_{f}_{cb.name}.csv", cb.labels, state.trajectory, f)
    run.finish({"seed": args.seed})


def cmd_tree(args, run: Run) -> None:
    if args.tree is None:
        desc = demo_tree()
    else:
        try:
            desc = TreeDescription.from_json(run.read_json(args.tree))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    memory = TreeMemory.build(desc, args.dim, args.seed)
    run.write_json("tree.json", desc.to_json())
    out: dict = {"dim": args.dim}
    if args.query_path is not None:
        answer = memory.label_at(args.query_path)
        out.update(query="path", path=args.query_path, label=answer.label,
                   weight=answer.weight, best_label=answer.best_label)
        print(answer.label if answer.label is not None else "no leaf")
    else:
        if args.query_label not in memory.leaf_codebook:
            raise UsageError(f"label {args.query_label!r} is not a leaf of this tree")
        answer = memory.path_of(args.query_label, _config(args))
        out.update(query="label", label=args.query_label, path=answer.path,
                   reliable=answer.reliable, result=answer.result.to_json())
        for d, cb in enumerate(memory.path_codebooks):
            run.write_trajectory(f"trajectory_depth{d}.csv", cb.labels, answer.trajectory, d)
        print((answer.path or "(empty path)") + ("" if answer.reliable else " unreliable"))
    run.write_json("result.json", out)
    run.finish({"seed": args.seed})


def cmd_scene(args, run: Run) -> None:
    if args.sweep:
        sims = [float(x) for x in args.similarities.split(",")]
        counts = [int(x) for x in args.counts.split(",")]
        rows = accuracy_sweep(counts, sims, args.trials, args.dim, args.seed,
                              ResonatorConfig(max_iterations=args.max_iters, record_trajectory=False),
                              jobs=args.jobs)
        run.write_text("sweep.csv", sweep_to_csv(rows))
        for row in rows:
            print(f"objects={row['object_count']} similarity={row['target_similarity']}"
                  f" accuracy={row['accuracy']:.3f}")
        run.finish({"seed": args.seed})
        return
    if args.random:
        desc = random_scene(args.objects, args.seed)
    elif args.scene is not None:
        try:
            desc = SceneDescription.from_json(run.read_json(args.scene))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        raise UsageError("give a scene file or --random")
    codebooks = SceneCodebooks.build(args.dim, args.seed)
    if args.similarity is None:
        s = encode_scene(desc, codebooks)
    else:
        s = noisy_scene(desc, codebooks, args.similarity, args.seed).vector
    max_objects = args.max_objects or len(desc.objects)
    parsed = parse_scene(s, codebooks, max_objects, _config(args, record=args.trajectories))
    correct = scene_correct(parsed, desc)
    for k, p in enumerate(parsed):
        flag = "" if p.result.converged else " unreliable"
        print(f"{p.object} residual={p.agreement:.4f}{flag}")
        if args.trajectories:
            for f, cb in enumerate(codebooks.all):
                run.write_trajectory(f"trajectory_obj{k}_{cb.name}.csv", cb.labels, p.trajectory, f)
    print(f"correct: {'yes' if correct else 'no'}")
    run.write_json("scene.json", desc.to_json())
    run.write_json("result.json", {
        "objects": [
            {"color": p.object.color, "digit": int(p.object.digit), "v": p.object.v, "h": p.object.h,
             "residual": p.agreement, **{k: v for k, v in p.result.to_json().items() if k != "labels"}}
            for p in parsed
        ],
        "correct": correct,
    })
    run.finish({"seed": args.seed})


def cmd_bench(args, run: Run) -> None:
    if args.experiment is not None:
        try:
            exp = CapacityExperiment.from_json(run.read_json(args.experiment))
        except (ValueError, TypeError) as exc:
            raise UsageError(str(exc)) from exc
    else:
        exp = CapacityExperiment(
            dims=tuple(int(x) for x in args.dims.split(",")),
            codebook_sizes=tuple(int(x) for x in args.sizes.split(",")),
            factor_count=args.factors,
            trials=args.trials,
            seed=args.seed,
            max_iterations=args.max_iters,
        )
    run.write_json("experiment.json", exp.to_json())
    rows = run_capacity(exp, jobs=args.jobs)
    run.write_text("capacity.csv", rows_to_csv(rows))
    for (n, f), d in sorted(capacity_summary(rows, exp.accuracy_threshold).items()):
        print(f"N={n} F={f}: max D at accuracy >= {exp.accuracy_threshold}: {d}")
    if args.kernel_timings:
        timings = kernel_timings(exp.dims, args.repetitions, exp.seed)
        run.write_text("timings.csv", rows_to_csv(timings, ("N", "kernel", "median_seconds")))
    run.finish({"seed": exp.seed})


def cmd_replay(args, run: Optional[Run]) -> None:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        argv = list(manifest["argv"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from exc
    if argv and argv[0] == "replay":
        raise UsageError("refusing to replay a replay manifest")
    code = main(argv + ["--out-dir", args.out_dir])
    if code:
        raise UsageError(f"replayed command exited with status {code}")


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resonet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--out-dir", default=".", help="directory for artifacts and manifest")
        return p

    def common(p, dim):
        p.add_argument("--dim", type=int, default=dim)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-iters", type=int, default=200)

    p = add("codebook", cmd_codebook, "build a random codebook")
    p.add_argument("--name", required=True)
    p.add_argument("--labels", required=True, help="comma-separated entry labels")
    p.add_argument("--output", default="codebook.json")
    common(p, 1000)

    p = add("product", cmd_product, "bind one entry per codebook into an input vector")
    p.add_argument("--codebooks", nargs="+", required=True)
    p.add_argument("--labels", required=True, help="comma-separated, one per codebook")
    p.add_argument("--similarity", type=float, default=None, help="flip signs down to this cosine")
    p.add_argument("--output", default="input.json")
    p.add_argument("--seed", type=int, default=0)

    p = add("solve", cmd_solve, "factorize an input vector over serialized codebooks")
    p.add_argument("--codebooks", nargs="+", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--oracle", action="store_true", help="also run the exhaustive search")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=200)

    p = add("tree", cmd_tree, "encode a tree and query it")
    p.add_argument("tree", nargs="?", default=None, help="tree JSON (default: the seven-leaf example)")
    q = p.add_mutually_exclusive_group(required=True)
    q.add_argument("--query-label", help="find the path of this leaf label")
    q.add_argument("--query-path", help="find the leaf at this path, e.g. LRL")
    common(p, 2048)

    p = add("scene", cmd_scene, "encode and parse a scene, or run the accuracy sweep")
    p.add_argument("scene", nargs="?", default=None, help="scene JSON")
    p.add_argument("--random", action="store_true")
    p.add_argument("--objects", type=int, default=1)
    p.add_argument("--similarity", type=float, default=None)
    p.add_argument("--max-objects", type=int, default=None)
    p.add_argument("--trajectories", action="store_true", help="write per-factor trajectory CSVs")
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--counts", default="1,2,3")
    p.add_argument("--similarities", default="0.5,0.6,0.7,0.8,0.9,1.0")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--jobs", type=int, default=1)
    common(p, 500)

    p = add("bench", cmd_bench, "capacity grid and kernel timings")
    p.add_argument("--experiment", default=None, help="CapacityExperiment JSON")
    p.add_argument("--dims", default="64,128,256,512")
    p.add_argument("--sizes", default="5,10,20,50,100")
    p.add_argument("--factors", type=int, default=3)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--kernel-timings", action="store_true")
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=200)

    p = sub.add_parser("replay", help="re-run a recorded manifest")
    p.set_defaults(func=cmd_replay)
    p.add_argument("manifest")
    p.add_argument("--out-dir", required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "replay":
            args.func(args, None)
        else:
            # the manifest records the command without its output directory
            recorded = _strip_out_dir(argv)
            args.func(args, Run(args, recorded))
    except (UsageError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _strip_out_dir(argv: Sequence[str]) -> list:
    out = []
    skip = False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--out-dir":
            skip = True
            continue
        if tok.startswith("--out-dir="):
            continue
        out.append(tok)
    return out


if __name__ == "__main__":
    sys.exit(main())
