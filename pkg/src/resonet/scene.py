"""Compositional scene vectors and their parsing by resonator plus deflation.

An object is ``color * digit * vertical * horizontal``; a scene superposes
one to three objects. Parsing factorizes the scene vector, subtracts the
decoded object and repeats on what is left.

Noisy scene vectors come from :func:`corrupt_to_similarity`, which flips an
exact number of signs to hit a target cosine with the clean vector.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .codebook import Codebook, build_codebook
from .resonator import FactorizationProblem, FactorizationResult, ResonatorConfig, solve
from .vsa import (
    Hypervector,
    SumVector,
    VectorLike,
    _sign,
    bind_all,
    derive_seed,
    sign_threshold,
    superpose,
)

__all__ = [
    "COLORS",
    "DIGITS",
    "VERTICAL",
    "HORIZONTAL",
    "SceneObject",
    "SceneDescription",
    "SceneCodebooks",
    "NoisyScene",
    "ParsedObject",
    "random_scene",
    "encode_object",
    "encode_scene",
    "corrupt_to_similarity",
    "noisy_scene",
    "parse_scene",
    "scene_correct",
    "accuracy_sweep",
    "sweep_to_csv",
    "EXAMPLE_SCENE",
]

COLORS = ("blue", "green", "cyan", "red", "pink", "yellow", "white")
DIGITS = tuple(str(i) for i in range(10))
VERTICAL = ("top", "middle", "bottom")
HORIZONTAL = ("left", "center", "right")
_FACTORS = (COLORS, DIGITS, VERTICAL, HORIZONTAL)


class SceneObject(NamedTuple):
    color: str
    digit: str
    v: str
    h: str

    @classmethod
    def make(cls, color, digit, v, h) -> "SceneObject":
        obj = cls(str(color), str(digit), str(v), str(h))
        for value, allowed in zip(obj, _FACTORS):
            if value not in allowed:
                raise ValueError(f"unknown scene label {value!r}")
        return obj

    def __str__(self) -> str:
        return f"{self.color} {self.digit} ({self.v}, {self.h})"


@dataclass(frozen=True)
class SceneDescription:
    objects: tuple

    def __post_init__(self):
        objs = tuple(SceneObject.make(*o) for o in self.objects)
        object.__setattr__(self, "objects", objs)
        if not 1 <= len(objs) <= 3:
            raise ValueError("a scene holds between one and three objects")
        if len(set(objs)) != len(objs):
            raise ValueError("scene objects must be pairwise distinct")

    def to_json(self) -> dict:
        return {
            "objects": [
                {"color": o.color, "digit": int(o.digit), "v": o.v, "h": o.h} for o in self.objects
            ]
        }

    @classmethod
    def from_json(cls, obj: Union[dict, str]) -> "SceneDescription":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            objs = [(o["color"], o["digit"], o["v"], o["h"]) for o in obj["objects"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed scene description: {exc}") from exc
        return cls(tuple(objs))


EXAMPLE_SCENE = SceneDescription(
    (("cyan", 7, "top", "left"), ("pink", 3, "top", "right"), ("red", 8, "middle", "left"))
)


@dataclass(frozen=True, eq=False)
class SceneCodebooks:
    color: Codebook
    digit: Codebook
    vertical: Codebook
    horizontal: Codebook

    @classmethod
    def build(cls, dim: int, seed: int) -> "SceneCodebooks":
        return cls(
            build_codebook("color", COLORS, dim, seed),
            build_codebook("digit", DIGITS, dim, seed),
            build_codebook("vertical", VERTICAL, dim, seed),
            build_codebook("horizontal", HORIZONTAL, dim, seed),
        )

    @property
    def all(self) -> tuple:
        return (self.color, self.digit, self.vertical, self.horizontal)

    @property
    def dim(self) -> int:
        return self.color.dim


def random_scene(object_count: int, seed: int) -> SceneDescription:
    """Uniform i.i.d. factors per object, redrawn until the objects differ."""
    if not 1 <= object_count <= 3:
        raise ValueError("object_count must be 1, 2 or 3")
    rng = np.random.Generator(np.random.PCG64(int(seed) & ((1 << 64) - 1)))
    objs = []
    while len(objs) < object_count:
        cand = SceneObject(*(labels[int(rng.integers(len(labels)))] for labels in _FACTORS))
        if cand not in objs:
            objs.append(cand)
    return SceneDescription(tuple(objs))


def encode_object(obj: SceneObject, codebooks: SceneCodebooks) -> Hypervector:
    return bind_all(cb[label] for cb, label in zip(codebooks.all, obj))


def encode_scene(desc: SceneDescription, codebooks: SceneCodebooks) -> SumVector:
    return superpose([encode_object(o, codebooks) for o in desc.objects])


def corrupt_to_similarity(v: Hypervector, target: float, seed: int) -> Hypervector:
    """Flip ``round(N (1 - target) / 2)`` distinct random positions.

    The cosine to ``v`` is then ``(N - 2k) / N``, within ``1/N`` of target.
    """
    if not 0.0 < target <= 1.0:
        raise ValueError("target similarity must lie in (0, 1]")
    n = v.dim
    k = int(round(n * (1.0 - target) / 2.0))
    rng = np.random.Generator(np.random.PCG64(int(seed) & ((1 << 64) - 1)))
    flips = rng.choice(n, size=k, replace=False)
    out = v.elements.copy()
    out[flips] = -out[flips]
    return Hypervector._wrap(out)


@dataclass(frozen=True, eq=False)
class NoisyScene:
    vector: Hypervector
    target_similarity: float
    achieved_similarity: float
    ground_truth: SceneDescription


def noisy_scene(
    desc: SceneDescription, codebooks: SceneCodebooks, target: float, seed: int
) -> NoisyScene:
    """Thresholded scene vector with signs flipped to reach ``target``.

    Similarity is measured against the thresholded clean vector, the closest
    bipolar stand-in for an encoder's output.
    """
    clean = sign_threshold(encode_scene(desc, codebooks))
    noisy = corrupt_to_similarity(clean, target, seed)
    achieved = float(np.dot(clean.elements.astype(np.int64), noisy.elements)) / clean.dim
    return NoisyScene(noisy, target, achieved, desc)


class ParsedObject(NamedTuple):
    object: SceneObject
    result: FactorizationResult
    # cosine between the decoded product and the vector it was taken from
    agreement: float
    # per-step similarity profiles, empty unless the config records them
    trajectory: tuple = ()


def parse_scene(
    s: VectorLike,
    codebooks: SceneCodebooks,
    max_objects: int = 3,
    config: Optional[ResonatorConfig] = None,
    stop_below: Optional[float] = 0.3,
) -> list:
    """Decode objects one at a time, explaining each away before the next.

    Each round factorizes the running vector, keeps the decoded object, and
    subtracts its product with exact integer arithmetic; the resonator then
    starts afresh from the full superposition. Parsing stops after
    ``max_objects`` rounds, when the running vector is exactly zero, or when
    the decoded object's cosine to the running vector is below
    ``stop_below`` (that last object is discarded). ``stop_below=None``
    disables the similarity test, for callers that know the object count.

    The first round sees ``s`` as ``config`` dictates (thresholded when it is
    a SumVector and ``normalize_input`` is on). Later rounds always see the
    raw deflated integer vector: thresholding its zeros to +1 would bias the
    input toward the all-ones vector.
    """
    if max_objects < 1:
        raise ValueError("max_objects must be >= 1")
    config = config or ResonatorConfig()
    cbs = codebooks.all
    running = s.elements.astype(np.int64)
    terms = s.term_count
    found = []
    raw_config = replace(config, normalize_input=False)
    for round_ in range(max_objects):
        if not np.any(running):
            break
        current = SumVector._wrap(running.copy(), terms)
        result, state = solve(FactorizationProblem(current, cbs), config if round_ == 0 else raw_config)
        obj = SceneObject(*result.labels)
        product = np.ones(codebooks.dim, dtype=np.int64)
        for cb, i in zip(cbs, result.indices):
            product *= cb.matrix[i]
        agreement = float(running @ product) / math.sqrt(float(running @ running) * codebooks.dim)
        if stop_below is not None and agreement < stop_below:
            break
        found.append(ParsedObject(obj, result, agreement, state.trajectory))
        running = running - product
        terms += 1
    return found


def scene_correct(parsed: Iterable[ParsedObject], truth: SceneDescription) -> bool:
    """Set-level scoring: every object found, nothing extra."""
    objs = [p.object for p in parsed]
    return len(objs) == len(truth.objects) and set(objs) == set(truth.objects)


def _sweep_cell(count, sim, trials, dim, seed, config):
    codebooks = SceneCodebooks.build(dim, seed)
    correct = 0
    for t in range(trials):
        desc = random_scene(count, derive_seed(seed, "scene", count, t))
        noisy = noisy_scene(desc, codebooks, sim, derive_seed(seed, "noise", count, sim, t))
        parsed = parse_scene(noisy.vector, codebooks, count, config, stop_below=None)
        correct += scene_correct(parsed, desc)
    return {
        "object_count": count,
        "target_similarity": sim,
        "trials": trials,
        "correct": correct,
        "accuracy": correct / trials,
    }


def accuracy_sweep(
    object_counts: Sequence[int] = (1, 2, 3),
    similarity_grid: Sequence[float] = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
    trials: int = 200,
    dim: int = 500,
    seed: int = 0,
    config: Optional[ResonatorConfig] = None,
    jobs: int = 1,
) -> list:
    """Fraction of noisy scenes parsed exactly, per (object count, similarity).

    The object count is given to the parser, so the stopping test is off.
    Rows are identical for any ``jobs``.
    """
    for sim in similarity_grid:
        if not 0.0 < sim <= 1.0:
            raise ValueError("similarities must lie in (0, 1]")
    config = config or ResonatorConfig(record_trajectory=False)
    cells = [(c, float(s)) for c in object_counts for s in similarity_grid]
    if jobs == 1:
        return [_sweep_cell(c, s, trials, dim, seed, config) for c, s in cells]
    from joblib import Parallel, delayed

    return list(
        Parallel(n_jobs=jobs)(delayed(_sweep_cell)(c, s, trials, dim, seed, config) for c, s in cells)
    )


SWEEP_COLUMNS = ("object_count", "target_similarity", "trials", "correct", "accuracy")


def sweep_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in SWEEP_COLUMNS})
    return buf.getvalue()
