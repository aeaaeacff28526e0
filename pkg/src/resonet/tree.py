"""Binary trees stored in a single superposed vector.

Each leaf is bound to the code for its path from the root; a path is the
binding of ``rho^d(left)`` / ``rho^d(right)`` over depths ``d``. Looking up
a leaf by path is plain unbinding plus nearest-neighbour decoding. Looking
up a path by leaf label needs a resonator with one factor per depth, where
each depth codebook holds ``[rho^d(left), rho^d(right), 1]`` and the
all-ones entry pads paths shorter than ``max_depth``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

from .codebook import Codebook, build_codebook, decode
from .resonator import FactorizationProblem, FactorizationResult, ResonatorConfig, solve
from .vsa import (
    Hypervector,
    SumVector,
    bind,
    derive_seed,
    identity,
    permute,
    random_hypervector,
    superpose,
)

__all__ = [
    "STOP",
    "DEMO_LEAVES",
    "TreeDescription",
    "TreeMemory",
    "PathAnswer",
    "LabelAnswer",
    "encode_path",
    "encode_tree",
    "path_codebooks",
    "query_label_at_path",
    "query_path_of_label",
    "demo_tree",
]

STOP = "STOP"
TURNS = ("L", "R")

# seven-leaf example tree, depths 3 to 5
DEMO_LEAVES = (
    ("LLL", "a"),
    ("LRL", "b"),
    ("RRL", "c"),
    ("RRRL", "d"),
    ("RRRR", "e"),
    ("LRRLL", "f"),
    ("LRRLR", "g"),
)


def _check_path(path: str) -> str:
    path = "".join(path).upper()
    if not path:
        raise ValueError("path must contain at least one turn")
    bad = set(path) - set(TURNS)
    if bad:
        raise ValueError(f"path may only contain L and R, got {sorted(bad)}")
    return path


@dataclass(frozen=True)
class TreeDescription:
    """Leaves as ``(path, label)`` pairs, paths written as strings over ``LR``."""

    leaves: tuple
    max_depth: int

    def __post_init__(self):
        leaves = tuple((_check_path(p), str(label)) for p, label in self.leaves)
        object.__setattr__(self, "leaves", leaves)
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        paths = [p for p, _ in leaves]
        if len(set(paths)) != len(paths):
            raise ValueError("tree paths must be unique")
        for p in paths:
            if len(p) > self.max_depth:
                raise ValueError(f"path {p} is deeper than max_depth={self.max_depth}")
            for q in paths:
                if p != q and q.startswith(p):
                    raise ValueError(f"path {p} is a prefix of {q}; only leaves may be stored")

    @property
    def labels(self) -> tuple:
        return tuple(label for _, label in self.leaves)

    def path_of(self, label: str) -> Optional[str]:
        for p, lab in self.leaves:
            if lab == label:
                return p
        return None

    def label_at(self, path: str) -> Optional[str]:
        path = _check_path(path)
        for p, lab in self.leaves:
            if p == path:
                return lab
        return None

    def to_json(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "leaves": [{"path": p, "label": label} for p, label in self.leaves],
        }

    @classmethod
    def from_json(cls, obj: Union[dict, str]) -> "TreeDescription":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            leaves = [(leaf["path"], leaf["label"]) for leaf in obj["leaves"]]
            max_depth = int(obj.get("max_depth", max(len(p) for p, _ in leaves)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed tree description: {exc}") from exc
        return cls(tuple(leaves), max_depth)


def demo_tree(max_depth: int = 5) -> TreeDescription:
    return TreeDescription(DEMO_LEAVES, max_depth)


def encode_path(path: str, base_left: Hypervector, base_right: Hypervector) -> Hypervector:
    """Bind ``rho^d(turn_d)`` over the turns of ``path``."""
    path = _check_path(path)
    out = identity(base_left.dim)
    for d, turn in enumerate(path):
        out = bind(out, permute(base_left if turn == "L" else base_right, d))
    return out


def encode_tree(
    desc: TreeDescription,
    leaf_codebook: Codebook,
    base_left: Hypervector,
    base_right: Hypervector,
) -> SumVector:
    terms = [
        bind(leaf_codebook[label], encode_path(path, base_left, base_right))
        for path, label in desc.leaves
    ]
    return superpose(terms)


def path_codebooks(max_depth: int, base_left: Hypervector, base_right: Hypervector) -> list:
    """One ``[L, R, STOP]`` codebook per depth; STOP is the all-ones vector."""
    one = identity(base_left.dim)
    return [
        Codebook(f"depth{d}", ("L", "R", STOP), [permute(base_left, d), permute(base_right, d), one])
        for d in range(max_depth)
    ]


class LabelAnswer(NamedTuple):
    label: Optional[str]  # None when the best weight is below the reject threshold
    weight: float
    best_label: str


class PathAnswer(NamedTuple):
    path: str
    result: FactorizationResult
    # False when the resonator did not settle or a turn follows a STOP
    reliable: bool
    trajectory: tuple = ()


def query_label_at_path(
    tree: SumVector,
    path: str,
    leaf_codebook: Codebook,
    base_left: Hypervector,
    base_right: Hypervector,
    reject_below: Optional[float] = None,
) -> LabelAnswer:
    """Unbind the path code and decode the leaf left exposed.

    ``reject_below`` defaults to ``3 / sqrt(N)``; weaker matches report no leaf.
    """
    if reject_below is None:
        reject_below = 3.0 / math.sqrt(tree.dim)
    exposed = bind(tree, encode_path(path, base_left, base_right))
    label, weight = decode(leaf_codebook, exposed)
    return LabelAnswer(label if weight >= reject_below else None, weight, label)


def query_path_of_label(
    tree: SumVector,
    label: str,
    leaf_codebook: Codebook,
    codebooks: Sequence[Codebook],
    config: Optional[ResonatorConfig] = None,
) -> PathAnswer:
    """Unbind a leaf vector and factor the exposed path code, one factor per depth."""
    s = bind(tree, leaf_codebook[label])
    result, state = solve(FactorizationProblem(s, tuple(codebooks)), config)
    turns = []
    consistent = True
    for i, lab in enumerate(result.labels):
        if lab == STOP:
            consistent = all(rest == STOP for rest in result.labels[i:])
            break
        turns.append(lab)
    reliable = result.converged and consistent and bool(turns)
    return PathAnswer("".join(turns), result, reliable, state.trajectory)


@dataclass(frozen=True, eq=False)
class TreeMemory:
    """A tree encoded with its own codebooks, ready for queries."""

    description: TreeDescription
    leaf_codebook: Codebook
    base_left: Hypervector
    base_right: Hypervector
    vector: SumVector

    @classmethod
    def build(
        cls,
        desc: TreeDescription,
        dim: int,
        seed: int,
        leaf_labels: Optional[Sequence[str]] = None,
    ) -> "TreeMemory":
        labels = list(leaf_labels) if leaf_labels is not None else sorted(set(desc.labels))
        leaves = build_codebook("leaves", labels, dim, seed)
        left = random_hypervector(dim, derive_seed(seed, "turn", "left"))
        right = random_hypervector(dim, derive_seed(seed, "turn", "right"))
        return cls(desc, leaves, left, right, encode_tree(desc, leaves, left, right))

    @property
    def dim(self) -> int:
        return self.vector.dim

    @property
    def path_codebooks(self) -> list:
        return path_codebooks(self.description.max_depth, self.base_left, self.base_right)

    def label_at(self, path: str, reject_below: Optional[float] = None) -> LabelAnswer:
        return query_label_at_path(
            self.vector, path, self.leaf_codebook, self.base_left, self.base_right, reject_below
        )

    def path_of(self, label: str, config: Optional[ResonatorConfig] = None) -> PathAnswer:
        return query_path_of_label(
            self.vector, label, self.leaf_codebook, self.path_codebooks, config
        )
