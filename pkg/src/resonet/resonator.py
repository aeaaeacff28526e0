"""Resonator network: factorize a composite vector into one entry per codebook.

For each factor ``i`` the network unbinds every other current estimate from
the input and cleans the result up against codebook ``i``::

    x_i(t+1) = g(X_i X_i^T (s * prod_{j != i} x_j(t)))

Estimates start at the superposition of their whole codebook (kept as raw
integers unless ``normalize_init`` is set), so the first unbinding tests every
combination of the other factors at once. Iteration stops at a fixed point
whose decoded product agrees with the input, or after ``max_iterations``;
fixed points that disagree trigger a restart from a random point in the span
of the codebooks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .codebook import Codebook
from .vsa import (
    DimensionError,
    Hypervector,
    SumVector,
    UndefinedSimilarityError,
    VectorLike,
    _sign,
    derive_seed,
)

__all__ = [
    "FactorizationProblem",
    "ResonatorConfig",
    "ResonatorState",
    "FactorizationResult",
    "OracleTooLargeError",
    "FixedPointError",
    "init",
    "step",
    "solve",
    "verify",
    "brute_force_oracle",
    "ORACLE_LIMIT",
]

ORACLE_LIMIT = 10**6
SCHEDULES = ("synchronous", "sequential")


class OracleTooLargeError(ValueError):
    """The exhaustive search space exceeds the enumeration guard."""


class FixedPointError(AssertionError):
    """A state reported as converged moved under one more step."""


@dataclass(frozen=True)
class ResonatorConfig:
    max_iterations: int = 200
    # consecutive unchanged steps required to call a fixed point
    convergence_window: int = 1
    record_trajectory: bool = True
    # threshold a SumVector input to +-1 before iterating
    normalize_input: bool = True
    # threshold the initial superposition estimates
    normalize_init: bool = False
    schedule: str = "synchronous"
    # treat an estimate that only flipped sign as unchanged; with an even
    # factor count the synchronous schedule otherwise cycles with period 2
    sign_invariant: bool = True
    # restart when a fixed point's residual is below this (None: min(5/sqrt(N), 0.5))
    agreement_threshold: Optional[float] = None
    max_restarts: int = 8
    # also restart after this many steps without an agreeing fixed point
    restart_patience: Optional[int] = 40
    seed: int = 0
    # after a converged solve, take one more step and raise FixedPointError
    # unless every estimate is unchanged
    check_fixed_point: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_window < 1:
            raise ValueError("convergence_window must be >= 1")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be >= 0")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")


@dataclass(frozen=True, eq=False)
class FactorizationProblem:
    input: VectorLike
    codebooks: tuple

    def __post_init__(self):
        cbs = tuple(self.codebooks)
        object.__setattr__(self, "codebooks", cbs)
        if len(cbs) < 2:
            raise ValueError("a factorization problem needs at least two codebooks")
        for cb in cbs:
            if not isinstance(cb, Codebook):
                raise TypeError(f"expected Codebook, got {type(cb).__name__}")
            if cb.dim != self.input.dim:
                raise DimensionError(
                    f"codebook {cb.name!r} has dim {cb.dim}, input has dim {self.input.dim}"
                )

    @property
    def dim(self) -> int:
        return self.input.dim

    @property
    def sizes(self) -> tuple:
        return tuple(cb.size for cb in self.codebooks)

    def input_values(self, normalize: bool) -> np.ndarray:
        v = self.input
        if normalize and isinstance(v, SumVector):
            return _sign(v.elements).astype(np.float64)
        return v.elements.astype(np.float64)


@dataclass(frozen=True, eq=False)
class ResonatorState:
    """Per-factor estimates plus bookkeeping.

    ``trajectory[t][i]`` holds the cosine of estimate ``i`` after step ``t+1``
    against every entry of codebook ``i``.
    """

    estimates: tuple
    iteration: int = 0
    trajectory: tuple = ()
    converged: bool = False
    stable_steps: int = 0


@dataclass(frozen=True)
class FactorizationResult:
    labels: tuple
    iterations_used: int
    converged: bool
    residual_similarity: float
    indices: tuple = field(default=(), compare=False)
    restarts: int = field(default=0, compare=False)

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "iterations": self.iterations_used,
            "converged": self.converged,
            "residual": self.residual_similarity,
        }


# ---------------------------------------------------------------------------
# array kernels


def _initial_arrays(problem: FactorizationProblem, normalize_init: bool) -> list:
    out = []
    for cb in problem.codebooks:
        total = cb.matrix.sum(axis=0, dtype=np.int64)
        out.append(_sign(total) if normalize_init else total)
    return out


def _update(s: np.ndarray, cb: Codebook, ests: Sequence[np.ndarray], i: int) -> np.ndarray:
    u = s.copy()
    for j, e in enumerate(ests):
        if j != i:
            u *= e
    m = cb.matrix_f
    return _sign(m.T @ (m @ u), ests[i])


def _step_arrays(s, codebooks, ests, schedule):
    if schedule == "synchronous":
        return [_update(s, cb, ests, i) for i, cb in enumerate(codebooks)]
    ests = list(ests)
    for i, cb in enumerate(codebooks):
        ests[i] = _update(s, cb, ests, i)
    return ests


def _same_state(old, new, sign_invariant):
    for a, b in zip(old, new):
        if np.array_equal(a, b):
            continue
        if sign_invariant and np.array_equal(a, -b):
            continue
        return False
    return True


def _profiles(codebooks, ests) -> tuple:
    return tuple(
        (cb.matrix_f @ e.astype(np.float64)) / cb.dim for cb, e in zip(codebooks, ests)
    )


def _product(codebooks, indices) -> np.ndarray:
    out = np.ones(codebooks[0].dim, dtype=np.int8)
    for cb, i in zip(codebooks, indices):
        out = out * cb.matrix[i]
    return out


def _residual(s: np.ndarray, product: np.ndarray) -> float:
    norm2 = float(s @ s)
    if norm2 == 0.0:
        raise UndefinedSimilarityError("input vector has zero norm")
    # exactly 1.0 when a bipolar input equals the product
    return float(s @ product.astype(np.float64)) / math.sqrt(norm2 * product.size)


# ---------------------------------------------------------------------------
# public operations


def init(problem: FactorizationProblem, config: ResonatorConfig | None = None) -> ResonatorState:
    """Start every estimate at the superposition of its whole codebook."""
    config = config or ResonatorConfig()
    ests = _initial_arrays(problem, config.normalize_init)
    if config.normalize_init:
        return ResonatorState(estimates=tuple(Hypervector._wrap(e) for e in ests))
    return ResonatorState(
        estimates=tuple(SumVector._wrap(e, cb.size) for e, cb in zip(ests, problem.codebooks))
    )


def step(
    problem: FactorizationProblem,
    state: ResonatorState,
    config: ResonatorConfig | None = None,
) -> ResonatorState:
    """One resonator update of every factor.

    The synchronous schedule computes all factors from the iteration-``t``
    estimates; ``sequential`` uses each fresh estimate immediately.
    """
    config = config or ResonatorConfig()
    if len(state.estimates) != len(problem.codebooks):
        raise ValueError("state does not match the problem's factor count")
    old = [np.asarray(e.elements) for e in state.estimates]
    s = problem.input_values(config.normalize_input)
    new = _step_arrays(s, problem.codebooks, old, config.schedule)
    unchanged = _same_state(old, new, config.sign_invariant)
    stable = state.stable_steps + 1 if unchanged else 0
    trajectory = state.trajectory
    if config.record_trajectory:
        trajectory = trajectory + (_profiles(problem.codebooks, new),)
    return ResonatorState(
        estimates=tuple(Hypervector._wrap(e) for e in new),
        iteration=state.iteration + 1,
        trajectory=trajectory,
        converged=stable >= config.convergence_window,
        stable_steps=stable,
    )


def verify(problem: FactorizationProblem, labels: Sequence[str], normalize: bool = False) -> float:
    """Cosine between the input and the product of the labelled entries.

    Equals 1.0 exactly when that product reproduces the input. With
    ``normalize`` a SumVector input is sign-thresholded first.
    """
    if len(labels) != len(problem.codebooks):
        raise ValueError(f"expected {len(problem.codebooks)} labels, got {len(labels)}")
    indices = [cb.index(label) for cb, label in zip(problem.codebooks, labels)]
    return _residual(problem.input_values(normalize), _product(problem.codebooks, indices))


def _restart_arrays(problem: FactorizationProblem, seed: int, attempt: int) -> list:
    # random integer-weighted superposition of each codebook; stays in the
    # codebook span, so permuting every entry permutes the restart too
    out = []
    for f, cb in enumerate(problem.codebooks):
        raw = np.random.PCG64(derive_seed(seed, attempt, f)).random_raw(cb.size)
        weights = (raw % 17).astype(np.int64) - 8
        out.append(weights @ cb.matrix.astype(np.int64))
    return out


def _decode_indices(s: np.ndarray, codebooks, ests) -> tuple:
    # read each factor from its clean-up weights X_i^T (s * prod_{j!=i} x_j)
    # rather than from the thresholded estimate: a mixture estimate is still
    # decoded by its strongest component. |weight|, since pairs of sign
    # flips across estimates cancel under binding.
    out = []
    for i, cb in enumerate(codebooks):
        u = s.copy()
        for j, e in enumerate(ests):
            if j != i:
                u *= e
        out.append(int(np.argmax(np.abs(cb.matrix_f @ u))))
    return tuple(out)


def _agreement_threshold(config: ResonatorConfig, dim: int) -> float:
    if config.agreement_threshold is not None:
        return config.agreement_threshold
    return min(5.0 / math.sqrt(dim), 0.5)


def _score(s: np.ndarray, codebooks, ests) -> tuple:
    indices = _decode_indices(s, codebooks, ests)
    try:
        residual = _residual(s, _product(codebooks, indices))
    except UndefinedSimilarityError:
        residual = 0.0
    return indices, residual


def _canonical_signs(s, codebooks, ests, schedule) -> list:
    # A sign-invariant fixed point whose estimates bind to -s flips every
    # factor on each synchronous step. Negating one factor turns it into an
    # exact fixed point with the same decoded labels.
    if _same_state(ests, _step_arrays(s, codebooks, ests, schedule), False):
        return ests
    flipped = [-ests[0]] + list(ests[1:])
    if _same_state(flipped, _step_arrays(s, codebooks, flipped, schedule), False):
        return flipped
    return ests


def _check_fixed_point(s, codebooks, ests, schedule) -> None:
    again = _step_arrays(s, codebooks, ests, schedule)
    if not _same_state(ests, again, False):
        moved = [i for i, (a, b) in enumerate(zip(ests, again)) if not np.array_equal(a, b)]
        raise FixedPointError(f"converged state moved under one more step (factors {moved})")


def solve(
    problem: FactorizationProblem, config: ResonatorConfig | None = None
) -> tuple[FactorizationResult, ResonatorState]:
    """Iterate to a fixed point (or the iteration cap) and decode each factor.

    A fixed point whose decoded product does not agree with the input
    (residual below the agreement threshold) is remembered and the network
    restarts from a random superposition, as does a run that exceeds
    ``restart_patience`` steps without settling. All attempts share the
    ``max_iterations`` budget; the best fixed point seen is returned when no
    attempt agrees. Non-convergence is reported through ``converged``, never
    raised. A zero input reports residual 0.0.
    """
    config = config or ResonatorConfig()
    cbs = problem.codebooks
    s = problem.input_values(config.normalize_input)
    threshold = _agreement_threshold(config, problem.dim)
    patience = config.restart_patience

    ests = _initial_arrays(problem, config.normalize_init)
    trajectory = []
    best = None  # (residual, estimates, indices) of the best fixed point so far
    stable = 0
    restarts = 0
    since_start = 0
    iteration = 0
    done = False
    while iteration < config.max_iterations and not done:
        new = _step_arrays(s, cbs, ests, config.schedule)
        iteration += 1
        since_start += 1
        if config.record_trajectory:
            trajectory.append(_profiles(cbs, new))
        stable = stable + 1 if _same_state(ests, new, config.sign_invariant) else 0
        ests = new
        if stable >= config.convergence_window:
            indices, residual = _score(s, cbs, ests)
            if best is None or residual > best[0]:
                best = (residual, ests, indices)
            if residual >= threshold:
                done = True
                continue
        elif patience is None or since_start < patience:
            continue
        if restarts >= config.max_restarts:
            # no attempts left; a fixed point ends the run, a cycle keeps going
            done = stable >= config.convergence_window
            continue
        restarts += 1
        stable = 0
        since_start = 0
        ests = _restart_arrays(problem, config.seed, restarts)

    converged = stable >= config.convergence_window
    if converged:
        indices, residual = _score(s, cbs, ests)
    if best is not None and (not converged or best[0] > residual):
        residual, ests, indices = best
        converged = True
    elif not converged:
        indices, residual = _score(s, cbs, ests)
    if converged and config.sign_invariant:
        ests = _canonical_signs(s, cbs, ests, config.schedule)
    if converged and config.check_fixed_point:
        _check_fixed_point(s, cbs, ests, config.schedule)

    state = ResonatorState(
        estimates=tuple(Hypervector._wrap(e) for e in ests),
        iteration=iteration,
        trajectory=tuple(trajectory),
        converged=converged,
        stable_steps=stable,
    )
    result = FactorizationResult(
        labels=tuple(cb.labels[i] for cb, i in zip(cbs, indices)),
        iterations_used=iteration,
        converged=converged,
        residual_similarity=residual,
        indices=indices,
        restarts=restarts,
    )
    return result, state


def brute_force_oracle(
    problem: FactorizationProblem, normalize: bool = False, limit: int = ORACLE_LIMIT
) -> FactorizationResult:
    """Score every label combination and return the best one.

    Ties go to the lexicographically smallest index tuple. Refuses search
    spaces larger than ``limit``.
    """
    sizes = problem.sizes
    total = math.prod(sizes)
    if total > limit:
        raise OracleTooLargeError(f"{total} combinations exceeds the oracle limit of {limit}")
    cbs = problem.codebooks
    s = problem.input_values(normalize)
    head, (pen, last) = cbs[:-2], cbs[-2:]
    best_score = -math.inf
    best = None
    # enumerate all but the last two factors; score those two as a matrix
    for prefix in itertools.product(*(range(cb.size) for cb in head)):
        partial = s.copy()
        for cb, i in zip(head, prefix):
            partial = partial * cb.matrix_f[i]
        scores = (pen.matrix_f * partial) @ last.matrix_f.T
        flat = int(np.argmax(scores))
        score = float(scores.flat[flat])
        if score > best_score:
            best_score = score
            best = prefix + divmod(flat, last.size)
    indices = tuple(int(i) for i in best)
    try:
        residual = _residual(s, _product(cbs, indices))
    except UndefinedSimilarityError:
        residual = 0.0
    return FactorizationResult(
        labels=tuple(cb.labels[i] for cb, i in zip(cbs, indices)),
        iterations_used=0,
        converged=True,
        residual_similarity=residual,
        indices=indices,
    )
