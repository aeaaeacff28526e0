"""Vector-symbolic algebra and resonator-network factorization."""

from .bench import CapacityExperiment, capacity_summary, kernel_timings, run_capacity
from .codebook import (
    Codebook,
    build_codebook,
    cleanup,
    codebook_from_json,
    codebook_to_json,
    decode,
    similarity_profile,
)
from .resonator import (
    FactorizationProblem,
    FactorizationResult,
    FixedPointError,
    OracleTooLargeError,
    ResonatorConfig,
    ResonatorState,
    brute_force_oracle,
    init,
    solve,
    step,
    verify,
)
from .scene import (
    SceneCodebooks,
    SceneDescription,
    SceneObject,
    accuracy_sweep,
    corrupt_to_similarity,
    encode_scene,
    noisy_scene,
    parse_scene,
    random_scene,
)
from .tree import TreeDescription, TreeMemory, demo_tree, encode_path, encode_tree
from .vsa import (
    DimensionError,
    Hypervector,
    SumVector,
    UndefinedSimilarityError,
    bind,
    cosine,
    dot,
    identity,
    permute,
    random_hypervector,
    sign_threshold,
    superpose,
)

__version__ = "0.1.0"
