"""Adaptive grayscale steganography driven by a four-neighbor Gaussian MRF."""

from .embedding import (
    StegoResult,
    costs_to_probs,
    probs_to_costs,
    simulate_embedding,
    smooth_costs,
)
from .estimation import BasisMatrix, ModelField, build_basis, estimate_model
from .estimator import GmrfEmbedder, GmrfModel
from .fim import CliqueParams, Fim2, fi_single, fim_clique, kl_clique, kl_tree
from .image_io import (
    FormatError,
    compute_residual,
    read_float_map,
    read_pgm,
    wiener_denoise,
    write_float_map,
    write_pgm,
)
from .lattice import CliqueTree, SublatticePartition, build_trees, tessellate
from .optimizer import (
    CapacityError,
    OptimizeResult,
    OptimizerConfig,
    alternate_optimize,
    entropy_ternary,
)
from .oracle import VerificationReport, run_verification
from .pipeline import PipelineResult, compute_probabilities, embed_image

__version__ = "0.1.0"

__all__ = [
    "BasisMatrix",
    "CapacityError",
    "CliqueParams",
    "CliqueTree",
    "Fim2",
    "FormatError",
    "GmrfEmbedder",
    "GmrfModel",
    "ModelField",
    "OptimizeResult",
    "OptimizerConfig",
    "PipelineResult",
    "StegoResult",
    "SublatticePartition",
    "alternate_optimize",
    "build_basis",
    "build_trees",
    "compute_probabilities",
    "compute_residual",
    "costs_to_probs",
    "embed_image",
    "entropy_ternary",
    "estimate_model",
    "fi_single",
    "fim_clique",
    "kl_clique",
    "kl_tree",
    "probs_to_costs",
    "read_float_map",
    "read_pgm",
    "simulate_embedding",
    "smooth_costs",
    "tessellate",
    "wiener_denoise",
    "write_float_map",
    "write_pgm",
    "__version__",
]
