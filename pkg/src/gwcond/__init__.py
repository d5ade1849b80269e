"""Subcritical Galton-Watson trees conditioned on Omega-outdegree counts.

Samplers (exact and big-jump), condensation statistics, stable-law
numerics, a brute-force enumeration oracle, and a Monte Carlo experiment
harness with a CLI.
"""

from .distributions import (OffspringLaw, OmegaSet, OmegaSplit, SizeBiasedLaw,
                            build_power_law, build_split)
from .kernels import BACKEND
from .sampler import (CAP_EXCEEDED, INVALID, BudgetExceededError, Decoration,
                      MarkedTree, PlaneTree, bigjump_sequence, blow_up, contract,
                      exact_conditioned_sequence, rotate_to_tree,
                      sample_decoration, sample_marked_limit_tree,
                      sample_offspring, sample_size_biased, sample_tree_Tn,
                      sample_tree_Tn_Omega, sample_unconditioned,
                      tree_from_line, tree_to_line)
from .stable import StableLaw, get_stable, llt_prediction, scaling_sequence
from .streams import UniformStream, child_stream, mix64

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BudgetExceededError", "CAP_EXCEEDED", "Decoration", "INVALID",
    "MarkedTree", "OffspringLaw", "OmegaSet", "OmegaSplit", "PlaneTree",
    "SizeBiasedLaw", "StableLaw", "UniformStream", "bigjump_sequence",
    "blow_up", "build_power_law", "build_split", "child_stream", "contract",
    "exact_conditioned_sequence", "get_stable", "llt_prediction", "mix64",
    "rotate_to_tree", "sample_decoration", "sample_marked_limit_tree",
    "sample_offspring", "sample_size_biased", "sample_tree_Tn",
    "sample_tree_Tn_Omega", "sample_unconditioned", "scaling_sequence",
    "tree_from_line", "tree_to_line",
]
