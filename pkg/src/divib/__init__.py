"""Divergence-preserving information bottleneck on finite alphabets."""
from .families import HierarchicalModel, divergence_from_family, latent_divergence, project_to_family
from .partitions import Partition, partition_from_channel_rows, partition_from_dib_relation
from .prob import Channel, Distribution, Joint, UnnormalizedWeight, kl_divergence, mutual_information
from .solver import (
    DibProblem,
    SolverConfig,
    SolverResult,
    anneal_reverse,
    detect_bifurcations,
    effective_cardinality,
    geometric_betas,
    solve_fixed_beta,
    target_lambda,
)
from .symmetry import Group, Permutation, ProductPermutation, discover_equivariances, divergence_from_symmetric

__version__ = "0.1.0"
