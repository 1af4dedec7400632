"""Exact simulation toolkit for the finite Abelian hidden subgroup problem."""

from .groups import (
    GroupElement,
    GroupError,
    GroupSpec,
    Subgroup,
    SylowComponent,
    bilinear,
    chain_length,
    contains,
    direct_sum_subgroups,
    generation_frequency,
    generation_sample_size,
    iteration_bound,
    orthogonal,
    project_subgroup,
    rank,
    span,
    sylow_decompose,
    trivial,
    whole,
)

__version__ = "0.1.0"
