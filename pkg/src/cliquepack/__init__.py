"""Simulation and analytics for edge-disjoint near-maximal clique packings in G(n, p)."""

__version__ = "0.1.0"

from .cliques import (  # noqa: E402
    CapacityError,
    CliqueIndex,
    brute_force_count,
    build_clique_index,
    count_cliques,
    enumerate_cliques,
    index_remove_clique,
    sample_uniform_clique,
    y_edge,
    y_set,
)
from .graph import GraphState, Seed, remove_edges, sample_gnm, sample_gnp  # noqa: E402
from .process import (  # noqa: E402
    ProcessTrace,
    detect_stopping_times,
    initial_checks,
    run_removal_process,
    run_to_exhaustion,
    verify_packing,
)
from .theory import TheoryParams, build_schedule, find_k0, gamma_delta  # noqa: E402

__all__ = [
    "CapacityError", "CliqueIndex", "GraphState", "ProcessTrace", "Seed", "TheoryParams",
    "brute_force_count", "build_clique_index", "build_schedule", "count_cliques",
    "detect_stopping_times", "enumerate_cliques", "find_k0", "gamma_delta", "index_remove_clique",
    "initial_checks", "remove_edges", "run_removal_process", "run_to_exhaustion",
    "sample_gnm", "sample_gnp", "sample_uniform_clique", "verify_packing", "y_edge", "y_set",
]
