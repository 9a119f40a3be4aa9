"""reslearn: learn ultra-sparse resistor networks (graph Laplacians) from
linear voltage/current measurements by iterative spectral densification.

The package is organized around a small immutable graph model
(:mod:`reslearn.graphs`), spectral machinery for eigenpairs, embeddings and
deflated solves (:mod:`reslearn.spectral`), measurement generators
(:mod:`reslearn.measurements`), the learning loop (:mod:`reslearn.learner`),
evaluation metrics (:mod:`reslearn.metrics`), and file formats
(:mod:`reslearn.io`).  ``reslearn.cli`` wires them into a file-based
pipeline.
"""

__version__ = "0.1.0"

from .graphs import (
    DisconnectedGraphError,
    LaplacianOperator,
    WeightedGraph,
    build_laplacian,
    effective_resistance,
    grid_graph,
    is_connected,
    maximum_spanning_tree,
    quadratic_form,
)
from .learner import (
    EdgeCandidate,
    IterationRecord,
    LearnConfig,
    LearnTrace,
    edge_scale,
    init_graph,
    learn,
    perturbation_estimate,
    score_candidates,
)
from .measurements import (
    JlSketchConfig,
    MeasurementSet,
    add_noise,
    generate_currents,
    generate_jl_measurements,
    generate_measurement_set,
    jl_measurement_count,
    simulate_voltages,
    subsample_nodes,
)
from .metrics import (
    EvalReport,
    compare_spectra,
    distortion_stats,
    evaluate,
    layout_coordinates,
    resistance_correlation,
)
from .spectral import (
    EigensolverError,
    ObjectiveValue,
    SolverError,
    SpectralBasis,
    build_embedding,
    eigensolve_smallest,
    embedding_distances,
    objective_value,
    solve_laplacian,
)

__all__ = [
    "DisconnectedGraphError",
    "EdgeCandidate",
    "EigensolverError",
    "EvalReport",
    "IterationRecord",
    "JlSketchConfig",
    "LaplacianOperator",
    "LearnConfig",
    "LearnTrace",
    "MeasurementSet",
    "ObjectiveValue",
    "SolverError",
    "SpectralBasis",
    "WeightedGraph",
    "add_noise",
    "build_embedding",
    "build_laplacian",
    "compare_spectra",
    "distortion_stats",
    "edge_scale",
    "effective_resistance",
    "eigensolve_smallest",
    "embedding_distances",
    "evaluate",
    "generate_currents",
    "generate_jl_measurements",
    "generate_measurement_set",
    "grid_graph",
    "init_graph",
    "is_connected",
    "jl_measurement_count",
    "layout_coordinates",
    "learn",
    "maximum_spanning_tree",
    "objective_value",
    "perturbation_estimate",
    "quadratic_form",
    "resistance_correlation",
    "score_candidates",
    "simulate_voltages",
    "solve_laplacian",
    "subsample_nodes",
]
