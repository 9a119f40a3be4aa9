"""Iterative spectral densification: learn a sparse resistor network whose
embedding distances encode measured voltage distances.

The loop starts from the maximum spanning tree of a k-nearest-neighbor
candidate graph built on the voltage rows, then repeatedly scores every
off-graph candidate edge by its objective-gradient sensitivity and includes
the highest-ranked ones until no candidate exceeds the tolerance.  A final
global edge scaling matches solved voltage norms to the measured ones when
current measurements are available.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .graphs import WeightedGraph, build_laplacian, maximum_spanning_tree
from .spectral import (
    DEFAULT_CG_TOL,
    build_embedding,
    eigensolve_smallest,
    embedding_distances,
    objective_value,
    solve_laplacian,
)

# Floor for zero data distances (duplicate voltage rows), as a fraction of the
# median nonzero squared distance over the candidate pool.
ZDATA_FLOOR_FRACTION = 1e-12


@dataclass(frozen=True)
class LearnConfig:
    """Knobs of the learning loop.

    Defaults follow the reference experimental protocol: 5 nearest
    neighbors, 4 embedding modes (r = 5), sensitivity tolerance 1e-12,
    edge sampling ratio 1e-3, and a 50-eigenvalue objective.
    """

    k: int = 5
    r: int = 5
    tol: float = 1e-12
    beta_sample: float = 1e-3
    inverse_variance: float = 0.0
    max_iterations: int | None = None
    objective_k: int = 50
    record_objective: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.r < 2:
            raise ValueError("r must be >= 2")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if not 0 < self.beta_sample <= 1:
            raise ValueError("beta_sample must be in (0, 1]")
        if self.inverse_variance < 0:
            raise ValueError("inverse_variance must be >= 0")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    @property
    def resolved_max_iterations(self):
        if self.max_iterations is not None:
            return self.max_iterations
        return 10 * math.ceil(1.0 / self.beta_sample)


@dataclass(frozen=True)
class EdgeCandidate:
    """A scored candidate edge.

    ``sensitivity = z_emb - z_data / M`` approximates the objective gradient
    with respect to this edge's weight; ``distortion = M * z_emb / z_data``
    equals 1 exactly when the edge weight ``M / z_data`` makes embedding and
    data distances agree.
    """

    s: int
    t: int
    z_data: float
    z_emb: float
    sensitivity: float
    distortion: float


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    s_max: float
    edge_count: int
    objective: float | None = None
    seconds: float = 0.0


@dataclass
class LearnTrace:
    """Per-iteration convergence record plus the terminal status."""

    records: list[IterationRecord] = field(default_factory=list)
    status: str = "converged"

    @property
    def iterations(self):
        return len(self.records)

    @property
    def s_max_history(self):
        return np.asarray([r.s_max for r in self.records])


def _squared_row_distances(X, s, t):
    diff = X[s] - X[t]
    if diff.ndim == 1:
        return float(np.dot(diff, diff))
    return np.einsum("ij,ij->i", diff, diff)


def _knn_pairs(X, k, block_rows=256):
    """Exact k-nearest-neighbor pairs (union over directions) by blocked
    brute force on squared Euclidean row distances."""
    n = X.shape[0]
    k_eff = min(k, n - 1)
    sq = np.einsum("ij,ij->i", X, X)
    pairs = set()
    for lo in range(0, n, block_rows):
        hi = min(lo + block_rows, n)
        d2 = sq[lo:hi, None] + sq[None, :] - 2.0 * (X[lo:hi] @ X.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(lo, hi) - lo, np.arange(lo, hi)] = np.inf
        part = np.argpartition(d2, k_eff - 1, axis=1)[:, :k_eff]
        for row in range(hi - lo):
            i = lo + row
            # Re-sort the partitioned slice by (distance, index) so ties are
            # resolved deterministically.
            cand = part[row]
            order = np.lexsort((cand, d2[row, cand]))
            for j in cand[order]:
                a, b = (i, int(j)) if i < j else (int(j), i)
                pairs.add((a, b))
    return sorted(pairs)


def _zdata_floor(z):
    positive = z[z > 0]
    if positive.size == 0:
        raise ValueError("degenerate measurements: all voltage rows identical")
    return ZDATA_FLOOR_FRACTION * float(np.median(positive))


def _connectivity_repair(X, pairs, block_rows=256):
    """Bridge components of the candidate graph with the globally closest
    inter-component row pair, repeatedly, until connected."""
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    added = []
    while True:
        g = WeightedGraph.from_edges(n, [(s, t, 1.0) for s, t in pairs + added])
        ncomp, labels = connected_components(g.adjacency(), directed=False)
        if ncomp == 1:
            return added
        best = (np.inf, -1, -1)
        for lo in range(0, n, block_rows):
            hi = min(lo + block_rows, n)
            d2 = sq[lo:hi, None] + sq[None, :] - 2.0 * (X[lo:hi] @ X.T)
            np.maximum(d2, 0.0, out=d2)
            same = labels[lo:hi, None] == labels[None, :]
            d2[same] = np.inf
            flat = np.argmin(d2)
            row, col = np.unravel_index(flat, d2.shape)
            a, b = int(lo + row), int(col)
            cand = (float(d2[row, col]), min(a, b), max(a, b))
            if cand < best:
                best = cand
        _, s, t = best
        added.append((int(s), int(t)))


def init_graph(X, k):
    """Candidate graph and its maximum spanning tree seed.

    The candidate graph connects each voltage row to its ``k`` nearest rows
    (in either direction) with weight ``M / z_data``; if disconnected it is
    repaired by bridging the closest inter-component pairs.  The seed is the
    maximum-weight (minimum-distance) spanning tree.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise ValueError("X must be (N >= 2, M >= 1)")
    n, m = X.shape
    pairs = _knn_pairs(X, k)
    pairs += _connectivity_repair(X, pairs)
    s = np.asarray([p[0] for p in pairs], dtype=np.int64)
    t = np.asarray([p[1] for p in pairs], dtype=np.int64)
    z = _squared_row_distances(X, s, t)
    z = np.maximum(z, _zdata_floor(z))
    g_o = WeightedGraph._from_arrays(n, s, t, m / z)
    return g_o, maximum_spanning_tree(g_o)


def perturbation_estimate(eigenvector, eigenvalue, delta_weight, s, t):
    """First-order eigenvalue shift from adding weight ``delta_weight`` on
    edge ``(s, t)``: ``delta_weight * (u_s - u_t)^2``.

    ``eigenvalue`` identifies the perturbed pair; the estimate itself only
    needs the (unit-norm) eigenvector.
    """
    del eigenvalue
    u = np.asarray(eigenvector, dtype=np.float64)
    d = float(u[s] - u[t])
    return float(delta_weight) * d * d


def score_candidates(basis, X, candidates):
    """Score candidate edges against the current basis and the data.

    Returns :class:`EdgeCandidate` objects sorted by sensitivity descending
    (ties broken by ascending ``(s, t)``).  Zero data distances are floored
    at a small fraction of the median so distortions stay finite.
    """
    X = np.asarray(X, dtype=np.float64)
    cand = [(int(c[0]), int(c[1])) for c in candidates]
    if not cand:
        return []
    if basis.embedding is None:
        basis = build_embedding(basis, basis.inverse_variance)
    s = np.asarray([c[0] for c in cand], dtype=np.int64)
    t = np.asarray([c[1] for c in cand], dtype=np.int64)
    m = X.shape[1]
    z_data = np.atleast_1d(_squared_row_distances(X, s, t))
    z_data = np.maximum(z_data, _zdata_floor(z_data))
    z_emb = np.atleast_1d(embedding_distances(basis, s, t))
    sens = z_emb - z_data / m
    dist = m * z_emb / z_data
    order = np.lexsort((t, s, -sens))
    return [EdgeCandidate(s=int(s[i]), t=int(t[i]), z_data=float(z_data[i]),
                          z_emb=float(z_emb[i]), sensitivity=float(sens[i]),
                          distortion=float(dist[i]))
            for i in order]


def edge_scale(g, X, Y, tol=DEFAULT_CG_TOL):
    """Rescale all edge weights so solved voltage norms match measured ones.

    For each current column the voltages are re-solved on ``g``; the single
    global factor is ``sqrt(mean ||x_solved||^2 / ||x_measured||^2)``, which
    restores a uniformly mis-scaled graph exactly.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape or X.ndim != 2:
        raise ValueError("X and Y must be matching 2-D matrices")
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise ValueError("zero voltage column: scaling ratio undefined")
    lap = build_laplacian(g)
    ratios = np.empty(X.shape[1])
    for i in range(X.shape[1]):
        solved = solve_laplacian(lap, Y[:, i], tol=tol)
        ratios[i] = (np.linalg.norm(solved) / norms[i]) ** 2
    return g.scaled(float(np.sqrt(ratios.mean())))


def learn(X, Y=None, config=None):
    """Run the full learning loop; returns ``(graph, trace)``.

    Per iteration: compute the first ``r - 1`` nontrivial eigenpairs of the
    current graph (capped at ``N - 1``), score all remaining candidates,
    include those ranked in the top ``ceil(N * beta_sample)`` whose
    sensitivity exceeds ``tol`` (weight ``M / z_data``), and record the
    maximum sensitivity.  Terminates when the maximum sensitivity drops to
    ``tol``, the candidate pool runs out, or the iteration cap is reached.
    With ``Y`` given, the final graph is edge-scaled; without it
    (reduced-network learning) the unscaled weights stand.
    """
    config = config or LearnConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("X must be (N >= 2, M >= 1)")
    n, m = X.shape
    if Y is not None:
        Y = np.asarray(Y, dtype=np.float64)
        if Y.shape != X.shape:
            raise ValueError("X and Y shapes differ")
        drift = np.abs(Y.sum(axis=0))
        if np.any(drift > 1e-8 * np.sqrt(n) * np.linalg.norm(Y, axis=0)):
            raise ValueError("current columns not orthogonal to all-ones")

    g_o, tree = init_graph(X, config.k)
    pool_s, pool_t, pool_w = g_o.sources, g_o.targets, g_o.weights
    pool_z = np.atleast_1d(_squared_row_distances(X, pool_s, pool_t))
    pool_z = np.maximum(pool_z, _zdata_floor(pool_z))
    tree_keys = set((tree.sources * n + tree.targets).tolist())
    alive = np.asarray([key not in tree_keys
                        for key in (pool_s * n + pool_t).tolist()])

    graph = tree
    trace = LearnTrace()
    include_cap = math.ceil(n * config.beta_sample)
    max_iter = config.resolved_max_iterations
    modes = min(config.r - 1, n - 1)

    status = "max_iterations"
    for iteration in range(1, max_iter + 1):
        tick = time.perf_counter()
        if not alive.any():
            status = "candidate_pool_exhausted"
            break
        basis = eigensolve_smallest(build_laplacian(graph), modes)
        basis = build_embedding(basis, config.inverse_variance)
        idx = np.nonzero(alive)[0]
        z_emb = np.atleast_1d(embedding_distances(basis, pool_s[idx],
                                                  pool_t[idx]))
        sens = z_emb - pool_z[idx] / m
        s_max = float(sens.max())

        converged = s_max <= config.tol
        if not converged:
            order = np.lexsort((pool_t[idx], pool_s[idx], -sens))
            chosen = [i for i in order[:include_cap]
                      if sens[i] > config.tol]
            take = idx[chosen]
            graph = graph.with_edges(zip(pool_s[take].tolist(),
                                         pool_t[take].tolist(),
                                         pool_w[take].tolist()))
            alive[take] = False

        objective = None
        if config.record_objective:
            k_obj = min(config.objective_k, n - 1)
            objective = objective_value(graph, X, config.inverse_variance,
                                        k_obj).total
        trace.records.append(IterationRecord(
            iteration=iteration, s_max=s_max, edge_count=graph.edge_count,
            objective=objective, seconds=time.perf_counter() - tick))
        if converged:
            status = "converged"
            break

    trace.status = status
    if Y is not None:
        graph = edge_scale(graph, X, Y)
    return graph, trace
