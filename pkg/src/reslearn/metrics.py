"""Post-hoc evaluation of a learned graph against its ground truth: spectrum
comparison, effective-resistance correlation, layout coordinates, distortion
statistics, and the CSV emitters the pipeline writes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import build_laplacian, effective_resistance
from .learner import score_candidates
from .spectral import build_embedding, eigensolve_smallest

# Below this many total node pairs the resistance report enumerates all of
# them instead of sampling.
EXHAUSTIVE_PAIR_LIMIT = 10_000


@dataclass(frozen=True)
class EvalReport:
    """Quality metrics of a learned graph relative to the truth."""

    spectrum_true: np.ndarray
    spectrum_learned: np.ndarray
    resistance_pairs: np.ndarray  # (k, 2) columns (R_true, R_learned)
    pearson_r: float
    edge_counts: tuple[int, int]  # (|E_true|, |E_learned|)
    distortion_max: float | None = None
    distortion_mean: float | None = None


def compare_spectra(g_true, g_learned, count, method="auto"):
    """First ``count`` nontrivial eigenvalues of both graphs plus per-index
    relative errors ``|learned - true| / true``."""
    lam_true = eigensolve_smallest(build_laplacian(g_true), count,
                                   method=method).eigenvalues
    lam_learned = eigensolve_smallest(build_laplacian(g_learned), count,
                                      method=method).eigenvalues
    rel = np.abs(lam_learned - lam_true) / lam_true
    return lam_true, lam_learned, rel


def _sample_pairs(n, pair_count, seed):
    total = n * (n - 1) // 2
    if total < EXHAUSTIVE_PAIR_LIMIT or pair_count >= total:
        return [(s, t) for s in range(n) for t in range(s + 1, n)]
    rng = np.random.default_rng(seed)
    if total <= 1_000_000:
        flat = np.sort(rng.choice(total, size=pair_count, replace=False))
    else:
        picked = set()
        while len(picked) < pair_count:
            picked.update(rng.integers(0, total,
                                       size=pair_count - len(picked)).tolist())
        flat = np.sort(np.fromiter(picked, dtype=np.int64,
                                   count=pair_count))
    # Invert the triangular linear index: pairs (s, t) with s < t.
    pairs = []
    for f in flat:
        s = int((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * f)) // 2)
        start = s * (2 * n - s - 1) // 2
        pairs.append((s, int(f - start + s + 1)))
    return pairs


def pearson(a, b):
    """Pearson correlation with a zero-variance guard."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.std() == 0 or b.std() == 0:
        return 1.0 if np.allclose(a, b) else 0.0
    return float(np.corrcoef(a, b)[0, 1])


def resistance_correlation(g_true, g_learned, pair_count, seed):
    """Effective resistances of sampled node pairs on both graphs.

    Pairs are sampled without replacement; below
    :data:`EXHAUSTIVE_PAIR_LIMIT` total pairs the enumeration is exhaustive.
    Returns ``(pairs, r_true, r_learned, pearson_r)``.
    """
    if g_true.node_count != g_learned.node_count:
        raise ValueError("graphs must share the node set")
    n = g_true.node_count
    if n < 2:
        raise ValueError("need at least 2 nodes")
    pairs = _sample_pairs(n, pair_count, seed)
    r_true = np.asarray(effective_resistance(g_true, pairs))
    r_learned = np.asarray(effective_resistance(g_learned, pairs))
    return pairs, r_true, r_learned, pearson(r_true, r_learned)


def layout_coordinates(g, method="auto"):
    """2-D spectral layout: node coordinates from the first two nontrivial
    eigenvectors, sign-fixed so the largest-magnitude entry is positive."""
    if g.node_count < 3:
        raise ValueError("layout needs at least 3 nodes")
    basis = eigensolve_smallest(build_laplacian(g), 2, method=method)
    return basis.eigenvectors.copy()


def distortion_stats(g, X, candidates, mode_count=None, inverse_variance=0.0,
                     bins=10):
    """Embedding distortion over the given edges with the full available
    basis (all ``N - 1`` nontrivial modes unless ``mode_count`` is given).

    Returns ``(eta_max, eta_mean, (histogram_counts, bin_edges))``.
    """
    n = g.node_count
    modes = mode_count if mode_count is not None else n - 1
    basis = eigensolve_smallest(build_laplacian(g), modes)
    basis = build_embedding(basis, inverse_variance)
    scored = score_candidates(basis, X, candidates)
    eta = np.asarray([c.distortion for c in scored])
    span = float(eta.max() - eta.min())
    if span < 1e-12 * max(1.0, abs(float(eta.max()))):
        hist_range = (float(eta.min()) - 0.5, float(eta.max()) + 0.5)
    else:
        hist_range = (float(eta.min()), float(eta.max()))
    counts, edges = np.histogram(eta, bins=bins, range=hist_range)
    return float(eta.max()), float(eta.mean()), (counts, edges)


def evaluate(g_true, g_learned, spectrum_count=10, pair_count=1000, seed=0,
             X=None, candidates=None):
    """Assemble an :class:`EvalReport`; distortion statistics require the
    measurement matrix and a candidate edge list."""
    lam_t, lam_l, _ = compare_spectra(g_true, g_learned, spectrum_count)
    _, r_t, r_l, corr = resistance_correlation(g_true, g_learned, pair_count,
                                               seed)
    dist_max = dist_mean = None
    if X is not None and candidates is not None:
        dist_max, dist_mean, _ = distortion_stats(g_learned, X, candidates)
    return EvalReport(
        spectrum_true=lam_t, spectrum_learned=lam_l,
        resistance_pairs=np.column_stack([r_t, r_l]),
        pearson_r=corr,
        edge_counts=(g_true.edge_count, g_learned.edge_count),
        distortion_max=dist_max, distortion_mean=dist_mean)


def write_spectra_csv(path, spectrum_true, spectrum_learned):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,lambda_true,lambda_learned\n")
        for i, (lt, ll) in enumerate(zip(spectrum_true, spectrum_learned)):
            fh.write(f"{i + 2},{lt:.17g},{ll:.17g}\n")


def write_resistance_scatter_csv(path, pairs, r_true, r_learned):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("s,t,r_true,r_learned\n")
        for (s, t), rt, rl in zip(pairs, r_true, r_learned):
            fh.write(f"{s},{t},{rt:.17g},{rl:.17g}\n")


def write_trace_csv(path, trace):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,s_max,edges,F\n")
        for rec in trace.records:
            obj = "" if rec.objective is None else f"{rec.objective:.17g}"
            fh.write(f"{rec.iteration},{rec.s_max:.17g},{rec.edge_count},"
                     f"{obj}\n")


def write_layout_csv(path, coords):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("node,x,y\n")
        for i, (x, y) in enumerate(coords):
            fh.write(f"{i},{x:.17g},{y:.17g}\n")
