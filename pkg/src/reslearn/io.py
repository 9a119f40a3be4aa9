"""File formats: Matrix Market graphs and X/Y measurement matrices.

Measurement matrices travel either as CSV or as a raw little-endian binary
with an 8-byte magic, two uint64 dimensions, and float64 data column-major:

    bytes 0..7    magic ``RESMAT01``
    bytes 8..15   N (rows, uint64 LE)
    bytes 16..23  M (columns, uint64 LE)
    bytes 24..    N*M float64, column-major
"""

from __future__ import annotations

import struct

import numpy as np
import scipy.io
import scipy.sparse as sp

from .graphs import WeightedGraph

MATRIX_MAGIC = b"RESMAT01"


def read_graph_mtx(path):
    """Read a symmetric weighted adjacency from Matrix Market coordinates.

    Accepts symmetric storage (either triangle) or general storage with one
    or both triangles; mirrored duplicates must agree.  Self-loops and
    non-positive weights are rejected; explicit zeros are dropped.
    """
    mat = scipy.io.mmread(path)
    coo = sp.coo_matrix(mat)
    if coo.shape[0] != coo.shape[1]:
        raise ValueError(f"{path}: adjacency must be square")
    n = coo.shape[0]
    r, c, w = coo.row, coo.col, coo.data
    nz = w != 0
    r, c, w = r[nz], c[nz], w[nz]
    if np.any(r == c):
        raise ValueError(f"{path}: self-loop entries are not allowed")
    if np.any(w < 0):
        raise ValueError(f"{path}: negative weights are not allowed")
    lo, hi = np.minimum(r, c), np.maximum(r, c)
    order = np.lexsort((hi, lo))
    lo, hi, w = lo[order], hi[order], w[order]
    keys = lo.astype(np.int64) * n + hi
    uniq, start = np.unique(keys, return_index=True)
    # Mirrored/duplicate entries must carry the same weight.
    for k in range(len(uniq)):
        stop = start[k + 1] if k + 1 < len(uniq) else len(keys)
        group = w[start[k]:stop]
        if group.max() - group.min() > 1e-12 * max(1.0, abs(group[0])):
            s, t = int(lo[start[k]]), int(hi[start[k]])
            raise ValueError(f"{path}: conflicting weights for edge ({s},{t})")
    return WeightedGraph._from_arrays(n, lo[start], hi[start], w[start])


def write_graph_mtx(path, g, comment=""):
    """Write the adjacency in symmetric Matrix Market coordinate format."""
    scipy.io.mmwrite(str(path), g.adjacency(), comment=comment,
                     field="real", precision=17, symmetry="symmetric")


def write_matrix_binary(path, A):
    """Write a float64 matrix in the raw binary layout described above."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    n, m = A.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<8sQQ", MATRIX_MAGIC, n, m))
        fh.write(np.asfortranarray(A).tobytes(order="F"))


def read_matrix_binary(path):
    with open(path, "rb") as fh:
        header = fh.read(24)
        if len(header) != 24 or header[:8] != MATRIX_MAGIC:
            raise ValueError(f"{path}: not a measurement matrix file")
        _, n, m = struct.unpack("<8sQQ", header)
        data = np.fromfile(fh, dtype="<f8", count=n * m)
    if data.size != n * m:
        raise ValueError(f"{path}: truncated data section")
    return data.reshape((n, m), order="F")


def write_matrix_csv(path, A):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    np.savetxt(path, A, delimiter=",", fmt="%.17g")


def read_matrix_csv(path):
    A = np.loadtxt(path, delimiter=",", ndmin=2)
    return np.asarray(A, dtype=np.float64)


def read_matrix(path):
    """Read X/Y data, sniffing the binary magic and falling back to CSV."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic == MATRIX_MAGIC:
        return read_matrix_binary(path)
    return read_matrix_csv(path)
