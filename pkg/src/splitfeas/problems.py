"""Instance generators and problem builders for the three applications.

Randomness policy: every generator takes a ``seed`` that may be an integer,
a ``numpy.random.SeedSequence`` or a ``Generator``, and draws from PCG64 via
``numpy.random.default_rng``. Derived streams (per trial, per restart) are
produced with ``derive_seed(seed, *indices)``, which uses SeedSequence
spawn keys, so instances are bitwise reproducible and independent across
trials. Gaussians come from ``Generator.standard_normal`` (ziggurat).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import cholesky, matrix_sqrt_psd, spectral_norm_sq
from .sets import (
    BoxSparseVectors,
    ColumnSparseMatrices,
    NonnegativeOrthant,
    OrthogonalMatrices,
    ShiftedSparseVectors,
    project_column_sparse,
    project_orthogonal,
)
from .solvers import LeftMultiplyOperator, MatrixOperator, SplitProblem

__all__ = [
    "CpInstance",
    "OutlierInstance",
    "derive_seed",
    "cp_initial_factor",
    "gen_random_cp",
    "g_lambda",
    "cp_problem",
    "gen_sparse_mf",
    "sparse_mf_problem",
    "gen_outlier_instance",
    "outlier_problem",
    "random_orthogonal_init",
    "load_matrix",
    "save_matrix",
]

#: magnitude bound of the outlier-detection ground set
BOX_BOUND = 1e8

# the 5x5 factorization-hardness family: G near the boundary of the
# completely positive cone, P comfortably inside it
_G5 = np.array(
    [
        [8.0, 5.0, 1.0, 1.0, 5.0],
        [5.0, 8.0, 5.0, 1.0, 1.0],
        [1.0, 5.0, 8.0, 5.0, 1.0],
        [1.0, 1.0, 5.0, 8.0, 5.0],
        [5.0, 1.0, 1.0, 5.0, 8.0],
    ]
)
_P5 = np.eye(5) + np.ones((5, 5))


def derive_seed(seed, *indices):
    """Independent child SeedSequence for (seed, indices); reproducible."""
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(i) for i in indices))


@dataclass
class CpInstance:
    """A completely positive matrix with its initial (signed) factor."""

    G: np.ndarray
    B: np.ndarray
    r: int


@dataclass
class OutlierInstance:
    """Planted sparse regression data with a block of corrupted measurements."""

    A: np.ndarray
    b: np.ndarray
    w_true: np.ndarray
    outlier_indices: np.ndarray


def gen_random_cp(n, seed):
    """Random completely positive G = |N| |N|^T with N an n x 2n Gaussian."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    g0 = np.abs(rng.standard_normal((n, 2 * n)))
    return g0 @ g0.T


def g_lambda(lam):
    """Convex combination lam*G + (1-lam)*P of the hard 5x5 pair."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    return lam * _G5 + (1.0 - lam) * _P5


def cp_initial_factor(g, r):
    """Initial n x r factor B with B B^T = G.

    The base factor is the Cholesky factor of G, or the symmetric PSD square
    root when Cholesky signals failure. The column with the fewest strictly
    negative entries (ties toward the lowest index) is scaled by 1/sqrt(m),
    m = r - n + 1, and appended m-1 more times, which preserves B B^T = G
    while padding to r columns.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    r = int(r)
    if r < n:
        raise ValueError(f"need r >= n, got r={r} n={n}")
    bbar = cholesky(g)
    if bbar is None:
        bbar = matrix_sqrt_psd(g)
    m = r - n + 1
    neg_counts = np.sum(bbar < 0.0, axis=0)
    j = int(np.argmin(neg_counts))  # argmin takes the first minimum
    scaled = bbar[:, j] / np.sqrt(m)
    b = np.empty((n, r))
    b[:, :n] = bbar
    b[:, j] = scaled
    for k in range(m - 1):
        b[:, n + k] = scaled
    return b


def cp_problem(b):
    """Split problem 'find orthogonal Q with B Q entrywise nonnegative'."""
    b = np.asarray(b, dtype=float)
    n, r = b.shape
    return SplitProblem(
        op=LeftMultiplyOperator(b, r),
        C=OrthogonalMatrices(r),
        D=NonnegativeOrthant(n, r),
    )


def gen_sparse_mf(n, s, seed):
    """PSD matrix with a planted uniformly column-sparse factor.

    Draws a Gaussian P0, projects its columns to s-sparsity to get P~, and
    returns (G, B) with G = P~ P~^T and B = G^(1/2).
    """
    if not 1 <= s <= n:
        raise ValueError(f"need 1 <= s <= n, got s={s} n={n}")
    rng = np.random.default_rng(seed)
    p0 = rng.standard_normal((n, n))
    pt = project_column_sparse(p0, s)
    g = pt @ pt.T
    return g, matrix_sqrt_psd(g)


def sparse_mf_problem(b, s):
    """Split problem 'find orthogonal Q with every column of B Q s-sparse'."""
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if b.shape != (n, n):
        raise ValueError("B must be square")
    return SplitProblem(
        op=LeftMultiplyOperator(b, n),
        C=OrthogonalMatrices(n),
        D=ColumnSparseMatrices(n, n, s),
    )


def gen_outlier_instance(n, m, s, r, seed):
    """Sparse linear system with r grossly corrupted measurements.

    A is Gaussian with unit-normalized columns, w is s-sparse Gaussian on a
    uniformly random support, and b = A w except that the last r entries are
    shifted by +-10 (sign of an independent Gaussian).
    """
    if not 0 <= s <= n:
        raise ValueError("need 0 <= s <= n")
    if not 0 <= r <= m:
        raise ValueError("need 0 <= r <= m")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, n))
    a /= np.linalg.norm(a, axis=0, keepdims=True)
    w = np.zeros(n)
    support = rng.permutation(n)[:s]
    w[support] = rng.standard_normal(s)
    b = a @ w
    if r > 0:
        nbar = rng.standard_normal(r)
        b[m - r:] += 10.0 * np.sign(nbar)
    return OutlierInstance(
        A=a, b=b, w_true=w, outlier_indices=np.arange(m - r, m)
    )


def outlier_problem(inst, s, r):
    """Split problem 'find s-sparse bounded x with A x matching b off r entries'."""
    m, n = inst.A.shape
    return SplitProblem(
        op=MatrixOperator(inst.A),
        C=BoxSparseVectors(n, s, BOX_BOUND),
        D=ShiftedSparseVectors(r, inst.b),
    )


def random_orthogonal_init(r, seed):
    """Projection of an r x r standard Gaussian matrix onto the orthogonal set."""
    if r < 1:
        raise ValueError("r must be positive")
    rng = np.random.default_rng(seed)
    return project_orthogonal(rng.standard_normal((r, r)))


def save_matrix(path, m):
    """Write a matrix as 'rows cols' followed by row-major entries."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("save_matrix needs a 2-d array")
    with open(path, "w") as fh:
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(repr(v) for v in row) + "\n")


def load_matrix(path):
    """Read a matrix written by save_matrix (plain text, row-major)."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: first line must be 'rows cols'")
        try:
            rows, cols = int(header[0]), int(header[1])
        except ValueError as exc:
            raise ValueError(f"{path}: bad header {header!r}") from exc
        data = np.loadtxt(fh, dtype=float, ndmin=1)
    flat = np.asarray(data).ravel()
    if flat.size != rows * cols:
        raise ValueError(
            f"{path}: expected {rows * cols} entries, found {flat.size}"
        )
    return flat.reshape(rows, cols)
