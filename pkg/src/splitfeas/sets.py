"""Closed sets with deterministic projections.

Every set exposes project/distance/contains and a convexity flag. The
nonconvex kinds have set-valued projections in principle; explicit tie rules
(lowest index for thresholding, the SVD sign convention for polar factors)
make them single-valued so identical inputs always map to identical outputs.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .numerics import svd

__all__ = [
    "ProjectableSet",
    "NonnegativeOrthant",
    "OrthogonalMatrices",
    "BoxSparseVectors",
    "ColumnSparseMatrices",
    "ShiftedSparseVectors",
    "project_nonneg",
    "project_orthogonal",
    "project_sparse",
    "project_box_sparse",
    "project_column_sparse",
    "project_shifted_sparse",
]

#: orthogonality tolerance for membership tests, compatible with SVD accuracy
ORTH_TOL = 1e-9


def project_nonneg(x):
    """Entrywise projection onto the nonnegative orthant."""
    return np.maximum(np.asarray(x, dtype=float), 0.0)


def project_orthogonal(x):
    """Nearest orthogonal matrix: the polar factor U V^T from the SVD."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    u, _, v = svd(x)
    return u @ v.T


def _topk_stable(score, k):
    # indices of the k largest scores, ties toward the lowest index
    order = np.argsort(-score, kind="stable")
    return order[:k]


def project_sparse(x, s):
    """Keep the s largest-magnitude entries (ties toward the lowest index)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if not 0 <= s <= n:
        raise ValueError(f"sparsity {s} out of range for dimension {n}")
    if s == n:
        return x.copy()
    out = np.zeros_like(x)
    if s == 0:
        return out
    keep = _topk_stable(np.abs(x), s)
    out[keep] = x[keep]
    return out


def project_box_sparse(x, s, beta):
    """Projection onto {x: ||x||_0 <= s, ||x||_inf <= beta}.

    Coordinates are ranked by the distance-squared gain of keeping them,
    g_i = x_i^2 - (|x_i| - beta)_+^2, which reduces to plain magnitude
    ranking whenever the box constraint is inactive. Kept entries are
    clipped to [-beta, beta].
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if not 0 <= s <= n:
        raise ValueError(f"sparsity {s} out of range for dimension {n}")
    if beta <= 0:
        raise ValueError("beta must be positive")
    out = np.zeros_like(x)
    if s == 0:
        return out
    absx = np.abs(x)
    gain = absx**2 - np.maximum(absx - beta, 0.0) ** 2
    keep = _topk_stable(gain, s)
    out[keep] = np.clip(x[keep], -beta, beta)
    return out


def project_column_sparse(x, s):
    """Apply project_sparse to each column independently."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected a matrix")
    if not 0 <= s <= x.shape[0]:
        raise ValueError(f"sparsity {s} out of range for {x.shape[0]} rows")
    if s == x.shape[0]:
        return x.copy()
    out = np.zeros_like(x)
    if s == 0:
        return out
    order = np.argsort(-np.abs(x), axis=0, kind="stable")
    rows = order[:s, :]
    cols = np.arange(x.shape[1])
    out[rows, cols] = x[rows, cols]
    return out


def project_shifted_sparse(y, r, b):
    """Projection onto {y: ||y - b||_0 <= r}: b plus a thresholded residual."""
    y = np.asarray(y, dtype=float)
    b = np.asarray(b, dtype=float)
    if y.shape != b.shape:
        raise ValueError(f"shape mismatch: point {y.shape} vs shift {b.shape}")
    return b + project_sparse(y - b, r)


class ProjectableSet:
    """Base class: a closed set with a single-valued projection."""

    is_convex = False

    def project(self, p):
        raise NotImplementedError

    def contains(self, p):
        raise NotImplementedError

    def distance(self, p):
        p = np.asarray(p, dtype=float)
        return float(np.linalg.norm((p - self.project(p)).ravel()))


class NonnegativeOrthant(ProjectableSet):
    """All arrays of the given shape with nonnegative entries."""

    is_convex = True

    def __init__(self, *shape):
        self.shape = tuple(int(v) for v in shape)

    def project(self, p):
        return project_nonneg(p)

    def contains(self, p):
        return bool(np.all(np.asarray(p) >= 0.0))

    def __repr__(self):
        return f"NonnegativeOrthant{self.shape}"


class OrthogonalMatrices(ProjectableSet):
    """r x r matrices Q with Q^T Q = I."""

    is_convex = False

    def __init__(self, r):
        self.r = int(r)
        self.shape = (self.r, self.r)

    def project(self, p):
        return kernels.get_backend().svd_polar(np.asarray(p, dtype=float))

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != self.shape:
            return False
        return float(np.linalg.norm(p.T @ p - np.eye(self.r))) < ORTH_TOL

    def __repr__(self):
        return f"OrthogonalMatrices({self.r})"


class BoxSparseVectors(ProjectableSet):
    """Vectors with at most s nonzeros, each bounded by beta in magnitude."""

    def __init__(self, n, s, beta=1e8):
        self.n = int(n)
        self.s = int(s)
        self.beta = float(beta)
        if not 0 <= self.s <= self.n:
            raise ValueError(f"sparsity {s} out of range for dimension {n}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        self.shape = (self.n,)

    @property
    def is_convex(self):
        return self.s >= self.n  # then the set is just the box

    def project(self, p):
        return project_box_sparse(p, self.s, self.beta)

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        return (
            p.shape == self.shape
            and int(np.count_nonzero(p)) <= self.s
            and bool(np.all(np.abs(p) <= self.beta))
        )

    def __repr__(self):
        return f"BoxSparseVectors(n={self.n}, s={self.s}, beta={self.beta:g})"


class ColumnSparseMatrices(ProjectableSet):
    """Matrices whose every column has at most s nonzeros."""

    def __init__(self, rows, cols, s):
        self.rows = int(rows)
        self.cols = int(cols)
        self.s = int(s)
        if not 0 <= self.s <= self.rows:
            raise ValueError(f"sparsity {s} out of range for {rows} rows")
        self.shape = (self.rows, self.cols)

    @property
    def is_convex(self):
        return self.s >= self.rows

    def project(self, p):
        return project_column_sparse(p, self.s)

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != self.shape:
            return False
        return bool(np.all(np.count_nonzero(p, axis=0) <= self.s))

    def __repr__(self):
        return f"ColumnSparseMatrices({self.rows}x{self.cols}, s={self.s})"


class ShiftedSparseVectors(ProjectableSet):
    """The set {y: ||y||_0 <= r} + b; with r = 0 it is the singleton {b}."""

    def __init__(self, r, b):
        self.b = np.asarray(b, dtype=float).copy()
        self.r = int(r)
        if not 0 <= self.r <= self.b.size:
            raise ValueError(f"sparsity {r} out of range for dimension {self.b.size}")
        self.shape = self.b.shape

    @property
    def is_convex(self):
        return self.r == 0 or self.r >= self.b.size

    def project(self, p):
        return project_shifted_sparse(p, self.r, self.b)

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != self.shape:
            return False
        return int(np.count_nonzero(p - self.b)) <= self.r

    def __repr__(self):
        return f"ShiftedSparseVectors(r={self.r}, m={self.b.size})"
