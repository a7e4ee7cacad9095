"""Dense linear-algebra kernels shared by the solvers and problem builders.

All routines are pure functions on ndarrays and are deterministic: the SVD
carries a fixed sign convention and the spectral-bound estimator starts from
a fixed vector, so every quantity derived from them is reproducible across
runs.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "SvdResult",
    "svd",
    "symmetric_eig",
    "cholesky",
    "pseudoinverse",
    "spectral_norm_sq",
    "matrix_sqrt_psd",
]

#: singular values below RANK_CUTOFF * sigma_max count as zero in pseudoinverse
RANK_CUTOFF = 1e-12

#: Cholesky pivots at or below PIVOT_TOL * max(diag) signal failure
PIVOT_TOL = 1e-12


class SvdResult(NamedTuple):
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray


def _as_matrix(m, name="input"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def svd(m) -> SvdResult:
    """Thin SVD with a deterministic sign convention.

    The largest-magnitude entry of each left singular vector is made
    nonnegative (ties resolved toward the earlier row); the matching right
    singular vector is flipped along with it so u @ diag(s) @ v.T still
    reconstructs the input.
    """
    m = _as_matrix(m)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    v = vt.T
    # sign fix: per column of u, find the largest |entry|, earliest row on ties
    absu = np.abs(u)
    rows = np.argmax(absu, axis=0)  # argmax returns the first maximum
    signs = np.sign(u[rows, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    u = u * signs
    v = v * signs
    return SvdResult(u, s, v)


def symmetric_eig(s):
    """Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing.

    The input is symmetrized as (S + S.T)/2 before factorization.
    Returns (eigvecs, eigvals) with S = eigvecs @ diag(eigvals) @ eigvecs.T.
    """
    s = _as_matrix(s)
    if s.shape[0] != s.shape[1]:
        raise ValueError(f"symmetric_eig needs a square matrix, got {s.shape}")
    sym = 0.5 * (s + s.T)
    w, u = np.linalg.eigh(sym)
    return u[:, ::-1].copy(), w[::-1].copy()


def cholesky(s):
    """Lower-triangular Cholesky factor of a symmetric matrix, or None.

    None is a signaled outcome, not an error: it means a pivot fell at or
    below PIVOT_TOL * max(diag), which callers use to switch to an
    eigendecomposition-based factorization.
    """
    s = _as_matrix(s)
    if s.shape[0] != s.shape[1]:
        raise ValueError(f"cholesky needs a square matrix, got {s.shape}")
    try:
        low = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        return None
    pivot_floor = PIVOT_TOL * max(float(np.max(np.diag(s))), 0.0)
    if float(np.min(np.diag(low)) ** 2) <= pivot_floor:
        return None
    return low


def pseudoinverse(m):
    """Moore-Penrose inverse with singular values below RANK_CUTOFF*sigma_1
    treated as zero."""
    m = _as_matrix(m)
    return np.linalg.pinv(m, rcond=RANK_CUTOFF)


def _gram_lambda_max(m):
    # exact top eigenvalue of m.T @ m via the smaller Gram matrix
    if m.shape[0] < m.shape[1]:
        g = m @ m.T
    else:
        g = m.T @ m
    w = np.linalg.eigvalsh(g)
    return max(float(w[-1]), 0.0)


def spectral_norm_sq(m, max_iter=10000):
    """Largest eigenvalue of M^T M to a relative accuracy of about 1e-9.

    Small problems (min dimension <= 64) use an exact dense
    eigendecomposition. Larger ones run power iteration on the smaller Gram
    operator from a normalized all-ones start; the geometric decay of the
    Rayleigh-quotient increments gives an error estimate, and if the
    projected iterations to convergence are not worth it (clustered top of
    the spectrum) the routine bails out to the dense path. It never fails:
    dense eigendecomposition is the fallback.
    """
    m = _as_matrix(m)
    if m.size == 0:
        raise ValueError("spectral_norm_sq needs a nonempty matrix")
    nrm = float(np.max(np.abs(m)))
    if nrm == 0.0:
        return 0.0
    small = min(m.shape)
    if small <= 64:
        return _gram_lambda_max(m)

    if m.shape[0] < m.shape[1]:
        op = lambda v: m @ (m.T @ v)
        dim = m.shape[0]
    else:
        op = lambda v: m.T @ (m @ v)
        dim = m.shape[1]

    v = np.full(dim, 1.0 / np.sqrt(dim))
    lam_prev = 0.0
    delta_prev = None
    # beyond this many projected iterations the dense path is cheaper
    budget = max(64, small // 8)
    for it in range(max_iter):
        w = op(v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        lam = nw  # Rayleigh quotient of the Gram operator at the previous v
        delta = abs(lam - lam_prev)
        if it >= 2 and delta_prev is not None and delta_prev > 0.0:
            rho = min(delta / delta_prev, 0.999999)
            err_est = delta * rho / max(1.0 - rho, 1e-12)
            if err_est <= 1e-9 * lam:
                return lam
            if delta > 0.0:
                target = 1e-9 * lam * (1.0 - rho) / max(rho, 1e-12)
                if target > 0.0 and rho > 0.0:
                    proj = np.log(max(target, 1e-300) / delta) / np.log(rho)
                    if it + proj > budget:
                        break
        elif delta == 0.0 and it >= 2:
            return lam
        lam_prev = lam
        delta_prev = delta if delta > 0.0 else delta_prev
    return _gram_lambda_max(m)


def matrix_sqrt_psd(s):
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-1e-8 * lam_max, 0) are clamped to zero (roundoff from
    Gram products); anything more negative raises, since the input is then
    not PSD in any usable sense.
    """
    s = _as_matrix(s)
    u, w = symmetric_eig(s)
    lam_max = max(float(w[0]), 0.0)
    if w[-1] < -1e-8 * lam_max:
        raise ValueError(
            f"matrix_sqrt_psd: input is not PSD (min eigenvalue {w[-1]:.3e})"
        )
    w = np.maximum(w, 0.0)
    return (u * np.sqrt(w)) @ u.T
