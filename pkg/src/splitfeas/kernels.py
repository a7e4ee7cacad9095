"""Hot numerical kernels with a compiled core and a pure-numpy fallback.

The polar factor (nearest orthogonal matrix) is evaluated millions of times
by the alternating-projection baseline, so it is worth two implementations:

* ``splitfeas._corekernels`` - Cython, calling LAPACK/BLAS directly through
  scipy's C bindings, with a warm-started Newton iteration for the polar
  factor inside the alternating-projection loop;
* this module's ``PureBackend`` - the same algorithms through numpy/scipy.

Which one is active is decided once at import: the compiled module wins if
it imports, and ``SPLITFEAS_PURE=1`` forces the fallback. Both backends
compute the same mathematical quantities; floating-point output may differ
between backends in the last bits, but each backend on its own is fully
deterministic. ``benchmarks/bench_kernels.py`` compares their speed.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack as _lapack

__all__ = ["get_backend", "force_backend", "available_backends", "PureBackend"]

# altproj_run status codes shared by both backends
ALTPROJ_SUCCESS = 0
ALTPROJ_MAXITER = 1


def _svd_polar(m):
    u, _, vt = np.linalg.svd(m)
    return u @ vt


class PureBackend:
    """numpy/scipy implementation of the hot kernels."""

    name = "pure"

    @staticmethod
    def svd_polar(m):
        """Polar factor U V^T from the SVD. Defined for any square matrix."""
        return _svd_polar(m)

    @staticmethod
    def newton_polar(m, warm=None):
        """Polar factor by a determinant-scaled Newton iteration.

        ``warm``, when given, must be orthogonal and close to the answer;
        the iteration is then run on warm.T @ m, which is near-identity and
        converges in two or three steps. Any breakdown (singular iterate,
        no convergence, bad orthogonality) falls back to the SVD route, so
        the result is always a valid polar factor.
        """
        m = np.asarray(m, dtype=float)
        r = m.shape[0]
        k = warm.T @ m if warm is not None else m
        x = np.asarray(k, dtype=float, order="F").copy(order="F")
        sqr = np.sqrt(r)
        converged = False
        for it in range(60):
            lu, piv, info = _lapack.dgetrf(x, overwrite_a=False)
            if info != 0:
                return _svd_polar(m)
            if np.any(np.diag(lu) == 0.0):
                return _svd_polar(m)
            xinv, info = _lapack.dgetri(lu, piv, overwrite_lu=1)
            if info != 0:
                return _svd_polar(m)
            nrm_x = float(np.linalg.norm(x))
            nrm_inv = float(np.linalg.norm(xinv))
            if not np.isfinite(nrm_inv) or nrm_inv == 0.0:
                return _svd_polar(m)
            if nrm_x * nrm_inv > 1e10 * r:  # badly conditioned: use the SVD
                return _svd_polar(m)
            # Frobenius scaling equalizes ||mu X|| and ||(mu X)^-1||
            mu = float(np.sqrt(nrm_inv / nrm_x))
            if abs(mu - 1.0) < 1e-2:
                mu = 1.0
            xnew = 0.5 * (mu * x + (1.0 / mu) * xinv.T)
            delta = float(np.linalg.norm(xnew - x))
            x = np.asarray(xnew, order="F")
            if delta <= 1e-6 * sqr:
                # touch-up steps in the quadratic regime square the error
                for _ in range(1 if delta <= 1e-9 * sqr else 2):
                    lu, piv, info = _lapack.dgetrf(x, overwrite_a=False)
                    if info != 0:
                        return _svd_polar(m)
                    xinv, info = _lapack.dgetri(lu, piv, overwrite_lu=1)
                    if info != 0:
                        return _svd_polar(m)
                    x = np.asarray(0.5 * (x + xinv.T), order="F")
                converged = True
                break
        if not converged:
            return _svd_polar(m)
        if float(np.linalg.norm(x.T @ x - np.eye(r))) > 1e-11 * sqr:
            return _svd_polar(m)
        out = warm @ x if warm is not None else np.ascontiguousarray(x)
        return out

    @staticmethod
    def altproj_run(b, bdag, proj_null, q0, max_iter, min_entry_tol):
        """Modified alternating-projection loop.

        Iterates W = max(B Q, 0); Q <- polar(Bdag W + P Q) until every entry
        of B Q clears ``min_entry_tol`` or ``max_iter`` is exceeded. Returns
        (Q, iters, status, fval_history, step_norms) where fval_history[t]
        is half the squared distance of B Q^t from the nonnegative orthant.
        """
        q = np.array(q0, dtype=float)
        bq = b @ q
        fvals = []
        steps = []
        t = 0
        while True:
            neg = np.minimum(bq, 0.0)
            fvals.append(0.5 * float(np.sum(neg * neg)))
            if float(bq.min()) >= min_entry_tol:
                return q, t, ALTPROJ_SUCCESS, fvals, steps
            if t > max_iter:
                return q, t, ALTPROJ_MAXITER, fvals, steps
            w = np.maximum(bq, 0.0)
            target = bdag @ w + proj_null @ q
            qn = PureBackend.newton_polar(target)
            steps.append(float(np.linalg.norm(qn - q)))
            q = qn
            bq = b @ q
            t += 1


_BACKENDS = {"pure": PureBackend}
try:  # compiled core is optional; pure fallback keeps everything working
    if os.environ.get("SPLITFEAS_PURE", "") != "1":
        from . import _corekernels as _core

        _BACKENDS["core"] = _core.CoreBackend
except ImportError:
    pass

_active = _BACKENDS.get("core", PureBackend)


def available_backends():
    return sorted(_BACKENDS)


def get_backend():
    """The kernel backend selected at import (or forced afterwards)."""
    return _active


def force_backend(name):
    """Switch backends by name ('core' or 'pure'); mainly for tests/benchmarks."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}")
    _active = _BACKENDS[name]
    return _active
