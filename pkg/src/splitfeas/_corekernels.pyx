# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: polar factors and the alternating-projection loop.

Same algorithms as the pure backend in ``splitfeas.kernels``, but with the
per-iteration work done through scipy's C-level LAPACK/BLAS bindings and
preallocated buffers, which removes the Python call overhead that dominates
at the small matrix sizes these loops run at.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt
from scipy.linalg.cython_blas cimport dgemm
from scipy.linalg.cython_lapack cimport dgesdd, dgetrf, dgetri

cnp.import_array()

ALTPROJ_SUCCESS = 0
ALTPROJ_MAXITER = 1


cdef int _svd_polar_inplace(double[::1, :] a, double[::1, :] out,
                            double[::1, :] u, double[::1, :] vt,
                            double[::1] sig, double[::1] work, int lwork,
                            int[::1] iwork) except -1:
    """out = polar factor of a (a is destroyed). Returns LAPACK info."""
    cdef int r = a.shape[0]
    cdef int info = 0
    cdef char jobz = b'A'
    cdef double one = 1.0, zero = 0.0
    cdef char nn = b'N'
    dgesdd(&jobz, &r, &r, &a[0, 0], &r, &sig[0], &u[0, 0], &r,
           &vt[0, 0], &r, &work[0], &lwork, &iwork[0], &info)
    if info != 0:
        return info
    dgemm(&nn, &nn, &r, &r, &r, &one, &u[0, 0], &r, &vt[0, 0], &r,
          &zero, &out[0, 0], &r)
    return 0


cdef int _newton_polar_inplace(double[::1, :] k, double[::1, :] out,
                               double[::1, :] lu, double[::1, :] xnew,
                               int[::1] ipiv, double[::1] work,
                               int lwork) except -1:
    """out = polar factor of k via scaled Newton. Returns 0, or 1 to signal
    that the caller should fall back to the SVD route. k is preserved in out
    only on success."""
    cdef int r = k.shape[0]
    cdef int i, j, it, info, cleanup, n_cleanup
    cdef double mu, inv_mu, delta, diff, v, tol, nrm_x, nrm_inv
    cdef double one = 1.0, zero = 0.0
    cdef char tt = b'T', nn = b'N'
    cdef double[::1, :] x = out
    x[:, :] = k
    tol = 1e-6 * sqrt(<double>r)
    for it in range(60):
        lu[:, :] = x
        dgetrf(&r, &r, &lu[0, 0], &r, &ipiv[0], &info)
        if info != 0:
            return 1
        for i in range(r):
            if lu[i, i] == 0.0:
                return 1
        dgetri(&r, &lu[0, 0], &r, &ipiv[0], &work[0], &lwork, &info)
        if info != 0:
            return 1
        nrm_x = 0.0
        nrm_inv = 0.0
        for j in range(r):
            for i in range(r):
                nrm_x += x[i, j] * x[i, j]
                nrm_inv += lu[i, j] * lu[i, j]
        if not (nrm_inv > 0.0) or nrm_inv != nrm_inv:
            return 1
        if nrm_x * nrm_inv > 1e20 * r * r:  # badly conditioned: use the SVD
            return 1
        # Frobenius scaling equalizes ||mu X|| and ||(mu X)^-1||
        mu = sqrt(sqrt(nrm_inv / nrm_x))
        if fabs(mu - 1.0) < 1e-2:
            mu = 1.0
        inv_mu = 1.0 / mu
        delta = 0.0
        for j in range(r):
            for i in range(r):
                v = 0.5 * (mu * x[i, j] + inv_mu * lu[j, i])
                diff = v - x[i, j]
                delta += diff * diff
                xnew[i, j] = v
        x[:, :] = xnew
        if sqrt(delta) <= tol:
            # quadratic regime: one touch-up step squares the error, so a
            # delta below 1e-9*sqrt(r) needs one, anything else two
            n_cleanup = 1 if sqrt(delta) <= 1e-9 * sqrt(<double>r) else 2
            for cleanup in range(n_cleanup):
                lu[:, :] = x
                dgetrf(&r, &r, &lu[0, 0], &r, &ipiv[0], &info)
                if info != 0:
                    return 1
                dgetri(&r, &lu[0, 0], &r, &ipiv[0], &work[0], &lwork, &info)
                if info != 0:
                    return 1
                for j in range(r):
                    for i in range(r):
                        xnew[i, j] = 0.5 * (x[i, j] + lu[j, i])
                x[:, :] = xnew
            # orthogonality guard: ||x^T x - I||_F must be at roundoff level
            dgemm(&tt, &nn, &r, &r, &r, &one, &x[0, 0], &r, &x[0, 0], &r,
                  &zero, &lu[0, 0], &r)
            delta = 0.0
            for j in range(r):
                for i in range(r):
                    v = lu[i, j]
                    if i == j:
                        v -= 1.0
                    delta += v * v
            if sqrt(delta) > 1e-11 * sqrt(<double>r):
                return 1
            return 0
    return 1


def svd_polar(m):
    """Polar factor U V^T of a square matrix via dgesdd."""
    cdef cnp.ndarray[double, ndim=2] a = np.asfortranarray(m, dtype=np.float64).copy(order="F")
    cdef int r = a.shape[0]
    if a.shape[1] != r:
        raise ValueError("svd_polar needs a square matrix")
    out = np.empty((r, r), dtype=np.float64, order="F")
    u = np.empty((r, r), dtype=np.float64, order="F")
    vt = np.empty((r, r), dtype=np.float64, order="F")
    sig = np.empty(r, dtype=np.float64)
    iwork = np.empty(8 * r, dtype=np.intc)
    cdef int lwork = _gesdd_lwork(r)
    work = np.empty(lwork, dtype=np.float64)
    cdef int info = _svd_polar_inplace(a, out, u, vt, sig, work, lwork, iwork)
    if info != 0:
        raise np.linalg.LinAlgError(f"SVD failed to converge (info={info})")
    return np.ascontiguousarray(out)


cdef int _gesdd_lwork(int r):
    cdef char jobz = b'A'
    cdef int info = 0, lwork = -1
    cdef double wq = 0.0
    cdef double dummy = 0.0
    cdef int idummy = 0
    dgesdd(&jobz, &r, &r, &dummy, &r, &dummy, &dummy, &r, &dummy, &r,
           &wq, &lwork, &idummy, &info)
    return <int>wq + 1


def newton_polar(m, warm=None):
    """Polar factor via scaled Newton; falls back to the SVD on breakdown."""
    cdef cnp.ndarray[double, ndim=2] mm = np.asarray(m, dtype=np.float64)
    cdef int r = mm.shape[0]
    if mm.shape[1] != r:
        raise ValueError("newton_polar needs a square matrix")
    k = np.asfortranarray(warm.T @ mm) if warm is not None else np.asfortranarray(mm)
    out = np.empty((r, r), dtype=np.float64, order="F")
    lu = np.empty((r, r), dtype=np.float64, order="F")
    xnew = np.empty((r, r), dtype=np.float64, order="F")
    ipiv = np.empty(r, dtype=np.intc)
    cdef int lwork = max(64 * r, r * r)
    work = np.empty(lwork, dtype=np.float64)
    cdef int fail = _newton_polar_inplace(k, out, lu, xnew, ipiv, work, lwork)
    if fail:
        return svd_polar(mm)
    res = np.ascontiguousarray(out)
    if warm is not None:
        res = warm @ res
    return res


def altproj_run(b, bdag, proj_null, q0, int max_iter, double min_entry_tol):
    """Modified alternating-projection loop (see PureBackend.altproj_run)."""
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] bf = np.asfortranarray(b, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] bd = np.asfortranarray(bdag, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] pn = np.asfortranarray(proj_null, dtype=np.float64)
    cdef int n = bf.shape[0]
    cdef int r = bf.shape[1]
    cdef double[::1, :] q = np.asfortranarray(q0, dtype=np.float64).copy(order="F")
    cdef double[::1, :] bq = np.empty((n, r), dtype=np.float64, order="F")
    cdef double[::1, :] w = np.empty((n, r), dtype=np.float64, order="F")
    cdef double[::1, :] target = np.empty((r, r), dtype=np.float64, order="F")
    cdef double[::1, :] qn = np.empty((r, r), dtype=np.float64, order="F")
    cdef double[::1, :] lu = np.empty((r, r), dtype=np.float64, order="F")
    cdef double[::1, :] xnew = np.empty((r, r), dtype=np.float64, order="F")
    cdef double[::1, :] svda = np.empty((r, r), dtype=np.float64, order="F")
    cdef double[::1, :] svdu = np.empty((r, r), dtype=np.float64, order="F")
    cdef double[::1, :] svdvt = np.empty((r, r), dtype=np.float64, order="F")
    cdef double[::1] sig = np.empty(r, dtype=np.float64)
    cdef int[::1] ipiv = np.empty(r, dtype=np.intc)
    cdef int[::1] iwork = np.empty(8 * r, dtype=np.intc)
    cdef int lw_svd = _gesdd_lwork(r)
    cdef int lw_inv = max(64 * r, r * r)
    cdef int lwork = max(lw_svd, lw_inv)
    cdef double[::1] work = np.empty(lwork, dtype=np.float64)
    fvals = np.empty(max_iter + 2, dtype=np.float64)
    steps = np.empty(max_iter + 1, dtype=np.float64)
    cdef double[::1] fv = fvals
    cdef double[::1] st = steps
    cdef double[::1, :] bview = bf
    cdef double[::1, :] bdview = bd
    cdef double[::1, :] pview = pn

    cdef char nn = b'N'
    cdef double one = 1.0, zero = 0.0
    cdef int t = 0, i, j, info, fail
    cdef double minv, v, d2, stepsq, diff
    cdef int status = ALTPROJ_MAXITER

    while True:
        # bq = B @ Q
        dgemm(&nn, &nn, &n, &r, &r, &one, &bview[0, 0], &n, &q[0, 0], &r,
              &zero, &bq[0, 0], &n)
        minv = bq[0, 0]
        d2 = 0.0
        for j in range(r):
            for i in range(n):
                v = bq[i, j]
                if v < minv:
                    minv = v
                if v < 0.0:
                    d2 += v * v
                    w[i, j] = 0.0
                else:
                    w[i, j] = v
        fv[t] = 0.5 * d2
        if minv >= min_entry_tol:
            status = ALTPROJ_SUCCESS
            break
        if t > max_iter:
            status = ALTPROJ_MAXITER
            break
        # target = Bdag @ W + P @ Q
        dgemm(&nn, &nn, &r, &r, &n, &one, &bdview[0, 0], &r, &w[0, 0], &n,
              &zero, &target[0, 0], &r)
        dgemm(&nn, &nn, &r, &r, &r, &one, &pview[0, 0], &r, &q[0, 0], &r,
              &one, &target[0, 0], &r)
        fail = _newton_polar_inplace(target, qn, lu, xnew, ipiv, work, lw_inv)
        if fail:
            svda[:, :] = target
            info = _svd_polar_inplace(svda, qn, svdu, svdvt, sig, work,
                                      lw_svd, iwork)
            if info != 0:
                raise np.linalg.LinAlgError("SVD failed inside altproj_run")
        stepsq = 0.0
        for j in range(r):
            for i in range(r):
                diff = qn[i, j] - q[i, j]
                stepsq += diff * diff
        st[t] = sqrt(stepsq)
        q[:, :] = qn
        t += 1

    qout = np.ascontiguousarray(q)
    return qout, t, status, fvals[: t + 1].copy(), steps[:t].copy()


class CoreBackend:
    """Compiled kernel backend (LAPACK/BLAS through Cython)."""

    name = "core"
    svd_polar = staticmethod(svd_polar)
    newton_polar = staticmethod(newton_polar)
    altproj_run = staticmethod(altproj_run)
