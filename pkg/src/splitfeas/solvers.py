"""Split-feasibility solvers.

Find x in C with A x in D, given projections onto C and D and the linear
map A. The main algorithm is a nonmonotone proximal-gradient method with a
Barzilai-Borwein initial stepsize and a backtracking linesearch
(``spfeas_dc_ls``); ``spfeas_dc`` is its fixed-stepsize special case, which
on convex instances coincides with the classical CQ iteration
(``cq_iteration``). ``modified_alt_proj`` is the alternating-projection
baseline for the completely positive factorization benchmark.

Iterates may be vectors or matrices; inner products and norms are always
the flattened (Frobenius) ones.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import kernels
from .numerics import pseudoinverse, spectral_norm_sq
from .sets import OrthogonalMatrices, ProjectableSet

__all__ = [
    "Status",
    "MatrixOperator",
    "LeftMultiplyOperator",
    "SplitProblem",
    "MinEntry",
    "DistBelow",
    "RelativeStep",
    "MaxIterOnly",
    "LsConfig",
    "RunRecord",
    "objective",
    "bb_initial_L",
    "spfeas_dc_ls",
    "spfeas_dc",
    "cq_iteration",
    "modified_alt_proj",
    "stationarity_residual",
    "check_descent_inequality",
]


class Status(Enum):
    SUCCESS = "success"
    MAX_ITER = "max_iter"
    L_BLOWUP = "l_blowup"
    NUMERICAL_FAILURE = "numerical_failure"


class _Operator:
    """Linear map with an adjoint and a cached spectral bound."""

    matrix: np.ndarray

    def apply(self, x):
        raise NotImplementedError

    def adjoint(self, y):
        raise NotImplementedError

    @property
    def lambda_max(self):
        """Largest eigenvalue of the Gram operator (adjoint composed with map)."""
        if self._lambda_max is None:
            self._lambda_max = spectral_norm_sq(self.matrix)
        return self._lambda_max


class MatrixOperator(_Operator):
    """x -> A x for a dense matrix A acting on vectors."""

    def __init__(self, a):
        self.matrix = np.asarray(a, dtype=float)
        if self.matrix.ndim != 2:
            raise ValueError("MatrixOperator needs a 2-d array")
        self._lambda_max = None

    def apply(self, x):
        return self.matrix @ x

    def adjoint(self, y):
        return self.matrix.T @ y


class LeftMultiplyOperator(_Operator):
    """Q -> B Q acting on r x k matrices (flattened-vector semantics)."""

    def __init__(self, b, k):
        self.matrix = np.asarray(b, dtype=float)
        if self.matrix.ndim != 2:
            raise ValueError("LeftMultiplyOperator needs a 2-d array")
        self.k = int(k)
        self._lambda_max = None

    def apply(self, q):
        return self.matrix @ q

    def adjoint(self, w):
        return self.matrix.T @ w


@dataclass
class SplitProblem:
    """The data of one split-feasibility instance: find x in C, A x in D."""

    op: _Operator
    C: ProjectableSet
    D: ProjectableSet
    lambda_max: float = None

    def __post_init__(self):
        if self.lambda_max is None:
            self.lambda_max = float(self.op.lambda_max)
        if self.lambda_max < 0:
            raise ValueError("lambda_max must be nonnegative")

    @property
    def r_C(self):
        return 2.0 if self.C.is_convex else 1.0


@dataclass(frozen=True)
class MinEntry:
    """Stop once every entry of the image A x clears the threshold."""

    threshold: float


@dataclass(frozen=True)
class DistBelow:
    """Stop once d(A x, D) falls below tol."""

    tol: float


@dataclass(frozen=True)
class RelativeStep:
    """Stop on the scaled step criterion

    sqrt((sqrt(lam)*||A dx|| + Lbar*||dx||)^2 + ||dx||^2) / max(1, ||x||) < tol

    evaluated after each accepted step, with Lbar the stepsize constant of
    that step.
    """

    tol: float


@dataclass(frozen=True)
class MaxIterOnly:
    """No accuracy-based stop; run until the iteration cap."""


@dataclass
class LsConfig:
    """Parameters of the nonmonotone linesearch solver."""

    M: int = 4
    tau: float = 2.0
    c: float = 1e-4
    L_min: float = 1e-8
    L_max: float = 1e8
    bb_threshold: float = 1e-16
    bb_decay: float = 1.1
    max_iter: int = 5000
    L_blowup: float = 1e10
    termination: object = field(default_factory=MaxIterOnly)

    def __post_init__(self):
        if self.M < 0 or self.tau <= 1 or self.c <= 0:
            raise ValueError("need M >= 0, tau > 1, c > 0")
        if not (0 < self.L_min <= self.L_max):
            raise ValueError("need 0 < L_min <= L_max")
        if self.bb_decay <= 1:
            raise ValueError("bb_decay must exceed 1")


@dataclass
class RunRecord:
    """Outcome and per-iteration trace of one solver run."""

    final_x: np.ndarray
    final_dist: float
    iters: int
    status: Status
    L_history: np.ndarray
    fval_history: np.ndarray
    step_norms: np.ndarray
    ls_counts: np.ndarray
    wall_time: float

    @property
    def success(self):
        return self.status is Status.SUCCESS


def _dist_sq(residual):
    flat = residual.ravel()
    return float(np.dot(flat, flat))


def objective(problem, x):
    """F(x) = 0.5 * d(A x, D)^2 for x in C."""
    ax = problem.op.apply(np.asarray(x, dtype=float))
    return 0.5 * problem.D.distance(ax) ** 2


def bb_initial_L(s, y, l_prev, cfg):
    """Barzilai-Borwein initial stepsize constant, clamped to [L_min, L_max].

    Uses the quotient <y, s>/||s||^2 when <y, s> clears cfg.bb_threshold and
    otherwise decays the previously accepted constant by cfg.bb_decay.
    """
    s = np.asarray(s, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    t = float(np.dot(y, s))
    if t >= cfg.bb_threshold:
        l0 = t / float(np.dot(s, s))
    else:
        l0 = l_prev / cfg.bb_decay
    return min(max(l0, cfg.L_min), cfg.L_max)


def _should_stop_at_iterate(rule, ax, d2):
    if isinstance(rule, MinEntry):
        return float(np.min(ax)) >= rule.threshold
    if isinstance(rule, DistBelow):
        return float(np.sqrt(d2)) < rule.tol
    return False


def _relative_step_value(lam_sqrt, l_used, norm_adx, norm_dx, norm_x):
    num = np.sqrt((lam_sqrt * norm_adx + l_used * norm_dx) ** 2 + norm_dx**2)
    return num / max(1.0, norm_x)


def _proximal_point(problem, x, grad, step):
    """Projected gradient candidate, with an exact member short-circuit.

    When the gradient step is too small to change x in floating point the
    projection input equals the current iterate, which is a member of C, and
    the projection of a member is the member itself, exactly. Short-circuiting
    avoids replacing x with a projection evaluated to roundoff only.
    """
    v = x - step * grad
    if np.array_equal(v, x):
        return x, True
    return problem.C.project(v), False


def _record(final_x, d2, iters, status, l_hist, fvals, steps, ls_counts, t0):
    return RunRecord(
        final_x=final_x,
        final_dist=float(np.sqrt(d2)),
        iters=iters,
        status=status,
        L_history=np.asarray(l_hist, dtype=float),
        fval_history=np.asarray(fvals, dtype=float),
        step_norms=np.asarray(steps, dtype=float),
        ls_counts=np.asarray(ls_counts, dtype=int),
        wall_time=time.perf_counter() - t0,
    )


def spfeas_dc_ls(problem, cfg, x0):
    """Nonmonotone proximal-gradient solver with linesearch.

    Each iteration projects A x onto D to get the gradient of the smooth
    part, takes a projected gradient step with constant L_t, and accepts
    once the squared distance of the trial point is below the maximum over
    the last M+1 iterates minus c times the squared step (backtracking by
    tau otherwise). L_t starts from a Barzilai-Borwein estimate. Runs until
    cfg.termination fires, the iteration cap is passed, or L_t exceeds
    cfg.L_blowup during a linesearch (reported as L_BLOWUP and counted as a
    failure).
    """
    t0 = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    if not problem.C.contains(x):
        raise ValueError("x0 must belong to C")
    rule = cfg.termination
    lam_sqrt = float(np.sqrt(max(problem.lambda_max, 0.0)))
    rel = isinstance(rule, RelativeStep)

    ax = problem.op.apply(x)
    eta = problem.D.project(ax)
    res = ax - eta
    d2 = _dist_sq(res)
    window = deque([d2], maxlen=cfg.M + 1)
    fvals = [0.5 * d2]
    l_hist, steps, ls_counts = [], [], []
    grad_prev = None
    s_prev = None
    l_bar = None
    t = 0
    while True:
        if not np.isfinite(d2):
            return _record(x, np.nan, t, Status.NUMERICAL_FAILURE,
                           l_hist, fvals, steps, ls_counts, t0)
        if _should_stop_at_iterate(rule, ax, d2):
            return _record(x, d2, t, Status.SUCCESS,
                           l_hist, fvals, steps, ls_counts, t0)
        if t > cfg.max_iter:
            return _record(x, d2, t, Status.MAX_ITER,
                           l_hist, fvals, steps, ls_counts, t0)

        grad = problem.op.adjoint(res)
        if t == 0:
            # the customary L_0^0 = 1, kept inside the admissible interval
            l_t = min(max(1.0, cfg.L_min), cfg.L_max)
        else:
            l_t = bb_initial_L(s_prev, grad - grad_prev, l_bar, cfg)
        f_max = max(window)
        n_bt = 0
        while True:
            u, frozen = _proximal_point(problem, x, grad, 1.0 / l_t)
            if frozen:
                au, etau, resu, d2u = ax, eta, res, d2
            else:
                au = problem.op.apply(u)
                etau = problem.D.project(au)
                resu = au - etau
                d2u = _dist_sq(resu)
            if not np.isfinite(d2u):
                return _record(x, np.nan, t, Status.NUMERICAL_FAILURE,
                               l_hist, fvals, steps, ls_counts, t0)
            diff = u - x
            step_sq = _dist_sq(diff)
            if d2u <= f_max - cfg.c * step_sq:
                break
            l_t *= cfg.tau
            n_bt += 1
            if l_t > cfg.L_blowup:
                return _record(x, d2, t, Status.L_BLOWUP,
                               l_hist, fvals, steps, ls_counts, t0)

        norm_dx = float(np.sqrt(step_sq))
        norm_adx = float(np.linalg.norm((au - ax).ravel()))
        grad_prev = grad
        s_prev = diff
        l_bar = l_t
        x, ax, eta, res, d2 = u, au, etau, resu, d2u
        window.append(d2)
        fvals.append(0.5 * d2)
        l_hist.append(l_t)
        steps.append(norm_dx)
        ls_counts.append(n_bt)
        t += 1
        if rel:
            crit = _relative_step_value(lam_sqrt, l_bar, norm_adx, norm_dx,
                                        float(np.linalg.norm(x.ravel())))
            if crit < rule.tol:
                return _record(x, d2, t, Status.SUCCESS,
                               l_hist, fvals, steps, ls_counts, t0)


def spfeas_dc(problem, L, x0, max_iter, termination=None):
    """Fixed-stepsize variant: x <- Proj_C(x - A^T(A x - Proj_D(A x))/L).

    Requires L > lambda_max / r_C (r_C = 2 for convex C, else 1), which
    makes every step decrease the objective by at least
    (r_C L - lambda_max)/2 times the squared step length.
    """
    t0 = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    if not problem.C.contains(x):
        raise ValueError("x0 must belong to C")
    if not L > problem.lambda_max / problem.r_C:
        raise ValueError(
            f"need L > lambda_max/r_C = {problem.lambda_max / problem.r_C:.6g}, got {L}"
        )
    rule = termination if termination is not None else MaxIterOnly()
    lam_sqrt = float(np.sqrt(max(problem.lambda_max, 0.0)))
    rel = isinstance(rule, RelativeStep)
    step = 1.0 / L

    ax = problem.op.apply(x)
    eta = problem.D.project(ax)
    res = ax - eta
    d2 = _dist_sq(res)
    fvals = [0.5 * d2]
    l_hist, steps, ls_counts = [], [], []
    t = 0
    while True:
        if not np.isfinite(d2):
            return _record(x, np.nan, t, Status.NUMERICAL_FAILURE,
                           l_hist, fvals, steps, ls_counts, t0)
        if _should_stop_at_iterate(rule, ax, d2):
            return _record(x, d2, t, Status.SUCCESS,
                           l_hist, fvals, steps, ls_counts, t0)
        if t > max_iter:
            return _record(x, d2, t, Status.MAX_ITER,
                           l_hist, fvals, steps, ls_counts, t0)
        grad = problem.op.adjoint(res)
        u, frozen = _proximal_point(problem, x, grad, step)
        if frozen:
            au, etau, resu, d2u = ax, eta, res, d2
        else:
            au = problem.op.apply(u)
            etau = problem.D.project(au)
            resu = au - etau
            d2u = _dist_sq(resu)
        diff = u - x
        norm_dx = float(np.linalg.norm(diff.ravel()))
        norm_adx = float(np.linalg.norm((au - ax).ravel()))
        x, ax, eta, res, d2 = u, au, etau, resu, d2u
        fvals.append(0.5 * d2)
        l_hist.append(L)
        steps.append(norm_dx)
        ls_counts.append(0)
        t += 1
        if rel:
            crit = _relative_step_value(lam_sqrt, L, norm_adx, norm_dx,
                                        float(np.linalg.norm(x.ravel())))
            if crit < rule.tol:
                return _record(x, d2, t, Status.SUCCESS,
                               l_hist, fvals, steps, ls_counts, t0)


def cq_iteration(problem, gamma, x0, max_iter):
    """Classical CQ iteration for convex C and D.

    x <- Proj_C(x - gamma A^T(A x - Proj_D(A x))) with a fixed relaxation
    gamma in (0, 2/lambda_max). With gamma = 1/L this generates exactly the
    spfeas_dc sequence.
    """
    t0 = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    if not (problem.C.is_convex and problem.D.is_convex):
        raise ValueError("cq_iteration requires convex C and D")
    if not problem.C.contains(x):
        raise ValueError("x0 must belong to C")
    if problem.lambda_max > 0 and not 0 < gamma < 2.0 / problem.lambda_max:
        raise ValueError(
            f"need gamma in (0, {2.0 / problem.lambda_max:.6g}), got {gamma}"
        )
    if gamma <= 0:
        raise ValueError("gamma must be positive")

    ax = problem.op.apply(x)
    eta = problem.D.project(ax)
    res = ax - eta
    d2 = _dist_sq(res)
    fvals = [0.5 * d2]
    l_hist, steps, ls_counts = [], [], []
    t = 0
    while True:
        if not np.isfinite(d2):
            return _record(x, np.nan, t, Status.NUMERICAL_FAILURE,
                           l_hist, fvals, steps, ls_counts, t0)
        if t > max_iter:
            return _record(x, d2, t, Status.MAX_ITER,
                           l_hist, fvals, steps, ls_counts, t0)
        grad = problem.op.adjoint(res)
        u, frozen = _proximal_point(problem, x, grad, gamma)
        if frozen:
            au, etau, resu, d2u = ax, eta, res, d2
        else:
            au = problem.op.apply(u)
            etau = problem.D.project(au)
            resu = au - etau
            d2u = _dist_sq(resu)
        steps.append(float(np.linalg.norm((u - x).ravel())))
        x, ax, eta, res, d2 = u, au, etau, resu, d2u
        fvals.append(0.5 * d2)
        l_hist.append(1.0 / gamma)
        ls_counts.append(0)
        t += 1


def modified_alt_proj(b, q0, max_iter=5000, success_threshold=-1e-15):
    """Alternating-projection baseline for the orthogonal factorization task.

    Iterates W = Proj_+(B Q), Q <- Proj_orth(Bdag W + (I - Bdag B) Q), with
    the pseudoinverse and the nullspace projector computed once. Succeeds
    when every entry of B Q clears ``success_threshold``.
    """
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    r = b.shape[1]
    orth = OrthogonalMatrices(r)
    if not orth.contains(q0):
        raise ValueError("Q0 must be orthogonal")
    bdag = pseudoinverse(b)
    proj_null = np.eye(r) - bdag @ b
    backend = kernels.get_backend()
    q, iters, code, fvals, step_norms = backend.altproj_run(
        b, bdag, proj_null, q0, int(max_iter), float(success_threshold)
    )
    status = Status.SUCCESS if code == kernels.ALTPROJ_SUCCESS else Status.MAX_ITER
    fvals = np.asarray(fvals, dtype=float)
    return RunRecord(
        final_x=q,
        final_dist=float(np.sqrt(2.0 * fvals[-1])),
        iters=iters,
        status=status,
        L_history=np.empty(0),
        fval_history=fvals,
        step_norms=np.asarray(step_norms, dtype=float),
        ls_counts=np.empty(0, dtype=int),
        wall_time=time.perf_counter() - t0,
    )


def stationarity_residual(problem, x):
    """Unit-step projected-gradient residual; zero exactly at solutions."""
    x = np.asarray(x, dtype=float)
    ax = problem.op.apply(x)
    grad = problem.op.adjoint(ax - problem.D.project(ax))
    moved = problem.C.project(x - grad)
    return float(np.linalg.norm((x - moved).ravel()))


def check_descent_inequality(problem, x, L, slack=1e-10):
    """Whether one projected-gradient step from x with constant L decreases
    the objective by at least (r_C L - lambda_max)/2 times the squared step."""
    x = np.asarray(x, dtype=float)
    ax = problem.op.apply(x)
    eta = problem.D.project(ax)
    u = problem.C.project(x - problem.op.adjoint(ax - eta) / L)
    fx = 0.5 * problem.D.distance(ax) ** 2
    fu = 0.5 * problem.D.distance(problem.op.apply(u)) ** 2
    drop = 0.5 * (problem.r_C * L - problem.lambda_max) * _dist_sq(u - x)
    return fu <= fx - drop + slack
