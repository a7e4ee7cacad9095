"""Experiment harness: runs the benchmark families, aggregates, reports.

Families
  cpfact-identity     factorize random completely positive matrices, Q0 = I
  cpfact-random-init  same instances, random restarts until solved
  cpfact-glambda      the 5x5 boundary family G_lambda, random starts
  sparsefact          uniformly column-sparse factorization of a planted G
  outlier             sparse recovery with grossly corrupted measurements

Each trial derives its own PCG64 stream from (seed, family code, size index,
trial index), so results are bitwise reproducible, trials can run on a
process pool (SPLITFEAS_THREADS bounds it), and parallel and serial runs
aggregate identically: BLAS is pinned to one thread inside every trial and
rows are folded in trial order.
"""
from __future__ import annotations

import multiprocessing
import os
import sys
from dataclasses import dataclass

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover - threadpoolctl ships with scipy stacks
    from contextlib import nullcontext

    def threadpool_limits(limits=None):
        return nullcontext()

from . import problems as probs
from . import sets, solvers
from .solvers import (
    DistBelow,
    LsConfig,
    MaxIterOnly,
    MinEntry,
    RelativeStep,
    RunRecord,
    Status,
)

__all__ = [
    "ExperimentSpec",
    "AggregateRow",
    "run_experiment",
    "report",
    "parse_csv",
    "verify_suite",
    "projection_oracle_suite",
]

FAMILIES = (
    "cpfact-identity",
    "cpfact-random-init",
    "cpfact-glambda",
    "sparsefact",
    "outlier",
)
_FAMILY_CODE = {name: i + 1 for i, name in enumerate(FAMILIES)}

# success thresholds from the experiment protocols
CP_MIN_ENTRY = -1e-16
ALTPROJ_MIN_ENTRY = -1e-15
MF_DIST_TOL = 1e-9
OUTLIER_REL_TOL = 1e-8

CP_MAX_ITER = 5000
MF_MAX_ITER = 10000
OUTLIER_LS_MAX_ITER = 10000
OUTLIER_DC_MAX_ITER = 3000


def _cp_ls_config(max_iter=CP_MAX_ITER):
    return LsConfig(
        M=4, tau=2.0, c=1e-4, L_min=1e-8, L_max=1e8,
        bb_threshold=1e-16, bb_decay=1.1, max_iter=max_iter,
        L_blowup=1e10, termination=MinEntry(CP_MIN_ENTRY),
    )


def _mf_ls_config(max_iter=MF_MAX_ITER):
    return LsConfig(
        M=4, tau=2.0, c=1e-4, L_min=1e-8, L_max=1e8,
        bb_threshold=1e-12, bb_decay=2.5, max_iter=max_iter,
        L_blowup=1e10, termination=DistBelow(MF_DIST_TOL),
    )


def _outlier_ls_config(max_iter=OUTLIER_LS_MAX_ITER):
    return LsConfig(
        M=4, tau=2.0, c=1e-4, L_min=1e-8, L_max=1e8,
        bb_threshold=1e-12, bb_decay=2.0, max_iter=max_iter,
        L_blowup=1e10, termination=RelativeStep(OUTLIER_REL_TOL),
    )


@dataclass
class ExperimentSpec:
    """One experiment request: a family, its sizes, trials and algorithms."""

    family: str
    n_values: tuple = (10,)
    m: int = None
    r_spec: object = None  # int -> absolute, float -> multiplier of n
    s: int = None
    lambdas: tuple = ()
    trials: int = 1
    max_inits: int = None  # cpfact-random-init; None -> 100 if n<=50 else 10
    algs: tuple = ("dcls",)
    seed: int = 0
    max_iter: int = None  # optional cap override for every algorithm
    g_matrix: object = None  # user-supplied G for cpfact (skips the generator)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        self.n_values = tuple(int(v) for v in self.n_values)
        self.algs = tuple(self.algs)
        for alg in self.algs:
            if alg not in ("dcls", "dc", "altproj", "cq"):
                raise ValueError(f"unknown algorithm {alg!r}")
        if "cq" in self.algs:
            raise ValueError(
                "cq needs convex C and D; none of the benchmark families is convex"
            )
        if self.family == "cpfact-glambda" and not self.lambdas:
            raise ValueError("cpfact-glambda needs a lambda list")

    def resolve_r(self, n):
        if self.r_spec is None:
            return int(round(1.5 * n))
        if isinstance(self.r_spec, float) and not self.r_spec.is_integer():
            return int(round(self.r_spec * n))
        return int(self.r_spec)


_ROW_FIELDS = (
    "family", "alg", "n", "m", "r", "s", "lam", "trials",
    "success_pct", "fval_max", "fval_min",
    "iter_s", "iter_f", "cpu_s", "cpu_f", "init_no_s",
)


@dataclass
class AggregateRow:
    """One table row: a (size, algorithm) cell aggregated over trials."""

    family: str
    alg: str
    n: int
    m: int = None
    r: int = None
    s: int = None
    lam: float = None
    trials: int = 0
    success_pct: float = 0.0
    fval_max: float = None
    fval_min: float = None
    iter_s: float = None
    iter_f: float = None
    cpu_s: float = None
    cpu_f: float = None
    init_no_s: float = None


def _mean(values):
    return float(np.mean(values)) if values else None


def _aggregate(family, alg, n, m, r, s, lam, outcomes):
    """Fold per-trial outcome dicts into one AggregateRow."""
    succ = [o for o in outcomes if o["success"]]
    fail = [o for o in outcomes if not o["success"]]
    fvals = [o["fval"] for o in outcomes]
    return AggregateRow(
        family=family, alg=alg, n=n, m=m, r=r, s=s, lam=lam,
        trials=len(outcomes),
        success_pct=100.0 * len(succ) / len(outcomes),
        fval_max=max(fvals),
        fval_min=min(fvals),
        iter_s=_mean([o["iters"] for o in succ]),
        iter_f=_mean([o["iters"] for o in fail]),
        cpu_s=_mean([o["cpu"] for o in succ]),
        cpu_f=_mean([o["cpu"] for o in fail]),
        init_no_s=_mean([o["inits"] for o in succ if o.get("inits")]) if succ else None,
    )


def _outcome(record: RunRecord, inits=None):
    return {
        "success": record.status is Status.SUCCESS,
        "fval": 0.5 * record.final_dist**2,
        "iters": record.iters,
        "cpu": record.wall_time,
        "inits": inits,
    }


def _sum_outcomes(runs, solved_at=None):
    """Combine restart runs of one instance into a single outcome."""
    return {
        "success": solved_at is not None,
        "fval": 0.5 * runs[-1].final_dist**2,
        "iters": int(sum(r.iters for r in runs)),
        "cpu": float(sum(r.wall_time for r in runs)),
        "inits": solved_at if solved_at is not None else None,
    }


# ---------------------------------------------------------------------------
# per-trial execution (module-level so process pools can pickle the calls)

def _cp_trial(spec, size_idx, n, trial):
    code = _FAMILY_CODE[spec.family]
    r = spec.resolve_r(n)
    if spec.g_matrix is not None:
        g = np.asarray(spec.g_matrix, dtype=float)
    else:
        g = probs.gen_random_cp(n, probs.derive_seed(spec.seed, code, size_idx, trial))
    b = probs.cp_initial_factor(g, r)
    problem = probs.cp_problem(b)
    max_iter = spec.max_iter if spec.max_iter is not None else CP_MAX_ITER

    results = {}
    if spec.family == "cpfact-identity":
        q0 = np.eye(r)
        for alg in spec.algs:
            results[alg] = _outcome(_run_cp_alg(alg, problem, b, q0, max_iter))
        return results

    # random restarts: both algorithms see the same Q0 sequence
    cap = spec.max_inits
    if cap is None:
        cap = 100 if n <= 50 else 10
    inits = [
        probs.random_orthogonal_init(
            r, probs.derive_seed(spec.seed, code, size_idx, trial, 1000 + j)
        )
        for j in range(cap)
    ]
    for alg in spec.algs:
        runs = []
        solved_at = None
        for j, q0 in enumerate(inits):
            rec = _run_cp_alg(alg, problem, b, q0, max_iter)
            runs.append(rec)
            if rec.status is Status.SUCCESS:
                solved_at = j + 1
                break
        results[alg] = _sum_outcomes(runs, solved_at)
    return results


def _run_cp_alg(alg, problem, b, q0, max_iter):
    if alg == "dcls":
        return solvers.spfeas_dc_ls(problem, _cp_ls_config(max_iter), q0)
    if alg == "dc":
        L = problem.lambda_max + 1e-4
        return solvers.spfeas_dc(problem, L, q0, max_iter, MinEntry(CP_MIN_ENTRY))
    if alg == "altproj":
        return solvers.modified_alt_proj(b, q0, max_iter, ALTPROJ_MIN_ENTRY)
    raise ValueError(f"algorithm {alg!r} not available for cpfact")


def _glambda_trial(spec, lam_idx, lam, trial):
    code = _FAMILY_CODE[spec.family]
    r = spec.resolve_r(5) if spec.r_spec is not None else 12
    b = probs.cp_initial_factor(probs.g_lambda(lam), r)
    problem = probs.cp_problem(b)
    max_iter = spec.max_iter if spec.max_iter is not None else CP_MAX_ITER
    q0 = probs.random_orthogonal_init(
        r, probs.derive_seed(spec.seed, code, lam_idx, trial)
    )
    return {alg: _outcome(_run_cp_alg(alg, problem, b, q0, max_iter))
            for alg in spec.algs}


def _mf_trial(spec, size_idx, n, trial):
    code = _FAMILY_CODE[spec.family]
    frac = spec.r_spec if spec.r_spec is not None else 0.7
    s = spec.s if spec.s is not None else int(round(float(frac) * n))
    _, b = probs.gen_sparse_mf(n, s, probs.derive_seed(spec.seed, code, size_idx, trial))
    problem = probs.sparse_mf_problem(b, s)
    max_iter = spec.max_iter if spec.max_iter is not None else MF_MAX_ITER
    q0 = np.eye(n)
    results = {}
    for alg in spec.algs:
        if alg == "dcls":
            rec = solvers.spfeas_dc_ls(problem, _mf_ls_config(max_iter), q0)
        elif alg == "dc":
            L = problem.lambda_max + 1e-4
            rec = solvers.spfeas_dc(problem, L, q0, max_iter, DistBelow(MF_DIST_TOL))
        else:
            raise ValueError(f"algorithm {alg!r} not available for sparsefact")
        results[alg] = _outcome(rec)
    return results


def _outlier_trial(spec, size_idx, n, trial):
    code = _FAMILY_CODE[spec.family]
    m = spec.m if spec.m is not None else n // 5
    s = spec.s if spec.s is not None else n // 20
    if spec.r_spec is None:
        r = m // 20
    else:
        r = spec.resolve_r(n)
    inst = probs.gen_outlier_instance(
        n, m, s, r, probs.derive_seed(spec.seed, code, size_idx, trial)
    )
    problem = probs.outlier_problem(inst, s, r)
    x0 = np.zeros(n)
    results = {}
    for alg in spec.algs:
        if alg == "dcls":
            cap = spec.max_iter if spec.max_iter is not None else OUTLIER_LS_MAX_ITER
            rec = solvers.spfeas_dc_ls(problem, _outlier_ls_config(cap), x0)
        elif alg == "dc":
            cap = spec.max_iter if spec.max_iter is not None else OUTLIER_DC_MAX_ITER
            L = problem.lambda_max + 1e-4
            rec = solvers.spfeas_dc(problem, L, x0, cap, RelativeStep(OUTLIER_REL_TOL))
        else:
            raise ValueError(f"algorithm {alg!r} not available for outlier")
        results[alg] = _outcome(rec)
    return results


def _run_one(task):
    """Worker entry: one (size, trial) cell, BLAS pinned to one thread."""
    spec, size_idx, size_value, trial = task
    with threadpool_limits(limits=1):
        if spec.family in ("cpfact-identity", "cpfact-random-init"):
            return _cp_trial(spec, size_idx, size_value, trial)
        if spec.family == "cpfact-glambda":
            return _glambda_trial(spec, size_idx, size_value, trial)
        if spec.family == "sparsefact":
            return _mf_trial(spec, size_idx, size_value, trial)
        if spec.family == "outlier":
            return _outlier_trial(spec, size_idx, size_value, trial)
    raise ValueError(f"unknown family {spec.family!r}")


def _pool_size():
    env = os.environ.get("SPLITFEAS_THREADS", "")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def run_experiment(spec: ExperimentSpec):
    """Run every (size, algorithm) cell of the spec and aggregate.

    Trials fan out to a process pool of size SPLITFEAS_THREADS (default:
    machine cores); aggregation folds results in trial order, so the output
    is identical however many workers executed.
    """
    if spec.family == "cpfact-glambda":
        sizes = [(i, float(lam)) for i, lam in enumerate(spec.lambdas)]
    else:
        sizes = [(i, n) for i, n in enumerate(spec.n_values)]
    tasks = [
        (spec, size_idx, size_value, trial)
        for size_idx, size_value in sizes
        for trial in range(spec.trials)
    ]
    workers = min(_pool_size(), len(tasks))
    if workers > 1:
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            flat = pool.map(_run_one, tasks, chunksize=1)
    else:
        flat = [_run_one(t) for t in tasks]

    rows = []
    for k, (size_idx, size_value) in enumerate(sizes):
        per_alg = {alg: [] for alg in spec.algs}
        for trial in range(spec.trials):
            result = flat[k * spec.trials + trial]
            for alg in spec.algs:
                per_alg[alg].append(result[alg])
        for alg in spec.algs:
            if spec.family == "cpfact-glambda":
                n, lam = 5, size_value
                r, s, m = spec.resolve_r(5) if spec.r_spec is not None else 12, None, None
            elif spec.family == "sparsefact":
                n, lam, m = size_value, None, None
                frac = spec.r_spec if spec.r_spec is not None else 0.7
                s = spec.s if spec.s is not None else int(round(float(frac) * n))
                r = None
            elif spec.family == "outlier":
                n, lam = size_value, None
                m = spec.m if spec.m is not None else n // 5
                s = spec.s if spec.s is not None else n // 20
                r = spec.resolve_r(n) if spec.r_spec is not None else m // 20
            else:
                n, lam, m, s = size_value, None, None, None
                r = spec.resolve_r(n)
            rows.append(
                _aggregate(spec.family, alg, n, m, r, s, lam, per_alg[alg])
            )
    return rows


# ---------------------------------------------------------------------------
# reporting

def _csv_cell(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_cell(text, kind):
    if text == "-":
        return None
    return kind(text)


def report(rows, csv_path=None, stream=None):
    """Emit rows as an aligned text table and, optionally, a CSV file.

    The CSV holds full-precision values; the table rounds the way the
    benchmark tables are usually displayed (fval in %.0e, CPU seconds with
    four decimals). Returns the table string.
    """
    if not rows:
        raise ValueError("no rows to report")
    if csv_path is not None:
        with open(csv_path, "w") as fh:
            fh.write(",".join(_ROW_FIELDS) + "\n")
            for row in rows:
                fh.write(
                    ",".join(_csv_cell(getattr(row, f)) for f in _ROW_FIELDS) + "\n"
                )

    def disp(name, value):
        if value is None:
            return "-"
        if name in ("fval_max", "fval_min"):
            return f"{value:.0e}"
        if name in ("cpu_s", "cpu_f"):
            return f"{value:.4f}"
        if name in ("iter_s", "iter_f"):
            return f"{value:.0f}"
        if name == "success_pct":
            return f"{value:.0f}"
        if name == "init_no_s":
            return f"{value:.1f}"
        if name == "lam":
            return f"{value:.2f}"
        return str(value)

    cells = [[disp(f, getattr(row, f)) for f in _ROW_FIELDS] for row in rows]
    widths = [
        max(len(_ROW_FIELDS[i]), *(len(c[i]) for c in cells))
        for i in range(len(_ROW_FIELDS))
    ]
    lines = ["  ".join(h.rjust(w) for h, w in zip(_ROW_FIELDS, widths))]
    for c in cells:
        lines.append("  ".join(v.rjust(w) for v, w in zip(c, widths)))
    text = "\n".join(lines)
    if stream is not None:
        print(text, file=stream)
    return text


def parse_csv(path):
    """Read back a CSV written by report() into AggregateRow objects."""
    kinds = {
        "family": str, "alg": str, "n": int, "m": int, "r": int, "s": int,
        "lam": float, "trials": int,
    }
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != _ROW_FIELDS:
            raise ValueError(f"{path}: unexpected CSV header")
        for line in fh:
            parts = line.strip().split(",")
            values = {
                name: _parse_cell(text, kinds.get(name, float))
                for name, text in zip(_ROW_FIELDS, parts)
            }
            rows.append(AggregateRow(**values))
    return rows


# ---------------------------------------------------------------------------
# verification suite (projection oracles, descent checks, equivalences)

def _brute_force_support_proj(x, s, beta=None):
    """Exhaustive best s-sparse (optionally box-clipped) approximation."""
    from itertools import combinations

    n = x.size
    best, best_d = np.zeros_like(x), float(np.linalg.norm(x))
    for supp in combinations(range(n), s):
        cand = np.zeros_like(x)
        cand[list(supp)] = x[list(supp)]
        if beta is not None:
            cand[list(supp)] = np.clip(cand[list(supp)], -beta, beta)
        d = float(np.linalg.norm(x - cand))
        if d < best_d - 1e-15:
            best, best_d = cand, d
    return best, best_d


def projection_oracle_suite(seed=0, inputs_per_kind=100, max_dim=10, out=None):
    """Check every projection against brute force or sampling oracles.

    Combinatorial kinds are compared with exhaustive support enumeration
    (equal distance required, 1e-12 slack); the orthogonal projection must
    beat 1000 random orthogonal candidates; the orthant projection must beat
    1000 random feasible candidates. Returns (ok, messages).
    """
    rng = np.random.default_rng(probs.derive_seed(seed, 90))
    msgs = []
    ok = True

    def check(name, cond):
        nonlocal ok
        ok = ok and cond
        msgs.append(f"{'PASS' if cond else 'FAIL'}  projection oracle: {name}")

    good = True
    for _ in range(inputs_per_kind):
        n = int(rng.integers(2, max_dim + 1))
        s = int(rng.integers(0, n + 1))
        x = rng.standard_normal(n) * 3
        p = sets.project_sparse(x, s)
        _, best_d = _brute_force_support_proj(x, s)
        good &= abs(float(np.linalg.norm(x - p)) - best_d) <= 1e-12
        good &= np.count_nonzero(p) <= s
    check("sparse vectors vs support enumeration", good)

    good = True
    for _ in range(inputs_per_kind):
        n = int(rng.integers(2, 9))
        s = int(rng.integers(0, n + 1))
        beta = float(rng.uniform(0.3, 3.0))
        x = rng.standard_normal(n) * 3
        p = sets.project_box_sparse(x, s, beta)
        _, best_d = _brute_force_support_proj(x, s, beta=beta)
        good &= abs(float(np.linalg.norm(x - p)) - best_d) <= 1e-12
        good &= np.count_nonzero(p) <= s and np.all(np.abs(p) <= beta)
    check("box-sparse vectors vs clipped support enumeration", good)

    good = True
    for _ in range(inputs_per_kind):
        rows = int(rng.integers(2, max_dim + 1))
        cols = int(rng.integers(1, 5))
        s = int(rng.integers(0, rows + 1))
        x = rng.standard_normal((rows, cols))
        p = sets.project_column_sparse(x, s)
        for j in range(cols):
            good &= np.array_equal(p[:, j], sets.project_sparse(x[:, j], s))
    check("column-sparse matrices vs per-column projection", good)

    good = True
    for _ in range(inputs_per_kind):
        mdim = int(rng.integers(2, max_dim + 1))
        r = int(rng.integers(0, mdim + 1))
        b = rng.standard_normal(mdim)
        y = rng.standard_normal(mdim) * 2
        p = sets.project_shifted_sparse(y, r, b)
        _, best_d = _brute_force_support_proj(y - b, r)
        good &= abs(float(np.linalg.norm(y - p)) - best_d) <= 1e-12
    check("shifted sparse vectors vs shifted support enumeration", good)

    good = True
    for _ in range(inputs_per_kind):
        shape = (int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        x = rng.standard_normal(shape)
        p = sets.project_nonneg(x)
        d = float(np.linalg.norm(x - p))
        for _ in range(1000 // inputs_per_kind + 5):
            cand = np.abs(rng.standard_normal(shape))
            good &= d <= float(np.linalg.norm(x - cand)) + 1e-10
        good &= np.all(p >= 0)
    check("nonnegative orthant vs sampled members", good)

    good = True
    for _ in range(20):
        r = int(rng.integers(2, 7))
        x = rng.standard_normal((r, r))
        p = sets.project_orthogonal(x)
        good &= float(np.linalg.norm(p.T @ p - np.eye(r))) < 1e-10
        d = float(np.linalg.norm(x - p))
        for _ in range(50):
            cand = sets.project_orthogonal(rng.standard_normal((r, r)))
            good &= d <= float(np.linalg.norm(x - cand)) + 1e-10
    check("orthogonal matrices: polar factor beats sampled members", good)

    if out is not None:
        for m in msgs:
            print(m, file=out)
    return ok, msgs


def _random_problem(rng, convex):
    mdim = int(rng.integers(3, 7))
    n = int(rng.integers(3, 7))
    a = rng.standard_normal((mdim, n))
    op = solvers.MatrixOperator(a)
    if convex:
        c = sets.NonnegativeOrthant(n)
        d = sets.ShiftedSparseVectors(0, rng.standard_normal(mdim))
        x0 = np.abs(rng.standard_normal(n))
    else:
        c = sets.BoxSparseVectors(n, max(1, n // 2), 1e8)
        d = sets.ShiftedSparseVectors(max(1, mdim // 3), rng.standard_normal(mdim))
        x0 = c.project(rng.standard_normal(n))
    return solvers.SplitProblem(op, c, d), x0


def _trace_signature(rec):
    return (
        rec.iters,
        rec.final_x.tobytes(),
        rec.fval_history.tobytes(),
        rec.step_norms.tobytes(),
    )


def _check_trace_invariants(rec, cfg, lam):
    """Windowed descent, bounded L, vanishing steps for one dcls record."""
    d2 = 2.0 * rec.fval_history
    steps = rec.step_norms
    for t in range(len(steps)):
        lo = max(0, t - cfg.M)
        bound = float(np.max(d2[lo:t + 1])) - cfg.c * steps[t] ** 2
        if d2[t + 1] > bound + 1e-12 * (1.0 + abs(bound)):
            return False, f"nonmonotone bound violated at step {t}"
    if len(rec.L_history):
        cap = cfg.tau * max(cfg.L_max, (cfg.c + lam) / 1.0)
        if float(np.max(rec.L_history)) > cap * (1 + 1e-12):
            return False, "L history exceeded its theoretical cap"
    max_bt = int(np.ceil(np.log((cfg.c + lam) / (1.0 * cfg.L_min)) / np.log(cfg.tau))) + 1
    if len(rec.ls_counts) and int(np.max(rec.ls_counts)) > max_bt:
        return False, "linesearch used more backtracks than the finite bound"
    if rec.status is Status.SUCCESS and len(steps) >= 20:
        k = max(1, len(steps) // 10)
        if float(np.max(steps[-k:])) > float(np.max(steps[:k])) + 1e-30:
            return False, "steps did not vanish toward the end of a converged run"
    return True, ""


def verify_suite(seed=0, out=None):
    """Run the library's cross-checks; returns (ok, messages).

    Covers: projection oracles against brute force, the quantitative descent
    inequality on random convex and nonconvex steps, the exact equivalence
    of the fixed-step solver with the linesearch solver (and with the CQ
    iteration on convex instances) including a negative control, trace
    invariants of recorded runs, stationarity of returned solutions on the
    small benchmark configurations, and bitwise determinism of a repeated
    experiment.
    """
    out = out if out is not None else sys.stdout
    msgs = []
    ok_all = True

    def emit(name, cond, extra=""):
        nonlocal ok_all
        ok_all = ok_all and bool(cond)
        line = f"{'PASS' if cond else 'FAIL'}  {name}" + (f" ({extra})" if extra else "")
        msgs.append(line)
        print(line, file=out)

    # (a) projection oracles
    ok, sub = projection_oracle_suite(seed=seed)
    emit("projection oracles vs brute force", ok)

    # (b) descent inequality on random single steps
    rng = np.random.default_rng(probs.derive_seed(seed, 91))
    good = True
    for convex in (True, False):
        for _ in range(100):
            problem, x0 = _random_problem(rng, convex)
            lam = problem.lambda_max
            scale = 0.5 if convex else 1.0
            L = lam * scale * float(rng.uniform(1.01, 3.0)) + 1e-6
            good &= solvers.check_descent_inequality(problem, x0, L)
    emit("descent inequality on 100 convex + 100 nonconvex steps", good)

    # (c) fixed-step solver == linesearch solver under the c identification
    rng = np.random.default_rng(probs.derive_seed(seed, 92))
    good = True
    for _ in range(20):
        problem, x0 = _random_problem(rng, bool(rng.integers(0, 2)))
        lam = problem.lambda_max
        r_c = problem.r_C
        L = (lam / r_c) * 1.6 + 0.1
        c = r_c * L - lam
        rec_dc = solvers.spfeas_dc(problem, L, x0, 40, MaxIterOnly())
        cfg = LsConfig(M=3, tau=2.0, c=c, L_min=L, L_max=L, max_iter=40,
                       termination=MaxIterOnly())
        rec_ls = solvers.spfeas_dc_ls(problem, cfg, x0)
        good &= _trace_signature(rec_dc) == _trace_signature(rec_ls)
    emit("spfeas_dc == spfeas_dc_ls traces under c = r_C L - lambda", good)

    # negative control: an inflated c must break the equivalence on some instance
    rng = np.random.default_rng(probs.derive_seed(seed, 92))
    mismatch = False
    for _ in range(20):
        problem, x0 = _random_problem(rng, bool(rng.integers(0, 2)))
        lam = problem.lambda_max
        r_c = problem.r_C
        L = (lam / r_c) * 1.6 + 0.1
        c_bad = r_c * L - lam + 1e6 * (lam + 1.0)
        rec_dc = solvers.spfeas_dc(problem, L, x0, 40, MaxIterOnly())
        cfg = LsConfig(M=3, tau=2.0, c=c_bad, L_min=L, L_max=L, max_iter=40,
                       termination=MaxIterOnly())
        rec_ls = solvers.spfeas_dc_ls(problem, cfg, x0)
        mismatch |= _trace_signature(rec_dc) != _trace_signature(rec_ls)
    emit("negative control: inflated c is detected as a mismatch", mismatch)

    # (d) CQ == fixed-step solver on convex instances
    rng = np.random.default_rng(probs.derive_seed(seed, 93))
    good = True
    for _ in range(20):
        problem, x0 = _random_problem(rng, True)
        lam = problem.lambda_max
        L = lam * 0.75 + 0.05
        gamma = 1.0 / L
        rec_dc = solvers.spfeas_dc(problem, L, x0, 40, MaxIterOnly())
        rec_cq = solvers.cq_iteration(problem, gamma, x0, 40)
        good &= _trace_signature(rec_dc) == _trace_signature(rec_cq)
    emit("cq_iteration(gamma = 1/L) == spfeas_dc(L) traces", good)

    # (e)+(f) trace invariants and stationarity on the small configurations
    records = []
    rng = np.random.default_rng(probs.derive_seed(seed, 94))

    def small_cp(init):
        outs = []
        for trial in range(3):
            g = probs.gen_random_cp(10, probs.derive_seed(seed, 95, trial))
            b = probs.cp_initial_factor(g, 15)
            problem = probs.cp_problem(b)
            if init == "identity":
                q0 = np.eye(15)
            else:
                q0 = probs.random_orthogonal_init(15, probs.derive_seed(seed, 96, trial))
            rec = solvers.spfeas_dc_ls(problem, _cp_ls_config(), q0)
            outs.append((problem, rec, _cp_ls_config()))
        return outs

    small = []
    small += small_cp("identity")
    small += small_cp("random")
    b12 = probs.cp_initial_factor(probs.g_lambda(0.0), 12)
    for trial in range(3):
        problem = probs.cp_problem(b12)
        q0 = probs.random_orthogonal_init(12, probs.derive_seed(seed, 97, trial))
        small.append((problem, solvers.spfeas_dc_ls(problem, _cp_ls_config(), q0),
                      _cp_ls_config()))
    for trial in range(2):
        _, b = probs.gen_sparse_mf(100, 90, probs.derive_seed(seed, 98, trial))
        problem = probs.sparse_mf_problem(b, 90)
        small.append((problem, solvers.spfeas_dc_ls(problem, _mf_ls_config(), np.eye(100)),
                      _mf_ls_config()))
    inst = probs.gen_outlier_instance(10000, 2000, 500, 100,
                                      probs.derive_seed(seed, 99))
    problem = probs.outlier_problem(inst, 500, 100)
    small.append((problem, solvers.spfeas_dc_ls(problem, _outlier_ls_config(),
                                                np.zeros(10000)),
                  _outlier_ls_config()))

    good = True
    detail = ""
    for problem, rec, cfg in small:
        cond, why = _check_trace_invariants(rec, cfg, problem.lambda_max)
        if not cond:
            good, detail = False, why
        if not problem.C.contains(rec.final_x):
            good, detail = False, "final iterate left C"
    emit("trace invariants (windowed bound, L cap, memberships)", good, detail)

    good = True
    worst = 0.0
    for problem, rec, _ in small:
        if rec.status is Status.SUCCESS:
            resid = solvers.stationarity_residual(problem, rec.final_x)
            worst = max(worst, resid)
            good &= resid <= 1e-6
    emit("stationarity residual <= 1e-6 at returned solutions", good,
         f"worst {worst:.2e}")

    # determinism: the same experiment spec twice gives identical rows
    # (timing columns excluded: wall time is measured, not computed)
    spec = ExperimentSpec(
        family="cpfact-identity", n_values=(10,), trials=4,
        algs=("dcls",), seed=seed,
    )
    rows_a = run_experiment(spec)
    rows_b = run_experiment(spec)
    value_fields = [f for f in _ROW_FIELDS if f not in ("cpu_s", "cpu_f")]
    same = all(
        all(getattr(x, f) == getattr(y, f) for f in value_fields)
        for x, y in zip(rows_a, rows_b)
    )
    emit("repeated experiment is bitwise deterministic", same)

    return ok_all, msgs
