"""splitfeas: split-feasibility solvers for possibly nonconvex sets.

Find x in C with A x in D, given cheap projections onto C and D. The
package provides the nonmonotone linesearch solver ``spfeas_dc_ls``, its
fixed-step variant ``spfeas_dc``, the classical CQ iteration, an
alternating-projection baseline, the projection catalog for the benchmark
set families, instance generators for completely positive factorization,
uniformly sparse matrix factorization and outlier detection, and a
benchmark harness (also exposed as the ``splitfeas`` CLI).
"""
from .bench import AggregateRow, ExperimentSpec, report, run_experiment, verify_suite
from .problems import (
    CpInstance,
    OutlierInstance,
    cp_initial_factor,
    cp_problem,
    g_lambda,
    gen_outlier_instance,
    gen_random_cp,
    gen_sparse_mf,
    load_matrix,
    outlier_problem,
    random_orthogonal_init,
    save_matrix,
    sparse_mf_problem,
)
from .sets import (
    BoxSparseVectors,
    ColumnSparseMatrices,
    NonnegativeOrthant,
    OrthogonalMatrices,
    ShiftedSparseVectors,
)
from .solvers import (
    DistBelow,
    LsConfig,
    MatrixOperator,
    LeftMultiplyOperator,
    MaxIterOnly,
    MinEntry,
    RelativeStep,
    RunRecord,
    SplitProblem,
    Status,
    check_descent_inequality,
    cq_iteration,
    modified_alt_proj,
    objective,
    spfeas_dc,
    spfeas_dc_ls,
    stationarity_residual,
)

__version__ = "0.1.0"
