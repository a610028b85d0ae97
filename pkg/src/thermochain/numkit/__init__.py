"""Precision-generic dense complex linear algebra substrate."""

from .precision import DOUBLE, Precision, bigfloat, is_bigarray, mpc_of, mpf_of, to_float, workprec
from .matrices import (
    SizeBudgetError,
    adjoint,
    as_double,
    diag,
    embed_factors,
    embed_on_sites,
    eye,
    frobenius_norm,
    hermiticity_defect,
    kron,
    matmul,
    max_abs,
    normalized_partial_trace,
    normalized_partial_trace_sites,
    partial_trace,
    partial_trace_sites,
    require_hermitian,
    to_precision,
    trace,
    zeros,
)
from .eig import (
    EigenConvergenceError,
    eig_hermitian,
    jacobi_eigh,
    mat_exp_hermitian,
    mat_log_pd,
    op_norm,
    singular_values,
    solve_linear,
    trace_distance,
    trace_norm,
)
from .superop import (
    apply_superop,
    check_superop_budget,
    choi_matrix,
    choi_min_eig,
    commutator_superop,
    dissipator_superop,
    is_trace_preserving,
    superop_exp,
    unvec,
    vec,
    vectorize_superop,
)

__all__ = [
    "DOUBLE", "Precision", "bigfloat", "is_bigarray", "mpc_of", "mpf_of", "to_float",
    "workprec", "SizeBudgetError", "adjoint", "as_double", "diag", "embed_factors",
    "embed_on_sites", "eye", "frobenius_norm", "hermiticity_defect", "kron", "matmul",
    "max_abs", "normalized_partial_trace", "normalized_partial_trace_sites",
    "partial_trace", "partial_trace_sites", "require_hermitian", "to_precision",
    "trace", "zeros", "EigenConvergenceError", "eig_hermitian", "jacobi_eigh",
    "mat_exp_hermitian", "mat_log_pd", "op_norm", "singular_values", "solve_linear",
    "trace_distance", "trace_norm", "apply_superop", "check_superop_budget",
    "choi_matrix", "choi_min_eig", "commutator_superop", "dissipator_superop",
    "is_trace_preserving", "superop_exp", "unvec", "vec", "vectorize_superop",
]
