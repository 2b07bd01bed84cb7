"""Uncertainty-weighted consensus ADMM for distributed regularized
least-squares and MAP estimation.

The heavy lifting lives in the C++ core; this package exposes the problem
builders, the weight pipeline, and the synchronous/asynchronous solvers.
"""

from ._uwadmm import (
    Problem,
    blur_truth,
    build_problem,
    compute_weights,
    consensus_problem,
    dense_map_oracle,
    dense_posterior_covariance,
    gauss_newton,
    nlcg,
    pcg,
    relative_residual,
    set_identity_weights,
    shepp_phantom,
    solve_async,
    solve_sync,
    __version__,
)

__all__ = [
    "Problem",
    "blur_truth",
    "build_problem",
    "compute_weights",
    "consensus_problem",
    "dense_map_oracle",
    "dense_posterior_covariance",
    "gauss_newton",
    "nlcg",
    "pcg",
    "relative_residual",
    "set_identity_weights",
    "shepp_phantom",
    "solve_async",
    "solve_sync",
    "__version__",
]
