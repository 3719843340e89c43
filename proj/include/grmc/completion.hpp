#ifndef GRMC_COMPLETION_HPP
#define GRMC_COMPLETION_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "grmc/data_model.hpp"

namespace grmc {

/// Factor matrices of the completion X = A * B^T.
struct FactorPair {
    Eigen::MatrixXd A;  // m x r
    Eigen::MatrixXd B;  // n x r
};

struct GralsParams {
    int r = 10;
    double lambda_L = 0.001;
    double lambda_a = 0.005;
    double lambda_b = 0.005;
    int max_outer = 100;
    double cg_tol = 1e-8;  // relative residual of each inner solve
    int cg_max_iter = 500;
    std::uint64_t seed = 0;
};

struct CompletionResult {
    Eigen::MatrixXd X_hat;
    std::vector<double> objective_trace;  // index 0 holds the initial value
    int iterations = 0;
    bool converged = false;
    // Entries the method could not complete (left NaN in X_hat); only IDW
    // produces these, when a row has no observed station at all.
    std::vector<std::pair<int, int>> uncompletable;
};

/// Snapshot of one inner CG solve, for independent verification.
struct FactorSolveRecord {
    bool row_step = false;         // true: solved for A, false: for B
    Eigen::MatrixXd fixed_factor;  // the factor held constant during the solve
    Eigen::MatrixXd solution;      // the factor just solved for
    double rel_residual = 0.0;     // recomputed true residual / |rhs|
    int cg_iterations = 0;
};

using SolveObserver = std::function<void(const FactorSolveRecord&)>;

struct GralsOutput {
    FactorPair factors;
    CompletionResult completion;
};

/// Graph-regularised alternating least squares.
///
/// Minimises
///   1/2 |P_Omega(M - A B^T)|_F^2
///   + lambda_L/2 (tr(A^T L_row A) + tr(B^T L_col B))
///   + lambda_a/2 |A|_F^2 + lambda_b/2 |B|_F^2
/// by alternating exact minimisation in A and B. Each subproblem is a
/// positive (semi)definite linear system solved by conjugate gradient with an
/// implicit operator (per-row Gram gathers + sparse Laplacian product +
/// scalar shift); the Hessian is never materialised.
///
/// L_row is m x m (graph on timestamps), L_col is n x n (graph on stations).
/// When lambda_L == 0 the Laplacians are never touched, so the result is
/// independent of them. Stops when the relative objective decrease falls
/// below 1e-6 or after max_outer sweeps.
GralsOutput grals_complete(const ObservationMatrix& M,
                           const Eigen::SparseMatrix<double>& L_row,
                           const Eigen::SparseMatrix<double>& L_col,
                           const GralsParams& params,
                           const SolveObserver& observer = nullptr);

/// Singular-value soft-thresholding: U diag(max(sigma_i - lambda, 0)) V^T.
Eigen::MatrixXd soft_threshold_svd(const Eigen::MatrixXd& X, double lambda);

/// SoftImpute: iterate X <- soft_threshold_svd(P_Omega(M) + P_OmegaBar(X), lambda)
/// from X = 0 until the relative Frobenius change drops below tol.
/// objective_trace records 1/2 |P_Omega(M - X)|_F^2 + lambda |X|_*.
CompletionResult softimpute_complete(const ObservationMatrix& M, double lambda,
                                     double tol = 1e-6, int max_iter = 200);

/// Inverse-distance weighting over all stations observed at the same row.
/// Rows with no observation leave their missing entries NaN and reported in
/// `uncompletable`. Co-located stations (distance 0) short-circuit to that
/// station's value.
CompletionResult idw_complete(const ObservationMatrix& M,
                              const std::vector<StationMetadata>& meta,
                              double power = 2.0);

/// Iterative PCA imputation: fill missing entries with station means, then
/// alternate (centre columns, rank-r truncated SVD, rewrite missing entries)
/// until the relative change drops below tol.
CompletionResult pca_complete(const ObservationMatrix& M, int r,
                              double tol = 1e-6, int max_iter = 100);

/// Column-mean fill; stations with no observations fall back to the global
/// observed mean.
CompletionResult mean_fill_complete(const ObservationMatrix& M);

/// RMSE of X_hat against the truth on the holdout entries (degrees C).
/// Every holdout index must be observed in `truth`.
double evaluate_rmse(const Eigen::MatrixXd& X_hat, const ObservationMatrix& truth,
                     const std::vector<std::pair<int, int>>& holdout);

}  // namespace grmc

#endif
