#include <Eigen/SVD>
#include <cmath>

#include "grmc/completion.hpp"
#include "grmc/errors.hpp"

namespace grmc {

namespace {

double nuclear_norm(const Eigen::VectorXd& singular_values) {
    return singular_values.sum();
}

}  // namespace

Eigen::MatrixXd soft_threshold_svd(const Eigen::MatrixXd& X, double lambda) {
    if (lambda < 0.0) throw ValidationError("soft-threshold lambda must be >= 0");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::max(s(i) - lambda, 0.0);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

CompletionResult softimpute_complete(const ObservationMatrix& M, double lambda,
                                     double tol, int max_iter) {
    if (lambda < 0.0) throw ValidationError("softimpute lambda must be >= 0");
    if (tol <= 0.0) throw ValidationError("softimpute tol must be positive");
    if (M.observed_count() == 0)
        throw ValidationError("observation matrix has no observed entries");

    const Eigen::Index m = M.rows(), n = M.cols();
    CompletionResult result;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(m, n);
    Eigen::MatrixXd filled(m, n);

    for (int it = 1; it <= max_iter; ++it) {
        // filled = P_Omega(M) + P_OmegaBar(X)
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                filled(i, j) = M.mask(i, j) ? M.values(i, j) : X(i, j);

        Eigen::BDCSVD<Eigen::MatrixXd> svd(filled,
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::VectorXd s = svd.singularValues();
        for (Eigen::Index k = 0; k < s.size(); ++k)
            s(k) = std::max(s(k) - lambda, 0.0);
        Eigen::MatrixXd X_new = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();

        double data = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (M.mask(i, j)) {
                    const double d = M.values(i, j) - X_new(i, j);
                    data += d * d;
                }
        result.objective_trace.push_back(0.5 * data + lambda * nuclear_norm(s));

        const double change = (X_new - X).norm();
        const double scale = std::max(X.norm(), 1e-30);
        X = std::move(X_new);
        result.iterations = it;
        if (change / scale < tol) {
            result.converged = true;
            break;
        }
    }

    result.X_hat = std::move(X);
    return result;
}

}  // namespace grmc
