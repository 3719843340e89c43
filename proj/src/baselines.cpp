#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "grmc/completion.hpp"
#include "grmc/errors.hpp"
#include "grmc/graphs.hpp"

namespace grmc {

CompletionResult idw_complete(const ObservationMatrix& M,
                              const std::vector<StationMetadata>& meta,
                              double power) {
    const Eigen::Index m = M.rows(), n = M.cols();
    if (static_cast<Eigen::Index>(meta.size()) != n)
        throw ValidationError("metadata count does not match station count");
    if (power <= 0.0) throw ValidationError("IDW power must be positive");

    Eigen::MatrixXd dist(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            dist(a, b) = haversine_distance(meta[static_cast<std::size_t>(a)],
                                            meta[static_cast<std::size_t>(b)]);

    CompletionResult result;
    result.X_hat = M.values;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (M.mask(i, j)) continue;
            double wsum = 0.0, acc = 0.0;
            bool colocated = false;
            for (Eigen::Index k = 0; k < n && !colocated; ++k) {
                if (k == j || !M.mask(i, k)) continue;
                const double d = dist(j, k);
                if (d <= 0.0) {
                    // co-located station: the power->inf limit
                    result.X_hat(i, j) = M.values(i, k);
                    colocated = true;
                    break;
                }
                const double w = 1.0 / std::pow(d, power);
                wsum += w;
                acc += w * M.values(i, k);
            }
            if (colocated) continue;
            if (wsum == 0.0) {
                result.uncompletable.emplace_back(static_cast<int>(i),
                                                  static_cast<int>(j));
                result.X_hat(i, j) = std::numeric_limits<double>::quiet_NaN();
            } else {
                result.X_hat(i, j) = acc / wsum;
            }
        }
    }
    result.iterations = 1;
    result.converged = true;
    return result;
}

CompletionResult pca_complete(const ObservationMatrix& M, int r, double tol,
                              int max_iter) {
    const Eigen::Index m = M.rows(), n = M.cols();
    if (r < 1) throw ValidationError("PCA rank must be >= 1");
    if (r >= std::min(m, n))
        throw ValidationError("PCA rank must be smaller than min(m, n)");
    if (tol <= 0.0) throw ValidationError("PCA tol must be positive");

    // Station means over observed entries; a station with none is not imputable.
    Eigen::VectorXd col_mean(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double sum = 0.0;
        int count = 0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (M.mask(i, j)) {
                sum += M.values(i, j);
                ++count;
            }
        if (count == 0)
            throw ValidationError("station column " + std::to_string(j) +
                                  " has no observed entries");
        col_mean(j) = sum / count;
    }

    CompletionResult result;
    Eigen::MatrixXd X = M.values;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (!M.mask(i, j)) X(i, j) = col_mean(j);

    if (M.fully_observed()) {
        result.X_hat = std::move(X);
        result.converged = true;
        return result;
    }

    for (int it = 1; it <= max_iter; ++it) {
        Eigen::RowVectorXd mu = X.colwise().mean();
        Eigen::MatrixXd centred = X.rowwise() - mu;
        Eigen::BDCSVD<Eigen::MatrixXd> svd(centred,
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::MatrixXd recon =
            svd.matrixU().leftCols(r) *
            svd.singularValues().head(r).asDiagonal() *
            svd.matrixV().leftCols(r).transpose();

        double change2 = 0.0, scale2 = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (!M.mask(i, j)) {
                    const double v = recon(i, j) + mu(j);
                    const double d = v - X(i, j);
                    change2 += d * d;
                    scale2 += X(i, j) * X(i, j);
                    X(i, j) = v;
                }
        result.iterations = it;
        if (std::sqrt(change2) <= tol * std::max(std::sqrt(scale2), 1e-30)) {
            result.converged = true;
            break;
        }
    }

    result.X_hat = std::move(X);
    return result;
}

CompletionResult mean_fill_complete(const ObservationMatrix& M) {
    const Eigen::Index m = M.rows(), n = M.cols();
    if (M.observed_count() == 0)
        throw ValidationError("observation matrix has no observed entries");

    double global_sum = 0.0;
    std::int64_t global_count = 0;
    Eigen::VectorXd col_sum = Eigen::VectorXd::Zero(n);
    Eigen::VectorXi col_count = Eigen::VectorXi::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (M.mask(i, j)) {
                col_sum(j) += M.values(i, j);
                ++col_count(j);
                global_sum += M.values(i, j);
                ++global_count;
            }
    const double global_mean = global_sum / static_cast<double>(global_count);

    CompletionResult result;
    result.X_hat = M.values;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double fill =
            col_count(j) > 0 ? col_sum(j) / col_count(j) : global_mean;
        for (Eigen::Index i = 0; i < m; ++i)
            if (!M.mask(i, j)) result.X_hat(i, j) = fill;
    }
    result.iterations = 1;
    result.converged = true;
    return result;
}

double evaluate_rmse(const Eigen::MatrixXd& X_hat, const ObservationMatrix& truth,
                     const std::vector<std::pair<int, int>>& holdout) {
    if (holdout.empty()) throw ValidationError("holdout set is empty");
    if (X_hat.rows() != truth.rows() || X_hat.cols() != truth.cols())
        throw ValidationError("completion shape does not match truth");
    double acc = 0.0;
    for (const auto& [i, j] : holdout) {
        if (i < 0 || i >= truth.rows() || j < 0 || j >= truth.cols() ||
            !truth.mask(i, j))
            throw ValidationError("holdout entry (" + std::to_string(i) + "," +
                                  std::to_string(j) +
                                  ") is not observed in the truth matrix");
        const double d = X_hat(i, j) - truth.values(i, j);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(holdout.size()));
}

}  // namespace grmc
