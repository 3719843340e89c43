#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "grmc/completion.hpp"
#include "grmc/errors.hpp"
#include "grmc/graphs.hpp"
#include "grmc/rng.hpp"
#include "helpers.hpp"

using namespace grmc;
using test::make_matrix;

namespace {

Eigen::SparseMatrix<double> empty_lap(int n) {
    return Eigen::SparseMatrix<double>(n, n);
}

WeightedGraph complete_graph(int n) {
    WeightedGraph g;
    g.n_nodes = n;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.edges.push_back({i, j, 1.0});
    return g;
}

// Random mask guaranteeing minimum coverage per row and column.
MaskArray random_mask(int m, int n, double keep, int min_row, int min_col,
                      Rng& rng) {
    while (true) {
        MaskArray mask(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) mask(i, j) = rng.uniform01() < keep;
        bool ok = true;
        for (int i = 0; i < m && ok; ++i)
            if (mask.row(i).count() < min_row) ok = false;
        for (int j = 0; j < n && ok; ++j)
            if (mask.col(j).count() < min_col) ok = false;
        if (ok) return mask;
    }
}

ObservationMatrix masked_matrix(const Eigen::MatrixXd& full, const MaskArray& mask) {
    ObservationMatrix m = make_matrix(full);
    for (Eigen::Index i = 0; i < full.rows(); ++i)
        for (Eigen::Index j = 0; j < full.cols(); ++j)
            if (!mask(i, j)) test::hide_entry(m, i, j);
    return m;
}

double holdout_rel_error(const Eigen::MatrixXd& x_hat, const Eigen::MatrixXd& truth,
                         const MaskArray& observed) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
        for (Eigen::Index j = 0; j < truth.cols(); ++j)
            if (!observed(i, j)) {
                num += (x_hat(i, j) - truth(i, j)) * (x_hat(i, j) - truth(i, j));
                den += truth(i, j) * truth(i, j);
            }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("grals A-update equals the dense ridge solution when lambda_L = 0") {
    Rng rng(21);
    Eigen::MatrixXd full(12, 6);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 6; ++j) full(i, j) = rng.normal();
    ObservationMatrix M = make_matrix(full);

    GralsParams p;
    p.r = 3;
    p.lambda_L = 0.0;
    p.lambda_a = 0.7;
    p.lambda_b = 0.1;
    p.max_outer = 1;
    p.cg_tol = 1e-12;
    p.cg_max_iter = 2000;
    p.seed = 5;

    Eigen::MatrixXd b_init, a_solved;
    bool captured = false;
    auto observer = [&](const FactorSolveRecord& rec) {
        if (rec.row_step && !captured) {
            b_init = rec.fixed_factor;
            a_solved = rec.solution;
            captured = true;
        }
    };
    grals_complete(M, empty_lap(12), empty_lap(6), p, observer);
    REQUIRE(captured);

    const Eigen::MatrixXd gram =
        b_init.transpose() * b_init +
        p.lambda_a * Eigen::MatrixXd::Identity(p.r, p.r);
    const Eigen::MatrixXd closed = full * b_init * gram.inverse();
    CHECK((a_solved - closed).norm() / closed.norm() < 1e-6);
}

TEST_CASE("grals recovers a noiseless rank-1 matrix from 60% of entries") {
    Rng rng(33);
    Eigen::VectorXd a(20), b(10);
    for (int i = 0; i < 20; ++i) a(i) = 1.0 + rng.uniform01();
    for (int j = 0; j < 10; ++j) b(j) = 1.0 + rng.uniform01();
    const Eigen::MatrixXd full = a * b.transpose();
    const MaskArray mask = random_mask(20, 10, 0.6, 2, 4, rng);
    ObservationMatrix M = masked_matrix(full, mask);

    GralsParams p;
    p.r = 1;
    p.lambda_L = 0.0;
    p.lambda_a = 1e-6;
    p.lambda_b = 1e-6;
    p.max_outer = 200;
    p.seed = 1;
    auto out = grals_complete(M, empty_lap(20), empty_lap(10), p);
    CHECK(holdout_rel_error(out.completion.X_hat, full, mask) < 1e-3);
}

TEST_CASE("grals objective trace is non-increasing (within CG slack)") {
    Rng rng(8);
    Eigen::MatrixXd full(40, 8);
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 8; ++j) full(i, j) = rng.normal() + 10.0;
    const MaskArray mask = random_mask(40, 8, 0.5, 1, 3, rng);
    ObservationMatrix M = masked_matrix(full, mask);

    WeightedGraph row_g;
    row_g.n_nodes = 40;
    for (int t = 0; t + 1 < 40; ++t) row_g.edges.push_back({t, t + 1, 1.0});

    GralsParams p;
    p.r = 3;
    p.lambda_L = 0.05;
    p.lambda_a = 0.01;
    p.lambda_b = 0.01;
    p.seed = 4;
    auto out = grals_complete(M, laplacian(row_g), laplacian(complete_graph(8)), p);
    const auto& trace = out.completion.objective_trace;
    REQUIRE(trace.size() >= 2);
    for (std::size_t t = 1; t < trace.size(); ++t)
        CHECK(trace[t] <= trace[t - 1] + 10.0 * p.cg_tol * std::abs(trace[t - 1]));
}

TEST_CASE("grals inner CG solves verify against a dense operator") {
    Rng rng(14);
    const int m = 15, n = 6, r = 2;
    Eigen::MatrixXd full(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) full(i, j) = rng.normal();
    const MaskArray mask = random_mask(m, n, 0.6, 1, 2, rng);
    ObservationMatrix M = masked_matrix(full, mask);

    WeightedGraph row_g;
    row_g.n_nodes = m;
    for (int t = 0; t + 1 < m; ++t) row_g.edges.push_back({t, t + 1, 0.7});
    const Eigen::MatrixXd L_row = Eigen::MatrixXd(laplacian(row_g));
    const Eigen::MatrixXd L_col = Eigen::MatrixXd(laplacian(complete_graph(n)));

    GralsParams p;
    p.r = r;
    p.lambda_L = 0.3;
    p.lambda_a = 0.05;
    p.lambda_b = 0.02;
    p.max_outer = 5;
    p.seed = 9;

    int checked = 0;
    auto observer = [&](const FactorSolveRecord& rec) {
        const Eigen::MatrixXd& L = rec.row_step ? L_row : L_col;
        const double lambda_frob = rec.row_step ? p.lambda_a : p.lambda_b;
        const int rows = static_cast<int>(rec.solution.rows());
        Eigen::MatrixXd hx = Eigen::MatrixXd::Zero(rows, r);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(rows, r);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < static_cast<int>(rec.fixed_factor.rows()); ++j) {
                const bool observed = rec.row_step ? M.mask(i, j) : M.mask(j, i);
                if (!observed) continue;
                const double v = rec.row_step ? M.values(i, j) : M.values(j, i);
                const Eigen::RowVectorXd f = rec.fixed_factor.row(j);
                hx.row(i) += f.dot(rec.solution.row(i)) * f;
                rhs.row(i) += v * f;
            }
        }
        hx += p.lambda_L * (L * rec.solution) + lambda_frob * rec.solution;
        const double rel = (hx - rhs).norm() / rhs.norm();
        CHECK(rel <= p.cg_tol);
        CHECK(rec.rel_residual <= p.cg_tol);
        ++checked;
    };
    grals_complete(M, laplacian(row_g), laplacian(complete_graph(n)), p, observer);
    CHECK(checked == 2 * 5);
}

TEST_CASE("huge lambda_L pulls factor rows together monotonically") {
    Rng rng(2);
    Eigen::MatrixXd full(12, 6);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 6; ++j) full(i, j) = rng.normal() * 3.0;
    ObservationMatrix M = make_matrix(full);
    const auto L_row = laplacian(complete_graph(12));
    const auto L_col = laplacian(complete_graph(6));

    auto max_row_deviation = [](const Eigen::MatrixXd& A) {
        const Eigen::RowVectorXd centre = A.colwise().mean();
        double dev = 0.0;
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            dev = std::max(dev, (A.row(i) - centre).norm());
        return dev;
    };

    std::vector<double> deviations;
    for (double lambda_L : {1.0, 10.0, 100.0}) {
        GralsParams p;
        p.r = 2;
        p.lambda_L = lambda_L;
        p.lambda_a = 0.01;
        p.lambda_b = 0.01;
        p.seed = 3;
        auto out = grals_complete(M, L_row, L_col, p);
        deviations.push_back(max_row_deviation(out.factors.A));
    }
    CHECK(deviations[1] < deviations[0]);
    CHECK(deviations[2] < deviations[1]);
}

TEST_CASE("lambda_L = 0 makes the result independent of the Laplacians") {
    Rng rng(6);
    Eigen::MatrixXd full(10, 5);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 5; ++j) full(i, j) = rng.normal();
    const MaskArray mask = random_mask(10, 5, 0.7, 1, 2, rng);
    ObservationMatrix M = masked_matrix(full, mask);

    GralsParams p;
    p.r = 2;
    p.lambda_L = 0.0;
    p.lambda_a = 0.1;
    p.lambda_b = 0.1;
    p.seed = 77;

    WeightedGraph chain;
    chain.n_nodes = 10;
    for (int t = 0; t + 1 < 10; ++t) chain.edges.push_back({t, t + 1, 2.0});
    auto out1 = grals_complete(M, laplacian(chain), laplacian(complete_graph(5)), p);
    auto out2 =
        grals_complete(M, laplacian(complete_graph(10)), empty_lap(5), p);
    CHECK(out1.completion.X_hat == out2.completion.X_hat);  // bitwise
}

TEST_CASE("grals input validation") {
    Eigen::MatrixXd full = Eigen::MatrixXd::Ones(4, 3);
    SUBCASE("NaN in an observed entry is rejected before solving") {
        ObservationMatrix M = make_matrix(full);
        M.values(1, 1) = std::numeric_limits<double>::quiet_NaN();
        GralsParams p;
        CHECK_THROWS_AS(grals_complete(M, empty_lap(4), empty_lap(3), p),
                        ValidationError);
    }
    SUBCASE("all-zero regularisation with a thin row is singular") {
        ObservationMatrix M = make_matrix(full);
        test::hide_entry(M, 0, 0);
        test::hide_entry(M, 0, 1);  // row 0 keeps 1 observation < r = 2
        GralsParams p;
        p.r = 2;
        p.lambda_L = p.lambda_a = p.lambda_b = 0.0;
        CHECK_THROWS_WITH_AS(grals_complete(M, empty_lap(4), empty_lap(3), p),
                             doctest::Contains("singular subproblem"), SolverError);
    }
    SUBCASE("no observed entries") {
        ObservationMatrix M = make_matrix(full);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 3; ++j) test::hide_entry(M, i, j);
        CHECK_THROWS_AS(grals_complete(M, empty_lap(4), empty_lap(3), {}),
                        ValidationError);
    }
}

TEST_CASE("soft_threshold_svd") {
    SUBCASE("diagonal example") {
        Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 2);
        X(0, 0) = 3.0;
        X(1, 1) = 1.0;
        const Eigen::MatrixXd S = soft_threshold_svd(X, 2.0);
        CHECK(S(0, 0) == 1.0);
        CHECK(S(0, 1) == 0.0);
        CHECK(S(1, 0) == 0.0);
        CHECK(S(1, 1) == 0.0);
    }
    SUBCASE("lambda = 0 is the identity") {
        Rng rng(4);
        Eigen::MatrixXd X(5, 3);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
        CHECK((soft_threshold_svd(X, 0.0) - X).norm() < 1e-12 * X.norm());
    }
    SUBCASE("lambda above the top singular value gives zero") {
        Eigen::MatrixXd X(2, 2);
        X << 1, 2, 3, 4;
        const double sigma_max = X.jacobiSvd().singularValues()(0);
        CHECK(soft_threshold_svd(X, sigma_max + 0.1).isZero(1e-14));
    }
    SUBCASE("non-expansiveness on random pairs") {
        Rng rng(12);
        for (int t = 0; t < 20; ++t) {
            Eigen::MatrixXd X(4, 4), Y(4, 4);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    X(i, j) = rng.normal();
                    Y(i, j) = rng.normal();
                }
            const double lambda = rng.uniform(0.0, 2.0);
            CHECK((soft_threshold_svd(X, lambda) - soft_threshold_svd(Y, lambda))
                      .norm() <= (X - Y).norm() + 1e-12);
        }
    }
}

TEST_CASE("softimpute") {
    SUBCASE("fully observed input converges in one step to SVT(M)") {
        Rng rng(9);
        Eigen::MatrixXd full(8, 4);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 4; ++j) full(i, j) = rng.normal();
        ObservationMatrix M = make_matrix(full);
        auto result = softimpute_complete(M, 0.5, 1e-9, 50);
        CHECK(result.converged);
        CHECK(result.iterations == 2);  // second sweep observes zero change
        CHECK((result.X_hat - soft_threshold_svd(full, 0.5)).norm() < 1e-12);
    }
    SUBCASE("objective is non-increasing along iterates") {
        Rng rng(19);
        Eigen::VectorXd a(15), b(6);
        for (int i = 0; i < 15; ++i) a(i) = rng.normal();
        for (int j = 0; j < 6; ++j) b(j) = rng.normal();
        Eigen::MatrixXd full = a * b.transpose();
        const MaskArray mask = random_mask(15, 6, 0.6, 1, 2, rng);
        ObservationMatrix M = masked_matrix(full, mask);
        auto result = softimpute_complete(M, 0.3, 1e-10, 300);
        const auto& tr = result.objective_trace;
        for (std::size_t t = 1; t < tr.size(); ++t)
            CHECK(tr[t] <= tr[t - 1] + 1e-9 * std::abs(tr[t - 1]));
    }
    SUBCASE("rank-1 recovery from 60% of entries") {
        Rng rng(25);
        Eigen::VectorXd a(20), b(10);
        for (int i = 0; i < 20; ++i) a(i) = 1.0 + rng.uniform01();
        for (int j = 0; j < 10; ++j) b(j) = 1.0 + rng.uniform01();
        const Eigen::MatrixXd full = a * b.transpose();
        const MaskArray mask = random_mask(20, 10, 0.6, 2, 4, rng);
        ObservationMatrix M = masked_matrix(full, mask);
        auto result = softimpute_complete(M, 0.01, 1e-9, 5000);
        CHECK(holdout_rel_error(result.X_hat, full, mask) < 1e-2);
    }
    SUBCASE("exhausting max_iter reports converged = false") {
        Rng rng(30);
        Eigen::MatrixXd full(6, 4);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 4; ++j) full(i, j) = rng.normal();
        const MaskArray mask = random_mask(6, 4, 0.6, 1, 1, rng);
        ObservationMatrix M = masked_matrix(full, mask);
        auto result = softimpute_complete(M, 0.1, 1e-14, 2);
        CHECK_FALSE(result.converged);
        CHECK(result.iterations == 2);
    }
}

TEST_CASE("idw") {
    auto station = [](const char* id, double km, double val_unused) {
        StationMetadata s;
        s.station_id = id;
        s.latitude = km / 6371.0 * 180.0 / M_PI;
        s.longitude = 4.0;
        s.altitude_m = 0.0;
        (void)val_unused;
        return s;
    };
    SUBCASE("two neighbours at 1 km and 2 km with power 1") {
        // target at 0 km, neighbours at 1 km (10 C) and 2 km (16 C)
        std::vector<StationMetadata> meta = {station("T", 0, 0),
                                             station("N1", 1, 0),
                                             station("N2", 2, 0)};
        Eigen::MatrixXd full(1, 3);
        full << 0.0, 10.0, 16.0;
        ObservationMatrix M = make_matrix(full);
        test::hide_entry(M, 0, 0);
        auto result = idw_complete(M, meta, 1.0);
        CHECK(result.X_hat(0, 0) == doctest::Approx(12.0).epsilon(1e-9));
    }
    SUBCASE("constant neighbours give the constant") {
        std::vector<StationMetadata> meta = {station("T", 0, 0),
                                             station("N1", 3, 0),
                                             station("N2", 11, 0)};
        Eigen::MatrixXd full(1, 3);
        full << 0.0, 7.25, 7.25;
        ObservationMatrix M = make_matrix(full);
        test::hide_entry(M, 0, 0);
        auto result = idw_complete(M, meta, 2.0);
        CHECK(result.X_hat(0, 0) == doctest::Approx(7.25).epsilon(1e-12));
    }
    SUBCASE("high power approaches the nearest neighbour") {
        std::vector<StationMetadata> meta = {station("T", 0, 0),
                                             station("N1", 2, 0),
                                             station("N2", 7, 0),
                                             station("N3", 11, 0)};
        Eigen::MatrixXd full(1, 4);
        full << 0.0, 3.0, 20.0, -10.0;
        ObservationMatrix M = make_matrix(full);
        test::hide_entry(M, 0, 0);
        auto result = idw_complete(M, meta, 8.0);
        CHECK(std::abs(result.X_hat(0, 0) - 3.0) < 0.01);
    }
    SUBCASE("a row with no observations is reported uncompletable") {
        std::vector<StationMetadata> meta = {station("A", 0, 0),
                                             station("B", 4, 0)};
        Eigen::MatrixXd full(2, 2);
        full << 1.0, 2.0, 3.0, 4.0;
        ObservationMatrix M = make_matrix(full);
        test::hide_entry(M, 1, 0);
        test::hide_entry(M, 1, 1);
        auto result = idw_complete(M, meta, 2.0);
        REQUIRE(result.uncompletable.size() == 2);
        CHECK(std::isnan(result.X_hat(1, 0)));
        CHECK(std::isnan(result.X_hat(1, 1)));
        CHECK(result.X_hat(0, 0) == 1.0);  // observed entries copied through
    }
}

TEST_CASE("pca imputation") {
    SUBCASE("fully observed input is returned unchanged") {
        Rng rng(40);
        Eigen::MatrixXd full(10, 4);
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 4; ++j) full(i, j) = rng.normal();
        ObservationMatrix M = make_matrix(full);
        auto result = pca_complete(M, 2, 1e-8, 50);
        CHECK(result.X_hat == full);
    }
    SUBCASE("identical columns: the hole converges to the shared value") {
        Eigen::VectorXd v(12);
        for (int i = 0; i < 12; ++i) v(i) = std::sin(0.7 * i) * 5.0 + 10.0;
        Eigen::MatrixXd full(12, 3);
        full << v, v, v;
        ObservationMatrix M = make_matrix(full);
        test::hide_entry(M, 4, 1);
        auto result = pca_complete(M, 1, 1e-12, 2000);
        CHECK(result.X_hat(4, 1) == doctest::Approx(v(4)).epsilon(1e-6));
    }
    SUBCASE("rank-2 data at 80% observed imputes below the noise level") {
        Rng rng(50);
        const int m = 60, n = 10;
        Eigen::MatrixXd U(m, 2), V(n, 2);
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < 2; ++k) U(i, k) = rng.normal();
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < 2; ++k) V(j, k) = rng.normal();
        const double noise = 0.1;
        Eigen::MatrixXd full = U * V.transpose() * 3.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) full(i, j) += noise * rng.normal();
        const MaskArray mask = random_mask(m, n, 0.8, 3, 6, rng);
        ObservationMatrix M = masked_matrix(full, mask);
        auto result = pca_complete(M, 2, 1e-9, 500);
        double se = 0.0;
        int count = 0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                if (!mask(i, j)) {
                    se += std::pow(result.X_hat(i, j) - full(i, j), 2);
                    ++count;
                }
        CHECK(std::sqrt(se / count) < 3.0 * noise);
    }
    SUBCASE("rejections") {
        Eigen::MatrixXd full = Eigen::MatrixXd::Ones(5, 3);
        ObservationMatrix M = make_matrix(full);
        CHECK_THROWS_AS(pca_complete(M, 3, 1e-6, 10), ValidationError);
        for (int i = 0; i < 5; ++i) test::hide_entry(M, i, 2);
        CHECK_THROWS_AS(pca_complete(M, 1, 1e-6, 10), ValidationError);
    }
}

TEST_CASE("mean fill uses station means") {
    Eigen::MatrixXd full(3, 2);
    full << 1.0, 10.0, 3.0, 20.0, 5.0, 30.0;
    ObservationMatrix M = make_matrix(full);
    test::hide_entry(M, 1, 0);
    auto result = mean_fill_complete(M);
    CHECK(result.X_hat(1, 0) == doctest::Approx(3.0));  // mean of {1, 5}
    CHECK(result.X_hat(1, 1) == 20.0);
}

TEST_CASE("evaluate_rmse") {
    Eigen::MatrixXd truth_values(2, 2);
    truth_values << 1, 2, 3, 4;
    ObservationMatrix truth = make_matrix(truth_values);
    std::vector<std::pair<int, int>> holdout = {{0, 0}, {1, 1}};

    CHECK(evaluate_rmse(truth_values, truth, holdout) == 0.0);

    Eigen::MatrixXd biased = truth_values.array() + 1.0;
    CHECK(evaluate_rmse(biased, truth, holdout) == doctest::Approx(1.0));

    Eigen::MatrixXd mixed = truth_values;
    mixed(0, 0) += 1.0;
    mixed(1, 1) -= 1.0;
    CHECK(evaluate_rmse(mixed, truth, holdout) == doctest::Approx(1.0));

    CHECK_THROWS_AS(evaluate_rmse(truth_values, truth, {}), ValidationError);

    ObservationMatrix holey = truth;
    test::hide_entry(holey, 0, 0);
    CHECK_THROWS_AS(evaluate_rmse(truth_values, holey, holdout), ValidationError);
}
