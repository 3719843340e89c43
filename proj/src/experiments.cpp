#include "grmc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "grmc/csv.hpp"
#include "grmc/errors.hpp"
#include "grmc/rng.hpp"
#include "grmc/timeutil.hpp"

namespace grmc {

HyperGrid HyperGrid::default_grid() {
    HyperGrid g;
    for (int r = 2; r <= 20; ++r) g.ranks.push_back(r);
    g.lambda_L_values = {0.1, 0.01, 0.001, 0.005};
    g.lambda_a_values = {0.1, 0.01, 0.001, 0.005};
    g.lambda_b_values = {0.1, 0.01, 0.001, 0.005};
    for (int k = 1; k <= 5; ++k) g.k_values.push_back(k);
    g.weighted_values = {true, false};
    g.altitude_limit_values = {true, false};
    g.lagsets = {{1}, {1, 2}, {1, 2, 3}, {1, 2, 3, 4, 5}};
    return g;
}

std::uint64_t HyperGrid::total_combinations() const {
    std::uint64_t total = 1;
    for (std::size_t s : {ranks.size(), lambda_L_values.size(),
                          lambda_a_values.size(), lambda_b_values.size(),
                          k_values.size(), weighted_values.size(),
                          altitude_limit_values.size(), lagsets.size()}) {
        if (s == 0) throw ValidationError("hyperparameter grid has an empty axis");
        total *= s;
    }
    return total;
}

GralsHyperparams HyperGrid::combination_at(std::uint64_t index) const {
    // Mixed-radix decode, fastest axis first.
    GralsHyperparams hp;
    auto take = [&index](std::size_t size) {
        const std::uint64_t digit = index % size;
        index /= size;
        return digit;
    };
    hp.r = ranks[take(ranks.size())];
    hp.lambda_L = lambda_L_values[take(lambda_L_values.size())];
    hp.lambda_a = lambda_a_values[take(lambda_a_values.size())];
    hp.lambda_b = lambda_b_values[take(lambda_b_values.size())];
    hp.k = k_values[take(k_values.size())];
    hp.weighted = weighted_values[take(weighted_values.size())];
    hp.altitude_limit = altitude_limit_values[take(altitude_limit_values.size())];
    hp.lagset = LagSet{lagsets[take(lagsets.size())], lag_weight_rule};
    hp.altitude_threshold_m = altitude_threshold_m;
    return hp;
}

std::vector<GralsHyperparams> HyperGrid::sample_without_replacement(
    std::uint64_t n, std::uint64_t seed) const {
    const std::uint64_t total = total_combinations();
    n = std::min(n, total);
    std::vector<std::uint64_t> indices(total);
    std::iota(indices.begin(), indices.end(), 0);
    Rng rng(mix_seed(seed, 0x67726964ULL));
    std::vector<GralsHyperparams> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t pick = i + rng.uniform_below(total - i);
        std::swap(indices[i], indices[pick]);
        out.push_back(combination_at(indices[i]));
    }
    return out;
}

AblationCase AblationCase::from_id(int id) {
    using C = Constraint;
    switch (id) {
        case 1: return {1, C::none};
        case 2: return {2, C::all_lambdas_zero};
        case 3: return {3, C::frob_lambdas_zero};
        case 4: return {4, C::lambda_L_zero};
        case 5: return {5, C::spatial_laplacian_zero};
        case 6: return {6, C::temporal_laplacian_zero};
        default:
            throw ValidationError("ablation case must be 1..6, got " +
                                  std::to_string(id));
    }
}

void MethodScores::finalize() {
    double sum = 0.0;
    int ok_count = 0;
    failed_folds = 0;
    for (const auto& f : folds) {
        if (f.ok) {
            sum += f.rmse;
            ++ok_count;
        } else {
            ++failed_folds;
        }
    }
    mean_rmse = ok_count > 0 ? sum / ok_count
                             : std::numeric_limits<double>::quiet_NaN();
}

std::pair<ObservationMatrix, ObservationMatrix> split_train_test(
    const ObservationMatrix& matrix, std::int64_t boundary) {
    if (matrix.row_index.empty())
        throw ValidationError("cannot split an empty matrix");
    if (boundary < matrix.row_index.front() || boundary > matrix.row_index.back())
        throw ValidationError("split boundary " + format_iso8601_utc(boundary) +
                              " lies outside the matrix time range");
    Eigen::Index cut = 0;
    while (cut < matrix.rows() &&
           matrix.row_index[static_cast<std::size_t>(cut)] < boundary)
        ++cut;

    auto slice = [&matrix](Eigen::Index begin, Eigen::Index count) {
        ObservationMatrix out;
        out.values = matrix.values.middleRows(begin, count);
        out.mask = matrix.mask.middleRows(begin, count);
        out.row_index.assign(matrix.row_index.begin() + begin,
                             matrix.row_index.begin() + begin + count);
        out.col_index = matrix.col_index;
        return out;
    };
    return {slice(0, cut), slice(cut, matrix.rows() - cut)};
}

std::vector<Fold> make_folds(const ExperimentPlan& plan,
                             const ObservationMatrix& matrix, int n_weeks,
                             int masks_per_week) {
    if (n_weeks < 1 || masks_per_week < 1)
        throw ValidationError("fold counts must be >= 1");
    auto slices = slice_weeks(matrix, /*gap_free_only=*/true);
    if (static_cast<int>(slices.size()) < n_weeks)
        throw InsufficientDataError(
            "found " + std::to_string(slices.size()) +
            " gap-free weeks, need " + std::to_string(n_weeks));

    // Seeded selection without replacement, independent of the scenario so
    // block and spread runs see the same weeks.
    std::vector<std::size_t> order(slices.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(plan.seed, 0x7765656bULL));
    for (int w = 0; w < n_weeks; ++w) {
        const std::uint64_t pick =
            w + rng.uniform_below(order.size() - static_cast<std::size_t>(w));
        std::swap(order[static_cast<std::size_t>(w)],
                  order[static_cast<std::size_t>(pick)]);
    }
    std::vector<std::size_t> chosen(order.begin(), order.begin() + n_weeks);
    std::sort(chosen.begin(), chosen.end());

    std::vector<Fold> folds;
    folds.reserve(static_cast<std::size_t>(n_weeks) * masks_per_week);
    for (int w = 0; w < n_weeks; ++w) {
        const WeekSlice& slice = slices[chosen[static_cast<std::size_t>(w)]];
        for (int k = 0; k < masks_per_week; ++k) {
            Fold fold;
            fold.week_ordinal = w;
            fold.week_start = slice.start;
            fold.mask_id = k;
            fold.fold_seed = mix_seed(plan.seed, static_cast<std::uint64_t>(w),
                                      static_cast<std::uint64_t>(k));
            MaskScenario scenario = plan.scenario;
            scenario.seed = fold.fold_seed;
            const HoldoutMask mask = generate_mask(slice.matrix, scenario);
            auto [train, holdout] = apply_mask(slice.matrix, mask);
            fold.truth = slice.matrix;
            fold.train = std::move(train);
            fold.holdout = std::move(holdout);
            folds.push_back(std::move(fold));
        }
    }
    return folds;
}

MethodScores run_method(const std::string& name, const CompletionFn& fn,
                        const std::vector<Fold>& folds,
                        const ExperimentPlan& plan) {
    MethodScores scores;
    scores.method = name;
    scores.scenario = scenario_kind_name(plan.scenario.kind);
    scores.folds.resize(folds.size());

    auto run_fold = [&](std::size_t f) {
        const Fold& fold = folds[f];
        FoldScore& score = scores.folds[f];
        score.week_ordinal = fold.week_ordinal;
        score.week_start = fold.week_start;
        score.mask_id = fold.mask_id;
        try {
            const Eigen::MatrixXd x_hat = fn(fold.train, fold.fold_seed);
            score.rmse = evaluate_rmse(x_hat, fold.truth, fold.holdout);
            score.ok = std::isfinite(score.rmse);
            if (!score.ok) score.error = "non-finite RMSE";
        } catch (const std::exception& e) {
            score.ok = false;
            score.error = e.what();
        }
    };

    int threads = plan.threads;
    if (threads <= 0)
        threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(folds.size())));
    if (threads == 1) {
        for (std::size_t f = 0; f < folds.size(); ++f) run_fold(f);
    } else {
        // Static interleaved split; each fold writes only its own slot, so the
        // outcome does not depend on scheduling.
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t f = static_cast<std::size_t>(t); f < folds.size();
                     f += static_cast<std::size_t>(threads))
                    run_fold(f);
            });
        for (auto& th : pool) th.join();
    }

    scores.finalize();
    for (const auto& f : scores.folds)
        if (!f.ok)
            std::cerr << "warning: " << name << " fold (week "
                      << format_iso8601_utc(f.week_start) << ", mask " << f.mask_id
                      << ") failed: " << f.error << "\n";
    return scores;
}

CompletionFn make_grals_completer(const GralsHyperparams& hp,
                                  const std::vector<StationMetadata>& meta,
                                  const GralsParams& solver_defaults,
                                  bool zero_spatial, bool zero_temporal) {
    const int n = static_cast<int>(meta.size());
    Eigen::SparseMatrix<double> L_col(n, n);
    if (!zero_spatial && hp.lambda_L > 0.0)
        L_col = laplacian(build_spatial_graph(meta, hp.spatial_config()));

    GralsParams params = solver_defaults;
    params.r = hp.r;
    params.lambda_L = hp.lambda_L;
    params.lambda_a = hp.lambda_a;
    params.lambda_b = hp.lambda_b;

    return [params, hp, L_col, zero_temporal](const ObservationMatrix& train,
                                              std::uint64_t fold_seed) {
        const int m = static_cast<int>(train.rows());
        Eigen::SparseMatrix<double> L_row(m, m);
        if (!zero_temporal && params.lambda_L > 0.0)
            L_row = laplacian(build_temporal_graph(m, hp.lagset));
        GralsParams p = params;
        p.seed = fold_seed;
        return grals_complete(train, L_row, L_col, p).completion.X_hat;
    };
}

TuneResult tune(const ExperimentPlan& plan, const HyperGrid& grid,
                const ObservationMatrix& train,
                const std::vector<StationMetadata>& meta,
                const GralsParams& solver_defaults) {
    const auto folds =
        make_folds(plan, train, plan.train_weeks, plan.masks_per_week_train);
    const auto combos = grid.sample_without_replacement(plan.n_samples, plan.seed);

    TuneResult result;
    result.table.reserve(combos.size());
    for (std::size_t c = 0; c < combos.size(); ++c) {
        CvRow row;
        row.combo_index = c;
        row.hp = combos[c];
        try {
            const CompletionFn fn =
                make_grals_completer(row.hp, meta, solver_defaults);
            row.scores = run_method("grals", fn, folds, plan);
        } catch (const std::exception& e) {
            row.scores.method = "grals";
            row.scores.scenario = scenario_kind_name(plan.scenario.kind);
            row.scores.mean_rmse = std::numeric_limits<double>::quiet_NaN();
            row.scores.failed_folds = static_cast<int>(folds.size());
            std::cerr << "warning: combination " << c << " failed: " << e.what()
                      << "\n";
        }
        result.table.push_back(std::move(row));
    }

    bool found = false;
    for (std::size_t c = 0; c < result.table.size(); ++c) {
        const double mean = result.table[c].scores.mean_rmse;
        if (!std::isfinite(mean)) continue;
        if (!found || mean < result.table[result.best_index].scores.mean_rmse) {
            result.best_index = c;
            found = true;
        }
    }
    if (!found)
        throw SolverError("every sampled hyperparameter combination failed");
    return result;
}

MethodScores evaluate_test(const GralsHyperparams& best,
                           const ExperimentPlan& plan,
                           const ObservationMatrix& test,
                           const std::vector<StationMetadata>& meta,
                           const GralsParams& solver_defaults) {
    const auto folds =
        make_folds(plan, test, plan.test_weeks, plan.masks_per_week_test);
    return run_method("grals", make_grals_completer(best, meta, solver_defaults),
                      folds, plan);
}

MethodScores run_ablation(const AblationCase& ablation,
                          const GralsHyperparams& best,
                          const ExperimentPlan& plan,
                          const ObservationMatrix& test,
                          const std::vector<StationMetadata>& meta,
                          const GralsParams& solver_defaults) {
    GralsHyperparams hp = best;
    bool zero_spatial = false, zero_temporal = false;
    using C = AblationCase::Constraint;
    switch (ablation.constraint) {
        case C::none:
            break;
        case C::all_lambdas_zero:
            hp.lambda_L = hp.lambda_a = hp.lambda_b = 0.0;
            break;
        case C::frob_lambdas_zero:
            hp.lambda_a = hp.lambda_b = 0.0;
            break;
        case C::lambda_L_zero:
            hp.lambda_L = 0.0;
            break;
        case C::spatial_laplacian_zero:
            zero_spatial = true;
            break;
        case C::temporal_laplacian_zero:
            zero_temporal = true;
            break;
    }
    const auto folds =
        make_folds(plan, test, plan.test_weeks, plan.masks_per_week_test);
    MethodScores scores = run_method(
        "grals_case" + std::to_string(ablation.id),
        make_grals_completer(hp, meta, solver_defaults, zero_spatial, zero_temporal),
        folds, plan);
    return scores;
}

std::vector<MethodScores> run_baselines(const GralsHyperparams& grals_hp,
                                        const BaselineConfig& cfg,
                                        const ExperimentPlan& plan,
                                        const ObservationMatrix& test,
                                        const std::vector<StationMetadata>& meta,
                                        const GralsParams& solver_defaults) {
    const auto folds =
        make_folds(plan, test, plan.test_weeks, plan.masks_per_week_test);

    std::vector<MethodScores> out;
    out.push_back(run_method(
        "mean",
        [](const ObservationMatrix& train, std::uint64_t) {
            return mean_fill_complete(train).X_hat;
        },
        folds, plan));
    out.push_back(run_method(
        "idw",
        [&meta, &cfg](const ObservationMatrix& train, std::uint64_t) {
            return idw_complete(train, meta, cfg.idw_power).X_hat;
        },
        folds, plan));
    out.push_back(run_method(
        "pca",
        [&cfg](const ObservationMatrix& train, std::uint64_t) {
            return pca_complete(train, cfg.pca_rank, cfg.pca_tol,
                                cfg.pca_max_iter)
                .X_hat;
        },
        folds, plan));
    out.push_back(run_method(
        "softimpute",
        [&cfg](const ObservationMatrix& train, std::uint64_t) {
            return softimpute_complete(train, cfg.softimpute_lambda,
                                       cfg.softimpute_tol, cfg.softimpute_max_iter)
                .X_hat;
        },
        folds, plan));
    out.push_back(run_method(
        "grals", make_grals_completer(grals_hp, meta, solver_defaults), folds,
        plan));
    return out;
}

void write_fold_table_csv(const std::string& path,
                          const std::vector<MethodScores>& rows) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    f << "method,scenario,week,mask_id,rmse\n";
    for (const auto& method : rows)
        for (const auto& fold : method.folds) {
            f << method.method << ',' << method.scenario << ','
              << format_iso8601_utc(fold.week_start) << ',' << fold.mask_id << ',';
            if (fold.ok) f << format_double(fold.rmse);
            f << '\n';
        }
}

void write_summary_csv(const std::string& path,
                       const std::vector<MethodScores>& rows) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    f << "method,scenario,mean_rmse\n";
    for (const auto& method : rows) {
        f << method.method << ',' << method.scenario << ',';
        if (std::isfinite(method.mean_rmse)) f << format_double(method.mean_rmse);
        f << '\n';
    }
}

namespace {
std::string lags_to_string(const std::vector<int>& lags) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < lags.size(); ++i) {
        if (i) ss << ' ';
        ss << lags[i];
    }
    return ss.str();
}
}  // namespace

void write_cv_table_csv(const std::string& path, const TuneResult& result) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    f << "combo,r,lambda_L,lambda_a,lambda_b,K,weighted,altitude_limit,lags,"
         "mean_rmse,failed_folds,best\n";
    for (std::size_t c = 0; c < result.table.size(); ++c) {
        const CvRow& row = result.table[c];
        f << row.combo_index << ',' << row.hp.r << ','
          << format_double(row.hp.lambda_L) << ',' << format_double(row.hp.lambda_a)
          << ',' << format_double(row.hp.lambda_b) << ',' << row.hp.k << ','
          << (row.hp.weighted ? "true" : "false") << ','
          << (row.hp.altitude_limit ? "true" : "false") << ','
          << lags_to_string(row.hp.lagset.lags) << ',';
        if (std::isfinite(row.scores.mean_rmse))
            f << format_double(row.scores.mean_rmse);
        f << ',' << row.scores.failed_folds << ','
          << (c == result.best_index ? "true" : "false") << '\n';
    }
}

}  // namespace grmc
