#ifndef GRMC_EXPERIMENTS_HPP
#define GRMC_EXPERIMENTS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grmc/completion.hpp"
#include "grmc/data_model.hpp"
#include "grmc/graphs.hpp"
#include "grmc/masks.hpp"

namespace grmc {

/// One GRALS configuration: solver weights plus the graph recipe.
struct GralsHyperparams {
    int r = 10;
    double lambda_L = 0.001;
    double lambda_a = 0.005;
    double lambda_b = 0.005;
    int k = 4;
    bool weighted = true;
    bool altitude_limit = true;
    double altitude_threshold_m = 100.0;
    LagSet lagset{{1}, LagSet::WeightRule::unit};

    SpatialGraphConfig spatial_config() const {
        return {k, weighted, altitude_limit, altitude_threshold_m};
    }
};

/// Candidate sets for the randomised hyperparameter search.
struct HyperGrid {
    std::vector<int> ranks;
    std::vector<double> lambda_L_values;
    std::vector<double> lambda_a_values;
    std::vector<double> lambda_b_values;
    std::vector<int> k_values;
    std::vector<bool> weighted_values;
    std::vector<bool> altitude_limit_values;
    std::vector<std::vector<int>> lagsets;
    LagSet::WeightRule lag_weight_rule = LagSet::WeightRule::unit;
    double altitude_threshold_m = 100.0;

    /// r in 2..20, lambdas in {0.1, 0.01, 0.001, 0.005}, K in 1..5, both
    /// boolean flags, lag sets [1], [1,2], [1,2,3], [1,2,3,4,5].
    static HyperGrid default_grid();

    std::uint64_t total_combinations() const;
    GralsHyperparams combination_at(std::uint64_t index) const;

    /// Samples min(n, total) distinct combinations, deterministically.
    std::vector<GralsHyperparams> sample_without_replacement(
        std::uint64_t n, std::uint64_t seed) const;
};

/// Fold layout and seeds for Monte Carlo cross-validation runs.
struct ExperimentPlan {
    int train_weeks = 10;
    int masks_per_week_train = 5;
    int test_weeks = 5;
    int masks_per_week_test = 3;
    MaskScenario scenario;  // kind and fraction; per-fold seeds come from `seed`
    std::uint64_t n_samples = 60;
    std::uint64_t seed = 0;
    int threads = 1;  // folds are schedule-independent, so any value is safe
};

/// Table III constraint cases.
struct AblationCase {
    enum class Constraint {
        none,                    // #1
        all_lambdas_zero,        // #2
        frob_lambdas_zero,       // #3
        lambda_L_zero,           // #4
        spatial_laplacian_zero,  // #5
        temporal_laplacian_zero  // #6
    };
    int id = 1;
    Constraint constraint = Constraint::none;

    static AblationCase from_id(int id);
};

/// One train/holdout split of one gap-free week.
struct Fold {
    int week_ordinal = 0;       // position among the selected weeks
    std::int64_t week_start = 0;
    int mask_id = 0;
    std::uint64_t fold_seed = 0;
    ObservationMatrix truth;
    ObservationMatrix train;
    std::vector<std::pair<int, int>> holdout;
};

struct FoldScore {
    int week_ordinal = 0;
    std::int64_t week_start = 0;
    int mask_id = 0;
    double rmse = 0.0;
    bool ok = false;
    std::string error;
};

struct MethodScores {
    std::string method;
    std::string scenario;
    std::vector<FoldScore> folds;
    double mean_rmse = 0.0;  // over successful folds
    int failed_folds = 0;

    void finalize();
};

/// Completion routine under test: maps a training matrix and a fold seed to a
/// completed matrix. Oracles can be injected in tests through this hook.
using CompletionFn =
    std::function<Eigen::MatrixXd(const ObservationMatrix& train,
                                  std::uint64_t fold_seed)>;

/// Rows strictly before the boundary timestamp go to train, the rest to test.
/// The boundary must lie within the matrix time range.
std::pair<ObservationMatrix, ObservationMatrix> split_train_test(
    const ObservationMatrix& matrix, std::int64_t boundary);

/// Selects `n_weeks` gap-free weeks (seeded sampling without replacement,
/// reported in time order) and generates `masks_per_week` holdouts for each.
/// Fold seeds derive from (plan.seed, week ordinal, mask index) only, so every
/// hyperparameter combination and ablation case sees identical folds.
/// Throws InsufficientDataError when fewer gap-free weeks exist.
std::vector<Fold> make_folds(const ExperimentPlan& plan,
                             const ObservationMatrix& matrix, int n_weeks,
                             int masks_per_week);

/// Runs one completion method over the folds (optionally in parallel; results
/// are identical for any thread count). Per-fold failures are recorded, not
/// fatal.
MethodScores run_method(const std::string& name, const CompletionFn& fn,
                        const std::vector<Fold>& folds,
                        const ExperimentPlan& plan);

/// Builds the GRALS completion routine for a hyperparameter set: constructs
/// both graphs, then solves each fold with the fold-derived seed.
/// zero_spatial / zero_temporal replace the corresponding Laplacian with zero.
CompletionFn make_grals_completer(const GralsHyperparams& hp,
                                  const std::vector<StationMetadata>& meta,
                                  const GralsParams& solver_defaults,
                                  bool zero_spatial = false,
                                  bool zero_temporal = false);

struct CvRow {
    std::uint64_t combo_index = 0;
    GralsHyperparams hp;
    MethodScores scores;
};

struct TuneResult {
    std::size_t best_index = 0;  // into `table`
    std::vector<CvRow> table;

    const CvRow& best() const { return table[best_index]; }
};

/// Monte Carlo CV over sampled hyperparameter combinations; the argmin of the
/// fold-mean RMSE wins (ties break toward the earlier sample).
TuneResult tune(const ExperimentPlan& plan, const HyperGrid& grid,
                const ObservationMatrix& train,
                const std::vector<StationMetadata>& meta,
                const GralsParams& solver_defaults = {});

/// Evaluates a hyperparameter set on the test matrix over
/// test_weeks x masks_per_week_test folds.
MethodScores evaluate_test(const GralsHyperparams& best,
                           const ExperimentPlan& plan,
                           const ObservationMatrix& test,
                           const std::vector<StationMetadata>& meta,
                           const GralsParams& solver_defaults = {});

/// Applies the case constraint on top of `best`, then evaluates as
/// evaluate_test. Case #1 reproduces evaluate_test exactly.
MethodScores run_ablation(const AblationCase& ablation,
                          const GralsHyperparams& best,
                          const ExperimentPlan& plan,
                          const ObservationMatrix& test,
                          const std::vector<StationMetadata>& meta,
                          const GralsParams& solver_defaults = {});

/// Fixed settings for the non-GRALS reference methods.
struct BaselineConfig {
    double softimpute_lambda = 1.0;
    double softimpute_tol = 1e-7;
    int softimpute_max_iter = 2000;
    double idw_power = 2.0;
    int pca_rank = 5;
    double pca_tol = 1e-6;
    int pca_max_iter = 100;
};

/// Evaluates mean-fill, IDW, PCA, SoftImpute and GRALS on identical folds.
std::vector<MethodScores> run_baselines(const GralsHyperparams& grals_hp,
                                        const BaselineConfig& cfg,
                                        const ExperimentPlan& plan,
                                        const ObservationMatrix& test,
                                        const std::vector<StationMetadata>& meta,
                                        const GralsParams& solver_defaults = {});

/// `method,scenario,week,mask_id,rmse`; failed folds leave rmse empty.
void write_fold_table_csv(const std::string& path,
                          const std::vector<MethodScores>& rows);

/// `method,scenario,mean_rmse`.
void write_summary_csv(const std::string& path,
                       const std::vector<MethodScores>& rows);

/// Tune table: one line per sampled combination with its fold-mean RMSE.
void write_cv_table_csv(const std::string& path, const TuneResult& result);

}  // namespace grmc

#endif
