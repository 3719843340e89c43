// grmc: graph-regularised matrix completion for station-network time series.
//
// Subcommands: synth, ingest-check, graph, mask, complete, tune, benchmark,
// ablate. Every run is deterministic under --seed and writes a manifest that
// replays the run exactly (grmc <command> --config manifest.txt).

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "grmc/csv.hpp"
#include "grmc/errors.hpp"
#include "grmc/experiments.hpp"
#include "grmc/masks.hpp"
#include "grmc/synthetic.hpp"
#include "grmc/timeutil.hpp"

namespace {

using namespace grmc;

constexpr int kExitUsage = 2;
constexpr int kExitInsufficientData = 3;
constexpr int kExitSolverFailure = 4;

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void prepare_output_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw ValidationError("output directory '" + dir + "' is not writable (" +
                              ec.message() + ")");
    const std::string probe = join_path(dir, ".grmc_probe");
    std::ofstream f(probe);
    if (!f)
        throw ValidationError("output directory '" + dir + "' is not writable");
    f.close();
    std::filesystem::remove(probe, ec);
}

void write_manifest(const CLI::App* sub, const std::string& dir) {
    std::ofstream f(join_path(dir, "manifest.txt"));
    if (!f) throw ValidationError("cannot write manifest in '" + dir + "'");
    f << const_cast<CLI::App*>(sub)->config_to_str(true, true);
}

LagSet::WeightRule parse_weight_rule(const std::string& name) {
    if (name == "unit") return LagSet::WeightRule::unit;
    if (name == "inverse") return LagSet::WeightRule::inverse_lag;
    throw ValidationError("unknown temporal weight rule '" + name +
                          "' (unit | inverse)");
}

std::vector<MaskScenario::Kind> parse_scenarios(const std::string& name) {
    if (name == "both")
        return {MaskScenario::Kind::Block, MaskScenario::Kind::Spread};
    return {parse_scenario_kind(name)};
}

// ---------------------------------------------------------------- options --

struct SynthOpts {
    int stations = 50;
    int weeks = 10;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
};

struct IngestCheckOpts {
    std::string observations, metadata;
};

struct SpatialGraphOpts {
    std::string metadata;
    int k = 3;
    bool weighted = false;
    double altitude_limit = 0.0;  // 0 = off
    std::string output = "spatial_edges.csv";
};

struct TemporalGraphOpts {
    int rows = kWeekRows;
    std::vector<int> lags = {1};
    std::string weights = "unit";
    std::string output = "temporal_edges.csv";
};

struct MaskOpts {
    std::string observations, metadata;
    std::string scenario = "block";
    double fraction = 0.1;
    std::uint64_t seed = 0;
    std::string output = "mask.csv";
};

struct CompleteOpts {
    std::string observations, metadata, mask_path;
    std::string method = "grals";
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    // grals
    int rank = 10;
    double lambda_L = 0.001, lambda_a = 0.005, lambda_b = 0.005;
    int k = 4;
    bool weighted = true;
    bool altitude_limit = true;
    double altitude_threshold = 100.0;
    std::vector<int> lags = {1};
    std::string temporal_weights = "unit";
    int max_outer = 100;
    double cg_tol = 1e-8;
    int cg_max_iter = 500;
    // softimpute / pca / idw
    double lambda = 1.0;
    double tol = 1e-7;
    int max_iter = 2000;
    double power = 2.0;
    int pca_rank = 5;
};

struct HarnessOpts {
    std::string observations, metadata;
    std::string scenario = "both";
    double fraction = 0.1;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string output_dir = ".";
    std::string split_boundary;  // optional ISO timestamp
    int weeks = 0;               // 0 = command default
    int masks_per_week = 0;
    // grals hyperparameters (benchmark/ablate; tune searches the grid)
    int rank = 10;
    double lambda_L = 0.001, lambda_a = 0.005, lambda_b = 0.005;
    int k = 4;
    bool weighted = true;
    bool altitude_limit = true;
    double altitude_threshold = 100.0;
    std::vector<int> lags = {1};
    std::string temporal_weights = "unit";
    int max_outer = 100;
    double cg_tol = 1e-8;
    int cg_max_iter = 500;
    // baselines (benchmark)
    double softimpute_lambda = 1.0;
    double softimpute_tol = 1e-7;
    int softimpute_max_iter = 2000;
    double idw_power = 2.0;
    int pca_rank = 5;
    double pca_tol = 1e-6;
    int pca_max_iter = 100;
    // tune
    std::uint64_t samples = 60;
    // ablate
    std::vector<int> cases;
};

GralsHyperparams harness_hyperparams(const HarnessOpts& o) {
    GralsHyperparams hp;
    hp.r = o.rank;
    hp.lambda_L = o.lambda_L;
    hp.lambda_a = o.lambda_a;
    hp.lambda_b = o.lambda_b;
    hp.k = o.k;
    hp.weighted = o.weighted;
    hp.altitude_limit = o.altitude_limit;
    hp.altitude_threshold_m = o.altitude_threshold;
    hp.lagset = LagSet{o.lags, parse_weight_rule(o.temporal_weights)};
    return hp;
}

GralsParams harness_solver(const HarnessOpts& o) {
    GralsParams p;
    p.max_outer = o.max_outer;
    p.cg_tol = o.cg_tol;
    p.cg_max_iter = o.cg_max_iter;
    return p;
}

ExperimentPlan harness_plan(const HarnessOpts& o, MaskScenario::Kind kind,
                            int default_weeks, int default_masks, bool train) {
    ExperimentPlan plan;
    plan.scenario.kind = kind;
    plan.scenario.target_fraction = o.fraction;
    plan.seed = o.seed;
    plan.threads = o.threads;
    plan.n_samples = o.samples;
    const int weeks = o.weeks > 0 ? o.weeks : default_weeks;
    const int masks = o.masks_per_week > 0 ? o.masks_per_week : default_masks;
    if (train) {
        plan.train_weeks = weeks;
        plan.masks_per_week_train = masks;
    } else {
        plan.test_weeks = weeks;
        plan.masks_per_week_test = masks;
    }
    return plan;
}

// Loads the dataset and applies the optional train/test boundary.
ObservationMatrix load_matrix(const HarnessOpts& o,
                              std::vector<StationMetadata>& meta, bool train) {
    auto [matrix, m] = ingest_observations(o.observations, o.metadata);
    meta = std::move(m);
    if (o.split_boundary.empty()) return std::move(matrix);
    auto [head, tail] =
        split_train_test(matrix, parse_iso8601_utc(o.split_boundary));
    return train ? std::move(head) : std::move(tail);
}

// --------------------------------------------------------------- commands --

int run_synth(const SynthOpts& o, const CLI::App* sub) {
    prepare_output_dir(o.output_dir);
    auto [matrix, meta] = synthesize_network(o.stations, o.weeks, o.seed);
    write_observations_csv(join_path(o.output_dir, "observations.csv"), matrix);
    write_metadata_csv(join_path(o.output_dir, "metadata.csv"), meta);
    write_manifest(sub, o.output_dir);
    std::cout << "wrote " << join_path(o.output_dir, "observations.csv") << " ("
              << matrix.rows() << "x" << matrix.cols() << ") and "
              << join_path(o.output_dir, "metadata.csv") << "\n";
    return 0;
}

int run_ingest_check(const IngestCheckOpts& o) {
    auto [matrix, meta] = ingest_observations(o.observations, o.metadata);
    const auto weeks = slice_weeks(matrix, false).size();
    const auto gap_free = slice_weeks(matrix, true).size();
    std::cout << "stations=" << matrix.cols() << " rows=" << matrix.rows()
              << " observed=" << matrix.observed_count() << " fraction="
              << format_double(static_cast<double>(matrix.observed_count()) /
                               (static_cast<double>(matrix.rows()) *
                                static_cast<double>(matrix.cols())))
              << " weeks=" << weeks << " gap_free_weeks=" << gap_free << "\n";
    return 0;
}

int run_graph_spatial(const SpatialGraphOpts& o) {
    const auto meta = read_metadata_csv(o.metadata);
    SpatialGraphConfig cfg;
    cfg.k = o.k;
    cfg.weighted = o.weighted;
    cfg.altitude_limit = o.altitude_limit > 0.0;
    if (cfg.altitude_limit) cfg.altitude_threshold_m = o.altitude_limit;
    const auto graph = build_spatial_graph(meta, cfg);
    write_graph_csv(o.output, graph);
    std::cout << "wrote " << o.output << " (" << graph.edges.size()
              << " edges over " << graph.n_nodes << " stations)\n";
    return 0;
}

int run_graph_temporal(const TemporalGraphOpts& o) {
    const auto graph = build_temporal_graph(
        o.rows, LagSet{o.lags, parse_weight_rule(o.weights)});
    write_graph_csv(o.output, graph);
    std::cout << "wrote " << o.output << " (" << graph.edges.size()
              << " edges over " << graph.n_nodes << " rows)\n";
    return 0;
}

int run_mask(const MaskOpts& o) {
    auto [matrix, meta] = ingest_observations(o.observations, o.metadata);
    MaskScenario scenario;
    scenario.kind = parse_scenario_kind(o.scenario);
    scenario.target_fraction = o.fraction;
    scenario.seed = o.seed;
    const HoldoutMask mask = generate_mask(matrix, scenario);
    write_mask_csv(o.output, mask, matrix);
    std::cout << "wrote " << o.output << " (" << mask.entries.size()
              << " held-out entries in " << mask.per_station_runs.size()
              << " runs)\n";
    return 0;
}

int run_complete(const CompleteOpts& o, const CLI::App* sub) {
    prepare_output_dir(o.output_dir);
    auto [matrix, meta] = ingest_observations(o.observations, o.metadata);

    ObservationMatrix train = matrix;
    std::vector<std::pair<int, int>> holdout;
    if (!o.mask_path.empty()) {
        const HoldoutMask mask = read_mask_csv(o.mask_path, matrix);
        std::tie(train, holdout) = apply_mask(matrix, mask);
    }

    CompletionResult result;
    if (o.method == "grals") {
        const int m = static_cast<int>(train.rows());
        const int n = static_cast<int>(train.cols());
        Eigen::SparseMatrix<double> L_row(m, m), L_col(n, n);
        if (o.lambda_L > 0.0) {
            L_row = laplacian(build_temporal_graph(
                m, LagSet{o.lags, parse_weight_rule(o.temporal_weights)}));
            SpatialGraphConfig cfg{o.k, o.weighted, o.altitude_limit,
                                   o.altitude_threshold};
            L_col = laplacian(build_spatial_graph(meta, cfg));
        }
        GralsParams p;
        p.r = o.rank;
        p.lambda_L = o.lambda_L;
        p.lambda_a = o.lambda_a;
        p.lambda_b = o.lambda_b;
        p.max_outer = o.max_outer;
        p.cg_tol = o.cg_tol;
        p.cg_max_iter = o.cg_max_iter;
        p.seed = o.seed;
        result = grals_complete(train, L_row, L_col, p).completion;
    } else if (o.method == "softimpute") {
        result = softimpute_complete(train, o.lambda, o.tol, o.max_iter);
    } else if (o.method == "idw") {
        result = idw_complete(train, meta, o.power);
    } else if (o.method == "pca") {
        result = pca_complete(train, o.pca_rank, o.tol, o.max_iter);
    } else {
        result = mean_fill_complete(train);
    }

    write_completion_csv(join_path(o.output_dir, "completed.csv"), train,
                         result.X_hat);
    if (!result.objective_trace.empty())
        write_trace_csv(join_path(o.output_dir, "trace.csv"),
                        result.objective_trace);
    write_manifest(sub, o.output_dir);

    std::cout << "method=" << o.method << " iterations=" << result.iterations
              << " converged=" << (result.converged ? "true" : "false");
    if (!result.uncompletable.empty())
        std::cout << " uncompletable=" << result.uncompletable.size();
    if (!holdout.empty())
        std::cout << " holdout_rmse="
                  << format_double(evaluate_rmse(result.X_hat, matrix, holdout));
    std::cout << "\n";
    return 0;
}

int run_tune(const HarnessOpts& o, const CLI::App* sub) {
    prepare_output_dir(o.output_dir);
    std::vector<StationMetadata> meta;
    const ObservationMatrix matrix = load_matrix(o, meta, /*train=*/true);
    const HyperGrid grid = HyperGrid::default_grid();

    for (const auto kind : parse_scenarios(o.scenario)) {
        const ExperimentPlan plan = harness_plan(o, kind, 10, 5, /*train=*/true);
        const TuneResult result = tune(plan, grid, matrix, meta, harness_solver(o));
        const std::string tag = scenario_kind_name(kind);
        write_cv_table_csv(join_path(o.output_dir, "cv_table_" + tag + ".csv"),
                           result);
        const CvRow& best = result.best();
        std::ofstream bf(join_path(o.output_dir, "best_" + tag + ".txt"));
        bf << "r=" << best.hp.r << "\nlambda_L=" << format_double(best.hp.lambda_L)
           << "\nlambda_a=" << format_double(best.hp.lambda_a)
           << "\nlambda_b=" << format_double(best.hp.lambda_b)
           << "\nK=" << best.hp.k
           << "\nweighted=" << (best.hp.weighted ? "true" : "false")
           << "\naltitude_limit=" << (best.hp.altitude_limit ? "true" : "false")
           << "\nlags=";
        for (std::size_t i = 0; i < best.hp.lagset.lags.size(); ++i)
            bf << (i ? " " : "") << best.hp.lagset.lags[i];
        bf << "\nmean_rmse=" << format_double(best.scores.mean_rmse) << "\n";
        std::cout << tag << " best: combo=" << best.combo_index
                  << " r=" << best.hp.r << " lambda_L=" << best.hp.lambda_L
                  << " mean_rmse=" << format_double(best.scores.mean_rmse) << "\n";
    }
    write_manifest(sub, o.output_dir);
    return 0;
}

int run_benchmark(const HarnessOpts& o, const CLI::App* sub) {
    prepare_output_dir(o.output_dir);
    std::vector<StationMetadata> meta;
    const ObservationMatrix matrix = load_matrix(o, meta, /*train=*/false);
    const GralsHyperparams hp = harness_hyperparams(o);
    BaselineConfig cfg;
    cfg.softimpute_lambda = o.softimpute_lambda;
    cfg.softimpute_tol = o.softimpute_tol;
    cfg.softimpute_max_iter = o.softimpute_max_iter;
    cfg.idw_power = o.idw_power;
    cfg.pca_rank = o.pca_rank;
    cfg.pca_tol = o.pca_tol;
    cfg.pca_max_iter = o.pca_max_iter;

    std::vector<MethodScores> all;
    for (const auto kind : parse_scenarios(o.scenario)) {
        const ExperimentPlan plan = harness_plan(o, kind, 5, 3, /*train=*/false);
        auto rows = run_baselines(hp, cfg, plan, matrix, meta, harness_solver(o));
        for (auto& row : rows) {
            std::cout << row.scenario << " " << row.method << " mean_rmse="
                      << format_double(row.mean_rmse) << "\n";
            all.push_back(std::move(row));
        }
    }
    write_fold_table_csv(join_path(o.output_dir, "results.csv"), all);
    write_summary_csv(join_path(o.output_dir, "summary.csv"), all);
    write_manifest(sub, o.output_dir);
    return 0;
}

int run_ablate(const HarnessOpts& o, const CLI::App* sub) {
    prepare_output_dir(o.output_dir);
    std::vector<StationMetadata> meta;
    const ObservationMatrix matrix = load_matrix(o, meta, /*train=*/false);
    const GralsHyperparams hp = harness_hyperparams(o);

    std::vector<int> cases = o.cases;
    if (cases.empty()) cases = {1, 2, 3, 4, 5, 6};

    std::vector<MethodScores> all;
    for (const auto kind : parse_scenarios(o.scenario)) {
        const ExperimentPlan plan = harness_plan(o, kind, 5, 3, /*train=*/false);
        for (int id : cases) {
            auto row = run_ablation(AblationCase::from_id(id), hp, plan, matrix,
                                    meta, harness_solver(o));
            std::cout << row.scenario << " " << row.method << " mean_rmse="
                      << format_double(row.mean_rmse) << "\n";
            all.push_back(std::move(row));
        }
    }
    write_fold_table_csv(join_path(o.output_dir, "ablation_results.csv"), all);
    write_summary_csv(join_path(o.output_dir, "ablation_summary.csv"), all);
    write_manifest(sub, o.output_dir);
    return 0;
}

// ------------------------------------------------------------------ wiring --

void add_harness_common(CLI::App* sub, HarnessOpts& o, bool with_hyper) {
    sub->add_option("--observations", o.observations, "Observations CSV")
        ->required();
    sub->add_option("--metadata", o.metadata, "Station metadata CSV")->required();
    sub->add_option("--scenario", o.scenario, "Gap scenario")
        ->check(CLI::IsMember({"block", "spread", "both"}))
        ->capture_default_str();
    sub->add_option("--fraction", o.fraction, "Held-out fraction of entries")
        ->capture_default_str();
    sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    sub->add_option("--threads", o.threads,
                    "Worker threads over folds (0 = hardware)")
        ->capture_default_str();
    sub->add_option("--output-dir", o.output_dir, "Output directory")
        ->envname("GRMC_OUTPUT_DIR")
        ->capture_default_str();
    sub->add_option("--split-boundary", o.split_boundary,
                    "Train/test boundary timestamp (tune keeps rows before it, "
                    "benchmark/ablate rows from it)");
    sub->add_option("--weeks", o.weeks, "Weeks per scenario (0 = default)")
        ->capture_default_str();
    sub->add_option("--masks-per-week", o.masks_per_week,
                    "Mask generations per week (0 = default)")
        ->capture_default_str();
    sub->add_option("--max-outer", o.max_outer, "GRALS outer sweep cap")
        ->capture_default_str();
    sub->add_option("--cg-tol", o.cg_tol, "GRALS inner CG relative residual")
        ->capture_default_str();
    sub->add_option("--cg-max-iter", o.cg_max_iter, "GRALS inner CG iteration cap")
        ->capture_default_str();
    if (with_hyper) {
        sub->add_option("--rank", o.rank, "GRALS factor rank")
            ->capture_default_str();
        sub->add_option("--lambda-L", o.lambda_L, "Laplacian weight")
            ->capture_default_str();
        sub->add_option("--lambda-a", o.lambda_a, "Frobenius weight on A")
            ->capture_default_str();
        sub->add_option("--lambda-b", o.lambda_b, "Frobenius weight on B")
            ->capture_default_str();
        sub->add_option("--k", o.k, "Spatial nearest neighbours")
            ->capture_default_str();
        sub->add_flag("--weighted,!--unweighted", o.weighted,
                      "1/distance spatial edge weights")
            ->capture_default_str();
        sub->add_flag("--altitude-limit,!--no-altitude-limit", o.altitude_limit,
                      "Drop station pairs over the altitude threshold")
            ->capture_default_str();
        sub->add_option("--altitude-threshold", o.altitude_threshold,
                        "Altitude threshold in metres")
            ->capture_default_str();
        sub->add_option("--lags", o.lags, "Temporal lag set")
            ->delimiter(',')
            ->capture_default_str();
        sub->add_option("--temporal-weights", o.temporal_weights,
                        "Temporal weight rule")
            ->check(CLI::IsMember({"unit", "inverse"}))
            ->capture_default_str();
    }
    sub->set_config("--config", "", "Read options from a manifest/config file");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-regularised matrix completion for sensor networks"};
    app.require_subcommand(1);

    SynthOpts synth_opts;
    auto* synth = app.add_subcommand(
        "synth", "Generate a synthetic station network dataset");
    synth->add_option("--stations", synth_opts.stations, "Station count")
        ->capture_default_str();
    synth->add_option("--weeks", synth_opts.weeks, "Number of weeks")
        ->capture_default_str();
    synth->add_option("--seed", synth_opts.seed, "Generator seed")
        ->capture_default_str();
    synth->add_option("--output-dir", synth_opts.output_dir, "Output directory")
        ->envname("GRMC_OUTPUT_DIR")
        ->capture_default_str();
    synth->set_config("--config", "", "Read options from a manifest/config file");

    IngestCheckOpts ingest_opts;
    auto* ingest = app.add_subcommand(
        "ingest-check", "Validate a dataset and print its shape");
    ingest->add_option("--observations", ingest_opts.observations,
                       "Observations CSV")
        ->required();
    ingest->add_option("--metadata", ingest_opts.metadata, "Metadata CSV")
        ->required();

    auto* graph = app.add_subcommand("graph", "Build spatial or temporal graphs");
    graph->require_subcommand(1);
    SpatialGraphOpts spatial_opts;
    auto* spatial =
        graph->add_subcommand("spatial", "K-nearest-neighbour station graph");
    spatial->add_option("--metadata", spatial_opts.metadata, "Metadata CSV")
        ->required();
    spatial->add_option("--k", spatial_opts.k, "Neighbour count")
        ->capture_default_str();
    spatial->add_flag("--weighted", spatial_opts.weighted,
                      "1/distance edge weights");
    spatial->add_option("--altitude-limit", spatial_opts.altitude_limit,
                        "Altitude difference threshold in metres");
    spatial->add_option("--output", spatial_opts.output, "Edge list CSV")
        ->capture_default_str();
    TemporalGraphOpts temporal_opts;
    auto* temporal = graph->add_subcommand("temporal", "Lag-set chain graph");
    temporal->add_option("--rows", temporal_opts.rows, "Row count")
        ->capture_default_str();
    temporal->add_option("--lags", temporal_opts.lags, "Lag set, e.g. 1,2,3")
        ->delimiter(',')
        ->capture_default_str();
    temporal->add_option("--weights", temporal_opts.weights, "unit | inverse")
        ->check(CLI::IsMember({"unit", "inverse"}))
        ->capture_default_str();
    temporal->add_option("--output", temporal_opts.output, "Edge list CSV")
        ->capture_default_str();

    MaskOpts mask_opts;
    auto* mask = app.add_subcommand("mask", "Generate a synthetic gap mask");
    mask->add_option("--observations", mask_opts.observations, "Observations CSV")
        ->required();
    mask->add_option("--metadata", mask_opts.metadata, "Metadata CSV")->required();
    mask->add_option("--scenario", mask_opts.scenario, "block | spread")
        ->check(CLI::IsMember({"block", "spread"}))
        ->capture_default_str();
    mask->add_option("--fraction", mask_opts.fraction, "Held-out fraction")
        ->capture_default_str();
    mask->add_option("--seed", mask_opts.seed, "Mask seed")->capture_default_str();
    mask->add_option("--output", mask_opts.output, "Mask CSV")
        ->capture_default_str();

    CompleteOpts complete_opts;
    auto* complete = app.add_subcommand("complete", "Run one completion method");
    complete->add_option("--observations", complete_opts.observations,
                         "Observations CSV")
        ->required();
    complete->add_option("--metadata", complete_opts.metadata, "Metadata CSV")
        ->required();
    complete->add_option("--method", complete_opts.method,
                         "grals | softimpute | idw | pca | mean")
        ->check(CLI::IsMember({"grals", "softimpute", "idw", "pca", "mean"}))
        ->capture_default_str();
    complete->add_option("--mask", complete_opts.mask_path,
                         "Holdout mask CSV (enables RMSE scoring)");
    complete->add_option("--output-dir", complete_opts.output_dir,
                         "Output directory")
        ->envname("GRMC_OUTPUT_DIR")
        ->capture_default_str();
    complete->add_option("--seed", complete_opts.seed, "Solver seed")
        ->capture_default_str();
    complete->add_option("--rank", complete_opts.rank, "GRALS factor rank")
        ->capture_default_str();
    complete->add_option("--lambda-L", complete_opts.lambda_L, "Laplacian weight")
        ->capture_default_str();
    complete->add_option("--lambda-a", complete_opts.lambda_a,
                         "Frobenius weight on A")
        ->capture_default_str();
    complete->add_option("--lambda-b", complete_opts.lambda_b,
                         "Frobenius weight on B")
        ->capture_default_str();
    complete->add_option("--k", complete_opts.k, "Spatial nearest neighbours")
        ->capture_default_str();
    complete->add_flag("--weighted,!--unweighted", complete_opts.weighted,
                       "1/distance spatial edge weights")
        ->capture_default_str();
    complete->add_flag("--altitude-limit,!--no-altitude-limit",
                       complete_opts.altitude_limit,
                       "Drop station pairs over the altitude threshold")
        ->capture_default_str();
    complete->add_option("--altitude-threshold", complete_opts.altitude_threshold,
                         "Altitude threshold in metres")
        ->capture_default_str();
    complete->add_option("--lags", complete_opts.lags, "Temporal lag set")
        ->delimiter(',')
        ->capture_default_str();
    complete->add_option("--temporal-weights", complete_opts.temporal_weights,
                         "Temporal weight rule")
        ->check(CLI::IsMember({"unit", "inverse"}))
        ->capture_default_str();
    complete->add_option("--max-outer", complete_opts.max_outer,
                         "GRALS outer sweep cap")
        ->capture_default_str();
    complete->add_option("--cg-tol", complete_opts.cg_tol,
                         "GRALS inner CG relative residual")
        ->capture_default_str();
    complete->add_option("--cg-max-iter", complete_opts.cg_max_iter,
                         "GRALS inner CG iteration cap")
        ->capture_default_str();
    complete->add_option("--lambda", complete_opts.lambda,
                         "SoftImpute shrinkage threshold")
        ->capture_default_str();
    complete->add_option("--tol", complete_opts.tol,
                         "SoftImpute/PCA convergence tolerance")
        ->capture_default_str();
    complete->add_option("--max-iter", complete_opts.max_iter,
                         "SoftImpute/PCA iteration cap")
        ->capture_default_str();
    complete->add_option("--power", complete_opts.power, "IDW distance exponent")
        ->capture_default_str();
    complete->add_option("--pca-rank", complete_opts.pca_rank,
                         "PCA component count")
        ->capture_default_str();
    complete->set_config("--config", "",
                         "Read options from a manifest/config file");

    HarnessOpts tune_opts;
    auto* tune_cmd = app.add_subcommand(
        "tune", "Randomised hyperparameter search with Monte Carlo CV");
    add_harness_common(tune_cmd, tune_opts, /*with_hyper=*/false);
    tune_cmd->add_option("--samples", tune_opts.samples,
                         "Hyperparameter combinations to sample")
        ->capture_default_str();

    HarnessOpts bench_opts;
    auto* bench = app.add_subcommand(
        "benchmark", "Compare all completion methods on held-out folds");
    add_harness_common(bench, bench_opts, /*with_hyper=*/true);
    bench->add_option("--softimpute-lambda", bench_opts.softimpute_lambda,
                      "SoftImpute shrinkage threshold")
        ->capture_default_str();
    bench->add_option("--softimpute-tol", bench_opts.softimpute_tol,
                      "SoftImpute convergence tolerance")
        ->capture_default_str();
    bench->add_option("--softimpute-max-iter", bench_opts.softimpute_max_iter,
                      "SoftImpute iteration cap")
        ->capture_default_str();
    bench->add_option("--idw-power", bench_opts.idw_power, "IDW distance exponent")
        ->capture_default_str();
    bench->add_option("--pca-rank", bench_opts.pca_rank, "PCA component count")
        ->capture_default_str();
    bench->add_option("--pca-tol", bench_opts.pca_tol, "PCA tolerance")
        ->capture_default_str();
    bench->add_option("--pca-max-iter", bench_opts.pca_max_iter,
                      "PCA iteration cap")
        ->capture_default_str();

    HarnessOpts ablate_opts;
    auto* ablate =
        app.add_subcommand("ablate", "GRALS ablation cases on held-out folds");
    add_harness_common(ablate, ablate_opts, /*with_hyper=*/true);
    ablate->add_option("--case", ablate_opts.cases,
                       "Case id 1..6 (repeatable; default all)")
        ->check(CLI::Range(1, 6));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed()) return run_synth(synth_opts, synth);
        if (ingest->parsed()) return run_ingest_check(ingest_opts);
        if (graph->parsed()) {
            if (spatial->parsed()) return run_graph_spatial(spatial_opts);
            return run_graph_temporal(temporal_opts);
        }
        if (mask->parsed()) return run_mask(mask_opts);
        if (complete->parsed()) return run_complete(complete_opts, complete);
        if (tune_cmd->parsed()) return run_tune(tune_opts, tune_cmd);
        if (bench->parsed()) return run_benchmark(bench_opts, bench);
        if (ablate->parsed()) return run_ablate(ablate_opts, ablate);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInsufficientData;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolverFailure;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
