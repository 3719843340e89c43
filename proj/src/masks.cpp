#include "grmc/masks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "grmc/csv.hpp"
#include "grmc/errors.hpp"
#include "grmc/rng.hpp"
#include "grmc/timeutil.hpp"

namespace grmc {

MaskScenario::Kind parse_scenario_kind(const std::string& name) {
    if (name == "block" || name == "Block") return MaskScenario::Kind::Block;
    if (name == "spread" || name == "Spread") return MaskScenario::Kind::Spread;
    throw ValidationError("unknown scenario '" + name + "' (block | spread)");
}

std::string scenario_kind_name(MaskScenario::Kind kind) {
    return kind == MaskScenario::Kind::Block ? "block" : "spread";
}

HoldoutMask generate_mask(const ObservationMatrix& matrix,
                          const MaskScenario& scenario) {
    const int m = static_cast<int>(matrix.rows());
    const int n = static_cast<int>(matrix.cols());
    if (scenario.target_fraction <= 0.0 || scenario.target_fraction >= 1.0)
        throw ValidationError("target fraction must lie in (0, 1)");
    if (!matrix.fully_observed())
        throw ValidationError(
            "mask generation requires a fully observed (gap-free) matrix");

    int len_min, len_max;
    if (scenario.kind == MaskScenario::Kind::Block) {
        len_min = scenario.block_len_min;
        len_max = scenario.block_len_max;
    } else {
        len_min = scenario.gap_len_min;
        len_max = scenario.gap_len_max;
    }
    if (len_min < 1 || len_max < len_min)
        throw ValidationError("invalid run length range");
    if (len_min > m)
        throw ValidationError("minimum run length exceeds matrix rows");
    len_max = std::min(len_max, m);

    const auto target = static_cast<std::int64_t>(
        std::llround(scenario.target_fraction * static_cast<double>(m) *
                     static_cast<double>(n)));

    // Existing runs per station as (start, end) with end exclusive.
    std::vector<std::vector<std::pair<int, int>>> runs(
        static_cast<std::size_t>(n));
    HoldoutMask mask;

    Rng rng(mix_seed(scenario.seed, 0x6d61736bULL));
    constexpr int kMaxRetries = 10000;
    std::int64_t total = 0;
    int retries = 0;
    while (total < target) {
        const int station = static_cast<int>(rng.uniform_below(
            static_cast<std::uint64_t>(n)));
        int length = static_cast<int>(rng.uniform_int(len_min, len_max));
        const int start = static_cast<int>(rng.uniform_below(
            static_cast<std::uint64_t>(m - length + 1)));
        // Truncating the final run keeps block/spread cardinality identical.
        if (total + length > target) length = static_cast<int>(target - total);

        bool overlaps = false;
        for (const auto& [s, e] : runs[static_cast<std::size_t>(station)]) {
            if (start < e && s < start + length) {
                overlaps = true;
                break;
            }
        }
        if (overlaps) {
            if (++retries > kMaxRetries)
                throw ValidationError(
                    "mask generation gave up after " + std::to_string(kMaxRetries) +
                    " overlapping placements (fraction " +
                    format_double(scenario.target_fraction) + ", " +
                    scenario_kind_name(scenario.kind) + " scenario on " +
                    std::to_string(m) + "x" + std::to_string(n) + ")");
            continue;
        }
        runs[static_cast<std::size_t>(station)].emplace_back(start, start + length);
        mask.per_station_runs.push_back({station, start, length});
        total += length;
    }

    for (const auto& run : mask.per_station_runs)
        for (int i = run.start_row; i < run.start_row + run.length; ++i)
            mask.entries.emplace_back(i, run.station);
    std::sort(mask.entries.begin(), mask.entries.end());
    return mask;
}

std::pair<ObservationMatrix, std::vector<std::pair<int, int>>> apply_mask(
    const ObservationMatrix& matrix, const HoldoutMask& mask) {
    ObservationMatrix train = matrix;
    for (const auto& [i, j] : mask.entries) {
        if (i < 0 || i >= matrix.rows() || j < 0 || j >= matrix.cols() ||
            !matrix.mask(i, j))
            throw ValidationError("mask entry (" + std::to_string(i) + "," +
                                  std::to_string(j) +
                                  ") is not observed in the matrix");
        train.mask(i, j) = false;
        train.values(i, j) = std::numeric_limits<double>::quiet_NaN();
    }
    return {std::move(train), mask.entries};
}

void write_mask_csv(const std::string& path, const HoldoutMask& mask,
                    const ObservationMatrix& matrix) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    f << "station_id,start_timestamp,length_steps\n";
    for (const auto& run : mask.per_station_runs)
        f << matrix.col_index[static_cast<std::size_t>(run.station)] << ','
          << format_iso8601_utc(
                 matrix.row_index[static_cast<std::size_t>(run.start_row)])
          << ',' << run.length << '\n';
}

HoldoutMask read_mask_csv(const std::string& path,
                          const ObservationMatrix& matrix) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for reading");
    std::unordered_map<std::string, int> col_of;
    for (std::size_t j = 0; j < matrix.col_index.size(); ++j)
        col_of[matrix.col_index[j]] = static_cast<int>(j);

    std::string line;
    if (!std::getline(f, line) ||
        (line != "station_id,start_timestamp,length_steps" &&
         line != "station_id,start_timestamp,length_steps\r"))
        throw ValidationError(path + ": expected header "
                              "'station_id,start_timestamp,length_steps'");
    HoldoutMask mask;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string station, start_ts, len_str;
        if (!std::getline(ss, station, ',') || !std::getline(ss, start_ts, ',') ||
            !std::getline(ss, len_str))
            throw ValidationError(path + ": malformed line '" + line + "'");
        auto it = col_of.find(station);
        if (it == col_of.end())
            throw ValidationError("mask station '" + station +
                                  "' not present in the matrix");
        const std::int64_t t = parse_iso8601_utc(start_ts);
        const std::int64_t t0 = matrix.row_index.front();
        if (t < t0 || (t - t0) % kStepSeconds != 0)
            throw ValidationError("mask start '" + start_ts +
                                  "' is off the matrix grid");
        MaskRun run;
        run.station = it->second;
        run.start_row = static_cast<int>((t - t0) / kStepSeconds);
        run.length = std::stoi(len_str);
        if (run.length < 1 || run.start_row + run.length > matrix.rows())
            throw ValidationError("mask run at '" + start_ts +
                                  "' exceeds the matrix extent");
        mask.per_station_runs.push_back(run);
        for (int i = run.start_row; i < run.start_row + run.length; ++i)
            mask.entries.emplace_back(i, run.station);
    }
    std::sort(mask.entries.begin(), mask.entries.end());
    return mask;
}

}  // namespace grmc
