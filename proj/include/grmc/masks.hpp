#ifndef GRMC_MASKS_HPP
#define GRMC_MASKS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grmc/data_model.hpp"

namespace grmc {

/// Synthetic gap pattern: Block removes 1-3 day runs, Spread removes
/// 10-minute to 2-hour runs. Both target the same total entry count.
struct MaskScenario {
    enum class Kind { Block, Spread };
    Kind kind = Kind::Block;
    double target_fraction = 0.1;
    int block_len_min = 144, block_len_max = 432;  // 1 to 3 days
    int gap_len_min = 1, gap_len_max = 12;         // 10 min to 2 h
    std::uint64_t seed = 0;
};

MaskScenario::Kind parse_scenario_kind(const std::string& name);
std::string scenario_kind_name(MaskScenario::Kind kind);

/// One contiguous synthetic outage on a single station.
struct MaskRun {
    int station = 0;
    int start_row = 0;
    int length = 0;
};

/// Entries held out of a matrix, grouped into per-station runs.
/// |entries| == round(target_fraction * m * n) exactly.
struct HoldoutMask {
    std::vector<std::pair<int, int>> entries;  // (row, col), sorted
    std::vector<MaskRun> per_station_runs;
};

/// Samples non-overlapping runs until the target count is reached; the final
/// run is truncated so the total is exact. Placement is rejection-sampled
/// uniformly (bounded retries). Requires a fully observed matrix.
/// Deterministic under the scenario seed.
HoldoutMask generate_mask(const ObservationMatrix& matrix,
                          const MaskScenario& scenario);

/// Splits the matrix into a training copy with the masked entries removed and
/// the holdout index set (true values stay in `matrix` for scoring).
/// Rejects masks that reference unobserved entries.
std::pair<ObservationMatrix, std::vector<std::pair<int, int>>> apply_mask(
    const ObservationMatrix& matrix, const HoldoutMask& mask);

/// Mask export/import: `station_id,start_timestamp,length_steps`.
void write_mask_csv(const std::string& path, const HoldoutMask& mask,
                    const ObservationMatrix& matrix);
HoldoutMask read_mask_csv(const std::string& path, const ObservationMatrix& matrix);

}  // namespace grmc

#endif
