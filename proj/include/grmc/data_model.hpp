#ifndef GRMC_DATA_MODEL_HPP
#define GRMC_DATA_MODEL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "grmc/timeutil.hpp"

namespace grmc {

using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Geographic record for one station (one matrix column).
struct StationMetadata {
    std::string station_id;
    double latitude = 0.0;    // degrees, [-90, 90]
    double longitude = 0.0;   // degrees, [-180, 180]
    double altitude_m = 0.0;  // metres above sea level
};

/// Validates coordinate ranges and id uniqueness. Throws ValidationError.
void validate_metadata(const std::vector<StationMetadata>& meta);

/// Dense timestamps-by-stations temperature matrix with an observation mask.
///
/// Entries outside the mask are stored as NaN and must never be read by a
/// solver; the mask is the single source of truth for what is observed.
/// row_index holds Unix seconds (UTC) on a strict 10-minute grid.
struct ObservationMatrix {
    Eigen::MatrixXd values;               // m x n, NaN where unobserved
    MaskArray mask;                       // m x n
    std::vector<std::int64_t> row_index;  // strictly increasing, 600 s step
    std::vector<std::string> col_index;   // station ids, metadata order

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    std::int64_t observed_count() const { return mask.count(); }
    bool fully_observed() const { return mask.all(); }

    /// Checks shape consistency, the grid invariant and NaN/mask agreement.
    /// Throws ValidationError on violation.
    void validate() const;
};

/// One week of data: exactly kWeekRows rows sliced out of a longer matrix.
struct WeekSlice {
    std::int64_t start = 0;  // timestamp of the first row
    int start_row = 0;       // row offset in the source matrix
    ObservationMatrix matrix;
};

/// Cuts the matrix into consecutive non-overlapping kWeekRows-row slices,
/// dropping the trailing partial week. With gap_free_only, a slice is kept
/// only when every entry is observed. A matrix shorter than one week yields
/// an empty list.
std::vector<WeekSlice> slice_weeks(const ObservationMatrix& matrix,
                                   bool gap_free_only);

}  // namespace grmc

#endif
