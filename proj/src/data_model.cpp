#include "grmc/data_model.hpp"

#include <cmath>
#include <unordered_set>

#include "grmc/errors.hpp"

namespace grmc {

void validate_metadata(const std::vector<StationMetadata>& meta) {
    std::unordered_set<std::string> seen;
    for (const auto& s : meta) {
        if (s.station_id.empty())
            throw ValidationError("station with empty id");
        if (s.latitude < -90.0 || s.latitude > 90.0)
            throw ValidationError("station " + s.station_id +
                                  ": latitude out of [-90, 90]");
        if (s.longitude < -180.0 || s.longitude > 180.0)
            throw ValidationError("station " + s.station_id +
                                  ": longitude out of [-180, 180]");
        if (!seen.insert(s.station_id).second)
            throw ValidationError("duplicate station id '" + s.station_id + "'");
    }
}

void ObservationMatrix::validate() const {
    const Eigen::Index m = values.rows(), n = values.cols();
    if (mask.rows() != m || mask.cols() != n)
        throw ValidationError("mask shape does not match values");
    if (static_cast<Eigen::Index>(row_index.size()) != m)
        throw ValidationError("row_index length does not match row count");
    if (static_cast<Eigen::Index>(col_index.size()) != n)
        throw ValidationError("col_index length does not match column count");
    for (std::size_t i = 1; i < row_index.size(); ++i) {
        if (row_index[i] - row_index[i - 1] != kStepSeconds)
            throw ValidationError("row_index is not a strict 10-minute grid at row " +
                                  std::to_string(i));
    }
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (mask(i, j) && !std::isfinite(values(i, j)))
                throw ValidationError("non-finite value at observed entry (" +
                                      std::to_string(i) + "," + std::to_string(j) +
                                      ")");
}

std::vector<WeekSlice> slice_weeks(const ObservationMatrix& matrix,
                                   bool gap_free_only) {
    std::vector<WeekSlice> out;
    const Eigen::Index m = matrix.rows(), n = matrix.cols();
    for (Eigen::Index start = 0; start + kWeekRows <= m; start += kWeekRows) {
        WeekSlice slice;
        slice.start = matrix.row_index[static_cast<std::size_t>(start)];
        slice.start_row = static_cast<int>(start);
        slice.matrix.values = matrix.values.middleRows(start, kWeekRows);
        slice.matrix.mask = matrix.mask.middleRows(start, kWeekRows);
        slice.matrix.row_index.assign(
            matrix.row_index.begin() + start,
            matrix.row_index.begin() + start + kWeekRows);
        slice.matrix.col_index = matrix.col_index;
        if (gap_free_only &&
            slice.matrix.observed_count() != static_cast<std::int64_t>(kWeekRows) * n)
            continue;
        out.push_back(std::move(slice));
    }
    return out;
}

}  // namespace grmc
