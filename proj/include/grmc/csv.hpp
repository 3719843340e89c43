#ifndef GRMC_CSV_HPP
#define GRMC_CSV_HPP

#include <string>
#include <utility>
#include <vector>

#include "grmc/data_model.hpp"

namespace grmc {

/// Shortest decimal string that round-trips the double exactly.
std::string format_double(double v);

/// Reads `station_id,latitude,longitude,altitude_m` and validates it.
std::vector<StationMetadata> read_metadata_csv(const std::string& path);

void write_metadata_csv(const std::string& path,
                        const std::vector<StationMetadata>& meta);

/// Ingests long-format observations (`timestamp,station_id,temperature_c`)
/// against a metadata table. Columns follow metadata order; timestamps are
/// gap-filled to a regular 10-minute grid between the first and last reading.
///
/// Rejects duplicate (timestamp, station) pairs, stations missing from the
/// metadata, timestamps that run backwards, and readings off the grid.
std::pair<ObservationMatrix, std::vector<StationMetadata>> ingest_observations(
    const std::string& obs_csv, const std::string& meta_csv);

/// Writes observed entries in ingestion format, row-major order.
void write_observations_csv(const std::string& path, const ObservationMatrix& m);

/// Writes a completed matrix with a `source` column (observed | imputed).
/// Entries left NaN by the solver (uncompletable) are skipped.
void write_completion_csv(const std::string& path, const ObservationMatrix& input,
                          const Eigen::MatrixXd& completed);

/// Writes `iter,objective`.
void write_trace_csv(const std::string& path, const std::vector<double>& trace);

}  // namespace grmc

#endif
