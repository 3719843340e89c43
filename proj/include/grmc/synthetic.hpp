#ifndef GRMC_SYNTHETIC_HPP
#define GRMC_SYNTHETIC_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "grmc/data_model.hpp"

namespace grmc {

/// Constants of the synthetic temperature model. The defaults are chosen so
/// that the generated network behaves like a dense mid-latitude station
/// network: smooth seasonal/diurnal structure, weather-system noise that is
/// correlated across nearby stations and persistent in time, a smaller
/// station-local smooth component, and white sensor noise.
struct SyntheticConfig {
    double lat_min = 49.5, lat_max = 51.5;
    double lon_min = 2.5, lon_max = 6.4;

    double seasonal_mean_c = 8.0;      // annual mean temperature
    double seasonal_amp_c = 9.0;       // annual swing amplitude
    double diurnal_base_amp_c = 3.0;   // day/night swing, varies by location
    double diurnal_amp_var_c = 1.5;
    double lapse_c_per_m = -0.0065;    // altitude lapse rate

    double field_sigma_c = 2.4;        // spatially correlated AR(1) component
    double field_ar = 0.995;           // per-step persistence (10 min)
    double field_range_km = 150.0;     // e-folding distance of correlation

    double station_sigma_c = 0.45;     // station-local AR(1) component
    double station_ar = 0.97;

    double sensor_sigma_c = 0.35;      // iid measurement noise
};

/// Generates a fully observed n_stations-by-(1009 * n_weeks) network starting
/// 2020-01-01T00:00:00Z. Deterministic under the seed. Station coordinates
/// are uniform in the bounding box; altitudes come from a fixed rough-terrain
/// function of (lat, lon).
///
/// Throws ValidationError when n_stations < 2 or n_weeks < 1.
std::pair<ObservationMatrix, std::vector<StationMetadata>> synthesize_network(
    int n_stations, int n_weeks, std::uint64_t seed,
    const SyntheticConfig& cfg = {});

/// The terrain function used for synthetic altitudes (metres, >= 0).
double synthetic_altitude(double lat, double lon, const SyntheticConfig& cfg = {});

}  // namespace grmc

#endif
