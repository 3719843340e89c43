#include "grmc/synthetic.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdio>

#include "grmc/errors.hpp"
#include "grmc/graphs.hpp"
#include "grmc/rng.hpp"

namespace grmc {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
constexpr std::int64_t kStartEpoch = 1577836800;  // 2020-01-01T00:00:00Z
}  // namespace

double synthetic_altitude(double lat, double lon, const SyntheticConfig& cfg) {
    // Flat north-west rising into rough hills toward the south-east.
    const double u = (cfg.lat_max - lat) / (cfg.lat_max - cfg.lat_min);
    const double v = (lon - cfg.lon_min) / (cfg.lon_max - cfg.lon_min);
    const double slope = 540.0 * u * u * (0.35 + 0.65 * v);
    const double ridges =
        90.0 * u * (1.0 + std::sin(9.0 * u + 4.0 * v) * std::cos(6.0 * v - 3.0 * u));
    return std::max(0.0, slope + ridges);
}

std::pair<ObservationMatrix, std::vector<StationMetadata>> synthesize_network(
    int n_stations, int n_weeks, std::uint64_t seed, const SyntheticConfig& cfg) {
    if (n_stations < 2)
        throw ValidationError("synthesize_network requires at least 2 stations");
    if (n_weeks < 1)
        throw ValidationError("synthesize_network requires at least 1 week");

    Rng rng(mix_seed(seed, 0x5eed));

    std::vector<StationMetadata> meta;
    meta.reserve(static_cast<std::size_t>(n_stations));
    for (int j = 0; j < n_stations; ++j) {
        StationMetadata s;
        char id[16];
        std::snprintf(id, sizeof(id), "S%03d", j + 1);
        s.station_id = id;
        s.latitude = rng.uniform(cfg.lat_min, cfg.lat_max);
        s.longitude = rng.uniform(cfg.lon_min, cfg.lon_max);
        s.altitude_m = synthetic_altitude(s.latitude, s.longitude, cfg);
        meta.push_back(std::move(s));
    }

    // Spatial covariance of the weather-field component, exponential decay
    // in great-circle distance, small nugget to keep the factor well posed.
    const int n = n_stations;
    Eigen::MatrixXd cov(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            cov(a, b) = std::exp(-haversine_distance(meta[static_cast<std::size_t>(a)],
                                                     meta[static_cast<std::size_t>(b)]) /
                                 cfg.field_range_km);
    cov.diagonal().array() += 1e-8;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw SolverError("spatial covariance factorisation failed");
    const Eigen::MatrixXd chol = llt.matrixL();

    const std::int64_t m = static_cast<std::int64_t>(kWeekRows) * n_weeks;
    ObservationMatrix mat;
    mat.values.resize(m, n);
    mat.mask = MaskArray::Constant(m, n, true);
    mat.row_index.resize(static_cast<std::size_t>(m));
    mat.col_index.reserve(meta.size());
    for (const auto& s : meta) mat.col_index.push_back(s.station_id);

    // Per-station diurnal amplitude and solar phase vary smoothly in space so
    // that nearby stations stay more alike than distant ones.
    Eigen::VectorXd diurnal_amp(n), solar_shift_h(n), base(n);
    for (int j = 0; j < n; ++j) {
        const auto& s = meta[static_cast<std::size_t>(j)];
        const double pattern =
            0.5 * (1.0 + std::sin(1.3 * s.longitude + 0.9 * s.latitude));
        diurnal_amp(j) = cfg.diurnal_base_amp_c + cfg.diurnal_amp_var_c * pattern;
        solar_shift_h(j) = (s.longitude - 0.5 * (cfg.lon_min + cfg.lon_max)) *
                           (24.0 / 360.0);
        base(j) = cfg.lapse_c_per_m * s.altitude_m;
    }

    Eigen::VectorXd field(n), station_noise(n), shock(n);
    for (int j = 0; j < n; ++j) shock(j) = rng.normal();
    field = cfg.field_sigma_c * (chol * shock);
    for (int j = 0; j < n; ++j)
        station_noise(j) = cfg.station_sigma_c * rng.normal();

    const double field_innov = std::sqrt(1.0 - cfg.field_ar * cfg.field_ar);
    const double station_innov =
        std::sqrt(1.0 - cfg.station_ar * cfg.station_ar);

    for (std::int64_t i = 0; i < m; ++i) {
        const std::int64_t t = kStartEpoch + i * kStepSeconds;
        mat.row_index[static_cast<std::size_t>(i)] = t;

        const double day_of_year =
            static_cast<double>(t - kStartEpoch) / 86400.0 + 1.0;
        const double seasonal =
            cfg.seasonal_mean_c +
            cfg.seasonal_amp_c * std::sin(kTwoPi * (day_of_year - 105.0) / 365.25);
        const double hour_of_day = static_cast<double>(t % 86400) / 3600.0;

        if (i > 0) {
            for (int j = 0; j < n; ++j) shock(j) = rng.normal();
            field = cfg.field_ar * field +
                    field_innov * cfg.field_sigma_c * (chol * shock);
            for (int j = 0; j < n; ++j)
                station_noise(j) = cfg.station_ar * station_noise(j) +
                                   station_innov * cfg.station_sigma_c * rng.normal();
        }

        for (int j = 0; j < n; ++j) {
            const double diurnal =
                diurnal_amp(j) *
                std::sin(kTwoPi * (hour_of_day + solar_shift_h(j) - 9.0) / 24.0);
            mat.values(i, j) = seasonal + diurnal + base(j) + field(j) +
                               station_noise(j) +
                               cfg.sensor_sigma_c * rng.normal();
        }
    }
    return {std::move(mat), std::move(meta)};
}

}  // namespace grmc
