#include "grmc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "grmc/errors.hpp"
#include "grmc/timeutil.hpp"

namespace grmc {
namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    double v;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw ValidationError("cannot parse " + what + " from '" + s + "'");
    return v;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for reading");
    return f;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    return f;
}

// Reads one line, tolerating trailing \r from CRLF files.
bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::vector<StationMetadata> read_metadata_csv(const std::string& path) {
    auto f = open_in(path);
    std::string line;
    if (!next_line(f, line) || line != "station_id,latitude,longitude,altitude_m")
        throw ValidationError(path + ": expected header "
                              "'station_id,latitude,longitude,altitude_m'");
    std::vector<StationMetadata> meta;
    while (next_line(f, line)) {
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != 4)
            throw ValidationError(path + ": expected 4 fields, got '" + line + "'");
        StationMetadata s;
        s.station_id = fields[0];
        s.latitude = parse_double(fields[1], "latitude");
        s.longitude = parse_double(fields[2], "longitude");
        s.altitude_m = parse_double(fields[3], "altitude");
        meta.push_back(std::move(s));
    }
    validate_metadata(meta);
    return meta;
}

void write_metadata_csv(const std::string& path,
                        const std::vector<StationMetadata>& meta) {
    auto f = open_out(path);
    f << "station_id,latitude,longitude,altitude_m\n";
    for (const auto& s : meta)
        f << s.station_id << ',' << format_double(s.latitude) << ','
          << format_double(s.longitude) << ',' << format_double(s.altitude_m)
          << '\n';
}

std::pair<ObservationMatrix, std::vector<StationMetadata>> ingest_observations(
    const std::string& obs_csv, const std::string& meta_csv) {
    auto meta = read_metadata_csv(meta_csv);
    std::unordered_map<std::string, int> col_of;
    for (std::size_t j = 0; j < meta.size(); ++j)
        col_of[meta[j].station_id] = static_cast<int>(j);

    auto f = open_in(obs_csv);
    std::string line;
    if (!next_line(f, line) || line != "timestamp,station_id,temperature_c")
        throw ValidationError(obs_csv + ": expected header "
                              "'timestamp,station_id,temperature_c'");

    struct Reading {
        std::int64_t t;
        int col;
        double value;
    };
    std::vector<Reading> readings;
    std::int64_t prev_t = std::numeric_limits<std::int64_t>::min();
    while (next_line(f, line)) {
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != 3)
            throw ValidationError(obs_csv + ": expected 3 fields, got '" + line + "'");
        Reading r;
        r.t = parse_iso8601_utc(fields[0]);
        auto it = col_of.find(fields[1]);
        if (it == col_of.end())
            throw ValidationError("station '" + fields[1] +
                                  "' in observations is absent from metadata");
        r.col = it->second;
        r.value = parse_double(fields[2], "temperature");
        if (r.t < prev_t)
            throw ValidationError("non-monotone timestamps at '" + fields[0] + "'");
        prev_t = r.t;
        readings.push_back(r);
    }
    if (readings.empty())
        throw ValidationError(obs_csv + ": no observations");

    const std::int64_t t0 = readings.front().t;
    const std::int64_t t1 = readings.back().t;
    const std::int64_t m64 = (t1 - t0) / kStepSeconds + 1;
    const int n = static_cast<int>(meta.size());

    ObservationMatrix mat;
    mat.values = Eigen::MatrixXd::Constant(m64, n,
                                           std::numeric_limits<double>::quiet_NaN());
    mat.mask = MaskArray::Constant(m64, n, false);
    mat.row_index.resize(static_cast<std::size_t>(m64));
    for (std::int64_t i = 0; i < m64; ++i)
        mat.row_index[static_cast<std::size_t>(i)] = t0 + i * kStepSeconds;
    mat.col_index.reserve(meta.size());
    for (const auto& s : meta) mat.col_index.push_back(s.station_id);

    for (const auto& r : readings) {
        if ((r.t - t0) % kStepSeconds != 0)
            throw ValidationError("timestamp " + format_iso8601_utc(r.t) +
                                  " is off the 10-minute grid");
        const auto i = static_cast<Eigen::Index>((r.t - t0) / kStepSeconds);
        if (mat.mask(i, r.col))
            throw ValidationError("duplicate observation for (" +
                                  format_iso8601_utc(r.t) + ", " +
                                  meta[static_cast<std::size_t>(r.col)].station_id +
                                  ")");
        mat.mask(i, r.col) = true;
        mat.values(i, r.col) = r.value;
    }
    mat.validate();
    return {std::move(mat), std::move(meta)};
}

void write_observations_csv(const std::string& path, const ObservationMatrix& m) {
    auto f = open_out(path);
    f << "timestamp,station_id,temperature_c\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const std::string ts = format_iso8601_utc(m.row_index[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (!m.mask(i, j)) continue;
            f << ts << ',' << m.col_index[static_cast<std::size_t>(j)] << ','
              << format_double(m.values(i, j)) << '\n';
        }
    }
}

void write_completion_csv(const std::string& path, const ObservationMatrix& input,
                          const Eigen::MatrixXd& completed) {
    if (completed.rows() != input.rows() || completed.cols() != input.cols())
        throw ValidationError("completed matrix shape does not match input");
    auto f = open_out(path);
    f << "timestamp,station_id,temperature_c,source\n";
    for (Eigen::Index i = 0; i < input.rows(); ++i) {
        const std::string ts =
            format_iso8601_utc(input.row_index[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < input.cols(); ++j) {
            const bool observed = input.mask(i, j);
            const double v = observed ? input.values(i, j) : completed(i, j);
            if (!std::isfinite(v)) continue;  // uncompletable entry
            f << ts << ',' << input.col_index[static_cast<std::size_t>(j)] << ','
              << format_double(v) << ',' << (observed ? "observed" : "imputed")
              << '\n';
        }
    }
}

void write_trace_csv(const std::string& path, const std::vector<double>& trace) {
    auto f = open_out(path);
    f << "iter,objective\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        f << i << ',' << format_double(trace[i]) << '\n';
}

}  // namespace grmc
