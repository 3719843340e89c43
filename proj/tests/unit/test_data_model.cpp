#include <doctest.h>

#include <cmath>
#include <fstream>

#include "grmc/csv.hpp"
#include "grmc/errors.hpp"
#include "grmc/graphs.hpp"
#include "grmc/synthetic.hpp"
#include "helpers.hpp"

using namespace grmc;
using test::TempDir;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    f << content;
}

const char* kMetaCsv =
    "station_id,latitude,longitude,altitude_m\n"
    "A,50.0,4.0,10\n"
    "B,50.5,4.5,20\n"
    "C,51.0,5.0,30\n";

std::string full_obs_csv() {
    std::string s = "timestamp,station_id,temperature_c\n";
    const char* stations[] = {"A", "B", "C"};
    for (int i = 0; i < 6; ++i) {
        const std::string ts = format_iso8601_utc(1577836800 + i * kStepSeconds);
        for (const char* st : stations)
            s += ts + "," + st + "," + std::to_string(10 + i) + ".5\n";
    }
    return s;
}

// Plain sample autocorrelation at a given lag.
double autocorrelation(const Eigen::VectorXd& x, int lag) {
    const double mean = x.mean();
    double num = 0.0, den = 0.0;
    for (Eigen::Index t = 0; t < x.size(); ++t) {
        den += (x(t) - mean) * (x(t) - mean);
        if (t + lag < x.size()) num += (x(t) - mean) * (x(t + lag) - mean);
    }
    return num / den;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double ma = a.mean(), mb = b.mean();
    double num = 0.0, da = 0.0, db = 0.0;
    for (Eigen::Index t = 0; t < a.size(); ++t) {
        num += (a(t) - ma) * (b(t) - mb);
        da += (a(t) - ma) * (a(t) - ma);
        db += (b(t) - mb) * (b(t) - mb);
    }
    return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("ingest: fully observed 3x6 CSV") {
    TempDir dir;
    write_file(dir.file("meta.csv"), kMetaCsv);
    write_file(dir.file("obs.csv"), full_obs_csv());
    auto [mat, meta] = ingest_observations(dir.file("obs.csv"), dir.file("meta.csv"));
    CHECK(mat.rows() == 6);
    CHECK(mat.cols() == 3);
    CHECK(mat.observed_count() == 18);
    CHECK(meta.size() == 3);
    CHECK(mat.col_index[0] == "A");  // metadata order
    CHECK(mat.values(2, 1) == doctest::Approx(12.5));
}

TEST_CASE("ingest: one deleted row leaves a hole") {
    TempDir dir;
    write_file(dir.file("meta.csv"), kMetaCsv);
    std::string obs = full_obs_csv();
    const std::string victim =
        format_iso8601_utc(1577836800 + 3 * kStepSeconds) + ",B,13.5\n";
    const auto pos = obs.find(victim);
    REQUIRE(pos != std::string::npos);
    obs.erase(pos, victim.size());
    write_file(dir.file("obs.csv"), obs);
    auto [mat, meta] = ingest_observations(dir.file("obs.csv"), dir.file("meta.csv"));
    CHECK(mat.observed_count() == 17);
    CHECK_FALSE(mat.mask(3, 1));
    CHECK(std::isnan(mat.values(3, 1)));
}

TEST_CASE("ingest: rejections") {
    TempDir dir;
    write_file(dir.file("meta.csv"), kMetaCsv);

    SUBCASE("duplicate pair is named") {
        std::string obs = full_obs_csv();
        obs += format_iso8601_utc(1577836800) + ",A,99\n";
        // re-sort not needed: duplicate is at the end -> also non-monotone;
        // use an in-place duplicate instead
        obs = "timestamp,station_id,temperature_c\n";
        obs += format_iso8601_utc(1577836800) + ",A,1\n";
        obs += format_iso8601_utc(1577836800) + ",A,2\n";
        write_file(dir.file("obs.csv"), obs);
        CHECK_THROWS_WITH_AS(
            ingest_observations(dir.file("obs.csv"), dir.file("meta.csv")),
            doctest::Contains("duplicate observation for (2020-01-01T00:00:00Z, A)"),
            ValidationError);
    }
    SUBCASE("unknown station") {
        std::string obs = "timestamp,station_id,temperature_c\n";
        obs += format_iso8601_utc(1577836800) + ",Z,1\n";
        write_file(dir.file("obs.csv"), obs);
        CHECK_THROWS_AS(
            ingest_observations(dir.file("obs.csv"), dir.file("meta.csv")),
            ValidationError);
    }
    SUBCASE("non-monotone timestamps") {
        std::string obs = "timestamp,station_id,temperature_c\n";
        obs += format_iso8601_utc(1577837400) + ",A,1\n";
        obs += format_iso8601_utc(1577836800) + ",B,2\n";
        write_file(dir.file("obs.csv"), obs);
        CHECK_THROWS_WITH_AS(
            ingest_observations(dir.file("obs.csv"), dir.file("meta.csv")),
            doctest::Contains("non-monotone"), ValidationError);
    }
    SUBCASE("off-grid timestamp") {
        std::string obs = "timestamp,station_id,temperature_c\n";
        obs += format_iso8601_utc(1577836800) + ",A,1\n";
        obs += format_iso8601_utc(1577836800 + 123) + ",B,2\n";
        write_file(dir.file("obs.csv"), obs);
        CHECK_THROWS_WITH_AS(
            ingest_observations(dir.file("obs.csv"), dir.file("meta.csv")),
            doctest::Contains("off the 10-minute grid"), ValidationError);
    }
}

TEST_CASE("ingest: a gap-filled grid row has an empty mask row") {
    TempDir dir;
    write_file(dir.file("meta.csv"), kMetaCsv);
    std::string obs = "timestamp,station_id,temperature_c\n";
    obs += format_iso8601_utc(1577836800) + ",A,1\n";
    obs += format_iso8601_utc(1577836800 + 2 * kStepSeconds) + ",A,2\n";
    write_file(dir.file("obs.csv"), obs);
    auto [mat, meta] = ingest_observations(dir.file("obs.csv"), dir.file("meta.csv"));
    CHECK(mat.rows() == 3);
    CHECK(mat.mask.row(1).count() == 0);
}

TEST_CASE("ingest of a full synthetic week has the 1009x50 shape") {
    auto [mat, meta] = synthesize_network(50, 1, 7);
    TempDir dir;
    write_metadata_csv(dir.file("meta.csv"), meta);
    write_observations_csv(dir.file("obs.csv"), mat);
    auto [again, meta2] = ingest_observations(dir.file("obs.csv"), dir.file("meta.csv"));
    CHECK(again.rows() == 1009);
    CHECK(again.cols() == 50);
    CHECK(again.fully_observed());
}

TEST_CASE("csv round-trip preserves values, mask and ordering exactly") {
    auto [mat, meta] = synthesize_network(4, 1, 3);
    test::hide_entry(mat, 100, 1);
    test::hide_entry(mat, 500, 3);
    TempDir dir;
    write_metadata_csv(dir.file("meta.csv"), meta);
    write_observations_csv(dir.file("obs.csv"), mat);
    auto [again, meta2] = ingest_observations(dir.file("obs.csv"), dir.file("meta.csv"));

    REQUIRE(again.rows() == mat.rows());
    REQUIRE(again.cols() == mat.cols());
    CHECK(again.row_index == mat.row_index);
    CHECK(again.col_index == mat.col_index);
    CHECK((again.mask == mat.mask).all());
    for (Eigen::Index i = 0; i < mat.rows(); ++i)
        for (Eigen::Index j = 0; j < mat.cols(); ++j)
            if (mat.mask(i, j)) CHECK(again.values(i, j) == mat.values(i, j));
    for (std::size_t j = 0; j < meta.size(); ++j) {
        CHECK(meta2[j].station_id == meta[j].station_id);
        CHECK(meta2[j].latitude == meta[j].latitude);
        CHECK(meta2[j].longitude == meta[j].longitude);
        CHECK(meta2[j].altitude_m == meta[j].altitude_m);
    }
}

TEST_CASE("slice_weeks") {
    Eigen::MatrixXd values = Eigen::MatrixXd::Constant(3 * kWeekRows + 17, 2, 5.0);
    ObservationMatrix mat = test::make_matrix(values);

    SUBCASE("three full weeks") {
        auto slices = slice_weeks(mat, true);
        REQUIRE(slices.size() == 3);
        for (std::size_t w = 0; w < slices.size(); ++w) {
            CHECK(slices[w].matrix.rows() == kWeekRows);
            CHECK(slices[w].start_row == static_cast<int>(w) * kWeekRows);
            CHECK(slices[w].start ==
                  mat.row_index[static_cast<std::size_t>(w) * kWeekRows]);
        }
    }
    SUBCASE("hole in week 2 drops it when gap_free_only") {
        test::hide_entry(mat, kWeekRows + 40, 1);
        CHECK(slice_weeks(mat, true).size() == 2);
        CHECK(slice_weeks(mat, false).size() == 3);
    }
    SUBCASE("shorter than a week yields the empty list") {
        ObservationMatrix tiny =
            test::make_matrix(Eigen::MatrixXd::Constant(kWeekRows - 1, 2, 1.0));
        CHECK(slice_weeks(tiny, false).empty());
    }
}

TEST_CASE("metadata validation") {
    std::vector<StationMetadata> meta = {{"A", 50, 4, 10}, {"B", 51, 5, 20}};
    CHECK_NOTHROW(validate_metadata(meta));
    meta[1].latitude = 95.0;
    CHECK_THROWS_AS(validate_metadata(meta), ValidationError);
    meta[1] = {"A", 50, 4, 10};
    CHECK_THROWS_WITH_AS(validate_metadata(meta), doctest::Contains("duplicate"),
                         ValidationError);
}

TEST_CASE("synthesize_network determinism and validation") {
    auto [a, meta_a] = synthesize_network(6, 1, 7);
    auto [b, meta_b] = synthesize_network(6, 1, 7);
    CHECK(a.values == b.values);  // bitwise
    for (std::size_t j = 0; j < meta_a.size(); ++j) {
        CHECK(meta_a[j].latitude == meta_b[j].latitude);
        CHECK(meta_a[j].longitude == meta_b[j].longitude);
    }
    auto [c, meta_c] = synthesize_network(6, 1, 8);
    CHECK(a.values != c.values);

    CHECK_THROWS_AS(synthesize_network(1, 1, 0), ValidationError);
    CHECK_THROWS_AS(synthesize_network(5, 0, 0), ValidationError);
}

TEST_CASE("synthetic series have a diurnal autocorrelation peak at lag 144") {
    auto [mat, meta] = synthesize_network(5, 2, 42);
    for (int j = 0; j < 5; ++j) {
        const Eigen::VectorXd x = mat.values.col(j);
        const double at_day = autocorrelation(x, 144);
        const double at_half_day = autocorrelation(x, 72);
        CHECK(at_day > at_half_day + 0.1);  // peak vs trough of the cycle
        CHECK(at_day > 0.1);
    }
}

TEST_CASE("synthetic nearby stations correlate more than the farthest pair") {
    auto [mat, meta] = synthesize_network(50, 2, 7);
    int near_i = -1, near_j = -1, far_i = 0, far_j = 1;
    double far_d = -1.0;
    for (int i = 0; i < 50; ++i)
        for (int j = i + 1; j < 50; ++j) {
            const double d = haversine_distance(meta[i], meta[j]);
            if (d < 10.0 && near_i < 0) {
                near_i = i;
                near_j = j;
            }
            if (d > far_d) {
                far_d = d;
                far_i = i;
                far_j = j;
            }
        }
    REQUIRE(near_i >= 0);  // 50 stations in the box make a <10 km pair certain
    const double corr_near =
        pearson(mat.values.col(near_i), mat.values.col(near_j));
    const double corr_far = pearson(mat.values.col(far_i), mat.values.col(far_j));
    CHECK(corr_near > corr_far);
}

TEST_CASE("synthetic temperatures stay in a physically sane band") {
    for (std::uint64_t seed : {1ULL, 7ULL, 99ULL}) {
        auto [mat, meta] = synthesize_network(20, 2, seed);
        CHECK(mat.values.minCoeff() > -30.0);
        CHECK(mat.values.maxCoeff() < 45.0);
    }
}
