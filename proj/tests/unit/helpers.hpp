#ifndef GRMC_TEST_HELPERS_HPP
#define GRMC_TEST_HELPERS_HPP

#include <filesystem>
#include <random>
#include <string>

#include "grmc/data_model.hpp"

namespace grmc::test {

/// Fully observed matrix on the standard grid starting 2020-01-01T00:00:00Z.
inline ObservationMatrix make_matrix(const Eigen::MatrixXd& values,
                                     std::int64_t start = 1577836800) {
    ObservationMatrix m;
    m.values = values;
    m.mask = MaskArray::Constant(values.rows(), values.cols(), true);
    m.row_index.resize(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        m.row_index[static_cast<std::size_t>(i)] = start + i * kStepSeconds;
    for (Eigen::Index j = 0; j < values.cols(); ++j)
        m.col_index.push_back("S" + std::to_string(j + 1));
    return m;
}

inline void hide_entry(ObservationMatrix& m, Eigen::Index i, Eigen::Index j) {
    m.mask(i, j) = false;
    m.values(i, j) = std::numeric_limits<double>::quiet_NaN();
}

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::mt19937_64 gen(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() /
                ("grmc_test_" + std::to_string(gen()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const {
        return (path_ / name).string();
    }

private:
    std::filesystem::path path_;
};

}  // namespace grmc::test

#endif
