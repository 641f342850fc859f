#pragma once

#include "common.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <unistd.h>
#include <string>
#include <vector>

namespace testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(DCV_TEST_DATA_DIR) / name;
}

// Printed growth rates of the positive-case proxy, 2020-03 .. 2021-02.
inline const std::vector<double> kTableVP{9.4175, 1.493, -0.199, 0.147, 0.826, -0.265,
                                          -0.200, 0.461,  0.861, 0.346, -0.033, -0.945};

/// v aligned to `rows` months with the outbreak at row t0 + 1.
inline std::vector<double> aligned_v(std::size_t rows, std::size_t t0, const std::vector<double>& path) {
  std::vector<double> v(rows, 0.0);
  for (std::size_t i = 0; i < path.size() && t0 + 1 + i < rows; ++i) v[t0 + 1 + i] = path[i];
  return v;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("dcv_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace testing
