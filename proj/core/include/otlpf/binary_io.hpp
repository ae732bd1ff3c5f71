#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

namespace otlpf {

// Little-endian binary dump format shared by trajectory, observation and
// ensemble files: 8-byte magic "OTLPFBIN", then five u32 fields (version,
// M, T, L, dtype with 1 = f64), then the row-major payload. The stored
// matrix's column count is M for state-like files and L for observation
// files; ensemble dumps store stacked P x M blocks with L carrying P.
struct BinaryHeader {
  std::uint32_t version = 1;
  std::uint32_t state_dim = 0;  // M
  std::uint32_t num_times = 0;  // T
  std::uint32_t num_obs = 0;    // L
  std::uint32_t dtype = 1;      // f64 little-endian
};

void write_matrix_binary(const std::string& path, const Eigen::MatrixXd& matrix,
                         const BinaryHeader& header);

// cols must match the stored row length; the row count is inferred from the
// payload size.
Eigen::MatrixXd read_matrix_binary(const std::string& path, int cols,
                                   BinaryHeader* header = nullptr);

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix);

}  // namespace otlpf
