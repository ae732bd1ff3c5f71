#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "otlpf/binary_io.hpp"

namespace otlpf {

namespace {
constexpr char kMagic[8] = {'O', 'T', 'L', 'P', 'F', 'B', 'I', 'N'};
}

void write_matrix_binary(const std::string& path, const Eigen::MatrixXd& matrix,
                         const BinaryHeader& header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_matrix_binary: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t fields[5] = {header.version, header.state_dim, header.num_times,
                                   header.num_obs, header.dtype};
  out.write(reinterpret_cast<const char*>(fields), sizeof(fields));
  // Row-major payload.
  std::vector<double> row(matrix.cols());
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) row[j] = matrix(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write_matrix_binary: write failed for " + path);
}

Eigen::MatrixXd read_matrix_binary(const std::string& path, int cols, BinaryHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_matrix_binary: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("read_matrix_binary: bad magic in " + path);
  }
  std::uint32_t fields[5];
  in.read(reinterpret_cast<char*>(fields), sizeof(fields));
  if (!in) throw std::runtime_error("read_matrix_binary: truncated header in " + path);
  if (fields[4] != 1) throw std::runtime_error("read_matrix_binary: unsupported dtype");
  if (header) {
    header->version = fields[0];
    header->state_dim = fields[1];
    header->num_times = fields[2];
    header->num_obs = fields[3];
    header->dtype = fields[4];
  }
  std::vector<double> payload;
  double value;
  while (in.read(reinterpret_cast<char*>(&value), sizeof(double))) payload.push_back(value);
  if (cols <= 0 || payload.size() % static_cast<std::size_t>(cols) != 0) {
    throw std::runtime_error("read_matrix_binary: payload not divisible by column count");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(payload.size()) / cols;
  Eigen::MatrixXd matrix(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) matrix(i, j) = payload[i * cols + j];
  }
  return matrix;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_matrix_csv: cannot open " + path);
  char buffer[64];
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", matrix(i, j));
      out << buffer;
      if (j + 1 < matrix.cols()) out << ',';
    }
    out << '\n';
  }
}

}  // namespace otlpf
