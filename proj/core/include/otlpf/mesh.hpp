#pragma once

#include <cmath>
#include <stdexcept>

namespace otlpf {

// Distance on the periodic unit interval: min(|a-b|, 1-|a-b|), range [0, 0.5].
// Inputs outside [0, 1) are wrapped modulo 1 rather than rejected.
inline double periodic_distance(double a, double b) {
  double d = std::abs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

// Regular mesh of M nodes on the periodic unit interval, s_m = m / M for
// m = 0..M-1 (zero-based node indexing throughout the library).
struct PeriodicMesh {
  int node_count = 0;

  explicit PeriodicMesh(int m) : node_count(m) {
    if (m < 1) throw std::invalid_argument("PeriodicMesh: node_count must be >= 1");
  }

  double spacing() const { return 1.0 / node_count; }
  double position(int m) const { return static_cast<double>(m) / node_count; }

  double node_distance(int a, int b) const {
    int d = a - b;
    d = d % node_count;
    if (d < 0) d += node_count;
    const int wrapped = std::min(d, node_count - d);
    return static_cast<double>(wrapped) / node_count;
  }
};

}  // namespace otlpf
