#pragma once

#include <stdexcept>

namespace otlpf {

enum class LocKind { GaspariCohn, Uniform, Triangular };

// Fifth-order piecewise rational Gaspari-Cohn taper. Satisfies l(0) = 1,
// l(d) = 0 for d >= r, continuous at d = r/2, values in [0, 1].
inline double gaspari_cohn(double d, double r) {
  if (r <= 0.0) throw std::invalid_argument("gaspari_cohn: radius must be > 0");
  if (d < 0.0) throw std::invalid_argument("gaspari_cohn: distance must be >= 0");
  const double u = d / r;
  if (u >= 1.0) return 0.0;
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double u4 = u2 * u2;
  const double u5 = u4 * u;
  if (u < 0.5) {
    return -8.0 * u5 + 8.0 * u4 + 5.0 * u3 - (20.0 / 3.0) * u2 + 1.0;
  }
  return (8.0 / 3.0) * u5 - 8.0 * u4 + 5.0 * u3 + (20.0 / 3.0) * u2 - 10.0 * u +
         4.0 - (1.0 / 3.0) / u;
}

struct LocalisationSpec {
  double radius = 0.03;
  LocKind kind = LocKind::GaspariCohn;
};

inline double loc_weight(const LocalisationSpec& spec, double d) {
  if (spec.radius <= 0.0) throw std::invalid_argument("loc_weight: radius must be > 0");
  switch (spec.kind) {
    case LocKind::GaspariCohn:
      return gaspari_cohn(d, spec.radius);
    case LocKind::Uniform:
      return d <= spec.radius ? 1.0 : 0.0;
    case LocKind::Triangular:
      return d <= spec.radius ? 1.0 - d / spec.radius : 0.0;
  }
  return 0.0;
}

}  // namespace otlpf
