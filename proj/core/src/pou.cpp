#include "otlpf/pou.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace otlpf {

std::vector<std::vector<int>> build_equal_partition(const PeriodicMesh& mesh,
                                                    int patch_count) {
  const int m = mesh.node_count;
  if (patch_count < 1 || patch_count > m || m % patch_count != 0) {
    throw std::invalid_argument(
        "build_equal_partition: patch count must divide the node count");
  }
  const int block = m / patch_count;
  std::vector<std::vector<int>> sets(patch_count);
  for (int b = 0; b < patch_count; ++b) {
    sets[b].reserve(block);
    for (int j = 0; j < block; ++j) sets[b].push_back(b * block + j);
  }
  return sets;
}

int nodes_per_patch_estimate(int node_count, int patch_count, double kernel_width) {
  const double p = node_count * (1.0 / patch_count + 2.0 * kernel_width) - 1.0;
  return static_cast<int>(std::lround(p));
}

std::vector<int> subsample_nodes(int node_count, int patch_count, double kernel_width) {
  const int p_n = nodes_per_patch_estimate(node_count, patch_count, kernel_width);
  const int k = std::max(1, std::min(4, p_n));
  std::vector<int> idx;
  idx.reserve(node_count / k + 1);
  for (int m = 0; m < node_count; m += k) idx.push_back(m);
  return idx;
}

PartitionOfUnity build_pou(const std::vector<std::vector<int>>& core_sets,
                           const PeriodicMesh& mesh, double kernel_width,
                           SubsampleMode subsample) {
  const int m = mesh.node_count;
  const int b_count = static_cast<int>(core_sets.size());
  if (b_count < 1) throw std::invalid_argument("build_pou: no core sets");
  for (const auto& s : core_sets) {
    if (s.empty()) throw std::invalid_argument("build_pou: empty core set");
  }
  if (kernel_width < 1.0 / m - 1e-15) {
    throw std::invalid_argument("build_pou: kernel width must be >= 1/M");
  }

  PartitionOfUnity pou;
  pou.patch_count = b_count;
  pou.node_count = m;
  pou.kernel_width = kernel_width;
  pou.core_sets = core_sets;
  pou.bump = Eigen::MatrixXd::Zero(b_count, m);

  // Patch label per node; also validates disjointness / coverage.
  std::vector<int> label(m, -1);
  for (int b = 0; b < b_count; ++b) {
    for (int node : core_sets[b]) {
      if (node < 0 || node >= m || label[node] != -1) {
        throw std::invalid_argument("build_pou: core sets must partition the nodes");
      }
      label[node] = b;
    }
  }
  for (int node = 0; node < m; ++node) {
    if (label[node] == -1) {
      throw std::invalid_argument("build_pou: core sets must cover all nodes");
    }
  }

  // Kernel values on node offsets; compact support keeps this short.
  const int reach = static_cast<int>(std::ceil(kernel_width * m));
  std::vector<double> kernel(reach + 1, 0.0);
  for (int d = 0; d <= reach; ++d) {
    kernel[d] = gaspari_cohn(static_cast<double>(d) / m, kernel_width);
  }

  // phi_b(s_n) = sum_{m' in S_b} kernel(d(n, m')) / sum_{m''} kernel(d(n, m'')).
  // The denominator is the same for every patch, so accumulate per-node sums
  // of kernel mass per patch label and normalise by the total.
  const bool compact = 2 * reach + 1 <= m;
  for (int n = 0; n < m; ++n) {
    double total = 0.0;
    if (compact) {
      for (int off = -reach; off <= reach; ++off) {
        const double k = kernel[std::abs(off)];
        if (k <= 0.0) continue;
        int src = (n + off) % m;
        if (src < 0) src += m;
        pou.bump(label[src], n) += k;
        total += k;
      }
    } else {
      for (int src = 0; src < m; ++src) {
        const double k = gaspari_cohn(mesh.node_distance(n, src), kernel_width);
        if (k <= 0.0) continue;
        pou.bump(label[src], n) += k;
        total += k;
      }
    }
    pou.bump.col(n) /= total;
  }

  pou.support.resize(b_count);
  for (int b = 0; b < b_count; ++b) {
    for (int n = 0; n < m; ++n) {
      if (pou.bump(b, n) > PartitionOfUnity::support_tol) pou.support[b].push_back(n);
    }
  }
  pou.covering.resize(m);
  for (int b = 0; b < b_count; ++b) {
    for (int n : pou.support[b]) pou.covering[n].push_back(b);
  }

  if (subsample == SubsampleMode::All) {
    pou.subsample.resize(m);
    for (int n = 0; n < m; ++n) pou.subsample[n] = n;
  } else {
    pou.subsample = subsample_nodes(m, b_count, kernel_width);
  }
  std::vector<char> in_subsample(m, 0);
  for (int n : pou.subsample) in_subsample[n] = 1;
  pou.support_subsampled.resize(b_count);
  for (int b = 0; b < b_count; ++b) {
    for (int n : pou.support[b]) {
      if (in_subsample[n]) pou.support_subsampled[b].push_back(n);
    }
  }
  return pou;
}

double patch_point_distance(std::span<const int> support_nodes, const PeriodicMesh& mesh,
                            double s) {
  if (support_nodes.empty()) {
    throw std::invalid_argument("patch_point_distance: empty support");
  }
  double best = 0.5;
  for (int node : support_nodes) {
    best = std::min(best, periodic_distance(mesh.position(node), s));
  }
  return best;
}

std::vector<double> effective_observations(const PartitionOfUnity& pou,
                                           std::span<const double> obs_locations,
                                           const LocalisationSpec& loc) {
  const PeriodicMesh mesh(pou.node_count);
  std::vector<double> n_eff(pou.patch_count, 0.0);
  for (int b = 0; b < pou.patch_count; ++b) {
    for (double s_obs : obs_locations) {
      const double d = patch_point_distance(pou.support[b], mesh, s_obs);
      n_eff[b] += loc_weight(loc, d);
    }
  }
  return n_eff;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace otlpf
