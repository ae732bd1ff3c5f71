#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "otlpf/localisation.hpp"
#include "otlpf/mesh.hpp"

namespace otlpf {

// Partition of unity over the mesh nodes: B bump functions, each supported on
// a contiguous (periodic) run of nodes, summing to one at every node. Built by
// discretely convolving a normalised Gaspari-Cohn kernel of width w with the
// indicators of the core partition sets. w = 1/M reproduces the indicators
// exactly (hard partition).
struct PartitionOfUnity {
  int patch_count = 0;
  int node_count = 0;
  double kernel_width = 0.0;

  Eigen::MatrixXd bump;                        // B x M
  std::vector<std::vector<int>> core_sets;     // disjoint, union = all nodes
  std::vector<std::vector<int>> support;       // nodes with bump > support_tol
  std::vector<std::vector<int>> covering;      // per node: patches covering it
  std::vector<int> subsample;                  // cost-evaluation node subset
  std::vector<std::vector<int>> support_subsampled;  // support intersect subsample

  // Bump values below this threshold count as numerically zero tails and are
  // excluded from the support sets.
  static constexpr double support_tol = 1e-14;
};

// Splits the mesh into B contiguous equal-size blocks. Requires B to divide M.
std::vector<std::vector<int>> build_equal_partition(const PeriodicMesh& mesh, int patch_count);

enum class SubsampleMode { Auto, All };

// Paper-convention estimate of nodes per patch support used by the subsampling
// rule: p_n = M*(1/B + 2w) - 1. Overestimates the measured support size by one
// node for hard partitions.
int nodes_per_patch_estimate(int node_count, int patch_count, double kernel_width);

// Every k-th node with k = min(4, p_n); k clamps to 1 when p_n = 1.
std::vector<int> subsample_nodes(int node_count, int patch_count, double kernel_width);

PartitionOfUnity build_pou(const std::vector<std::vector<int>>& core_sets,
                           const PeriodicMesh& mesh, double kernel_width,
                           SubsampleMode subsample = SubsampleMode::Auto);

// inf over support nodes of the periodic distance to s.
double patch_point_distance(std::span<const int> support_nodes, const PeriodicMesh& mesh,
                            double s);

// Effective number of observations per patch:
// n_b = sum_l l_r(dist(support_b, obs location l)).
std::vector<double> effective_observations(const PartitionOfUnity& pou,
                                           std::span<const double> obs_locations,
                                           const LocalisationSpec& loc);

double median(std::vector<double> values);

}  // namespace otlpf
