#include <doctest.h>

#include <cmath>

#include "otlpf/localisation.hpp"
#include "otlpf/mesh.hpp"
#include "otlpf/pou.hpp"
#include "otlpf/rng.hpp"

using otlpf::build_equal_partition;
using otlpf::build_pou;
using otlpf::effective_observations;
using otlpf::gaspari_cohn;
using otlpf::LocalisationSpec;
using otlpf::LocKind;
using otlpf::PartitionOfUnity;
using otlpf::patch_point_distance;
using otlpf::PeriodicMesh;
using otlpf::periodic_distance;
using otlpf::subsample_nodes;

TEST_CASE("periodic distance wraps and is symmetric") {
  CHECK(periodic_distance(0.1, 0.9) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(periodic_distance(0.25, 0.25) == 0.0);
  CHECK(periodic_distance(0.0, 0.5) == doctest::Approx(0.5));
  CHECK(periodic_distance(1.3, 0.1) == doctest::Approx(0.2).epsilon(1e-12));
  otlpf::RngStream stream(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = stream.next_unit_halfopen();
    const double b = stream.next_unit_halfopen();
    const double d = periodic_distance(a, b);
    CHECK(d == periodic_distance(b, a));
    CHECK(d >= 0.0);
    CHECK(d <= 0.5);
    if (a != b) CHECK(d > 0.0);
  }
}

TEST_CASE("gaspari_cohn boundary values and branch continuity") {
  CHECK(gaspari_cohn(0.0, 0.2) == 1.0);
  CHECK(gaspari_cohn(0.2, 0.2) == 0.0);
  CHECK(gaspari_cohn(0.5, 0.2) == 0.0);
  // both branches at d = r/2 evaluate to 5/24
  CHECK(gaspari_cohn(0.1, 0.2) == doctest::Approx(5.0 / 24.0).epsilon(1e-12));
  otlpf::RngStream stream(2);
  for (int i = 0; i < 100; ++i) {
    const double r = 0.01 + stream.next_unit_halfopen();
    const double mid = r / 2.0;
    const double below = gaspari_cohn(std::nextafter(mid, 0.0), r);
    const double above = gaspari_cohn(std::nextafter(mid, r), r);
    CHECK(std::abs(below - above) < 1e-12);
  }
  CHECK_THROWS_AS(gaspari_cohn(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("gaspari_cohn is monotone nonincreasing and in [0, 1]") {
  const double r = 0.37;
  double previous = 1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double d = 0.5 * i / 1000.0;
    const double value = gaspari_cohn(d, r);
    CHECK(value <= previous + 1e-15);
    CHECK(value >= 0.0);
    CHECK(value <= 1.0);
    previous = value;
  }
}

TEST_CASE("localisation kinds satisfy the taper conditions") {
  for (LocKind kind : {LocKind::GaspariCohn, LocKind::Uniform, LocKind::Triangular}) {
    const LocalisationSpec spec{0.1, kind};
    CHECK(loc_weight(spec, 0.0) == 1.0);
    CHECK(loc_weight(spec, 0.11) == 0.0);
    CHECK(loc_weight(spec, 0.05) >= 0.0);
    CHECK(loc_weight(spec, 0.05) <= 1.0);
  }
}

TEST_CASE("equal partition splits contiguously and validates divisibility") {
  const PeriodicMesh mesh8(8);
  const auto halves = build_equal_partition(mesh8, 2);
  REQUIRE(halves.size() == 2);
  CHECK(halves[0] == std::vector<int>{0, 1, 2, 3});
  CHECK(halves[1] == std::vector<int>{4, 5, 6, 7});

  const PeriodicMesh mesh512(512);
  const auto singletons = build_equal_partition(mesh512, 512);
  REQUIRE(singletons.size() == 512);
  for (int b = 0; b < 512; ++b) {
    REQUIRE(singletons[b].size() == 1);
    CHECK(singletons[b][0] == b);
  }

  CHECK_THROWS_AS(build_equal_partition(mesh8, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_equal_partition(mesh8, 16), std::invalid_argument);
}

TEST_CASE("hard partition of unity reduces to the indicator matrix") {
  const PeriodicMesh mesh(64);
  const auto core = build_equal_partition(mesh, 16);
  const PartitionOfUnity pou = build_pou(core, mesh, 1.0 / 64.0);
  for (int b = 0; b < 16; ++b) {
    for (int n = 0; n < 64; ++n) {
      const bool in_core = n / 4 == b;
      CHECK(pou.bump(b, n) == (in_core ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("partition of unity sums to one and stays in [0, 1]") {
  const PeriodicMesh mesh(512);
  for (int b_count : {2, 32, 128, 512}) {
    for (double w : {1.0 / 512, 1.0 / 256, 1.0 / 128, 1.0 / 64}) {
      const PartitionOfUnity pou =
          build_pou(build_equal_partition(mesh, b_count), mesh, w);
      const Eigen::VectorXd column_sums = pou.bump.colwise().sum().transpose();
      CHECK((column_sums.array() - 1.0).abs().maxCoeff() < 1e-12);
      CHECK(pou.bump.minCoeff() >= 0.0);
      CHECK(pou.bump.maxCoeff() <= 1.0 + 1e-15);
    }
  }
}

TEST_CASE("support size, covering count and the nodes-per-patch formula") {
  const PeriodicMesh mesh(512);
  const PartitionOfUnity pou =
      build_pou(build_equal_partition(mesh, 128), mesh, 1.0 / 128.0);
  // Formula value p_n = M(1/B + 2w) - 1 = 11; the measured support is one
  // node smaller because the kernel vanishes exactly at distance w.
  CHECK(otlpf::nodes_per_patch_estimate(512, 128, 1.0 / 128.0) == 11);
  for (int b = 0; b < pou.patch_count; ++b) {
    CHECK(pou.support[b].size() == 10);
  }
  for (int n = 0; n < 512; ++n) {
    CHECK(pou.covering[n].size() >= 1);
    CHECK(pou.covering[n].size() <= 3);
  }
}

TEST_CASE("patch to point distance") {
  const PeriodicMesh mesh(16);
  std::vector<int> patch{0, 1, 2, 3};  // positions [0, 0.25)
  CHECK(patch_point_distance(patch, mesh, 0.125) == 0.0);
  CHECK(patch_point_distance(patch, mesh, 0.5) ==
        doctest::Approx(0.5 - 3.0 / 16.0).epsilon(1e-15));
  std::vector<int> everything(16);
  for (int i = 0; i < 16; ++i) everything[i] = i;
  // node-sampled supports: zero exactly at mesh positions
  CHECK(patch_point_distance(everything, mesh, 11.0 / 16.0) == 0.0);
  CHECK(patch_point_distance(everything, mesh, 0.7) <= 0.5 / 16.0);
  CHECK_THROWS_AS(patch_point_distance(std::vector<int>{}, mesh, 0.1),
                  std::invalid_argument);
}

TEST_CASE("effective observations per patch") {
  const PeriodicMesh mesh(512);
  std::vector<double> obs_locations;
  for (int l = 1; l <= 64; ++l) obs_locations.push_back(((2 * l - 1) * 4 - 1) / 512.0);

  // Tiny radius: every patch of an aligned B = 64 partition contains exactly
  // one observation at distance zero.
  const PartitionOfUnity aligned =
      build_pou(build_equal_partition(mesh, 64), mesh, 1.0 / 512.0);
  const LocalisationSpec tiny{1e-6, LocKind::GaspariCohn};
  const auto n_tiny = effective_observations(aligned, obs_locations, tiny);
  for (double n : n_tiny) CHECK(n == doctest::Approx(1.0).epsilon(1e-12));

  // One whole-domain patch with a uniform taper counts every observation.
  const PartitionOfUnity whole = build_pou(build_equal_partition(mesh, 1), mesh, 1.0 / 512.0);
  const LocalisationSpec uniform{0.01, LocKind::Uniform};
  const auto n_whole = effective_observations(whole, obs_locations, uniform);
  REQUIRE(n_whole.size() == 1);
  CHECK(n_whole[0] == doctest::Approx(64.0));

  // Admissibility scan: the median rises with the radius and crosses 1.
  const PartitionOfUnity pou =
      build_pou(build_equal_partition(mesh, 128), mesh, 1.0 / 256.0);
  double previous = 0.0;
  for (double r : {0.004, 0.01, 0.02, 0.03}) {
    const LocalisationSpec loc{r, LocKind::GaspariCohn};
    const double median_n = otlpf::median(effective_observations(pou, obs_locations, loc));
    CHECK(median_n >= previous);
    previous = median_n;
  }
  CHECK(previous > 1.0);
}

TEST_CASE("subsampling rule") {
  // M=512, B=512, w=1/512: p_n = 2, stride 2, 256 nodes.
  CHECK(subsample_nodes(512, 512, 1.0 / 512.0).size() == 256);
  // M=512, B=32, w=1/64: p_n = 31, stride 4, 128 nodes.
  CHECK(otlpf::nodes_per_patch_estimate(512, 32, 1.0 / 64.0) == 31);
  CHECK(subsample_nodes(512, 32, 1.0 / 64.0).size() == 128);
  // The stride clamps at 1 when the formula value drops to 1 or below, in
  // which case every node is kept. Valid kernel widths keep p_n >= 2, so the
  // clamp is exercised with a zero width directly.
  CHECK(subsample_nodes(512, 512, 0.0).size() == 512);

  // every patch of the B=128, w=1/128 partition keeps at least one cost node
  const PeriodicMesh mesh(512);
  const PartitionOfUnity pou =
      build_pou(build_equal_partition(mesh, 128), mesh, 1.0 / 128.0);
  for (int b = 0; b < pou.patch_count; ++b) {
    CHECK(!pou.support_subsampled[b].empty());
  }
}

TEST_CASE("build_pou rejects invalid input") {
  const PeriodicMesh mesh(16);
  auto core = build_equal_partition(mesh, 4);
  CHECK_THROWS_AS(build_pou(core, mesh, 1.0 / 32.0), std::invalid_argument);
  core[1].clear();
  CHECK_THROWS_AS(build_pou(core, mesh, 1.0 / 16.0), std::invalid_argument);
  auto overlapping = build_equal_partition(mesh, 4);
  overlapping[1][0] = overlapping[0][0];
  CHECK_THROWS_AS(build_pou(overlapping, mesh, 1.0 / 16.0), std::invalid_argument);
}
