#pragma once

#include <cstdint>
#include <vector>

#include "dro/core.hpp"

namespace dro::partition {

/// K-means fit. Labels always point at the nearest centroid (ties to the
/// lowest centroid index); the distortion trace records the assignment-step
/// objective per Lloyd iteration.
struct ClusterModel {
  core::SampleSet centroids;
  std::vector<int> labels;
  double distortion = 0.0;
  int iterations = 0;
  std::vector<double> distortion_trace;
};

/// Lloyd iteration with seeded kmeans++ initialization. Runs to an
/// assignment fixed point or 300 iterations. Empty clusters are reseeded at
/// the point currently farthest from its centroid.
ClusterModel kmeans(const core::SampleSet& points, int k, std::uint64_t seed);

/// Distortion-curve knee: the K in {2..k_max-1} maximizing the second
/// difference d(K-1) - 2 d(K) + d(K+1); ties break to the lowest K.
int elbow_select(const core::SampleSet& points, int k_max,
                 std::uint64_t seed);

/// Same rule applied to a precomputed distortion curve d(1..k_max).
int elbow_from_distortions(const std::vector<double>& distortions);

/// Axis-aligned split tree; a single-leaf tree has one node.
struct RegionTree {
  std::vector<core::SplitNode> nodes;

  int leaves() const;
};

/// Greedy best-first growth on Gini impurity decrease. Thresholds sit at
/// midpoints between adjacent distinct coordinate values; growth stops at
/// max_leaves or when no split reduces impurity. Single-class inputs give a
/// single leaf.
RegionTree fit_axis_tree(const core::SampleSet& points,
                         const std::vector<int>& labels, int max_leaves);

/// Clips each leaf cell to the support box. Region indices follow in-order
/// (left-to-right) leaf order.
core::PartitionScheme regions(const RegionTree& tree,
                              const core::Box& support);

/// One region covering the whole support.
core::PartitionScheme single_region(const core::Box& support);

/// Split samples across regions: counts, uniform atoms, empty-region
/// bookkeeping, and weights effective_count / (N + #empty).
core::NominalDistribution build_nominal(const core::SampleSet& samples,
                                        const core::PartitionScheme& scheme);

}  // namespace dro::partition
