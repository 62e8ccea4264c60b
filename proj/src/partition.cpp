#include "dro/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dro/rng.hpp"

namespace dro::partition {

using core::Box;
using core::NominalDistribution;
using core::PartitionScheme;
using core::SampleSet;
using core::SplitNode;
using core::Vector;

namespace {

double dist2(const Vector& a, const Vector& b) {
  return (a - b).squaredNorm();
}

}  // namespace

ClusterModel kmeans(const SampleSet& points, int k, std::uint64_t seed) {
  const int n = static_cast<int>(points.size());
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (n < k)
    throw std::invalid_argument("kmeans: fewer points than clusters");

  rng::Stream stream(rng::substream(seed, {0x6b6d65616e73ULL}));
  ClusterModel model;
  model.centroids.reserve(k);

  // kmeans++ seeding
  model.centroids.push_back(points[stream.uniform_int(0, n - 1)]);
  std::vector<double> nearest(n);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& cen : model.centroids)
        best = std::min(best, dist2(points[i], cen));
      nearest[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      model.centroids.push_back(points[stream.uniform_int(0, n - 1)]);
    } else {
      model.centroids.push_back(points[stream.categorical(nearest)]);
    }
  }

  model.labels.assign(n, 0);
  std::vector<int> counts(k, 0);
  for (int iter = 0; iter < 300; ++iter) {
    // assignment
    bool changed = false;
    double distortion = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bestd = dist2(points[i], model.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = dist2(points[i], model.centroids[c]);
        if (d < bestd) {
          bestd = d;
          best = c;
        }
      }
      if (model.labels[i] != best) {
        model.labels[i] = best;
        changed = true;
      }
      distortion += bestd;
    }
    model.distortion_trace.push_back(distortion);
    model.distortion = distortion;
    model.iterations = iter + 1;
    if (!changed && iter > 0) break;

    // update
    std::fill(counts.begin(), counts.end(), 0);
    SampleSet sums(k, Vector::Zero(points[0].size()));
    for (int i = 0; i < n; ++i) {
      sums[model.labels[i]] += points[i];
      ++counts[model.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        model.centroids[c] = sums[c] / counts[c];
        continue;
      }
      // reseed at the point farthest from its assigned centroid
      int far = 0;
      double fard = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d = dist2(points[i], model.centroids[model.labels[i]]);
        if (d > fard) {
          fard = d;
          far = i;
        }
      }
      model.centroids[c] = points[far];
    }
  }
  return model;
}

int elbow_from_distortions(const std::vector<double>& distortions) {
  const int kmax = static_cast<int>(distortions.size());
  if (kmax < 3)
    throw std::invalid_argument(
        "elbow: need distortions for at least K = 1..3");
  int best_k = 2;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = 2; k <= kmax - 1; ++k) {
    const double score =
        distortions[k - 2] - 2.0 * distortions[k - 1] + distortions[k];
    if (score > best_score) {
      best_score = score;
      best_k = k;
    }
  }
  return best_k;
}

int elbow_select(const SampleSet& points, int k_max, std::uint64_t seed) {
  if (k_max < 3) throw std::invalid_argument("elbow_select: k_max must be >= 3");
  std::vector<double> curve;
  curve.reserve(k_max);
  for (int k = 1; k <= k_max; ++k)
    curve.push_back(kmeans(points, k, rng::substream(seed, {0x656cULL,
                                                            (std::uint64_t)k}))
                        .distortion);
  return elbow_from_distortions(curve);
}

int RegionTree::leaves() const {
  int n = 0;
  for (const auto& node : nodes)
    if (node.leaf()) ++n;
  return n;
}

namespace {

// weighted Gini impurity mass: |S| - sum_c n_c^2 / |S|
double gini_mass(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double sq = 0.0;
  for (int c : counts) sq += static_cast<double>(c) * c;
  return total - sq / total;
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

SplitChoice best_split(const SampleSet& points,
                       const std::vector<int>& labels,
                       const std::vector<int>& idx, int num_labels) {
  SplitChoice best;
  const int n = static_cast<int>(idx.size());
  if (n < 2) return best;
  std::vector<int> total_counts(num_labels, 0);
  for (int i : idx) ++total_counts[labels[i]];
  const double parent = gini_mass(total_counts, n);
  if (parent <= 0.0) return best;

  const int d = static_cast<int>(points[idx[0]].size());
  std::vector<int> order(idx);
  std::vector<int> left_counts(num_labels);
  for (int f = 0; f < d; ++f) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = points[a](f), vb = points[b](f);
      if (va != vb) return va < vb;
      return a < b;
    });
    std::fill(left_counts.begin(), left_counts.end(), 0);
    for (int pos = 0; pos + 1 < n; ++pos) {
      ++left_counts[labels[order[pos]]];
      const double a = points[order[pos]](f);
      const double b = points[order[pos + 1]](f);
      if (a == b) continue;
      std::vector<int> right_counts(num_labels);
      for (int c = 0; c < num_labels; ++c)
        right_counts[c] = total_counts[c] - left_counts[c];
      const double gain = parent - gini_mass(left_counts, pos + 1) -
                          gini_mass(right_counts, n - pos - 1);
      if (gain > best.gain + 1e-12) {
        best.found = true;
        best.feature = f;
        best.threshold = 0.5 * (a + b);
        best.gain = gain;
      }
    }
  }
  return best;
}

}  // namespace

RegionTree fit_axis_tree(const SampleSet& points,
                         const std::vector<int>& labels, int max_leaves) {
  const int n = static_cast<int>(points.size());
  if (n == 0) throw std::invalid_argument("fit_axis_tree: no points");
  if (labels.size() != points.size())
    throw std::invalid_argument("fit_axis_tree: label count mismatch");
  if (max_leaves < 1)
    throw std::invalid_argument("fit_axis_tree: max_leaves must be >= 1");
  int num_labels = 0;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("fit_axis_tree: negative label");
    num_labels = std::max(num_labels, l + 1);
  }

  RegionTree tree;
  struct Pending {
    int node;
    std::vector<int> idx;
    SplitChoice split;
  };
  std::vector<Pending> open;

  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  tree.nodes.push_back(SplitNode{});
  tree.nodes[0].region = 0;  // provisional leaf marker
  Pending root{0, std::move(all), {}};
  root.split = best_split(points, labels, root.idx, num_labels);
  open.push_back(std::move(root));

  int leaf_count = 1;
  while (leaf_count < max_leaves) {
    // pick the expandable leaf with the largest gain, ties to oldest node
    int pick = -1;
    for (std::size_t i = 0; i < open.size(); ++i) {
      if (!open[i].split.found) continue;
      if (pick < 0 || open[i].split.gain > open[pick].split.gain + 1e-12 ||
          (std::abs(open[i].split.gain - open[pick].split.gain) <= 1e-12 &&
           open[i].node < open[pick].node))
        pick = static_cast<int>(i);
    }
    if (pick < 0) break;

    Pending chosen = std::move(open[pick]);
    open.erase(open.begin() + pick);

    std::vector<int> left_idx, right_idx;
    for (int i : chosen.idx) {
      if (points[i](chosen.split.feature) <= chosen.split.threshold)
        left_idx.push_back(i);
      else
        right_idx.push_back(i);
    }
    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(SplitNode{});
    tree.nodes[left_id].region = 0;
    const int right_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(SplitNode{});
    tree.nodes[right_id].region = 0;

    SplitNode& parent = tree.nodes[chosen.node];
    parent.feature = chosen.split.feature;
    parent.threshold = chosen.split.threshold;
    parent.left = left_id;
    parent.right = right_id;
    parent.region = -1;

    Pending l{left_id, std::move(left_idx), {}};
    l.split = best_split(points, labels, l.idx, num_labels);
    Pending r{right_id, std::move(right_idx), {}};
    r.split = best_split(points, labels, r.idx, num_labels);
    open.push_back(std::move(l));
    open.push_back(std::move(r));
    ++leaf_count;
  }

  // left-to-right leaf labeling
  int next_region = 0;
  std::vector<int> walk{0};
  while (!walk.empty()) {
    const int node = walk.back();
    walk.pop_back();
    SplitNode& nd = tree.nodes[node];
    if (nd.leaf()) {
      nd.region = next_region++;
      continue;
    }
    walk.push_back(nd.right);
    walk.push_back(nd.left);
  }
  return tree;
}

PartitionScheme regions(const RegionTree& tree, const Box& support) {
  if (!support.finite() || support.dim() == 0)
    throw std::invalid_argument("regions: support box must be finite");
  if (tree.nodes.empty())
    throw std::invalid_argument("regions: tree has no nodes");

  PartitionScheme scheme;
  scheme.support = support;
  scheme.tree = tree.nodes;
  scheme.regions.assign(tree.leaves(), Box{});

  struct Item {
    int node;
    Box box;
  };
  std::vector<Item> stack{{0, support}};
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    const SplitNode& nd = scheme.tree[it.node];
    if (nd.leaf()) {
      if (nd.region < 0 || nd.region >= static_cast<int>(scheme.regions.size()))
        throw std::invalid_argument("regions: leaf region index out of range");
      scheme.regions[nd.region] = it.box;
      continue;
    }
    if (nd.feature < 0 || nd.feature >= support.dim())
      throw std::invalid_argument("regions: split feature out of range");
    if (nd.threshold <= it.box.lower(nd.feature) ||
        nd.threshold >= it.box.upper(nd.feature))
      throw std::invalid_argument(
          "regions: split threshold leaves an empty region");
    Box left = it.box, right = it.box;
    left.upper(nd.feature) = nd.threshold;
    right.lower(nd.feature) = nd.threshold;
    stack.push_back({nd.right, right});
    stack.push_back({nd.left, left});
  }
  return scheme;
}

PartitionScheme single_region(const Box& support) {
  RegionTree tree;
  SplitNode leaf;
  leaf.region = 0;
  tree.nodes.push_back(leaf);
  return regions(tree, support);
}

NominalDistribution build_nominal(const SampleSet& samples,
                                  const PartitionScheme& scheme) {
  if (samples.empty())
    throw std::invalid_argument("build_nominal: empty sample");
  const int k = scheme.size();
  NominalDistribution nom;
  nom.counts.assign(k, 0);
  nom.atoms.assign(k, {});
  nom.total_count = static_cast<int>(samples.size());

  for (std::size_t j = 0; j < samples.size(); ++j) {
    const Vector& xi = samples[j];
    if (xi.size() != scheme.support.dim() ||
        !scheme.support.contains(xi, 1e-12)) {
      std::ostringstream os;
      os << "build_nominal: sample " << j << " at (";
      for (int c = 0; c < xi.size(); ++c)
        os << (c ? ", " : "") << xi(c);
      os << ") lies outside the support box";
      throw std::invalid_argument(os.str());
    }
    const int region = scheme.classify(xi);
    if (region < 0 || region >= k)
      throw std::invalid_argument("build_nominal: unclassifiable sample");
    ++nom.counts[region];
    nom.atoms[region].push_back(xi);
  }

  int empties = 0;
  for (int i = 0; i < k; ++i) {
    if (nom.counts[i] == 0) {
      nom.empty_regions.push_back(i);
      ++empties;
    }
  }
  const double denom = static_cast<double>(nom.total_count + empties);
  nom.weights = Vector::Zero(k);
  for (int i = 0; i < k; ++i)
    nom.weights(i) = nom.effective_count(i) / denom;
  return nom;
}

}  // namespace dro::partition
