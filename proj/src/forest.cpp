#include "kinpose/forest.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "kinpose/parallel.hpp"
#include "kinpose/rng.hpp"

namespace kinpose {

void ForestTrainParams::validate() const {
  if (n_trees < 1 || max_depth < 1 || candidate_descriptors < 1 ||
      candidate_thresholds < 1 || min_samples_leaf < 1)
    throw std::invalid_argument("forest params: counts must be >= 1");
  if (!(bagging_fraction > 0.0) || bagging_fraction > 1.0)
    throw std::invalid_argument("forest params: bagging_fraction in (0,1]");
}

namespace {

constexpr std::uint64_t kTreeStream = 0x74726565;

struct SplitChoice {
  int desc = -1;
  double threshold = 0;
  double score = -std::numeric_limits<double>::infinity();
};

// Recursive builder. `path` encodes the node's position (root 1, children
// 2p and 2p+1) and keys its private RNG stream.
int build_node(const FeatureSource& features, const MatX& targets,
               std::vector<int>& samples, int begin, int end, int depth,
               std::uint64_t path, std::uint64_t seed,
               const ForestTrainParams& p, Tree* tree) {
  const int n = end - begin;
  const Eigen::Index dim = targets.rows();

  VecX sum = VecX::Zero(dim);
  double sumsq = 0;
  for (int i = begin; i < end; ++i) {
    sum += targets.col(samples[i]);
    sumsq += targets.col(samples[i]).squaredNorm();
  }
  const double sse = sumsq - sum.squaredNorm() / n;

  auto make_leaf = [&] {
    TreeNode leaf;
    leaf.mean = sum / n;
    leaf.n_samples = std::uint32_t(n);
    tree->nodes.push_back(std::move(leaf));
    return int(tree->nodes.size()) - 1;
  };

  if (depth >= p.max_depth || n < 2 * p.min_samples_leaf ||
      sse <= 1e-12 * (1.0 + sumsq))
    return make_leaf();

  Rng rng(mix64(mix64(seed, kTreeStream), path));
  const std::vector<int> candidates = rng.sample_without_replacement(
      features.descriptor_count(), p.candidate_descriptors);

  SplitChoice best;
  std::vector<double> vals(n);
  std::vector<double> thresholds(p.candidate_thresholds);
  // bucket[k] accumulates targets whose first enclosing threshold is k.
  MatX bucket_sum(dim, p.candidate_thresholds + 1);
  std::vector<int> bucket_n(p.candidate_thresholds + 1);

  for (int d : candidates) {
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (int i = 0; i < n; ++i) {
      vals[i] = features.value(d, samples[begin + i]);
      vmin = std::min(vmin, vals[i]);
      vmax = std::max(vmax, vals[i]);
    }
    if (!(vmax > vmin)) continue;  // constant column here

    for (double& t : thresholds) t = rng.uniform(vmin, vmax);
    std::sort(thresholds.begin(), thresholds.end());

    bucket_sum.setZero();
    std::fill(bucket_n.begin(), bucket_n.end(), 0);
    for (int i = 0; i < n; ++i) {
      // First threshold strictly above the value; samples go left when
      // value < threshold.
      const int k = int(std::upper_bound(thresholds.begin(), thresholds.end(),
                                         vals[i]) -
                        thresholds.begin());
      bucket_sum.col(k) += targets.col(samples[begin + i]);
      bucket_n[k] += 1;
    }

    VecX left_sum = VecX::Zero(dim);
    int left_n = 0;
    for (int k = 0; k < p.candidate_thresholds; ++k) {
      left_sum += bucket_sum.col(k);
      left_n += bucket_n[k];
      const int right_n = n - left_n;
      if (left_n < p.min_samples_leaf || right_n < p.min_samples_leaf)
        continue;
      // Maximizing sum of per-side ||sum||^2/n equals minimizing the
      // post-split sum of squared deviations.
      const VecX right_sum = sum - left_sum;
      const double score = left_sum.squaredNorm() / left_n +
                           right_sum.squaredNorm() / right_n;
      if (score > best.score) best = {d, thresholds[k], score};
    }
  }

  if (best.desc < 0) return make_leaf();

  const int mid =
      int(std::partition(samples.begin() + begin, samples.begin() + end,
                         [&](int s) {
                           return features.value(best.desc, s) <
                                  best.threshold;
                         }) -
          samples.begin());
  if (mid == begin || mid == end) return make_leaf();

  const int index = int(tree->nodes.size());
  tree->nodes.emplace_back();
  tree->nodes[index].desc = best.desc;
  tree->nodes[index].threshold = best.threshold;
  tree->nodes[index].n_samples = std::uint32_t(n);
  const int left = build_node(features, targets, samples, begin, mid,
                              depth + 1, path * 2, seed, p, tree);
  const int right = build_node(features, targets, samples, mid, end,
                               depth + 1, path * 2 + 1, seed, p, tree);
  tree->nodes[index].left = left;
  tree->nodes[index].right = right;
  return index;
}

}  // namespace

Tree train_tree(const FeatureSource& features, const MatX& targets,
                const std::vector<int>& samples, const ForestTrainParams& p,
                std::uint64_t seed) {
  p.validate();
  if (samples.empty())
    throw std::invalid_argument("train_tree: empty sample set");
  Tree tree;
  std::vector<int> order = samples;
  build_node(features, targets, order, 0, int(order.size()), 0, 1, seed, p,
             &tree);
  return tree;
}

Forest train_forest(const FeatureSource& features, const MatX& targets,
                    const ForestTrainParams& p, std::uint64_t seed,
                    int workers) {
  p.validate();
  const int n = features.sample_count();
  if (n == 0 || targets.cols() != n)
    throw std::invalid_argument("train_forest: empty or mismatched samples");

  Forest forest;
  forest.target_dim = int(targets.rows());
  forest.max_depth = p.max_depth;
  forest.trees.resize(p.n_trees);
  parallel_for(p.n_trees, workers, [&](int t) {
    const std::uint64_t tree_seed = mix64(seed, std::uint64_t(t));
    std::vector<int> samples;
    if (p.bagging_fraction == 1.0) {
      // Fraction 1 disables resampling so a tree sees every sample.
      samples.resize(n);
      for (int i = 0; i < n; ++i) samples[i] = i;
    } else {
      Rng bag_rng(mix64(tree_seed, 0x626167));
      const int bag = std::max(1, int(std::lround(p.bagging_fraction * n)));
      samples.resize(bag);
      for (int i = 0; i < bag; ++i)
        samples[i] = int(bag_rng.uniform_index(std::uint64_t(n)));
    }
    forest.trees[t] = train_tree(features, targets, samples, p, tree_seed);
  });
  return forest;
}

VecX predict(const Tree& tree, const std::function<double(int)>& probe) {
  return tree.traverse(probe).mean;
}

VecX predict(const Forest& forest, const std::function<double(int)>& probe) {
  VecX acc = VecX::Zero(forest.target_dim);
  for (const auto& tree : forest.trees) acc += tree.traverse(probe).mean;
  return acc / double(forest.trees.size());
}

}  // namespace kinpose
