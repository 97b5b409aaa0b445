#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kinpose/types.hpp"

namespace kinpose {

// Feature access used during training. Implementations may memoize;
// value(d, s) must be a pure function of (d, s).
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual int descriptor_count() const = 0;
  virtual int sample_count() const = 0;
  virtual double value(int descriptor, int sample) const = 0;
};

// Flat node of a regression tree. Nodes are stored preorder with the root
// at index 0; leaves have left < 0 and carry the mean target vector.
struct TreeNode {
  int desc = -1;
  double threshold = 0;
  int left = -1, right = -1;
  VecX mean;
  std::uint32_t n_samples = 0;

  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  // Walks to a leaf, evaluating only the descriptors along the path.
  template <typename Probe>
  const TreeNode& traverse(Probe&& probe) const {
    int i = 0;
    while (!nodes[i].is_leaf())
      i = probe(nodes[i].desc) < nodes[i].threshold ? nodes[i].left
                                                    : nodes[i].right;
    return nodes[i];
  }
};

struct Forest {
  std::vector<Tree> trees;
  int target_dim = 0;
  int max_depth = 0;
};

struct ForestTrainParams {
  int n_trees = 16;
  int max_depth = 15;
  int candidate_descriptors = 200;  // per node, drawn from the stage table
  int candidate_thresholds = 10;    // per candidate descriptor
  int min_samples_leaf = 5;
  double bagging_fraction = 0.8;    // bootstrap size as a fraction of n

  void validate() const;
};

// Greedy top-down growth; the split criterion is the reduction in the sum
// of squared deviations of the target vectors (trace of the scatter).
// Node-level randomness is keyed on (seed, node path) so a deeper tree is a
// refinement of a shallower one trained with the same seed.
Tree train_tree(const FeatureSource& features, const MatX& targets,
                const std::vector<int>& samples, const ForestTrainParams& p,
                std::uint64_t seed);

// n_trees trees on independent bootstraps; deterministic for a given seed
// regardless of worker count.
Forest train_forest(const FeatureSource& features, const MatX& targets,
                    const ForestTrainParams& p, std::uint64_t seed,
                    int workers = 1);

VecX predict(const Tree& tree, const std::function<double(int)>& probe);
// Arithmetic mean of the trees' leaf vectors. O(n_trees x depth) feature
// evaluations.
VecX predict(const Forest& forest, const std::function<double(int)>& probe);

}  // namespace kinpose
