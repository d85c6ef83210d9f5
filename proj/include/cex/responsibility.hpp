#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <utility>
#include <vector>

#include "cex/classifier.hpp"
#include "cex/error.hpp"
#include "cex/image.hpp"
#include "cex/landscape.hpp"
#include "cex/parallel.hpp"
#include "cex/partition.hpp"
#include "cex/rng.hpp"

namespace cex {

struct PartResponsibilities {
  std::array<double, 4> value{};
  std::uint64_t classifier_calls = 0;
};

/// Causal responsibility of four sibling parts under subset masking.
///
/// A part is a cause iff some witness set of siblings exists such that
/// masking the witness (and any of its subsets) together with the context
/// preserves the label, while additionally masking the part flips it. The
/// responsibility is 1/(k+1) for the smallest witness of size k, and 0 for
/// parts that are not causes. All 2^4 sibling subsets are evaluated once and
/// memoized; the empty subset is covered by the precondition that the image
/// with only the context masked keeps its label.
inline PartResponsibilities responsibility_of_parts(const Image& image, Classifier& classifier,
                                                    int label,
                                                    const std::array<PixelSet, 4>& parts,
                                                    const PixelSet& context,
                                                    MaskingColour colour) {
  PartResponsibilities out;

  std::array<bool, 16> preserved{};
  preserved[0] = true;
  for (unsigned subset = 1; subset < 16; ++subset) {
    PixelSet keep = PixelSet::full(image.width(), image.height());
    keep -= context;
    for (int i = 0; i < 4; ++i) {
      if (subset & (1u << i)) keep -= parts[static_cast<std::size_t>(i)];
    }
    const ClassifierVerdict verdict = classifier.classify(apply_mask(image, keep, colour));
    ++out.classifier_calls;
    preserved[subset] = (verdict.label == label);
  }

  for (int i = 0; i < 4; ++i) {
    const unsigned self = 1u << i;
    double responsibility = 0.0;
    for (int k = 0; k <= 3 && responsibility == 0.0; ++k) {
      for (unsigned witness = 0; witness < 16; ++witness) {
        if ((witness & self) || std::popcount(witness) != k) continue;
        bool witness_ok = true;
        for (unsigned sub = witness;; sub = (sub - 1) & witness) {
          if (!preserved[sub]) {
            witness_ok = false;
            break;
          }
          if (sub == 0) break;
        }
        if (witness_ok && !preserved[witness | self]) {
          responsibility = 1.0 / (k + 1);
          break;
        }
      }
    }
    out.value[static_cast<std::size_t>(i)] = responsibility;
  }
  return out;
}

/// Node of the recursive partition refinement. Children, when present, tile
/// the node's pixels exactly.
struct RefinementNode {
  Region region;
  PixelSet pixels;
  double local_responsibility = 1.0;
  int depth = 0;
  std::vector<RefinementNode> children;  // empty or exactly 4
};

struct RefineOptions {
  PartitionStrategy strategy{};
  MaskingColour colour = kDefaultMaskingColour;
  int min_side = 1;
  int max_depth = 10;
  bool refine_all_positive = true;  // otherwise only the top-responsibility children
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // e.g. the ranking iteration index
};

struct RefineStats {
  std::uint64_t classifier_calls = 0;
  std::uint64_t refined_nodes = 0;
};

inline RefinementNode make_root(int width, int height, PartitionStrategy::Kind kind) {
  RefinementNode root;
  if (kind == PartitionStrategy::Kind::Grid) {
    root.region = Rect{0, 0, width - 1, height - 1};
  } else {
    root.region = image_quad(width, height);
  }
  root.pixels = PixelSet::full(width, height);
  return root;
}

namespace detail {

inline constexpr std::uint64_t kRefineStream = 0x7265666e;  // node splits
inline constexpr std::uint64_t kSearchStream = 0x73726368;  // floodlight searches
inline constexpr std::uint64_t kRecurseStream = 0x72656375;  // recursive strategy

/// Splits a node into four child regions plus their pixel sets. Grid children
/// rasterize exactly; diagonal children partition the parent's pixels by
/// chord sides so the tiling is exact at pixel granularity.
inline std::pair<std::array<Region, 4>, std::array<PixelSet, 4>> split_node(
    const Region& region, const PixelSet& pixels, const PartitionStrategy& strategy, Rng& rng) {
  std::array<Region, 4> regions;
  std::array<PixelSet, 4> parts{
      PixelSet(pixels.width(), pixels.height()),
      PixelSet(pixels.width(), pixels.height()),
      PixelSet(pixels.width(), pixels.height()),
      PixelSet(pixels.width(), pixels.height()),
  };
  if (strategy.kind == PartitionStrategy::Kind::Grid) {
    const auto children =
        sample_grid_partition(std::get<Rect>(region), rng, strategy.alpha, strategy.beta);
    for (int i = 0; i < 4; ++i) {
      regions[static_cast<std::size_t>(i)] = children[static_cast<std::size_t>(i)];
      parts[static_cast<std::size_t>(i)] =
          rasterize(children[static_cast<std::size_t>(i)], pixels.width(), pixels.height());
    }
  } else {
    const Quad& quad = std::get<Quad>(region);
    const DiagonalSplit split = diagonal_partition(quad, rng);
    parts = split_pixels_diagonal(quad, split, pixels);
    for (int i = 0; i < 4; ++i) regions[static_cast<std::size_t>(i)] = split.children[static_cast<std::size_t>(i)];
  }
  return {regions, parts};
}

inline void refine_impl(const Image& image, Classifier& classifier, int label,
                        RefinementNode& node, const RefineOptions& options, std::uint64_t path,
                        RefineStats& stats) {
  if (node.depth >= options.max_depth) return;
  if (region_min_side(node.region) < options.min_side) return;
  if (!region_can_split(node.region)) return;

  Rng rng(derive_seed(options.seed, {kRefineStream, options.stream, path}));
  auto [regions, parts] = split_node(node.region, node.pixels, options.strategy, rng);

  const PixelSet no_context(image.width(), image.height());
  const PartResponsibilities resp =
      responsibility_of_parts(image, classifier, label, parts, no_context, options.colour);
  stats.classifier_calls += resp.classifier_calls;
  ++stats.refined_nodes;

  // Termination: all four children share the same responsibility. The split
  // carries no information at this granularity, so it is discarded and the
  // node keeps its own responsibility over its whole area.
  if (resp.value[0] == resp.value[1] && resp.value[1] == resp.value[2] &&
      resp.value[2] == resp.value[3]) {
    return;
  }

  node.children.resize(4);
  double top = 0.0;
  for (int i = 0; i < 4; ++i) {
    RefinementNode& child = node.children[static_cast<std::size_t>(i)];
    child.region = regions[static_cast<std::size_t>(i)];
    child.pixels = std::move(parts[static_cast<std::size_t>(i)]);
    child.local_responsibility = resp.value[static_cast<std::size_t>(i)];
    child.depth = node.depth + 1;
    top = std::max(top, child.local_responsibility);
  }

  for (int i = 0; i < 4; ++i) {
    RefinementNode& child = node.children[static_cast<std::size_t>(i)];
    if (child.local_responsibility <= 0.0) continue;
    if (!options.refine_all_positive && child.local_responsibility < top) continue;
    refine_impl(image, classifier, label, child, options, path * 5 + static_cast<std::uint64_t>(i) + 1,
                stats);
  }
}

}  // namespace detail

/// Recursively partitions the node and scores children until the refinement
/// terminates (child too small, equal responsibilities, or depth cap).
inline RefineStats refine(const Image& image, Classifier& classifier, int label,
                          RefinementNode& node, const RefineOptions& options) {
  RefineStats stats;
  detail::refine_impl(image, classifier, label, node, options, 1, stats);
  if (stats.classifier_calls > 16 * std::max<std::uint64_t>(stats.refined_nodes, 1)) {
    throw Error("refine: classifier call budget exceeded");
  }
  return stats;
}

/// One ranking pass: each pixel gets the product of local responsibilities
/// along the root-to-leaf path of the leaf containing it. Zero-responsibility
/// subtrees contribute zero.
inline std::vector<double> iteration_map(const RefinementNode& root) {
  std::vector<double> values(root.pixels.size(), 0.0);
  auto walk = [&](auto&& self, const RefinementNode& node, double product) -> void {
    product *= node.local_responsibility;
    if (node.children.empty()) {
      if (product != 0.0) {
        node.pixels.for_each([&](int x, int y) {
          values[static_cast<std::size_t>(y) * root.pixels.width() + x] = product;
        });
      }
      return;
    }
    for (const RefinementNode& child : node.children) self(self, child, product);
  };
  walk(walk, root, 1.0);
  return values;
}

struct RankOptions {
  int iterations = 20;
  PartitionStrategy strategy{};
  MaskingColour colour = kDefaultMaskingColour;
  std::uint64_t seed = 0;
  int min_side = 0;  // 0 = max(1, ceil(min(width, height) / 10))
  int max_depth = 10;
  int workers = 0;  // 0 = available parallelism
  bool refine_all_positive = true;
};

struct IterationStats {
  std::uint64_t classifier_calls = 0;
  std::uint64_t refined_nodes = 0;
};

struct RankResult {
  SaliencyLandscape landscape;
  std::vector<IterationStats> per_iteration;

  std::uint64_t total_calls() const {
    std::uint64_t total = 0;
    for (const IterationStats& s : per_iteration) total += s.classifier_calls;
    return total;
  }
};

inline int resolve_min_side(int requested, int width, int height) {
  if (requested > 0) return requested;
  return std::max(1, (std::min(width, height) + 9) / 10);
}

/// Responsibility of the whole image for its own label: the root is a
/// counterfactual cause (its only witness is empty) iff masking everything
/// changes the classification.
inline double root_responsibility(const Image& image, Classifier& classifier, int label,
                                  MaskingColour colour) {
  const PixelSet none(image.width(), image.height());
  return classifier.classify(apply_mask(image, none, colour)).label == label ? 0.0 : 1.0;
}

/// Builds the saliency landscape: the mean over `iterations` independent
/// refinement passes, each with a seed derived from (seed, iteration).
/// Iterations may run concurrently; the reduction order is fixed, so the
/// result is bit-identical for any worker count.
inline RankResult rank(const Image& image, Classifier& classifier, int label,
                       const RankOptions& options) {
  if (options.iterations < 1) throw std::invalid_argument("rank: iterations must be >= 1");

  RefineOptions refine_options;
  refine_options.strategy = options.strategy;
  refine_options.colour = options.colour;
  refine_options.min_side = resolve_min_side(options.min_side, image.width(), image.height());
  refine_options.max_depth = options.max_depth;
  refine_options.refine_all_positive = options.refine_all_positive;
  refine_options.seed = options.seed;

  const double root_r = root_responsibility(image, classifier, label, options.colour);

  const std::size_t n = static_cast<std::size_t>(options.iterations);
  std::vector<std::vector<double>> maps(n);
  std::vector<IterationStats> stats(n);

  detail::parallel_for(n, options.workers, [&](std::size_t i) {
    RefineOptions per_iteration = refine_options;
    per_iteration.stream = i;
    RefinementNode root = make_root(image.width(), image.height(), options.strategy.kind);
    root.local_responsibility = root_r;
    if (root_r > 0.0) {
      // A zero root zeroes every path product, so refinement is pointless.
      const RefineStats rs = refine(image, classifier, label, root, per_iteration);
      stats[i] = IterationStats{rs.classifier_calls, rs.refined_nodes};
    }
    maps[i] = iteration_map(root);
  });

  RankResult result;
  result.landscape.width = image.width();
  result.landscape.height = image.height();
  result.landscape.iterations = options.iterations;
  result.landscape.values.assign(image.pixel_count(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < maps[i].size(); ++p) result.landscape.values[p] += maps[i][p];
  }
  for (double& v : result.landscape.values) v /= static_cast<double>(options.iterations);
  result.per_iteration = std::move(stats);
  return result;
}

}  // namespace cex
