#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cex/classifier.hpp"
#include "cex/error.hpp"
#include "cex/explanation.hpp"
#include "cex/floodlight.hpp"
#include "cex/image.hpp"
#include "cex/oracle.hpp"
#include "cex/parallel.hpp"
#include "cex/responsibility.hpp"

namespace cex {

struct RexConfig {
  int iterations = 20;
  int floodlights = 10;
  int max_explanations = 10;
  double delta = 0.0;
  MaskingColour colour = kDefaultMaskingColour;
  PartitionStrategy strategy{};
  SearchParams search{};
  std::uint64_t seed = 0;
  int min_side = 0;   // 0 = max(1, ceil(min(width, height) / 10))
  int max_depth = 10;
  int workers = 0;    // 0 = available parallelism

  enum class Mode { Floodlight, Recursive };
  Mode mode = Mode::Floodlight;
};

struct StageTimings {
  double rank_ms = 0.0;
  double search_ms = 0.0;
  double drain_ms = 0.0;
  double extract_ms = 0.0;
  double total_ms = 0.0;
};

struct RexResult {
  ClassifierVerdict verdict;
  SaliencyLandscape landscape;
  std::vector<IterationStats> rank_iterations;
  std::vector<Explanation> explanations;
  std::uint64_t classifier_calls = 0;  // delta of the handle counter over the run
  StageTimings timings;
};

namespace detail {

inline double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

inline void check_config(const RexConfig& config) {
  if (config.iterations < 1 || config.floodlights < 1 || config.max_explanations < 1) {
    throw std::invalid_argument("config: counts must be >= 1");
  }
  if (config.delta < 0.0 || config.delta > 1.0) {
    throw std::invalid_argument("config: delta outside [0,1]");
  }
}

/// Re-classifies each explanation before emission; any mismatch is a bug in
/// the producing stage and surfaces as SufficiencyViolation.
inline void verify_emitted(const Image& image, Classifier& classifier, int label,
                           std::span<const Explanation> explanations, MaskingColour colour) {
  for (const Explanation& explanation : explanations) {
    const ClassifierVerdict verdict =
        classifier.classify(apply_mask(image, explanation.pixels, colour));
    if (verdict.label != label) {
      throw SufficiencyViolation("pipeline: emitted explanation fails re-classification");
    }
  }
}

}  // namespace detail

/// The full multi-explanation pipeline: rank the pixels into a saliency
/// landscape, launch one floodlight search per attempt, minimize each
/// candidate with drain, then extract an overlap-bounded subset.
inline RexResult rex(const Image& image, ClassifierHandle classifier, const RexConfig& config) {
  detail::check_config(config);
  const auto t_total = std::chrono::steady_clock::now();
  const std::uint64_t calls_before = classifier->call_count();

  RexResult result;
  result.verdict = classifier->classify(image);
  const int label = result.verdict.label;

  auto t_stage = std::chrono::steady_clock::now();
  RankOptions rank_options;
  rank_options.iterations = config.iterations;
  rank_options.strategy = config.strategy;
  rank_options.colour = config.colour;
  rank_options.seed = config.seed;
  rank_options.min_side = config.min_side;
  rank_options.max_depth = config.max_depth;
  rank_options.workers = config.workers;
  RankResult ranked = rank(image, *classifier, label, rank_options);
  result.landscape = std::move(ranked.landscape);
  result.rank_iterations = std::move(ranked.per_iteration);
  result.timings.rank_ms = detail::ms_since(t_stage);

  t_stage = std::chrono::steady_clock::now();
  const std::size_t attempts = static_cast<std::size_t>(config.floodlights);
  std::vector<std::optional<Explanation>> found(attempts);
  detail::parallel_for(attempts, config.workers, [&](std::size_t i) {
    const std::uint64_t search_seed =
        derive_seed(config.seed, {detail::kSearchStream, static_cast<std::uint64_t>(i)});
    Rng rng(search_seed);
    SearchOutcome outcome =
        floodlight_search(image, *classifier, label, result.landscape, config.search, rng,
                          config.colour, static_cast<int>(i), search_seed);
    found[i] = std::move(outcome.explanation);
  });
  result.timings.search_ms = detail::ms_since(t_stage);

  t_stage = std::chrono::steady_clock::now();
  detail::parallel_for(attempts, config.workers, [&](std::size_t i) {
    if (found[i]) {
      found[i] = drain(image, *found[i], label, *classifier, result.landscape, config.colour);
    }
  });
  std::vector<Explanation> candidates;
  for (std::optional<Explanation>& candidate : found) {
    if (candidate) candidates.push_back(std::move(*candidate));
  }
  result.timings.drain_ms = detail::ms_since(t_stage);

  t_stage = std::chrono::steady_clock::now();
  result.explanations = extract(candidates, config.delta);
  if (result.explanations.size() > static_cast<std::size_t>(config.max_explanations)) {
    result.explanations.resize(static_cast<std::size_t>(config.max_explanations));
  }
  result.timings.extract_ms = detail::ms_since(t_stage);

  detail::verify_emitted(image, *classifier, label, result.explanations, config.colour);

  result.timings.total_ms = detail::ms_since(t_total);
  result.classifier_calls = classifier->call_count() - calls_before;
  return result;
}

namespace detail {

struct PixelSetHash {
  std::size_t operator()(const PixelSet& s) const noexcept { return s.hash(); }
};

class RecursiveSearch {
 public:
  RecursiveSearch(const Image& image, Classifier& classifier, int label,
                  const RexConfig& config)
      : image_(image),
        classifier_(classifier),
        label_(label),
        config_(config),
        min_side_(resolve_min_side(config.min_side, image.width(), image.height())) {}

  std::vector<Explanation> run() {
    visit(PixelSet::full(image_.width(), image_.height()), 0, 1);
    return std::move(emitted_);
  }

 private:
  /// Classifies the image with only `keep` retained.
  ClassifierVerdict classify_keep(const PixelSet& keep) {
    return classifier_.classify(apply_mask(image_, keep, config_.colour));
  }

  void emit(const PixelSet& region) {
    const ClassifierVerdict verdict = classify_keep(region);
    if (verdict.label != label_) return;  // partition noise; drop silently
    ExplanationSource source{"recursive", -1, config_.seed, 0.0};
    emitted_.push_back(Explanation{region, verdict.label, verdict.confidence, source});
  }

  static Rect bounding_rect(const PixelSet& region) {
    int x0 = region.width(), y0 = region.height(), x1 = -1, y1 = -1;
    region.for_each([&](int x, int y) {
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    });
    return Rect{x0, y0, x1, y1};
  }

  /// Disjoint areas of the region induced by one sampled partition of its
  /// bounding box; empty intersections are dropped.
  std::vector<PixelSet> partition_region(const PixelSet& region, std::uint64_t path) {
    const Rect box = bounding_rect(region);
    if (box.width() < 2 || box.height() < 2) return {};
    Rng rng(derive_seed(config_.seed, {kRecurseStream, path}));
    std::vector<PixelSet> parts;
    if (config_.strategy.kind == PartitionStrategy::Kind::Grid) {
      const auto children =
          sample_grid_partition(box, rng, config_.strategy.alpha, config_.strategy.beta);
      for (const Rect& child : children) {
        PixelSet cell = rasterize(child, region.width(), region.height());
        cell &= region;
        if (!cell.empty()) parts.push_back(std::move(cell));
      }
    } else {
      const Quad box_quad{{Vec2{static_cast<double>(box.x0), static_cast<double>(box.y0)},
                           Vec2{static_cast<double>(box.x1 + 1), static_cast<double>(box.y0)},
                           Vec2{static_cast<double>(box.x1 + 1), static_cast<double>(box.y1 + 1)},
                           Vec2{static_cast<double>(box.x0), static_cast<double>(box.y1 + 1)}}};
      const DiagonalSplit split = diagonal_partition(box_quad, rng);
      auto pieces = split_pixels_diagonal(box_quad, split, region);
      for (PixelSet& piece : pieces) {
        if (!piece.empty()) parts.push_back(std::move(piece));
      }
    }
    return parts;
  }

  void visit(const PixelSet& region, int depth, std::uint64_t path) {
    if (!visited_.insert(region).second) return;

    if (region.empty()) {
      emit(region);  // degenerate empty explanation
      return;
    }
    const Rect box = bounding_rect(region);
    if (depth >= config_.max_depth || std::min(box.width(), box.height()) < min_side_ ||
        box.width() < 2 || box.height() < 2) {
      emit(region);
      return;
    }

    std::vector<PixelSet> parts = partition_region(region, path);
    if (parts.size() < 2) {
      emit(region);
      return;
    }

    // Minimal label-preserving subsets of the parts, level by level; by the
    // antichain bound there are at most C(k, floor(k/2)) of them.
    const std::uint32_t limit = std::uint32_t{1} << parts.size();
    std::vector<std::int8_t> memo(limit, -1);
    auto sufficient = [&](std::uint32_t subset) {
      std::int8_t& slot = memo[subset];
      if (slot < 0) {
        PixelSet keep(image_.width(), image_.height());
        for (std::size_t i = 0; i < parts.size(); ++i) {
          if (subset & (1u << i)) keep |= parts[i];
        }
        slot = classify_keep(keep).label == label_ ? 1 : 0;
      }
      return slot == 1;
    };

    std::vector<std::uint32_t> minimal;
    for (int size = 0; size <= static_cast<int>(parts.size()); ++size) {
      for (std::uint32_t subset = 0; subset < limit; ++subset) {
        if (std::popcount(subset) != size) continue;
        bool dominated = false;
        for (std::uint32_t found : minimal) {
          if ((found & subset) == found) {
            dominated = true;
            break;
          }
        }
        if (!dominated && sufficient(subset)) minimal.push_back(subset);
      }
    }

    if (minimal.size() == 1 && minimal[0] == limit - 1) {
      // The only minimal subset is the whole region: nothing can be dropped
      // at this granularity.
      emit(region);
      return;
    }
    for (std::size_t m = 0; m < minimal.size(); ++m) {
      PixelSet sub(image_.width(), image_.height());
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (minimal[m] & (1u << i)) sub |= parts[i];
      }
      visit(sub, depth + 1, path * 8 + m + 1);
    }
  }

  const Image& image_;
  Classifier& classifier_;
  int label_;
  const RexConfig& config_;
  int min_side_;
  std::unordered_set<PixelSet, PixelSetHash> visited_;
  std::vector<Explanation> emitted_;
};

}  // namespace detail

/// Alternate strategy: recursively partition the image, enumerate minimal
/// label-preserving part subsets at each node, and descend into each of them.
/// Results are deduplicated and passed through extract.
inline std::vector<Explanation> recursive_multiple_explanations(const Image& image,
                                                                ClassifierHandle classifier,
                                                                const RexConfig& config) {
  detail::check_config(config);
  const ClassifierVerdict verdict = classifier->classify(image);
  detail::RecursiveSearch search(image, *classifier, verdict.label, config);
  std::vector<Explanation> explanations = extract(search.run(), config.delta);
  if (explanations.size() > static_cast<std::size_t>(config.max_explanations)) {
    explanations.resize(static_cast<std::size_t>(config.max_explanations));
  }
  detail::verify_emitted(image, *classifier, verdict.label, explanations, config.colour);
  return explanations;
}

/// Greedy single pass over the partition cells in the given order: a cell is
/// dropped iff the remainder still classifies to the label. The survivor is
/// sufficient and minimal with respect to single-cell removal in that order.
inline PixelSet super_explanation_shrink(const Image& image, Classifier& classifier, int label,
                                         std::span<const PixelSet> cells,
                                         MaskingColour colour) {
  PixelSet survivor = PixelSet::full(image.width(), image.height());
  for (const PixelSet& cell : cells) {
    PixelSet candidate = survivor;
    candidate -= cell;
    const ClassifierVerdict verdict = classifier.classify(apply_mask(image, candidate, colour));
    if (verdict.label == label) survivor = std::move(candidate);
  }
  return survivor;
}

/// Mode dispatch used by the command line front end. The recursive strategy
/// does not need the landscape, but the run artifacts include it, so it is
/// computed either way.
inline RexResult run_pipeline(const Image& image, ClassifierHandle classifier,
                              const RexConfig& config) {
  if (config.mode == RexConfig::Mode::Floodlight) return rex(image, classifier, config);

  detail::check_config(config);
  const auto t_total = std::chrono::steady_clock::now();
  const std::uint64_t calls_before = classifier->call_count();

  RexResult result;
  result.verdict = classifier->classify(image);

  auto t_stage = std::chrono::steady_clock::now();
  RankOptions rank_options;
  rank_options.iterations = config.iterations;
  rank_options.strategy = config.strategy;
  rank_options.colour = config.colour;
  rank_options.seed = config.seed;
  rank_options.min_side = config.min_side;
  rank_options.max_depth = config.max_depth;
  rank_options.workers = config.workers;
  RankResult ranked = rank(image, *classifier, result.verdict.label, rank_options);
  result.landscape = std::move(ranked.landscape);
  result.rank_iterations = std::move(ranked.per_iteration);
  result.timings.rank_ms = detail::ms_since(t_stage);

  t_stage = std::chrono::steady_clock::now();
  result.explanations = recursive_multiple_explanations(image, classifier, config);
  result.timings.search_ms = detail::ms_since(t_stage);

  result.timings.total_ms = detail::ms_since(t_total);
  result.classifier_calls = classifier->call_count() - calls_before;
  return result;
}

}  // namespace cex
