#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cex/classifier.hpp"
#include "cex/error.hpp"
#include "cex/image.hpp"
#include "cex/landscape.hpp"

namespace cex {

struct ExplanationSource {
  std::string origin = "floodlight";
  int floodlight = -1;
  std::uint64_t seed = 0;
  double final_radius = 0.0;
};

/// A pixel subset sufficient for the original label, with provenance.
struct Explanation {
  PixelSet pixels;
  int label = 0;
  double confidence = 0.0;
  ExplanationSource source;
};

/// Constructs an explanation, checking sufficiency against the classifier.
inline Explanation make_explanation(const Image& image, Classifier& classifier,
                                    int expected_label, PixelSet pixels, MaskingColour colour,
                                    ExplanationSource source = {}) {
  const ClassifierVerdict verdict = classifier.classify(apply_mask(image, pixels, colour));
  if (verdict.label != expected_label) {
    throw SufficiencyViolation("explanation: masked image classifies to " +
                               std::to_string(verdict.label) + ", expected " +
                               std::to_string(expected_label));
  }
  return Explanation{std::move(pixels), verdict.label, verdict.confidence, std::move(source)};
}

/// Sorensen-Dice coefficient 2|a n b| / (|a| + |b|).
inline double sdc(const PixelSet& a, const PixelSet& b) {
  if (!a.same_dims(b)) throw DimensionMismatch("sdc: dimension mismatch");
  const std::size_t total = a.cardinality() + b.cardinality();
  if (total == 0) throw EmptyMaskError("sdc: both sets are empty");
  return 2.0 * static_cast<double>(a.intersection_count(b)) / static_cast<double>(total);
}

namespace detail {

/// Distinct landscape levels within the region, descending, with levels equal
/// to machine precision merged into one.
inline std::vector<double> region_levels(const SaliencyLandscape& landscape,
                                         const PixelSet& region) {
  std::vector<double> levels;
  levels.reserve(region.cardinality());
  region.for_each([&](int x, int y) { levels.push_back(landscape.at(x, y)); });
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end(),
                           [](double a, double b) {
                             return std::abs(a - b) <=
                                    1e-12 * std::max({std::abs(a), std::abs(b), 1.0});
                           }),
               levels.end());
  return levels;
}

inline PixelSet pixels_at_or_above(const SaliencyLandscape& landscape, const PixelSet& region,
                                   double level) {
  PixelSet out(region.width(), region.height());
  region.for_each([&](int x, int y) {
    if (landscape.at(x, y) >= level) out.set(x, y);
  });
  return out;
}

}  // namespace detail

/// Water-level minimization: binary search over the descending level list for
/// the smallest prefix whose at-or-above set inside the candidate's region is
/// still sufficient. Pixels of equal responsibility are kept or dropped
/// together. Falls back to the input when no threshold passes.
inline Explanation drain(const Image& image, const Explanation& candidate, int label,
                         Classifier& classifier, const SaliencyLandscape& landscape,
                         MaskingColour colour) {
  const PixelSet& region = candidate.pixels;
  if (region.empty()) return candidate;

  const std::vector<double> levels = detail::region_levels(landscape, region);

  struct Pass {
    PixelSet pixels;
    ClassifierVerdict verdict;
  };
  std::optional<Pass> best;
  auto evaluate = [&](std::size_t index) {
    PixelSet set = detail::pixels_at_or_above(landscape, region, levels[index]);
    const ClassifierVerdict verdict = classifier.classify(apply_mask(image, set, colour));
    if (verdict.label == label) {
      best = Pass{std::move(set), verdict};
      return true;
    }
    return false;
  };

  // The last prefix is the whole region; it re-asserts the input's
  // sufficiency before the search narrows down.
  std::size_t lo = 0;
  std::size_t hi = levels.size() - 1;
  if (!evaluate(hi)) return candidate;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (evaluate(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  Explanation out{std::move(best->pixels), best->verdict.label, best->verdict.confidence,
                  candidate.source};
  return out;
}

/// Greedy overlap-bounded selection. Builds the pairwise SDC matrix with
/// entries zeroed at or below delta, repeatedly admits explanations whose
/// column sums to zero, then drops the most overlapping candidate (ties:
/// smaller pixel count first, then lower index) and recomputes.
inline std::vector<Explanation> extract(const std::vector<Explanation>& candidates,
                                        double delta) {
  if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("extract: delta outside [0,1]");

  // Deduplicate identical pixel sets up front, keeping first occurrences.
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    bool duplicate = false;
    for (std::size_t j : index) {
      if (candidates[j].pixels == candidates[i].pixels) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) index.push_back(i);
  }

  const std::size_t n = index.size();
  std::vector<std::vector<double>> overlap(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const PixelSet& a = candidates[index[i]].pixels;
      const PixelSet& b = candidates[index[j]].pixels;
      if (a.empty() && b.empty()) continue;  // identical empties were deduplicated
      const double value = sdc(a, b);
      if (value > delta) {
        overlap[i][j] = value;
        overlap[j][i] = value;
      }
    }
  }

  std::vector<bool> active(n, true);
  std::vector<bool> admitted(n, false);
  std::size_t active_count = n;
  while (active_count > 0) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j]) continue;
      double column = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (active[i]) column += overlap[i][j];
      }
      if (column == 0.0) {
        admitted[j] = true;
        active[j] = false;
        --active_count;
      }
    }
    if (active_count == 0) break;

    std::size_t worst = n;
    double worst_sum = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j]) continue;
      double column = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (active[i]) column += overlap[i][j];
      }
      const bool better =
          column > worst_sum ||
          (column == worst_sum &&
           candidates[index[j]].pixels.cardinality() < candidates[index[worst]].pixels.cardinality());
      if (better) {
        worst = j;
        worst_sum = column;
      }
    }
    active[worst] = false;
    --active_count;
  }

  std::vector<Explanation> out;
  for (std::size_t j = 0; j < n; ++j) {
    if (admitted[j]) out.push_back(candidates[index[j]]);
  }
  return out;
}

}  // namespace cex
