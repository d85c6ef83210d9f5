#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

#include "cex/classifier.hpp"
#include "cex/error.hpp"
#include "cex/explanation.hpp"
#include "cex/image.hpp"
#include "cex/landscape.hpp"
#include "cex/partition.hpp"
#include "cex/rng.hpp"

namespace cex {

/// Circular movable mask: the interior is kept, the exterior masked.
struct Floodlight {
  Vec2 centre{};
  double radius = 0.0;
};

struct SearchParams {
  int steps = 40;            // hill-climb steps per search
  int expansions = 4;        // radius expansions per step
  double expansion_coeff = 1.4;
  double radius = 0.0;       // initial radius; 0 = min(width, height) / 8

  double resolve_radius(int width, int height) const {
    return radius > 0.0 ? radius : std::min(width, height) / 8.0;
  }
};

/// Pixels whose centres lie within Euclidean distance `radius` of the
/// floodlight centre, clipped to the image.
inline PixelSet floodlight_mask(const Floodlight& light, int width, int height) {
  PixelSet out(width, height);
  const double r2 = light.radius * light.radius;
  const int y0 = std::max(0, static_cast<int>(std::floor(light.centre.y - light.radius - 0.5)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(light.centre.y + light.radius)));
  const int x0 = std::max(0, static_cast<int>(std::floor(light.centre.x - light.radius - 0.5)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(light.centre.x + light.radius)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x + 0.5) - light.centre.x;
      const double dy = (y + 0.5) - light.centre.y;
      if (dx * dx + dy * dy <= r2) out.set(x, y);
    }
  }
  return out;
}

/// Mean landscape value over the mask.
inline double objective(const SaliencyLandscape& landscape, const PixelSet& mask) {
  if (mask.empty()) throw EmptyMaskError("objective: empty mask");
  double sum = 0.0;
  mask.for_each([&](int x, int y) { sum += landscape.at(x, y); });
  return sum / static_cast<double>(mask.cardinality());
}

struct SearchOutcome {
  std::optional<Explanation> explanation;
  std::uint64_t classifier_calls = 0;
  int steps_taken = 0;
};

namespace detail {

inline constexpr double kInitWeightFloor = 1e-6;
inline constexpr double kDownhillAcceptance = 0.1;

inline double objective_or_lowest(const SaliencyLandscape& landscape, const PixelSet& mask) {
  if (mask.empty()) return -std::numeric_limits<double>::infinity();
  return objective(landscape, mask);
}

/// Initial position drawn with probability proportional to landscape value
/// plus a small floor, so zero-responsibility regions stay reachable.
inline Vec2 sample_initial_centre(const SaliencyLandscape& landscape, Rng& rng) {
  std::vector<double> cumulative(landscape.values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < landscape.values.size(); ++i) {
    total += landscape.values[i] + kInitWeightFloor;
    cumulative[i] = total;
  }
  const std::size_t pick = rng.pick_cumulative(cumulative);
  const int x = static_cast<int>(pick % static_cast<std::size_t>(landscape.width));
  const int y = static_cast<int>(pick / static_cast<std::size_t>(landscape.width));
  return Vec2{x + 0.5, y + 0.5};
}

}  // namespace detail

/// Spatially delimited stochastic hill-climb. Each step tests the current
/// position at geometrically expanding radii; the first sufficient mask is
/// returned as a candidate explanation. After a full round of failed
/// expansions the radius resets and the floodlight takes a neighbour step:
/// a centre proposed uniformly on the annulus [r/2, 3r/2], accepted when its
/// objective does not decrease, otherwise with small fixed probability.
inline SearchOutcome floodlight_search(const Image& image, Classifier& classifier, int label,
                                       const SaliencyLandscape& landscape,
                                       const SearchParams& params, Rng& rng,
                                       MaskingColour colour, int floodlight_index = -1,
                                       std::uint64_t provenance_seed = 0) {
  if (params.steps < 1 || params.expansions < 1 || params.expansion_coeff <= 1.0) {
    throw std::invalid_argument("floodlight: invalid search parameters");
  }
  const int width = image.width();
  const int height = image.height();
  const double base_radius = params.resolve_radius(width, height);
  if (base_radius <= 0.0) throw std::invalid_argument("floodlight: radius must be positive");

  SearchOutcome outcome;
  Floodlight light{detail::sample_initial_centre(landscape, rng), base_radius};

  for (int step = 0; step < params.steps; ++step) {
    outcome.steps_taken = step + 1;
    double radius = base_radius;
    for (int expansion = 0; expansion < params.expansions; ++expansion) {
      light.radius = radius;
      PixelSet mask = floodlight_mask(light, width, height);
      if (!mask.empty()) {
        const ClassifierVerdict verdict =
            classifier.classify(apply_mask(image, mask, colour));
        ++outcome.classifier_calls;
        if (verdict.label == label) {
          ExplanationSource source{"floodlight", floodlight_index, provenance_seed, radius};
          outcome.explanation = Explanation{std::move(mask), verdict.label, verdict.confidence,
                                            std::move(source)};
          return outcome;
        }
      }
      radius *= params.expansion_coeff;
    }

    light.radius = base_radius;
    const double rho = std::sqrt(rng.uniform(0.25 * base_radius * base_radius,
                                             2.25 * base_radius * base_radius));
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    Floodlight proposal{Vec2{std::clamp(light.centre.x + rho * std::cos(angle), 0.0,
                                        static_cast<double>(width)),
                             std::clamp(light.centre.y + rho * std::sin(angle), 0.0,
                                        static_cast<double>(height))},
                        base_radius};
    const double current =
        detail::objective_or_lowest(landscape, floodlight_mask(light, width, height));
    const double proposed =
        detail::objective_or_lowest(landscape, floodlight_mask(proposal, width, height));
    if (proposed >= current && !std::isinf(proposed)) {
      light.centre = proposal.centre;
    } else if (rng.uniform01() < detail::kDownhillAcceptance && !std::isinf(proposed)) {
      light.centre = proposal.centre;
    }
  }
  return outcome;
}

}  // namespace cex
