#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cex/error.hpp"
#include "cex/image.hpp"

namespace cex {

/// Per-pixel responsibility accumulated over ranking iterations. Values stay
/// in [0, 1] because each iteration contributes a product of responsibilities
/// and accumulation is an average.
struct SaliencyLandscape {
  int width = 0;
  int height = 0;
  int iterations = 0;
  std::vector<double> values;  // row major, width * height

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

  double max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }
};

namespace detail {

inline void append_double(std::string& out, double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, result.ptr);
}

}  // namespace detail

/// CSV serialization: height rows of width comma-separated values, shortest
/// round-trip decimal form.
inline std::string landscape_to_csv(const SaliencyLandscape& landscape) {
  std::string out;
  out.reserve(static_cast<std::size_t>(landscape.width) * landscape.height * 8);
  for (int y = 0; y < landscape.height; ++y) {
    for (int x = 0; x < landscape.width; ++x) {
      if (x > 0) out.push_back(',');
      detail::append_double(out, landscape.at(x, y));
    }
    out.push_back('\n');
  }
  return out;
}

/// 8-bit grayscale heatmap as PPM, scaled by 255 / max; an all-zero landscape
/// renders black.
inline std::vector<std::uint8_t> landscape_to_heatmap_ppm(const SaliencyLandscape& landscape) {
  const double max = landscape.max_value();
  std::string header = "P6\n" + std::to_string(landscape.width) + " " +
                       std::to_string(landscape.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + landscape.values.size() * 3);
  for (double v : landscape.values) {
    const auto g = static_cast<std::uint8_t>(
        max > 0.0 ? std::llround(std::clamp(v / max, 0.0, 1.0) * 255.0) : 0);
    out.push_back(g);
    out.push_back(g);
    out.push_back(g);
  }
  return out;
}

}  // namespace cex
