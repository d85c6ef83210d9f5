#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <variant>
#include <vector>

#include "cex/error.hpp"
#include "cex/image.hpp"
#include "cex/rng.hpp"

namespace cex {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2&) const = default;
};

/// Axis-aligned region with inclusive pixel bounds.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0 + 1; }
  int height() const noexcept { return y1 - y0 + 1; }
  bool operator==(const Rect&) const = default;
};

/// Convex quadrilateral, vertices stored in orientation with positive
/// shoelace sum (counter-clockwise in the stored coordinate frame).
struct Quad {
  std::array<Vec2, 4> v{};

  bool operator==(const Quad&) const = default;
};

using Region = std::variant<Rect, Quad>;

struct PartitionStrategy {
  enum class Kind { Grid, Diagonal };

  Kind kind = Kind::Grid;
  double alpha = 1.1;
  double beta = 1.1;
};

inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

inline double signed_area(const Quad& q) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Vec2& a = q.v[i];
    const Vec2& b = q.v[(i + 1) % 4];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

/// Convexity predicate: consecutive edge cross products all strictly positive.
inline bool is_convex_ccw(const Quad& q) {
  for (int i = 0; i < 4; ++i) {
    const Vec2 a = q.v[i];
    const Vec2 b = q.v[(i + 1) % 4];
    const Vec2 c = q.v[(i + 2) % 4];
    const double z = cross(Vec2{b.x - a.x, b.y - a.y}, Vec2{c.x - b.x, c.y - b.y});
    if (z <= 0.0) return false;
  }
  return true;
}

inline Quad image_quad(int width, int height) {
  const double w = width;
  const double h = height;
  return Quad{{Vec2{0, 0}, Vec2{w, 0}, Vec2{w, h}, Vec2{0, h}}};
}

/// Beta-binomial pmf over 0..n, computed by the term ratio recurrence and
/// normalized. Exposed so tests can compare sampled histograms directly.
inline std::vector<double> betabinomial_pmf(int n, double alpha, double beta) {
  if (n < 0) throw std::invalid_argument("betabinomial: n must be >= 0");
  if (alpha <= 0.0 || beta <= 0.0) {
    throw std::invalid_argument("betabinomial: alpha and beta must be positive");
  }
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  double term = 1.0;
  pmf[0] = term;
  for (int k = 0; k < n; ++k) {
    term *= (static_cast<double>(n - k) / (k + 1.0)) * ((k + alpha) / (n - k - 1 + beta));
    pmf[static_cast<std::size_t>(k) + 1] = term;
  }
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return pmf;
}

inline int betabinomial_draw(Rng& rng, int n, double alpha, double beta) {
  if (n == 0) return 0;
  const std::vector<double> pmf = betabinomial_pmf(n, alpha, beta);
  std::vector<double> cumulative(pmf.size());
  std::partial_sum(pmf.begin(), pmf.end(), cumulative.begin());
  return static_cast<int>(rng.pick_cumulative(cumulative));
}

/// One interior column split and one interior row split, each beta-binomial
/// over the interior positions so no child is empty. Children are returned
/// row major: top-left, top-right, bottom-left, bottom-right.
inline std::array<Rect, 4> sample_grid_partition(const Rect& region, Rng& rng, double alpha,
                                                 double beta) {
  if (region.width() < 2 || region.height() < 2) {
    throw RegionTooSmall("grid partition: region must be at least 2x2");
  }
  const int col = region.x0 + 1 + betabinomial_draw(rng, region.width() - 2, alpha, beta);
  const int row = region.y0 + 1 + betabinomial_draw(rng, region.height() - 2, alpha, beta);
  return {
      Rect{region.x0, region.y0, col - 1, row - 1},
      Rect{col, region.y0, region.x1, row - 1},
      Rect{region.x0, row, col - 1, region.y1},
      Rect{col, row, region.x1, region.y1},
  };
}

/// Diagonal split of a convex quadrilateral: one point on the interior of
/// each edge, the centre at the exact intersection of the two chords joining
/// opposite edge points, and one child per parent vertex.
struct DiagonalSplit {
  std::array<Quad, 4> children{};
  std::array<Vec2, 4> edge_points{};
  Vec2 centre{};
};

inline DiagonalSplit diagonal_partition(const Quad& quad, Rng& rng) {
  constexpr double kMinArea = 1e-6;
  if (!(signed_area(quad) > kMinArea) || !is_convex_ccw(quad)) {
    throw DegenerateQuad("diagonal partition: quad is degenerate or not convex/ccw");
  }

  DiagonalSplit split;
  for (int i = 0; i < 4; ++i) {
    // Interior of the edge, never a vertex.
    const double t = 1e-6 + (1.0 - 2e-6) * rng.uniform01();
    const Vec2 a = quad.v[i];
    const Vec2 b = quad.v[(i + 1) % 4];
    split.edge_points[i] = Vec2{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
  }

  const Vec2 p0 = split.edge_points[0];
  const Vec2 p1 = split.edge_points[1];
  const Vec2 p2 = split.edge_points[2];
  const Vec2 p3 = split.edge_points[3];
  const Vec2 d02{p2.x - p0.x, p2.y - p0.y};
  const Vec2 d13{p3.x - p1.x, p3.y - p1.y};
  const double denom = cross(d02, d13);
  if (std::abs(denom) < 1e-12) {
    throw DegenerateQuad("diagonal partition: chords are parallel");
  }
  const double t = cross(Vec2{p1.x - p0.x, p1.y - p0.y}, d13) / denom;
  split.centre = Vec2{p0.x + t * d02.x, p0.y + t * d02.y};

  for (int i = 0; i < 4; ++i) {
    split.children[i] =
        Quad{{quad.v[i], split.edge_points[i], split.centre, split.edge_points[(i + 3) % 4]}};
  }
  return split;
}

namespace detail {

/// Edge function evaluated with canonically ordered endpoints so the two
/// children sharing an edge compute the exact same floating-point value.
/// Returns the value oriented for the (a -> b) direction.
inline double edge_value(Vec2 a, Vec2 b, Vec2 p) {
  const bool swap = (b.x < a.x) || (b.x == a.x && b.y < a.y);
  if (swap) std::swap(a, b);
  const double e = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  return swap ? -e : e;
}

/// Top-left fill rule: boundary pixels belong to the edge whose direction
/// points left (dy < 0) or, for horizontal edges, right (dx > 0). For the two
/// opposite traversal directions of a shared edge exactly one test holds, so
/// sibling rasterizations stay disjoint.
inline bool top_left_edge(Vec2 direction) {
  return direction.y < 0.0 || (direction.y == 0.0 && direction.x > 0.0);
}

inline bool quad_covers(const Quad& q, Vec2 p) {
  for (int i = 0; i < 4; ++i) {
    const Vec2 a = q.v[i];
    const Vec2 b = q.v[(i + 1) % 4];
    const double e = edge_value(a, b, p);
    if (e > 0.0) continue;
    if (e == 0.0 && top_left_edge(Vec2{b.x - a.x, b.y - a.y})) continue;
    return false;
  }
  return true;
}

}  // namespace detail

/// Pixels whose centres (col + 0.5, row + 0.5) fall inside the region,
/// clipped to the image; quad boundaries follow the top-left fill rule.
inline PixelSet rasterize(const Region& region, int width, int height) {
  PixelSet out(width, height);
  if (const Rect* rect = std::get_if<Rect>(&region)) {
    const int x0 = std::max(rect->x0, 0);
    const int y0 = std::max(rect->y0, 0);
    const int x1 = std::min(rect->x1, width - 1);
    const int y1 = std::min(rect->y1, height - 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) out.set(x, y);
    }
    return out;
  }

  const Quad& quad = std::get<Quad>(region);
  double min_x = quad.v[0].x, max_x = quad.v[0].x;
  double min_y = quad.v[0].y, max_y = quad.v[0].y;
  for (const Vec2& v : quad.v) {
    min_x = std::min(min_x, v.x);
    max_x = std::max(max_x, v.x);
    min_y = std::min(min_y, v.y);
    max_y = std::max(max_y, v.y);
  }
  const int x0 = std::max(static_cast<int>(std::floor(min_x - 0.5)), 0);
  const int y0 = std::max(static_cast<int>(std::floor(min_y - 0.5)), 0);
  const int x1 = std::min(static_cast<int>(std::ceil(max_x)) + 1, width - 1);
  const int y1 = std::min(static_cast<int>(std::ceil(max_y)) + 1, height - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (detail::quad_covers(quad, Vec2{x + 0.5, y + 0.5})) out.set(x, y);
    }
  }
  return out;
}

/// Distributes a parent's pixels over the four diagonal children by sides of
/// the two chords. Each pixel is classified once per chord, so the result is
/// an exact disjoint cover of the parent set regardless of rounding.
inline std::array<PixelSet, 4> split_pixels_diagonal(const Quad& parent,
                                                     const DiagonalSplit& split,
                                                     const PixelSet& parent_pixels) {
  const Vec2 a0 = split.edge_points[0];
  const Vec2 a1 = split.edge_points[2];
  const Vec2 b0 = split.edge_points[1];
  const Vec2 b1 = split.edge_points[3];
  auto side_a = [&](Vec2 p) {
    return (a1.x - a0.x) * (p.y - a0.y) - (a1.y - a0.y) * (p.x - a0.x) >= 0.0;
  };
  auto side_b = [&](Vec2 p) {
    return (b1.x - b0.x) * (p.y - b0.y) - (b1.y - b0.y) * (p.x - b0.x) >= 0.0;
  };

  std::array<std::pair<bool, bool>, 4> signature;
  for (int i = 0; i < 4; ++i) signature[i] = {side_a(parent.v[i]), side_b(parent.v[i])};
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      if (signature[i] == signature[j]) {
        throw DegenerateQuad("diagonal partition: vertices not separated by chords");
      }
    }
  }

  std::array<PixelSet, 4> out{
      PixelSet(parent_pixels.width(), parent_pixels.height()),
      PixelSet(parent_pixels.width(), parent_pixels.height()),
      PixelSet(parent_pixels.width(), parent_pixels.height()),
      PixelSet(parent_pixels.width(), parent_pixels.height()),
  };
  parent_pixels.for_each([&](int x, int y) {
    const Vec2 p{x + 0.5, y + 0.5};
    const std::pair<bool, bool> s{side_a(p), side_b(p)};
    for (int i = 0; i < 4; ++i) {
      if (signature[i] == s) {
        out[i].set(x, y);
        return;
      }
    }
  });
  return out;
}

inline int region_min_side(const Region& region) {
  if (const Rect* rect = std::get_if<Rect>(&region)) {
    return std::min(rect->width(), rect->height());
  }
  const Quad& quad = std::get<Quad>(region);
  double min_x = quad.v[0].x, max_x = quad.v[0].x;
  double min_y = quad.v[0].y, max_y = quad.v[0].y;
  for (const Vec2& v : quad.v) {
    min_x = std::min(min_x, v.x);
    max_x = std::max(max_x, v.x);
    min_y = std::min(min_y, v.y);
    max_y = std::max(max_y, v.y);
  }
  return static_cast<int>(std::floor(std::min(max_x - min_x, max_y - min_y)));
}

inline bool region_can_split(const Region& region) {
  if (const Rect* rect = std::get_if<Rect>(&region)) {
    return rect->width() >= 2 && rect->height() >= 2;
  }
  const Quad& quad = std::get<Quad>(region);
  return region_min_side(region) >= 2 && signed_area(quad) > 1.0 && is_convex_ccw(quad);
}

}  // namespace cex
