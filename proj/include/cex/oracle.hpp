#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "cex/classifier.hpp"
#include "cex/error.hpp"
#include "cex/image.hpp"

namespace cex {

/// Small tiling of the image into cells, the unit of exhaustive enumeration.
/// n is capped at 20 to keep the 2^n verdict table tractable.
struct CellGrid {
  Image image;
  ClassifierHandle classifier;
  int label = 0;
  std::vector<PixelSet> cells;
};

inline void validate_cell_grid(const CellGrid& grid) {
  if (grid.cells.empty() || grid.cells.size() > 20) {
    throw std::invalid_argument("cell grid: need between 1 and 20 cells");
  }
  PixelSet covered(grid.image.width(), grid.image.height());
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (grid.cells[i].width() != grid.image.width() ||
        grid.cells[i].height() != grid.image.height()) {
      throw DimensionMismatch("cell grid: cell dimensions differ from image");
    }
    if (covered.intersects(grid.cells[i])) {
      throw std::invalid_argument("cell grid: cells overlap");
    }
    covered |= grid.cells[i];
  }
  if (covered.cardinality() != grid.image.pixel_count()) {
    throw std::invalid_argument("cell grid: cells do not cover the image");
  }
}

/// Memoized verdicts over keep-subsets of the cells: at most 2^n classifier
/// calls no matter how many subset queries the callers make.
class SubsetVerdicts {
 public:
  SubsetVerdicts(const CellGrid& grid, MaskingColour colour)
      : grid_(grid), colour_(colour), memo_(std::size_t{1} << grid.cells.size(), -1) {}

  bool sufficient(std::uint32_t keep_mask) {
    std::int8_t& slot = memo_[keep_mask];
    if (slot < 0) {
      PixelSet keep(grid_.image.width(), grid_.image.height());
      for (std::size_t i = 0; i < grid_.cells.size(); ++i) {
        if (keep_mask & (1u << i)) keep |= grid_.cells[i];
      }
      const ClassifierVerdict verdict =
          grid_.classifier->classify(apply_mask(grid_.image, keep, colour_));
      slot = verdict.label == grid_.label ? 1 : 0;
    }
    return slot == 1;
  }

  /// Label preserved when exactly the cells in `masked` are masked.
  bool preserved_under_masking(std::uint32_t masked) {
    const std::uint32_t all = (std::uint32_t{1} << grid_.cells.size()) - 1;
    return sufficient(all & ~masked);
  }

 private:
  const CellGrid& grid_;
  MaskingColour colour_;
  std::vector<std::int8_t> memo_;
};

/// All minimal sufficient cell subsets, as bitmasks in ascending order.
/// The result is an antichain: no returned subset contains another.
inline std::vector<std::uint32_t> enumerate_exact_explanations(const CellGrid& grid,
                                                               MaskingColour colour) {
  validate_cell_grid(grid);
  SubsetVerdicts verdicts(grid, colour);
  const std::uint32_t limit = std::uint32_t{1} << grid.cells.size();
  std::vector<std::uint32_t> minimal;
  for (std::uint32_t subset = 0; subset < limit; ++subset) {
    if (!verdicts.sufficient(subset)) continue;
    bool is_minimal = true;
    for (std::uint32_t bit = 1; bit < limit; bit <<= 1) {
      if ((subset & bit) && verdicts.sufficient(subset & ~bit)) {
        is_minimal = false;
        break;
      }
    }
    if (is_minimal) minimal.push_back(subset);
  }
  return minimal;
}

/// Exact degree of responsibility of one cell, by brute force over witness
/// sets: 1/(k+1) for the smallest witness of size k, 0 when not a cause.
inline double exact_responsibility(const CellGrid& grid, int cell, MaskingColour colour) {
  validate_cell_grid(grid);
  if (cell < 0 || static_cast<std::size_t>(cell) >= grid.cells.size()) {
    throw std::invalid_argument("exact_responsibility: cell index out of range");
  }
  SubsetVerdicts verdicts(grid, colour);
  const int n = static_cast<int>(grid.cells.size());
  const std::uint32_t limit = std::uint32_t{1} << n;
  const std::uint32_t self = std::uint32_t{1} << cell;

  for (int k = 0; k < n; ++k) {
    for (std::uint32_t witness = 0; witness < limit; ++witness) {
      if ((witness & self) || std::popcount(witness) != k) continue;
      bool witness_ok = true;
      for (std::uint32_t sub = witness;; sub = (sub - 1) & witness) {
        if (!verdicts.preserved_under_masking(sub)) {
          witness_ok = false;
          break;
        }
        if (sub == 0) break;
      }
      if (witness_ok && !verdicts.preserved_under_masking(witness | self)) {
        return 1.0 / (k + 1);
      }
    }
  }
  return 0.0;
}

/// Sperner bound C(n, floor(n/2)) on the size of any antichain over n cells.
inline std::uint64_t sperner_bound(int n) {
  if (n < 1) throw std::invalid_argument("sperner_bound: n must be >= 1");
  const int k = n / 2;
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return result;
}

/// Union of the cells selected by a bitmask.
inline PixelSet cells_union(const CellGrid& grid, std::uint32_t mask) {
  PixelSet out(grid.image.width(), grid.image.height());
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (mask & (1u << i)) out |= grid.cells[i];
  }
  return out;
}

/// Smallest pixel count among the minimal explanations.
inline std::size_t min_explanation_pixels(const CellGrid& grid,
                                          const std::vector<std::uint32_t>& minimal_subsets) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::uint32_t mask : minimal_subsets) {
    best = std::min(best, cells_union(grid, mask).cardinality());
  }
  return best;
}

}  // namespace cex
