#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "cex/error.hpp"
#include "cex/image.hpp"

namespace cex {

struct ClassifierVerdict {
  int label = 0;
  double confidence = 0.0;  // in [0, 1]

  bool operator==(const ClassifierVerdict&) const = default;
};

/// Uniform classification contract. Providers implement do_classify; the
/// public entry point keeps a monotone invocation counter so pipelines can
/// account for their call budget exactly.
class Classifier {
 public:
  virtual ~Classifier() = default;

  ClassifierVerdict classify(const Image& image) {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_classify(image);
  }

  /// Batched classification; providers may override with something faster.
  virtual std::vector<ClassifierVerdict> classify_many(std::span<const Image> images) {
    std::vector<ClassifierVerdict> out;
    out.reserve(images.size());
    for (const Image& image : images) out.push_back(classify(image));
    return out;
  }

  std::uint64_t call_count() const noexcept { return calls_.load(std::memory_order_relaxed); }

 private:
  virtual ClassifierVerdict do_classify(const Image& image) = 0;

  std::atomic<std::uint64_t> calls_{0};
};

using ClassifierHandle = std::shared_ptr<Classifier>;

namespace detail {

class ConstantClassifier final : public Classifier {
 public:
  explicit ConstantClassifier(int label, double confidence)
      : verdict_{label, confidence} {}

 private:
  ClassifierVerdict do_classify(const Image&) override { return verdict_; }

  ClassifierVerdict verdict_;
};

class GreenCountClassifier final : public Classifier {
 public:
  GreenCountClassifier(std::size_t threshold, Rgb green)
      : threshold_(threshold), green_(green) {}

 private:
  ClassifierVerdict do_classify(const Image& image) override {
    std::size_t count = 0;
    const auto& bytes = image.bytes();
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
      if (bytes[i] == green_.r && bytes[i + 1] == green_.g && bytes[i + 2] == green_.b) {
        ++count;
      }
    }
    return ClassifierVerdict{count >= threshold_ ? 1 : 0, 1.0};
  }

  std::size_t threshold_;
  Rgb green_;
};

class PatchOrClassifier final : public Classifier {
 public:
  PatchOrClassifier(std::vector<PixelSet> patches, Image reference)
      : patches_(std::move(patches)), reference_(std::move(reference)) {}

 private:
  ClassifierVerdict do_classify(const Image& image) override {
    if (image.width() != reference_.width() || image.height() != reference_.height()) {
      throw ClassifierError(ClassifierError::Kind::DimensionRejected,
                            "patch_or: input dimensions differ from reference");
    }
    for (const PixelSet& patch : patches_) {
      bool intact = true;
      patch.for_each([&](int x, int y) {
        if (image.at(x, y) != reference_.at(x, y)) intact = false;
      });
      if (intact) return ClassifierVerdict{1, 1.0};
    }
    return ClassifierVerdict{0, 1.0};
  }

  std::vector<PixelSet> patches_;
  Image reference_;
};

/// Counts pixels inside `region` that still match the reference; label 1 iff
/// at least `threshold` of them do.
class MatchCountClassifier final : public Classifier {
 public:
  MatchCountClassifier(PixelSet region, std::size_t threshold, Image reference)
      : region_(std::move(region)), threshold_(threshold), reference_(std::move(reference)) {}

 private:
  ClassifierVerdict do_classify(const Image& image) override {
    if (image.width() != reference_.width() || image.height() != reference_.height()) {
      throw ClassifierError(ClassifierError::Kind::DimensionRejected,
                            "match_count: input dimensions differ from reference");
    }
    std::size_t count = 0;
    region_.for_each([&](int x, int y) {
      if (image.at(x, y) == reference_.at(x, y)) ++count;
    });
    return ClassifierVerdict{count >= threshold_ ? 1 : 0, 1.0};
  }

  PixelSet region_;
  std::size_t threshold_;
  Image reference_;
};

/// Boolean function of which cells are still intact, given as a truth table
/// indexed by the intact-cell bitmask. Ground truth for exact verification.
class CellTableClassifier final : public Classifier {
 public:
  CellTableClassifier(std::vector<PixelSet> cells, Image reference, std::vector<int> table)
      : cells_(std::move(cells)), reference_(std::move(reference)), table_(std::move(table)) {
    if (table_.size() != (std::size_t{1} << cells_.size())) {
      throw std::invalid_argument("cell_table: table size must be 2^cells");
    }
  }

 private:
  ClassifierVerdict do_classify(const Image& image) override {
    if (image.width() != reference_.width() || image.height() != reference_.height()) {
      throw ClassifierError(ClassifierError::Kind::DimensionRejected,
                            "cell_table: input dimensions differ from reference");
    }
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      bool intact = true;
      cells_[i].for_each([&](int x, int y) {
        if (image.at(x, y) != reference_.at(x, y)) intact = false;
      });
      if (intact) mask |= 1u << i;
    }
    return ClassifierVerdict{table_[mask], 1.0};
  }

  std::vector<PixelSet> cells_;
  Image reference_;
  std::vector<int> table_;
};

/// Adds a fixed artificial latency per call; used for throughput tests.
class LatencyClassifier final : public Classifier {
 public:
  LatencyClassifier(ClassifierHandle inner, std::chrono::microseconds delay)
      : inner_(std::move(inner)), delay_(delay) {}

 private:
  ClassifierVerdict do_classify(const Image& image) override {
    std::this_thread::sleep_for(delay_);
    return inner_->classify(image);
  }

  ClassifierHandle inner_;
  std::chrono::microseconds delay_;
};

}  // namespace detail

inline ClassifierHandle make_constant_classifier(int label = 1, double confidence = 1.0) {
  return std::make_shared<detail::ConstantClassifier>(label, confidence);
}

/// Label 1 iff the count of pixels exactly equal to `green` reaches the
/// threshold, else 0. Confidence is always 1.
inline ClassifierHandle make_green_count_classifier(std::size_t threshold,
                                                    Rgb green = Rgb{0, 255, 0}) {
  return std::make_shared<detail::GreenCountClassifier>(threshold, green);
}

/// Label 1 iff at least one patch matches the reference image exactly.
/// Patches must be pairwise disjoint and nonempty.
inline ClassifierHandle make_patch_or_classifier(std::vector<PixelSet> patches,
                                                 Image reference) {
  if (patches.empty()) throw std::invalid_argument("patch_or: need at least one patch");
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (patches[i].empty()) throw std::invalid_argument("patch_or: empty patch");
    if (patches[i].width() != reference.width() || patches[i].height() != reference.height()) {
      throw DimensionMismatch("patch_or: patch dimensions differ from reference");
    }
    for (std::size_t j = i + 1; j < patches.size(); ++j) {
      if (patches[i].intersects(patches[j])) {
        throw std::invalid_argument("patch_or: overlapping patches");
      }
    }
  }
  return std::make_shared<detail::PatchOrClassifier>(std::move(patches), std::move(reference));
}

inline ClassifierHandle make_match_count_classifier(PixelSet region, std::size_t threshold,
                                                    Image reference) {
  if (region.width() != reference.width() || region.height() != reference.height()) {
    throw DimensionMismatch("match_count: region dimensions differ from reference");
  }
  return std::make_shared<detail::MatchCountClassifier>(std::move(region), threshold,
                                                        std::move(reference));
}

inline ClassifierHandle make_cell_table_classifier(std::vector<PixelSet> cells, Image reference,
                                                   std::vector<int> table) {
  return std::make_shared<detail::CellTableClassifier>(std::move(cells), std::move(reference),
                                                       std::move(table));
}

inline ClassifierHandle make_latency_classifier(ClassifierHandle inner,
                                                std::chrono::microseconds delay) {
  return std::make_shared<detail::LatencyClassifier>(std::move(inner), delay);
}

}  // namespace cex
