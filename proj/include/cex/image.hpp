#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cex/error.hpp"

namespace cex {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

/// The reference value substituted for removed pixels; masking is the only
/// intervention the model permits.
using MaskingColour = Rgb;

inline constexpr MaskingColour kDefaultMaskingColour{234, 234, 234};

/// Fixed-size 8-bit RGB raster, row major, immutable by convention once built.
class Image {
 public:
  Image() = default;

  Image(int width, int height, Rgb fill = Rgb{}) : width_(width), height_(height) {
    check_dims(width, height);
    data_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < data_.size(); i += 3) {
      data_[i] = fill.r;
      data_[i + 1] = fill.g;
      data_[i + 2] = fill.b;
    }
  }

  Image(int width, int height, std::vector<std::uint8_t> rgb_bytes)
      : width_(width), height_(height), data_(std::move(rgb_bytes)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height * 3) {
      throw std::invalid_argument("image: byte buffer size does not match dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool in_bounds(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return Rgb{data_[i], data_[i + 1], data_[i + 2]};
  }

  void set(int x, int y, Rgb value) {
    const std::size_t i = index(x, y);
    data_[i] = value.r;
    data_[i + 1] = value.g;
    data_[i + 2] = value.b;
  }

  const std::vector<std::uint8_t>& bytes() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("image: dimensions must be positive");
    }
  }

  std::size_t index(int x, int y) const {
    if (!in_bounds(x, y)) throw std::out_of_range("image: pixel out of bounds");
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// A subset of pixel coordinates aligned to a raster; represents masks,
/// superpixels and explanations. Membership changes keep the cardinality
/// counter in sync.
class PixelSet {
 public:
  PixelSet() = default;

  PixelSet(int width, int height, bool value = false)
      : width_(width),
        height_(height),
        count_(value ? static_cast<std::size_t>(width) * height : 0),
        bits_(static_cast<std::size_t>(width) * height, value ? 1 : 0) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("pixelset: dimensions must be positive");
    }
  }

  static PixelSet full(int width, int height) { return PixelSet(width, height, true); }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }
  std::size_t cardinality() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  bool same_dims(const PixelSet& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool test(int x, int y) const { return bits_[index(x, y)] != 0; }

  void set(int x, int y, bool on = true) {
    const std::size_t i = index(x, y);
    if (bits_[i] != static_cast<std::uint8_t>(on)) {
      count_ += on ? 1 : -1;
      bits_[i] = on ? 1 : 0;
    }
  }

  PixelSet& operator|=(const PixelSet& other) {
    require_same_dims(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (other.bits_[i] && !bits_[i]) {
        bits_[i] = 1;
        ++count_;
      }
    }
    return *this;
  }

  PixelSet& operator&=(const PixelSet& other) {
    require_same_dims(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (bits_[i] && !other.bits_[i]) {
        bits_[i] = 0;
        --count_;
      }
    }
    return *this;
  }

  PixelSet& operator-=(const PixelSet& other) {
    require_same_dims(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (bits_[i] && other.bits_[i]) {
        bits_[i] = 0;
        --count_;
      }
    }
    return *this;
  }

  friend PixelSet operator|(PixelSet a, const PixelSet& b) { return a |= b; }
  friend PixelSet operator&(PixelSet a, const PixelSet& b) { return a &= b; }
  friend PixelSet operator-(PixelSet a, const PixelSet& b) { return a -= b; }

  PixelSet complement() const {
    PixelSet out(width_, height_);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] ? 0 : 1;
    out.count_ = bits_.size() - count_;
    return out;
  }

  std::size_t intersection_count(const PixelSet& other) const {
    require_same_dims(other);
    std::size_t n = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i) n += bits_[i] & other.bits_[i];
    return n;
  }

  bool intersects(const PixelSet& other) const {
    require_same_dims(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (bits_[i] & other.bits_[i]) return true;
    }
    return false;
  }

  /// True when every member of `other` is also a member of this set.
  bool contains(const PixelSet& other) const {
    require_same_dims(other);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if (other.bits_[i] && !bits_[i]) return false;
    }
    return true;
  }

  template <typename F>
  void for_each(F&& fn) const {
    std::size_t i = 0;
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x, ++i) {
        if (bits_[i]) fn(x, y);
      }
    }
  }

  bool operator==(const PixelSet&) const = default;

  /// FNV-1a over the membership buffer; used for dedup tables.
  std::size_t hash() const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    auto eat = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ULL;
    };
    eat(static_cast<std::uint64_t>(width_));
    eat(static_cast<std::uint64_t>(height_));
    for (std::uint8_t b : bits_) eat(b);
    return static_cast<std::size_t>(h);
  }

 private:
  std::size_t index(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) {
      throw std::out_of_range("pixelset: coordinate out of bounds");
    }
    return static_cast<std::size_t>(y) * width_ + x;
  }

  void require_same_dims(const PixelSet& other) const {
    if (!same_dims(other)) {
      throw DimensionMismatch("pixelset: dimension mismatch");
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Keeps the pixels in `keep`, replaces everything else with `colour`.
/// The input image is untouched.
inline Image apply_mask(const Image& image, const PixelSet& keep, MaskingColour colour) {
  if (keep.width() != image.width() || keep.height() != image.height()) {
    throw DimensionMismatch("apply_mask: mask dimensions differ from image");
  }
  Image out(image.width(), image.height(), colour);
  keep.for_each([&](int x, int y) { out.set(x, y, image.at(x, y)); });
  return out;
}

}  // namespace cex
