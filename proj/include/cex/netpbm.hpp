#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "cex/error.hpp"
#include "cex/image.hpp"

namespace cex {

namespace detail {

/// Token reader over a netpbm header: skips whitespace and '#' comments.
class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  bool eof() const noexcept { return pos_ >= bytes_.size(); }

  void expect_magic(char digit) {
    if (bytes_.size() < 2 || bytes_[0] != 'P' || bytes_[1] != digit) {
      throw DecodeError(DecodeError::Kind::MalformedHeader, "netpbm: bad magic number");
    }
    pos_ = 2;
  }

  int read_int(const char* what) {
    skip_separators();
    if (eof() || !std::isdigit(bytes_[pos_])) {
      throw DecodeError(DecodeError::Kind::MalformedHeader,
                        std::string("netpbm: expected ") + what);
    }
    long value = 0;
    while (!eof() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) {
        throw DecodeError(DecodeError::Kind::MalformedHeader,
                          std::string("netpbm: implausible ") + what);
      }
      ++pos_;
    }
    return static_cast<int>(value);
  }

  /// Exactly one whitespace byte terminates the header before the raster.
  void expect_single_whitespace() {
    if (eof() || !std::isspace(bytes_[pos_])) {
      throw DecodeError(DecodeError::Kind::MalformedHeader,
                        "netpbm: missing whitespace before raster data");
    }
    ++pos_;
  }

 private:
  void skip_separators() {
    while (!eof()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (!eof() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Decodes a binary PPM (P6, maxval 255). Header comments are skipped.
inline Image decode_ppm(std::span<const std::uint8_t> bytes) {
  detail::PnmHeaderReader reader(bytes);
  reader.expect_magic('6');
  const int width = reader.read_int("width");
  const int height = reader.read_int("height");
  if (width < 1 || height < 1) {
    throw DecodeError(DecodeError::Kind::MalformedHeader, "netpbm: non-positive dimensions");
  }
  const int maxval = reader.read_int("maxval");
  if (maxval != 255) {
    throw DecodeError(DecodeError::Kind::UnsupportedMaxval,
                      "netpbm: only maxval 255 is supported, got " + std::to_string(maxval));
  }
  reader.expect_single_whitespace();

  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - reader.offset() < need) {
    throw DecodeError(DecodeError::Kind::TruncatedBody,
                      "netpbm: raster truncated, need " + std::to_string(need) + " bytes, have " +
                          std::to_string(bytes.size() - reader.offset()));
  }
  std::vector<std::uint8_t> raster(bytes.begin() + reader.offset(),
                                   bytes.begin() + reader.offset() + need);
  return Image(width, height, std::move(raster));
}

inline Image decode_ppm(const std::vector<std::uint8_t>& bytes) {
  return decode_ppm(std::span<const std::uint8_t>(bytes));
}

/// Canonical header, so encode/decode round-trips bit-exactly.
inline std::vector<std::uint8_t> encode_ppm(const Image& image) {
  std::string header = "P6\n" + std::to_string(image.width()) + " " +
                       std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.bytes().begin(), image.bytes().end());
  return out;
}

/// Emits a PixelSet as bit-packed PBM (P4), 1 = member, rows padded to bytes.
inline std::vector<std::uint8_t> encode_pbm(const PixelSet& set) {
  std::string header =
      "P4\n" + std::to_string(set.width()) + " " + std::to_string(set.height()) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const int row_bytes = (set.width() + 7) / 8;
  for (int y = 0; y < set.height(); ++y) {
    std::vector<std::uint8_t> row(row_bytes, 0);
    for (int x = 0; x < set.width(); ++x) {
      if (set.test(x, y)) row[x / 8] |= static_cast<std::uint8_t>(0x80u >> (x % 8));
    }
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

inline PixelSet decode_pbm(std::span<const std::uint8_t> bytes) {
  detail::PnmHeaderReader reader(bytes);
  reader.expect_magic('4');
  const int width = reader.read_int("width");
  const int height = reader.read_int("height");
  if (width < 1 || height < 1) {
    throw DecodeError(DecodeError::Kind::MalformedHeader, "netpbm: non-positive dimensions");
  }
  reader.expect_single_whitespace();
  const std::size_t row_bytes = (static_cast<std::size_t>(width) + 7) / 8;
  if (bytes.size() - reader.offset() < row_bytes * height) {
    throw DecodeError(DecodeError::Kind::TruncatedBody, "netpbm: bitmap truncated");
  }
  PixelSet out(width, height);
  std::size_t base = reader.offset();
  for (int y = 0; y < height; ++y, base += row_bytes) {
    for (int x = 0; x < width; ++x) {
      if (bytes[base + x / 8] & (0x80u >> (x % 8))) out.set(x, y);
    }
  }
  return out;
}

inline std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_binary_file(const std::filesystem::path& path,
                              std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io: cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("io: short write to " + path.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_binary_file(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace cex
