#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace framelog {

// Interleaved 8-bit pixels, row-major, no padding.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  std::size_t expected_size() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(channels);
  }
  bool valid() const {
    return width > 0 && height > 0 && (channels == 1 || channels == 3) &&
           pixels.size() == expected_size();
  }

  friend bool operator==(const Image&, const Image&) = default;
};

// Target size of a scaled dimension: round(native * scale), never below 1.
int scaled_dimension(int native, double scale);

// Nearest-neighbour resampling. Bit-deterministic for a given (src, scale).
Image scale_nearest(const Image& src, double scale);

// Lowercase hex SHA-256 of the raw pixel buffer, prefixed by the geometry so
// buffers of equal bytes but different shapes never share an address.
std::string pixel_digest(const Image& image);

// Baseline JPEG. quality is in (0, 1]. Throws Error(kEncodeFailure).
std::vector<std::uint8_t> encode_jpeg(const Image& image, double quality);

// Throws Error(kEncodeFailure) on malformed input.
Image decode_jpeg(std::span<const std::uint8_t> bytes);

}  // namespace framelog
