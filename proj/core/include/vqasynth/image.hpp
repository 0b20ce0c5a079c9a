#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vqasynth::vision {

using Bytes = std::vector<std::uint8_t>;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB raster, row-major.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const noexcept;
  void set(int x, int y, Rgb c) noexcept;

  std::span<const std::uint8_t> data() const noexcept { return pixels_; }
  std::span<std::uint8_t> data() noexcept { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct Dimensions {
  int width = 0;
  int height = 0;
};

// PNG or JPEG, detected by signature. Throws ImageError.
Image decode_image(std::span<const std::uint8_t> bytes);

// Lossless PNG: no filtering, fixed compression level, no metadata chunks.
Bytes encode_png(const Image& image);

// Reads only the header.
Dimensions probe_dimensions(std::span<const std::uint8_t> bytes);

Bytes read_image_file(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
Bytes base64_decode(std::string_view text);

}  // namespace vqasynth::vision
