#pragma once

#include <string>

#include "vqasynth/corpus.hpp"
#include "vqasynth/image.hpp"

namespace vqasynth::vision {

struct AnnotationStyle {
  Rgb color{255, 0, 0};
  int thickness = 3;
};

// Draws a hollow rectangle on the inside edge of `box`: every pixel of the
// box whose Chebyshev distance to the box outline is < thickness. Pixels
// outside that band are untouched. The box is clamped to the image first;
// an empty clamped box throws ImageError.
void annotate_bbox(Image& image, const corpus::SceneGraphObject& box, const AnnotationStyle& style);

// Byte-level form: decodes, draws, re-encodes as PNG.
Bytes annotate_bbox(std::span<const std::uint8_t> image_bytes, const corpus::SceneGraphObject& box,
                    const AnnotationStyle& style);

// Base64 of a PNG re-encoding of `image_bytes`.
std::string encode_for_transport(std::span<const std::uint8_t> image_bytes);

std::string to_data_url(const std::string& base64_png);

}  // namespace vqasynth::vision
