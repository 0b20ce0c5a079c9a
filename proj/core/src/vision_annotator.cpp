#include "vqasynth/vision_annotator.hpp"

#include <algorithm>

#include "vqasynth/errors.hpp"

namespace vqasynth::vision {

namespace {

void fill_rect(Image& image, int x0, int y0, int x1, int y1, Rgb color) {
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) image.set(x, y, color);
  }
}

}  // namespace

void annotate_bbox(Image& image, const corpus::SceneGraphObject& box, const AnnotationStyle& style) {
  if (style.thickness < 1) throw ImageError("annotation thickness must be >= 1");
  const auto clamped = corpus::clamp_to_image(box, image.width(), image.height());
  if (!clamped || clamped->w <= 0 || clamped->h <= 0) {
    throw ImageError("bounding box for '" + box.name + "' has zero area after clamping");
  }
  const int x0 = clamped->x;
  const int y0 = clamped->y;
  const int x1 = clamped->x + clamped->w;
  const int y1 = clamped->y + clamped->h;
  const int t = style.thickness;

  // Top and bottom strips span the full width; left and right fill the rest.
  fill_rect(image, x0, y0, x1, std::min(y0 + t, y1), style.color);
  fill_rect(image, x0, std::max(y1 - t, y0), x1, y1, style.color);
  fill_rect(image, x0, y0, std::min(x0 + t, x1), y1, style.color);
  fill_rect(image, std::max(x1 - t, x0), y0, x1, y1, style.color);
}

Bytes annotate_bbox(std::span<const std::uint8_t> image_bytes, const corpus::SceneGraphObject& box,
                    const AnnotationStyle& style) {
  Image image = decode_image(image_bytes);
  annotate_bbox(image, box, style);
  return encode_png(image);
}

std::string encode_for_transport(std::span<const std::uint8_t> image_bytes) {
  return base64_encode(encode_png(decode_image(image_bytes)));
}

std::string to_data_url(const std::string& base64_png) { return "data:image/png;base64," + base64_png; }

}  // namespace vqasynth::vision
