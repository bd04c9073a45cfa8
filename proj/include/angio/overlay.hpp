#ifndef ANGIO_OVERLAY_HPP
#define ANGIO_OVERLAY_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "angio/error.hpp"
#include "angio/raster.hpp"

namespace angio {

enum class LayerKind { Mask, Path, Points };

/// One compositing layer. Mask layers read `mask`; path and point layers
/// read `pixels` (a path is drawn exactly as the listed pixels).
struct OverlayLayer {
  LayerKind kind = LayerKind::Mask;
  BinaryMask mask;
  std::vector<Point> pixels;
  Rgb color{255, 0, 0};
  double opacity = 1.0;

  static OverlayLayer from_mask(BinaryMask mask, Rgb color, double opacity = 1.0) {
    return {LayerKind::Mask, std::move(mask), {}, color, opacity};
  }
  static OverlayLayer from_path(std::vector<Point> pixels, Rgb color, double opacity = 1.0) {
    return {LayerKind::Path, {}, std::move(pixels), color, opacity};
  }
  static OverlayLayer from_points(std::vector<Point> pixels, Rgb color, double opacity = 1.0) {
    return {LayerKind::Points, {}, std::move(pixels), color, opacity};
  }
};

inline RgbImage gray_to_rgb(const GrayImage& base) {
  RgbImage out(base.width(), base.height());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto v = base.data()[i];
    out.data()[i] = {v, v, v};
  }
  return out;
}

namespace detail {
inline std::uint8_t blend(std::uint8_t layer, std::uint8_t base, double alpha) {
  return static_cast<std::uint8_t>(std::floor(alpha * layer + (1.0 - alpha) * base + 0.5));
}
inline void blend_pixel(Rgb& px, Rgb color, double alpha) {
  px = {blend(color.r, px.r, alpha), blend(color.g, px.g, alpha), blend(color.b, px.b, alpha)};
}
}  // namespace detail

/// Renders `base` as gray RGB and alpha-composites the layers in order,
/// c_out = round(alpha * c_layer + (1 - alpha) * c_base) per channel.
inline RgbImage render_overlay(const GrayImage& base, const std::vector<OverlayLayer>& layers) {
  RgbImage out = gray_to_rgb(base);
  for (const auto& layer : layers) {
    if (!(layer.opacity >= 0.0 && layer.opacity <= 1.0))
      throw Error(ErrorCode::InvalidParams, "overlay opacity must lie in [0, 1]");
    if (layer.kind == LayerKind::Mask) {
      if (!layer.mask.same_shape(base))
        throw Error(ErrorCode::OutOfBounds, "mask layer does not match the base image size");
      for (std::size_t i = 0; i < out.size(); ++i)
        if (layer.mask.data()[i]) detail::blend_pixel(out.data()[i], layer.color, layer.opacity);
      continue;
    }
    for (const auto& p : layer.pixels)
      if (!base.contains(p))
        throw Error(ErrorCode::OutOfBounds, "overlay pixel (" + std::to_string(p.x) + ", " +
                                                std::to_string(p.y) + ") is outside the image");
    // A pixel listed twice is still composited once.
    BinaryMask covered(base.width(), base.height());
    for (const auto& p : layer.pixels) {
      if (covered[p]) continue;
      covered[p] = 1;
      detail::blend_pixel(out[p], layer.color, layer.opacity);
    }
  }
  return out;
}

}  // namespace angio

#endif  // ANGIO_OVERLAY_HPP
