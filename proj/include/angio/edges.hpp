#ifndef ANGIO_EDGES_HPP
#define ANGIO_EDGES_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "angio/error.hpp"
#include "angio/filtering.hpp"
#include "angio/raster.hpp"
#include "angio/segmentation.hpp"

namespace angio {

struct GradientField {
  FloatImage gx, gy;
  FloatImage magnitude;
  FloatImage direction;  // atan2(gy, gx), in (-pi, pi]
};

/// 3x3 Sobel pair with replicated borders.
inline GradientField sobel_gradients(const FloatImage& image) {
  const int w = image.width(), h = image.height();
  GradientField g{FloatImage(w, h), FloatImage(w, h), FloatImage(w, h), FloatImage(w, h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto v = [&](int dx, int dy) { return image.clamped(x + dx, y + dy); };
      const double gx = (v(1, -1) + 2.0 * v(1, 0) + v(1, 1)) - (v(-1, -1) + 2.0 * v(-1, 0) + v(-1, 1));
      const double gy = (v(-1, 1) + 2.0 * v(0, 1) + v(1, 1)) - (v(-1, -1) + 2.0 * v(0, -1) + v(1, -1));
      g.gx(x, y) = gx;
      g.gy(x, y) = gy;
      g.magnitude(x, y) = std::sqrt(gx * gx + gy * gy);
      g.direction(x, y) = std::atan2(gy, gx);
    }
  return g;
}

/// Nearest of the four NMS directions 0, 45, 90, 135 degrees (returned as
/// 0..3); an angle exactly halfway between two bins goes to the lower one.
inline int direction_bin(double gx, double gy) {
  double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  // Lower-bin tie rule: bin k covers (45k - 22.5, 45k + 22.5].
  int bin = static_cast<int>(std::ceil((deg - 22.5) / 45.0));
  return ((bin % 4) + 4) % 4;
}

struct CannyParams {
  double sigma = 1.0;
  double low = 0.15;   // fraction of the max gradient magnitude
  double high = 0.4;
  bool auto_high = false;  // high := Otsu level of the quantised magnitudes
};

namespace detail {
inline constexpr Point kBinStep[4] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
}

/// Gradient magnitude kept only where it is a local maximum along the
/// quantised gradient direction. A plateau of two equal pixels keeps the
/// one further along the direction.
inline FloatImage non_maximum_suppression(const GradientField& g) {
  const int w = g.magnitude.width(), h = g.magnitude.height();
  FloatImage out(w, h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double m = g.magnitude(x, y);
      if (m <= 0.0) continue;
      const Point d = detail::kBinStep[direction_bin(g.gx(x, y), g.gy(x, y))];
      const double behind = g.magnitude.get_or(x - d.x, y - d.y, 0.0);
      const double ahead = g.magnitude.get_or(x + d.x, y + d.y, 0.0);
      if (m >= behind && m > ahead) out(x, y) = m;
    }
  return out;
}

/// Keeps pixels >= high, plus pixels >= low 8-connected to them.
inline BinaryMask hysteresis(const FloatImage& suppressed, double low, double high) {
  const int w = suppressed.width(), h = suppressed.height();
  BinaryMask out(w, h);
  std::vector<Point> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (suppressed(x, y) > 0.0 && suppressed(x, y) >= high && !out(x, y)) {
        out(x, y) = 1;
        stack.push_back({x, y});
      }
  while (!stack.empty()) {
    const Point p = stack.back();
    stack.pop_back();
    for (const auto& d : kNeighbors8) {
      const Point q{p.x + d.x, p.y + d.y};
      if (!out.contains(q) || out[q]) continue;
      const double v = suppressed[q];
      if (v > 0.0 && v >= low) {
        out[q] = 1;
        stack.push_back(q);
      }
    }
  }
  return out;
}

inline BinaryMask canny(const GrayImage& image, const CannyParams& params) {
  if (!(params.sigma > 0.0)) throw Error(ErrorCode::NonPositiveSigma, "Canny sigma must be positive");
  const bool ordered = params.auto_high
                           ? params.low > 0.0 && params.low < 1.0
                           : params.low > 0.0 && params.low < params.high && params.high <= 1.0;
  if (!ordered)
    throw Error(ErrorCode::InvalidThresholdOrder, "Canny thresholds must satisfy 0 < low < high <= 1");
  const auto smoothed = convolve(image, gaussian_kernel(params.sigma));
  const auto grad = sobel_gradients(smoothed);
  const auto nms = non_maximum_suppression(grad);
  const double max = *std::max_element(grad.magnitude.data().begin(), grad.magnitude.data().end());
  if (!(max > 0.0)) return BinaryMask(image.width(), image.height());
  double high = params.high;
  if (params.auto_high) {
    try {
      high = (otsu_threshold(quantize(grad.magnitude)) + 0.5) / 255.0;
    } catch (const Error&) {
      high = params.high;
    }
    if (high <= params.low) high = std::min(1.0, params.low * 2.0);
  }
  return hysteresis(nms, params.low * max, high * max);
}

inline BinaryMask canny(const GrayImage& image, double sigma, double low, double high) {
  return canny(image, CannyParams{sigma, low, high, false});
}

}  // namespace angio

#endif  // ANGIO_EDGES_HPP
