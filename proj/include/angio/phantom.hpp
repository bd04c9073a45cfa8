#ifndef ANGIO_PHANTOM_HPP
#define ANGIO_PHANTOM_HPP

// Synthetic test images with known geometry.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "angio/geometry.hpp"
#include "angio/raster.hpp"

namespace angio::phantom {

/// Pixels whose centre lies within width/2 of the infinite line through
/// `a` and `b`.
inline BinaryMask line_tube_mask(int image_width, int image_height, Point2 a, Point2 b, double tube_width) {
  BinaryMask mask(image_width, image_height);
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const double nx = -(b.y - a.y) / len, ny = (b.x - a.x) / len;
  const double half = tube_width / 2.0;
  for (int y = 0; y < image_height; ++y)
    for (int x = 0; x < image_width; ++x) {
      const double d = std::abs((x - a.x) * nx + (y - a.y) * ny);
      mask(x, y) = d <= half + 1e-9;
    }
  return mask;
}

inline GrayImage paint(const BinaryMask& mask, std::uint8_t background, std::uint8_t vessel) {
  GrayImage out(mask.width(), mask.height(), background);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask.data()[i]) out.data()[i] = vessel;
  return out;
}

/// Horizontal dark tube across the full width, centred on row height / 2.
/// With the defaults: 128x128, rows 61..67 dark.
inline GrayImage horizontal_tube(int width = 128, int height = 128, int tube_width = 7,
                                 std::uint8_t background = 200, std::uint8_t vessel = 50) {
  const double cy = height / 2;
  return paint(line_tube_mask(width, height, {0.0, cy}, {1.0, cy}, tube_width), background, vessel);
}

/// Vertical dark bar, centred on column width / 2.
inline GrayImage vertical_bar(int width = 128, int height = 128, int bar_width = 7,
                              std::uint8_t background = 200, std::uint8_t vessel = 50) {
  const double cx = width / 2;
  return paint(line_tube_mask(width, height, {cx, 0.0}, {cx, 1.0}, bar_width), background, vessel);
}

/// Crude coronary-like frame: bright, slowly varying background with a
/// branching tree of dark tubes of decreasing width and mild Gaussian noise.
/// Deterministic for a given seed.
inline GrayImage synthetic_angiogram(int size = 512, std::uint32_t seed = 7) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FloatImage img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      img(x, y) = 190.0 + 25.0 * std::sin(2.0 * std::numbers::pi * x / (1.7 * size)) -
                  15.0 * static_cast<double>(y) / size;

  struct Branch {
    Point2 start;
    double angle, width;
    int depth;
  };
  std::vector<Branch> todo{{{size * 0.5, size * 0.05}, std::numbers::pi / 2, 9.0, 0}};
  while (!todo.empty()) {
    Branch br = todo.back();
    todo.pop_back();
    Point2 p = br.start;
    double angle = br.angle;
    const int steps = static_cast<int>(size * (0.45 - 0.08 * br.depth));
    for (int s = 0; s < steps; ++s) {
      angle += (unit(rng) - 0.5) * 0.08;
      p = {p.x + std::cos(angle), p.y + std::sin(angle)};
      if (p.x < 4 || p.y < 4 || p.x > size - 5 || p.y > size - 5) break;
      const double r = br.width / 2.0;
      const int r_i = static_cast<int>(std::ceil(r)) + 1;
      for (int dy = -r_i; dy <= r_i; ++dy)
        for (int dx = -r_i; dx <= r_i; ++dx) {
          const int x = static_cast<int>(std::lround(p.x)) + dx, y = static_cast<int>(std::lround(p.y)) + dy;
          if (!img.contains(x, y)) continue;
          const double d = std::hypot(x - p.x, y - p.y);
          if (d > r) continue;
          // Attenuation proportional to the chord through a cylinder.
          const double depth = 2.0 * std::sqrt(r * r - d * d) / br.width;
          img(x, y) = std::min(img(x, y), 190.0 - 120.0 * depth);
        }
      if (br.depth < 3 && s > 0 && s % static_cast<int>(size * 0.12) == 0 && br.width > 3.0) {
        const double turn = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 0.4 * unit(rng));
        todo.push_back({p, angle + turn, br.width * 0.7, br.depth + 1});
      }
    }
  }
  std::normal_distribution<double> noise(0.0, 4.0);
  GrayImage out(size, size);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(img.data()[i] + noise(rng)), 0L, 255L));
  return out;
}

}  // namespace angio::phantom

#endif  // ANGIO_PHANTOM_HPP
