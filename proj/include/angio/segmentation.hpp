#ifndef ANGIO_SEGMENTATION_HPP
#define ANGIO_SEGMENTATION_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "angio/error.hpp"
#include "angio/raster.hpp"

namespace angio {

// ---------------------------------------------------------------------------
// Histogram and Otsu
// ---------------------------------------------------------------------------

struct Histogram256 {
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t total = 0;

  void add(std::uint8_t level, std::uint64_t n = 1) {
    counts[level] += n;
    total += n;
  }
};

inline Histogram256 histogram(const GrayImage& image) {
  Histogram256 h;
  for (auto v : image.data()) h.add(v);
  return h;
}

/// Min-max quantisation of a real-valued image to 256 levels.
inline GrayImage quantize(const FloatImage& image) { return rescale_to_gray(image); }

namespace detail {

using u128 = unsigned __int128;

// Exact comparison num_a / den_a > num_b / den_b for positive denominators.
inline bool fraction_greater(u128 num_a, u128 den_a, u128 num_b, u128 den_b) {
  const u128 qa = num_a / den_a, qb = num_b / den_b;
  if (qa != qb) return qa > qb;
  return (num_a % den_a) * den_b > (num_b % den_b) * den_a;
}

}  // namespace detail

/// Level t maximising the between-class variance of {<= t} vs {> t}.
/// The variance is compared as the exact rational
/// (N*S0 - W0*S)^2 / (W0*W1), so ties are real ties; the smallest maximising
/// level wins.
inline int otsu_threshold(const Histogram256& h) {
  int distinct = 0;
  for (auto c : h.counts) distinct += c > 0;
  if (distinct < 2)
    throw Error(ErrorCode::DegenerateHistogram, "Otsu threshold needs at least two distinct levels");
  if (h.total > (std::uint64_t{1} << 24))
    throw Error(ErrorCode::InvalidParams, "histogram total exceeds the exact-arithmetic range");

  using detail::u128;
  const auto n = static_cast<std::int64_t>(h.total);
  std::int64_t sum = 0;
  for (int i = 0; i < 256; ++i) sum += static_cast<std::int64_t>(i) * static_cast<std::int64_t>(h.counts[static_cast<std::size_t>(i)]);

  int best_t = 0;
  u128 best_num = 0, best_den = 1;
  std::int64_t w0 = 0, s0 = 0;
  for (int t = 0; t < 256; ++t) {
    w0 += static_cast<std::int64_t>(h.counts[static_cast<std::size_t>(t)]);
    s0 += static_cast<std::int64_t>(t) * static_cast<std::int64_t>(h.counts[static_cast<std::size_t>(t)]);
    const std::int64_t w1 = n - w0;
    if (w0 == 0 || w1 == 0) continue;
    const __int128 d = static_cast<__int128>(n) * s0 - static_cast<__int128>(w0) * sum;
    const u128 num = static_cast<u128>(d < 0 ? -d : d) * static_cast<u128>(d < 0 ? -d : d);
    const u128 den = static_cast<u128>(w0) * static_cast<u128>(w1);
    if (detail::fraction_greater(num, den, best_num, best_den)) {
      best_t = t;
      best_num = num;
      best_den = den;
    }
  }
  return best_t;
}

inline int otsu_threshold(const GrayImage& image) { return otsu_threshold(histogram(image)); }

/// Real-valued input is min-max quantised first; the level refers to the
/// quantised image.
inline int otsu_threshold(const FloatImage& image) { return otsu_threshold(quantize(image)); }

/// Foreground is strictly above t.
inline BinaryMask binarize(const GrayImage& image, int t) {
  BinaryMask out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) out.data()[i] = image.data()[i] > t;
  return out;
}

inline BinaryMask binarize(const FloatImage& image, int t) { return binarize(quantize(image), t); }

// ---------------------------------------------------------------------------
// Binary morphology
// ---------------------------------------------------------------------------

enum class SeShape { Square, Disk };

/// Centred, symmetric structuring element.
struct StructuringElement {
  SeShape shape = SeShape::Square;
  int radius = 1;
  std::vector<Point> offsets;

  static StructuringElement make(SeShape shape, int radius) {
    if (radius < 1) throw Error(ErrorCode::InvalidParams, "structuring element radius must be >= 1");
    StructuringElement se{shape, radius, {}};
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        if (shape == SeShape::Square || dx * dx + dy * dy <= radius * radius)
          se.offsets.push_back({dx, dy});
    return se;
  }
  static StructuringElement square(int radius) { return make(SeShape::Square, radius); }
  static StructuringElement disk(int radius) { return make(SeShape::Disk, radius); }
};

enum class MorphOp { Erode, Dilate, Open, Close };

inline BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      bool fits = true;
      for (const auto& o : se.offsets)
        if (!mask.get_or(x + o.x, y + o.y, 0)) {
          fits = false;
          break;
        }
      out(x, y) = fits;
    }
  return out;
}

inline BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      for (const auto& o : se.offsets)
        if (out.contains(x + o.x, y + o.y)) out(x + o.x, y + o.y) = 1;
    }
  return out;
}

/// Pixels outside the image count as background for every operation.
inline BinaryMask morphology(const BinaryMask& mask, const StructuringElement& se, MorphOp op) {
  switch (op) {
    case MorphOp::Erode: return erode(mask, se);
    case MorphOp::Dilate: return dilate(mask, se);
    case MorphOp::Open: return dilate(erode(mask, se), se);
    case MorphOp::Close: return erode(dilate(mask, se), se);
  }
  return mask;
}

/// Component labels (0 = background, 1.. in raster order of first pixel).
inline Raster<std::int32_t> label_components(const BinaryMask& mask, int connectivity,
                                             std::vector<std::size_t>* sizes = nullptr) {
  if (connectivity != 4 && connectivity != 8)
    throw Error(ErrorCode::InvalidParams, "connectivity must be 4 or 8");
  Raster<std::int32_t> labels(mask.width(), mask.height(), 0);
  if (sizes) sizes->assign(1, 0);
  std::int32_t next = 0;
  std::vector<Point> stack;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y) || labels(x, y)) continue;
      ++next;
      std::size_t area = 0;
      labels(x, y) = next;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        ++area;
        for (int k = 0; k < 8; ++k) {
          if (connectivity == 4 && k % 2 == 1) continue;
          const Point q{p.x + kNeighbors8[k].x, p.y + kNeighbors8[k].y};
          if (mask.contains(q) && mask[q] && !labels[q]) {
            labels[q] = next;
            stack.push_back(q);
          }
        }
      }
      if (sizes) sizes->push_back(area);
    }
  return labels;
}

/// Drops components with fewer than `min_size` pixels.
inline BinaryMask remove_small_components(const BinaryMask& mask, std::size_t min_size,
                                          int connectivity = 8) {
  if (min_size == 0) return mask;
  std::vector<std::size_t> sizes;
  const auto labels = label_components(mask, connectivity, &sizes);
  BinaryMask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const auto label = labels.data()[i];
    out.data()[i] = label > 0 && sizes[static_cast<std::size_t>(label)] >= min_size;
  }
  return out;
}

}  // namespace angio

#endif  // ANGIO_SEGMENTATION_HPP
