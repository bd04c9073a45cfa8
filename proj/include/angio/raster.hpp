#ifndef ANGIO_RASTER_HPP
#define ANGIO_RASTER_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "angio/error.hpp"

namespace angio {

/// Integer pixel coordinate; origin top-left, x rightward, y downward.
struct Point {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(const Point&, const Point&) = default;
  friend constexpr auto operator<=>(const Point& a, const Point& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

namespace detail {
template <typename T>
using storage_t = std::conditional_t<std::is_same_v<T, bool>, std::uint8_t, T>;
}

/// Dense row-major 2D raster. `bool` rasters are stored as one byte per
/// pixel holding 0 or 1 so that spans over the data stay contiguous.
template <typename T>
class Raster {
 public:
  using value_type = detail::storage_t<T>;

  Raster() = default;

  Raster(int width, int height, value_type fill = value_type{})
      : width_(width), height_(height) {
    if (width < 1 || height < 1)
      throw Error(ErrorCode::ZeroDimension,
                  "raster dimensions must be positive, got " + std::to_string(width) + "x" +
                      std::to_string(height));
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Raster(int width, int height, std::vector<value_type> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1)
      throw Error(ErrorCode::ZeroDimension, "raster dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw Error(ErrorCode::InvalidParams, "raster data length does not match width*height");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool contains(Point p) const noexcept { return contains(p.x, p.y); }

  value_type& operator()(int x, int y) { return data_[index(x, y)]; }
  const value_type& operator()(int x, int y) const { return data_[index(x, y)]; }
  value_type& operator[](Point p) { return data_[index(p.x, p.y)]; }
  const value_type& operator[](Point p) const { return data_[index(p.x, p.y)]; }

  /// Edge-replicated read.
  const value_type& clamped(int x, int y) const {
    return data_[index(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1))];
  }

  /// Read with a constant outside the image.
  value_type get_or(int x, int y, value_type outside) const {
    return contains(x, y) ? data_[index(x, y)] : outside;
  }

  std::span<value_type> data() noexcept { return data_; }
  std::span<const value_type> data() const noexcept { return data_; }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  bool same_shape(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }
  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return same_shape(other.width(), other.height());
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<value_type> data_;
};

using GrayImage = Raster<std::uint8_t>;
using FloatImage = Raster<double>;
using BinaryMask = Raster<bool>;
using RgbImage = Raster<Rgb>;

template <typename T>
FloatImage to_float(const Raster<T>& image) {
  FloatImage out(image.width(), image.height());
  std::transform(image.data().begin(), image.data().end(), out.data().begin(),
                 [](auto v) { return static_cast<double>(v); });
  return out;
}

/// Min-max rescale to [0, 255] with round-half-up; constant images map to 0.
inline GrayImage rescale_to_gray(const FloatImage& image) {
  const auto [lo, hi] = std::minmax_element(image.data().begin(), image.data().end());
  GrayImage out(image.width(), image.height(), 0);
  const double min = *lo, range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < image.size(); ++i)
    out.data()[i] =
        static_cast<std::uint8_t>(std::floor((image.data()[i] - min) / range * 255.0 + 0.5));
  return out;
}

inline std::size_t count(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count(mask.data().begin(), mask.data().end(), 1));
}

inline BinaryMask complement(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  std::transform(mask.data().begin(), mask.data().end(), out.data().begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v ? 0 : 1; });
  return out;
}

/// a ⊆ b
inline bool is_subset(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.data()[i] && !b.data()[i]) return false;
  return true;
}

template <typename T>
Raster<T> transpose(const Raster<T>& image) {
  Raster<T> out(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) out(y, x) = image(x, y);
  return out;
}

/// Clockwise quarter turn: (x, y) -> (h - 1 - y, x).
template <typename T>
Raster<T> rotate90(const Raster<T>& image) {
  Raster<T> out(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) out(image.height() - 1 - y, x) = image(x, y);
  return out;
}

inline constexpr Point kNeighbors8[8] = {{1, 0},  {1, 1},   {0, 1},  {-1, 1},
                                         {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
inline constexpr Point kNeighbors4[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

}  // namespace angio

#endif  // ANGIO_RASTER_HPP
