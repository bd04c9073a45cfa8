#ifndef ANGIO_FILTERING_HPP
#define ANGIO_FILTERING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "angio/error.hpp"
#include "angio/raster.hpp"

namespace angio {

// ---------------------------------------------------------------------------
// Median filter
// ---------------------------------------------------------------------------

/// Median of each window x window neighbourhood, edge-replicated borders.
inline GrayImage median_filter(const GrayImage& image, int window) {
  if (window < 1 || window % 2 == 0)
    throw Error(ErrorCode::EvenWindow,
                "median window must be odd and >= 1, got " + std::to_string(window));
  if (window == 1) return image;
  const int r = window / 2;
  const std::size_t mid = static_cast<std::size_t>(window * window) / 2;
  GrayImage out(image.width(), image.height());
  std::vector<std::uint8_t> values(static_cast<std::size_t>(window * window));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      std::size_t k = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) values[k++] = image.clamped(x + dx, y + dy);
      std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                       values.end());
      out(x, y) = values[mid];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian kernels
// ---------------------------------------------------------------------------

/// g(x, y) = exp(-((x - xc)^2 + (y - yc)^2) / (2 s^2)) / (2 pi s^2), evaluated
/// at an offset from the mask centre.
inline double gaussian_weight(double dx, double dy, double sigma) {
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) /
         (2.0 * std::numbers::pi * sigma * sigma);
}

/// Smallest odd integer >= 6 sigma.
inline int default_kernel_size(double sigma) {
  int size = static_cast<int>(std::ceil(6.0 * sigma));
  if (size < 1) size = 1;
  if (size % 2 == 0) ++size;
  return size;
}

struct GaussianKernel {
  int size = 1;
  double sigma = 1.0;
  std::vector<double> coefficients{1.0};  // row-major size x size

  int radius() const noexcept { return size / 2; }
  double at(int x, int y) const { return coefficients[static_cast<std::size_t>(y * size + x)]; }

  /// Centre row renormalised to sum 1; the 2D kernel is its outer product.
  std::vector<double> separable_weights() const {
    std::vector<double> w(coefficients.begin() + radius() * size,
                          coefficients.begin() + (radius() + 1) * size);
    double sum = 0.0;
    for (double v : w) sum += v;
    for (double& v : w) v /= sum;
    return w;
  }
};

inline GaussianKernel gaussian_kernel(double sigma, std::optional<int> size = std::nullopt) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorCode::NonPositiveSigma, "sigma must be positive");
  const int n = size.value_or(default_kernel_size(sigma));
  if (n < 1 || n % 2 == 0)
    throw Error(ErrorCode::EvenSize, "kernel size must be odd and >= 1, got " + std::to_string(n));
  GaussianKernel kernel{n, sigma, std::vector<double>(static_cast<std::size_t>(n * n))};
  const int c = n / 2;
  double sum = 0.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double w = gaussian_weight(x - c, y - c, sigma);
      kernel.coefficients[static_cast<std::size_t>(y * n + x)] = w;
      sum += w;
    }
  for (double& w : kernel.coefficients) w /= sum;
  return kernel;
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

/// out(x, y) = sum_{i,j} kx[i] ky[j] in(x + i - rx, y + j - ry), replicated
/// borders. Row pass first, then column pass. Both weight vectors must have
/// odd length.
inline FloatImage separable_correlate(const FloatImage& image, std::span<const double> kx,
                                      std::span<const double> ky) {
  const int rx = static_cast<int>(kx.size()) / 2, ry = static_cast<int>(ky.size()) / 2;
  const int w = image.width(), h = image.height();
  FloatImage rows(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -rx; i <= rx; ++i) acc += kx[static_cast<std::size_t>(i + rx)] * image.clamped(x + i, y);
      rows(x, y) = acc;
    }
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = -ry; j <= ry; ++j) acc += ky[static_cast<std::size_t>(j + ry)] * rows.clamped(x, y + j);
      out(x, y) = acc;
    }
  return out;
}

/// Gaussian smoothing with replicated borders (separable evaluation).
inline FloatImage convolve(const FloatImage& image, const GaussianKernel& kernel) {
  if (kernel.size == 1) return image;
  const auto w = kernel.separable_weights();
  return separable_correlate(image, w, w);
}

inline FloatImage convolve(const GrayImage& image, const GaussianKernel& kernel) {
  return convolve(to_float(image), kernel);
}

// ---------------------------------------------------------------------------
// Hessian
// ---------------------------------------------------------------------------

struct HessianField {
  double sigma = 1.0;
  FloatImage dxx, dyy, dxy;  // each already multiplied by sigma^2
};

namespace detail {

struct DerivativeKernels {
  std::vector<double> smooth, first, second;
};

// Sampled Gaussian and its derivatives, corrected so that the discrete
// moments are exact: sum(smooth) = 1, sum(k * first) = 1 (correlation
// form), sum(second) = 0 and sum(k^2 / 2 * second) = 1. Quadratic images are
// therefore differentiated exactly.
inline DerivativeKernels derivative_kernels(double sigma) {
  const int size = std::max(3, default_kernel_size(sigma));
  const int r = size / 2;
  DerivativeKernels k{std::vector<double>(static_cast<std::size_t>(size)),
                      std::vector<double>(static_cast<std::size_t>(size)),
                      std::vector<double>(static_cast<std::size_t>(size))};
  const double s2 = sigma * sigma;
  double g_sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double g = std::exp(-(i * i) / (2.0 * s2));
    const auto idx = static_cast<std::size_t>(i + r);
    k.smooth[idx] = g;
    k.first[idx] = i * g;  // -g'(i) up to scale: correlation kernel for d/dx
    k.second[idx] = (i * i / s2 - 1.0) * g;
    g_sum += g;
  }
  double m1 = 0.0, mean2 = 0.0;
  for (int i = -r; i <= r; ++i) {
    const auto idx = static_cast<std::size_t>(i + r);
    k.smooth[idx] /= g_sum;
    m1 += i * k.first[idx];
    mean2 += k.second[idx];
  }
  mean2 /= size;
  double m2 = 0.0;
  for (int i = -r; i <= r; ++i) {
    const auto idx = static_cast<std::size_t>(i + r);
    k.first[idx] /= m1;
    k.second[idx] -= mean2;
    m2 += 0.5 * i * i * k.second[idx];
  }
  for (double& v : k.second) v /= m2;
  return k;
}

}  // namespace detail

inline HessianField hessian_at_scale(const FloatImage& image, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorCode::NonPositiveSigma, "Hessian scale must be positive");
  const auto k = detail::derivative_kernels(sigma);
  HessianField field{sigma, separable_correlate(image, k.second, k.smooth),
                     separable_correlate(image, k.smooth, k.second),
                     separable_correlate(image, k.first, k.first)};
  const double norm = sigma * sigma;
  for (auto* component : {&field.dxx, &field.dyy, &field.dxy})
    for (double& v : component->data()) v *= norm;
  return field;
}

inline HessianField hessian_at_scale(const GrayImage& image, double sigma) {
  return hessian_at_scale(to_float(image), sigma);
}

/// Eigen-decomposition of [[a, b], [b, c]] ordered by magnitude: |l1| <= |l2|.
/// On |l1| == |l2| the smaller signed value becomes l1. (vx, vy) is a unit
/// eigenvector of l1.
struct SymmetricEigen2 {
  double l1 = 0.0, l2 = 0.0;
  double vx = 1.0, vy = 0.0;
};

inline SymmetricEigen2 eigen_symmetric_2x2(double a, double b, double c) {
  const double root = std::sqrt((a - c) * (a - c) + 4.0 * b * b);
  const double hi = 0.5 * (a + c + root);
  const double lo = 0.5 * (a + c - root);
  SymmetricEigen2 e;
  if (std::abs(hi) < std::abs(lo)) {
    e.l1 = hi;
    e.l2 = lo;
  } else {
    e.l1 = lo;
    e.l2 = hi;
  }
  // Two algebraically equivalent eigenvector candidates; keep the better
  // conditioned one.
  double ux = e.l1 - c, uy = b;
  double wx = b, wy = e.l1 - a;
  if (ux * ux + uy * uy < wx * wx + wy * wy) {
    ux = wx;
    uy = wy;
  }
  const double len = std::hypot(ux, uy);
  if (len > 0.0) {
    e.vx = ux / len;
    e.vy = uy / len;
  }
  return e;
}

// ---------------------------------------------------------------------------
// Frangi vesselness
// ---------------------------------------------------------------------------

enum class Polarity { DarkOnBright, BrightOnDark };

struct FrangiParams {
  std::vector<double> scales{1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0};
  double beta = 0.5;
  /// Structureness sensitivity. Unset means half of the largest Hessian
  /// Frobenius norm found over the image across all listed scales.
  std::optional<double> c;
  Polarity polarity = Polarity::DarkOnBright;

  void validate() const {
    if (scales.empty()) throw Error(ErrorCode::InvalidParams, "Frangi scale list is empty");
    for (std::size_t i = 0; i < scales.size(); ++i) {
      if (!(scales[i] > 0.0) || !std::isfinite(scales[i]))
        throw Error(ErrorCode::InvalidParams, "Frangi scales must be positive");
      if (i > 0 && !(scales[i] > scales[i - 1]))
        throw Error(ErrorCode::InvalidParams, "Frangi scales must be strictly increasing");
    }
    if (!(beta > 0.0)) throw Error(ErrorCode::InvalidParams, "Frangi beta must be positive");
    if (c && !(*c > 0.0)) throw Error(ErrorCode::InvalidParams, "Frangi c must be positive");
  }
};

struct VesselnessMap {
  FloatImage magnitude;    // [0, 1]
  FloatImage orientation;  // vessel axis angle in [0, pi)
  FloatImage best_scale;   // member of FrangiParams::scales
};

/// Axis angle of a direction vector, folded into [0, pi).
inline double axis_angle(double vx, double vy) {
  double a = std::atan2(vy, vx);
  if (a < 0.0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

namespace detail {
struct ScaleEigen {
  std::vector<double> l1, l2, angle;
  double max_norm = 0.0;
};

inline ScaleEigen scale_eigen(const FloatImage& image, double sigma) {
  const auto h = hessian_at_scale(image, sigma);
  ScaleEigen out;
  out.l1.resize(image.size());
  out.l2.resize(image.size());
  out.angle.resize(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const auto e = eigen_symmetric_2x2(h.dxx.data()[i], h.dxy.data()[i], h.dyy.data()[i]);
    out.l1[i] = e.l1;
    out.l2[i] = e.l2;
    out.angle[i] = axis_angle(e.vx, e.vy);
    out.max_norm = std::max(out.max_norm, std::sqrt(e.l1 * e.l1 + e.l2 * e.l2));
  }
  return out;
}
}  // namespace detail

/// Single-pixel vesselness from ordered eigenvalues.
inline double vesselness_response(double l1, double l2, double beta, double c, Polarity polarity) {
  if (l2 == 0.0) return 0.0;
  if (polarity == Polarity::DarkOnBright ? !(l2 > 0.0) : !(l2 < 0.0)) return 0.0;
  const double rb = std::abs(l1) / std::abs(l2);
  const double s2 = l1 * l1 + l2 * l2;
  return std::exp(-rb * rb / (2.0 * beta * beta)) * (1.0 - std::exp(-s2 / (2.0 * c * c)));
}

/// Multiscale vesselness. Per-scale Hessians run on up to `threads`
/// threads; the max over scales is reduced in list order, so the result does
/// not depend on the thread count.
inline VesselnessMap frangi_vesselness(const GrayImage& image, const FrangiParams& params,
                                       unsigned threads = 1) {
  params.validate();
  // Offsets are removed up front so that adding a constant to the input
  // yields a bit-identical map.
  const auto min_value = *std::min_element(image.data().begin(), image.data().end());
  FloatImage shifted(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i)
    shifted.data()[i] = static_cast<double>(image.data()[i] - min_value);

  const std::size_t n_scales = params.scales.size();
  std::vector<detail::ScaleEigen> per_scale(n_scales);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_scales)));
  if (workers == 1) {
    for (std::size_t s = 0; s < n_scales; ++s) per_scale[s] = detail::scale_eigen(shifted, params.scales[s]);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t s = t; s < n_scales; s += workers)
          per_scale[s] = detail::scale_eigen(shifted, params.scales[s]);
      });
  }

  double c = 0.0;
  if (params.c) {
    c = *params.c;
  } else {
    for (const auto& s : per_scale) c = std::max(c, s.max_norm);
    c *= 0.5;
    if (c == 0.0) c = 1e-6;
  }

  VesselnessMap map{FloatImage(image.width(), image.height(), 0.0),
                    FloatImage(image.width(), image.height(), 0.0),
                    FloatImage(image.width(), image.height(), params.scales.front())};
  std::vector<std::size_t> best(image.size(), 0);
  for (std::size_t s = 0; s < n_scales; ++s) {
    const auto& e = per_scale[s];
    for (std::size_t i = 0; i < image.size(); ++i) {
      const double v = vesselness_response(e.l1[i], e.l2[i], params.beta, c, params.polarity);
      if (v > map.magnitude.data()[i]) {
        map.magnitude.data()[i] = v;
        best[i] = s;
      }
    }
  }
  for (std::size_t i = 0; i < image.size(); ++i) {
    map.best_scale.data()[i] = params.scales[best[i]];
    map.orientation.data()[i] = per_scale[best[i]].angle[i];
  }
  return map;
}

}  // namespace angio

#endif  // ANGIO_FILTERING_HPP
