#ifndef ANGIO_GEOMETRY_HPP
#define ANGIO_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <span>
#include <vector>

#include "angio/error.hpp"
#include "angio/raster.hpp"

namespace angio {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 to_point2(Point p) { return {static_cast<double>(p.x), static_cast<double>(p.y)}; }

// ---------------------------------------------------------------------------
// Tridiagonal systems
// ---------------------------------------------------------------------------

/// sub[i] * u[i-1] + diag[i] * u[i] + sup[i] * u[i+1] = rhs[i]; sub[0] and
/// sup[n-1] are ignored.
struct TridiagonalSystem {
  std::vector<double> sub, diag, sup, rhs;

  std::size_t size() const noexcept { return diag.size(); }
};

/// Thomas algorithm. The natural-spline system is strictly diagonally
/// dominant, so no pivoting is needed.
inline std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys) {
  const std::size_t n = sys.size();
  std::vector<double> c(n), d(n), u(n);
  if (n == 0) return u;
  c[0] = n > 1 ? sys.sup[0] / sys.diag[0] : 0.0;
  d[0] = sys.rhs[0] / sys.diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double denom = sys.diag[i] - sys.sub[i] * c[i - 1];
    c[i] = i + 1 < n ? sys.sup[i] / denom : 0.0;
    d[i] = (sys.rhs[i] - sys.sub[i] * d[i - 1]) / denom;
  }
  u[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) u[i] = d[i] - c[i] * u[i + 1];
  return u;
}

/// The n - 2 equations for the interior second derivatives M_1..M_{n-2} of a
/// natural cubic spline through (t_i, y_i), with M_0 = M_{n-1} = 0:
/// h_{i-1} M_{i-1} + 2 (h_{i-1} + h_i) M_i + h_i M_{i+1}
///   = 6 ((y_{i+1} - y_i) / h_i - (y_i - y_{i-1}) / h_{i-1}).
inline TridiagonalSystem natural_spline_system(std::span<const double> t, std::span<const double> y) {
  TridiagonalSystem sys;
  if (t.size() < 3) return sys;
  const std::size_t m = t.size() - 2;
  sys.sub.resize(m);
  sys.diag.resize(m);
  sys.sup.resize(m);
  sys.rhs.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = k + 1;
    const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
    sys.sub[k] = h0;
    sys.diag[k] = 2.0 * (h0 + h1);
    sys.sup[k] = h1;
    sys.rhs[k] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  return sys;
}

/// Second derivatives at every knot (zeros at both ends).
inline std::vector<double> natural_spline_moments(std::span<const double> t, std::span<const double> y) {
  std::vector<double> moments(t.size(), 0.0);
  const auto interior = solve_tridiagonal(natural_spline_system(t, y));
  std::copy(interior.begin(), interior.end(), moments.begin() + 1);
  return moments;
}

// ---------------------------------------------------------------------------
// Parametric natural cubic spline
// ---------------------------------------------------------------------------

/// Per segment i on [t_i, t_{i+1}]: q(t) = a + b u + c u^2 + d u^3, u = t - t_i.
struct CubicCoefficients {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  double value(double u) const { return a + u * (b + u * (c + u * d)); }
  double first(double u) const { return b + u * (2.0 * c + 3.0 * u * d); }
  double second(double u) const { return 2.0 * c + 6.0 * d * u; }
};

class CubicSpline {
 public:
  CubicSpline() = default;

  /// Chord-length parametrised natural spline through `points`.
  static CubicSpline fit(std::span<const Point2> points) {
    if (points.size() < 2) throw Error(ErrorCode::TooFewPoints, "a spline needs at least two points");
    CubicSpline s;
    s.points_.assign(points.begin(), points.end());
    s.knots_.resize(points.size());
    std::vector<double> xs(points.size()), ys(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      xs[i] = points[i].x;
      ys[i] = points[i].y;
      if (i > 0) {
        const double h = std::hypot(points[i].x - points[i - 1].x, points[i].y - points[i - 1].y);
        if (!(h > 0.0))
          throw Error(ErrorCode::DuplicateConsecutivePoints,
                      "consecutive spline control points must differ (index " + std::to_string(i) + ")");
        s.knots_[i] = s.knots_[i - 1] + h;
      }
    }
    s.moments_x_ = natural_spline_moments(s.knots_, xs);
    s.moments_y_ = natural_spline_moments(s.knots_, ys);
    s.coef_x_ = coefficients(s.knots_, xs, s.moments_x_);
    s.coef_y_ = coefficients(s.knots_, ys, s.moments_y_);
    return s;
  }

  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<Point2>& control_points() const noexcept { return points_; }
  const std::vector<double>& moments_x() const noexcept { return moments_x_; }
  const std::vector<double>& moments_y() const noexcept { return moments_y_; }
  std::size_t segment_count() const noexcept { return coef_x_.size(); }
  const CubicCoefficients& segment_x(std::size_t i) const { return coef_x_.at(i); }
  const CubicCoefficients& segment_y(std::size_t i) const { return coef_y_.at(i); }
  double t_min() const { return knots_.front(); }
  double t_max() const { return knots_.back(); }

  /// Segment containing t (the last segment owns t_max).
  std::size_t segment_of(double t) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(i, segment_count() - 1);
  }

  Point2 operator()(double t) const {
    check(t);
    const std::size_t i = segment_of(t);
    if (t == knots_[i]) return points_[i];
    if (t == knots_.back()) return points_.back();
    const double u = t - knots_[i];
    return {coef_x_[i].value(u), coef_y_[i].value(u)};
  }

  Point2 second_derivative(double t) const {
    check(t);
    const std::size_t i = segment_of(t);
    const double u = t - knots_[i];
    return {coef_x_[i].second(u), coef_y_[i].second(u)};
  }

 private:
  static std::vector<CubicCoefficients> coefficients(const std::vector<double>& t,
                                                     const std::vector<double>& y,
                                                     const std::vector<double>& m) {
    std::vector<CubicCoefficients> out(t.size() - 1);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const double h = t[i + 1] - t[i];
      out[i] = {y[i], (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0, m[i] / 2.0,
                (m[i + 1] - m[i]) / (6.0 * h)};
    }
    return out;
  }

  void check(double t) const {
    const double slack = 1e-12 * std::max(1.0, knots_.back());
    if (!(t >= knots_.front() - slack && t <= knots_.back() + slack))
      throw Error(ErrorCode::ParameterOutOfRange, "spline parameter outside the knot range");
  }

  std::vector<Point2> points_;
  std::vector<double> knots_;
  std::vector<double> moments_x_, moments_y_;
  std::vector<CubicCoefficients> coef_x_, coef_y_;
};

inline CubicSpline fit_natural_spline(std::span<const Point2> points) { return CubicSpline::fit(points); }

inline Point2 eval_spline(const CubicSpline& spline, double t) { return spline(t); }

/// Points at parameter spacing `step` from t_min, always including t_max.
inline std::vector<Point2> sample_spline(const CubicSpline& spline, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidParams, "sampling step must be positive");
  std::vector<Point2> out;
  const double t0 = spline.t_min(), t1 = spline.t_max();
  const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / step));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = t0 + static_cast<double>(k) * step;
    if (t < t1) out.push_back(spline(t));
  }
  out.push_back(spline(t1));
  return out;
}

// ---------------------------------------------------------------------------
// Lengths and rasterised segments
// ---------------------------------------------------------------------------

inline double path_length(std::span<const Point2> points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    total += std::hypot(points[i].x - points[i - 1].x, points[i].y - points[i - 1].y);
  return total;
}

inline double path_length(std::span<const Point> points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    total += std::hypot(static_cast<double>(points[i].x - points[i - 1].x),
                        static_cast<double>(points[i].y - points[i - 1].y));
  return total;
}

/// Bresenham segment from a to b, both ends included.
inline std::vector<Point> bresenham(Point a, Point b) {
  std::vector<Point> out;
  const int dx = std::abs(b.x - a.x), dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1, sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  Point p = a;
  while (true) {
    out.push_back(p);
    if (p == b) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      p.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      p.y += sy;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distance transform and radius
// ---------------------------------------------------------------------------

namespace detail {
// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), squared distances.
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                   std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[static_cast<std::size_t>(q)] + q * q) - (f[static_cast<std::size_t>(p)] + p * p)) / (2.0 * (q - p));
      if (s <= z[static_cast<std::size_t>(k)]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k + 1)] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k + 1)] < q) ++k;
    const int p = v[static_cast<std::size_t>(k)];
    d[static_cast<std::size_t>(q)] = (q - p) * (q - p) + f[static_cast<std::size_t>(p)];
  }
}
}  // namespace detail

/// Exact Euclidean distance from each foreground pixel centre to the nearest
/// background pixel centre; pixels beyond the image border are background.
inline FloatImage distance_transform(const BinaryMask& mask) {
  const int w = mask.width() + 2, h = mask.height() + 2;
  // Larger than any squared distance inside the padded grid.
  const double inf = 4.0 * (static_cast<double>(w) * w + static_cast<double>(h) * h);
  std::vector<double> grid(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(x, y)) grid[static_cast<std::size_t>((y + 1) * w + x + 1)] = inf;

  const int n = std::max(w, h);
  std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n) + 1);
  std::vector<int> v(static_cast<std::size_t>(n));
  f.resize(static_cast<std::size_t>(h));
  d.resize(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = grid[static_cast<std::size_t>(y * w + x)];
    detail::edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y * w + x)] = d[static_cast<std::size_t>(y)];
  }
  f.resize(static_cast<std::size_t>(w));
  d.resize(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[static_cast<std::size_t>(x)] = grid[static_cast<std::size_t>(y * w + x)];
    detail::edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y * w + x)] = d[static_cast<std::size_t>(x)];
  }
  FloatImage out(mask.width(), mask.height(), 0.0);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      out(x, y) = std::sqrt(grid[static_cast<std::size_t>((y + 1) * w + x + 1)]);
  return out;
}

struct RadiusSample {
  double s = 0.0;       // arc length along the trace, pixels
  double radius = 0.0;  // pixels
  bool off_mask = false;
};

struct RadiusProfile {
  std::vector<RadiusSample> samples;
  bool off_mask = false;  // some sample landed on background

  double mean_radius() const {
    if (samples.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : samples) sum += s.radius;
    return sum / static_cast<double>(samples.size());
  }
};

/// Radius profile from a precomputed distance map: samples every `step`
/// pixels of arc length, each taking the distance value at the trace pixel
/// nearest in arc length (earlier pixel on ties).
inline RadiusProfile estimate_radius(std::span<const Point> trace, const FloatImage& distance, double step = 1.0) {
  if (trace.empty()) throw Error(ErrorCode::EmptyPath, "radius estimation needs a non-empty path");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidParams, "radius sampling step must be positive");
  std::vector<double> arc(trace.size(), 0.0);
  for (std::size_t i = 1; i < trace.size(); ++i)
    arc[i] = arc[i - 1] + std::hypot(static_cast<double>(trace[i].x - trace[i - 1].x),
                                     static_cast<double>(trace[i].y - trace[i - 1].y));
  RadiusProfile profile;
  const auto n = static_cast<std::size_t>(std::floor(arc.back() / step + 1e-9));
  std::size_t j = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) * step;
    while (j + 1 < arc.size() && std::abs(arc[j + 1] - s) < std::abs(arc[j] - s)) ++j;
    const Point p = trace[j];
    RadiusSample sample{s, 0.0, true};
    if (distance.contains(p) && distance[p] > 0.0) sample = {s, distance[p], false};
    profile.off_mask = profile.off_mask || sample.off_mask;
    profile.samples.push_back(sample);
  }
  return profile;
}

inline RadiusProfile estimate_radius(std::span<const Point> trace, const BinaryMask& mask, double step = 1.0) {
  return estimate_radius(trace, distance_transform(mask), step);
}

}  // namespace angio

#endif  // ANGIO_GEOMETRY_HPP
