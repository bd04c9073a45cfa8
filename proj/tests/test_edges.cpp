#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "angio/edges.hpp"
#include "angio/image_io.hpp"

using namespace angio;

namespace {

GrayImage vertical_step(int k, int w = 128, int h = 128, std::uint8_t lo = 0, std::uint8_t hi = 255) {
  GrayImage img(w, h, lo);
  for (int y = 0; y < h; ++y)
    for (int x = k; x < w; ++x) img(x, y) = hi;
  return img;
}

GrayImage smooth_random(std::uint32_t seed, int n) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FloatImage f(n, n);
  // Sum of random discs: piecewise-constant shapes with curved borders.
  for (int d = 0; d < 12; ++d) {
    const double cx = u(rng) * n, cy = u(rng) * n, r = 4 + u(rng) * n / 4, v = 40 + u(rng) * 80;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) f(x, y) += v;
  }
  GrayImage out(n, n);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = static_cast<std::uint8_t>(std::min(255.0, f.data()[i] + 7.0 * u(rng)));
  return out;
}

}  // namespace

TEST(Sobel, ConstantImage) {
  const auto g = sobel_gradients(FloatImage(8, 8, 5.0));
  for (double v : g.magnitude.data()) EXPECT_EQ(v, 0.0);
}

TEST(Sobel, Ramps) {
  FloatImage rx(10, 10), ry(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) {
      rx(x, y) = x;
      ry(x, y) = y;
    }
  const auto gx = sobel_gradients(rx), gy = sobel_gradients(ry);
  for (int y = 1; y < 9; ++y)
    for (int x = 1; x < 9; ++x) {
      EXPECT_EQ(gx.gx(x, y), 8.0);
      EXPECT_EQ(gx.gy(x, y), 0.0);
      EXPECT_EQ(gy.gy(x, y), 8.0);
      EXPECT_EQ(gy.gx(x, y), 0.0);
    }
}

TEST(DirectionBin, Quantisation) {
  EXPECT_EQ(direction_bin(1, 0), 0);
  EXPECT_EQ(direction_bin(1, 1), 1);
  EXPECT_EQ(direction_bin(0, 1), 2);
  EXPECT_EQ(direction_bin(-1, 1), 3);
  EXPECT_EQ(direction_bin(-1, 0), 0);
  EXPECT_EQ(direction_bin(0, -1), 2);
  // 22.5 degrees sits on the 0/45 boundary and goes to the lower bin.
  EXPECT_EQ(direction_bin(std::cos(std::numbers::pi / 8), std::sin(std::numbers::pi / 8) * (1 - 1e-15)), 0);
  EXPECT_EQ(direction_bin(1, 0.5), 1);
}

TEST(Canny, ConstantImageEmpty) {
  EXPECT_EQ(count(canny(GrayImage(32, 32, 80), 1.0, 0.2, 0.5)), 0u);
}

TEST(Canny, StepLocalisedToOneColumn) {
  for (int k : {5, 30, 64, 99, 123}) {
    const auto e = canny(vertical_step(k), 1.0, 0.2, 0.5);
    for (int y = 4; y < 124; ++y) {
      int n = 0;
      for (int x = 0; x < 128; ++x)
        if (e(x, y)) {
          ++n;
          EXPECT_TRUE(x == k - 1 || x == k) << k << " " << x;
        }
      EXPECT_EQ(n, 1) << "row " << y << " k " << k;
    }
  }
}

TEST(Canny, WeakTailKeptByHysteresis) {
  // Step contrast fades from 200 at the top to 60 at the bottom, so the
  // lower rows are weak (below half the maximum) but connected to strong rows.
  GrayImage img(64, 64, 20);
  for (int y = 0; y < 64; ++y)
    for (int x = 32; x < 64; ++x) img(x, y) = static_cast<std::uint8_t>(std::lround(220.0 - 140.0 * y / 63.0));
  auto rows_with_edge = [](const BinaryMask& e, int from, int to) {
    int n = 0;
    for (int y = from; y < to; ++y) {
      bool found = false;
      for (int x = 30; x <= 33; ++x) found = found || e(x, y);
      n += found;
    }
    return n;
  };
  EXPECT_EQ(rows_with_edge(canny(img, 1.0, 0.2, 0.5), 3, 61), 58);
  // Raising low above the bottom contrast cuts the faint end off.
  EXPECT_LT(rows_with_edge(canny(img, 1.0, 0.4, 0.5), 50, 61), 11);
}

TEST(Canny, MonotoneInHigh) {
  const auto img = smooth_random(31, 96);
  BinaryMask prev = canny(img, 1.0, 0.1, 0.2);
  for (double high : {0.3, 0.45, 0.6, 0.8, 1.0}) {
    const auto e = canny(img, 1.0, 0.1, high);
    EXPECT_TRUE(is_subset(e, prev)) << high;
    prev = e;
  }
}

TEST(Canny, RotationEquivariantOnInterior) {
  const auto img = smooth_random(32, 96);
  const auto a = rotate90(canny(img, 1.5, 0.15, 0.4));
  const auto b = canny(rotate90(img), 1.5, 0.15, 0.4);
  int diff = 0;
  for (int y = 6; y < 90; ++y)
    for (int x = 6; x < 90; ++x) diff += a(x, y) != b(x, y);
  EXPECT_EQ(diff, 0);
}

TEST(Canny, ThresholdValidation) {
  const GrayImage img(8, 8, 0);
  for (auto [lo, hi] : {std::pair{0.5, 0.5}, {0.6, 0.4}, {0.0, 0.5}, {0.2, 1.5}}) {
    try {
      canny(img, 1.0, lo, hi);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidThresholdOrder);
    }
  }
  EXPECT_THROW(canny(img, 0.0, 0.1, 0.2), Error);
}

TEST(Canny, AutoHighProducesEdges) {
  CannyParams p;
  p.auto_high = true;
  p.low = 0.1;
  const auto e = canny(vertical_step(40), p);
  EXPECT_GT(count(e), 100u);
}
