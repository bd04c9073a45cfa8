#include <gtest/gtest.h>

#include <random>

#include "angio/segmentation.hpp"
#include "oracles.hpp"

using namespace angio;

namespace {

Histogram256 from_counts(const std::array<std::uint64_t, 256>& counts) {
  Histogram256 h;
  h.counts = counts;
  h.total = 0;
  for (auto c : counts) h.total += c;
  return h;
}

BinaryMask pad(const BinaryMask& m, int p) {
  BinaryMask out(m.width() + 2 * p, m.height() + 2 * p);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out(x + p, y + p) = m(x, y);
  return out;
}

BinaryMask crop(const BinaryMask& m, int p, int w, int h) {
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = m(x + p, y + p);
  return out;
}

}  // namespace

TEST(Otsu, TwoLevelsSmallestT) {
  GrayImage img(10, 10, 10);
  for (int y = 5; y < 10; ++y)
    for (int x = 0; x < 10; ++x) img(x, y) = 200;
  EXPECT_EQ(otsu_threshold(img), 10);
}

TEST(Otsu, ThreeLevelsMatchOracle) {
  GrayImage img(3, 10);
  for (int y = 0; y < 10; ++y) {
    img(0, y) = 0;
    img(1, y) = 100;
    img(2, y) = 255;
  }
  const auto h = histogram(img);
  EXPECT_EQ(otsu_threshold(img), oracle::otsu(h.counts).value());
}

TEST(Otsu, ConstantImageIsDegenerate) {
  try {
    otsu_threshold(GrayImage(4, 4, 9));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateHistogram);
  }
}

TEST(Otsu, RandomHistogramsMatchOracle) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<std::uint64_t, 256> counts{};
    const int mode = trial % 3;
    std::uniform_int_distribution<int> level(0, 255), count(0, mode == 0 ? 3 : 1000);
    const int fills = mode == 2 ? 3 : 40;
    for (int k = 0; k < fills; ++k) counts[static_cast<std::size_t>(level(rng))] += static_cast<std::uint64_t>(count(rng));
    int distinct = 0;
    for (auto c : counts) distinct += c > 0;
    if (distinct < 2) continue;
    EXPECT_EQ(otsu_threshold(from_counts(counts)), oracle::otsu(counts).value()) << trial;
  }
}

TEST(Otsu, FloatInputQuantisedFirst) {
  FloatImage f(4, 1);
  f(0, 0) = 0.0;
  f(1, 0) = 0.01;
  f(2, 0) = 0.9;
  f(3, 0) = 1.0;
  const int t = otsu_threshold(f);
  const auto mask = binarize(f, t);
  EXPECT_FALSE(mask(1, 0));
  EXPECT_TRUE(mask(2, 0));
}

TEST(Binarize, StrictInequality) {
  GrayImage img(2, 1);
  img(0, 0) = 10;
  img(1, 0) = 200;
  const auto m = binarize(img, 10);
  EXPECT_FALSE(m(0, 0));
  EXPECT_TRUE(m(1, 0));
  EXPECT_EQ(count(binarize(img, 255)), 0u);
  EXPECT_EQ(count(binarize(img, -1)), 2u);
}

TEST(StructuringElement, SymmetricWithCentre) {
  for (auto shape : {SeShape::Square, SeShape::Disk})
    for (int r = 1; r <= 4; ++r) {
      const auto se = StructuringElement::make(shape, r);
      EXPECT_NE(std::find(se.offsets.begin(), se.offsets.end(), Point{0, 0}), se.offsets.end());
      for (const auto& o : se.offsets)
        EXPECT_NE(std::find(se.offsets.begin(), se.offsets.end(), Point{-o.x, -o.y}), se.offsets.end());
    }
  EXPECT_EQ(StructuringElement::square(1).offsets.size(), 9u);
  EXPECT_EQ(StructuringElement::disk(1).offsets.size(), 5u);
  EXPECT_THROW(StructuringElement::square(0), Error);
}

TEST(Morphology, HandExamples) {
  const auto se = StructuringElement::square(1);
  BinaryMask dot(5, 5);
  dot(2, 2) = 1;
  const auto d = dilate(dot, se);
  EXPECT_EQ(count(d), 9u);
  const auto e = erode(d, se);
  EXPECT_EQ(e, dot);

  BinaryMask two(9, 5);
  for (int y = 1; y <= 3; ++y)
    for (int x : {1, 2, 3, 5, 6, 7}) two(x, y) = 1;
  const auto closed = morphology(two, se, MorphOp::Close);
  for (int y = 1; y <= 3; ++y) EXPECT_TRUE(closed(4, y));
  EXPECT_TRUE(is_subset(two, closed));
}

TEST(Morphology, MatchesBruteForce) {
  std::mt19937 rng(12);
  for (int i = 0; i < 30; ++i) {
    const auto m = oracle::random_mask(rng, 20, 17, 0.5);
    for (int r : {1, 2}) {
      EXPECT_EQ(erode(m, StructuringElement::square(r)), oracle::erode_square(m, r));
      EXPECT_EQ(dilate(m, StructuringElement::square(r)), oracle::dilate_square(m, r));
    }
  }
}

TEST(Morphology, Properties) {
  std::mt19937 rng(13);
  for (int i = 0; i < 40; ++i) {
    const auto m = oracle::random_blobs(rng, 32, 32, 4);
    BinaryMask m2 = m;
    const auto extra = oracle::random_mask(rng, 32, 32, 0.1);
    for (std::size_t k = 0; k < m2.size(); ++k) m2.data()[k] = m2.data()[k] || extra.data()[k];
    for (auto shape : {SeShape::Square, SeShape::Disk}) {
      const auto se = StructuringElement::make(shape, 1 + i % 2);
      const auto opened = morphology(m, se, MorphOp::Open), closed = morphology(m, se, MorphOp::Close);
      EXPECT_EQ(morphology(opened, se, MorphOp::Open), opened);
      EXPECT_EQ(morphology(closed, se, MorphOp::Close), closed);
      EXPECT_TRUE(is_subset(erode(m, se), m));
      EXPECT_TRUE(is_subset(m, dilate(m, se)));
      EXPECT_TRUE(is_subset(opened, m));
      // Border is background, so closing is only extensive once the mask clears the frame.
      EXPECT_TRUE(is_subset(pad(m, se.radius), morphology(pad(m, se.radius), se, MorphOp::Close)));
      for (auto op : {MorphOp::Erode, MorphOp::Dilate, MorphOp::Open, MorphOp::Close})
        EXPECT_TRUE(is_subset(morphology(m, se, op), morphology(m2, se, op)));
      const int p = se.radius;
      const auto padded = pad(m, p);
      const auto lhs = crop(dilate(padded, se), p, 32, 32);
      const auto rhs = crop(complement(erode(complement(padded), se)), p, 32, 32);
      EXPECT_EQ(lhs, rhs);
    }
  }
}

TEST(Components, RemoveSmall) {
  BinaryMask m(20, 20);
  for (int x = 0; x < 3; ++x) m(x, 0) = 1;  // size 3
  for (int y = 5; y < 10; ++y)
    for (int x = 5; x < 15; ++x) m(x, y) = 1;  // size 50
  const auto out = remove_small_components(m, 10);
  EXPECT_EQ(count(out), 50u);
  EXPECT_FALSE(out(0, 0));
  EXPECT_EQ(remove_small_components(m, 0), m);
  EXPECT_EQ(count(remove_small_components(BinaryMask(4, 4), 5)), 0u);
}

TEST(Components, DiagonalConnectivity) {
  BinaryMask m(4, 4);
  m(0, 0) = m(1, 1) = m(2, 2) = 1;
  EXPECT_EQ(count(remove_small_components(m, 3, 8)), 3u);
  EXPECT_EQ(count(remove_small_components(m, 2, 4)), 0u);
}

TEST(Components, LabelsMatchFloodFill) {
  std::mt19937 rng(14);
  for (int i = 0; i < 30; ++i) {
    const auto m = oracle::random_mask(rng, 24, 24, 0.4);
    for (int conn : {4, 8}) {
      std::vector<std::size_t> sizes;
      const auto labels = label_components(m, conn, &sizes);
      EXPECT_EQ(static_cast<int>(sizes.size()) - 1, oracle::count_components(m, conn));  // slot 0 is background
      std::size_t total = 0;
      for (auto s : sizes) total += s;
      EXPECT_EQ(total, count(m));
      (void)labels;
    }
  }
}

TEST(Components, IdempotentAndNeverAdds) {
  std::mt19937 rng(15);
  for (int i = 0; i < 20; ++i) {
    const auto m = oracle::random_mask(rng, 30, 30, 0.45);
    const auto once = remove_small_components(m, 6);
    EXPECT_TRUE(is_subset(once, m));
    EXPECT_EQ(remove_small_components(once, 6), once);
  }
}
