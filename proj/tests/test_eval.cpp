#include <gtest/gtest.h>

#include <random>

#include "crfrefine/eval.hpp"
#include "oracles.hpp"

using namespace crfrefine;

namespace {

LabelMap from_rows(const std::vector<std::vector<int>>& rows, int classes) {
  const int h = static_cast<int>(rows.size()), w = static_cast<int>(rows[0].size());
  std::vector<std::uint16_t> v;
  for (const auto& r : rows)
    for (int x : r) v.push_back(static_cast<std::uint16_t>(x));
  return LabelMap(h, w, classes, std::move(v));
}

LabelMap random_labels(std::mt19937& rng, int h, int w, int classes, double void_rate = 0.0) {
  std::uniform_int_distribution<int> c(0, classes - 1);
  std::bernoulli_distribution is_void(void_rate);
  LabelMap m(h, w, classes);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(y, x, is_void(rng) ? 255 : static_cast<std::uint16_t>(c(rng)));
  return m;
}

// Random blobs: a few rectangles painted over a background.
LabelMap blocky_labels(std::mt19937& rng, int h, int w, int classes) {
  LabelMap m(h, w, classes);
  std::uniform_int_distribution<int> c(0, classes - 1), py(0, h - 1), px(0, w - 1);
  for (int k = 0; k < 4; ++k) {
    const int y0 = py(rng), x0 = px(rng), y1 = py(rng), x1 = px(rng);
    const auto label = static_cast<std::uint16_t>(c(rng));
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) m.set(y, x, label);
  }
  return m;
}

}  // namespace

TEST(Confusion, PerfectPredictionIsDiagonal) {
  std::mt19937 rng(1);
  const LabelMap gt = random_labels(rng, 6, 6, 3);
  ConfusionMatrix cm(3);
  accumulate(gt, gt, cm);
  for (int g = 0; g < 3; ++g)
    for (int p = 0; p < 3; ++p)
      if (g != p) {
        EXPECT_EQ(cm.at(g, p), 0u);
      }
  EXPECT_EQ(cm.total(), 36u);
}

TEST(Confusion, AllVoidIsEmpty) {
  const LabelMap gt(3, 3, 2, std::vector<std::uint16_t>(9, 255));
  ConfusionMatrix cm(2);
  accumulate(LabelMap(3, 3, 2), gt, cm);
  EXPECT_EQ(cm.total(), 0u);
}

TEST(Confusion, HandCountedThreeByThree) {
  const LabelMap gt = from_rows({{0, 0, 1}, {0, 255, 1}, {1, 1, 1}}, 2);
  const LabelMap pred = from_rows({{0, 1, 1}, {0, 0, 0}, {1, 1, 0}}, 2);
  ConfusionMatrix cm(2);
  accumulate(pred, gt, cm);
  EXPECT_EQ(cm.at(0, 0), 2u);
  EXPECT_EQ(cm.at(0, 1), 1u);
  EXPECT_EQ(cm.at(1, 0), 2u);
  EXPECT_EQ(cm.at(1, 1), 3u);
}

TEST(Confusion, RejectsOutOfRangeAndMismatch) {
  ConfusionMatrix cm(2);
  EXPECT_THROW(accumulate(LabelMap(2, 2, 3, std::vector<std::uint16_t>{2, 0, 0, 0}), LabelMap(2, 2, 2), cm),
               std::out_of_range);
  EXPECT_THROW(accumulate(LabelMap(2, 3, 2), LabelMap(2, 2, 2), cm), std::invalid_argument);
}

TEST(Confusion, AccumulationIsAdditive) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const LabelMap g1 = random_labels(rng, 7, 5, 4, 0.1), p1 = random_labels(rng, 7, 5, 4);
    const LabelMap g2 = random_labels(rng, 3, 9, 4, 0.1), p2 = random_labels(rng, 3, 9, 4);
    ConfusionMatrix both(4), a(4), b(4);
    accumulate(p1, g1, both);
    accumulate(p2, g2, both);
    accumulate(p1, g1, a);
    accumulate(p2, g2, b);
    a += b;
    EXPECT_EQ(both, a);
  }
}

TEST(MeanIou, Examples) {
  ConfusionMatrix diag(3);
  diag.at(0, 0) = 4;
  diag.at(1, 1) = 2;
  const IouReport perfect = mean_iou(diag);
  EXPECT_DOUBLE_EQ(*perfect.mean, 1.0);
  EXPECT_FALSE(perfect.per_class[2].has_value());  // absent class excluded

  ConfusionMatrix cm(2);
  cm.at(0, 0) = 3;
  cm.at(0, 1) = 1;
  cm.at(1, 0) = 1;
  cm.at(1, 1) = 3;
  const IouReport r = mean_iou(cm);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 0.6);
  EXPECT_DOUBLE_EQ(*r.per_class[1], 0.6);
  EXPECT_DOUBLE_EQ(*r.mean, 0.6);
  EXPECT_DOUBLE_EQ(pixel_accuracy(cm), 0.75);
  EXPECT_DOUBLE_EQ(pixel_accuracy(diag), 1.0);
  EXPECT_THROW(pixel_accuracy(ConfusionMatrix(2)), std::domain_error);
  EXPECT_FALSE(mean_iou(ConfusionMatrix(2)).mean.has_value());
}

TEST(MeanIou, InvariantUnderClassRelabeling) {
  std::mt19937 rng(3);
  const std::vector<int> perm{3, 0, 4, 1, 2};
  for (int trial = 0; trial < 10; ++trial) {
    const LabelMap g = random_labels(rng, 8, 8, 5, 0.05), p = random_labels(rng, 8, 8, 5);
    LabelMap pg(8, 8, 5), pp(8, 8, 5);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        pg.set(y, x, g.is_void(g.at(y, x)) ? 255 : static_cast<std::uint16_t>(perm[g.at(y, x)]));
        pp.set(y, x, static_cast<std::uint16_t>(perm[p.at(y, x)]));
      }
    ConfusionMatrix a(5), b(5);
    accumulate(p, g, a);
    accumulate(pp, pg, b);
    EXPECT_NEAR(*mean_iou(a).mean, *mean_iou(b).mean, 1e-12);
  }
}

TEST(Trimap, UniformWithoutVoidIsEmpty) {
  EXPECT_EQ(trimap_band(LabelMap(6, 6, 2), 3).count(), 0u);
  EXPECT_THROW(trimap_band(LabelMap(6, 6, 2), 0), std::invalid_argument);
}

TEST(Trimap, SingleVoidPixelGivesChebyshevSquare) {
  LabelMap gt(9, 9, 2);
  gt.set(4, 4, 255);
  const TrimapMask band = trimap_band(gt, 2);
  EXPECT_EQ(band.count(), 25u);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) EXPECT_EQ(band.inside(y, x), std::abs(y - 4) <= 2 && std::abs(x - 4) <= 2);

  LabelMap corner(9, 9, 2);
  corner.set(0, 1, 255);
  EXPECT_EQ(trimap_band(corner, 2).count(), 3u * 4u);  // clipped to the image
}

TEST(Trimap, VerticalBoundaryBandIsTwiceRadius) {
  LabelMap gt(10, 16, 2);
  for (int y = 0; y < 10; ++y)
    for (int x = 8; x < 16; ++x) gt.set(y, x, 1);
  for (int r = 1; r <= 6; ++r) {
    const TrimapMask band = trimap_band(gt, r);
    const auto want = oracle::trimap(gt, r);
    EXPECT_TRUE(std::equal(want.begin(), want.end(), band.inside_band.begin())) << r;
    for (int x = 0; x < 16; ++x) EXPECT_EQ(band.inside(5, x), x >= 8 - r && x < 8 + r) << "r " << r << " x " << x;
  }
}

TEST(Trimap, MatchesBruteForceDistance) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    LabelMap gt = blocky_labels(rng, 14, 17, 3);
    if (trial % 3 == 0) gt.set(trial % 14, trial % 17, 255);
    for (int r : {1, 2, 4, 7}) {
      const auto want = oracle::trimap(gt, r);
      const TrimapMask band = trimap_band(gt, r);
      ASSERT_TRUE(std::equal(want.begin(), want.end(), band.inside_band.begin())) << trial << " r " << r;
    }
  }
}

TEST(Trimap, MonotoneInRadius) {
  std::mt19937 rng(5);
  const LabelMap gt = blocky_labels(rng, 20, 20, 4);
  for (int r = 1; r < 12; ++r) {
    const TrimapMask a = trimap_band(gt, r), b = trimap_band(gt, r + 1);
    for (std::size_t i = 0; i < a.inside_band.size(); ++i)
      if (a.inside_band[i]) {
        ASSERT_TRUE(b.inside_band[i]);
      }
  }
}

TEST(Trimap, FullMaskEqualsUnmasked) {
  std::mt19937 rng(6);
  const LabelMap gt = random_labels(rng, 12, 12, 3, 0.1), pred = random_labels(rng, 12, 12, 3);
  TrimapMask full{12, 12, 1, std::vector<std::uint8_t>(144, 1)};
  ConfusionMatrix a(3), b(3);
  accumulate(pred, gt, a);
  accumulate(pred, gt, b, &full);
  EXPECT_EQ(a, b);
  EXPECT_EQ(*mean_iou(a).mean, *mean_iou(b).mean);
}

TEST(TrimapCurve, PerfectPredictionIsOne) {
  std::mt19937 rng(7);
  const LabelMap gt = blocky_labels(rng, 16, 16, 3);
  const std::vector<int> radii{1, 2, 3};
  for (const auto& row : trimap_curve(gt, gt, radii, 3)) {
    if (row.pixels == 0) continue;
    EXPECT_DOUBLE_EQ(*row.mean_iou, 1.0);
    EXPECT_DOUBLE_EQ(*row.pixel_accuracy, 1.0);
  }
}

TEST(TrimapCurve, EmptyBandIsUndefined) {
  const LabelMap gt(5, 5, 2);
  const std::vector<int> radii{1, 4};
  for (const auto& row : trimap_curve(gt, gt, radii, 2)) {
    EXPECT_EQ(row.pixels, 0u);
    EXPECT_FALSE(row.mean_iou.has_value());
    EXPECT_FALSE(row.pixel_accuracy.has_value());
  }
}

TEST(TrimapCurve, MatchesManualAccumulation) {
  const LabelMap gt = from_rows({{0, 0, 0, 0, 1, 1, 1, 1},
                                 {0, 0, 0, 0, 1, 1, 1, 1},
                                 {0, 0, 0, 0, 1, 1, 1, 1},
                                 {0, 0, 0, 2, 2, 1, 1, 1},
                                 {0, 0, 0, 2, 2, 1, 1, 1},
                                 {2, 2, 2, 2, 2, 2, 2, 2},
                                 {2, 2, 2, 2, 2, 2, 2, 2},
                                 {2, 2, 2, 2, 2, 2, 2, 2}},
                                3);
  const LabelMap pred = from_rows({{0, 0, 0, 1, 1, 1, 1, 1},
                                   {0, 0, 0, 1, 1, 1, 1, 1},
                                   {0, 0, 0, 0, 1, 1, 1, 1},
                                   {0, 0, 2, 2, 2, 2, 1, 1},
                                   {0, 0, 0, 2, 2, 1, 1, 1},
                                   {2, 0, 2, 2, 2, 2, 2, 2},
                                   {2, 2, 2, 2, 2, 2, 2, 2},
                                   {2, 2, 2, 2, 2, 2, 2, 1}},
                                  3);
  const std::vector<int> radii{1, 2, 8};
  const auto rows = trimap_curve(pred, gt, radii, 3);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const auto band = oracle::trimap(gt, radii[k]);
    ConfusionMatrix cm(3);
    std::uint64_t hits = 0, total = 0;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        if (!band[y * 8 + x]) continue;
        ++cm.at(gt.at(y, x), pred.at(y, x));
        ++total;
        hits += gt.at(y, x) == pred.at(y, x);
      }
    EXPECT_EQ(rows[k].pixels, total);
    EXPECT_DOUBLE_EQ(*rows[k].pixel_accuracy, double(hits) / total);
    EXPECT_DOUBLE_EQ(*rows[k].mean_iou, *mean_iou(cm).mean);
  }
  // At radius 8 the band covers the image.
  ConfusionMatrix all(3);
  accumulate(pred, gt, all);
  EXPECT_DOUBLE_EQ(*rows[2].mean_iou, *mean_iou(all).mean);
}
