#include "monorange/features.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "monorange/rng.hpp"
#include "testutil.hpp"

using namespace monorange;
using features::GrayPatch;

namespace {

GrayPatch constant_patch(int w, int h, double value) {
  GrayPatch p;
  p.width = w;
  p.height = h;
  p.pixels.assign(static_cast<std::size_t>(w) * h, value);
  return p;
}

GrayPatch gradient_patch(int w, int h) {
  GrayPatch p;
  p.width = w;
  p.height = h;
  p.pixels.resize(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      p.at(x, y) = (x + y) / static_cast<double>(w + h);
  return p;
}

std::uint64_t overlay_hash(const features::OverlayTensor& t) {
  std::uint64_t h = 0;
  for (const auto& c : t.channels)
    h ^= testutil::fnv1a(c.data(), c.size() * sizeof(float)) + 0x9e3779b9 + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

TEST(Overlay, IdenticalPatchesScaleTogether) {
  // Three 100-high, 50-wide patches: common scale 2.24, width 112, centered
  // with 56 px of zero margin each side.
  const auto patch = constant_patch(50, 100, 1.0);
  const auto t = features::make_overlay({patch, patch, patch}, {100.0, 100.0, 100.0});
  for (int c = 0; c < 3; ++c) {
    EXPECT_FLOAT_EQ(t.at(c, 112, 111), 1.0f);  // inside content
    EXPECT_FLOAT_EQ(t.at(c, 112, 55), 0.0f);   // left margin
    EXPECT_FLOAT_EQ(t.at(c, 112, 56), 1.0f);   // first content column
    EXPECT_FLOAT_EQ(t.at(c, 112, 167), 1.0f);  // last content column
    EXPECT_FLOAT_EQ(t.at(c, 112, 168), 0.0f);  // right margin
    EXPECT_FLOAT_EQ(t.at(c, 0, 112), 1.0f);    // full height
    EXPECT_FLOAT_EQ(t.at(c, 223, 112), 1.0f);
  }
}

TEST(Overlay, MaxAlreadyTargetSizeIsScaleOne) {
  // Square patches with heights 224, 112, 56: channel 0 full, others centered.
  const auto t = features::make_overlay(
      {constant_patch(224, 224, 1.0), constant_patch(112, 112, 1.0), constant_patch(56, 56, 1.0)},
      {224.0, 112.0, 56.0});
  EXPECT_FLOAT_EQ(t.at(0, 0, 0), 1.0f);
  EXPECT_FLOAT_EQ(t.at(0, 223, 223), 1.0f);
  // Channel 1: 112x112 block centered at offset 56.
  EXPECT_FLOAT_EQ(t.at(1, 55, 112), 0.0f);
  EXPECT_FLOAT_EQ(t.at(1, 56, 112), 1.0f);
  EXPECT_FLOAT_EQ(t.at(1, 167, 112), 1.0f);
  EXPECT_FLOAT_EQ(t.at(1, 168, 112), 0.0f);
  // Channel 2: 56x56 block centered at offset 84.
  EXPECT_FLOAT_EQ(t.at(2, 83, 112), 0.0f);
  EXPECT_FLOAT_EQ(t.at(2, 84, 112), 1.0f);
  EXPECT_FLOAT_EQ(t.at(2, 139, 112), 1.0f);
  EXPECT_FLOAT_EQ(t.at(2, 140, 112), 0.0f);
}

TEST(Overlay, WidePatchCropsWidthPadsHeight) {
  // Aspect 4:1 patch scaled by 224/100: width 448 -> center-cropped to 224,
  // height 56 -> padded. Content must fill the full width at mid height.
  const auto wide = constant_patch(200, 25, 1.0);
  const auto tall = constant_patch(50, 100, 1.0);
  const auto t = features::make_overlay({wide, tall, tall}, {100.0, 100.0, 100.0});
  // Channel 0: scaled wide patch is 448x56; rows [84, 140) hold content.
  EXPECT_FLOAT_EQ(t.at(0, 83, 0), 0.0f);
  EXPECT_FLOAT_EQ(t.at(0, 84, 0), 1.0f);    // cropped width spans all columns
  EXPECT_FLOAT_EQ(t.at(0, 84, 223), 1.0f);
  EXPECT_FLOAT_EQ(t.at(0, 139, 112), 1.0f);
  EXPECT_FLOAT_EQ(t.at(0, 140, 112), 0.0f);
}

TEST(Overlay, ShapeAlwaysExact) {
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    const auto p0 = gradient_patch(rng.uniform_int(3, 300), rng.uniform_int(3, 300));
    const auto p1 = gradient_patch(rng.uniform_int(3, 300), rng.uniform_int(3, 300));
    const auto p2 = gradient_patch(rng.uniform_int(3, 300), rng.uniform_int(3, 300));
    const auto t = features::make_overlay(
        {p0, p1, p2}, {static_cast<double>(p0.height), static_cast<double>(p1.height),
                       static_cast<double>(p2.height)});
    for (const auto& c : t.channels)
      ASSERT_EQ(c.size(), static_cast<std::size_t>(224) * 224);
  }
}

TEST(Overlay, DeterministicAcrossRuns) {
  const auto p = gradient_patch(77, 131);
  const auto a = features::make_overlay({p, p, p}, {131.0, 131.0, 131.0});
  const auto b = features::make_overlay({p, p, p}, {131.0, 131.0, 131.0});
  EXPECT_EQ(overlay_hash(a), overlay_hash(b));
  for (int c = 0; c < 3; ++c) EXPECT_EQ(a.channels[c], b.channels[c]);
}

TEST(Overlay, ScaleChainStability) {
  // Integer-upscaled inputs with proportionally scaled heights land on the
  // same overlay up to interpolation differences.
  const auto base = gradient_patch(40, 64);
  GrayPatch doubled;
  doubled.width = 80;
  doubled.height = 128;
  doubled.pixels.resize(static_cast<std::size_t>(80) * 128);
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 80; ++x) doubled.at(x, y) = base.at(x / 2, y / 2);

  const auto a = features::make_overlay({base, base, base}, {64.0, 64.0, 64.0});
  const auto b = features::make_overlay({doubled, doubled, doubled}, {128.0, 128.0, 128.0});
  double total = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.channels[0].size(); ++i)
      total += std::abs(static_cast<double>(a.channels[c][i]) - b.channels[c][i]);
  EXPECT_LT(total / (3.0 * 224 * 224), 1e-2);
}

TEST(Overlay, RejectsDegenerateInput) {
  EXPECT_THROW(features::make_overlay({GrayPatch{}, GrayPatch{}, GrayPatch{}}, {1.0, 1.0, 1.0}),
               features::DegeneratePatch);
  const auto p = constant_patch(4, 4, 0.5);
  EXPECT_THROW(features::make_overlay({p, p, p}, {0.0, 0.0, 0.0}), features::DegeneratePatch);
}

TEST(Crop, CoversFractionalBoxes) {
  const auto frame = gradient_patch(100, 80);
  const auto patch = features::crop(frame, {10.2, 20.8, 30.5, 50.0});
  EXPECT_EQ(patch.width, 21);   // floor(10.2) .. ceil(30.5)
  EXPECT_EQ(patch.height, 30);  // floor(20.8) .. ceil(50.0)
  EXPECT_DOUBLE_EQ(patch.at(0, 0), frame.at(10, 20));
  EXPECT_THROW(features::crop(frame, {200.0, 10.0, 220.0, 20.0}), features::DegeneratePatch);
}

TEST(Grayscale, LumaWeights) {
  const std::vector<unsigned char> rgb = {255, 0, 0, 0, 255, 0, 0, 0, 255};
  const auto g = features::grayscale_from_rgb(3, 1, rgb);
  EXPECT_DOUBLE_EQ(g.at(0, 0), 0.299);
  EXPECT_DOUBLE_EQ(g.at(1, 0), 0.587);
  EXPECT_DOUBLE_EQ(g.at(2, 0), 0.114);
}

TEST(SideVector, CompositionAndOrder) {
  ingest::ImuFeatures imu;  // zeros
  solver::DistanceEstimate est;
  est.range = 7.0;
  est.status = solver::SolveStatus::Ok;
  const auto side = features::make_side_vector(imu, {{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}}, est);
  for (int i = 0; i < 27; ++i) EXPECT_DOUBLE_EQ(side.values[static_cast<std::size_t>(i)], 0.0);
  for (int i = 27; i < 33; ++i) EXPECT_DOUBLE_EQ(side.values[static_cast<std::size_t>(i)], 0.5);
  EXPECT_DOUBLE_EQ(side.values[33], 7.0);
  EXPECT_FALSE(side.analytic_degenerate);
}

TEST(SideVector, DegenerateSentinel) {
  ingest::ImuFeatures imu;
  solver::DistanceEstimate est;  // default Degenerate
  const auto side = features::make_side_vector(imu, {{{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}}}, est);
  EXPECT_DOUBLE_EQ(side.values[33], -1.0);
  EXPECT_TRUE(side.analytic_degenerate);
  EXPECT_EQ(side.values.size(), 34u);
}

TEST(BerHu, BranchValues) {
  EXPECT_DOUBLE_EQ(features::berhu(1.0, 2.0).value, 1.0);
  EXPECT_DOUBLE_EQ(features::berhu(3.0, 2.0).value, (9.0 + 4.0) / 4.0);  // 3.25
  // Continuity at the switch point: both branches give c.
  EXPECT_DOUBLE_EQ(features::berhu(2.0, 2.0).value, 2.0);
  EXPECT_NEAR(features::berhu(2.0 + 1e-12, 2.0).value, 2.0, 1e-11);
  EXPECT_THROW(features::berhu(1.0, 0.0), features::NonPositiveC);
  EXPECT_THROW(features::berhu(1.0, -1.0), features::NonPositiveC);
}

TEST(BerHu, GradientMatchesFiniteDifferences) {
  Rng rng(32);
  const double c = 0.7;
  for (int i = 0; i < 2000; ++i) {
    const double r = rng.uniform(-3.0, 3.0);
    if (std::abs(std::abs(r) - c) < 1e-6 || std::abs(r) < 1e-6) continue;  // kink/branch point
    const double h = 1e-6 * std::max(1.0, std::abs(r));
    const double fd = (features::berhu(r + h, c).value - features::berhu(r - h, c).value) / (2 * h);
    const double an = features::berhu(r, c).derivative;
    EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(BerHu, Convexity) {
  // Midpoint convexity across the branch structure.
  Rng rng(33);
  const double c = 1.2;
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-5.0, 5.0), b = rng.uniform(-5.0, 5.0);
    const double mid = features::berhu((a + b) / 2.0, c).value;
    const double avg = (features::berhu(a, c).value + features::berhu(b, c).value) / 2.0;
    EXPECT_LE(mid, avg + 1e-12);
  }
}

TEST(DataLoss, PerfectBatchIsZero) {
  const std::vector<std::pair<Vec3, Vec3>> batch = {{{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}}};
  const auto r = features::data_loss(batch);
  EXPECT_DOUBLE_EQ(r.loss, 0.0);
  EXPECT_DOUBLE_EQ(r.c, 0.0);
}

TEST(DataLoss, SingleResidualWorkedValue) {
  // Residual (1, 0, 0): c = 0.2, x on the quadratic branch.
  const std::vector<std::pair<Vec3, Vec3>> batch = {{{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}};
  const auto r = features::data_loss(batch);
  EXPECT_DOUBLE_EQ(r.c, 0.2);
  EXPECT_NEAR(r.loss, (1.0 + 0.04) / 0.4 / 3.0, 1e-15);
  EXPECT_NEAR(r.loss, 0.8666666666666667, 1e-12);
}

TEST(DataLoss, TwoSampleWorkedValue) {
  // Residuals 0.1 (absolute branch) and 1.0 (quadratic): L = (0.1 + 2.6) / 6.
  const std::vector<std::pair<Vec3, Vec3>> batch = {{{0.1, 0.0, 0.0}, {0.0, 0.0, 0.0}},
                                                    {{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}};
  const auto r = features::data_loss(batch);
  EXPECT_DOUBLE_EQ(r.c, 0.2);
  EXPECT_NEAR(r.loss, 0.45, 1e-15);
}

TEST(DataLoss, EmptyBatchThrows) {
  EXPECT_THROW(features::data_loss(std::vector<std::pair<Vec3, Vec3>>{}), features::EmptyBatch);
}

TEST(DataLoss, GradientMatchesFiniteDifferencesFrozenC) {
  Rng rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<Vec3, Vec3>> batch;
    const int n = rng.uniform_int(1, 8);
    for (int i = 0; i < n; ++i) {
      const Vec3 star{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
      const Vec3 phi{star.x + rng.uniform(-1, 1), star.y + rng.uniform(-1, 1),
                     star.z + rng.uniform(-1, 1)};
      batch.push_back({phi, star});
    }
    const auto base = features::data_loss(batch);
    if (base.c == 0.0) continue;

    // Finite differences with c frozen at the batch value.
    const double scale = 1.0 / (3.0 * n);
    const auto loss_frozen = [&](const std::vector<std::pair<Vec3, Vec3>>& b) {
      double s = 0.0;
      for (const auto& [phi, star] : b) {
        const Vec3 r = phi - star;
        s += features::berhu(r.x, base.c).value + features::berhu(r.y, base.c).value +
             features::berhu(r.z, base.c).value;
      }
      return scale * s;
    };
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
      for (int axis = 0; axis < 3; ++axis) {
        auto& comp = axis == 0 ? batch[static_cast<std::size_t>(i)].first.x
                    : axis == 1 ? batch[static_cast<std::size_t>(i)].first.y
                                : batch[static_cast<std::size_t>(i)].first.z;
        const double r = comp - (axis == 0 ? batch[static_cast<std::size_t>(i)].second.x
                         : axis == 1       ? batch[static_cast<std::size_t>(i)].second.y
                                           : batch[static_cast<std::size_t>(i)].second.z);
        if (std::abs(std::abs(r) - base.c) < 1e-5 || std::abs(r) < 1e-5) continue;
        const double saved = comp;
        comp = saved + h;
        const double up = loss_frozen(batch);
        comp = saved - h;
        const double down = loss_frozen(batch);
        comp = saved;
        const double fd = (up - down) / (2 * h);
        const auto& g = base.gradients[static_cast<std::size_t>(i)];
        const double an = axis == 0 ? g.x : axis == 1 ? g.y : g.z;
        EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}
