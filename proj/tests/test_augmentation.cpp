#include <cmath>

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "ace/augmentation.hpp"
#include "ace/decoder.hpp"
#include "ace/model.hpp"
#include "ace/rng.hpp"

TEST(Augmentation, NoiseIsStandardNormal) {
  auto rng = ace::make_rng(11);
  auto draw = ace::sample_noise(100000, rng);
  for (const auto& t : {draw.gamma, draw.beta}) {
    auto v = t.to(torch::kDouble).flatten();
    const double mean = v.mean().item<double>();
    const double std = (v - mean).square().mean().sqrt().item<double>();
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(std, 1.0, 0.02);
  }
}

TEST(Augmentation, MeanAbsoluteGammaMatchesHalfNormal) {
  auto rng = ace::make_rng(12);
  auto draw = ace::sample_noise(10000, rng);
  EXPECT_NEAR(draw.gamma.abs().mean().item<double>(), std::sqrt(2.0 / M_PI), 0.05);
}

TEST(Augmentation, NoiseShapeAndDeterminism) {
  auto a = ace::make_rng(5);
  auto b = ace::make_rng(5);
  auto da = ace::sample_noise(7, a, 3);
  auto db = ace::sample_noise(7, b, 3);
  EXPECT_EQ(da.gamma.sizes(), (std::vector<int64_t>{3, 7}));
  EXPECT_TRUE(torch::equal(da.gamma, db.gamma));
  EXPECT_TRUE(torch::equal(da.beta, db.beta));
  EXPECT_FALSE(torch::equal(da.gamma, da.beta));
  EXPECT_THROW(ace::sample_noise(0, a), std::invalid_argument);
}

TEST(Augmentation, LatentPreservesShapeAndSetsDrawnMoments) {
  torch::manual_seed(1);
  auto z = torch::randn({2, 16, 16, 16}) + 3.0;
  auto rng = ace::make_rng(9);
  auto replay = ace::make_rng(9);
  auto out = ace::augment_latent(z, rng);
  auto draw = ace::sample_noise(16, replay, 2);
  ASSERT_EQ(out.sizes(), z.sizes());
  EXPECT_LT((ace::instance_mean(out) - draw.beta).abs().max().item<double>(), 1e-4);
  EXPECT_LT((ace::instance_std(out) - draw.gamma.abs()).abs().max().item<double>(), 1e-4);
}

TEST(Augmentation, PositiveGammaPreservesSpatialRanking) {
  torch::manual_seed(2);
  auto z = torch::randn({1, 1, 8, 8});
  auto out = ace::adain(z, torch::full({1}, 0.7), torch::full({1}, -2.0));
  EXPECT_TRUE(torch::equal(z.flatten().argsort(), out.flatten().argsort()));
}

TEST(Augmentation, LatentViewsDiffer) {
  auto z = torch::randn({2, 8, 4, 4});
  auto rng = ace::make_rng(1);
  auto v1 = ace::augment_latent(z, rng);
  auto v2 = ace::augment_latent(z, rng);
  EXPECT_GT((v1 - v2).abs().max().item<double>(), 1e-3);
}

TEST(Augmentation, ImageModeIsSeededAndNoiseDependent) {
  torch::manual_seed(0);
  ace::ModelDims dims;
  dims.feature_channels = 16;
  dims.content_channels = 16;
  dims.content_blocks = 1;
  dims.decoder_blocks = 1;
  ace::AceGenerator model(dims);
  auto x = torch::rand({2, 3, 16, 16}) * 2 - 1;
  auto r1 = ace::make_rng(3);
  auto r2 = ace::make_rng(3);
  auto r3 = ace::make_rng(4);
  auto a = ace::augment_image(x, *model, r1);
  auto b = ace::augment_image(x, *model, r2);
  auto c = ace::augment_image(x, *model, r3);
  EXPECT_EQ(a.sizes(), x.sizes());
  EXPECT_TRUE(torch::equal(a, b));
  EXPECT_FALSE(torch::equal(a, c));
  EXPECT_LE(a.abs().max().item<double>(), 1.0);
}

TEST(Augmentation, ModeNames) {
  EXPECT_EQ(ace::parse_augmentation_mode("latent"), ace::AugmentationMode::kLatent);
  EXPECT_EQ(ace::parse_augmentation_mode("image"), ace::AugmentationMode::kImage);
  EXPECT_EQ(ace::to_string(ace::AugmentationMode::kImage), "image");
  EXPECT_THROW(ace::parse_augmentation_mode("pixel"), std::invalid_argument);
}
