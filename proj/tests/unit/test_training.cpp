#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "lipkit/error.hpp"
#include "lipkit/synthetic.hpp"
#include "lipkit/training.hpp"

using namespace lipkit;

namespace {

BarFixture small_fixture() {
  BarFixtureConfig cfg;
  cfg.clips = 2;
  cfg.channels = 2;
  cfg.height = 4;
  cfg.width = 4;
  cfg.audio_dim = 4;
  cfg.frames = 7;
  cfg.seed = 3;
  return make_sliding_bar_fixture(cfg);
}

double l2(const LatentClip& a, const LatentClip& b, const MaskRaster& m) {
  double s = 0.0;
  for (int t = 0; t < a.frames(); ++t)
    for (int c = 0; c < a.channels(); ++c)
      for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
          if (m.at(x, y)) s += std::pow(a.at(t, c, y, x) - b.at(t, c, y, x), 2);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("stage samples follow the schedule") {
  const BarFixture fx = small_fixture();
  const Schedule sched{3, 2};
  const StageSample key = keyframe_stage_sample(fx, 1, sched);
  REQUIRE(key.target.frames() == 3);
  for (int k = 0; k < 3; ++k) {
    const int t = (k + 1) * 2;
    for (std::size_t i = 0; i < key.target.frame(k).size(); ++i) {
      CHECK(key.target.frame(k)[i] == fx.clips[1].frame(t)[i]);
      CHECK(key.conditioning.reference.frame(k)[i] == fx.clips[1].frame(0)[i]);
    }
    CHECK(key.conditioning.audio[static_cast<std::size_t>(k)] == fx.audio[1][static_cast<std::size_t>(t)]);
  }

  gen::Gen g(1);
  const LatentShape one{1, 2, 4, 4};
  const LatentClip a = g.clip(one), b = g.clip(one), slot = g.clip(one);
  const StageSample in = interpolation_stage_sample(fx, 0, 1, sched, a, b, slot);
  REQUIRE(in.target.frames() == 4);
  CHECK(in.is_slot == std::vector<bool>{false, true, true, false});
  const int targets[] = {4, 5, 6, 6};
  for (int j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < in.target.frame(j).size(); ++i)
      CHECK(in.target.frame(j)[i] == fx.clips[0].frame(targets[j])[i]);
  CHECK_THROWS_AS(interpolation_stage_sample(fx, 0, 2, sched, a, b, slot), Error);
  CHECK_THROWS_AS(keyframe_stage_sample(fx, 2, sched), Error);
}

TEST_CASE("masked objective gradient vanishes outside the mask") {
  gen::Gen g(2);
  const LatentShape s{2, 1, 4, 4};
  const MaskRaster m = g.mask(4, 4);
  const LatentClip target = g.clip(s);
  LatentClip pred = g.clip(s);
  const double h = 1e-5;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    LatentClip up = pred, dn = pred;
    up.values()[i] += h;
    dn.values()[i] -= h;
    const double fd = (masked_objective(up, target, m, 1, 8.0, 1.0) - masked_objective(dn, target, m, 1, 8.0, 1.0)) /
                      (2 * h);
    const int cell = static_cast<int>(i % 16);
    if (!m.bits()[static_cast<std::size_t>(cell)]) {
      CHECK(std::abs(fd) <= 1e-4);
    } else {
      CHECK(std::abs(fd) > 0.0);
    }
  }
}

TEST_CASE("training loss gradients match finite differences") {
  const BarFixture fx = small_fixture();
  const Schedule sched{3, 2};
  ToyDenoiser model(ToyModelShape{2, 4, 4, 4, 6, 8}, 5);
  gen::Gen g(6);
  // Non-zero slot so the slot path is exercised.
  for (std::size_t i = model.slot_offset(); i < model.parameters().size(); ++i) model.parameters()[i] = g.normal(0.3);

  const StageSample key = keyframe_stage_sample(fx, 0, sched);
  const StageSample interp =
      interpolation_stage_sample(fx, 1, 0, sched, fx.clips[1].frame_clip(2), fx.clips[1].frame_clip(4),
                                 model.slot_frame());
  for (const StageSample* sample : {&key, &interp}) {
    const LatentClip noise = g.clip(sample->target.shape());
    const double sigma = 0.7;
    LossGradients grads;
    masked_training_loss(model, *sample, noise, sigma, fx.latent_mask, 1, EdmParams{}, 1.0, &grads);

    auto loss_at = [&](const ToyDenoiser& mdl, const StageSample& smp, const LatentClip& nz) {
      return masked_training_loss(mdl, smp, nz, sigma, fx.latent_mask, 1, EdmParams{}, 1.0).total;
    };
    const double h = 1e-6;
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t k = static_cast<std::size_t>(g.integer(0, static_cast<int>(model.parameters().size()) - 1));
      ToyDenoiser up = model, dn = model;
      up.parameters()[k] += h;
      dn.parameters()[k] -= h;
      StageSample su = *sample, sd = *sample;
      // The slot parameters enter through the reference frames of slot positions.
      if (k >= model.slot_offset()) {
        const std::size_t off = k - model.slot_offset();
        for (int t = 0; t < sample->target.frames(); ++t) {
          if (!sample->is_slot[static_cast<std::size_t>(t)]) continue;
          su.conditioning.reference.frame(t)[off] += h;
          sd.conditioning.reference.frame(t)[off] -= h;
        }
      }
      const double fd = (loss_at(up, su, noise) - loss_at(dn, sd, noise)) / (2 * h);
      CHECK(std::abs(fd - grads.params[k]) <= 1e-5 * (1.0 + std::abs(fd)));
    }
    // Noise only reaches the loss inside the mask.
    for (std::size_t i = 0; i < noise.size(); ++i) {
      LatentClip up = noise, dn = noise;
      up.values()[i] += h;
      dn.values()[i] -= h;
      const double fd = (loss_at(model, *sample, up) - loss_at(model, *sample, dn)) / (2 * h);
      const std::size_t cell = i % 16;
      if (!fx.latent_mask.bits()[cell]) {
        CHECK(std::abs(fd) <= 1e-4);
        CHECK(grads.noised.values()[i] == 0.0);
      } else {
        CHECK(std::abs(fd - sigma * grads.noised.values()[i]) <= 1e-5 * (1.0 + std::abs(fd)));
      }
    }
  }
}

TEST_CASE("single-step sampling with an oracle network returns the target") {
  gen::Gen g(7);
  const LatentShape s{3, 2, 4, 4};
  const LatentClip target = g.clip(s);
  const MaskRaster m = g.mask(4, 4);
  const LatentClip masked_input = blend_latents(target, LatentClip(s), m);
  const EdmParams edm;
  // F chosen so that D(x; sigma) == target for every input.
  const DenoiserFn oracle = [&](const LatentClip& scaled, double label, const Conditioning&) {
    const double sigma = std::exp(4.0 * label);
    const auto c = edm_coefficients(sigma, edm);
    LatentClip out(scaled.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out.values()[i] = (target.values()[i] - c.c_skip * scaled.values()[i] / c.c_in) / c.c_out;
    }
    return out;
  };
  Conditioning cond{LatentClip(s), std::vector<std::vector<double>>(3, std::vector<double>(4, 0.0))};
  SampleConfig cfg;
  cfg.n_steps = 1;
  const LatentClip out = toy_sample(oracle, masked_input, m, cond, cfg);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (m.bits()[i % 16]) {
      CHECK(std::abs(out.values()[i] - target.values()[i]) <= 1e-9);
    } else {
      CHECK(out.values()[i] == masked_input.values()[i]);
    }
  }
  cfg.n_steps = 0;
  CHECK_THROWS_AS(toy_sample(oracle, masked_input, m, cond, cfg), Error);
}

TEST_CASE("toy training") {
  TrainConfig bad;
  bad.steps = 0;
  CHECK_THROWS_AS(validate_train_config(bad), Error);

  const BarFixture fx = make_sliding_bar_fixture(BarFixtureConfig{});
  TrainConfig cfg;
  cfg.steps = 120;
  cfg.smoothing_window = 20;
  const TrainResult a = toy_train(fx, cfg);
  const TrainResult b = toy_train(fx, cfg);
  REQUIRE(a.losses.size() == 120);
  CHECK(a.losses == b.losses);
  CHECK(a.model.parameters() == b.model.parameters());
  CHECK(a.final_smoothed < a.initial_smoothed);

  // Trained denoiser moves noisy keyframes toward the clean target.
  const StageSample key = keyframe_stage_sample(fx, 0, cfg.schedule);
  gen::Gen g(8);
  const DenoiserFn net = a.model.as_fn();
  int closer = 0;
  const int trials = 10;
  for (int trial = 0; trial < trials; ++trial) {
    const double sigma = 0.5;
    LatentClip noisy = key.target;
    for (double& v : noisy.values()) v += sigma * g.normal();
    const LatentClip x = blend_latents(key.target, noisy, fx.latent_mask);
    const LatentClip d = denoise(x, sigma, net, key.conditioning, cfg.edm);
    if (l2(d, key.target, fx.latent_mask) < l2(x, key.target, fx.latent_mask)) ++closer;
  }
  CHECK(closer == trials);

  // Model persistence.
  const auto dir = gen::temp_dir("model");
  a.model.save(dir / "m.f32");
  const ToyDenoiser back = ToyDenoiser::load(dir / "m.f32", a.model.shape());
  REQUIRE(back.parameters().size() == a.model.parameters().size());
  for (std::size_t i = 0; i < back.parameters().size(); ++i) {
    // Stored as float32.
    CHECK(back.parameters()[i] == static_cast<double>(static_cast<float>(a.model.parameters()[i])));
  }
  std::filesystem::remove_all(dir);
}
