#include "lipkit/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "lipkit/error.hpp"

namespace lipkit {

namespace {

LatentClip zeros_like(const LatentClip& clip) { return LatentClip(clip.shape()); }

std::vector<std::vector<double>> zero_audio(const std::vector<std::vector<double>>& audio) {
  std::vector<std::vector<double>> out(audio.size());
  for (std::size_t i = 0; i < audio.size(); ++i) out[i].assign(audio[i].size(), 0.0);
  return out;
}

void check_clip_index(const BarFixture& fixture, int clip) {
  require(clip >= 0 && clip < static_cast<int>(fixture.clips.size()), ErrorKind::InvalidArgument,
          "fixture clip index out of range");
}

void check_length(const BarFixture& fixture, const Schedule& schedule) {
  validate_schedule(schedule);
  require(fixture.config.frames > schedule.keyframe_count * schedule.spacing, ErrorKind::InvalidArgument,
          "fixture clips need more than T*S frames");
}

// Mirrors the Adam update of Kingma & Ba with bias correction.
class Adam {
 public:
  Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i] * grads[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace

StageSample keyframe_stage_sample(const BarFixture& fixture, int clip, const Schedule& schedule) {
  check_clip_index(fixture, clip);
  check_length(fixture, schedule);
  const LatentClip& video = fixture.clips[static_cast<std::size_t>(clip)];
  std::vector<LatentClip> targets, refs;
  std::vector<std::vector<double>> audio;
  const LatentClip identity = video.frame_clip(0);
  for (int t : keyframe_indices(schedule)) {
    targets.push_back(video.frame_clip(t));
    refs.push_back(identity);
    audio.push_back(fixture.audio[static_cast<std::size_t>(clip)][static_cast<std::size_t>(t)]);
  }
  return StageSample{LatentClip::concat(targets), Conditioning{LatentClip::concat(refs), std::move(audio)},
                     std::vector<bool>(targets.size(), false)};
}

StageSample interpolation_stage_sample(const BarFixture& fixture, int clip, int segment,
                                       const Schedule& schedule, const LatentClip& boundary_a,
                                       const LatentClip& boundary_b, const LatentClip& slot) {
  check_clip_index(fixture, clip);
  check_length(fixture, schedule);
  require(segment >= 0 && segment + 1 < schedule.keyframe_count, ErrorKind::InvalidArgument,
          "interpolation segment out of range");
  const int spacing = schedule.spacing;
  const int t_a = (segment + 1) * spacing;
  const LatentClip& video = fixture.clips[static_cast<std::size_t>(clip)];
  InterpolationInput input = build_interpolation_input(boundary_a, boundary_b, slot, spacing);

  std::vector<LatentClip> targets;
  std::vector<std::vector<double>> audio;
  for (int j = 0; j < spacing + 2; ++j) {
    const int t = t_a + std::min(j, spacing);
    targets.push_back(video.frame_clip(t));
    audio.push_back(fixture.audio[static_cast<std::size_t>(clip)][static_cast<std::size_t>(t)]);
  }
  return StageSample{LatentClip::concat(targets), Conditioning{std::move(input.sequence), std::move(audio)},
                     std::move(input.is_slot)};
}

void validate_train_config(const TrainConfig& config) {
  validate_schedule(config.schedule);
  require(config.steps >= 1, ErrorKind::InvalidArgument, "training needs at least one step");
  require(config.batch >= 1, ErrorKind::InvalidArgument, "batch size must be >= 1");
  require(config.learning_rate > 0.0, ErrorKind::InvalidArgument, "learning rate must be positive");
  require(config.drop_audio >= 0.0 && config.drop_audio <= 1.0 && config.drop_identity >= 0.0 &&
              config.drop_identity <= 1.0,
          ErrorKind::InvalidArgument, "drop rates must lie in [0, 1]");
  require(config.sigma_log_std > 0.0, ErrorKind::InvalidArgument, "sigma_log_std must be positive");
  require(config.lambda_2 >= 0.0, ErrorKind::InvalidArgument, "lambda_2 must be >= 0");
  require(config.smoothing_window >= 1, ErrorKind::InvalidArgument, "smoothing window must be >= 1");
  require(config.edm.sigma_data > 0.0, ErrorKind::InvalidArgument, "sigma_data must be positive");
}

LossBreakdown masked_training_loss(const ToyDenoiser& model, const StageSample& sample,
                                   const LatentClip& noise, double sigma, const MaskRaster& latent_mask,
                                   int rgb_frame, const EdmParams& edm, double lambda_2,
                                   LossGradients* grads) {
  require_same_shape(sample.target, noise, "masked_training_loss noise");
  require(rgb_frame >= 0 && rgb_frame < sample.target.frames(), ErrorKind::InvalidArgument,
          "rgb frame index out of range");
  LatentClip noised = sample.target;
  {
    auto n = noised.values();
    auto e = noise.values();
    for (std::size_t i = 0; i < n.size(); ++i) n[i] += sigma * e[i];
  }
  const LatentClip x = blend_latents(sample.target, noised, latent_mask);
  const EdmCoefficients c = edm_coefficients(sigma, edm);
  LatentClip scaled = x;
  for (double& v : scaled.values()) v *= c.c_in;
  const LatentClip raw = model.forward(scaled, c.c_noise, sample.conditioning);
  LatentClip prediction = x;
  {
    auto p = prediction.values();
    auto r = raw.values();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = c.c_skip * p[i] + c.c_out * r[i];
  }

  LossBreakdown out;
  out.lambda = edm_loss_weight(sigma, edm);
  out.latent = latent_loss(prediction, sample.target, 1.0, latent_mask);
  const LatentClip target_frame = sample.target.frame_clip(rgb_frame);
  const LatentClip decoded_frame = prediction.frame_clip(rgb_frame);  // identity decoder
  out.rgb = rgb_loss(decoded_frame, target_frame, 1.0, latent_mask);
  out.total = total_loss(out.latent, out.rgb, out.lambda, lambda_2);
  if (grads == nullptr) return out;

  LatentClip d_pred = latent_loss_gradient(prediction, sample.target, out.lambda, latent_mask);
  {
    const LatentClip d_rgb =
        latent_loss_gradient(decoded_frame, target_frame, out.lambda * lambda_2, latent_mask);
    auto dst = d_pred.frame(rgb_frame);
    auto src = d_rgb.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  LatentClip d_raw = d_pred;
  for (double& v : d_raw.values()) v *= c.c_out;
  ToyDenoiser::Gradients g = model.backward(scaled, c.c_noise, sample.conditioning, d_raw);

  const std::size_t slot = model.slot_offset();
  for (int t = 0; t < sample.target.frames(); ++t) {
    if (t >= static_cast<int>(sample.is_slot.size()) || !sample.is_slot[static_cast<std::size_t>(t)]) continue;
    auto gr = g.reference.frame(t);
    for (std::size_t i = 0; i < gr.size(); ++i) g.params[slot + i] += gr[i];
  }

  LatentClip d_x = d_pred;
  {
    auto dx = d_x.values();
    auto gi = g.input.values();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = c.c_skip * dx[i] + c.c_in * gi[i];
  }
  grads->params = std::move(g.params);
  grads->prediction = std::move(d_pred);
  grads->noised = blend_latents(zeros_like(d_x), d_x, latent_mask);
  return out;
}

double masked_objective(const LatentClip& prediction, const LatentClip& target, const MaskRaster& latent_mask,
                        int rgb_frame, double lambda_t, double lambda_2) {
  const double l_latent = latent_loss(prediction, target, 1.0, latent_mask);
  const double l_rgb =
      rgb_loss(prediction.frame_clip(rgb_frame), target.frame_clip(rgb_frame), 1.0, latent_mask);
  return total_loss(l_latent, l_rgb, lambda_t, lambda_2);
}

TrainResult toy_train(const BarFixture& fixture, const TrainConfig& config) {
  validate_train_config(config);
  check_length(fixture, config.schedule);
  std::vector<int> clips = config.train_clips;
  if (clips.empty()) {
    for (int i = 0; i < static_cast<int>(fixture.clips.size()); ++i) clips.push_back(i);
  }
  for (int c : clips) check_clip_index(fixture, c);

  const auto& fc = fixture.config;
  TrainResult result;
  result.model = ToyDenoiser(ToyModelShape{fc.channels, fc.height, fc.width, fc.audio_dim, config.hidden, 16},
                             config.seed);
  ToyDenoiser& model = result.model;
  Adam adam(model.parameters().size(), config.learning_rate);

  std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double log_mean = std::log(config.edm.sigma_data);
  const int segments = config.schedule.keyframe_count - 1;

  std::vector<double> grad_sum(model.parameters().size());
  for (int step = 0; step < config.steps; ++step) {
    std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
    double loss_sum = 0.0;
    for (int b = 0; b < config.batch; ++b) {
      const int clip = clips[static_cast<std::size_t>(uniform(rng) * clips.size()) % clips.size()];
      const bool interpolation = ((step * config.batch + b) % 2) == 1;
      StageSample sample;
      if (interpolation) {
        const int segment = static_cast<int>(uniform(rng) * segments) % segments;
        const LatentClip& video = fixture.clips[static_cast<std::size_t>(clip)];
        const int t_a = (segment + 1) * config.schedule.spacing;
        sample = interpolation_stage_sample(fixture, clip, segment, config.schedule, video.frame_clip(t_a),
                                            video.frame_clip(t_a + config.schedule.spacing),
                                            model.slot_frame());
      } else {
        sample = keyframe_stage_sample(fixture, clip, config.schedule);
      }
      if (uniform(rng) < config.drop_audio) {
        sample.conditioning.audio = zero_audio(sample.conditioning.audio);
      }
      if (uniform(rng) < config.drop_identity) {
        sample.conditioning.reference = zeros_like(sample.conditioning.reference);
        std::fill(sample.is_slot.begin(), sample.is_slot.end(), false);
      }
      const double sigma = std::exp(log_mean + config.sigma_log_std * normal(rng));
      LatentClip noise(sample.target.shape());
      for (double& v : noise.values()) v = normal(rng);
      const int rgb_frame = static_cast<int>(uniform(rng) * sample.target.frames()) % sample.target.frames();

      LossGradients grads;
      const LossBreakdown loss = masked_training_loss(model, sample, noise, sigma, fixture.latent_mask,
                                                      rgb_frame, config.edm, config.lambda_2, &grads);
      if (!std::isfinite(loss.total)) {
        std::ostringstream msg;
        msg << "non-finite loss at step " << step << " (sigma=" << sigma << ", latent=" << loss.latent
            << ", rgb=" << loss.rgb << ")";
        fail(ErrorKind::Numeric, msg.str());
      }
      loss_sum += loss.total;
      for (std::size_t i = 0; i < grad_sum.size(); ++i) grad_sum[i] += grads.params[i];
    }
    double norm2 = 0.0;
    for (double& g : grad_sum) {
      g /= config.batch;
      norm2 += g * g;
    }
    const double norm = std::sqrt(norm2);
    if (!std::isfinite(norm)) {
      fail(ErrorKind::Numeric, "non-finite gradient at step " + std::to_string(step));
    }
    if (config.grad_clip > 0.0 && norm > config.grad_clip) {
      for (double& g : grad_sum) g *= config.grad_clip / norm;
    }
    adam.step(model.parameters(), grad_sum);
    result.losses.push_back(loss_sum / config.batch);
  }

  const std::size_t window = std::min<std::size_t>(static_cast<std::size_t>(config.smoothing_window),
                                                   result.losses.size());
  double running = 0.0;
  for (std::size_t i = 0; i < result.losses.size(); ++i) {
    running += result.losses[i];
    if (i >= window) running -= result.losses[i - window];
    result.smoothed.push_back(running / static_cast<double>(std::min(i + 1, window)));
  }
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    head += result.losses[i];
    tail += result.losses[result.losses.size() - window + i];
  }
  result.initial_smoothed = head / static_cast<double>(window);
  result.final_smoothed = tail / static_cast<double>(window);
  return result;
}

LatentClip toy_sample(const DenoiserFn& network, const LatentClip& masked_input, const MaskRaster& latent_mask,
                      const Conditioning& conditioning, const SampleConfig& config) {
  require(config.n_steps >= 1, ErrorKind::InvalidArgument, "sampling needs at least one step");
  require_same_shape(masked_input, conditioning.reference, "toy_sample reference");
  require(conditioning.audio.size() == static_cast<std::size_t>(masked_input.frames()),
          ErrorKind::ShapeMismatch, "toy_sample needs one audio vector per frame");
  const std::vector<double> sigmas = karras_sigmas(config.n_steps, config.sigma_min, config.sigma_max, config.rho);

  const Conditioning empty{zeros_like(conditioning.reference), zero_audio(conditioning.audio)};
  const Conditioning identity_only{conditioning.reference, zero_audio(conditioning.audio)};

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LatentClip start(masked_input.shape());
  for (double& v : start.values()) v = sigmas.front() * normal(rng);
  LatentClip x = blend_latents(masked_input, start, latent_mask);

  for (int i = 0; i < config.n_steps; ++i) {
    const double sigma = sigmas[static_cast<std::size_t>(i)];
    const double next = sigmas[static_cast<std::size_t>(i) + 1];
    const LatentClip d_empty = denoise(x, sigma, network, empty, config.edm);
    const LatentClip d_id = denoise(x, sigma, network, identity_only, config.edm);
    const LatentClip d_full = denoise(x, sigma, network, conditioning, config.edm);
    const LatentClip guided = guided_combine(d_empty, d_id, d_full, config.guidance);
    LatentClip stepped = guided;
    if (next > 0.0) {
      auto s = stepped.values();
      auto xv = x.values();
      auto g = guided.values();
      for (std::size_t k = 0; k < s.size(); ++k) s[k] = xv[k] + (next - sigma) * (xv[k] - g[k]) / sigma;
    }
    require(stepped.all_finite(), ErrorKind::Numeric, "sampler produced non-finite values at step " +
                                                          std::to_string(i));
    x = blend_latents(masked_input, stepped, latent_mask);
  }
  return x;
}

}  // namespace lipkit
