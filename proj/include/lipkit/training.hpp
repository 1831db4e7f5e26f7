#pragma once

#include <cstdint>
#include <vector>

#include "lipkit/edm.hpp"
#include "lipkit/synthetic.hpp"
#include "lipkit/toy_model.hpp"

namespace lipkit {

/// One training or sampling sequence for either stage.
struct StageSample {
  LatentClip target;            // clean latents at the sequence positions
  Conditioning conditioning;    // reference frames + per-position audio
  std::vector<bool> is_slot;    // positions whose reference is the slot z_m
};

/// Keyframe stage: frames t_k = k*S, identity frame (frame 0) repeated as
/// the reference.
StageSample keyframe_stage_sample(const BarFixture& fixture, int clip, const Schedule& schedule);

/// Interpolation stage between keyframes k = segment+1 and segment+2.
/// Sequence of S+2 positions [z_a, z_m x S, z_b]; position j targets frame
/// t_a + min(j, S), so slot position S and the closing keyframe both
/// target t_b. The stitcher keeps positions 0..S-1 of each segment.
StageSample interpolation_stage_sample(const BarFixture& fixture, int clip, int segment,
                                       const Schedule& schedule, const LatentClip& boundary_a,
                                       const LatentClip& boundary_b, const LatentClip& slot);

struct TrainConfig {
  Schedule schedule;
  EdmParams edm;
  int steps = 500;
  int batch = 8;
  double learning_rate = 5e-3;
  double drop_audio = 0.2;
  double drop_identity = 0.1;
  double sigma_log_std = 1.2;  // log-normal sigma, location ln(sigma_data)
  double lambda_2 = 1.0;
  int hidden = 128;
  int smoothing_window = 50;
  double grad_clip = 5.0;
  std::uint64_t seed = 7;
  std::vector<int> train_clips;  // empty: every clip
};

void validate_train_config(const TrainConfig& config);

struct LossBreakdown {
  double total = 0.0;
  double latent = 0.0;
  double rgb = 0.0;
  double lambda = 0.0;
};

struct LossGradients {
  std::vector<double> params;   // includes the slot embedding
  LatentClip prediction;        // d total / d D(x)
  LatentClip noised;            // d total / d noised latent z^n
};

/// Masked two-term objective for one sequence:
///   x = blend(target, target + sigma*noise, mask)
///   D = denoise(x)
///   total = lambda(sigma) * (latent_loss(D, target) + lambda_2 * rgb_loss(D[j], target[j]))
/// with the identity decoder for the pixel term. Fills `grads` if non-null.
LossBreakdown masked_training_loss(const ToyDenoiser& model, const StageSample& sample,
                                   const LatentClip& noise, double sigma, const MaskRaster& latent_mask,
                                   int rgb_frame, const EdmParams& edm, double lambda_2,
                                   LossGradients* grads = nullptr);

/// Same objective evaluated on an explicit prediction D (no network), used
/// to check the masked-gradient property directly.
double masked_objective(const LatentClip& prediction, const LatentClip& target, const MaskRaster& latent_mask,
                        int rgb_frame, double lambda_t, double lambda_2);

struct TrainResult {
  ToyDenoiser model;
  std::vector<double> losses;    // mean batch loss per step
  std::vector<double> smoothed;  // trailing moving average
  double initial_smoothed = 0.0; // mean over the first window
  double final_smoothed = 0.0;   // mean over the last window
};

/// Adam on the masked objective, alternating keyframe and interpolation
/// sequences, with classifier-free condition dropout (dropped conditions
/// become zeros). Deterministic for a fixed seed. Throws ErrorKind::Numeric
/// on a non-finite loss.
TrainResult toy_train(const BarFixture& fixture, const TrainConfig& config);

struct SampleConfig {
  int n_steps = 10;
  double sigma_min = 0.02;
  double sigma_max = 10.0;
  double rho = 7.0;
  GuidanceWeights guidance;
  EdmParams edm;
  std::uint64_t seed = 7;
};

/// Euler sampler over a Karras sigma grid. Each step evaluates the denoiser
/// with no conditions, identity only, and identity + audio, combines them
/// with guided_combine, then re-imposes the unmasked region of
/// `masked_input` via blend_latents.
LatentClip toy_sample(const DenoiserFn& network, const LatentClip& masked_input, const MaskRaster& latent_mask,
                      const Conditioning& conditioning, const SampleConfig& config);

}  // namespace lipkit
