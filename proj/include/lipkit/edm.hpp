#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lipkit/latent.hpp"
#include "lipkit/mask.hpp"

namespace lipkit {

struct EdmParams {
  double sigma_data = 0.5;
};

struct EdmCoefficients {
  double c_skip = 0.0;
  double c_out = 0.0;
  double c_in = 0.0;
  double c_noise = 0.0;
};

/// Karras et al. preconditioning:
///   c_skip = sd^2 / (s^2 + sd^2)      c_out = s*sd / sqrt(s^2 + sd^2)
///   c_in   = 1 / sqrt(s^2 + sd^2)     c_noise = ln(s) / 4
EdmCoefficients edm_coefficients(double sigma, const EdmParams& params = {});

/// Loss weight lambda(sigma) = (s^2 + sd^2) / (s*sd)^2, i.e. 1 / c_out^2.
double edm_loss_weight(double sigma, const EdmParams& params = {});

/// Conditioning handed to the raw network. Per-frame reference latents
/// (identity frame repeated, or boundary keyframes with slot frames) and
/// per-frame audio features. Either may be zeroed for guidance.
struct Conditioning {
  LatentClip reference;
  std::vector<std::vector<double>> audio;
};

/// Raw network F(c_in * x, c_noise, conditioning). Must preserve shape.
using DenoiserFn = std::function<LatentClip(const LatentClip&, double, const Conditioning&)>;

/// D(x; sigma) = c_skip * x + c_out * F(c_in * x; c_noise).
LatentClip denoise(const LatentClip& x, double sigma, const DenoiserFn& network,
                   const Conditioning& conditioning, const EdmParams& params = {});

struct Schedule {
  int keyframe_count = 14;  // T
  int spacing = 12;         // S
};

void validate_schedule(const Schedule& schedule);

/// [S, 2S, ..., T*S]
std::vector<int> keyframe_indices(const Schedule& schedule);

struct InterpolationInput {
  LatentClip sequence;         // S + 2 frames: [z_a, slot x S, z_b]
  std::vector<bool> is_slot;   // true where the slot embedding sits
};

/// z_a, z_b and slot are one-frame clips of identical shape.
InterpolationInput build_interpolation_input(const LatentClip& z_a, const LatentClip& z_b,
                                             const LatentClip& slot, int spacing);

using VectorMap = std::function<std::vector<double>(std::span<const double>)>;

/// t' = t + mlp(audio); mlp output must have the length of t.
std::vector<double> add_audio_to_timestep(std::span<const double> timestep_embedding,
                                          std::span<const double> audio_features, const VectorMap& mlp);

struct GuidanceWeights {
  double w_aud = 5.0;
  double w_id = 2.0;
};

/// z = z_empty + w_id (z_id - z_empty) + w_aud (z_id_aud - z_id).
///
/// Evaluated in the regrouped form (1 - w_id) z_empty + (w_id - w_aud) z_id
/// + w_aud z_id_aud, which is algebraically identical and returns z_id_aud
/// bit-exactly when both weights are 1.
LatentClip guided_combine(const LatentClip& z_empty, const LatentClip& z_id, const LatentClip& z_id_aud,
                          const GuidanceWeights& weights = {});

/// w_t times the mean squared error over masked elements (mask broadcast over
/// frames and channels). Zero for an empty mask.
double latent_loss(const LatentClip& prediction, const LatentClip& target, double weight,
                   const MaskRaster& latent_mask);

/// Pixel-space term on a single decoded frame (one-frame clips, channels are
/// colour planes). The caller picks the frame and runs the decoder.
double rgb_loss(const LatentClip& decoded_frame, const LatentClip& target_frame, double weight,
                const MaskRaster& pixel_mask);

/// lambda_t * (l_latent + lambda_2 * l_rgb).
double total_loss(double l_latent, double l_rgb, double lambda_t, double lambda_2 = 1.0);

/// Gradient of latent_loss with respect to prediction; zero outside the mask.
LatentClip latent_loss_gradient(const LatentClip& prediction, const LatentClip& target, double weight,
                                const MaskRaster& latent_mask);

/// Descending Karras sigma grid of n_steps values followed by a final 0.
std::vector<double> karras_sigmas(int n_steps, double sigma_min, double sigma_max, double rho = 7.0);

}  // namespace lipkit
