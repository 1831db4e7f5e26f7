#include "lipkit/edm.hpp"

#include <cmath>

#include "lipkit/error.hpp"

namespace lipkit {

namespace {

void check_params(const EdmParams& params) {
  require(std::isfinite(params.sigma_data) && params.sigma_data > 0.0, ErrorKind::InvalidArgument,
          "sigma_data must be positive");
}

void check_sigma(double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, ErrorKind::InvalidArgument,
          "sigma must be positive and finite");
}

// Number of masked elements and the per-plane mask, shared by both losses.
std::size_t masked_count(const LatentClip& clip, const MaskRaster& mask) {
  return mask.count() * static_cast<std::size_t>(clip.frames()) * clip.channels();
}

void check_mask(const LatentClip& clip, const MaskRaster& mask, const char* what) {
  require(mask.width() == clip.width() && mask.height() == clip.height(), ErrorKind::ShapeMismatch,
          std::string(what) + ": mask does not match spatial size");
}

double masked_mse(const LatentClip& a, const LatentClip& b, const MaskRaster& mask) {
  const std::size_t n = masked_count(a, mask);
  if (n == 0) return 0.0;
  const std::size_t plane = static_cast<std::size_t>(a.width()) * a.height();
  const auto& bits = mask.bits();
  auto va = a.values();
  auto vb = b.values();
  double sum = 0.0;
  for (std::size_t base = 0; base < va.size(); base += plane) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (!bits[i]) continue;
      const double d = va[base + i] - vb[base + i];
      sum += d * d;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace

EdmCoefficients edm_coefficients(double sigma, const EdmParams& params) {
  check_sigma(sigma);
  check_params(params);
  const double sd = params.sigma_data;
  const double total = sigma * sigma + sd * sd;
  const double root = std::sqrt(total);
  return {sd * sd / total, sigma * sd / root, 1.0 / root, std::log(sigma) / 4.0};
}

double edm_loss_weight(double sigma, const EdmParams& params) {
  check_sigma(sigma);
  check_params(params);
  const double sd = params.sigma_data;
  return (sigma * sigma + sd * sd) / ((sigma * sd) * (sigma * sd));
}

LatentClip denoise(const LatentClip& x, double sigma, const DenoiserFn& network,
                   const Conditioning& conditioning, const EdmParams& params) {
  const EdmCoefficients c = edm_coefficients(sigma, params);
  LatentClip scaled = x;
  for (double& v : scaled.values()) v *= c.c_in;
  const LatentClip raw = network(scaled, c.c_noise, conditioning);
  if (!(raw.shape() == x.shape())) {
    fail(ErrorKind::ShapeMismatch,
         "denoiser returned shape " + raw.shape().str() + " for input " + x.shape().str());
  }
  LatentClip out = x;
  auto o = out.values();
  auto r = raw.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = c.c_skip * o[i] + c.c_out * r[i];
  return out;
}

void validate_schedule(const Schedule& schedule) {
  require(schedule.keyframe_count >= 2, ErrorKind::InvalidArgument, "keyframe count T must be >= 2");
  require(schedule.spacing >= 1, ErrorKind::InvalidArgument, "keyframe spacing S must be >= 1");
}

std::vector<int> keyframe_indices(const Schedule& schedule) {
  validate_schedule(schedule);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(schedule.keyframe_count));
  for (int k = 1; k <= schedule.keyframe_count; ++k) out.push_back(k * schedule.spacing);
  return out;
}

InterpolationInput build_interpolation_input(const LatentClip& z_a, const LatentClip& z_b,
                                             const LatentClip& slot, int spacing) {
  require(spacing >= 1, ErrorKind::InvalidArgument, "interpolation spacing must be >= 1");
  require(z_a.frames() == 1 && z_b.frames() == 1 && slot.frames() == 1, ErrorKind::ShapeMismatch,
          "interpolation inputs must be single frames");
  require_same_shape(z_a, z_b, "build_interpolation_input");
  require_same_shape(z_a, slot, "build_interpolation_input");
  std::vector<LatentClip> parts;
  parts.reserve(static_cast<std::size_t>(spacing) + 2);
  parts.push_back(z_a);
  for (int i = 0; i < spacing; ++i) parts.push_back(slot);
  parts.push_back(z_b);
  InterpolationInput out{LatentClip::concat(parts), std::vector<bool>(parts.size(), true)};
  out.is_slot.front() = false;
  out.is_slot.back() = false;
  return out;
}

std::vector<double> add_audio_to_timestep(std::span<const double> timestep_embedding,
                                          std::span<const double> audio_features, const VectorMap& mlp) {
  std::vector<double> projected = mlp(audio_features);
  require(projected.size() == timestep_embedding.size(), ErrorKind::ShapeMismatch,
          "audio MLP output has " + std::to_string(projected.size()) +
              " dims, timestep embedding has " + std::to_string(timestep_embedding.size()));
  for (std::size_t i = 0; i < projected.size(); ++i) projected[i] += timestep_embedding[i];
  return projected;
}

LatentClip guided_combine(const LatentClip& z_empty, const LatentClip& z_id, const LatentClip& z_id_aud,
                          const GuidanceWeights& weights) {
  require_same_shape(z_empty, z_id, "guided_combine");
  require_same_shape(z_empty, z_id_aud, "guided_combine");
  require(std::isfinite(weights.w_aud) && std::isfinite(weights.w_id), ErrorKind::InvalidArgument,
          "guidance weights must be finite");
  const double a = 1.0 - weights.w_id;
  const double b = weights.w_id - weights.w_aud;
  const double c = weights.w_aud;
  LatentClip out(z_empty.shape());
  auto o = out.values();
  auto e = z_empty.values();
  auto i = z_id.values();
  auto ia = z_id_aud.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = a * e[k] + b * i[k] + c * ia[k];
  return out;
}

double latent_loss(const LatentClip& prediction, const LatentClip& target, double weight,
                   const MaskRaster& latent_mask) {
  require_same_shape(prediction, target, "latent_loss");
  check_mask(prediction, latent_mask, "latent_loss");
  return weight * masked_mse(prediction, target, latent_mask);
}

double rgb_loss(const LatentClip& decoded_frame, const LatentClip& target_frame, double weight,
                const MaskRaster& pixel_mask) {
  require_same_shape(decoded_frame, target_frame, "rgb_loss");
  require(decoded_frame.frames() == 1, ErrorKind::ShapeMismatch, "rgb_loss takes a single frame");
  check_mask(decoded_frame, pixel_mask, "rgb_loss");
  return weight * masked_mse(decoded_frame, target_frame, pixel_mask);
}

double total_loss(double l_latent, double l_rgb, double lambda_t, double lambda_2) {
  return lambda_t * (l_latent + lambda_2 * l_rgb);
}

LatentClip latent_loss_gradient(const LatentClip& prediction, const LatentClip& target, double weight,
                                const MaskRaster& latent_mask) {
  require_same_shape(prediction, target, "latent_loss_gradient");
  check_mask(prediction, latent_mask, "latent_loss_gradient");
  LatentClip grad(prediction.shape());
  const std::size_t n = masked_count(prediction, latent_mask);
  if (n == 0) return grad;
  const double scale = 2.0 * weight / static_cast<double>(n);
  const std::size_t plane = static_cast<std::size_t>(prediction.width()) * prediction.height();
  const auto& bits = latent_mask.bits();
  auto g = grad.values();
  auto p = prediction.values();
  auto t = target.values();
  for (std::size_t base = 0; base < g.size(); base += plane) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (bits[i]) g[base + i] = scale * (p[base + i] - t[base + i]);
    }
  }
  return grad;
}

std::vector<double> karras_sigmas(int n_steps, double sigma_min, double sigma_max, double rho) {
  require(n_steps >= 1, ErrorKind::InvalidArgument, "need at least one sampling step");
  require(sigma_min > 0.0 && sigma_max >= sigma_min, ErrorKind::InvalidArgument,
          "need 0 < sigma_min <= sigma_max");
  std::vector<double> sigmas;
  sigmas.reserve(static_cast<std::size_t>(n_steps) + 1);
  const double lo = std::pow(sigma_min, 1.0 / rho);
  const double hi = std::pow(sigma_max, 1.0 / rho);
  for (int i = 0; i < n_steps; ++i) {
    const double frac = n_steps == 1 ? 0.0 : static_cast<double>(i) / (n_steps - 1);
    sigmas.push_back(std::pow(hi + frac * (lo - hi), rho));
  }
  sigmas.push_back(0.0);
  return sigmas;
}

}  // namespace lipkit
