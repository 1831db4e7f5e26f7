#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lipkit/edm.hpp"
#include "lipkit/latent.hpp"

namespace lipkit {

struct ToyModelShape {
  int channels = 2;
  int height = 8;
  int width = 8;
  int audio_dim = 8;
  int hidden = 64;
  int time_dim = 16;

  int frame_size() const { return channels * height * width; }
};

/// Small stand-in for the video U-Net. Per frame:
///   u  = [x ; reference]
///   e  = timestep_embedding(c_noise) + (Wa a + ba)
///   h  = tanh(W1 u + b1 + Wt e)
///   g  = h + m_prev * h[t-1] + m_next * h[t+1]      (temporal mixing)
///   F  = W2 g + b2
/// The parameter vector also carries the learnable slot frame z_m used by
/// the interpolation stage (zero-initialized).
class ToyDenoiser {
 public:
  ToyDenoiser() = default;
  ToyDenoiser(ToyModelShape shape, std::uint64_t seed);

  const ToyModelShape& shape() const { return shape_; }
  LatentShape latent_shape(int frames) const {
    return {frames, shape_.channels, shape_.height, shape_.width};
  }

  LatentClip forward(const LatentClip& scaled_input, double noise_label, const Conditioning& cond) const;

  /// Shares an immutable copy of the current parameters.
  DenoiserFn as_fn() const;

  struct Gradients {
    std::vector<double> params;
    LatentClip input;      // d loss / d scaled_input
    LatentClip reference;  // d loss / d conditioning.reference
  };

  /// Backpropagates grad_output (d loss / d F) through forward().
  Gradients backward(const LatentClip& scaled_input, double noise_label, const Conditioning& cond,
                     const LatentClip& grad_output) const;

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  /// z_m as a one-frame clip.
  LatentClip slot_frame() const;
  std::size_t slot_offset() const { return off_.slot; }

  std::vector<double> timestep_embedding(double noise_label) const;

  void save(const std::filesystem::path& path) const;
  static ToyDenoiser load(const std::filesystem::path& path, ToyModelShape shape);

 private:
  struct Offsets {
    std::size_t w1, b1, wt, wa, ba, w2, b2, mix_prev, mix_next, slot, total;
  };
  struct Activations {
    std::vector<double> u, e, h, g;
  };

  void compute_offsets();
  void check_inputs(const LatentClip& x, const Conditioning& cond) const;
  void run_forward(const LatentClip& x, double noise_label, const Conditioning& cond, Activations& act,
                   LatentClip* out) const;

  ToyModelShape shape_{};
  Offsets off_{};
  std::vector<double> params_;
};

}  // namespace lipkit
