#include "lipkit/toy_model.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "lipkit/error.hpp"

namespace lipkit {

ToyDenoiser::ToyDenoiser(ToyModelShape shape, std::uint64_t seed) : shape_(shape) {
  require(shape.channels > 0 && shape.height > 0 && shape.width > 0 && shape.audio_dim > 0 &&
              shape.hidden > 0 && shape.time_dim >= 2 && shape.time_dim % 2 == 0,
          ErrorKind::InvalidArgument, "invalid toy model shape");
  compute_offsets();
  params_.assign(off_.total, 0.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto init = [&](std::size_t offset, std::size_t count, double fan_in) {
    const double scale = 1.0 / std::sqrt(fan_in);
    for (std::size_t i = 0; i < count; ++i) params_[offset + i] = scale * normal(rng);
  };
  const std::size_t d = static_cast<std::size_t>(shape_.frame_size());
  const std::size_t hd = static_cast<std::size_t>(shape_.hidden);
  const std::size_t e = static_cast<std::size_t>(shape_.time_dim);
  const std::size_t a = static_cast<std::size_t>(shape_.audio_dim);
  init(off_.w1, hd * 2 * d, 2.0 * d);
  init(off_.wt, hd * e, static_cast<double>(e));
  init(off_.wa, e * a, static_cast<double>(a));
  init(off_.w2, d * hd, static_cast<double>(hd));
}

void ToyDenoiser::compute_offsets() {
  const std::size_t d = static_cast<std::size_t>(shape_.frame_size());
  const std::size_t hd = static_cast<std::size_t>(shape_.hidden);
  const std::size_t e = static_cast<std::size_t>(shape_.time_dim);
  const std::size_t a = static_cast<std::size_t>(shape_.audio_dim);
  std::size_t pos = 0;
  auto take = [&pos](std::size_t n) {
    const std::size_t at = pos;
    pos += n;
    return at;
  };
  off_.w1 = take(hd * 2 * d);
  off_.b1 = take(hd);
  off_.wt = take(hd * e);
  off_.wa = take(e * a);
  off_.ba = take(e);
  off_.w2 = take(d * hd);
  off_.b2 = take(d);
  off_.mix_prev = take(hd);
  off_.mix_next = take(hd);
  off_.slot = take(d);
  off_.total = pos;
}

std::vector<double> ToyDenoiser::timestep_embedding(double noise_label) const {
  const int half = shape_.time_dim / 2;
  std::vector<double> emb(static_cast<std::size_t>(shape_.time_dim));
  for (int k = 0; k < half; ++k) {
    const double freq = half == 1 ? 1.0 : std::pow(16.0, static_cast<double>(k) / (half - 1));
    emb[static_cast<std::size_t>(k)] = std::sin(noise_label * freq);
    emb[static_cast<std::size_t>(k + half)] = std::cos(noise_label * freq);
  }
  return emb;
}

void ToyDenoiser::check_inputs(const LatentClip& x, const Conditioning& cond) const {
  require(x.channels() == shape_.channels && x.height() == shape_.height && x.width() == shape_.width,
          ErrorKind::ShapeMismatch, "toy denoiser input shape " + x.shape().str() + " does not match model");
  require_same_shape(x, cond.reference, "toy denoiser reference");
  require(cond.audio.size() == static_cast<std::size_t>(x.frames()), ErrorKind::ShapeMismatch,
          "toy denoiser needs one audio vector per frame");
  for (const auto& a : cond.audio) {
    require(a.size() == static_cast<std::size_t>(shape_.audio_dim), ErrorKind::ShapeMismatch,
            "audio feature dimension mismatch");
  }
}

void ToyDenoiser::run_forward(const LatentClip& x, double noise_label, const Conditioning& cond,
                              Activations& act, LatentClip* out) const {
  check_inputs(x, cond);
  const std::size_t frames = static_cast<std::size_t>(x.frames());
  const std::size_t d = static_cast<std::size_t>(shape_.frame_size());
  const std::size_t in = 2 * d;
  const std::size_t hd = static_cast<std::size_t>(shape_.hidden);
  const std::size_t e = static_cast<std::size_t>(shape_.time_dim);
  const std::size_t a = static_cast<std::size_t>(shape_.audio_dim);
  const double* p = params_.data();

  const std::vector<double> temb = timestep_embedding(noise_label);
  act.u.assign(frames * in, 0.0);
  act.e.assign(frames * e, 0.0);
  act.h.assign(frames * hd, 0.0);
  act.g.assign(frames * hd, 0.0);

  for (std::size_t t = 0; t < frames; ++t) {
    double* u = &act.u[t * in];
    const auto xf = x.frame(static_cast<int>(t));
    const auto rf = cond.reference.frame(static_cast<int>(t));
    std::copy(xf.begin(), xf.end(), u);
    std::copy(rf.begin(), rf.end(), u + d);

    double* et = &act.e[t * e];
    const auto& audio = cond.audio[t];
    for (std::size_t k = 0; k < e; ++k) {
      double s = p[off_.ba + k];
      const double* row = p + off_.wa + k * a;
      for (std::size_t j = 0; j < a; ++j) s += row[j] * audio[j];
      et[k] = temb[k] + s;
    }

    double* h = &act.h[t * hd];
    for (std::size_t k = 0; k < hd; ++k) {
      double s = p[off_.b1 + k];
      const double* row = p + off_.w1 + k * in;
      for (std::size_t j = 0; j < in; ++j) s += row[j] * u[j];
      const double* trow = p + off_.wt + k * e;
      for (std::size_t j = 0; j < e; ++j) s += trow[j] * et[j];
      h[k] = std::tanh(s);
    }
  }

  for (std::size_t t = 0; t < frames; ++t) {
    double* g = &act.g[t * hd];
    const double* h = &act.h[t * hd];
    for (std::size_t k = 0; k < hd; ++k) {
      double v = h[k];
      if (t > 0) v += p[off_.mix_prev + k] * act.h[(t - 1) * hd + k];
      if (t + 1 < frames) v += p[off_.mix_next + k] * act.h[(t + 1) * hd + k];
      g[k] = v;
    }
  }

  if (out == nullptr) return;
  *out = LatentClip(x.shape());
  for (std::size_t t = 0; t < frames; ++t) {
    auto of = out->frame(static_cast<int>(t));
    const double* g = &act.g[t * hd];
    for (std::size_t i = 0; i < d; ++i) {
      double s = p[off_.b2 + i];
      const double* row = p + off_.w2 + i * hd;
      for (std::size_t k = 0; k < hd; ++k) s += row[k] * g[k];
      of[i] = s;
    }
  }
}

LatentClip ToyDenoiser::forward(const LatentClip& scaled_input, double noise_label,
                                const Conditioning& cond) const {
  Activations act;
  LatentClip out;
  run_forward(scaled_input, noise_label, cond, act, &out);
  return out;
}

DenoiserFn ToyDenoiser::as_fn() const {
  auto frozen = std::make_shared<const ToyDenoiser>(*this);
  return [frozen](const LatentClip& x, double noise_label, const Conditioning& cond) {
    return frozen->forward(x, noise_label, cond);
  };
}

ToyDenoiser::Gradients ToyDenoiser::backward(const LatentClip& scaled_input, double noise_label,
                                             const Conditioning& cond, const LatentClip& grad_output) const {
  require_same_shape(scaled_input, grad_output, "toy denoiser backward");
  Activations act;
  run_forward(scaled_input, noise_label, cond, act, nullptr);

  const std::size_t frames = static_cast<std::size_t>(scaled_input.frames());
  const std::size_t d = static_cast<std::size_t>(shape_.frame_size());
  const std::size_t in = 2 * d;
  const std::size_t hd = static_cast<std::size_t>(shape_.hidden);
  const std::size_t e = static_cast<std::size_t>(shape_.time_dim);
  const std::size_t a = static_cast<std::size_t>(shape_.audio_dim);
  const double* p = params_.data();

  Gradients grads{std::vector<double>(params_.size(), 0.0), LatentClip(scaled_input.shape()),
                  LatentClip(scaled_input.shape())};
  double* gp = grads.params.data();

  // Output layer.
  std::vector<double> dg(frames * hd, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto dout = grad_output.frame(static_cast<int>(t));
    const double* g = &act.g[t * hd];
    double* dgt = &dg[t * hd];
    for (std::size_t i = 0; i < d; ++i) {
      const double go = dout[i];
      if (go == 0.0) continue;
      gp[off_.b2 + i] += go;
      double* wrow = gp + off_.w2 + i * hd;
      const double* row = p + off_.w2 + i * hd;
      for (std::size_t k = 0; k < hd; ++k) {
        wrow[k] += go * g[k];
        dgt[k] += go * row[k];
      }
    }
  }

  // Temporal mixing.
  std::vector<double> dh(dg);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* dgt = &dg[t * hd];
    for (std::size_t k = 0; k < hd; ++k) {
      if (t > 0) {
        gp[off_.mix_prev + k] += dgt[k] * act.h[(t - 1) * hd + k];
        dh[(t - 1) * hd + k] += p[off_.mix_prev + k] * dgt[k];
      }
      if (t + 1 < frames) {
        gp[off_.mix_next + k] += dgt[k] * act.h[(t + 1) * hd + k];
        dh[(t + 1) * hd + k] += p[off_.mix_next + k] * dgt[k];
      }
    }
  }

  // Hidden layer, timestep/audio embedding.
  std::vector<double> dpre(hd), de(e), du(in);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* h = &act.h[t * hd];
    const double* u = &act.u[t * in];
    const double* et = &act.e[t * e];
    for (std::size_t k = 0; k < hd; ++k) dpre[k] = dh[t * hd + k] * (1.0 - h[k] * h[k]);
    std::fill(de.begin(), de.end(), 0.0);
    std::fill(du.begin(), du.end(), 0.0);
    for (std::size_t k = 0; k < hd; ++k) {
      const double dk = dpre[k];
      if (dk == 0.0) continue;
      gp[off_.b1 + k] += dk;
      double* wrow = gp + off_.w1 + k * in;
      const double* row = p + off_.w1 + k * in;
      for (std::size_t j = 0; j < in; ++j) {
        wrow[j] += dk * u[j];
        du[j] += dk * row[j];
      }
      double* trow_g = gp + off_.wt + k * e;
      const double* trow = p + off_.wt + k * e;
      for (std::size_t j = 0; j < e; ++j) {
        trow_g[j] += dk * et[j];
        de[j] += dk * trow[j];
      }
    }
    const auto& audio = cond.audio[t];
    for (std::size_t k = 0; k < e; ++k) {
      gp[off_.ba + k] += de[k];
      double* arow = gp + off_.wa + k * a;
      for (std::size_t j = 0; j < a; ++j) arow[j] += de[k] * audio[j];
    }
    auto gi = grads.input.frame(static_cast<int>(t));
    auto gr = grads.reference.frame(static_cast<int>(t));
    for (std::size_t i = 0; i < d; ++i) {
      gi[i] = du[i];
      gr[i] = du[d + i];
    }
  }
  return grads;
}

LatentClip ToyDenoiser::slot_frame() const {
  const auto begin = params_.begin() + static_cast<std::ptrdiff_t>(off_.slot);
  return LatentClip(latent_shape(1), std::vector<double>(begin, begin + shape_.frame_size()));
}

void ToyDenoiser::save(const std::filesystem::path& path) const {
  write_tensor_f32(path, Tensor{{static_cast<int>(params_.size())}, params_});
}

ToyDenoiser ToyDenoiser::load(const std::filesystem::path& path, ToyModelShape shape) {
  ToyDenoiser model(shape, 0);
  Tensor t = read_tensor_f32(path);
  require(t.shape.size() == 1 && t.values.size() == model.params_.size(), ErrorKind::Parse,
          path.string() + ": parameter count does not match model shape");
  model.params_ = std::move(t.values);
  return model;
}

}  // namespace lipkit
