#include "lipkit/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "lipkit/error.hpp"

namespace lipkit {

namespace {

struct UV {
  double u;
  double v;
};

// Normalized template, u to the right, v downward, both in [0, 1].
std::array<UV, kLandmarkCount> face_template(double gap) {
  std::array<UV, kLandmarkCount> t{};
  const double pi = std::numbers::pi;
  for (int i = 0; i <= 16; ++i) {  // jaw
    const double a = pi * i / 16.0;
    t[i] = {0.5 - 0.5 * std::cos(a), 0.25 + 0.75 * std::sin(a)};
  }
  for (int i = 0; i < 5; ++i) {  // brows
    const double arch = 0.05 * (1.0 - std::pow((i - 2) / 2.0, 2));
    t[17 + i] = {0.12 + 0.075 * i, 0.05 - arch};
    t[22 + i] = {0.58 + 0.075 * i, 0.05 - arch};
  }
  const double bridge[] = {0.22, 0.35, 0.48, 0.6};
  for (int i = 0; i < 4; ++i) t[27 + i] = {0.5, bridge[i]};
  for (int i = 0; i < 5; ++i) t[31 + i] = {0.42 + 0.04 * i, 0.63 - (i == 2 ? 0.01 : 0.0)};
  const double eye_dx[] = {-0.07, -0.035, 0.035, 0.07, 0.035, -0.035};
  const double eye_dy[] = {0.0, -0.025, -0.025, 0.0, 0.025, 0.025};
  for (int i = 0; i < 6; ++i) {
    t[36 + i] = {0.3 + eye_dx[i], 0.25 + eye_dy[i]};
    t[42 + i] = {0.7 + eye_dx[i], 0.25 + eye_dy[i]};
  }
  const double m = 0.8;
  const double half = gap / 2.0;
  t[48] = {0.35, m};
  t[54] = {0.65, m};
  const double upper_u[] = {0.39, 0.44, 0.5, 0.56, 0.61};
  const double upper_lift[] = {0.025, 0.035, 0.03, 0.035, 0.025};
  for (int i = 0; i < 5; ++i) t[49 + i] = {upper_u[i], m - upper_lift[i] - half};
  const double lower_u[] = {0.61, 0.56, 0.5, 0.44, 0.39};
  const double lower_drop[] = {0.025, 0.035, 0.04, 0.035, 0.025};
  for (int i = 0; i < 5; ++i) t[55 + i] = {lower_u[i], m + lower_drop[i] + half};
  t[60] = {0.38, m};
  t[64] = {0.62, m};
  t[61] = {0.44, m - 0.8 * half};
  t[62] = {0.5, m - half};
  t[63] = {0.56, m - 0.8 * half};
  t[65] = {0.56, m + 0.8 * half};
  t[66] = {0.5, m + half};
  t[67] = {0.44, m + 0.8 * half};
  return t;
}

}  // namespace

LandmarkFrame synthetic_face(const FaceLayout& layout, double mar, int frame_index) {
  require(mar >= 0.0 && std::isfinite(mar), ErrorKind::InvalidArgument, "planted MAR must be >= 0");
  require(layout.width > 0.0 && layout.height > 0.0, ErrorKind::InvalidArgument,
          "face layout must have positive size");
  // corners are 0.3 * width apart, so the inner gap in v units is:
  const double gap = mar * 0.3 * layout.width / layout.height;
  require(0.8 + 0.04 + gap / 2.0 <= 1.0, ErrorKind::InvalidArgument, "planted MAR too large for layout");
  LandmarkFrame frame;
  frame.frame_index = frame_index;
  frame.image_width = layout.image_width;
  frame.image_height = layout.image_height;
  const auto t = face_template(gap);
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    frame.points[i] = {layout.left + t[i].u * layout.width, layout.top + t[i].v * layout.height};
  }
  validate_frame(frame);
  return frame;
}

double sinusoid_mar(const SinusoidConfig& config, int t) {
  return config.mean +
         config.amplitude * std::sin(2.0 * std::numbers::pi * t / config.period + config.phase);
}

LandmarkTrack sinusoidal_track(const std::string& video_id, const SinusoidConfig& config,
                               const FaceLayout& layout) {
  require(config.frames > 0, ErrorKind::InvalidArgument, "fixture needs at least one frame");
  LandmarkTrack track;
  track.video_id = video_id;
  track.fps = 25.0;
  for (int t = 0; t < config.frames; ++t) {
    track.frames.push_back(synthetic_face(layout, std::max(0.0, sinusoid_mar(config, t)), t));
  }
  return track;
}

BarFixture make_sliding_bar_fixture(const BarFixtureConfig& config) {
  require(config.clips > 0 && config.frames > 0 && config.channels > 0 && config.height > 1 &&
              config.width > 1 && config.audio_dim > 1 && config.mask_factor > 0,
          ErrorKind::InvalidArgument, "invalid bar fixture configuration");
  BarFixture fx;
  fx.config = config;

  const int img_w = config.width * config.mask_factor;
  const int img_h = config.height * config.mask_factor;
  const FaceLayout layout{img_w * 0.125, img_h * 0.09375, img_w * 0.75, img_h * 0.875, img_w, img_h};
  fx.pixel_mask = build_mask(synthetic_face(layout, 0.1, 0), MaskVariant::Ours, MaskParams{});
  fx.latent_mask = downsample_to_latent(fx.pixel_mask, config.mask_factor);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double pi = std::numbers::pi;
  const int bar_channel = config.channels - 1;
  const double max_pos = config.width - 1.0;

  for (int n = 0; n < config.clips; ++n) {
    // Static texture: two random plane waves per channel.
    LatentClip clip(LatentShape{config.frames, config.channels, config.height, config.width});
    std::vector<double> texture(static_cast<std::size_t>(config.channels) * config.height * config.width);
    for (int c = 0; c < config.channels; ++c) {
      for (int wave = 0; wave < 2; ++wave) {
        const double fx_ = 2.0 * pi * uniform(rng) / config.width * 2.0;
        const double fy_ = 2.0 * pi * uniform(rng) / config.height * 2.0;
        const double phase = 2.0 * pi * uniform(rng);
        const double amp = 0.25 * (0.5 + uniform(rng));
        for (int y = 0; y < config.height; ++y) {
          for (int x = 0; x < config.width; ++x) {
            texture[(static_cast<std::size_t>(c) * config.height + y) * config.width + x] +=
                amp * std::sin(fx_ * x + fy_ * y + phase);
          }
        }
      }
    }
    const double period = 24.0 + 4.0 * n;
    const double phase = 2.0 * pi * uniform(rng);
    std::vector<double> positions;
    std::vector<std::vector<double>> audio;
    for (int t = 0; t < config.frames; ++t) {
      const double p = 0.5 * max_pos * (1.0 + std::sin(2.0 * pi * t / period + phase));
      positions.push_back(p);
      for (int c = 0; c < config.channels; ++c) {
        for (int y = 0; y < config.height; ++y) {
          for (int x = 0; x < config.width; ++x) {
            double v = texture[(static_cast<std::size_t>(c) * config.height + y) * config.width + x];
            if (c == bar_channel && fx.latent_mask.at(x, y)) {
              v += std::exp(-(x - p) * (x - p) / (2.0 * 0.7 * 0.7));
            }
            clip.at(t, c, y, x) = v;
          }
        }
      }
      std::vector<double> a(static_cast<std::size_t>(config.audio_dim));
      for (int j = 0; j < config.audio_dim; ++j) {
        const double centre = j * max_pos / (config.audio_dim - 1);
        a[static_cast<std::size_t>(j)] = std::exp(-(centre - p) * (centre - p) / 2.0);
      }
      audio.push_back(std::move(a));
    }
    fx.clips.push_back(std::move(clip));
    fx.audio.push_back(std::move(audio));
    fx.bar_positions.push_back(std::move(positions));
  }
  return fx;
}

}  // namespace lipkit
