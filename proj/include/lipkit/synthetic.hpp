#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lipkit/landmarks.hpp"
#include "lipkit/latent.hpp"
#include "lipkit/mask.hpp"

namespace lipkit {

/// Where a synthetic face sits in the image. The generated landmarks span
/// exactly [left, left+width] x [top, top+height].
struct FaceLayout {
  double left = 156.0;
  double top = 100.0;
  double width = 200.0;
  double height = 300.0;
  int image_width = 512;
  int image_height = 512;
};

/// iBUG-68 style face whose inner-lip gap is set so that the mouth aspect
/// ratio equals `mar`. Nose tip (30) sits at 60 % of the face height, the
/// mouth line at 80 %, mouth corners are 0.3 * width apart.
LandmarkFrame synthetic_face(const FaceLayout& layout, double mar, int frame_index);

struct SinusoidConfig {
  int frames = 25;
  double mean = 0.25;
  double amplitude = 0.2;
  double period = 25.0;  // frames
  double phase = 0.5;    // radians
};

/// MAR planted at frame t: mean + amplitude * sin(2 pi t / period + phase).
double sinusoid_mar(const SinusoidConfig& config, int t);

/// Talking-mouth fixture: MAR follows sinusoid_mar frame by frame.
LandmarkTrack sinusoidal_track(const std::string& video_id, const SinusoidConfig& config = {},
                               const FaceLayout& layout = {});

struct BarFixtureConfig {
  int clips = 6;
  int channels = 2;
  int height = 8;
  int width = 8;
  int audio_dim = 8;
  int frames = 169;
  int mask_factor = 8;
  std::uint64_t seed = 7;
};

/// "Sliding bar" latent videos. Each clip has a static random texture; a
/// soft vertical bar on the last channel slides left and right inside the
/// masked (lower-face) rows, and the per-frame audio features are a
/// Gaussian bump encoding the bar position. The latent mask is the Ours
/// mask of a synthetic face rendered at mask_factor times the latent size,
/// downsampled with the any-rule.
struct BarFixture {
  BarFixtureConfig config;
  std::vector<LatentClip> clips;
  std::vector<std::vector<std::vector<double>>> audio;  // clip x frame x audio_dim
  std::vector<std::vector<double>> bar_positions;       // clip x frame
  MaskRaster pixel_mask;
  MaskRaster latent_mask;
};

BarFixture make_sliding_bar_fixture(const BarFixtureConfig& config);

}  // namespace lipkit
