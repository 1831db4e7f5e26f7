#pragma once

// Hand-built manifests and logs shared by unit and acceptance tests.

#include <cstdio>
#include <string>
#include <vector>

#include "lipkit/curation.hpp"

namespace fixtures {

inline lipkit::VideoEntry entry(const std::string& id, double quality, double asd) {
  lipkit::VideoEntry e;
  e.video_id = id;
  e.path = "/videos/" + id + ".mp4";
  e.duration_s = 10.0;
  e.scene_spans = {{0.0, 4.0}, {4.0, 10.0}};
  e.quality_scores = std::vector<double>(9, quality);
  e.asd_score = asd;
  return e;
}

struct EngineeredManifest {
  lipkit::CurationManifest manifest;
  int designed_discards = 0;
  std::vector<std::string> boundary_kept;       // quality 0.40 / ASD 0.75
  std::vector<std::string> boundary_discarded;  // quality 0.39 / ASD 0.74
};

/// 100 videos, 25 built to pass every gate and 75 to fail exactly one:
/// 20 low quality, 20 no active speaker, 10 bad format, 10 missing scores,
/// 15 with only sub-second scenes.
inline EngineeredManifest engineered_manifest() {
  EngineeredManifest out;
  auto& m = out.manifest;
  m.dataset_name = "engineered";
  char id[16];
  int n = 0;
  auto next = [&] {
    std::snprintf(id, sizeof id, "v%03d", n++);
    return std::string(id);
  };
  for (int i = 0; i < 25; ++i) {
    auto e = entry(next(), 0.45 + 0.02 * (i % 10), 0.80 + 0.005 * (i % 20));
    if (i == 0) {
      e.quality_scores = std::vector<double>(9, 0.40);
      out.boundary_kept.push_back(e.video_id);
    }
    if (i == 1) {
      e.asd_score = 0.75;
      out.boundary_kept.push_back(e.video_id);
    }
    if (i == 2) {
      // Mixed scores averaging 0.41.
      e.quality_scores = std::vector<double>{0.2, 0.3, 0.4, 0.5, 0.6, 0.41, 0.41, 0.41, 0.46};
    }
    if (i == 3) e.scene_spans.clear();  // whole video is one scene
    if (i == 4) e.scene_spans = {{0.0, 0.5}, {0.5, 10.0}};  // one short scene dropped, one kept
    m.entries.push_back(e);
  }
  for (int i = 0; i < 20; ++i) {
    auto e = entry(next(), 0.10 + 0.01 * i, 0.9);
    if (i == 0) {
      e.quality_scores = std::vector<double>(9, 0.39);
      out.boundary_discarded.push_back(e.video_id);
    }
    m.entries.push_back(e);
  }
  for (int i = 0; i < 20; ++i) {
    auto e = entry(next(), 0.7, 0.30 + 0.02 * i);
    if (i == 0) {
      e.asd_score = 0.74;
      out.boundary_discarded.push_back(e.video_id);
    }
    m.entries.push_back(e);
  }
  for (int i = 0; i < 10; ++i) {
    auto e = entry(next(), 0.7, 0.9);
    if (i % 3 == 0) e.fps = 30.0;
    if (i % 3 == 1) e.audio_channels = 2;
    if (i % 3 == 2) e.audio_hz = 44100;
    m.entries.push_back(e);
  }
  for (int i = 0; i < 10; ++i) {
    auto e = entry(next(), 0.7, 0.9);
    if (i % 2 == 0) e.quality_scores.reset();
    if (i % 2 == 1) e.asd_score.reset();
    m.entries.push_back(e);
  }
  for (int i = 0; i < 15; ++i) {
    auto e = entry(next(), 0.7, 0.9);
    e.duration_s = 2.0;
    e.scene_spans = {{0.0, 0.4}, {0.4, 0.9}, {1.2, 2.0}};
    m.entries.push_back(e);
  }
  out.designed_discards = 75;
  return out;
}

}  // namespace fixtures
