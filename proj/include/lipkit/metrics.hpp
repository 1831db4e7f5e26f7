#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lipkit/image.hpp"
#include "lipkit/landmarks.hpp"

namespace lipkit {

struct MarSample {
  int frame_index = 0;
  double mar = 0.0;
};

struct MarSeries {
  std::string video_id;
  std::vector<MarSample> values;
  double threshold = kDefaultMarThreshold;
};

MarSeries mar_series(const LandmarkTrack& track, double threshold = kDefaultMarThreshold);

/// Fraction of frames whose mouth is open. Only frames present in the track
/// count; the track is expected to come from a silent-audio generation.
double lipleak(const LandmarkTrack& track, double threshold = kDefaultMarThreshold);

struct LipLeakPoint {
  double threshold = 0.0;
  double lipleak = 0.0;
};

/// LipLeak at each threshold; thresholds must be strictly ascending and > 0.
std::vector<LipLeakPoint> lipleak_threshold_sweep(const LandmarkTrack& track,
                                                  const std::vector<double>& thresholds);

/// Population variance of the 4-neighbour Laplacian over the valid interior.
double variance_of_laplacian(const GrayFrame& frame);

struct MaeSample {
  int frame_index = 0;
  double mae = 0.0;
};

/// Per-frame mean absolute error between two equally shaped sequences.
std::vector<MaeSample> mae_trace(const std::vector<GrayFrame>& generated,
                                 const std::vector<GrayFrame>& reference);

// CSV exports consumed by external plotting.
std::string lipleak_csv(const std::string& video_id, const std::vector<LipLeakPoint>& points);
std::string mar_series_csv(const std::vector<MarSeries>& series);
std::string mae_trace_csv(const std::vector<MaeSample>& trace);

}  // namespace lipkit
