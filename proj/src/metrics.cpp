#include "lipkit/metrics.hpp"

#include <cmath>

#include "lipkit/error.hpp"
#include "lipkit/io.hpp"

namespace lipkit {

MarSeries mar_series(const LandmarkTrack& track, double threshold) {
  require(threshold > 0.0, ErrorKind::InvalidArgument, "threshold must be positive");
  validate_track(track);
  MarSeries series{track.video_id, {}, threshold};
  series.values.reserve(track.frames.size());
  for (const auto& frame : track.frames) {
    series.values.push_back({frame.frame_index, mouth_aspect_ratio(frame)});
  }
  return series;
}

double lipleak(const LandmarkTrack& track, double threshold) {
  require(!track.frames.empty(), ErrorKind::InvalidArgument,
          "lipleak: track '" + track.video_id + "' has no frames");
  require(threshold > 0.0, ErrorKind::InvalidArgument, "threshold must be positive");
  std::size_t open = 0;
  for (const auto& frame : track.frames) {
    if (is_mouth_open(frame, threshold)) ++open;
  }
  return static_cast<double>(open) / static_cast<double>(track.frames.size());
}

std::vector<LipLeakPoint> lipleak_threshold_sweep(const LandmarkTrack& track,
                                                  const std::vector<double>& thresholds) {
  require(!track.frames.empty(), ErrorKind::InvalidArgument,
          "lipleak: track '" + track.video_id + "' has no frames");
  require(!thresholds.empty(), ErrorKind::InvalidArgument, "threshold sweep is empty");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    require(thresholds[i] > 0.0, ErrorKind::InvalidArgument, "thresholds must be positive");
    if (i > 0) {
      require(thresholds[i] > thresholds[i - 1], ErrorKind::InvalidArgument,
              "thresholds must be strictly ascending");
    }
  }
  // MAR once per frame, then count per threshold.
  std::vector<double> mars;
  mars.reserve(track.frames.size());
  for (const auto& frame : track.frames) mars.push_back(mouth_aspect_ratio(frame));

  std::vector<LipLeakPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    std::size_t open = 0;
    for (double m : mars) open += m > t ? 1 : 0;
    out.push_back({t, static_cast<double>(open) / static_cast<double>(mars.size())});
  }
  return out;
}

double variance_of_laplacian(const GrayFrame& frame) {
  validate_gray(frame);
  require(frame.width >= 3 && frame.height >= 3, ErrorKind::InvalidArgument,
          "variance of Laplacian needs a frame of at least 3x3");
  const std::size_t n = static_cast<std::size_t>(frame.width - 2) * (frame.height - 2);
  std::vector<double> response;
  response.reserve(n);
  for (int y = 1; y + 1 < frame.height; ++y) {
    for (int x = 1; x + 1 < frame.width; ++x) {
      response.push_back(frame.at(x, y - 1) + frame.at(x - 1, y) + frame.at(x + 1, y) +
                         frame.at(x, y + 1) - 4.0 * frame.at(x, y));
    }
  }
  double mean = 0.0;
  for (double r : response) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : response) var += (r - mean) * (r - mean);
  return var / static_cast<double>(n);
}

std::vector<MaeSample> mae_trace(const std::vector<GrayFrame>& generated,
                                 const std::vector<GrayFrame>& reference) {
  require(generated.size() == reference.size(), ErrorKind::ShapeMismatch,
          "mae_trace: sequences differ in length (" + std::to_string(generated.size()) + " vs " +
              std::to_string(reference.size()) + ")");
  std::vector<MaeSample> out;
  out.reserve(generated.size());
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const GrayFrame& g = generated[i];
    const GrayFrame& r = reference[i];
    validate_gray(g);
    validate_gray(r);
    require(g.width == r.width && g.height == r.height, ErrorKind::ShapeMismatch,
            "mae_trace: frame " + std::to_string(i) + " dimensions differ");
    double sum = 0.0;
    for (std::size_t p = 0; p < g.pixels.size(); ++p) sum += std::abs(g.pixels[p] - r.pixels[p]);
    out.push_back({static_cast<int>(i), sum / static_cast<double>(g.pixels.size())});
  }
  return out;
}

std::string lipleak_csv(const std::string& video_id, const std::vector<LipLeakPoint>& points) {
  std::string out = "video_id,threshold,lipleak\n";
  for (const auto& p : points) {
    out += video_id + "," + io::format_number(p.threshold) + "," + io::format_number(p.lipleak) + "\n";
  }
  return out;
}

std::string mar_series_csv(const std::vector<MarSeries>& series) {
  std::string out = "video_id,frame,mar\n";
  for (const auto& s : series) {
    for (const auto& v : s.values) {
      out += s.video_id + "," + std::to_string(v.frame_index) + "," + io::format_number(v.mar) + "\n";
    }
  }
  return out;
}

std::string mae_trace_csv(const std::vector<MaeSample>& trace) {
  std::string out = "frame,mae\n";
  for (const auto& s : trace) out += std::to_string(s.frame_index) + "," + io::format_number(s.mae) + "\n";
  return out;
}

}  // namespace lipkit
