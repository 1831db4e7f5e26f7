#include "lipkit/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "lipkit/error.hpp"
#include "lipkit/io.hpp"

namespace lipkit {

using nlohmann::json;

void validate_frame(const LandmarkFrame& frame) {
  require(frame.frame_index >= 0, ErrorKind::InvalidArgument, "negative frame index");
  require(frame.image_width > 0 && frame.image_height > 0, ErrorKind::InvalidArgument,
          "image dimensions must be positive");
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    const Point2& p = frame.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.y < 0.0 ||
        p.x > frame.image_width || p.y > frame.image_height) {
      std::ostringstream msg;
      msg << "frame " << frame.frame_index << ": landmark " << i << " (" << p.x << ", " << p.y
          << ") outside " << frame.image_width << "x" << frame.image_height << " image";
      fail(ErrorKind::InvalidArgument, msg.str());
    }
  }
}

void validate_track(const LandmarkTrack& track) {
  require(track.fps > 0.0, ErrorKind::InvalidArgument, "track fps must be positive");
  for (std::size_t i = 0; i < track.frames.size(); ++i) {
    validate_frame(track.frames[i]);
    if (i == 0) continue;
    const auto& prev = track.frames[i - 1];
    const auto& cur = track.frames[i];
    require(cur.frame_index > prev.frame_index, ErrorKind::InvalidArgument,
            "frame indices must be strictly increasing (frame " +
                std::to_string(cur.frame_index) + ")");
    require(cur.image_width == prev.image_width && cur.image_height == prev.image_height,
            ErrorKind::InvalidArgument, "frames of one track must share image dimensions");
  }
}

namespace {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

double mouth_aspect_ratio(const LandmarkFrame& frame) {
  validate_frame(frame);
  const auto& p = frame.points;
  const double vertical = distance(p[lm::kInnerUpperLip], p[lm::kInnerLowerLip]);
  const double horizontal = distance(p[lm::kMouthLeft], p[lm::kMouthRight]);
  if (horizontal == 0.0) {
    if (vertical == 0.0) return 0.0;
    fail(ErrorKind::DegenerateLandmarks,
         "frame " + std::to_string(frame.frame_index) + ": mouth corners coincide");
  }
  return vertical / horizontal;
}

FaceBox face_bounding_box(const LandmarkFrame& frame) {
  validate_frame(frame);
  FaceBox box{frame.points[0].x, frame.points[0].y, frame.points[0].x, frame.points[0].y};
  for (const Point2& p : frame.points) {
    box.left = std::min(box.left, p.x);
    box.top = std::min(box.top, p.y);
    box.right = std::max(box.right, p.x);
    box.bottom = std::max(box.bottom, p.y);
  }
  if (!(box.left < box.right && box.top < box.bottom)) {
    fail(ErrorKind::DegenerateLandmarks,
         "frame " + std::to_string(frame.frame_index) + ": degenerate face box");
  }
  return box;
}

bool is_mouth_open(const LandmarkFrame& frame, double threshold) {
  require(threshold > 0.0, ErrorKind::InvalidArgument, "threshold must be positive");
  return mouth_aspect_ratio(frame) > threshold;
}

LandmarkFrame parse_landmark_line(const std::string& line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("invalid JSON: ") + e.what());
  }
  LandmarkFrame frame;
  try {
    frame.frame_index = obj.at("frame").get<int>();
    frame.image_width = obj.at("w").get<int>();
    frame.image_height = obj.at("h").get<int>();
    const json& pts = obj.at("pts");
    if (!pts.is_array() || pts.size() != kLandmarkCount) {
      fail(ErrorKind::Parse, "expected 68 points, got " +
                                 std::to_string(pts.is_array() ? pts.size() : 0));
    }
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
      const json& pt = pts[i];
      if (!pt.is_array() || pt.size() != 2) {
        fail(ErrorKind::Parse, "point " + std::to_string(i) + " is not an [x, y] pair");
      }
      frame.points[i] = {pt[0].get<double>(), pt[1].get<double>()};
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("bad landmark record: ") + e.what());
  }
  try {
    validate_frame(frame);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, e.what());
  }
  return frame;
}

std::string video_id_from_track_path(const std::filesystem::path& path) {
  std::string name = path.filename().string();
  constexpr std::string_view suffix = ".landmarks.jsonl";
  if (name.size() > suffix.size() && name.ends_with(suffix)) {
    return name.substr(0, name.size() - suffix.size());
  }
  return path.stem().string();
}

LandmarkTrack read_landmark_track(const std::filesystem::path& path, double fps) {
  const std::string text = io::read_file(path);
  LandmarkTrack track;
  track.video_id = video_id_from_track_path(path);
  track.fps = fps;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      track.frames.push_back(parse_landmark_line(lines[i]));
    } catch (const Error& e) {
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  try {
    validate_track(track);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return track;
}

std::string format_landmark_line(const LandmarkFrame& frame) {
  json pts = json::array();
  for (const Point2& p : frame.points) pts.push_back({p.x, p.y});
  json obj = {{"frame", frame.frame_index},
              {"w", frame.image_width},
              {"h", frame.image_height},
              {"pts", std::move(pts)}};
  return obj.dump();
}

void write_landmark_track(const std::filesystem::path& path, const LandmarkTrack& track) {
  std::string out;
  for (const auto& frame : track.frames) {
    out += format_landmark_line(frame);
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

}  // namespace lipkit
