#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace lipkit {

inline constexpr std::size_t kLandmarkCount = 68;

// iBUG 68-point indices used by the geometry code.
namespace lm {
inline constexpr std::size_t kNoseTip = 30;
inline constexpr std::size_t kMouthLeft = 48;
inline constexpr std::size_t kMouthRight = 54;
inline constexpr std::size_t kMouthFirst = 48;
inline constexpr std::size_t kMouthLast = 67;
inline constexpr std::size_t kInnerUpperLip = 62;
inline constexpr std::size_t kInnerLowerLip = 66;
}  // namespace lm

/// Default mouth-open threshold on the mouth aspect ratio.
inline constexpr double kDefaultMarThreshold = 0.25;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// One frame of 68 facial landmarks in pixel coordinates (y grows downward).
struct LandmarkFrame {
  int frame_index = 0;
  std::array<Point2, kLandmarkCount> points{};
  int image_width = 0;
  int image_height = 0;
};

struct LandmarkTrack {
  std::string video_id;
  std::vector<LandmarkFrame> frames;
  double fps = 25.0;
};

struct FaceBox {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;

  double width() const { return right - left; }
  double height() const { return bottom - top; }
  bool contains(const Point2& p) const {
    return p.x >= left && p.x <= right && p.y >= top && p.y <= bottom;
  }
};

/// Throws ErrorKind::InvalidArgument if the frame breaks its invariants
/// (positive image size, every point inside the image).
void validate_frame(const LandmarkFrame& frame);

/// Throws if frame indices are not strictly increasing or image sizes differ.
void validate_track(const LandmarkTrack& track);

/// Inner-lip vertical gap (62-66) over mouth-corner width (48-54).
/// Zero for a fully collapsed mouth; DegenerateLandmarks when the corners
/// coincide but the lips do not.
double mouth_aspect_ratio(const LandmarkFrame& frame);

/// Min/max box over all 68 points. Rejects zero-width or zero-height boxes.
FaceBox face_bounding_box(const LandmarkFrame& frame);

/// Strictly greater than the threshold counts as open.
bool is_mouth_open(const LandmarkFrame& frame, double threshold = kDefaultMarThreshold);

// Landmark track files are JSON Lines:
//   {"frame": int, "w": int, "h": int, "pts": [[x, y] x 68]}
LandmarkFrame parse_landmark_line(const std::string& line);
LandmarkTrack read_landmark_track(const std::filesystem::path& path, double fps = 25.0);
std::string format_landmark_line(const LandmarkFrame& frame);
void write_landmark_track(const std::filesystem::path& path, const LandmarkTrack& track);

/// "<dir>/foo.landmarks.jsonl" -> "foo".
std::string video_id_from_track_path(const std::filesystem::path& path);

}  // namespace lipkit
