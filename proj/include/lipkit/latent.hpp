#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lipkit {

struct LatentShape {
  int frames = 0;
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t frame_size() const { return static_cast<std::size_t>(channels) * height * width; }
  std::size_t size() const { return frame_size() * static_cast<std::size_t>(frames); }
  bool operator==(const LatentShape&) const = default;
  std::string str() const;
};

/// Real-valued [frames, channels, height, width] grid, row-major with width
/// fastest. Every value is finite.
class LatentClip {
 public:
  LatentClip() = default;
  explicit LatentClip(LatentShape shape, double fill = 0.0);
  LatentClip(LatentShape shape, std::vector<double> data);

  const LatentShape& shape() const { return shape_; }
  int frames() const { return shape_.frames; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }

  double& at(int t, int c, int y, int x) { return data_[index(t, c, y, x)]; }
  double at(int t, int c, int y, int x) const { return data_[index(t, c, y, x)]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> frame(int t);
  std::span<const double> frame(int t) const;

  /// A one-frame clip holding a copy of frame t.
  LatentClip frame_clip(int t) const;

  /// Concatenates clips along the frame axis; all must share C, H, W.
  static LatentClip concat(std::span<const LatentClip> clips);

  bool all_finite() const;

 private:
  std::size_t index(int t, int c, int y, int x) const {
    return ((static_cast<std::size_t>(t) * shape_.channels + c) * shape_.height + y) * shape_.width + x;
  }

  LatentShape shape_{};
  std::vector<double> data_;
};

void require_same_shape(const LatentClip& a, const LatentClip& b, const char* what);

// Float32 tensor files: raw little-endian values plus a JSON sidecar
// {"shape": [...], "dtype": "f32"} at "<path>.json".
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;
};

void write_tensor_f32(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor_f32(const std::filesystem::path& path);

void write_latent_clip(const std::filesystem::path& path, const LatentClip& clip);
LatentClip read_latent_clip(const std::filesystem::path& path);

}  // namespace lipkit
