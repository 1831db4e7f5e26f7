#include "lipkit/latent.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <nlohmann/json.hpp>

#include "lipkit/error.hpp"
#include "lipkit/io.hpp"

namespace lipkit {

std::string LatentShape::str() const {
  return "[" + std::to_string(frames) + ", " + std::to_string(channels) + ", " +
         std::to_string(height) + ", " + std::to_string(width) + "]";
}

namespace {

void check_shape(const LatentShape& shape) {
  require(shape.frames > 0 && shape.channels > 0 && shape.height > 0 && shape.width > 0,
          ErrorKind::InvalidArgument, "latent dimensions must be positive, got " + shape.str());
}

}  // namespace

LatentClip::LatentClip(LatentShape shape, double fill) : shape_(shape) {
  check_shape(shape);
  require(std::isfinite(fill), ErrorKind::Numeric, "latent fill value must be finite");
  data_.assign(shape.size(), fill);
}

LatentClip::LatentClip(LatentShape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  check_shape(shape);
  require(data_.size() == shape.size(), ErrorKind::ShapeMismatch,
          "latent data length " + std::to_string(data_.size()) + " does not match " + shape.str());
  require(all_finite(), ErrorKind::Numeric, "latent values must be finite");
}

std::span<double> LatentClip::frame(int t) {
  return std::span<double>(data_).subspan(static_cast<std::size_t>(t) * shape_.frame_size(),
                                          shape_.frame_size());
}

std::span<const double> LatentClip::frame(int t) const {
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(t) * shape_.frame_size(),
                                                shape_.frame_size());
}

LatentClip LatentClip::frame_clip(int t) const {
  require(t >= 0 && t < shape_.frames, ErrorKind::InvalidArgument, "frame index out of range");
  LatentShape s = shape_;
  s.frames = 1;
  auto f = frame(t);
  return LatentClip(s, std::vector<double>(f.begin(), f.end()));
}

LatentClip LatentClip::concat(std::span<const LatentClip> clips) {
  require(!clips.empty(), ErrorKind::InvalidArgument, "cannot concatenate zero clips");
  LatentShape s = clips.front().shape();
  s.frames = 0;
  std::vector<double> data;
  for (const auto& clip : clips) {
    require(clip.channels() == s.channels && clip.height() == s.height && clip.width() == s.width,
            ErrorKind::ShapeMismatch, "concatenated clips must share channels/height/width");
    s.frames += clip.frames();
    data.insert(data.end(), clip.data_.begin(), clip.data_.end());
  }
  return LatentClip(s, std::move(data));
}

bool LatentClip::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_shape(const LatentClip& a, const LatentClip& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    fail(ErrorKind::ShapeMismatch,
         std::string(what) + ": shape " + a.shape().str() + " vs " + b.shape().str());
  }
}

void write_tensor_f32(const std::filesystem::path& path, const Tensor& tensor) {
  std::size_t count = 1;
  for (int d : tensor.shape) {
    require(d > 0, ErrorKind::InvalidArgument, "tensor dimensions must be positive");
    count *= static_cast<std::size_t>(d);
  }
  require(count == tensor.values.size(), ErrorKind::ShapeMismatch, "tensor size mismatch");
  std::string raw(count * 4, '\0');
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(tensor.values[i]));
    for (int b = 0; b < 4; ++b) raw[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  io::write_file_atomic(path, raw);
  nlohmann::json sidecar = {{"shape", tensor.shape}, {"dtype", "f32"}};
  std::filesystem::path meta = path;
  meta += ".json";
  io::write_file_atomic(meta, sidecar.dump() + "\n");
}

Tensor read_tensor_f32(const std::filesystem::path& path) {
  std::filesystem::path meta = path;
  meta += ".json";
  Tensor tensor;
  try {
    const auto sidecar = nlohmann::json::parse(io::read_file(meta));
    if (sidecar.at("dtype").get<std::string>() != "f32") {
      fail(ErrorKind::Parse, meta.string() + ": only dtype f32 is supported");
    }
    tensor.shape = sidecar.at("shape").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, meta.string() + ": " + e.what());
  }
  std::size_t count = 1;
  for (int d : tensor.shape) {
    require(d > 0, ErrorKind::Parse, meta.string() + ": non-positive dimension");
    count *= static_cast<std::size_t>(d);
  }
  const std::string raw = io::read_file(path);
  require(raw.size() == count * 4, ErrorKind::Parse,
          path.string() + ": expected " + std::to_string(count * 4) + " bytes, found " +
              std::to_string(raw.size()));
  tensor.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * i + b])) << (8 * b);
    }
    tensor.values[i] = std::bit_cast<float>(bits);
  }
  return tensor;
}

void write_latent_clip(const std::filesystem::path& path, const LatentClip& clip) {
  const auto& s = clip.shape();
  write_tensor_f32(path, Tensor{{s.frames, s.channels, s.height, s.width},
                                std::vector<double>(clip.values().begin(), clip.values().end())});
}

LatentClip read_latent_clip(const std::filesystem::path& path) {
  Tensor t = read_tensor_f32(path);
  require(t.shape.size() == 4, ErrorKind::Parse, path.string() + ": latent clips are 4-D");
  return LatentClip(LatentShape{t.shape[0], t.shape[1], t.shape[2], t.shape[3]}, std::move(t.values));
}

}  // namespace lipkit
