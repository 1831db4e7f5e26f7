#include "lipkit/mask.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lipkit/error.hpp"
#include "lipkit/image.hpp"

namespace lipkit {

MaskRaster::MaskRaster(int width, int height, bool fill) : width_(width), height_(height) {
  require(width > 0 && height > 0, ErrorKind::InvalidArgument, "mask dimensions must be positive");
  bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

MaskRaster::MaskRaster(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  require(width > 0 && height > 0, ErrorKind::InvalidArgument, "mask dimensions must be positive");
  require(bits_.size() == static_cast<std::size_t>(width) * height, ErrorKind::ShapeMismatch,
          "mask bit count does not match dimensions");
  for (auto b : bits_) {
    require(b <= 1, ErrorKind::InvalidArgument, "mask values must be 0 or 1");
  }
}

std::size_t MaskRaster::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

MaskVariant parse_mask_variant(std::string_view name) {
  if (name == "ours") return MaskVariant::Ours;
  if (name == "nose_level" || name == "nose-level") return MaskVariant::NoseLevel;
  if (name == "mouth_only" || name == "mouth-only") return MaskVariant::MouthOnly;
  if (name == "full_lower_face" || name == "full-lower-face") return MaskVariant::FullLowerFace;
  fail(ErrorKind::InvalidArgument, "unknown mask variant '" + std::string(name) + "'");
}

std::string_view to_string(MaskVariant variant) {
  switch (variant) {
    case MaskVariant::Ours: return "ours";
    case MaskVariant::NoseLevel: return "nose_level";
    case MaskVariant::MouthOnly: return "mouth_only";
    case MaskVariant::FullLowerFace: return "full_lower_face";
  }
  return "unknown";
}

void validate_mask_params(const MaskParams& params) {
  for (double f : {params.side_pad_frac, params.above_nose_frac, params.mouth_pad_frac}) {
    require(std::isfinite(f) && f >= 0.0 && f <= 1.0, ErrorKind::InvalidArgument,
            "mask fractions must lie in [0, 1]");
  }
}

MaskBox mask_box(const LandmarkFrame& frame, MaskVariant variant, const MaskParams& params) {
  validate_mask_params(params);
  const FaceBox face = face_bounding_box(frame);
  const double w = face.width();
  const double h = face.height();
  const double nose_y = frame.points[lm::kNoseTip].y;
  const double img_w = frame.image_width;
  const double img_h = frame.image_height;

  MaskBox box;
  switch (variant) {
    case MaskVariant::Ours:
    case MaskVariant::NoseLevel:
      box.top = variant == MaskVariant::Ours ? nose_y - params.above_nose_frac * h : nose_y;
      box.left = face.left - params.side_pad_frac * w;
      box.right = face.right + params.side_pad_frac * w;
      box.bottom = img_h;
      break;
    case MaskVariant::MouthOnly: {
      const auto& p = frame.points;
      box = {p[lm::kMouthFirst].x, p[lm::kMouthFirst].y, p[lm::kMouthFirst].x, p[lm::kMouthFirst].y};
      for (std::size_t i = lm::kMouthFirst; i <= lm::kMouthLast; ++i) {
        box.left = std::min(box.left, p[i].x);
        box.top = std::min(box.top, p[i].y);
        box.right = std::max(box.right, p[i].x);
        box.bottom = std::max(box.bottom, p[i].y);
      }
      const double pad = params.mouth_pad_frac * w;
      box.left -= pad;
      box.top -= pad;
      box.right += pad;
      box.bottom += pad;
      break;
    }
    case MaskVariant::FullLowerFace:
      box = {0.0, nose_y, img_w, img_h};
      break;
  }
  box.left = std::clamp(box.left, 0.0, img_w);
  box.right = std::clamp(box.right, 0.0, img_w);
  box.top = std::clamp(box.top, 0.0, img_h);
  box.bottom = std::clamp(box.bottom, 0.0, img_h);
  return box;
}

MaskRaster build_mask(const LandmarkFrame& frame, MaskVariant variant, const MaskParams& params) {
  const MaskBox box = mask_box(frame, variant, params);
  const int x0 = static_cast<int>(std::floor(box.left));
  const int x1 = static_cast<int>(std::ceil(box.right));
  const int y0 = static_cast<int>(std::floor(box.top));
  const int y1 = static_cast<int>(std::ceil(box.bottom));
  if (x0 >= x1 || y0 >= y1) {
    fail(ErrorKind::DegenerateLandmarks, "frame " + std::to_string(frame.frame_index) + ": " +
                                             std::string(to_string(variant)) +
                                             " mask is empty after clamping");
  }
  MaskRaster mask(frame.image_width, frame.image_height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) mask.set(x, y, true);
  }
  return mask;
}

MaskRaster refine_with_occlusion(const MaskRaster& mask, const MaskRaster& occlusion) {
  require(mask.same_size(occlusion), ErrorKind::ShapeMismatch,
          "occlusion mask " + std::to_string(occlusion.width()) + "x" +
              std::to_string(occlusion.height()) + " does not match mask " +
              std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
  std::vector<std::uint8_t> bits(mask.bits().size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = static_cast<std::uint8_t>(mask.bits()[i] & (occlusion.bits()[i] ^ 1u));
  }
  return MaskRaster(mask.width(), mask.height(), std::move(bits));
}

MaskRaster downsample_to_latent(const MaskRaster& mask, int factor) {
  require(factor > 0, ErrorKind::InvalidArgument, "downsample factor must be positive");
  require(mask.width() % factor == 0 && mask.height() % factor == 0, ErrorKind::InvalidArgument,
          "mask " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
              " is not divisible by factor " + std::to_string(factor));
  MaskRaster out(mask.width() / factor, mask.height() / factor);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) out.set(x / factor, y / factor, true);
    }
  }
  return out;
}

LatentClip blend_latents(const LatentClip& clean, const LatentClip& noised, const MaskRaster& latent_mask) {
  require_same_shape(clean, noised, "blend_latents");
  require(latent_mask.width() == clean.width() && latent_mask.height() == clean.height(),
          ErrorKind::ShapeMismatch, "latent mask does not match latent spatial size");
  LatentClip out = clean;
  const std::size_t plane = static_cast<std::size_t>(clean.width()) * clean.height();
  const auto& bits = latent_mask.bits();
  auto dst = out.values();
  auto src = noised.values();
  for (std::size_t base = 0; base < dst.size(); base += plane) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (bits[i]) dst[base + i] = src[base + i];
    }
  }
  return out;
}

MaskRaster read_mask_pgm(const std::filesystem::path& path) {
  const Pgm image = read_pgm(path);
  std::vector<std::uint8_t> bits(image.samples.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = 2 * image.samples[i] > image.maxval ? 1 : 0;
  }
  return MaskRaster(image.width, image.height, std::move(bits));
}

void write_mask_pgm(const std::filesystem::path& path, const MaskRaster& mask) {
  Pgm image{mask.width(), mask.height(), 255, {}};
  image.samples.reserve(mask.bits().size());
  for (auto b : mask.bits()) image.samples.push_back(b ? 255 : 0);
  write_pgm(path, image);
}

std::filesystem::path frame_file_path(const std::filesystem::path& dir, const std::string& video_id,
                                      int frame_index) {
  char name[32];
  std::snprintf(name, sizeof(name), "%06d.pgm", frame_index);
  return dir / video_id / name;
}

}  // namespace lipkit
