#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lipkit/landmarks.hpp"
#include "lipkit/latent.hpp"

namespace lipkit {

/// Binary row-major mask. 1 marks the region to regenerate, 0 is preserved.
class MaskRaster {
 public:
  MaskRaster() = default;
  MaskRaster(int width, int height, bool fill = false);
  MaskRaster(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool value) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0;
  }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool same_size(const MaskRaster& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool operator==(const MaskRaster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class MaskVariant { Ours, NoseLevel, MouthOnly, FullLowerFace };

MaskVariant parse_mask_variant(std::string_view name);
std::string_view to_string(MaskVariant variant);

struct MaskParams {
  double side_pad_frac = 0.05;
  double above_nose_frac = 0.1;
  double mouth_pad_frac = 0.1;
};

void validate_mask_params(const MaskParams& params);

/// Continuous pixel-edge box, already clamped to the image.
struct MaskBox {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;
};

/// Box geometry for one variant (face box B, nose tip 30):
///   Ours          top = nose_y - above_nose_frac*H, sides B -/+ side_pad_frac*W, bottom = image edge
///   NoseLevel     as Ours with top = nose_y
///   MouthOnly     box of landmarks 48..67 padded by mouth_pad_frac*W
///   FullLowerFace nose_y to the bottom edge, full image width
MaskBox mask_box(const LandmarkFrame& frame, MaskVariant variant, const MaskParams& params);

/// Rasterizes mask_box: a pixel is set when its unit cell overlaps the box.
MaskRaster build_mask(const LandmarkFrame& frame, MaskVariant variant, const MaskParams& params);

/// mask AND NOT occlusion, pixelwise.
MaskRaster refine_with_occlusion(const MaskRaster& mask, const MaskRaster& occlusion);

/// A latent cell is set when any pixel it covers is set.
MaskRaster downsample_to_latent(const MaskRaster& mask, int factor);

/// Mask value 1 takes the noised element, 0 keeps the clean one. The spatial
/// mask is broadcast over frames and channels.
LatentClip blend_latents(const LatentClip& clean, const LatentClip& noised, const MaskRaster& latent_mask);

// PGM (P5, maxval 255): 255 = masked, 0 = preserved. On read any sample
// above half of maxval counts as masked.
MaskRaster read_mask_pgm(const std::filesystem::path& path);
void write_mask_pgm(const std::filesystem::path& path, const MaskRaster& mask);

/// "<dir>/<video_id>/<frame:06d>.pgm"
std::filesystem::path frame_file_path(const std::filesystem::path& dir, const std::string& video_id,
                                      int frame_index);

}  // namespace lipkit
