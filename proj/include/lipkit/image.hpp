#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lipkit {

/// Row-major grayscale intensities in [0, 255].
struct GrayFrame {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayFrame() = default;
  GrayFrame(int w, int h, double fill = 0.0);

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

void validate_gray(const GrayFrame& frame);

/// Raw 8-bit PGM (P5) image. maxval up to 65535 is accepted on read.
struct Pgm {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint16_t> samples;
};

Pgm read_pgm(const std::filesystem::path& path);
Pgm parse_pgm(const std::vector<unsigned char>& bytes);
std::vector<unsigned char> encode_pgm(const Pgm& image);
void write_pgm(const std::filesystem::path& path, const Pgm& image);

/// Samples rescaled to [0, 255].
GrayFrame gray_from_pgm(const Pgm& image);
GrayFrame read_gray_frame(const std::filesystem::path& path);

}  // namespace lipkit
