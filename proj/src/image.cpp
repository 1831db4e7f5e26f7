#include "lipkit/image.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "lipkit/error.hpp"
#include "lipkit/io.hpp"

namespace lipkit {

GrayFrame::GrayFrame(int w, int h, double fill) : width(w), height(h) {
  require(w > 0 && h > 0, ErrorKind::InvalidArgument, "gray frame dimensions must be positive");
  pixels.assign(static_cast<std::size_t>(w) * h, fill);
}

void validate_gray(const GrayFrame& frame) {
  require(frame.width > 0 && frame.height > 0, ErrorKind::InvalidArgument,
          "gray frame dimensions must be positive");
  require(frame.pixels.size() == static_cast<std::size_t>(frame.width) * frame.height,
          ErrorKind::ShapeMismatch, "gray frame pixel count does not match dimensions");
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  int next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      fail(ErrorKind::Parse, "malformed PGM header");
    }
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000) fail(ErrorKind::Parse, "PGM header value too large");
      ++pos_;
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail(ErrorKind::Parse, "malformed PGM header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

Pgm parse_pgm(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    fail(ErrorKind::Parse, "not a binary PGM (P5) file");
  }
  HeaderReader header(bytes);
  Pgm image;
  image.width = header.next_int();
  image.height = header.next_int();
  image.maxval = header.next_int();
  if (image.width <= 0 || image.height <= 0) fail(ErrorKind::Parse, "PGM dimensions must be positive");
  if (image.maxval <= 0 || image.maxval > 65535) fail(ErrorKind::Parse, "PGM maxval out of range");
  const std::size_t offset = header.raster_offset();
  const std::size_t count = static_cast<std::size_t>(image.width) * image.height;
  const std::size_t bytes_per_sample = image.maxval < 256 ? 1 : 2;
  if (bytes.size() < offset + count * bytes_per_sample) {
    fail(ErrorKind::Parse, "PGM raster truncated");
  }
  image.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint16_t v = 0;
    if (bytes_per_sample == 1) {
      v = bytes[offset + i];
    } else {
      v = static_cast<std::uint16_t>((bytes[offset + 2 * i] << 8) | bytes[offset + 2 * i + 1]);
    }
    if (v > image.maxval) fail(ErrorKind::Parse, "PGM sample exceeds maxval");
    image.samples[i] = v;
  }
  return image;
}

Pgm read_pgm(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  try {
    return parse_pgm(std::vector<unsigned char>(text.begin(), text.end()));
  } catch (const Error& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

std::vector<unsigned char> encode_pgm(const Pgm& image) {
  const std::size_t count = static_cast<std::size_t>(image.width) * image.height;
  require(image.samples.size() == count, ErrorKind::ShapeMismatch, "PGM sample count mismatch");
  require(image.maxval > 0 && image.maxval <= 65535, ErrorKind::InvalidArgument,
          "PGM maxval out of range");
  const std::string header = "P5\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n" +
                             std::to_string(image.maxval) + "\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  const bool wide = image.maxval >= 256;
  out.reserve(out.size() + count * (wide ? 2 : 1));
  for (std::uint16_t v : image.samples) {
    if (wide) {
      out.push_back(static_cast<unsigned char>(v >> 8));
      out.push_back(static_cast<unsigned char>(v & 0xff));
    } else {
      out.push_back(static_cast<unsigned char>(v));
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Pgm& image) {
  const auto bytes = encode_pgm(image);
  io::write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

GrayFrame gray_from_pgm(const Pgm& image) {
  GrayFrame frame(image.width, image.height);
  const double scale = 255.0 / image.maxval;
  for (std::size_t i = 0; i < image.samples.size(); ++i) {
    frame.pixels[i] = image.maxval == 255 ? image.samples[i] : image.samples[i] * scale;
  }
  return frame;
}

GrayFrame read_gray_frame(const std::filesystem::path& path) { return gray_from_pgm(read_pgm(path)); }

}  // namespace lipkit
