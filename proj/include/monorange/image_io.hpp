#pragma once

// Luminance image input for feature assembly: binary PGM (P5, maxval up to
// 65535) for bit-exact fixtures, and PNG via libpng with an in-house
// 0.299/0.587/0.114 luma conversion so every decode path shares one
// grayscale definition.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "monorange/features.hpp"

namespace monorange::image_io {

class ImageError : public std::runtime_error {
 public:
  explicit ImageError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline int next_pgm_token(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comments, then reads one non-negative integer.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) throw ImageError(path + ": malformed PGM header");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace detail

inline features::GrayPatch load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError(path + ": cannot open");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') throw ImageError(path + ": not a binary PGM (P5)");
  const int width = detail::next_pgm_token(in, path);
  const int height = detail::next_pgm_token(in, path);
  const int maxval = detail::next_pgm_token(in, path);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
    throw ImageError(path + ": bad PGM dimensions/maxval");
  // The header terminator is the single whitespace already consumed by the
  // token reader's final get(); data starts here.
  features::GrayPatch img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<std::size_t>(width) * height);
  const int bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(img.pixels.size() * static_cast<std::size_t>(bytes_per));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw ImageError(path + ": truncated PGM data");
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const unsigned v = bytes_per == 1
                           ? raw[i]
                           : (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
    img.pixels[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

inline void save_pgm(const std::string& path, const features::GrayPatch& img) {
  if (img.empty()) throw ImageError(path + ": refusing to write empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError(path + ": cannot open for writing");
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw ImageError(path + ": write failed");
}

/// Decodes any PNG to RGB via libpng's simplified API, then converts to
/// luminance with the shared luma weights.
inline features::GrayPatch load_png_gray(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw ImageError(path + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ImageError(path + ": " + msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  return features::grayscale_from_rgb(w, h, buffer);
}

/// PGM when the extension says so, PNG otherwise.
inline features::GrayPatch load_gray(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".pgm") return load_pgm(path);
  return load_png_gray(path);
}

}  // namespace monorange::image_io
