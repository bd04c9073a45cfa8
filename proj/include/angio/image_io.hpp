#ifndef ANGIO_IMAGE_IO_HPP
#define ANGIO_IMAGE_IO_HPP

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "angio/error.hpp"
#include "angio/raster.hpp"

namespace angio {

using Bytes = std::vector<std::uint8_t>;

/// Integer-rounded Rec. 601 luma.
inline std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

inline GrayImage mask_to_gray(const BinaryMask& mask) {
  GrayImage out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) out.data()[i] = mask.data()[i] ? 255 : 0;
  return out;
}

inline GrayImage invert(const GrayImage& image) {
  GrayImage out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i)
    out.data()[i] = static_cast<std::uint8_t>(255 - image.data()[i]);
  return out;
}

namespace detail {

inline bool is_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(sig, sig + 8, bytes.begin());
}

// Reads one whitespace-delimited header token, skipping '#' comments.
inline std::string pgm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#')
    token.push_back(static_cast<char>(bytes[pos++]));
  return token;
}

inline int pgm_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  const auto token = pgm_token(bytes, pos);
  if (token.empty() || token.size() > 9 ||
      !std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(c); }))
    throw Error(ErrorCode::CorruptFile, "malformed PGM header");
  return std::stoi(token);
}

inline GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  const int width = pgm_int(bytes, pos);
  const int height = pgm_int(bytes, pos);
  const int maxval = pgm_int(bytes, pos);
  if (width == 0 || height == 0) throw Error(ErrorCode::ZeroDimension, "PGM has zero dimension");
  if (maxval != 255)
    throw Error(ErrorCode::UnsupportedFormat, "only 8-bit PGM (maxval 255) is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    throw Error(ErrorCode::CorruptFile, "malformed PGM header");
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < n) throw Error(ErrorCode::CorruptFile, "truncated PGM raster");
  return GrayImage(width, height,
                   std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                             bytes.begin() + static_cast<std::ptrdiff_t>(pos + n)));
}

inline GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(ErrorCode::CorruptFile, std::string("invalid PNG: ") + image.message);
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw Error(ErrorCode::ZeroDimension, "PNG has zero dimension");
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, "16-bit PNG is not supported");
  }
  const bool color = image.format & PNG_FORMAT_FLAG_COLOR;
  const bool alpha = image.format & PNG_FORMAT_FLAG_ALPHA;
  // Alpha is read (to keep the colour channels untouched by compositing) and dropped.
  image.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB)
                       : (alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);
  const int channels = (color ? 3 : 1) + (alpha ? 1 : 0);
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::CorruptFile, std::string("invalid PNG: ") + image.message);
  }
  const int width = static_cast<int>(image.width), height = static_cast<int>(image.height);
  GrayImage out(width, height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t* px = &buffer[i * static_cast<std::size_t>(channels)];
    out.data()[i] = color ? luminance(px[0], px[1], px[2]) : px[0];
  }
  return out;
}

inline Bytes encode_png_raw(const std::uint8_t* pixels, int width, int height, bool color) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr))
    throw Error(ErrorCode::IoFailure, std::string("PNG encode failed: ") + image.message);
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr))
    throw Error(ErrorCode::IoFailure, std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

inline void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

inline bool wants_png(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

}  // namespace detail

/// Decodes PGM (P5, maxval 255) or PNG (8-bit gray/RGB, alpha ignored).
inline GrayImage decode_image(std::span<const std::uint8_t> bytes) {
  if (detail::is_png(bytes)) return detail::decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    if (bytes[1] == '5') return detail::decode_pgm(bytes);
    if (bytes[1] >= '1' && bytes[1] <= '7')
      throw Error(ErrorCode::UnsupportedFormat, "only binary graymap (P5) netpbm files are supported");
  }
  throw Error(ErrorCode::CorruptFile, "not a PGM or PNG image");
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw Error(ErrorCode::FileNotFound, "file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline GrayImage load_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

inline Bytes encode_pgm(const GrayImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), image.data().begin(), image.data().end());
  return out;
}

inline Bytes encode_png(const GrayImage& image) {
  return detail::encode_png_raw(image.data().data(), image.width(), image.height(), false);
}

inline Bytes encode_png(const RgbImage& image) {
  static_assert(sizeof(Rgb) == 3);
  return detail::encode_png_raw(reinterpret_cast<const std::uint8_t*>(image.data().data()),
                                image.width(), image.height(), true);
}

/// Writes PNG when the extension is .png, binary PGM otherwise.
inline void save_image(const GrayImage& image, const std::filesystem::path& path) {
  detail::write_file(path, detail::wants_png(path) ? encode_png(image) : encode_pgm(image));
}

inline void save_image(const BinaryMask& mask, const std::filesystem::path& path) {
  save_image(mask_to_gray(mask), path);
}

inline void save_image(const FloatImage& image, const std::filesystem::path& path) {
  save_image(rescale_to_gray(image), path);
}

/// RGB output is always PNG.
inline void save_image(const RgbImage& image, const std::filesystem::path& path) {
  detail::write_file(path, encode_png(image));
}

}  // namespace angio

#endif  // ANGIO_IMAGE_IO_HPP
