#pragma once

// RGB8 raster images with PNG and PPM encoders.

#include <zlib.h>

#include <array>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cybermap {

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
  friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

class Image {
public:
  Image() = default;
  Image(uint32_t width, uint32_t height, Rgb fill = {})
      : width_(width), height_(height), pixels_(std::size_t{width} * height * 3) {
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      pixels_[i] = fill.r;
      pixels_[i + 1] = fill.g;
      pixels_[i + 2] = fill.b;
    }
  }

  uint32_t width() const noexcept { return width_; }
  uint32_t height() const noexcept { return height_; }
  const std::vector<uint8_t>& pixels() const noexcept { return pixels_; }

  Rgb get(uint32_t x, uint32_t y) const {
    const std::size_t i = index(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set(uint32_t x, uint32_t y, Rgb c) {
    const std::size_t i = index(x, y);
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }
  void fill_rect(uint32_t x, uint32_t y, uint32_t w, uint32_t h, Rgb c) {
    for (uint32_t yy = y; yy < y + h; ++yy) {
      for (uint32_t xx = x; xx < x + w; ++xx) set(xx, yy, c);
    }
  }

  std::size_t count_not(Rgb background) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      if (Rgb{pixels_[i], pixels_[i + 1], pixels_[i + 2]} != background) ++n;
    }
    return n;
  }

  friend bool operator==(const Image&, const Image&) = default;

private:
  std::size_t index(uint32_t x, uint32_t y) const {
    if (x >= width_ || y >= height_) throw std::out_of_range("pixel outside image");
    return (std::size_t{y} * width_ + x) * 3;
  }

  uint32_t width_ = 0;
  uint32_t height_ = 0;
  std::vector<uint8_t> pixels_;
};

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
  out += static_cast<char>(v >> 24);
  out += static_cast<char>(v >> 16);
  out += static_cast<char>(v >> 8);
  out += static_cast<char>(v);
}

inline void put_chunk(std::string& out, std::string_view type, std::string_view data) {
  put_u32(out, static_cast<uint32_t>(data.size()));
  const std::size_t start = out.size();
  out += type;
  out += data;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data() + start),
                         static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<uint32_t>(crc));
}

} // namespace detail

/// 8-bit RGB, non-interlaced PNG. Output is a pure function of the pixels.
inline std::string encode_png(const Image& img) {
  std::string raw;
  raw.reserve((std::size_t{img.width()} * 3 + 1) * img.height());
  const auto& px = img.pixels();
  const std::size_t stride = std::size_t{img.width()} * 3;
  for (uint32_t y = 0; y < img.height(); ++y) {
    raw += '\0'; // filter: none
    raw.append(reinterpret_cast<const char*>(px.data()) + y * stride, stride);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                6) != Z_OK) {
    throw std::runtime_error("zlib compression failed");
  }
  packed.resize(packed_size);

  std::string out = "\x89PNG\r\n\x1a\n";
  std::string ihdr;
  detail::put_u32(ihdr, img.width());
  detail::put_u32(ihdr, img.height());
  ihdr += std::string("\x08\x02\x00\x00\x00", 5); // depth 8, RGB, deflate, no filter, no interlace
  detail::put_chunk(out, "IHDR", ihdr);
  detail::put_chunk(out, "IDAT", packed);
  detail::put_chunk(out, "IEND", {});
  return out;
}

inline std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width()) + " " +
                    std::to_string(img.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels().data()), img.pixels().size());
  return out;
}

/// Decodes a binary PPM as written by encode_ppm.
inline Image decode_ppm(std::string_view data) {
  auto next_token = [&](std::size_t& pos) {
    while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    return std::string(data.substr(start, pos - start));
  };
  std::size_t pos = 0;
  if (next_token(pos) != "P6") throw std::invalid_argument("not a binary PPM");
  const auto w = static_cast<uint32_t>(std::stoul(next_token(pos)));
  const auto h = static_cast<uint32_t>(std::stoul(next_token(pos)));
  if (next_token(pos) != "255") throw std::invalid_argument("unsupported PPM depth");
  ++pos;
  if (data.size() - pos != std::size_t{w} * h * 3) throw std::invalid_argument("truncated PPM");
  Image img(w, h);
  for (uint32_t y = 0; y < h; ++y) {
    for (uint32_t x = 0; x < w; ++x) {
      const std::size_t i = pos + (std::size_t{y} * w + x) * 3;
      img.set(x, y, {static_cast<uint8_t>(data[i]), static_cast<uint8_t>(data[i + 1]),
                     static_cast<uint8_t>(data[i + 2])});
    }
  }
  return img;
}

/// Encodes by file extension: ".ppm" gives PPM, anything else PNG.
inline std::string encode_for_path(const Image& img, std::string_view path) {
  const bool ppm = path.size() >= 4 && path.substr(path.size() - 4) == ".ppm";
  return ppm ? encode_ppm(img) : encode_png(img);
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

} // namespace cybermap
