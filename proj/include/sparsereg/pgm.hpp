#pragma once
// PGM image I/O: binary P5 and ASCII P2, 8-bit. Loading scales intensities
// to [0,1]; saving quantizes round-half-up to maxval 255. Parse errors name
// the byte offset at which the file stopped making sense.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "sparsereg/errors.hpp"
#include "sparsereg/image.hpp"

namespace sparsereg {

namespace detail {

[[noreturn]] inline void pgm_fail(const std::string& path, std::istream& in,
                                  const std::string& what) {
  const auto pos = in.tellg();
  const long long off = (pos < 0) ? -1 : static_cast<long long>(pos);
  throw DataError(path + ": " + what + " at byte " + std::to_string(off));
}

// Skips whitespace and '#' comment lines, then reads one unsigned integer.
inline long pgm_read_int(const std::string& path, std::istream& in,
                         const std::string& field) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  if (ch == EOF || !std::isdigit(ch)) pgm_fail(path, in, "expected " + field);
  long value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    if (value > 1000000000L) pgm_fail(path, in, field + " out of range");
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return value;
}

}  // namespace detail

inline Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  const bool binary = (m0 == 'P' && m1 == '5');
  const bool ascii = (m0 == 'P' && m1 == '2');
  if (!binary && !ascii) detail::pgm_fail(path, in, "bad magic (want P5 or P2)");

  const long w = detail::pgm_read_int(path, in, "width");
  const long h = detail::pgm_read_int(path, in, "height");
  const long maxval = detail::pgm_read_int(path, in, "maxval");
  if (w <= 0 || h <= 0) detail::pgm_fail(path, in, "nonpositive dimensions");
  if (maxval <= 0 || maxval > 255)
    detail::pgm_fail(path, in, "unsupported maxval (8-bit only)");

  Image img{int(w), int(h)};
  if (binary) {
    int sep = in.get();  // single whitespace byte after maxval
    if (sep == EOF || !std::isspace(sep))
      detail::pgm_fail(path, in, "missing header terminator");
    std::string buf(size_t(w) * h, '\0');
    in.read(buf.data(), std::streamsize(buf.size()));
    if (in.gcount() != std::streamsize(buf.size()))
      detail::pgm_fail(path, in, "truncated pixel payload");
    for (size_t i = 0; i < buf.size(); ++i)
      img.pixels[i] = double(uint8_t(buf[i])) / double(maxval);
  } else {
    for (size_t i = 0; i < img.pixels.size(); ++i) {
      const long v = detail::pgm_read_int(path, in, "pixel value");
      if (v > maxval) detail::pgm_fail(path, in, "pixel exceeds maxval");
      img.pixels[i] = double(v) / double(maxval);
    }
  }
  return img;
}

inline void save_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::string buf;
  buf.reserve(img.pixels.size());
  for (double v : img.pixels) {
    double q = v * 255.0 + 0.5;
    if (q < 0.0) q = 0.0;
    if (q > 255.0) q = 255.0;
    buf.push_back(char(uint8_t(q)));
  }
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace sparsereg
