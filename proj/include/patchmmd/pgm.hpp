#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include "patchmmd/types.hpp"

namespace patchmmd {

namespace detail {

// Reads the next header token, skipping whitespace and '#' comment lines.
inline std::string next_pgm_token(std::istream& in) {
  std::string tok;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  while (ch != EOF && !std::isspace(ch)) {
    tok.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  return tok;
}

}  // namespace detail

/// Loads a binary 8-bit PGM (P5, maxval 255); byte b maps to 2*(b/255) - 1.
template <typename Scalar>
Image<Scalar> load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_pgm: cannot open " + path);
  if (detail::next_pgm_token(in) != "P5") {
    throw std::runtime_error("load_pgm: " + path + " is not a binary PGM (P5)");
  }
  const std::string ws = detail::next_pgm_token(in);
  const std::string hs = detail::next_pgm_token(in);
  const std::string ms = detail::next_pgm_token(in);
  Index w = 0, h = 0;
  long maxval = 0;
  try {
    w = std::stol(ws);
    h = std::stol(hs);
    maxval = std::stol(ms);
  } catch (const std::exception&) {
    throw std::runtime_error("load_pgm: malformed header in " + path);
  }
  if (w < 1 || h < 1) throw std::runtime_error("load_pgm: bad dimensions in " + path);
  if (maxval != 255) throw std::runtime_error("load_pgm: only maxval 255 supported: " + path);

  std::string bytes(static_cast<std::size_t>(w * h), '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw std::runtime_error("load_pgm: truncated pixel data in " + path);
  }
  Image<Scalar> img(h, w);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      const auto b = static_cast<std::uint8_t>(bytes[static_cast<std::size_t>(i * w + j)]);
      img(i, j) = Scalar(2) * (Scalar(b) / Scalar(255)) - Scalar(1);
    }
  }
  return img;
}

/// Saves as binary 8-bit PGM; value v maps to round(255*(v+1)/2), clamped.
template <typename Scalar>
void save_pgm(const std::string& path, const Image<Scalar>& img) {
  if (img.rows() < 1 || img.cols() < 1) throw std::invalid_argument("save_pgm: empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_pgm: cannot open " + path + " for writing");
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  for (Index i = 0; i < img.rows(); ++i) {
    for (Index j = 0; j < img.cols(); ++j) {
      long b = std::lround(Scalar(255) * (img(i, j) + Scalar(1)) / Scalar(2));
      b = std::max(0L, std::min(255L, b));
      out.put(static_cast<char>(static_cast<std::uint8_t>(b)));
    }
  }
  if (!out) throw std::runtime_error("save_pgm: write failed for " + path);
}

}  // namespace patchmmd
