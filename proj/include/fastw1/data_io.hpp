#ifndef FASTW1_DATA_IO_HPP
#define FASTW1_DATA_IO_HPP

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fastw1/common.hpp"

namespace fastw1 {

struct GridSpec1D {
  double a = 0.0, b = 100.0;
  std::size_t nodes = 1000;

  double spacing() const {
    if (nodes < 2) throw invalid_input("GridSpec1D: need at least 2 nodes");
    return (b - a) / static_cast<double>(nodes - 1);
  }
  double node(std::size_t k) const { return a + spacing() * static_cast<double>(k); }
};

/// Mixture of 1D Gaussians discretized on the grid: midpoint-rule cell mass
/// (density at the node, renormalized to sum 1).
inline Vec gaussian_mixture(const Vec& weights, const Vec& means, const Vec& variances,
                            const GridSpec1D& grid) {
  if (weights.size() != means.size() || weights.size() != variances.size() || weights.empty())
    throw invalid_input("gaussian_mixture: component lists must match and be nonempty");
  if (std::abs(sum(weights) - 1.0) > 1e-9)
    throw invalid_input("gaussian_mixture: weights must sum to 1");
  for (double s2 : variances)
    if (!(s2 > 0)) throw invalid_input("gaussian_mixture: variances must be positive");

  Vec out(grid.nodes, 0.0);
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double inv2s2 = 0.5 / variances[c];
    const double norm = weights[c] / std::sqrt(2.0 * M_PI * variances[c]);
    for (std::size_t k = 0; k < grid.nodes; ++k) {
      const double d = grid.node(k) - means[c];
      out[k] += norm * std::exp(-d * d * inv2s2);
    }
  }
  const double total = sum(out);
  if (!(total > 0)) throw invalid_input("gaussian_mixture: zero total mass on grid");
  for (double& x : out) x /= total;
  return out;
}

/// The two mixtures used throughout the 1D experiments.
inline Vec mixture_source(const GridSpec1D& grid) {
  return gaussian_mixture({0.4, 0.6}, {60.0, 40.0}, {64.0, 36.0}, grid);
}
inline Vec mixture_target(const GridSpec1D& grid) {
  return gaussian_mixture({0.5, 0.5}, {35.0, 70.0}, {81.0, 81.0}, grid);
}

/// Seeded uniform(0,1) draws on an n x m grid, normalized to sum 1.
/// The bit-to-double mapping is fixed so outputs are reproducible everywhere.
inline Vec uniform_random_2d(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw invalid_input("uniform_random_2d: need n,m >= 1");
  std::mt19937_64 eng(seed);
  Vec out(n * m);
  for (double& x : out) x = static_cast<double>(eng() >> 11) * 0x1.0p-53;
  const double total = sum(out);
  for (double& x : out) x /= total;
  return out;
}

/// (f/||f||_1 + eta) / (1 + N*eta): strictly positive, sums to 1.
inline Vec rescale(const Vec& f, double eta) {
  if (!(eta > 0)) throw invalid_input("rescale: eta must be positive");
  const double norm = l1_norm(f);
  if (!(norm > 0)) throw invalid_input("rescale: all-zero input");
  for (double x : f)
    if (x < 0) throw invalid_input("rescale: negative entry");
  const double denom = 1.0 + static_cast<double>(f.size()) * eta;
  Vec out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = (f[i] / norm + eta) / denom;
  return out;
}

struct Image2D {
  std::size_t width = 0, height = 0;
  Vec pixels;  // row-major, height rows of width entries

  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  double& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
};

namespace detail {

// PGM headers allow '#' comments anywhere between tokens.
inline int next_pgm_token(std::istream& in, std::string& tok) {
  tok.clear();
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return 1;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok.empty() ? 0 : 1;
}

inline std::size_t parse_pgm_size(const std::string& tok, const char* what) {
  std::size_t val = 0;
  for (char c : tok) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw io_error(std::string("PGM: malformed ") + what);
    val = val * 10 + static_cast<std::size_t>(c - '0');
    if (val > 1'000'000'000) throw io_error(std::string("PGM: implausible ") + what);
  }
  if (tok.empty()) throw io_error(std::string("PGM: missing ") + what);
  return val;
}

}  // namespace detail

/// Reads P2 (ASCII) or P5 (binary) PGM. Binary 16-bit samples are big-endian.
inline Image2D load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::string magic;
  if (!detail::next_pgm_token(in, magic) || (magic != "P2" && magic != "P5"))
    throw io_error("PGM: unsupported magic in " + path);
  std::string tok;
  if (!detail::next_pgm_token(in, tok)) throw io_error("PGM: truncated header");
  const std::size_t width = detail::parse_pgm_size(tok, "width");
  if (!detail::next_pgm_token(in, tok)) throw io_error("PGM: truncated header");
  const std::size_t height = detail::parse_pgm_size(tok, "height");
  if (!detail::next_pgm_token(in, tok)) throw io_error("PGM: truncated header");
  const std::size_t maxval = detail::parse_pgm_size(tok, "maxval");
  if (width == 0 || height == 0) throw io_error("PGM: empty image");
  if (maxval == 0 || maxval > 65535) throw io_error("PGM: unsupported maxval");

  Image2D img;
  img.width = width;
  img.height = height;
  img.pixels.resize(width * height);

  if (magic == "P2") {
    for (double& p : img.pixels) {
      if (!detail::next_pgm_token(in, tok)) throw io_error("PGM: truncated payload");
      p = static_cast<double>(detail::parse_pgm_size(tok, "sample"));
      if (p > static_cast<double>(maxval)) throw io_error("PGM: sample exceeds maxval");
    }
  } else {
    // magic token parsing consumed exactly one whitespace after maxval
    const bool wide = maxval > 255;
    std::vector<unsigned char> buf(img.pixels.size() * (wide ? 2 : 1));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size())
      throw io_error("PGM: truncated payload");
    for (std::size_t k = 0; k < img.pixels.size(); ++k) {
      double p = wide ? 256.0 * buf[2 * k] + buf[2 * k + 1] : static_cast<double>(buf[k]);
      if (p > static_cast<double>(maxval)) throw io_error("PGM: sample exceeds maxval");
      img.pixels[k] = p;
    }
  }
  return img;
}

inline void write_pgm(const Image2D& img, const std::string& path, std::size_t maxval = 255,
                      bool binary = true) {
  if (maxval == 0 || maxval > 65535) throw invalid_input("write_pgm: unsupported maxval");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path);
  out << (binary ? "P5" : "P2") << "\n" << img.width << " " << img.height << "\n" << maxval << "\n";
  const bool wide = maxval > 255;
  for (std::size_t k = 0; k < img.pixels.size(); ++k) {
    const double clamped = std::min(std::max(img.pixels[k], 0.0), static_cast<double>(maxval));
    const auto q = static_cast<std::uint32_t>(std::lround(clamped));
    if (binary) {
      if (wide) out.put(static_cast<char>(q >> 8));
      out.put(static_cast<char>(q & 0xff));
    } else {
      out << q << ((k + 1) % img.width == 0 ? '\n' : ' ');
    }
  }
  if (!out) throw io_error("write failed for " + path);
}

/// Downsample by averaging rectangular pixel blocks.
inline Image2D block_average(const Image2D& img, std::size_t target_h, std::size_t target_w) {
  if (target_h == 0 || target_w == 0 || target_h > img.height || target_w > img.width)
    throw invalid_input("block_average: bad target size");
  Image2D out;
  out.width = target_w;
  out.height = target_h;
  out.pixels.assign(target_w * target_h, 0.0);
  for (std::size_t r = 0; r < target_h; ++r) {
    const std::size_t r0 = r * img.height / target_h, r1 = (r + 1) * img.height / target_h;
    for (std::size_t c = 0; c < target_w; ++c) {
      const std::size_t c0 = c * img.width / target_w, c1 = (c + 1) * img.width / target_w;
      double acc = 0;
      for (std::size_t i = r0; i < r1; ++i)
        for (std::size_t j = c0; j < c1; ++j) acc += img.at(i, j);
      out.at(r, c) = acc / static_cast<double>((r1 - r0) * (c1 - c0));
    }
  }
  return out;
}

/// Image -> strictly positive marginal in column-major grid order
/// (node (row i, col j) -> i + j*height): normalize intensities, then shift
/// by eta so scaling iterations never divide by zero.
inline Vec image_to_marginal(const Image2D& img, double eta = 1e-5) {
  Vec f(img.pixels.size());
  for (std::size_t j = 0; j < img.width; ++j)
    for (std::size_t i = 0; i < img.height; ++i) f[j * img.height + i] = img.at(i, j);
  return rescale(f, eta);
}

/// One value per line; blank lines and '#' comments ignored.
inline Vec read_vector_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  Vec out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double x;
    if (ss >> x) out.push_back(x);
  }
  if (out.empty()) throw io_error("no numeric data in " + path);
  return out;
}

}  // namespace fastw1

#endif  // FASTW1_DATA_IO_HPP
