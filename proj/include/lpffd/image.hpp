#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "lpffd/error.hpp"
#include "lpffd/ffd.hpp"
#include "lpffd/geometry.hpp"

namespace lpffd {

/// 8-bit interleaved raster, row 0 first.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c = 3) : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, 0) {}

  bool empty() const { return width <= 0 || height <= 0; }
  std::uint8_t& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
};

namespace detail {

inline void skip_ppm_space(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace detail

/// Binary PPM (P6, maxval 255).
inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "image not found: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw Error(ErrorCode::InvalidInput, "not a binary PPM (P6): " + path);
  int w = 0, h = 0, maxval = 0;
  detail::skip_ppm_space(in);
  in >> w;
  detail::skip_ppm_space(in);
  in >> h;
  detail::skip_ppm_space(in);
  in >> maxval;
  in.get();
  if (!in || w <= 0 || h <= 0 || maxval != 255) throw Error(ErrorCode::InvalidInput, "unsupported PPM header: " + path);
  Image img(w, h, 3);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!in) throw Error(ErrorCode::InvalidInput, "truncated PPM: " + path);
  return img;
}

inline void write_ppm(const Image& img, const std::string& path) {
  if (img.channels != 3) throw Error(ErrorCode::InvalidInput, "PPM output needs 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
}

/// Lattice parameters of a (tess+1) x (tess+1) node tessellation of the box,
/// index i*(tess+1) + j with i along u.
inline Points tessellation_params(int tess) {
  const int n = tess + 1;
  Points params(n * n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      params(i * n + j, 0) = static_cast<double>(i) / tess;
      params(i * n + j, 1) = static_cast<double>(j) / tess;
    }
  return params;
}

/// Deformed tessellation nodes under the grid's current handles.
inline Points warp_nodes(const LatticeGrid& grid, int tess) {
  if (grid.dimension() != 2) throw Error(ErrorCode::InvalidInput, "image warping needs a 2D grid");
  if (tess < 1) throw Error(ErrorCode::InvalidInput, "tessellation must be positive");
  // direct evaluation: the sparse weights drop tiny terms, which shows at pixel-sized coordinates
  const Points params = tessellation_params(tess);
  Points nodes(params.rows(), 2);
  for (int k = 0; k < params.rows(); ++k)
    nodes.row(k) = de_casteljau(grid.dims(), grid.current(), params.row(k).transpose()).transpose();
  return nodes;
}

struct WarpResult {
  Image image;
  std::vector<std::uint8_t> coverage;  // 1 where a warped quad covers the pixel
};

/// Bilinear sample at continuous pixel coordinates (pixel centers at integers), clamped to the border.
inline void sample_bilinear(const Image& img, double x, double y, double* out) {
  x = std::clamp(x, 0.0, img.width - 1.0);
  y = std::clamp(y, 0.0, img.height - 1.0);
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0, fy = y - y0;
  for (int c = 0; c < img.channels; ++c) {
    const double top = (1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bottom = (1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    out[c] = (1 - fy) * top + fy * bottom;
  }
}

/// Forward warp: the image spans the grid box (x along u, rows along v). The
/// box is tessellated into tess x tess quads whose nodes go through the FFD;
/// each warped triangle is rasterized into an output of the same size and box,
/// texturing with bilinear samples of the input. Uncovered pixels stay 0.
inline WarpResult warp_image(const LatticeGrid& grid, const Image& image, int tess) {
  if (image.empty()) throw Error(ErrorCode::InvalidInput, "empty image");
  if (tess < grid.dims()[0] || tess < grid.dims()[1])
    throw Error(ErrorCode::InvalidInput, "tessellation must be at least the handle count per axis");
  const Points nodes = warp_nodes(grid, tess);
  const Points params = tessellation_params(tess);
  const Box& box = grid.box();
  const int W = image.width, H = image.height, n = tess + 1;

  // Node positions in output pixel space (pixel centers at k + 0.5).
  Points px(nodes.rows(), 2);
  for (int k = 0; k < nodes.rows(); ++k) {
    px(k, 0) = (nodes(k, 0) - box.origin[0]) / box.extent[0] * W;
    px(k, 1) = (nodes(k, 1) - box.origin[1]) / box.extent[1] * H;
  }

  WarpResult out{Image(W, H, image.channels), std::vector<std::uint8_t>(static_cast<size_t>(W) * H, 0)};
  std::vector<double> texel(image.channels);
  auto raster = [&](int a, int b, int c) {
    const double ax = px(a, 0), ay = px(a, 1), bx = px(b, 0), by = px(b, 1), cx = px(c, 0), cy = px(c, 1);
    const double det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
    if (std::abs(det) < 1e-14) return;
    const int x_lo = std::max(0, static_cast<int>(std::floor(std::min({ax, bx, cx}) - 0.5)));
    const int x_hi = std::min(W - 1, static_cast<int>(std::ceil(std::max({ax, bx, cx}) - 0.5)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}) - 0.5)));
    const int y_hi = std::min(H - 1, static_cast<int>(std::ceil(std::max({ay, by, cy}) - 0.5)));
    constexpr double kEdge = -1e-9;
    for (int y = y_lo; y <= y_hi; ++y)
      for (int x = x_lo; x <= x_hi; ++x) {
        const double qx = x + 0.5, qy = y + 0.5;
        const double l1 = ((qx - ax) * (cy - ay) - (cx - ax) * (qy - ay)) / det;
        const double l2 = ((bx - ax) * (qy - ay) - (qx - ax) * (by - ay)) / det;
        const double l0 = 1.0 - l1 - l2;
        if (l0 < kEdge || l1 < kEdge || l2 < kEdge) continue;
        const double u = l0 * params(a, 0) + l1 * params(b, 0) + l2 * params(c, 0);
        const double v = l0 * params(a, 1) + l1 * params(b, 1) + l2 * params(c, 1);
        sample_bilinear(image, u * W - 0.5, v * H - 0.5, texel.data());
        for (int ch = 0; ch < image.channels; ++ch)
          out.image.at(x, y, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(texel[ch]), 0L, 255L));
        out.coverage[static_cast<size_t>(y) * W + x] = 1;
      }
  };
  for (int i = 0; i < tess; ++i)
    for (int j = 0; j < tess; ++j) {
      const int p00 = i * n + j, p10 = (i + 1) * n + j, p01 = i * n + j + 1, p11 = (i + 1) * n + j + 1;
      raster(p00, p10, p11);
      raster(p00, p11, p01);
    }
  return out;
}

}  // namespace lpffd
