// Small 8-bit RGB image type with the raster helpers used by the synthetic
// renderer and the attention-map dumper.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "oed/common.hpp"

namespace oed {

using Rgb = std::array<uint8_t, 3>;

struct Image {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> data;  // row-major, 3 channels per pixel

  Image() = default;
  Image(int h, int w, Rgb fill = {0, 0, 0}) : height(h), width(w) {
    data.resize(static_cast<size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) set(y, x, fill);
  }

  uint8_t& at(int y, int x, int c) {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  uint8_t at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  void set(int y, int x, Rgb rgb) {
    for (int c = 0; c < 3; ++c) at(y, x, c) = rgb[c];
  }

  bool operator==(const Image& o) const {
    return height == o.height && width == o.width && data == o.data;
  }
};

enum class ShapeKind { kDisc = 0, kSquare = 1, kDiamond = 2, kTriangle = 3, kBar = 4, kRing = 5 };

// Fills the axis-aligned shape whose bounding box is (cx, cy, w, h) in
// normalized coordinates. Pixel centers are tested against the shape's
// implicit equation; no anti-aliasing so renders are bit-reproducible.
inline void draw_shape(Image& img, ShapeKind kind, double cx, double cy,
                       double w, double h, Rgb color) {
  const double x1 = cx - w / 2, y1 = cy - h / 2, x2 = cx + w / 2, y2 = cy + h / 2;
  int px1 = std::max(0, static_cast<int>(std::floor(x1 * img.width)));
  int py1 = std::max(0, static_cast<int>(std::floor(y1 * img.height)));
  int px2 = std::min(img.width - 1, static_cast<int>(std::ceil(x2 * img.width)));
  int py2 = std::min(img.height - 1, static_cast<int>(std::ceil(y2 * img.height)));
  for (int py = py1; py <= py2; ++py) {
    for (int px = px1; px <= px2; ++px) {
      double x = (px + 0.5) / img.width;
      double y = (py + 0.5) / img.height;
      // Coordinates relative to the box center, scaled to [-1, 1].
      double u = (x - cx) / (w / 2), v = (y - cy) / (h / 2);
      if (std::abs(u) > 1 || std::abs(v) > 1) continue;
      bool inside = false;
      switch (kind) {
        case ShapeKind::kDisc: inside = u * u + v * v <= 1.0; break;
        case ShapeKind::kSquare: inside = true; break;
        case ShapeKind::kDiamond: inside = std::abs(u) + std::abs(v) <= 1.0; break;
        case ShapeKind::kTriangle: inside = v >= -1.0 && std::abs(u) <= (v + 1.0) / 2.0; break;
        case ShapeKind::kBar: inside = std::abs(v) <= 0.45; break;
        case ShapeKind::kRing: {
          double r2 = u * u + v * v;
          inside = r2 <= 1.0 && r2 >= 0.30;
          break;
        }
      }
      if (inside) img.set(py, px, color);
    }
  }
}

// Paints the bounding box region with a flat color (used to occlude objects).
inline void draw_patch(Image& img, double cx, double cy, double w, double h,
                       Rgb color) {
  draw_shape(img, ShapeKind::kSquare, cx, cy, w, h, color);
}

inline void write_ppm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open for writing: " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  require(out.good(), "write failed: " + path);
}

// Simple blue->green->red colormap for heatmaps; v in [0, 1].
inline Rgb heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  auto lerp = [](double a, double b, double t) {
    return static_cast<uint8_t>(std::lround(a + (b - a) * t));
  };
  if (v < 0.5) {
    double t = v * 2;
    return {lerp(0, 30, t), lerp(60, 220, t), lerp(220, 60, t)};
  }
  double t = (v - 0.5) * 2;
  return {lerp(30, 255, t), lerp(220, 60, t), lerp(60, 30, t)};
}

}  // namespace oed
