// Box arithmetic: IoU, GIoU (value and analytic gradient), L1 distance and
// the pairwise NMS correlation. Everything is double precision and clamps
// degenerate areas instead of throwing, since training can transiently
// produce zero-size boxes.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "oed/types.hpp"

namespace oed {

struct CornerBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

inline CornerBox to_corners(const Box& b) {
  return {b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2};
}

inline Box to_center(const CornerBox& c) {
  return {(c.x1 + c.x2) / 2, (c.y1 + c.y2) / 2, c.x2 - c.x1, c.y2 - c.y1};
}

namespace detail {
struct Overlap {
  double inter = 0, uni = 0, enclose = 0;
};

inline Overlap overlap(const CornerBox& a, const CornerBox& b) {
  Overlap o;
  double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  o.inter = std::max(iw, 0.0) * std::max(ih, 0.0);
  double area_a = std::max(a.x2 - a.x1, 0.0) * std::max(a.y2 - a.y1, 0.0);
  double area_b = std::max(b.x2 - b.x1, 0.0) * std::max(b.y2 - b.y1, 0.0);
  o.uni = area_a + area_b - o.inter;
  o.enclose = (std::max(a.x2, b.x2) - std::min(a.x1, b.x1)) *
              (std::max(a.y2, b.y2) - std::min(a.y1, b.y1));
  return o;
}
}  // namespace detail

inline double iou(const Box& a, const Box& b) {
  auto o = detail::overlap(to_corners(a), to_corners(b));
  if (o.uni <= 0) return 0.0;
  return o.inter / o.uni;
}

inline double giou(const Box& a, const Box& b) {
  auto o = detail::overlap(to_corners(a), to_corners(b));
  if (o.uni <= 0 || o.enclose <= 0) return 0.0;
  return o.inter / o.uni - (o.enclose - o.uni) / o.enclose;
}

// Analytic gradient of giou with respect to
// (a.cx, a.cy, a.w, a.h, b.cx, b.cy, b.w, b.h). Valid away from degenerate
// configurations (zero areas, exactly aligned edges).
inline std::array<double, 8> giou_grad(const Box& a, const Box& b) {
  const CornerBox ca = to_corners(a), cb = to_corners(b);
  const double ax1 = ca.x1, ay1 = ca.y1, ax2 = ca.x2, ay2 = ca.y2;
  const double bx1 = cb.x1, by1 = cb.y1, bx2 = cb.x2, by2 = cb.y2;

  const double iw = std::min(ax2, bx2) - std::max(ax1, bx1);
  const double ih = std::min(ay2, by2) - std::max(ay1, by1);
  const bool has_inter = iw > 0 && ih > 0;
  const double inter = has_inter ? iw * ih : 0.0;
  const double wa = ax2 - ax1, ha = ay2 - ay1;
  const double wb = bx2 - bx1, hb = by2 - by1;
  const double uni = wa * ha + wb * hb - inter;
  const double cw = std::max(ax2, bx2) - std::min(ax1, bx1);
  const double ch = std::max(ay2, by2) - std::min(ay1, by1);
  const double enclose = cw * ch;

  // Partials with respect to the 8 corner coordinates, order
  // (ax1, ay1, ax2, ay2, bx1, by1, bx2, by2).
  std::array<double, 8> d_inter{}, d_area{}, d_enc{};
  if (has_inter) {
    d_inter[0] = ax1 > bx1 ? -ih : 0;  // d iw/d ax1 = -1 when ax1 is the max
    d_inter[4] = bx1 > ax1 ? -ih : 0;
    d_inter[2] = ax2 < bx2 ? ih : 0;
    d_inter[6] = bx2 < ax2 ? ih : 0;
    d_inter[1] = ay1 > by1 ? -iw : 0;
    d_inter[5] = by1 > ay1 ? -iw : 0;
    d_inter[3] = ay2 < by2 ? iw : 0;
    d_inter[7] = by2 < ay2 ? iw : 0;
  }
  d_area[0] = -ha;
  d_area[2] = ha;
  d_area[1] = -wa;
  d_area[3] = wa;
  d_area[4] = -hb;
  d_area[6] = hb;
  d_area[5] = -wb;
  d_area[7] = wb;
  d_enc[0] = ax1 < bx1 ? -ch : 0;
  d_enc[4] = bx1 < ax1 ? -ch : 0;
  d_enc[2] = ax2 > bx2 ? ch : 0;
  d_enc[6] = bx2 > ax2 ? ch : 0;
  d_enc[1] = ay1 < by1 ? -cw : 0;
  d_enc[5] = by1 < ay1 ? -cw : 0;
  d_enc[3] = ay2 > by2 ? cw : 0;
  d_enc[7] = by2 > ay2 ? cw : 0;

  std::array<double, 8> d_corner{};
  for (int i = 0; i < 8; ++i) {
    double d_uni = d_area[i] - d_inter[i];
    // d(I/U) + d(U/C); the constant -1 term of -(C-U)/C drops out.
    d_corner[i] = (d_inter[i] * uni - inter * d_uni) / (uni * uni) +
                  d_uni / enclose - d_enc[i] * uni / (enclose * enclose);
  }

  // Chain rule from corner to center-size coordinates.
  auto pack = [](double dx1, double dy1, double dx2, double dy2) {
    return std::array<double, 4>{dx1 + dx2, dy1 + dy2, 0.5 * (dx2 - dx1),
                                 0.5 * (dy2 - dy1)};
  };
  auto da = pack(d_corner[0], d_corner[1], d_corner[2], d_corner[3]);
  auto db = pack(d_corner[4], d_corner[5], d_corner[6], d_corner[7]);
  return {da[0], da[1], da[2], da[3], db[0], db[1], db[2], db[3]};
}

inline double box_l1(const Box& a, const Box& b) {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) +
         std::abs(a.h - b.h);
}

// NMS correlation between two pair predictions: product of subject IoU and
// object IoU.
inline double pair_correlation(const Box& p_subject, const Box& p_object,
                               const Box& q_subject, const Box& q_object) {
  return iou(p_subject, q_subject) * iou(p_object, q_object);
}

}  // namespace oed
