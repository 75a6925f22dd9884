#include "hicontour/contour.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hicontour/error.hpp"
#include "hicontour/mask_geometry.hpp"

namespace hicontour {

namespace {

struct Box {
  int min_row, min_col, max_row, max_col;  // inclusive pixel bounds
};

Box foreground_box(const BinaryMask& mask) {
  Box box{mask.height(), mask.width(), -1, -1};
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) {
      if (!mask.at(i, j)) continue;
      box.min_row = std::min(box.min_row, i);
      box.max_row = std::max(box.max_row, i);
      box.min_col = std::min(box.min_col, j);
      box.max_col = std::max(box.max_col, j);
    }
  }
  return box;
}

constexpr double kEdgeEps = 1e-9;

double signed_area(const Polygon& polygon) {
  double acc = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % n];
    acc += a.x * b.y - b.x * a.y;
  }
  return 0.5 * acc;
}

struct Crossing {
  double x;
  int winding;
};

}  // namespace

std::vector<double> sample_polar(const BinaryMask& mask, const PointR2& center, int n_bins) {
  if (n_bins < 4) {
    throw Error(ErrorCode::InvalidArgument,
                "sample_polar: n_bins must be >= 4, got " + std::to_string(n_bins));
  }
  if (!(center.x >= 0.0 && center.y >= 0.0 && center.x < mask.width() &&
        center.y < mask.height())) {
    throw Error(ErrorCode::InvalidArgument, "sample_polar: center outside the grid");
  }
  const Box box = foreground_box(mask);
  if (box.max_row < 0) throw Error(ErrorCode::EmptyMask, "sample_polar: empty mask");

  const double x0 = box.min_col, x1 = box.max_col + 1.0;
  const double y0 = box.min_row, y1 = box.max_row + 1.0;
  const double diagonal = std::hypot(x1 - x0, y1 - y0);
  const int steps = static_cast<int>(std::floor(diagonal / kRayStep));

  std::vector<double> radii(n_bins, 0.0);
  for (int k = 0; k < n_bins; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / n_bins;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    double radius = 0.0;
    for (int step = 0; step <= steps; ++step) {
      const double t = step * kRayStep;
      const double x = center.x + t * c;
      const double y = center.y + t * s;
      if (x < x0 || y < y0 || x >= x1 || y >= y1) continue;
      if (mask.at(static_cast<int>(y), static_cast<int>(x))) radius = t;
    }
    radii[k] = radius;
  }
  return radii;
}

PointR2 choose_center(const BinaryMask& mask) {
  const PointR2 mass = mass_center(mask);
  if (mask.contains_point(mass)) return mass;
  return inscribed_circle_center(mask);
}

LocalContour encode_region(const BinaryMask& mask, int n_bins) {
  const PointR2 center = choose_center(mask);
  return {center, sample_polar(mask, center, n_bins)};
}

Polygon contour_to_polygon(const LocalContour& contour) {
  const int n = contour.n_bins();
  Polygon polygon(n);
  for (int k = 0; k < n; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / n;
    polygon[k] = {contour.center.x + contour.radii[k] * std::cos(theta),
                  contour.center.y + contour.radii[k] * std::sin(theta)};
  }
  return polygon;
}

BinaryMask rasterize_polygon(const Polygon& polygon, int width, int height) {
  BinaryMask mask(width, height);
  const std::size_t n = polygon.size();
  if (n < 3 || std::abs(signed_area(polygon)) < kEdgeEps) return mask;

  double ymin = polygon[0].y, ymax = polygon[0].y;
  for (const auto& p : polygon) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int row_begin = std::max(0, static_cast<int>(std::ceil(ymin - 0.5 - kEdgeEps)));
  const int row_end =
      std::min(height - 1, static_cast<int>(std::floor(ymax - 0.5 + kEdgeEps)));

  const auto fill = [&](int row, double xa, double xb) {
    const int c0 = std::max(0, static_cast<int>(std::ceil(xa - 0.5 - kEdgeEps)));
    const int c1 = std::min(width - 1, static_cast<int>(std::floor(xb - 0.5 + kEdgeEps)));
    for (int c = c0; c <= c1; ++c) mask.set(row, c);
  };

  std::vector<Crossing> crossings;
  for (int row = row_begin; row <= row_end; ++row) {
    const double y = row + 0.5;
    crossings.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const PointR2& a = polygon[i];
      const PointR2& b = polygon[(i + 1) % n];
      if (a.y == b.y) {
        // Horizontal edges only matter when they lie on the scanline.
        if (std::abs(a.y - y) <= kEdgeEps) fill(row, std::min(a.x, b.x), std::max(a.x, b.x));
        continue;
      }
      const double lo = std::min(a.y, b.y);
      const double hi = std::max(a.y, b.y);
      if (y < lo - kEdgeEps || y > hi + kEdgeEps) continue;
      const double x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      // Half-open rule for winding counts.
      if (y >= lo && y < hi) crossings.push_back({x, a.y < b.y ? 1 : -1});
      // Closed boundary: a pixel center lying on the edge is inside.
      const double col = std::round(x - 0.5);
      if (std::abs(x - 0.5 - col) <= kEdgeEps && col >= 0 && col < width) {
        mask.set(row, static_cast<int>(col));
      }
    }
    std::sort(crossings.begin(), crossings.end(),
              [](const Crossing& l, const Crossing& r) { return l.x < r.x; });
    int winding = 0;
    double span_start = 0.0;
    for (const auto& c : crossings) {
      const int before = winding;
      winding += c.winding;
      if (before == 0 && winding != 0) span_start = c.x;
      if (before != 0 && winding == 0) fill(row, span_start, c.x);
    }
  }
  return mask;
}

BinaryMask reconstruct_mask(const std::vector<LocalContour>& contours, int width,
                            int height) {
  BinaryMask out(width, height);
  for (const auto& contour : contours) {
    out |= rasterize_polygon(contour_to_polygon(contour), width, height);
  }
  return out;
}

BinaryMask reconstruct_mask(const HierarchicalEncoding& encoding) {
  return reconstruct_mask(encoding.contours, encoding.width, encoding.height);
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::InvalidArgument, "iou: mask size mismatch");
  }
  long inter = 0;
  long uni = 0;
  const auto ab = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    inter += ab[i] & bb[i];
    uni += ab[i] | bb[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace hicontour
