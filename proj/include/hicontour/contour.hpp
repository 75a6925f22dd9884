#pragma once

#include <vector>

#include "hicontour/mask.hpp"

namespace hicontour {

inline constexpr int kDefaultBins = 360;
inline constexpr double kRayStep = 0.25;

// One center and a distance vector. Bin k covers angle 2*pi*k/N measured from
// +x towards +y.
struct LocalContour {
  PointR2 center;
  std::vector<double> radii;

  int n_bins() const noexcept { return static_cast<int>(radii.size()); }
};

struct HierarchicalEncoding {
  std::vector<LocalContour> contours;
  std::vector<int> depths;          // subdivision depth of each leaf
  std::vector<double> solidities;   // terminal solidity of each leaf
  int width = 0;
  int height = 0;

  int size() const noexcept { return static_cast<int>(contours.size()); }
};

// Marches each ray in kRayStep increments out to the foreground bounding box
// diagonal and keeps the farthest sample whose pixel is foreground; rays that
// never touch the foreground get radius 0. Throws on n_bins < 4, empty masks
// and centers outside the grid.
std::vector<double> sample_polar(const BinaryMask& mask, const PointR2& center,
                                 int n_bins = kDefaultBins);

// Mass center when its pixel is foreground, otherwise the inscribed circle
// center.
PointR2 choose_center(const BinaryMask& mask);

LocalContour encode_region(const BinaryMask& mask, int n_bins = kDefaultBins);

Polygon contour_to_polygon(const LocalContour& contour);

// Scanline fill with the nonzero winding rule. A pixel is set when its center
// lies inside the polygon or on its boundary. Polygons with (near) zero
// enclosed area produce an empty mask.
BinaryMask rasterize_polygon(const Polygon& polygon, int width, int height);

BinaryMask reconstruct_mask(const HierarchicalEncoding& encoding);
BinaryMask reconstruct_mask(const std::vector<LocalContour>& contours, int width,
                            int height);

// |a & b| / |a | b|, with 0/0 defined as 1.
double iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace hicontour
