#pragma once

#include <vector>

#include "hicontour/mask.hpp"

namespace hicontour {

// Maximal 8-connected foreground components, each as a full-size mask.
// Sorted by area descending; ties keep the component whose first pixel comes
// first in row-major order.
std::vector<BinaryMask> connected_components(const BinaryMask& mask);

// Number of 8-connected components without materializing them.
int count_components(const BinaryMask& mask);

long area(const BinaryMask& mask);

// Mean of the foreground pixel centers. Throws EmptyMask.
PointR2 mass_center(const BinaryMask& mask);

// Centers of foreground pixels with a background or off-grid 4-neighbor.
std::vector<PointR2> boundary_pixels(const BinaryMask& mask);

// Andrew's monotone chain. Counter-clockwise in (x, y), collinear points
// dropped, first vertex lexicographically smallest. Throws on empty input.
Polygon convex_hull(std::vector<PointR2> points);

// area / (pixel count of the filled convex hull of the boundary pixel
// centers), clamped to [0, 1]. Throws EmptyMask.
double solidity(const BinaryMask& mask);

// Exact Euclidean distance from every foreground pixel center to the nearest
// background pixel center. Pixels outside the grid count as background.
// Row-major, background entries are 0.
std::vector<double> distance_transform(const BinaryMask& mask);

// Center of the foreground pixel with the largest distance transform value,
// first in row-major order on ties. Throws EmptyMask.
PointR2 inscribed_circle_center(const BinaryMask& mask);

// Eigenvector of the smaller eigenvalue of the 2x2 sample covariance.
// Sign is fixed so dy > 0, or dx > 0 when dy == 0. Throws DegenerateCloud
// when every point coincides.
Direction2 least_variance_direction(const std::vector<PointR2>& points);

}  // namespace hicontour
