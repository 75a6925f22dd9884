#include "hicontour/mask_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hicontour/contour.hpp"
#include "hicontour/error.hpp"

namespace hicontour {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::InvariantViolated: return "InvariantViolated";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

Direction2 Direction2::normalized(double dx, double dy) {
  const double norm = std::hypot(dx, dy);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::InvalidArgument, "direction must be finite and nonzero");
  }
  // Avoid negative zeros leaking into serialized output.
  return Direction2(dx / norm + 0.0, dy / norm + 0.0);
}

BinaryMask::BinaryMask(int width, int height)
    : BinaryMask(width, height,
                 std::vector<std::uint8_t>(
                     width > 0 && height > 0 ? static_cast<std::size_t>(width) * height : 0,
                     0)) {}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "mask dimensions must be >= 1, got " +
                                                std::to_string(width) + "x" +
                                                std::to_string(height));
  }
  if (bits_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::InvalidArgument, "mask bit count does not match its dimensions");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

bool BinaryMask::contains_point(const PointR2& p) const noexcept {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  const double fx = std::floor(p.x);
  const double fy = std::floor(p.y);
  if (fx < 0 || fy < 0 || fx >= width_ || fy >= height_) return false;
  return at(static_cast<int>(fy), static_cast<int>(fx));
}

bool BinaryMask::empty() const noexcept {
  return std::none_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
  if (other.width_ != width_ || other.height_ != height_) {
    throw Error(ErrorCode::InvalidArgument, "mask size mismatch");
  }
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

namespace {

// Labels 8-connected components in row-major discovery order. Returns the
// number of components; labels are 1-based, 0 is background.
int label_components(const BinaryMask& mask, std::vector<int>& labels,
                     std::vector<long>* areas) {
  const int w = mask.width();
  const int h = mask.height();
  labels.assign(mask.size(), 0);
  if (areas) areas->clear();
  std::vector<int> stack;
  int next = 0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int idx = i * w + j;
      if (!mask.at(i, j) || labels[idx] != 0) continue;
      ++next;
      long count = 0;
      labels[idx] = next;
      stack.push_back(idx);
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        ++count;
        const int ci = cur / w;
        const int cj = cur % w;
        for (int di = -1; di <= 1; ++di) {
          for (int dj = -1; dj <= 1; ++dj) {
            const int ni = ci + di;
            const int nj = cj + dj;
            if (ni < 0 || nj < 0 || ni >= h || nj >= w) continue;
            const int nidx = ni * w + nj;
            if (mask.at(ni, nj) && labels[nidx] == 0) {
              labels[nidx] = next;
              stack.push_back(nidx);
            }
          }
        }
      }
      if (areas) areas->push_back(count);
    }
  }
  return next;
}

void throw_if_empty(const BinaryMask& mask, const char* op) {
  if (mask.empty()) {
    throw Error(ErrorCode::EmptyMask, std::string(op) + ": mask has no foreground pixels");
  }
}

double cross(const PointR2& o, const PointR2& a, const PointR2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Felzenszwalb-Huttenlocher lower envelope of parabolas, in place.
void squared_distance_1d(std::vector<double>& f, std::vector<double>& out,
                         std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  out.resize(n);
  v.resize(n);
  z.resize(n + 1);
  int k = 0;
  int first = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] < inf) {
      first = q;
      break;
    }
  }
  if (first < 0) {
    std::fill(out.begin(), out.end(), inf);
    return;
  }
  v[0] = first;
  z[0] = -inf;
  z[1] = inf;
  for (int q = first + 1; q < n; ++q) {
    if (!(f[q] < inf)) continue;
    double s = 0.0;
    // z[0] is -inf, so k never drops below zero.
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double d = q - v[k];
    out[q] = d * d + f[v[k]];
  }
}

}  // namespace

std::vector<BinaryMask> connected_components(const BinaryMask& mask) {
  std::vector<int> labels;
  std::vector<long> areas;
  const int n = label_components(mask, labels, &areas);
  std::vector<BinaryMask> components(n, BinaryMask(mask.width(), mask.height()));
  for (std::size_t idx = 0; idx < labels.size(); ++idx) {
    if (labels[idx] > 0) components[labels[idx] - 1].bits()[idx] = 1;
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return areas[a] > areas[b]; });
  std::vector<BinaryMask> sorted;
  sorted.reserve(n);
  for (int i : order) sorted.push_back(std::move(components[i]));
  return sorted;
}

int count_components(const BinaryMask& mask) {
  std::vector<int> labels;
  return label_components(mask, labels, nullptr);
}

long area(const BinaryMask& mask) {
  long count = 0;
  for (auto b : mask.bits()) count += b;
  return count;
}

PointR2 mass_center(const BinaryMask& mask) {
  double sx = 0.0;
  double sy = 0.0;
  long n = 0;
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) {
      if (!mask.at(i, j)) continue;
      sx += j + 0.5;
      sy += i + 0.5;
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::EmptyMask, "mass_center: mask has no foreground pixels");
  return {sx / n, sy / n};
}

std::vector<PointR2> boundary_pixels(const BinaryMask& mask) {
  std::vector<PointR2> out;
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) {
      if (!mask.at(i, j)) continue;
      if (!mask.get(i - 1, j) || !mask.get(i + 1, j) || !mask.get(i, j - 1) ||
          !mask.get(i, j + 1)) {
        out.push_back(pixel_center(i, j));
      }
    }
  }
  return out;
}

Polygon convex_hull(std::vector<PointR2> points) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "convex_hull: no points");
  const auto lex = [](const PointR2& a, const PointR2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  };
  std::sort(points.begin(), points.end(), lex);
  points.erase(std::unique(points.begin(), points.end()), points.end());
  const std::size_t n = points.size();
  if (n < 3) return points;

  Polygon hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

double solidity(const BinaryMask& mask) {
  throw_if_empty(mask, "solidity");
  const Polygon hull = convex_hull(boundary_pixels(mask));
  // A point or segment hull is its own convex hull.
  if (hull.size() < 3) return 1.0;
  const long hull_pixels = area(rasterize_polygon(hull, mask.width(), mask.height()));
  if (hull_pixels == 0) return 1.0;
  return std::clamp(static_cast<double>(area(mask)) / static_cast<double>(hull_pixels), 0.0,
                    1.0);
}

std::vector<double> distance_transform(const BinaryMask& mask) {
  // One pixel of background padding realizes the off-grid-is-background rule.
  const int w = mask.width() + 2;
  const int h = mask.height() + 2;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> grid(static_cast<std::size_t>(w) * h, 0.0);
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) {
      if (mask.at(i, j)) grid[(i + 1) * w + (j + 1)] = inf;
    }
  }
  std::vector<double> f, d, z;
  std::vector<int> v;
  f.resize(h);
  for (int j = 0; j < w; ++j) {
    for (int i = 0; i < h; ++i) f[i] = grid[i * w + j];
    squared_distance_1d(f, d, v, z);
    for (int i = 0; i < h; ++i) grid[i * w + j] = d[i];
  }
  f.resize(w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) f[j] = grid[i * w + j];
    squared_distance_1d(f, d, v, z);
    for (int j = 0; j < w; ++j) grid[i * w + j] = d[j];
  }
  std::vector<double> out(mask.size(), 0.0);
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) {
      if (mask.at(i, j)) {
        out[static_cast<std::size_t>(i) * mask.width() + j] =
            std::sqrt(grid[(i + 1) * w + (j + 1)]);
      }
    }
  }
  return out;
}

PointR2 inscribed_circle_center(const BinaryMask& mask) {
  throw_if_empty(mask, "inscribed_circle_center");
  const auto dt = distance_transform(mask);
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t idx = 0; idx < dt.size(); ++idx) {
    if (mask.bits()[idx] && dt[idx] > best_value) {
      best_value = dt[idx];
      best = idx;
    }
  }
  const int row = static_cast<int>(best / mask.width());
  const int col = static_cast<int>(best % mask.width());
  return pixel_center(row, col);
}

Direction2 least_variance_direction(const std::vector<PointR2>& points) {
  const bool degenerate =
      points.empty() || std::all_of(points.begin(), points.end(),
                                    [&](const PointR2& p) { return p == points.front(); });
  if (degenerate) {
    throw Error(ErrorCode::DegenerateCloud,
                "least_variance_direction: need at least two distinct points");
  }
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  // Major axis angle of the symmetric 2x2 covariance; the minor axis is
  // perpendicular to it.
  double dx = 0.0, dy = 1.0;
  if (sxy == 0.0) {
    // Axis-aligned cloud; the trig path would leave ~1e-17 residue that
    // flips the sign rule.
    if (sxx < syy) {
      dx = 1.0;
      dy = 0.0;
    }
  } else {
    const double major = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    dx = -std::sin(major);
    dy = std::cos(major);
  }
  if (dy < 0.0 || (dy == 0.0 && dx < 0.0)) {
    dx = -dx;
    dy = -dy;
  }
  return Direction2::normalized(dx, dy);
}

}  // namespace hicontour
