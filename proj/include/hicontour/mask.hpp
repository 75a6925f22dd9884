#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hicontour {

// Continuous pixel-space coordinates. Pixel (row i, col j) has its center at
// (j + 0.5, i + 0.5); x grows to the right, y grows downward.
struct PointR2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PointR2&, const PointR2&) = default;
};

using Polygon = std::vector<PointR2>;

// Unit vector. Constructed through `Direction2::normalized` so the norm
// invariant holds.
class Direction2 {
 public:
  Direction2() = default;
  static Direction2 normalized(double dx, double dy);

  double dx() const noexcept { return dx_; }
  double dy() const noexcept { return dy_; }

 private:
  Direction2(double dx, double dy) : dx_(dx), dy_(dy) {}
  double dx_ = 1.0;
  double dy_ = 0.0;
};

struct PixelIndex {
  int row = 0;
  int col = 0;
};

inline PointR2 pixel_center(int row, int col) {
  return {col + 0.5, row + 0.5};
}

// W x H boolean raster stored row-major, one byte per pixel.
class BinaryMask {
 public:
  BinaryMask() : BinaryMask(1, 1) {}
  BinaryMask(int width, int height);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(int row, int col) const noexcept {
    return bits_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  // Out-of-grid reads are background.
  bool get(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < height_ && col < width_ && at(row, col);
  }
  void set(int row, int col, bool value = true) noexcept {
    bits_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }
  bool contains_point(const PointR2& p) const noexcept;

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits() noexcept { return bits_; }

  bool empty() const noexcept;
  BinaryMask& operator|=(const BinaryMask& other);

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

}  // namespace hicontour
