#include "hicontour/hierarchy.hpp"

#include <numeric>
#include <string>
#include <tuple>

#include "hicontour/error.hpp"
#include "hicontour/mask_geometry.hpp"

namespace hicontour {

void EncoderConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "tau must lie in (0, 1), got " + std::to_string(tau));
  }
  if (max_depth < 0 || max_depth > 12) {
    throw Error(ErrorCode::InvalidArgument,
                "max_depth must lie in [0, 12], got " + std::to_string(max_depth));
  }
  if (n_bins < 4) {
    throw Error(ErrorCode::InvalidArgument, "n_bins must be >= 4, got " + std::to_string(n_bins));
  }
  if (min_region_area < 0) {
    throw Error(ErrorCode::InvalidArgument, "min_region_area must be >= 0");
  }
}

MaskPair split(const BinaryMask& mask, const PointR2& centroid, const Direction2& direction) {
  BinaryMask first(mask.width(), mask.height());
  BinaryMask second(mask.width(), mask.height());
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) {
      if (!mask.at(i, j)) continue;
      const double ux = j + 0.5 - centroid.x;
      const double uy = i + 0.5 - centroid.y;
      if (ux * direction.dy() - uy * direction.dx() >= 0.0) {
        first.set(i, j);
      } else {
        second.set(i, j);
      }
    }
  }
  return {std::move(first), std::move(second)};
}

MaskPair reorg(const BinaryMask& first, const BinaryMask& second) {
  if (first.empty() && second.empty()) {
    throw Error(ErrorCode::InvalidArgument, "reorg: both parts are empty");
  }
  auto components = connected_components(first);
  if (components.size() <= 1) return {first, second};
  BinaryMask rest = second;
  for (std::size_t i = 1; i < components.size(); ++i) rest |= components[i];
  return {std::move(components.front()), std::move(rest)};
}

std::optional<RepairResult> repair_connectivity(const BinaryMask& first,
                                                const BinaryMask& second) {
  RepairResult result{{first, second}, 0};
  auto& [a, b] = result.parts;
  if (count_components(a) > 1) {
    std::tie(a, b) = reorg(a, b);
    ++result.reorg_passes;
  }
  if (count_components(b) > 1) {
    std::tie(b, a) = reorg(b, a);
    ++result.reorg_passes;
  }
  if (a.empty() || b.empty()) return std::nullopt;
  if (count_components(a) != 1 || count_components(b) != 1) {
    throw Error(ErrorCode::InvariantViolated,
                "repair_connectivity: parts still disconnected after two reorg passes");
  }
  return result;
}

namespace {

void subdivide(const BinaryMask& region, int budget, int depth, const EncoderConfig& config,
               std::vector<Leaf>& leaves) {
  const double sld = solidity(region);
  const auto emit = [&](LeafReason reason) {
    leaves.push_back(Leaf{region, depth, sld, reason});
  };
  if (sld > config.tau) return emit(LeafReason::SolidEnough);
  if (budget == 0) return emit(LeafReason::DepthExhausted);
  if (area(region) < config.min_region_area) return emit(LeafReason::TooSmall);

  const PointR2 centroid = mass_center(region);
  Direction2 direction;
  try {
    direction = least_variance_direction(boundary_pixels(region));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateCloud) throw;
    return emit(LeafReason::DegenerateSplit);
  }
  auto [first, second] = split(region, centroid, direction);
  auto repaired = repair_connectivity(first, second);
  if (!repaired) return emit(LeafReason::DegenerateSplit);
  subdivide(repaired->parts.first, budget - 1, depth + 1, config, leaves);
  subdivide(repaired->parts.second, budget - 1, depth + 1, config, leaves);
}

}  // namespace

std::vector<Leaf> hierarchical_partition(const BinaryMask& mask, const EncoderConfig& config) {
  config.validate();
  if (mask.empty()) {
    throw Error(ErrorCode::EmptyMask, "hierarchical_encode: mask has no foreground pixels");
  }
  std::vector<Leaf> leaves;
  for (const auto& component : connected_components(mask)) {
    subdivide(component, config.max_depth, 0, config, leaves);
  }
  return leaves;
}

HierarchicalEncoding hierarchical_encode(const BinaryMask& mask, const EncoderConfig& config) {
  const auto leaves = hierarchical_partition(mask, config);
  HierarchicalEncoding encoding;
  encoding.width = mask.width();
  encoding.height = mask.height();
  for (const auto& leaf : leaves) {
    encoding.contours.push_back(encode_region(leaf.region, config.n_bins));
    encoding.depths.push_back(leaf.depth);
    encoding.solidities.push_back(leaf.solidity);
  }
  return encoding;
}

double total_solidity(const HierarchicalEncoding& encoding) {
  return std::accumulate(encoding.solidities.begin(), encoding.solidities.end(), 0.0);
}

}  // namespace hicontour
