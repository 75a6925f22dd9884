#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "hicontour/contour.hpp"
#include "hicontour/mask.hpp"

namespace hicontour {

struct EncoderConfig {
  double tau = 0.9;         // solidity threshold
  int max_depth = 5;        // depth budget D; at most 2^D leaves per component
  int n_bins = kDefaultBins;
  long min_region_area = 16;

  // Throws InvalidArgument unless tau in (0,1), 0 <= max_depth <= 12,
  // n_bins >= 4 and min_region_area >= 0.
  void validate() const;
};

using MaskPair = std::pair<BinaryMask, BinaryMask>;

// Foreground pixel p goes to the first part when
// cross(p - centroid, direction) >= 0, otherwise to the second.
MaskPair split(const BinaryMask& mask, const PointR2& centroid,
               const Direction2& direction);

// Keeps the largest component of `first` and moves every other component of
// `first` into `second`. Throws InvalidArgument when both are empty.
MaskPair reorg(const BinaryMask& first, const BinaryMask& second);

struct RepairResult {
  MaskPair parts;
  int reorg_passes = 0;
};

// Reorg on the first part, then on the second when still needed. Returns
// nullopt when either part is empty afterwards. Throws InvariantViolated if a
// part is still disconnected after two passes.
std::optional<RepairResult> repair_connectivity(const BinaryMask& first,
                                                const BinaryMask& second);

enum class LeafReason {
  DepthExhausted,
  SolidEnough,
  TooSmall,
  DegenerateSplit,
};

struct Leaf {
  BinaryMask region;
  int depth = 0;
  double solidity = 0.0;
  LeafReason reason = LeafReason::DepthExhausted;
};

// The subdivision tree's leaves in depth-first order (first part before
// second), components of a disconnected input handled one after another.
std::vector<Leaf> hierarchical_partition(const BinaryMask& mask,
                                         const EncoderConfig& config);

HierarchicalEncoding hierarchical_encode(const BinaryMask& mask,
                                         const EncoderConfig& config);

double total_solidity(const HierarchicalEncoding& encoding);

}  // namespace hicontour
