#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hicontour/contour.hpp"
#include "hicontour/error.hpp"
#include "hicontour/hierarchy.hpp"
#include "hicontour/mask_geometry.hpp"
#include "oracles.hpp"

using namespace hicontour;

namespace {

long overlap(const BinaryMask& a, const BinaryMask& b) {
  long n = 0;
  for (std::size_t k = 0; k < a.size(); ++k) n += a.bits()[k] && b.bits()[k];
  return n;
}

// U opening upwards: two vertical arms joined by a bottom bar.
BinaryMask u_shape() {
  BinaryMask m(40, 40);
  for (int i = 5; i < 35; ++i)
    for (int j = 5; j < 35; ++j) {
      const bool arm = j < 13 || j >= 27;
      const bool bar = i >= 27;
      if (arm || bar) m.set(i, j);
    }
  return m;
}

}  // namespace

TEST_CASE("encoder config validation") {
  EncoderConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.max_depth = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.n_bins = 3;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.min_region_area = -1;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("split of a horizontal bar by a vertical direction") {
  const auto bar = oracle::filled_rect(40, 10, 3, 4, 7, 36);
  const auto c = mass_center(bar);
  const auto [p1, p2] = split(bar, c, Direction2::normalized(0, 1));
  CHECK(std::abs(area(p1) - area(p2)) <= 4);
  CHECK(overlap(p1, p2) == 0);
  auto u = p1;
  u |= p2;
  CHECK(u == bar);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 40; ++j) {
      if (!bar.at(i, j)) continue;
      const double cr = (j + 0.5 - c.x) * 1.0 - (i + 0.5 - c.y) * 0.0;
      CHECK(p1.at(i, j) == (cr >= 0));
    }
}

TEST_CASE("split of a disk") {
  const auto d = oracle::disk(80, 80, 40, 40, 25);
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
  for (int t = 0; t < 20; ++t) {
    const double a = ang(rng);
    const auto [p1, p2] = split(d, {40, 40}, Direction2::normalized(std::cos(a), std::sin(a)));
    CHECK(std::abs(area(p1) - area(p2)) <= 0.02 * area(d));
  }
}

TEST_CASE("split of a line collinear with the direction") {
  const auto line = oracle::filled_rect(20, 5, 2, 1, 3, 19);
  const auto [p1, p2] = split(line, mass_center(line), Direction2::normalized(1, 0));
  CHECK(p1 == line);
  CHECK(p2.empty());
}

TEST_CASE("reorg moves fragments") {
  BinaryMask m1(30, 10), m2(30, 10);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) m1.set(i, j);   // 30 px
  for (int j = 20; j < 25; ++j) m1.set(0, j);   // 5 px
  for (int j = 6; j < 20; ++j) m2.set(0, j);    // bridge
  const auto [a, b] = reorg(m1, m2);
  CHECK(area(a) == 30);
  CHECK(a.at(0, 0));
  auto expect = m2;
  for (int j = 20; j < 25; ++j) expect.set(0, j);
  CHECK(b == expect);
  CHECK(oracle::count_components_uf(a) == 1);

  const auto [c, d] = reorg(a, b);
  CHECK(c == a);
  CHECK(d == b);

  CHECK_THROWS_AS(reorg(BinaryMask(3, 3), BinaryMask(3, 3)), Error);
}

TEST_CASE("u-shape split through the opening is repaired") {
  const auto u = u_shape();
  // a horizontal cut through the arms separates them from the bar
  const auto [p1, p2] = split(u, {20, 20}, Direction2::normalized(1, 0));
  CHECK(oracle::count_components_uf(p1) + oracle::count_components_uf(p2) >= 3);
  const auto r = repair_connectivity(p1, p2);
  REQUIRE(r.has_value());
  CHECK(oracle::count_components_uf(r->parts.first) == 1);
  CHECK(oracle::count_components_uf(r->parts.second) == 1);
  CHECK(r->reorg_passes <= 2);
}

TEST_CASE("repair of connected parts is a no-op") {
  const auto d = oracle::disk(40, 40, 20, 20, 10);
  const auto [p1, p2] = split(d, {20, 20}, Direction2::normalized(0, 1));
  const auto r = repair_connectivity(p1, p2);
  REQUIRE(r.has_value());
  CHECK(r->parts.first == p1);
  CHECK(r->parts.second == p2);
}

TEST_CASE("repair with an empty part signals no split") {
  const auto d = oracle::disk(40, 40, 20, 20, 10);
  CHECK_FALSE(repair_connectivity(d, BinaryMask(40, 40)).has_value());
  CHECK_FALSE(repair_connectivity(BinaryMask(40, 40), d).has_value());
}

TEST_CASE("repair keeps connected blobs connected") {
  std::mt19937 rng(67);
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
  int violations = 0;
  for (int t = 0; t < 2000; ++t) {
    const auto m = oracle::random_connected_blob(rng, 24, 24, 40 + t % 200);
    const double a = ang(rng);
    const auto dir = t % 2 ? least_variance_direction(boundary_pixels(m))
                           : Direction2::normalized(std::cos(a), std::sin(a));
    const auto [p1, p2] = split(m, mass_center(m), dir);
    const auto r = repair_connectivity(p1, p2);
    if (!r) continue;
    auto u = r->parts.first;
    u |= r->parts.second;
    if (u != m || overlap(r->parts.first, r->parts.second) != 0 ||
        oracle::count_components_uf(r->parts.first) != 1 ||
        oracle::count_components_uf(r->parts.second) != 1 || r->reorg_passes > 2)
      ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("disk encodes to one contour") {
  EncoderConfig cfg;
  const auto enc = hierarchical_encode(oracle::disk(128, 128, 64, 64, 40), cfg);
  CHECK(enc.size() == 1);
  CHECK(enc.depths[0] == 0);
  CHECK(total_solidity(enc) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("plus sign at depth 1 splits in two") {
  const auto plus = oracle::plus_sign(16, 4);
  EncoderConfig cfg;
  cfg.max_depth = 0;
  const auto e0 = hierarchical_encode(plus, cfg);
  cfg.max_depth = 1;
  const auto e1 = hierarchical_encode(plus, cfg);
  CHECK(e0.size() == 1);
  CHECK(e1.size() == 2);
  CHECK(iou(reconstruct_mask(e1), plus) >= 0.95);

  cfg.max_depth = 2;
  const auto e2 = hierarchical_encode(plus, cfg);
  CHECK(total_solidity(e2) / e2.size() >= total_solidity(e0) / e0.size());
}

// The plus sign is star-convex about its center, so depth 0 is already
// lossless and a strict improvement cannot happen.
TEST_CASE("plus sign depth 1 strictly beats depth 0") {
  const auto plus = oracle::plus_sign(16, 4);
  EncoderConfig cfg;
  cfg.max_depth = 0;
  const double i0 = iou(reconstruct_mask(hierarchical_encode(plus, cfg)), plus);
  cfg.max_depth = 1;
  const double i1 = iou(reconstruct_mask(hierarchical_encode(plus, cfg)), plus);
  CHECK(i1 > i0);
}

TEST_CASE("thin annulus at depth 5") {
  const auto ring = oracle::annulus(256, 256, 128, 128, 90, 100);
  EncoderConfig cfg;
  const auto enc = hierarchical_encode(ring, cfg);
  CHECK(enc.size() >= 4);
  CHECK(iou(reconstruct_mask(enc), ring) >= 0.85);
}

TEST_CASE("leaves above tau sum to at least K tau") {
  std::mt19937 rng(71);
  EncoderConfig cfg;
  for (int t = 0; t < 30; ++t) {
    const auto m = oracle::random_connected_blob(rng, 48, 48, 700);
    const auto leaves = hierarchical_partition(m, cfg);
    double sum = 0;
    int k = 0;
    for (const auto& l : leaves)
      if (l.reason == LeafReason::SolidEnough) {
        sum += l.solidity;
        ++k;
      }
    CHECK(sum >= k * cfg.tau);
  }
}

TEST_CASE("partition invariants") {
  std::mt19937 rng(73);
  for (int t = 0; t < 150; ++t) {
    EncoderConfig cfg;
    cfg.max_depth = t % 6;
    cfg.tau = 0.7 + 0.05 * (t % 5);
    cfg.min_region_area = (t % 3) * 8;
    auto m = oracle::random_connected_blob(rng, 40, 40, 200 + 3 * t);
    if (t % 4 == 0) m |= oracle::random_connected_blob(rng, 40, 40, 30);  // may be disconnected
    const auto leaves = hierarchical_partition(m, cfg);
    const int comps = oracle::count_components_uf(m);
    CHECK(static_cast<int>(leaves.size()) <= comps * (1 << cfg.max_depth));
    BinaryMask u(40, 40);
    long total = 0;
    for (const auto& l : leaves) {
      CHECK(l.depth <= cfg.max_depth);
      CHECK(oracle::count_components_uf(l.region) == 1);
      CHECK(l.solidity == solidity(l.region));
      switch (l.reason) {
        case LeafReason::SolidEnough: CHECK(l.solidity > cfg.tau); break;
        case LeafReason::DepthExhausted: CHECK(l.depth == cfg.max_depth); break;
        case LeafReason::TooSmall: CHECK(area(l.region) < cfg.min_region_area); break;
        case LeafReason::DegenerateSplit: break;
      }
      total += area(l.region);
      u |= l.region;
    }
    CHECK(u == m);
    CHECK(total == area(m));

    const auto enc = hierarchical_encode(m, cfg);
    CHECK(enc.size() == static_cast<int>(leaves.size()));
    CHECK(enc.size() >= 1);
    for (int k = 0; k < enc.size(); ++k) {
      CHECK(enc.depths[k] == leaves[k].depth);
      CHECK(enc.contours[k].n_bins() == cfg.n_bins);
    }
  }
}

TEST_CASE("encoding is deterministic") {
  std::mt19937 rng(79);
  EncoderConfig cfg;
  for (int t = 0; t < 10; ++t) {
    const auto m = oracle::random_connected_blob(rng, 64, 64, 1200);
    const auto a = hierarchical_encode(m, cfg);
    const auto b = hierarchical_encode(m, cfg);
    REQUIRE(a.size() == b.size());
    for (int k = 0; k < a.size(); ++k) {
      CHECK(a.contours[k].center == b.contours[k].center);
      CHECK(a.contours[k].radii == b.contours[k].radii);
      CHECK(a.solidities[k] == b.solidities[k]);
    }
  }
}

TEST_CASE("disconnected inputs are encoded per component") {
  auto m = oracle::disk(100, 50, 25, 25, 15);
  m |= oracle::disk(100, 50, 75, 25, 10);
  const auto enc = hierarchical_encode(m, EncoderConfig{});
  REQUIRE(enc.size() == 2);
  CHECK(enc.contours[0].center.x < 50);  // larger component first
  CHECK(enc.contours[1].center.x > 50);
}

TEST_CASE("encoding errors") {
  CHECK_THROWS_AS(hierarchical_encode(BinaryMask(8, 8), EncoderConfig{}), Error);
  EncoderConfig bad;
  bad.tau = 0;
  CHECK_THROWS_AS(hierarchical_encode(oracle::disk(20, 20, 10, 10, 5), bad), Error);
}
