#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicontour/hierarchy.hpp"
#include "hicontour/subspace.hpp"

namespace hicontour {

// Binary containers. Every container is little-endian:
//   magic[4] | u32 version | header fields | f64 payload | u32 crc32
// The CRC covers every preceding byte.
//
//   "ACSB" basis:        u32 n_bins, u32 rank, u32 method, u32 iterations,
//                        f64 final_objective, u32 trace_len, f64 trace[],
//                        f64 basis[n_bins * rank] (row-major)
//   "ACCF" coefficients: u8 basis_sha256[32], u32 rank, u32 n_objects,
//                        then per object u32 K, f64 omega[rank * K] (row-major)
//   "ACEN" encodings:    f64 tau, u32 max_depth, u32 n_bins, u32 min_area,
//                        u32 n_objects, then per object
//                        u32 id_len, id bytes, u32 width, u32 height, u32 K,
//                        and per contour f64 cx, f64 cy, u32 depth,
//                        f64 solidity, f64 radii[n_bins]
inline constexpr std::uint32_t kContainerVersion = 1;

struct NamedEncoding {
  std::string id;
  HierarchicalEncoding encoding;
};

struct EncodingSet {
  EncoderConfig config;
  std::vector<NamedEncoding> objects;
};

std::vector<std::uint8_t> encode_basis(const SubspaceBasis& basis);
SubspaceBasis decode_basis(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_coefficients(const CoefficientSet& coeffs);
CoefficientSet decode_coefficients(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_encodings(const EncodingSet& set);
EncodingSet decode_encodings(std::span<const std::uint8_t> bytes);

nlohmann::json basis_to_json(const SubspaceBasis& basis);
nlohmann::json coefficients_to_json(const CoefficientSet& coeffs);
nlohmann::json encodings_to_json(const EncodingSet& set);

// SHA-256 of the canonical binary form.
Sha256 basis_hash(const SubspaceBasis& basis);
Sha256 sha256(std::span<const std::uint8_t> bytes);
std::string to_hex(std::span<const std::uint8_t> bytes);
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hicontour
