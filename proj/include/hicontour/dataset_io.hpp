#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hicontour/mask.hpp"

namespace hicontour {

inline constexpr int kForegroundThreshold = 128;

// Binary PGM (P5, maxval <= 255) or 8-bit grayscale PNG; a pixel is
// foreground iff its value is >= 128. Throws Io/Format with the file path.
BinaryMask load_raster_mask(const std::filesystem::path& path);

// Writes a P5 PGM with 255 for foreground and 0 for background.
void save_pgm(const std::filesystem::path& path, const BinaryMask& mask);

struct NamedMask {
  std::string id;
  BinaryMask mask;
};

struct LoadError {
  std::string id;
  std::string message;
};

struct PolygonAnnotations {
  int width = 0;
  int height = 0;
  std::vector<NamedMask> objects;
  std::vector<LoadError> errors;
};

// {"canvas":[W,H],"objects":[{"id":str,"polygons":[[x0,y0,x1,y1,...],...]}]}
// Each polygon is rasterized with the nonzero rule and the polygons of one
// object are OR-ed. Broken objects are reported in `errors`; a malformed
// document or canvas throws Format.
PolygonAnnotations load_polygon_annotations(const std::filesystem::path& path);
PolygonAnnotations parse_polygon_annotations(const std::string& text);

enum class EntryKind { Raster, Polygon };

struct ManifestEntry {
  std::string id;
  std::filesystem::path source;  // relative to the manifest root
  EntryKind kind = EntryKind::Raster;
  std::optional<std::string> category;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
};

// Relative roots are resolved against the manifest's directory. Throws on
// duplicate ids or malformed JSON.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

struct Corpus {
  std::vector<NamedMask> objects;
  std::vector<LoadError> errors;
};

// Loads every entry. Polygon entries expand to "<entry id>/<object id>".
Corpus load_corpus(const DatasetManifest& manifest);

enum class ShapeFamily { Disk, Ellipse, Rectangle, Cross, Star, Annulus, RandomBlob };

const char* to_string(ShapeFamily family) noexcept;
ShapeFamily parse_family(const std::string& name);

struct SynthSpec {
  ShapeFamily family = ShapeFamily::Disk;
  int width = 128;
  int height = 128;
  int count = 1;
  std::uint64_t seed = 0;
  int star_points = 5;
  // Annulus radii; when both are zero they are drawn per shape.
  double r_in = 0.0;
  double r_out = 0.0;

  void validate() const;
};

// Deterministic for a given spec on every platform: the RNG stream is
// mt19937_64 and all real draws are derived from its raw 64-bit output.
std::vector<BinaryMask> generate_synthetic(const SynthSpec& spec);

}  // namespace hicontour
