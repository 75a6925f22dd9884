#include "hicontour/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include <nlohmann/json.hpp>
#include <png.h>

#include "hicontour/contour.hpp"
#include "hicontour/error.hpp"
#include "hicontour/mask_geometry.hpp"
#include "hicontour/serialize.hpp"

namespace hicontour {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void format_error(const fs::path& path, const std::string& msg) {
  throw Error(ErrorCode::Format, path.string() + ": " + msg);
}

BinaryMask parse_pgm(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  std::size_t pos = 2;
  const auto next_token = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) format_error(path, "malformed PGM header");
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos++] - '0');
      if (value > (1L << 24)) format_error(path, "PGM header value too large");
    }
    return value;
  };
  const long width = next_token();
  const long height = next_token();
  const long maxval = next_token();
  if (width < 1 || height < 1) format_error(path, "PGM dimensions must be positive");
  if (maxval < 1 || maxval > 255) {
    format_error(path, "unsupported PGM bit depth (maxval " + std::to_string(maxval) + ")");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) format_error(path, "malformed PGM header");
  ++pos;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < count) format_error(path, "truncated PGM payload");
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = bytes[pos + i] >= kForegroundThreshold;
  return BinaryMask(static_cast<int>(width), static_cast<int>(height), std::move(bits));
}

BinaryMask parse_png(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    format_error(path, std::string("unreadable PNG: ") + image.message);
  }
  if ((image.format & PNG_FORMAT_FLAG_COLOR) != 0 || (image.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
    png_image_free(&image);
    format_error(path, "PNG masks must be 8-bit grayscale");
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    format_error(path, std::string("PNG decode failed: ") + image.message);
  }
  for (auto& p : pixels) p = p >= kForegroundThreshold;
  return BinaryMask(static_cast<int>(image.width), static_cast<int>(image.height),
                    std::move(pixels));
}

// mt19937_64 is fully specified by the standard; the distributions are not,
// so real-valued draws are built from the raw output here.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 engine_;
};

struct Ellipse {
  double cx, cy, a, b, phi;

  bool contains(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double c = std::cos(phi), s = std::sin(phi);
    const double u = dx * c + dy * s;
    const double v = -dx * s + dy * c;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }
};

void paint_ellipse(BinaryMask& mask, const Ellipse& e) {
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) {
      if (e.contains(j + 0.5, i + 0.5)) mask.set(i, j);
    }
  }
}

Polygon rotated_rect(double cx, double cy, double hw, double hh, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  Polygon poly;
  for (auto [u, v] : {std::pair{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}) {
    poly.push_back({cx + u * c - v * s, cy + u * s + v * c});
  }
  return poly;
}

BinaryMask make_shape(const SynthSpec& spec, SeededRng& rng) {
  const int w = spec.width;
  const int h = spec.height;
  const double m = std::min(w, h);
  const double jitter = 0.05 * m;
  const double cx = 0.5 * w + rng.uniform(-jitter, jitter);
  const double cy = 0.5 * h + rng.uniform(-jitter, jitter);
  BinaryMask mask(w, h);

  switch (spec.family) {
    case ShapeFamily::Disk: {
      const double r = rng.uniform(0.2, 0.4) * m;
      paint_ellipse(mask, {cx, cy, r, r, 0.0});
      break;
    }
    case ShapeFamily::Ellipse: {
      const double a = rng.uniform(0.2, 0.4) * m;
      const double b = rng.uniform(0.125 * m, a);
      paint_ellipse(mask, {cx, cy, a, b, rng.uniform(0.0, std::numbers::pi)});
      break;
    }
    case ShapeFamily::Rectangle: {
      const double hw = rng.uniform(0.125, 0.3) * m;
      const double hh = rng.uniform(0.125, 0.3) * m;
      mask = rasterize_polygon(rotated_rect(cx, cy, hw, hh, rng.uniform(0.0, std::numbers::pi)), w, h);
      break;
    }
    case ShapeFamily::Cross: {
      const double arm = rng.uniform(0.08, 0.14) * m;
      const double len = rng.uniform(0.3, 0.42) * m;
      const double phi = rng.uniform(0.0, std::numbers::pi / 2);
      mask = rasterize_polygon(rotated_rect(cx, cy, len, arm, phi), w, h);
      mask |= rasterize_polygon(rotated_rect(cx, cy, arm, len, phi), w, h);
      break;
    }
    case ShapeFamily::Star: {
      const double outer = rng.uniform(0.3, 0.42) * m;
      const double inner = rng.uniform(0.35, 0.5) * outer;
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const int k = spec.star_points;
      Polygon poly;
      for (int i = 0; i < 2 * k; ++i) {
        const double r = (i % 2 == 0) ? outer : inner;
        const double t = phi + std::numbers::pi * i / k;
        poly.push_back({cx + r * std::cos(t), cy + r * std::sin(t)});
      }
      mask = rasterize_polygon(poly, w, h);
      break;
    }
    case ShapeFamily::Annulus: {
      double r_in = spec.r_in, r_out = spec.r_out, ax = cx, ay = cy;
      if (r_in == 0.0 && r_out == 0.0) {
        r_out = rng.uniform(0.3, 0.45) * m;
        r_in = rng.uniform(0.4, 0.8) * r_out;
      } else {
        ax = 0.5 * w;
        ay = 0.5 * h;
      }
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
          const double d2 = (j + 0.5 - ax) * (j + 0.5 - ax) + (i + 0.5 - ay) * (i + 0.5 - ay);
          if (d2 >= r_in * r_in && d2 <= r_out * r_out) mask.set(i, j);
        }
      }
      break;
    }
    case ShapeFamily::RandomBlob: {
      const int n = rng.integer(3, 8);
      for (int e = 0; e < n; ++e) {
        const double ex = cx + rng.uniform(-0.25, 0.25) * m;
        const double ey = cy + rng.uniform(-0.25, 0.25) * m;
        const double a = rng.uniform(0.1, 0.28) * m;
        const double b = rng.uniform(0.03 * m, 0.5 * a);
        paint_ellipse(mask, {ex, ey, a, b, rng.uniform(0.0, std::numbers::pi)});
      }
      auto components = connected_components(mask);
      mask = std::move(components.front());
      break;
    }
  }
  return mask;
}

}  // namespace

BinaryMask load_raster_mask(const fs::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::Io, path.string() + ": cannot read mask file");
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return parse_pgm(bytes, path);
  static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (bytes.size() >= 8 && std::equal(png_sig, png_sig + 8, bytes.begin())) {
    return parse_png(bytes, path);
  }
  format_error(path, "not a binary PGM (P5) or PNG file");
}

void save_pgm(const fs::path& path, const BinaryMask& mask) {
  const std::string header =
      "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (auto b : mask.bits()) bytes.push_back(b ? 255 : 0);
  write_file(path, bytes);
}

PolygonAnnotations parse_polygon_annotations(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed annotation JSON: ") + e.what());
  }
  const auto& canvas = doc.contains("canvas") ? doc["canvas"] : json();
  if (!canvas.is_array() || canvas.size() != 2 || !canvas[0].is_number_integer() ||
      !canvas[1].is_number_integer() || canvas[0].get<int>() < 1 || canvas[1].get<int>() < 1) {
    throw Error(ErrorCode::Format, "annotation canvas must be [W, H] with positive integers");
  }
  if (!doc.contains("objects") || !doc["objects"].is_array()) {
    throw Error(ErrorCode::Format, "annotation document needs an 'objects' array");
  }
  PolygonAnnotations out;
  out.width = canvas[0].get<int>();
  out.height = canvas[1].get<int>();
  int index = 0;
  for (const auto& obj : doc["objects"]) {
    std::string id = "#" + std::to_string(index++);
    try {
      if (obj.contains("id") && obj["id"].is_string()) id = obj["id"].get<std::string>();
      if (!obj.contains("polygons") || !obj["polygons"].is_array()) {
        throw Error(ErrorCode::Format, "missing 'polygons' array");
      }
      BinaryMask mask(out.width, out.height);
      for (const auto& coords : obj["polygons"]) {
        if (!coords.is_array() || coords.size() < 6 || coords.size() % 2 != 0) {
          throw Error(ErrorCode::Format, "a polygon needs an even list of >= 6 coordinates");
        }
        Polygon poly;
        for (std::size_t i = 0; i < coords.size(); i += 2) {
          if (!coords[i].is_number() || !coords[i + 1].is_number()) {
            throw Error(ErrorCode::Format, "polygon coordinates must be numbers");
          }
          const PointR2 p{coords[i].get<double>(), coords[i + 1].get<double>()};
          if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= out.width && p.y <= out.height)) {
            throw Error(ErrorCode::Format, "vertex outside the canvas");
          }
          poly.push_back(p);
        }
        mask |= rasterize_polygon(poly, out.width, out.height);
      }
      out.objects.push_back({id, std::move(mask)});
    } catch (const Error& e) {
      out.errors.push_back({id, e.what()});
    } catch (const json::exception& e) {
      out.errors.push_back({id, e.what()});
    }
  }
  return out;
}

PolygonAnnotations load_polygon_annotations(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_polygon_annotations(std::string(bytes.begin(), bytes.end()));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  const auto bytes = read_file(path);
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, path.string() + ": " + e.what());
  }
  DatasetManifest manifest;
  try {
    fs::path root = doc.value("root", std::string("."));
    manifest.root = root.is_absolute() ? root : path.parent_path() / root;
    std::set<std::string> seen;
    for (const auto& e : doc.at("entries")) {
      ManifestEntry entry;
      entry.id = e.at("id").get<std::string>();
      entry.source = e.at("source").get<std::string>();
      const auto kind = e.value("kind", std::string("raster"));
      if (kind == "raster") {
        entry.kind = EntryKind::Raster;
      } else if (kind == "polygon") {
        entry.kind = EntryKind::Polygon;
      } else {
        throw Error(ErrorCode::Format, "unknown entry kind '" + kind + "'");
      }
      if (e.contains("category") && e["category"].is_string()) {
        entry.category = e["category"].get<std::string>();
      }
      if (!seen.insert(entry.id).second) {
        throw Error(ErrorCode::Format, "duplicate entry id '" + entry.id + "'");
      }
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, path.string() + ": " + e.what());
  }
  return manifest;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json j = {{"id", e.id},
              {"source", e.source.generic_string()},
              {"kind", e.kind == EntryKind::Raster ? "raster" : "polygon"}};
    if (e.category) j["category"] = *e.category;
    entries.push_back(std::move(j));
  }
  const json doc = {{"root", manifest.root.generic_string()}, {"entries", std::move(entries)}};
  write_text(path, doc.dump(2) + "\n");
}

Corpus load_corpus(const DatasetManifest& manifest) {
  Corpus corpus;
  for (const auto& entry : manifest.entries) {
    const fs::path source = entry.source.is_absolute() ? entry.source : manifest.root / entry.source;
    try {
      if (entry.kind == EntryKind::Raster) {
        corpus.objects.push_back({entry.id, load_raster_mask(source)});
      } else {
        auto annotations = load_polygon_annotations(source);
        for (auto& obj : annotations.objects) {
          corpus.objects.push_back({entry.id + "/" + obj.id, std::move(obj.mask)});
        }
        for (auto& err : annotations.errors) {
          corpus.errors.push_back({entry.id + "/" + err.id, err.message});
        }
      }
    } catch (const Error& e) {
      corpus.errors.push_back({entry.id, e.what()});
    }
  }
  return corpus;
}

const char* to_string(ShapeFamily family) noexcept {
  switch (family) {
    case ShapeFamily::Disk: return "disk";
    case ShapeFamily::Ellipse: return "ellipse";
    case ShapeFamily::Rectangle: return "rectangle";
    case ShapeFamily::Cross: return "cross";
    case ShapeFamily::Star: return "star";
    case ShapeFamily::Annulus: return "annulus";
    case ShapeFamily::RandomBlob: return "random_blob";
  }
  return "unknown";
}

ShapeFamily parse_family(const std::string& name) {
  for (auto f : {ShapeFamily::Disk, ShapeFamily::Ellipse, ShapeFamily::Rectangle, ShapeFamily::Cross,
                 ShapeFamily::Star, ShapeFamily::Annulus, ShapeFamily::RandomBlob}) {
    if (name == to_string(f)) return f;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown shape family '" + name + "'");
}

void SynthSpec::validate() const {
  if (width < 16 || height < 16) throw Error(ErrorCode::InvalidArgument, "canvas must be >= 16x16");
  if (count < 0) throw Error(ErrorCode::InvalidArgument, "count must be >= 0");
  if (family == ShapeFamily::Star && star_points < 3) {
    throw Error(ErrorCode::InvalidArgument, "star needs k >= 3");
  }
  if (family == ShapeFamily::Annulus && (r_in != 0.0 || r_out != 0.0)) {
    const double limit = 0.5 * std::min(width, height);
    if (!(r_in >= 0.0 && r_in < r_out && r_out <= limit)) {
      throw Error(ErrorCode::InvalidArgument, "annulus needs 0 <= r_in < r_out <= canvas/2");
    }
  }
}

std::vector<BinaryMask> generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  SeededRng rng(spec.seed);
  std::vector<BinaryMask> out;
  out.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i) out.push_back(make_shape(spec, rng));
  return out;
}

}  // namespace hicontour
