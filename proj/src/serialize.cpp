#include "hicontour/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>
#include <zlib.h>

#include "hicontour/error.hpp"

namespace hicontour {

namespace {

constexpr char kBasisMagic[4] = {'A', 'C', 'S', 'B'};
constexpr char kCoeffMagic[4] = {'A', 'C', 'C', 'F'};
constexpr char kEncodingMagic[4] = {'A', 'C', 'E', 'N'};

class Writer {
 public:
  explicit Writer(const char (&magic)[4]) {
    bytes_.insert(bytes_.end(), magic, magic + 4);
    u32(kContainerVersion);
  }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void raw(std::span<const std::uint8_t> data) {
    bytes_.insert(bytes_.end(), data.begin(), data.end());
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  std::vector<std::uint8_t> finish() && {
    u32(crc32(bytes_));
    return std::move(bytes_);
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const char (&magic)[4], const char* what)
      : bytes_(bytes), what_(what) {
    if (bytes.size() < 12) fail("truncated container");
    if (std::memcmp(bytes.data(), magic, 4) != 0) fail("bad magic");
    const auto body = bytes.first(bytes.size() - 4);
    end_ = body.size();
    pos_ = 4;
    const std::uint32_t stored = read_u32_at(end_);
    if (stored != crc32(body)) fail("CRC mismatch");
    const std::uint32_t version = u32();
    if (version != kContainerVersion) fail("unsupported version " + std::to_string(version));
  }

  std::uint32_t u32() {
    need(4);
    const auto v = read_u32_at(pos_);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }
  void raw(std::span<std::uint8_t> out) {
    need(out.size());
    std::memcpy(out.data(), bytes_.data() + pos_, out.size());
    pos_ += out.size();
  }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void expect_end() const {
    if (pos_ != end_) fail("trailing bytes");
  }
  // Guards count fields before allocation.
  void need(std::size_t n) const {
    if (n > end_ - pos_) fail("truncated payload");
  }

 private:
  std::uint32_t read_u32_at(std::size_t at) const {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[at + i]) << (8 * i);
    return v;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::Format, std::string(what_) + ": " + msg);
  }

  std::span<const std::uint8_t> bytes_;
  const char* what_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

Sha256 sha256(std::span<const std::uint8_t> bytes) {
  Sha256 digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != digest.size()) {
    throw Error(ErrorCode::InvariantViolated, "SHA-256 computation failed");
  }
  return digest;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 15]);
  }
  return out;
}

std::vector<std::uint8_t> encode_basis(const SubspaceBasis& basis) {
  Writer w(kBasisMagic);
  w.u32(static_cast<std::uint32_t>(basis.n_bins()));
  w.u32(static_cast<std::uint32_t>(basis.rank()));
  w.u32(static_cast<std::uint32_t>(basis.method));
  w.u32(static_cast<std::uint32_t>(basis.fit.iterations));
  w.f64(basis.fit.final_objective);
  w.u32(static_cast<std::uint32_t>(basis.fit.objective_trace.size()));
  for (double v : basis.fit.objective_trace) w.f64(v);
  for (int r = 0; r < basis.n_bins(); ++r) {
    for (int c = 0; c < basis.rank(); ++c) w.f64(basis.basis(r, c));
  }
  return std::move(w).finish();
}

SubspaceBasis decode_basis(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, kBasisMagic, "basis container");
  SubspaceBasis out;
  const auto n = r.u32();
  const auto m = r.u32();
  const auto method = r.u32();
  if (method > 1) throw Error(ErrorCode::Format, "basis container: unknown method");
  out.method = static_cast<SubspaceMethod>(method);
  out.fit.iterations = static_cast<int>(r.u32());
  out.fit.final_objective = r.f64();
  const auto trace_len = r.u32();
  r.need(std::size_t(trace_len) * 8);
  out.fit.objective_trace.resize(trace_len);
  for (auto& v : out.fit.objective_trace) v = r.f64();
  r.need(std::size_t(n) * m * 8);
  out.basis.resize(n, m);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t c = 0; c < m; ++c) out.basis(i, c) = r.f64();
  }
  r.expect_end();
  return out;
}

std::vector<std::uint8_t> encode_coefficients(const CoefficientSet& coeffs) {
  Writer w(kCoeffMagic);
  w.raw(coeffs.basis_hash);
  const std::uint32_t rank = coeffs.omega.empty() ? 0 : coeffs.omega.front().rows();
  w.u32(rank);
  w.u32(static_cast<std::uint32_t>(coeffs.omega.size()));
  for (const auto& omega : coeffs.omega) {
    if (omega.rows() != rank) throw Error(ErrorCode::InvalidArgument, "ragged coefficient ranks");
    w.u32(static_cast<std::uint32_t>(omega.cols()));
    for (Eigen::Index i = 0; i < omega.rows(); ++i) {
      for (Eigen::Index j = 0; j < omega.cols(); ++j) w.f64(omega(i, j));
    }
  }
  return std::move(w).finish();
}

CoefficientSet decode_coefficients(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, kCoeffMagic, "coefficient container");
  CoefficientSet out;
  r.raw(out.basis_hash);
  const auto rank = r.u32();
  const auto objects = r.u32();
  r.need(std::size_t(objects) * 4);
  for (std::uint32_t o = 0; o < objects; ++o) {
    const auto k = r.u32();
    r.need(std::size_t(rank) * k * 8);
    Eigen::MatrixXd omega(rank, k);
    for (std::uint32_t i = 0; i < rank; ++i) {
      for (std::uint32_t j = 0; j < k; ++j) omega(i, j) = r.f64();
    }
    out.omega.push_back(std::move(omega));
  }
  r.expect_end();
  return out;
}

std::vector<std::uint8_t> encode_encodings(const EncodingSet& set) {
  Writer w(kEncodingMagic);
  w.f64(set.config.tau);
  w.u32(static_cast<std::uint32_t>(set.config.max_depth));
  w.u32(static_cast<std::uint32_t>(set.config.n_bins));
  w.u32(static_cast<std::uint32_t>(set.config.min_region_area));
  w.u32(static_cast<std::uint32_t>(set.objects.size()));
  for (const auto& obj : set.objects) {
    const auto& enc = obj.encoding;
    w.str(obj.id);
    w.u32(static_cast<std::uint32_t>(enc.width));
    w.u32(static_cast<std::uint32_t>(enc.height));
    w.u32(static_cast<std::uint32_t>(enc.size()));
    for (int i = 0; i < enc.size(); ++i) {
      const auto& c = enc.contours[i];
      if (c.n_bins() != set.config.n_bins) {
        throw Error(ErrorCode::InvalidArgument, "contour bins differ from the encoder config");
      }
      w.f64(c.center.x);
      w.f64(c.center.y);
      w.u32(static_cast<std::uint32_t>(enc.depths[i]));
      w.f64(enc.solidities[i]);
      for (double v : c.radii) w.f64(v);
    }
  }
  return std::move(w).finish();
}

EncodingSet decode_encodings(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, kEncodingMagic, "encoding container");
  EncodingSet set;
  set.config.tau = r.f64();
  set.config.max_depth = static_cast<int>(r.u32());
  set.config.n_bins = static_cast<int>(r.u32());
  set.config.min_region_area = r.u32();
  const auto objects = r.u32();
  r.need(std::size_t(objects) * 16);
  for (std::uint32_t o = 0; o < objects; ++o) {
    NamedEncoding obj;
    obj.id = r.str();
    auto& enc = obj.encoding;
    enc.width = static_cast<int>(r.u32());
    enc.height = static_cast<int>(r.u32());
    const auto k = r.u32();
    r.need(std::size_t(k) * (28 + std::size_t(set.config.n_bins) * 8));
    for (std::uint32_t i = 0; i < k; ++i) {
      LocalContour c;
      c.center.x = r.f64();
      c.center.y = r.f64();
      enc.depths.push_back(static_cast<int>(r.u32()));
      enc.solidities.push_back(r.f64());
      c.radii.resize(set.config.n_bins);
      for (auto& v : c.radii) v = r.f64();
      enc.contours.push_back(std::move(c));
    }
    set.objects.push_back(std::move(obj));
  }
  r.expect_end();
  return set;
}

nlohmann::json basis_to_json(const SubspaceBasis& basis) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < basis.n_bins(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < basis.rank(); ++c) row.push_back(basis.basis(r, c));
    rows.push_back(std::move(row));
  }
  return {{"format", "ACSB"},
          {"version", kContainerVersion},
          {"n_bins", basis.n_bins()},
          {"rank", basis.rank()},
          {"method", to_string(basis.method)},
          {"iterations", basis.fit.iterations},
          {"final_objective", basis.fit.final_objective},
          {"objective_trace", basis.fit.objective_trace},
          {"sha256", to_hex(basis_hash(basis))},
          {"basis", std::move(rows)}};
}

nlohmann::json coefficients_to_json(const CoefficientSet& coeffs) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& omega : coeffs.omega) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < omega.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < omega.cols(); ++j) row.push_back(omega(i, j));
      rows.push_back(std::move(row));
    }
    objects.push_back(std::move(rows));
  }
  return {{"format", "ACCF"},
          {"version", kContainerVersion},
          {"basis_sha256", to_hex(coeffs.basis_hash)},
          {"omega", std::move(objects)}};
}

nlohmann::json encodings_to_json(const EncodingSet& set) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& obj : set.objects) {
    nlohmann::json contours = nlohmann::json::array();
    for (int i = 0; i < obj.encoding.size(); ++i) {
      const auto& c = obj.encoding.contours[i];
      contours.push_back({{"center", {c.center.x, c.center.y}},
                          {"depth", obj.encoding.depths[i]},
                          {"solidity", obj.encoding.solidities[i]},
                          {"radii", c.radii}});
    }
    objects.push_back({{"id", obj.id},
                       {"width", obj.encoding.width},
                       {"height", obj.encoding.height},
                       {"contours", std::move(contours)}});
  }
  return {{"format", "ACEN"},
          {"version", kContainerVersion},
          {"config",
           {{"tau", set.config.tau},
            {"max_depth", set.config.max_depth},
            {"n_bins", set.config.n_bins},
            {"min_region_area", set.config.min_region_area}}},
          {"objects", std::move(objects)}};
}

Sha256 basis_hash(const SubspaceBasis& basis) { return sha256(encode_basis(basis)); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace hicontour
