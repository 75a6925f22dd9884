#include "hicontour/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "hicontour/error.hpp"
#include "hicontour/mask_geometry.hpp"

namespace hicontour {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 9) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<SynthSpec> parse_spec_list(const json& doc) {
  const auto parse_one = [](const json& j, std::uint64_t default_seed) {
    SynthSpec spec;
    spec.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("canvas")) {
      spec.width = j["canvas"].at(0).get<int>();
      spec.height = j["canvas"].at(1).get<int>();
    }
    spec.count = j.value("count", 1);
    spec.seed = j.value("seed", default_seed);
    spec.star_points = j.value("k", 5);
    spec.r_in = j.value("r_in", 0.0);
    spec.r_out = j.value("r_out", 0.0);
    spec.validate();
    return spec;
  };
  std::vector<SynthSpec> specs;
  if (doc.contains("specs")) {
    const std::uint64_t base = doc.value("seed", std::uint64_t{0});
    std::uint64_t i = 0;
    for (const auto& j : doc.at("specs")) specs.push_back(parse_one(j, base + i++));
  } else {
    specs.push_back(parse_one(doc, 0));
  }
  return specs;
}

void outline_path(std::ostringstream& svg, const BinaryMask& mask) {
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) {
      if (!mask.at(i, j)) continue;
      if (!mask.get(i - 1, j)) svg << "M" << j << ' ' << i << "h1";
      if (!mask.get(i + 1, j)) svg << "M" << j << ' ' << i + 1 << "h1";
      if (!mask.get(i, j - 1)) svg << "M" << j << ' ' << i << "v1";
      if (!mask.get(i, j + 1)) svg << "M" << j + 1 << ' ' << i << "v1";
    }
  }
}

}  // namespace

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (int t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

SynthFile parse_synth_file(const std::string& text) {
  try {
    return {parse_spec_list(json::parse(text))};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("synth spec: ") + e.what());
  }
}

DatasetManifest materialize_synthetic(const SynthFile& file, const fs::path& out_dir) {
  DatasetManifest manifest;
  manifest.root = ".";
  for (std::size_t s = 0; s < file.specs.size(); ++s) {
    const auto& spec = file.specs[s];
    const auto masks = generate_synthetic(spec);
    for (std::size_t i = 0; i < masks.size(); ++i) {
      char name[96];
      std::snprintf(name, sizeof name, "%s_%02zu_%04zu", to_string(spec.family), s, i);
      const fs::path rel = fs::path("masks") / (std::string(name) + ".pgm");
      save_pgm(out_dir / rel, masks[i]);
      manifest.entries.push_back({name, rel, EntryKind::Raster, std::string(to_string(spec.family))});
    }
  }
  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

EncodeResult encode_corpus(const std::vector<NamedMask>& objects, const EncoderConfig& config,
                           int jobs) {
  config.validate();
  const int n = static_cast<int>(objects.size());
  std::vector<std::optional<HierarchicalEncoding>> encoded(n);
  std::vector<std::string> errors(n);
  std::vector<double> seconds(n, 0.0);
  parallel_for(n, jobs, [&](int i) {
    const auto start = Clock::now();
    try {
      encoded[i] = hierarchical_encode(objects[i].mask, config);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvariantViolated) throw;
      errors[i] = e.what();
    }
    seconds[i] = seconds_since(start);
  });
  EncodeResult result;
  result.set.config = config;
  for (int i = 0; i < n; ++i) {
    if (encoded[i]) {
      result.set.objects.push_back({objects[i].id, std::move(*encoded[i])});
      result.seconds.push_back(seconds[i]);
    } else {
      result.failures.push_back({objects[i].id, errors[i]});
    }
  }
  return result;
}

json encoder_config_json(const EncoderConfig& config) {
  return {{"tau", config.tau},
          {"max_depth", config.max_depth},
          {"n_bins", config.n_bins},
          {"min_region_area", config.min_region_area}};
}

std::string config_hash(const json& config) {
  const std::string text = config.dump();
  return to_hex(sha256(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size())));
}

EvalReport evaluate_grid(const std::vector<NamedMask>& objects, const EvalGrid& grid, int jobs) {
  grid.encoder.validate();
  if (grid.ranks.empty() || grid.depths.empty() || grid.methods.empty()) {
    throw Error(ErrorCode::InvalidArgument, "evaluation grid has an empty axis");
  }
  if (!(grid.holdout >= 0.0 && grid.holdout < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "holdout fraction must lie in [0, 1)");
  }
  for (int m : grid.ranks) {
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "ranks must be >= 1");
  }

  EvalReport report;
  json methods = json::array();
  for (auto m : grid.methods) methods.push_back(to_string(m));
  report.config = {{"ranks", grid.ranks},
                   {"depths", grid.depths},
                   {"methods", methods},
                   {"encoder", encoder_config_json(grid.encoder)},
                   {"fms", {{"delta", grid.fms.delta}, {"max_iter", grid.fms.max_iter}, {"tol", grid.fms.tol}}},
                   {"holdout", grid.holdout},
                   {"seed", grid.seed},
                   {"resolution", "native"}};
  report.config_hash = config_hash(report.config);

  // Deterministic split over object positions.
  const int n = static_cast<int>(objects.size());
  std::vector<bool> is_eval(n, true), is_train(n, true);
  if (grid.holdout > 0.0) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 engine(grid.seed);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[engine() % (i + 1)]);
    const int n_eval = static_cast<int>(std::lround(grid.holdout * n));
    std::fill(is_eval.begin(), is_eval.end(), false);
    for (int i = 0; i < n_eval; ++i) is_eval[perm[i]] = true;
    for (int i = 0; i < n; ++i) is_train[i] = !is_eval[i];
  }

  bool ids_recorded = false;
  for (int depth : grid.depths) {
    EncoderConfig config = grid.encoder;
    config.max_depth = depth;
    auto start = Clock::now();
    EncodeResult encoded = encode_corpus(objects, config, jobs);
    report.timing.push_back({"encode D=" + std::to_string(depth), seconds_since(start)});
    if (report.failures.empty()) report.failures = encoded.failures;
    if (depth == grid.depths.front()) report.encode_seconds_per_object = encoded.seconds;

    // Map encodings back to object positions (failed objects are skipped).
    std::vector<const HierarchicalEncoding*> train, eval;
    std::vector<const BinaryMask*> truth;
    std::vector<std::string> eval_ids;
    std::size_t cursor = 0;
    for (int i = 0; i < n && cursor < encoded.set.objects.size(); ++i) {
      if (encoded.set.objects[cursor].id != objects[i].id) continue;
      const auto* enc = &encoded.set.objects[cursor++].encoding;
      if (is_train[i]) train.push_back(enc);
      if (is_eval[i]) {
        eval.push_back(enc);
        truth.push_back(&objects[i].mask);
        eval_ids.push_back(objects[i].id);
      }
    }
    if (train.empty() || eval.empty()) {
      throw Error(ErrorCode::InvalidArgument, "no encodable objects in the train or eval split");
    }
    if (!ids_recorded) {
      report.eval_ids = eval_ids;
      ids_recorded = true;
    }
    std::vector<HierarchicalEncoding> train_copy;
    train_copy.reserve(train.size());
    for (const auto* e : train) train_copy.push_back(*e);
    const ContourMatrix a = build_contour_matrix(train_copy);
    report.rank_table.push_back({depth, a.n_contours(), effective_rank(a)});

    for (auto method : grid.methods) {
      for (int rank : grid.ranks) {
        EvalCell cell;
        cell.method = method;
        cell.depth = depth;
        cell.rank = rank;
        cell.rank_used = std::min({rank, a.n_bins(), a.n_contours()});
        cell.n_contours = a.n_contours();
        cell.n_objects = static_cast<int>(eval.size());
        start = Clock::now();
        const SubspaceBasis basis = fit_basis(a, cell.rank_used, method, grid.fms);
        cell.fms_iterations = basis.fit.iterations;
        report.timing.push_back({std::string("fit ") + to_string(method) + " D=" + std::to_string(depth) +
                                     " M=" + std::to_string(rank),
                                 seconds_since(start)});
        cell.object_iou.assign(eval.size(), 0.0);
        start = Clock::now();
        parallel_for(static_cast<int>(eval.size()), jobs, [&](int i) {
          const Eigen::MatrixXd omega = basis.basis.transpose() * radii_matrix(*eval[i]);
          const Eigen::MatrixXd radii = (basis.basis * omega).cwiseMax(0.0);
          cell.object_iou[i] = iou(reconstruct_mask(with_radii(*eval[i], radii)), *truth[i]);
        });
        report.timing.push_back({std::string("score ") + to_string(method) + " D=" + std::to_string(depth) +
                                     " M=" + std::to_string(rank),
                                 seconds_since(start)});
        double sum = 0.0;
        for (double v : cell.object_iou) sum += v;
        cell.mean_iou = sum / static_cast<double>(cell.object_iou.size());
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

std::string eval_cells_csv(const EvalReport& report) {
  std::string out = "method,depth,rank,rank_used,n_objects,n_contours,mean_iou,fms_iterations\n";
  for (const auto& c : report.cells) {
    out += std::string(to_string(c.method)) + "," + std::to_string(c.depth) + "," +
           std::to_string(c.rank) + "," + std::to_string(c.rank_used) + "," +
           std::to_string(c.n_objects) + "," + std::to_string(c.n_contours) + "," + fmt(c.mean_iou) +
           "," + std::to_string(c.fms_iterations) + "\n";
  }
  return out;
}

std::string eval_objects_csv(const EvalReport& report) {
  std::string out = "method,depth,rank,object_id,iou\n";
  for (const auto& c : report.cells) {
    for (std::size_t i = 0; i < c.object_iou.size(); ++i) {
      out += std::string(to_string(c.method)) + "," + std::to_string(c.depth) + "," +
             std::to_string(c.rank) + "," + csv_field(report.eval_ids[i]) + "," + fmt(c.object_iou[i]) +
             "\n";
    }
  }
  return out;
}

std::string rank_table_csv(const std::vector<RankRow>& rows) {
  std::string out = "depth,n_contours,effective_rank\n";
  for (const auto& r : rows) {
    out += std::to_string(r.depth) + "," + std::to_string(r.n_contours) + "," + fmt(r.effective_rank) + "\n";
  }
  return out;
}

json eval_report_json(const EvalReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"method", to_string(c.method)},
                     {"depth", c.depth},
                     {"rank", c.rank},
                     {"rank_used", c.rank_used},
                     {"n_objects", c.n_objects},
                     {"n_contours", c.n_contours},
                     {"mean_iou", c.mean_iou},
                     {"fms_iterations", c.fms_iterations}});
  }
  json ranks = json::array();
  for (const auto& r : report.rank_table) {
    ranks.push_back({{"depth", r.depth}, {"n_contours", r.n_contours}, {"effective_rank", r.effective_rank}});
  }
  json failures = json::array();
  for (const auto& f : report.failures) failures.push_back({{"id", f.id}, {"error", f.message}});
  return {{"config", report.config},
          {"config_hash", report.config_hash},
          {"cells", std::move(cells)},
          {"effective_rank", std::move(ranks)},
          {"failures", std::move(failures)}};
}

json timing_json(const EvalReport& report) {
  json stages = json::array();
  for (const auto& t : report.timing) stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  return {{"config_hash", report.config_hash},
          {"stages", std::move(stages)},
          {"encode_seconds_per_object", report.encode_seconds_per_object}};
}

std::vector<RankRow> rank_table(const std::vector<EncodingSet>& sets) {
  std::vector<RankRow> rows;
  for (const auto& set : sets) {
    std::vector<HierarchicalEncoding> encodings;
    for (const auto& obj : set.objects) encodings.push_back(obj.encoding);
    const ContourMatrix a = build_contour_matrix(encodings);
    rows.push_back({set.config.max_depth, a.n_contours(), effective_rank(a)});
  }
  return rows;
}

std::string render_svg(const RenderInput& input) {
  const auto& enc = input.encoding;
  if (enc.contours.empty()) throw Error(ErrorCode::InvalidArgument, "render: encoding has no contours");

  HierarchicalEncoding shown = enc;
  if (input.basis) {
    const int rank = input.rank == 0 ? input.basis->rank() : input.rank;
    if (rank < 1 || rank > input.basis->rank()) {
      throw Error(ErrorCode::InvalidArgument, "render: rank outside the basis");
    }
    const Eigen::MatrixXd u = input.basis->basis.leftCols(rank);
    const Eigen::MatrixXd r = radii_matrix(enc);
    if (r.rows() != u.rows()) throw Error(ErrorCode::InvalidArgument, "render: basis bins mismatch");
    shown = with_radii(enc, (u * (u.transpose() * r)).cwiseMax(0.0));
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * enc.width << "\" height=\""
      << 2 * enc.height << "\" viewBox=\"0 0 " << enc.width << ' ' << enc.height << "\">\n";
  svg << "<title>" << input.id << "</title>\n";
  svg << "<rect width=\"" << enc.width << "\" height=\"" << enc.height << "\" fill=\"white\"/>\n";
  if (input.ground_truth) {
    svg << "<g id=\"ground-truth\"><path fill=\"none\" stroke=\"#000\" stroke-width=\"0.6\" d=\"";
    outline_path(svg, *input.ground_truth);
    svg << "\"/></g>\n";
  }
  const int k = shown.size();
  for (int i = 0; i < k; ++i) {
    const int hue = (360 * i) / k;
    svg << "<g id=\"contour-" << i << "\" class=\"contour\"><polygon fill=\"hsl(" << hue
        << ",80%,55%)\" fill-opacity=\"0.25\" stroke=\"hsl(" << hue
        << ",80%,35%)\" stroke-width=\"0.4\" points=\"";
    for (const auto& p : contour_to_polygon(shown.contours[i])) {
      svg << fmt(p.x, 3) << ',' << fmt(p.y, 3) << ' ';
    }
    svg << "\"/></g>\n";
  }
  svg << "<g id=\"reconstruction\"><path fill=\"none\" stroke=\"#d00\" stroke-width=\"0.5\" "
         "stroke-dasharray=\"1 0.5\" d=\"";
  outline_path(svg, reconstruct_mask(shown));
  svg << "\"/></g>\n<g id=\"centers\">";
  for (const auto& c : shown.contours) {
    svg << "<circle cx=\"" << fmt(c.center.x, 3) << "\" cy=\"" << fmt(c.center.y, 3)
        << "\" r=\"1.2\" fill=\"#000\"/>";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace hicontour
