// Command-line driver: synth, encode, fit, eval, rank, render.
//
// Exit codes: 0 success, 1 partial per-object failures (sidecar written),
// 2 invalid configuration or input, 3 internal invariant violation.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hicontour/dataset_io.hpp"
#include "hicontour/error.hpp"
#include "hicontour/pipeline.hpp"
#include "hicontour/serialize.hpp"

namespace fs = std::filesystem;
using namespace hicontour;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitInternal = 3;

struct Options {
  std::string config;
  int jobs = 1;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  std::string spec;
  std::string manifest;
  std::vector<std::string> encodings;
  std::string basis;
  std::string id;

  double tau = 0.9;
  int depth = 5;
  int bins = kDefaultBins;
  long min_area = 16;

  int rank = 5;
  std::string method = "fms";
  double delta = 1e-10;
  int max_iter = 100;
  double tol = 1e-8;

  std::vector<int> ranks{5};
  std::vector<int> depths{0, 1, 2, 3, 4, 5};
  std::vector<std::string> methods{"fms"};
  double holdout = 0.0;
};

// Flat key=value file; '#' starts a comment.
std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

bool flag_given(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

void write_failures(const fs::path& path, const std::vector<LoadError>& failures) {
  json arr = json::array();
  for (const auto& f : failures) arr.push_back({{"id", f.id}, {"error", f.message}});
  write_json(path, {{"failures", arr}});
}

EncoderConfig encoder_from(const Options& o) {
  EncoderConfig c;
  c.tau = o.tau;
  c.max_depth = o.depth;
  c.n_bins = o.bins;
  c.min_region_area = o.min_area;
  c.validate();
  return c;
}

FmsOptions fms_from(const Options& o) { return {o.delta, o.max_iter, o.tol}; }

int run_synth(const Options& o) {
  const auto bytes = read_file(o.spec);
  SynthFile file = parse_synth_file(std::string(bytes.begin(), bytes.end()));
  const auto manifest = materialize_synthetic(file, o.out_dir);
  std::cout << "wrote " << manifest.entries.size() << " masks and "
            << (fs::path(o.out_dir) / "manifest.json").string() << "\n";
  return kExitOk;
}

int run_encode(const Options& o) {
  const EncoderConfig config = encoder_from(o);
  const Corpus corpus = load_corpus(load_manifest(o.manifest));
  EncodeResult result = encode_corpus(corpus.objects, config, o.jobs);
  std::vector<LoadError> failures = corpus.errors;
  failures.insert(failures.end(), result.failures.begin(), result.failures.end());

  const fs::path out = o.out_dir;
  write_file(out / "encodings.bin", encode_encodings(result.set));
  write_json(out / "encodings.json", encodings_to_json(result.set));

  std::string summary = "id,n_contours,total_solidity,depths,solidities\n";
  std::string timing = "id,seconds\n";
  long leaves = 0;
  for (std::size_t i = 0; i < result.set.objects.size(); ++i) {
    const auto& obj = result.set.objects[i];
    std::string depths, sols;
    for (int k = 0; k < obj.encoding.size(); ++k) {
      depths += (k ? " " : "") + std::to_string(obj.encoding.depths[k]);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%.6f", k ? " " : "", obj.encoding.solidities[k]);
      sols += buf;
    }
    char tot[32];
    std::snprintf(tot, sizeof tot, "%.6f", total_solidity(obj.encoding));
    summary += obj.id + "," + std::to_string(obj.encoding.size()) + "," + tot + "," + depths + "," + sols + "\n";
    char sec[32];
    std::snprintf(sec, sizeof sec, "%.6f", result.seconds[i]);
    timing += obj.id + "," + sec + "\n";
    leaves += obj.encoding.size();
  }
  write_text(out / "encode_summary.csv", summary);
  write_text(out / "encode_timing.csv", timing);
  if (!failures.empty()) write_failures(out / "encode_errors.json", failures);

  const auto ok = result.set.objects.size();
  std::cout << "encoded " << ok << " objects, " << failures.size() << " failed";
  if (ok > 0) std::cout << ", mean leaf count " << static_cast<double>(leaves) / ok;
  std::cout << "\n";
  return failures.empty() ? kExitOk : kExitPartial;
}

int run_fit(const Options& o) {
  if (o.encodings.size() != 1) throw Error(ErrorCode::InvalidArgument, "fit takes exactly one --encodings file");
  const EncodingSet set = decode_encodings(read_file(o.encodings.front()));
  std::vector<HierarchicalEncoding> encodings;
  for (const auto& obj : set.objects) encodings.push_back(obj.encoding);
  const ContourMatrix a = build_contour_matrix(encodings);
  const SubspaceBasis basis = fit_basis(a, o.rank, parse_method(o.method), fms_from(o));
  const CoefficientSet coeffs = project(basis, encodings);

  const fs::path out = o.out_dir;
  write_file(out / "basis.bin", encode_basis(basis));
  write_json(out / "basis.json", basis_to_json(basis));
  write_file(out / "coefficients.bin", encode_coefficients(coeffs));
  write_json(out / "coefficients.json", coefficients_to_json(coeffs));

  std::cout << "fit " << o.method << " basis: N=" << basis.n_bins() << " M=" << basis.rank()
            << " contours=" << a.n_contours() << " iterations=" << basis.fit.iterations << "\n";
  std::cout << "objective trace:";
  for (double v : basis.fit.objective_trace) std::printf(" %.12g", v);
  std::cout << "\nsha256 " << to_hex(basis_hash(basis)) << "\n";
  return kExitOk;
}

int run_eval(const Options& o) {
  EvalGrid grid;
  grid.ranks = o.ranks;
  grid.depths = o.depths;
  grid.methods.clear();
  for (const auto& m : o.methods) grid.methods.push_back(parse_method(m));
  grid.encoder = encoder_from(o);
  grid.fms = fms_from(o);
  grid.holdout = o.holdout;
  grid.seed = o.seed;

  const Corpus corpus = load_corpus(load_manifest(o.manifest));
  EvalReport report = evaluate_grid(corpus.objects, grid, o.jobs);
  report.failures.insert(report.failures.begin(), corpus.errors.begin(), corpus.errors.end());

  const fs::path out = o.out_dir;
  write_text(out / "eval.csv", eval_cells_csv(report));
  write_text(out / "eval_objects.csv", eval_objects_csv(report));
  write_text(out / "rank.csv", rank_table_csv(report.rank_table));
  write_json(out / "eval.json", eval_report_json(report));
  write_json(out / "timing.json", timing_json(report));
  if (!report.failures.empty()) write_failures(out / "eval_errors.json", report.failures);

  std::cout << eval_cells_csv(report);
  return report.failures.empty() ? kExitOk : kExitPartial;
}

int run_rank(const Options& o) {
  if (o.encodings.empty()) throw Error(ErrorCode::InvalidArgument, "rank needs at least one --encodings file");
  std::vector<EncodingSet> sets;
  for (const auto& path : o.encodings) sets.push_back(decode_encodings(read_file(path)));
  const auto rows = rank_table(sets);
  write_text(fs::path(o.out_dir) / "rank.csv", rank_table_csv(rows));
  std::cout << rank_table_csv(rows);
  return kExitOk;
}

int run_render(const Options& o) {
  if (o.encodings.size() != 1) throw Error(ErrorCode::InvalidArgument, "render takes exactly one --encodings file");
  const EncodingSet set = decode_encodings(read_file(o.encodings.front()));
  const auto it = std::find_if(set.objects.begin(), set.objects.end(),
                               [&](const NamedEncoding& e) { return e.id == o.id; });
  if (it == set.objects.end()) throw Error(ErrorCode::InvalidArgument, "no object with id '" + o.id + "'");

  std::optional<SubspaceBasis> basis;
  if (!o.basis.empty()) basis = decode_basis(read_file(o.basis));
  std::optional<BinaryMask> truth;
  if (!o.manifest.empty()) {
    for (auto& obj : load_corpus(load_manifest(o.manifest)).objects) {
      if (obj.id == o.id) truth = std::move(obj.mask);
    }
  }
  RenderInput input;
  input.id = o.id;
  input.encoding = it->encoding;
  input.ground_truth = truth ? &*truth : nullptr;
  input.basis = basis ? &*basis : nullptr;
  input.rank = basis && o.rank > 0 ? std::min(o.rank, basis->rank()) : 0;
  std::string name = o.id;
  std::replace_if(name.begin(), name.end(), [](char c) { return !std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-'; }, '_');
  const fs::path path = fs::path(o.out_dir) / ("render_" + name + ".svg");
  write_text(path, render_svg(input));
  std::cout << "wrote " << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Hierarchical local-contour shape encoding toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config, "Flat key=value file; command-line flags take precedence");
  app.add_option("--jobs", o.jobs, "Worker threads for per-object stages")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Seed for synthesis defaults and held-out splits");
  app.add_option("--out-dir", o.out_dir, "Directory for output artifacts");

  const auto add_encoder = [&](CLI::App* sub) {
    sub->add_option("--tau", o.tau, "Solidity threshold in (0,1)");
    sub->add_option("--depth", o.depth, "Maximum subdivision depth D");
    sub->add_option("--bins", o.bins, "Angular bins per contour");
    sub->add_option("--min-area", o.min_area, "Regions smaller than this are not split");
  };
  const auto add_fms = [&](CLI::App* sub) {
    sub->add_option("--delta", o.delta, "FMS residual floor");
    sub->add_option("--max-iter", o.max_iter, "FMS iteration cap");
    sub->add_option("--tol", o.tol, "FMS relative stopping tolerance");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus and manifest");
  synth->add_option("--spec", o.spec, "Synthetic spec JSON")->required();

  auto* encode = app.add_subcommand("encode", "Hierarchically encode every object of a manifest");
  encode->add_option("--manifest", o.manifest, "Manifest JSON")->required();
  add_encoder(encode);

  auto* fit = app.add_subcommand("fit", "Fit a shared basis to an encodings file");
  fit->add_option("--encodings", o.encodings, "Encodings container")->required();
  fit->add_option("--rank", o.rank, "Basis dimension M")->required();
  fit->add_option("--method", o.method, "svd or fms")->check(CLI::IsMember({"svd", "fms"}));
  add_fms(fit);

  auto* eval = app.add_subcommand("eval", "Mean IOU over a grid of (D, M, method)");
  eval->add_option("--manifest", o.manifest, "Manifest JSON")->required();
  eval->add_option("--ranks", o.ranks, "Basis dimensions M")->delimiter(',');
  eval->add_option("--depths", o.depths, "Depth budgets D")->delimiter(',');
  eval->add_option("--methods", o.methods, "svd and/or fms")->delimiter(',')->check(CLI::IsMember({"svd", "fms"}));
  eval->add_option("--holdout,--split", o.holdout, "Held-out fraction for evaluation (0 = fit on everything)");
  add_encoder(eval);
  add_fms(eval);

  auto* rank = app.add_subcommand("rank", "Effective rank of each encodings file");
  rank->add_option("--encodings", o.encodings, "Encodings containers, one per depth")->required();

  auto* render = app.add_subcommand("render", "SVG overlay for one object");
  render->add_option("--encodings", o.encodings, "Encodings container")->required();
  render->add_option("--id", o.id, "Object id")->required();
  render->add_option("--basis", o.basis, "Basis container; radii are projected when given");
  render->add_option("--rank", o.rank, "Number of leading basis vectors to use");
  render->add_option("--manifest", o.manifest, "Manifest for the ground-truth outline");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const std::string config_path = find_config_arg(argc, argv);
    if (!config_path.empty()) {
      CLI::App* active = nullptr;
      for (const auto& a : args) {
        for (auto* sub : app.get_subcommands({})) {
          if (sub->get_name() == a) active = sub;
        }
        if (active) break;
      }
      for (const auto& [key, value] : read_config(config_path)) {
        if (key == "config" || flag_given(args, key)) continue;
        const std::string flag = "--" + key;
        const bool global = app.get_option_no_throw(flag) != nullptr;
        const bool local = active && active->get_option_no_throw(flag) != nullptr;
        bool known = global;
        for (auto* sub : app.get_subcommands({})) known = known || sub->get_option_no_throw(flag);
        if (!known) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
        if (global || local) {
          args.push_back(flag);
          args.push_back(value);
        }
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (!o.out_dir.empty()) fs::create_directories(o.out_dir);
    if (synth->parsed()) return run_synth(o);
    if (encode->parsed()) return run_encode(o);
    if (fit->parsed()) return run_fit(o);
    if (eval->parsed()) return run_eval(o);
    if (rank->parsed()) return run_rank(o);
    if (render->parsed()) return run_render(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::InvariantViolated ? kExitInternal : kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInvalid;
}
