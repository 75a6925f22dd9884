#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicontour/dataset_io.hpp"
#include "hicontour/hierarchy.hpp"
#include "hicontour/serialize.hpp"
#include "hicontour/subspace.hpp"

namespace hicontour {

// Runs fn(i) for i in [0, n) on `jobs` threads. Each index is processed
// exactly once; callers write results into index-addressed slots so the
// outcome is independent of scheduling.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

struct SynthFile {
  std::vector<SynthSpec> specs;
};

// Either a single spec object or {"specs":[...]}. Keys: family, canvas [W,H],
// count, seed, k, r_in, r_out.
SynthFile parse_synth_file(const std::string& text);

// Writes masks/<family>_<spec>_<index>.pgm and manifest.json under out_dir.
DatasetManifest materialize_synthetic(const SynthFile& file,
                                      const std::filesystem::path& out_dir);

struct EncodeResult {
  EncodingSet set;
  std::vector<LoadError> failures;
  std::vector<double> seconds;  // wall-clock per encoded object
};

EncodeResult encode_corpus(const std::vector<NamedMask>& objects,
                           const EncoderConfig& config, int jobs = 1);

struct EvalGrid {
  std::vector<int> ranks{5};
  std::vector<int> depths{0};
  std::vector<SubspaceMethod> methods{SubspaceMethod::Fms};
  EncoderConfig encoder;
  FmsOptions fms;
  // Fraction of objects held out for evaluation; 0 fits and evaluates on the
  // whole corpus.
  double holdout = 0.0;
  std::uint64_t seed = 0;
};

struct EvalCell {
  SubspaceMethod method = SubspaceMethod::Fms;
  int depth = 0;
  int rank = 0;           // requested M
  int rank_used = 0;      // min(M, N, contours in the training matrix)
  int n_objects = 0;
  int n_contours = 0;
  double mean_iou = 0.0;
  int fms_iterations = 0;
  std::vector<double> object_iou;  // eval split order
};

struct RankRow {
  int depth = 0;
  int n_contours = 0;
  double effective_rank = 0.0;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct EvalReport {
  std::vector<EvalCell> cells;
  std::vector<std::string> eval_ids;
  std::vector<RankRow> rank_table;
  std::vector<LoadError> failures;
  std::vector<StageTiming> timing;
  std::vector<double> encode_seconds_per_object;
  nlohmann::json config;
  std::string config_hash;
};

EvalReport evaluate_grid(const std::vector<NamedMask>& objects, const EvalGrid& grid,
                         int jobs = 1);

// One row per cell. Timing is kept out of these so reruns are byte-identical.
std::string eval_cells_csv(const EvalReport& report);
std::string eval_objects_csv(const EvalReport& report);
std::string rank_table_csv(const std::vector<RankRow>& rows);
nlohmann::json eval_report_json(const EvalReport& report);
nlohmann::json timing_json(const EvalReport& report);

std::vector<RankRow> rank_table(const std::vector<EncodingSet>& sets);

nlohmann::json encoder_config_json(const EncoderConfig& config);
std::string config_hash(const nlohmann::json& config);

struct RenderInput {
  std::string id;
  const BinaryMask* ground_truth = nullptr;   // optional
  HierarchicalEncoding encoding;
  const SubspaceBasis* basis = nullptr;       // optional
  int rank = 0;                               // 0 means the basis rank
};

// SVG overlay: ground-truth outline, one polygon per local contour, outline of
// the reconstructed union and the contour centers. Throws on empty encodings.
std::string render_svg(const RenderInput& input);

}  // namespace hicontour
