#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgc/cloud.hpp"
#include "lgc/datasets.hpp"
#include "lgc/nn.hpp"
#include "lgc/sampler.hpp"
#include "lgc/walks.hpp"

namespace lgc {

enum class Problem { XOR, Iris, Heart, MNIST, CustomCsv };
enum class HessianMode { Auto, On, Off };
enum class Preset { Paper, Desk };

std::string_view to_string(Problem p);
std::string_view to_string(HessianMode h);
std::string_view to_string(Preset p);
Preset parse_preset(std::string_view name);

/// Environment variable naming the default dataset directory.
inline constexpr const char* kDataDirEnv = "LGC_DATA_DIR";

/// Desk preset: a shrunken grid that runs in minutes. Explicit overrides still win.
inline constexpr std::size_t kDeskWalks = 10;
inline constexpr std::size_t kDeskSteps = 200;
inline constexpr std::size_t kDeskMnistPatterns = 2000;

inline constexpr std::size_t kMnistBatchSize = 100;
inline constexpr std::size_t kMnistTestBatch = 1000;

struct ManifestOverrides {
  std::optional<std::size_t> walks;
  std::optional<std::size_t> steps;
  std::optional<double> theta_g;
  std::optional<double> theta_e;
  std::optional<double> link_radius;
  std::optional<double> tau_abs;
  std::optional<double> tau_rel;
  std::optional<std::size_t> hessian_stride;
  std::optional<std::size_t> hessian_cap;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> test_batch;
  std::optional<std::size_t> subsample;
};

/// One experiment: a problem and the grid activations x init ranges x regimes.
/// Read from a JSON file; see README for the format.
struct ExperimentManifest {
  Problem problem = Problem::XOR;
  std::filesystem::path csv_path;     // CustomCsv only
  std::filesystem::path schema_path;  // CustomCsv only
  std::filesystem::path data_dir;     // empty: $LGC_DATA_DIR, then ./data
  std::vector<Activation> activations{Activation::TanH, Activation::ReLU, Activation::ELU};
  std::vector<double> init_ranges{1.0, 10.0};  // bounds a of [-a, a]
  std::vector<StepRegime> regimes{StepRegime::Micro, StepRegime::Macro};
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "lgc-out";
  std::size_t workers = 1;
  HessianMode hessian = HessianMode::Auto;
  Preset preset = Preset::Paper;
  CloudFormat format = CloudFormat::CSV;
  bool plots = true;
  ManifestOverrides overrides;

  static ExperimentManifest from_json(const nlohmann::json& j);
  static ExperimentManifest from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Throws UsageError describing the first invalid field.
  void validate() const;

  bool hessian_enabled() const;
};

/// Fully resolved parameters of one grid cell.
struct CellPlan {
  std::string name;  // e.g. "tanh_micro_b1"
  Activation activation = Activation::TanH;
  MlpSpec spec;
  WalkConfig walk;
  std::size_t walk_count = 0;
  AnalysisOptions analysis;
  std::size_t batch_size = 0;  // 0: full batch
  std::size_t test_batch = 0;
};

std::string cell_name(Activation a, StepRegime r, double bound);

MlpSpec architecture_for(Problem p, Activation hidden, const Dataset& data);

/// Loads the manifest's dataset (split seed = master seed, desk subsampling applied).
Dataset load_problem_dataset(const ExperimentManifest& manifest);

std::vector<CellPlan> plan_cells(const ExperimentManifest& manifest, const Dataset& data);

/// Runs `job(i)` for i in [0, n) on `workers` threads. Rethrows the exception of the
/// lowest failing index after all workers stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job);

Cloud run_cell(const CellPlan& plan, const Dataset& data, std::size_t workers,
               const std::function<void(std::size_t done, std::size_t total)>& progress = {});

struct CellOutput {
  std::string name;
  std::filesystem::path dir;
  std::size_t records = 0;
};

/// Runs every grid cell and writes under output_dir/<cell>/: the cloud file with its
/// metadata sidecar, attractors.json, saturation.json (when readings exist),
/// diagnostics.json and PNG plots. Progress goes to `log` when given.
std::vector<CellOutput> run_experiment(const ExperimentManifest& manifest, std::ostream* log = nullptr);

/// Cell metadata (everything that determines the cloud, plus creation time).
nlohmann::json cell_metadata(const ExperimentManifest& manifest, const CellPlan& plan, const Dataset& data,
                             const Cloud& cloud);

struct CellReport {
  nlohmann::json json;
  std::string text;
};

/// Finds the cloud file inside a cell directory.
std::filesystem::path find_cloud_file(const std::filesystem::path& cell_dir);

/// Report over a cell directory: record count, thresholds from metadata, attractors,
/// curvature fractions, saturation five-number summaries and the two-cluster check.
CellReport summarize(const std::filesystem::path& cell_dir);

}  // namespace lgc
