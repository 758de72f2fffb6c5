#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgc/record.hpp"
#include "lgc/sampler.hpp"

namespace lgc {

/// All step records of one experiment cell, ordered by (walk_id, step).
struct Cloud {
  std::string cell;
  std::vector<StepRecord> records;

  std::size_t size() const { return records.size(); }
};

/// Merges traces by walk id. Throws UsageError when traces come from different cells.
Cloud collect(std::vector<WalkTrace> traces);

// ---------------------------------------------------------------------------------
// Stationary attractors

enum class AttractorKind { GlobalMinimumCandidate, SuboptimalCritical, NonStationary };

std::string_view to_string(AttractorKind k);

struct AttractorOptions {
  std::optional<double> grad_threshold;  // default: 1e-3 * median gradient norm of the cloud
  double error_threshold = 0.05;
  double link_radius = 0.02;
};

struct AttractorSummary {
  std::size_t cluster_id = 0;
  double mean_error = 0.0;
  double mean_grad_norm = 0.0;
  double min_error = 0.0;
  double max_error = 0.0;
  std::size_t member_count = 0;
  AttractorKind classification = AttractorKind::NonStationary;
};

double median(std::vector<double> values);

double default_grad_threshold(const Cloud& cloud);

/// Records with grad_norm below the gradient threshold are grouped by single linkage
/// on e_train (neighbours closer than link_radius join) and summarised in order of
/// increasing error.
std::vector<AttractorSummary> find_attractors(const Cloud& cloud, const AttractorOptions& options = {});

// ---------------------------------------------------------------------------------
// Files

enum class CloudFormat { CSV, JSONL };

/// Column order of the CSV format. Absent values are empty fields.
inline constexpr std::string_view kCloudColumns =
    "walk_id,step,e_train,e_gen,grad_norm,curvature,n_pos,n_neg,n_zero,saturation,saturation_method,kink_adjacent";

std::filesystem::path metadata_path(const std::filesystem::path& cloud_path);

/// Writes records plus a JSON metadata sidecar (`<path>.meta.json`). Both files go
/// through a temporary and an atomic rename. Reals use shortest round-trip form.
void write_cloud(const Cloud& cloud, const std::filesystem::path& path, CloudFormat format,
                 const nlohmann::json& metadata);

/// Format chosen from the extension (.jsonl or anything else for CSV).
Cloud read_cloud(const std::filesystem::path& path);
nlohmann::json read_metadata(const std::filesystem::path& cloud_path);

/// Writes text to `path` via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// ---------------------------------------------------------------------------------
// Summaries

/// Quartiles are Tukey hinges: medians of the lower and upper halves, each half
/// including the overall median when the count is odd.
struct FiveNumber {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

FiveNumber five_number_summary(std::vector<double> values);

/// Saturation box-plot statistics per curvature class; empty classes are omitted.
/// Throws DataError when no record carries both a curvature class and a saturation.
std::map<CurvatureClass, FiveNumber> saturation_by_curvature(const Cloud& cloud);

struct CurvatureFractions {
  std::map<CurvatureClass, double> fraction;  // over records with a curvature class
  std::size_t classified = 0;
  std::size_t skipped = 0;
};

CurvatureFractions curvature_fractions(const Cloud& cloud);

/// Two-component Gaussian mixture on ln(grad_norm) of the records whose e_train is
/// below the cloud's median e_train, fitted by EM from a deterministic start.
struct TwoClusterDiagnostic {
  std::size_t n_points = 0;
  double mean_low = 0.0;   // component means, low < high
  double mean_high = 0.0;
  double sd_low = 0.0;
  double sd_high = 0.0;
  double weight_low = 0.0;
  double weight_high = 0.0;
  double gap = 0.0;        // mean_high - mean_low, natural-log units
  std::size_t iterations = 0;
  bool separated = false;  // gap > 1 with both components weighing at least 1%
};

std::optional<TwoClusterDiagnostic> two_cluster_diagnostic(const Cloud& cloud);

nlohmann::json to_json(const AttractorSummary& a);
nlohmann::json to_json(const FiveNumber& f);
nlohmann::json to_json(const TwoClusterDiagnostic& d);

}  // namespace lgc
