#include "lgc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "lgc/error.hpp"
#include "lgc/render.hpp"

namespace lgc {

std::string_view to_string(Problem p) {
  switch (p) {
    case Problem::XOR: return "xor";
    case Problem::Iris: return "iris";
    case Problem::Heart: return "heart";
    case Problem::MNIST: return "mnist";
    case Problem::CustomCsv: return "csv";
  }
  return "?";
}

std::string_view to_string(HessianMode h) {
  switch (h) {
    case HessianMode::Auto: return "auto";
    case HessianMode::On: return "on";
    case HessianMode::Off: return "off";
  }
  return "?";
}

std::string_view to_string(Preset p) { return p == Preset::Desk ? "desk" : "paper"; }

Preset parse_preset(std::string_view name) {
  if (name == "desk") return Preset::Desk;
  if (name == "paper" || name == "full") return Preset::Paper;
  throw UsageError("unknown preset '" + std::string(name) + "' (expected desk or paper)");
}

namespace {

Problem parse_problem(const std::string& name) {
  if (name == "xor") return Problem::XOR;
  if (name == "iris") return Problem::Iris;
  if (name == "heart") return Problem::Heart;
  if (name == "mnist") return Problem::MNIST;
  throw UsageError("unknown problem '" + name + "' (expected xor, iris, heart, mnist or {\"csv\", \"schema\"})");
}

HessianMode parse_hessian(const std::string& name) {
  if (name == "auto") return HessianMode::Auto;
  if (name == "on") return HessianMode::On;
  if (name == "off") return HessianMode::Off;
  throw UsageError("hessian must be auto, on or off, got '" + name + "'");
}

template <typename T>
std::optional<T> optional_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

double parse_range(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2) {
    const double lo = j[0].get<double>(), hi = j[1].get<double>();
    if (lo != -hi) throw UsageError("initialisation ranges must be symmetric [-a, a]");
    return hi;
  }
  throw UsageError("initialisation range must be a bound a or a pair [-a, a]");
}

}  // namespace

ExperimentManifest ExperimentManifest::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"problem", "data_dir", "activations", "init_ranges", "regimes",
                                              "master_seed", "output_dir", "workers", "hessian", "preset",
                                              "format", "plots", "overrides"};
  static const std::set<std::string> known_overrides = {
      "walks", "steps", "theta_g", "theta_e", "link_radius", "tau_abs", "tau_rel", "hessian_stride",
      "hessian_cap", "batch_size", "test_batch", "subsample"};
  if (!j.is_object()) throw UsageError("manifest must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw UsageError("unknown manifest field '" + k + "'");

  ExperimentManifest m;
  try {
    if (!j.contains("problem")) throw UsageError("manifest lacks 'problem'");
    const auto& p = j.at("problem");
    if (p.is_string()) {
      m.problem = parse_problem(p.get<std::string>());
    } else if (p.is_object()) {
      if (!p.contains("csv") || !p.contains("schema"))
        throw UsageError("custom problem needs both 'csv' and 'schema' paths");
      m.problem = Problem::CustomCsv;
      m.csv_path = p.at("csv").get<std::string>();
      m.schema_path = p.at("schema").get<std::string>();
    } else {
      throw UsageError("'problem' must be a name or an object");
    }
    if (auto v = optional_field<std::string>(j, "data_dir")) m.data_dir = *v;
    if (j.contains("activations")) {
      m.activations.clear();
      for (const auto& a : j.at("activations")) m.activations.push_back(parse_activation(a.get<std::string>()));
    }
    if (j.contains("init_ranges")) {
      m.init_ranges.clear();
      for (const auto& r : j.at("init_ranges")) m.init_ranges.push_back(parse_range(r));
    }
    if (j.contains("regimes")) {
      m.regimes.clear();
      for (const auto& r : j.at("regimes")) m.regimes.push_back(parse_regime(r.get<std::string>()));
    }
    if (auto v = optional_field<std::uint64_t>(j, "master_seed")) m.master_seed = *v;
    if (auto v = optional_field<std::string>(j, "output_dir")) m.output_dir = *v;
    if (auto v = optional_field<std::size_t>(j, "workers")) m.workers = *v;
    if (auto v = optional_field<std::string>(j, "hessian")) m.hessian = parse_hessian(*v);
    if (auto v = optional_field<std::string>(j, "preset")) m.preset = parse_preset(*v);
    if (auto v = optional_field<std::string>(j, "format")) {
      if (*v == "csv") m.format = CloudFormat::CSV;
      else if (*v == "jsonl") m.format = CloudFormat::JSONL;
      else throw UsageError("format must be csv or jsonl");
    }
    if (auto v = optional_field<bool>(j, "plots")) m.plots = *v;
    if (j.contains("overrides")) {
      const auto& o = j.at("overrides");
      if (!o.is_object()) throw UsageError("'overrides' must be an object");
      for (const auto& [k, v] : o.items())
        if (!known_overrides.count(k)) throw UsageError("unknown override '" + k + "'");
      auto& ov = m.overrides;
      ov.walks = optional_field<std::size_t>(o, "walks");
      ov.steps = optional_field<std::size_t>(o, "steps");
      ov.theta_g = optional_field<double>(o, "theta_g");
      ov.theta_e = optional_field<double>(o, "theta_e");
      ov.link_radius = optional_field<double>(o, "link_radius");
      ov.tau_abs = optional_field<double>(o, "tau_abs");
      ov.tau_rel = optional_field<double>(o, "tau_rel");
      ov.hessian_stride = optional_field<std::size_t>(o, "hessian_stride");
      ov.hessian_cap = optional_field<std::size_t>(o, "hessian_cap");
      ov.batch_size = optional_field<std::size_t>(o, "batch_size");
      ov.test_batch = optional_field<std::size_t>(o, "test_batch");
      ov.subsample = optional_field<std::size_t>(o, "subsample");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid manifest: ") + e.what());
  }
  return m;
}

ExperimentManifest ExperimentManifest::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  ExperimentManifest m = from_json(j);
  // Input paths are relative to the manifest; output_dir to the working directory.
  const auto base = path.parent_path();
  auto rebase = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  rebase(m.csv_path);
  rebase(m.schema_path);
  rebase(m.data_dir);
  return m;
}

nlohmann::json ExperimentManifest::to_json() const {
  nlohmann::json j;
  if (problem == Problem::CustomCsv)
    j["problem"] = {{"csv", csv_path.string()}, {"schema", schema_path.string()}};
  else
    j["problem"] = std::string(lgc::to_string(problem));
  j["data_dir"] = data_dir.string();
  j["activations"] = nlohmann::json::array();
  for (auto a : activations) j["activations"].push_back(std::string(lgc::to_string(a)));
  j["init_ranges"] = init_ranges;
  j["regimes"] = nlohmann::json::array();
  for (auto r : regimes) j["regimes"].push_back(std::string(lgc::to_string(r)));
  j["master_seed"] = master_seed;
  j["output_dir"] = output_dir.string();
  j["workers"] = workers;
  j["hessian"] = std::string(lgc::to_string(hessian));
  j["preset"] = std::string(lgc::to_string(preset));
  j["format"] = format == CloudFormat::CSV ? "csv" : "jsonl";
  j["plots"] = plots;
  nlohmann::json o = nlohmann::json::object();
  auto put = [&](const char* k, const auto& v) {
    if (v) o[k] = *v;
  };
  put("walks", overrides.walks);
  put("steps", overrides.steps);
  put("theta_g", overrides.theta_g);
  put("theta_e", overrides.theta_e);
  put("link_radius", overrides.link_radius);
  put("tau_abs", overrides.tau_abs);
  put("tau_rel", overrides.tau_rel);
  put("hessian_stride", overrides.hessian_stride);
  put("hessian_cap", overrides.hessian_cap);
  put("batch_size", overrides.batch_size);
  put("test_batch", overrides.test_batch);
  put("subsample", overrides.subsample);
  j["overrides"] = o;
  return j;
}

void ExperimentManifest::validate() const {
  if (activations.empty()) throw UsageError("manifest needs at least one activation");
  for (auto a : activations)
    if (a == Activation::Sigmoid) throw UsageError("hidden activations must be tanh, relu or elu");
  if (std::set<Activation>(activations.begin(), activations.end()).size() != activations.size())
    throw UsageError("duplicate activation in manifest");
  if (init_ranges.empty()) throw UsageError("manifest needs at least one initialisation range");
  for (double a : init_ranges)
    if (!(a > 0.0) || !std::isfinite(a)) throw UsageError("initialisation bounds must be positive");
  if (std::set<double>(init_ranges.begin(), init_ranges.end()).size() != init_ranges.size())
    throw UsageError("duplicate initialisation range in manifest");
  if (regimes.empty()) throw UsageError("manifest needs at least one step regime");
  if (std::set<StepRegime>(regimes.begin(), regimes.end()).size() != regimes.size())
    throw UsageError("duplicate step regime in manifest");
  if (workers == 0) throw UsageError("workers must be at least 1");
  if (output_dir.empty()) throw UsageError("output_dir must be set");
  const auto& o = overrides;
  auto positive_count = [](const std::optional<std::size_t>& v, const char* name) {
    if (v && *v == 0) throw UsageError(std::string(name) + " override must be positive");
  };
  positive_count(o.walks, "walks");
  positive_count(o.steps, "steps");
  positive_count(o.hessian_stride, "hessian_stride");
  positive_count(o.batch_size, "batch_size");
  positive_count(o.test_batch, "test_batch");
  positive_count(o.subsample, "subsample");
  auto positive_real = [](const std::optional<double>& v, const char* name) {
    if (v && !(*v > 0.0)) throw UsageError(std::string(name) + " override must be positive");
  };
  positive_real(o.theta_g, "theta_g");
  positive_real(o.theta_e, "theta_e");
  positive_real(o.link_radius, "link_radius");
  positive_real(o.tau_abs, "tau_abs");
  positive_real(o.tau_rel, "tau_rel");
  if (problem == Problem::CustomCsv && (csv_path.empty() || schema_path.empty()))
    throw UsageError("custom CSV problem needs csv and schema paths");
}

bool ExperimentManifest::hessian_enabled() const {
  if (hessian == HessianMode::Auto) return problem != Problem::MNIST;
  return hessian == HessianMode::On;
}

std::string cell_name(Activation a, StepRegime r, double bound) {
  std::ostringstream os;
  os << to_string(a) << '_' << to_string(r) << "_b" << bound;
  return os.str();
}

MlpSpec architecture_for(Problem p, Activation hidden, const Dataset& data) {
  switch (p) {
    case Problem::XOR: return xor_spec(hidden);
    case Problem::Iris: return iris_spec(hidden);
    case Problem::Heart: return heart_spec(hidden);
    case Problem::MNIST: return mnist_spec(hidden);
    case Problem::CustomCsv: break;
  }
  // Custom problems: 10 hidden units, as for the larger benchmarks.
  return {data.inputs.cols(), 10, data.targets.cols(), hidden, Activation::Sigmoid};
}

namespace {

std::filesystem::path resolve_data_dir(const ExperimentManifest& m) {
  if (!m.data_dir.empty()) return m.data_dir;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  return "data";
}

CsvSchema iris_default_schema() {
  CsvSchema s;
  s.name = "iris";
  s.has_header = true;
  s.label_column = std::string("species");
  s.encoding = TargetEncoding::OneHot;
  s.classes = {"setosa", "versicolor", "virginica"};
  return s;
}

std::filesystem::path require(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::exists(p))
    throw DataError(std::string(what) + " not found: " + p.string() + " (set data_dir or " + kDataDirEnv + ")");
  return p;
}

}  // namespace

Dataset load_problem_dataset(const ExperimentManifest& manifest) {
  PrepareOptions opt;
  opt.split_seed = manifest.master_seed;
  const auto dir = resolve_data_dir(manifest);
  switch (manifest.problem) {
    case Problem::XOR: return xor_dataset();
    case Problem::Iris: {
      const auto csv = require(dir / "iris.csv", "Iris data");
      const auto schema_path = dir / "iris.schema.json";
      const CsvSchema schema =
          std::filesystem::exists(schema_path) ? CsvSchema::from_file(schema_path) : iris_default_schema();
      return load_csv(csv, schema, opt);
    }
    case Problem::Heart: {
      const auto csv = require(dir / "heart.csv", "Heart data");
      const auto schema = require(dir / "heart.schema.json", "Heart schema");
      return load_csv(csv, CsvSchema::from_file(schema), opt);
    }
    case Problem::MNIST: {
      opt.subsample = manifest.overrides.subsample;
      if (!opt.subsample && manifest.preset == Preset::Desk) opt.subsample = kDeskMnistPatterns;
      const auto sub = dir / "mnist";
      return load_mnist_dir(std::filesystem::is_directory(sub) ? sub : dir, opt);
    }
    case Problem::CustomCsv: {
      opt.subsample = manifest.overrides.subsample;
      return load_csv(require(manifest.csv_path, "CSV data"),
                      CsvSchema::from_file(require(manifest.schema_path, "CSV schema")), opt);
    }
  }
  throw UsageError("unsupported problem");
}

std::vector<CellPlan> plan_cells(const ExperimentManifest& manifest, const Dataset& data) {
  manifest.validate();
  std::vector<CellPlan> cells;
  const auto& o = manifest.overrides;
  for (auto act : manifest.activations) {
    for (double bound : manifest.init_ranges) {
      for (auto regime : manifest.regimes) {
        CellPlan c;
        c.name = cell_name(act, regime, bound);
        c.activation = act;
        c.spec = architecture_for(manifest.problem, act, data);
        if (data.inputs.cols() != c.spec.n_input || data.targets.cols() != c.spec.n_output)
          throw DataError("dataset shape " + std::to_string(data.inputs.cols()) + "->" +
                          std::to_string(data.targets.cols()) + " does not match the " +
                          std::string(to_string(manifest.problem)) + " architecture");
        c.walk = WalkConfig::make(bound, regime, manifest.master_seed);
        if (o.steps)
          c.walk.n_steps = *o.steps;
        else if (manifest.preset == Preset::Desk)
          c.walk.n_steps = kDeskSteps;
        if (o.walks)
          c.walk_count = *o.walks;
        else if (manifest.preset == Preset::Desk)
          c.walk_count = kDeskWalks;
        else
          c.walk_count = experiment_walk_count(c.spec.param_count());

        c.analysis.hessian = manifest.hessian_enabled();
        c.analysis.hessian_stride = o.hessian_stride.value_or(1);
        c.analysis.hessian_cap = o.hessian_cap.value_or(kDefaultHessianCap);
        c.analysis.zero_thresholds.abs = o.tau_abs.value_or(ZeroThresholds{}.abs);
        c.analysis.zero_thresholds.rel = o.tau_rel.value_or(ZeroThresholds{}.rel);
        if (manifest.problem == Problem::MNIST || o.batch_size) {
          c.batch_size = o.batch_size.value_or(kMnistBatchSize);
          c.test_batch = o.test_batch.value_or(kMnistTestBatch);
        }
        cells.push_back(std::move(c));
      }
    }
  }
  return cells;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job) {
  if (n == 0) return;
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::size_t failed_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        stop = true;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

Cloud run_cell(const CellPlan& plan, const Dataset& data, std::size_t workers,
               const std::function<void(std::size_t, std::size_t)>& progress) {
  std::vector<WalkTrace> traces(plan.walk_count);
  std::optional<BatchSource> shared;
  if (plan.batch_size == 0) shared = BatchSource::full_batch(data);

  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;
  parallel_for(plan.walk_count, workers, [&](std::size_t walk) {
    BatchSource batches = shared ? *shared
                                 : BatchSource::minibatch(data, plan.batch_size, plan.test_batch, plan.walk.seed, walk);
    traces[walk] = pgw_run(plan.spec, batches, plan.walk, walk, plan.analysis, plan.name);
    const std::size_t d = ++done;
    if (progress) {
      std::lock_guard lock(progress_mu);
      progress(d, plan.walk_count);
    }
  });
  return collect(std::move(traces));
}

nlohmann::json cell_metadata(const ExperimentManifest& manifest, const CellPlan& plan, const Dataset& data,
                             const Cloud& cloud) {
  nlohmann::json j;
  j["cell"] = plan.name;
  j["problem"] = std::string(to_string(manifest.problem));
  j["dataset"] = data.name;
  j["activation"] = std::string(to_string(plan.activation));
  j["architecture"] = {{"n_input", plan.spec.n_input},
                       {"n_hidden", plan.spec.n_hidden},
                       {"n_output", plan.spec.n_output},
                       {"hidden", std::string(to_string(plan.spec.hidden))},
                       {"output", std::string(to_string(plan.spec.output))},
                       {"param_count", plan.spec.param_count()}};
  j["walk"] = {{"init_range", {-plan.walk.init_bound, plan.walk.init_bound}},
               {"regime", std::string(to_string(plan.walk.regime))},
               {"max_step", plan.walk.max_step},
               {"n_steps", plan.walk.n_steps},
               {"walk_count", plan.walk_count},
               {"master_seed", manifest.master_seed}};
  j["preset"] = std::string(to_string(manifest.preset));
  if (manifest.preset == Preset::Desk)
    j["preset_values"] = {{"walks", kDeskWalks}, {"steps", kDeskSteps}, {"mnist_patterns", kDeskMnistPatterns}};
  j["batching"] = plan.batch_size == 0
                      ? nlohmann::json{{"mode", "full"}}
                      : nlohmann::json{{"mode", "minibatch"}, {"batch_size", plan.batch_size},
                                       {"test_batch", plan.test_batch}};
  const bool skipped_by_cap = plan.analysis.hessian && plan.spec.param_count() > plan.analysis.hessian_cap;
  j["hessian"] = {{"mode", std::string(to_string(manifest.hessian))},
                  {"enabled", plan.analysis.hessian && !skipped_by_cap},
                  {"skipped_reason", !plan.analysis.hessian ? "disabled"
                                     : skipped_by_cap      ? "dimension exceeds cap"
                                                           : ""},
                  {"stride", plan.analysis.hessian_stride},
                  {"cap", plan.analysis.hessian_cap},
                  {"tau_abs", plan.analysis.zero_thresholds.abs},
                  {"tau_rel", plan.analysis.zero_thresholds.rel}};
  const auto& o = manifest.overrides;
  nlohmann::json att = {{"theta_e", o.theta_e.value_or(AttractorOptions{}.error_threshold)},
                        {"link_radius", o.link_radius.value_or(AttractorOptions{}.link_radius)}};
  if (o.theta_g) {
    att["theta_g"] = *o.theta_g;
    att["theta_g_rule"] = "explicit";
  } else {
    att["theta_g"] = cloud.records.empty() ? 0.0 : default_grad_threshold(cloud);
    att["theta_g_rule"] = "1e-3 * median grad_norm";
  }
  j["attractors"] = att;
  nlohmann::json ds = {{"n_patterns", data.size()}, {"n_train", data.train.size()},
                       {"n_test", data.test.size()}, {"split_seed", data.split_seed},
                       {"warnings", data.warnings}};
  if (data.standardization)
    ds["standardization"] = {{"mean", data.standardization->mean},
                             {"stddev", data.standardization->stddev},
                             {"skipped_columns", data.standardization->skipped_columns}};
  j["dataset_stats"] = ds;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ts;
  ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  j["created_at"] = ts.str();
  return j;
}

namespace {

AttractorOptions attractor_options_from(const nlohmann::json& meta) {
  AttractorOptions a;
  if (meta.contains("attractors")) {
    const auto& att = meta.at("attractors");
    a.error_threshold = att.value("theta_e", a.error_threshold);
    a.link_radius = att.value("link_radius", a.link_radius);
    if (att.contains("theta_g")) a.grad_threshold = att.at("theta_g").get<double>();
  }
  return a;
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_file_atomic(p, j.dump(2) + "\n"); }

void write_plots(const Cloud& cloud, const CellPlan& plan, const std::filesystem::path& dir) {
  if (cloud.records.empty()) return;
  RenderOptions base;
  base.x_scale = plan.walk.init_bound > 1.0 ? XScale::Sqrt : XScale::Linear;
  const bool has_curvature = std::any_of(cloud.records.begin(), cloud.records.end(),
                                         [](const StepRecord& r) { return r.curvature.has_value(); });
  const bool has_egen = !cloud.records.empty() && cloud.records.front().e_gen.has_value();
  const bool has_saturation = std::any_of(cloud.records.begin(), cloud.records.end(),
                                          [](const StepRecord& r) { return r.saturation.has_value(); });

  RenderOptions curv = base;
  curv.panes_by_curvature = has_curvature;
  render_lgc(cloud, dir / "lgc", curv);
  if (has_curvature) {
    RenderOptions all = base;
    render_lgc(cloud, dir / "lgc_all", all);
  }
  if (has_egen) {
    RenderOptions eg = base;
    eg.color_by = ColorBy::EGen;
    render_lgc(cloud, dir / "lgc_egen", eg);
    eg.e_train_filter = 0.05;
    const bool any_low = std::any_of(cloud.records.begin(), cloud.records.end(),
                                     [](const StepRecord& r) { return r.e_train < 0.05; });
    if (any_low) render_lgc(cloud, dir / "lgc_egen_lt005", eg);
  }
  if (has_saturation) {
    RenderOptions sat = base;
    sat.color_by = ColorBy::Saturation;
    render_lgc(cloud, dir / "lgc_saturation", sat);
  }
}

}  // namespace

std::vector<CellOutput> run_experiment(const ExperimentManifest& manifest, std::ostream* log) {
  manifest.validate();
  const Dataset data = load_problem_dataset(manifest);
  const auto cells = plan_cells(manifest, data);

  std::error_code ec;
  std::filesystem::create_directories(manifest.output_dir, ec);
  if (ec || !std::filesystem::is_directory(manifest.output_dir))
    throw DataError("cannot create output directory " + manifest.output_dir.string() +
                    (ec ? ": " + ec.message() : ""));
  write_json(manifest.output_dir / "manifest.json", manifest.to_json());

  std::vector<CellOutput> outputs;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto& plan = cells[ci];
    if (log)
      *log << "[" << ci + 1 << "/" << cells.size() << "] " << plan.name << ": " << plan.walk_count << " walks x "
           << plan.walk.n_steps << " steps (m = " << plan.spec.param_count() << ")\n"
           << std::flush;
    std::size_t last_decile = 0;
    const Cloud cloud = run_cell(plan, data, manifest.workers, [&](std::size_t d, std::size_t total) {
      const std::size_t decile = d * 10 / total;
      if (log && decile > last_decile) {
        last_decile = decile;
        *log << "  " << plan.name << ": " << d << "/" << total << " walks\n" << std::flush;
      }
    });

    const auto dir = manifest.output_dir / plan.name;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
    const auto cloud_path = dir / (manifest.format == CloudFormat::CSV ? "cloud.csv" : "cloud.jsonl");
    const nlohmann::json meta = cell_metadata(manifest, plan, data, cloud);
    write_cloud(cloud, cloud_path, manifest.format, meta);

    nlohmann::json attractors = nlohmann::json::array();
    if (!cloud.records.empty())
      for (const auto& a : find_attractors(cloud, attractor_options_from(meta))) attractors.push_back(to_json(a));
    write_json(dir / "attractors.json", attractors);

    const bool has_box = std::any_of(cloud.records.begin(), cloud.records.end(), [](const StepRecord& r) {
      return r.curvature.has_value() && r.saturation.has_value();
    });
    if (has_box) {
      nlohmann::json sat = nlohmann::json::object();
      for (const auto& [cls, f] : saturation_by_curvature(cloud)) sat[std::string(to_string(cls))] = to_json(f);
      write_json(dir / "saturation.json", sat);
    }
    nlohmann::json diag = nlohmann::json::object();
    if (auto d = two_cluster_diagnostic(cloud)) diag["two_cluster"] = to_json(*d);
    write_json(dir / "diagnostics.json", diag);
    if (manifest.plots) write_plots(cloud, plan, dir);

    outputs.push_back({plan.name, dir, cloud.size()});
  }
  return outputs;
}

std::filesystem::path find_cloud_file(const std::filesystem::path& cell_dir) {
  for (const char* name : {"cloud.csv", "cloud.jsonl"}) {
    const auto p = cell_dir / name;
    if (std::filesystem::exists(p)) return p;
  }
  throw DataError("no cloud.csv or cloud.jsonl in " + cell_dir.string());
}

CellReport summarize(const std::filesystem::path& cell_dir) {
  const auto path = find_cloud_file(cell_dir);
  const nlohmann::json meta = read_metadata(path);
  const Cloud cloud = read_cloud(path);
  if (meta.contains("record_count") && meta.at("record_count").get<std::size_t>() != cloud.size())
    throw DataError("cloud " + path.string() + " has " + std::to_string(cloud.size()) +
                    " records but metadata declares " + std::to_string(meta.at("record_count").get<std::size_t>()));

  const AttractorOptions att = attractor_options_from(meta);
  CellReport rep;
  auto& j = rep.json;
  j["cell"] = meta.value("cell", cloud.cell);
  j["record_count"] = cloud.size();
  j["thresholds"] = {{"theta_g", att.grad_threshold.value_or(cloud.records.empty() ? 0.0 : default_grad_threshold(cloud))},
                     {"theta_e", att.error_threshold},
                     {"link_radius", att.link_radius}};
  if (meta.contains("hessian")) {
    j["thresholds"]["tau_abs"] = meta["hessian"].value("tau_abs", ZeroThresholds{}.abs);
    j["thresholds"]["tau_rel"] = meta["hessian"].value("tau_rel", ZeroThresholds{}.rel);
  }

  j["attractors"] = nlohmann::json::array();
  std::vector<AttractorSummary> attractors;
  if (!cloud.records.empty()) attractors = find_attractors(cloud, att);
  for (const auto& a : attractors) j["attractors"].push_back(to_json(a));

  const auto fr = curvature_fractions(cloud);
  j["curvature"] = {{"classified", fr.classified}, {"skipped", fr.skipped}};
  for (const auto& [k, v] : fr.fraction) j["curvature"]["fractions"][std::string(to_string(k))] = v;

  std::map<CurvatureClass, FiveNumber> sat;
  const bool has_box = std::any_of(cloud.records.begin(), cloud.records.end(), [](const StepRecord& r) {
    return r.curvature.has_value() && r.saturation.has_value();
  });
  if (has_box) sat = saturation_by_curvature(cloud);
  j["saturation_by_curvature"] = nlohmann::json::object();
  for (const auto& [k, f] : sat) j["saturation_by_curvature"][std::string(to_string(k))] = to_json(f);
  const auto diag = two_cluster_diagnostic(cloud);
  j["two_cluster"] = diag ? to_json(*diag) : nlohmann::json(nullptr);

  std::ostringstream os;
  os << std::setprecision(6);
  os << "cell: " << j["cell"].get<std::string>() << "\n";
  os << "records: " << cloud.size() << "\n";
  os << "thresholds: theta_g=" << j["thresholds"]["theta_g"].get<double>()
     << " theta_e=" << att.error_threshold << " link_radius=" << att.link_radius;
  if (j["thresholds"].contains("tau_abs"))
    os << " tau_abs=" << j["thresholds"]["tau_abs"].get<double>()
       << " tau_rel=" << j["thresholds"]["tau_rel"].get<double>();
  os << "\n\nstationary attractors: " << attractors.size() << "\n";
  if (!attractors.empty()) {
    os << "  id  members  mean_error  mean_grad_norm  error_range            class\n";
    for (const auto& a : attractors) {
      os << "  " << std::setw(2) << a.cluster_id << "  " << std::setw(7) << a.member_count << "  " << std::setw(10)
         << a.mean_error << "  " << std::setw(14) << a.mean_grad_norm << "  [" << a.min_error << ", " << a.max_error
         << "]  " << to_string(a.classification) << "\n";
    }
  }
  os << "\ncurvature (" << fr.classified << " classified, " << fr.skipped << " skipped):\n";
  for (const auto& [k, v] : fr.fraction) os << "  " << std::setw(9) << to_string(k) << "  " << v << "\n";
  if (!sat.empty()) {
    os << "\nsaturation by curvature (min q1 median q3 max, n):\n";
    for (const auto& [k, f] : sat)
      os << "  " << std::setw(9) << to_string(k) << "  " << f.min << " " << f.q1 << " " << f.median << " " << f.q3
         << " " << f.max << "  (" << f.count << ")\n";
  }
  os << "\ntwo-cluster diagnostic (ln grad_norm, e_train below median): ";
  if (diag)
    os << "means " << diag->mean_low << " / " << diag->mean_high << ", weights " << diag->weight_low << " / "
       << diag->weight_high << ", gap " << diag->gap << (diag->separated ? " (separated)" : " (not separated)")
       << "\n";
  else
    os << "not enough points\n";
  rep.text = os.str();
  return rep;
}

}  // namespace lgc
