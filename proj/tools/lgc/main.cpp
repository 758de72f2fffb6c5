// lgc: run loss-gradient-cloud experiments and inspect their outputs.
//
//   lgc run <manifest> [--seed N] [--workers N] [--preset desk|paper] [--output DIR]
//   lgc validate <manifest>
//   lgc summarize <cell_dir> [--json]
//   lgc render <cell_dir> [--panes] [--color-by ...] [--x-scale ...] [--filter E] [--out STEM]
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <system_error>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lgc/cloud.hpp"
#include "lgc/error.hpp"
#include "lgc/experiment.hpp"
#include "lgc/render.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct RunFlags {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> preset;
  std::optional<std::string> output;
  std::optional<std::string> data_dir;
  std::optional<std::string> hessian;
  std::optional<std::size_t> walks;
  std::optional<std::size_t> steps;
};

lgc::ExperimentManifest load_manifest(const RunFlags& f) {
  auto m = lgc::ExperimentManifest::from_file(f.manifest);
  // Flags win over the file.
  if (f.seed) m.master_seed = *f.seed;
  if (f.workers) m.workers = *f.workers;
  if (f.preset) m.preset = lgc::parse_preset(*f.preset);
  if (f.output) m.output_dir = *f.output;
  if (f.data_dir) m.data_dir = *f.data_dir;
  if (f.hessian) {
    nlohmann::json j = m.to_json();
    j["hessian"] = *f.hessian;
    m.hessian = lgc::ExperimentManifest::from_json(j).hessian;
  }
  if (f.walks) m.overrides.walks = *f.walks;
  if (f.steps) m.overrides.steps = *f.steps;
  m.validate();
  return m;
}

int cmd_run(const RunFlags& f) {
  const auto m = load_manifest(f);
  const auto cells = lgc::run_experiment(m, &std::cerr);
  for (const auto& c : cells) std::cerr << c.dir.string() << ": " << c.records << " records\n";
  return kOk;
}

int cmd_validate(const RunFlags& f) {
  const auto m = load_manifest(f);
  const auto data = lgc::load_problem_dataset(m);
  const auto cells = lgc::plan_cells(m, data);
  std::cout << "manifest ok: " << cells.size() << " cells, dataset " << data.name << " (" << data.size()
            << " patterns)\n";
  for (const auto& c : cells)
    std::cout << "  " << c.name << ": m=" << c.spec.param_count() << " walks=" << c.walk_count
              << " steps=" << c.walk.n_steps << " hessian=" << (c.analysis.hessian ? "on" : "off") << "\n";
  return kOk;
}

int cmd_summarize(const std::string& dir, bool json) {
  const auto report = lgc::summarize(dir);
  if (json)
    std::cout << report.json.dump(2) << "\n";
  else
    std::cout << report.text;
  return kOk;
}

struct RenderFlags {
  std::string cell_dir;
  bool panes = false;
  std::string color_by = "curvature";
  std::string x_scale = "linear";
  std::optional<double> filter;
  std::optional<std::string> out;
  int width = 800;
  int height = 600;
};

int cmd_render(const RenderFlags& f) {
  lgc::RenderOptions opt;
  opt.panes_by_curvature = f.panes;
  opt.color_by = lgc::parse_color_by(f.color_by);
  opt.x_scale = lgc::parse_x_scale(f.x_scale);
  opt.e_train_filter = f.filter;
  opt.width = f.width;
  opt.height = f.height;
  const auto cloud = lgc::read_cloud(lgc::find_cloud_file(f.cell_dir));
  const std::filesystem::path stem = f.out ? std::filesystem::path(*f.out) : std::filesystem::path(f.cell_dir) / "render";
  for (const auto& p : lgc::render_lgc(cloud, stem, opt)) std::cerr << "wrote " << p.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-gradient cloud experiments for small neural networks"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto add_manifest_flags = [&](CLI::App* sub) {
    sub->add_option("manifest", run_flags.manifest, "Experiment manifest (JSON)")->required();
    sub->add_option("--seed", run_flags.seed, "Master seed");
    sub->add_option("--workers", run_flags.workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--preset", run_flags.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--output", run_flags.output, "Output directory");
    sub->add_option("--data-dir", run_flags.data_dir, std::string("Dataset directory (default $") +
                                                          lgc::kDataDirEnv + ", then ./data)");
    sub->add_option("--hessian", run_flags.hessian, "auto, on or off")->check(CLI::IsMember({"auto", "on", "off"}));
    sub->add_option("--walks", run_flags.walks, "Walks per cell")->check(CLI::PositiveNumber);
    sub->add_option("--steps", run_flags.steps, "Steps per walk")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "Run every cell of a manifest");
  add_manifest_flags(run);
  auto* validate = app.add_subcommand("validate", "Check a manifest and its dataset without running");
  add_manifest_flags(validate);

  std::string summary_dir;
  bool summary_json = false;
  auto* summarize = app.add_subcommand("summarize", "Report on one cell directory");
  summarize->add_option("cell_dir", summary_dir, "Cell output directory")->required();
  summarize->add_flag("--json", summary_json, "Emit JSON instead of text");

  RenderFlags rf;
  auto* render = app.add_subcommand("render", "Plot a cell's loss-gradient cloud");
  render->add_option("cell_dir", rf.cell_dir, "Cell output directory")->required();
  render->add_flag("--panes", rf.panes, "One pane per curvature class");
  render->add_option("--color-by", rf.color_by, "curvature, egen or saturation");
  render->add_option("--x-scale", rf.x_scale, "linear or sqrt");
  render->add_option("--filter", rf.filter, "Keep records with e_train below this");
  render->add_option("--out", rf.out, "Output file stem (default <cell_dir>/render)");
  render->add_option("--width", rf.width, "Image width")->check(CLI::Range(200, 8000));
  render->add_option("--height", rf.height, "Image height")->check(CLI::Range(150, 8000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*validate) return cmd_validate(run_flags);
    if (*summarize) return cmd_summarize(summary_dir, summary_json);
    if (*render) return cmd_render(rf);
  } catch (const lgc::UsageError& e) {
    std::cerr << "lgc: " << e.what() << "\n";
    return kUsage;
  } catch (const lgc::NumericalError& e) {
    std::cerr << "lgc: numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const lgc::Error& e) {
    std::cerr << "lgc: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "lgc: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "lgc: unexpected failure: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
