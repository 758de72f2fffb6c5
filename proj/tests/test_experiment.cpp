#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <set>
#include <sstream>

#include "lgc/error.hpp"
#include "lgc/experiment.hpp"
#include "support.hpp"

namespace lgc {
namespace {

using nlohmann::json;
using test::TempDir;

ExperimentManifest xor_manifest(const std::filesystem::path& out) {
  return ExperimentManifest::from_json(
      {{"problem", "xor"}, {"preset", "desk"}, {"output_dir", out.string()}, {"plots", false}});
}

TEST(Manifest, DefaultsSpanTheFullGrid) {
  const auto m = ExperimentManifest::from_json({{"problem", "xor"}});
  EXPECT_EQ(m.activations.size(), 3u);
  EXPECT_EQ(m.init_ranges, (std::vector<double>{1.0, 10.0}));
  EXPECT_EQ(m.regimes.size(), 2u);
  EXPECT_TRUE(m.hessian_enabled());
  const auto cells = plan_cells(m, xor_dataset());
  ASSERT_EQ(cells.size(), 12u);
  std::set<std::string> names;
  for (const auto& c : cells) names.insert(c.name);
  EXPECT_EQ(names.size(), 12u);
  EXPECT_TRUE(names.count("tanh_micro_b1"));
  EXPECT_TRUE(names.count("elu_macro_b10"));
  for (const auto& c : cells) {
    EXPECT_EQ(c.walk_count, 90u);
    EXPECT_EQ(c.walk.n_steps, c.walk.regime == StepRegime::Micro ? 1000u : 100u);
    EXPECT_EQ(c.batch_size, 0u);
  }
}

TEST(Manifest, RangesAcceptPairs) {
  const auto m = ExperimentManifest::from_json({{"problem", "xor"}, {"init_ranges", {json::array({-10, 10})}}});
  EXPECT_EQ(m.init_ranges, std::vector<double>{10.0});
  EXPECT_THROW(ExperimentManifest::from_json({{"problem", "xor"}, {"init_ranges", {json::array({-1, 2})}}}),
               UsageError);
}

TEST(Manifest, DeskPresetAndOverrides) {
  auto m = ExperimentManifest::from_json({{"problem", "xor"}, {"preset", "desk"}});
  for (const auto& c : plan_cells(m, xor_dataset())) {
    EXPECT_EQ(c.walk_count, kDeskWalks);
    EXPECT_EQ(c.walk.n_steps, kDeskSteps);
  }
  m = ExperimentManifest::from_json({{"problem", "xor"},
                                     {"preset", "desk"},
                                     {"overrides", {{"walks", 3}, {"steps", 7}, {"tau_abs", 1e-6}, {"hessian_stride", 2}}}});
  for (const auto& c : plan_cells(m, xor_dataset())) {
    EXPECT_EQ(c.walk_count, 3u);
    EXPECT_EQ(c.walk.n_steps, 7u);
    EXPECT_EQ(c.analysis.zero_thresholds.abs, 1e-6);
    EXPECT_EQ(c.analysis.hessian_stride, 2u);
  }
}

TEST(Manifest, HessianAutoIsOffForMnistOnly) {
  auto m = ExperimentManifest::from_json({{"problem", "mnist"}});
  EXPECT_FALSE(m.hessian_enabled());
  m.hessian = HessianMode::On;
  EXPECT_TRUE(m.hessian_enabled());
  EXPECT_TRUE(ExperimentManifest::from_json({{"problem", "iris"}}).hessian_enabled());
  EXPECT_FALSE(ExperimentManifest::from_json({{"problem", "iris"}, {"hessian", "off"}}).hessian_enabled());
}

TEST(Manifest, InvalidFieldsRejected) {
  const json bad[] = {
      json::array(),
      {{"activations", {"tanh"}}},
      {{"problem", "cifar"}},
      {{"problem", "xor"}, {"activation", {"tanh"}}},
      {{"problem", "xor"}, {"activations", {"swish"}}},
      {{"problem", "xor"}, {"regimes", {"nano"}}},
      {{"problem", "xor"}, {"hessian", "maybe"}},
      {{"problem", "xor"}, {"preset", "huge"}},
      {{"problem", "xor"}, {"format", "xml"}},
      {{"problem", "xor"}, {"master_seed", "one"}},
      {{"problem", "xor"}, {"overrides", {{"walkz", 3}}}},
      {{"problem", {{"csv", "a.csv"}}}},
  };
  for (const auto& j : bad) EXPECT_THROW(ExperimentManifest::from_json(j), UsageError) << j.dump();
  const json invalid[] = {
      {{"problem", "xor"}, {"activations", json::array()}},
      {{"problem", "xor"}, {"activations", {"sigmoid"}}},
      {{"problem", "xor"}, {"activations", {"tanh", "tanh"}}},
      {{"problem", "xor"}, {"init_ranges", {0}}},
      {{"problem", "xor"}, {"workers", 0}},
      {{"problem", "xor"}, {"overrides", {{"walks", 0}}}},
      {{"problem", "xor"}, {"overrides", {{"theta_e", -1.0}}}},
  };
  for (const auto& j : invalid) EXPECT_THROW(ExperimentManifest::from_json(j).validate(), UsageError) << j.dump();
}

TEST(Manifest, FileRoundTripAndRelativePaths) {
  TempDir dir("manifest");
  test::write_text(dir / "m.json", R"({"problem": {"csv": "d.csv", "schema": "d.schema.json"}, "data_dir": "data"})");
  const auto m = ExperimentManifest::from_file(dir / "m.json");
  EXPECT_EQ(m.problem, Problem::CustomCsv);
  EXPECT_EQ(m.csv_path, dir / "d.csv");
  EXPECT_EQ(m.data_dir, dir / "data");
  const auto again = ExperimentManifest::from_json(m.to_json());
  EXPECT_EQ(again.to_json(), m.to_json());
  test::write_text(dir / "broken.json", "{\"problem\": ");
  EXPECT_THROW(ExperimentManifest::from_file(dir / "broken.json"), UsageError);
  EXPECT_THROW(ExperimentManifest::from_file(dir / "none.json"), UsageError);
}

TEST(Manifest, MissingDatasetIsDataError) {
  TempDir dir("nodata");
  auto m = ExperimentManifest::from_json({{"problem", "heart"}, {"data_dir", dir.path().string()}});
  try {
    load_problem_dataset(m);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("heart.csv"), std::string::npos);
  }
  m = ExperimentManifest::from_json({{"problem", "mnist"}, {"data_dir", dir.path().string()}});
  EXPECT_THROW(load_problem_dataset(m), DataError);
}

TEST(Manifest, DataDirFallsBackToEnvironment) {
  TempDir dir("envdata");
  test::write_text(dir / "iris.csv",
                   "sepal_length,sepal_width,petal_length,petal_width,species\n"
                   "1,2,3,4,setosa\n2,3,4,5,versicolor\n3,4,5,6,virginica\n4,5,6,7,setosa\n5,6,7,9,virginica\n");
  ::setenv(kDataDirEnv, dir.path().c_str(), 1);
  const auto d = load_problem_dataset(ExperimentManifest::from_json({{"problem", "iris"}}));
  ::unsetenv(kDataDirEnv);
  EXPECT_EQ(d.size(), 5u);
  EXPECT_EQ(d.targets.cols(), 3u);
}

TEST(Manifest, CustomCsvUsesTenHiddenUnits) {
  TempDir dir("custom");
  std::string s = "a,b,c,y\n";
  for (int r = 0; r < 20; ++r) s += std::to_string(r) + "," + std::to_string(r % 3) + "," + std::to_string(r * r % 7) + "," + (r % 2 ? "1" : "0") + "\n";
  test::write_text(dir / "d.csv", s);
  test::write_text(dir / "d.schema.json", R"({"label_column": "y", "encoding": "binary"})");
  test::write_text(dir / "m.json", R"({"problem": {"csv": "d.csv", "schema": "d.schema.json"}, "preset": "desk"})");
  const auto m = ExperimentManifest::from_file(dir / "m.json");
  const auto data = load_problem_dataset(m);
  const auto cells = plan_cells(m, data);
  EXPECT_EQ(cells.front().spec.n_input, 3u);
  EXPECT_EQ(cells.front().spec.n_hidden, 10u);
  EXPECT_EQ(cells.front().spec.n_output, 1u);
}

TEST(ParallelFor, RunsEveryIndexOnceAndRethrowsLowestFailure) {
  for (std::size_t workers : {1u, 2u, 5u}) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, workers, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  try {
    parallel_for(10, 1, [](std::size_t i) {
      if (i == 3 || i == 7) throw DataError("fail " + std::to_string(i));
    });
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "fail 3");
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

std::map<std::string, std::string> cloud_bytes(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), root).string();
    if (rel.find(".meta.json") != std::string::npos) continue;  // holds the timestamp
    out[rel] = test::read_bytes(e.path());
  }
  return out;
}

TEST(RunExperiment, XorGridWritesTwelveCellsDeterministically) {
  TempDir a("runa"), b("runb");
  auto ma = xor_manifest(a.path());
  ma.overrides.walks = 4;
  ma.overrides.steps = 20;
  auto mb = ma;
  mb.output_dir = b.path();
  mb.workers = 3;
  std::ostringstream log;
  const auto cells = run_experiment(ma, &log);
  run_experiment(mb);
  ASSERT_EQ(cells.size(), 12u);
  for (const auto& c : cells) {
    EXPECT_EQ(c.records, 80u);
    EXPECT_TRUE(std::filesystem::exists(c.dir / "cloud.csv"));
    EXPECT_TRUE(std::filesystem::exists(c.dir / "cloud.csv.meta.json"));
    EXPECT_TRUE(std::filesystem::exists(c.dir / "attractors.json"));
    EXPECT_TRUE(std::filesystem::exists(c.dir / "diagnostics.json"));
  }
  EXPECT_NE(log.str().find("tanh_micro_b1"), std::string::npos);
  const auto ba = cloud_bytes(a.path()), bb = cloud_bytes(b.path());
  ASSERT_EQ(ba.size(), bb.size());
  for (const auto& [k, v] : ba) {
    if (k == "manifest.json") continue;  // records output_dir and workers
    EXPECT_EQ(v, bb.at(k)) << k;
  }
  const auto meta = read_metadata(a.path() / "tanh_micro_b1" / "cloud.csv");
  EXPECT_EQ(meta["walk"]["master_seed"], 1);
  EXPECT_EQ(meta["preset"], "desk");
  EXPECT_EQ(meta["hessian"]["tau_abs"], 1e-8);
  EXPECT_EQ(meta["hessian"]["tau_rel"], 1e-6);
  EXPECT_TRUE(meta.contains("created_at"));
  EXPECT_EQ(meta["architecture"]["param_count"], 9);
}

TEST(RunExperiment, SeedChangesClouds) {
  TempDir a("seeda"), b("seedb");
  auto ma = xor_manifest(a.path());
  ma.activations = {Activation::TanH};
  ma.init_ranges = {1.0};
  ma.regimes = {StepRegime::Macro};
  ma.overrides.walks = 2;
  auto mb = ma;
  mb.output_dir = b.path();
  mb.master_seed = 2;
  run_experiment(ma);
  run_experiment(mb);
  EXPECT_NE(test::read_bytes(a / "tanh_macro_b1/cloud.csv"), test::read_bytes(b / "tanh_macro_b1/cloud.csv"));
}

TEST(RunExperiment, UnwritableOutputIsDataError) {
  TempDir a("unwritable");
  test::write_text(a / "file", "x");
  auto m = xor_manifest(a / "file" / "sub");
  EXPECT_THROW(run_experiment(m), DataError);
}

TEST(Summarize, ReportsCountsThresholdsAndFractions) {
  TempDir a("summary");
  auto m = xor_manifest(a.path());
  m.activations = {Activation::TanH};
  m.init_ranges = {1.0};
  m.regimes = {StepRegime::Micro};
  m.overrides.walks = 3;
  m.overrides.steps = 30;
  m.overrides.theta_e = 0.07;
  m.plots = true;
  run_experiment(m);
  const auto dir = a / "tanh_micro_b1";
  EXPECT_TRUE(std::filesystem::exists(dir / "lgc_all.png"));
  const auto rep = summarize(dir);
  EXPECT_EQ(rep.json["record_count"], 90);
  EXPECT_NE(rep.text.find("records: 90"), std::string::npos);
  EXPECT_EQ(rep.json["thresholds"]["theta_e"], 0.07);
  EXPECT_NE(rep.text.find("theta_e=0.07"), std::string::npos);
  const auto meta = read_metadata(dir / "cloud.csv");
  EXPECT_EQ(rep.json["thresholds"]["theta_g"], meta["attractors"]["theta_g"]);
  double sum = 0;
  for (const auto& [k, v] : rep.json["curvature"]["fractions"].items()) sum += v.get<double>();
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(summarize(dir).text, rep.text);
  EXPECT_THROW(summarize(a / "nothing"), DataError);
}

}  // namespace
}  // namespace lgc
