#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cvrplab/bench.hpp"
#include "cvrplab/errors.hpp"
#include "cvrplab/instances.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace cvrplab;
using nlohmann::json;

namespace {

ExperimentSpec spec_from(const std::string& text) {
  std::istringstream in(text);
  return parse_spec(in);
}

std::string results_csv(const ExperimentResult& r) {
  std::ostringstream out;
  write_results_csv(r.rows, out);
  return out.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cvrplab_bench_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::size_t line_count(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST(Spec, ListFieldsExpandToCartesianProduct) {
  const auto spec = spec_from(R"({
    "seed": 1,
    "instances": {"generate": {"n": 8, "count": 2}},
    "methods": [{"type": "decode", "strategy": ["argmax", "beam"], "augment": ["none", "fold8_flip"]}]
  })");
  ASSERT_EQ(spec.methods.size(), 4u);
  std::set<std::string> ids;
  for (const auto& m : spec.methods) ids.insert(m.id);
  EXPECT_EQ(ids.size(), 4u);
  EXPECT_EQ(spec.methods[0].decode.strategy, Strategy::argmax);
  EXPECT_EQ(spec.methods[3].decode.strategy, Strategy::beam);
  EXPECT_EQ(spec.methods[3].decode.beam_size, 4);
  EXPECT_EQ(spec.methods[3].augment, AugmentKind::fold8_flip);
}

TEST(Spec, Rejections) {
  EXPECT_THROW(spec_from("[1, 2]"), SpecError);
  EXPECT_THROW(spec_from("{not json"), SpecError);
  EXPECT_THROW(spec_from(R"({"bogus": 1, "methods": [{"type": "construct"}]})"), SpecError);
  EXPECT_THROW(spec_from(R"({"methods": [{"type": "decode", "strategy": "nucleus"}]})"), SpecError);
  EXPECT_THROW(spec_from(R"({"methods": [{"type": "teleport"}]})"), SpecError);
  EXPECT_THROW(spec_from(R"({"methods": [{"type": "construct", "id": "x", "method": ["sweep", "insertion"]}]})"),
               SpecError);
  EXPECT_THROW(spec_from(R"({"methods": []})"), SpecError);
  EXPECT_THROW(spec_from(R"({"repetitions": 0, "methods": [{"type": "construct"}]})"), SpecError);
  EXPECT_THROW(spec_from(R"({"methods": [{"type": "rrc", "strategy": "beam"}]})"), SpecError);
  EXPECT_THROW(spec_from(R"({"methods": [{"type": "rrc", "cooling": 1.5}]})"), SpecError);
}

TEST(Spec, RelativePathsResolveAgainstSpecFile) {
  const auto dir = fresh_dir("paths");
  std::filesystem::create_directories(dir / "sub");
  {
    std::ofstream out(dir / "sub" / "spec.json");
    out << R"({"instances": {"directory": "inst"}, "output": {"dir": "out"}, "methods": [{"type": "construct"}]})";
  }
  const auto spec = load_spec(dir / "sub" / "spec.json");
  EXPECT_EQ(spec.instance_dir, dir / "sub" / "inst");
  EXPECT_EQ(spec.out_dir, dir / "sub" / "out");
  EXPECT_THROW(load_spec(dir / "missing.json"), SpecError);
}

TEST(Seeds, DocumentedScheme) {
  EXPECT_EQ(instance_seed(7, 3), derive_seed(7, {0, 3}));
  EXPECT_EQ(run_seed(7, 1, 2, 3), derive_seed(7, {1, 1, 2, 3}));
  EXPECT_NE(run_seed(7, 0, 0, 1), run_seed(7, 0, 1, 0));
}

TEST(Experiment, TwoByTwoMatrixWithOracleGaps) {
  auto spec = spec_from(R"({
    "seed": 5,
    "instances": {"generate": {"n": 7, "count": 4, "capacity": 15}},
    "reference": "oracle",
    "methods": [{"type": "decode", "strategy": ["argmax", "beam"], "augment": ["none", "fold8_flip"]}]
  })");
  const auto r = run_experiment(spec);
  EXPECT_FALSE(r.partial_failure());
  ASSERT_EQ(r.rows.size(), 16u);
  ASSERT_EQ(r.summary.size(), 4u);
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.ok) << row.error;
    ASSERT_TRUE(row.gap_percent);
    EXPECT_GE(*row.gap_percent, -1e-9);
    EXPECT_NEAR(*row.gap_percent, optimality_gap(row.cost, *row.reference).gap_percent, 1e-12);
  }
  for (const auto& s : r.summary) {
    EXPECT_EQ(s.runs, 4);
    EXPECT_TRUE(s.mean_gap_percent);
  }
}

TEST(Experiment, DeterministicAcrossRunsAndWorkers) {
  const std::string text = R"({
    "seed": 11,
    "repetitions": 2,
    "instances": {"generate": {"n": 15, "count": 3}},
    "methods": [
      {"type": "construct", "method": ["savings_parallel", "sweep"], "local_search": [false, true]},
      {"type": "decode", "strategy": "softmax", "pomo": 4},
      {"type": "rrc", "iterations": 20, "seg_min": 3, "seg_max": 8}
    ]
  })";
  auto spec = spec_from(text);
  const auto a = results_csv(run_experiment(spec));
  const auto b = results_csv(run_experiment(spec));
  spec.workers = 4;
  const auto c = results_csv(run_experiment(spec));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 3 * 6 * 2);
}

TEST(Experiment, FailuresAreRowsNotAborts) {
  auto spec = spec_from(R"({
    "instances": {"generate": {"n": 5, "count": 2}},
    "methods": [{"type": "decode", "pomo": 3}, {"type": "decode", "pomo": 8}]
  })");
  const auto r = run_experiment(spec);
  EXPECT_TRUE(r.partial_failure());
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_TRUE(r.rows[0].ok);
  EXPECT_FALSE(r.rows[1].ok);
  EXPECT_FALSE(r.rows[1].error.empty());
  EXPECT_EQ(r.summary[1].failures, 2);
  EXPECT_EQ(r.summary[0].failures, 0);
}

TEST(Experiment, OracleReferenceRefusesLargeInstances) {
  EXPECT_THROW(spec_from(R"({"instances": {"generate": {"n": 12, "count": 1}}, "reference": "oracle",
                             "methods": [{"type": "construct"}]})"),
               SpecError);
}

TEST(Experiment, InstanceDirectoryAndCsvReferences) {
  const auto dir = fresh_dir("dir");
  std::filesystem::create_directories(dir / "inst");
  std::ofstream refs(dir / "refs.csv");
  for (int i = 0; i < 3; ++i) {
    GenConfig g = GenConfig::for_size(6, 100 + i);
    g.name = "file" + std::to_string(i);
    const Instance inst = generate(g);
    write_instance(inst, dir / "inst" / (g.name + ".txt"));
    if (i < 2) refs << g.name << ',' << format_double(testutil::dp_optimum(inst)) << '\n';
  }
  refs.close();
  std::ofstream(dir / "spec.json") << R"({"instances": {"directory": "inst"}, "reference": {"csv": "refs.csv"},
                                         "methods": [{"type": "construct", "method": "insertion"}]})";
  const auto r = run_experiment(load_spec(dir / "spec.json"));
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].instance, "file0");
  EXPECT_TRUE(r.rows[0].gap_percent);
  EXPECT_GE(*r.rows[0].gap_percent, -1e-9);
  EXPECT_FALSE(r.rows[2].gap_percent);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Outputs, FilesAndCostsAreReverifiable) {
  const auto dir = fresh_dir("out");
  auto spec = spec_from(R"({
    "seed": 2,
    "instances": {"generate": {"n": 10, "count": 2}},
    "methods": [{"type": "construct", "method": ["nearest_sequential", "savings_parallel"]},
                {"type": "decode", "pomo": 5}]
  })");
  spec.out_dir = dir;
  const auto r = run_experiment(spec);
  write_outputs(spec, r);
  for (const char* f : {"results.csv", "solutions.jsonl", "timings.csv", "summary.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  EXPECT_EQ(line_count(dir / "results.csv"), 7u);
  EXPECT_EQ(line_count(dir / "timings.csv"), 7u);

  // regenerate the instances and re-evaluate every dumped solution
  std::vector<Instance> instances;
  for (std::size_t i = 0; i < 2; ++i) {
    GenConfig g = GenConfig::for_size(10, instance_seed(2, i));
    instances.push_back(generate(g));
  }
  std::ifstream in(dir / "solutions.jsonl");
  std::size_t checked = 0;
  for (std::string line; std::getline(in, line);) {
    const json j = json::parse(line);
    const Instance* inst = nullptr;
    for (const auto& candidate : instances)
      if (candidate.name() == j["instance"].get<std::string>()) inst = &candidate;
    ASSERT_NE(inst, nullptr) << j["instance"];
    const auto routes = j["routes"].get<std::vector<std::vector<int>>>();
    ASSERT_TRUE(check_feasible(*inst, routes));
    EXPECT_NEAR(evaluate_cost(*inst, routes), j["cost"].get<double>(), 1e-12);
    ++checked;
  }
  EXPECT_EQ(checked, 6u);

  const json summary = json::parse(std::ifstream(dir / "summary.json"));
  EXPECT_EQ(summary["rows"].get<int>(), 6);
  EXPECT_EQ(summary["methods"].size(), 3u);
}

TEST(Outputs, JsonlFormat) {
  auto spec = spec_from(R"({"instances": {"generate": {"n": 6, "count": 2}}, "methods": [{"type": "construct"}]})");
  std::ostringstream out;
  write_results_jsonl(run_experiment(spec).rows, out);
  std::istringstream in(out.str());
  int n = 0;
  for (std::string line; std::getline(in, line); ++n) EXPECT_EQ(json::parse(line)["status"], "ok");
  EXPECT_EQ(n, 2);
}

TEST(PlotData, OneRowPerDistinctX) {
  const auto dir = fresh_dir("plots");
  auto spec = spec_from(R"({
    "seed": 3,
    "instances": {"generate": {"n": 20, "count": 10}},
    "methods": [{"type": "rrc", "iterations": [5, 20, 80], "accept": "greedy", "seg_min": 3, "seg_max": 10}]
  })");
  const auto r = run_experiment(spec);
  const auto plots = emit_plot_data(r.rows, GroupBy::family, dir);
  ASSERT_EQ(plots.files.size(), 1u);
  EXPECT_TRUE(plots.warnings.empty());
  std::ifstream in(plots.files[0]);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,mean_cost,stderr,count");
  std::vector<double> means;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string x, mean;
    std::getline(fields, x, ',');
    std::getline(fields, mean, ',');
    means.push_back(std::stod(mean));
  }
  ASSERT_EQ(means.size(), 3u);
  EXPECT_LE(means[2], means[0]);

  const auto by_method = emit_plot_data(r.rows, GroupBy::method, dir / "m");
  ASSERT_EQ(by_method.files.size(), 1u);
  EXPECT_EQ(line_count(by_method.files[0]), 4u);
}

TEST(PlotData, FailedGroupIsOmittedWithWarning) {
  const auto dir = fresh_dir("plots_fail");
  auto spec = spec_from(R"({
    "instances": {"generate": {"n": 5, "count": 2}},
    "methods": [{"type": "construct"}, {"type": "decode", "pomo": 8}]
  })");
  const auto plots = emit_plot_data(run_experiment(spec).rows, GroupBy::family, dir);
  EXPECT_EQ(plots.files.size(), 1u);
  EXPECT_EQ(plots.warnings.size(), 1u);
  EXPECT_THROW(emit_plot_data({}, GroupBy::family, dir), PreconditionError);
}
