#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvrplab/augment.hpp"
#include "cvrplab/construct.hpp"
#include "cvrplab/core.hpp"
#include "cvrplab/decode.hpp"
#include "cvrplab/rrc.hpp"

namespace cvrplab {

// Invalid experiment description. The CLI maps it to exit code 1.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MethodKind { construct, decode, rrc };

struct PolicySpec {
  std::string kind = "distance";  // distance | neural
  double distance_scale = 0.1;
  std::string checkpoint;         // neural: load weights from here
  std::uint64_t init_seed = 0;    // neural without checkpoint: random weights
};

struct MethodSpec {
  std::string id;
  MethodKind kind = MethodKind::construct;

  ConstructMethod construct = ConstructMethod::savings_parallel;
  bool local_search = false;

  PolicySpec policy;
  DecodeConfig decode;  // pomo_size 0 means one start per customer
  AugmentKind augment = AugmentKind::none;
  RrcConfig rrc;        // rrc starts from the decode result

  // Plot series membership: one series per group, one point per x.
  std::string group;
  std::string x;
};

enum class ReferenceKind { none, oracle, csv };
enum class OutputFormat { csv, jsonl };

struct ExperimentSpec {
  std::string name = "bench";
  std::uint64_t seed = 0;

  // Either generated instances or every file in a directory.
  int gen_n = 20;
  int gen_count = 10;
  std::optional<double> gen_capacity;
  std::filesystem::path instance_dir;
  bool round_distances = false;

  ReferenceKind reference = ReferenceKind::none;
  std::filesystem::path reference_csv;

  int repetitions = 1;
  std::vector<MethodSpec> methods;

  std::filesystem::path out_dir = "bench_out";
  OutputFormat format = OutputFormat::csv;
  int workers = 1;

  // Throws SpecError.
  void validate() const;
};

// JSON experiment description; list-valued method fields expand into the
// cartesian product of methods. Throws SpecError.
ExperimentSpec parse_spec(std::istream& in);
ExperimentSpec load_spec(const std::filesystem::path& path);

// Seed scheme: instance i of a generated set uses derive_seed(root, {0, i});
// run (rep, instance, method) uses derive_seed(root, {1, rep, instance, method}).
std::uint64_t instance_seed(std::uint64_t root, std::size_t instance);
std::uint64_t run_seed(std::uint64_t root, std::size_t rep, std::size_t instance, std::size_t method);

std::unique_ptr<Policy> make_policy(const PolicySpec& spec);

// One method on one instance.
Solution run_method(const MethodSpec& method, const Policy* policy, const Instance& instance, std::uint64_t seed);

struct ResultRow {
  std::string instance;
  std::string method;
  int rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  double cost = 0.0;
  std::optional<double> reference;
  std::optional<double> gap_percent;
  std::string error;
  double wall_seconds = 0.0;
  Solution solution;
  std::string group;
  std::string x;
};

struct MethodSummary {
  std::string method;
  int runs = 0;
  int failures = 0;
  double mean_cost = 0.0;
  std::optional<double> mean_gap_percent;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // instance order, then method order, then repetition
  std::vector<MethodSummary> summary;
  std::vector<std::string> warnings;

  bool partial_failure() const;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Deterministic outputs; wall time only goes to the timings file.
void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void write_results_jsonl(const std::vector<ResultRow>& rows, std::ostream& out);
void write_solutions_jsonl(const std::vector<ResultRow>& rows, std::ostream& out);
void write_timings_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void write_summary_json(const ExperimentSpec& spec, const ExperimentResult& result, std::ostream& out);

enum class GroupBy { family, method };

struct PlotData {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

// One CSV per group (x, mean_cost, stderr, count). family groups by the
// method's plot group, method puts every method in one series. Groups without
// a successful row are skipped with a warning.
PlotData emit_plot_data(const std::vector<ResultRow>& rows, GroupBy group_by, const std::filesystem::path& dir);

// results.{csv,jsonl}, solutions.jsonl, timings.csv, summary.json and plots/
// under spec.out_dir.
void write_outputs(const ExperimentSpec& spec, const ExperimentResult& result);

}  // namespace cvrplab
