// cvrplab command line: instance generation, solving, decoding, re-construction,
// toy training, brute force and experiment matrices.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cvrplab/augment.hpp"
#include "cvrplab/bench.hpp"
#include "cvrplab/construct.hpp"
#include "cvrplab/decode.hpp"
#include "cvrplab/errors.hpp"
#include "cvrplab/instances.hpp"
#include "cvrplab/neural.hpp"
#include "cvrplab/oracle.hpp"
#include "cvrplab/rrc.hpp"
#include "cvrplab/train.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace cvrplab;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Root random seed");
  cmd->add_option("--out", c.out, "Output file (default: stdout)");
  cmd->add_option("--format", c.format, "Record format")->check(CLI::IsMember({"csv", "jsonl"}));
}

std::string cell(const ojson& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

// Records share their key order; CSV takes the header from the first one.
void emit(const Common& c, const std::vector<ojson>& records) {
  std::ofstream file;
  if (!c.out.empty()) {
    file.open(c.out);
    if (!file) throw std::runtime_error("cannot write " + c.out);
  }
  std::ostream& out = c.out.empty() ? std::cout : file;
  if (c.format == "jsonl") {
    for (const auto& r : records) out << r.dump() << '\n';
    return;
  }
  if (records.empty()) return;
  bool first = true;
  for (const auto& [key, _] : records.front().items()) {
    out << (first ? "" : ",") << key;
    first = false;
  }
  out << '\n';
  for (const auto& r : records) {
    first = true;
    for (const auto& [_, v] : r.items()) {
      std::string s = cell(v);
      if (s.find_first_of(",\"") != std::string::npos) {
        std::string q = "\"";
        for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        s = q + "\"";
      }
      out << (first ? "" : ",") << s;
      first = false;
    }
    out << '\n';
  }
}

// "1 2 3|4 5" in CSV, nested arrays in JSONL.
ojson routes_value(const Common& c, const Solution& s) {
  if (c.format == "jsonl") {
    ojson arr = ojson::array();
    for (const auto& r : s.routes) arr.push_back(r);
    return arr;
  }
  std::string text;
  for (std::size_t i = 0; i < s.routes.size(); ++i) {
    if (i) text += '|';
    for (std::size_t j = 0; j < s.routes[i].size(); ++j) text += (j ? " " : "") + std::to_string(s.routes[i][j]);
  }
  return text;
}

ojson solution_record(const Common& c, const Instance& inst, const std::string& method, const Solution& s,
                      const std::string& reference_csv) {
  ojson r;
  r["instance"] = inst.name();
  r["method"] = method;
  r["seed"] = c.seed;
  r["cost"] = s.cost;
  r["routes_count"] = s.routes.size();
  ojson gap;
  if (!reference_csv.empty()) {
    const ReferenceSet refs = load_references(reference_csv);
    for (const auto& w : refs.warnings) std::cerr << "warning: " << w << '\n';
    if (const double* ref = refs.find(inst.name()))
      gap = optimality_gap(s.cost, *ref).gap_percent;
    else
      std::cerr << "warning: no reference for " << inst.name() << '\n';
  }
  r["gap_percent"] = gap;
  r["routes"] = routes_value(c, s);
  return r;
}

struct PolicyFlags {
  PolicySpec spec;
  void add(CLI::App* cmd) {
    cmd->add_option("--policy", spec.kind, "distance or neural")->check(CLI::IsMember({"distance", "neural"}));
    cmd->add_option("--scale", spec.distance_scale, "Distance policy logit scale");
    cmd->add_option("--checkpoint", spec.checkpoint, "Neural weights file")->check(CLI::ExistingFile);
    cmd->add_option("--init-seed", spec.init_seed, "Seed of random neural weights when no checkpoint is given");
  }
};

struct DecodeFlags {
  std::string strategy = "argmax";
  int pomo = 0;
  int beam = 4;
  double epsilon = 0.1;
  double temperature = 1.0;
  void add(CLI::App* cmd) {
    cmd->add_option("--strategy", strategy, "argmax, softmax, gumbel, epsilon or beam")
        ->check(CLI::IsMember({"argmax", "softmax", "gumbel", "epsilon", "beam"}));
    cmd->add_option("--pomo", pomo, "Start nodes, 0 = every customer");
    cmd->add_option("--beam", beam, "Beam width for --strategy beam");
    cmd->add_option("--epsilon", epsilon, "Epsilon-greedy exploration rate");
    cmd->add_option("--temperature", temperature, "Gumbel temperature");
  }
  DecodeConfig config(std::uint64_t seed, const Instance& inst) const {
    DecodeConfig d;
    d.strategy = *parse_strategy(strategy);
    d.pomo_size = pomo == 0 ? inst.size() : pomo;
    d.beam_size = d.strategy == Strategy::beam ? beam : 1;
    d.epsilon = epsilon;
    d.temperature = temperature;
    d.seed = seed;
    return d;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cvrplab: capacitated vehicle routing lab"};
  app.require_subcommand(1);

  // gen
  Common gen_c;
  int gen_n = 20, gen_count = 1;
  std::optional<double> gen_capacity;
  std::string gen_dir, gen_instance_format = "native";
  auto* gen = app.add_subcommand("gen", "Generate random instances");
  add_common(gen, gen_c);
  gen->add_option("-n,--customers", gen_n, "Customers per instance")->check(CLI::PositiveNumber);
  gen->add_option("--count", gen_count, "Number of instances")->check(CLI::PositiveNumber);
  gen->add_option("--capacity", gen_capacity, "Vehicle capacity (default by size)");
  gen->add_option("--dir", gen_dir, "Directory for instance files")->required();
  gen->add_option("--instance-format", gen_instance_format)->check(CLI::IsMember({"native", "vrplib"}));

  // solve
  Common solve_c;
  std::string solve_instance, solve_method = "savings_parallel", solve_ref;
  bool solve_ls = false;
  bool solve_round = false;
  auto* solve = app.add_subcommand("solve", "Construction heuristic, optionally followed by local search");
  add_common(solve, solve_c);
  solve->add_option("--instance", solve_instance)->required()->check(CLI::ExistingFile);
  solve->add_option("--method", solve_method,
                    "nearest_sequential, nearest_parallel, insertion, savings_parallel, savings_sequential, sweep");
  solve->add_flag("--local-search", solve_ls, "Run local search with every operator");
  solve->add_option("--reference", solve_ref, "CSV of name,cost reference values");
  solve->add_flag("--round", solve_round, "Round VRPLIB distances");

  // decode
  Common dec_c;
  std::string dec_instance, dec_augment = "none", dec_ref;
  bool dec_round = false;
  PolicyFlags dec_policy;
  DecodeFlags dec_flags;
  auto* dec = app.add_subcommand("decode", "Policy rollouts, beam search and augmentation");
  add_common(dec, dec_c);
  dec->add_option("--instance", dec_instance)->required()->check(CLI::ExistingFile);
  dec_policy.add(dec);
  dec_flags.add(dec);
  dec->add_option("--augment", dec_augment)
      ->check(CLI::IsMember({"none", "fold2", "fold4", "fold8_flip", "fold8_rotation"}));
  dec->add_option("--reference", dec_ref, "CSV of name,cost reference values");
  dec->add_flag("--round", dec_round, "Round VRPLIB distances");

  // rrc
  Common rrc_c;
  std::string rrc_instance, rrc_trace, rrc_accept = "sa", rrc_ref;
  bool rrc_round = false;
  PolicyFlags rrc_policy;
  RrcConfig rrc_cfg;
  std::optional<double> rrc_t0;
  auto* rrc = app.add_subcommand("rrc", "Random re-construction from the greedy rollout");
  add_common(rrc, rrc_c);
  rrc->add_option("--instance", rrc_instance)->required()->check(CLI::ExistingFile);
  rrc_policy.add(rrc);
  rrc->add_option("--iterations", rrc_cfg.iterations);
  rrc->add_option("--accept", rrc_accept)->check(CLI::IsMember({"greedy", "sa"}));
  rrc->add_option("--t0", rrc_t0, "Initial temperature (default 1% of the initial cost)");
  rrc->add_option("--cooling", rrc_cfg.cooling);
  rrc->add_option("--seg-min", rrc_cfg.seg_min);
  rrc->add_option("--seg-max", rrc_cfg.seg_max);
  rrc->add_option("--trace", rrc_trace, "Write the iteration trace as CSV");
  rrc->add_option("--reference", rrc_ref, "CSV of name,cost reference values");
  rrc->add_flag("--round", rrc_round, "Round VRPLIB distances");

  // train-toy
  Common train_c;
  TrainConfig train_cfg;
  std::string train_mode = "supervised", train_ckpt, train_init;
  NetworkShape train_shape;
  auto* train = app.add_subcommand("train-toy", "Train the toy attention policy on generated instances");
  add_common(train, train_c);
  train->add_option("--mode", train_mode)->check(CLI::IsMember({"supervised", "reinforce"}));
  train->add_option("-n,--customers", train_cfg.n);
  train->add_option("--steps", train_cfg.steps);
  train->add_option("--batch", train_cfg.batch);
  train->add_option("--lr", train_cfg.learning_rate);
  train->add_option("--pomo", train_cfg.pomo_size, "Rollouts per instance, 0 = n");
  train->add_option("--embed-dim", train_shape.embed_dim);
  train->add_option("--heads", train_shape.heads);
  train->add_option("--layers", train_shape.decoder_layers);
  train->add_option("--ff-dim", train_shape.ff_dim);
  train->add_option("--init", train_init, "Start from this checkpoint")->check(CLI::ExistingFile);
  train->add_option("--save", train_ckpt, "Checkpoint output path")->required();

  // oracle
  Common oracle_c;
  std::string oracle_instance;
  int oracle_limit = 9;
  auto* oracle = app.add_subcommand("oracle", "Exact optimum by brute force (n <= 9)");
  add_common(oracle, oracle_c);
  oracle->add_option("--instance", oracle_instance)->required()->check(CLI::ExistingFile);
  oracle->add_option("--limit", oracle_limit);

  // bench
  Common bench_c;
  std::string bench_spec;
  std::optional<int> bench_workers;
  auto* bench = app.add_subcommand("bench", "Run an experiment matrix from a JSON spec");
  add_common(bench, bench_c);
  bench->add_option("--spec", bench_spec)->required()->check(CLI::ExistingFile);
  bench->add_option("--workers", bench_workers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      fs::create_directories(gen_dir);
      std::vector<ojson> rows;
      const auto fmt = gen_instance_format == "native" ? InstanceFormat::native : InstanceFormat::vrplib;
      for (int i = 0; i < gen_count; ++i) {
        GenConfig g = GenConfig::for_size(gen_n, instance_seed(gen_c.seed, static_cast<std::size_t>(i)));
        if (gen_capacity) g.capacity = *gen_capacity;
        const Instance inst = generate(g);
        const fs::path path = fs::path(gen_dir) / (inst.name() + (fmt == InstanceFormat::native ? ".cvrp" : ".vrp"));
        write_instance(inst, path, fmt);
        ojson r;
        r["instance"] = inst.name();
        r["customers"] = inst.size();
        r["capacity"] = inst.capacity();
        r["path"] = path.string();
        rows.push_back(std::move(r));
      }
      emit(gen_c, rows);
      return 0;
    }

    if (*solve) {
      const Instance inst = read_instance(solve_instance, {solve_round});
      MethodSpec m;
      const auto cm = parse_construct_method(solve_method);
      if (!cm) throw SpecError("unknown method " + solve_method);
      m.construct = *cm;
      m.local_search = solve_ls;
      const Solution s = run_method(m, nullptr, inst, solve_c.seed);
      emit(solve_c, {solution_record(solve_c, inst, solve_method + (solve_ls ? "+ls" : ""), s, solve_ref)});
      return 0;
    }

    if (*dec) {
      const Instance inst = read_instance(dec_instance, {dec_round});
      const auto policy = make_policy(dec_policy.spec);
      const DecodeConfig cfg = dec_flags.config(dec_c.seed, inst);
      const AugmentResult res = augment_solve(*policy, inst, make_transforms(*parse_augment_kind(dec_augment)), cfg);
      for (const auto& run : res.runs)
        if (!run.error.empty()) std::cerr << "warning: transform " << run.label << " failed: " << run.error << '\n';
      const std::string label = dec_policy.spec.kind + "/" + dec_flags.strategy + "/aug=" + dec_augment;
      emit(dec_c, {solution_record(dec_c, inst, label, res.best, dec_ref)});
      return 0;
    }

    if (*rrc) {
      const Instance inst = read_instance(rrc_instance, {rrc_round});
      const auto policy = make_policy(rrc_policy.spec);
      rrc_cfg.accept = *parse_accept_mode(rrc_accept);
      rrc_cfg.t0 = rrc_t0;
      rrc_cfg.seed = rrc_c.seed;
      DecodeConfig greedy;
      const Solution initial = decode(*policy, inst, greedy).best_trajectory().solution;
      const RrcResult res = rrc_run(*policy, inst, initial, rrc_cfg);
      if (!rrc_trace.empty()) {
        std::ofstream t(rrc_trace);
        if (!t) throw std::runtime_error("cannot write " + rrc_trace);
        write_trace_csv(res.trace, t);
      }
      emit(rrc_c, {solution_record(rrc_c, inst, "rrc-" + rrc_accept, res.best, rrc_ref)});
      return 0;
    }

    if (*train) {
      train_cfg.mode = *parse_train_mode(train_mode);
      train_cfg.seed = train_c.seed;
      PolicyParams init = train_init.empty() ? PolicyParams::init(train_shape, derive_seed(train_c.seed, {3}))
                                             : load_checkpoint(fs::path(train_init));
      const TrainResult res = train_toy(std::move(init), train_cfg);
      save_checkpoint(res.params, fs::path(train_ckpt));
      std::vector<ojson> rows;
      for (const auto& l : res.log) {
        ojson r;
        r["step"] = l.step;
        r["loss"] = l.loss;
        r["mean_cost"] = l.mean_cost;
        rows.push_back(std::move(r));
      }
      emit(train_c, rows);
      return 0;
    }

    if (*oracle) {
      const Instance inst = read_instance(oracle_instance);
      const OracleResult res = brute_force_optimum(inst, oracle_limit);
      ojson r = solution_record(oracle_c, inst, "oracle", res.solution, "");
      r.erase("gap_percent");
      r["enumerated"] = res.enumerated;
      emit(oracle_c, {r});
      return 0;
    }

    if (*bench) {
      ExperimentSpec spec = load_spec(bench_spec);
      if (bench->count("--seed")) spec.seed = bench_c.seed;
      if (!bench_c.out.empty()) spec.out_dir = bench_c.out;
      if (bench->count("--format")) spec.format = bench_c.format == "csv" ? OutputFormat::csv : OutputFormat::jsonl;
      if (bench_workers) spec.workers = *bench_workers;
      const ExperimentResult res = run_experiment(spec);
      write_outputs(spec, res);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& s : res.summary) {
        std::cout << s.method << ": mean cost " << format_double(s.mean_cost);
        if (s.mean_gap_percent) std::cout << ", mean gap " << format_double(*s.mean_gap_percent) << "%";
        if (s.failures) std::cout << ", " << s.failures << " failed";
        std::cout << '\n';
      }
      return res.partial_failure() ? 2 : 0;
    }
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
