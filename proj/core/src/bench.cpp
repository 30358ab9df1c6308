#include "cvrplab/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "json.hpp"

#include "cvrplab/errors.hpp"
#include "cvrplab/improve.hpp"
#include "cvrplab/instances.hpp"
#include "cvrplab/neural.hpp"
#include "cvrplab/oracle.hpp"
#include "cvrplab/rng.hpp"

namespace cvrplab {

using nlohmann::json;

namespace {

// ---- spec parsing -------------------------------------------------------

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw SpecError("unknown key '" + key + "' in " + where);
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw SpecError(std::string("bad value for '") + key + "': " + e.what());
  }
}

// Every array-valued field becomes one axis of a cartesian product.
std::vector<json> expand(const json& method) {
  std::vector<json> out{json::object()};
  for (const auto& [key, value] : method.items()) {
    std::vector<json> next;
    if (value.is_array()) {
      if (value.empty()) throw SpecError("empty list for '" + key + "'");
      for (const json& partial : out)
        for (const json& v : value) {
          json copy = partial;
          copy[key] = v;
          next.push_back(std::move(copy));
        }
    } else {
      for (json partial : out) {
        partial[key] = value;
        next.push_back(std::move(partial));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

PolicySpec parse_policy(const json& j, const std::filesystem::path& base) {
  PolicySpec p;
  if (j.is_null()) return p;
  if (j.is_string()) {
    p.kind = j.get<std::string>();
  } else if (j.is_object()) {
    check_keys(j, {"kind", "scale", "checkpoint", "init_seed"}, "policy");
    p.kind = get_or<std::string>(j, "kind", "distance");
    p.distance_scale = get_or<double>(j, "scale", 0.1);
    const auto ckpt = get_or<std::string>(j, "checkpoint", "");
    if (!ckpt.empty()) p.checkpoint = resolve(base, ckpt).string();
    p.init_seed = get_or<std::uint64_t>(j, "init_seed", 0);
  } else {
    throw SpecError("policy must be a string or an object");
  }
  if (p.kind != "distance" && p.kind != "neural") throw SpecError("unknown policy '" + p.kind + "'");
  return p;
}

std::string policy_label(const PolicySpec& p) { return p.kind; }

std::string strategy_label(const DecodeConfig& d) {
  switch (d.strategy) {
    case Strategy::beam:
      return "beam" + std::to_string(d.beam_size);
    case Strategy::epsilon_greedy:
      return "epsilon" + format_double(d.epsilon);
    case Strategy::gumbel_softmax:
      return "gumbel" + format_double(d.temperature);
    default:
      return std::string(to_string(d.strategy));
  }
}

DecodeConfig parse_decode_fields(const json& m) {
  DecodeConfig d;
  const auto strategy = get_or<std::string>(m, "strategy", "argmax");
  const auto s = parse_strategy(strategy);
  if (!s) throw SpecError("unknown strategy '" + strategy + "'");
  d.strategy = *s;
  d.pomo_size = get_or<int>(m, "pomo", 0);
  d.beam_size = get_or<int>(m, "beam", d.strategy == Strategy::beam ? 4 : 1);
  d.epsilon = get_or<double>(m, "epsilon", 0.1);
  d.temperature = get_or<double>(m, "temperature", 1.0);
  if (d.pomo_size < 0) throw SpecError("pomo must be >= 0 (0 = one start per customer)");
  if (d.beam_size < 1) throw SpecError("beam must be >= 1");
  if (!(d.epsilon >= 0.0 && d.epsilon <= 1.0)) throw SpecError("epsilon must be in [0, 1]");
  if (!(d.temperature > 0.0)) throw SpecError("temperature must be positive");
  return d;
}

MethodSpec parse_method(const json& m, const std::filesystem::path& base, bool expanded) {
  const auto type = get_or<std::string>(m, "type", "");
  MethodSpec spec;
  if (type == "construct") {
    check_keys(m, {"type", "id", "method", "local_search"}, "construct method");
    const auto name = get_or<std::string>(m, "method", "savings_parallel");
    const auto c = parse_construct_method(name);
    if (!c) throw SpecError("unknown construction method '" + name + "'");
    spec.kind = MethodKind::construct;
    spec.construct = *c;
    spec.local_search = get_or<bool>(m, "local_search", false);
    spec.id = std::string(to_string(*c)) + (spec.local_search ? "+ls" : "");
    spec.group = "construct";
    spec.x = spec.id;
  } else if (type == "decode") {
    check_keys(m, {"type", "id", "policy", "strategy", "pomo", "beam", "augment", "epsilon", "temperature"},
               "decode method");
    spec.kind = MethodKind::decode;
    spec.policy = parse_policy(m.value("policy", json()), base);
    spec.decode = parse_decode_fields(m);
    const auto aug = get_or<std::string>(m, "augment", "none");
    const auto a = parse_augment_kind(aug);
    if (!a) throw SpecError("unknown augmentation '" + aug + "'");
    spec.augment = *a;
    const std::string pomo = spec.decode.pomo_size == 0 ? "n" : std::to_string(spec.decode.pomo_size);
    spec.id = policy_label(spec.policy) + "/" + strategy_label(spec.decode) + "/pomo=" + pomo + "/aug=" + aug;
    spec.group = "decode-aug-" + aug;
    spec.x = strategy_label(spec.decode);
  } else if (type == "rrc") {
    check_keys(m, {"type", "id", "policy", "iterations", "accept", "t0", "cooling", "seg_min", "seg_max", "strategy",
                   "pomo", "epsilon", "temperature"},
               "rrc method");
    spec.kind = MethodKind::rrc;
    spec.policy = parse_policy(m.value("policy", json()), base);
    json initial = m;
    initial.erase("strategy");
    spec.decode = parse_decode_fields(initial);
    spec.decode.pomo_size = get_or<int>(m, "pomo", 1);
    spec.rrc.iterations = get_or<int>(m, "iterations", 100);
    const auto accept_name = get_or<std::string>(m, "accept", "sa");
    const auto mode = parse_accept_mode(accept_name);
    if (!mode) throw SpecError("unknown accept mode '" + accept_name + "'");
    spec.rrc.accept = *mode;
    if (m.contains("t0")) spec.rrc.t0 = get_or<double>(m, "t0", 0.0);
    spec.rrc.cooling = get_or<double>(m, "cooling", 0.99);
    spec.rrc.seg_min = get_or<int>(m, "seg_min", 4);
    spec.rrc.seg_max = get_or<int>(m, "seg_max", 50);
    const auto redecode = get_or<std::string>(m, "strategy", "argmax");
    const auto s = parse_strategy(redecode);
    if (!s || *s == Strategy::beam) throw SpecError("rrc strategy must be argmax, softmax, gumbel or epsilon");
    spec.rrc.strategy = *s;
    spec.rrc.epsilon = spec.decode.epsilon;
    spec.rrc.temperature = spec.decode.temperature;
    try {
      spec.rrc.validate();
    } catch (const PreconditionError& e) {
      throw SpecError(std::string("rrc method: ") + e.what());
    }
    spec.id = policy_label(spec.policy) + "/rrc-" + std::string(to_string(*mode)) + "/i=" +
              std::to_string(spec.rrc.iterations);
    spec.group = "rrc-" + std::string(to_string(*mode));
    spec.x = std::to_string(spec.rrc.iterations);
  } else {
    throw SpecError("method type must be construct, decode or rrc (got '" + type + "')");
  }
  if (m.contains("id")) {
    if (expanded) throw SpecError("an explicit id cannot be combined with list-valued fields");
    spec.id = get_or<std::string>(m, "id", spec.id);
  }
  return spec;
}

ExperimentSpec parse_spec_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw SpecError("spec must be a JSON object");
  check_keys(j, {"name", "seed", "instances", "reference", "repetitions", "methods", "output", "workers"}, "spec");
  ExperimentSpec spec;
  spec.name = get_or<std::string>(j, "name", spec.name);
  spec.seed = get_or<std::uint64_t>(j, "seed", 0);
  spec.repetitions = get_or<int>(j, "repetitions", 1);
  spec.workers = get_or<int>(j, "workers", 1);

  const json inst = j.value("instances", json::object());
  if (!inst.is_object()) throw SpecError("instances must be an object");
  check_keys(inst, {"generate", "directory", "round"}, "instances");
  if (inst.contains("directory")) {
    if (inst.contains("generate")) throw SpecError("instances: give either generate or directory");
    spec.instance_dir = resolve(base, get_or<std::string>(inst, "directory", ""));
    spec.round_distances = get_or<bool>(inst, "round", false);
  } else {
    const json gen = inst.value("generate", json::object());
    check_keys(gen, {"n", "count", "capacity"}, "instances.generate");
    spec.gen_n = get_or<int>(gen, "n", spec.gen_n);
    spec.gen_count = get_or<int>(gen, "count", spec.gen_count);
    if (gen.contains("capacity")) spec.gen_capacity = get_or<double>(gen, "capacity", 0.0);
  }

  if (j.contains("reference")) {
    const json& ref = j["reference"];
    if (ref.is_string()) {
      const auto r = ref.get<std::string>();
      if (r == "none")
        spec.reference = ReferenceKind::none;
      else if (r == "oracle")
        spec.reference = ReferenceKind::oracle;
      else
        throw SpecError("reference must be none, oracle or {\"csv\": path}");
    } else if (ref.is_object() && ref.contains("csv")) {
      check_keys(ref, {"csv"}, "reference");
      spec.reference = ReferenceKind::csv;
      spec.reference_csv = resolve(base, get_or<std::string>(ref, "csv", ""));
    } else {
      throw SpecError("reference must be none, oracle or {\"csv\": path}");
    }
  }

  if (j.contains("output")) {
    const json& out = j["output"];
    check_keys(out, {"dir", "format"}, "output");
    if (out.contains("dir")) spec.out_dir = resolve(base, get_or<std::string>(out, "dir", ""));
    const auto fmt = get_or<std::string>(out, "format", "csv");
    if (fmt == "csv")
      spec.format = OutputFormat::csv;
    else if (fmt == "jsonl")
      spec.format = OutputFormat::jsonl;
    else
      throw SpecError("output format must be csv or jsonl");
  }

  const json methods = j.value("methods", json::array());
  if (!methods.is_array()) throw SpecError("methods must be a list");
  for (const json& m : methods) {
    if (!m.is_object()) throw SpecError("each method must be an object");
    const auto variants = expand(m);
    for (const json& v : variants) spec.methods.push_back(parse_method(v, base, variants.size() > 1));
  }
  spec.validate();
  return spec;
}

// ---- output helpers -----------------------------------------------------

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return out;
}

json routes_json(const Solution& s) {
  json routes = json::array();
  for (const auto& r : s.routes) routes.push_back(r);
  return routes;
}

std::vector<Instance> load_instances(const ExperimentSpec& spec, std::vector<std::string>& warnings) {
  std::vector<Instance> out;
  if (spec.instance_dir.empty()) {
    for (int i = 0; i < spec.gen_count; ++i) {
      GenConfig g = GenConfig::for_size(spec.gen_n, instance_seed(spec.seed, static_cast<std::size_t>(i)));
      if (spec.gen_capacity) g.capacity = *spec.gen_capacity;
      out.push_back(generate(g));
    }
    return out;
  }
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(spec.instance_dir, ec))
    if (entry.is_regular_file()) files.push_back(entry.path());
  if (ec) throw SpecError("cannot list " + spec.instance_dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  std::set<std::string> names;
  ReadOptions opts;
  opts.round_vrplib_distances = spec.round_distances;
  for (const auto& f : files) {
    try {
      out.push_back(read_instance(f, opts));
    } catch (const std::exception& e) {
      throw SpecError("instance " + f.string() + ": " + e.what());
    }
    if (!names.insert(out.back().name()).second) warnings.push_back("duplicate instance name " + out.back().name());
  }
  if (out.empty()) throw SpecError("no instances in " + spec.instance_dir.string());
  return out;
}

}  // namespace

// ---- public API -----------------------------------------------------------

void ExperimentSpec::validate() const {
  if (methods.empty()) throw SpecError("spec lists no methods");
  if (repetitions < 1) throw SpecError("repetitions must be >= 1");
  if (workers < 1) throw SpecError("workers must be >= 1");
  if (instance_dir.empty()) {
    if (gen_n < 1 || gen_count < 1) throw SpecError("generate needs n >= 1 and count >= 1");
    if (reference == ReferenceKind::oracle && gen_n > 9) throw SpecError("oracle reference needs n <= 9");
  }
  std::set<std::string> ids;
  for (const auto& m : methods)
    if (!ids.insert(m.id).second) throw SpecError("duplicate method id '" + m.id + "'");
}

ExperimentSpec parse_spec(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("spec is not valid JSON: ") + e.what());
  }
  return parse_spec_json(j, {});
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("spec is not valid JSON: ") + e.what());
  }
  return parse_spec_json(j, path.parent_path());
}

std::uint64_t instance_seed(std::uint64_t root, std::size_t instance) { return derive_seed(root, {0, instance}); }

std::uint64_t run_seed(std::uint64_t root, std::size_t rep, std::size_t instance, std::size_t method) {
  return derive_seed(root, {1, rep, instance, method});
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec) {
  if (spec.kind == "distance") return std::make_unique<DistanceHeuristicPolicy>(spec.distance_scale);
  if (spec.kind == "neural") {
    auto params = spec.checkpoint.empty()
                      ? std::make_shared<const PolicyParams>(PolicyParams::init(NetworkShape{}, spec.init_seed))
                      : std::make_shared<const PolicyParams>(load_checkpoint(std::filesystem::path(spec.checkpoint)));
    return std::make_unique<NeuralPolicy>(std::move(params));
  }
  throw SpecError("unknown policy '" + spec.kind + "'");
}

Solution run_method(const MethodSpec& method, const Policy* policy, const Instance& instance, std::uint64_t seed) {
  if (method.kind == MethodKind::construct) {
    ConstructConfig cfg;
    cfg.method = method.construct;
    Solution s = construct(instance, cfg);
    if (method.local_search) s = local_search(instance, s, SearchConfig{}).solution;
    return s;
  }
  if (!policy) throw PreconditionError("method needs a policy");
  DecodeConfig d = method.decode;
  d.seed = seed;
  if (d.pomo_size == 0) d.pomo_size = instance.size();
  if (method.kind == MethodKind::decode) return augment_solve(*policy, instance, make_transforms(method.augment), d).best;

  const Solution initial = decode(*policy, instance, d).best_trajectory().solution;
  RrcConfig rc = method.rrc;
  rc.seed = derive_seed(seed, {2});
  return rrc_run(*policy, instance, initial, rc).best;
}

bool ExperimentResult::partial_failure() const {
  return std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.ok; });
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  const std::vector<Instance> instances = load_instances(spec, result.warnings);

  std::vector<std::optional<double>> references(instances.size());
  if (spec.reference == ReferenceKind::oracle) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (instances[i].size() > 9) throw SpecError("oracle reference needs n <= 9 (" + instances[i].name() + ")");
      references[i] = brute_force_optimum(instances[i]).cost;
    }
  } else if (spec.reference == ReferenceKind::csv) {
    ReferenceSet refs;
    try {
      refs = load_references(spec.reference_csv);
    } catch (const std::exception& e) {
      throw SpecError(std::string("reference csv: ") + e.what());
    }
    for (const auto& w : refs.warnings) result.warnings.push_back(w);
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (const double* c = refs.find(instances[i].name()))
        references[i] = *c;
      else
        result.warnings.push_back("no reference for " + instances[i].name());
    }
  }

  std::vector<std::unique_ptr<Policy>> policies;
  for (const auto& m : spec.methods) {
    if (m.kind == MethodKind::construct) {
      policies.push_back(nullptr);
      continue;
    }
    try {
      policies.push_back(make_policy(m.policy));
    } catch (const SpecError&) {
      throw;
    } catch (const std::exception& e) {
      throw SpecError("method " + m.id + ": " + e.what());
    }
  }

  const std::size_t n_methods = spec.methods.size();
  const auto reps = static_cast<std::size_t>(spec.repetitions);
  result.rows.resize(instances.size() * n_methods * reps);

  auto run_cell = [&](std::size_t cell) {
    const std::size_t rep = cell % reps;
    const std::size_t method = (cell / reps) % n_methods;
    const std::size_t inst = cell / (reps * n_methods);
    const MethodSpec& m = spec.methods[method];
    ResultRow& row = result.rows[cell];
    row.instance = instances[inst].name();
    row.method = m.id;
    row.rep = static_cast<int>(rep);
    row.seed = run_seed(spec.seed, rep, inst, method);
    row.group = m.group;
    row.x = m.x;
    row.reference = references[inst];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      row.solution = run_method(m, policies[method].get(), instances[inst], row.seed);
      if (!check_feasible(instances[inst], row.solution)) throw StructuralError("method returned an infeasible solution");
      row.cost = evaluate_cost(instances[inst], row.solution);
      if (!std::isfinite(row.cost)) throw NumericError("non-finite cost");
      if (row.reference) row.gap_percent = optimality_gap(row.cost, *row.reference).gap_percent;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(spec.workers), result.rows.size());
  if (workers <= 1) {
    for (std::size_t c = 0; c < result.rows.size(); ++c) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < result.rows.size(); c = next++) run_cell(c);
      });
    for (auto& t : pool) t.join();
  }

  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    MethodSummary s;
    s.method = spec.methods[mi].id;
    double cost_sum = 0.0, gap_sum = 0.0;
    int gaps = 0;
    for (const auto& row : result.rows) {
      if (row.method != s.method) continue;
      ++s.runs;
      if (!row.ok) {
        ++s.failures;
        continue;
      }
      cost_sum += row.cost;
      if (row.gap_percent) {
        gap_sum += *row.gap_percent;
        ++gaps;
      }
    }
    const int ok = s.runs - s.failures;
    s.mean_cost = ok > 0 ? cost_sum / ok : 0.0;
    if (gaps > 0) s.mean_gap_percent = gap_sum / gaps;
    result.summary.push_back(s);
  }
  return result;
}

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "instance,method,rep,seed,status,cost,reference,gap_percent,error\n";
  for (const auto& r : rows) {
    out << csv_field(r.instance) << ',' << csv_field(r.method) << ',' << r.rep << ',' << r.seed << ','
        << (r.ok ? "ok" : "error") << ',' << (r.ok ? format_double(r.cost) : "") << ','
        << (r.reference ? format_double(*r.reference) : "") << ','
        << (r.gap_percent ? format_double(*r.gap_percent) : "") << ',' << csv_field(r.error) << '\n';
  }
}

void write_results_jsonl(const std::vector<ResultRow>& rows, std::ostream& out) {
  for (const auto& r : rows) {
    json j = {{"instance", r.instance}, {"method", r.method}, {"rep", r.rep}, {"seed", r.seed},
              {"status", r.ok ? "ok" : "error"}};
    j["cost"] = r.ok ? json(r.cost) : json();
    j["reference"] = r.reference ? json(*r.reference) : json();
    j["gap_percent"] = r.gap_percent ? json(*r.gap_percent) : json();
    if (!r.ok) j["error"] = r.error;
    out << j.dump() << '\n';
  }
}

void write_solutions_jsonl(const std::vector<ResultRow>& rows, std::ostream& out) {
  for (const auto& r : rows) {
    if (!r.ok) continue;
    json j = {{"instance", r.instance}, {"method", r.method}, {"rep", r.rep}, {"cost", r.cost},
              {"routes", routes_json(r.solution)}};
    out << j.dump() << '\n';
  }
}

void write_timings_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "instance,method,rep,wall_seconds\n";
  for (const auto& r : rows)
    out << csv_field(r.instance) << ',' << csv_field(r.method) << ',' << r.rep << ',' << r.wall_seconds << '\n';
}

void write_summary_json(const ExperimentSpec& spec, const ExperimentResult& result, std::ostream& out) {
  json methods = json::array();
  for (const auto& s : result.summary) {
    json m = {{"method", s.method}, {"runs", s.runs}, {"failures", s.failures}};
    m["mean_cost"] = s.runs > s.failures ? json(s.mean_cost) : json();
    m["mean_gap_percent"] = s.mean_gap_percent ? json(*s.mean_gap_percent) : json();
    methods.push_back(std::move(m));
  }
  json j = {{"name", spec.name}, {"seed", spec.seed}, {"rows", result.rows.size()},
            {"methods", methods}, {"warnings", result.warnings}};
  out << j.dump(2) << '\n';
}

PlotData emit_plot_data(const std::vector<ResultRow>& rows, GroupBy group_by, const std::filesystem::path& dir) {
  PlotData data;
  if (rows.empty()) throw PreconditionError("no result rows to plot");
  struct Series {
    std::vector<std::string> xs;  // first-appearance order
    std::map<std::string, std::vector<double>> costs;
  };
  std::vector<std::string> group_order;
  std::map<std::string, Series> groups;
  for (const auto& r : rows) {
    const std::string g = group_by == GroupBy::family ? r.group : "all";
    const std::string x = group_by == GroupBy::family ? r.x : r.method;
    if (!groups.count(g)) group_order.push_back(g);
    Series& s = groups[g];
    if (!s.costs.count(x)) s.xs.push_back(x);
    auto& bucket = s.costs[x];
    if (r.ok) bucket.push_back(r.cost);
  }
  std::filesystem::create_directories(dir);
  for (const auto& g : group_order) {
    const Series& s = groups[g];
    const bool any = std::any_of(s.costs.begin(), s.costs.end(), [](const auto& kv) { return !kv.second.empty(); });
    if (!any) {
      data.warnings.push_back("group " + g + " has no successful rows; no series written");
      continue;
    }
    const auto path = dir / (sanitize(g) + ".csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "x,mean_cost,stderr,count\n";
    for (const auto& x : s.xs) {
      const auto& c = s.costs.at(x);
      if (c.empty()) {
        out << csv_field(x) << ",,,0\n";
        continue;
      }
      double mean = 0.0;
      for (double v : c) mean += v;
      mean /= static_cast<double>(c.size());
      double se = 0.0;
      if (c.size() > 1) {
        double ss = 0.0;
        for (double v : c) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / static_cast<double>(c.size() - 1)) / std::sqrt(static_cast<double>(c.size()));
      }
      out << csv_field(x) << ',' << format_double(mean) << ',' << format_double(se) << ',' << c.size() << '\n';
    }
    data.files.push_back(path);
  }
  return data;
}

void write_outputs(const ExperimentSpec& spec, const ExperimentResult& result) {
  std::filesystem::create_directories(spec.out_dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(spec.out_dir / name);
    if (!out) throw std::runtime_error("cannot write " + (spec.out_dir / name).string());
    return out;
  };
  {
    auto out = open(spec.format == OutputFormat::csv ? "results.csv" : "results.jsonl");
    if (spec.format == OutputFormat::csv)
      write_results_csv(result.rows, out);
    else
      write_results_jsonl(result.rows, out);
  }
  {
    auto out = open("solutions.jsonl");
    write_solutions_jsonl(result.rows, out);
  }
  {
    auto out = open("timings.csv");
    write_timings_csv(result.rows, out);
  }
  ExperimentResult copy = result;
  if (std::any_of(result.rows.begin(), result.rows.end(), [](const ResultRow& r) { return r.ok; })) {
    const PlotData plots = emit_plot_data(result.rows, GroupBy::family, spec.out_dir / "plots");
    copy.warnings.insert(copy.warnings.end(), plots.warnings.begin(), plots.warnings.end());
  }
  auto out = open("summary.json");
  write_summary_json(spec, copy, out);
}

}  // namespace cvrplab
