#include "cvrplab/rrc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cvrplab/errors.hpp"
#include "cvrplab/instances.hpp"

namespace cvrplab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string_view to_string(AcceptMode mode) { return mode == AcceptMode::greedy ? "greedy" : "sa"; }

std::optional<AcceptMode> parse_accept_mode(std::string_view name) {
  if (name == "greedy") return AcceptMode::greedy;
  if (name == "sa" || name == "simulated_annealing") return AcceptMode::simulated_annealing;
  return std::nullopt;
}

void RrcConfig::validate() const {
  if (iterations < 0) throw PreconditionError("iterations must be nonnegative");
  if (seg_min < 2) throw PreconditionError("seg_min must be at least 2");
  if (seg_max < seg_min) throw PreconditionError("seg_max must be at least seg_min");
  if (!(cooling > 0.0 && cooling < 1.0)) throw PreconditionError("cooling must be in (0, 1)");
  if (t0 && !(*t0 >= 0.0)) throw PreconditionError("t0 must be nonnegative");
}

Segment sample_segment(std::span<const int> tokens, Rng& rng, int seg_min, int seg_max) {
  if (tokens.size() < 3) throw PreconditionError("tour has no interior tokens");
  const auto interior = static_cast<std::int64_t>(tokens.size() - 2);
  const std::int64_t hi = std::min<std::int64_t>(seg_max, interior);
  const std::int64_t lo = std::min<std::int64_t>(seg_min, hi);
  const std::int64_t len = rng.uniform_int(lo, hi);
  const std::int64_t first = rng.uniform_int(1, interior + 1 - len);
  Segment s;
  s.first = static_cast<std::size_t>(first);
  s.last = static_cast<std::size_t>(first + len);
  s.start = tokens[s.first - 1];
  s.dest = tokens[s.last];
  return s;
}

Reconstruction reconstruct_segment(const BoundPolicy& policy, const Instance& instance, std::span<const int> tokens,
                                   const Segment& segment, const DecodeConfig& config, Rng& rng) {
  if (segment.first < 1 || segment.last >= tokens.size() || segment.first >= segment.last)
    throw PreconditionError("segment outside the tour interior");

  // Load already on the route when the vehicle leaves the left boundary.
  double load_before = 0.0;
  for (std::size_t i = segment.first; i-- > 0 && tokens[i] != 0;) load_before += instance.demand(tokens[i]);
  // Load the right boundary's route still has to pick up before its depot.
  double load_after = 0.0;
  for (std::size_t i = segment.last; i < tokens.size() && tokens[i] != 0; ++i) load_after += instance.demand(tokens[i]);

  DecodeState state = DecodeState::initial(instance);
  std::fill(state.visited.begin(), state.visited.end(), 1);
  state.visited[0] = 0;
  state.unvisited = 0;
  for (std::size_t i = segment.first; i < segment.last; ++i) {
    if (tokens[i] != 0) {
      state.visited[static_cast<std::size_t>(tokens[i])] = 0;
      ++state.unvisited;
    }
  }
  state.current_node = segment.start;
  state.destination = segment.dest;
  state.remaining_load = instance.capacity() - load_before;
  state.partial = {segment.start};

  Reconstruction out;
  try {
    while (state.unvisited > 0) {
      const auto mask = feasible_mask(instance, state);
      const Logits logits = policy.step(state, mask);
      apply_action(instance, state, select_action(config, logits.scores, rng));
    }
  } catch (const DeadEndError&) {
    out.delta = kInf;
    out.tokens.assign(tokens.begin(), tokens.end());
    return out;
  }
  std::vector<int> fresh(state.partial.begin() + 1, state.partial.end());
  if (segment.dest != 0 && state.current_node != 0 && state.remaining_load < load_after) fresh.push_back(0);

  std::vector<int> old_path(tokens.begin() + static_cast<std::ptrdiff_t>(segment.first - 1),
                            tokens.begin() + static_cast<std::ptrdiff_t>(segment.last + 1));
  std::vector<int> new_path{segment.start};
  new_path.insert(new_path.end(), fresh.begin(), fresh.end());
  new_path.push_back(segment.dest);
  out.delta = token_path_cost(instance, new_path) - token_path_cost(instance, old_path);

  out.tokens.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(segment.first));
  out.tokens.insert(out.tokens.end(), fresh.begin(), fresh.end());
  out.tokens.insert(out.tokens.end(), tokens.begin() + static_cast<std::ptrdiff_t>(segment.last), tokens.end());
  return out;
}

bool accept(double delta, double temperature, Rng& rng, AcceptMode mode) {
  if (temperature < 0.0) throw PreconditionError("temperature must be nonnegative");
  if (delta < 0.0) return true;
  if (mode == AcceptMode::greedy || temperature == 0.0 || !std::isfinite(delta)) return false;
  return rng.uniform() < std::exp(-delta / temperature);
}

RrcResult rrc_run(const Policy& policy, const Instance& instance, const Solution& initial, const RrcConfig& config) {
  config.validate();
  if (!check_feasible(instance, initial)) throw PreconditionError("initial solution is infeasible");
  const auto bound = policy.bind(instance);
  Rng rng(config.seed);
  DecodeConfig decode_config;
  decode_config.strategy = config.strategy;
  decode_config.epsilon = config.epsilon;
  decode_config.temperature = config.temperature;

  RrcResult result;
  result.incumbent = make_solution(instance, initial.routes);
  result.best = result.incumbent;
  std::vector<int> tokens = to_tokens(result.incumbent);
  const double t0 = config.t0.value_or(0.01 * result.incumbent.cost);
  double temperature = t0;

  for (int k = 0; k < config.iterations; ++k) {
    const Segment seg = sample_segment(tokens, rng, config.seg_min, config.seg_max);
    const Reconstruction rec = reconstruct_segment(*bound, instance, tokens, seg, decode_config, rng);
    RrcTraceRow row;
    row.iteration = k;
    row.delta = rec.delta;
    row.temperature = temperature;
    row.accepted = accept(rec.delta, temperature, rng, config.accept);
    if (row.accepted) {
      result.incumbent = solution_from_tokens(instance, rec.tokens);
      tokens = to_tokens(result.incumbent);
      if (result.incumbent.cost < result.best.cost) result.best = result.incumbent;
    }
    row.incumbent_cost = result.incumbent.cost;
    row.best_cost = result.best.cost;
    result.trace.push_back(row);
    temperature *= config.cooling;
  }
  return result;
}

void write_trace_csv(const std::vector<RrcTraceRow>& trace, std::ostream& out) {
  out << "iteration,delta,temperature,accepted,incumbent_cost,best_cost\n";
  for (const auto& r : trace)
    out << r.iteration << ',' << format_double(r.delta) << ',' << format_double(r.temperature) << ','
        << (r.accepted ? 1 : 0) << ',' << format_double(r.incumbent_cost) << ',' << format_double(r.best_cost) << '\n';
}

}  // namespace cvrplab
