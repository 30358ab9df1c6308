#include "cvrplab/decode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "cvrplab/errors.hpp"

namespace cvrplab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

constexpr std::array<std::pair<Strategy, std::string_view>, 5> kStrategyNames{{
    {Strategy::argmax, "argmax"},
    {Strategy::softmax_sample, "softmax"},
    {Strategy::gumbel_softmax, "gumbel"},
    {Strategy::epsilon_greedy, "epsilon"},
    {Strategy::beam, "beam"},
}};

std::size_t unmasked_count(std::span<const double> logits) {
  return static_cast<std::size_t>(std::count_if(logits.begin(), logits.end(), [](double v) { return v != kNegInf; }));
}

void require_unmasked(std::span<const double> logits) {
  if (unmasked_count(logits) == 0) throw DeadEndError("every action is masked");
}

// log softmax(logits)[i], i unmasked.
double log_prob(std::span<const double> logits, int i) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits)
    if (v != kNegInf) total += std::exp(v - top);
  return logits[static_cast<std::size_t>(i)] - top - std::log(total);
}

// Unmasked nodes by descending logit, ties to the lower index.
std::vector<int> ranked_actions(std::span<const double> logits) {
  std::vector<int> order;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (logits[i] != kNegInf) order.push_back(static_cast<int>(i));
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return logits[static_cast<std::size_t>(a)] > logits[static_cast<std::size_t>(b)];
  });
  return order;
}

Trajectory finish(const Instance& instance, int start, std::vector<int> tokens, double logprob) {
  Trajectory t;
  t.start = start;
  t.solution = solution_from_tokens(instance, tokens);
  t.tokens = std::move(tokens);
  t.logprob = logprob;
  return t;
}

void check_pomo_size(const Instance& instance, int pomo_size) {
  if (pomo_size < 1 || pomo_size > instance.size())
    throw PreconditionError("pomo size " + std::to_string(pomo_size) + " must be in [1, " +
                            std::to_string(instance.size()) + "]");
}

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& [value, name] : kStrategyNames)
    if (value == s) return name;
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (const auto& [value, n] : kStrategyNames)
    if (n == name) return value;
  return std::nullopt;
}

int select_argmax(std::span<const double> logits) {
  require_unmasked(logits);
  int best = -1;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (logits[i] != kNegInf && (best < 0 || logits[i] > logits[static_cast<std::size_t>(best)]))
      best = static_cast<int>(i);
  return best;
}

int select_softmax(std::span<const double> logits, Rng& rng) {
  require_unmasked(logits);
  const auto p = softmax(logits);
  const double u = rng.uniform();
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (logits[i] == kNegInf) continue;
    last = static_cast<int>(i);
    acc += p[i];
    if (u < acc) return last;
  }
  return last;
}

int select_gumbel(std::span<const double> logits, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) throw PreconditionError("gumbel temperature must be positive");
  require_unmasked(logits);
  int best = -1;
  double best_score = kNegInf;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i] == kNegInf) continue;
    const double g = -std::log(-std::log(rng.uniform_open()));
    const double score = logits[i] / temperature + g;
    if (best < 0 || score > best_score) {
      best = static_cast<int>(i);
      best_score = score;
    }
  }
  return best;
}

int select_epsilon_greedy(std::span<const double> logits, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw PreconditionError("epsilon must be in [0, 1]");
  require_unmasked(logits);
  if (rng.uniform() < epsilon) {
    auto k = rng.below(unmasked_count(logits));
    for (std::size_t i = 0; i < logits.size(); ++i) {
      if (logits[i] == kNegInf) continue;
      if (k-- == 0) return static_cast<int>(i);
    }
  }
  return select_argmax(logits);
}

int select_action(const DecodeConfig& config, std::span<const double> logits, Rng& rng) {
  switch (config.strategy) {
    case Strategy::argmax:
      return select_argmax(logits);
    case Strategy::softmax_sample:
      return select_softmax(logits, rng);
    case Strategy::gumbel_softmax:
      return select_gumbel(logits, config.temperature, rng);
    case Strategy::epsilon_greedy:
      return select_epsilon_greedy(logits, config.epsilon, rng);
    case Strategy::beam:
      break;
  }
  throw PreconditionError("beam is not a per-step selection strategy");
}

Trajectory rollout(const BoundPolicy& policy, const Instance& instance, std::optional<int> start,
                   const DecodeConfig& config, Rng& rng) {
  DecodeState state = DecodeState::initial(instance);
  if (start) {
    if (*start < 1 || *start > instance.size()) throw PreconditionError("start must be a customer");
    apply_action(instance, state, *start);
  }
  while (!state.complete()) {
    const auto mask = feasible_mask(instance, state);
    const Logits logits = policy.step(state, mask);
    const int action = select_action(config, logits.scores, rng);
    state.logprob += log_prob(logits.scores, action);
    apply_action(instance, state, action);
  }
  return finish(instance, start.value_or(0), std::move(state.partial), state.logprob);
}

RolloutResult pomo_rollout(const Policy& policy, const Instance& instance, int pomo_size, const DecodeConfig& config) {
  check_pomo_size(instance, pomo_size);
  const auto bound = policy.bind(instance);
  RolloutResult result;
  for (int s = 1; s <= pomo_size; ++s) {
    Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(s)}));
    result.trajectories.push_back(rollout(*bound, instance, s, config, rng));
    if (result.trajectories.back().solution.cost < result.trajectories[result.best].solution.cost)
      result.best = result.trajectories.size() - 1;
  }
  return result;
}

BeamResult beam_search(const Policy& policy, const Instance& instance, int pomo_size, int beam_size) {
  check_pomo_size(instance, pomo_size);
  if (beam_size < 1) throw PreconditionError("beam size must be at least 1");
  const auto bound = policy.bind(instance);
  const auto width = static_cast<std::size_t>(beam_size);

  struct Beam {
    DecodeState state;
    double score = 0.0;
  };
  struct Candidate {
    std::size_t beam;
    int node;  // -1 keeps a finished beam as it is
    double score;
  };

  BeamResult result;
  for (int s = 1; s <= pomo_size; ++s) {
    std::vector<Beam> beams(1);
    beams[0].state = DecodeState::initial(instance);
    apply_action(instance, beams[0].state, s);

    auto all_done = [&] {
      return std::all_of(beams.begin(), beams.end(), [](const Beam& b) { return b.state.complete(); });
    };
    while (!all_done()) {
      std::vector<Candidate> candidates;
      for (std::size_t k = 0; k < beams.size(); ++k) {
        const Beam& b = beams[k];
        if (b.state.complete()) {
          candidates.push_back({k, -1, b.score});
          continue;
        }
        const auto mask = feasible_mask(instance, b.state);
        const Logits logits = bound->step(b.state, mask);
        const auto probs = softmax(logits.scores);
        const auto order = ranked_actions(logits.scores);
        // a beam with no feasible successor is dropped, which is the -infinity score
        for (std::size_t r = 0; r < std::min(width, order.size()); ++r) {
          const int node = order[r];
          candidates.push_back({k, node, b.score + std::log(probs[static_cast<std::size_t>(node)] + kBeamSmoothing)});
        }
      }
      if (candidates.empty()) throw DeadEndError("every beam is dead");
      std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.beam != b.beam) return a.beam < b.beam;
        return a.node < b.node;
      });
      candidates.resize(std::min(width, candidates.size()));

      std::vector<Beam> next;
      next.reserve(candidates.size());
      for (const auto& c : candidates) {
        Beam nb{beams[c.beam].state, c.score};
        if (c.node >= 0) apply_action(instance, nb.state, c.node);
        next.push_back(std::move(nb));
      }
      beams = std::move(next);
    }

    std::size_t first = result.beams.size();
    for (auto& b : beams) result.beams.push_back(finish(instance, s, std::move(b.state.partial), b.score));
    std::size_t best = first;
    for (std::size_t i = first; i < result.beams.size(); ++i) {
      if (result.beams[i].solution.cost < result.beams[best].solution.cost) best = i;
      if (result.beams[i].logprob > result.beams[result.max_logprob].logprob) result.max_logprob = i;
    }
    result.best_per_start.push_back(result.beams[best]);
    if (result.best_per_start.back().solution.cost < result.best_per_start[result.best].solution.cost)
      result.best = result.best_per_start.size() - 1;
  }
  return result;
}

RolloutResult decode(const Policy& policy, const Instance& instance, const DecodeConfig& config) {
  if (config.strategy != Strategy::beam) return pomo_rollout(policy, instance, config.pomo_size, config);
  BeamResult beam = beam_search(policy, instance, config.pomo_size, config.beam_size);
  RolloutResult out;
  out.trajectories = std::move(beam.best_per_start);
  out.best = beam.best;
  return out;
}

}  // namespace cvrplab
