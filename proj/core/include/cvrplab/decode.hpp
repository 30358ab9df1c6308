#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cvrplab/core.hpp"
#include "cvrplab/policy.hpp"
#include "cvrplab/rng.hpp"

namespace cvrplab {

enum class Strategy { argmax, softmax_sample, gumbel_softmax, epsilon_greedy, beam };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);

struct DecodeConfig {
  Strategy strategy = Strategy::argmax;
  int pomo_size = 1;
  int beam_size = 1;
  double epsilon = 0.1;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

// Action selection over per-node logits (-infinity = masked). All throw
// DeadEndError when every entry is masked.

// Highest logit, ties to the lowest index.
int select_argmax(std::span<const double> logits);
int select_softmax(std::span<const double> logits, Rng& rng);
// Hard Gumbel-max on temperature-scaled logits: argmax_i z_i / tau + g_i.
int select_gumbel(std::span<const double> logits, double temperature, Rng& rng);
// Uniform over unmasked with probability epsilon, argmax otherwise.
int select_epsilon_greedy(std::span<const double> logits, double epsilon, Rng& rng);

// Dispatch for the sampling strategies (not beam).
int select_action(const DecodeConfig& config, std::span<const double> logits, Rng& rng);

struct Trajectory {
  int start = 0;            // forced first customer, 0 if chosen by the policy
  std::vector<int> tokens;  // 0 ... 0
  Solution solution;
  // Rollouts: sum of log p over the steps after the start choice.
  // Beam search: the beam score, sum of log(p + 1e-5) from the third move on.
  double logprob = 0.0;
};

// One trajectory. With a start the first customer is forced and not scored;
// without one the policy picks it and that step counts.
Trajectory rollout(const BoundPolicy& policy, const Instance& instance, std::optional<int> start,
                   const DecodeConfig& config, Rng& rng);

struct RolloutResult {
  std::vector<Trajectory> trajectories;
  std::size_t best = 0;  // lowest cost, earliest on ties

  const Trajectory& best_trajectory() const { return trajectories.at(best); }
};

// Trajectory i starts at customer i + 1 and draws from Rng(derive_seed(seed, {start})).
// Throws PreconditionError when N is not in [1, n].
RolloutResult pomo_rollout(const Policy& policy, const Instance& instance, int pomo_size, const DecodeConfig& config);

inline constexpr double kBeamSmoothing = 1e-5;

struct BeamResult {
  std::vector<Trajectory> beams;        // every surviving beam at the end, grouped by start
  std::vector<Trajectory> best_per_start;  // lowest cost per start
  std::size_t best = 0;                 // into best_per_start
  std::size_t max_logprob = 0;          // into beams, highest score

  const Trajectory& best_trajectory() const { return best_per_start.at(best); }
};

// POMO beam search: per start, beam_size states; the third move takes the
// top-beam_size successors of the single state, later moves expand every
// beam's top-beam_size successors and keep the best beam_size by score.
// Ties prefer the lower beam index, then the lower node index.
BeamResult beam_search(const Policy& policy, const Instance& instance, int pomo_size, int beam_size);

// Dispatches on config.strategy; beam results are flattened to best_per_start.
RolloutResult decode(const Policy& policy, const Instance& instance, const DecodeConfig& config);

}  // namespace cvrplab
