#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "cvrplab/neural.hpp"

namespace cvrplab {

enum class TrainMode { supervised, reinforce };

std::string_view to_string(TrainMode mode);
std::optional<TrainMode> parse_train_mode(std::string_view name);

// Desk-scale training on freshly generated instances. Supervised labels come
// from the brute-force oracle, so n is limited to 9 in that mode.
struct TrainConfig {
  TrainMode mode = TrainMode::supervised;
  int n = 6;
  int steps = 200;
  int batch = 4;  // instances per update
  double learning_rate = 1e-3;
  int pomo_size = 0;  // reinforce rollouts per instance, 0 = n
  std::uint64_t seed = 0;
};

struct TrainLogRow {
  int step = 0;
  double loss = 0.0;       // supervised: mean cross-entropy; reinforce: -surrogate
  double mean_cost = 0.0;  // reinforce: mean rollout cost; supervised: greedy cost
};

struct TrainResult {
  PolicyParams params;
  std::vector<TrainLogRow> log;
};

// Plain gradient descent on the supervised loss or ascent on the REINFORCE
// objective with a fixed learning rate.
TrainResult train_toy(PolicyParams params, const TrainConfig& config);

void write_train_log_csv(const std::vector<TrainLogRow>& log, std::ostream& out);

}  // namespace cvrplab
