#include "cvrplab/train.hpp"

#include <memory>
#include <string>

#include "cvrplab/decode.hpp"
#include "cvrplab/errors.hpp"
#include "cvrplab/instances.hpp"
#include "cvrplab/oracle.hpp"
#include "cvrplab/rng.hpp"

namespace cvrplab {

std::string_view to_string(TrainMode mode) { return mode == TrainMode::supervised ? "supervised" : "reinforce"; }

std::optional<TrainMode> parse_train_mode(std::string_view name) {
  if (name == "supervised") return TrainMode::supervised;
  if (name == "reinforce") return TrainMode::reinforce;
  return std::nullopt;
}

TrainResult train_toy(PolicyParams params, const TrainConfig& config) {
  params.validate();
  if (config.n < 2) throw PreconditionError("training needs at least two customers");
  if (config.steps < 0 || config.batch < 1) throw PreconditionError("steps must be >= 0 and batch >= 1");
  if (config.mode == TrainMode::supervised && config.n > 9)
    throw PreconditionError("supervised labels come from brute force; n must be at most 9");
  const int pomo = config.pomo_size > 0 ? config.pomo_size : config.n;
  if (pomo > config.n) throw PreconditionError("pomo size exceeds customer count");

  TrainResult result;
  for (int step = 0; step < config.steps; ++step) {
    Gradient total = PolicyParams::zeros(params.shape);
    TrainLogRow row;
    row.step = step;
    auto shared = std::make_shared<const PolicyParams>(params);
    const NeuralPolicy policy(shared);
    for (int b = 0; b < config.batch; ++b) {
      const auto inst_seed = derive_seed(config.seed, {static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b)});
      const Instance instance = generate(GenConfig::for_size(config.n, inst_seed));
      if (config.mode == TrainMode::supervised) {
        const OracleResult label = brute_force_optimum(instance);
        SupervisedResult sr = supervised_step(params, instance, label.solution);
        total.add_scaled(sr.grad, -1.0 / config.batch);  // descent
        row.loss += sr.loss / config.batch;
        DecodeConfig greedy;
        row.mean_cost += pomo_rollout(policy, instance, 1, greedy).best_trajectory().solution.cost / config.batch;
      } else {
        DecodeConfig sample;
        sample.strategy = Strategy::softmax_sample;
        sample.seed = inst_seed;
        const RolloutResult rr = pomo_rollout(policy, instance, pomo, sample);
        std::vector<Rollout> rollouts;
        for (const auto& t : rr.trajectories) {
          rollouts.push_back({t.tokens, -t.solution.cost});
          row.mean_cost += t.solution.cost / (static_cast<double>(pomo) * config.batch);
        }
        ReinforceResult rf = reinforce_step(params, instance, rollouts);
        total.add_scaled(rf.grad, 1.0 / config.batch);  // ascent
        row.loss -= rf.surrogate / config.batch;
      }
    }
    params.add_scaled(total, config.learning_rate);
    result.log.push_back(row);
  }
  result.params = std::move(params);
  return result;
}

void write_train_log_csv(const std::vector<TrainLogRow>& log, std::ostream& out) {
  out << "step,loss,mean_cost\n";
  for (const auto& r : log)
    out << r.step << ',' << format_double(r.loss) << ',' << format_double(r.mean_cost) << '\n';
}

}  // namespace cvrplab
