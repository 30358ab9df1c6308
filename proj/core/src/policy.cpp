#include "cvrplab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvrplab/errors.hpp"

namespace cvrplab {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

DecodeState DecodeState::initial(const Instance& instance) {
  DecodeState s;
  s.current_node = 0;
  s.destination = 0;
  s.visited.assign(static_cast<std::size_t>(instance.node_count()), 0);
  s.unvisited = instance.size();
  s.remaining_load = instance.capacity();
  s.partial = {0};
  s.selected_count = 1;
  return s;
}

std::vector<char> feasible_mask(const Instance& instance, const DecodeState& state) {
  std::vector<char> mask(static_cast<std::size_t>(instance.node_count()), 0);
  for (int c = 1; c <= instance.size(); ++c) {
    const auto k = static_cast<std::size_t>(c);
    mask[k] = !state.visited[k] && instance.demand(c) <= state.remaining_load;
  }
  mask[0] = !(state.current_node == 0 && state.unvisited > 0);
  return mask;
}

void apply_action(const Instance& instance, DecodeState& state, int node) {
  if (node < 0 || node > instance.size()) throw PreconditionError("action " + std::to_string(node) + " out of range");
  const auto k = static_cast<std::size_t>(node);
  if (node == 0) {
    if (state.current_node == 0 && state.unvisited > 0)
      throw PreconditionError("depot action would open an empty route");
    state.remaining_load = instance.capacity();
  } else {
    if (state.visited[k]) throw PreconditionError("customer " + std::to_string(node) + " already served");
    if (instance.demand(node) > state.remaining_load)
      throw PreconditionError("customer " + std::to_string(node) + " exceeds remaining load");
    state.visited[k] = 1;
    --state.unvisited;
    state.remaining_load -= instance.demand(node);
  }
  state.current_node = node;
  state.partial.push_back(node);
  ++state.selected_count;
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> p(scores.size(), 0.0);
  const double top = scores.empty() ? kNegInf : *std::max_element(scores.begin(), scores.end());
  if (top == kNegInf) return p;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] == kNegInf) continue;
    p[i] = std::exp(scores[i] - top);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

Logits Policy::step(const Instance& instance, const DecodeState& state) const {
  const auto bound = bind(instance);
  const auto mask = feasible_mask(instance, state);
  return bound->step(state, mask);
}

namespace {

class BoundDistancePolicy final : public BoundPolicy {
 public:
  BoundDistancePolicy(const Instance& instance, double scale) : instance_(instance), scale_(scale) {}

  Logits step(const DecodeState& state, std::span<const char> mask) const override {
    Logits out;
    out.scores.assign(mask.size(), kNegInf);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) out.scores[i] = -instance_.dist(state.current_node, static_cast<int>(i)) / scale_;
    return out;
  }

 private:
  const Instance& instance_;
  double scale_;
};

}  // namespace

DistanceHeuristicPolicy::DistanceHeuristicPolicy(double scale) : scale_(scale) {
  if (!(scale > 0.0)) throw PreconditionError("distance policy scale must be positive");
}

std::unique_ptr<BoundPolicy> DistanceHeuristicPolicy::bind(const Instance& instance) const {
  return std::make_unique<BoundDistancePolicy>(instance, scale_);
}

}  // namespace cvrplab
