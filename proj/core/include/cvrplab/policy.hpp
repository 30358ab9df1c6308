#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cvrplab/core.hpp"

namespace cvrplab {

// Construction state of one rollout. Token 0 is the depot.
struct DecodeState {
  int current_node = 0;
  // Node the partial solution has to reach in the end. The depot for a full
  // decode; the right boundary of the segment during re-construction.
  int destination = 0;
  std::vector<char> visited;  // per node, index 0 unused
  int unvisited = 0;          // customers still to serve
  double remaining_load = 0.0;
  std::vector<int> partial;  // tokens emitted so far
  double logprob = 0.0;
  int selected_count = 0;

  // Fresh state: at the depot, depot token emitted (selected_count == 1).
  static DecodeState initial(const Instance& instance);

  // All customers served and back at the depot.
  bool complete() const noexcept { return unvisited == 0 && current_node == 0; }
};

// Allowed actions per node (1 = allowed). Served customers and customers whose
// demand exceeds the remaining load are masked; the depot is masked only when
// the vehicle is at the depot and customers remain (no empty routes).
std::vector<char> feasible_mask(const Instance& instance, const DecodeState& state);

// Moves the state to `node`. Throws PreconditionError if the action is not
// allowed by feasible_mask.
void apply_action(const Instance& instance, DecodeState& state, int node);

// One score per node 0..n; masked nodes hold -infinity.
struct Logits {
  std::vector<double> scores;
};

// Probabilities over nodes, exactly 0 where the score is -infinity.
// Max-subtraction keeps it stable.
std::vector<double> softmax(std::span<const double> scores);

// A policy evaluated against one fixed instance. Implementations are
// immutable so a bound policy can be shared by concurrent rollouts. It keeps a
// reference to the instance, which must outlive it.
class BoundPolicy {
 public:
  virtual ~BoundPolicy() = default;
  // Scores for every node; must be -infinity exactly where mask is 0.
  virtual Logits step(const DecodeState& state, std::span<const char> mask) const = 0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::unique_ptr<BoundPolicy> bind(const Instance& instance) const = 0;
  virtual std::string name() const = 0;

  // Convenience for one-off calls; decoders bind once per instance instead.
  Logits step(const Instance& instance, const DecodeState& state) const;
};

// logit_i = -distance(current, i) / scale. Equivariant under plane isometries.
class DistanceHeuristicPolicy final : public Policy {
 public:
  explicit DistanceHeuristicPolicy(double scale = 0.1);
  std::unique_ptr<BoundPolicy> bind(const Instance& instance) const override;
  std::string name() const override { return "distance"; }
  double scale() const noexcept { return scale_; }

 private:
  double scale_;
};

}  // namespace cvrplab
