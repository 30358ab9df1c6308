#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cvrplab/core.hpp"
#include "cvrplab/matrix.hpp"
#include "cvrplab/policy.hpp"

namespace cvrplab {

// Toy light-encoder / heavy-decoder attention policy.
//
// Encoder: linear projection of node features (x, y, demand / Q), then one
// attention layer. Decoder step: the stack
//   [ h_start W_start ; h_dest W_dest ; h_a for every available node a ]
// runs through L attention layers; each available row is scored by
// w_out . h, the two context rows are masked to -infinity, softmax picks.
//
// Attention layer (no normalization sub-layers):
//   H^ = H + MHA(H)
//   H' = H^ + FF(H^),  FF(x) = relu(x W_ff1 + b1) W_ff2 + b2
//
// All weights act on row vectors: y = x W.

struct NetworkShape {
  int embed_dim = 16;
  int heads = 2;
  int decoder_layers = 2;
  int ff_dim = 32;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

inline constexpr int kNodeFeatures = 3;

struct AttentionParams {
  Matrix wq, wk, wv, wo;  // d x d
  Matrix ff1;             // d x f
  Matrix ff1_bias;        // 1 x f
  Matrix ff2;             // f x d
  Matrix ff2_bias;        // 1 x d
};

struct PolicyParams {
  NetworkShape shape;
  Matrix input_proj;  // 3 x d
  Matrix input_bias;  // 1 x d
  AttentionParams encoder;
  std::vector<AttentionParams> decoder;
  Matrix w_start;  // d x d, re-embeds the node the vehicle is at
  Matrix w_dest;   // d x d, re-embeds the node the partial solution must reach
  Matrix w_out;    // d x 1

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], seeded.
  static PolicyParams init(const NetworkShape& shape, std::uint64_t seed);
  static PolicyParams zeros(const NetworkShape& shape);

  // Throws PreconditionError on inconsistent shapes or non-finite weights.
  void validate() const;

  // Visits every tensor with a stable name ("encoder.wq", "decoder.1.ff2", ...).
  void for_each_tensor(const std::function<void(const std::string&, Matrix&)>& f);
  void for_each_tensor(const std::function<void(const std::string&, const Matrix&)>& f) const;

  std::size_t parameter_count() const;

  // this += scale * other (same shape).
  void add_scaled(const PolicyParams& other, double scale);

  friend bool operator==(const PolicyParams&, const PolicyParams&);
};

using Gradient = PolicyParams;

// (n + 1) x 3 node features; the depot has demand 0.
Matrix node_features(const Instance& instance);

// Intermediate values of one attention layer kept for the backward pass.
struct AttentionCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> attention;  // per head, rows x rows
  Matrix heads;                   // concatenated head outputs
  Matrix hidden;                  // after the MHA residual
  Matrix ff_pre;                  // pre-activation
  Matrix ff_act;                  // after relu
};

Matrix attention_layer(const AttentionParams& layer, int heads, const Matrix& h, AttentionCache* cache = nullptr);

// Returns dL/dH and adds the parameter gradient to grad.
Matrix attention_layer_backward(const AttentionParams& layer, int heads, const AttentionCache& cache,
                                const Matrix& d_out, AttentionParams& grad);

struct Embeddings {
  Matrix h;       // one row per node
  int layer = 1;  // number of attention layers applied
};

struct EncoderCache {
  Matrix features;
  AttentionCache attention;
};

// Throws NumericError naming the layer if anything non-finite appears.
Embeddings encode(const PolicyParams& params, const Instance& instance, EncoderCache* cache = nullptr);
void encode_backward(const PolicyParams& params, const EncoderCache& cache, const Matrix& d_embeddings,
                     Gradient& grad);

// One decoder step. logits holds 2 + |available| slot scores, the two
// context slots at -infinity; probs is their softmax.
struct StepOutput {
  std::vector<double> logits;
  std::vector<double> probs;
};

struct StepCache {
  int start = 0;
  int dest = 0;
  std::vector<int> available;
  std::vector<AttentionCache> layers;
  Matrix top;  // output of the last layer
};

// Throws PreconditionError when available is empty.
StepOutput decode_step(const PolicyParams& params, const Matrix& embeddings, int start, int dest,
                       std::span<const int> available, StepCache* cache = nullptr);

// Backward through one step given dL/dlogits for the slots. Adds to grad and
// to d_embeddings (rows of the encoder output).
void decode_step_backward(const PolicyParams& params, const Matrix& embeddings, const StepCache& cache,
                          std::span<const double> d_logits, Gradient& grad, Matrix& d_embeddings);

// Teacher-forced replay of a token sequence. Steps from first_scored onwards
// with at least two allowed actions contribute log p(token). When grad is
// given, weight * d(sum log p)/dtheta is added to it.
struct ReplayResult {
  double logprob = 0.0;
  int scored_steps = 0;
};

ReplayResult replay_trajectory(const PolicyParams& params, const Instance& instance, std::span<const int> tokens,
                               int first_scored, double weight = 0.0, Gradient* grad = nullptr);

struct SupervisedResult {
  double loss = 0.0;  // mean cross-entropy over decision steps
  Gradient grad;      // gradient of loss
  int steps = 0;
};

// Teacher forcing on the label's token sequence.
SupervisedResult supervised_step(const PolicyParams& params, const Instance& instance, const Solution& label);

struct Rollout {
  std::vector<int> tokens;  // 0 start ... 0; tokens[1] is the forced start
  double reward = 0.0;      // -cost
};

struct ReinforceResult {
  Gradient grad;  // ascent direction (1/N) sum_i A_i grad log p(tau_i)
  std::vector<double> advantages;
  double baseline = 0.0;
  double surrogate = 0.0;  // (1/N) sum_i A_i log p(tau_i)
};

// Shared mean baseline. Log-probabilities exclude the forced start choice.
// Throws PreconditionError for fewer than two rollouts or repeated starts.
ReinforceResult reinforce_step(const PolicyParams& params, const Instance& instance,
                               std::span<const Rollout> rollouts);

// Shared-baseline advantages R_i - mean(R).
std::vector<double> shared_baseline_advantages(std::span<const double> rewards, double* baseline = nullptr);

class NeuralPolicy final : public Policy {
 public:
  explicit NeuralPolicy(std::shared_ptr<const PolicyParams> params);
  std::unique_ptr<BoundPolicy> bind(const Instance& instance) const override;
  std::string name() const override { return "neural"; }
  const PolicyParams& params() const { return *params_; }

 private:
  std::shared_ptr<const PolicyParams> params_;
};

// Versioned binary checkpoint of named matrices with shape headers.
void save_checkpoint(const PolicyParams& params, std::ostream& out);
void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_checkpoint(std::istream& in);
PolicyParams load_checkpoint(const std::filesystem::path& path);

}  // namespace cvrplab
