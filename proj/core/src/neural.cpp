#include "cvrplab/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvrplab/errors.hpp"
#include "cvrplab/rng.hpp"

namespace cvrplab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

AttentionParams make_layer(int d, int f) {
  AttentionParams p;
  p.wq = Matrix(sz(d), sz(d));
  p.wk = Matrix(sz(d), sz(d));
  p.wv = Matrix(sz(d), sz(d));
  p.wo = Matrix(sz(d), sz(d));
  p.ff1 = Matrix(sz(d), sz(f));
  p.ff1_bias = Matrix(1, sz(f));
  p.ff2 = Matrix(sz(f), sz(d));
  p.ff2_bias = Matrix(1, sz(d));
  return p;
}

template <class Layer, class F>
void visit_layer(Layer& layer, const std::string& prefix, F&& f) {
  f(prefix + "wq", layer.wq);
  f(prefix + "wk", layer.wk);
  f(prefix + "wv", layer.wv);
  f(prefix + "wo", layer.wo);
  f(prefix + "ff1", layer.ff1);
  f(prefix + "ff1_bias", layer.ff1_bias);
  f(prefix + "ff2", layer.ff2);
  f(prefix + "ff2_bias", layer.ff2_bias);
}

template <class Params, class F>
void visit_params(Params& p, F&& f) {
  f(std::string("input_proj"), p.input_proj);
  f(std::string("input_bias"), p.input_bias);
  visit_layer(p.encoder, "encoder.", f);
  for (std::size_t l = 0; l < p.decoder.size(); ++l) visit_layer(p.decoder[l], "decoder." + std::to_string(l) + ".", f);
  f(std::string("w_start"), p.w_start);
  f(std::string("w_dest"), p.w_dest);
  f(std::string("w_out"), p.w_out);
}

// Fan-in used for initialization: bias rows take the fan-in of their weight.
std::size_t fan_in(const std::string& name, const Matrix& m, const NetworkShape& shape) {
  if (name == "input_bias") return kNodeFeatures;
  if (name.ends_with("ff1_bias")) return sz(shape.embed_dim);
  if (name.ends_with("ff2_bias")) return sz(shape.ff_dim);
  return m.rows();
}

}  // namespace

PolicyParams PolicyParams::zeros(const NetworkShape& shape) {
  if (shape.embed_dim < 1 || shape.heads < 1 || shape.decoder_layers < 1 || shape.ff_dim < 1)
    throw PreconditionError("network dimensions must be positive");
  if (shape.embed_dim % shape.heads != 0) throw PreconditionError("embed_dim must be divisible by heads");
  const int d = shape.embed_dim;
  PolicyParams p;
  p.shape = shape;
  p.input_proj = Matrix(kNodeFeatures, sz(d));
  p.input_bias = Matrix(1, sz(d));
  p.encoder = make_layer(d, shape.ff_dim);
  for (int l = 0; l < shape.decoder_layers; ++l) p.decoder.push_back(make_layer(d, shape.ff_dim));
  p.w_start = Matrix(sz(d), sz(d));
  p.w_dest = Matrix(sz(d), sz(d));
  p.w_out = Matrix(sz(d), 1);
  return p;
}

PolicyParams PolicyParams::init(const NetworkShape& shape, std::uint64_t seed) {
  PolicyParams p = zeros(shape);
  Rng rng(seed);
  p.for_each_tensor([&](const std::string& name, Matrix& m) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(name, m, shape)));
    for (double& v : m.values()) v = (2.0 * rng.uniform() - 1.0) * bound;
  });
  return p;
}

void PolicyParams::for_each_tensor(const std::function<void(const std::string&, Matrix&)>& f) {
  visit_params(*this, f);
}

void PolicyParams::for_each_tensor(const std::function<void(const std::string&, const Matrix&)>& f) const {
  visit_params(*this, f);
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&n](const std::string&, const Matrix& m) { n += m.size(); });
  return n;
}

void PolicyParams::validate() const {
  const PolicyParams ref = zeros(shape);
  if (decoder.size() != ref.decoder.size()) throw PreconditionError("decoder depth does not match shape");
  std::vector<std::pair<std::size_t, std::size_t>> expected;
  ref.for_each_tensor([&](const std::string&, const Matrix& m) { expected.emplace_back(m.rows(), m.cols()); });
  std::size_t k = 0;
  for_each_tensor([&](const std::string& name, const Matrix& m) {
    if (m.rows() != expected[k].first || m.cols() != expected[k].second)
      throw PreconditionError("tensor " + name + " has shape " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    if (!m.all_finite()) throw PreconditionError("tensor " + name + " has non-finite entries");
    ++k;
  });
}

void PolicyParams::add_scaled(const PolicyParams& other, double scale) {
  std::vector<const Matrix*> src;
  other.for_each_tensor([&src](const std::string&, const Matrix& m) { src.push_back(&m); });
  std::size_t k = 0;
  for_each_tensor([&](const std::string& name, Matrix& m) {
    const Matrix& o = *src.at(k++);
    if (o.rows() != m.rows() || o.cols() != m.cols()) throw PreconditionError("add_scaled: shape mismatch at " + name);
    auto dst = m.values();
    auto s = o.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * s[i];
  });
}

bool operator==(const PolicyParams& a, const PolicyParams& b) {
  if (!(a.shape == b.shape) || a.decoder.size() != b.decoder.size()) return false;
  std::vector<const Matrix*> ma;
  a.for_each_tensor([&ma](const std::string&, const Matrix& m) { ma.push_back(&m); });
  std::size_t k = 0;
  bool equal = true;
  b.for_each_tensor([&](const std::string&, const Matrix& m) { equal = equal && (*ma[k++] == m); });
  return equal;
}

Matrix node_features(const Instance& instance) {
  Matrix x(sz(instance.node_count()), kNodeFeatures);
  for (int i = 0; i < instance.node_count(); ++i) {
    const Point p = instance.node(i);
    x(sz(i), 0) = p.x;
    x(sz(i), 1) = p.y;
    x(sz(i), 2) = instance.demand(i) / instance.capacity();
  }
  return x;
}

Matrix attention_layer(const AttentionParams& layer, int heads, const Matrix& h, AttentionCache* cache) {
  const std::size_t n = h.rows();
  const std::size_t d = h.cols();
  const std::size_t dh = d / sz(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix q = matmul(h, layer.wq);
  Matrix k = matmul(h, layer.wk);
  Matrix v = matmul(h, layer.wv);
  Matrix concat(n, d);
  std::vector<Matrix> attention;
  attention.reserve(sz(heads));
  for (std::size_t s = 0; s < sz(heads); ++s) {
    const Matrix qs = column_block(q, s * dh, dh);
    const Matrix ks = column_block(k, s * dh, dh);
    const Matrix vs = column_block(v, s * dh, dh);
    Matrix scores = matmul_nt(qs, ks);
    for (double& x : scores.values()) x *= scale;
    softmax_rows(scores);
    add_column_block(concat, matmul(scores, vs), s * dh);
    attention.push_back(std::move(scores));
  }

  Matrix hidden = matmul(concat, layer.wo);
  hidden += h;

  Matrix pre = matmul(hidden, layer.ff1);
  add_row_vector(pre, layer.ff1_bias.values());
  Matrix act = pre;
  for (double& x : act.values()) x = x > 0.0 ? x : 0.0;

  Matrix out = matmul(act, layer.ff2);
  add_row_vector(out, layer.ff2_bias.values());
  out += hidden;

  if (cache) {
    cache->input = h;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attention = std::move(attention);
    cache->heads = std::move(concat);
    cache->hidden = std::move(hidden);
    cache->ff_pre = std::move(pre);
    cache->ff_act = std::move(act);
  }
  return out;
}

Matrix attention_layer_backward(const AttentionParams& layer, int heads, const AttentionCache& cache,
                                const Matrix& d_out, AttentionParams& grad) {
  const std::size_t n = cache.input.rows();
  const std::size_t d = cache.input.cols();
  const std::size_t dh = d / sz(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Feed-forward sub-layer.
  grad.ff2 += matmul_tn(cache.ff_act, d_out);
  accumulate_column_sums(d_out, grad.ff2_bias.values());
  Matrix d_pre = matmul_nt(d_out, layer.ff2);
  {
    auto dp = d_pre.values();
    auto pre = cache.ff_pre.values();
    for (std::size_t i = 0; i < dp.size(); ++i)
      if (!(pre[i] > 0.0)) dp[i] = 0.0;
  }
  grad.ff1 += matmul_tn(cache.hidden, d_pre);
  accumulate_column_sums(d_pre, grad.ff1_bias.values());
  Matrix d_hidden = matmul_nt(d_pre, layer.ff1);
  d_hidden += d_out;

  // Multi-head attention sub-layer.
  grad.wo += matmul_tn(cache.heads, d_hidden);
  const Matrix d_concat = matmul_nt(d_hidden, layer.wo);
  Matrix dq(n, d), dk(n, d), dv(n, d);
  for (std::size_t s = 0; s < sz(heads); ++s) {
    const Matrix& a = cache.attention[s];
    const Matrix d_os = column_block(d_concat, s * dh, dh);
    const Matrix qs = column_block(cache.q, s * dh, dh);
    const Matrix ks = column_block(cache.k, s * dh, dh);
    const Matrix vs = column_block(cache.v, s * dh, dh);

    Matrix d_a = matmul_nt(d_os, vs);
    add_column_block(dv, matmul_tn(a, d_os), s * dh);
    Matrix d_scores(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += d_a(i, j) * a(i, j);
      for (std::size_t j = 0; j < n; ++j) d_scores(i, j) = a(i, j) * (d_a(i, j) - dot) * scale;
    }
    add_column_block(dq, matmul(d_scores, ks), s * dh);
    add_column_block(dk, matmul_tn(d_scores, qs), s * dh);
  }
  grad.wq += matmul_tn(cache.input, dq);
  grad.wk += matmul_tn(cache.input, dk);
  grad.wv += matmul_tn(cache.input, dv);

  Matrix d_in = d_hidden;
  d_in += matmul_nt(dq, layer.wq);
  d_in += matmul_nt(dk, layer.wk);
  d_in += matmul_nt(dv, layer.wv);
  return d_in;
}

Embeddings encode(const PolicyParams& params, const Instance& instance, EncoderCache* cache) {
  Matrix features = node_features(instance);
  Matrix h0 = matmul(features, params.input_proj);
  add_row_vector(h0, params.input_bias.values());
  if (!h0.all_finite()) throw NumericError("non-finite values after encoder input projection");
  Matrix h1 = attention_layer(params.encoder, params.shape.heads, h0, cache ? &cache->attention : nullptr);
  if (!h1.all_finite()) throw NumericError("non-finite values after encoder attention layer");
  if (cache) cache->features = std::move(features);
  return {std::move(h1), 1};
}

void encode_backward(const PolicyParams& params, const EncoderCache& cache, const Matrix& d_embeddings,
                     Gradient& grad) {
  const Matrix d_h0 = attention_layer_backward(params.encoder, params.shape.heads, cache.attention, d_embeddings,
                                               grad.encoder);
  grad.input_proj += matmul_tn(cache.features, d_h0);
  accumulate_column_sums(d_h0, grad.input_bias.values());
}

StepOutput decode_step(const PolicyParams& params, const Matrix& embeddings, int start, int dest,
                       std::span<const int> available, StepCache* cache) {
  if (available.empty()) throw PreconditionError("decode_step: no available node");
  const std::size_t d = embeddings.cols();
  const std::size_t rows = 2 + available.size();

  Matrix h(rows, d);
  {
    Matrix s(1, d), t(1, d);
    std::copy_n(embeddings.row(sz(start)).begin(), d, s.row(0).begin());
    std::copy_n(embeddings.row(sz(dest)).begin(), d, t.row(0).begin());
    const Matrix s_proj = matmul(s, params.w_start);
    const Matrix t_proj = matmul(t, params.w_dest);
    std::copy_n(s_proj.row(0).begin(), d, h.row(0).begin());
    std::copy_n(t_proj.row(0).begin(), d, h.row(1).begin());
    for (std::size_t a = 0; a < available.size(); ++a)
      std::copy_n(embeddings.row(sz(available[a])).begin(), d, h.row(2 + a).begin());
  }

  if (cache) {
    cache->start = start;
    cache->dest = dest;
    cache->available.assign(available.begin(), available.end());
    cache->layers.assign(params.decoder.size(), {});
  }
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    h = attention_layer(params.decoder[l], params.shape.heads, h, cache ? &cache->layers[l] : nullptr);
    if (!h.all_finite()) throw NumericError("non-finite values after decoder layer " + std::to_string(l));
  }

  const Matrix u = matmul(h, params.w_out);
  StepOutput out;
  out.logits.assign(rows, kNegInf);
  for (std::size_t i = 2; i < rows; ++i) out.logits[i] = u(i, 0);
  out.probs = softmax(out.logits);
  if (cache) cache->top = std::move(h);
  return out;
}

void decode_step_backward(const PolicyParams& params, const Matrix& embeddings, const StepCache& cache,
                          std::span<const double> d_logits, Gradient& grad, Matrix& d_embeddings) {
  const std::size_t d = embeddings.cols();
  const std::size_t rows = cache.top.rows();

  Matrix d_u(rows, 1);
  for (std::size_t i = 2; i < rows; ++i) d_u(i, 0) = d_logits[i];
  grad.w_out += matmul_tn(cache.top, d_u);
  Matrix d_h = matmul_nt(d_u, params.w_out);

  for (std::size_t l = params.decoder.size(); l-- > 0;)
    d_h = attention_layer_backward(params.decoder[l], params.shape.heads, cache.layers[l], d_h, grad.decoder[l]);

  auto context_row = [&](int node, std::size_t row, const Matrix& w, Matrix& gw) {
    Matrix e(1, d), dr(1, d);
    std::copy_n(embeddings.row(sz(node)).begin(), d, e.row(0).begin());
    std::copy_n(d_h.row(row).begin(), d, dr.row(0).begin());
    gw += matmul_tn(e, dr);
    const Matrix de = matmul_nt(dr, w);
    auto target = d_embeddings.row(sz(node));
    for (std::size_t c = 0; c < d; ++c) target[c] += de(0, c);
  };
  context_row(cache.start, 0, params.w_start, grad.w_start);
  context_row(cache.dest, 1, params.w_dest, grad.w_dest);
  for (std::size_t a = 0; a < cache.available.size(); ++a) {
    auto target = d_embeddings.row(sz(cache.available[a]));
    auto src = d_h.row(2 + a);
    for (std::size_t c = 0; c < d; ++c) target[c] += src[c];
  }
}

ReplayResult replay_trajectory(const PolicyParams& params, const Instance& instance, std::span<const int> tokens,
                               int first_scored, double weight, Gradient* grad) {
  if (tokens.empty() || tokens.front() != 0) throw PreconditionError("trajectory must start at the depot");
  const bool backprop = grad != nullptr && weight != 0.0;
  EncoderCache enc_cache;
  const Embeddings emb = encode(params, instance, backprop ? &enc_cache : nullptr);
  Matrix d_emb;
  if (backprop) d_emb = Matrix(emb.h.rows(), emb.h.cols());

  ReplayResult result;
  DecodeState state = DecodeState::initial(instance);
  std::vector<int> available;
  StepCache step_cache;
  for (std::size_t k = 1; k < tokens.size(); ++k) {
    const int token = tokens[k];
    const auto mask = feasible_mask(instance, state);
    if (token < 0 || token >= instance.node_count() || !mask[sz(token)])
      throw PreconditionError("token " + std::to_string(token) + " at step " + std::to_string(k) + " is not allowed");
    available.clear();
    for (int i = 0; i < instance.node_count(); ++i)
      if (mask[sz(i)]) available.push_back(i);

    if (static_cast<int>(k) >= first_scored && available.size() >= 2) {
      const StepOutput out = decode_step(params, emb.h, state.current_node, state.destination, available,
                                         backprop ? &step_cache : nullptr);
      const auto pos = static_cast<std::size_t>(std::find(available.begin(), available.end(), token) - available.begin());
      const std::size_t slot = 2 + pos;
      // log-softmax over the available slots
      double top = kNegInf;
      for (std::size_t i = 2; i < out.logits.size(); ++i) top = std::max(top, out.logits[i]);
      double total = 0.0;
      for (std::size_t i = 2; i < out.logits.size(); ++i) total += std::exp(out.logits[i] - top);
      result.logprob += out.logits[slot] - top - std::log(total);
      ++result.scored_steps;

      if (backprop) {
        std::vector<double> d_logits(out.logits.size(), 0.0);
        for (std::size_t i = 2; i < out.logits.size(); ++i)
          d_logits[i] = weight * ((i == slot ? 1.0 : 0.0) - out.probs[i]);
        decode_step_backward(params, emb.h, step_cache, d_logits, *grad, d_emb);
      }
    }
    apply_action(instance, state, token);
  }
  if (backprop && result.scored_steps > 0) encode_backward(params, enc_cache, d_emb, *grad);
  return result;
}

SupervisedResult supervised_step(const PolicyParams& params, const Instance& instance, const Solution& label) {
  if (!check_feasible(instance, label)) throw PreconditionError("supervised_step: label is infeasible");
  const auto tokens = to_tokens(label);
  SupervisedResult result;
  result.grad = PolicyParams::zeros(params.shape);
  const ReplayResult replay = replay_trajectory(params, instance, tokens, 1, -1.0, &result.grad);
  result.steps = replay.scored_steps;
  if (replay.scored_steps == 0) return result;
  const double inv = 1.0 / replay.scored_steps;
  result.loss = -replay.logprob * inv;
  result.grad.for_each_tensor([inv](const std::string&, Matrix& m) {
    for (double& v : m.values()) v *= inv;
  });
  return result;
}

std::vector<double> shared_baseline_advantages(std::span<const double> rewards, double* baseline) {
  // Centering on the first reward makes equal rewards give exactly zero.
  const double anchor = rewards.empty() ? 0.0 : rewards.front();
  double mean_offset = 0.0;
  for (double r : rewards) mean_offset += r - anchor;
  mean_offset /= static_cast<double>(std::max<std::size_t>(rewards.size(), 1));
  std::vector<double> adv;
  adv.reserve(rewards.size());
  for (double r : rewards) adv.push_back((r - anchor) - mean_offset);
  if (baseline) *baseline = anchor + mean_offset;
  return adv;
}

ReinforceResult reinforce_step(const PolicyParams& params, const Instance& instance,
                               std::span<const Rollout> rollouts) {
  if (rollouts.size() < 2) throw PreconditionError("reinforce_step: need at least two rollouts for a shared baseline");
  std::vector<int> starts;
  std::vector<double> rewards;
  for (const auto& r : rollouts) {
    if (r.tokens.size() < 2) throw PreconditionError("reinforce_step: rollout too short");
    starts.push_back(r.tokens[1]);
    rewards.push_back(r.reward);
  }
  std::sort(starts.begin(), starts.end());
  if (std::adjacent_find(starts.begin(), starts.end()) != starts.end())
    throw PreconditionError("reinforce_step: rollouts must use distinct start nodes");

  ReinforceResult result;
  result.grad = PolicyParams::zeros(params.shape);
  result.advantages = shared_baseline_advantages(rewards, &result.baseline);
  const double inv_n = 1.0 / static_cast<double>(rollouts.size());
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const double w = result.advantages[i] * inv_n;
    const ReplayResult replay = replay_trajectory(params, instance, rollouts[i].tokens, 2, w, &result.grad);
    result.surrogate += w * replay.logprob;
  }
  return result;
}

namespace {

class BoundNeuralPolicy final : public BoundPolicy {
 public:
  BoundNeuralPolicy(std::shared_ptr<const PolicyParams> params, const Instance& instance)
      : params_(std::move(params)), embeddings_(encode(*params_, instance).h) {}

  Logits step(const DecodeState& state, std::span<const char> mask) const override {
    std::vector<int> available;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) available.push_back(static_cast<int>(i));
    Logits out;
    out.scores.assign(mask.size(), kNegInf);
    if (available.empty()) return out;
    const StepOutput step = decode_step(*params_, embeddings_, state.current_node, state.destination, available);
    for (std::size_t a = 0; a < available.size(); ++a) out.scores[sz(available[a])] = step.logits[2 + a];
    return out;
  }

 private:
  std::shared_ptr<const PolicyParams> params_;
  Matrix embeddings_;
};

}  // namespace

NeuralPolicy::NeuralPolicy(std::shared_ptr<const PolicyParams> params) : params_(std::move(params)) {
  if (!params_) throw PreconditionError("NeuralPolicy: null parameters");
  params_->validate();
}

std::unique_ptr<BoundPolicy> NeuralPolicy::bind(const Instance& instance) const {
  return std::make_unique<BoundNeuralPolicy>(params_, instance);
}

}  // namespace cvrplab
