// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cvrplab/augment.hpp"
#include "cvrplab/bench.hpp"
#include "cvrplab/construct.hpp"
#include "cvrplab/decode.hpp"
#include "cvrplab/improve.hpp"
#include "cvrplab/neural.hpp"
#include "cvrplab/oracle.hpp"
#include "cvrplab/rrc.hpp"
#include "test_util.hpp"

using namespace cvrplab;
using testutil::random_instance;
using testutil::tight_instance;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// P(X >= k) for X ~ Binomial(n, 1/2).
double sign_test_p(int k, int n) {
  double p = 0.0;
  for (int i = k; i <= n; ++i) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
  return p;
}

std::shared_ptr<const PolicyParams> random_weights(std::uint64_t seed) {
  return std::make_shared<const PolicyParams>(PolicyParams::init(NetworkShape{}, seed));
}

constexpr double kTol = 1e-9;  // summation-order slack when comparing costs

// 1 ---------------------------------------------------------------------------
Outcome oracle_dominance() {
  const auto t0 = Clock::now();
  const DistanceHeuristicPolicy distance;
  int checked = 0, violations = 0, ls_optimal = 0;
  std::string first_violation;
  const int instances = 200;
  for (int k = 0; k < instances; ++k) {
    const int n = 3 + k % 6;
    const Instance inst = tight_instance(n, 1000 + static_cast<std::uint64_t>(k));
    const double opt = brute_force_optimum(inst).cost;
    auto check = [&](const std::string& what, const Solution& s) {
      ++checked;
      if (!check_feasible(inst, s) || s.cost < opt - kTol) {
        ++violations;
        if (first_violation.empty()) first_violation = inst.name() + " " + what;
      }
    };
    for (ConstructMethod m : {ConstructMethod::nearest_sequential, ConstructMethod::nearest_parallel,
                              ConstructMethod::insertion, ConstructMethod::savings_parallel,
                              ConstructMethod::savings_sequential, ConstructMethod::sweep}) {
      ConstructConfig cfg;
      cfg.method = m;
      const Solution s = construct(inst, cfg);
      check(std::string(to_string(m)), s);
      const Solution ls = local_search(inst, s).solution;
      check(std::string(to_string(m)) + "+ls", ls);
      if (m == ConstructMethod::savings_parallel && std::abs(ls.cost - opt) <= kTol) ++ls_optimal;
    }
    ConstructConfig cluster;
    cluster.method = ConstructMethod::sweep;
    cluster.sweep_mode = SweepMode::cluster_then_2opt;
    check("sweep-cluster", construct(inst, cluster));

    const NeuralPolicy neural(random_weights(static_cast<std::uint64_t>(k)));
    for (const Policy* policy : {static_cast<const Policy*>(&distance), static_cast<const Policy*>(&neural)}) {
      for (Strategy st : {Strategy::argmax, Strategy::softmax_sample, Strategy::gumbel_softmax,
                          Strategy::epsilon_greedy, Strategy::beam}) {
        DecodeConfig d;
        d.strategy = st;
        d.pomo_size = n;
        d.beam_size = 4;
        d.seed = static_cast<std::uint64_t>(k);
        const RolloutResult r = decode(*policy, inst, d);
        for (const auto& t : r.trajectories) check(policy->name() + "/" + std::string(to_string(st)), t.solution);
      }
      RrcConfig rc;
      rc.iterations = 30;
      rc.seed = static_cast<std::uint64_t>(k);
      const Solution initial = decode(*policy, inst, DecodeConfig{}).best_trajectory().solution;
      check(policy->name() + "/rrc", rrc_run(*policy, inst, initial, rc).best);
    }
  }
  const double secs = seconds_since(t0);
  const double frac = static_cast<double>(ls_optimal) / instances;
  Outcome o;
  o.pass = violations == 0 && frac >= 0.30 && secs < 120.0;
  o.detail = fmt("%d solutions checked, %d below optimum or infeasible, local search optimal on %.1f%% of %d, %.1fs",
                 checked, violations, 100 * frac, instances, secs);
  if (!first_violation.empty()) o.detail += " (first: " + first_violation + ")";
  return o;
}

// 2 ---------------------------------------------------------------------------
Outcome beam_identity() {
  const auto t0 = Clock::now();
  const DistanceHeuristicPolicy policy;
  int mismatches = 0;
  const int instances = 1000, n = 20;
  for (int k = 0; k < instances; ++k) {
    const Instance inst = random_instance(n, 2000 + static_cast<std::uint64_t>(k));
    const RolloutResult greedy = pomo_rollout(policy, inst, n, DecodeConfig{});
    const BeamResult beam = beam_search(policy, inst, n, 1);
    bool same = beam.beams.size() == greedy.trajectories.size();
    for (std::size_t i = 0; same && i < beam.beams.size(); ++i)
      same = beam.beams[i].tokens == greedy.trajectories[i].tokens;
    if (!same) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0,
          fmt("%d/%d instances (n=%d, all %d starts) with differing token sequences, %.1fs", mismatches, instances, n,
              n, secs)};
}

// 3 ---------------------------------------------------------------------------
Outcome beam_saturation() {
  int mismatches = 0;
  std::size_t largest = 0;
  const int instances = 50;
  for (int k = 0; k < instances; ++k) {
    const int n = 2 + k % 4;
    const Instance inst = tight_instance(n, 3000 + static_cast<std::uint64_t>(k));
    const NeuralPolicy neural(random_weights(500 + static_cast<std::uint64_t>(k)));
    const DistanceHeuristicPolicy distance(0.5);
    const Policy& policy = k % 2 == 0 ? static_cast<const Policy&>(neural) : distance;

    const auto all = enumerate_trajectories(policy, inst);
    std::size_t best = 0;
    for (std::size_t i = 1; i < all.size(); ++i)
      if (all[i].logprob_after_start > all[best].logprob_after_start) best = i;
    largest = std::max(largest, all.size());
    const BeamResult beam = beam_search(policy, inst, n, static_cast<int>(all.size()));
    const Trajectory& top = beam.beams.at(beam.max_logprob);
    if (top.tokens != all[best].tokens || std::abs(top.logprob - all[best].logprob_after_start) > 1e-9) ++mismatches;
  }
  return {mismatches == 0, fmt("%d/%d instances (n<=5) where the saturated beam missed the enumerated "
                               "max-logprob trajectory; up to %zu trajectories",
                               mismatches, instances, largest)};
}

// 4 ---------------------------------------------------------------------------
Outcome beam_direction() {
  const DistanceHeuristicPolicy policy;
  const int instances = 100, n = 20;
  int wins = 0, losses = 0;
  double sum_diff = 0.0, sum_beam = 0.0, sum_greedy = 0.0;
  for (int k = 0; k < instances; ++k) {
    const Instance inst = random_instance(n, 4000 + static_cast<std::uint64_t>(k));
    const double greedy = pomo_rollout(policy, inst, n, DecodeConfig{}).best_trajectory().solution.cost;
    const double beam = beam_search(policy, inst, n, 4).best_trajectory().solution.cost;
    sum_beam += beam;
    sum_greedy += greedy;
    sum_diff += greedy - beam;
    if (beam < greedy - 1e-12) ++wins;
    if (beam > greedy + 1e-12) ++losses;
  }
  const double p = sign_test_p(wins, wins + losses);
  return {sum_diff >= 0.0 && p < 0.05,
          fmt("mean argmax %.4f, mean beam(4) %.4f, beam better on %d, worse on %d, sign test p=%.2g",
              sum_greedy / instances, sum_beam / instances, wins, losses, p)};
}

// 5 ---------------------------------------------------------------------------
Outcome rrc_trend() {
  const DistanceHeuristicPolicy policy;
  const int instances = 100, n = 20;
  double mean[3] = {0, 0, 0};
  double initial_mean = 0.0;
  const int budgets[3] = {50, 100, 200};
  for (int k = 0; k < instances; ++k) {
    const Instance inst = random_instance(n, 5000 + static_cast<std::uint64_t>(k));
    const Solution initial = decode(policy, inst, DecodeConfig{}).best_trajectory().solution;
    initial_mean += initial.cost / instances;
    for (int b = 0; b < 3; ++b) {
      RrcConfig rc;
      rc.iterations = budgets[b];
      rc.seed = static_cast<std::uint64_t>(k);
      mean[b] += rrc_run(policy, inst, initial, rc).best.cost / instances;
    }
  }
  return {mean[2] <= mean[1] && mean[1] <= mean[0],
          fmt("mean best cost: initial %.4f, i50 %.4f, i100 %.4f, i200 %.4f", initial_mean, mean[0], mean[1],
              mean[2])};
}

// 6 ---------------------------------------------------------------------------
Outcome sa_identity() {
  Rng pick(6);
  int disagreements = 0;
  for (int i = 0; i < 10000; ++i) {
    double delta = 2.0 * pick.uniform() - 1.0;
    if (i % 10 == 0) delta = 0.0;
    const std::uint64_t seed = pick.next();
    Rng a(seed), b(seed);
    const bool sa = accept(delta, 0.0, a, AcceptMode::simulated_annealing);
    const bool greedy = accept(delta, 0.0, b, AcceptMode::greedy);
    if (sa != greedy || a.next() != b.next()) ++disagreements;
  }
  Rng rng(66);
  const double t = 0.7;
  int accepted = 0;
  for (int i = 0; i < 10000; ++i) accepted += accept(t * std::numbers::ln2, t, rng, AcceptMode::simulated_annealing);
  const double freq = accepted / 10000.0;
  return {disagreements == 0 && std::abs(freq - 0.5) <= 0.02,
          fmt("T=0 disagreements %d/10000; acceptance at delta=T ln2: %.4f", disagreements, freq)};
}

// 7 ---------------------------------------------------------------------------
Outcome augmentation_isometry() {
  Rng rng(7);
  double worst = 0.0;
  for (AugmentKind kind : {AugmentKind::none, AugmentKind::fold2, AugmentKind::fold4, AugmentKind::fold8_flip,
                           AugmentKind::fold8_rotation}) {
    const AugmentSet set = make_transforms(kind);
    for (int i = 0; i < 1000; ++i) {
      const Point p{rng.uniform(), rng.uniform()}, q{rng.uniform(), rng.uniform()};
      for (const auto& t : set.transforms)
        worst = std::max(worst, std::abs(euclidean(t.apply(p), t.apply(q)) - euclidean(p, q)));
    }
  }
  int runs = 0, bad = 0;
  const DistanceHeuristicPolicy distance;
  for (int k = 0; k < 40; ++k) {
    const Instance inst = random_instance(12 + k % 9, 7000 + static_cast<std::uint64_t>(k));
    const NeuralPolicy neural(random_weights(70 + static_cast<std::uint64_t>(k)));
    for (const Policy* policy : {static_cast<const Policy*>(&distance), static_cast<const Policy*>(&neural)})
      for (AugmentKind kind : {AugmentKind::fold2, AugmentKind::fold4, AugmentKind::fold8_flip,
                               AugmentKind::fold8_rotation}) {
        DecodeConfig d;
        d.pomo_size = inst.size();
        const AugmentResult r = augment_solve(*policy, inst, make_transforms(kind), d);
        ++runs;
        if (!r.runs[0].solution || r.best.cost > r.runs[0].solution->cost || !check_feasible(inst, r.best)) ++bad;
      }
  }
  return {worst <= 1e-12 && bad == 0,
          fmt("max distance change %.3g over 1000 pairs per set; %d/%d runs with best above identity", worst, bad,
              runs)};
}

// 8 ---------------------------------------------------------------------------
Outcome gradients() {
  using testutil::check_gradient;
  double worst = 0.0;
  std::string where;
  auto note = [&](const std::string& name, const testutil::GradCheck& g) {
    if (g.max_rel_error > worst) {
      worst = g.max_rel_error;
      where = name + ": " + g.worst;
    }
  };

  // attention layer, 3 nodes, dim 4, through a random linear read-out
  {
    NetworkShape shape{4, 2, 1, 8};
    const PolicyParams p = PolicyParams::init(shape, 81);
    Rng rng(82);
    Matrix h(3, 4), w(3, 4);
    for (double& v : h.values()) v = rng.uniform() * 2 - 1;
    for (double& v : w.values()) v = rng.uniform() * 2 - 1;
    auto loss = [&](const PolicyParams& q) {
      const Matrix out = attention_layer(q.encoder, shape.heads, h);
      double s = 0;
      for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * w.values()[i];
      return s;
    };
    AttentionCache cache;
    attention_layer(p.encoder, shape.heads, h, &cache);
    PolicyParams g = PolicyParams::zeros(shape);
    attention_layer_backward(p.encoder, shape.heads, cache, w, g.encoder);
    note("attention_layer", check_gradient(p, g, loss));
  }

  // decode step on encoder output, log-probability of one slot
  {
    const NetworkShape shape = testutil::small_shape();
    const PolicyParams p = PolicyParams::init(shape, 83);
    const Instance inst = random_instance(6, 84);
    const std::vector<int> avail{0, 2, 3, 5};
    const std::size_t target = 2 + 2;
    auto loss = [&](const PolicyParams& q) {
      const Embeddings e = encode(q, inst);
      return std::log(decode_step(q, e.h, 1, 0, avail).probs[target]);
    };
    EncoderCache ec;
    const Embeddings e = encode(p, inst, &ec);
    StepCache sc;
    const StepOutput out = decode_step(p, e.h, 1, 0, avail, &sc);
    std::vector<double> dl(out.logits.size(), 0.0);
    for (std::size_t i = 2; i < dl.size(); ++i) dl[i] = (i == target ? 1.0 : 0.0) - out.probs[i];
    PolicyParams g = PolicyParams::zeros(shape);
    Matrix de(e.h.rows(), e.h.cols());
    decode_step_backward(p, e.h, sc, dl, g, de);
    encode_backward(p, ec, de, g);
    note("decode_step", check_gradient(p, g, loss));
  }

  // supervised step on an n=4 instance with its optimal label
  {
    const NetworkShape shape = testutil::small_shape();
    const PolicyParams p = PolicyParams::init(shape, 85);
    const Instance inst = tight_instance(4, 86);
    const Solution label = brute_force_optimum(inst).solution;
    const SupervisedResult sr = supervised_step(p, inst, label);
    note("supervised_step",
         check_gradient(p, sr.grad, [&](const PolicyParams& q) { return supervised_step(q, inst, label).loss; }));
  }

  // reinforce step, n=5, one sampled rollout per start
  bool advantages_ok = true, zero_ok = true;
  {
    const NetworkShape shape = testutil::small_shape();
    const PolicyParams p = PolicyParams::init(shape, 87);
    const Instance inst = tight_instance(5, 88);
    const NeuralPolicy policy(std::make_shared<const PolicyParams>(p));
    DecodeConfig d;
    d.strategy = Strategy::softmax_sample;
    d.seed = 89;
    std::vector<Rollout> rollouts;
    for (const auto& t : pomo_rollout(policy, inst, 5, d).trajectories) rollouts.push_back({t.tokens, -t.solution.cost});
    const ReinforceResult rr = reinforce_step(p, inst, rollouts);
    auto surrogate = [&](const PolicyParams& q) {
      double s = 0;
      for (std::size_t i = 0; i < rollouts.size(); ++i)
        s += rr.advantages[i] / rollouts.size() * replay_trajectory(q, inst, rollouts[i].tokens, 2).logprob;
      return s;
    };
    note("reinforce_step", check_gradient(p, rr.grad, surrogate));

    Rng rng(90);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> rewards(2 + trial % 30);
      for (double& r : rewards) r = -100.0 * rng.uniform();
      double sum = 0, scale = 0;
      for (double a : shared_baseline_advantages(rewards)) sum += a;
      for (double r : rewards) scale = std::max(scale, std::abs(r));
      if (std::abs(sum) > rewards.size() * scale * 1e-15) advantages_ok = false;
    }
    for (auto& r : rollouts) r.reward = -3.25;
    const ReinforceResult flat = reinforce_step(p, inst, rollouts);
    flat.grad.for_each_tensor([&](const std::string&, const Matrix& m) {
      for (double v : m.values())
        if (v != 0.0) zero_ok = false;
    });
  }
  return {worst < 1e-4 && advantages_ok && zero_ok,
          fmt("max relative error %.3g (%s); advantages sum to zero: %s; equal rewards give zero gradient: %s", worst,
              where.c_str(), advantages_ok ? "yes" : "no", zero_ok ? "yes" : "no")};
}

// 9 ---------------------------------------------------------------------------
Outcome distributions() {
  const int draws = 10000;
  Rng rng(9);
  const std::vector<double> two{std::log(2.0), 0.0};
  int first = 0;
  for (int i = 0; i < draws; ++i) first += select_softmax(two, rng) == 0;
  const double f_soft = first / double(draws);

  const std::vector<double> logits{0.3, -1.2, 1.1, -std::numeric_limits<double>::infinity(), 0.0};
  const auto p = softmax(logits);
  std::vector<double> counts(logits.size(), 0.0);
  for (int i = 0; i < draws; ++i) counts[static_cast<std::size_t>(select_gumbel(logits, 1.0, rng))] += 1.0 / draws;
  double tv = 0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += 0.5 * std::abs(p[i] - counts[i]);

  const std::vector<double> eps_logits{1.0, 0.0};
  int hits = 0;
  for (int i = 0; i < draws; ++i) hits += select_epsilon_greedy(eps_logits, 0.5, rng) == 0;
  const double f_eps = hits / double(draws);

  return {std::abs(f_soft - 2.0 / 3.0) <= 0.02 && std::abs((1 - f_soft) - 1.0 / 3.0) <= 0.02 && tv < 0.02 &&
              std::abs(f_eps - 0.75) <= 0.02,
          fmt("softmax [ln2,0] -> %.4f/%.4f; gumbel(1) vs softmax TV %.4f; epsilon 0.5 argmax rate %.4f", f_soft,
              1 - f_soft, tv, f_eps)};
}

// 10 --------------------------------------------------------------------------
Outcome move_deltas() {
  const int per_op = 1200;
  std::map<Operator, int> seen;
  double worst = 0.0;
  int moves = 0;
  int cross_single = 0, cross_unmatched = 0, insert_unmatched = 0;
  for (std::uint64_t k = 0; k < 400; ++k) {
    bool need = false;
    for (Operator op : kAllOperators) need = need || seen[op] < per_op;
    if (!need) break;
    const Instance inst = tight_instance(10 + static_cast<int>(k % 11), 10000 + k);
    ConstructConfig cfg;
    cfg.method = k % 2 ? ConstructMethod::nearest_sequential : ConstructMethod::sweep;
    const Solution s = construct(inst, cfg);
    for (Operator op : kAllOperators) {
      const auto all = enumerate_moves(inst, s, op);
      const std::size_t stride = std::max<std::size_t>(1, all.size() / 40);
      for (std::size_t i = 0; i < all.size() && seen[op] < per_op; i += stride) {
        const Solution next = apply_move(inst, s, all[i]);
        worst = std::max(worst, std::abs(evaluate_cost(inst, next) - (evaluate_cost(inst, s) + all[i].delta)));
        ++seen[op];
        ++moves;
      }
    }
    // CROSS with a single customer against an empty slot is an inter-route insert, and back.
    const auto cross = enumerate_moves(inst, s, Operator::cross);
    const auto insert = enumerate_moves(inst, s, Operator::insert_inter);
    auto same = [&](const Solution& x, const Solution& y) { return x.routes == y.routes; };
    for (const auto& c : cross) {
      if (!((c.len1 == 0) != (c.len2 == 0)) || c.len1 + c.len2 != 1) continue;
      ++cross_single;
      const Solution cs = apply_move(inst, s, c);
      bool found = false;
      for (const auto& m : insert)
        if (m.delta == c.delta && same(apply_move(inst, s, m), cs)) {
          found = true;
          break;
        }
      if (!found) ++cross_unmatched;
    }
    for (const auto& m : insert) {
      const Solution is = apply_move(inst, s, m);
      bool found = false;
      for (const auto& c : cross)
        if (c.len1 + c.len2 == 1 && c.delta == m.delta && same(apply_move(inst, s, c), is)) {
          found = true;
          break;
        }
      if (!found) ++insert_unmatched;
    }
  }
  int min_seen = per_op;
  for (Operator op : kAllOperators) min_seen = std::min(min_seen, seen[op]);
  return {moves >= 10000 && min_seen == per_op && worst < 1e-9 && cross_unmatched == 0 && insert_unmatched == 0,
          fmt("%d moves over 9 operators (>= %d each), max |applied - predicted| %.3g; %d single-customer CROSS moves, "
              "%d without an insert twin, %d inserts without a CROSS twin",
              moves, min_seen, worst, cross_single, cross_unmatched, insert_unmatched)};
}

// 11 --------------------------------------------------------------------------
Outcome reproducibility() {
  const std::string spec_text = R"({
    "name": "repro", "seed": 1234,
    "instances": {"generate": {"n": 12, "count": 4}},
    "repetitions": 2,
    "methods": [
      {"type": "construct", "method": ["savings_parallel", "sweep"], "local_search": [false, true]},
      {"type": "decode", "strategy": ["argmax", "softmax", "gumbel", "epsilon", "beam"], "beam": 3,
       "augment": ["none", "fold8_flip"]},
      {"type": "decode", "policy": {"kind": "neural", "init_seed": 5}, "strategy": "softmax", "augment": "fold4"},
      {"type": "rrc", "iterations": [20, 40], "accept": ["greedy", "sa"]}
    ]
  })";
  std::string csv[2];
  std::filesystem::path dirs[2];
  for (int run = 0; run < 2; ++run) {
    std::istringstream in(spec_text);
    ExperimentSpec spec = parse_spec(in);
    dirs[run] = std::filesystem::temp_directory_path() / ("cvrplab_repro_" + std::to_string(run));
    std::filesystem::remove_all(dirs[run]);
    spec.out_dir = dirs[run];
    spec.workers = run == 0 ? 1 : 3;  // scheduling must not matter
    write_outputs(spec, run_experiment(spec));
    std::ifstream f(dirs[run] / "results.csv", std::ios::binary);
    csv[run].assign(std::istreambuf_iterator<char>(f), {});
  }
  const bool same = !csv[0].empty() && csv[0] == csv[1];
  const auto lines = std::count(csv[0].begin(), csv[0].end(), '\n');
  for (const auto& d : dirs) std::filesystem::remove_all(d);
  return {same, fmt("results.csv %s across two runs (%ld lines, %zu bytes)", same ? "identical" : "differs",
                    static_cast<long>(lines), csv[0].size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle dominance", oracle_dominance},
      {"beam identity at width 1", beam_identity},
      {"beam optimality at saturation", beam_saturation},
      {"beam(4) <= argmax on n=20", beam_direction},
      {"rrc best cost trend over iterations", rrc_trend},
      {"simulated annealing acceptance", sa_identity},
      {"augmentation isometry", augmentation_isometry},
      {"gradient correctness", gradients},
      {"selection distributions", distributions},
      {"move delta exactness", move_deltas},
      {"bench reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu acceptance criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
