#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cvrplab/construct.hpp"
#include "cvrplab/core.hpp"
#include "cvrplab/instances.hpp"
#include "cvrplab/neural.hpp"
#include "cvrplab/rng.hpp"

namespace testutil {

using namespace cvrplab;

inline Instance random_instance(int n, std::uint64_t seed, std::optional<double> capacity = std::nullopt) {
  GenConfig g = GenConfig::for_size(n, seed);
  if (capacity) g.capacity = *capacity;
  return generate(g);
}

// Random instance whose capacity forces a handful of routes.
inline Instance tight_instance(int n, std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double q = static_cast<double>(rng.uniform_int(9, 25));
  return random_instance(n, seed, q);
}

// Held-Karp per customer subset, then a partition DP over subsets. Written
// independently of the brute force in the library.
inline double dp_optimum(const Instance& inst) {
  const int n = inst.size();
  const std::uint32_t full = (1u << n) - 1;
  const double inf = std::numeric_limits<double>::infinity();
  // path[mask][j]: depot -> visits mask, ends at customer j (bit j)
  std::vector<std::vector<double>> path(full + 1, std::vector<double>(static_cast<std::size_t>(n), inf));
  for (int j = 0; j < n; ++j) path[1u << j][static_cast<std::size_t>(j)] = inst.dist(0, j + 1);
  for (std::uint32_t mask = 1; mask <= full; ++mask)
    for (int j = 0; j < n; ++j) {
      const double base = path[mask][static_cast<std::size_t>(j)];
      if (!(mask & (1u << j)) || base == inf) continue;
      for (int k = 0; k < n; ++k) {
        if (mask & (1u << k)) continue;
        double& t = path[mask | (1u << k)][static_cast<std::size_t>(k)];
        t = std::min(t, base + inst.dist(j + 1, k + 1));
      }
    }
  std::vector<double> tour(full + 1, inf);
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    double load = 0;
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) load += inst.demand(j + 1);
    if (load > inst.capacity()) continue;
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) tour[mask] = std::min(tour[mask], path[mask][static_cast<std::size_t>(j)] + inst.dist(j + 1, 0));
  }
  std::vector<double> best(full + 1, inf);
  best[0] = 0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const std::uint32_t low = mask & (~mask + 1);
    for (std::uint32_t sub = mask; sub; sub = (sub - 1) & mask)
      if ((sub & low) && tour[sub] < inf) best[mask] = std::min(best[mask], tour[sub] + best[mask ^ sub]);
  }
  return best[full];
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

// Central differences of f over every parameter entry against analytic.
// Relative error |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradient(PolicyParams params, const PolicyParams& analytic,
                                const std::function<double(const PolicyParams&)>& f, double h = 1e-5,
                                double floor = 1e-6) {
  std::vector<const Matrix*> grads;
  analytic.for_each_tensor([&](const std::string&, const Matrix& m) { grads.push_back(&m); });
  std::vector<std::pair<std::string, Matrix*>> tensors;
  params.for_each_tensor([&](const std::string& name, Matrix& m) { tensors.emplace_back(name, &m); });
  GradCheck out;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto values = tensors[t].second->values();
    const auto g = grads[t]->values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = f(params);
      values[i] = saved - h;
      const double down = f(params);
      values[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double rel = std::abs(numeric - g[i]) / std::max({std::abs(numeric), std::abs(g[i]), floor});
      ++out.checked;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = tensors[t].first + "[" + std::to_string(i) + "] analytic " + std::to_string(g[i]) + " numeric " +
                    std::to_string(numeric);
      }
    }
  }
  return out;
}

inline ConstructConfig with_method(ConstructMethod m) {
  ConstructConfig c;
  c.method = m;
  return c;
}

inline NetworkShape small_shape() { return NetworkShape{8, 2, 2, 16}; }

}  // namespace testutil
