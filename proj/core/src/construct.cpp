#include "cvrplab/construct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "cvrplab/errors.hpp"
#include "cvrplab/improve.hpp"
#include "cvrplab/rng.hpp"

namespace cvrplab {

std::string_view to_string(ConstructMethod method) {
  switch (method) {
    case ConstructMethod::nearest_sequential: return "nearest_sequential";
    case ConstructMethod::nearest_parallel: return "nearest_parallel";
    case ConstructMethod::insertion: return "insertion";
    case ConstructMethod::savings_parallel: return "savings_parallel";
    case ConstructMethod::savings_sequential: return "savings_sequential";
    case ConstructMethod::sweep: return "sweep";
  }
  return "unknown";
}

std::optional<ConstructMethod> parse_construct_method(std::string_view name) {
  for (auto m : {ConstructMethod::nearest_sequential, ConstructMethod::nearest_parallel, ConstructMethod::insertion,
                 ConstructMethod::savings_parallel, ConstructMethod::savings_sequential, ConstructMethod::sweep})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

std::vector<int> tie_ranking(int n, std::optional<std::uint64_t> seed) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 1);
  if (seed) {
    Rng rng(*seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::vector<int> rank(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t k = 0; k < order.size(); ++k) rank[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
  return rank;
}

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

// Customers 1..n sorted by tie rank.
std::vector<int> by_rank(const std::vector<int>& rank) {
  std::vector<int> order(rank.size() - 1);
  std::iota(order.begin(), order.end(), 1);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return rank[idx(a)] < rank[idx(b)]; });
  return order;
}

void check_rank(const Instance& instance, const std::vector<int>& rank) {
  if (static_cast<int>(rank.size()) != instance.size() + 1)
    throw PreconditionError("tie ranking size does not match the instance");
}

}  // namespace

Solution nearest_neighbor_sequential(const Instance& instance, const std::vector<int>& rank) {
  check_rank(instance, rank);
  const auto order = by_rank(rank);
  std::vector<char> routed(idx(instance.node_count()), 0);
  int remaining = instance.size();
  std::vector<Route> routes;
  while (remaining > 0) {
    Route route;
    int current = 0;
    double load = 0.0;
    for (;;) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c : order) {
        if (routed[idx(c)] || load + instance.demand(c) > instance.capacity()) continue;
        const double dc = instance.dist(current, c);
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      if (best < 0) break;
      routed[idx(best)] = 1;
      --remaining;
      load += instance.demand(best);
      route.push_back(best);
      current = best;
    }
    routes.push_back(std::move(route));
  }
  return make_solution(instance, std::move(routes));
}

Solution nearest_neighbor_parallel(const Instance& instance, int fleet, const std::vector<int>& rank) {
  check_rank(instance, rank);
  if (fleet < 1) throw PreconditionError("nearest_neighbor_parallel: fleet must be >= 1");
  const auto order = by_rank(rank);
  std::vector<char> routed(idx(instance.node_count()), 0);
  int remaining = instance.size();

  std::vector<Route> routes(idx(fleet));
  std::vector<double> loads(idx(fleet), 0.0);
  auto end_of = [&](int r) { return routes[idx(r)].empty() ? 0 : routes[idx(r)].back(); };

  while (remaining > 0) {
    // One round extends every route by at most one customer. Competing
    // requests are settled by the cheapest extension first.
    std::vector<char> pending(idx(fleet), 1);
    bool added = false;
    for (;;) {
      int best_r = -1, best_c = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c : order) {
        if (routed[idx(c)]) continue;
        for (int r = 0; r < fleet; ++r) {
          if (!pending[idx(r)] || loads[idx(r)] + instance.demand(c) > instance.capacity()) continue;
          const double dc = instance.dist(end_of(r), c);
          if (dc < best_d) {
            best_d = dc;
            best_r = r;
            best_c = c;
          }
        }
      }
      if (best_r < 0) break;
      routes[idx(best_r)].push_back(best_c);
      loads[idx(best_r)] += instance.demand(best_c);
      routed[idx(best_c)] = 1;
      pending[idx(best_r)] = 0;
      --remaining;
      added = true;
    }
    if (!added) break;
  }

  // Whatever the K routes could not absorb is routed sequentially.
  while (remaining > 0) {
    Route route;
    int current = 0;
    double load = 0.0;
    for (;;) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c : order) {
        if (routed[idx(c)] || load + instance.demand(c) > instance.capacity()) continue;
        const double dc = instance.dist(current, c);
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      if (best < 0) break;
      routed[idx(best)] = 1;
      --remaining;
      load += instance.demand(best);
      route.push_back(best);
      current = best;
    }
    routes.push_back(std::move(route));
  }
  return make_solution(instance, std::move(routes));
}

Solution cheapest_insertion(const Instance& instance, const std::vector<int>& rank) {
  check_rank(instance, rank);
  const auto order = by_rank(rank);
  std::vector<char> routed(idx(instance.node_count()), 0);
  std::vector<Route> routes;
  std::vector<double> loads;

  for (int step = 0; step < instance.size(); ++step) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = -1, best_r = -1, best_pos = -1;  // best_r == -1: open a new route
    for (int c : order) {
      if (routed[idx(c)]) continue;
      for (std::size_t r = 0; r < routes.size(); ++r) {
        if (loads[r] + instance.demand(c) > instance.capacity()) continue;
        const Route& R = routes[r];
        for (std::size_t pos = 0; pos <= R.size(); ++pos) {
          const int before = pos == 0 ? 0 : R[pos - 1];
          const int after = pos == R.size() ? 0 : R[pos];
          const double cost = instance.dist(before, c) + instance.dist(c, after) - instance.dist(before, after);
          if (cost < best) {
            best = cost;
            best_c = c;
            best_r = static_cast<int>(r);
            best_pos = static_cast<int>(pos);
          }
        }
      }
      const double fresh = 2.0 * instance.dist(0, c);
      if (fresh < best) {
        best = fresh;
        best_c = c;
        best_r = -1;
        best_pos = 0;
      }
    }
    if (best_c < 0) throw StructuralError("insertion found no customer to place");
    routed[idx(best_c)] = 1;
    if (best_r < 0) {
      routes.push_back({best_c});
      loads.push_back(instance.demand(best_c));
    } else {
      Route& R = routes[idx(best_r)];
      R.insert(R.begin() + best_pos, best_c);
      loads[idx(best_r)] += instance.demand(best_c);
    }
  }
  return make_solution(instance, std::move(routes));
}

double saving(const Instance& instance, int i, int j) {
  return instance.dist(i, 0) + instance.dist(0, j) - instance.dist(i, j);
}

namespace {

struct Pair {
  double s;
  int i;
  int j;
};

// All customer pairs with nonnegative saving, best first.
std::vector<Pair> sorted_savings(const Instance& instance, const std::vector<int>& rank) {
  std::vector<Pair> pairs;
  const int n = instance.size();
  pairs.reserve(idx(n) * idx(n - 1) / 2);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      const double s = saving(instance, i, j);
      if (s >= 0.0) pairs.push_back({s, i, j});
    }
  auto key = [&rank](const Pair& p) {
    const int a = rank[idx(p.i)], b = rank[idx(p.j)];
    return std::pair{std::min(a, b), std::max(a, b)};
  };
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& x, const Pair& y) {
    if (x.s != y.s) return x.s > y.s;
    return key(x) < key(y);
  });
  return pairs;
}

class RouteMerger {
 public:
  explicit RouteMerger(const Instance& instance) : inst_(instance) {
    const int n = instance.size();
    route_of_.assign(idx(n) + 1, -1);
    for (int c = 1; c <= n; ++c) {
      route_of_[idx(c)] = c - 1;
      routes_.push_back({c});
      loads_.push_back(instance.demand(c));
    }
  }

  int route_of(int c) const { return route_of_[idx(c)]; }
  bool is_endpoint(int c) const {
    const Route& r = routes_[idx(route_of(c))];
    return r.front() == c || r.back() == c;
  }

  // Merge is possible when i and j sit at endpoints of two distinct routes
  // whose combined load fits.
  bool can_merge(int i, int j) const {
    const int ri = route_of(i), rj = route_of(j);
    return ri != rj && is_endpoint(i) && is_endpoint(j) &&
           loads_[idx(ri)] + loads_[idx(rj)] <= inst_.capacity();
  }

  // Joins ...i with j... and returns the surviving route id.
  int merge(int i, int j) {
    const int ri = route_of(i), rj = route_of(j);
    Route& A = routes_[idx(ri)];
    Route& B = routes_[idx(rj)];
    if (A.back() != i) std::reverse(A.begin(), A.end());
    if (B.front() != j) std::reverse(B.begin(), B.end());
    for (int c : B) route_of_[idx(c)] = ri;
    A.insert(A.end(), B.begin(), B.end());
    B.clear();
    loads_[idx(ri)] += loads_[idx(rj)];
    loads_[idx(rj)] = 0.0;
    return ri;
  }

  std::vector<Route> take() { return std::move(routes_); }

 private:
  const Instance& inst_;
  std::vector<int> route_of_;
  std::vector<Route> routes_;
  std::vector<double> loads_;
};

}  // namespace

SavingsResult savings(const Instance& instance, SavingsMode mode, const std::vector<int>& rank) {
  check_rank(instance, rank);
  const auto pairs = sorted_savings(instance, rank);
  RouteMerger merger(instance);
  SavingsResult result;

  if (mode == SavingsMode::parallel) {
    for (const auto& p : pairs) {
      if (!merger.can_merge(p.i, p.j)) continue;
      merger.merge(p.i, p.j);
      result.accepted.push_back(p.s);
    }
  } else {
    std::vector<char> closed(idx(instance.size()), 0);
    auto open = [&](int c) { return !closed[idx(merger.route_of(c))]; };
    for (;;) {
      // Seed the next route with the best merge still available.
      int current = -1;
      for (const auto& p : pairs) {
        if (open(p.i) && open(p.j) && merger.can_merge(p.i, p.j)) {
          current = merger.merge(p.i, p.j);
          result.accepted.push_back(p.s);
          break;
        }
      }
      if (current < 0) break;
      // Extend it until no feasible merge touches one of its endpoints.
      for (bool grown = true; grown;) {
        grown = false;
        for (const auto& p : pairs) {
          const bool i_in = merger.route_of(p.i) == current;
          const bool j_in = merger.route_of(p.j) == current;
          if (i_in == j_in) continue;
          const int other = i_in ? p.j : p.i;
          if (!open(other) || !merger.can_merge(p.i, p.j)) continue;
          current = merger.merge(i_in ? p.i : p.j, other);
          result.accepted.push_back(p.s);
          grown = true;
          break;
        }
      }
      closed[idx(current)] = 1;
    }
  }
  result.solution = make_solution(instance, merger.take());
  return result;
}

double sweep_angle(const Instance& instance, int customer, double start_angle) {
  const Point p = instance.node(customer);
  const Point o = instance.depot();
  const double dx = p.x - o.x;
  const double dy = p.y - o.y;
  if (dx == 0.0 && dy == 0.0) return 0.0;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(std::atan2(dy, dx) - start_angle, two_pi);
  if (a < 0.0) a += two_pi;
  if (a >= two_pi) a = 0.0;
  return a;
}

Solution sweep(const Instance& instance, SweepMode mode, const std::vector<int>& rank, double start_angle) {
  check_rank(instance, rank);
  std::vector<int> order(idx(instance.size()));
  std::iota(order.begin(), order.end(), 1);
  std::vector<double> angle(idx(instance.node_count()), 0.0);
  for (int c : order) angle[idx(c)] = sweep_angle(instance, c, start_angle);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (angle[idx(a)] != angle[idx(b)]) return angle[idx(a)] < angle[idx(b)];
    return rank[idx(a)] < rank[idx(b)];
  });

  std::vector<Route> routes;
  Route current;
  double load = 0.0;
  for (int c : order) {
    if (load + instance.demand(c) > instance.capacity()) {
      routes.push_back(std::move(current));
      current.clear();
      load = 0.0;
    }
    current.push_back(c);
    load += instance.demand(c);
  }
  routes.push_back(std::move(current));

  if (mode == SweepMode::cluster_then_2opt)
    for (auto& r : routes) r = two_opt_route(instance, std::move(r));
  return make_solution(instance, std::move(routes));
}

Solution construct(const Instance& instance, const ConstructConfig& config) {
  if (config.fleet_hint && *config.fleet_hint < 1) throw PreconditionError("fleet_hint must be >= 1");
  const auto rank = tie_ranking(instance.size(), config.seed);
  switch (config.method) {
    case ConstructMethod::nearest_sequential: return nearest_neighbor_sequential(instance, rank);
    case ConstructMethod::nearest_parallel: {
      const int fleet =
          config.fleet_hint.value_or(static_cast<int>(std::ceil(instance.total_demand() / instance.capacity())));
      return nearest_neighbor_parallel(instance, std::max(1, fleet), rank);
    }
    case ConstructMethod::insertion: return cheapest_insertion(instance, rank);
    case ConstructMethod::savings_parallel: return savings(instance, SavingsMode::parallel, rank).solution;
    case ConstructMethod::savings_sequential: return savings(instance, SavingsMode::sequential, rank).solution;
    case ConstructMethod::sweep: return sweep(instance, config.sweep_mode, rank, config.sweep_start_angle);
  }
  throw PreconditionError("unknown construction method");
}

}  // namespace cvrplab
