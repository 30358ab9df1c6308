#include "cvrplab/core.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "cvrplab/errors.hpp"

namespace cvrplab {

double euclidean(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

Instance::Instance(std::string name, Point depot, std::vector<Point> customers, std::vector<double> demands,
                   double capacity, Metric metric)
    : name_(std::move(name)),
      depot_(depot),
      customers_(std::move(customers)),
      demands_(std::move(demands)),
      capacity_(capacity),
      metric_(metric) {
  if (customers_.empty()) throw PreconditionError("instance '" + name_ + "' has no customers");
  if (demands_.size() != customers_.size())
    throw PreconditionError("instance '" + name_ + "': " + std::to_string(demands_.size()) + " demands for " +
                            std::to_string(customers_.size()) + " customers");
  if (!(capacity_ > 0.0) || !std::isfinite(capacity_))
    throw PreconditionError("instance '" + name_ + "': capacity must be positive and finite");
  if (!std::isfinite(depot_.x) || !std::isfinite(depot_.y))
    throw PreconditionError("instance '" + name_ + "': non-finite depot coordinate");
  for (std::size_t i = 0; i < customers_.size(); ++i) {
    const double d = demands_[i];
    if (!(d > 0.0) || d > capacity_)
      throw PreconditionError("instance '" + name_ + "': customer " + std::to_string(i + 1) + " demand " +
                              std::to_string(d) + " outside (0, capacity]");
    if (!std::isfinite(customers_[i].x) || !std::isfinite(customers_[i].y))
      throw PreconditionError("instance '" + name_ + "': non-finite coordinate for customer " +
                              std::to_string(i + 1));
    total_demand_ += d;
  }

  const auto nodes = static_cast<std::size_t>(node_count());
  dist_.assign(nodes * nodes, 0.0);
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = i + 1; j < nodes; ++j) {
      double d = euclidean(node(static_cast<int>(i)), node(static_cast<int>(j)));
      if (metric_ == Metric::rounded) d = std::floor(d + 0.5);
      dist_[i * nodes + j] = d;
      dist_[j * nodes + i] = d;
    }
  }
}

Instance Instance::with_coordinates(std::string name, Point depot, std::vector<Point> customers) const {
  return Instance(std::move(name), depot, std::move(customers), demands_, capacity_, metric_);
}

bool operator==(const Instance& a, const Instance& b) {
  return a.name_ == b.name_ && a.depot_ == b.depot_ && a.customers_ == b.customers_ &&
         a.demands_ == b.demands_ && a.capacity_ == b.capacity_ && a.metric_ == b.metric_;
}

namespace {

void check_index(const Instance& instance, int c) {
  if (c < 1 || c > instance.size())
    throw StructuralError("customer index " + std::to_string(c) + " outside [1, " +
                          std::to_string(instance.size()) + "]");
}

}  // namespace

double route_cost(const Instance& instance, std::span<const int> route) {
  if (route.empty()) return 0.0;
  double cost = 0.0;
  int prev = 0;
  for (int c : route) {
    check_index(instance, c);
    cost += instance.dist(prev, c);
    prev = c;
  }
  return cost + instance.dist(prev, 0);
}

double route_load(const Instance& instance, std::span<const int> route) {
  double load = 0.0;
  for (int c : route) {
    check_index(instance, c);
    load += instance.demand(c);
  }
  return load;
}

double evaluate_cost(const Instance& instance, const std::vector<Route>& routes) {
  double cost = 0.0;
  for (const auto& r : routes) cost += route_cost(instance, r);
  return cost;
}

double evaluate_cost(const Instance& instance, const Solution& solution) {
  return evaluate_cost(instance, solution.routes);
}

Solution make_solution(const Instance& instance, std::vector<Route> routes) {
  std::erase_if(routes, [](const Route& r) { return r.empty(); });
  Solution s;
  s.cost = evaluate_cost(instance, routes);
  s.routes = std::move(routes);
  return s;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::bad_index: return "bad_index";
    case ViolationKind::duplicate_customer: return "duplicate_customer";
    case ViolationKind::missing_customer: return "missing_customer";
    case ViolationKind::capacity_exceeded: return "capacity_exceeded";
    case ViolationKind::empty_route: return "empty_route";
  }
  return "unknown";
}

Feasibility check_feasible(const Instance& instance, const std::vector<Route>& routes) {
  Feasibility f;
  auto fail = [&f](ViolationKind kind, int route, int customer, std::string message) {
    f.feasible = false;
    f.violations.push_back({kind, route, customer, std::move(message)});
  };

  std::vector<int> seen(static_cast<std::size_t>(instance.node_count()), -1);
  for (std::size_t r = 0; r < routes.size(); ++r) {
    const int ri = static_cast<int>(r);
    if (routes[r].empty()) {
      fail(ViolationKind::empty_route, ri, -1, "route " + std::to_string(r) + " is empty");
      continue;
    }
    double load = 0.0;
    for (int c : routes[r]) {
      if (c < 1 || c > instance.size()) {
        fail(ViolationKind::bad_index, ri, c, "route " + std::to_string(r) + " has invalid index " + std::to_string(c));
        continue;
      }
      auto& owner = seen[static_cast<std::size_t>(c)];
      if (owner >= 0) {
        fail(ViolationKind::duplicate_customer, ri, c,
             "customer " + std::to_string(c) + " served by route " + std::to_string(owner) + " and route " +
                 std::to_string(r));
      } else {
        owner = ri;
      }
      load += instance.demand(c);
    }
    if (load > instance.capacity()) {
      fail(ViolationKind::capacity_exceeded, ri, -1,
           "route " + std::to_string(r) + " load " + std::to_string(load) + " exceeds capacity " +
               std::to_string(instance.capacity()));
    }
  }
  for (int c = 1; c <= instance.size(); ++c) {
    if (seen[static_cast<std::size_t>(c)] < 0)
      fail(ViolationKind::missing_customer, -1, c, "customer " + std::to_string(c) + " is not served");
  }
  return f;
}

Feasibility check_feasible(const Instance& instance, const Solution& solution) {
  return check_feasible(instance, solution.routes);
}

GapReport optimality_gap(double method_cost, double reference_cost) {
  if (!(reference_cost > 0.0))
    throw DomainError("reference cost must be positive, got " + std::to_string(reference_cost));
  return {method_cost, reference_cost, (method_cost - reference_cost) / reference_cost * 100.0};
}

std::vector<int> to_tokens(const std::vector<Route>& routes) {
  std::vector<int> tokens{0};
  for (const auto& r : routes) {
    if (r.empty()) continue;
    tokens.insert(tokens.end(), r.begin(), r.end());
    tokens.push_back(0);
  }
  if (tokens.size() == 1) tokens.push_back(0);
  return tokens;
}

std::vector<Route> routes_from_tokens(std::span<const int> tokens) {
  std::vector<Route> routes;
  Route current;
  for (int t : tokens) {
    if (t == 0) {
      if (!current.empty()) routes.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(t);
    }
  }
  if (!current.empty()) routes.push_back(std::move(current));
  return routes;
}

Solution solution_from_tokens(const Instance& instance, std::span<const int> tokens) {
  return make_solution(instance, routes_from_tokens(tokens));
}

double token_path_cost(const Instance& instance, std::span<const int> tokens) {
  double cost = 0.0;
  for (std::size_t k = 1; k < tokens.size(); ++k) cost += instance.dist(tokens[k - 1], tokens[k]);
  return cost;
}

}  // namespace cvrplab
