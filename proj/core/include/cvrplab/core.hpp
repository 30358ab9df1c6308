#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cvrplab {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double euclidean(Point a, Point b);

// How pairwise costs are derived from coordinates. VRPLIB files traditionally
// round EUC_2D distances to the nearest integer; everything else is exact.
enum class Metric { exact, rounded };

// A CVRP instance. Node 0 is the depot, nodes 1..n are the customers.
// Immutable after construction; the constructor validates every invariant
// and precomputes the full distance matrix.
class Instance {
 public:
  Instance(std::string name, Point depot, std::vector<Point> customers, std::vector<double> demands,
           double capacity, Metric metric = Metric::exact);

  const std::string& name() const noexcept { return name_; }
  Point depot() const noexcept { return depot_; }
  const std::vector<Point>& customers() const noexcept { return customers_; }
  const std::vector<double>& demands() const noexcept { return demands_; }
  double capacity() const noexcept { return capacity_; }
  Metric metric() const noexcept { return metric_; }

  // Customer count n.
  int size() const noexcept { return static_cast<int>(customers_.size()); }
  // Node count n + 1 (depot included).
  int node_count() const noexcept { return size() + 1; }

  Point node(int i) const { return i == 0 ? depot_ : customers_[static_cast<std::size_t>(i - 1)]; }
  // Demand of node i; the depot has demand 0.
  double demand(int i) const { return i == 0 ? 0.0 : demands_[static_cast<std::size_t>(i - 1)]; }
  double dist(int i, int j) const {
    return dist_[static_cast<std::size_t>(i) * static_cast<std::size_t>(node_count()) +
                 static_cast<std::size_t>(j)];
  }
  double total_demand() const noexcept { return total_demand_; }

  // Same demands and capacity, new coordinates.
  Instance with_coordinates(std::string name, Point depot, std::vector<Point> customers) const;

  friend bool operator==(const Instance& a, const Instance& b);

 private:
  std::string name_;
  Point depot_;
  std::vector<Point> customers_;
  std::vector<double> demands_;
  double capacity_;
  Metric metric_;
  double total_demand_ = 0.0;
  std::vector<double> dist_;
};

// One route: customer indices in visiting order, depot implicit at both ends.
using Route = std::vector<int>;

struct Solution {
  std::vector<Route> routes;
  double cost = 0.0;

  friend bool operator==(const Solution&, const Solution&) = default;
};

// Builds a solution from routes: drops empty routes and caches the cost.
// Throws StructuralError on an out-of-range index.
Solution make_solution(const Instance& instance, std::vector<Route> routes);

double route_cost(const Instance& instance, std::span<const int> route);
double route_load(const Instance& instance, std::span<const int> route);

// Sum of route lengths depot -> ... -> depot. Throws StructuralError on an
// invalid customer index.
double evaluate_cost(const Instance& instance, const Solution& solution);
double evaluate_cost(const Instance& instance, const std::vector<Route>& routes);

enum class ViolationKind { bad_index, duplicate_customer, missing_customer, capacity_exceeded, empty_route };

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int route = -1;     // offending route, -1 when not route specific
  int customer = -1;  // offending customer, -1 when not customer specific
  std::string message;
};

struct Feasibility {
  bool feasible = true;
  std::vector<Violation> violations;

  explicit operator bool() const noexcept { return feasible; }
};

Feasibility check_feasible(const Instance& instance, const Solution& solution);
Feasibility check_feasible(const Instance& instance, const std::vector<Route>& routes);

struct GapReport {
  double method_cost = 0.0;
  double reference_cost = 0.0;
  double gap_percent = 0.0;
};

// (method - reference) / reference * 100. Negative when the method beats the
// reference. Throws DomainError for a nonpositive reference.
GapReport optimality_gap(double method_cost, double reference_cost);

// Flat token form: 0 r1... 0 r2... 0. Starts and ends with the depot.
std::vector<int> to_tokens(const std::vector<Route>& routes);
inline std::vector<int> to_tokens(const Solution& solution) { return to_tokens(solution.routes); }

// Splits a token sequence at depot tokens. Empty routes are dropped.
std::vector<Route> routes_from_tokens(std::span<const int> tokens);
Solution solution_from_tokens(const Instance& instance, std::span<const int> tokens);

// Cost of walking the token sequence edge by edge.
double token_path_cost(const Instance& instance, std::span<const int> tokens);

}  // namespace cvrplab
