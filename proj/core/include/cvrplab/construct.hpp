#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "cvrplab/core.hpp"

namespace cvrplab {

enum class ConstructMethod { nearest_sequential, nearest_parallel, insertion, savings_parallel, savings_sequential, sweep };

std::string_view to_string(ConstructMethod method);
std::optional<ConstructMethod> parse_construct_method(std::string_view name);

enum class SweepMode { circular, cluster_then_2opt };

struct ConstructConfig {
  ConstructMethod method = ConstructMethod::savings_parallel;
  // Number of routes grown side by side by nearest_parallel. Defaults to
  // ceil(total demand / capacity).
  std::optional<int> fleet_hint;
  // Without a seed, ties go to the lowest customer index. With a seed, ties
  // are broken by a seeded random ranking of the customers.
  std::optional<std::uint64_t> seed;
  SweepMode sweep_mode = SweepMode::circular;
  // Polar angle (radians, counterclockwise from +x) where the sweep starts.
  double sweep_start_angle = 0.0;
};

// Tie-break ranking: rank[c] for customers 1..n, lower wins.
std::vector<int> tie_ranking(int n, std::optional<std::uint64_t> seed);

Solution nearest_neighbor_sequential(const Instance& instance, const std::vector<int>& rank);
Solution nearest_neighbor_parallel(const Instance& instance, int fleet, const std::vector<int>& rank);
Solution cheapest_insertion(const Instance& instance, const std::vector<int>& rank);

enum class SavingsMode { parallel, sequential };

// Clarke-Wright saving of joining i and j in one route: c_i0 + c_0j - c_ij.
double saving(const Instance& instance, int i, int j);

struct SavingsResult {
  Solution solution;
  std::vector<double> accepted;  // savings of the accepted merges, in order
};

SavingsResult savings(const Instance& instance, SavingsMode mode, const std::vector<int>& rank);

// Polar angle of a customer about the depot, in [0, 2pi) measured from
// start_angle. A customer on the depot gets angle 0.
double sweep_angle(const Instance& instance, int customer, double start_angle = 0.0);

Solution sweep(const Instance& instance, SweepMode mode, const std::vector<int>& rank, double start_angle = 0.0);

// Dispatch on config.method.
Solution construct(const Instance& instance, const ConstructConfig& config = {});

}  // namespace cvrplab
