#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cvrplab/core.hpp"

namespace cvrplab {

// Random instance generation: depot and customers uniform on the unit square,
// integer demands uniform on [demand_low, demand_high].
struct GenConfig {
  int n = 100;
  double capacity = 50.0;
  int demand_low = 1;
  int demand_high = 9;
  std::uint64_t seed = 0;
  std::string name;  // defaults to "rand<n>_<seed>"

  // Capacity convention of the constructive NCO literature:
  // 10->20, 20->30, 50->40, 100->50, 200->80, 500->100, 1000->250.
  // Sizes in between take the value of the next listed size.
  static double default_capacity(int n);
  static GenConfig for_size(int n, std::uint64_t seed);
};

// Throws PreconditionError on an invalid config.
Instance generate(const GenConfig& config);

// Instance files.
//
// Native format (exact, lossless):
//   CVRPLAB 1
//   NAME <text>
//   CAPACITY <q>
//   METRIC exact|rounded
//   NODES <n+1>
//   <idx> <x> <y> <demand>      one line per node, depot first (idx 0)
//
// VRPLIB subset: NAME, DIMENSION, CAPACITY, EDGE_WEIGHT_TYPE (EUC_2D),
// NODE_COORD_SECTION, DEMAND_SECTION, DEPOT_SECTION, EOF. The depot becomes
// node 0; the remaining nodes keep their file order.
enum class InstanceFormat { native, vrplib };

struct ReadOptions {
  // Round VRPLIB EUC_2D distances to the nearest integer (TSPLIB convention).
  bool round_vrplib_distances = false;
};

Instance read_instance(const std::filesystem::path& path, const ReadOptions& options = {});
Instance parse_instance(std::istream& in, const ReadOptions& options = {});
Instance parse_native(std::istream& in);
Instance parse_vrplib(std::istream& in, const ReadOptions& options = {});

void write_instance(const Instance& instance, const std::filesystem::path& path,
                    InstanceFormat format = InstanceFormat::native);
void write_native(const Instance& instance, std::ostream& out);
void write_vrplib(const Instance& instance, std::ostream& out);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// Reference costs keyed by instance name, read from "name,cost" rows.
struct ReferenceSet {
  std::map<std::string, double> costs;
  std::vector<std::string> warnings;

  const double* find(const std::string& name) const {
    auto it = costs.find(name);
    return it == costs.end() ? nullptr : &it->second;
  }
};

ReferenceSet load_references(const std::filesystem::path& path);
ReferenceSet parse_references(std::istream& in);

}  // namespace cvrplab
