#include "cvrplab/instances.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>

#include "cvrplab/errors.hpp"
#include "cvrplab/rng.hpp"

namespace cvrplab {

double GenConfig::default_capacity(int n) {
  static constexpr std::array<std::pair<int, double>, 7> kTable{{
      {10, 20.0}, {20, 30.0}, {50, 40.0}, {100, 50.0}, {200, 80.0}, {500, 100.0}, {1000, 250.0}}};
  for (const auto& [size, capacity] : kTable)
    if (n <= size) return capacity;
  return kTable.back().second;
}

GenConfig GenConfig::for_size(int n, std::uint64_t seed) {
  GenConfig c;
  c.n = n;
  c.capacity = default_capacity(n);
  c.seed = seed;
  return c;
}

Instance generate(const GenConfig& config) {
  if (config.n < 1) throw PreconditionError("generate: n must be >= 1");
  if (config.demand_low < 1 || config.demand_low > config.demand_high ||
      static_cast<double>(config.demand_high) > config.capacity)
    throw PreconditionError("generate: need 1 <= demand_low <= demand_high <= capacity");

  Rng rng(config.seed);
  const Point depot{rng.uniform(), rng.uniform()};
  std::vector<Point> customers(static_cast<std::size_t>(config.n));
  for (auto& p : customers) p = {rng.uniform(), rng.uniform()};
  std::vector<double> demands(static_cast<std::size_t>(config.n));
  for (auto& d : demands) d = static_cast<double>(rng.uniform_int(config.demand_low, config.demand_high));

  std::string name = config.name.empty()
                         ? "rand" + std::to_string(config.n) + "_" + std::to_string(config.seed)
                         : config.name;
  return Instance(std::move(name), depot, std::move(customers), std::move(demands), config.capacity);
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double to_double(std::string_view s, std::size_t line, const char* what) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(std::string("expected a number for ") + what + ", got '" + std::string(s) + "'", line);
  return v;
}

long to_long(std::string_view s, std::size_t line, const char* what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(std::string("expected an integer for ") + what + ", got '" + std::string(s) + "'", line);
  return v;
}

// Line reader that tracks 1-based line numbers.
class Lines {
 public:
  explicit Lines(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++number_;
    return true;
  }
  std::size_t number() const { return number_; }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

Instance build(std::string name, const std::vector<Point>& nodes, const std::vector<double>& demands,
               double capacity, Metric metric, const std::vector<std::size_t>& demand_lines) {
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(demands[i] > 0.0))
      throw ParseError("customer demand must be positive", demand_lines[i]);
    if (demands[i] > capacity)
      throw ParseError("demand " + format_double(demands[i]) + " exceeds capacity " + format_double(capacity),
                       demand_lines[i]);
  }
  std::vector<Point> customers(nodes.begin() + 1, nodes.end());
  std::vector<double> cust_demands(demands.begin() + 1, demands.end());
  return Instance(std::move(name), nodes.front(), std::move(customers), std::move(cust_demands), capacity, metric);
}

}  // namespace

Instance parse_native(std::istream& in) {
  Lines lines(in);
  std::string line;
  auto next_content = [&]() -> bool {
    while (lines.next(line)) {
      if (!trim(line).empty()) return true;
    }
    return false;
  };

  if (!next_content() || trim(line) != "CVRPLAB 1") throw ParseError("missing 'CVRPLAB 1' header", lines.number());

  std::string name;
  std::optional<double> capacity;
  Metric metric = Metric::exact;
  std::optional<long> node_count;
  while (!node_count) {
    if (!next_content()) throw ParseError("unexpected end of file before NODES", lines.number());
    const std::string_view t = trim(line);
    const auto space = t.find(' ');
    const std::string_view key = t.substr(0, space);
    const std::string_view value = space == std::string_view::npos ? std::string_view{} : trim(t.substr(space));
    if (key == "NAME") {
      name = std::string(value);
    } else if (key == "CAPACITY") {
      capacity = to_double(value, lines.number(), "CAPACITY");
    } else if (key == "METRIC") {
      if (value == "exact") metric = Metric::exact;
      else if (value == "rounded") metric = Metric::rounded;
      else throw ParseError("unknown METRIC '" + std::string(value) + "'", lines.number());
    } else if (key == "NODES") {
      node_count = to_long(value, lines.number(), "NODES");
      if (*node_count < 2) throw ParseError("NODES must be at least 2", lines.number());
    } else {
      throw ParseError("unknown header key '" + std::string(key) + "'", lines.number());
    }
  }
  if (!capacity) throw ParseError("missing CAPACITY", lines.number());

  const auto count = static_cast<std::size_t>(*node_count);
  std::vector<Point> nodes(count);
  std::vector<double> demands(count);
  std::vector<std::size_t> demand_lines(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!next_content()) throw ParseError("unexpected end of file in node list", lines.number());
    const auto f = split_ws(line);
    if (f.size() != 4) throw ParseError("node line needs 'idx x y demand'", lines.number());
    if (to_long(f[0], lines.number(), "node index") != static_cast<long>(i))
      throw ParseError("node index out of sequence, expected " + std::to_string(i), lines.number());
    nodes[i] = {to_double(f[1], lines.number(), "x"), to_double(f[2], lines.number(), "y")};
    demands[i] = to_double(f[3], lines.number(), "demand");
    demand_lines[i] = lines.number();
  }
  return build(std::move(name), nodes, demands, *capacity, metric, demand_lines);
}

Instance parse_vrplib(std::istream& in, const ReadOptions& options) {
  Lines lines(in);
  std::string line;
  std::string name;
  std::optional<long> dimension;
  std::optional<double> capacity;

  std::map<long, Point> coords;
  std::map<long, double> demand_by_id;
  std::map<long, std::size_t> demand_line_by_id;
  std::vector<long> depots;
  bool saw_coords = false;
  bool saw_demands = false;
  bool saw_eof = false;

  enum class Section { none, coords, demands, depots };
  Section section = Section::none;

  while (lines.next(line)) {
    const std::string_view t = trim(line);
    if (t.empty()) continue;

    // Section rows start with a number (or '-1' in DEPOT_SECTION).
    const char c0 = t.front();
    const bool numeric_row = (c0 >= '0' && c0 <= '9') || c0 == '-' || c0 == '+' || c0 == '.';
    if (numeric_row && section != Section::none) {
      const auto f = split_ws(t);
      switch (section) {
        case Section::coords: {
          if (f.size() != 3) throw ParseError("NODE_COORD_SECTION row needs 'id x y'", lines.number());
          const long id = to_long(f[0], lines.number(), "node id");
          coords[id] = {to_double(f[1], lines.number(), "x"), to_double(f[2], lines.number(), "y")};
          break;
        }
        case Section::demands: {
          if (f.size() != 2) throw ParseError("DEMAND_SECTION row needs 'id demand'", lines.number());
          const long id = to_long(f[0], lines.number(), "node id");
          demand_by_id[id] = to_double(f[1], lines.number(), "demand");
          demand_line_by_id[id] = lines.number();
          break;
        }
        case Section::depots: {
          for (auto v : f) {
            const long id = to_long(v, lines.number(), "depot id");
            if (id == -1) {
              section = Section::none;
              break;
            }
            depots.push_back(id);
          }
          break;
        }
        case Section::none: break;
      }
      continue;
    }
    if (numeric_row) throw ParseError("data row outside of a section", lines.number());

    // Keyword line: "KEY : value", "KEY: value" or a bare section name.
    std::string_view key = t;
    std::string_view value;
    if (const auto colon = t.find(':'); colon != std::string_view::npos) {
      key = trim(t.substr(0, colon));
      value = trim(t.substr(colon + 1));
    } else if (const auto space = t.find_first_of(" \t"); space != std::string_view::npos) {
      key = t.substr(0, space);
      value = trim(t.substr(space));
    }

    section = Section::none;
    if (key == "NAME") {
      name = std::string(value);
    } else if (key == "COMMENT" || key == "TYPE") {
      // informational
    } else if (key == "DIMENSION") {
      dimension = to_long(value, lines.number(), "DIMENSION");
      if (*dimension < 2) throw ParseError("DIMENSION must be at least 2", lines.number());
    } else if (key == "CAPACITY") {
      capacity = to_double(value, lines.number(), "CAPACITY");
    } else if (key == "EDGE_WEIGHT_TYPE") {
      if (value != "EUC_2D")
        throw ParseError("unsupported EDGE_WEIGHT_TYPE '" + std::string(value) + "' (only EUC_2D)", lines.number());
    } else if (key == "NODE_COORD_SECTION") {
      section = Section::coords;
      saw_coords = true;
    } else if (key == "DEMAND_SECTION") {
      section = Section::demands;
      saw_demands = true;
    } else if (key == "DEPOT_SECTION") {
      section = Section::depots;
    } else if (key == "EOF") {
      saw_eof = true;
      break;
    } else {
      throw ParseError("unknown keyword '" + std::string(key) + "'", lines.number());
    }
  }

  const std::size_t end_line = lines.number();
  if (!saw_coords) throw ParseError("missing NODE_COORD_SECTION", end_line);
  if (!saw_demands) throw ParseError("missing DEMAND_SECTION", end_line);
  if (!capacity) throw ParseError("missing CAPACITY", end_line);
  (void)saw_eof;  // EOF marker is optional in practice

  if (!dimension) dimension = static_cast<long>(coords.size());
  if (static_cast<long>(coords.size()) != *dimension)
    throw ParseError("NODE_COORD_SECTION has " + std::to_string(coords.size()) + " nodes, DIMENSION is " +
                         std::to_string(*dimension),
                     end_line);
  for (const auto& [id, p] : coords) {
    (void)p;
    if (!demand_by_id.count(id)) throw ParseError("no demand for node " + std::to_string(id), end_line);
  }
  if (demand_by_id.size() != coords.size()) throw ParseError("DEMAND_SECTION lists unknown nodes", end_line);
  if (depots.size() > 1) throw ParseError("multiple depots are not supported", end_line);
  const long depot_id = depots.empty() ? coords.begin()->first : depots.front();
  if (!coords.count(depot_id)) throw ParseError("depot " + std::to_string(depot_id) + " has no coordinates", end_line);

  std::vector<Point> nodes{coords.at(depot_id)};
  std::vector<double> demands{0.0};
  std::vector<std::size_t> demand_lines{demand_line_by_id.at(depot_id)};
  for (const auto& [id, p] : coords) {
    if (id == depot_id) continue;
    nodes.push_back(p);
    demands.push_back(demand_by_id.at(id));
    demand_lines.push_back(demand_line_by_id.at(id));
  }
  return build(std::move(name), nodes, demands, *capacity,
               options.round_vrplib_distances ? Metric::rounded : Metric::exact, demand_lines);
}

Instance parse_instance(std::istream& in, const ReadOptions& options) {
  std::string first;
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::istringstream probe(text);
  while (std::getline(probe, first)) {
    if (!trim(first).empty()) break;
  }
  std::istringstream body(text);
  if (trim(first) == "CVRPLAB 1") return parse_native(body);
  return parse_vrplib(body, options);
}

Instance read_instance(const std::filesystem::path& path, const ReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  return parse_instance(in, options);
}

void write_native(const Instance& instance, std::ostream& out) {
  out << "CVRPLAB 1\n";
  out << "NAME " << instance.name() << '\n';
  out << "CAPACITY " << format_double(instance.capacity()) << '\n';
  out << "METRIC " << (instance.metric() == Metric::rounded ? "rounded" : "exact") << '\n';
  out << "NODES " << instance.node_count() << '\n';
  for (int i = 0; i < instance.node_count(); ++i) {
    const Point p = instance.node(i);
    out << i << ' ' << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(instance.demand(i))
        << '\n';
  }
}

void write_vrplib(const Instance& instance, std::ostream& out) {
  out << "NAME : " << instance.name() << '\n';
  out << "TYPE : CVRP\n";
  out << "DIMENSION : " << instance.node_count() << '\n';
  out << "EDGE_WEIGHT_TYPE : EUC_2D\n";
  out << "CAPACITY : " << format_double(instance.capacity()) << '\n';
  out << "NODE_COORD_SECTION\n";
  for (int i = 0; i < instance.node_count(); ++i) {
    const Point p = instance.node(i);
    out << i + 1 << ' ' << format_double(p.x) << ' ' << format_double(p.y) << '\n';
  }
  out << "DEMAND_SECTION\n";
  for (int i = 0; i < instance.node_count(); ++i) out << i + 1 << ' ' << format_double(instance.demand(i)) << '\n';
  out << "DEPOT_SECTION\n1\n-1\nEOF\n";
}

void write_instance(const Instance& instance, const std::filesystem::path& path, InstanceFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  if (format == InstanceFormat::native) write_native(instance, out);
  else write_vrplib(instance, out);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

ReferenceSet parse_references(std::istream& in) {
  ReferenceSet refs;
  Lines lines(in);
  std::string line;
  while (lines.next(line)) {
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto comma = t.rfind(',');
    if (comma == std::string_view::npos) throw ParseError("expected 'name,cost'", lines.number());
    const std::string name(trim(t.substr(0, comma)));
    const std::string_view cost_text = trim(t.substr(comma + 1));
    if (lines.number() == 1 && name == "name" && cost_text == "cost") continue;  // header row
    if (name.empty()) throw ParseError("empty instance name", lines.number());
    const double cost = to_double(cost_text, lines.number(), "cost");
    if (!(cost > 0.0)) throw ParseError("reference cost for '" + name + "' must be positive", lines.number());
    if (refs.costs.count(name))
      refs.warnings.push_back("line " + std::to_string(lines.number()) + ": duplicate reference for '" + name +
                              "', last value wins");
    refs.costs[name] = cost;
  }
  return refs;
}

ReferenceSet load_references(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  return parse_references(in);
}

}  // namespace cvrplab
