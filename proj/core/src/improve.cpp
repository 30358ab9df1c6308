#include "cvrplab/improve.hpp"

#include <algorithm>
#include <string>

#include "cvrplab/errors.hpp"

namespace cvrplab {

std::string_view to_string(Operator op) {
  switch (op) {
    case Operator::relocate: return "relocate";
    case Operator::exchange: return "exchange";
    case Operator::two_opt: return "two_opt";
    case Operator::or_opt: return "or_opt";
    case Operator::two_opt_star: return "two_opt_star";
    case Operator::insert_inter: return "insert_inter";
    case Operator::swap_inter: return "swap_inter";
    case Operator::cross: return "cross";
    case Operator::lambda_interchange: return "lambda_interchange";
  }
  return "unknown";
}

std::optional<Operator> parse_operator(std::string_view name) {
  for (Operator op : kAllOperators)
    if (to_string(op) == name) return op;
  return std::nullopt;
}

std::uint64_t fingerprint(const Solution& solution) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  mix(solution.routes.size());
  for (const auto& r : solution.routes) {
    mix(0xffffffffULL ^ r.size());
    for (int c : r) mix(static_cast<std::uint64_t>(c));
  }
  return h;
}

namespace {

// Node at position p of a route, depot outside [0, size).
int at(const Route& r, int p) { return p < 0 || p >= static_cast<int>(r.size()) ? 0 : r[static_cast<std::size_t>(p)]; }

int size_of(const Route& r) { return static_cast<int>(r.size()); }

class MoveEnumerator {
 public:
  MoveEnumerator(const Instance& instance, const Solution& solution, const MoveParams& params,
                 const std::function<bool(const MoveSpec&)>& visit)
      : inst_(instance), sol_(solution), params_(params), visit_(visit), source_(fingerprint(solution)) {
    const auto& routes = sol_.routes;
    loads_.reserve(routes.size());
    prefix_.reserve(routes.size());
    for (const auto& r : routes) {
      std::vector<double> pre(r.size() + 1, 0.0);
      for (std::size_t k = 0; k < r.size(); ++k) pre[k + 1] = pre[k] + inst_.demand(r[k]);
      loads_.push_back(pre.back());
      prefix_.push_back(std::move(pre));
    }
  }

  void run(Operator op) {
    switch (op) {
      case Operator::relocate: relocate(); break;
      case Operator::exchange: exchange(); break;
      case Operator::two_opt: two_opt(); break;
      case Operator::or_opt: or_opt(); break;
      case Operator::two_opt_star: two_opt_star(); break;
      case Operator::insert_inter: insert_inter(); break;
      case Operator::swap_inter: swap_inter(); break;
      case Operator::cross: cross(params_.cross_max, false); break;
      case Operator::lambda_interchange: cross(params_.lambda, true); break;
    }
  }

 private:
  double d(int i, int j) const { return inst_.dist(i, j); }
  double Q() const { return inst_.capacity(); }
  int routes() const { return static_cast<int>(sol_.routes.size()); }
  const Route& route(int r) const { return sol_.routes[static_cast<std::size_t>(r)]; }
  double seg_load(int r, int start, int len) const {
    const auto& pre = prefix_[static_cast<std::size_t>(r)];
    return pre[static_cast<std::size_t>(start + len)] - pre[static_cast<std::size_t>(start)];
  }

  bool emit(MoveSpec m) {
    if (stopped_) return false;
    m.source = source_;
    if (!visit_(m)) stopped_ = true;
    return !stopped_;
  }

  void relocate() {
    for (int r = 0; r < routes(); ++r) {
      const Route& R = route(r);
      const int m = size_of(R);
      for (int i = 0; i < m; ++i) {
        const int c = R[static_cast<std::size_t>(i)];
        const double removal = d(at(R, i - 1), c) + d(c, at(R, i + 1)) - d(at(R, i - 1), at(R, i + 1));
        // Reduced route S = R without position i, length m - 1.
        auto s_at = [&](int k) { return k < 0 || k >= m - 1 ? 0 : (k < i ? R[static_cast<std::size_t>(k)] : R[static_cast<std::size_t>(k + 1)]); };
        for (int j = 0; j < m; ++j) {
          if (j == i || j == i - 1) continue;  // identity, or duplicate of relocating i-1 to i
          const int before = s_at(j - 1);
          const int after = s_at(j);
          const double insertion = d(before, c) + d(c, after) - d(before, after);
          if (!emit({Operator::relocate, r, r, i, j, 1, 0, false, false, insertion - removal, 0})) return;
        }
      }
    }
  }

  void exchange() {
    for (int r = 0; r < routes(); ++r) {
      const Route& R = route(r);
      const int m = size_of(R);
      for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
          const int a = R[static_cast<std::size_t>(i)];
          const int b = R[static_cast<std::size_t>(j)];
          const int pa = at(R, i - 1);
          const int nb = at(R, j + 1);
          double delta;
          if (j == i + 1) {
            delta = d(pa, b) + d(a, nb) - d(pa, a) - d(b, nb);
          } else {
            const int na = at(R, i + 1);
            const int pb = at(R, j - 1);
            delta = d(pa, b) + d(b, na) + d(pb, a) + d(a, nb) - d(pa, a) - d(a, na) - d(pb, b) - d(b, nb);
          }
          if (!emit({Operator::exchange, r, r, i, j, 0, 0, false, false, delta, 0})) return;
        }
      }
    }
  }

  void two_opt() {
    for (int r = 0; r < routes(); ++r) {
      const Route& R = route(r);
      const int m = size_of(R);
      for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
          const int p = at(R, i - 1);
          const int n = at(R, j + 1);
          const int first = R[static_cast<std::size_t>(i)];
          const int last = R[static_cast<std::size_t>(j)];
          const double delta = d(p, last) + d(first, n) - d(p, first) - d(last, n);
          if (!emit({Operator::two_opt, r, r, i, j, 0, 0, false, false, delta, 0})) return;
        }
      }
    }
  }

  void or_opt() {
    for (int r = 0; r < routes(); ++r) {
      const Route& R = route(r);
      const int m = size_of(R);
      for (int len = 1; len <= params_.or_opt_max && len <= m; ++len) {
        for (int i = 0; i + len <= m; ++i) {
          const int s1 = R[static_cast<std::size_t>(i)];
          const int sl = R[static_cast<std::size_t>(i + len - 1)];
          const int p = at(R, i - 1);
          const int n = at(R, i + len);
          const double removal = d(p, s1) + d(sl, n) - d(p, n);
          const int reduced = m - len;
          auto s_at = [&](int k) {
            return k < 0 || k >= reduced ? 0 : (k < i ? R[static_cast<std::size_t>(k)] : R[static_cast<std::size_t>(k + len)]);
          };
          for (int slot = 0; slot <= reduced; ++slot) {
            if (slot == i) continue;
            const int before = s_at(slot - 1);
            const int after = s_at(slot);
            const double insertion = d(before, s1) + d(sl, after) - d(before, after);
            if (!emit({Operator::or_opt, r, r, i, slot, len, 0, false, false, insertion - removal, 0})) return;
          }
        }
      }
    }
  }

  void two_opt_star() {
    for (int r1 = 0; r1 < routes(); ++r1) {
      for (int r2 = r1 + 1; r2 < routes(); ++r2) {
        const Route& A = route(r1);
        const Route& B = route(r2);
        const int m1 = size_of(A);
        const int m2 = size_of(B);
        const double la = loads_[static_cast<std::size_t>(r1)];
        const double lb = loads_[static_cast<std::size_t>(r2)];
        for (int a = 0; a <= m1; ++a) {
          for (int b = 0; b <= m2; ++b) {
            if ((a == 0 && b == 0) || (a == m1 && b == m2)) continue;
            const double pa = seg_load(r1, 0, a);
            const double pb = seg_load(r2, 0, b);
            if (pa + (lb - pb) > Q() || pb + (la - pa) > Q()) continue;
            const int x = at(A, a - 1), xn = at(A, a);
            const int y = at(B, b - 1), yn = at(B, b);
            const double delta = d(x, yn) + d(y, xn) - d(x, xn) - d(y, yn);
            if (!emit({Operator::two_opt_star, r1, r2, a, b, 0, 0, false, false, delta, 0})) return;
          }
        }
      }
    }
  }

  void insert_inter() {
    for (int r1 = 0; r1 < routes(); ++r1) {
      const Route& A = route(r1);
      for (int i = 0; i < size_of(A); ++i) {
        const int c = A[static_cast<std::size_t>(i)];
        const double removal = d(at(A, i - 1), c) + d(c, at(A, i + 1)) - d(at(A, i - 1), at(A, i + 1));
        for (int r2 = 0; r2 < routes(); ++r2) {
          if (r2 == r1) continue;
          if (loads_[static_cast<std::size_t>(r2)] + inst_.demand(c) > Q()) continue;
          const Route& B = route(r2);
          for (int slot = 0; slot <= size_of(B); ++slot) {
            const int before = at(B, slot - 1);
            const int after = at(B, slot);
            const double insertion = d(before, c) + d(c, after) - d(before, after);
            if (!emit({Operator::insert_inter, r1, r2, i, slot, 1, 0, false, false, insertion - removal, 0})) return;
          }
        }
      }
    }
  }

  void swap_inter() {
    for (int r1 = 0; r1 < routes(); ++r1) {
      for (int r2 = r1 + 1; r2 < routes(); ++r2) {
        const Route& A = route(r1);
        const Route& B = route(r2);
        const double la = loads_[static_cast<std::size_t>(r1)];
        const double lb = loads_[static_cast<std::size_t>(r2)];
        for (int i = 0; i < size_of(A); ++i) {
          const int a = A[static_cast<std::size_t>(i)];
          for (int j = 0; j < size_of(B); ++j) {
            const int b = B[static_cast<std::size_t>(j)];
            const double da = inst_.demand(a), db = inst_.demand(b);
            if (la - da + db > Q() || lb - db + da > Q()) continue;
            const int pa = at(A, i - 1), na = at(A, i + 1);
            const int pb = at(B, j - 1), nb = at(B, j + 1);
            const double delta = d(pa, b) + d(b, na) - d(pa, a) - d(a, na) + d(pb, a) + d(a, nb) - d(pb, b) - d(b, nb);
            if (!emit({Operator::swap_inter, r1, r2, i, j, 0, 0, false, false, delta, 0})) return;
          }
        }
      }
    }
  }

  // Boundary cost change on one route when its segment [start, start+len)
  // is replaced by the segment [ostart, ostart+olen) of route `other`.
  double side_delta(const Route& R, int start, int len, const Route& other, int ostart, int olen, bool reversed) const {
    const int p = at(R, start - 1);
    const int n = at(R, start + len);
    const double removed = len > 0 ? d(p, R[static_cast<std::size_t>(start)]) + d(R[static_cast<std::size_t>(start + len - 1)], n)
                                   : d(p, n);
    double added;
    if (olen > 0) {
      int first = other[static_cast<std::size_t>(ostart)];
      int last = other[static_cast<std::size_t>(ostart + olen - 1)];
      if (reversed) std::swap(first, last);
      added = d(p, first) + d(last, n);
    } else {
      added = d(p, n);
    }
    return added - removed;
  }

  void cross(int max_len, bool allow_reverse) {
    for (int r1 = 0; r1 < routes(); ++r1) {
      for (int r2 = r1 + 1; r2 < routes(); ++r2) {
        const Route& A = route(r1);
        const Route& B = route(r2);
        const int m1 = size_of(A);
        const int m2 = size_of(B);
        const double la = loads_[static_cast<std::size_t>(r1)];
        const double lb = loads_[static_cast<std::size_t>(r2)];
        for (int len1 = 0; len1 <= std::min(max_len, m1); ++len1) {
          for (int len2 = 0; len2 <= std::min(max_len, m2); ++len2) {
            if (len1 == 0 && len2 == 0) continue;
            const int last_a = len1 == 0 ? m1 : m1 - len1;
            const int last_b = len2 == 0 ? m2 : m2 - len2;
            for (int a = 0; a <= last_a; ++a) {
              const double sa = seg_load(r1, a, len1);
              for (int b = 0; b <= last_b; ++b) {
                const double sb = seg_load(r2, b, len2);
                if (la - sa + sb > Q() || lb - sb + sa > Q()) continue;
                // rev1 reverses A's segment as it lands in B; rev2 likewise.
                const int rev1_options = allow_reverse && len1 >= 2 ? 2 : 1;
                const int rev2_options = allow_reverse && len2 >= 2 ? 2 : 1;
                for (int v1 = 0; v1 < rev1_options; ++v1) {
                  for (int v2 = 0; v2 < rev2_options; ++v2) {
                    const double delta = side_delta(A, a, len1, B, b, len2, v2 == 1) +
                                         side_delta(B, b, len2, A, a, len1, v1 == 1);
                    const Operator op = allow_reverse ? Operator::lambda_interchange : Operator::cross;
                    if (!emit({op, r1, r2, a, b, len1, len2, v1 == 1, v2 == 1, delta, 0})) return;
                  }
                }
              }
            }
          }
        }
      }
    }
  }

  const Instance& inst_;
  const Solution& sol_;
  const MoveParams& params_;
  const std::function<bool(const MoveSpec&)>& visit_;
  std::uint64_t source_;
  std::vector<double> loads_;
  std::vector<std::vector<double>> prefix_;
  bool stopped_ = false;
};

void require(bool ok, const char* what) {
  if (!ok) throw StructuralError(std::string("apply_move: ") + what);
}

Route slice(const Route& r, int start, int len) {
  return Route(r.begin() + start, r.begin() + start + len);
}

}  // namespace

void for_each_move(const Instance& instance, const Solution& solution, Operator op, const MoveParams& params,
                   const std::function<bool(const MoveSpec&)>& visit) {
  MoveEnumerator(instance, solution, params, visit).run(op);
}

std::vector<MoveSpec> enumerate_moves(const Instance& instance, const Solution& solution, Operator op,
                                      const MoveParams& params) {
  std::vector<MoveSpec> moves;
  for_each_move(instance, solution, op, params, [&moves](const MoveSpec& m) {
    moves.push_back(m);
    return true;
  });
  return moves;
}

Solution apply_move(const Instance& instance, const Solution& solution, const MoveSpec& move) {
  require(move.source == fingerprint(solution), "stale move, solution changed since enumeration");
  const int nr = static_cast<int>(solution.routes.size());
  require(move.r1 >= 0 && move.r1 < nr && move.r2 >= 0 && move.r2 < nr, "route index out of range");

  std::vector<Route> routes = solution.routes;
  Route& A = routes[static_cast<std::size_t>(move.r1)];
  Route& B = routes[static_cast<std::size_t>(move.r2)];
  const int m1 = size_of(A);
  const int m2 = size_of(B);

  switch (move.op) {
    case Operator::relocate: {
      require(move.a >= 0 && move.a < m1 && move.b >= 0 && move.b < m1, "relocate position out of range");
      const int c = A[static_cast<std::size_t>(move.a)];
      A.erase(A.begin() + move.a);
      A.insert(A.begin() + move.b, c);
      break;
    }
    case Operator::exchange:
      require(move.a >= 0 && move.a < move.b && move.b < m1, "exchange positions out of range");
      std::swap(A[static_cast<std::size_t>(move.a)], A[static_cast<std::size_t>(move.b)]);
      break;
    case Operator::two_opt:
      require(move.a >= 0 && move.a < move.b && move.b < m1, "two_opt positions out of range");
      std::reverse(A.begin() + move.a, A.begin() + move.b + 1);
      break;
    case Operator::or_opt: {
      require(move.len1 >= 1 && move.a >= 0 && move.a + move.len1 <= m1, "or_opt segment out of range");
      require(move.b >= 0 && move.b <= m1 - move.len1, "or_opt slot out of range");
      Route seg = slice(A, move.a, move.len1);
      A.erase(A.begin() + move.a, A.begin() + move.a + move.len1);
      A.insert(A.begin() + move.b, seg.begin(), seg.end());
      break;
    }
    case Operator::two_opt_star: {
      require(move.r1 != move.r2, "two_opt_star needs two routes");
      require(move.a >= 0 && move.a <= m1 && move.b >= 0 && move.b <= m2, "two_opt_star cut out of range");
      Route na = slice(A, 0, move.a);
      na.insert(na.end(), B.begin() + move.b, B.end());
      Route nb = slice(B, 0, move.b);
      nb.insert(nb.end(), A.begin() + move.a, A.end());
      A = std::move(na);
      B = std::move(nb);
      break;
    }
    case Operator::insert_inter: {
      require(move.r1 != move.r2, "insert_inter needs two routes");
      require(move.a >= 0 && move.a < m1 && move.b >= 0 && move.b <= m2, "insert_inter position out of range");
      const int c = A[static_cast<std::size_t>(move.a)];
      A.erase(A.begin() + move.a);
      B.insert(B.begin() + move.b, c);
      break;
    }
    case Operator::swap_inter:
      require(move.r1 != move.r2, "swap_inter needs two routes");
      require(move.a >= 0 && move.a < m1 && move.b >= 0 && move.b < m2, "swap_inter position out of range");
      std::swap(A[static_cast<std::size_t>(move.a)], B[static_cast<std::size_t>(move.b)]);
      break;
    case Operator::cross:
    case Operator::lambda_interchange: {
      require(move.r1 != move.r2, "segment exchange needs two routes");
      require(move.len1 >= 0 && move.len2 >= 0 && move.a >= 0 && move.b >= 0 && move.a + move.len1 <= m1 &&
                  move.b + move.len2 <= m2,
              "segment out of range");
      Route s1 = slice(A, move.a, move.len1);
      Route s2 = slice(B, move.b, move.len2);
      if (move.rev1) std::reverse(s1.begin(), s1.end());
      if (move.rev2) std::reverse(s2.begin(), s2.end());
      Route na = slice(A, 0, move.a);
      na.insert(na.end(), s2.begin(), s2.end());
      na.insert(na.end(), A.begin() + move.a + move.len1, A.end());
      Route nb = slice(B, 0, move.b);
      nb.insert(nb.end(), s1.begin(), s1.end());
      nb.insert(nb.end(), B.begin() + move.b + move.len2, B.end());
      A = std::move(na);
      B = std::move(nb);
      break;
    }
  }
  for (const auto& r : routes)
    require(route_load(instance, r) <= instance.capacity(), "move violates capacity");
  return make_solution(instance, std::move(routes));
}

std::optional<MoveSpec> best_move(const Instance& instance, const Solution& solution,
                                  std::span<const Operator> operators, const MoveParams& params, double epsilon) {
  std::optional<MoveSpec> best;
  for (Operator op : operators) {
    for_each_move(instance, solution, op, params, [&](const MoveSpec& m) {
      if (m.delta < -epsilon && (!best || m.delta < best->delta)) best = m;
      return true;
    });
  }
  return best;
}

LocalSearchResult local_search(const Instance& instance, const Solution& solution, const SearchConfig& config) {
  if (config.operators.empty()) throw PreconditionError("local_search: operator set is empty");
  LocalSearchResult result;
  result.solution = solution;
  result.cost_trace.push_back(solution.cost);

  for (int pass = 0; pass < config.max_passes; ++pass) {
    std::optional<MoveSpec> chosen;
    if (config.strategy == SearchStrategy::best_improvement) {
      chosen = best_move(instance, result.solution, config.operators, config.params, config.epsilon);
    } else {
      for (Operator op : config.operators) {
        for_each_move(instance, result.solution, op, config.params, [&](const MoveSpec& m) {
          if (m.delta < -config.epsilon) {
            chosen = m;
            return false;
          }
          return true;
        });
        if (chosen) break;
      }
    }
    if (!chosen) {
      result.local_optimum = true;
      return result;
    }
    result.solution = apply_move(instance, result.solution, *chosen);
    ++result.moves_applied;
    result.cost_trace.push_back(result.solution.cost);
  }
  // Budget exhausted; report whether we happen to sit at a local optimum.
  result.local_optimum = !best_move(instance, result.solution, config.operators, config.params, config.epsilon);
  return result;
}

Route two_opt_route(const Instance& instance, Route route) {
  const int m = size_of(route);
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i = 0; i < m && !improved; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const int p = at(route, i - 1);
        const int n = at(route, j + 1);
        const int first = route[static_cast<std::size_t>(i)];
        const int last = route[static_cast<std::size_t>(j)];
        const double delta =
            instance.dist(p, last) + instance.dist(first, n) - instance.dist(p, first) - instance.dist(last, n);
        if (delta < -1e-10) {
          std::reverse(route.begin() + i, route.begin() + j + 1);
          improved = true;
          break;
        }
      }
    }
  }
  return route;
}

}  // namespace cvrplab
