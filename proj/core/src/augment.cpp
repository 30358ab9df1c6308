#include "cvrplab/augment.hpp"

#include <array>
#include <cmath>
#include <exception>
#include <numbers>

#include "cvrplab/errors.hpp"

namespace cvrplab {

namespace {

constexpr std::array<std::pair<AugmentKind, std::string_view>, 5> kNames{{
    {AugmentKind::none, "none"},
    {AugmentKind::fold2, "fold2"},
    {AugmentKind::fold4, "fold4"},
    {AugmentKind::fold8_flip, "fold8_flip"},
    {AugmentKind::fold8_rotation, "fold8_rotation"},
}};

Transform linear(double a, double b, double c, double d, double e, double f, std::string label) {
  return {a, b, c, d, e, f, std::move(label)};
}

// Rotation by k * 45 degrees about (0.5, 0.5); exact entries at right angles.
Transform rotation(int k) {
  double cs = 0, sn = 0;
  switch (k % 8) {
    case 0: cs = 1; sn = 0; break;
    case 2: cs = 0; sn = 1; break;
    case 4: cs = -1; sn = 0; break;
    case 6: cs = 0; sn = -1; break;
    default: {
      const double angle = k * std::numbers::pi / 4.0;
      cs = std::cos(angle);
      sn = std::sin(angle);
    }
  }
  // p' = R (p - c) + c
  const double e = 0.5 - (cs * 0.5 - sn * 0.5);
  const double f = 0.5 - (sn * 0.5 + cs * 0.5);
  return linear(cs, -sn, sn, cs, e, f, "rot" + std::to_string(45 * k));
}

}  // namespace

std::string_view to_string(AugmentKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "?";
}

std::optional<AugmentKind> parse_augment_kind(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

AugmentSet make_transforms(AugmentKind kind) {
  const Transform id;
  const Transform flip_x = linear(-1, 0, 0, 1, 1, 0, "1-x,y");
  const Transform flip_y = linear(1, 0, 0, -1, 0, 1, "x,1-y");
  const Transform flip_xy = linear(-1, 0, 0, -1, 1, 1, "1-x,1-y");
  const Transform swap = linear(0, 1, 1, 0, 0, 0, "y,x");
  const Transform swap_fy = linear(0, 1, -1, 0, 0, 1, "y,1-x");
  const Transform swap_fx = linear(0, -1, 1, 0, 1, 0, "1-y,x");
  const Transform swap_fxy = linear(0, -1, -1, 0, 1, 1, "1-y,1-x");

  AugmentSet set;
  set.kind = kind;
  switch (kind) {
    case AugmentKind::none:
      set.transforms = {id};
      break;
    case AugmentKind::fold2:
      set.transforms = {id, swap};
      break;
    case AugmentKind::fold4:
      set.transforms = {id, flip_x, swap, swap_fx};
      break;
    case AugmentKind::fold8_flip:
      set.transforms = {id, flip_x, flip_y, flip_xy, swap, swap_fy, swap_fx, swap_fxy};
      break;
    case AugmentKind::fold8_rotation:
      for (int k = 0; k < 8; ++k) set.transforms.push_back(rotation(k));
      set.transforms[0].label = "id";
      break;
  }
  return set;
}

Instance apply_transform(const Transform& t, const Instance& instance) {
  std::vector<Point> customers;
  customers.reserve(instance.customers().size());
  for (Point p : instance.customers()) customers.push_back(t.apply(p));
  return instance.with_coordinates(instance.name(), t.apply(instance.depot()), std::move(customers));
}

AugmentResult augment_solve(const Policy& policy, const Instance& instance, const AugmentSet& set,
                            const DecodeConfig& config) {
  if (set.transforms.empty()) throw PreconditionError("augment set is empty");
  AugmentResult result;
  std::exception_ptr first_error;
  bool found = false;
  for (std::size_t i = 0; i < set.transforms.size(); ++i) {
    AugmentRun run;
    run.label = set.transforms[i].label;
    try {
      const Instance view = apply_transform(set.transforms[i], instance);
      const RolloutResult decoded = decode(policy, view, config);
      // Node indices are shared, so the routes carry over unchanged.
      run.solution = make_solution(instance, decoded.best_trajectory().solution.routes);
      if (!found || run.solution->cost < result.best.cost) {
        result.best = *run.solution;
        result.best_index = i;
        found = true;
      }
    } catch (const std::exception& e) {
      run.error = e.what();
      if (!first_error) first_error = std::current_exception();
    }
    result.runs.push_back(std::move(run));
  }
  if (!found) std::rethrow_exception(first_error);
  return result;
}

}  // namespace cvrplab
