#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvrplab/core.hpp"
#include "cvrplab/decode.hpp"
#include "cvrplab/policy.hpp"

namespace cvrplab {

enum class AugmentKind { none, fold2, fold4, fold8_flip, fold8_rotation };

std::string_view to_string(AugmentKind kind);
std::optional<AugmentKind> parse_augment_kind(std::string_view name);

// Affine map (x, y) -> (a x + b y + e, c x + d y + f).
struct Transform {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;
  std::string label = "id";

  Point apply(Point p) const { return {a * p.x + b * p.y + e, c * p.x + d * p.y + f}; }
};

struct AugmentSet {
  AugmentKind kind = AugmentKind::none;
  std::vector<Transform> transforms;  // transforms[0] is the identity
};

// none     {id}
// fold2    {id, swap}
// fold4    fold2 combined with x -> 1 - x
// fold8_flip      the symmetry group of the unit square
// fold8_rotation  rotations by k * 45 degrees about (0.5, 0.5)
AugmentSet make_transforms(AugmentKind kind);

// Same demands and capacity, mapped coordinates.
Instance apply_transform(const Transform& t, const Instance& instance);

struct AugmentRun {
  std::string label;
  std::optional<Solution> solution;  // evaluated on the original instance
  std::string error;                 // set when decoding failed
};

struct AugmentResult {
  Solution best;
  std::size_t best_index = 0;
  std::vector<AugmentRun> runs;  // one per transform
};

// Decodes every transformed instance and keeps the cheapest solution under
// the original coordinates. A failing transform is recorded and skipped; if
// all fail, the first error is rethrown.
AugmentResult augment_solve(const Policy& policy, const Instance& instance, const AugmentSet& set,
                            const DecodeConfig& config);

}  // namespace cvrplab
