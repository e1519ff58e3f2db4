#pragma once

// JSON form of an Instance. Layout:
//
//   {
//     "horizon": T, "reward_count": R, "null_customer": j0,
//     "resources": [{"capacity": c, "unit_price": r, "survival": [Pr(D>=1), ...]}],
//     "customers": [{"weight": p, "outcomes": [[{"prob", "rewards", "consumption"}, ...], ...]}],
//     "actions": {"kind": "explicit", "count": K, "null_action": k0}  or  {"kind": "mnl"},
//     "mnl": {"m": m, "n": n, "products": [{"f": [...], "price": r}], "customers": [{"b": [[...], ...]}]}
//   }
//
// "outcomes" holds one scenario list per explicit action; an empty list is the
// zero outcome. "mnl" is present only for assortment instances. Doubles are
// written in shortest round-trip form, so save -> load is bit-exact.

#include <string>

#include <json.hpp>

#include "reusable/model.hpp"

namespace reusable {

nlohmann::json instance_to_json(const Instance& inst);
/// Throws Error{InvalidInstance} on structural problems (missing keys, wrong
/// types). Semantic checks are left to validate_instance.
Instance instance_from_json(const nlohmann::json& doc);

Instance load_instance(const std::string& path);
void save_instance(const Instance& inst, const std::string& path);
std::string instance_to_string(const Instance& inst);

}  // namespace reusable
