#include "reusable/instance_json.hpp"

#include <fstream>
#include <sstream>

#include "reusable/error.hpp"

namespace reusable {

using nlohmann::json;

namespace {

json scenario_list(const OutcomeDistribution& dist) {
  json out = json::array();
  for (const auto& sc : dist.scenarios)
    out.push_back({{"prob", sc.prob}, {"rewards", sc.rewards}, {"consumption", sc.consumption}});
  return out;
}

template <typename T>
T field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(ErrorCode::InvalidInstance, path + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInstance, path + "." + key + ": " + e.what());
  }
}

const json& array_field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_array())
    throw Error(ErrorCode::InvalidInstance, path + ": '" + key + "' must be an array");
  return obj.at(key);
}

}  // namespace

json instance_to_json(const Instance& inst) {
  json doc;
  doc["horizon"] = inst.horizon;
  doc["reward_count"] = inst.reward_count;
  doc["null_customer"] = inst.null_customer;

  json res = json::array();
  for (const auto& r : inst.resources) {
    std::vector<double> surv(r.survival.values().begin(), r.survival.values().end());
    res.push_back({{"capacity", r.capacity}, {"unit_price", r.unit_price}, {"survival", surv}});
  }
  doc["resources"] = res;

  json cust = json::array();
  for (const auto& c : inst.customers) {
    json outcomes = json::array();
    for (const auto& o : c.outcomes) outcomes.push_back(scenario_list(o));
    cust.push_back({{"weight", c.arrival_weight}, {"outcomes", outcomes}});
  }
  doc["customers"] = cust;

  if (inst.is_mnl()) {
    const auto& m = inst.mnl();
    doc["actions"] = {{"kind", "mnl"}};
    json products = json::array();
    for (const auto& p : m.products()) products.push_back({{"f", p.features}, {"price", p.price}});
    json mc = json::array();
    for (const auto& c : m.customers()) mc.push_back({{"b", c.per_product}});
    doc["mnl"] = {{"m", m.feature_dim()}, {"n", m.max_size()}, {"products", products}, {"customers", mc}};
  } else {
    const auto& ea = inst.explicit_actions();
    doc["actions"] = {{"kind", "explicit"}, {"count", ea.count}, {"null_action", ea.null_action}};
  }
  return doc;
}

Instance instance_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidInstance, "instance document must be an object");
  Instance inst;
  inst.horizon = field<int>(doc, "horizon", "$");
  inst.reward_count = field<std::size_t>(doc, "reward_count", "$");
  inst.null_customer = field<std::size_t>(doc, "null_customer", "$");

  const auto& res = array_field(doc, "resources", "$");
  for (std::size_t i = 0; i < res.size(); ++i) {
    const std::string p = "resources[" + std::to_string(i) + "]";
    ResourceSpec r;
    r.capacity = field<double>(res[i], "capacity", p);
    r.unit_price = res[i].contains("unit_price") ? field<double>(res[i], "unit_price", p) : 0.0;
    r.survival = SurvivalCurve(field<std::vector<double>>(res[i], "survival", p));
    inst.resources.push_back(std::move(r));
  }

  const auto& cust = array_field(doc, "customers", "$");
  for (std::size_t j = 0; j < cust.size(); ++j) {
    const std::string p = "customers[" + std::to_string(j) + "]";
    CustomerType c;
    c.arrival_weight = field<double>(cust[j], "weight", p);
    if (cust[j].contains("outcomes")) {
      const auto& outs = array_field(cust[j], "outcomes", p);
      for (std::size_t k = 0; k < outs.size(); ++k) {
        const std::string op = p + ".outcomes[" + std::to_string(k) + "]";
        if (!outs[k].is_array()) throw Error(ErrorCode::InvalidInstance, op + ": must be an array of scenarios");
        OutcomeDistribution dist;
        for (std::size_t s = 0; s < outs[k].size(); ++s) {
          const std::string sp = op + "[" + std::to_string(s) + "]";
          OutcomeScenario sc;
          sc.prob = field<double>(outs[k][s], "prob", sp);
          sc.rewards = field<std::vector<double>>(outs[k][s], "rewards", sp);
          sc.consumption = field<std::vector<double>>(outs[k][s], "consumption", sp);
          dist.scenarios.push_back(std::move(sc));
        }
        c.outcomes.push_back(std::move(dist));
      }
    }
    inst.customers.push_back(std::move(c));
  }

  if (!doc.contains("actions")) throw Error(ErrorCode::InvalidInstance, "$: missing key 'actions'");
  const auto& actions = doc.at("actions");
  const auto kind = field<std::string>(actions, "kind", "actions");
  if (kind == "explicit") {
    ExplicitActions ea;
    ea.count = field<std::size_t>(actions, "count", "actions");
    ea.null_action = field<std::size_t>(actions, "null_action", "actions");
    inst.actions = ea;
  } else if (kind == "mnl") {
    if (!doc.contains("mnl")) throw Error(ErrorCode::InvalidInstance, "$: MNL instance without 'mnl' block");
    const auto& m = doc.at("mnl");
    std::vector<mnl::Product> products;
    const auto& pj = array_field(m, "products", "mnl");
    for (std::size_t i = 0; i < pj.size(); ++i) {
      const std::string p = "mnl.products[" + std::to_string(i) + "]";
      products.push_back({field<std::vector<double>>(pj[i], "f", p), field<double>(pj[i], "price", p)});
    }
    std::vector<mnl::CustomerFeatures> customers;
    const auto& cj = array_field(m, "customers", "mnl");
    for (std::size_t j = 0; j < cj.size(); ++j) {
      const std::string p = "mnl.customers[" + std::to_string(j) + "]";
      customers.push_back({field<std::vector<std::vector<double>>>(cj[j], "b", p)});
    }
    inst.actions = mnl::MnlModel(field<std::size_t>(m, "m", "mnl"), field<std::size_t>(m, "n", "mnl"),
                                 std::move(products), std::move(customers));
  } else {
    throw Error(ErrorCode::InvalidInstance, "actions.kind must be 'explicit' or 'mnl'");
  }
  return inst;
}

std::string instance_to_string(const Instance& inst) { return instance_to_json(inst).dump(1) + "\n"; }

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInstance, path + ": " + e.what());
  }
  return instance_from_json(doc);
}

void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << instance_to_string(inst);
}

}  // namespace reusable
