#include "platoonlab/scenario.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace platoonlab {

namespace {

using nlohmann::json;

json to_json(const PlatoonScenario& s) {
  json j;
  j["vehicles"] = json::array();
  for (const auto& v : s.vehicles) {
    json jv;
    jv["kind"] = v.kind == VehicleKind::AV ? "AV" : "HV";
    jv["tau"] = v.tau;
    if (v.kind == VehicleKind::HV) {
      jv["alpha"] = v.alpha;
      jv["beta"] = v.beta;
    }
    j["vehicles"].push_back(jv);
  }
  j["initial_states"] = json::array();
  for (const auto& st : s.initial_states) {
    j["initial_states"].push_back({st.p, st.v, st.a});
  }
  j["d_safe"] = s.d_safe;
  j["u_max"] = s.u_max;
  j["t_s"] = s.t_s;
  j["policy"] = {{"h_s", s.policy.h_s}, {"h_g", s.policy.h_g},
                 {"v_max", s.policy.v_max}};
  j["v_nominal"] = s.v_nominal;
  j["v_ref_profile"] = s.v_ref_profile;
  return j;
}

PlatoonScenario from_json(const json& j) {
  PlatoonScenario s;
  s.vehicles.clear();
  for (const auto& jv : j.at("vehicles")) {
    VehicleParams v;
    v.kind = jv.at("kind").get<std::string>() == "AV" ? VehicleKind::AV
                                                      : VehicleKind::HV;
    v.tau = jv.at("tau").get<double>();
    v.alpha = jv.value("alpha", 0.0);
    v.beta = jv.value("beta", 0.0);
    s.vehicles.push_back(v);
  }
  s.initial_states.clear();
  for (const auto& js : j.at("initial_states")) {
    VehicleState st;
    st.p = js.at(0).get<double>();
    st.v = js.at(1).get<double>();
    st.a = js.at(2).get<double>();
    s.initial_states.push_back(st);
  }
  s.d_safe = j.at("d_safe").get<double>();
  s.u_max = j.at("u_max").get<double>();
  s.t_s = j.at("t_s").get<double>();
  s.policy.h_s = j.at("policy").at("h_s").get<double>();
  s.policy.h_g = j.at("policy").at("h_g").get<double>();
  s.policy.v_max = j.at("policy").at("v_max").get<double>();
  s.v_nominal = j.value("v_nominal", 20.0);
  s.v_ref_profile = j.value("v_ref_profile", std::string("synthetic"));
  return s;
}

}  // namespace

std::string PlatoonScenario::validate() const {
  if (vehicles.size() < 3) return "scenario needs at least 3 vehicles";
  if (vehicles.size() != initial_states.size())
    return "vehicles and initial_states lengths differ";
  if (vehicles.front().kind != VehicleKind::AV)
    return "first vehicle must be an AV";
  if (vehicles.back().kind != VehicleKind::AV)
    return "last vehicle must be an AV";
  for (size_t i = 1; i + 1 < vehicles.size(); ++i) {
    if (vehicles[i].kind != VehicleKind::HV)
      return "intermediate vehicle " + std::to_string(i) + " must be an HV";
  }
  for (size_t i = 0; i < vehicles.size(); ++i) {
    if (!vehicles[i].valid())
      return "invalid parameters for vehicle " + std::to_string(i);
  }
  for (size_t i = 1; i < initial_states.size(); ++i) {
    if (initial_states[i - 1].p - initial_states[i].p <= 0.0)
      return "non-positive initial gap ahead of vehicle " + std::to_string(i);
  }
  if (t_s <= 0.0) return "t_s must be positive";
  if (u_max <= 0.0) return "u_max must be positive";
  if (!policy.valid()) return "invalid range policy";
  if (!(v_nominal > 0.0 && v_nominal < policy.v_max))
    return "v_nominal must lie strictly inside (0, v_max)";
  return {};
}

PlatoonScenario default_scenario() {
  PlatoonScenario s;
  auto av = [](double tau) {
    VehicleParams v;
    v.kind = VehicleKind::AV;
    v.tau = tau;
    return v;
  };
  auto hv = [](double tau, double alpha, double beta) {
    VehicleParams v;
    v.kind = VehicleKind::HV;
    v.tau = tau;
    v.alpha = alpha;
    v.beta = beta;
    return v;
  };
  s.vehicles = {av(0.10), hv(0.13, 0.2, 0.4), hv(0.12, 0.2, 0.45),
                hv(0.16, 0.3, 0.4), hv(0.15, 0.2, 0.45), av(0.12)};
  s.initial_states = {{120.0, 20.0, 0.0}, {100.0, 20.0, 0.0}, {80.0, 15.0, 0.0},
                      {65.0, 20.0, 0.0},  {40.0, 20.0, 0.0},  {15.0, 15.0, 0.0}};
  s.d_safe = 20.0;
  s.u_max = 4.0;
  s.t_s = 0.05;
  s.policy = RangePolicy{5.0, 50.0, 40.0};
  s.v_nominal = 20.0;
  s.v_ref_profile = "synthetic";
  return s;
}

PlatoonScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
    PlatoonScenario s = from_json(j);
    const std::string err = s.validate();
    if (!err.empty())
      throw std::runtime_error("invalid scenario " + path + ": " + err);
    return s;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed scenario " + path + ": " + e.what());
  }
}

void save_scenario(const PlatoonScenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << to_json(s).dump(2) << "\n";
}

std::string scenario_hash(const PlatoonScenario& s) {
  const std::string canon = to_json(s).dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return std::string(buf);
}

}  // namespace platoonlab
