#include "mrsim/report.hpp"

#include <cmath>
#include <cstdio>

namespace mrsim {

std::string format_number(double x) {
  if (std::floor(x) == x && std::fabs(x) < 1e15) return std::to_string(static_cast<long long>(x));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

nlohmann::ordered_json report_json(const ExecutionReport& r, const CostModel& cm) {
  nlohmann::ordered_json j;
  j["rounds"] = r.rounds;
  j["total_communication"] = r.total_communication;
  auto& pr = j["per_round"] = nlohmann::ordered_json::array();
  for (auto& s : r.per_round) {
    nlohmann::ordered_json e;
    e["round"] = s.round;
    e["sent"] = s.sent;
    e["active_nodes"] = s.active_nodes;
    e["max_in"] = s.max_in;
    e["max_out"] = s.max_out;
    e["f_time"] = s.f_time;
    pr.push_back(std::move(e));
  }
  auto& vs = j["violations"] = nlohmann::ordered_json::array();
  for (auto& v : r.violations) {
    nlohmann::ordered_json e;
    e["round"] = v.round;
    e["node"] = v.node.to_string();
    e["direction"] = v.direction;
    e["weight"] = v.weight;
    vs.push_back(std::move(e));
  }
  auto& ph = j["phases"] = nlohmann::ordered_json::array();
  for (auto& p : r.phases) ph.push_back({{"name", p.name}, {"first_round", p.first_round}, {"rounds", p.rounds}});
  j["cost_model"] = {{"L", cm.L}, {"B", cm.B}, {"T", lower_bound_time(r, cm.L, cm.B)}};
  return j;
}

std::string summary_line(const ExecutionReport& r, const CostModel& cm) {
  return "R=" + std::to_string(r.rounds) + " C=" + std::to_string(r.total_communication) +
         " T_model=" + format_number(lower_bound_time(r, cm.L, cm.B));
}

}  // namespace mrsim
