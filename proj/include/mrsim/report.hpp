#pragma once

#include <string>

#include <json.hpp>

#include "mrsim/engine.hpp"

namespace mrsim {

struct CostModel {
  double L = 1;
  double B = 1024;
};

nlohmann::ordered_json report_json(const ExecutionReport& r, const CostModel& cm);
std::string summary_line(const ExecutionReport& r, const CostModel& cm);
std::string format_number(double x);

}  // namespace mrsim
