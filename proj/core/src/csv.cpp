#include <fmt/core.h>

#include <cmath>
#include <ostream>

#include "r2c/experiments.hpp"

namespace r2c::experiments {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  return fmt::format("{}", v);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "scenario,sweep_var,sweep_value,metric,value,ci_low,ci_high,trials,seed\r\n";
  for (const auto& r : rows) {
    out << csv_field(r.scenario) << ',' << csv_field(r.sweep_var) << ','
        << format_number(r.sweep_value) << ',' << csv_field(r.metric) << ','
        << format_number(r.value) << ',' << format_number(r.ci_low) << ','
        << format_number(r.ci_high) << ',' << r.trials << ',' << r.seed << "\r\n";
  }
}

}  // namespace r2c::experiments
