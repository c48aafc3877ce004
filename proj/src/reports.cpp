#include "feasik/reports.hpp"

#include <cstdio>
#include <string>

namespace feasik {

namespace {

std::string status_name(RunStatus s) {
  return s == RunStatus::FeasibleAt ? "FeasibleAt" : "MaxIterExceeded";
}

std::string fixed(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

Json to_json(const A1Report& r) {
  Json out{{"example", "a1"},
           {"precision", r.precision},
           {"counter_mode", to_string(r.mode)},
           {"max_iter", r.max_iter},
           {"status", status_name(r.status)},
           {"k_final", r.k_final},
           {"corrections", r.corrections},
           {"max_rel_error_y2k", r.max_rel_error_y2k},
           {"max_rel_error_trace", r.max_rel_error_trace},
           {"zero_mismatch", r.zero_mismatch},
           {"pass", r.pass}};
  Json table = Json::array();
  for (const auto& row : r.table) {
    table.push_back({{"k", row.k}, {"y_2k", row.engine}, {"oracle", row.oracle}});
  }
  out["table"] = std::move(table);
  if (r.binary64_note) out["binary64_note"] = *r.binary64_note;
  return out;
}

Json to_json(const A2Report& r) {
  Json out{{"example", "a2"},
           {"counter_mode", to_string(r.mode)},
           {"max_iter", r.max_iter},
           {"status", status_name(r.status)},
           {"k_final", r.k_final},
           {"corrections", r.corrections},
           {"b1_exact", r.b1_exact},
           {"y_zero_after_start", r.y_zero_after_start},
           {"x_above_one", r.x_above_one},
           {"idle_gaps_ok", r.idle_gaps_ok},
           {"max_rel_error", r.max_rel_error},
           {"pass", r.pass}};
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json j{{"k", row.k},        {"b_k", row.b},          {"oracle_x", row.oracle_x},
           {"engine_x", row.engine_x}, {"rel_error", row.rel_error}, {"stepped", row.stepped}};
    if (row.position) j["position"] = *row.position;
    rows.push_back(std::move(j));
  }
  out["rows"] = std::move(rows);
  return out;
}

Json to_json(const DescentCertificate<double>& c, const std::vector<std::uint64_t>& fixed_point_failures) {
  Json out{{"z", Json::array()},
           {"R", c.R},
           {"lambda", c.lambda},
           {"applicable", c.applicable},
           {"violations", c.violations},
           {"ok", c.ok()}};
  for (double v : c.z) out["z"].push_back(v);
  Json k = Json::array(), slack = Json::array(), rho = Json::array(), app = Json::array();
  for (const auto& e : c.entries) {
    k.push_back(e.k);
    slack.push_back(e.slack);
    rho.push_back(e.rho);
    app.push_back(e.applicable);
  }
  out["steps"] = {{"k", std::move(k)}, {"slack", std::move(slack)}, {"rho", std::move(rho)},
                  {"applicable", std::move(app)}};
  out["fixed_point_failures"] = fixed_point_failures;
  return out;
}

void print_table(std::ostream& os, const A1Report& r) {
  os << "   k            y_2k          2^-2k\n";
  for (const auto& row : r.table) {
    os << fixed(static_cast<double>(row.k), "%4.0f") << "  " << fixed(row.engine, "%14.8e") << "  "
       << fixed(row.oracle, "%14.8e") << '\n';
  }
}

void print_table(std::ostream& os, const A2Report& r) {
  os << "   k   position             b_k         x_{n_k}    1+sqrt(2b_k)\n";
  for (const auto& row : r.rows) {
    if (row.k > 10) break;
    os << fixed(static_cast<double>(row.k), "%4.0f") << "  "
       << (row.position ? fixed(static_cast<double>(*row.position), "%9.0f") : std::string("        -"))
       << "  " << fixed(row.b, "%14.8e") << "  " << fixed(row.engine_x, "%14.12f") << "  "
       << fixed(row.oracle_x, "%14.12f") << '\n';
  }
}

void print_summary(std::ostream& os, const DescentCertificate<double>& c) {
  os << "steps=" << c.entries.size() << " applicable=" << c.applicable
     << " violations=" << c.violations;
  if (c.applicable > 0) os << " worst_relative_slack=" << format_real(c.worst_relative_slack);
  os << '\n';
}

}  // namespace feasik
