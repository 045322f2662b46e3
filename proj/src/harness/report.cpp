#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "drst/harness.hpp"

namespace drst::harness {

using nlohmann::json;

namespace {

constexpr const char* kHeader = "experiment,config_hash,m,n,kind,statistic,value,stderr,trials,seed";

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json double_to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double json_to_double(const json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return v.get<double>();
}

}  // namespace

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw ConfigError("unknown report format '" + std::string(name) + "' (csv or json)");
}

std::string render_report(const std::vector<ResultRow>& rows, ReportFormat format) {
  if (format == ReportFormat::json) {
    json arr = json::array();
    for (const auto& r : rows) {
      json o;
      o["experiment"] = r.experiment;
      o["config_hash"] = r.config_hash;
      o["m"] = r.m;
      o["n"] = r.n;
      o["kind"] = r.kind;
      o["statistic"] = r.statistic;
      o["value"] = double_to_json(r.value);
      o["stderr"] = double_to_json(r.std_error);
      o["trials"] = r.trials;
      o["seed"] = r.seed;
      arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
  }
  std::string out = kHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += csv_field(r.experiment) + ',' + csv_field(r.config_hash) + ',' + std::to_string(r.m) + ',' +
           std::to_string(r.n) + ',' + csv_field(r.kind) + ',' + csv_field(r.statistic) + ',' +
           format_double(r.value) + ',' + format_double(r.std_error) + ',' + std::to_string(r.trials) + ',' +
           std::to_string(r.seed) + '\n';
  }
  return out;
}

void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, std::ostream& out) {
  out << render_report(rows, format);
  out.flush();
  if (!out) throw std::runtime_error("failed to write report");
}

void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  emit_report(rows, format, out);
}

std::vector<ResultRow> parse_rows_json(std::string_view text) {
  const json arr = json::parse(text);
  if (!arr.is_array()) throw std::runtime_error("report JSON must be an array");
  std::vector<ResultRow> rows;
  for (const auto& o : arr) {
    ResultRow r;
    r.experiment = o.at("experiment").get<std::string>();
    r.config_hash = o.at("config_hash").get<std::string>();
    r.m = o.at("m").get<std::size_t>();
    r.n = o.at("n").get<std::size_t>();
    r.kind = o.at("kind").get<std::string>();
    r.statistic = o.at("statistic").get<std::string>();
    r.value = json_to_double(o.at("value"));
    r.std_error = json_to_double(o.at("stderr"));
    r.trials = o.at("trials").get<std::size_t>();
    r.seed = o.at("seed").get<std::uint64_t>();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace drst::harness
