#include <cstdio>
#include <fstream>
#include <sstream>

#include "mcflow/errors.hpp"
#include "mcflow/harness.hpp"

namespace mcflow {

namespace {

constexpr const char* kHeader =
    "scheme,split,Nt,snapshot,e_h1,e_h2,e_ms1,e_H1,time_total_s,avg_iters_per_continuum";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::optional<double> parse_opt(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

std::size_t parse_count(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw IoError("csv line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void write_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kHeader << '\n';
  for (const auto& r : rows) {
    std::string iters;
    for (std::size_t k = 0; k < r.avg_iters.size(); ++k) iters += (k ? ";" : "") + fmt(r.avg_iters[k]);
    out << quote(r.scheme) << ',' << quote(r.split) << ',' << r.nt << ',' << r.snapshot << ',' << fmt(r.e_h1) << ','
        << fmt(r.e_h2) << ',' << fmt(r.e_ms1) << ',' << fmt(r.e_H1) << ',' << fmt(r.time_total_s) << ',' << iters
        << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<ReportRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw IoError("'" + path.string() + "': unexpected header");
  std::vector<ReportRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 10) throw IoError("csv line " + std::to_string(lineno) + ": expected 10 fields");
    ReportRow r;
    r.scheme = f[0];
    r.split = f[1];
    r.nt = parse_count(f[2], lineno);
    r.snapshot = parse_count(f[3], lineno);
    r.e_h1 = parse_opt(f[4], lineno);
    r.e_h2 = parse_opt(f[5], lineno);
    r.e_ms1 = parse_opt(f[6], lineno);
    r.e_H1 = parse_opt(f[7], lineno);
    r.time_total_s = parse_opt(f[8], lineno);
    if (!f[9].empty()) {
      std::stringstream s(f[9]);
      std::string item;
      while (std::getline(s, item, ';')) r.avg_iters.push_back(*parse_opt(item, lineno));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_rates_csv(const std::vector<RateRow>& rates, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "scheme,split,t_fraction,metric,Nt,Nt_next,rate\n";
  for (const auto& r : rates) {
    out << quote(r.scheme) << ',' << quote(r.split) << ',' << fmt(r.t_fraction) << ',' << r.metric << ',' << r.nt
        << ',' << r.nt_next << ',' << fmt(r.rate) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace mcflow
