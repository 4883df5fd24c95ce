#include "spinretro/record_io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "spinretro/errors.hpp"

namespace spinretro::io {

namespace {

constexpr const char* kHeader = "repetition_id,theta2_rad,m1,m2,m3,m4";

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, const std::filesystem::path& path, int line,
                    int column) {
  const std::string t = trim(field);
  if (t.empty()) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": column " +
                    std::to_string(column) + " is empty");
  }
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (errno != 0 || end == t.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": column " +
                    std::to_string(column) + ": cannot parse '" + t + "' as a number");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_records(const std::filesystem::path& path, const sim::RecordSet& records,
                   const EchoLines& echo) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& [key, value] : echo) {
    out << "# " << key << " = " << value << "\n";
  }
  out << kHeader << "\n";
  for (const auto& r : records.records) {
    out << r.repetition_id << ',' << format_double(r.theta2);
    for (double m : r.m) out << ',' << format_double(m);
    out << "\n";
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

ReadResult read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");

  ReadResult out;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  bool theta_set = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string body = trim(t.substr(1));
      const std::size_t eq = body.find('=');
      if (eq != std::string::npos) {
        out.echo.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
      }
      continue;
    }
    if (!header_seen) {
      if (t != kHeader) {
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                        ": expected header '" + std::string(kHeader) + "', got '" + t + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 6 columns, got " +
                      std::to_string(fields.size()));
    }
    sim::MeasurementRecord r;
    r.repetition_id = static_cast<std::int64_t>(parse_double(fields[0], path, lineno, 1));
    r.theta2 = parse_double(fields[1], path, lineno, 2);
    for (int j = 0; j < 4; ++j) {
      r.m[static_cast<std::size_t>(j)] = parse_double(fields[static_cast<std::size_t>(j) + 2],
                                                      path, lineno, j + 3);
    }
    if (!theta_set) {
      out.records.theta2 = r.theta2;
      theta_set = true;
    } else if (std::abs(r.theta2 - out.records.theta2) > 1e-12) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": theta2 must be constant within a record set");
    }
    out.records.records.push_back(r);
  }
  if (!header_seen) {
    throw DataError(path.string() + ": no header line found (empty or comment-only file)");
  }
  if (out.records.records.empty()) {
    throw DataError(path.string() + ": no data rows");
  }
  return out;
}

}  // namespace spinretro::io
