#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "spinretro/sequence_sim.hpp"

namespace spinretro::io {

// RecordSet CSV layout:
//   # key = value            (config echo, any number of lines)
//   repetition_id,theta2_rad,m1,m2,m3,m4
//   0,0,...                  (decimal floats, %.17g, LF line endings)
using EchoLines = std::vector<std::pair<std::string, std::string>>;

std::string format_double(double v);

void write_records(const std::filesystem::path& path, const sim::RecordSet& records,
                   const EchoLines& echo);

struct ReadResult {
  sim::RecordSet records;
  EchoLines echo;
};

// Throws DataError with line/column diagnostics on malformed input; enforces
// a constant theta2 across the file.
ReadResult read_records(const std::filesystem::path& path);

}  // namespace spinretro::io
