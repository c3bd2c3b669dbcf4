#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cgeo::cli {

struct Options {
  std::string command;  // trace, heart, verify, expmap, fscan, size, spiral
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::vector<std::string> formats;   // empty: the command's defaults
};

const std::vector<std::string>& command_names();

// Exit code: 0 success, 1 numeric failure (or failed verify suite),
// 2 configuration error. Progress goes to `log`, diagnostics to `err`.
int run(const Options& opt, std::ostream& log, std::ostream& err);

}  // namespace cgeo::cli
