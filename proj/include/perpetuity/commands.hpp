#pragma once

// Command-line entry points. Each command reads an experiment config, writes
// its report files under the output directory and returns the exit code.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace perp {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitStrictInconclusive = 4,
  kExitNoTheorem = 5,
  kExitValidationFail = 6,
};

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool strict = false;
  bool verify = false;
  bool no_timestamp = false;
  std::string case_id;  // validate
};

int cmd_simulate(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_moments(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_tail(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_validate(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_charfn(const CommandOptions& opt, std::ostream& out, std::ostream& err);

/// Parses argv (program name first) and dispatches to a command.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace perp
