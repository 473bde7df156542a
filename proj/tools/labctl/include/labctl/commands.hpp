#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <auxlab/augment.hpp>

#include "labctl/config.hpp"

namespace labctl {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerdictFail = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitUnknownFixture = 4,
};

struct Options {
  std::string config_path;  // empty: built-in defaults
  std::string out;          // overrides [output] dir when set
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  std::vector<double> eps;
  std::string params;  // JSON parameter file for verify
};

// A point (theta, a, b, W) as stored in params/*.json. W is column-major.
struct PointFile {
  std::vector<double> theta;
  auxlab::AuxParams aux;
};

PointFile read_point_file(const std::string& path, const auxlab::Problem& problem);
std::string point_json(std::span<const double> theta, const auxlab::AuxParams& aux);

// Creates <base>/<hash>-<UTC timestamp>[-n] and points <base>/latest at it.
std::filesystem::path make_run_dir(const std::filesystem::path& base, const std::string& hash);

RunConfig resolve_config(const Options& opts);

int cmd_train(const Options& opts, std::ostream& out);
int cmd_verify(const std::string& what, const Options& opts, std::ostream& out);
int cmd_example(const std::string& name, const Options& opts, std::ostream& out);
int cmd_landscape(const Options& opts, std::ostream& out);
int cmd_oracle(const Options& opts, std::ostream& out);

// Maps library errors onto exit codes, printing the message to err.
int guarded(std::ostream& err, const std::function<int()>& body);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace labctl
