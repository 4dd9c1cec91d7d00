#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace h2st::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

/// Runs one experiment and writes roundlog.csv, metrics.json and
/// config_resolved.json into the output directory.
int run(const RunOptions& options, std::ostream& log);

// One swept parameter: dotted config key and its candidate literals.
using GridAxis = std::pair<std::string, std::vector<std::string>>;

/// Parses "a.b=v1,v2;c=v3". Commas inside [...] do not split values.
/// Throws ConfigError on malformed input; an empty string gives no axes.
std::vector<GridAxis> parse_grid(const std::string& spec);

struct SweepOptions {
  std::string config_path;
  std::string grid;
  std::size_t reps = 1;
  std::optional<std::string> out_dir;
  std::size_t workers = 0;  // 0 reads H2ST_WORKERS, defaulting to 1
};

/// Runs every grid cell `reps` times (seeds derived per repetition) and
/// appends one mean/std row per finished cell to sweep.csv.
int sweep(const SweepOptions& options, std::ostream& log);

/// Collects metrics.json files under `dir`, prints a comparison table and
/// writes comparison.csv and curves.csv into `dir`.
int report(const std::string& dir, std::ostream& out);

/// Full command-line entry point.
int main(int argc, char** argv);

}  // namespace h2st::cli
