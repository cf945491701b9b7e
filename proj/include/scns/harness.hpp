#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "scns/config.hpp"

namespace scns {

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_solver = 2, exit_invariant = 3 };

/// Runs body(i) for i in [0, count) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

/// Directory name of ensemble member k: "member_000".
std::string member_dir(int member);

/// Integrates member k of the configured run.
TrajectoryRecord simulate_member(const RunConfig& config, int member);
/// snap_<step>.scns1 for every stored state, trajectory.csv and increments.bin.
void write_member(const std::filesystem::path& dir, const TrajectoryRecord& record);
/// Rebuilds a member's full record from the run's config and stored increments,
/// checking it against the stored initial snapshot and trajectory index.
/// Throws IoError on missing or inconsistent artifacts.
TrajectoryRecord load_member(const std::filesystem::path& run_dir, const RunConfig& config, int member);

/// True unless positivity failed or, for symmetric runs, the symmetry defect reached 1e−10.
bool health_ok(const TrajectoryRecord& record);

struct Manifest {
  std::string command;
  std::string config_hash;
  std::string config_text;
  std::string version;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> members;
  double wall_seconds = 0.0;
  std::vector<std::filesystem::path> files;  // relative to the run directory
  std::vector<RunHealth> health;
};

/// manifest.json with a size and FNV-1a digest for every listed file.
void write_manifest(const std::filesystem::path& dir, const Manifest& manifest);

/// Each command validates everything first, writes artifacts under `out`, prints
/// a summary to `log`, and returns an ExitCode.
int cmd_simulate(const RunConfig& config, const std::filesystem::path& out, int jobs, std::ostream& log);
/// `settings` replaces the run's [diagnostics] section when given.
int cmd_diagnose(const std::filesystem::path& run_dir, const std::optional<DiagnosticsSettings>& settings, int jobs,
                 std::ostream& log);
int cmd_stationarity(const RunConfig& config, const std::filesystem::path& out, int jobs, std::ostream& log);
int cmd_sweep(const RunConfig& config, const std::filesystem::path& out, int jobs, std::ostream& log);

/// Maps library exceptions to exit codes around `body`, reporting to `err`.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace scns
