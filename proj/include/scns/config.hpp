#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scns/diagnostics.hpp"
#include "scns/dynamics.hpp"
#include "scns/stationarity.hpp"

namespace scns {

struct StationaritySettings {
  double burn_in = 50.0;
  int members = 16;
  std::vector<double> t_list;  // empty: {burn_in}
  std::vector<double> tau_list = {1.0, 5.0, 10.0};
  std::vector<std::string> functionals = {"mass", "energy", "velocity_norm"};
  int samples_per_member = 8;
  double sample_spacing = 2.0;
  int mollifier_m = 4;
  int mollifier_stride = 0;  // 0: automatic
  bool d1_view = true;
  double alpha = 0.01;
  int permutations = 2000;
  double threshold = -1.0;
  int min_samples = 16;
  double kb_horizon = 0.0;  // > 0: also compare time-averaged laws over [b, b+T] and [b, b+2T]
  bool ramp_surrogate = false;
};

struct DiagnosticsSettings {
  std::vector<std::string> which = {"energy", "mass"};
  double window_t0 = 0.0;
  double window_t1 = -1.0;  // < 0: end of run
  FluxLevel evf_level = FluxLevel::epsilon;
  double evf_alpha = 0.2;
  double lower_bound_from = 1.0;
  double ergodic_horizon = -1.0;  // < 0: whole run
};

struct SweepSettings {
  std::string axis = "epsilon";
  std::vector<double> values;
  double burn_in = 0.0;
};

/// Everything a command needs, loaded from an INI file with sections
/// [grid] [model] [noise] [stepper] [run] [stationarity] [diagnostics] [sweep].
struct RunConfig {
  TorusGrid grid;
  ModelParams params;
  std::string noise_family = "trig_parity";  // or "none"
  double noise_amplitude = 1.0;
  StepperConfig stepper;
  double horizon = 1.0;

  std::uint64_t seed = 1;
  std::string out = "scns_out";
  int members = 1;
  int state_stride = 100;
  int index_stride = 1;
  bool track_symmetry = true;
  std::string initial = "rest";  // "rest" or "acoustic"
  double initial_amplitude = 0.05;

  StationaritySettings stationarity;
  DiagnosticsSettings diagnostics;
  SweepSettings sweep;

  /// Total validation; throws ConfigError naming the first violated field.
  void validate() const;
  NoiseModel noise_model() const;
  State initial_state() const;
  RecordOptions record_options() const;
  StationarityPlan stationarity_plan() const;
  /// Run length needed by the stationarity plan.
  double stationarity_horizon() const;

  /// Normalized INI text; parsing it yields the same configuration.
  std::string canonical() const;
  /// 64-bit FNV-1a of canonical(), as 16 hex digits.
  std::string hash() const;
};

/// Parses INI text; unknown sections or keys and malformed values are ConfigErrors.
RunConfig parse_config(const std::string& text);
/// Reads an INI file, or the "config" member of a manifest.json.
RunConfig load_config(const std::filesystem::path& path);
/// Applies SCNS_SEED when set; throws ConfigError on a malformed value.
void apply_environment(RunConfig& config);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace scns
