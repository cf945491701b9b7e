#include "scns/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "scns/errors.hpp"
#include "scns/io.hpp"

namespace scns {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"grid", {"dim", "n", "N", "L"}},
      {"model", {"a", "gamma", "mu", "eta", "M0", "epsilon", "delta", "Gamma", "R", "level"}},
      {"noise", {"family", "A", "K"}},
      {"stepper", {"dt", "T", "max_retries", "symmetric"}},
      {"run", {"seed", "out", "members", "state_stride", "index_stride", "track_symmetry", "initial",
               "initial_amplitude"}},
      {"stationarity", {"burn_in", "members", "t_list", "tau_list", "functionals", "samples_per_member",
                        "sample_spacing", "mollifier_m", "mollifier_stride", "d1_view", "alpha", "permutations", "threshold",
                        "min_samples", "kb_horizon", "ramp_surrogate"}},
      {"diagnostics", {"which", "window_t0", "window_t1", "evf_level", "evf_alpha", "lower_bound_from",
                       "ergodic_T"}},
      {"sweep", {"axis", "values", "burn_in"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(field, "expected a number, got '" + v + "'");
}

long long to_int(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(field, "expected an integer, got '" + v + "'");
}

int to_int32(const std::string& field, const std::string& v) {
  const long long x = to_int(field, v);
  if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(field, "integer out of range");
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& field, const std::string& v) {
  const std::string t = trim(v);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(field, "expected a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(t);
  } catch (const std::exception&) {
    throw ConfigError(field, "integer out of range");
  }
}

bool to_bool(const std::string& field, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(field, "expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& field, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(field, item));
  return out;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::string join(const std::vector<double>& v) {
  std::vector<std::string> s;
  for (double x : v) s.push_back(num(x));
  return join(s);
}

void require(bool ok, const std::string& field, const std::string& constraint) {
  if (!ok) throw ConfigError(field, constraint);
}

}  // namespace

void RunConfig::validate() const {
  require(grid.dim >= 1 && grid.dim <= 3, "grid.dim", "d ∈ {1, 2, 3} required");
  require(grid.length > 0.0 && std::isfinite(grid.length), "grid.L", "L > 0 required");
  require(grid.n > 0 && grid.n % 2 == 0, "grid.n", "n must be a positive even integer");
  require(grid.galerkin_cutoff >= 0, "grid.N", "N ≥ 0 required");
  require(grid.n >= 2 * (2 * grid.galerkin_cutoff + 1), "grid.n",
          "n ≥ 2(2N+1) = " + std::to_string(2 * (2 * grid.galerkin_cutoff + 1)) + " required");
  params.validate(grid.dim);
  require(noise_family == "trig_parity" || noise_family == "none", "noise.family",
          "family must be trig_parity or none");
  require(noise_amplitude >= 0.0 && std::isfinite(noise_amplitude), "noise.A", "A ≥ 0 required");
  require(stepper.dt > 0.0 && std::isfinite(stepper.dt), "stepper.dt", "Δt > 0 required");
  require(stepper.max_retries >= 0, "stepper.max_retries", "max_retries ≥ 0 required");
  require(horizon >= 0.0 && std::isfinite(horizon), "stepper.T", "T ≥ 0 required");
  require(members >= 1, "run.members", "members ≥ 1 required");
  require(state_stride >= 1, "run.state_stride", "state_stride ≥ 1 required");
  require(index_stride >= 1, "run.index_stride", "index_stride ≥ 1 required");
  require(!out.empty(), "run.out", "output directory required");
  require(initial == "rest" || initial == "acoustic", "run.initial", "initial must be rest or acoustic");
  require(initial_amplitude >= 0.0 && initial_amplitude < 1.0, "run.initial_amplitude", "0 ≤ amplitude < 1 required");

  const auto& s = stationarity;
  require(s.burn_in >= 0.0, "stationarity.burn_in", "burn_in ≥ 0 required");
  require(s.members >= 1, "stationarity.members", "members ≥ 1 required");
  for (double t : s.t_list) require(t >= 0.0, "stationarity.t_list", "times ≥ 0 required");
  require(!s.tau_list.empty(), "stationarity.tau_list", "at least one τ required");
  for (double tau : s.tau_list) require(tau >= 0.0, "stationarity.tau_list", "τ ≥ 0 required");
  require(!s.functionals.empty(), "stationarity.functionals", "at least one functional required");
  for (const auto& f : s.functionals) functional_by_name(f, params);
  require(s.samples_per_member >= 1, "stationarity.samples_per_member", "must be ≥ 1");
  require(s.sample_spacing > 0.0, "stationarity.sample_spacing", "must be > 0");
  require(s.mollifier_m >= 1, "stationarity.mollifier_m", "must be ≥ 1");
  require(s.mollifier_stride >= 0, "stationarity.mollifier_stride", "must be ≥ 0");
  require(s.alpha > 0.0 && s.alpha < 1.0, "stationarity.alpha", "α ∈ (0, 1) required");
  require(s.permutations >= 1, "stationarity.permutations", "must be ≥ 1");
  require(s.min_samples >= 1, "stationarity.min_samples", "must be ≥ 1");
  require(s.kb_horizon >= 0.0, "stationarity.kb_horizon", "must be ≥ 0");

  const auto& d = diagnostics;
  static const std::set<std::string> kinds = {"energy", "mass", "renorm", "evf", "korn", "lower-bound", "ergodic"};
  for (const auto& w : d.which)
    require(kinds.count(w) == 1, "diagnostics.which",
            "unknown diagnostic '" + w + "' (energy, mass, renorm, evf, korn, lower-bound, ergodic)");
  if (d.evf_level == FluxLevel::delta)
    require(d.evf_alpha > 0.0 && d.evf_alpha < 1.0 / 3.0, "diagnostics.evf_alpha", "α ∈ (0, 1/3) required");
  require(d.window_t0 >= 0.0, "diagnostics.window_t0", "must be ≥ 0");
  require(d.window_t1 < 0.0 || d.window_t1 >= d.window_t0, "diagnostics.window_t1", "must be ≥ window_t0");
  require(d.window_t1 <= horizon + 0.5 * stepper.dt, "diagnostics.window_t1", "must not exceed T");
  for (const auto& w : d.which)
    if (w == "lower-bound") require(params.epsilon > 0.0, "model.epsilon", "ε > 0 required for lower-bound");

  require(sweep.axis == "epsilon" || sweep.axis == "delta" || sweep.axis == "N" || sweep.axis == "R", "sweep.axis",
          "axis must be epsilon, delta, N or R");
  require(sweep.burn_in >= 0.0, "sweep.burn_in", "must be ≥ 0");
  for (double v : sweep.values) {
    RunConfig cell = *this;
    cell.sweep.values.clear();
    if (sweep.axis == "epsilon") cell.params.epsilon = v;
    if (sweep.axis == "delta") cell.params.delta = v;
    if (sweep.axis == "R") cell.params.truncation_radius = v;
    if (sweep.axis == "N") {
      require(v == std::floor(v), "sweep.values", "N values must be integers");
      cell.grid.galerkin_cutoff = static_cast<int>(v);
    }
    try {
      cell.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("sweep.values", "value " + num(v) + " violates " + e.field() + ": " + e.constraint());
    }
  }
}

NoiseModel RunConfig::noise_model() const {
  if (noise_family == "none" || params.noise_modes == 0) return NoiseModel::none();
  return NoiseModel::trig_parity(grid, params.noise_modes, noise_amplitude);
}

State RunConfig::initial_state() const {
  if (initial == "rest") return default_initial_state(grid, params);
  // Small acoustic perturbation in the symmetry class.
  const double rho0 = params.total_mass / grid.volume();
  const double k = 2.0 * std::numbers::pi / grid.length;
  const double amp = initial_amplitude;
  const int d = grid.dim;
  const auto rho = SpectralField::from_function(grid, [&](const std::array<double, 3>& x) {
    double c = 1.0;
    for (int a = 0; a < d; ++a) c *= std::cos(k * x[a]);
    return rho0 * (1.0 + amp * c);
  });
  SpectralVectorField u = SpectralVectorField::zeros(grid);
  for (int i = 0; i < d; ++i)
    u[i] = SpectralField::from_function(grid, [&, i](const std::array<double, 3>& x) {
      double v = amp * std::sin(k * x[i]);
      for (int j = 0; j < d; ++j)
        if (j != i) v *= std::cos(k * x[j]);
      return v;
    });
  return make_state(0.0, rho, u);
}

RecordOptions RunConfig::record_options() const {
  RecordOptions o;
  o.state_stride = state_stride;
  o.index_stride = index_stride;
  o.track_symmetry = track_symmetry;
  return o;
}

StationarityPlan RunConfig::stationarity_plan() const {
  const auto& s = stationarity;
  StationarityPlan plan;
  for (const auto& f : s.functionals) plan.functionals.push_back(functional_by_name(f, params));
  plan.t_list = s.t_list.empty() ? std::vector<double>{s.burn_in} : s.t_list;
  plan.tau_list = s.tau_list;
  plan.samples_per_member = s.samples_per_member;
  plan.sample_spacing = s.sample_spacing;
  plan.mollifier_m = s.mollifier_m;
  plan.mollifier_stride = s.mollifier_stride;
  plan.d1_view = s.d1_view;
  plan.alpha = s.alpha;
  plan.permutations = s.permutations;
  plan.seed = seed;
  plan.threshold = s.threshold;
  plan.min_samples = static_cast<std::size_t>(s.min_samples);
  plan.burn_in = s.burn_in;
  return plan;
}

double RunConfig::stationarity_horizon() const {
  const auto plan = stationarity_plan();
  double t_max = 0.0, tau_max = 0.0;
  for (double t : plan.t_list) t_max = std::max(t_max, t);
  for (double tau : plan.tau_list) tau_max = std::max(tau_max, tau);
  double end = t_max + (plan.samples_per_member - 1) * plan.sample_spacing + tau_max;
  if (plan.d1_view) end += 1.0 / plan.mollifier_m;
  end = std::max(end, stationarity.burn_in + 2.0 * stationarity.kb_horizon);
  // Round up to whole steps.
  return std::ceil(end / stepper.dt - 1e-9) * stepper.dt;
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << "[grid]\ndim = " << grid.dim << "\nn = " << grid.n << "\nN = " << grid.galerkin_cutoff
     << "\nL = " << num(grid.length) << "\n\n";
  os << "[model]\na = " << num(params.a) << "\ngamma = " << num(params.gamma) << "\nmu = " << num(params.mu)
     << "\neta = " << num(params.eta) << "\nM0 = " << num(params.total_mass) << "\nepsilon = " << num(params.epsilon)
     << "\ndelta = " << num(params.delta) << "\nGamma = " << num(params.Gamma)
     << "\nR = " << num(params.truncation_radius)
     << "\nlevel = " << (params.level == SystemLevel::zero ? "zero" : "delta") << "\n\n";
  os << "[noise]\nfamily = " << noise_family << "\nA = " << num(noise_amplitude) << "\nK = " << params.noise_modes
     << "\n\n";
  os << "[stepper]\ndt = " << num(stepper.dt) << "\nT = " << num(horizon) << "\nmax_retries = " << stepper.max_retries
     << "\nsymmetric = " << (stepper.symmetric ? "true" : "false") << "\n\n";
  os << "[run]\nseed = " << seed << "\nout = " << out << "\nmembers = " << members
     << "\nstate_stride = " << state_stride << "\nindex_stride = " << index_stride
     << "\ntrack_symmetry = " << (track_symmetry ? "true" : "false") << "\ninitial = " << initial
     << "\ninitial_amplitude = " << num(initial_amplitude) << "\n\n";
  const auto& s = stationarity;
  os << "[stationarity]\nburn_in = " << num(s.burn_in) << "\nmembers = " << s.members
     << "\nt_list = " << join(s.t_list) << "\ntau_list = " << join(s.tau_list)
     << "\nfunctionals = " << join(s.functionals) << "\nsamples_per_member = " << s.samples_per_member
     << "\nsample_spacing = " << num(s.sample_spacing) << "\nmollifier_m = " << s.mollifier_m << "\nmollifier_stride = " << s.mollifier_stride
     << "\nd1_view = " << (s.d1_view ? "true" : "false") << "\nalpha = " << num(s.alpha)
     << "\npermutations = " << s.permutations << "\nthreshold = " << num(s.threshold)
     << "\nmin_samples = " << s.min_samples << "\nkb_horizon = " << num(s.kb_horizon)
     << "\nramp_surrogate = " << (s.ramp_surrogate ? "true" : "false") << "\n\n";
  const auto& d = diagnostics;
  os << "[diagnostics]\nwhich = " << join(d.which) << "\nwindow_t0 = " << num(d.window_t0)
     << "\nwindow_t1 = " << num(d.window_t1)
     << "\nevf_level = " << (d.evf_level == FluxLevel::epsilon ? "epsilon" : "delta")
     << "\nevf_alpha = " << num(d.evf_alpha) << "\nlower_bound_from = " << num(d.lower_bound_from)
     << "\nergodic_T = " << num(d.ergodic_horizon) << "\n\n";
  os << "[sweep]\naxis = " << sweep.axis << "\nvalues = " << join(sweep.values) << "\nburn_in = " << num(sweep.burn_in)
     << "\n";
  return os.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string RunConfig::hash() const { return fnv1a_hex(canonical()); }

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", std::string("malformed INI: ") + e.message() + " (line " +
                                    std::to_string(e.line()) + ")");
  }
  const auto& sch = schema();
  for (const auto& [section, body] : tree) {
    const auto it = sch.find(section);
    if (it == sch.end()) {
      if (!body.data().empty()) throw ConfigError(section, "keys must appear inside a section");
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [key, value] : body)
      if (it->second.count(key) == 0) throw ConfigError(section + "." + key, "unknown key");
  }

  RunConfig c;
  auto get = [&](const std::string& section, const std::string& key, auto apply) {
    const auto v = tree.get_optional<std::string>(pt::ptree::path_type(section + "." + key, '.'));
    if (v) apply(section + "." + key, trim(*v));
  };
  get("grid", "dim", [&](auto f, auto v) { c.grid.dim = to_int32(f, v); });
  get("grid", "n", [&](auto f, auto v) { c.grid.n = to_int32(f, v); });
  get("grid", "N", [&](auto f, auto v) { c.grid.galerkin_cutoff = to_int32(f, v); });
  get("grid", "L", [&](auto f, auto v) { c.grid.length = to_double(f, v); });

  get("model", "a", [&](auto f, auto v) { c.params.a = to_double(f, v); });
  get("model", "gamma", [&](auto f, auto v) { c.params.gamma = to_double(f, v); });
  get("model", "mu", [&](auto f, auto v) { c.params.mu = to_double(f, v); });
  get("model", "eta", [&](auto f, auto v) { c.params.eta = to_double(f, v); });
  get("model", "M0", [&](auto f, auto v) { c.params.total_mass = to_double(f, v); });
  get("model", "epsilon", [&](auto f, auto v) { c.params.epsilon = to_double(f, v); });
  get("model", "delta", [&](auto f, auto v) { c.params.delta = to_double(f, v); });
  get("model", "Gamma", [&](auto f, auto v) { c.params.Gamma = to_double(f, v); });
  get("model", "R", [&](auto f, auto v) { c.params.truncation_radius = to_double(f, v); });
  get("model", "level", [&](auto f, auto v) {
    if (v == "zero")
      c.params.level = SystemLevel::zero;
    else if (v == "delta")
      c.params.level = SystemLevel::delta;
    else
      throw ConfigError(f, "level must be zero or delta");
  });

  get("noise", "family", [&](auto, auto v) { c.noise_family = v; });
  get("noise", "A", [&](auto f, auto v) { c.noise_amplitude = to_double(f, v); });
  get("noise", "K", [&](auto f, auto v) { c.params.noise_modes = to_int32(f, v); });

  get("stepper", "dt", [&](auto f, auto v) { c.stepper.dt = to_double(f, v); });
  get("stepper", "T", [&](auto f, auto v) { c.horizon = to_double(f, v); });
  get("stepper", "max_retries", [&](auto f, auto v) { c.stepper.max_retries = to_int32(f, v); });
  get("stepper", "symmetric", [&](auto f, auto v) { c.stepper.symmetric = to_bool(f, v); });

  get("run", "seed", [&](auto f, auto v) { c.seed = to_u64(f, v); });
  get("run", "out", [&](auto, auto v) { c.out = v; });
  get("run", "members", [&](auto f, auto v) { c.members = to_int32(f, v); });
  get("run", "state_stride", [&](auto f, auto v) { c.state_stride = to_int32(f, v); });
  get("run", "index_stride", [&](auto f, auto v) { c.index_stride = to_int32(f, v); });
  get("run", "track_symmetry", [&](auto f, auto v) { c.track_symmetry = to_bool(f, v); });
  get("run", "initial", [&](auto, auto v) { c.initial = v; });
  get("run", "initial_amplitude", [&](auto f, auto v) { c.initial_amplitude = to_double(f, v); });

  auto& s = c.stationarity;
  get("stationarity", "burn_in", [&](auto f, auto v) { s.burn_in = to_double(f, v); });
  get("stationarity", "members", [&](auto f, auto v) { s.members = to_int32(f, v); });
  get("stationarity", "t_list", [&](auto f, auto v) { s.t_list = to_doubles(f, v); });
  get("stationarity", "tau_list", [&](auto f, auto v) { s.tau_list = to_doubles(f, v); });
  get("stationarity", "functionals", [&](auto, auto v) { s.functionals = split_list(v); });
  get("stationarity", "samples_per_member", [&](auto f, auto v) { s.samples_per_member = to_int32(f, v); });
  get("stationarity", "sample_spacing", [&](auto f, auto v) { s.sample_spacing = to_double(f, v); });
  get("stationarity", "mollifier_m", [&](auto f, auto v) { s.mollifier_m = to_int32(f, v); });
  get("stationarity", "mollifier_stride", [&](auto f, auto v) { s.mollifier_stride = to_int32(f, v); });
  get("stationarity", "d1_view", [&](auto f, auto v) { s.d1_view = to_bool(f, v); });
  get("stationarity", "alpha", [&](auto f, auto v) { s.alpha = to_double(f, v); });
  get("stationarity", "permutations", [&](auto f, auto v) { s.permutations = to_int32(f, v); });
  get("stationarity", "threshold", [&](auto f, auto v) { s.threshold = to_double(f, v); });
  get("stationarity", "min_samples", [&](auto f, auto v) { s.min_samples = to_int32(f, v); });
  get("stationarity", "kb_horizon", [&](auto f, auto v) { s.kb_horizon = to_double(f, v); });
  get("stationarity", "ramp_surrogate", [&](auto f, auto v) { s.ramp_surrogate = to_bool(f, v); });

  auto& d = c.diagnostics;
  get("diagnostics", "which", [&](auto, auto v) { d.which = split_list(v); });
  get("diagnostics", "window_t0", [&](auto f, auto v) { d.window_t0 = to_double(f, v); });
  get("diagnostics", "window_t1", [&](auto f, auto v) { d.window_t1 = to_double(f, v); });
  get("diagnostics", "evf_level", [&](auto f, auto v) {
    if (v == "epsilon")
      d.evf_level = FluxLevel::epsilon;
    else if (v == "delta")
      d.evf_level = FluxLevel::delta;
    else
      throw ConfigError(f, "evf_level must be epsilon or delta");
  });
  get("diagnostics", "evf_alpha", [&](auto f, auto v) { d.evf_alpha = to_double(f, v); });
  get("diagnostics", "lower_bound_from", [&](auto f, auto v) { d.lower_bound_from = to_double(f, v); });
  get("diagnostics", "ergodic_T", [&](auto f, auto v) { d.ergodic_horizon = to_double(f, v); });

  get("sweep", "axis", [&](auto, auto v) { c.sweep.axis = v; });
  get("sweep", "values", [&](auto f, auto v) { c.sweep.values = to_doubles(f, v); });
  get("sweep", "burn_in", [&](auto f, auto v) { c.sweep.burn_in = to_double(f, v); });

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError("config", std::string("cannot read ") + path.string() + ": " + e.what());
  }
  if (path.extension() == ".json") {
    try {
      const auto j = nlohmann::json::parse(text);
      return parse_config(j.at("config").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config", std::string("manifest without a usable config: ") + e.what());
    }
  }
  return parse_config(text);
}

void apply_environment(RunConfig& config) {
  if (const char* v = std::getenv("SCNS_SEED"); v && *v) config.seed = to_u64("SCNS_SEED", v);
}

}  // namespace scns
