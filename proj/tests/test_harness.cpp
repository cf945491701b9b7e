#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "doctest.h"
#include "scns/errors.hpp"
#include "scns/harness.hpp"
#include "scns/io.hpp"
#include "scns/model.hpp"

using namespace scns;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("scns_harness_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

struct CliResult {
  int code = -1;
  std::string output;
};

// Runs the CLI in `dir` with stdout and stderr captured.
CliResult cli(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const fs::path log = dir / "cli.log";
  const std::string cmd = "cd '" + dir.string() + "' && " + env + (env.empty() ? "" : " ") + "'" SCNS_CLI_PATH "' " +
                          args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = read_file(log);
  return r;
}

std::string csv_value(const std::string& csv, const std::string& key) {
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);)
    if (line.rfind(key + ",", 0) == 0) return line.substr(key.size() + 1);
  return "";
}

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

const char* kSmall = R"([grid]
dim = 1
n = 16
N = 3
[stepper]
dt = 0.002
T = 1
[run]
state_stride = 50
)";

std::string config_error_field(const std::string& text) {
  try {
    parse_config(text).validate();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("defaults parse and validate") {
    const RunConfig c = parse_config("");
    CHECK_NOTHROW(c.validate());
    CHECK(c.grid.n >= 2 * (2 * c.grid.galerkin_cutoff + 1));
    CHECK(c.seed == 1);
    CHECK(c.stationarity.members == 16);
    CHECK(c.stationarity.tau_list == std::vector<double>{1.0, 5.0, 10.0});
  }

  TEST_CASE("every invalid field is named") {
    CHECK(config_error_field("[grid]\ndim = 4\n") == "grid.dim");
    CHECK(config_error_field("[grid]\nn = 15\n") == "grid.n");
    CHECK(config_error_field("[grid]\nn = 16\nN = 4\n") == "grid.n");
    CHECK(config_error_field("[grid]\nL = -1\n") == "grid.L");
    CHECK(config_error_field("[model]\nmu = 0\n") == "model.mu");
    CHECK(config_error_field("[model]\ngamma = 1\n") == "model.gamma");
    CHECK(config_error_field("[noise]\nfamily = white\n") == "noise.family");
    CHECK(config_error_field("[noise]\nA = -1\n") == "noise.A");
    CHECK(config_error_field("[stepper]\ndt = 0\n") == "stepper.dt");
    CHECK(config_error_field("[stepper]\nT = -1\n") == "stepper.T");
    CHECK(config_error_field("[run]\nmembers = 0\n") == "run.members");
    CHECK(config_error_field("[run]\ninitial = vortex\n") == "run.initial");
    CHECK(config_error_field("[stationarity]\nalpha = 1.5\n") == "stationarity.alpha");
    CHECK(config_error_field("[stationarity]\nfunctionals = mass, vorticity\n") == "stationarity.functionals");
    CHECK(config_error_field("[stationarity]\ntau_list = -1\n") == "stationarity.tau_list");
    CHECK(config_error_field("[diagnostics]\nwhich = energy, spectrum\n") == "diagnostics.which");
    CHECK(config_error_field("[diagnostics]\nevf_level = delta\nevf_alpha = 0.5\n") == "diagnostics.evf_alpha");
    CHECK(config_error_field("[sweep]\naxis = gamma\n") == "sweep.axis");
    CHECK(config_error_field("[sweep]\naxis = epsilon\nvalues = 0.1, -0.1\n") == "sweep.values");
    CHECK(config_error_field("[stepper]\ndt = fast\n") == "stepper.dt");
    CHECK(config_error_field("[bogus]\nx = 1\n") == "bogus");
    CHECK(config_error_field("[grid]\nsize = 3\n") == "grid.size");
  }

  TEST_CASE("gamma constraint message for d=3") {
    try {
      parse_config("[grid]\ndim = 3\nn = 8\nN = 1\n[model]\ngamma = 1.2\n").validate();
      FAIL("accepted γ = 1.2 in d = 3");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "model.gamma");
      CHECK(e.constraint() == "γ > 3/2 required for d=3");
    }
  }

  TEST_CASE("canonical text round-trips and drives the hash") {
    const RunConfig c = parse_config(std::string(kSmall) + "[model]\nepsilon = 0.25\n[stationarity]\ntau_list = 1, 2\n");
    const RunConfig back = parse_config(c.canonical());
    CHECK(back.canonical() == c.canonical());
    CHECK(back.hash() == c.hash());
    CHECK(c.hash().size() == 16);
    RunConfig other = c;
    other.seed = 2;
    CHECK(other.hash() != c.hash());
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  }

  TEST_CASE("SCNS_SEED overrides the seed") {
    RunConfig c = parse_config(kSmall);
    ::setenv("SCNS_SEED", "42", 1);
    apply_environment(c);
    CHECK(c.seed == 42);
    ::setenv("SCNS_SEED", "4x2", 1);
    CHECK_THROWS_AS(apply_environment(c), ConfigError);
    ::unsetenv("SCNS_SEED");
    apply_environment(c);
    CHECK(c.seed == 42);
  }

  TEST_CASE("parallel_for covers every index and rethrows") {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw SolverFailure("boom"); }),
                    SolverFailure);
  }

  TEST_CASE("guarded maps errors to exit codes") {
    std::ostringstream err;
    CHECK(guarded([] { return 0; }, err) == exit_ok);
    CHECK(guarded([]() -> int { throw ConfigError("grid.n", "bad"); }, err) == exit_validation);
    CHECK(guarded([]() -> int { throw DomainError("bad α"); }, err) == exit_validation);
    CHECK(guarded([]() -> int { throw IoError("missing"); }, err) == exit_validation);
    CHECK(guarded([]() -> int { throw SolverFailure("diverged"); }, err) == exit_solver);
    CHECK(err.str().find("grid.n: bad") != std::string::npos);
  }

  TEST_CASE("simulate smoke, determinism and seed override") {
    const fs::path dir = scratch("simulate");
    put(dir / "run.ini", kSmall);
    const auto a = cli(dir, "simulate --config run.ini --out a");
    REQUIRE(a.code == 0);
    for (const char* f : {"a/config.ini", "a/manifest.json", "a/member_000/trajectory.csv",
                          "a/member_000/increments.bin", "a/member_000/snap_0000000000.scns1",
                          "a/member_000/snap_0000000500.scns1"})
      CHECK(fs::exists(dir / f));
    const std::string manifest = read_file(dir / "a/manifest.json");
    CHECK(manifest.find(parse_config(kSmall).hash()) != std::string::npos);
    CHECK(manifest.find("\"fnv1a\"") != std::string::npos);

    REQUIRE(cli(dir, "simulate --config run.ini --out b --jobs 2").code == 0);
    for (const char* f : {"member_000/trajectory.csv", "member_000/increments.bin", "member_000/snap_0000000500.scns1"})
      CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));

    // A manifest is itself a valid config and reproduces the run.
    REQUIRE(cli(dir, "simulate --config a/manifest.json --out c").code == 0);
    CHECK(read_file(dir / "a/member_000/trajectory.csv") == read_file(dir / "c/member_000/trajectory.csv"));

    REQUIRE(cli(dir, "simulate --config run.ini --out d", "SCNS_SEED=7").code == 0);
    CHECK(read_file(dir / "a/member_000/trajectory.csv") != read_file(dir / "d/member_000/trajectory.csv"));
    CHECK(read_file(dir / "d/config.ini").find("seed = 7") != std::string::npos);
  }

  TEST_CASE("simulate rejects invalid configs before computing") {
    const fs::path dir = scratch("reject");
    put(dir / "g.ini", "[grid]\ndim = 3\nn = 8\nN = 1\n[model]\ngamma = 1.2\n[run]\nout = never\n");
    const auto r = cli(dir, "simulate --config g.ini");
    CHECK(r.code == exit_validation);
    CHECK(r.output.find("γ > 3/2 required for d=3") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "never"));
    CHECK(cli(dir, "simulate --config missing.ini").code == exit_validation);
    CHECK(cli(dir, "simulate").code == exit_validation);
  }

  TEST_CASE("diagnose mass residual stays below 10 dt") {
    const fs::path dir = scratch("mass");
    put(dir / "run.ini", std::string(kSmall) + "members = 2\n");
    REQUIRE(cli(dir, "simulate --config run.ini --out r").code == 0);
    const auto d = cli(dir, "diagnose --run r --which mass,energy,renorm,korn,lower-bound,ergodic,evf");
    REQUIRE(d.code == 0);
    for (int k = 0; k < 2; ++k) {
      const fs::path diag = dir / "r" / member_dir(k) / "diagnostics";
      const std::string mass = read_file(diag / "mass.csv");
      CHECK(std::stod(csv_value(mass, "max_residual")) < 10.0 * 0.002);
      CHECK(csv_value(mass, "pass") == "1");
      for (const char* f : {"energy.csv", "energy.txt", "renorm.csv", "evf.csv", "korn.csv", "lower_bound.csv",
                            "ergodic.csv"})
        CHECK(fs::exists(diag / f));
      CHECK(std::stod(csv_value(read_file(diag / "korn.csv"), "min_ratio")) > 0.0);
      CHECK(std::stod(csv_value(read_file(diag / "lower_bound.csv"), "observed_min")) > 0.0);
    }
  }

  TEST_CASE("diagnose energy residual halves with dt on noise-off runs") {
    const fs::path dir = scratch("energy");
    double res[2];
    const char* dts[2] = {"0.004", "0.002"};
    for (int i = 0; i < 2; ++i) {
      put(dir / "e.ini", std::string("[grid]\ndim = 1\nn = 16\nN = 3\n[noise]\nfamily = none\n[stepper]\ndt = ") +
                             dts[i] + "\nT = 1\n[run]\ninitial = acoustic\n");
      const std::string out = std::string("e") + dts[i];
      REQUIRE(cli(dir, "simulate --config e.ini --out " + out).code == 0);
      REQUIRE(cli(dir, "diagnose --run " + out + " --which energy").code == 0);
      const std::string csv = read_file(dir / out / "member_000/diagnostics/energy.csv");
      CHECK(csv.rfind("term,value\n", 0) == 0);
      res[i] = std::abs(std::stod(csv_value(csv, "residual")));
    }
    CHECK(res[1] < res[0]);
    CHECK(res[0] / res[1] == doctest::Approx(2.0).epsilon(0.25));
  }

  TEST_CASE("diagnose rejects delta-level alpha outside (0, 1/3)") {
    const fs::path dir = scratch("evf");
    put(dir / "run.ini", kSmall);
    REQUIRE(cli(dir, "simulate --config run.ini --out r").code == 0);
    const auto r = cli(dir, "diagnose --run r --which evf --level delta --alpha 0.5");
    CHECK(r.code == exit_validation);
    CHECK(r.output.find("α ∈ (0, 1/3)") != std::string::npos);
    CHECK(cli(dir, "diagnose --run r --which evf --level delta --alpha 0.2").code == 0);
  }

  TEST_CASE("diagnose detects missing and corrupt artifacts") {
    const fs::path dir = scratch("corrupt");
    put(dir / "run.ini", kSmall);
    REQUIRE(cli(dir, "simulate --config run.ini --out r").code == 0);
    CHECK(cli(dir, "diagnose --run nowhere").code == exit_validation);

    fs::copy(dir / "r", dir / "edited", fs::copy_options::recursive);
    std::string traj = read_file(dir / "edited/member_000/trajectory.csv");
    traj[traj.size() / 2] = traj[traj.size() / 2] == '1' ? '2' : '1';
    put(dir / "edited/member_000/trajectory.csv", traj);
    const auto e = cli(dir, "diagnose --run edited");
    CHECK(e.code == exit_validation);
    CHECK(e.output.find("does not reproduce") != std::string::npos);

    fs::remove(dir / "r/member_000/increments.bin");
    const auto m = cli(dir, "diagnose --run r");
    CHECK(m.code == exit_validation);
    CHECK(m.output.find("missing artifact") != std::string::npos);
  }

  TEST_CASE("stationarity flags insufficient samples and fails the ramp control") {
    const fs::path dir = scratch("stationarity");
    const std::string base =
        "[grid]\ndim = 1\nn = 16\nN = 3\n[stepper]\ndt = 0.002\n[stationarity]\nburn_in = 0.5\ntau_list = 0.5\n"
        "samples_per_member = 2\nsample_spacing = 0.1\npermutations = 200\n";
    put(dir / "tiny.ini", base + "members = 2\n");
    const auto t = cli(dir, "stationarity --config tiny.ini --out tiny");
    CHECK(t.code == 0);
    CHECK(t.output.find("INSUFFICIENT SAMPLES") != std::string::npos);
    CHECK(csv_rows(read_file(dir / "tiny/stationarity.csv")).size() == 1 + 6);

    put(dir / "ramp.ini", base + "members = 16\nramp_surrogate = true\n");
    const auto r = cli(dir, "stationarity --config ramp.ini --out ramp");
    CHECK(r.code == 0);
    CHECK(r.output.find("verdict: FAIL") != std::string::npos);
    const auto rows = csv_rows(read_file(dir / "ramp/stationarity.csv"));
    for (const auto& row : rows)
      if (row[0] == "mass") {
        CHECK(std::stod(row[4]) == 1.0);
        CHECK(row[6] == "0");
      }
  }

  TEST_CASE("epsilon sweep tabulates M_eps increasing toward M0") {
    const fs::path dir = scratch("sweep_eps");
    put(dir / "s.ini", std::string(kSmall) + "[sweep]\naxis = epsilon\nvalues = 0.2, 0.1, 0.05\nburn_in = 0.5\n");
    REQUIRE(cli(dir, "sweep --config s.ini --out s").code == 0);
    const auto rows = csv_rows(read_file(dir / "s/sweep.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0][2] == "M_eps");
    const double eps[3] = {0.2, 0.1, 0.05};
    double prev = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double me = std::stod(rows[i + 1][2]);
      CHECK(me == doctest::Approx(solve_M_epsilon(eps[i], 1.0)).epsilon(1e-14));
      CHECK(me > prev);
      CHECK(me < 1.0);
      prev = me;
    }
  }

  TEST_CASE("N sweep tail fraction decreases") {
    const fs::path dir = scratch("sweep_n");
    put(dir / "s.ini",
        "[grid]\ndim = 1\nn = 36\nN = 4\n[noise]\nK = 2\n[stepper]\ndt = 0.002\nT = 2\n[run]\nstate_stride = 50\n"
        "initial = acoustic\n[sweep]\naxis = N\nvalues = 4, 6, 8\nburn_in = 1\n");
    REQUIRE(cli(dir, "sweep --config s.ini --out s").code == 0);
    const auto rows = csv_rows(read_file(dir / "s/sweep.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0][9] == "tail_fraction");
    CHECK(std::stod(rows[2][9]) < std::stod(rows[1][9]));
    CHECK(std::stod(rows[3][9]) < std::stod(rows[2][9]));
  }

  TEST_CASE("single-value sweep reproduces simulate and diagnose") {
    const fs::path dir = scratch("sweep_one");
    put(dir / "run.ini", std::string(kSmall) + "[model]\nepsilon = 0.1\n");
    put(dir / "s.ini", std::string(kSmall) + "[model]\nepsilon = 0.3\n[sweep]\naxis = epsilon\nvalues = 0.1\n");
    REQUIRE(cli(dir, "simulate --config run.ini --out sim").code == 0);
    REQUIRE(cli(dir, "sweep --config s.ini --out sw").code == 0);
    for (const char* f : {"member_000/trajectory.csv", "member_000/increments.bin", "member_000/snap_0000000500.scns1"})
      CHECK(read_file(dir / "sim" / f) == read_file(dir / "sw/cell_0" / f));
    REQUIRE(cli(dir, "diagnose --run sim --which mass,energy").code == 0);
    REQUIRE(cli(dir, "diagnose --run sw/cell_0 --which mass,energy").code == 0);
    for (const char* f : {"mass.csv", "energy.csv"})
      CHECK(read_file(dir / "sim/member_000/diagnostics" / f) == read_file(dir / "sw/cell_0/member_000/diagnostics" / f));
  }
}
