#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qsync/correlation_dynamics.hpp"
#include "qsync/critical_coupling.hpp"
#include "qsync/experiment.hpp"
#include "qsync/fixed_point.hpp"
#include "qsync/io.hpp"
#include "qsync/kuramoto.hpp"
#include "qsync/version.hpp"

using namespace qsync;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ExperimentConfig cfg_from(const std::string& text) {
  ExperimentConfig cfg;
  apply_config_json(cfg, text);
  return cfg;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Drops lines carrying the wall-clock stamp so reruns compare byte-equal.
std::string strip_generated(const std::string& text) {
  std::istringstream in(text);
  std::string out, line;
  while (std::getline(in, line)) {
    if (line.find("generated") != std::string::npos) continue;
    out += line;
    out += '\n';
  }
  return out;
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::istringstream in(csv);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

// Keeps trailing empty fields, which std::getline would drop.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qsync_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json load_json(const fs::path& p) { return json::parse(read_file(p)); }

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("double formatting is the shortest exact round-trip") {
  const double vals[] = {0.5,    1.0 / 3.0, 1e-17, 6.02e23,
                         -2.5e-8, 0.1,      0.0,   3.141592653589793};
  for (double v : vals) {
    const std::string s = io::format_double(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
  }
  CHECK(io::format_double(1.0) == "1");
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("config hash is deterministic fnv1a") {
  CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(io::fnv1a_hex("qsync") == io::fnv1a_hex("qsync"));
  CHECK(io::fnv1a_hex("qsync") != io::fnv1a_hex("qsynd"));
}

TEST_CASE("csv metadata lines") {
  const std::string plain = io::csv_metadata("deadbeef", false);
  CHECK(plain == std::string("# qsync ") + kVersion + "\n# config_hash deadbeef\n");
  const std::string stamped = io::csv_metadata("deadbeef", true);
  CHECK(stamped.find("# generated ") != std::string::npos);
  CHECK(stamped.substr(0, plain.size()) == plain);
}

TEST_CASE("trajectory csv layout") {
  const auto ens = make_ensemble({1.0, -1.0});
  SolverConfig sc;
  sc.dt = 1e-3;
  sc.t_final = 0.01;
  sc.record_every = 5;
  const auto traj = integrate(random_unit_gram(2, 4, 7), ens, 4.0, sc);
  const std::string csv = io::trajectory_csv(traj);
  const auto lines = data_lines(csv);
  REQUIRE(lines.size() == traj.states.size() + 1);
  CHECK(lines[0] == "t,re_z_1_2,im_z_1_2,lambda");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    CHECK(split_fields(lines[i]).size() == 4);
  }
  CHECK(std::strtod(split_fields(lines[1])[0].c_str(), nullptr) == 0.0);

  const auto ens3 = make_ensemble({1.0, 0.0, -1.0});
  const auto traj3 = integrate(random_unit_gram(3, 5, 7), ens3, 4.0, sc);
  const auto lines3 = data_lines(io::trajectory_csv(traj3));
  CHECK(lines3[0] == "t,re_z_1_2,im_z_1_2,re_z_1_3,im_z_1_3,re_z_2_3,im_z_2_3,lambda");

  CHECK_THROWS_AS(io::trajectory_csv(Trajectory{}), std::invalid_argument);
}

TEST_CASE("kuramoto csv layout") {
  const auto ens = make_ensemble({1.0, -1.0});
  SolverConfig sc;
  sc.dt = 1e-3;
  sc.t_final = 0.01;
  sc.record_every = 5;
  RealVector th(2);
  th << 0.3, -0.3;
  const auto traj = integrate_kuramoto(make_kuramoto_state(th), ens, 4.0, sc);
  const auto lines = data_lines(io::kuramoto_csv(traj));
  REQUIRE(lines.size() == traj.states.size() + 1);
  CHECK(lines[0] == "t,theta_1,theta_2,R");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    CHECK(split_fields(lines[i]).size() == 4);
  }
  CHECK_THROWS_AS(io::kuramoto_csv(KuramotoTrajectory{}), std::invalid_argument);
}

TEST_CASE("config json merge") {
  const auto cfg = cfg_from(R"({
    "command": "simulate",
    "ensemble": {"omegas": [1.0, -1.0]},
    "kappa": 4.0,
    "seed": 7,
    "epsilon": 0.01,
    "output": "x",
    "threads": 2,
    "solver": {"dt": 1e-3, "t_final": 2.0, "record_every": 10, "method": "rk4"},
    "oracle": {"potential": "harmonic", "omega_trap": 0.3, "grid_points": 256,
               "half_width": 10.0, "dt_factor": 0.25, "t_final": 1.0,
               "snapshots": 3}
  })");
  CHECK(cfg.command == "simulate");
  REQUIRE(cfg.omegas.size() == 2);
  CHECK(cfg.omegas[0] == 1.0);
  REQUIRE(cfg.kappa.has_value());
  CHECK(*cfg.kappa == 4.0);
  CHECK(cfg.seed == 7);
  CHECK(cfg.epsilon == 0.01);
  CHECK(cfg.output == "x");
  CHECK(cfg.threads == 2);
  REQUIRE(cfg.solver.dt.has_value());
  CHECK(*cfg.solver.dt == 1e-3);
  CHECK(*cfg.solver.t_final == 2.0);
  CHECK(*cfg.solver.record_every == 10);
  CHECK(*cfg.solver.method == "rk4");
  CHECK(cfg.oracle.potential == "harmonic");
  CHECK(cfg.oracle.omega_trap == 0.3);
  CHECK(cfg.oracle.grid_points == 256);
  CHECK(cfg.oracle.half_width == 10.0);
  CHECK(cfg.oracle.dt_factor == 0.25);
  CHECK(cfg.oracle.t_final == 1.0);
  CHECK(cfg.oracle.snapshots == 3);

  const auto swept = cfg_from(R"({
    "command": "sweep",
    "ensemble": {"preset": "two-cluster", "n": 4, "j": 1, "mass": 6.0},
    "kappa_range": {"lo": 1.0, "hi": 2.0, "points": 5}
  })");
  CHECK(swept.preset == "two-cluster");
  CHECK(swept.n == 4);
  CHECK(swept.cluster_j == 1);
  CHECK(swept.mass == 6.0);
  REQUIRE(swept.range.has_value());
  CHECK(swept.range->lo == 1.0);
  CHECK(swept.range->hi == 2.0);
  CHECK(swept.range->points == 5);
}

TEST_CASE("config json rejects unknown keys and bad types") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(apply_config_json(cfg, R"({"bogus": 1})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_json(cfg, R"({"solver": {"step": 1}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_json(cfg, R"({"ensemble": {"shape": "ring"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_json(cfg, R"({"kappa": "four"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_json(cfg, "not json at all"),
                  std::invalid_argument);
  try {
    apply_config_json(cfg, R"({"bogus": 1})");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("canonical config drives the hash") {
  auto cfg = cfg_from(R"({
    "command": "simulate",
    "ensemble": {"omegas": [1.0, -1.0]},
    "kappa": 4.0
  })");
  const std::string a = canonical_config(cfg);
  const std::string b = canonical_config(cfg);
  CHECK(a == b);
  cfg.seed = 99;
  const std::string c = canonical_config(cfg);
  CHECK(a != c);
  CHECK(io::fnv1a_hex(a) != io::fnv1a_hex(c));
}

TEST_CASE("config validation rules") {
  const auto ok = [](const std::string& text) {
    CHECK_NOTHROW(validate_config(cfg_from(text)));
  };
  const auto bad = [](const std::string& text) {
    CHECK_THROWS_AS(validate_config(cfg_from(text)), std::invalid_argument);
  };

  bad(R"({})");
  bad(R"({"command": "dance"})");
  bad(R"({"command": "simulate"})");
  bad(R"({"command": "simulate", "ensemble": {"omegas": [1.0, -1.0]}})");
  bad(R"({"command": "simulate", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa": 0.0})");
  bad(R"({"command": "simulate", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa": 4.0, "kappa_range": {"lo": 1.0, "hi": 2.0, "points": 3}})");
  bad(R"({"command": "sweep", "ensemble": {"omegas": [1.0, -1.0]}})");
  bad(R"({"command": "sweep", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa_range": {"lo": 1.0, "hi": 2.0, "points": 1}})");
  bad(R"({"command": "sweep", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa_range": {"lo": 0.0, "hi": 2.0, "points": 3}})");
  bad(R"({"command": "sweep", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa_range": {"lo": 2.0, "hi": 2.0, "points": 3}})");
  bad(R"({"command": "kappa-star",
          "ensemble": {"preset": "ring", "n": 4}})");
  bad(R"({"command": "kappa-star",
          "ensemble": {"preset": "two-cluster", "n": 4, "omegas": [1.0, -1.0]}})");
  bad(R"({"command": "kappa-star",
          "ensemble": {"preset": "two-cluster", "n": 1}})");
  bad(R"({"command": "simulate", "kappa": 4.0,
          "ensemble": {"preset": "full-sync", "n": 3}})");
  bad(R"({"command": "simulate", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa": 4.0, "epsilon": 0.0})");
  bad(R"({"command": "simulate", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa": 4.0, "epsilon": 1.0})");
  bad(R"({"command": "simulate", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa": 4.0, "solver": {"method": "euler"}})");
  bad(R"({"command": "simulate", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa": 4.0, "threads": -1})");
  bad(R"({"command": "oracle", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa": 4.0, "oracle": {"potential": "box"}})");
  bad(R"({"command": "oracle", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa": 4.0, "oracle": {"dt_factor": 1.5}})");
  bad(R"({"command": "oracle", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa": 4.0, "oracle": {"snapshots": 1}})");
  bad(R"({"command": "oracle", "ensemble": {"omegas": [1.0, -1.0]},
          "kappa": 4.0, "oracle": {"t_final": 0.0}})");

  ok(R"({"command": "stability", "ensemble": {"preset": "full-sync", "n": 4}})");
  ok(R"({"command": "kappa-star", "ensemble": {"omegas": [1.0, 0.0, -1.0]}})");
  ok(R"({"command": "sweep", "ensemble": {"omegas": [1.0, -1.0]},
         "kappa_range": {"lo": 3.0, "hi": 5.0, "points": 3}})");
  ok(R"({"command": "oracle", "ensemble": {"omegas": [1.0, -1.0]},
         "kappa": 4.0})");
}

TEST_CASE("ensemble construction from config") {
  const auto two = cfg_from(R"({
    "command": "kappa-star",
    "ensemble": {"preset": "two-cluster", "n": 4, "j": 1, "mass": 6.0}
  })");
  const auto ens_two = config_ensemble(two);
  REQUIRE(ens_two.size() == 4);
  CHECK(ens_two.omega[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(ens_two.omega[1] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(ens_two.omega[3] == doctest::Approx(-1.0).epsilon(1e-15));

  const auto triple = cfg_from(R"({
    "command": "kappa-star",
    "ensemble": {"preset": "symmetric-triple", "n": 3, "mass": 2.0}
  })");
  const auto ens_tri = config_ensemble(triple);
  REQUIRE(ens_tri.size() == 3);
  CHECK(ens_tri.omega[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ens_tri.omega[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(ens_tri.omega[2] == doctest::Approx(-1.0).epsilon(1e-15));

  const auto raw = cfg_from(R"({
    "command": "kappa-star",
    "ensemble": {"omegas": [2.0, 1.0, 0.0]}
  })");
  const auto ens_raw = config_ensemble(raw);
  CHECK(ens_raw.omega[0] == doctest::Approx(1.0));
  CHECK(ens_raw.omega[1] == doctest::Approx(0.0));
  CHECK(ens_raw.omega[2] == doctest::Approx(-1.0));

  const auto state = cfg_from(R"({
    "command": "stability",
    "ensemble": {"preset": "full-sync", "n": 3}
  })");
  const auto ens_state = config_ensemble(state);
  REQUIRE(ens_state.size() == 3);
  for (double w : ens_state.omega) CHECK(w == 0.0);
}

TEST_CASE("solver settings from config") {
  auto cfg = cfg_from(R"({
    "command": "simulate",
    "ensemble": {"omegas": [1.0, -1.0]},
    "kappa": 4.0
  })");
  const SolverConfig def = solver_for(cfg, 4.0);
  CHECK(def.dt == doctest::Approx(2.5e-4).epsilon(1e-12));
  CHECK(def.t_final == 10.0);
  CHECK(def.method == Method::rk4);

  apply_config_json(cfg, R"({
    "solver": {"dt": 1e-3, "t_final": 2.0, "record_every": 7, "method": "rk45"}
  })");
  const SolverConfig ovr = solver_for(cfg, 4.0);
  CHECK(ovr.dt == 1e-3);
  CHECK(ovr.t_final == 2.0);
  CHECK(ovr.record_every == 7);
  CHECK(ovr.method == Method::rk45);
}

TEST_CASE("output prefix directory override") {
  ExperimentConfig cfg;
  cfg.output = "runs/exp1";
  unsetenv("QSYNC_OUTPUT_DIR");
  CHECK(output_prefix(cfg) == "runs/exp1");
  setenv("QSYNC_OUTPUT_DIR", "/tmp/qsync_prefix_test", 1);
  const fs::path p(output_prefix(cfg));
  CHECK(p.parent_path() == "/tmp/qsync_prefix_test");
  CHECK(p.filename() == "exp1");
  unsetenv("QSYNC_OUTPUT_DIR");
}

TEST_CASE("random unit gram states are valid correlations") {
  const auto st = random_unit_gram(4, 6, 42);
  REQUIRE(st.size() == 4);
  for (int j = 0; j < 4; ++j) {
    CHECK(st.z(j, j) == Complex(1.0, 0.0));
    for (int k = 0; k < 4; ++k) {
      CHECK(std::abs(st.z(k, j) - std::conj(st.z(j, k))) < 1e-14);
      CHECK(std::abs(st.z(j, k)) <= 1.0 + 1e-12);
    }
  }
  const auto again = random_unit_gram(4, 6, 42);
  bool identical = true;
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      identical = identical && (st.z(j, k) == again.z(j, k));
    }
  }
  CHECK(identical);
  const auto other = random_unit_gram(4, 6, 43);
  CHECK((st.z - other.z).cwiseAbs().maxCoeff() > 1e-6);
  CHECK_THROWS_AS(random_unit_gram(4, 3, 1), std::invalid_argument);
}

TEST_CASE("sampling near a locked target stays close") {
  const auto ens = make_ensemble({1.0, -1.0});
  const auto pls = solve_phase_locked(ens, 4.0);
  REQUIRE(pls.has_value());
  const auto target = correlations_from_phase_locked(*pls);
  const double eps = 0.01;
  const auto st = sample_near_target(*pls, eps, 314);
  const double dev = (st.z - target.z).cwiseAbs().maxCoeff();
  CHECK(dev > 0.0);
  CHECK(dev < 6.0 * eps);
  for (int j = 0; j < st.size(); ++j) CHECK(st.z(j, j) == Complex(1.0, 0.0));
}

TEST_CASE("per coupling seed stream") {
  CHECK(derive_seed(1, 4.0) == derive_seed(1, 4.0));
  CHECK(derive_seed(1, 4.0) != derive_seed(1, 4.5));
  CHECK(derive_seed(1, 4.0) != derive_seed(2, 4.0));
}

TEST_CASE("simulate command reports a periodic regime above the lock window") {
  const fs::path dir = fresh_dir("simulate_periodic");
  auto cfg = cfg_from(R"({
    "command": "simulate",
    "ensemble": {"omegas": [1.0, -1.0]},
    "kappa": 1.0,
    "solver": {"t_final": 40.0}
  })");
  cfg.output = (dir / "run").string();
  CHECK(run_experiment(cfg) == kExitNoLock);
  const json j = load_json(dir / "run_simulate.json");
  CHECK(j.at("regime") == "periodic");
  CHECK(j.at("lock_exists") == false);
  CHECK(j.at("Lambda").get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  REQUIRE(j.contains("period_estimate"));
  if (!j.at("period_estimate").is_null()) {
    const double period = j.at("period_estimate").get<double>();
    CHECK(period > 1.0);
    CHECK(period < 10.0);
  }
  CHECK(fs::exists(dir / "run_trajectory.csv"));
}

TEST_CASE("fixed point command on both sides of the threshold") {
  const fs::path dir = fresh_dir("fixed_point");
  auto below = cfg_from(R"({
    "command": "fixed-point",
    "ensemble": {"omegas": [1.0, -1.0]},
    "kappa": 1.9
  })");
  below.output = (dir / "below").string();
  CHECK(run_experiment(below) == kExitNoLock);
  const json jb = load_json(dir / "below_fixed_point.json");
  CHECK(jb.at("locked") == false);

  auto above = cfg_from(R"({
    "command": "fixed-point",
    "ensemble": {"omegas": [1.0, -1.0]},
    "kappa": 4.0
  })");
  above.output = (dir / "above").string();
  CHECK(run_experiment(above) == kExitSuccess);
  const json ja = load_json(dir / "above_fixed_point.json");
  CHECK(ja.at("locked") == true);
  CHECK(ja.at("lambda").get<double>() ==
        doctest::Approx(std::cos(M_PI / 12.0)).epsilon(1e-9));
  CHECK(ja.at("alphas").size() == 2);
  CHECK(ja.at("residual").get<double>() < 1e-10);
}

TEST_CASE("kappa star command with and without a closed form") {
  const fs::path dir = fresh_dir("kappa_star");
  auto raw = cfg_from(R"({
    "command": "kappa-star",
    "ensemble": {"omegas": [1.0, 0.0, -1.0]}
  })");
  raw.output = (dir / "raw").string();
  CHECK(run_experiment(raw) == kExitSuccess);
  const json jr = load_json(dir / "raw_kappa_star.json");
  CHECK(jr.at("method") == "bisection");
  CHECK(jr.at("kappa_star").get<double>() == doctest::Approx(1.7044).epsilon(1e-3));
  CHECK(jr.at("bounds").at("lower").get<double>() ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(jr.at("bounds").at("upper").get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(!jr.contains("closed_form"));

  auto preset = cfg_from(R"({
    "command": "kappa-star",
    "ensemble": {"preset": "symmetric-triple", "n": 3, "mass": 2.0}
  })");
  preset.output = (dir / "preset").string();
  CHECK(run_experiment(preset) == kExitSuccess);
  const json jp = load_json(dir / "preset_kappa_star.json");
  REQUIRE(jp.contains("closed_form"));
  const double closed = jp.at("closed_form").at("kappa_star").get<double>();
  const double bis = jp.at("kappa_star").get<double>();
  CHECK(std::abs(closed - bis) <= 1e-6 * closed);
}

TEST_CASE("stability command on the full sync preset") {
  const fs::path dir = fresh_dir("stability");
  auto cfg = cfg_from(R"({
    "command": "stability",
    "ensemble": {"preset": "full-sync", "n": 4}
  })");
  cfg.output = (dir / "fs").string();
  CHECK(run_experiment(cfg) == kExitSuccess);
  const json j = load_json(dir / "fs_stability.json");
  CHECK(j.at("state") == "full-sync");
  CHECK(j.at("classification") == "stable");
  REQUIRE(j.at("eigenvalues").size() == 12);
  for (const auto& ev : j.at("eigenvalues")) {
    CHECK(ev[0].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(ev[1].get<double>()) < 1e-9);
  }
}

TEST_CASE("config errors exit with code 2") {
  auto cfg = cfg_from(R"({
    "command": "simulate",
    "ensemble": {"omegas": [1.0, -1.0]}
  })");
  cfg.output = (fresh_dir("config_error") / "x").string();
  CHECK(run_experiment(cfg) == kExitConfigError);
}

TEST_CASE("lyapunov command emits an admissible certificate at strong coupling") {
  const fs::path dir = fresh_dir("lyapunov");
  auto cfg = cfg_from(R"({
    "command": "lyapunov",
    "ensemble": {"omegas": [1.0, -1.0]},
    "kappa": 8.0,
    "seed": 5,
    "solver": {"t_final": 4.0}
  })");
  cfg.output = (dir / "lyap").string();
  CHECK(run_experiment(cfg) == kExitSuccess);
  const json j = load_json(dir / "lyap_lyapunov.json");
  CHECK(j.at("locked") == true);
  const auto& cert = j.at("certificate");
  CHECK(cert.at("A").get<double>() == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(cert.at("admissible") == true);
  CHECK(cert.at("C_M1").get<double>() > 0.0);
  CHECK(cert.at("envelope_max_ratio").get<double>() <= 1.0 + 1e-6);

  // Identical config and seed reproduce the file byte for byte; the output
  // path is part of the hashed config, so the rerun targets the same path.
  const std::string first = read_file(dir / "lyap_lyapunov.json");
  CHECK(run_experiment(cfg) == kExitSuccess);
  CHECK(strip_generated(first) ==
        strip_generated(read_file(dir / "lyap_lyapunov.json")));
}

TEST_CASE("sweep rows agree exactly with single runs at the same coupling") {
  const fs::path dir = fresh_dir("sweep");
  auto sweep = cfg_from(R"({
    "command": "sweep",
    "ensemble": {"omegas": [1.0, -1.0]},
    "kappa_range": {"lo": 3.0, "hi": 5.0, "points": 3},
    "seed": 11,
    "threads": 2,
    "solver": {"dt": 5e-4, "t_final": 3.0, "record_every": 20}
  })");
  sweep.output = (dir / "sw").string();
  CHECK(run_experiment(sweep) == kExitSuccess);
  const std::string csv = read_file(dir / "sw_sweep.csv");
  const auto lines = data_lines(csv);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] ==
        "kappa,locked,lambda,min_re_eig,classification,lyapunov_admissible,"
        "fitted_rate,error");
  const auto row4 = split_fields(lines[2]);
  REQUIRE(row4.size() == 8);
  CHECK(std::strtod(row4[0].c_str(), nullptr) == 4.0);
  CHECK(row4[1] == "1");
  const double sweep_rate = std::strtod(row4[6].c_str(), nullptr);

  auto single = cfg_from(R"({
    "command": "lyapunov",
    "ensemble": {"omegas": [1.0, -1.0]},
    "kappa": 4.0,
    "seed": 11,
    "solver": {"dt": 5e-4, "t_final": 3.0, "record_every": 20}
  })");
  single.output = (dir / "single").string();
  CHECK(run_experiment(single) == kExitSuccess);
  const json j = load_json(dir / "single_lyapunov.json");
  REQUIRE(!j.at("certificate").at("fitted_rate").is_null());
  const double single_rate = j.at("certificate").at("fitted_rate").get<double>();
  CHECK(sweep_rate == single_rate);

  CHECK(fs::exists(dir / "sw_lock_branch.csv"));
  const auto branch = data_lines(read_file(dir / "sw_lock_branch.csv"));
  REQUIRE(branch.size() >= 2);
  CHECK(branch[0] == "kappa,lambda,alpha_1,alpha_2,g,stable");
}

TEST_CASE("oracle command cross validates the pde against the ode") {
  const fs::path dir = fresh_dir("oracle");
  auto cfg = cfg_from(R"({
    "command": "oracle",
    "ensemble": {"omegas": [1.0, -1.0]},
    "kappa": 4.0,
    "oracle": {"potential": "free", "grid_points": 64, "half_width": 10.0,
               "dt_factor": 1.0, "t_final": 0.25, "snapshots": 2}
  })");
  cfg.output = (dir / "wave").string();
  CHECK(run_experiment(cfg) == kExitSuccess);
  const json j = load_json(dir / "wave_oracle.json");
  CHECK(j.at("n") == 2);
  CHECK(j.at("grid_points") == 64);
  CHECK(j.at("max_ode_deviation").get<double>() < 1e-6);
  // Midpoint coupling steps leak mass at O((kappa dt)^3) per step; at the
  // full step cap this lands near 1e-8 over the run.
  CHECK(j.at("mass_drift_max").get<double>() < 5e-8);

  const auto density = data_lines(read_file(dir / "wave_wave_density.csv"));
  REQUIRE(density.size() >= 2);
  CHECK(density[0] == "t,x,density_1,density_2");
  CHECK(density.size() == 1 + 2 * 64);
  CHECK(fs::exists(dir / "wave_wave_correlations.csv"));
}

TEST_SUITE_END();
