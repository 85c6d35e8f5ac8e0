#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dhym/field.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(DHYM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("solve: manufactured degree-2 config exits clean with artifacts") {
  fs::path dir = fs::temp_directory_path() / "dhym_cli_n2";
  fs::remove_all(dir);
  fs::path cfg = dir;
  fs::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "mode = solve\nn = 2\ntheta = 1.5707963267948966\n"
                                 << "Theta = 2.356194490192345\ngrid = 32 32\nactive = x1 y1\n"
                                 << "chi0 = 1 0 0 1\nH0 = 1.8 0 0 1.8\n"
                                 << "twist = manufactured trig amp=0.25\n"
                                 << "out_dir = " << (dir / "out").string() << "\n";
  CHECK(run_cli("solve " + (dir / "run.cfg").string()) == 0);
  CHECK(fs::exists(dir / "out" / "path_log.csv"));
  CHECK(fs::exists(dir / "out" / "phi_final.csv"));
  CHECK(fs::exists(dir / "out" / "phase_field.csv"));
  CHECK(fs::exists(dir / "out" / "error_table.csv"));
  // path log is well formed and ends at t = 1
  auto log = slurp(dir / "out" / "path_log.csv");
  CHECK(log.rfind("t,d_t,residual,cone_margin,newton_iters", 0) == 0);
  CHECK(log.find("\n1,") != std::string::npos);
}

TEST_CASE("solve: a twist below the solvable bound is rejected before solving") {
  fs::path dir = fs::temp_directory_path() / "dhym_cli_reject";
  fs::remove_all(dir);
  fs::create_directories(dir);
  // constant -50 twist field, far below -csc^2(theta)
  dhym::torus::PeriodicField f = dhym::torus::PeriodicField::zeros({16, 16});
  for (double& v : f.v) v = -50.0;
  dhym::torus::ActiveCoords ac;
  ac.coords.push_back(dhym::torus::parse_real_coord("x1"));
  ac.coords.push_back(dhym::torus::parse_real_coord("y1"));
  write_field_csv(f, ac, (dir / "twist.csv").string());
  std::ofstream(dir / "run.cfg") << "mode = solve\nn = 2\ntheta = 1.5707963267948966\n"
                                 << "grid = 16 16\nactive = x1 y1\nchi0 = 1 0 0 1\n"
                                 << "H0 = 1.8 0 0 1.8\n"
                                 << "twist = csv " << (dir / "twist.csv").string() << "\n"
                                 << "out_dir = " << (dir / "out").string() << "\n";
  CHECK(run_cli("solve " + (dir / "run.cfg").string()) == 2);
  CHECK(!fs::exists(dir / "out" / "phi_final.csv"));
}

TEST_CASE("solve: missing config file is a usage error") {
  CHECK(run_cli("solve /nonexistent/xyz.cfg") == 2);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("verify: single suite exits clean and writes one row per suite") {
  fs::path dir = fs::temp_directory_path() / "dhym_cli_verify";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "v.cfg") << "mode = verify\ntrials = 2000\nseed = 42\n"
                               << "out = " << (dir / "report.csv").string() << "\n";
  CHECK(run_cli("verify " + (dir / "v.cfg").string() + " --suite sinelem") == 0);
  auto rep = slurp(dir / "report.csv");
  CHECK(rep.rfind("suite,trials,violations,worst_margin,seed", 0) == 0);
  CHECK(rep.find("sinelem,") != std::string::npos);

  // several suites merge into one report
  CHECK(run_cli("verify " + (dir / "v.cfg").string() +
                " --suite sinelem --suite kernel --suite regmax") == 0);
  auto rep2 = slurp(dir / "report.csv");
  CHECK(rep2.find("sinelem,") != std::string::npos);
  CHECK(rep2.find("kernel,") != std::string::npos);
  CHECK(rep2.find("regmax,") != std::string::npos);
}

TEST_CASE("verify: unknown suite names are usage errors") {
  fs::path dir = fs::temp_directory_path() / "dhym_cli_unknown";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "v.cfg") << "mode = verify\ntrials = 100\n";
  CHECK(run_cli("verify " + (dir / "v.cfg").string() + " --suite nosuchsuite") == 2);
}

TEST_CASE("verify: negated predicates trip the harness") {
  fs::path dir = fs::temp_directory_path() / "dhym_cli_negate";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "v.cfg") << "mode = verify\ntrials = 1000\nseed = 7\n"
                               << "out = " << (dir / "report.csv").string() << "\n";
  CHECK(run_cli("verify " + (dir / "v.cfg").string() + " --suite sinelem --self-test-negate") ==
        1);
}

TEST_CASE("verify: deterministic outputs for a fixed config and seed") {
  fs::path dir = fs::temp_directory_path() / "dhym_cli_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "v.cfg") << "mode = verify\ntrials = 1500\nseed = 99\n"
                               << "out = " << (dir / "report.csv").string() << "\n";
  REQUIRE(run_cli("verify " + (dir / "v.cfg").string() + " --suite discpos") == 0);
  auto first = slurp(dir / "report.csv");
  REQUIRE(run_cli("verify " + (dir / "v.cfg").string() + " --suite discpos") == 0);
  CHECK(first == slurp(dir / "report.csv"));
}

TEST_CASE("report: converts artifacts and rejects empty directories") {
  fs::path dir = fs::temp_directory_path() / "dhym_cli_report";
  fs::remove_all(dir);
  fs::create_directories(dir / "out");
  std::ofstream(dir / "run.cfg") << "mode = solve\nn = 1\ntheta = 1.1\ngrid = 32 32\n"
                                 << "active = x1 y1\nchi0 = 1\nH0 = 0.7\n"
                                 << "twist = manufactured trig amp=0.4\n"
                                 << "out_dir = " << (dir / "out").string() << "\n";
  REQUIRE(run_cli("solve " + (dir / "run.cfg").string()) == 0);
  std::ofstream(dir / "v.cfg") << "mode = verify\ntrials = 500\nseed = 3\n"
                               << "out = " << (dir / "out" / "report.csv").string() << "\n";
  REQUIRE(run_cli("verify " + (dir / "v.cfg").string() + " --suite discpos") == 0);
  CHECK(run_cli("report " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "residual_vs_t.dat"));
  CHECK(fs::exists(dir / "out" / "cone_margin_vs_t.dat"));
  CHECK(fs::exists(dir / "out" / "inf_g_vs_theta.dat"));
  // the g curve is strictly positive
  std::ifstream gin(dir / "out" / "inf_g_vs_theta.dat");
  double theta, g;
  int rows = 0;
  while (gin >> theta >> g) {
    CHECK(g > 0.0);
    ++rows;
  }
  CHECK(rows >= 10);
  // residual envelope data is parseable and ends at t = 1
  std::ifstream rin(dir / "out" / "residual_vs_t.dat");
  double t = -1, r = -1, last_t = -1;
  while (rin >> t >> r) last_t = t;
  CHECK(last_t == 1.0);

  fs::path empty = fs::temp_directory_path() / "dhym_cli_empty";
  fs::remove_all(empty);
  fs::create_directories(empty);
  CHECK(run_cli("report " + empty.string()) == 2);
}
