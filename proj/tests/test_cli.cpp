#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "sedlab/cli_runner.hpp"
#include "sedlab/error.hpp"

using namespace sedlab;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch_root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / ("sedlab_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string dir(const std::string& name) { return (scratch_root() / name).string(); }

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "sed_lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

json manifest(const std::string& out) { return json::parse(slurp(fs::path(out) / "manifest.json")); }

// Exit status and stderr of the installed executable.
std::pair<int, std::string> run_exe(const std::string& args) {
  const std::string cmd = std::string(SED_LAB_EXE) + " " + args + " 2>&1 >/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string err;
  char buf[512];
  while (fgets(buf, sizeof buf, p)) err += buf;
  const int status = pclose(p);
  return {WEXITSTATUS(status), err};
}

}  // namespace

TEST_CASE("helpers") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_real(-INFINITY) == "-inf");
  const auto g = parse_grid("0:1:11");
  REQUIRE(g.size() == 11);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(g[3] == doctest::Approx(0.3));
  CHECK_THROWS_AS(parse_grid("0:1"), DomainError);
  CHECK_THROWS_AS(parse_grid("0:1:x"), DomainError);
  const std::string p = dir("atomic.txt");
  write_file_atomic(p, "one\n");
  write_file_atomic(p, "two\n");
  CHECK(slurp(p) == "two\n");
}

TEST_CASE("rates") {
  const std::string out = dir("rates1");
  REQUIRE(run({"--out", out, "rates", "--kappa", "1.0"}) == 0);
  auto rows = read_csv(fs::path(out) / "rates.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"kappa", "f", "gain", "loss", "total"});
  CHECK(std::stod(rows[1][1]) == doctest::Approx(0.5).epsilon(1e-3));

  const std::string out2 = dir("rates2");
  REQUIRE(run({"--out", out2, "rates", "--kappa-grid", "0:1:11"}) == 0);
  rows = read_csv(fs::path(out2) / "rates.csv");
  REQUIRE(rows.size() == 12);
  for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::stod(rows[i][0]) > std::stod(rows[i - 1][0]));
  CHECK(std::stod(rows[1][1]) == doctest::Approx(0.588084).epsilon(1e-5));
  CHECK(rows[1][2].empty());

  const std::string out3 = dir("rates3");
  REQUIRE(run({"--out", out3, "rates", "--eps", "0", "--k", "2", "--d", "0"}) == 0);
  rows = read_csv(fs::path(out3) / "rates.csv");
  CHECK(std::fabs(std::stod(rows[1][6])) < 1e-5);

  CHECK(run({"--out", dir("rates4"), "rates", "--kappa", "1.5"}) == 2);
  CHECK(run({"--out", dir("rates5"), "rates", "--kappa", "abc"}) == 2);
}

TEST_CASE("gmu") {
  const std::string out = dir("gmu");
  REQUIRE(run({"--out", out, "gmu", "--mu", "1,0,10", "--d", "-1"}) == 0);
  const auto rows = read_csv(fs::path(out) / "gmu.csv");
  REQUIRE(rows.size() == 4);
  CHECK(std::fabs(std::stod(rows[1][2])) < 1e-6);
  CHECK(std::stod(rows[2][2]) == doctest::Approx(5.99).epsilon(0.05 / 5.99));
  CHECK(rows[2][4] == "1");
  CHECK(std::stod(rows[3][2]) == doctest::Approx(0.4975).epsilon(1e-4));
  CHECK(rows[3][3].empty());  // mu = 10 needs d > 0
}

TEST_CASE("phase") {
  const std::string out = dir("phase");
  REQUIRE(run({"--out", out, "phase", "--d", "0"}) == 0);
  for (const auto& r : read_csv(fs::path(out) / "psi0.csv")) {
    if (r[0] == "r") continue;
    const double x = std::stod(r[0]);
    CHECK(std::stod(r[1]) == doctest::Approx(std::exp(-2 * x) / std::acos(-1.0)).epsilon(1e-13));
    CHECK(std::stod(r[2]) == doctest::Approx(std::stod(r[1])).epsilon(1e-12));
  }
  double total = 0.0;
  for (const auto& r : read_csv(fs::path(out) / "l_curve.csv"))
    if (r[0] != "L") total += std::stod(r[3]);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

  const auto [code, err] = run_exe("--out " + dir("phase3") + " phase --d 0.3");
  CHECK(code == 2);
  CHECK(err.rfind("sed_lab: error=domain reason=", 0) == 0);
  CHECK(std::count(err.begin(), err.end(), '\n') == 1);
  CHECK_FALSE(fs::exists(fs::path(dir("phase3")) / "manifest.json"));

  const std::string outm = dir("phase_m");
  REQUIRE(run({"--out", outm, "phase", "--d", "-1"}) == 0);
  CHECK_FALSE(fs::exists(fs::path(outm) / "l_curve.csv"));
}

TEST_CASE("field-check") {
  const std::string out = dir("field");
  REQUIRE(run({"--out", out, "field-check", "--seeds", "1000", "--tau-c", "1"}) == 0);
  const auto rows = read_csv(fs::path(out) / "field_check.csv");
  REQUIRE(rows.size() == 12);
  CHECK(std::stod(rows[1][0]) == 0.0);
  CHECK(std::stod(rows[1][3]) == doctest::Approx(6.0 / std::acos(-1.0)).epsilon(1e-15));
  double chi2 = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][2]) > 0.0);
    chi2 += std::pow(std::stod(rows[i][4]), 2);
  }
  // 11 unit-variance z scores; the upper bound is the 99.9% point of chi-square(11).
  CHECK(chi2 < 31.3);
  CHECK(run({"--out", dir("field2"), "field-check", "--seeds", "10"}) == 2);
}

TEST_CASE("simulate: determinism, conservation and ensemble fan-out") {
  const std::vector<std::string> base = {"simulate", "--t-max", "3", "--beta", "0.05", "--tau-c", "0.1"};
  auto with = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> a = {"--out", out};
    a.insert(a.end(), base.begin(), base.end());
    a.insert(a.end(), extra.begin(), extra.end());
    return run(a);
  };
  REQUIRE(with(dir("simA"), {"--seed", "5"}) == 0);
  REQUIRE(with(dir("simB"), {"--seed", "5"}) == 0);
  CHECK(manifest(dir("simA"))["outputs"] == manifest(dir("simB"))["outputs"]);

  REQUIRE(with(dir("simE"), {"--seed", "5", "--seeds", "3"}) == 0);
  std::set<std::string> ensemble, single;
  const json me = manifest(dir("simE"));
  for (const auto& o : me["outputs"]) {
    const std::string p = o["path"];
    if (p.rfind("trajectory_seed", 0) == 0 || p.rfind("histogram_seed", 0) == 0) ensemble.insert(o["sha256"]);
  }
  for (int s : {5, 6, 7}) {
    const std::string out = dir("simS" + std::to_string(s));
    REQUIRE(with(out, {"--seed", std::to_string(s)}) == 0);
    const json ms = manifest(out);
    for (const auto& o : ms["outputs"]) {
      const std::string p = o["path"];
      if (p.rfind("trajectory_seed", 0) == 0 || p.rfind("histogram_seed", 0) == 0) single.insert(o["sha256"]);
    }
  }
  CHECK(ensemble.size() == 6);
  CHECK(ensemble == single);
  CHECK(manifest(dir("simE"))["seeds"] == json::array({5, 6, 7}));

  const std::string c = dir("simC");
  REQUIRE(run({"--out", c, "simulate", "--beta", "0", "--t-max", "60", "--eps", "0.5", "--rel-tol", "1e-12", "--abs-tol",
               "1e-14"}) == 0);
  const auto rows = read_csv(fs::path(c) / "trajectory_seed1.csv");
  CHECK(rows[0] == std::vector<std::string>{"t", "x", "y", "z", "vx", "vy", "vz", "energy", "L"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][7]) == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(std::stod(rows[i][8]) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-9));
  }
}

TEST_CASE("manifest lists every output and reproduces it") {
  const std::string out = dir("man1");
  REQUIRE(run({"--out", out, "simulate", "--t-max", "2", "--seed", "3", "--seeds", "2", "--no-damping"}) == 0);
  const json m = manifest(out);
  CHECK(m["command"] == "simulate");
  CHECK(m["parameters"]["damping"] == false);
  CHECK(m["code_version"].is_string());
  CHECK(m["started"].get<std::string>().size() == 20);
  std::set<std::string> listed;
  for (const auto& o : m["outputs"]) {
    listed.insert(o["path"]);
    CHECK(sha256_hex(slurp(fs::path(out) / o["path"].get<std::string>())) == o["sha256"]);
  }
  std::set<std::string> present;
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().filename() != "manifest.json") present.insert(e.path().filename().string());
  CHECK(listed == present);

  const std::string again = dir("man2");
  REQUIRE(run({"--out", again, "--from-manifest", (fs::path(out) / "manifest.json").string()}) == 0);
  CHECK(manifest(again)["outputs"] == m["outputs"]);
  CHECK(manifest(again)["parameters"] == m["parameters"]);
  for (const auto& o : m["outputs"]) {
    const std::string p = o["path"];
    CHECK(slurp(fs::path(out) / p) == slurp(fs::path(again) / p));
  }
  CHECK(run({"--out", dir("man3"), "--from-manifest", (fs::path(out) / "manifest.json").string(), "rates"}) == 2);
}

TEST_CASE("config file with flag overrides") {
  const std::string cfg = dir("cfg.json");
  write_file_atomic(cfg, R"({"mu": [0.5, 2.0], "d": 3.0})");
  const std::string out = dir("cfg_out");
  REQUIRE(run({"--out", out, "--config", cfg, "gmu", "--d", "1.5"}) == 0);
  const json m = manifest(out);
  CHECK(m["parameters"]["d"] == 1.5);
  CHECK(m["parameters"]["mu"] == json::array({0.5, 2.0}));

  write_file_atomic(cfg, R"({"mu": [0.5], "colour": 1})");
  CHECK(run({"--out", dir("cfg_bad"), "--config", cfg, "gmu"}) == 2);
  write_file_atomic(cfg, "{not json");
  CHECK(run({"--out", dir("cfg_bad"), "--config", cfg, "gmu"}) == 2);
}

TEST_CASE("fig1-overlay rescales the conjecture to the histogram") {
  const std::string h = dir("hist.csv");
  write_file_atomic(h, "L_lo,L_hi,weight\n0,0.5,1\n0.5,1,3\n1,1.5,4\n");
  const std::string out = dir("overlay");
  REQUIRE(run({"--out", out, "fig1-overlay", "--histogram", h}) == 0);
  const auto rows = read_csv(fs::path(out) / "overlay.csv");
  REQUIRE(rows.size() == 4);
  double s = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) s += std::stod(rows[i][3]);
  CHECK(s > 0.0);
  CHECK(s < 8.0);
  CHECK(manifest(out)["inputs"][0]["sha256"] == sha256_hex(slurp(h)));
  write_file_atomic(h, "a,b\n1,2\n");
  CHECK(run({"--out", dir("overlay2"), "fig1-overlay", "--histogram", h}) == 2);
}

TEST_CASE("usage errors and help") {
  CHECK(run({"--out", dir("u1")}) == 2);
  CHECK(run({"rates", "--no-such-flag", "1"}) == 2);
  CHECK(run({"--help"}) == 0);
  const auto [code, err] = run_exe("gmu --mu");
  CHECK(code == 2);
  CHECK(err.rfind("sed_lab: error=usage reason=", 0) == 0);
}
