#include "sedlab/cli_runner.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "sedlab/energy_rates.hpp"
#include "sedlab/error.hpp"
#include "sedlab/kepler.hpp"
#include "sedlab/phase_space.hpp"
#include "sedlab/sed_simulator.hpp"
#include "sedlab/vacuum_field.hpp"

#ifndef SEDLAB_VERSION
#define SEDLAB_VERSION "dev"
#endif

namespace sedlab {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: EVP_Digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

double parse_real(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw DomainError(what + ": not a number: " + s);
  }
  if (used != s.size()) throw DomainError(what + ": not a number: " + s);
  return v;
}

long long parse_integer(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw DomainError(what + ": not an integer: " + s);
  }
  if (used != s.size()) throw DomainError(what + ": not an integer: " + s);
  return v;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  const auto c1 = spec.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : spec.find(':', c1 + 1);
  if (c2 == std::string::npos) throw DomainError("grid: expected lo:hi:n, got " + spec);
  const double lo = parse_real(spec.substr(0, c1), "grid");
  const double hi = parse_real(spec.substr(c1 + 1, c2 - c1 - 1), "grid");
  const long long n = parse_integer(spec.substr(c2 + 1), "grid");
  if (n < 1 || n > 10000000) throw DomainError("grid: point count out of range");
  if (n == 1) {
    if (lo != hi) throw DomainError("grid: a single point needs lo == hi");
    return {lo};
  }
  std::vector<double> g(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) g[i] = i == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return g;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

namespace {

enum class Kind { Real, Integer, Text, RealList, Switch };

struct ParamDef {
  const char* key;
  Kind kind;
  const char* help;
};

const std::map<std::string, std::vector<ParamDef>>& command_params() {
  static const std::map<std::string, std::vector<ParamDef>> defs = {
      {"rates",
       {{"kappa", Kind::RealList, "kappa values in [0, 1] (k = 1, d = 0)"},
        {"kappa_grid", Kind::Text, "kappa grid lo:hi:n"},
        {"k", Kind::Real, "orbit mode: energy scale k"},
        {"eps", Kind::Real, "orbit mode: eccentricity"},
        {"d", Kind::Real, "orbit mode: dipole strength"}}},
      {"gmu",
       {{"mu", Kind::RealList, "mu values"},
        {"mu_grid", Kind::Text, "mu grid lo:hi:n"},
        {"d", Kind::Real, "dipole strength for the per-period change"}}},
      {"simulate",
       {{"beta", Kind::Real, "coupling"},
        {"d", Kind::Real, "dipole strength"},
        {"tau_c", Kind::Real, "field cutoff time"},
        {"dt_base", Kind::Real, "step ceiling factor"},
        {"t_max", Kind::Real, "duration"},
        {"seed", Kind::Integer, "first seed"},
        {"seeds", Kind::Integer, "ensemble size"},
        {"k", Kind::Real, "initial orbit k"},
        {"eps", Kind::Real, "initial orbit eccentricity"},
        {"anomaly", Kind::Real, "initial eccentric anomaly"},
        {"ionisation_r", Kind::Real, "ionisation radius"},
        {"ionisation_window", Kind::Real, "time with E > 0 before ionisation counts"},
        {"sample_interval", Kind::Real, "trajectory sample spacing"},
        {"rel_tol", Kind::Real, "integrator relative tolerance"},
        {"abs_tol", Kind::Real, "integrator absolute tolerance"},
        {"points_per_tau", Kind::Integer, "field grid points per tau_c"},
        {"field", Kind::Switch, "include the vacuum field"},
        {"damping", Kind::Switch, "include radiation damping"},
        {"stop_on_ionisation", Kind::Switch, "stop at r > ionisation_r with E > 0"}}},
      {"field-check",
       {{"seeds", Kind::Integer, "number of realizations"},
        {"seed", Kind::Integer, "first seed"},
        {"tau_c", Kind::Real, "field cutoff time"},
        {"lags", Kind::RealList, "lags (default 0, tau_c, ..., 10 tau_c)"},
        {"duration_over_tau", Kind::Real, "window length per realization / tau_c"},
        {"points_per_tau", Kind::Integer, "grid points per tau_c"}}},
      {"phase",
       {{"d", Kind::Real, "dipole strength (d <= 1/4)"},
        {"r_max", Kind::Real, "radial grid end"},
        {"points", Kind::Integer, "radial grid points"},
        {"l_max", Kind::Real, "L grid end"},
        {"l_points", Kind::Integer, "L grid intervals"},
        {"e_points", Kind::Integer, "|E| grid points"},
        {"kappa_points", Kind::Integer, "kappa grid intervals"}}},
      {"fig1-overlay", {{"histogram", Kind::Text, "histogram CSV (L_lo,L_hi,weight) from simulate"}}},
  };
  return defs;
}

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (char& c : f)
    if (c == '_') c = '-';
  return "--" + f;
}

// Typed access to a merged parameter object.
struct Params {
  json j = json::object();

  bool has(const std::string& key) const { return j.contains(key); }

  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw DomainError(key + ": expected a number");
    return v.get<double>();
  }
  double real(const std::string& key) const {
    if (!has(key)) throw DomainError(key + ": required");
    return real(key, 0.0);
  }
  long long integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw DomainError(key + ": expected an integer");
    return v.get<long long>();
  }
  std::string text(const std::string& key) const {
    if (!has(key)) throw DomainError(key + ": required");
    const json& v = j.at(key);
    if (!v.is_string()) throw DomainError(key + ": expected a string");
    return v.get<std::string>();
  }
  std::vector<double> list(const std::string& key) const {
    const json& v = j.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw DomainError(key + ": expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw DomainError(key + ": expected a list of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw DomainError(key + ": expected true or false");
    return v.get<bool>();
  }
};

class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) {}

  void emit(const std::string& name, const std::string& content) {
    write_file_atomic((dir_ / name).string(), content);
    files_.push_back({{"path", name}, {"sha256", sha256_hex(content)}});
  }
  const fs::path& dir() const { return dir_; }
  json files() const { return files_; }

  json seeds = json::array();
  json inputs = json::array();
  json warnings = json::array();

 private:
  fs::path dir_;
  json files_ = json::array();
};

std::string join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  return s + '\n';
}

// ---- commands -------------------------------------------------------------

void cmd_rates(const Params& p, Output& out) {
  std::string csv;
  if (p.has("kappa") || p.has("kappa_grid")) {
    if (p.has("k") || p.has("eps") || p.has("d")) throw DomainError("rates: give either kappa values or k/eps/d");
    std::vector<double> ks;
    if (p.has("kappa")) ks = p.list("kappa");
    if (p.has("kappa_grid")) {
      const auto g = parse_grid(p.text("kappa_grid"));
      ks.insert(ks.end(), g.begin(), g.end());
    }
    csv = "kappa,f,gain,loss,total\n";
    for (double kappa : ks) {
      if (!(kappa >= 0.0 && kappa <= 1.0)) throw DomainError("rates: kappa must lie in [0, 1]");
      if (kappa == 0.0) {
        // Rates diverge at fixed k; only the limit of f is finite.
        csv += join({format_real(0.0), format_real(field_gain_f_limit().value), "", "", ""});
        continue;
      }
      const OrbitParams o = OrbitParams::from_energy(1.0, std::sqrt(1.0 - kappa * kappa));
      const double f = field_gain_f(kappa);
      const RateBreakdown r = total_rate_with_f(o, f);
      csv += join({format_real(kappa), format_real(f), format_real(r.gain_rate),
                   format_real(r.loss_rate), format_real(r.total_rate)});
    }
  } else {
    const OrbitParams o = OrbitParams::from_energy(p.real("k"), p.real("eps", 0.0), p.real("d", 0.0));
    const RateBreakdown r = total_rate(o);
    csv = "k,eps,d,kappa,gain,loss,total,delta_per_period\n";
    csv += join({format_real(o.k), format_real(o.eps), format_real(o.d), format_real(o.kappa), format_real(r.gain_rate),
                 format_real(r.loss_rate), format_real(r.total_rate), format_real(r.delta_per_period)});
  }
  out.emit("rates.csv", csv);
}

void cmd_gmu(const Params& p, Output& out) {
  std::vector<double> mus;
  if (p.has("mu")) mus = p.list("mu");
  if (p.has("mu_grid")) {
    const auto g = parse_grid(p.text("mu_grid"));
    mus.insert(mus.end(), g.begin(), g.end());
  }
  if (mus.empty()) throw DomainError("gmu: give --mu or --mu-grid");
  const bool with_d = p.has("d");
  const double d = p.real("d", 0.0);
  if (with_d && d == 0.0) throw DomainError("gmu: the per-period change needs d != 0");
  std::string csv = "mu,G,H,delta,delta_sign\n";
  for (double mu : mus) {
    if (!(mu >= 0.0)) throw DomainError("gmu: mu must be non-negative");
    const QuadResult g = G_of_mu_detailed(mu);
    const double H = H_from_G(mu, g.value);
    std::string delta, sign;
    // Rows where mu^2 = 1 + d kbar^2 has no real kbar are left blank.
    if (with_d && (mu * mu - 1.0) / d >= 0.0) {
      const double v = per_period_delta_factored(mu, d, H);
      delta = format_real(v);
      sign = std::to_string((v > 0.0) - (v < 0.0));
    }
    csv += join({format_real(mu), format_real(g.value), format_real(H), delta, sign});
  }
  out.emit("gmu.csv", csv);
}

SimConfig sim_config(const Params& p) {
  SimConfig c;
  c.beta = p.real("beta", c.beta);
  c.d = p.real("d", c.d);
  c.tau_c = p.real("tau_c", c.tau_c);
  c.dt_base = p.real("dt_base", c.dt_base);
  c.t_max = p.real("t_max", c.t_max);
  const long long seed = p.integer("seed", 1);
  if (seed < 0) throw DomainError("seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.initial = OrbitParams::from_energy(p.real("k", 1.0), p.real("eps", 0.0), c.d);
  c.initial_anomaly = p.real("anomaly", 0.0);
  c.ionisation_r = p.real("ionisation_r", c.ionisation_r);
  c.ionisation_window = p.real("ionisation_window", c.ionisation_window);
  c.sample_interval = p.real("sample_interval", c.sample_interval);
  c.rel_tol = p.real("rel_tol", c.rel_tol);
  c.abs_tol = p.real("abs_tol", c.abs_tol);
  c.points_per_tau = static_cast<int>(p.integer("points_per_tau", c.points_per_tau));
  c.field = p.flag("field", c.field);
  c.damping = p.flag("damping", c.damping);
  c.stop_on_ionisation = p.flag("stop_on_ionisation", c.stop_on_ionisation);
  return c;
}

std::string histogram_csv(const Histogram& h) {
  std::string csv = "L_lo,L_hi,weight\n";
  const double bw = h.bin_width();
  for (std::size_t n = 0; n < h.weight.size(); ++n)
    csv += join({format_real(h.lo + bw * static_cast<double>(n)), format_real(h.lo + bw * static_cast<double>(n + 1)),
                 format_real(h.weight[n])});
  return csv;
}

void cmd_simulate(const Params& p, Output& out) {
  const SimConfig c = sim_config(p);
  const std::string warning = validate(c);
  if (!warning.empty()) {
    out.warnings.push_back(warning);
    std::cerr << "sed_lab: warning=" << warning << '\n';
  }
  const long long n = p.integer("seeds", 1);
  if (n < 1 || n > 100000) throw DomainError("seeds must be in [1, 100000]");
  std::vector<std::uint64_t> seeds;
  for (long long i = 0; i < n; ++i) seeds.push_back(c.seed + static_cast<std::uint64_t>(i));
  const std::vector<TrajectoryRecord> records = integrate_ensemble(c, seeds);

  Histogram total = make_histogram();
  std::string summary = "seed,ionised_at,steps,rejected,underflow,samples,final_energy,final_L\n";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const TrajectoryRecord& r = records[i];
    const std::string tag = std::to_string(seeds[i]);
    out.seeds.push_back(seeds[i]);
    std::string traj = "t,x,y,z,vx,vy,vz,energy,L\n";
    for (const TrajectorySample& s : r.samples)
      traj += join({format_real(s.t), format_real(s.r[0]), format_real(s.r[1]), format_real(s.r[2]), format_real(s.v[0]),
                    format_real(s.v[1]), format_real(s.v[2]), format_real(s.energy), format_real(s.L)});
    out.emit("trajectory_seed" + tag + ".csv", traj);
    out.emit("histogram_seed" + tag + ".csv", histogram_csv(r.L_histogram));
    for (std::size_t b = 0; b < total.weight.size(); ++b) total.weight[b] += r.L_histogram.weight[b];
    const TrajectorySample& last = r.samples.back();
    summary += join({tag, r.ionised_at ? format_real(*r.ionised_at) : "", std::to_string(r.steps),
                     std::to_string(r.rejected), r.underflow ? "1" : "0", std::to_string(r.samples.size()),
                     format_real(last.energy), format_real(last.L)});
  }
  out.emit("summary.csv", summary);
  out.emit("histogram_total.csv", histogram_csv(total));
}

void cmd_field_check(const Params& p, Output& out) {
  const double tau = p.real("tau_c", 1.0);
  if (!(tau > 0.0)) throw DomainError("tau_c must be positive");
  const long long n = p.integer("seeds", 1000);
  const long long first = p.integer("seed", 1);
  if (n < 100 || n > 10000000) throw DomainError("seeds must be in [100, 1e7]");
  if (first < 0) throw DomainError("seed must be non-negative");
  std::vector<double> lags;
  if (p.has("lags"))
    lags = p.list("lags");
  else
    for (int i = 0; i <= 10; ++i) lags.push_back(i * tau);
  FieldCheckOptions opts;
  opts.duration_over_tau = p.real("duration_over_tau", opts.duration_over_tau);
  opts.points_per_tau = static_cast<int>(p.integer("points_per_tau", opts.points_per_tau));
  std::vector<std::uint64_t> seeds;
  for (long long i = 0; i < n; ++i) seeds.push_back(static_cast<std::uint64_t>(first + i));
  out.seeds = {first, first + n - 1};

  const auto est = autocorrelation_estimate(seeds, lags, tau, opts);
  std::string csv = "lag,estimate,stderr,exact,z\n";
  for (const LagEstimate& e : est)
    csv += join({format_real(e.lag), format_real(e.mean), format_real(e.stderr_), format_real(e.exact),
                 format_real((e.mean - e.exact) / e.stderr_)});
  out.emit("field_check.csv", csv);

  const ComponentStatistics st = component_statistics(seeds, tau, opts);
  static const char* names[3] = {"x", "y", "z"};
  static const char* pairs[3] = {"xy", "yz", "zx"};
  std::string comp = "component,mean,mean_stderr,pair,cross,cross_stderr\n";
  for (int c = 0; c < 3; ++c)
    comp += join({names[c], format_real(st.mean[c]), format_real(st.mean_stderr[c]), pairs[c], format_real(st.cross[c]),
                  format_real(st.cross_stderr[c])});
  out.emit("components.csv", comp);
}

void cmd_phase(const Params& p, Output& out) {
  const GroundStateParams gs = GroundStateParams::from_d(p.real("d", 0.0));
  const double r_max = p.real("r_max", 10.0);
  const long long points = p.integer("points", 200);
  if (!(r_max > 0.0) || points < 1) throw DomainError("phase: need r_max > 0 and points >= 1");
  std::string psi = "r,psi0_sq,momentum_marginal\n";
  for (long long i = 1; i <= points; ++i) {
    const double r = r_max * static_cast<double>(i) / static_cast<double>(points);
    const double s = psi0(r, gs);
    psi += join({format_real(r), format_real(s * s), format_real(momentum_marginal(r, gs))});
  }
  out.emit("psi0.csv", psi);

  const long long ne = p.integer("e_points", 60), nk = p.integer("kappa_points", 20);
  if (ne < 1 || nk < 1) throw DomainError("phase: grid sizes must be positive");
  std::string pek = "E,kappa,density\n";
  for (long long i = 1; i <= ne; ++i) {
    const double E = -3.0 * static_cast<double>(i) / static_cast<double>(ne);
    for (long long j = 0; j <= nk; ++j) {
      const double kappa = static_cast<double>(j) / static_cast<double>(nk);
      pek += join({format_real(E), format_real(kappa), format_real(dist_E_kappa(E, kappa, gs))});
    }
  }
  out.emit("p_E_kappa.csv", pek);

  if (gs.d == 0.0) {
    const double l_max = p.real("l_max", 3.0);
    const long long nl = p.integer("l_points", 300);
    if (!(l_max > 0.0) || nl < 1) throw DomainError("phase: need l_max > 0 and l_points >= 1");
    std::vector<double> grid;
    for (long long i = 0; i <= nl; ++i) grid.push_back(l_max * static_cast<double>(i) / static_cast<double>(nl));
    const auto curve = conjecture_L_curve(grid, gs);
    // weight: probability of the cell ending at L, so the column sums to cdf(l_max).
    std::string lc = "L,density,cdf,weight\n";
    double prev = 0.0;
    for (const auto& [L, dens] : curve) {
      const double cdf = conjecture_L_cdf(L);
      lc += join({format_real(L), format_real(dens), format_real(cdf), format_real(cdf - prev)});
      prev = cdf;
    }
    out.emit("l_curve.csv", lc);
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

void cmd_fig1_overlay(const Params& p, Output& out) {
  const std::string path = p.text("histogram");
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DomainError("fig1-overlay: cannot read " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string content = buf.str();
  out.inputs.push_back({{"path", path}, {"sha256", sha256_hex(content)}});

  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"L_lo", "L_hi", "weight"})
    throw DomainError("fig1-overlay: expected header L_lo,L_hi,weight");
  std::vector<std::array<double, 3>> rows;
  double total = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 3) throw DomainError("fig1-overlay: malformed row: " + line);
    const std::array<double, 3> r{parse_real(c[0], "L_lo"), parse_real(c[1], "L_hi"), parse_real(c[2], "weight")};
    if (!(r[1] > r[0]) || r[0] < 0.0) throw DomainError("fig1-overlay: bad bin: " + line);
    rows.push_back(r);
    total += r[2];
  }
  if (rows.empty()) throw DomainError("fig1-overlay: histogram has no bins");
  // The conjecture is rescaled to the histogram's total weight.
  std::string csv = "L_lo,L_hi,weight,conjecture\n";
  for (const auto& r : rows)
    csv += join({format_real(r[0]), format_real(r[1]), format_real(r[2]),
                 format_real(total * (conjecture_L_cdf(r[1]) - conjecture_L_cdf(r[0])))});
  out.emit("overlay.csv", csv);
}

using Command = void (*)(const Params&, Output&);

Command command_fn(const std::string& name) {
  if (name == "rates") return cmd_rates;
  if (name == "gmu") return cmd_gmu;
  if (name == "simulate") return cmd_simulate;
  if (name == "field-check") return cmd_field_check;
  if (name == "phase") return cmd_phase;
  if (name == "fig1-overlay") return cmd_fig1_overlay;
  throw DomainError("unknown command: " + name);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json read_json_file(const std::string& path, const std::string& what) {
  std::ifstream f(path);
  if (!f) throw DomainError(what + ": cannot read " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw DomainError(what + ": invalid JSON in " + path);
  }
}

// Config keys must belong to the command; values keep their JSON types.
json checked_config(const json& cfg, const std::string& command) {
  if (!cfg.is_object()) throw DomainError("config: expected a JSON object");
  const auto& defs = command_params().at(command);
  for (const auto& [key, value] : cfg.items()) {
    bool known = false;
    for (const auto& d : defs) known = known || key == d.key;
    if (!known) throw DomainError("config: unknown key for " + command + ": " + key);
  }
  return cfg;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

int fail(const std::string& kind, const std::string& reason, int code) {
  std::cerr << "sed_lab: error=" << kind << " reason=" << one_line(reason) << '\n';
  return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"sed_lab: stability analysis and simulation for the SED hydrogen problem"};
  app.set_version_flag("--version", SEDLAB_VERSION);
  std::string out_dir = "out";
  std::string config_path, manifest_path;
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--config", config_path, "JSON parameter file; flags override it");
  app.add_option("--from-manifest", manifest_path, "re-run the command recorded in a manifest.json");
  app.require_subcommand(0, 1);

  struct Raw {
    std::map<std::string, std::string> text;
    std::map<std::string, std::vector<std::string>> list;
    std::map<std::string, bool> flag;
  };
  std::map<std::string, Raw> raw;
  std::map<std::string, CLI::App*> subs;
  std::map<std::string, std::map<std::string, CLI::Option*>> opts;
  for (const auto& [name, defs] : command_params()) {
    static const std::map<std::string, std::string> about = {
        {"rates", "gain, loss and total energy rates vs kappa or for one orbit"},
        {"gmu", "eccentric-limit G(mu), H(mu) and the per-period energy change"},
        {"simulate", "stochastic trajectories and dwell-time L histograms"},
        {"field-check", "ensemble check of the sampled field correlator"},
        {"phase", "ground state, conserved-quantity density and conjectured L curve"},
        {"fig1-overlay", "conjectured L distribution binned onto a simulated histogram"}};
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->fallthrough();
    subs[name] = sub;
    Raw& r = raw[name];
    for (const auto& d : defs) {
      const std::string flag = flag_name(d.key);
      CLI::Option* o = nullptr;
      switch (d.kind) {
        case Kind::Real:
        case Kind::Integer:
        case Kind::Text:
          o = sub->add_option(flag, r.text[d.key], d.help);
          break;
        case Kind::RealList:
          o = sub->add_option(flag, r.list[d.key], d.help)->delimiter(',');
          break;
        case Kind::Switch:
          r.flag[d.key] = true;
          o = sub->add_flag(flag + ",!--no-" + flag.substr(2), r.flag[d.key], d.help);
          break;
      }
      opts[name][d.key] = o;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << SEDLAB_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  std::string command;
  Params params;
  const std::string started = utc_now();
  try {
    std::string chosen;
    for (const auto& [name, sub] : subs)
      if (sub->parsed()) chosen = name;
    if (!manifest_path.empty()) {
      if (!chosen.empty() || !config_path.empty())
        return fail("usage", "--from-manifest takes no subcommand or --config", 2);
      const json m = read_json_file(manifest_path, "manifest");
      if (!m.contains("command") || !m["command"].is_string() || !m.contains("parameters"))
        throw DomainError("manifest: missing command or parameters");
      command = m["command"].get<std::string>();
      if (!command_params().count(command)) throw DomainError("manifest: unknown command " + command);
      params.j = checked_config(m["parameters"], command);
    } else {
      if (chosen.empty()) return fail("usage", "a subcommand is required (--help lists them)", 2);
      command = chosen;
      if (!config_path.empty()) params.j = checked_config(read_json_file(config_path, "config"), command);
      Raw& r = raw[command];
      for (const auto& d : command_params().at(command)) {
        if (opts[command][d.key]->count() == 0) continue;
        switch (d.kind) {
          case Kind::Real:
            params.j[d.key] = parse_real(r.text[d.key], d.key);
            break;
          case Kind::Integer:
            params.j[d.key] = parse_integer(r.text[d.key], d.key);
            break;
          case Kind::Text:
            params.j[d.key] = r.text[d.key];
            break;
          case Kind::RealList: {
            json a = json::array();
            for (const auto& s : r.list[d.key]) a.push_back(parse_real(s, d.key));
            params.j[d.key] = a;
            break;
          }
          case Kind::Switch:
            params.j[d.key] = r.flag[d.key];
            break;
        }
      }
    }

    fs::create_directories(out_dir);
    Output out{fs::path(out_dir)};
    command_fn(command)(params, out);

    json manifest = {{"command", command},
                     {"parameters", params.j},
                     {"seeds", out.seeds},
                     {"code_version", SEDLAB_VERSION},
                     {"started", started},
                     {"finished", utc_now()},
                     {"outputs", out.files()}};
    if (!out.inputs.empty()) manifest["inputs"] = out.inputs;
    if (!out.warnings.empty()) manifest["warnings"] = out.warnings;
    write_file_atomic((out.dir() / "manifest.json").string(), manifest.dump(2) + "\n");
  } catch (const DomainError& e) {
    return fail("domain", e.what(), 2);
  } catch (const ConvergenceError& e) {
    return fail("convergence", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}

}  // namespace sedlab
