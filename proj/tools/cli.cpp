#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "anderson/error.hpp"
#include "anderson/stats.hpp"

#ifndef ANDERSON_VERSION
#define ANDERSON_VERSION "unknown"
#endif

namespace anderson::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Identifier-like tokens of a message, used to point validation errors at lines.
std::set<std::string> tokens(const std::string& msg) {
  std::set<std::string> out;
  std::string cur;
  for (char c : msg + " ") {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
      cur += c;
    } else if (!cur.empty()) {
      out.insert(cur);
      cur.clear();
    }
  }
  return out;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof(out), "%s.%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << header << '\n';
  }
  Csv& operator<<(double v) { return cell(csv_number(v)); }
  Csv& operator<<(int v) { return cell(std::to_string(v)); }
  Csv& operator<<(std::uint64_t v) { return cell(std::to_string(v)); }
  Csv& operator<<(bool v) { return cell(v ? "1" : "0"); }
  Csv& operator<<(const std::string& v) { return cell(v); }
  void end() {
    out_ << '\n';
    first_ = true;
  }

 private:
  Csv& cell(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  std::ofstream out_;
  bool first_ = true;
};

struct Run {
  std::string name;
  ExperimentConfig cfg;
  fs::path dir;
  bool dump = false;
  std::vector<std::string> files;
  std::vector<std::pair<std::string, double>> summary;
  std::ostream& out;

  fs::path file(const std::string& leaf) {
    files.push_back(leaf);
    return dir / leaf;
  }
};

void write_rows(Run& run, const std::vector<StudyRow>& rows) {
  Csv csv(run.file(run.name + ".csv"), "L,eps,beta,seed,n,lambda,wall_ms");
  for (const auto& r : rows) {
    csv << r.L << r.eps << r.beta << r.seed << r.n << r.lambda << r.wall_ms;
    csv.end();
  }
}

void write_summary(Run& run) {
  Csv csv(run.file(run.name + "_summary.csv"), "key,value");
  for (const auto& [k, v] : run.summary) {
    csv << k << v;
    csv.end();
  }
}

void write_field(const fs::path& path, const SpectralField& f) {
  std::ofstream out(path, std::ios::binary);
  const char magic[8] = {'A', 'N', 'D', 'F', 'L', 'D', '0', '1'};
  out.write(magic, sizeof(magic));
  auto put = [&](auto v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put(static_cast<std::int32_t>(f.parity()[0] == Parity::Odd));
  put(static_cast<std::int32_t>(f.parity()[1] == Parity::Odd));
  put(f.box().origin()[0]);
  put(f.box().origin()[1]);
  put(f.box().side(0));
  put(f.box().side(1));
  put(static_cast<std::int32_t>(f.truncation()[0]));
  put(static_cast<std::int32_t>(f.truncation()[1]));
  const auto d = f.coeffs();
  out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void take_study(Run& run, const StudyRecord& rec) {
  write_rows(run, rec.rows);
  run.summary = rec.summary;
  write_summary(run);
}

NoiseDraw draw_for(const ExperimentConfig& c, const BoxDomain& box) {
  return sample(box, mollifier_truncation(box, c.eps, c.profile), c.seed);
}

void cmd_sample(Run& run) {
  const auto& c = run.cfg;
  const BoxDomain box = BoxDomain::square(c.L);
  const NoiseDraw d = draw_for(c, box);
  const SpectralField xi = mollify(d, c.eps, c.profile);
  Csv csv(run.file("sample.csv"), "k1,k2,z,xi_eps");
  for (int k1 = 0; k1 <= d.n[0]; ++k1)
    for (int k2 = 0; k2 <= d.n[1]; ++k2) {
      csv << k1 << k2 << d.at(k1, k2) << xi.at(k1, k2);
      csv.end();
    }
  if (run.dump) {
    std::ofstream bin(run.file("sample.bin"), std::ios::binary);
    write_draw(bin, d, c.profile);
  }
  run.summary = {{"modes", static_cast<double>(d.z.size())}, {"l2_norm", xi.norm()}};
}

void cmd_spectrum(Run& run) {
  const auto& c = run.cfg;
  const BoxDomain box = BoxDomain::square(c.L);
  const NoiseDraw d = draw_for(c, box);
  const auto t0 = std::chrono::steady_clock::now();
  const GalerkinOperator op(noise_potential(d, c.eps, c.profile, c.beta, c.renorm),
                            truncation_for(box, c.modes_per_unit));
  const EigenResult e = eigenvalues(op, c.levels, c.solver);
  const double ms =
      c.record_timing ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()
                      : 0.0;
  std::vector<StudyRow> rows;
  for (int k = 0; k < c.levels; ++k) rows.push_back({c.L, c.eps, c.beta, c.seed, k + 1, e.values[k], ms});
  write_rows(run, rows);
  if (run.dump) {
    std::ofstream bin(run.file("spectrum.bin"), std::ios::binary);
    write_draw(bin, d, c.profile);
  }
  run.summary = {{"dimension", static_cast<double>(op.dimension())}, {"lambda_1", e.values[0]}};
}

void cmd_renorm(Run& run) {
  const auto& c = run.cfg;
  const BoxDomain box = BoxDomain::square(c.L);
  Csv csv(run.file("renorm.csv"), "L,eps,c,log_inv_eps,slope");
  std::vector<double> x, y;
  for (double eps : c.eps_ladder) {
    const double v = renorm_constant(box, eps, c.profile);
    const double lx = std::log(1.0 / eps);
    csv << c.L << eps << v << lx;
    if (x.empty()) csv << std::string();
    else csv << (v - y.back()) / (lx - x.back());
    csv.end();
    x.push_back(lx);
    y.push_back(v);
  }
  if (x.size() >= 2) {
    const double slope = linear_fit(x, y).slope;
    run.summary = {{"slope", slope}, {"slope_ratio", slope * 2 * std::numbers::pi}};
  }
}

void cmd_chi(Run& run) {
  const auto& c = run.cfg;
  std::vector<ChiLevel> done;
  auto flush = [&] {
    Csv csv(run.file("chi.csv"), "L,chi,lambda,iterations");
    Csv trace(run.file("chi_trace.csv"), "L,iteration,lambda");
    for (const auto& lv : done) {
      csv << lv.L << lv.value << lv.trace.back() << static_cast<int>(lv.trace.size());
      csv.end();
      for (std::size_t i = 0; i < lv.trace.size(); ++i) {
        trace << lv.L << static_cast<int>(i) << lv.trace[i];
        trace.end();
      }
    }
  };
  try {
    for (double L : c.chi_ladder)
      done.push_back(chi_at(L, truncation_for(BoxDomain::square(L), c.chi_modes_per_unit), c.chi_iterations,
                            c.chi_tol, 1.0, c.solver));
  } catch (...) {
    if (!done.empty()) flush();
    throw;
  }
  flush();
  bool ladder_ok = true;
  for (std::size_t i = 1; i < done.size(); ++i) ladder_ok = ladder_ok && done[i].value >= done[i - 1].value;
  run.summary = {{"chi", done.back().value}, {"ladder_nondecreasing", ladder_ok ? 1.0 : 0.0}};
  if (run.dump) write_field(run.file("chi_psi.bin"), done.back().psi);
}

void cmd_rate(Run& run) {
  const auto& c = run.cfg;
  std::vector<RateResult> done;
  auto flush = [&] {
    Csv csv(run.file("rate-inf.csv"),
            "L,n,target,attained,primal,dual_objective,dual_bound,relation_applicable");
    for (const auto& r : done) {
      csv << r.L << r.n << r.target << r.attained << r.primal << r.dual_objective << r.dual_bound
          << r.relation_applicable;
      csv.end();
    }
  };
  try {
    for (double L : c.ladder)
      done.push_back(rate_infimum_estimate(L, c.levels, c.rate_target, c.modes_per_unit, c.chi_iterations,
                                           c.chi_tol, c.solver));
  } catch (...) {
    if (!done.empty()) flush();
    throw;
  }
  flush();
  bool nonincreasing = true;
  for (std::size_t i = 1; i < done.size(); ++i)
    nonincreasing = nonincreasing && done[i].primal <= done[i - 1].primal;
  run.summary = {{"nonincreasing", nonincreasing ? 1.0 : 0.0}};
  if (run.dump && done.back().potential) write_field(run.file("rate_potential.bin"), *done.back().potential);
}

bool cmd_selftest(Run& run) {
  const auto results = selftest(run.cfg.workers);
  Csv csv(run.file("selftest.csv"), "check,passed,detail");
  bool ok = true;
  for (const auto& r : results) {
    csv << r.name << r.passed << ("\"" + r.detail + "\"");
    csv.end();
    run.out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.passed;
  }
  run.summary = {{"checks", static_cast<double>(results.size())}, {"all_passed", ok ? 1.0 : 0.0}};
  return ok;
}

const std::vector<std::pair<std::string, std::string>>& subcommands() {
  static const std::vector<std::pair<std::string, std::string>> list{
      {"sample", "draw white-noise coefficients on [0,L]^2"},
      {"spectrum", "top eigenvalues of one operator"},
      {"renorm", "renormalization constant over eps_ladder"},
      {"growth", "coupled eigenvalue growth over the L ladder"},
      {"scaling-test", "scaling-in-distribution KS test"},
      {"tails", "upper-tail frequencies and rate"},
      {"small-noise", "concentration as the noise intensity shrinks"},
      {"chi", "alternating maximisation for the Ladyzhenskaya constant"},
      {"rate-inf", "infimum of the rate function over the L ladder"},
      {"box-bounds", "IMS box-bound inequalities over noise draws"},
      {"selftest", "fast invariant suite"},
  };
  return list;
}

}  // namespace

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ContractError("expected key=value, got '" + text + "'");
  std::string key = trim(text.substr(0, eq)), value = trim(text.substr(eq + 1));
  if (key.empty()) throw ContractError("missing key in '" + text + "'");
  return {key, value};
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::map<std::string, int> seen;
  for (int no = 1; std::getline(in, line); ++no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(no) + ": ";
    try {
      const auto [key, value] = split_assignment(line);
      if (auto it = seen.find(key); it != seen.end())
        throw ContractError("duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")");
      seen[key] = no;
      set_config_value(cfg, key, value);
    } catch (const ContractError& e) {
      throw ContractError(where + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ContractError& e) {
    std::set<int> hit;
    for (const auto& t : tokens(e.what()))
      if (auto it = seen.find(t); it != seen.end()) hit.insert(it->second);
    std::string lines;
    for (int l : hit) lines += (lines.empty() ? "" : ",") + std::to_string(l);
    throw ContractError(source + (lines.empty() ? "" : ":" + lines) + ": " + e.what());
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : config_items(cfg)) s += k + " = " + v + "\n";
  return s;
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral experiments for the Anderson Hamiltonian on planar boxes", "anderson"};
  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<std::string> sets;
  bool print_config = false, dump = false;
  auto* o_seed = app.add_option("--seed", seed, "seed base (overrides config)");
  auto* o_workers = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--set", sets, "override one config key (key=value), repeatable")->allow_extra_args(false);
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");
  app.add_flag("--dump", dump, "also write binary coefficient dumps");
  app.require_subcommand(0, 1);
  for (const auto& [name, help] : subcommands()) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> argv_store{"anderson"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadConfig;
  }

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& s : sets) {
      try {
        const auto [k, v] = split_assignment(s);
        set_config_value(cfg, k, v);
      } catch (const ContractError& e) {
        throw ContractError("--set " + s + ": " + e.what());
      }
    }
    if (o_seed->count()) cfg.seed = seed;
    if (o_workers->count()) cfg.workers = workers;
    cfg.validate();
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kBadConfig;
  }

  if (print_config) {
    out << format_config(cfg);
    return kOk;
  }
  if (app.get_subcommands().empty()) {
    err << "error: no subcommand given\n" << app.help();
    return kBadConfig;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    err << "error: cannot create " << out_dir << ": " << ec.message() << '\n';
    return kBadConfig;
  }

  Run run{name, cfg, fs::path(out_dir), dump, {}, {}, out};
  const std::string started = timestamp();
  std::string status = "ok", message;
  int code = kOk;
  try {
    const std::map<std::string, std::function<StudyRecord(const ExperimentConfig&)>> studies{
        {"growth", growth_study},         {"scaling-test", scaling_law_test}, {"tails", tail_study},
        {"small-noise", small_noise_study}, {"box-bounds", box_bounds_study}};
    if (auto it = studies.find(name); it != studies.end()) take_study(run, it->second(cfg));
    else if (name == "sample") cmd_sample(run);
    else if (name == "spectrum") cmd_spectrum(run);
    else if (name == "renorm") cmd_renorm(run);
    else if (name == "chi") cmd_chi(run);
    else if (name == "rate-inf") cmd_rate(run);
    else if (name == "selftest" && !cmd_selftest(run)) {
      status = "checks_failed";
      code = kCheckFailed;
    }
  } catch (const ContractError& e) {
    status = "failed";
    message = e.what();
    code = kBadConfig;
  } catch (const std::exception& e) {
    status = run.files.empty() ? "failed" : "partial";
    message = e.what();
    code = kSolverFailed;
  }

  Json manifest;
  manifest["subcommand"] = name;
  manifest["version"] = ANDERSON_VERSION;
  manifest["seed"] = cfg.seed;
  manifest["workers"] = cfg.workers;
  Json config = Json::object();
  for (const auto& [k, v] : config_items(cfg)) config[k] = v;
  manifest["config"] = config;
  manifest["started"] = started;
  manifest["finished"] = timestamp();
  manifest["status"] = status;
  if (!message.empty()) manifest["error"] = message;
  manifest["outputs"] = run.files;
  Json summary = Json::object();
  for (const auto& [k, v] : run.summary) summary[k] = v;
  manifest["summary"] = summary;
  const fs::path mpath = run.dir / (name + ".manifest.json");
  std::ofstream(mpath) << manifest.dump(2) << '\n';

  if (!message.empty()) err << "error: " << message << '\n';
  for (const auto& [k, v] : run.summary) out << k << " = " << csv_number(v) << '\n';
  out << "wrote";
  for (const auto& f : run.files) out << ' ' << (run.dir / f).string();
  out << ' ' << mpath.string() << '\n';
  return code;
}

}  // namespace anderson::cli
