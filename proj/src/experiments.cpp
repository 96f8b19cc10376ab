#include "anderson/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "anderson/error.hpp"
#include "anderson/paraproducts.hpp"
#include "anderson/rng.hpp"

namespace anderson {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* b = v.data();
  const char* e = b + v.size();
  auto res = std::from_chars(b, e, out);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(out))
    throw ContractError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ContractError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ContractError(key + ": empty list");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ContractError(key + ": expected true or false, got '" + v + "'");
}

bool increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), t0_(std::chrono::steady_clock::now()) {}
  double ms() const {
    if (!on_) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point t0_;
};

std::string key_of(double L) { return fmt(L); }

// Exponential rate of the empirical upper tail: -slope of log P(lambda >= x) on
// thresholds at tail probabilities from 1/2 down to 20/n.
double tail_rate(std::span<const double> sample) {
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  std::vector<double> xs, ys;
  for (double p = 0.5; p * n >= 20.0; p *= 0.7) {
    const auto idx = static_cast<std::size_t>(std::floor((1.0 - p) * n));
    const double x = s[std::min(idx, s.size() - 1)];
    const double count = static_cast<double>(s.end() - std::lower_bound(s.begin(), s.end(), x));
    if (!xs.empty() && x <= xs.back()) continue;
    xs.push_back(x);
    ys.push_back(std::log(count / n));
  }
  if (xs.size() < 3) throw ContractError("too few replicas for a tail fit");
  return -linear_fit(xs, ys).slope;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (ladder.empty() || !increasing(ladder) || ladder.front() <= 0.0)
    throw ContractError("ladder must be positive and increasing");
  if (!increasing(chi_ladder) || chi_ladder.front() <= 0.0)
    throw ContractError("chi_ladder must be positive and increasing");
  if (replicas < 1) throw ContractError("replicas must be >= 1");
  if (levels < 1) throw ContractError("levels must be >= 1");
  if (!(L > 0.0) || !(eps > 0.0) || !(alpha > 0.0) || !(modes_per_unit > 0.0))
    throw ContractError("L, eps, alpha and modes_per_unit must be positive");
  if (!(a > 0.0 && a < r)) throw ContractError("need 0 < a < r");
  for (double e : eps_ladder)
    if (!(e > 0.0)) throw ContractError("eps_ladder entries must be positive");
  for (double s : noise_levels)
    if (!(s >= 0.0)) throw ContractError("noise levels must be >= 0");
  if (workers < 1) throw ContractError("workers must be >= 1");
  if (bootstrap < 2) throw ContractError("bootstrap must be >= 2");
}

std::vector<std::pair<std::string, std::string>> config_items(const ExperimentConfig& c) {
  return {
      {"ladder", fmt_list(c.ladder)},
      {"L", fmt(c.L)},
      {"eps", fmt(c.eps)},
      {"eps_ladder", fmt_list(c.eps_ladder)},
      {"beta", fmt(c.beta)},
      {"alpha", fmt(c.alpha)},
      {"modes_per_unit", fmt(c.modes_per_unit)},
      {"replicas", std::to_string(c.replicas)},
      {"levels", std::to_string(c.levels)},
      {"seed", std::to_string(c.seed)},
      {"profile", c.profile.name()},
      {"renorm", renormalization_name(c.renorm)},
      {"noise_levels", fmt_list(c.noise_levels)},
      {"r", fmt(c.r)},
      {"a", fmt(c.a)},
      {"slack", fmt(c.slack)},
      {"bootstrap", std::to_string(c.bootstrap)},
      {"chi_ladder", fmt_list(c.chi_ladder)},
      {"chi_modes_per_unit", fmt(c.chi_modes_per_unit)},
      {"chi_iterations", std::to_string(c.chi_iterations)},
      {"chi_tol", fmt(c.chi_tol)},
      {"rate_target", fmt(c.rate_target)},
      {"workers", std::to_string(c.workers)},
      {"record_timing", c.record_timing ? "true" : "false"},
      {"solver.dense_limit", std::to_string(c.solver.dense_limit)},
      {"solver.tol", fmt(c.solver.tol)},
      {"solver.max_iterations", std::to_string(c.solver.max_iterations)},
  };
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& v) {
  auto positive_int = [&](long long x) {
    if (x < 1 || x > 1'000'000'000) throw ContractError(key + ": expected a positive integer");
    return static_cast<int>(x);
  };
  if (key == "ladder") c.ladder = parse_list(key, v);
  else if (key == "L") c.L = parse_double(key, v);
  else if (key == "eps") c.eps = parse_double(key, v);
  else if (key == "eps_ladder") c.eps_ladder = parse_list(key, v);
  else if (key == "beta") c.beta = parse_double(key, v);
  else if (key == "alpha") c.alpha = parse_double(key, v);
  else if (key == "modes_per_unit") c.modes_per_unit = parse_double(key, v);
  else if (key == "replicas") c.replicas = positive_int(parse_int(key, v));
  else if (key == "levels") c.levels = positive_int(parse_int(key, v));
  else if (key == "seed") {
    const long long s = parse_int(key, v);
    if (s < 0) throw ContractError(key + ": expected a non-negative integer");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "profile") {
    try {
      c.profile = parse_profile(v);
    } catch (const ContractError&) {
      throw ContractError(key + ": unknown profile '" + v + "'");
    }
  } else if (key == "renorm") {
    try {
      c.renorm = parse_renormalization(v);
    } catch (const ContractError&) {
      throw ContractError(key + ": unknown renormalization '" + v + "'");
    }
  } else if (key == "noise_levels") c.noise_levels = parse_list(key, v);
  else if (key == "r") c.r = parse_double(key, v);
  else if (key == "a") c.a = parse_double(key, v);
  else if (key == "slack") c.slack = parse_double(key, v);
  else if (key == "bootstrap") c.bootstrap = positive_int(parse_int(key, v));
  else if (key == "chi_ladder") c.chi_ladder = parse_list(key, v);
  else if (key == "chi_modes_per_unit") c.chi_modes_per_unit = parse_double(key, v);
  else if (key == "chi_iterations") c.chi_iterations = positive_int(parse_int(key, v));
  else if (key == "chi_tol") c.chi_tol = parse_double(key, v);
  else if (key == "rate_target") c.rate_target = parse_double(key, v);
  else if (key == "workers") c.workers = positive_int(parse_int(key, v));
  else if (key == "record_timing") c.record_timing = parse_bool(key, v);
  else if (key == "solver.dense_limit") c.solver.dense_limit = positive_int(parse_int(key, v));
  else if (key == "solver.tol") c.solver.tol = parse_double(key, v);
  else if (key == "solver.max_iterations") c.solver.max_iterations = positive_int(parse_int(key, v));
  else throw ContractError("unknown key '" + key + "'");
}

double StudyRecord::get(const std::string& key) const {
  for (const auto& [k, v] : summary)
    if (k == key) return v;
  throw ContractError("summary has no entry '" + key + "'");
}

std::vector<double> StudyRecord::lambdas(double L, int n) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.L == L && r.n == n) out.push_back(r.lambda);
  return out;
}

std::uint64_t replica_seed(std::uint64_t base, int replica, int stream) {
  return stream_key(base, replica, stream, 0x5EED);
}

void parallel_for(int count, int workers, const std::function<void(int)>& f) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, count); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

StudyRecord growth_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const double top = cfg.ladder.back();
  const BoxDomain parent = BoxDomain::square(top);
  const std::size_t nl = cfg.ladder.size();
  std::vector<std::vector<StudyRow>> per(cfg.replicas);
  parallel_for(cfg.replicas, cfg.workers, [&](int i) {
    const std::uint64_t seed = replica_seed(cfg.seed, i);
    const NoiseDraw d = sample(parent, mollifier_truncation(parent, cfg.eps, cfg.profile), seed);
    const SpectralField v = noise_potential(d, cfg.eps, cfg.profile, cfg.beta, cfg.renorm);
    for (double L : cfg.ladder) {
      Stopwatch sw(cfg.record_timing);
      const BoxDomain box = BoxDomain::square(L);
      const Truncation n = truncation_for(box, cfg.modes_per_unit);
      const EigenResult e = L == top ? eigenvalues(GalerkinOperator(v, n), cfg.levels, cfg.solver)
                                     : eigenvalues(sub_operator(v, box, n), cfg.levels, cfg.solver);
      const double ms = sw.ms();
      for (int k = 0; k < cfg.levels; ++k)
        per[i].push_back({L, cfg.eps, cfg.beta, seed, k + 1, e.values[k], ms});
    }
  });
  StudyRecord rec{"growth", {}, {}, {}};
  for (auto& r : per) rec.rows.insert(rec.rows.end(), r.begin(), r.end());

  std::vector<std::vector<double>> lam(nl);
  for (std::size_t j = 0; j < nl; ++j) lam[j] = rec.lambdas(cfg.ladder[j], 1);
  int violations = 0;
  for (int i = 0; i < cfg.replicas; ++i)
    for (std::size_t j = 1; j < nl; ++j)
      if (lam[j - 1][i] > lam[j][i] + cfg.slack) ++violations;
  rec.put("monotone_violations", violations);
  std::vector<double> logs, means;
  for (std::size_t j = 0; j < nl; ++j) {
    const double L = cfg.ladder[j];
    const double m = mean(lam[j]);
    rec.put("mean_" + key_of(L), m);
    if (cfg.replicas > 1) rec.put("se_" + key_of(L), standard_error(lam[j]));
    if (L > 1.0) rec.put("ratio_" + key_of(L), m / std::log(L));
    logs.push_back(std::log(L));
    means.push_back(m);
  }
  if (nl >= 2) rec.put("trend_slope", linear_fit(logs, means).slope);
  if (cfg.replicas > 1)
    for (std::size_t a = 0; a < nl; ++a)
      for (std::size_t b = a + 1; b < nl; ++b) {
        std::vector<double> diff(cfg.replicas);
        for (int i = 0; i < cfg.replicas; ++i) diff[i] = lam[b][i] - lam[a][i];
        const double se = standard_error(diff);
        rec.put("z_" + key_of(cfg.ladder[a]) + "_" + key_of(cfg.ladder[b]),
                se > 0.0 ? mean(diff) / se : (mean(diff) > 0 ? INFINITY : 0.0));
      }
  return rec;
}

StudyRecord scaling_law_test(const ExperimentConfig& cfg) {
  cfg.validate();
  const double al = cfg.alpha, L = cfg.L;
  const BoxDomain big = BoxDomain::square(L), small = BoxDomain::square(L / al);
  // Matched truncation: mode k on Q_L corresponds to mode k on Q_{L/alpha}.
  const Truncation n = truncation_for(big, cfg.modes_per_unit);
  double shift = cfg.beta * cfg.beta * std::log(al) / (2 * kPi);
  if (cfg.renorm == Renormalization::ConstantC)
    shift = cfg.beta * cfg.beta *
            (renorm_constant(small, cfg.eps / al, cfg.profile) - renorm_constant(big, cfg.eps, cfg.profile));
  std::vector<std::vector<StudyRow>> per(2 * cfg.replicas);
  parallel_for(2 * cfg.replicas, cfg.workers, [&](int job) {
    const bool second = job >= cfg.replicas;
    const int i = second ? job - cfg.replicas : job;
    const std::uint64_t seed = replica_seed(cfg.seed, i, second ? 2 : 1);
    Stopwatch sw(cfg.record_timing);
    const BoxDomain& box = second ? small : big;
    const double eps = second ? cfg.eps / al : cfg.eps;
    const double beta = second ? al * cfg.beta : cfg.beta;
    const NoiseDraw d = sample(box, mollifier_truncation(box, eps, cfg.profile), seed);
    const EigenResult e = eigenvalues(
        GalerkinOperator(noise_potential(d, eps, cfg.profile, beta, cfg.renorm), n), cfg.levels, cfg.solver);
    const double ms = sw.ms();
    for (int k = 0; k < cfg.levels; ++k) {
      const double lam = second ? e.values[k] / (al * al) + shift : e.values[k];
      per[job].push_back({box.side(0), eps, beta, seed, k + 1, lam, ms});
    }
  });
  StudyRecord rec{"scaling", {}, {}, {}};
  // Split by stream rather than by side length, which coincide at alpha = 1.
  std::vector<double> a, b;
  for (int job = 0; job < 2 * cfg.replicas; ++job)
    for (const auto& row : per[job]) {
      if (row.n == cfg.levels) (job < cfg.replicas ? a : b).push_back(row.lambda);
      rec.rows.push_back(row);
    }
  rec.ks = ks_two_sample(a, b);
  rec.put("ks_statistic", rec.ks->statistic);
  rec.put("ks_p", rec.ks->p_value);
  rec.put("mean_direct", mean(a));
  rec.put("mean_scaled", mean(b));
  rec.put("shift", shift);
  return rec;
}

StudyRecord tail_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const BoxDomain box = BoxDomain::square(cfg.L);
  const Truncation n = truncation_for(box, cfg.modes_per_unit);
  std::vector<StudyRow> rows(cfg.replicas);
  parallel_for(cfg.replicas, cfg.workers, [&](int i) {
    const std::uint64_t seed = replica_seed(cfg.seed, i);
    Stopwatch sw(cfg.record_timing);
    const NoiseDraw d = sample(box, mollifier_truncation(box, cfg.eps, cfg.profile), seed);
    const double lam = top_eigenvalue(
        GalerkinOperator(noise_potential(d, cfg.eps, cfg.profile, cfg.beta, cfg.renorm), n), cfg.solver);
    rows[i] = {cfg.L, cfg.eps, cfg.beta, seed, 1, lam, sw.ms()};
  });
  StudyRecord rec{"tails", std::move(rows), {}, {}};
  std::vector<double> lam = rec.lambdas(cfg.L, 1);
  const double rate = tail_rate(lam);
  const Interval ci = bootstrap_interval(lam, tail_rate, cfg.bootstrap, 0.95, stream_key(cfg.seed, 0, 0, 0xB007));
  rec.put("rate", rate);
  rec.put("rate_lo", ci.lo);
  rec.put("rate_hi", ci.hi);
  rec.put("mean", mean(lam));
  rec.put("min", *std::min_element(lam.begin(), lam.end()));
  rec.put("max", *std::max_element(lam.begin(), lam.end()));
  // Second differences of the log tail at evenly spaced thresholds in the upper half.
  std::sort(lam.begin(), lam.end());
  const double lo = lam[lam.size() / 2], hi = lam[lam.size() - std::min<std::size_t>(lam.size(), 20)];
  std::vector<double> lt;
  for (int k = 0; k <= 10; ++k) {
    const double x = lo + (hi - lo) * k / 10.0;
    lt.push_back(std::log(upper_tail_frequency(lam, x)));
  }
  int convex = 0;
  for (std::size_t k = 1; k + 1 < lt.size(); ++k)
    if (lt[k + 1] - 2 * lt[k] + lt[k - 1] >= 0.0) ++convex;
  rec.put("convex_fraction", convex / static_cast<double>(lt.size() - 2));
  return rec;
}

double upper_tail_frequency(std::span<const double> sample, double x) {
  if (sample.empty()) throw ContractError("empty sample");
  std::size_t c = 0;
  for (double v : sample)
    if (v >= x) ++c;
  return static_cast<double>(c) / static_cast<double>(sample.size());
}

StudyRecord small_noise_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const BoxDomain box = BoxDomain::square(cfg.L);
  const Truncation n = truncation_for(box, cfg.modes_per_unit);
  const int nl = static_cast<int>(cfg.noise_levels.size());
  std::vector<std::vector<StudyRow>> per(nl * cfg.replicas);
  parallel_for(nl * cfg.replicas, cfg.workers, [&](int job) {
    const int li = job / cfg.replicas, i = job % cfg.replicas;
    const double s = cfg.noise_levels[li];
    // Same draws at every level, so the ladder is coupled.
    const std::uint64_t seed = replica_seed(cfg.seed, i);
    Stopwatch sw(cfg.record_timing);
    const NoiseDraw d = sample(box, mollifier_truncation(box, cfg.eps, cfg.profile), seed);
    const EigenResult e = eigenvalues(
        GalerkinOperator(noise_potential(d, cfg.eps, cfg.profile, std::sqrt(s), cfg.renorm), n),
        cfg.levels, cfg.solver);
    const double ms = sw.ms();
    for (int k = 0; k < cfg.levels; ++k)
      per[job].push_back({cfg.L, cfg.eps, std::sqrt(s), seed, k + 1, e.values[k], ms});
  });
  StudyRecord rec{"small_noise", {}, {}, {}};
  for (auto& r : per) rec.rows.insert(rec.rows.end(), r.begin(), r.end());
  const double base = -2 * kPi * kPi / (cfg.L * cfg.L);
  rec.put("laplacian", base);
  std::vector<double> lx, ly;
  for (int li = 0; li < nl; ++li) {
    const double s = cfg.noise_levels[li];
    std::vector<double> lam;
    for (const auto& r : rec.rows)
      if (r.beta == std::sqrt(s) && r.n == 1) lam.push_back(r.lambda);
    const std::string tag = fmt(s);
    rec.put("mean_" + tag, mean(lam));
    if (lam.size() > 1) {
      const double var = variance(lam);
      rec.put("var_" + tag, var);
      rec.put("z_" + tag, standard_error(lam) > 0 ? (mean(lam) - base) / standard_error(lam) : 0.0);
      if (s > 0.0 && var > 0.0) {
        lx.push_back(std::log(s));
        ly.push_back(std::log(var));
      }
    }
  }
  if (lx.size() >= 2) rec.put("var_slope", linear_fit(lx, ly).slope);
  return rec;
}

StudyRecord box_bounds_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const BoxDomain box = BoxDomain::square(cfg.L);
  BoxBoundsOptions o;
  o.r = cfg.r;
  o.a = cfg.a;
  o.slack = cfg.slack;
  o.levels = cfg.levels;
  o.modes_per_unit = cfg.modes_per_unit;
  o.solver = cfg.solver;
  std::vector<BoxBoundsReport> reps(cfg.replicas);
  std::vector<std::vector<StudyRow>> per(cfg.replicas);
  parallel_for(cfg.replicas, cfg.workers, [&](int i) {
    const std::uint64_t seed = replica_seed(cfg.seed, i);
    Stopwatch sw(cfg.record_timing);
    const NoiseDraw d = sample(box, mollifier_truncation(box, cfg.eps, cfg.profile), seed);
    reps[i] = box_bounds_check(noise_potential(d, cfg.eps, cfg.profile, cfg.beta, cfg.renorm), o);
    const double ms = sw.ms();
    for (std::size_t k = 0; k < reps[i].parent.size(); ++k)
      per[i].push_back({cfg.L, cfg.eps, cfg.beta, seed, static_cast<int>(k + 1), reps[i].parent[k], ms});
  });
  StudyRecord rec{"box_bounds", {}, {}, {}};
  for (auto& r : per) rec.rows.insert(rec.rows.end(), r.begin(), r.end());
  int mono = 0, upper = 0, lower = 0, bad = 0;
  for (const auto& r : reps) {
    mono += r.monotone_violations;
    upper += r.upper_violations;
    lower += r.lower_violations;
    bad += r.ok() ? 0 : 1;
  }
  rec.put("monotone_violations", mono);
  rec.put("upper_violations", upper);
  rec.put("lower_violations", lower);
  rec.put("draws_with_violation", bad);
  rec.put("phi_sup", ImsPartition(cfg.r, cfg.a).phi_sup());
  return rec;
}

double chi_objective(const SpectralField& psi, double rho) {
  if (psi.parity() != kDirichlet) throw ContractError("objective expects a Dirichlet field");
  const double nn = psi.norm();
  if (nn == 0.0) throw ContractError("zero field");
  const SpectralField u = (1.0 / nn) * psi;
  const double l4sq = pointwise_product(u, u).norm();
  double grad = 0.0;
  for (int k1 = 1; k1 <= u.n(0); ++k1)
    for (int k2 = 1; k2 <= u.n(1); ++k2) {
      const double a = k1 / u.box().side(0), b = k2 / u.box().side(1);
      grad += kPi * kPi * (a * a + b * b) * u.at(k1, k2) * u.at(k1, k2);
    }
  return rho * l4sq - grad;
}

ChiLevel chi_at(double L, Truncation n, int iterations, double tol, double rho,
                const SolverOptions& solver) {
  if (!(rho > 0.0)) throw ContractError("potential norm must be positive");
  const BoxDomain box = BoxDomain::square(L);
  SpectralField psi = SpectralField::mode(box, kDirichlet, n, {1, 1});
  std::vector<double> trace;
  for (int it = 0; it < iterations; ++it) {
    SpectralField w = pointwise_product(psi, psi);
    w *= rho / w.norm();
    const EigenResult e = eigenvalues(GalerkinOperator(w, n), 1, solver, true);
    const double lam = e.values[0];
    if (!trace.empty() && lam < trace.back() - 1e-9 * std::max(1.0, std::abs(lam)))
      throw NumericError("alternating maximisation lost monotonicity");
    psi = e.vectors[0];
    const bool done = !trace.empty() && std::abs(lam - trace.back()) <= tol * std::max(1.0, std::abs(lam));
    trace.push_back(lam);
    if (done) return {L, 4.0 * lam / (rho * rho), std::move(trace), std::move(psi)};
  }
  throw ConvergenceError("alternating maximisation did not settle at L = " + fmt(L),
                         trace.size() > 1 ? std::abs(trace.back() - trace[trace.size() - 2]) : 0.0);
}

ChiResult chi_estimate(const std::vector<double>& ladder, double modes_per_unit, int iterations,
                       double tol, const SolverOptions& solver) {
  if (ladder.empty() || !increasing(ladder)) throw ContractError("chi ladder must be increasing");
  ChiResult out;
  for (double L : ladder)
    out.levels.push_back(
        chi_at(L, truncation_for(BoxDomain::square(L), modes_per_unit), iterations, tol, 1.0, solver));
  return out;
}

RateResult rate_infimum_estimate(double L, int n, double target, double modes_per_unit,
                                 int iterations, double tol, const SolverOptions& solver) {
  if (n < 1) throw ContractError("eigenvalue index must be >= 1");
  const BoxDomain box = BoxDomain::square(L);
  const Truncation nt = truncation_for(box, modes_per_unit);
  RateResult res{L, n, target};
  auto lambda_n = [&](const SpectralField& w, double t, bool vec) {
    return eigenvalues(GalerkinOperator(t * w, nt), n, solver, vec);
  };
  // Start from the n-th Laplacian eigenfunction.
  EigenResult e0 = eigenvalues(GalerkinOperator(SpectralField(box, kNeumann, {0, 0}), nt), n, solver, true);
  SpectralField psi = e0.vectors[n - 1];
  double t_prev = INFINITY;
  const double t_max = 1e6;
  for (int it = 0; it < iterations; ++it) {
    SpectralField w = pointwise_product(psi, psi);
    w *= 1.0 / w.norm();
    // Smallest t >= 0 with lambda_n(Delta + t w) >= target.
    double lo = 0.0, hi = std::isfinite(t_prev) ? t_prev : 1.0;
    if (lambda_n(w, 0.0, false).values[n - 1] >= target) {
      hi = 0.0;
    } else {
      while (lambda_n(w, hi, false).values[n - 1] < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > t_max) {
          res.attained = false;
          return res;
        }
      }
      // Newton from the right (lambda_1 is convex in t), guarded by bisection.
      for (int k = 0; k < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++k) {
        const EigenResult e = lambda_n(w, hi, true);
        const double f = e.values[n - 1] - target;
        // d lambda / dt = <w, psi^2> for a unit eigenvector.
        const SpectralField& v = e.vectors[n - 1];
        const double slope = inner_product(w, pointwise_product(v, v));
        double next = slope > 0.0 ? hi - f / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (lambda_n(w, next, false).values[n - 1] >= target) hi = next;
        else lo = next;
        if (std::abs(f) <= 1e-13 * std::max(1.0, std::abs(target))) break;
      }
    }
    const EigenResult e = lambda_n(w, hi, true);
    psi = e.vectors[n - 1];
    res.trace.push_back(0.5 * hi * hi);
    res.potential = hi * w;
    const bool done = std::isfinite(t_prev) && std::abs(t_prev - hi) <= tol * std::max(1.0, hi);
    t_prev = hi;
    if (done) break;
    if (it + 1 == iterations)
      throw ConvergenceError("rate infimum iteration did not settle", std::abs(res.trace.back()));
  }
  res.attained = true;
  res.primal = res.trace.back();
  if (n == 1) {
    res.dual_objective = chi_at(L, nt, iterations, tol, 1.0, solver).trace.back();
    if (res.dual_objective > 0.0) {
      res.dual_bound = target / (2.0 * res.dual_objective);
      res.relation_applicable = target >= res.dual_objective;
    }
  }
  return res;
}

}  // namespace anderson
