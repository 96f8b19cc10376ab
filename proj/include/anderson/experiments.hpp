#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anderson/hamiltonian.hpp"
#include "anderson/noise.hpp"
#include "anderson/stats.hpp"

namespace anderson {

struct ExperimentConfig {
  std::vector<double> ladder{1.0, 2.0, 4.0, 8.0};
  double L = 4.0;
  double eps = 0.25;
  // Sweep for the renormalization constant.
  std::vector<double> eps_ladder{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024};
  double beta = 1.0;
  double alpha = 2.0;
  double modes_per_unit = 16.0;
  int replicas = 200;
  int levels = 1;
  std::uint64_t seed = 1;
  CutoffProfile profile = CutoffProfile::smooth();
  Renormalization renorm = Renormalization::FullExpectation;
  // Noise intensities for the small-noise study.
  std::vector<double> noise_levels{1e-1, 1e-2, 1e-3};
  double r = 2.0;
  double a = 0.5;
  double slack = 1e-4;
  int bootstrap = 1000;
  std::vector<double> chi_ladder{10.0, 20.0, 40.0};
  double chi_modes_per_unit = 1.0;
  int chi_iterations = 300;
  double chi_tol = 1e-11;
  double rate_target = 1.0;
  int workers = 1;
  bool record_timing = false;
  SolverOptions solver;

  void validate() const;
};

// Flat key=value view of the configuration, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_items(const ExperimentConfig& cfg);
// Throws ContractError naming the key on unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct StudyRow {
  double L;
  double eps;
  double beta;
  std::uint64_t seed;
  int n;
  double lambda;
  double wall_ms;
};

struct StudyRecord {
  std::string study;
  std::vector<StudyRow> rows;
  std::vector<std::pair<std::string, double>> summary;
  std::optional<KsResult> ks;

  double get(const std::string& key) const;
  void put(const std::string& key, double value) { summary.emplace_back(key, value); }
  // lambda values of rows matching L and n, in replica order.
  std::vector<double> lambdas(double L, int n = 1) const;
};

// Seed of replica i in stream s.
std::uint64_t replica_seed(std::uint64_t base, int replica, int stream = 0);

// Runs f(i) for i in [0, count) on `workers` threads; rethrows the first failure.
void parallel_for(int count, int workers, const std::function<void(int)>& f);

// Nested boxes [0, L]^2 for L in the ladder, coupled through one draw on the largest.
StudyRecord growth_study(const ExperimentConfig& cfg);
// lambda_n(Q_L, beta) against alpha^-2 lambda_n(Q_{L/alpha}, alpha beta) + beta^2 log(alpha) / 2 pi.
StudyRecord scaling_law_test(const ExperimentConfig& cfg);
// Upper tail of lambda_1(Q_L) with a bootstrap interval on the exponential rate.
StudyRecord tail_study(const ExperimentConfig& cfg);
// Fraction of the sample at or above x.
double upper_tail_frequency(std::span<const double> sample, double x);
// lambda_n(Q_L, sqrt(s) noise) for s in noise_levels.
StudyRecord small_noise_study(const ExperimentConfig& cfg);
// box_bounds_check over independent draws on Q_L.
StudyRecord box_bounds_study(const ExperimentConfig& cfg);

struct ChiLevel {
  double L;
  double value;               // 4 J / rho^2
  std::vector<double> trace;  // lambda_1 per iteration, nondecreasing
  SpectralField psi;
};

struct ChiResult {
  std::vector<ChiLevel> levels;
  double best() const { return levels.empty() ? 0.0 : levels.back().value; }
};

// sup over ||V||_2 = rho of lambda_1(Delta + V) on [0,L]^2 by alternating
// maximisation V <- rho psi^2 / ||psi^2||.
ChiLevel chi_at(double L, Truncation n, int iterations, double tol, double rho = 1.0,
                const SolverOptions& solver = {});
ChiResult chi_estimate(const std::vector<double>& ladder, double modes_per_unit, int iterations,
                       double tol, const SolverOptions& solver = {});

// J(psi) = rho ||psi||_4^2 - ||grad psi||_2^2 for a unit Dirichlet field.
double chi_objective(const SpectralField& psi, double rho = 1.0);

struct RateResult {
  double L;
  int n;
  double target;
  bool attained = false;
  double primal = 0.0;          // 1/2 ||V||^2 at the final iterate
  double dual_objective = 0.0;  // sup over ||V|| <= 1 of lambda_1
  double dual_bound = 0.0;      // target / (2 dual_objective) when positive
  bool relation_applicable = false;
  std::vector<double> trace;
  std::optional<SpectralField> potential;
};

RateResult rate_infimum_estimate(double L, int n, double target, double modes_per_unit,
                                 int iterations, double tol, const SolverOptions& solver = {});

}  // namespace anderson
