#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "anderson/geometry.hpp"
#include "anderson/noise.hpp"

namespace anderson {

// Largest matrix dimension assembled densely without an explicit opt-in.
inline constexpr int kDenseCapacity = 4096;

// Galerkin matrix of Delta + V - shift on span{d_k : 1 <= k_i <= N_i}.
// Mode (k1, k2) sits at row (k1 - 1) * N2 + (k2 - 1).
class GalerkinOperator {
 public:
  // potential: Neumann field on the box.
  GalerkinOperator(SpectralField potential, Truncation n, double shift = 0.0);
  // Grid samples are replaced by their cosine interpolant on the same grid.
  static GalerkinOperator from_grid(const GridField& potential, Truncation n, double shift = 0.0);

  const BoxDomain& box() const { return potential_.box(); }
  Truncation truncation() const { return n_; }
  int dimension() const { return n_[0] * n_[1]; }
  const SpectralField& potential() const { return potential_; }
  double shift() const { return shift_; }

  ModeIndex mode_of(int row) const { return {row / n_[1] + 1, row % n_[1] + 1}; }
  int row_of(ModeIndex k) const { return (k[0] - 1) * n_[1] + (k[1] - 1); }

  double laplacian_entry(int row) const;
  // <V d_l, d_k> from the cosine expansion of V, exact.
  double potential_entry(int row, int col) const;
  double entry(int row, int col) const;
  Eigen::VectorXd diagonal() const;

  Eigen::MatrixXd dense(bool allow_large = false) const;
  Eigen::MatrixXd submatrix(const std::vector<int>& rows) const;

  // Matrix-free product through the padded sine/cosine grids.
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;

  GridSize apply_grid() const { return grid_; }

  SpectralField to_field(const Eigen::VectorXd& x) const;
  Eigen::VectorXd to_vector(const SpectralField& u) const;

 private:
  // Coefficient of n_m in d_l * d_k along one axis (|m| <= 2N).
  double axis_factor(int axis, int m, int l, int k) const;

  SpectralField potential_;
  Truncation n_;
  double shift_;
  GridSize grid_;
  std::vector<double> potential_grid_;
};

enum class SolverKind { Auto, Dense, Iterative };

struct SolverOptions {
  SolverKind kind = SolverKind::Auto;
  // Auto switches to the iterative solver above this dimension.
  int dense_limit = 64;
  bool allow_large_dense = false;
  // Iterative residual target relative to the operator scale.
  double tol = 1e-11;
  int max_iterations = 600;
};

struct EigenResult {
  std::vector<double> values;  // descending
  std::vector<SpectralField> vectors;
  std::vector<double> residuals;
  int requested = 0;
};

EigenResult eigenvalues(const GalerkinOperator& op, int n, const SolverOptions& opts = {},
                        bool want_vectors = false);
double top_eigenvalue(const GalerkinOperator& op, const SolverOptions& opts = {});

// Smallest Rayleigh quotient over span(trial) (columns in coefficient space).
double min_max(const GalerkinOperator& op, const Eigen::MatrixXd& trial);
double rayleigh_quotient(const GalerkinOperator& op, const Eigen::VectorXd& psi);

// beta^2 V(beta .) on the box scaled by 1/beta.
SpectralField dilate(const SpectralField& v, double beta);

// beta xi_eps - beta^2 (renormalization term); draws are mollified here.
SpectralField noise_potential(const NoiseDraw& draw, double eps, const CutoffProfile& tau,
                              double beta, Renormalization mode = Renormalization::FullExpectation);

// Truncation ceil(modes_per_unit * side) per axis.
Truncation truncation_for(const BoxDomain& box, double modes_per_unit);

// Operator on a sub-box for the restriction of a parent potential. Only the first 2N
// cosine modes of the restriction enter the pairing, so this is exact.
GalerkinOperator sub_operator(const SpectralField& parent_potential, const BoxDomain& sub,
                              Truncation n, double shift = 0.0);

// Squared partition of unity eta_k = eta(. - r k), eta = e(x1) e(x2), supp e = [-a, r].
class ImsPartition {
 public:
  ImsPartition(double r, double a);

  double r() const { return r_; }
  double a() const { return a_; }

  double profile(double t) const;
  double profile_derivative(double t) const;

  // Tile index k relative to the lattice anchored at `anchor`.
  double eta(ModeIndex k, Point x, Point anchor = {}) const;
  std::array<double, 2> grad_eta(ModeIndex k, Point x, Point anchor = {}) const;
  double sum_of_squares(Point x, Point anchor = {}) const;
  // Phi = sum_k |grad eta_k|^2.
  double phi(Point x, Point anchor = {}) const;
  GridField phi_grid(const BoxDomain& box, GridSize m) const;

  // K with ||grad eta||_inf = K / a; scale free.
  double gradient_constant() const { return k_; }
  double phi_sup() const { return phi_sup_; }

  // Supports rk + [-a, r]^2 that meet the box, clipped to it.
  std::vector<BoxDomain> overlapping_tiles(const BoxDomain& box) const;
  // Cells rk + [0, r]^2 inside the box.
  std::vector<BoxDomain> disjoint_tiles(const BoxDomain& box) const;

 private:
  double r_, a_, k_, phi_sup_;
};

ImsPartition ims_partition(double r, double a);

struct BoxBoundsOptions {
  double r = 2.0;
  double a = 0.5;
  double slack = 1e-4;
  int levels = 2;
  double modes_per_unit = 16.0;
  SolverOptions solver;
};

struct BoxBoundsReport {
  std::vector<double> parent;       // lambda_1..lambda_levels on the parent box
  std::vector<double> cells;        // lambda_1 per disjoint cell
  std::vector<double> tiles;        // lambda_1 per overlapping tile
  double phi_sup = 0.0;
  int monotone_violations = 0;      // cell above parent
  int upper_violations = 0;         // parent above max tile + sup Phi
  int lower_violations = 0;         // parent lambda_n below n-th best cell
  bool ok() const { return monotone_violations + upper_violations + lower_violations == 0; }
};

BoxBoundsReport box_bounds_check(const SpectralField& parent_potential,
                                 const BoxBoundsOptions& opts);

}  // namespace anderson
