#include "anderson/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "anderson/calculus.hpp"
#include "anderson/error.hpp"

namespace anderson {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd ritz_descending(const Eigen::MatrixXd& h, Eigen::VectorXd& theta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw NumericError("dense eigensolver failed");
  theta = es.eigenvalues().reverse();
  return es.eigenvectors().rowwise().reverse();
}

EigenResult dense_solve(const GalerkinOperator& op, int n, bool allow_large, bool want_vectors) {
  const Eigen::MatrixXd a = op.dense(allow_large);
  Eigen::VectorXd theta;
  const Eigen::MatrixXd y = ritz_descending(a, theta);
  EigenResult out;
  out.requested = n;
  const double scale = std::max(1.0, a.cwiseAbs().rowwise().sum().maxCoeff());
  for (int i = 0; i < n; ++i) {
    out.values.push_back(theta(i));
    const double res = (a * y.col(i) - theta(i) * y.col(i)).norm();
    if (res > 1e-8 * scale) throw ConvergenceError("dense residual too large", res);
    out.residuals.push_back(res);
    if (want_vectors) out.vectors.push_back(op.to_field(y.col(i)));
  }
  return out;
}

// Block Davidson for the top eigenpairs, diagonal preconditioner, full
// reorthogonalisation and Rayleigh-Ritz on the whole search space.
EigenResult davidson_solve(const GalerkinOperator& op, int n, const SolverOptions& opts,
                           bool want_vectors) {
  const int dim = op.dimension();
  const Eigen::VectorXd d = op.diagonal();
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  const int b = std::min(dim, n + 2);
  const int m_max = std::min(dim, std::max(8 * b, 48));

  // Start from the top of the coarse problem on the modes with largest diagonal.
  std::vector<int> order(dim);
  std::iota(order.begin(), order.end(), 0);
  const int coarse = std::min(dim, std::max(64, 6 * b));
  std::partial_sort(order.begin(), order.begin() + coarse, order.end(),
                    [&](int i, int j) { return d(i) > d(j); });
  order.resize(coarse);
  Eigen::VectorXd ct;
  const Eigen::MatrixXd cy = ritz_descending(op.submatrix(order), ct);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(dim, b);
  for (int j = 0; j < b; ++j)
    for (int i = 0; i < coarse; ++i) v(order[i], j) = cy(i, j);
  Eigen::MatrixXd av = op.apply(v);

  Eigen::VectorXd theta;
  Eigen::MatrixXd x, ax;
  std::vector<double> res(b);
  double worst = 0.0;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Eigen::MatrixXd h = v.transpose() * av;
    const Eigen::MatrixXd y = ritz_descending(0.5 * (h + h.transpose()), theta);
    x = v * y.leftCols(b);
    ax = av * y.leftCols(b);
    Eigen::MatrixXd r = ax - x * theta.head(b).asDiagonal();
    worst = 0.0;
    bool done = true;
    for (int j = 0; j < b; ++j) {
      res[j] = r.col(j).norm();
      if (j < n) {
        worst = std::max(worst, res[j]);
        if (res[j] > opts.tol * scale) done = false;
      }
    }
    if (done) {
      EigenResult out;
      out.requested = n;
      for (int j = 0; j < n; ++j) {
        out.values.push_back(theta(j));
        out.residuals.push_back(res[j]);
        if (want_vectors) out.vectors.push_back(op.to_field(x.col(j)));
      }
      return out;
    }
    std::vector<Eigen::VectorXd> fresh;
    for (int j = 0; j < b; ++j) {
      if (res[j] <= opts.tol * scale) continue;
      Eigen::VectorXd t(dim);
      for (int i = 0; i < dim; ++i) {
        double den = d(i) - theta(j);
        if (std::abs(den) < 1e-10 * scale) den = std::copysign(1e-10 * scale, den);
        t(i) = r(i, j) / den;
      }
      fresh.push_back(std::move(t));
    }
    if (v.cols() + static_cast<Eigen::Index>(fresh.size()) > m_max) {
      v = x;
      av = ax;
    }
    int added = 0;
    for (auto& t : fresh) {
      const double t0 = t.norm();
      for (int pass = 0; pass < 2; ++pass) t -= v * (v.transpose() * t);
      if (t.norm() < 1e-10 * t0) continue;
      t.normalize();
      v.conservativeResize(Eigen::NoChange, v.cols() + 1);
      v.col(v.cols() - 1) = t;
      av.conservativeResize(Eigen::NoChange, av.cols() + 1);
      av.col(av.cols() - 1) = op.apply(Eigen::VectorXd(t));
      ++added;
    }
    if (added == 0) throw ConvergenceError("iterative eigensolver stagnated", worst);
  }
  throw ConvergenceError("iterative eigensolver hit the iteration cap", worst);
}

}  // namespace

GalerkinOperator::GalerkinOperator(SpectralField potential, Truncation n, double shift)
    : potential_(std::move(potential)), n_(n), shift_(shift) {
  if (potential_.parity() != kNeumann) throw ContractError("potential must be a Neumann field");
  if (n[0] < 1 || n[1] < 1) throw ContractError("truncation must be >= 1");
  for (int i = 0; i < 2; ++i) {
    const int nv = potential_.n(i);
    grid_[i] = fft_friendly_size(std::max({nv + 1, (nv + 2 * n[i]) / 2 + 1, n[i] + 1}));
  }
  GridField g = inverse_transform(potential_, grid_);
  potential_grid_.assign(g.samples().begin(), g.samples().end());
}

GalerkinOperator GalerkinOperator::from_grid(const GridField& potential, Truncation n,
                                             double shift) {
  const GridSize m = potential.size();
  return GalerkinOperator(forward_transform(potential, kNeumann, {m[0] - 1, m[1] - 1}), n, shift);
}

double GalerkinOperator::axis_factor(int axis, int m, int l, int k) const {
  const double s = box().side(axis);
  if (m == 0) return l == k ? 1.0 / std::sqrt(s) : 0.0;
  double f = 0.0;
  if (m == std::abs(l - k)) f += 1.0;
  if (m == l + k) f -= 1.0;
  return f * std::sqrt(2.0 / s) / 2.0;
}

double GalerkinOperator::laplacian_entry(int row) const {
  const ModeIndex k = mode_of(row);
  const double a = k[0] / box().side(0), b = k[1] / box().side(1);
  return -kPi * kPi * (a * a + b * b);
}

double GalerkinOperator::potential_entry(int row, int col) const {
  const ModeIndex k = mode_of(row), l = mode_of(col);
  const int m1[2] = {std::abs(l[0] - k[0]), l[0] + k[0]};
  const int m2[2] = {std::abs(l[1] - k[1]), l[1] + k[1]};
  double s = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double f1 = axis_factor(0, m1[i], l[0], k[0]);
    if (f1 == 0.0) continue;
    for (int j = 0; j < 2; ++j) {
      const double f2 = axis_factor(1, m2[j], l[1], k[1]);
      if (f2 != 0.0) s += potential_.get(m1[i], m2[j]) * f1 * f2;
    }
  }
  return s;
}

double GalerkinOperator::entry(int row, int col) const {
  double v = potential_entry(row, col);
  if (row == col) v += laplacian_entry(row) - shift_;
  return v;
}

Eigen::VectorXd GalerkinOperator::diagonal() const {
  Eigen::VectorXd d(dimension());
  for (int i = 0; i < dimension(); ++i) d(i) = entry(i, i);
  return d;
}

Eigen::MatrixXd GalerkinOperator::dense(bool allow_large) const {
  const int dim = dimension();
  if (dim > kDenseCapacity && !allow_large)
    throw CapacityError("dense assembly of dimension " + std::to_string(dim) +
                        " needs an explicit opt-in");
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = entry(i, j);
  return a;
}

Eigen::MatrixXd GalerkinOperator::submatrix(const std::vector<int>& rows) const {
  const int c = static_cast<int>(rows.size());
  Eigen::MatrixXd a(c, c);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = entry(rows[i], rows[j]);
  return a;
}

SpectralField GalerkinOperator::to_field(const Eigen::VectorXd& x) const {
  SpectralField u(box(), kDirichlet, n_);
  for (int i = 0; i < dimension(); ++i) {
    const ModeIndex k = mode_of(i);
    u.set(k[0], k[1], x(i));
  }
  return u;
}

Eigen::VectorXd GalerkinOperator::to_vector(const SpectralField& u) const {
  if (u.parity() != kDirichlet || !(u.box() == box()))
    throw ContractError("vector must be a Dirichlet field on the operator box");
  Eigen::VectorXd x(dimension());
  for (int i = 0; i < dimension(); ++i) {
    const ModeIndex k = mode_of(i);
    x(i) = u.get(k[0], k[1]);
  }
  return x;
}

Eigen::VectorXd GalerkinOperator::apply(const Eigen::VectorXd& x) const {
  if (x.size() != dimension()) throw ContractError("vector size does not match the operator");
  GridField g = inverse_transform(to_field(x), grid_);
  auto s = g.samples();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= potential_grid_[i];
  const SpectralField p = forward_transform(g, kDirichlet, n_);
  Eigen::VectorXd y(dimension());
  for (int i = 0; i < dimension(); ++i) {
    const ModeIndex k = mode_of(i);
    y(i) = p.at(k[0], k[1]) + (laplacian_entry(i) - shift_) * x(i);
  }
  return y;
}

Eigen::MatrixXd GalerkinOperator::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd y(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) y.col(j) = apply(Eigen::VectorXd(x.col(j)));
  return y;
}

EigenResult eigenvalues(const GalerkinOperator& op, int n, const SolverOptions& opts,
                        bool want_vectors) {
  const int dim = op.dimension();
  if (n < 1 || n > dim) throw ContractError("requested eigenvalue count outside [1, dimension]");
  SolverKind kind = opts.kind;
  if (kind == SolverKind::Auto)
    kind = (dim <= opts.dense_limit || 4 * (n + 2) >= dim) ? SolverKind::Dense : SolverKind::Iterative;
  if (kind == SolverKind::Dense) return dense_solve(op, n, opts.allow_large_dense, want_vectors);
  return davidson_solve(op, n, opts, want_vectors);
}

double top_eigenvalue(const GalerkinOperator& op, const SolverOptions& opts) {
  return eigenvalues(op, 1, opts).values.front();
}

double rayleigh_quotient(const GalerkinOperator& op, const Eigen::VectorXd& psi) {
  const double nn = psi.squaredNorm();
  if (nn == 0.0) throw ContractError("zero trial vector");
  return psi.dot(op.apply(psi)) / nn;
}

double min_max(const GalerkinOperator& op, const Eigen::MatrixXd& trial) {
  if (trial.rows() != op.dimension() || trial.cols() < 1)
    throw ContractError("trial subspace has the wrong shape");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
  qr.setThreshold(1e-10);
  if (qr.rank() < trial.cols()) throw ContractError("trial subspace is rank deficient");
  const Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(trial.rows(), trial.cols());
  const Eigen::MatrixXd h = q.transpose() * op.apply(q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

SpectralField dilate(const SpectralField& v, double beta) {
  if (!(beta > 0.0)) throw ContractError("dilation factor must be positive");
  const BoxDomain& b = v.box();
  BoxDomain scaled({b.origin()[0] / beta, b.origin()[1] / beta},
                   {b.side(0) / beta, b.side(1) / beta});
  std::vector<double> c(v.coeffs().begin(), v.coeffs().end());
  for (double& x : c) x *= beta;
  return SpectralField(scaled, v.parity(), v.truncation(), std::move(c));
}

SpectralField noise_potential(const NoiseDraw& draw, double eps, const CutoffProfile& tau,
                              double beta, Renormalization mode) {
  const SpectralField xi = mollify(draw, eps, tau);
  if (beta == 0.0) return 0.0 * xi;
  return beta * xi -
         (beta * beta) * renormalization_field(draw.box, eps, tau, xi.truncation(), mode);
}

Truncation truncation_for(const BoxDomain& box, double modes_per_unit) {
  if (!(modes_per_unit > 0.0)) throw ContractError("modes per unit length must be positive");
  Truncation n;
  for (int i = 0; i < 2; ++i)
    n[i] = std::max(1, static_cast<int>(std::ceil(modes_per_unit * box.side(i) - 1e-9)));
  return n;
}

GalerkinOperator sub_operator(const SpectralField& parent_potential, const BoxDomain& sub,
                              Truncation n, double shift) {
  return GalerkinOperator(restrict_field(parent_potential, sub, {2 * n[0], 2 * n[1]}), n, shift);
}

// ---------------------------------------------------------------------------

ImsPartition::ImsPartition(double r, double a) : r_(r), a_(a) {
  if (!(a > 0.0 && a < r)) throw ContractError("partition needs 0 < a < r");
  // Phi = F(x1) + F(x2), F peaking at (pi S' / 2a)^2 in the overlaps.
  double s_max = 0.0;
  const int samples = 20000;
  for (int i = 1; i < samples; ++i) s_max = std::max(s_max, smooth_step_derivative(double(i) / samples));
  phi_sup_ = 2.0 * std::pow(kPi * s_max / (2.0 * a), 2);
  // sup |grad eta| over pairs of transition points (the plateau gives max |e'|).
  const int m = 1200;
  std::vector<double> e(m + 1), de(m + 1);
  for (int i = 0; i <= m; ++i) {
    const double t = -a + a * i / m;
    e[i] = profile(t);
    de[i] = profile_derivative(t);
  }
  double g2 = 0.0;
  for (int i = 0; i <= m; ++i) {
    g2 = std::max(g2, de[i] * de[i]);
    for (int j = 0; j <= m; ++j)
      g2 = std::max(g2, de[i] * de[i] * e[j] * e[j] + e[i] * e[i] * de[j] * de[j]);
  }
  k_ = a * std::sqrt(g2);
}

double ImsPartition::profile(double t) const {
  if (t <= -a_ || t >= r_) return 0.0;
  if (t < 0.0) return std::sin(0.5 * kPi * smooth_step((t + a_) / a_));
  if (t <= r_ - a_) return 1.0;
  return std::cos(0.5 * kPi * smooth_step((t - r_ + a_) / a_));
}

double ImsPartition::profile_derivative(double t) const {
  if (t <= -a_ || t >= r_) return 0.0;
  if (t < 0.0) {
    const double u = (t + a_) / a_;
    return std::cos(0.5 * kPi * smooth_step(u)) * 0.5 * kPi * smooth_step_derivative(u) / a_;
  }
  if (t <= r_ - a_) return 0.0;
  const double u = (t - r_ + a_) / a_;
  return -std::sin(0.5 * kPi * smooth_step(u)) * 0.5 * kPi * smooth_step_derivative(u) / a_;
}

double ImsPartition::eta(ModeIndex k, Point x, Point anchor) const {
  return profile(x.x1 - anchor.x1 - r_ * k[0]) * profile(x.x2 - anchor.x2 - r_ * k[1]);
}

std::array<double, 2> ImsPartition::grad_eta(ModeIndex k, Point x, Point anchor) const {
  const double t1 = x.x1 - anchor.x1 - r_ * k[0], t2 = x.x2 - anchor.x2 - r_ * k[1];
  return {profile_derivative(t1) * profile(t2), profile(t1) * profile_derivative(t2)};
}

double ImsPartition::sum_of_squares(Point x, Point anchor) const {
  const int c1 = static_cast<int>(std::floor((x.x1 - anchor.x1) / r_));
  const int c2 = static_cast<int>(std::floor((x.x2 - anchor.x2) / r_));
  double s = 0.0;
  for (int k1 = c1 - 1; k1 <= c1 + 1; ++k1)
    for (int k2 = c2 - 1; k2 <= c2 + 1; ++k2) {
      const double e = eta({k1, k2}, x, anchor);
      s += e * e;
    }
  return s;
}

double ImsPartition::phi(Point x, Point anchor) const {
  const int c1 = static_cast<int>(std::floor((x.x1 - anchor.x1) / r_));
  const int c2 = static_cast<int>(std::floor((x.x2 - anchor.x2) / r_));
  double s = 0.0;
  for (int k1 = c1 - 1; k1 <= c1 + 1; ++k1)
    for (int k2 = c2 - 1; k2 <= c2 + 1; ++k2) {
      const auto g = grad_eta({k1, k2}, x, anchor);
      s += g[0] * g[0] + g[1] * g[1];
    }
  return s;
}

GridField ImsPartition::phi_grid(const BoxDomain& box, GridSize m) const {
  const Point anchor{box.origin()[0], box.origin()[1]};
  return sample_function(box, m, [&](Point x) { return phi(x, anchor); });
}

std::vector<BoxDomain> ImsPartition::overlapping_tiles(const BoxDomain& box) const {
  std::vector<std::pair<double, double>> axis[2];
  for (int i = 0; i < 2; ++i) {
    const double L = box.side(i);
    for (int k = -1; r_ * k - a_ < L; ++k) {
      const double lo = std::max(0.0, r_ * k - a_), hi = std::min(L, r_ * (k + 1));
      if (hi - lo > 1e-12 * L) axis[i].emplace_back(lo, hi);
    }
  }
  std::vector<BoxDomain> out;
  for (auto [a1, b1] : axis[0])
    for (auto [a2, b2] : axis[1])
      out.emplace_back(std::array<double, 2>{box.origin()[0] + a1, box.origin()[1] + a2},
                       std::array<double, 2>{b1 - a1, b2 - a2});
  return out;
}

std::vector<BoxDomain> ImsPartition::disjoint_tiles(const BoxDomain& box) const {
  std::vector<BoxDomain> out;
  for (int k1 = 0; r_ * (k1 + 1) <= box.side(0) * (1 + 1e-12); ++k1)
    for (int k2 = 0; r_ * (k2 + 1) <= box.side(1) * (1 + 1e-12); ++k2)
      out.emplace_back(
          std::array<double, 2>{box.origin()[0] + r_ * k1, box.origin()[1] + r_ * k2},
          std::array<double, 2>{r_, r_});
  return out;
}

ImsPartition ims_partition(double r, double a) { return ImsPartition(r, a); }

BoxBoundsReport box_bounds_check(const SpectralField& parent_potential,
                                 const BoxBoundsOptions& opts) {
  const ImsPartition part(opts.r, opts.a);
  const BoxDomain& box = parent_potential.box();
  BoxBoundsReport rep;
  rep.phi_sup = part.phi_sup();
  const GalerkinOperator parent(parent_potential, truncation_for(box, opts.modes_per_unit));
  const auto cells_boxes = part.disjoint_tiles(box);
  const int levels = std::max(1, std::min<int>(opts.levels, static_cast<int>(cells_boxes.size())));
  rep.parent = eigenvalues(parent, levels, opts.solver).values;
  auto solve = [&](const BoxDomain& b) {
    return top_eigenvalue(sub_operator(parent_potential, b, truncation_for(b, opts.modes_per_unit)),
                          opts.solver);
  };
  for (const auto& c : cells_boxes) rep.cells.push_back(solve(c));
  for (const auto& t : part.overlapping_tiles(box)) rep.tiles.push_back(solve(t));

  for (double c : rep.cells)
    if (c > rep.parent[0] + opts.slack) ++rep.monotone_violations;
  const double tile_max = *std::max_element(rep.tiles.begin(), rep.tiles.end());
  if (rep.parent[0] > tile_max + rep.phi_sup + opts.slack) ++rep.upper_violations;
  std::vector<double> sorted = rep.cells;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (int n = 0; n < levels; ++n)
    if (rep.parent[n] < sorted[n] - opts.slack) ++rep.lower_violations;
  return rep;
}

}  // namespace anderson
