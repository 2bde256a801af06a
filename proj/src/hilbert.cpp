#include "qems/hilbert.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "qems/error.hpp"

namespace qems {

namespace {

void require_same_dim(int lhs, int rhs, const char* where) {
  require(lhs == rhs, ErrorCode::dimension_mismatch,
          std::string(where) + ": dimensions " + std::to_string(lhs) + " and " +
              std::to_string(rhs) + " differ");
}

void require_levels(int n_levels) {
  require(n_levels >= 2, ErrorCode::invalid_argument,
          "Fock truncation needs at least 2 levels, got " + std::to_string(n_levels));
}

}  // namespace

Operator::Operator(ComplexMatrix entries) : entries_(std::move(entries)) {
  require(entries_.rows() == entries_.cols(), ErrorCode::invalid_argument,
          "operator matrix must be square");
  require_levels(static_cast<int>(entries_.rows()));
}

Operator Operator::adjoint() const { return Operator(entries_.adjoint()); }

Operator operator+(const Operator& lhs, const Operator& rhs) {
  require_same_dim(lhs.dim(), rhs.dim(), "operator sum");
  return Operator(lhs.entries_ + rhs.entries_);
}

Operator operator-(const Operator& lhs, const Operator& rhs) {
  require_same_dim(lhs.dim(), rhs.dim(), "operator difference");
  return Operator(lhs.entries_ - rhs.entries_);
}

Operator operator*(const Operator& lhs, const Operator& rhs) {
  require_same_dim(lhs.dim(), rhs.dim(), "operator product");
  return Operator(lhs.entries_ * rhs.entries_);
}

Operator operator*(complex scale, const Operator& op) {
  return Operator(scale * op.entries_);
}

DensityMatrix::DensityMatrix(ComplexMatrix entries, DensityTolerance tol)
    : entries_(std::move(entries)) {
  require(entries_.rows() == entries_.cols() && entries_.rows() >= 1,
          ErrorCode::invalid_argument, "density matrix must be square and non-empty");
  const double herm = hermiticity_error();
  require(herm <= tol.hermiticity, ErrorCode::invariant_violation,
          "density matrix not Hermitian (max deviation " + std::to_string(herm) + ")");
  const double tr = trace_error();
  require(tr <= tol.trace, ErrorCode::invariant_violation,
          "density matrix trace deviates from 1 by " + std::to_string(tr));
}

double DensityMatrix::hermiticity_error() const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::trace_error() const { return std::abs(entries_.trace() - 1.0); }

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(entries_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Operator identity(int n_levels) {
  require_levels(n_levels);
  return Operator(ComplexMatrix::Identity(n_levels, n_levels));
}

Operator destroy(int n_levels) {
  require_levels(n_levels);
  ComplexMatrix m = ComplexMatrix::Zero(n_levels, n_levels);
  for (int n = 1; n < n_levels; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return Operator(std::move(m));
}

Operator create(int n_levels) { return destroy(n_levels).adjoint(); }

Operator number(int n_levels) {
  require_levels(n_levels);
  ComplexMatrix m = ComplexMatrix::Zero(n_levels, n_levels);
  for (int n = 0; n < n_levels; ++n) m(n, n) = static_cast<double>(n);
  return Operator(std::move(m));
}

DensityMatrix thermal_state(int n_levels, double nbar) {
  require_levels(n_levels);
  require(nbar >= 0.0 && std::isfinite(nbar), ErrorCode::invalid_argument,
          "thermal occupation must be finite and nonnegative");
  const double ratio = nbar / (1.0 + nbar);
  Eigen::VectorXd p(n_levels);
  double weight = 1.0;
  for (int n = 0; n < n_levels; ++n) {
    p(n) = weight;
    weight *= ratio;
  }
  p /= p.sum();
  return DensityMatrix(p.cast<complex>().asDiagonal().toDenseMatrix());
}

DensityMatrix fock_state(int n_levels, int n) {
  require_levels(n_levels);
  require(n >= 0 && n < n_levels, ErrorCode::invalid_argument,
          "Fock index " + std::to_string(n) + " outside [0, " + std::to_string(n_levels) + ")");
  ComplexMatrix m = ComplexMatrix::Zero(n_levels, n_levels);
  m(n, n) = 1.0;
  return DensityMatrix(std::move(m));
}

namespace {

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const Eigen::Index ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  ComplexMatrix out(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i)
    for (Eigen::Index j = 0; j < ca; ++j) out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
  return out;
}

}  // namespace

Operator tensor(const Operator& a, const Operator& b) {
  return Operator(kron(a.matrix(), b.matrix()));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(kron(a.matrix(), b.matrix()));
}

complex expectation(const Operator& op, const ComplexMatrix& rho) {
  require_same_dim(op.dim(), static_cast<int>(rho.rows()), "expectation");
  // trace(A rho) without forming the product.
  return (op.matrix().transpose().cwiseProduct(rho)).sum();
}

complex expectation(const Operator& op, const DensityMatrix& rho) {
  return expectation(op, rho.matrix());
}

ComplexMatrix dissipator(const Operator& op, const ComplexMatrix& rho) {
  require_same_dim(op.dim(), static_cast<int>(rho.rows()), "dissipator");
  const ComplexMatrix& o = op.matrix();
  const ComplexMatrix od = o.adjoint();
  const ComplexMatrix odo = od * o;
  return o * rho * od - 0.5 * (odo * rho + rho * odo);
}

ComplexMatrix dissipator(const Operator& op, const DensityMatrix& rho) {
  return dissipator(op, rho.matrix());
}

ComplexMatrix commutator(const Operator& op, const ComplexMatrix& rho) {
  require_same_dim(op.dim(), static_cast<int>(rho.rows()), "commutator");
  return op.matrix() * rho - rho * op.matrix();
}

ComplexMatrix trace_out_right(const ComplexMatrix& rho, int n_left, int n_right) {
  require(rho.rows() == Eigen::Index{n_left} * n_right && rho.cols() == rho.rows(),
          ErrorCode::dimension_mismatch, "partial trace: dimension does not factor");
  ComplexMatrix out = ComplexMatrix::Zero(n_left, n_left);
  for (int i = 0; i < n_left; ++i)
    for (int j = 0; j < n_left; ++j)
      for (int k = 0; k < n_right; ++k) out(i, j) += rho(i * n_right + k, j * n_right + k);
  return out;
}

ComplexMatrix trace_out_left(const ComplexMatrix& rho, int n_left, int n_right) {
  require(rho.rows() == Eigen::Index{n_left} * n_right && rho.cols() == rho.rows(),
          ErrorCode::dimension_mismatch, "partial trace: dimension does not factor");
  ComplexMatrix out = ComplexMatrix::Zero(n_right, n_right);
  for (int k = 0; k < n_left; ++k) out += rho.block(k * n_right, k * n_right, n_right, n_right);
  return out;
}

double thermal_tail_mass(double nbar, int n_levels) {
  require(nbar >= 0.0, ErrorCode::invalid_argument, "thermal occupation must be nonnegative");
  if (n_levels <= 0) return 1.0;
  return std::pow(nbar / (1.0 + nbar), n_levels);
}

int truncation_for(double nbar, double tail_mass_bound) {
  require(nbar >= 0.0 && std::isfinite(nbar), ErrorCode::invalid_argument,
          "thermal occupation must be finite and nonnegative");
  require(tail_mass_bound > 0.0 && tail_mass_bound < 1.0, ErrorCode::invalid_argument,
          "tail mass bound must lie in (0, 1)");
  if (nbar == 0.0) return 2;
  const double ratio = nbar / (1.0 + nbar);
  int n = static_cast<int>(std::ceil(std::log(tail_mass_bound) / std::log(ratio)));
  // Guard against rounding in the logarithms.
  while (n > 2 && thermal_tail_mass(nbar, n - 1) <= tail_mass_bound) --n;
  while (thermal_tail_mass(nbar, n) > tail_mass_bound) ++n;
  return std::max(n, 2);
}

FockTruncation FockTruncation::for_thermal(double nbar, double tail_mass_bound) {
  return FockTruncation{truncation_for(nbar, tail_mass_bound), tail_mass_bound};
}

}  // namespace qems
