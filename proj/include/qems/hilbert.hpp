#pragma once

// Truncated Fock-space linear algebra. Every operator is a dense complex
// matrix in the number basis |0>, ..., |N-1>. Joint spaces are built with
// tensor(), with the left factor varying slowest (index = i_left * N_right +
// i_right).

#include <complex>

#include <Eigen/Dense>

namespace qems {

using complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

class Operator {
 public:
  /// Throws invalid_argument unless the matrix is square with dim >= 2.
  explicit Operator(ComplexMatrix entries);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const ComplexMatrix& matrix() const { return entries_; }

  Operator adjoint() const;

  friend Operator operator+(const Operator& lhs, const Operator& rhs);
  friend Operator operator-(const Operator& lhs, const Operator& rhs);
  friend Operator operator*(const Operator& lhs, const Operator& rhs);
  friend Operator operator*(complex scale, const Operator& op);

 private:
  ComplexMatrix entries_;
};

struct DensityTolerance {
  double hermiticity = 1e-12;
  double trace = 1e-9;
};

class DensityMatrix {
 public:
  /// Validates square shape, Hermiticity and unit trace. Positivity is not
  /// checked here; see min_eigenvalue().
  explicit DensityMatrix(ComplexMatrix entries, DensityTolerance tol = {});

  int dim() const { return static_cast<int>(entries_.rows()); }
  const ComplexMatrix& matrix() const { return entries_; }

  /// Largest elementwise |rho - rho^dagger|.
  double hermiticity_error() const;
  double trace_error() const;
  double min_eigenvalue() const;

 private:
  ComplexMatrix entries_;
};

Operator identity(int n_levels);
Operator destroy(int n_levels);
Operator create(int n_levels);
Operator number(int n_levels);

/// Thermal state renormalized on the truncated space: p_n proportional to
/// (nbar / (1 + nbar))^n.
DensityMatrix thermal_state(int n_levels, double nbar);
DensityMatrix fock_state(int n_levels, int n);

Operator tensor(const Operator& a, const Operator& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

complex expectation(const Operator& op, const DensityMatrix& rho);
complex expectation(const Operator& op, const ComplexMatrix& rho);

/// D[O]rho = O rho O^dagger - (O^dagger O rho + rho O^dagger O) / 2.
ComplexMatrix dissipator(const Operator& op, const ComplexMatrix& rho);
ComplexMatrix dissipator(const Operator& op, const DensityMatrix& rho);

ComplexMatrix commutator(const Operator& op, const ComplexMatrix& rho);

/// Partial traces over a bipartite (left ⊗ right) space.
ComplexMatrix trace_out_right(const ComplexMatrix& rho, int n_left, int n_right);
ComplexMatrix trace_out_left(const ComplexMatrix& rho, int n_left, int n_right);

/// Probability mass of an untruncated thermal state at levels >= n_levels.
double thermal_tail_mass(double nbar, int n_levels);

/// Smallest truncation (never below 2) whose thermal tail mass is within
/// tail_mass_bound.
int truncation_for(double nbar, double tail_mass_bound);

struct FockTruncation {
  int n_levels = 2;
  double tail_mass_bound = 0.0;

  static FockTruncation for_thermal(double nbar, double tail_mass_bound);
};

}  // namespace qems
