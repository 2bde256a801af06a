#include "qems/dynamics_full.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qems/error.hpp"

namespace qems {

void SystemParams::validate() const {
  const auto ok = [](double x) { return std::isfinite(x) && x >= 0.0; };
  require(std::isfinite(delta), ErrorCode::invalid_argument, "detuning must be finite");
  require(ok(kappa), ErrorCode::invalid_argument, "kappa must be finite and >= 0");
  require(ok(gamma_a), ErrorCode::invalid_argument, "gamma_a must be finite and >= 0");
  require(ok(nbar_a0), ErrorCode::invalid_argument, "nbar_a0 must be finite and >= 0");
  require(ok(mu1) && ok(mu2), ErrorCode::invalid_argument, "ion rates must be finite and >= 0");
}

std::vector<double> uniform_grid(double t_max, int n_points) {
  require(n_points >= 2, ErrorCode::invalid_argument, "a time grid needs at least 2 points");
  require(t_max > 0.0 && std::isfinite(t_max), ErrorCode::invalid_argument,
          "grid end time must be positive");
  std::vector<double> grid(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) grid[i] = t_max * i / (n_points - 1);
  grid.back() = t_max;
  return grid;
}

namespace {

// Precomputed per-basis-state coefficients of the generator. All operators
// involved are either diagonal or shift a single Fock index, so every output
// element is a short fixed stencil over R.
class Generator {
 public:
  Generator(const SystemParams& p, const FullSpace& s)
      : na_(s.n_a_levels), nb_(s.n_b_levels), dim_(s.dim()), kappa_(p.kappa) {
    p.validate();
    const double g_down = p.gamma_a * (p.nbar_a0 + 1.0);
    const double g_up = p.gamma_a * p.nbar_a0;
    g_down_ = g_down;
    g_up_ = g_up;
    mu1_ = p.mu1;
    mu2_ = p.mu2;
    phase_.resize(dim_);
    width_.resize(dim_);
    lower_a_.resize(dim_);
    raise_a_.resize(dim_);
    lower_b_.resize(dim_);
    raise_b_.resize(dim_);
    hop_up_.resize(dim_);
    hop_down_.resize(dim_);
    for (int ia = 0; ia < na_; ++ia) {
      for (int ib = 0; ib < nb_; ++ib) {
        const int i = ia * nb_ + ib;
        const double n_a = ia, n_b = ib;
        // a a† and b b† on the truncated space vanish on the top level.
        const double aad = ia + 1 < na_ ? ia + 1.0 : 0.0;
        const double bbd = ib + 1 < nb_ ? ib + 1.0 : 0.0;
        phase_[i] = p.delta * n_a;
        width_[i] = 0.5 * (g_down * n_a + g_up * aad + p.mu1 * n_b + p.mu2 * bbd);
        lower_a_[i] = ia + 1 < na_ ? std::sqrt(ia + 1.0) : 0.0;
        raise_a_[i] = ia >= 1 ? std::sqrt(n_a) : 0.0;
        lower_b_[i] = ib + 1 < nb_ ? std::sqrt(ib + 1.0) : 0.0;
        raise_b_[i] = ib >= 1 ? std::sqrt(n_b) : 0.0;
        // Matrix elements of X = a†b + a b† connecting |i> to its neighbours
        // (ia-1, ib+1) and (ia+1, ib-1).
        hop_up_[i] = (ia >= 1 && ib + 1 < nb_) ? std::sqrt(n_a * (ib + 1.0)) : 0.0;
        hop_down_[i] = (ia + 1 < na_ && ib >= 1) ? std::sqrt((ia + 1.0) * n_b) : 0.0;
      }
    }
  }

  int dim() const { return dim_; }

  void apply(const complex* r, complex* out) const {
    const int d = dim_;
    const int s = nb_;
    const complex ik(0.0, kappa_);
    const auto at = [r, d](int i, int j) { return r[static_cast<std::size_t>(j) * d + i]; };
    for (int j = 0; j < d; ++j) {
      const complex* col = r + static_cast<std::size_t>(j) * d;
      complex* dst = out + static_cast<std::size_t>(j) * d;
      for (int i = 0; i < d; ++i) {
        complex acc = complex(-width_[i] - width_[j], -(phase_[i] - phase_[j])) * col[i];
        if (kappa_ != 0.0) {
          complex xr = 0.0, rx = 0.0;
          if (hop_up_[i] != 0.0) xr += hop_up_[i] * col[i - s + 1];
          if (hop_down_[i] != 0.0) xr += hop_down_[i] * col[i + s - 1];
          if (hop_up_[j] != 0.0) rx += hop_up_[j] * at(i, j - s + 1);
          if (hop_down_[j] != 0.0) rx += hop_down_[j] * at(i, j + s - 1);
          acc += ik * (xr - rx);
        }
        if (g_down_ != 0.0 && lower_a_[i] != 0.0 && lower_a_[j] != 0.0)
          acc += g_down_ * lower_a_[i] * lower_a_[j] * at(i + s, j + s);
        if (g_up_ != 0.0 && raise_a_[i] != 0.0 && raise_a_[j] != 0.0)
          acc += g_up_ * raise_a_[i] * raise_a_[j] * at(i - s, j - s);
        if (mu1_ != 0.0 && lower_b_[i] != 0.0 && lower_b_[j] != 0.0)
          acc += mu1_ * lower_b_[i] * lower_b_[j] * at(i + 1, j + 1);
        if (mu2_ != 0.0 && raise_b_[i] != 0.0 && raise_b_[j] != 0.0)
          acc += mu2_ * raise_b_[i] * raise_b_[j] * at(i - 1, j - 1);
        dst[i] = acc;
      }
    }
  }

 private:
  int na_, nb_, dim_;
  double kappa_;
  double g_down_ = 0.0, g_up_ = 0.0, mu1_ = 0.0, mu2_ = 0.0;
  std::vector<double> phase_, width_;
  std::vector<double> lower_a_, raise_a_, lower_b_, raise_b_;
  std::vector<double> hop_up_, hop_down_;
};

void require_space(const ComplexMatrix& rho, const FullSpace& space) {
  require(space.n_a_levels >= 2 && space.n_b_levels >= 2, ErrorCode::invalid_argument,
          "each mode needs at least 2 levels");
  require(rho.rows() == space.dim() && rho.cols() == space.dim(), ErrorCode::dimension_mismatch,
          "density matrix dimension " + std::to_string(rho.rows()) + " does not match " +
              std::to_string(space.n_a_levels) + " x " + std::to_string(space.n_b_levels));
}

Observables observe_raw(const complex* r, const FullSpace& space) {
  const int d = space.dim();
  const int s = space.n_b_levels;
  const auto at = [r, d](int i, int j) { return r[static_cast<std::size_t>(j) * d + i]; };
  Observables o;
  complex trace = 0.0, c = 0.0;
  double na = 0.0, nb = 0.0;
  for (int ia = 0; ia < space.n_a_levels; ++ia) {
    for (int ib = 0; ib < s; ++ib) {
      const int i = ia * s + ib;
      const double p = at(i, i).real();
      trace += at(i, i);
      na += ia * p;
      nb += ib * p;
      // <a†b> = sum over |i> of <i| a†b R |i>, with a†b|ia-1, ib+1> ∝ |ia, ib>.
      if (ia >= 1 && ib + 1 < s) c += std::sqrt(ia * (ib + 1.0)) * at(i - s + 1, i);
    }
  }
  o.nbar_a = na;
  o.nbar_b = nb;
  o.re_c = c.real();
  o.im_c = c.imag();
  o.trace_error = std::abs(trace - 1.0);
  double herm = 0.0;
  for (int j = 0; j < d; ++j)
    for (int i = j; i < d; ++i) herm = std::max(herm, std::abs(at(i, j) - std::conj(at(j, i))));
  o.hermiticity_error = herm;
  return o;
}

}  // namespace

ComplexMatrix lindblad_rhs(const SystemParams& params, const ComplexMatrix& rho, int n_a_levels,
                           int n_b_levels) {
  const FullSpace space{n_a_levels, n_b_levels};
  require_space(rho, space);
  const Generator gen(params, space);
  ComplexMatrix out(space.dim(), space.dim());
  gen.apply(rho.data(), out.data());
  return out;
}

ComplexMatrix lindblad_rhs_reference(const SystemParams& params, const ComplexMatrix& rho,
                                     int n_a_levels, int n_b_levels) {
  const FullSpace space{n_a_levels, n_b_levels};
  require_space(rho, space);
  params.validate();
  const Operator a = tensor(destroy(n_a_levels), identity(n_b_levels));
  const Operator b = tensor(identity(n_a_levels), destroy(n_b_levels));
  const Operator ad = a.adjoint();
  const Operator bd = b.adjoint();
  const complex i(0.0, 1.0);
  ComplexMatrix out = -i * params.delta * commutator(ad * a, rho);
  out += i * params.kappa * commutator(ad * b + a * bd, rho);
  out += params.gamma_a * (params.nbar_a0 + 1.0) * dissipator(a, rho);
  out += params.gamma_a * params.nbar_a0 * dissipator(ad, rho);
  out += params.mu1 * dissipator(b, rho);
  out += params.mu2 * dissipator(bd, rho);
  return out;
}

Observables observe_joint(const ComplexMatrix& rho, const FullSpace& space) {
  require_space(rho, space);
  return observe_raw(rho.data(), space);
}

Evolution evolve(const DensityMatrix& rho0, const FullSpace& space, const SystemParams& params,
                 double t_final, std::span<const double> output_grid,
                 const EvolveOptions& options) {
  require_space(rho0.matrix(), space);
  require(t_final > 0.0 && std::isfinite(t_final), ErrorCode::invalid_argument,
          "t_final must be positive");
  require(!output_grid.empty() && output_grid.back() <= t_final, ErrorCode::invalid_argument,
          "output grid must be non-empty and end at or before t_final");
  const Generator gen(params, space);
  const int d = space.dim();

  std::vector<double> grid(output_grid.begin(), output_grid.end());
  const std::size_t n_out = grid.size();
  if (grid.back() < t_final) grid.push_back(t_final);

  Evolution result{Trajectory{}, rho0, {}};
  result.trajectory.times.assign(output_grid.begin(), output_grid.end());
  result.trajectory.samples.resize(n_out);

  Eigen::VectorXcd y = Eigen::Map<const Eigen::VectorXcd>(rho0.matrix().data(),
                                                          static_cast<Eigen::Index>(d) * d);
  auto rhs = [&gen](double, const Eigen::VectorXcd& v, Eigen::VectorXcd& dv) {
    gen.apply(v.data(), dv.data());
  };

  ComplexMatrix final_state;
  auto observe = [&](std::size_t idx, double t, const Eigen::VectorXcd& v) {
    if (idx == grid.size() - 1) final_state = Eigen::Map<const ComplexMatrix>(v.data(), d, d);
    if (idx >= n_out) return;
    Observables o = observe_raw(v.data(), space);
    const int cadence = options.positivity_cadence;
    if (cadence > 0 && (idx % static_cast<std::size_t>(cadence) == 0 || idx + 1 == n_out)) {
      const Eigen::Map<const ComplexMatrix> r(v.data(), d, d);
      const ComplexMatrix herm = 0.5 * (r + r.adjoint());
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(herm, Eigen::EigenvaluesOnly);
      o.min_eigenvalue = solver.eigenvalues().minCoeff();
      if (*o.min_eigenvalue < -options.positivity_tolerance) {
        throw IntegrationError(ErrorCode::positivity_violation,
                               "density matrix lost positivity (min eigenvalue " +
                                   std::to_string(*o.min_eigenvalue) + ") at t = " +
                                   std::to_string(t) + " s",
                               t);
      }
    }
    result.trajectory.samples[idx] = o;
  };

  result.stats = integrate_dopri5(rhs, std::move(y), 0.0, grid, options.step, observe);
  result.final_state = DensityMatrix(std::move(final_state), DensityTolerance{1e-10, 1e-6});
  return result;
}

CostEstimate estimate_cost(const FullSpace& space) {
  const double elements = static_cast<double>(space.dim()) * space.dim();
  // Eleven state-sized work vectors in the integrator plus the initial state.
  return CostEstimate{12.0 * elements * sizeof(complex), 90.0 * elements};
}

}  // namespace qems
