#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "qems/dynamics_full.hpp"
#include "qems/error.hpp"
#include "qems/moments.hpp"

using namespace qems;

namespace {

SystemParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.5);
  SystemParams p;
  p.delta = u(rng) - 0.75;
  p.kappa = u(rng);
  p.gamma_a = u(rng);
  p.nbar_a0 = u(rng);
  p.mu1 = u(rng);
  p.mu2 = u(rng) * 0.5;
  return p;
}

oracle::Rates rates(const SystemParams& p) {
  return {p.delta, p.kappa, p.gamma_a, p.nbar_a0, p.mu1, p.mu2};
}

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("fast generator matches the operator-built generator and the Liouvillian") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const int na = 2 + rep % 4, nb = 2 + (rep / 4) % 3;
    const SystemParams p = random_params(rng);
    const ComplexMatrix r = oracle::random_density(na * nb, rng);
    const ComplexMatrix fast = lindblad_rhs(p, r, na, nb);
    const ComplexMatrix ref = lindblad_rhs_reference(p, r, na, nb);
    CHECK(max_abs(fast - ref) < 1e-12);

    const oracle::Mat l = oracle::liouvillian(rates(p), na, nb);
    const int d = na * nb;
    Eigen::VectorXcd w = l * Eigen::Map<const Eigen::VectorXcd>(r.data(), d * d);
    CHECK(max_abs(fast - Eigen::Map<ComplexMatrix>(w.data(), d, d)) < 1e-12);

    CHECK(std::abs(fast.trace()) < 1e-10);
    CHECK(max_abs(fast - fast.adjoint()) < 1e-10);
  }
}

TEST_CASE("generator edge cases") {
  std::mt19937_64 rng(2);
  const ComplexMatrix r = oracle::random_density(12, rng);
  CHECK(max_abs(lindblad_rhs(SystemParams{}, r, 3, 4)) == 0.0);

  // Thermal oscillator is the bath fixed point when decoupled.
  SystemParams p;
  p.gamma_a = 0.7;
  p.nbar_a0 = 1.3;
  p.delta = 0.4;
  const ComplexMatrix rb = oracle::random_density(3, rng);
  const ComplexMatrix joint = tensor(thermal_state(8, 1.3), DensityMatrix(rb)).matrix();
  const ComplexMatrix drho = lindblad_rhs(p, joint, 8, 3);
  CHECK(max_abs(trace_out_right(drho, 8, 3)) < 1e-14);
  CHECK(max_abs(drho) < 1e-14);

  CHECK_THROWS_AS(lindblad_rhs(p, r, 4, 4), Error);
}

TEST_CASE("excitation flows from b to a with curvature 2 kappa^2") {
  // Exact diagonalization of H/ħ = -κ(a†b + ab†) on 3x3 levels.
  const double kappa = 2.0 * M_PI * 1e3;
  const int n = 3;
  const oracle::Mat a = oracle::kron(oracle::lower(n), oracle::Mat::Identity(n, n));
  const oracle::Mat b = oracle::kron(oracle::Mat::Identity(n, n), oracle::lower(n));
  const oracle::Mat h = -kappa * (a.adjoint() * b + a * b.adjoint());
  Eigen::SelfAdjointEigenSolver<oracle::Mat> eig(h);
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(n * n);
  psi0(0 * n + 1) = 1.0;  // |0>_a |1>_b
  const oracle::Mat na = a.adjoint() * a;
  const auto n_a = [&](double t) {
    const Eigen::VectorXcd phase =
        (eig.eigenvalues().cast<oracle::cd>() * oracle::cd(0.0, -t)).array().exp();
    const Eigen::VectorXcd psi =
        eig.eigenvectors() * phase.asDiagonal() * eig.eigenvectors().adjoint() * psi0;
    return (psi.adjoint() * na * psi)(0, 0).real();
  };
  const double dt = 1e-7;
  const double second_fd = (n_a(dt) - 2.0 * n_a(0.0) + n_a(-dt)) / (dt * dt);
  CHECK(second_fd == doctest::Approx(2.0 * kappa * kappa).epsilon(1e-5));

  SystemParams p;
  p.kappa = kappa;
  const ComplexMatrix r0 = tensor(fock_state(n, 0), fock_state(n, 1)).matrix();
  const ComplexMatrix d1 = lindblad_rhs(p, r0, n, n);
  const ComplexMatrix d2 = lindblad_rhs(p, d1, n, n);
  const Operator num_a = tensor(number(n), identity(n));
  CHECK(std::abs(expectation(num_a, d1)) < 1e-9);
  CHECK(expectation(num_a, d2).real() == doctest::Approx(second_fd).epsilon(1e-5));
  CHECK(expectation(num_a, d2).real() > 0.0);
}

TEST_CASE("evolve matches the Liouvillian exponential") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    const int na = 3, nb = 3;
    const SystemParams p = random_params(rng);
    const DensityMatrix r0(oracle::random_density(na * nb, rng));
    const std::vector<double> grid{0.5, 1.0, 2.0};
    const Evolution ev = evolve(r0, {na, nb}, p, 2.0, grid);
    const oracle::Mat want = oracle::propagate(oracle::liouvillian(rates(p), na, nb), r0.matrix(), 2.0);
    CHECK(max_abs(ev.final_state.matrix() - want) < 1e-7);
    const Observables o = observe_joint(want, {na, nb});
    CHECK(std::abs(ev.trajectory.samples.back().nbar_a - o.nbar_a) < 1e-7);
    CHECK(std::abs(ev.trajectory.samples.back().im_c - o.im_c) < 1e-7);
  }
}

TEST_CASE("single-mode amplitude damping") {
  SystemParams p;
  p.gamma_a = 1.0;
  const DensityMatrix r0 = tensor(fock_state(2, 1), fock_state(2, 0));
  const std::vector<double> grid = uniform_grid(5.0, 51);
  const Evolution ev = evolve(r0, {2, 2}, p, 5.0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(ev.trajectory.samples[i].nbar_a - std::exp(-grid[i])) < 1e-6);
}

TEST_CASE("single-excitation swap is sin^2") {
  SystemParams p;
  p.kappa = 2.0 * M_PI * 52.5e3;
  const DensityMatrix r0 = tensor(fock_state(3, 0), fock_state(3, 1));
  const double t_end = 2.0 * M_PI / p.kappa;
  const std::vector<double> grid = uniform_grid(t_end, 101);
  const Evolution ev = evolve(r0, {3, 3}, p, t_end, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = std::sin(p.kappa * grid[i]);
    CHECK(std::abs(ev.trajectory.samples[i].nbar_a - s * s) < 1e-6);
  }
}

TEST_CASE("total excitation is conserved without damping") {
  std::mt19937_64 rng(6);
  SystemParams p;
  p.kappa = 1.3;
  p.delta = 0.4;
  const DensityMatrix r0(oracle::random_density(16, rng));
  const std::vector<double> grid = uniform_grid(6.0, 61);
  const Evolution ev = evolve(r0, {4, 4}, p, 6.0, grid);
  const double total0 = ev.trajectory.samples.front().nbar_a + ev.trajectory.samples.front().nbar_b;
  for (const auto& s : ev.trajectory.samples) {
    CHECK(std::abs(s.nbar_a + s.nbar_b - total0) < 1e-8);
    CHECK(s.trace_error <= 1e-9);
    CHECK(s.hermiticity_error <= 1e-10);
  }
}

TEST_CASE("decoupled oscillator relaxes to the bath state") {
  SystemParams p;
  p.gamma_a = 1.0;
  p.nbar_a0 = 0.5;
  const int na = 16;
  const DensityMatrix r0 = tensor(fock_state(na, 3), fock_state(2, 0));
  const std::vector<double> grid{25.0};
  const Evolution ev = evolve(r0, {na, 2}, p, 25.0, grid);
  const ComplexMatrix ra = trace_out_right(ev.final_state.matrix(), na, 2);
  const ComplexMatrix diff = ra - thermal_state(na, 0.5).matrix();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (diff + diff.adjoint()));
  const double trace_distance = 0.5 * es.eigenvalues().cwiseAbs().sum();
  CHECK(trace_distance < 1e-4);
}

TEST_CASE("thermal exchange at small occupation follows the closed form") {
  SystemParams p;
  p.kappa = 1.0;
  p.gamma_a = 0.2;
  p.nbar_a0 = 0.5;
  const int n = 14;
  const DensityMatrix r0 = tensor(thermal_state(n, 0.5), thermal_state(n, 0.0));
  const double period = M_PI / omega_gamma(p.kappa, p.gamma_a).real();
  const std::vector<double> grid = uniform_grid(period, 41);
  EvolveOptions opt;
  opt.positivity_cadence = 10;
  const Evolution ev = evolve(r0, {n, n}, p, period, grid, opt);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(ev.trajectory.samples[i].nbar_b -
                   nbar_b_analytic(grid[i], 0.5, 0.0, p.kappa, p.gamma_a)) < 1e-3);
    CHECK(std::abs(ev.trajectory.samples[i].nbar_a -
                   nbar_a_analytic(grid[i], 0.5, 0.0, p.kappa, p.gamma_a)) < 1e-3);
    CHECK(ev.trajectory.samples[i].min_eigenvalue.value_or(0.0) >= -1e-8);
  }
}

TEST_CASE("positivity violations are reported with their time") {
  ComplexMatrix bad = ComplexMatrix::Zero(4, 4);
  bad(0, 0) = 1.1;
  bad(1, 1) = -0.1;
  const std::vector<double> grid{0.0, 1.0};
  SystemParams p;
  p.kappa = 1.0;
  bool caught = false;
  try {
    evolve(DensityMatrix(bad), {2, 2}, p, 1.0, grid);
  } catch (const IntegrationError& e) {
    caught = e.code() == ErrorCode::positivity_violation && e.time() == 0.0;
  }
  CHECK(caught);
}

TEST_CASE("evolve argument checks") {
  const DensityMatrix r0 = tensor(fock_state(2, 0), fock_state(2, 0));
  const std::vector<double> grid{1.0};
  CHECK_THROWS_AS(evolve(r0, {3, 2}, SystemParams{}, 1.0, grid), Error);
  CHECK_THROWS_AS(evolve(r0, {2, 2}, SystemParams{}, 0.0, grid), Error);
  CHECK_THROWS_AS(evolve(r0, {2, 2}, SystemParams{}, 0.5, grid), Error);
  SystemParams neg;
  neg.gamma_a = -1.0;
  CHECK_THROWS_AS(evolve(r0, {2, 2}, neg, 1.0, grid), Error);
  CHECK(estimate_cost({25, 25}).bytes > 0.0);
}
