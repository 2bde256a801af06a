#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "qems/error.hpp"
#include "qems/ode.hpp"

using namespace qems;

TEST_CASE("dopri5 on exponential decay hits the grid") {
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 5.0};
  std::vector<double> got(grid.size());
  Eigen::VectorXd y0(1);
  y0 << 1.0;
  const auto stats = integrate_dopri5(
      [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = -y; }, y0, 0.0, grid,
      StepControl{}, [&](std::size_t i, double, const Eigen::VectorXd& y) { got[i] = y[0]; });
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(got[i] - std::exp(-grid[i])) < 1e-8 * std::exp(-grid[i]) + 1e-10);
  CHECK(stats.accepted > 0);
}

TEST_CASE("dopri5 on a complex rotation keeps the modulus") {
  const double w = 2.0 * M_PI * 3.0;
  std::vector<double> grid;
  for (int k = 1; k <= 100; ++k) grid.push_back(0.01 * k);
  Eigen::VectorXcd y0(1);
  y0 << 1.0;
  double worst = 0.0;
  integrate_dopri5(
      [w](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
        dy = std::complex<double>(0.0, w) * y;
      },
      y0, 0.0, grid, StepControl{},
      [&](std::size_t, double t, const Eigen::VectorXcd& y) {
        worst = std::max(worst, std::abs(y[0] - std::exp(std::complex<double>(0.0, w * t))));
      });
  CHECK(worst < 1e-7);
}

TEST_CASE("dopri5 reports step underflow at a blow-up") {
  // y' = y^2, y(0) = 1 diverges at t = 1.
  const std::vector<double> grid{2.0};
  Eigen::VectorXd y0(1);
  y0 << 1.0;
  bool thrown = false;
  try {
    integrate_dopri5([](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = y.cwiseProduct(y); },
                     y0, 0.0, grid, StepControl{}, [](std::size_t, double, const Eigen::VectorXd&) {});
  } catch (const IntegrationError& e) {
    thrown = e.code() == ErrorCode::step_underflow && std::abs(e.time() - 1.0) < 1e-3;
  }
  CHECK(thrown);
}
