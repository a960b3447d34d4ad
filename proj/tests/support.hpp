#ifndef ORTHOQ_TESTS_SUPPORT_HPP
#define ORTHOQ_TESTS_SUPPORT_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "orthoq/rng.hpp"

namespace testsupport {

// Independent nested central differencing used as the derivative oracle in
// the test suites (kept separate from the library's own difference helper).
inline double central_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, const std::vector<int>& labels,
                           std::size_t pos, double h) {
  if (pos == labels.size()) return f(x);
  Eigen::VectorXd xp = x, xm = x;
  xp[labels[pos] - 1] += h;
  xm[labels[pos] - 1] -= h;
  return (central_diff(f, xp, labels, pos + 1, h) - central_diff(f, xm, labels, pos + 1, h)) /
         (2.0 * h);
}

inline double derivative_oracle(const std::function<double(const Eigen::VectorXd&)>& f,
                                const Eigen::VectorXd& x, const std::vector<int>& labels) {
  const double h =
      std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (static_cast<double>(labels.size()) + 4.0)) *
      (1.0 + x.norm());
  // two Richardson levels on the h^2 ladder
  const double d1 = central_diff(f, x, labels, 0, h);
  const double d2 = central_diff(f, x, labels, 0, h / 2.0);
  const double d4 = central_diff(f, x, labels, 0, h / 4.0);
  const double r1 = (4.0 * d2 - d1) / 3.0;
  const double r2 = (4.0 * d4 - d2) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

inline Eigen::MatrixXd random_panel(int n, int t, double eta_sd, double sigma, orthoq::Rng& rng) {
  Eigen::MatrixXd y(n, t);
  for (int i = 0; i < n; ++i) {
    const double eta = eta_sd * rng.normal();
    for (int j = 0; j < t; ++j) y(i, j) = eta + sigma * rng.normal();
  }
  return y;
}

}  // namespace testsupport

#endif
