#pragma once

#include <functional>
#include <vector>

#include "cansys/algebra.hpp"

namespace cansys {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre rule of the given order; cached, thread safe.
const GaussRule& gauss_legendre(int order);

struct QuadratureOptions {
  int initial_order = 20;
  int max_doublings = 5;
  double rel_tol = 1e-12;
  int panels = 1;
};

/// Integrates a matrix valued function over [a, b] with Gauss-Legendre on
/// `panels` equal panels, doubling the order until two successive estimates
/// agree. Throws NoConvergence.
Matrix integrate(const std::function<Matrix(double)>& f, double a, double b,
                 const QuadratureOptions& opts = {});

/// Fixed-order composite Gauss-Legendre without convergence control.
Matrix integrate_fixed(const std::function<Matrix(double)>& f, double a, double b, int order,
                       int panels = 1);

}  // namespace cansys
