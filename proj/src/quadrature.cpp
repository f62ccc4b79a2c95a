#include "cansys/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace cansys {

namespace {

GaussRule build_rule(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guesses.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussRule>(build_rule(order));
  return *slot;
}

Matrix integrate_fixed(const std::function<Matrix(double)>& f, double a, double b, int order,
                       int panels) {
  const GaussRule& rule = gauss_legendre(order);
  const double h = (b - a) / panels;
  Matrix sum;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double half = 0.5 * h, mid = lo + half;
    for (int i = 0; i < order; ++i) {
      Matrix v = f(mid + half * rule.nodes[i]) * (half * rule.weights[i]);
      if (sum.size() == 0) {
        sum = v;
      } else {
        sum += v;
      }
    }
  }
  return sum;
}

Matrix integrate(const std::function<Matrix(double)>& f, double a, double b,
                 const QuadratureOptions& opts) {
  if (b == a) {
    Matrix probe = f(a);
    return Matrix::Zero(probe.rows(), probe.cols());
  }
  int order = opts.initial_order;
  Matrix prev = integrate_fixed(f, a, b, order, opts.panels);
  // Scale for the relative test: integral of entrywise magnitudes.
  const double scale =
      integrate_fixed([&](double x) { return Matrix(f(x).cwiseAbs().cast<cplx>()); }, a, b, order,
                      opts.panels)
          .norm();
  for (int d = 0; d < opts.max_doublings; ++d) {
    order *= 2;
    Matrix next = integrate_fixed(f, a, b, order, opts.panels);
    const double diff = (next - prev).norm();
    if (diff <= opts.rel_tol * std::max(next.norm(), scale) || diff == 0.0) return next;
    prev = std::move(next);
  }
  throw Error(ErrorKind::NoConvergence, "Gauss-Legendre quadrature did not converge");
}

}  // namespace cansys
