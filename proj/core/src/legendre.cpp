#include "flock/legendre.hpp"

#include <cstddef>

namespace flock::legendre {

BasisValues basis(int n, double x) {
  const auto size = static_cast<std::size_t>(n + 1);
  BasisValues b{std::vector<double>(size, 0.0), std::vector<double>(size, 0.0),
                std::vector<double>(size, 0.0)};
  b.p[0] = 1.0;
  if (n == 0) return b;
  b.p[1] = x;
  b.dp[1] = 1.0;
  for (int k = 1; k < n; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    b.p[kk + 1] = ((2.0 * k + 1.0) * x * b.p[kk] - k * b.p[kk - 1]) / (k + 1.0);
    // P'_{k+1} = P'_{k-1} + (2k+1) P_k, regular at the endpoints.
    b.dp[kk + 1] = b.dp[kk - 1] + (2.0 * k + 1.0) * b.p[kk];
    b.d2p[kk + 1] = b.d2p[kk - 1] + (2.0 * k + 1.0) * b.dp[kk];
  }
  return b;
}

void values(int n, double x, std::span<double> out) {
  out[0] = 1.0;
  if (n == 0) return;
  out[1] = x;
  for (int k = 1; k < n; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    out[kk + 1] = ((2.0 * k + 1.0) * x * out[kk] - k * out[kk - 1]) / (k + 1.0);
  }
}

double evaluate(std::span<const double> c, double x) {
  // Clenshaw recurrence for P_{k+1} = a_k x P_k - b_k P_{k-1}.
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 0) return 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  for (int k = n; k >= 1; --k) {
    const double alpha = (2.0 * k + 1.0) / (k + 1.0) * x;
    const double beta = (k + 1.0) / (k + 2.0);
    const double b0 = c[static_cast<std::size_t>(k)] + alpha * b1 - beta * b2;
    b2 = b1;
    b1 = b0;
  }
  return c[0] + x * b1 - 0.5 * b2;
}

double evaluate_derivative(std::span<const double> c, double x) {
  const auto d = derivative(c);
  return evaluate(d, x);
}

double evaluate_second_derivative(std::span<const double> c, double x) {
  const auto d = derivative(c);
  const auto dd = derivative(d);
  return evaluate(dd, x);
}

std::vector<double> derivative(std::span<const double> c) {
  const std::size_t n = c.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  // d_{k-1} = (2k - 1) (c_k + d_{k+1} / (2k + 3)), running downwards.
  for (std::size_t k = n - 1; k >= 1; --k) {
    const double kd = static_cast<double>(k);
    const double next = (k + 1 < n) ? d[k + 1] / (2.0 * kd + 3.0) : 0.0;
    d[k - 1] = (2.0 * kd - 1.0) * (c[k] + next);
  }
  return d;
}

std::vector<double> antiderivative(std::span<const double> c, double anchor, double value_at_anchor) {
  const std::size_t n = c.size();
  std::vector<double> f(n + 1, 0.0);
  if (n == 0) return f;
  f[1] += c[0];
  for (std::size_t k = 1; k < n; ++k) {
    const double s = c[k] / (2.0 * static_cast<double>(k) + 1.0);
    f[k + 1] += s;
    f[k - 1] -= s;
  }
  f[0] += value_at_anchor - evaluate(f, anchor);
  return f;
}

}  // namespace flock::legendre
