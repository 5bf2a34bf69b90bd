#pragma once

#include <span>
#include <vector>

// Legendre-series helpers shared by the kernel, quadrature and profile code.
// A series is a coefficient vector c with f(x) = sum_k c[k] P_k(x).
namespace flock::legendre {

struct BasisValues {
  std::vector<double> p;    // P_k(x)
  std::vector<double> dp;   // P_k'(x)
  std::vector<double> d2p;  // P_k''(x)
};

// P_0..P_n and their first two derivatives at x (valid on the closed interval).
BasisValues basis(int n, double x);

// P_0..P_n at x, written into out (size n + 1).
void values(int n, double x, std::span<double> out);

double evaluate(std::span<const double> c, double x);
double evaluate_derivative(std::span<const double> c, double x);
double evaluate_second_derivative(std::span<const double> c, double x);

// Coefficients of f'. Result has the same length as c (last entry zero).
std::vector<double> derivative(std::span<const double> c);

// Coefficients of an antiderivative F with F(anchor) = value_at_anchor.
std::vector<double> antiderivative(std::span<const double> c, double anchor = 0.0,
                                   double value_at_anchor = 0.0);

}  // namespace flock::legendre
