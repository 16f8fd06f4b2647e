#pragma once

#include <span>
#include <vector>

#include "capres/types.hpp"

namespace capres {

/// Dirichlet box [-R, R] with N interior nodes x_j = -R + j dx, j = 1..N.
struct Grid {
  double R = 0.0;
  int N = 0;
  double dx = 0.0;

  /// Zero-based: node(0) = -R + dx.
  double node(int j) const { return -R + static_cast<double>(j + 1) * dx; }
  std::vector<double> nodes() const;
  /// Index of the node closest to x.
  int nearest_index(double x) const;
};

Grid make_grid(double R, int N);

/// Piecewise-constant potential: V(x) = values[i] on [breakpoints[i], breakpoints[i+1]),
/// zero outside the breakpoint range.
class PiecewisePotential {
 public:
  PiecewisePotential() = default;
  PiecewisePotential(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double x) const;

  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> values() const { return values_; }
  bool is_zero() const;
  /// max |breakpoint|, 0 for the zero potential.
  double support_radius() const;
  double min_value() const;

  /// Inserts a breakpoint without changing the function.
  PiecewisePotential refined(double x) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

struct SemiclassicalModel {
  double h = 0.1;
  PiecewisePotential potential;
  double R0 = 1.0;
  double R0prime = 1.0;
  double a0 = 0.5;
  double b0 = 1.5;
  int nsharp = 1;
};

ValidationVerdict validate_model(const SemiclassicalModel& m);

/// Double barrier V = 2 on 1 <= |x| <= 2, R0 = 2, R0' = 2.5, window [0.5, 1.5].
SemiclassicalModel benchmark_model(double h);

/// Smooth cutoff: 1 on |x| <= a, 0 on |x| >= b, s((b - |x|)/(b - a)) between.
class CutoffFunction {
 public:
  CutoffFunction(double a, double b);

  double a() const { return a_; }
  double b() const { return b_; }

  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

 private:
  double a_;
  double b_;
};

CutoffFunction make_cutoff(double a, double b);

}  // namespace capres
