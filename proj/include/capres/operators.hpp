#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "capres/kernels/kernels.hpp"
#include "capres/model.hpp"

namespace capres {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Monomial absorber: Re W = strength * max(|x| - R1, 0)^power,
/// Im W = imagScale * sqrt(Re W).
struct CapProfile {
  double R1 = 3.0;
  double R2 = 4.0;
  double delta0 = 0.1;
  int power = 2;
  double strength = 1.0;
  double imagScale = 0.0;
  double imagConstC = 1.0;

  double re_w(double x) const;
  double im_w(double x) const;
};

enum class CapRegime {
  caseA,  // R0' < R1: absorber entirely in the free region
  caseB,  // R1 <= R0': absorber overlaps the non-free region
};

struct CapVerdict : ValidationVerdict {
  CapRegime regime = CapRegime::caseA;
};

CapVerdict validate_cap(const CapProfile& c, const SemiclassicalModel& m);

enum class ScalingShape {
  smoothStep,    // theta0 * s((r - B) / (delta/2)); reaches theta0 at B + delta/2
  exponentialK,  // theta0 * exp(-(r - B)^(-k)) for r > B
  uniform,       // theta0 everywhere; test mode only (global rotation)
};

struct ScalingProfile {
  double B = 3.0;
  double delta = 1.0;
  double theta0 = 0.2;
  double k = 2.0;
  ScalingShape shape = ScalingShape::smoothStep;

  double theta(double r) const;
  double d1(double r) const;
  double d2(double r) const;
  /// Third derivative; closed form for exponentialK only (zero for the others
  /// outside the ramp, finite differences of d2 inside the smoothStep ramp).
  double d3(double r) const;
};

enum class OperatorKind { dirichletSelfAdjoint, cap, scaled, general };

/// Dense complex realization of P_R, Q_R or P_theta on a Dirichlet grid.
/// Immutable after assembly.
struct DiscreteOperator {
  ComplexMatrix matrix;
  std::optional<Grid> grid;
  OperatorKind kind = OperatorKind::general;
  double h = 0.0;
  /// All assembled operators are tridiagonal; generic matrices are not.
  bool tridiagonal = false;

  Eigen::Index size() const { return matrix.rows(); }
  /// Copies of the three bands; requires tridiagonal.
  struct Bands {
    std::vector<cplx> lower, diag, upper;
    kernels::TridiagonalView view() const { return {lower, diag, upper}; }
  };
  Bands bands() const;
  double norm_inf() const;
};

/// Wraps an arbitrary square matrix (kind = general).
DiscreteOperator make_general_operator(ComplexMatrix a);

DiscreteOperator assemble_p_dirichlet(const SemiclassicalModel& m, const Grid& g);
DiscreteOperator assemble_q_cap(const SemiclassicalModel& m, const Grid& g, const CapProfile& c);
DiscreteOperator assemble_p_theta(const SemiclassicalModel& m, const Grid& g, const ScalingProfile& s);

/// g(r) = -i (r theta'' + theta') e^{-i theta} / (1 + i r theta')^3
cplx eval_g(const ScalingProfile& s, double r);

struct ThetaInequalityReport {
  double maxViolation = 0.0;
  double argmax = 0.0;
  bool pass = false;
};

/// Samples L(r) = theta' + |theta''| + |theta'''| - h^-2 theta / C - exp(-h^(-2/3 + eps))
/// on `samples` equispaced points of (B, B + 1/C]; pass iff max L <= 0.
ThetaInequalityReport theta_derivative_inequality_check(const ScalingProfile& s, double h,
                                                        double Cbound, double eps,
                                                        int samples = 100000);

/// Matrix Market "coordinate complex general", 1-based, nonzeros only.
void write_matrix_market(std::ostream& os, const DiscreteOperator& op);
DiscreteOperator read_matrix_market(std::istream& is);

}  // namespace capres
