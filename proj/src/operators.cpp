#include "capres/operators.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "capres/errors.hpp"
#include "capres/smooth_step.hpp"

namespace capres {

double CapProfile::re_w(double x) const {
  const double d = std::abs(x) - R1;
  if (d <= 0.0) return 0.0;
  return strength * std::pow(d, power);
}

double CapProfile::im_w(double x) const {
  if (imagScale == 0.0) return 0.0;
  return imagScale * std::sqrt(re_w(x));
}

CapVerdict validate_cap(const CapProfile& c, const SemiclassicalModel& m) {
  CapVerdict v;
  if (!(c.R1 > m.R0)) v.add("absorber must start outside supp V (R0 < R1)");
  if (!(c.R2 > c.R1)) v.add("floor radius must satisfy R2 > R1");
  if (!(c.delta0 > 0.0)) v.add("floor value delta0 must be positive");
  if (c.power < 1) v.add("absorber power p must be a positive integer");
  if (!(c.strength >= 0.0)) v.add("absorber strength must be nonnegative");
  if (!(c.imagScale >= 0.0)) v.add("imaginary scale kappa must be nonnegative");
  if (c.R2 > c.R1 && c.power >= 1 && !(c.strength * std::pow(c.R2 - c.R1, c.power) >= c.delta0)) {
    std::ostringstream os;
    os << "absorber floor too low: Re W(R2) = " << c.strength * std::pow(c.R2 - c.R1, c.power)
       << " < delta0 = " << c.delta0;
    v.add(os.str());
  }
  if (!(c.imagScale <= c.imagConstC)) {
    v.add("|Im W| <= C (Re W)^(1/2) needs kappa <= C");
  }
  v.regime = m.R0prime < c.R1 ? CapRegime::caseA : CapRegime::caseB;
  return v;
}

// ---------------------------------------------------------------------------

namespace {

struct ExpParts {
  double theta, p1, p2, p3;  // theta and derivatives of phi = t^-k
};

ExpParts exp_parts(const ScalingProfile& s, double r) {
  const double t = r - s.B;
  if (t <= 0.0) return {0.0, 0.0, 0.0, 0.0};
  const double k = s.k;
  const double phi = std::pow(t, -k);
  const double theta = s.theta0 * std::exp(-phi);
  if (theta == 0.0) return {0.0, 0.0, 0.0, 0.0};
  return {theta, -k * std::pow(t, -k - 1.0), k * (k + 1.0) * std::pow(t, -k - 2.0),
          -k * (k + 1.0) * (k + 2.0) * std::pow(t, -k - 3.0)};
}

}  // namespace

double ScalingProfile::theta(double r) const {
  switch (shape) {
    case ScalingShape::smoothStep: return theta0 * SmoothStep::value((r - B) / (0.5 * delta));
    case ScalingShape::exponentialK: return exp_parts(*this, r).theta;
    case ScalingShape::uniform: return theta0;
  }
  return 0.0;
}

double ScalingProfile::d1(double r) const {
  switch (shape) {
    case ScalingShape::smoothStep:
      return theta0 * SmoothStep::d1((r - B) / (0.5 * delta)) * (2.0 / delta);
    case ScalingShape::exponentialK: {
      const auto e = exp_parts(*this, r);
      return -e.p1 * e.theta;
    }
    case ScalingShape::uniform: return 0.0;
  }
  return 0.0;
}

double ScalingProfile::d2(double r) const {
  switch (shape) {
    case ScalingShape::smoothStep:
      return theta0 * SmoothStep::d2((r - B) / (0.5 * delta)) * (4.0 / (delta * delta));
    case ScalingShape::exponentialK: {
      const auto e = exp_parts(*this, r);
      return (e.p1 * e.p1 - e.p2) * e.theta;
    }
    case ScalingShape::uniform: return 0.0;
  }
  return 0.0;
}

double ScalingProfile::d3(double r) const {
  switch (shape) {
    case ScalingShape::smoothStep: {
      const double t = (r - B) / (0.5 * delta);
      if (t <= 0.0 || t >= 1.0) return 0.0;
      const double step = 1e-5 * delta;
      return (d2(r + step) - d2(r - step)) / (2.0 * step);
    }
    case ScalingShape::exponentialK: {
      const auto e = exp_parts(*this, r);
      return (-e.p1 * e.p1 * e.p1 + 3.0 * e.p1 * e.p2 - e.p3) * e.theta;
    }
    case ScalingShape::uniform: return 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

DiscreteOperator::Bands DiscreteOperator::bands() const {
  if (!tridiagonal) throw Error(ErrorKind::invalidInput, "operator is not tridiagonal");
  const Eigen::Index n = matrix.rows();
  Bands b;
  b.diag.resize(static_cast<std::size_t>(n));
  b.lower.resize(static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)));
  b.upper.resize(b.lower.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    b.diag[static_cast<std::size_t>(i)] = matrix(i, i);
    if (i + 1 < n) {
      b.lower[static_cast<std::size_t>(i)] = matrix(i + 1, i);
      b.upper[static_cast<std::size_t>(i)] = matrix(i, i + 1);
    }
  }
  return b;
}

double DiscreteOperator::norm_inf() const {
  return matrix.cwiseAbs().rowwise().sum().maxCoeff();
}

DiscreteOperator make_general_operator(ComplexMatrix a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::invalidArgument, "operator matrix must be square");
  DiscreteOperator op;
  op.matrix = std::move(a);
  op.kind = OperatorKind::general;
  return op;
}

DiscreteOperator assemble_p_dirichlet(const SemiclassicalModel& m, const Grid& g) {
  if (!(g.R > m.R0prime)) {
    throw Error(ErrorKind::domainTooSmall, "Dirichlet box must satisfy R > R0'");
  }
  const double c = m.h * m.h / (g.dx * g.dx);
  const Eigen::Index n = g.N;
  DiscreteOperator op;
  op.matrix = ComplexMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    op.matrix(j, j) = cplx(2.0 * c + m.potential(g.node(static_cast<int>(j))), 0.0);
    if (j + 1 < n) {
      op.matrix(j, j + 1) = cplx(-c, 0.0);
      op.matrix(j + 1, j) = cplx(-c, 0.0);
    }
  }
  op.grid = g;
  op.kind = OperatorKind::dirichletSelfAdjoint;
  op.h = m.h;
  op.tridiagonal = true;
  return op;
}

DiscreteOperator assemble_q_cap(const SemiclassicalModel& m, const Grid& g, const CapProfile& c) {
  if (!(g.R > c.R2)) {
    throw Error(ErrorKind::domainTooSmall, "the absorber floor region |x| > R2 must lie inside the box");
  }
  DiscreteOperator op = assemble_p_dirichlet(m, g);
  for (Eigen::Index j = 0; j < g.N; ++j) {
    const double x = g.node(static_cast<int>(j));
    op.matrix(j, j) += cplx(c.im_w(x), -c.re_w(x));
  }
  op.kind = OperatorKind::cap;
  return op;
}

namespace {

// 1 / J(x) with J = e^{i theta(|x|)} (1 + i |x| theta'(|x|)); exactly 1 where unscaled.
cplx inverse_jacobian(const ScalingProfile& s, double x) {
  const double r = std::abs(x);
  const double th = s.theta(r);
  const double thp = s.d1(r);
  if (th == 0.0 && thp == 0.0) return cplx(1.0, 0.0);
  return 1.0 / (std::polar(1.0, th) * cplx(1.0, r * thp));
}

}  // namespace

DiscreteOperator assemble_p_theta(const SemiclassicalModel& m, const Grid& g,
                                  const ScalingProfile& s) {
  if (s.shape != ScalingShape::uniform) {
    if (!(s.B > m.R0prime)) {
      throw Error(ErrorKind::invalidConfiguration, "scaling must start in the free region (B > R0')");
    }
    if (!(g.R > s.B + s.delta)) {
      throw Error(ErrorKind::invalidConfiguration, "box must contain the scaling ramp (R > B + delta)");
    }
  }
  if (!(g.R > m.R0prime)) {
    throw Error(ErrorKind::invalidConfiguration, "Dirichlet box must satisfy R > R0'");
  }
  if (!(s.theta0 >= 0.0 && s.theta0 <= 0.3)) {
    throw Error(ErrorKind::invalidConfiguration, "theta0 must lie in [0, 0.3]");
  }

  const double c = m.h * m.h / (g.dx * g.dx);
  const Eigen::Index n = g.N;
  DiscreteOperator op;
  op.matrix = ComplexMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = g.node(static_cast<int>(j));
    const cplx jn = inverse_jacobian(s, x);
    const cplx jm = inverse_jacobian(s, x - 0.5 * g.dx);
    const cplx jp = inverse_jacobian(s, x + 0.5 * g.dx);
    op.matrix(j, j) = c * (jn * (jm + jp)) + m.potential(x);
    if (j + 1 < n) op.matrix(j, j + 1) = cplx(-c, 0.0) * (jn * jp);
    if (j > 0) op.matrix(j, j - 1) = cplx(-c, 0.0) * (jn * jm);
  }
  op.grid = g;
  op.kind = OperatorKind::scaled;
  op.h = m.h;
  op.tridiagonal = true;
  return op;
}

// ---------------------------------------------------------------------------

cplx eval_g(const ScalingProfile& s, double r) {
  const double th = s.theta(r);
  const double t1 = s.d1(r);
  const double t2 = s.d2(r);
  const cplx denom = cplx(1.0, r * t1);
  return cplx(0.0, -(r * t2 + t1)) * std::polar(1.0, -th) / (denom * denom * denom);
}

ThetaInequalityReport theta_derivative_inequality_check(const ScalingProfile& s, double h,
                                                        double Cbound, double eps, int samples) {
  if (s.shape != ScalingShape::exponentialK) {
    throw Error(ErrorKind::invalidArgument, "inequality check needs the exponentialK profile");
  }
  if (!(h > 0.0) || !(Cbound > 0.0) || samples < 1) {
    throw Error(ErrorKind::invalidArgument, "inequality check needs h > 0, C > 0 and samples >= 1");
  }
  const double floor_term = std::exp(-std::pow(h, -2.0 / 3.0 + eps));
  const double width = 1.0 / Cbound;
  ThetaInequalityReport rep;
  rep.maxViolation = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= samples; ++i) {
    const double r = s.B + width * static_cast<double>(i) / static_cast<double>(samples);
    const double lhs = s.d1(r) + std::abs(s.d2(r)) + std::abs(s.d3(r));
    const double rhs = s.theta(r) / (Cbound * h * h) + floor_term;
    const double l = lhs - rhs;
    if (l > rep.maxViolation) {
      rep.maxViolation = l;
      rep.argmax = r;
    }
  }
  rep.pass = rep.maxViolation <= 0.0;
  return rep;
}

// ---------------------------------------------------------------------------

void write_matrix_market(std::ostream& os, const DiscreteOperator& op) {
  const Eigen::Index n = op.matrix.rows();
  long nnz = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (op.matrix(i, j) != cplx(0.0, 0.0)) ++nnz;
  os << "%%MatrixMarket matrix coordinate complex general\n";
  os << n << ' ' << n << ' ' << nnz << '\n';
  os << std::setprecision(17);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx v = op.matrix(i, j);
      if (v == cplx(0.0, 0.0)) continue;
      os << i + 1 << ' ' << j + 1 << ' ' << v.real() << ' ' << v.imag() << '\n';
    }
  }
}

DiscreteOperator read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket matrix coordinate complex general", 0) != 0) {
    throw Error(ErrorKind::parseError, "expected a complex general coordinate Matrix Market header");
  }
  while (std::getline(is, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream dims(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(dims >> rows >> cols >> nnz) || rows != cols || rows <= 0) {
    throw Error(ErrorKind::parseError, "bad Matrix Market size line");
  }
  ComplexMatrix a = ComplexMatrix::Zero(rows, cols);
  for (long k = 0; k < nnz; ++k) {
    long i = 0, j = 0;
    double re = 0.0, im = 0.0;
    if (!(is >> i >> j >> re >> im) || i < 1 || j < 1 || i > rows || j > cols) {
      throw Error(ErrorKind::parseError, "bad Matrix Market entry");
    }
    a(i - 1, j - 1) = cplx(re, im);
  }
  return make_general_operator(std::move(a));
}

}  // namespace capres
