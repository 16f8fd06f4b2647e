#include "capres/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "capres/errors.hpp"
#include "capres/smooth_step.hpp"

namespace capres {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalidArgument: return "invalid-argument";
    case ErrorKind::invalidConfiguration: return "invalid-configuration";
    case ErrorKind::invalidInput: return "invalid-input";
    case ErrorKind::invalidWindow: return "invalid-window";
    case ErrorKind::invalidCutoff: return "invalid-cutoff";
    case ErrorKind::domainTooSmall: return "domain-too-small";
    case ErrorKind::resourceLimit: return "resource-limit";
    case ErrorKind::numericalFailure: return "numerical-failure";
    case ErrorKind::contourTouchesSpectrum: return "contour-touches-spectrum";
    case ErrorKind::branchAmbiguity: return "branch-ambiguity";
    case ErrorKind::refineContour: return "refine-contour";
    case ErrorKind::noConvergence: return "no-convergence";
    case ErrorKind::noCandidates: return "no-candidates";
    case ErrorKind::independenceViolated: return "independence-violated";
    case ErrorKind::parseError: return "parse-error";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Smooth step. Written as the logistic function of q(t) = 1/t - 1/(1-t), which
// stays finite where the exponentials underflow.

namespace {

struct StepParts {
  double s;         // s(t)
  double s1m;       // 1 - s(t), computed without cancellation
  double q1;        // q'(t)
  double q2;        // q''(t)
};

StepParts step_parts(double t) {
  const double u = 1.0 - t;
  const double q = 1.0 / t - 1.0 / u;
  StepParts p{};
  if (q >= 0.0) {
    const double e = std::exp(-q);
    p.s = e / (1.0 + e);
    p.s1m = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(q);
    p.s = 1.0 / (1.0 + e);
    p.s1m = e / (1.0 + e);
  }
  p.q1 = -1.0 / (t * t) - 1.0 / (u * u);
  p.q2 = 2.0 / (t * t * t) - 2.0 / (u * u * u);
  return p;
}

}  // namespace

double SmoothStep::value(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return step_parts(t).s;
}

double SmoothStep::d1(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const auto p = step_parts(t);
  // s = 1/(1+e^q)  =>  s' = -s(1-s) q'
  return -p.s * p.s1m * p.q1;
}

double SmoothStep::d2(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const auto p = step_parts(t);
  const double ss = p.s * p.s1m;
  const double s1 = -ss * p.q1;
  return -s1 * (p.s1m - p.s) * p.q1 - ss * p.q2;
}

// ---------------------------------------------------------------------------

std::vector<double> Grid::nodes() const {
  std::vector<double> x(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) x[static_cast<std::size_t>(j)] = node(j);
  return x;
}

int Grid::nearest_index(double x) const {
  const long j = std::lround((x + R) / dx) - 1;
  return static_cast<int>(std::clamp<long>(j, 0, N - 1));
}

Grid make_grid(double R, int N) {
  if (!(R > 0.0) || !std::isfinite(R)) {
    throw Error(ErrorKind::invalidArgument, "grid half-width R must be positive");
  }
  if (N < 3) throw Error(ErrorKind::invalidArgument, "grid needs N >= 3 interior nodes");
  return Grid{R, N, 2.0 * R / static_cast<double>(N + 1)};
}

// ---------------------------------------------------------------------------

PiecewisePotential::PiecewisePotential(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty() && values_.empty()) return;
  if (breakpoints_.size() != values_.size() + 1) {
    throw Error(ErrorKind::invalidArgument,
                "piecewise potential needs exactly one value per interval (breakpoints = values + 1)");
  }
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1])) {
      throw Error(ErrorKind::invalidArgument, "breakpoints must be strictly increasing");
    }
  }
}

double PiecewisePotential::operator()(double x) const {
  if (values_.empty() || x < breakpoints_.front() || x >= breakpoints_.back()) return 0.0;
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

bool PiecewisePotential::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

double PiecewisePotential::support_radius() const {
  if (breakpoints_.empty()) return 0.0;
  return std::max(std::abs(breakpoints_.front()), std::abs(breakpoints_.back()));
}

double PiecewisePotential::min_value() const {
  double v = 0.0;
  for (double x : values_) v = std::min(v, x);
  return v;
}

PiecewisePotential PiecewisePotential::refined(double x) const {
  if (values_.empty()) return *this;
  auto bp = breakpoints_;
  auto vals = values_;
  if (x < bp.front()) {
    bp.insert(bp.begin(), x);
    vals.insert(vals.begin(), 0.0);
  } else if (x > bp.back()) {
    bp.push_back(x);
    vals.push_back(0.0);
  } else {
    const auto it = std::lower_bound(bp.begin(), bp.end(), x);
    if (*it == x) return *this;
    const auto i = static_cast<std::size_t>(it - bp.begin());
    bp.insert(it, x);
    vals.insert(vals.begin() + static_cast<long>(i), vals[i - 1]);
  }
  return PiecewisePotential(std::move(bp), std::move(vals));
}

// ---------------------------------------------------------------------------

ValidationVerdict validate_model(const SemiclassicalModel& m) {
  ValidationVerdict v;
  if (!(m.h > 0.0)) v.add("semiclassical parameter must satisfy h > 0");
  if (!(m.R0 > 0.0)) v.add("R0 must be positive");
  if (!(m.R0 <= m.R0prime)) v.add("radii must satisfy R0 <= R0'");
  if (!(m.a0 > 0.0)) v.add("energy window must satisfy 0 < a0");
  if (!(m.a0 < m.b0)) v.add("energy window must satisfy a0 < b0");
  if (m.nsharp != 1) v.add("counting exponent nsharp must be 1 in one dimension");
  if (m.potential.support_radius() > m.R0) {
    std::ostringstream os;
    os << "support exceeds R0 (outermost breakpoint at " << m.potential.support_radius()
       << " > R0 = " << m.R0 << ")";
    v.add(os.str());
  }
  return v;
}

SemiclassicalModel benchmark_model(double h) {
  SemiclassicalModel m;
  m.h = h;
  m.potential = PiecewisePotential({-2.0, -1.0, 1.0, 2.0}, {2.0, 0.0, 2.0});
  m.R0 = 2.0;
  m.R0prime = 2.5;
  m.a0 = 0.5;
  m.b0 = 1.5;
  return m;
}

// ---------------------------------------------------------------------------

CutoffFunction::CutoffFunction(double a, double b) : a_(a), b_(b) {
  if (!(a > 0.0)) throw Error(ErrorKind::invalidArgument, "cutoff plateau radius must be positive");
  if (!(a < b)) throw Error(ErrorKind::invalidArgument, "cutoff needs a < b");
}

double CutoffFunction::operator()(double x) const {
  const double r = std::abs(x);
  if (r <= a_) return 1.0;
  if (r >= b_) return 0.0;
  return SmoothStep::value((b_ - r) / (b_ - a_));
}

double CutoffFunction::derivative(double x) const {
  const double r = std::abs(x);
  if (r <= a_ || r >= b_) return 0.0;
  const double sign = x < 0.0 ? -1.0 : 1.0;
  return -sign * SmoothStep::d1((b_ - r) / (b_ - a_)) / (b_ - a_);
}

double CutoffFunction::second_derivative(double x) const {
  const double r = std::abs(x);
  if (r <= a_ || r >= b_) return 0.0;
  const double w = b_ - a_;
  return SmoothStep::d2((b_ - r) / w) / (w * w);
}

CutoffFunction make_cutoff(double a, double b) { return CutoffFunction(a, b); }

}  // namespace capres
