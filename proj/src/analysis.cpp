#include "capres/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SVD>

#include "capres/errors.hpp"
#include "capres/kernels/kernels.hpp"

namespace capres {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::span<const cplx> span_of(const ComplexVector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

ComplexVector apply_shifted(const DiscreteOperator& p, const ComplexVector& v, double E) {
  const auto bands = p.bands();
  ComplexVector y(v.size());
  kernels::tridiag_apply(bands.view(), span_of(v), {y.data(), static_cast<std::size_t>(y.size())});
  y -= E * v;
  return y;
}

double vnorm(const ComplexVector& v) { return std::sqrt(kernels::norm2(span_of(v))); }

ComplexVector cut(const Grid& g, const ComplexVector& f, const CutoffFunction& chi) {
  ComplexVector out(f.size());
  for (Eigen::Index j = 0; j < f.size(); ++j) out[j] = chi(g.node(static_cast<int>(j))) * f[j];
  return out;
}

void check_length(const Grid& g, const ComplexVector& v) {
  if (v.size() != g.N) {
    throw Error(ErrorKind::invalidInput, "vector length does not match the grid");
  }
}

}  // namespace

std::vector<double> absorption_identity_check(const DiscreteOperator& q, const Spectrum& s,
                                              const CapProfile& c) {
  if (q.kind != OperatorKind::cap || !q.grid) {
    throw Error(ErrorKind::invalidInput, "absorption identity needs a CAP operator on a grid");
  }
  if (!s.eigenvectors) throw Error(ErrorKind::invalidInput, "spectrum carries no eigenvectors");
  const Grid& g = *q.grid;
  std::vector<double> w(static_cast<std::size_t>(g.N));
  for (int j = 0; j < g.N; ++j) w[static_cast<std::size_t>(j)] = c.re_w(g.node(j));

  const ComplexMatrix& vecs = *s.eigenvectors;
  std::vector<double> out;
  out.reserve(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const cplx z = s.eigenvalues[k];
    std::span<const cplx> f(vecs.col(static_cast<Eigen::Index>(k)).data(),
                            static_cast<std::size_t>(vecs.rows()));
    const double lhs = -z.imag() * kernels::norm2(f);
    const double rhs = kernels::weighted_norm2(f, w);
    out.push_back(std::abs(lhs - rhs) / (1.0 + std::abs(z)));
  }
  return out;
}

std::vector<double> resolvent_bound_check(const DiscreteOperator& q, const std::vector<cplx>& samples) {
  if (q.kind != OperatorKind::cap) throw Error(ErrorKind::invalidInput, "resolvent bound needs a CAP operator");
  for (cplx z : samples) {
    if (!(z.imag() > 0.0)) throw Error(ErrorKind::invalidInput, "resolvent samples need Im z > 0");
  }
  std::vector<double> margins;
  margins.reserve(samples.size());
  for (cplx z : samples) margins.push_back(min_singular_value(q, z) - z.imag());
  return margins;
}

// ---------------------------------------------------------------------------

ValidationVerdict QuasimodeSet::validate(const SemiclassicalModel& m) const {
  ValidationVerdict v;
  const DiscreteOperator p = assemble_p_dirichlet(m, grid);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    std::ostringstream tag;
    tag << "quasimode " << i << ": ";
    if (e.u.size() != grid.N) {
      v.add(tag.str() + "length does not match the grid");
      continue;
    }
    if (std::abs(vnorm(e.u) - 1.0) > 1e-12) v.add(tag.str() + "not unit norm");
    for (int j = 0; j < grid.N; ++j) {
      if (std::abs(grid.node(j)) > e.supportRadius && e.u[j] != cplx(0.0, 0.0)) {
        v.add(tag.str() + "nonzero outside its support radius");
        break;
      }
    }
    if (vnorm(apply_shifted(p, e.u, e.E)) > residualBound * (1.0 + 1e-12)) {
      v.add(tag.str() + "residual exceeds the bound R(h)");
    }
  }
  return v;
}

QuasimodeResult quasimode_from_q_eigenpair(const SemiclassicalModel& m, const Grid& g,
                                           const CapProfile& c, cplx z, const ComplexVector& f,
                                           const CutoffFunction& chi) {
  check_length(g, f);
  const ComplexVector fn = f / vnorm(f);
  const ComplexVector v = cut(g, fn, chi);
  const double nv = vnorm(v);
  if (nv == 0.0) throw Error(ErrorKind::invalidCutoff, "cut-off state vanishes");
  const DiscreteOperator p = assemble_p_dirichlet(m, g);

  QuasimodeResult r;
  // Misplaced cutoffs are measured anyway; the flag records it.
  r.admissibleCutoff = chi.a() >= c.R2 && chi.b() < g.R;
  r.entry = {z.real(), v / nv, chi.b()};
  r.cutNorm = nv;
  r.residual = vnorm(apply_shifted(p, v, z.real())) / nv;
  // -Im z through the absorption identity: the eigensolver's Im z carries an
  // absolute error near eps*||Q||, which swamps widths below ~1e-14.
  double width = 0.0;
  for (Eigen::Index j = 0; j < fn.size(); ++j) width += c.re_w(g.node(static_cast<int>(j))) * std::norm(fn(j));
  r.width = width;
  r.modelBound = std::sqrt(width);
  r.normGuard = 1.0 - std::sqrt(width / c.delta0);
  r.localized = nv >= 0.5;
  r.regime = validate_cap(c, m).regime;
  return r;
}

QuasimodeResult quasimode_from_resonant_state(const SemiclassicalModel& m, const Grid& g,
                                              const ScalingProfile& s, cplx z, const ComplexVector& u,
                                              const CutoffFunction& chi) {
  check_length(g, u);
  if (chi.b() > s.B) throw Error(ErrorKind::invalidCutoff, "cutoff support reaches the scaled region");
  const ComplexVector un = u / vnorm(u);
  const ComplexVector v = cut(g, un, chi);
  const double nv = vnorm(v);
  if (nv == 0.0) throw Error(ErrorKind::invalidCutoff, "cut-off state vanishes");
  const DiscreteOperator p = assemble_p_dirichlet(m, g);

  QuasimodeResult r;
  r.entry = {z.real(), v / nv, chi.b()};
  r.cutNorm = nv;
  r.residual = vnorm(apply_shifted(p, v, z.real())) / nv;
  r.width = std::max(-z.imag(), 0.0);
  r.modelBound = std::sqrt(m.h) * std::sqrt(r.width);
  r.localized = nv >= 0.5;
  r.regime = chi.a() > m.R0prime ? CapRegime::caseA : CapRegime::caseB;
  return r;
}

double boundary_decay_probe(const Grid& g, const ComplexVector& u, double rho, double h) {
  check_length(g, u);
  if (!(rho > 0.0) || rho + 2.0 * g.dx > g.R) {
    throw Error(ErrorKind::invalidArgument, "probe radius must lie strictly inside the grid");
  }
  double boundary = 0.0;
  for (double x : {-rho, rho}) {
    const int j = g.nearest_index(x);
    if (j < 1 || j > g.N - 2) throw Error(ErrorKind::invalidArgument, "probe radius too close to the wall");
    const cplx du = h * (u[j + 1] - u[j - 1]) / (2.0 * g.dx);
    boundary += std::norm(u[j]) + std::norm(du);
  }
  if (boundary == 0.0) return 0.0;
  double bulk = 0.0;
  for (int j = 0; j < g.N; ++j) {
    if (std::abs(g.node(j)) < rho) bulk += std::norm(u[j]);
  }
  bulk *= g.dx;
  if (bulk == 0.0) return kInf;
  return boundary / bulk;
}

// ---------------------------------------------------------------------------

namespace {

// Pole-free forms of k tan(ka) = kappa (even) and -k cot(ka) = kappa (odd).
double well_equation(double V0, double a, double h, double E, bool even) {
  const double k = std::sqrt(E) / h;
  const double kappa = std::sqrt(V0 - E) / h;
  return even ? k * std::sin(k * a) - kappa * std::cos(k * a) : k * std::cos(k * a) + kappa * std::sin(k * a);
}

double bisect(double V0, double a, double h, bool even, double lo, double hi) {
  double flo = well_equation(V0, a, h, lo, even);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = well_equation(V0, a, h, mid, even);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<SquareWellLevel> square_well_levels(double V0, double a, double h, double Emin, double Emax) {
  if (!(V0 > 0.0) || !(a > 0.0) || !(h > 0.0)) {
    throw Error(ErrorKind::invalidArgument, "square well needs V0, a, h > 0");
  }
  const double lo = std::max(Emin, 0.0);
  const double hi = std::min(Emax, V0);
  std::vector<SquareWellLevel> out;
  if (!(hi > lo)) return out;
  // ka advances by at most ~0.02 per scan step.
  const double kaSpan = a * (std::sqrt(hi) - std::sqrt(lo)) / h;
  const int steps = std::max(1000, static_cast<int>(kaSpan / 0.02));
  for (bool even : {true, false}) {
    double e0 = lo + (hi - lo) * 1e-12;
    double f0 = well_equation(V0, a, h, e0, even);
    for (int i = 1; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const double s = std::sqrt(lo) + t * (std::sqrt(hi) - std::sqrt(lo));
      const double e1 = std::min(s * s, hi - (hi - lo) * 1e-12);
      const double f1 = well_equation(V0, a, h, e1, even);
      if ((f0 < 0.0) != (f1 < 0.0)) out.push_back({bisect(V0, a, h, even, e0, e1), even});
      e0 = e1;
      f0 = f1;
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.E < y.E; });
  return out;
}

QuasimodeEntry square_well_quasimode(double V0, double a, double h, const SquareWellLevel& level,
                                     const Grid& g, double cutRadius) {
  const double k = std::sqrt(level.E) / h;
  const double kappa = std::sqrt(V0 - level.E) / h;
  ComplexVector u(g.N);
  for (int j = 0; j < g.N; ++j) {
    const double x = g.node(j);
    const double r = std::abs(x);
    double v = 0.0;
    if (r > cutRadius) {
      v = 0.0;
    } else if (r < a) {
      v = level.even ? std::cos(k * x) : std::sin(k * x);
    } else {
      const double edge = level.even ? std::cos(k * a) : std::sin(k * a) * (x < 0.0 ? -1.0 : 1.0);
      v = edge * std::exp(-kappa * (r - a));
    }
    u[j] = v;
  }
  const double n = vnorm(u);
  if (n == 0.0) throw Error(ErrorKind::invalidArgument, "quasimode vanishes on the grid");
  return {level.E, u / n, cutRadius};
}

double quasimode_residual(const SemiclassicalModel& m, const Grid& g, const QuasimodeEntry& q) {
  check_length(g, q.u);
  return vnorm(apply_shifted(assemble_p_dirichlet(m, g), q.u, q.E));
}

// ---------------------------------------------------------------------------

std::string_view to_string(MatchDirection d) {
  switch (d) {
    case MatchDirection::resonanceToCap: return "resonanceToCap";
    case MatchDirection::capToResonance: return "capToResonance";
    case MatchDirection::countingSandwich: return "countingSandwich";
  }
  return "unknown";
}

bool in_match_box(cplx source, cplx target, double width, double h) {
  const double L = std::log(1.0 / h);
  return std::abs(target.real() - source.real()) <= width * L && target.imag() >= -width &&
         target.imag() <= kRealAxisSlack;
}

bool report_consistent(const ComparisonReport& r) {
  if (r.direction == MatchDirection::countingSandwich) return r.pairs.empty();
  const auto it = r.parameters.find("h");
  if (it == r.parameters.end()) return r.pairs.empty();
  for (const auto& p : r.pairs) {
    if (p.boxSatisfied != in_match_box(p.source, p.target, p.width, it->second)) return false;
    if (p.distance != std::abs(p.target - p.source)) return false;
  }
  return true;
}

ComparisonReport theorem1_match(const std::vector<cplx>& source, const std::vector<cplx>& target,
                                MatchDirection direction, double h, const MatchParams& params) {
  if (direction == MatchDirection::countingSandwich) {
    throw Error(ErrorKind::invalidArgument, "theorem1_match handles the two matching directions only");
  }
  if (!(h > 0.0 && h < 1.0)) throw Error(ErrorKind::invalidArgument, "h must lie in (0, 1)");
  if (target.empty()) throw Error(ErrorKind::noCandidates, "target spectrum is empty");

  const double L = std::log(1.0 / h);
  const double n = params.nsharp;
  const double eligibleDepth = std::pow(std::pow(h, n + 1.0) / (params.C * L), 2.0);

  ComparisonReport rep;
  rep.direction = direction;
  rep.parameters["h"] = h;
  rep.parameters["C"] = params.C;
  rep.parameters["nsharp"] = n;
  rep.parameters["allowance"] = params.allowance;
  rep.parameters["eligibleDepth"] = eligibleDepth;

  double expTerm = 0.0;
  if (direction == MatchDirection::resonanceToCap) {
    if (params.gamma) {
      expTerm = std::exp(-*params.gamma / h);
      rep.parameters["gamma"] = *params.gamma;
    } else {
      rep.flags.push_back("gamma not supplied: exponential term omitted");
    }
  } else {
    expTerm = std::exp(-params.B / h);
    rep.parameters["B"] = params.B;
  }

  struct Pending {
    cplx s, t;
    double basis;
  };
  std::vector<Pending> pending;
  double fitted = 0.0;
  for (cplx s : source) {
    const bool eligible = s.real() >= params.a0 && s.real() <= params.b0 && s.imag() >= -eligibleDepth &&
                          s.imag() <= kRealAxisSlack;
    if (!eligible) {
      ++rep.skipped;
      std::ostringstream os;
      os.precision(17);
      os << "skipped source " << s.real() << (s.imag() < 0 ? "" : "+") << s.imag()
         << "i outside the eligibility box";
      rep.flags.push_back(os.str());
      continue;
    }
    const cplx t = *std::min_element(target.begin(), target.end(), [s](cplx x, cplx y) {
      return std::abs(x - s) < std::abs(y - s);
    });
    const double root = std::sqrt(std::max(-s.imag(), 0.0));
    const double basis = direction == MatchDirection::resonanceToCap
                             ? std::pow(h, -n - 0.5) * root + params.allowance
                             : params.B * std::pow(h, -n - 1.0) * root + params.allowance;
    double need = std::max(std::abs(t.real() - s.real()) / L, std::max(-t.imag(), 0.0));
    if (t.imag() > kRealAxisSlack) need = kInf;
    double c = 0.0;
    if (need > expTerm) c = basis > 0.0 ? (need - expTerm) / basis : kInf;
    fitted = std::max(fitted, c);
    pending.push_back({s, t, basis});
  }
  rep.parameters["eligible"] = static_cast<double>(pending.size());

  // Tiny relative slack so the fitted constant reproduces its own boxes.
  const double used = fitted * (1.0 + 1e-12);
  for (const auto& p : pending) {
    MatchPair mp;
    mp.source = p.s;
    mp.target = p.t;
    mp.distance = std::abs(p.t - p.s);
    mp.width = used * p.basis + expTerm;
    if (std::isnan(mp.width)) mp.width = expTerm;
    mp.boxSatisfied = in_match_box(p.s, p.t, mp.width, h);
    rep.pairs.push_back(mp);
  }
  if (direction == MatchDirection::resonanceToCap) {
    rep.fittedC1 = fitted;
  } else {
    rep.fittedC2 = fitted;
  }
  return rep;
}

// ---------------------------------------------------------------------------

std::pair<Rect, Rect> sandwich_boxes(const SpectralBox& w, double Nexp, double h, CapRegime regime,
                                     const SandwichOptions& opts) {
  const double hn = std::pow(h, Nexp);
  const Rect inner{w.a + w.c, w.b - w.c, -hn * w.c * w.c, 0.0};
  double spread = std::sqrt(w.c) / hn;
  double widen = regime == CapRegime::caseB ? std::pow(h, opts.caseBPower) : 0.0;
  const Rect outer{w.a - spread - widen, w.b + spread + widen, -spread - widen, 0.0};
  return {inner, outer};
}

ValidationVerdict validate_window(const SemiclassicalModel& m, const SpectralBox& w, double h,
                                  const SandwichOptions& opts) {
  ValidationVerdict v;
  if (!(w.a >= m.a0)) v.add("window must satisfy a0 <= a");
  if (!(w.b <= m.b0)) v.add("window must satisfy b <= b0");
  if (!(w.a < w.b)) v.add("window must satisfy a < b");
  if (!(w.c > 0.0)) v.add("window depth c must be positive");
  if (!(w.b - w.a >= 2.0 * w.c)) v.add("window must satisfy b - a >= 2c");
  if (!(w.c <= std::pow(h, opts.Mexp))) v.add("window depth must satisfy c <= h^Mexp");
  return v;
}

namespace {

Rect with_slack(Rect r) {
  r.imHi += kRealAxisSlack;
  return r;
}

}  // namespace

SandwichCounts sandwich_counts(const SemiclassicalModel& m, const std::vector<cplx>& capEigenvalues,
                               const SpectralBox& window, double Nexp, CapRegime regime,
                               const SandwichOptions& opts) {
  const auto verdict = validate_window(m, window, m.h, opts);
  if (!verdict.ok()) throw Error(ErrorKind::invalidWindow, verdict.violations.front());
  SandwichCounts out;
  std::tie(out.innerBox, out.outerBox) = sandwich_boxes(window, Nexp, m.h, regime, opts);
  // D has no zeros above the axis: lifting the top edge keeps it off the
  // resonances that sit just below it.
  const Rect lifted{window.a, window.b, -window.c, window.c};
  out.middle = argument_count(m, lifted, opts.oracleNodesPerEdge);
  out.inner = static_cast<long>(count_in(capEigenvalues, with_slack(out.innerBox)));
  out.outer = static_cast<long>(count_in(capEigenvalues, with_slack(out.outerBox)));
  return out;
}

ComparisonReport theorem2_sandwich(const SemiclassicalModel& m, const Grid& g, const CapProfile& c,
                                   const SpectralBox& window, double Nexp, const SandwichOptions& opts) {
  const auto verdict = validate_window(m, window, m.h, opts);
  if (!verdict.ok()) throw Error(ErrorKind::invalidWindow, verdict.violations.front());
  const CapRegime regime = validate_cap(c, m).regime;
  const Spectrum s = eig_dense(assemble_q_cap(m, g, c), false);
  const SandwichCounts counts = sandwich_counts(m, s.eigenvalues, window, Nexp, regime, opts);

  ComparisonReport rep;
  rep.direction = MatchDirection::countingSandwich;
  rep.parameters["h"] = m.h;
  rep.parameters["c"] = window.c;
  rep.parameters["N"] = Nexp;
  rep.parameters["Mexp"] = opts.Mexp;
  rep.parameters["NQinner"] = static_cast<double>(counts.inner);
  rep.parameters["NP"] = static_cast<double>(counts.middle);
  rep.parameters["NQouter"] = static_cast<double>(counts.outer);
  rep.parameters["lowerHolds"] = counts.inner <= counts.middle ? 1.0 : 0.0;
  rep.parameters["upperHolds"] = counts.middle <= counts.outer ? 1.0 : 0.0;
  if (regime == CapRegime::caseB) rep.parameters["caseBPower"] = opts.caseBPower;
  if (window.c < std::exp(-std::pow(m.h, -2.0 / 3.0 + opts.epsilon0))) {
    rep.flags.push_back("window depth below exp(-h^{-2/3+eps0}); upper inequality outside its stated regime");
  }
  return rep;
}

std::optional<double> fit_sandwich_exponent(const SemiclassicalModel& m,
                                            const std::vector<cplx>& capEigenvalues,
                                            const SpectralBox& window, CapRegime regime,
                                            const SandwichOptions& opts) {
  for (int i = 0; i <= 20; ++i) {
    const double N = 0.5 * i;
    if (sandwich_counts(m, capEigenvalues, window, N, regime, opts).holds()) return N;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

QuasimodeVerdict quasimode_implies_spectrum(const QuasimodeSet& qs, const std::vector<cplx>& target,
                                            double h, const QuasimodeParams& params) {
  const std::size_t m = qs.entries.size();
  if (m == 0) throw Error(ErrorKind::invalidInput, "quasimode set is empty");
  if (!(h > 0.0 && h < 1.0)) throw Error(ErrorKind::invalidArgument, "h must lie in (0, 1)");

  QuasimodeVerdict v;
  ComplexMatrix U(qs.grid.N, static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    if (qs.entries[i].u.size() != qs.grid.N) throw Error(ErrorKind::invalidInput, "quasimode length mismatch");
    U.col(static_cast<Eigen::Index>(i)) = qs.entries[i].u;
  }
  const ComplexMatrix gram = U.adjoint() * U;
  v.gramSigmaMin = Eigen::JacobiSVD<ComplexMatrix>(gram).singularValues().minCoeff();
  v.gramThreshold = std::pow(std::pow(h, qs.N) / qs.M, 2.0);
  if (v.gramSigmaMin < v.gramThreshold) {
    std::ostringstream os;
    os << "Gram sigma_min " << v.gramSigmaMin << " below (h^N/M)^2 = " << v.gramThreshold;
    throw Error(ErrorKind::independenceViolated, os.str());
  }

  const double L = std::log(1.0 / h);
  const double n = params.nsharp;
  const double R = qs.residualBound;
  const double scale = std::pow(h, -n - qs.N - 1.0);
  v.residualInRegime = R <= std::pow(h, n + qs.N + 1.0) / (params.C * L);
  const double floor = std::exp(-params.B / h);
  v.c = std::max(params.C0BM * R * scale, floor);

  double emin = qs.entries.front().E, emax = emin;
  for (const auto& e : qs.entries) {
    emin = std::min(emin, e.E);
    emax = std::max(emax, e.E);
  }
  v.box = {emin - v.c * L, emax + v.c * L, -v.c, kRealAxisSlack};
  v.found = count_in(target, v.box);
  v.holds = v.found >= m;

  std::vector<double> needs;
  for (cplx t : target) {
    if (t.imag() > kRealAxisSlack) continue;
    const double outside = std::max({0.0, emin - t.real(), t.real() - emax});
    needs.push_back(std::max(outside / L, std::max(-t.imag(), 0.0)));
  }
  if (needs.size() < m) {
    v.fittedC0BM = kInf;
  } else {
    std::nth_element(needs.begin(), needs.begin() + static_cast<std::ptrdiff_t>(m - 1), needs.end());
    const double cstar = needs[m - 1];
    v.fittedC0BM = cstar <= floor ? 0.0 : (R > 0.0 ? cstar / (R * scale) : kInf);
  }
  return v;
}

}  // namespace capres
