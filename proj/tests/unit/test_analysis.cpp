#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "capres/analysis.hpp"
#include "capres/errors.hpp"

using namespace capres;

namespace {

CapProfile bench_cap(double strength = 1.0) {
  CapProfile c;
  c.R1 = 3.0;
  c.R2 = 4.0;
  c.delta0 = 0.1;
  c.power = 2;
  c.strength = strength;
  return c;
}

const SpectralBox kWindow{0.5, 1.5, 0.1};

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::invalidArgument;
}

// Index of the eigenvector with the largest weight inside the well.
std::size_t most_localized(const Grid& g, const Spectrum& s) {
  std::size_t best = 0;
  double bestWeight = -1.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    double w = 0.0;
    for (int j = 0; j < g.N; ++j) {
      if (std::abs(g.node(j)) < 1.0) w += std::norm((*s.eigenvectors)(j, static_cast<Eigen::Index>(k)));
    }
    if (w > bestWeight) {
      bestWeight = w;
      best = k;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("absorption identity") {
  const auto m = benchmark_model(0.1);
  const Grid g = make_grid(6.0, 299);

  const auto q0 = assemble_q_cap(m, g, bench_cap(0.0));
  const auto s0 = eig_dense(q0, true);
  for (double r : absorption_identity_check(q0, s0, bench_cap(0.0))) CHECK(r <= 1e-12);
  for (cplx z : s0.eigenvalues) CHECK(std::abs(z.imag()) <= 1e-12);

  const auto q = assemble_q_cap(m, g, bench_cap());
  const auto s = eig_dense(q, true);
  const auto r = absorption_identity_check(q, s, bench_cap());
  REQUIRE(r.size() == 299);
  CHECK(*std::max_element(r.begin(), r.end()) <= 1e-10);

  CHECK(kind_of([&] { absorption_identity_check(q, eig_dense(q, false), bench_cap()); }) == ErrorKind::invalidInput);
  const auto p = assemble_p_dirichlet(m, g);
  CHECK(kind_of([&] { absorption_identity_check(p, eig_dense(p, true), bench_cap()); }) == ErrorKind::invalidInput);
}

TEST_CASE("resolvent bound") {
  const auto m = benchmark_model(0.1);
  const Grid g = make_grid(6.0, 299);
  const auto p = assemble_q_cap(m, g, bench_cap(0.0));
  const auto free = resolvent_bound_check(p, {cplx(0.0, 1.0), cplx(1.0, 100.0)});
  CHECK(free[0] >= -1e-12);
  CHECK(free[1] >= -1e-12);

  const auto q = assemble_q_cap(m, g, bench_cap());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<cplx> z;
  for (int i = 0; i < 10; ++i) z.emplace_back(0.5 + u(rng), 1.0 - u(rng));
  const auto margins = resolvent_bound_check(q, z);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(margins[i] >= -1e-12 * (1.0 + std::abs(z[i])));
}

TEST_CASE("cut-off CAP eigenfunctions") {
  // No absorption and negligible tunnelling: the well state is already a quasimode.
  const auto m = benchmark_model(0.05);
  const Grid g = make_grid(6.0, 599);
  const auto q0 = assemble_q_cap(m, g, bench_cap(0.0));
  const auto s0 = filter_box(eig_dense(q0, true), kWindow);
  REQUIRE(s0.size() > 0);
  const std::size_t k = most_localized(g, s0);
  const ComplexVector f0 = s0.eigenvectors->col(static_cast<Eigen::Index>(k));
  const auto r0 = quasimode_from_q_eigenpair(m, g, bench_cap(0.0), s0.eigenvalues[k], f0, make_cutoff(4.5, 5.5));
  CHECK(r0.residual <= 1e-8);
  CHECK(r0.admissibleCutoff);
  CHECK(r0.localized);

  const auto bad = quasimode_from_q_eigenpair(m, g, bench_cap(0.0), s0.eigenvalues[k], f0, make_cutoff(0.3, 0.8));
  CHECK_FALSE(bad.admissibleCutoff);
  CHECK(bad.residual > 1e-3);
}

TEST_CASE("cut-off residual scales with the width") {
  std::vector<double> K;
  for (double h : {0.1, 0.07, 0.05}) {
    const auto m = benchmark_model(h);
    const Grid g = make_grid(6.0, 599);
    const auto s = filter_box(eig_dense(assemble_q_cap(m, g, bench_cap()), true), kWindow);
    REQUIRE(s.size() > 0);
    const ComplexVector f = s.eigenvectors->col(0);
    const auto r = quasimode_from_q_eigenpair(m, g, bench_cap(), s.eigenvalues[0], f, make_cutoff(4.5, 5.5));
    CHECK(r.localized);
    CHECK(r.normGuard >= 0.5);
    K.push_back(r.residual / r.modelBound);
  }
  const auto [lo, hi] = std::minmax_element(K.begin(), K.end());
  CHECK(*hi / *lo <= 3.0);
}

TEST_CASE("cut-off resonant states") {
  const Grid g = make_grid(6.0, 599);
  ScalingProfile off;
  off.B = 4.5;
  off.theta0 = 0.0;
  const auto m05 = benchmark_model(0.05);
  const auto s0 = filter_box(eig_dense(assemble_p_theta(m05, g, off), true), kWindow);
  REQUIRE(s0.size() > 0);
  const std::size_t k = most_localized(g, s0);
  const auto r0 = quasimode_from_resonant_state(m05, g, off, s0.eigenvalues[k],
                                                s0.eigenvectors->col(static_cast<Eigen::Index>(k)),
                                                make_cutoff(3.5, 4.4));
  CHECK(r0.residual <= 1e-8);

  const auto m = benchmark_model(0.1);

  ScalingProfile s;
  s.B = 4.5;
  s.delta = 1.0;
  s.theta0 = 0.2;
  const auto spec = filter_box(eig_dense(assemble_p_theta(m, g, s), true), kWindow);
  REQUIRE(spec.size() > 0);
  const ComplexVector u = spec.eigenvectors->col(0);
  // Past the barrier the outgoing tail has constant modulus, so the residual
  // sits at the width term and does not grow with the plateau radius.
  double prev = INFINITY;
  for (double a : {2.6, 2.8, 3.0, 3.2, 3.4}) {
    const auto r = quasimode_from_resonant_state(m, g, s, spec.eigenvalues[0], u, make_cutoff(a, a + 0.5));
    CHECK(r.regime == CapRegime::caseA);
    CHECK(r.residual <= prev * (1.0 + 1e-6));
    CHECK(r.residual <= 10.0 * r.modelBound);
    prev = r.residual;
  }
  const auto b = quasimode_from_resonant_state(m, g, s, spec.eigenvalues[0], u, make_cutoff(2.0, 2.5));
  CHECK(b.regime == CapRegime::caseB);
  CHECK(kind_of([&] { quasimode_from_resonant_state(m, g, s, spec.eigenvalues[0], u, make_cutoff(4.0, 5.0)); }) ==
        ErrorKind::invalidCutoff);
}

TEST_CASE("boundary decay probe") {
  const Grid g = make_grid(6.0, 599);
  ComplexVector inside = ComplexVector::Zero(g.N);
  for (int j = 0; j < g.N; ++j) {
    if (std::abs(g.node(j)) < 1.0) inside[j] = std::cos(std::numbers::pi * g.node(j) / 2.0);
  }
  CHECK(boundary_decay_probe(g, inside, 3.0, 0.1) == 0.0);

  ComplexVector sine(g.N);
  for (int j = 0; j < g.N; ++j) sine[j] = std::sin(std::numbers::pi * (g.node(j) + 6.0) / 12.0 * 3.0);
  CHECK(boundary_decay_probe(g, sine, 3.0, 0.1) > 0.05);
  CHECK_THROWS_AS(boundary_decay_probe(g, sine, 6.5, 0.1), Error);

  ScalingProfile s;
  std::vector<double> probe;
  for (double h : {0.1, 0.05}) {
    const auto m = benchmark_model(h);
    const auto spec = filter_box(eig_dense(assemble_p_theta(m, g, s), true), kWindow);
    REQUIRE(spec.size() > 0);
    probe.push_back(boundary_decay_probe(g, spec.eigenvectors->col(0), 3.0, h));
  }
  CHECK(probe[1] < probe[0]);
}

TEST_CASE("matching boxes") {
  // Real points: the imaginary extent of a box must still reach -Im of the target.
  const std::vector<cplx> pts{0.6, 0.9, 1.2};
  const auto self = theorem1_match(pts, pts, MatchDirection::resonanceToCap, 0.1, {});
  REQUIRE(self.pairs.size() == 3);
  for (const auto& p : self.pairs) {
    CHECK(p.distance == 0.0);
    CHECK(p.boxSatisfied);
  }
  CHECK(self.fittedC1 == 0.0);
  CHECK(report_consistent(self));

  auto tampered = self;
  tampered.pairs[0].target += cplx(1.0, 0.0);
  CHECK_FALSE(report_consistent(tampered));

  // A deep point is outside the eligibility box and skipped.
  const auto deep = theorem1_match({cplx(1.0, -0.05), cplx(0.8, -1e-9)}, {cplx(0.8, 0.0)},
                                   MatchDirection::capToResonance, 0.1, {});
  CHECK(deep.skipped == 1);
  CHECK(deep.pairs.size() == 1);
  CHECK_FALSE(deep.flags.empty());

  CHECK(kind_of([&] { theorem1_match(pts, {}, MatchDirection::resonanceToCap, 0.1, {}); }) == ErrorKind::noCandidates);
  CHECK_THROWS_AS(theorem1_match(pts, pts, MatchDirection::countingSandwich, 0.1, {}), Error);
  CHECK(to_string(MatchDirection::capToResonance) == "capToResonance");
}

TEST_CASE("benchmark resonance to CAP matching") {
  const double h = 0.1;
  const auto m = benchmark_model(h);
  const Grid g = make_grid(6.0, 599);
  const auto capz = eig_dense(assemble_q_cap(m, g, bench_cap()), false).eigenvalues;
  const auto roots = find_resonances_lifted(m, kWindow, 0.1);
  std::vector<cplx> rz;
  for (const auto& r : roots) rz.push_back(r.z);
  MatchParams p;
  p.allowance = g.dx * g.dx / (h * h);
  const auto rep = theorem1_match(rz, capz, MatchDirection::resonanceToCap, h, p);
  CHECK(rep.pairs.size() == rz.size());
  CHECK(rep.fittedC1 > 0.0);
  CHECK(std::isfinite(rep.fittedC1));
  for (const auto& pair : rep.pairs) CHECK(pair.boxSatisfied);
  CHECK(report_consistent(rep));
}

TEST_CASE("sandwich boxes and counts") {
  const SandwichOptions opts;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double h = 0.02 + 0.2 * u(rng);
    const double a = 0.5 + 0.3 * u(rng);
    const SpectralBox w{a, a + 0.3 + 0.3 * u(rng), std::pow(h, 4.0) * u(rng)};
    const auto [inner, outer] = sandwich_boxes(w, 10.0 * u(rng), h, i % 2 ? CapRegime::caseA : CapRegime::caseB, opts);
    const Rect r = w.rect();
    CHECK(inner.reLo >= r.reLo);
    CHECK(inner.reHi <= r.reHi);
    CHECK(inner.imLo >= r.imLo);
    CHECK(outer.reLo <= r.reLo);
    CHECK(outer.reHi >= r.reHi);
    CHECK(outer.imLo <= r.imLo);
  }

  SemiclassicalModel freeModel;
  freeModel.h = 0.1;
  const auto empty = sandwich_counts(freeModel, {}, SpectralBox{0.6, 1.0, 1e-4}, 1.0, CapRegime::caseA, opts);
  CHECK(empty.inner == 0);
  CHECK(empty.middle == 0);
  CHECK(empty.outer == 0);
  CHECK(empty.holds());

  const auto m = benchmark_model(0.1);
  const Grid g = make_grid(6.0, 599);
  CHECK(kind_of([&] { theorem2_sandwich(m, g, bench_cap(), SpectralBox{0.6, 0.61, 0.01}, 1.0); }) ==
        ErrorKind::invalidWindow);
  CHECK_FALSE(validate_window(m, SpectralBox{0.6, 1.0, 0.01}, 0.1, opts).ok());
  CHECK(validate_window(m, SpectralBox{0.6, 1.0, 1e-4}, 0.1, opts).ok());
}

TEST_CASE("benchmark sandwich with a fitted exponent") {
  const auto m = benchmark_model(0.1);
  const Grid g = make_grid(6.0, 599);
  const SpectralBox w{0.6, 1.0, 1e-4};
  const auto capz = eig_dense(assemble_q_cap(m, g, bench_cap()), false).eigenvalues;
  const auto N = fit_sandwich_exponent(m, capz, w, CapRegime::caseA);
  REQUIRE(N.has_value());
  const auto rep = theorem2_sandwich(m, g, bench_cap(), w, *N);
  CHECK(rep.direction == MatchDirection::countingSandwich);
  CHECK(rep.parameters.at("lowerHolds") == 1.0);
  CHECK(rep.parameters.at("upperHolds") == 1.0);
  CHECK(report_consistent(rep));
}

TEST_CASE("square well levels") {
  const double h = 0.05;
  const auto levels = square_well_levels(2.0, 1.0, h, 0.5, 1.5);
  REQUIRE_FALSE(levels.empty());
  // The same levels are bound states of the shifted well on the physical sheet.
  SemiclassicalModel well;
  well.h = h;
  well.potential = PiecewisePotential({-1.0, 1.0}, {-2.0});
  for (const auto& l : levels) {
    const double scale = std::abs(transfer_determinant(well, l.E - 2.0 + 1e-3, Branch::physical));
    CHECK(std::abs(transfer_determinant(well, l.E - 2.0, Branch::physical)) <= 1e-8 * scale);
  }
  for (std::size_t i = 1; i < levels.size(); ++i) CHECK(levels[i].even != levels[i - 1].even);

  const Grid g = make_grid(6.0, 1199);
  const auto q = square_well_quasimode(2.0, 1.0, h, levels.front(), g, 2.0);
  CHECK(q.u.norm() == doctest::Approx(1.0));
  for (int j = 0; j < g.N; ++j) {
    if (std::abs(g.node(j)) > 2.0) CHECK(q.u[j] == cplx(0.0, 0.0));
  }
  QuasimodeSet qs;
  qs.grid = g;
  qs.entries.push_back(q);
  qs.residualBound = quasimode_residual(benchmark_model(h), g, q);
  CHECK(qs.validate(benchmark_model(h)).ok());
  qs.residualBound *= 0.5;
  CHECK_FALSE(qs.validate(benchmark_model(h)).ok());
}

TEST_CASE("quasimodes force spectrum") {
  const double h = 0.1;
  const auto m = benchmark_model(h);
  const Grid g = make_grid(6.0, 299);
  const auto p = assemble_q_cap(m, g, bench_cap(0.0));
  const auto s = filter_box(eig_dense(p, true), kWindow);
  REQUIRE(s.size() >= 2);

  QuasimodeSet qs;
  qs.grid = g;
  qs.M = 2.0;
  for (std::size_t i = 0; i < 2; ++i) {
    qs.entries.push_back({s.eigenvalues[i].real(), s.eigenvectors->col(static_cast<Eigen::Index>(i)), g.R});
    qs.residualBound = std::max(qs.residualBound, quasimode_residual(m, g, qs.entries.back()));
  }
  const auto v = quasimode_implies_spectrum(qs, s.eigenvalues, h, {});
  CHECK(v.holds);
  CHECK(v.found >= 2);
  CHECK(v.c <= 1e-6);
  CHECK(v.gramSigmaMin >= v.gramThreshold);

  QuasimodeSet twin = qs;
  ComplexVector nearby = qs.entries[0].u;
  nearby[g.N / 2] += 1e-9;
  twin.entries[1] = {qs.entries[0].E, nearby / nearby.norm(), g.R};
  CHECK(kind_of([&] { quasimode_implies_spectrum(twin, s.eigenvalues, h, {}); }) ==
        ErrorKind::independenceViolated);
}
