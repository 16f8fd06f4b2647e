#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "capres/errors.hpp"
#include "capres/operators.hpp"
#include "capres/spectra.hpp"

using namespace capres;

namespace {

SemiclassicalModel free_model(double h) {
  SemiclassicalModel m;
  m.h = h;
  m.R0 = 1.0;
  m.R0prime = 1.0;
  return m;
}

CapProfile bench_cap() {
  CapProfile c;
  c.R1 = 3.0;
  c.R2 = 4.0;
  c.delta0 = 0.1;
  c.power = 2;
  c.strength = 1.0;
  return c;
}

std::vector<double> sorted_real(const Spectrum& s) {
  std::vector<double> out;
  for (cplx z : s.eigenvalues) out.push_back(z.real());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("free Dirichlet Laplacian on three nodes") {
  const auto op = assemble_p_dirichlet(free_model(1.0), make_grid(2.0, 3));
  CHECK(op.kind == OperatorKind::dirichletSelfAdjoint);
  const auto ev = sorted_real(eig_dense(op, false));
  REQUIRE(ev.size() == 3);
  CHECK(ev[0] == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
  CHECK(ev[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(ev[2] == doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("h^2 scaling of the free operator") {
  const Grid g = make_grid(3.0, 41);
  const auto a = assemble_p_dirichlet(free_model(1.0), g);
  const auto b = assemble_p_dirichlet(free_model(0.3), g);
  CHECK((b.matrix - 0.09 * a.matrix).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("self-adjoint assembly is real symmetric") {
  const auto m = benchmark_model(0.1);
  const auto op = assemble_p_dirichlet(m, make_grid(6.0, 199));
  CHECK((op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(op.matrix.imag().cwiseAbs().maxCoeff() == 0.0);
  CHECK(op.matrix(100, 100).real() == doctest::Approx(2.0 * 0.01 / (op.grid->dx * op.grid->dx) + m.potential(op.grid->node(100))));
}

TEST_CASE("domain checks") {
  const auto m = benchmark_model(0.1);
  CHECK_THROWS_AS(assemble_p_dirichlet(m, make_grid(2.5, 99)), Error);
  try {
    assemble_q_cap(m, make_grid(3.5, 99), bench_cap());
    FAIL("expected domain-too-small");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domainTooSmall);
  }
}

TEST_CASE("potential shift moves every eigenvalue") {
  auto m = benchmark_model(0.1);
  const Grid g = make_grid(6.0, 149);
  const auto base = sorted_real(eig_dense(assemble_p_dirichlet(m, g), false));
  m.potential = PiecewisePotential({-2.0, -1.0, 1.0, 2.0}, {2.0, 0.0, 2.0});
  // A constant shift is the diagonal plus c.
  auto op = assemble_p_dirichlet(m, g);
  op.matrix.diagonal().array() += 0.37;
  const auto shifted = sorted_real(eig_dense(op, false));
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(shifted[i] - base[i] == doctest::Approx(0.37).epsilon(1e-10));
}

TEST_CASE("free eigenvalues converge at rate dx^2") {
  const double h = 0.5, R = 2.0;
  const double exact = h * h * std::pow(std::numbers::pi / (2.0 * R), 2.0);
  std::vector<double> err;
  for (int N : {99, 199, 399}) {
    const auto ev = sorted_real(eig_dense(assemble_p_dirichlet(free_model(h), make_grid(R, N)), false));
    err.push_back(std::abs(ev.front() - exact));
  }
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.05));
  CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("CAP validation and regimes") {
  const auto m = benchmark_model(0.1);
  const auto v = validate_cap(bench_cap(), m);
  CHECK(v.ok());
  CHECK(v.regime == CapRegime::caseA);

  auto overlap = bench_cap();
  overlap.R1 = 2.2;
  const auto vb = validate_cap(overlap, m);
  CHECK(vb.ok());
  CHECK(vb.regime == CapRegime::caseB);

  auto weak = bench_cap();
  weak.strength = 0.001;
  CHECK_FALSE(validate_cap(weak, m).ok());

  auto complexW = bench_cap();
  complexW.imagScale = 2.0;
  complexW.imagConstC = 1.0;
  CHECK_FALSE(validate_cap(complexW, m).ok());
}

TEST_CASE("CAP assembly") {
  const auto m = benchmark_model(0.1);
  const Grid g = make_grid(6.0, 299);
  const auto p = assemble_p_dirichlet(m, g);

  auto off = bench_cap();
  off.strength = 0.0;
  const auto q0 = assemble_q_cap(m, g, off);
  CHECK(q0.matrix == p.matrix);

  const auto q = assemble_q_cap(m, g, bench_cap());
  CHECK(q.kind == OperatorKind::cap);
  const ComplexMatrix anti = (q.matrix - q.matrix.adjoint()) / cplx(0.0, -2.0);
  for (int j = 0; j < g.N; ++j) {
    for (int i = 0; i < g.N; ++i) {
      const double expected = i == j ? bench_cap().re_w(g.node(j)) : 0.0;
      CHECK(std::abs(anti(i, j) - expected) <= 1e-14);
    }
  }
  const auto s = eig_dense(q, false);
  for (cplx z : s.eigenvalues) CHECK(z.imag() <= 1e-12);

  auto withImag = bench_cap();
  withImag.imagScale = 0.5;
  const auto qi = assemble_q_cap(m, g, withImag);
  const double x = g.node(g.N - 10);
  CHECK(qi.matrix(g.N - 10, g.N - 10).real() - p.matrix(g.N - 10, g.N - 10).real() ==
        doctest::Approx(withImag.im_w(x)).epsilon(1e-14));
}

TEST_CASE("scaling profiles") {
  ScalingProfile s;
  s.B = 3.0;
  s.delta = 1.0;
  s.theta0 = 0.2;
  CHECK(s.theta(2.9) == 0.0);
  CHECK(s.theta(3.0) == 0.0);
  CHECK(s.theta(3.5) == 0.2);
  CHECK(s.theta(4.2) == 0.2);
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double r = 2.5 + 2.0 * i / 1000.0;
    CHECK(s.theta(r) >= prev);
    prev = s.theta(r);
  }
  CHECK(eval_g(s, 2.0) == cplx(0.0, 0.0));
  CHECK(eval_g(s, 3.6) == cplx(0.0, 0.0));

  ScalingProfile e = s;
  e.shape = ScalingShape::exponentialK;
  e.k = 2.0;
  for (double r : {3.2, 3.5, 4.0}) {
    const double d = 1e-5;
    CHECK(e.d1(r) == doctest::Approx((e.theta(r + d) - e.theta(r - d)) / (2 * d)).epsilon(1e-6));
    CHECK(e.d2(r) == doctest::Approx((e.d1(r + d) - e.d1(r - d)) / (2 * d)).epsilon(1e-6));
    CHECK(e.d3(r) == doctest::Approx((e.d2(r + d) - e.d2(r - d)) / (2 * d)).epsilon(1e-6));
  }
  // g(3.5) from the closed-form derivatives.
  const double r = 3.5;
  const cplx expected = cplx(0.0, -(r * e.d2(r) + e.d1(r))) * std::polar(1.0, -e.theta(r)) /
                        std::pow(cplx(1.0, r * e.d1(r)), 3);
  CHECK(std::abs(eval_g(e, r) - expected) <= 1e-15);
  CHECK(std::abs(eval_g(e, r)) > 0.0);
}

TEST_CASE("complex scaling assembly") {
  const auto m = benchmark_model(0.1);
  const Grid g = make_grid(6.0, 299);
  ScalingProfile s;
  s.theta0 = 0.0;
  const auto p0 = assemble_p_theta(m, g, s);
  CHECK(p0.matrix == assemble_p_dirichlet(m, g).matrix);

  // Global rotation of the free operator.
  const auto fm = free_model(0.2);
  ScalingProfile u;
  u.shape = ScalingShape::uniform;
  u.theta0 = 0.25;
  const Grid small = make_grid(2.0, 61);
  const auto rot = eig_dense(assemble_p_theta(fm, small, u), false);
  const auto base = sorted_real(eig_dense(assemble_p_dirichlet(fm, small), false));
  std::vector<cplx> unrot;
  for (cplx z : rot.eigenvalues) unrot.push_back(z * std::polar(1.0, 0.5));
  std::sort(unrot.begin(), unrot.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(std::abs(unrot[i] - base[i]) <= 1e-11 * (1.0 + base[i]));
  }

  ScalingProfile bad;
  bad.B = 2.0;  // inside R0'
  CHECK_THROWS_AS(assemble_p_theta(m, g, bad), Error);
  ScalingProfile steep;
  steep.theta0 = 0.5;
  CHECK_THROWS_AS(assemble_p_theta(m, g, steep), Error);
}

TEST_CASE("theta inequality diagnostic") {
  ScalingProfile e;
  e.shape = ScalingShape::exponentialK;
  e.k = 2.0;
  e.B = 3.0;
  e.theta0 = 0.2;
  const auto r01 = theta_derivative_inequality_check(e, 0.1, 10.0, 0.1, 20000);
  CHECK(r01.pass);
  CHECK(r01.argmax > 3.0);
  CHECK(r01.argmax <= 3.1);
  // Near B every derivative vanishes, so the supremum is the exponential floor.
  for (double h : {0.2, 0.1, 0.05}) {
    const auto rep = theta_derivative_inequality_check(e, h, 10.0, 0.1, 20000);
    const double floor = -std::exp(-std::pow(h, -2.0 / 3.0 + 0.1));
    CHECK(rep.pass);
    CHECK(rep.maxViolation == doctest::Approx(floor).epsilon(1e-3));
  }
  ScalingProfile smooth;
  CHECK_THROWS_AS(theta_derivative_inequality_check(smooth, 0.1, 10.0, 0.1), Error);
}

TEST_CASE("matrix market round trip") {
  const auto q = assemble_q_cap(benchmark_model(0.1), make_grid(6.0, 99), bench_cap());
  std::stringstream ss;
  write_matrix_market(ss, q);
  const auto back = read_matrix_market(ss);
  CHECK(back.matrix == q.matrix);
  std::stringstream junk("not a matrix\n");
  CHECK_THROWS_AS(read_matrix_market(junk), Error);
}
