#include <doctest.h>

#include <cmath>
#include <functional>

#include "capres/errors.hpp"
#include "capres/oracle.hpp"

using namespace capres;

namespace {

SemiclassicalModel free_model() {
  SemiclassicalModel m;
  m.h = 0.1;
  return m;
}

SemiclassicalModel single_well() {
  SemiclassicalModel m;
  m.h = 1.0;
  m.potential = PiecewisePotential({-1.0, 1.0}, {-1.0});
  return m;
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Roots at h = 0.1 in [0.5, 1.5] + i[-0.1, 0], frozen from the subdivision search.
const cplx kFrozen[] = {
    {0.534463873384835, -3.2311280622497729e-12},
    {0.76685649864813255, -3.4375430215796216e-11},
    {1.038544268114785, -5.6178752174780575e-10},
    {1.346536170131, -1.73e-8},
};

}  // namespace

TEST_CASE("free determinant is identically one") {
  const auto m = free_model();
  for (cplx z : {cplx(0.7, 0.0), cplx(1.3, -0.2), cplx(2.0, 0.5)}) {
    CHECK(std::abs(transfer_determinant(m, z) - 1.0) <= 1e-14);
  }
  CHECK(argument_count(m, SpectralBox{0.5, 1.5, 0.1}, 32) == 0);
  CHECK(find_resonances(m, Rect{0.5, 1.5, -0.1, 0.05}).empty());
}

TEST_CASE("branch errors") {
  const auto m = benchmark_model(0.1);
  try {
    transfer_determinant(m, 0.0);
    FAIL("expected branch ambiguity");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::branchAmbiguity);
  }
  CHECK_THROWS_AS(transfer_determinant(m, -0.5), Error);
  CHECK_THROWS_AS(transfer_determinant(m, 0.5, Branch::physical), Error);
  CHECK_THROWS_AS(argument_count(m, Rect{-0.5, 0.5, -0.1, 0.1}, 32), Error);
}

TEST_CASE("bound states of a square well match the transcendental equations") {
  const auto m = single_well();
  auto D = [&](double z) { return transfer_determinant(m, z, Branch::physical); };
  // q tan q = kappa (even), -q cot q = kappa (odd), q^2 + kappa^2 = 1, E = -kappa^2.
  auto even = [](double E) {
    const double q = std::sqrt(E + 1.0), k = std::sqrt(-E);
    return q * std::sin(q) - k * std::cos(q);
  };
  auto odd = [](double E) {
    const double q = std::sqrt(E + 1.0), k = std::sqrt(-E);
    return q * std::cos(q) + k * std::sin(q);
  };
  const double e0 = bisect(even, -0.999, -0.01);
  CHECK(std::abs(D(e0)) <= 1e-10 * std::max(1.0, std::abs(D(e0 + 0.05))));
  // The odd state only exists for a wider well; none here since sqrt(V0) a = 1 < pi/2.
  CHECK(odd(-0.999) * odd(-0.001) > 0.0);

  // Zeros of D on the physical branch: exactly one in (-1, 0).
  const long n = winding_number([&](cplx z) { return transfer_determinant(m, z, Branch::physical); },
                                Rect{-0.99, -0.01, -0.05, 0.05}, 32);
  CHECK(n == 1);
}

TEST_CASE("determinant is analytic") {
  const auto m = benchmark_model(0.1);
  const double d = 1e-6;
  for (cplx z : {cplx(0.6, -0.02), cplx(0.9, -0.05), cplx(1.2, 0.03)}) {
    const cplx dx = (transfer_determinant(m, z + d) - transfer_determinant(m, z - d)) / (2.0 * d);
    const cplx dy = (transfer_determinant(m, z + cplx(0, d)) - transfer_determinant(m, z - cplx(0, d))) /
                    cplx(0.0, 2.0 * d);
    CHECK(std::abs(dx - dy) <= 1e-6 * std::abs(dx));
  }
}

TEST_CASE("conjugate symmetry") {
  const auto m = benchmark_model(0.1);
  for (cplx z : {cplx(0.6, -0.02), cplx(0.9, 0.05), cplx(1.4, -0.1)}) {
    const double a = std::abs(transfer_determinant(m, std::conj(z)));
    const double b = std::abs(transfer_determinant(m, z, Branch::reflected));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("benchmark roots at h = 0.1") {
  const auto m = benchmark_model(0.1);
  const auto roots = find_resonances_lifted(m, SpectralBox{0.5, 1.5, 0.1}, 0.1);
  REQUIRE(roots.size() == 4);
  long total = 0;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    const auto& r = roots[i];
    total += r.multiplicity;
    CHECK(r.windingVerified);
    CHECK(r.z.imag() <= 0.0);
    CHECK(r.determinantResidual <= 1e-10 * r.localScale);
    CHECK(std::abs(r.z.real() - kFrozen[i].real()) <= 1e-10);
    CHECK(r.z.imag() == doctest::Approx(kFrozen[i].imag()).epsilon(0.02));
  }
  CHECK(total == argument_count(m, SpectralBox{0.5, 1.5, 0.1}, 64));
  // Widths grow with energy through the barrier.
  for (std::size_t i = 1; i < roots.size(); ++i) CHECK(roots[i].z.imag() < roots[i - 1].z.imag());

  // Tiny box around one root.
  const cplx z = roots[1].z;
  CHECK(argument_count(m, Rect{z.real() - 1e-3, z.real() + 1e-3, -1e-3, 1e-3}, 32) == 1);
}

TEST_CASE("newton refinement") {
  const auto m = benchmark_model(0.1);
  const auto root = newton_refine(m, cplx(0.766, 0.0));
  CHECK(std::abs(root.z - kFrozen[1]) <= 1e-10);

  const auto again = newton_refine(m, root.z);
  CHECK(again.iterations <= 2);
  CHECK(std::abs(again.z - root.z) <= 1e-12);

  const auto perturbed = newton_refine(m, root.z + cplx(1e-3, -1e-3));
  CHECK(std::abs(perturbed.z - root.z) <= 1e-12);

  try {
    newton_refine(free_model(), cplx(1.0, -0.1));
    FAIL("expected no convergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::noConvergence);
  }
}

TEST_CASE("tunnelling width shrinks with h") {
  const auto r10 = find_resonances_lifted(benchmark_model(0.1), SpectralBox{0.5, 0.6, 0.1}, 0.1);
  const auto r05 = find_resonances_lifted(benchmark_model(0.05), SpectralBox{0.5, 0.6, 0.1}, 0.1);
  REQUIRE(r10.size() == 1);
  REQUIRE(r05.size() == 1);
  CHECK(-r05.front().z.imag() < -r10.front().z.imag());
}

TEST_CASE("winding number of polynomials") {
  auto f = [](cplx z) { return (z - cplx(0.3, 0.1)) * (z - cplx(0.3, 0.1)) * (z + 2.0); };
  CHECK(winding_number(f, Rect{0.0, 1.0, -1.0, 1.0}, 16) == 2);
  CHECK(winding_number(f, Rect{-3.0, 1.0, -1.0, 1.0}, 16) == 3);
  CHECK(winding_number(f, Rect{2.0, 3.0, -1.0, 1.0}, 16) == 0);
  auto zeroOnEdge = [](cplx z) { return z - cplx(0.5, 0.0); };
  CHECK_THROWS_AS(winding_number(zeroOnEdge, Rect{0.5, 1.0, -1.0, 1.0}, 3, 8), Error);
}

TEST_CASE("to_spectrum") {
  const auto roots = find_resonances_lifted(benchmark_model(0.1), SpectralBox{0.5, 1.5, 0.1}, 0.1);
  const auto s = to_spectrum(roots, 0.1);
  CHECK(s.method == SpectrumMethod::oracle);
  CHECK(s.size() == roots.size());
  CHECK(s.h == 0.1);
}
