#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "capres/errors.hpp"
#include "capres/operators.hpp"
#include "capres/oracle.hpp"
#include "capres/spectra.hpp"

using namespace capres;

namespace {

DiscreteOperator from_rows(std::initializer_list<std::initializer_list<cplx>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  ComplexMatrix a(n, n);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (cplx v : r) a(i, j++) = v;
    ++i;
  }
  return make_general_operator(a);
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

DiscreteOperator random_matrix(unsigned seed, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  ComplexMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(n01(rng), n01(rng)) / std::sqrt(2.0 * n);
  }
  return make_general_operator(a);
}

}  // namespace

TEST_CASE("eig_dense small cases") {
  const auto d = eig_dense(from_rows({{1.0, 0.0}, {0.0, cplx(2.0, 3.0)}}), true);
  REQUIRE(d.size() == 2);
  CHECK(d.eigenvalues[0] == cplx(1.0, 0.0));
  CHECK(d.eigenvalues[1] == cplx(2.0, 3.0));
  CHECK(d.residuals[0] <= 1e-15);

  const auto nil = eig_dense(from_rows({{0.0, 1.0}, {0.0, 0.0}}), true);
  CHECK(std::abs(nil.eigenvalues[0]) <= 1e-12);
  CHECK(nil.multiplicity[0] == 2);
  CHECK(nil.defective[0]);

  const auto comp = eig_dense(from_rows({{0.0, 1.0}, {1.0, 0.0}}), false);
  CHECK(std::abs(comp.eigenvalues[0] + 1.0) <= 1e-14);
  CHECK(std::abs(comp.eigenvalues[1] - 1.0) <= 1e-14);
  CHECK_FALSE(comp.eigenvectors.has_value());

  CHECK(eig_dense(make_general_operator(ComplexMatrix(0, 0)), true).size() == 0);
  CHECK_THROWS_AS(eig_dense(make_general_operator(ComplexMatrix::Zero(4097, 1)), false), Error);
}

TEST_CASE("eigenpairs are backward stable and ordered") {
  const auto a = random_matrix(3, 40);
  const auto s = eig_dense(a, true);
  const double norm = a.matrix.cwiseAbs().rowwise().sum().maxCoeff();
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.residuals[i] <= 1e-8 * norm);
    CHECK(s.eigenvectors->col(static_cast<Eigen::Index>(i)).norm() == doctest::Approx(1.0));
    if (i > 0) {
      const cplx p = s.eigenvalues[i - 1], q = s.eigenvalues[i];
      CHECK((p.real() < q.real() || (p.real() == q.real() && p.imag() <= q.imag())));
    }
  }
  const auto again = eig_dense(a, true);
  CHECK(again.eigenvalues == s.eigenvalues);
}

TEST_CASE("benchmark CAP eigenpairs") {
  const auto q = assemble_q_cap(benchmark_model(0.1), make_grid(6.0, 399), bench_cap());
  const auto s = eig_dense(q, true);
  CHECK(s.method == SpectrumMethod::cap);
  CHECK(s.h == 0.1);
  const double norm = q.matrix.cwiseAbs().rowwise().sum().maxCoeff();
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.residuals[i] <= 1e-8 * (1.0 + std::abs(s.eigenvalues[i])) * norm);
  }
}

TEST_CASE("filter_box") {
  Spectrum s;
  CHECK(filter_box(s, {0.0, 1.0, 0.1}).size() == 0);
  s.eigenvalues = {0.5, cplx(1.0, -0.01), 2.0};
  const auto f = filter_box(s, {0.9, 1.1, 0.1});
  REQUIRE(f.size() == 1);
  CHECK(f.eigenvalues[0] == cplx(1.0, -0.01));
  // Closed on every side.
  CHECK(filter_box(s, {0.5, 1.0, 0.01}).size() == 2);
}

TEST_CASE("CAP count in the window equals the oracle count") {
  const double h = 0.1;
  const SpectralBox w{0.5, 1.5, 0.05};
  const auto q = assemble_q_cap(benchmark_model(h), make_grid(6.0, 599), bench_cap());
  const auto s = filter_box(eig_dense(q, false), w);
  CHECK(static_cast<long>(s.size()) == argument_count(benchmark_model(h), w, 64));
}

TEST_CASE("cluster_boxes") {
  const double h = 0.5, c = 1e-3;
  const double w = std::pow(h, -3.0) * c;
  const auto one = cluster_boxes({cplx(1.0, -1e-4)}, c, h, 1, 0.0, 2.0);
  REQUIRE(one.boxes.size() == 1);
  CHECK(one.w == doctest::Approx(w));
  CHECK(one.boxes[0].b - one.boxes[0].a == doctest::Approx(2.0 * w));
  CHECK(one.separationAchievable);

  const auto two = cluster_boxes({1.0, 1.0 + 10.0 * w}, c, h, 1, 0.0, 2.0);
  REQUIRE(two.boxes.size() == 2);
  CHECK(two.boxes[1].a - two.boxes[0].b >= 4.0 * w);

  const auto capped = cluster_boxes({1.0}, 0.1, h, 1, 0.9, 1.1);
  CHECK_FALSE(capped.separationAchievable);
  CHECK(capped.w == doctest::Approx(0.025));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<cplx> pts;
  for (int i = 0; i < 40; ++i) pts.emplace_back(u(rng), -0.5 * c * u(rng) / 2.0);
  const auto d = cluster_boxes(pts, c, 0.05, 1, 0.0, 2.0);
  for (std::size_t i = 1; i < d.boxes.size(); ++i) CHECK(d.boxes[i].a - d.boxes[i - 1].b >= 4.0 * d.w);
  for (cplx z : pts) {
    int inside = 0;
    for (const auto& b : d.boxes) {
      if (z.real() > b.a && z.real() < b.b) {
        ++inside;
        CHECK(std::min(z.real() - b.a, b.b - z.real()) >= d.w / 2.0);
      }
    }
    CHECK(inside == 1);
  }
}

TEST_CASE("cluster_boxes around benchmark resonances") {
  const double h = 0.05;
  const auto roots = find_resonances_lifted(benchmark_model(h), SpectralBox{0.5, 1.5, 0.1}, 0.1);
  std::vector<cplx> z;
  for (const auto& r : roots) z.push_back(r.z);
  const double c = std::pow(h, 6.0);
  const auto d = cluster_boxes(z, c, h, 1, 0.5, 1.5);
  for (cplx p : z) {
    int inside = 0;
    for (const auto& b : d.boxes) inside += (p.real() > b.a && p.real() < b.b && p.imag() > -b.c) ? 1 : 0;
    CHECK(inside == 1);
  }
}

TEST_CASE("contour projector counts") {
  const auto d = from_rows({{1.0, 0.0}, {0.0, 3.0}});
  const auto pc = contour_projector_count(d, Rect{0.5, 1.5, -0.5, 0.5}, 64);
  CHECK(pc.count == 1);
  CHECK(pc.traceResidual <= 1e-10);
  CHECK(contour_projector_count(d, Rect{1.5, 2.5, -0.5, 0.5}, 64).count == 0);
  // Odd rules place a node at the edge midpoint, which is the eigenvalue here.
  CHECK_THROWS_AS(contour_projector_count(d, Rect{1.0, 2.0, -0.5, 0.5}, 63), Error);

  const auto a = random_matrix(5, 50);
  const auto eig = eig_dense(a, false).eigenvalues;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  for (int attempt = 0; attempt < 2000 && checked < 10; ++attempt) {
    const double x = u(rng), y = u(rng);
    const Rect r{x, x + 0.4, y, y + 0.4};
    const double spacing = 0.4 / 64.0;
    if (std::any_of(eig.begin(), eig.end(), [&](cplx z) { return r.boundary_distance(z) < 2.0 * spacing; })) {
      continue;
    }
    CHECK(contour_projector_count(a, r, 64).count == static_cast<long>(count_in(eig, r)));
    ++checked;
  }
  CHECK(checked == 10);
}

TEST_CASE("tridiagonal and dense resolvent traces agree") {
  const auto q = assemble_q_cap(benchmark_model(0.1), make_grid(6.0, 199), bench_cap());
  DiscreteOperator dense = make_general_operator(q.matrix);
  const Rect r{0.55, 1.2, -0.05, 0.02};
  const auto a = contour_projector_count(q, r, 32);
  const auto b = contour_projector_count(dense, r, 32);
  CHECK(a.count == b.count);
  CHECK(std::abs(a.trace - b.trace) <= 1e-9);
}

TEST_CASE("min_singular_value") {
  CHECK(min_singular_value(from_rows({{1.0, 0.0}, {0.0, 2.0}}), 0.0) == doctest::Approx(1.0));
  CHECK(min_singular_value(from_rows({{1.0, 0.0}, {0.0, 2.0}}), 2.0) <= 1e-12);
  const auto q = assemble_q_cap(benchmark_model(0.1), make_grid(6.0, 299), bench_cap());
  CHECK(min_singular_value(q, cplx(1.0, 0.5)) >= 0.5 - 1e-12);

  const auto a = random_matrix(9, 30);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const cplx z1(u(rng), u(rng)), z2(u(rng), u(rng));
    CHECK(std::abs(min_singular_value(a, z1) - min_singular_value(a, z2)) <= std::abs(z1 - z2) + 1e-12);
  }
}

TEST_CASE("counting bound grows slowly as h halves") {
  const SpectralBox w{0.5, 1.5, 0.05};
  const auto n1 = filter_box(eig_dense(assemble_q_cap(benchmark_model(0.1), make_grid(6.0, 599), bench_cap()), false), w).size();
  const auto n2 = filter_box(eig_dense(assemble_q_cap(benchmark_model(0.05), make_grid(6.0, 599), bench_cap()), false), w).size();
  CHECK(n1 > 0);
  CHECK(static_cast<double>(n2) <= 2.5 * static_cast<double>(n1));
}
