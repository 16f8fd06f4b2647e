#include "capres/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "capres/errors.hpp"
#include "capres/linalg.hpp"

namespace capres {

std::string_view to_string(SpectrumMethod m) {
  switch (m) {
    case SpectrumMethod::dirichlet: return "dirichlet";
    case SpectrumMethod::cap: return "cap";
    case SpectrumMethod::scaled: return "scaled";
    case SpectrumMethod::general: return "general";
    case SpectrumMethod::oracle: return "oracle";
  }
  return "general";
}

SpectrumMethod method_for(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::dirichletSelfAdjoint: return SpectrumMethod::dirichlet;
    case OperatorKind::cap: return SpectrumMethod::cap;
    case OperatorKind::scaled: return SpectrumMethod::scaled;
    case OperatorKind::general: return SpectrumMethod::general;
  }
  return SpectrumMethod::general;
}

double Rect::boundary_distance(cplx z) const {
  const double x = z.real(), y = z.imag();
  const double cx = std::clamp(x, reLo, reHi);
  const double cy = std::clamp(y, imLo, imHi);
  if (cx != x || cy != y) return std::hypot(x - cx, y - cy);
  return std::min({x - reLo, reHi - x, y - imLo, imHi - y});
}

namespace {

constexpr double kClusterTol = 1e-10;
constexpr double kMinRcond = 1e-12;

void annotate_clusters(Spectrum& s) {
  const std::size_t n = s.size();
  s.multiplicity.assign(n, 1);
  s.defective.assign(n, false);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    // Sorted by real part, so a cluster is a run of consecutive entries.
    while (j < n && std::abs(s.eigenvalues[j] - s.eigenvalues[j - 1]) <= kClusterTol) ++j;
    const int m = static_cast<int>(j - i);
    for (std::size_t k = i; k < j; ++k) s.multiplicity[k] = m;
    if (m > 1 && s.eigenvectors) {
      const auto& v = *s.eigenvectors;
      for (std::size_t p = i; p < j; ++p) {
        for (std::size_t q = p + 1; q < j; ++q) {
          const double overlap = std::abs(v.col(static_cast<Eigen::Index>(p))
                                              .dot(v.col(static_cast<Eigen::Index>(q))));
          if (overlap > 1.0 - 1e-6) s.defective[p] = s.defective[q] = true;
        }
      }
    }
    i = j;
  }
}

}  // namespace

Spectrum eig_dense(const DiscreteOperator& a, bool wantVectors) {
  const Eigen::Index n = a.matrix.rows();
  if (n > kDenseBudget) {
    std::ostringstream os;
    os << "dense eigensolve of dimension " << n << " exceeds the budget " << kDenseBudget;
    throw Error(ErrorKind::resourceLimit, os.str());
  }
  auto res = linalg::eig_general(a.matrix, wantVectors);

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) {
    const cplx zp = res.values[p], zq = res.values[q];
    if (zp.real() != zq.real()) return zp.real() < zq.real();
    return zp.imag() < zq.imag();
  });

  Spectrum s;
  s.method = method_for(a.kind);
  s.h = a.h;
  s.valid = res.info == 0;
  s.eigenvalues.reserve(order.size());
  for (std::size_t k : order) s.eigenvalues.push_back(res.values[k]);

  if (wantVectors) {
    ComplexMatrix v(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      v.col(k) = res.vectors.col(static_cast<Eigen::Index>(order[static_cast<std::size_t>(k)]));
      const double nrm = v.col(k).norm();
      if (nrm > 0.0) v.col(k) /= nrm;
    }
    s.residuals.resize(static_cast<std::size_t>(n));
    if (a.tridiagonal) {
      const auto bands = a.bands();
      const auto view = bands.view();
      for (Eigen::Index k = 0; k < n; ++k) {
        s.residuals[static_cast<std::size_t>(k)] = kernels::tridiag_residual(
            view, std::span<const cplx>(v.col(k).data(), static_cast<std::size_t>(n)),
            s.eigenvalues[static_cast<std::size_t>(k)]);
      }
    } else {
      ComplexMatrix av = a.matrix * v;
      for (Eigen::Index k = 0; k < n; ++k) {
        s.residuals[static_cast<std::size_t>(k)] =
            (av.col(k) - s.eigenvalues[static_cast<std::size_t>(k)] * v.col(k)).norm();
      }
    }
    s.eigenvectors = std::move(v);
  }
  annotate_clusters(s);
  if (!s.valid) {
    std::ostringstream os;
    os << "eigenvalue iteration failed to converge (zgeev info = " << res.info << ")";
    throw Error(ErrorKind::numericalFailure, os.str());
  }
  return s;
}

Spectrum filter_rect(const Spectrum& s, const Rect& r) {
  Spectrum out;
  out.method = s.method;
  out.h = s.h;
  out.valid = s.valid;
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (r.contains(s.eigenvalues[i])) keep.push_back(static_cast<Eigen::Index>(i));
  }
  for (Eigen::Index i : keep) {
    const auto ui = static_cast<std::size_t>(i);
    out.eigenvalues.push_back(s.eigenvalues[ui]);
    if (!s.residuals.empty()) out.residuals.push_back(s.residuals[ui]);
    if (!s.multiplicity.empty()) out.multiplicity.push_back(s.multiplicity[ui]);
    if (!s.defective.empty()) out.defective.push_back(s.defective[ui]);
  }
  if (s.eigenvectors) {
    ComplexMatrix v(s.eigenvectors->rows(), static_cast<Eigen::Index>(keep.size()));
    for (Eigen::Index k = 0; k < v.cols(); ++k) v.col(k) = s.eigenvectors->col(keep[static_cast<std::size_t>(k)]);
    out.eigenvectors = std::move(v);
  }
  return out;
}

Spectrum filter_box(const Spectrum& s, const SpectralBox& box) { return filter_rect(s, box.rect()); }

std::size_t count_in(const std::vector<cplx>& points, const Rect& r) {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [&](cplx z) { return r.contains(z); }));
}

ClusterDecomposition cluster_boxes(const std::vector<cplx>& points, double c, double h, int nsharp,
                                   double parentA, double parentB) {
  if (!(c > 0.0) || !(h > 0.0) || nsharp < 1 || !(parentB > parentA)) {
    throw Error(ErrorKind::invalidArgument, "cluster_boxes needs c > 0, h > 0, nsharp >= 1, a < b");
  }
  ClusterDecomposition d;
  d.c = c;
  d.w = std::pow(h, -(5.0 * nsharp + 1.0) / 2.0) * c;
  const double cap = (parentB - parentA) / 8.0;
  if (d.w > cap) {
    d.w = cap;
    d.separationAchievable = false;
  }
  if (points.empty()) return d;

  std::vector<double> re;
  re.reserve(points.size());
  for (cplx z : points) re.push_back(z.real());
  std::sort(re.begin(), re.end());

  // Gaps below 6w are merged so that boxes padded by w stay 4w apart.
  const double mergeGap = 6.0 * d.w;
  double lo = re.front(), hi = re.front();
  for (std::size_t i = 1; i < re.size(); ++i) {
    if (re[i] - hi < mergeGap) {
      hi = re[i];
    } else {
      d.boxes.push_back({lo - d.w, hi + d.w, c});
      lo = hi = re[i];
    }
  }
  d.boxes.push_back({lo - d.w, hi + d.w, c});
  return d;
}

ProjectorCount contour_projector_count(const DiscreteOperator& a, const Rect& r, int nodesPerEdge) {
  if (nodesPerEdge < 2) throw Error(ErrorKind::invalidArgument, "need at least 2 nodes per edge");
  if (!(r.reHi > r.reLo) || !(r.imHi > r.imLo)) {
    throw Error(ErrorKind::invalidArgument, "contour rectangle must have positive width and height");
  }
  const auto rule = linalg::gauss_legendre(nodesPerEdge);
  const cplx corners[4] = {{r.reLo, r.imLo}, {r.reHi, r.imLo}, {r.reHi, r.imHi}, {r.reLo, r.imHi}};
  cplx integral(0.0, 0.0);
  for (int e = 0; e < 4; ++e) {
    const cplx z0 = corners[e];
    const cplx z1 = corners[(e + 1) % 4];
    const cplx mid = 0.5 * (z0 + z1);
    const cplx half = 0.5 * (z1 - z0);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const cplx z = mid + half * rule.nodes[k];
      const auto rt = linalg::resolvent_trace(a, z);
      if (rt.rcond < kMinRcond || !std::isfinite(std::abs(rt.trace))) {
        std::ostringstream os;
        os << "resolvent is (near) singular at contour node " << z.real() << (z.imag() < 0 ? "" : "+")
           << z.imag() << "i (rcond " << rt.rcond << ")";
        throw Error(ErrorKind::contourTouchesSpectrum, os.str());
      }
      integral += rule.weights[k] * half * rt.trace;
    }
  }
  ProjectorCount out;
  out.trace = integral / cplx(0.0, 2.0 * std::numbers::pi);
  out.count = std::lround(out.trace.real());
  out.traceResidual = std::abs(out.trace - static_cast<double>(out.count));
  return out;
}

ProjectorCount contour_projector_count(const DiscreteOperator& a, const SpectralBox& box,
                                       int nodesPerEdge) {
  return contour_projector_count(a, box.rect(), nodesPerEdge);
}

double min_singular_value(const DiscreteOperator& a, cplx z) {
  ComplexMatrix m = a.matrix;
  m.diagonal().array() -= z;
  return linalg::smallest_singular_value(std::move(m));
}

}  // namespace capres
