#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "capres/operators.hpp"

namespace capres {

enum class SpectrumMethod { dirichlet, cap, scaled, general, oracle };

std::string_view to_string(SpectrumMethod m);
SpectrumMethod method_for(OperatorKind kind);

/// Eigenvalues sorted by (Re, Im) ascending, with optional right eigenvectors
/// (columns, unit 2-norm) and per-pair residuals ||A v - z v||.
struct Spectrum {
  std::vector<cplx> eigenvalues;
  std::optional<ComplexMatrix> eigenvectors;
  std::vector<double> residuals;
  /// Size of the cluster (eigenvalues closer than 1e-10) each entry belongs to.
  std::vector<int> multiplicity;
  /// Clustered entries whose computed eigenvectors are (numerically) parallel.
  std::vector<bool> defective;
  SpectrumMethod method = SpectrumMethod::general;
  double h = 0.0;
  /// False when the eigenvalue iteration failed; the data is then partial.
  bool valid = true;

  std::size_t size() const { return eigenvalues.size(); }
};

/// Closed rectangle [reLo, reHi] x [imLo, imHi].
struct Rect {
  double reLo = 0.0, reHi = 0.0, imLo = 0.0, imHi = 0.0;

  bool contains(cplx z) const {
    return z.real() >= reLo && z.real() <= reHi && z.imag() >= imLo && z.imag() <= imHi;
  }
  double width() const { return reHi - reLo; }
  double height() const { return imHi - imLo; }
  double perimeter() const { return 2.0 * (width() + height()); }
  /// Distance from z to the boundary of the rectangle.
  double boundary_distance(cplx z) const;
};

/// Omega = [a, b] + i[-c, 0].
struct SpectralBox {
  double a = 0.0, b = 0.0, c = 0.0;

  Rect rect() const { return {a, b, -c, 0.0}; }
  bool contains(cplx z) const { return rect().contains(z); }
};

/// Spectrum of a dense operator. Dimension is capped at kDenseBudget.
inline constexpr Eigen::Index kDenseBudget = 4096;
Spectrum eig_dense(const DiscreteOperator& a, bool wantVectors);

/// Sub-spectrum inside the (boundary-inclusive) box.
Spectrum filter_box(const Spectrum& s, const SpectralBox& box);
Spectrum filter_rect(const Spectrum& s, const Rect& r);
std::size_t count_in(const std::vector<cplx>& points, const Rect& r);

struct ClusterDecomposition {
  std::vector<SpectralBox> boxes;
  double w = 0.0;
  double c = 0.0;
  /// False when w had to be capped at (parent width)/8.
  bool separationAchievable = true;
};

/// Greedy decomposition of the points into separated boxes with
/// w = h^{-(5 nsharp + 1)/2} c, capped at (parentB - parentA)/8.
ClusterDecomposition cluster_boxes(const std::vector<cplx>& points, double c, double h, int nsharp,
                                   double parentA, double parentB);

struct ProjectorCount {
  long count = 0;
  double traceResidual = 0.0;
  cplx trace;
};

/// Counts eigenvalues in the rectangle via the trace of the contour projector
/// (1/2 pi i) \oint (z - A)^{-1} dz, Gauss-Legendre nodesPerEdge on each edge.
ProjectorCount contour_projector_count(const DiscreteOperator& a, const Rect& r, int nodesPerEdge);
ProjectorCount contour_projector_count(const DiscreteOperator& a, const SpectralBox& box,
                                       int nodesPerEdge);

/// Smallest singular value of A - z I.
double min_singular_value(const DiscreteOperator& a, cplx z);

}  // namespace capres
