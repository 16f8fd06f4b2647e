#pragma once

#include <functional>
#include <vector>

#include "capres/model.hpp"
#include "capres/spectra.hpp"

namespace capres {

/// Sheet on which k0 = sqrt(z)/h is evaluated in the free region.
enum class Branch {
  principal,  // Re sqrt >= 0, cut on (-inf, 0]; continues Im z > 0 into Im z < 0 (resonances)
  reflected,  // -principal
  physical,   // Im k0 >= 0, cut on [0, inf); bound states
};

/// Outgoing-normalized transfer determinant: the coefficient of the incoming
/// wave e^{-i k0 x} on the right for the solution that is e^{-i k0 x} on the
/// left. Its zeros are the resonances (principal) or bound states (physical).
cplx transfer_determinant(const SemiclassicalModel& m, cplx z, Branch branch = Branch::principal);

struct OracleResonance {
  cplx z;
  double determinantResidual = 0.0;  // |D(z)|
  double localScale = 0.0;           // |D'(z)| (1 + |z|)
  bool windingVerified = false;
  int multiplicity = 1;
  bool degenerate = false;  // multiple zero: reported at subdivision resolution
  int iterations = 0;
};

/// Winding number of f around the rectangle boundary (counterclockwise).
/// Starts from nodesPerEdge samples per edge and bisects any step whose
/// argument increment is not clearly below pi/4; throws refine-contour when
/// the bisection depth is exhausted.
long winding_number(const std::function<cplx(cplx)>& f, const Rect& r, int nodesPerEdge,
                    int maxDepth = 60);

/// Number of resonances (zeros of D, with multiplicity) in the rectangle.
long argument_count(const SemiclassicalModel& m, const Rect& r, int nodesPerEdge);
long argument_count(const SemiclassicalModel& m, const SpectralBox& box, int nodesPerEdge);

/// Newton on D with a central-difference derivative.
OracleResonance newton_refine(const SemiclassicalModel& m, cplx z0);

struct ResonanceSearchOptions {
  int nodesPerEdge = 32;
  int maxDepth = 40;
  double minBoxSize = 1e-9;
};

/// Recursive subdivision driven by argument_count, then Newton in every
/// sub-box that isolates a single zero. Sorted by (Re, Im).
std::vector<OracleResonance> find_resonances(const SemiclassicalModel& m, const Rect& region,
                                             const ResonanceSearchOptions& opts = {});

/// The same search over a box that touches the real axis, run on the box
/// raised by `lift` above the axis so no contour edge runs along it. D has no
/// zeros with Im z > 0 on the principal sheet, so the zeros found are those of
/// the original box.
std::vector<OracleResonance> find_resonances_lifted(const SemiclassicalModel& m,
                                                    const SpectralBox& box, double lift,
                                                    const ResonanceSearchOptions& opts = {});

Spectrum to_spectrum(const std::vector<OracleResonance>& roots, double h);

}  // namespace capres
