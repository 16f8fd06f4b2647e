#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capres/model.hpp"
#include "capres/operators.hpp"
#include "capres/oracle.hpp"
#include "capres/spectra.hpp"

namespace capres {

/// Slack on the Im z <= 0 edge of boxes touching the real axis; eigenvalues of
/// the truncated operators can sit a rounding error above it.
inline constexpr double kRealAxisSlack = 1e-10;

// ---- exact identities ------------------------------------------------------

/// |(-Im z) ||f||^2 - sum_j Re W(x_j) |f_j|^2| / (1 + |z|) for every eigenpair.
std::vector<double> absorption_identity_check(const DiscreteOperator& q, const Spectrum& s,
                                              const CapProfile& c);

/// sigma_min(Q - z) - Im z for every sample (all samples need Im z > 0).
std::vector<double> resolvent_bound_check(const DiscreteOperator& q, const std::vector<cplx>& samples);

// ---- quasimodes ------------------------------------------------------------

struct QuasimodeEntry {
  double E = 0.0;
  ComplexVector u;  // unit 2-norm, grid values
  double supportRadius = 0.0;
};

struct QuasimodeSet {
  Grid grid;
  std::vector<QuasimodeEntry> entries;
  double residualBound = 0.0;  // R(h)
  int N = 0;                   // independence exponent
  double M = 1.0;

  /// Unit norms, compact support and max ||(P_R - E) u|| <= residualBound.
  ValidationVerdict validate(const SemiclassicalModel& m) const;
};

struct QuasimodeResult {
  QuasimodeEntry entry;
  double residual = 0.0;    // ||(P_R - E) chi u|| / ||chi u||
  double width = 0.0;       // -Im z used in modelBound
  double modelBound = 0.0;  // sqrt(-Im z) (CAP) or h^{1/2} sqrt(-Im z) (resonant state)
  double cutNorm = 0.0;     // ||chi u|| for unit u
  double normGuard = 0.0;   // 1 - sqrt(-Im z / delta0), CAP only
  bool localized = true;    // cutNorm >= 1/2
  bool admissibleCutoff = true;
  CapRegime regime = CapRegime::caseA;
};

/// Cut-off CAP eigenfunction as a quasimode of P_R at E = Re z. chi should equal
/// 1 up to R2 and vanish before the Dirichlet wall; other cutoffs are measured
/// and flagged.
QuasimodeResult quasimode_from_q_eigenpair(const SemiclassicalModel& m, const Grid& g,
                                           const CapProfile& c, cplx z, const ComplexVector& f,
                                           const CutoffFunction& chi);

/// Cut-off P_theta eigenvector as a quasimode of P_R. chi must vanish before
/// the scaling starts at B. regime is caseB when the plateau ends inside R0'.
QuasimodeResult quasimode_from_resonant_state(const SemiclassicalModel& m, const Grid& g,
                                              const ScalingProfile& s, cplx z, const ComplexVector& u,
                                              const CutoffFunction& chi);

/// (|u(+-rho)|^2 + |h u'(+-rho)|^2 summed) / sum_{|x_j| < rho} |u_j|^2 dx, with
/// rho snapped to the nearest node and centered differences.
double boundary_decay_probe(const Grid& g, const ComplexVector& u, double rho, double h);

/// Square well V = V0 outside |x| < a (on the whole line), 0 inside.
struct SquareWellLevel {
  double E = 0.0;
  bool even = true;
};

/// Bound states with Emin < E < min(Emax, V0), by bisection on the even and odd
/// transcendental equations. Sorted by energy.
std::vector<SquareWellLevel> square_well_levels(double V0, double a, double h, double Emin, double Emax);

/// Exact square-well eigenfunction sampled on the grid, set to zero for
/// |x| > cutRadius, unit 2-norm.
QuasimodeEntry square_well_quasimode(double V0, double a, double h, const SquareWellLevel& level,
                                     const Grid& g, double cutRadius);

/// ||(P_R - E) u|| with P_R the Dirichlet operator of m on g.
double quasimode_residual(const SemiclassicalModel& m, const Grid& g, const QuasimodeEntry& q);

// ---- matching boxes --------------------------------------------------------

enum class MatchDirection { resonanceToCap, capToResonance, countingSandwich };

std::string_view to_string(MatchDirection d);

struct MatchParams {
  double C = 1.0;  // eligibility box constant
  int nsharp = 1;
  double a0 = 0.5, b0 = 1.5;
  /// gamma(R1) in the resonanceToCap exponential term; omitted when unset.
  std::optional<double> gamma;
  /// B in the capToResonance width.
  double B = 2.0;
  /// Discretization allowance added to the sqrt(-Im) basis of the width,
  /// typically dx^2 h^-2.
  double allowance = 0.0;
};

struct MatchPair {
  cplx source;
  cplx target;
  double distance = 0.0;
  double width = 0.0;  // epsilon(h) or delta(h) evaluated with the fitted constant
  bool boxSatisfied = false;
};

struct ComparisonReport {
  MatchDirection direction = MatchDirection::resonanceToCap;
  std::vector<MatchPair> pairs;
  double fittedC1 = 0.0;
  double fittedC2 = 0.0;
  std::map<std::string, double> parameters;
  std::vector<std::string> flags;
  std::size_t skipped = 0;
};

/// Whether `target` lies in [Re s - w L, Re s + w L] + i[-w, 0], L = log(1/h).
bool in_match_box(cplx source, cplx target, double width, double h);

/// Re-derives every boxSatisfied from the stored points and widths.
bool report_consistent(const ComparisonReport& r);

/// Nearest-target matching for every source point in the eligibility box.
/// The fitted constant is the smallest one that puts every matched target
/// inside its box.
ComparisonReport theorem1_match(const std::vector<cplx>& source, const std::vector<cplx>& target,
                                MatchDirection direction, double h, const MatchParams& params);

// ---- counting sandwich -----------------------------------------------------

struct SandwichOptions {
  double Mexp = 4.0;        // c <= h^Mexp
  double epsilon0 = 0.1;    // exp(-h^{-2/3 + eps0}) <= c, reported only
  double caseBPower = 10.0; // O(h^inf) widening realized as h^caseBPower
  int oracleNodesPerEdge = 64;
};

struct SandwichCounts {
  long inner = 0;   // N_Q(Omega_-)
  long middle = 0;  // N_P(Omega)
  long outer = 0;   // N_Q(Omega_+)
  Rect innerBox;
  Rect outerBox;
  bool holds() const { return inner <= middle && middle <= outer; }
};

/// Omega_- and Omega_+ for exponent Nexp (caseB widens Omega_+ by h^caseBPower).
std::pair<Rect, Rect> sandwich_boxes(const SpectralBox& window, double Nexp, double h, CapRegime regime,
                                     const SandwichOptions& opts);

/// Window constraints: a0 <= a < b <= b0, b - a >= 2c, 0 < c <= h^Mexp.
ValidationVerdict validate_window(const SemiclassicalModel& m, const SpectralBox& w, double h,
                                  const SandwichOptions& opts);

SandwichCounts sandwich_counts(const SemiclassicalModel& m, const std::vector<cplx>& capEigenvalues,
                               const SpectralBox& window, double Nexp, CapRegime regime,
                               const SandwichOptions& opts);

/// Computes the CAP spectrum on g and the oracle count at h = m.h, and reports
/// both inequalities for the given exponent. parameters carries the counts.
ComparisonReport theorem2_sandwich(const SemiclassicalModel& m, const Grid& g, const CapProfile& c,
                                   const SpectralBox& window, double Nexp,
                                   const SandwichOptions& opts = {});

/// Smallest exponent on the grid 0, 0.5, ..., 10 for which both inequalities
/// hold; nullopt when none does.
std::optional<double> fit_sandwich_exponent(const SemiclassicalModel& m,
                                            const std::vector<cplx>& capEigenvalues,
                                            const SpectralBox& window, CapRegime regime,
                                            const SandwichOptions& opts = {});

// ---- quasimodes force spectrum --------------------------------------------

struct QuasimodeParams {
  double C0BM = 1.0;  // C0 * B * M
  double B = 2.0;
  int nsharp = 1;
  double C = 1.0;  // regime constant for the residual bound
};

struct QuasimodeVerdict {
  bool holds = false;
  Rect box;
  double c = 0.0;
  std::size_t found = 0;
  double gramSigmaMin = 0.0;
  double gramThreshold = 0.0;
  bool residualInRegime = true;
  /// Smallest C0 B M for which the box would contain the required points.
  double fittedC0BM = 0.0;
};

/// Box [min E - c L, max E + c L] - i[0, c], c = max(C0BM R h^{-nsharp-N-1}, e^{-B/h}),
/// after checking the Gram matrix hypothesis sigma_min >= (h^N / M)^2.
QuasimodeVerdict quasimode_implies_spectrum(const QuasimodeSet& qs, const std::vector<cplx>& target,
                                            double h, const QuasimodeParams& params);

}  // namespace capres
