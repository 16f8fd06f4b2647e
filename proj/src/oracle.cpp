#include "capres/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "capres/errors.hpp"

namespace capres {
namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

cplx free_wavenumber(cplx z, double h, Branch branch) {
  if (z == cplx(0.0, 0.0)) throw Error(ErrorKind::branchAmbiguity, "z = 0 is a branch point");
  switch (branch) {
    case Branch::principal:
    case Branch::reflected: {
      if (z.imag() == 0.0 && z.real() < 0.0) {
        throw Error(ErrorKind::branchAmbiguity, "z lies on the branch cut (-inf, 0]");
      }
      const cplx k = std::sqrt(z) / h;
      return branch == Branch::principal ? k : -k;
    }
    case Branch::physical: {
      if (z.imag() == 0.0 && z.real() > 0.0) {
        throw Error(ErrorKind::branchAmbiguity, "z lies on the physical-sheet cut [0, inf)");
      }
      cplx k = std::sqrt(z) / h;
      if (k.imag() < 0.0) k = -k;
      return k;
    }
  }
  return {};
}

// sin(kL)/k, even in k, finite at k = 0.
cplx sinc_length(cplx k, double L) {
  const cplx kl = k * L;
  if (std::abs(kl) < 1e-6) return L * (1.0 - kl * kl / 6.0);
  return std::sin(kl) / k;
}

}  // namespace

cplx transfer_determinant(const SemiclassicalModel& m, cplx z, Branch branch) {
  const cplx k0 = free_wavenumber(z, m.h, branch);
  const auto bp = m.potential.breakpoints();
  const auto vals = m.potential.values();
  if (vals.empty()) return cplx(1.0, 0.0);

  const double h = m.h;
  const double xl = bp.front();
  // State (u, h u') of the solution equal to e^{-i k0 x} left of the support.
  cplx u = std::exp(-kI * k0 * xl);
  cplx du = -kI * h * k0 * u;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double L = bp[i + 1] - bp[i];
    const cplx k2 = (z - vals[i]) / (h * h);
    const cplx k = std::sqrt(k2);
    const cplx c = std::cos(k * L);
    const cplx s = sinc_length(k, L);
    const cplx un = c * u + s * du / h;
    const cplx dun = -h * k2 * s * u + c * du;
    u = un;
    du = dun;
  }
  const double xr = bp.back();
  return std::exp(kI * k0 * xr) * (u - du / (kI * h * k0)) * 0.5;
}

// ---------------------------------------------------------------------------

namespace {

struct ArgWalker {
  const std::function<cplx(cplx)>& f;
  int maxDepth;

  static double arg_step(cplx from, cplx to) { return std::arg(to / from); }

  cplx eval(cplx z) const {
    const cplx v = f(z);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || v == cplx(0.0, 0.0)) {
      std::ostringstream os;
      os << "function vanishes or is not finite on the contour at " << z;
      throw Error(ErrorKind::refineContour, os.str());
    }
    return v;
  }

  double walk(cplx za, cplx fa, cplx zb, cplx fb, int depth) const {
    const cplx zm = 0.5 * (za + zb);
    const cplx fm = eval(zm);
    const double d = arg_step(fa, fb);
    const double d1 = arg_step(fa, fm);
    const double d2 = arg_step(fm, fb);
    constexpr double kAccept = kPi / 4.0;
    if (std::abs(d1) < kAccept && std::abs(d2) < kAccept && std::abs(d1 + d2 - d) < 1e-9) {
      return d;
    }
    if (depth >= maxDepth || std::abs(zb - za) <= 1e-15 * (1.0 + std::abs(zm))) {
      std::ostringstream os;
      os << "argument increment not resolved near " << zm << " (depth " << depth << ")";
      throw Error(ErrorKind::refineContour, os.str());
    }
    return walk(za, fa, zm, fm, depth + 1) + walk(zm, fm, zb, fb, depth + 1);
  }
};

}  // namespace

long winding_number(const std::function<cplx(cplx)>& f, const Rect& r, int nodesPerEdge,
                    int maxDepth) {
  if (nodesPerEdge < 1) throw Error(ErrorKind::invalidArgument, "need at least one node per edge");
  if (!(r.reHi > r.reLo) || !(r.imHi > r.imLo)) {
    throw Error(ErrorKind::invalidArgument, "winding rectangle must have positive width and height");
  }
  const ArgWalker walker{f, maxDepth};
  const cplx corners[4] = {{r.reLo, r.imLo}, {r.reHi, r.imLo}, {r.reHi, r.imHi}, {r.reLo, r.imHi}};
  double total = 0.0;
  for (int e = 0; e < 4; ++e) {
    const cplx z0 = corners[e];
    const cplx z1 = corners[(e + 1) % 4];
    cplx za = z0;
    cplx fa = walker.eval(za);
    for (int k = 1; k <= nodesPerEdge; ++k) {
      const cplx zb = k == nodesPerEdge ? z1 : z0 + (z1 - z0) * (static_cast<double>(k) / nodesPerEdge);
      const cplx fb = walker.eval(zb);
      total += walker.walk(za, fa, zb, fb, 0);
      za = zb;
      fa = fb;
    }
  }
  const double turns = total / (2.0 * kPi);
  const long n = std::lround(turns);
  if (std::abs(turns - static_cast<double>(n)) > 1e-6) {
    throw Error(ErrorKind::refineContour, "accumulated argument is not a multiple of 2 pi");
  }
  return n;
}

namespace {

void check_region(const Rect& r) {
  if (r.reLo <= 0.0 && r.imLo <= 0.0 && r.imHi >= 0.0) {
    throw Error(ErrorKind::branchAmbiguity, "region touches the branch cut (-inf, 0]");
  }
}

}  // namespace

long argument_count(const SemiclassicalModel& m, const Rect& r, int nodesPerEdge) {
  check_region(r);
  return winding_number([&m](cplx z) { return transfer_determinant(m, z); }, r, nodesPerEdge);
}

long argument_count(const SemiclassicalModel& m, const SpectralBox& box, int nodesPerEdge) {
  return argument_count(m, box.rect(), nodesPerEdge);
}

// ---------------------------------------------------------------------------

namespace {

cplx fd_derivative(const SemiclassicalModel& m, cplx z) {
  const double step = 1e-7 * (1.0 + std::abs(z));
  return (transfer_determinant(m, z + step) - transfer_determinant(m, z - step)) / (2.0 * step);
}

int tiny_winding(const SemiclassicalModel& m, cplx z, double rho) {
  const Rect r{z.real() - rho, z.real() + rho, z.imag() - rho, z.imag() + rho};
  return static_cast<int>(
      winding_number([&m](cplx w) { return transfer_determinant(m, w); }, r, 8));
}

}  // namespace

OracleResonance newton_refine(const SemiclassicalModel& m, cplx z0) {
  constexpr int kMaxIterations = 50;
  std::vector<cplx> trace{z0};
  cplx z = z0;
  bool converged = false;
  int it = 0;
  for (it = 1; it <= kMaxIterations; ++it) {
    const cplx f = transfer_determinant(m, z);
    const cplx d = fd_derivative(m, z);
    if (d == cplx(0.0, 0.0) || !std::isfinite(std::abs(f / d))) break;
    const cplx dz = f / d;
    z -= dz;
    trace.push_back(z);
    if (std::abs(dz) <= 1e-13 * (1.0 + std::abs(z))) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "Newton on D did not converge from " << z0 << "; iterates:";
    const std::size_t first = trace.size() > 8 ? trace.size() - 8 : 0;
    for (std::size_t i = first; i < trace.size(); ++i) os << ' ' << trace[i];
    throw Error(ErrorKind::noConvergence, os.str());
  }
  OracleResonance res;
  res.z = z;
  res.iterations = it;
  res.determinantResidual = std::abs(transfer_determinant(m, z));
  const double slope = std::abs(fd_derivative(m, z));
  res.localScale = slope * (1.0 + std::abs(z));
  // Widths below the attainable resolution come out with a noisy sign.
  const double resolution = 2.0 * res.determinantResidual / slope + 1e-15 * std::abs(z);
  if (z.imag() > 0.0 && z.imag() <= resolution) res.z = cplx(z.real(), 0.0);
  try {
    res.multiplicity = tiny_winding(m, res.z, 1e-6 * (1.0 + std::abs(res.z)));
    res.windingVerified = res.multiplicity == 1;
  } catch (const Error&) {
    res.windingVerified = false;
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

struct Searcher {
  const SemiclassicalModel& m;
  ResonanceSearchOptions opts;
  std::vector<OracleResonance> found;

  long count(const Rect& r) const { return argument_count(m, r, opts.nodesPerEdge); }

  std::vector<cplx> starting_points(const Rect& r) const {
    struct Sample {
      double mag;
      cplx z;
    };
    std::vector<Sample> samples;
    constexpr int nx = 9, ny = 5;
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const cplx z(r.reLo + r.width() * (i + 0.5) / nx, r.imLo + r.height() * j / (ny - 1.0));
        samples.push_back({std::abs(transfer_determinant(m, z)), z});
      }
    }
    std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.mag < b.mag; });
    std::vector<cplx> starts;
    for (std::size_t i = 0; i < 3 && i < samples.size(); ++i) starts.push_back(samples[i].z);
    starts.push_back(cplx(0.5 * (r.reLo + r.reHi), 0.5 * (r.imLo + r.imHi)));
    return starts;
  }

  bool try_newton(const Rect& r) {
    const double tol = 1e-12 * (1.0 + std::abs(cplx(r.reHi, r.imHi)));
    const Rect grown{r.reLo - tol, r.reHi + tol, r.imLo - tol, r.imHi + tol};
    for (cplx z0 : starting_points(r)) {
      try {
        auto res = newton_refine(m, z0);
        if (!grown.contains(res.z)) continue;
        const bool duplicate = std::any_of(found.begin(), found.end(), [&](const OracleResonance& o) {
          return std::abs(o.z - res.z) <= 1e-10 * (1.0 + std::abs(res.z));
        });
        if (duplicate) continue;
        found.push_back(res);
        return true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::noConvergence && e.kind() != ErrorKind::branchAmbiguity) throw;
      }
    }
    return false;
  }

  // Count both halves of a split; nudges the cut if it runs through a zero.
  void split(const Rect& r, long n, int depth) {
    const bool alongRe = r.width() >= r.height();
    for (double frac : {0.5, 0.4714, 0.5377, 0.3819}) {
      Rect lo = r, hi = r;
      if (alongRe) {
        const double x = r.reLo + frac * r.width();
        lo.reHi = x;
        hi.reLo = x;
      } else {
        const double y = r.imLo + frac * r.height();
        lo.imHi = y;
        hi.imLo = y;
      }
      long nlo = 0, nhi = 0;
      try {
        nlo = count(lo);
        nhi = count(hi);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::refineContour) throw;
        continue;
      }
      if (nlo + nhi != n) continue;
      process(lo, nlo, depth + 1);
      process(hi, nhi, depth + 1);
      return;
    }
    throw Error(ErrorKind::refineContour, "could not split a search box without touching a zero");
  }

  void process(const Rect& r, long n, int depth) {
    if (n <= 0) return;
    if (n == 1 && try_newton(r)) return;
    if (depth >= opts.maxDepth || std::max(r.width(), r.height()) < opts.minBoxSize) {
      OracleResonance res;
      res.z = cplx(0.5 * (r.reLo + r.reHi), 0.5 * (r.imLo + r.imHi));
      res.multiplicity = static_cast<int>(n);
      res.degenerate = n > 1;
      res.determinantResidual = std::abs(transfer_determinant(m, res.z));
      res.windingVerified = true;
      found.push_back(res);
      return;
    }
    split(r, n, depth);
  }
};

}  // namespace

std::vector<OracleResonance> find_resonances(const SemiclassicalModel& m, const Rect& region,
                                             const ResonanceSearchOptions& opts) {
  Searcher s{m, opts, {}};
  const long n = s.count(region);
  s.process(region, n, 0);
  std::sort(s.found.begin(), s.found.end(), [](const OracleResonance& a, const OracleResonance& b) {
    if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
    return a.z.imag() < b.z.imag();
  });
  return s.found;
}

std::vector<OracleResonance> find_resonances_lifted(const SemiclassicalModel& m,
                                                    const SpectralBox& box, double lift,
                                                    const ResonanceSearchOptions& opts) {
  if (!(lift > 0.0)) throw Error(ErrorKind::invalidArgument, "lift must be positive");
  return find_resonances(m, Rect{box.a, box.b, -box.c, lift}, opts);
}

Spectrum to_spectrum(const std::vector<OracleResonance>& roots, double h) {
  Spectrum s;
  s.method = SpectrumMethod::oracle;
  s.h = h;
  for (const auto& r : roots) {
    for (int k = 0; k < r.multiplicity; ++k) {
      s.eigenvalues.push_back(r.z);
      s.residuals.push_back(r.determinantResidual);
      s.multiplicity.push_back(r.multiplicity);
      s.defective.push_back(r.degenerate);
    }
  }
  return s;
}

}  // namespace capres
