#include "capres/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "capres/analysis.hpp"
#include "capres/io.hpp"
#include "capres/oracle.hpp"

namespace capres {
namespace {

namespace fs = std::filesystem;

struct StageFailure {
  std::string stage;
  std::string message;
};

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure{stage, e.what()};
  }
}

/// Runs body(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::optional<StageFailure> failure;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= n || failure) return;
          i = next++;
        }
        try {
          body(i);
        } catch (const StageFailure& f) {
          std::lock_guard lock(mu);
          if (!failure) failure = f;
        } catch (const std::exception& e) {
          std::lock_guard lock(mu);
          if (!failure) failure = StageFailure{"worker", e.what()};
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) throw *failure;
}

std::string h_tag(double h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "h%g", h);
  return buf;
}

struct CheckRecord {
  std::string name;
  double h = 0.0;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

// Everything computed for one h.
struct HState {
  double h = 0.0;
  SemiclassicalModel model;
  Grid grid;
  std::optional<DiscreteOperator> cap;
  std::optional<Spectrum> capSpectrum;
  std::optional<Spectrum> spectrum;  // the spectrumOperator choice
  std::vector<std::vector<OracleResonance>> windowRoots;
  std::vector<long> windowCounts;
  std::vector<OracleResonance> matchRoots;  // [a0, b0] + i[-0.1, 0]
  std::vector<CheckRecord> checks;
  std::vector<ComparisonReport> theorem1;
  std::vector<ComparisonReport> theorem2;
};

class Runner {
 public:
  Runner(const RunConfig& cfg, const RunOptions& opts, std::ostream& log)
      : cfg_(cfg), opts_(opts), log_(log), out_(opts.out ? *opts.out : cfg.outputDirectory) {
    formats_ = opts.format ? std::vector<std::string>{*opts.format} : cfg.formats;
    for (double h : cfg.h_values()) {
      HState s;
      s.h = h;
      s.model = cfg.model_at(h);
      s.grid = make_grid(cfg.gridR, cfg.gridN);
      states_.push_back(std::move(s));
    }
  }

  int spectrum() {
    each_h([this](HState& s) { compute_spectrum(s); });
    for (const auto& s : states_) write_spectrum(*s.spectrum);
    write_plot_data();
    return kExitOk;
  }

  int oracle() {
    each_h([this](HState& s) { compute_window_roots(s); });
    write_oracle();
    return kExitOk;
  }

  int compare() {
    each_h([this](HState& s) {
      compute_cap(s, false);
      compute_match_roots(s);
      compute_theorem1(s);
      compute_theorem2(s);
    });
    write_theorem1();
    write_theorem2();
    return kExitOk;
  }

  int sweep() {
    each_h([this](HState& s) {
      compute_spectrum(s);
      compute_window_roots(s);
    });
    for (const auto& s : states_) write_spectrum(*s.spectrum);
    write_oracle();
    write_plot_data();
    return kExitOk;
  }

  int report() {
    Json merged{{"configHash", cfg_.hash}, {"files", Json::object()}};
    if (fs::exists(out_)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(out_)) {
        if (e.path().extension() == ".json" && e.path().filename() != "report.json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& p : files) {
        std::ifstream f(p);
        try {
          merged["files"][p.filename().string()] = Json::parse(f);
        } catch (const Json::exception& e) {
          throw StageFailure{"report", p.string() + ": " + e.what()};
        }
      }
    }
    write("report.json", merged.dump(2) + "\n");
    log_ << "merged " << merged["files"].size() << " files into " << (out_ / "report.json").string() << '\n';
    return kExitOk;
  }

  int run() {
    const auto& checks = cfg_.checks;
    auto wants = [&](const char* n) { return std::find(checks.begin(), checks.end(), n) != checks.end(); };
    each_h([&](HState& s) {
      compute_cap(s, wants("absorption_identity"));
      if (wants("absorption_identity")) check_absorption(s);
      if (wants("resolvent_bound")) check_resolvent(s);
      if (wants("theta_inequality")) check_theta(s);
      if (wants("oracle_consistency")) {
        compute_window_roots(s);
        check_oracle(s);
      }
      if (wants("theorem1")) {
        compute_match_roots(s);
        compute_theorem1(s);
        for (const auto& r : s.theorem1) {
          const double c = r.direction == MatchDirection::resonanceToCap ? r.fittedC1 : r.fittedC2;
          s.checks.push_back({"theorem1", s.h, std::isfinite(c), c, std::string(to_string(r.direction))});
        }
      }
      if (wants("theorem2")) {
        compute_theorem2(s);
        for (const auto& r : s.theorem2) {
          // Inadmissible windows are reported in the flags, not checked.
          if (!r.parameters.count("NP")) continue;
          const bool ok = r.parameters.count("N") > 0;
          s.checks.push_back({"theorem2", s.h, ok, ok ? r.parameters.at("N") : -1.0, "fitted exponent"});
        }
      }
      if (wants("quasimode")) check_quasimode(s);
    });

    std::vector<CheckRecord> all;
    for (const auto& s : states_) all.insert(all.end(), s.checks.begin(), s.checks.end());
    bool hardOk = true;
    Json records = Json::array();
    for (const auto& c : all) {
      const bool hard = is_hard_check(c.name);
      if (hard && !c.pass) hardOk = false;
      records.push_back(Json{{"check", c.name}, {"h", c.h}, {"hard", hard}, {"pass", c.pass},
                             {"value", c.value}, {"detail", c.detail}});
      log_ << (c.pass ? "PASS " : (hard ? "FAIL " : "SOFT ")) << c.name << " h=" << c.h << " value="
           << format_double(c.value) << (c.detail.empty() ? "" : " (" + c.detail + ")") << '\n';
    }
    for (const auto& s : states_) write_spectrum(*s.capSpectrum);
    if (wants("oracle_consistency")) write_oracle();
    if (wants("theorem1")) write_theorem1();
    if (wants("theorem2")) write_theorem2();
    write_plot_data();
    Json summary{{"configHash", cfg_.hash}, {"seed", opts_.seed}, {"checks", records}, {"pass", hardOk},
                 {"warnings", cfg_.warnings}};
    write("run_summary.json", summary.dump(2) + "\n");
    return hardOk ? kExitOk : kExitChecksFailed;
  }

 private:
  const RunConfig& cfg_;
  const RunOptions& opts_;
  std::ostream& log_;
  fs::path out_;
  std::vector<std::string> formats_;
  std::vector<HState> states_;

  bool wants_format(std::string_view f) const {
    return std::find(formats_.begin(), formats_.end(), f) != formats_.end();
  }

  void each_h(const std::function<void(HState&)>& body) {
    parallel_for(states_.size(), opts_.threads, [&](std::size_t i) { body(states_[i]); });
  }

  void write(const std::string& name, const std::string& contents) {
    in_stage("write", [&] {
      write_file_atomic(out_ / name, contents);
      return 0;
    });
  }

  // ---- computations ----

  void compute_cap(HState& s, bool vectors) {
    if (s.capSpectrum && (!vectors || s.capSpectrum->eigenvectors)) return;
    in_stage("operators", [&] {
      s.cap = assemble_q_cap(s.model, s.grid, cfg_.cap);
      return 0;
    });
    s.capSpectrum = in_stage("spectra", [&] { return eig_dense(*s.cap, vectors); });
  }

  void compute_spectrum(HState& s) {
    const DiscreteOperator op = in_stage("operators", [&] {
      if (cfg_.spectrumOperator == "dirichlet") return assemble_p_dirichlet(s.model, s.grid);
      if (cfg_.spectrumOperator == "scaled") return assemble_p_theta(s.model, s.grid, cfg_.scaling);
      return assemble_q_cap(s.model, s.grid, cfg_.cap);
    });
    s.spectrum = in_stage("spectra", [&] { return eig_dense(op, true); });
    s.spectrum->eigenvectors.reset();
    if (cfg_.spectrumOperator == "cap") s.capSpectrum = s.spectrum;
  }

  void compute_window_roots(HState& s) {
    if (!s.windowRoots.empty()) return;
    in_stage("oracle", [&] {
      ResonanceSearchOptions o;
      o.nodesPerEdge = cfg_.analysis.nodesPerEdge;
      for (const auto& w : cfg_.windows) {
        const SpectralBox box = w.at(s.h);
        s.windowRoots.push_back(find_resonances_lifted(s.model, box, box.c, o));
        s.windowCounts.push_back(argument_count(s.model, Rect{box.a, box.b, -box.c, box.c}, o.nodesPerEdge));
      }
      return 0;
    });
  }

  void compute_match_roots(HState& s) {
    in_stage("oracle", [&] {
      ResonanceSearchOptions o;
      o.nodesPerEdge = cfg_.analysis.nodesPerEdge;
      s.matchRoots = find_resonances_lifted(s.model, SpectralBox{s.model.a0, s.model.b0, 0.1}, 0.1, o);
      return 0;
    });
  }

  MatchParams match_params(const HState& s) const {
    MatchParams p;
    p.C = cfg_.analysis.C;
    p.nsharp = s.model.nsharp;
    p.a0 = s.model.a0;
    p.b0 = s.model.b0;
    p.B = cfg_.analysis.B;
    p.allowance = s.grid.dx * s.grid.dx / (s.h * s.h);
    return p;
  }

  void compute_theorem1(HState& s) {
    compute_cap(s, false);
    in_stage("analysis", [&] {
      std::vector<cplx> roots;
      for (const auto& r : s.matchRoots) roots.push_back(r.z);
      const auto& capz = s.capSpectrum->eigenvalues;
      const MatchParams p = match_params(s);
      s.theorem1.push_back(theorem1_match(roots, capz, MatchDirection::resonanceToCap, s.h, p));
      if (!roots.empty()) s.theorem1.push_back(theorem1_match(capz, roots, MatchDirection::capToResonance, s.h, p));
      return 0;
    });
  }

  void compute_theorem2(HState& s) {
    compute_cap(s, false);
    in_stage("analysis", [&] {
      SandwichOptions o;
      o.Mexp = cfg_.analysis.Mexp;
      o.epsilon0 = cfg_.analysis.epsilon0;
      o.caseBPower = cfg_.analysis.caseBPower;
      o.oracleNodesPerEdge = cfg_.analysis.nodesPerEdge;
      const CapRegime regime = validate_cap(cfg_.cap, s.model).regime;
      for (const auto& w : cfg_.windows) {
        const SpectralBox box = w.at(s.h);
        ComparisonReport rep;
        rep.direction = MatchDirection::countingSandwich;
        rep.parameters["h"] = s.h;
        rep.parameters["a"] = box.a;
        rep.parameters["b"] = box.b;
        rep.parameters["c"] = box.c;
        const auto windowCheck = validate_window(s.model, box, s.h, o);
        if (!windowCheck.ok()) {
          for (const auto& v : windowCheck.violations) rep.flags.push_back("window: " + v);
          s.theorem2.push_back(rep);
          continue;
        }
        const auto N = fit_sandwich_exponent(s.model, s.capSpectrum->eigenvalues, box, regime, o);
        const auto counts = sandwich_counts(s.model, s.capSpectrum->eigenvalues, box, N.value_or(0.0), regime, o);
        if (N) rep.parameters["N"] = *N;
        rep.parameters["NQinner"] = static_cast<double>(counts.inner);
        rep.parameters["NP"] = static_cast<double>(counts.middle);
        rep.parameters["NQouter"] = static_cast<double>(counts.outer);
        if (box.c < std::exp(-std::pow(s.h, -2.0 / 3.0 + o.epsilon0))) {
          rep.flags.push_back("window depth below exp(-h^{-2/3+eps0})");
        }
        if (!N) rep.flags.push_back("no exponent on the grid 0, 0.5, ..., 10 satisfies both inequalities");
        s.theorem2.push_back(rep);
      }
      return 0;
    });
  }

  // ---- checks ----

  void check_absorption(HState& s) {
    const auto r = in_stage("analysis", [&] { return absorption_identity_check(*s.cap, *s.capSpectrum, cfg_.cap); });
    const double worst = r.empty() ? 0.0 : *std::max_element(r.begin(), r.end());
    s.checks.push_back({"absorption_identity", s.h, worst <= 1e-10, worst, "max normalized residual"});
  }

  void check_resolvent(HState& s) {
    std::mt19937_64 rng(opts_.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<cplx> samples;
    for (int i = 0; i < cfg_.analysis.resolventSamples; ++i) {
      const double re = s.model.a0 + (s.model.b0 - s.model.a0) * u01(rng);
      const double im = 1.0 - u01(rng);
      samples.emplace_back(re, im);
    }
    const auto margins = in_stage("analysis", [&] { return resolvent_bound_check(*s.cap, samples); });
    bool ok = true;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < margins.size(); ++i) {
      ok = ok && margins[i] >= -1e-12 * (1.0 + std::abs(samples[i]));
      worst = std::min(worst, margins[i]);
    }
    s.checks.push_back({"resolvent_bound", s.h, ok, worst, "min sigma_min - Im z"});
  }

  void check_theta(HState& s) {
    ScalingProfile p = cfg_.scaling;
    p.shape = ScalingShape::exponentialK;
    const auto rep = in_stage("operators", [&] {
      return theta_derivative_inequality_check(p, s.h, cfg_.analysis.thetaC, cfg_.analysis.thetaEps);
    });
    s.checks.push_back({"theta_inequality", s.h, rep.pass, rep.maxViolation, "max L(r)"});
  }

  void check_oracle(HState& s) {
    for (std::size_t w = 0; w < s.windowRoots.size(); ++w) {
      long mult = 0;
      bool ok = true;
      for (const auto& r : s.windowRoots[w]) {
        mult += r.multiplicity;
        if (!r.degenerate) {
          ok = ok && r.windingVerified && r.determinantResidual <= 1e-10 * r.localScale;
        }
        ok = ok && r.z.imag() <= 0.0;
      }
      ok = ok && mult == s.windowCounts[w];
      std::ostringstream d;
      d << "window " << w << ": argument count " << s.windowCounts[w] << ", refined " << mult;
      s.checks.push_back({"oracle_consistency", s.h, ok, static_cast<double>(mult), d.str()});
    }
  }

  void check_quasimode(HState& s) {
    const auto well = symmetric_well(s.model.potential);
    if (!well) {
      s.checks.push_back({"quasimode", s.h, false, 0.0, "potential is not a symmetric square well"});
      return;
    }
    const auto [V0, a, cutR] = *well;
    const auto levels = square_well_levels(V0, a, s.h, s.model.a0, s.model.b0);
    if (levels.empty()) {
      s.checks.push_back({"quasimode", s.h, false, 0.0, "no well level in the energy window"});
      return;
    }
    const auto verdict = in_stage("analysis", [&] {
      QuasimodeSet qs;
      qs.grid = s.grid;
      qs.entries.push_back(square_well_quasimode(V0, a, s.h, levels.front(), s.grid, cutR));
      qs.residualBound = quasimode_residual(s.model, s.grid, qs.entries.front());
      qs.N = 0;
      qs.M = 2.0;
      QuasimodeParams p;
      p.B = cfg_.analysis.B;
      p.nsharp = s.model.nsharp;
      p.C = cfg_.analysis.C;
      return quasimode_implies_spectrum(qs, s.capSpectrum->eigenvalues, s.h, p);
    });
    s.checks.push_back({"quasimode", s.h, std::isfinite(verdict.fittedC0BM), verdict.fittedC0BM, "fitted C0*B*M"});
  }

  struct Well {
    double V0, a, cut;
  };

  static std::optional<Well> symmetric_well(const PiecewisePotential& v) {
    const auto bp = v.breakpoints();
    const auto vals = v.values();
    if (vals.size() != 3) return std::nullopt;
    if (vals[1] != 0.0 || vals[0] != vals[2] || !(vals[0] > 0.0)) return std::nullopt;
    if (bp[1] != -bp[2] || bp[0] != -bp[3]) return std::nullopt;
    return Well{vals[0], bp[2], bp[3]};
  }

  // ---- output ----

  void write_spectrum(const Spectrum& s) {
    const std::string base = "spectrum_" + std::string(to_string(s.method)) + "_" + h_tag(s.h);
    if (wants_format("csv")) {
      std::ostringstream os;
      write_spectrum_csv(os, s, cfg_.hash);
      write(base + ".csv", os.str());
    }
    if (wants_format("json")) write(base + ".json", spectrum_to_json(s, cfg_.hash).dump(2) + "\n");
    log_ << "wrote " << (out_ / base).string() << '\n';
  }

  void write_oracle() {
    Json results = Json::array();
    std::ostringstream csv;
    csv << "# config " << cfg_.hash << '\n';
    bool header = false;
    for (const auto& s : states_) {
      for (std::size_t w = 0; w < s.windowRoots.size(); ++w) {
        results.push_back(Json{{"h", s.h},
                               {"window", to_json(cfg_.windows[w].at(s.h))},
                               {"argumentCount", s.windowCounts[w]},
                               {"resonances", oracle_to_json(s.windowRoots[w])}});
        std::ostringstream part;
        write_oracle_csv(part, s.windowRoots[w], s.h, cfg_.hash);
        std::string text = part.str();
        // Drop the per-block hash line, and repeated headers.
        text.erase(0, text.find('\n') + 1);
        if (header) text.erase(0, text.find('\n') + 1);
        header = true;
        csv << text;
      }
    }
    if (wants_format("json")) {
      Json doc{{"configHash", cfg_.hash}, {"model", to_json(cfg_.model)}, {"results", results}};
      write("oracle_resonances.json", doc.dump(2) + "\n");
    }
    if (wants_format("csv")) write("oracle_resonances.csv", csv.str());
    log_ << "wrote " << (out_ / "oracle_resonances").string() << '\n';
  }

  Json provenance() const {
    return Json{{"configHash", cfg_.hash},
                {"model", to_json(cfg_.model)},
                {"cap", to_json(cfg_.cap)},
                {"scaling", to_json(cfg_.scaling)},
                {"grid", {{"R", cfg_.gridR}, {"N", cfg_.gridN}}}};
  }

  void write_theorem1() {
    std::vector<ComparisonReport> all;
    for (const auto& s : states_) all.insert(all.end(), s.theorem1.begin(), s.theorem1.end());
    Json doc = provenance();
    doc["reports"] = Json::array();
    for (const auto& r : all) doc["reports"].push_back(report_to_json(r));
    if (wants_format("json")) write("report_theorem1.json", doc.dump(2) + "\n");
    if (wants_format("csv")) {
      std::ostringstream os;
      write_report_csv(os, all, cfg_.hash);
      write("report_theorem1.csv", os.str());
    }
    log_ << "wrote " << (out_ / "report_theorem1").string() << '\n';
  }

  void write_theorem2() {
    std::vector<ComparisonReport> all;
    for (const auto& s : states_) all.insert(all.end(), s.theorem2.begin(), s.theorem2.end());
    Json doc = provenance();
    doc["reports"] = Json::array();
    for (const auto& r : all) doc["reports"].push_back(report_to_json(r));
    if (wants_format("json")) write("report_theorem2.json", doc.dump(2) + "\n");
    if (wants_format("csv")) {
      std::ostringstream os;
      os << "# config " << cfg_.hash << '\n' << "h,a,b,c,N,NQinner,NP,NQouter\n";
      for (const auto& r : all) {
        auto get = [&r](const char* k) {
          const auto it = r.parameters.find(k);
          return it == r.parameters.end() ? std::string("") : format_double(it->second);
        };
        os << get("h") << ',' << get("a") << ',' << get("b") << ',' << get("c") << ',' << get("N") << ','
           << get("NQinner") << ',' << get("NP") << ',' << get("NQouter") << '\n';
      }
      write("report_theorem2.csv", os.str());
    }
    log_ << "wrote " << (out_ / "report_theorem2").string() << '\n';
  }

  void write_plot_data() {
    std::ostringstream os;
    os << "# config " << cfg_.hash << '\n' << "re,im,method,h\n";
    auto emit = [&os](const Spectrum& sp) {
      const std::string m(to_string(sp.method));
      for (cplx z : sp.eigenvalues) {
        os << format_double(z.real()) << ',' << format_double(z.imag()) << ',' << m << ',' << format_double(sp.h)
           << '\n';
      }
    };
    for (const auto& s : states_) {
      if (s.spectrum) {
        emit(*s.spectrum);
      } else if (s.capSpectrum) {
        emit(*s.capSpectrum);
      }
      for (const auto& roots : s.windowRoots) emit(to_spectrum(roots, s.h));
    }
    write("plot_eigenvalues.csv", os.str());
  }
};

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"spectrum", "oracle", "compare", "sweep", "report", "run"};
  return names;
}

int run_subcommand(const std::string& name, const RunConfig& cfg, const RunOptions& opts, std::ostream& log,
                   std::ostream& err) {
  if (opts.format && *opts.format != "csv" && *opts.format != "json") {
    err << "error: --format must be csv or json\n";
    return kExitUsage;
  }
  for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';
  try {
    Runner r(cfg, opts, log);
    if (name == "spectrum") return r.spectrum();
    if (name == "oracle") return r.oracle();
    if (name == "compare") return r.compare();
    if (name == "sweep") return r.sweep();
    if (name == "report") return r.report();
    if (name == "run") return r.run();
    err << "error: unknown subcommand '" << name << "'\n";
    return kExitUsage;
  } catch (const StageFailure& f) {
    err << "error: stage " << f.stage << " failed: " << f.message << '\n';
    return kExitNumerical;
  }
}

}  // namespace capres
