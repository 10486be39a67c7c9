#include "mrf/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mrf/expr.hpp"
#include "mrf/rescale.hpp"
#include "mrf/rng.hpp"

namespace mrf {

namespace {

std::string vec_str(std::span<const double> v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += format_double(v[i]);
  }
  s += "]";
  return s;
}

// Inflates a box by `factor` about its center, then clips to `outer`.
void inflate_clip(Vec& lo, Vec& hi, double factor, std::span<const double> outer_lo,
                  std::span<const double> outer_hi) {
  for (std::size_t i = 0; i < lo.size(); ++i) {
    double c = 0.5 * (lo[i] + hi[i]);
    double h = 0.5 * (hi[i] - lo[i]) * factor;
    if (h <= 0.0) h = 1e-12 + std::fabs(c) * 1e-9;  // degenerate band extent
    lo[i] = std::max(outer_lo[i], c - h);
    hi[i] = std::min(outer_hi[i], c + h);
  }
}

struct SampleRecord {
  Vec x;
  double margin;                    // −max_p H̄
  std::vector<double> best_within;  // max over covectors of running best per radius
  Vec worst_p;
  Vec worst_u;
  double worst_value;               // max_p H̄ (= −margin)
  double raw_at_witness;            // original-scale integrand at (x, worst_p, worst_u)
};

double raw_integrand(const ControlProblem& problem, std::span<const double> x,
                     double p0, std::span<const double> p,
                     std::span<const double> u) {
  Vec fx(static_cast<std::size_t>(problem.n()));
  problem.dynamics(x, u, fx);
  return dot(p, fx) + p0 * problem.cost(x, u);
}

}  // namespace

std::vector<double> LevelSampling::band_edges() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  int count = std::max(1, bands);
  if (r_min > 0.0) {
    while (2.0 * sigma * std::pow(2.0, -count) > r_min && count < 64) ++count;
  }
  std::vector<double> edges(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i)
    edges[static_cast<std::size_t>(i - 1)] = 2.0 * sigma * std::pow(2.0, -i);
  return edges;
}

double EnvelopeTables::gamma_at(double rr) const {
  if (r.empty()) throw std::logic_error("empty envelope table");
  // r is decreasing: r.front() largest. Clamp above, scale-through-0 below.
  if (rr >= r.front()) return gamma.front();
  if (rr <= r.back()) return gamma.back() * (rr / r.back());
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (rr >= r[i]) {
      double w = (rr - r[i]) / (r[i - 1] - r[i]);
      return gamma[i] + w * (gamma[i - 1] - gamma[i]);
    }
  }
  return gamma.back();
}

double EnvelopeTables::N_at(double rr) const {
  if (r.empty()) throw std::logic_error("empty envelope table");
  if (rr >= r.front()) return N.front();
  if (rr <= r.back()) return N.back();
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (rr >= r[i]) {
      double w = (rr - r[i]) / (r[i - 1] - r[i]);
      return N[i] + w * (N[i - 1] - N[i]);
    }
  }
  return N.back();
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Verified: return "verified";
    case Verdict::Violated: return "violated";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

int verdict_exit_code(Verdict v) {
  switch (v) {
    case Verdict::Verified: return 0;
    case Verdict::Violated: return 1;
    case Verdict::Inconclusive: return 2;
  }
  return 2;
}

std::string VerificationReport::text() const {
  std::ostringstream os;
  os << "mrf verification report\n";
  if (!scenario_name.empty()) os << "scenario: " << scenario_name << "\n";
  os << "p0: " << format_double(p0) << "\n";
  os << "sigma: " << format_double(sigma) << "\n";
  os << "samples-per-band: " << samples_per_band << "\n";
  os << "seed: " << seed << "\n";
  os << "verdict: " << verdict_name(verdict) << "\n";
  if (!inconclusive_reason.empty())
    os << "reason: " << inconclusive_reason << "\n";
  os << "note: margins, gamma and N are certificates at the sampled points "
        "only;\n";
  os << "note: gamma is the sampled per-band lower margin envelope and N the "
        "matching\n";
  os << "note: feasible-radius upper envelope, not global guarantees.\n";
  for (const auto& b : bands) {
    os << "band r=[" << format_double(b.r_lo) << "," << format_double(b.r_hi)
       << "] samples=" << b.samples;
    if (b.samples > 0) {
      os << " worst-margin=" << format_double(b.worst_margin)
         << " raw-N=" << format_double(b.raw_N)
         << " witness-x=" << vec_str(b.witness_x);
    }
    os << "\n";
  }
  for (std::size_t i = 0; i < tables.r.size(); ++i)
    os << "gamma r=" << format_double(tables.r[i])
       << " value=" << format_double(tables.gamma[i]) << "\n";
  for (std::size_t i = 0; i < tables.r.size(); ++i)
    os << "N r=" << format_double(tables.r[i])
       << " value=" << format_double(tables.N[i]) << "\n";
  os << "check positive-definite: " << (positive_definite.pass ? "pass" : "fail")
     << " (" << positive_definite.detail << ")\n";
  os << "check properness-proxy: " << (properness.pass ? "pass" : "fail")
     << " (" << properness.detail << ")\n";
  os << "check boundary-value: " << (boundary_value.pass ? "pass" : "fail")
     << " (" << boundary_value.detail << ")\n";
  if (witness) {
    os << "witness x=" << vec_str(witness->x) << " p=" << vec_str(witness->p)
       << " u=" << vec_str(witness->u)
       << " value=" << format_double(witness->value)
       << " raw-value=" << format_double(witness->raw_value) << "\n";
  } else {
    os << "witness: none\n";
  }
  return os.str();
}

VerificationReport verify_mrf(const ControlProblem& problem,
                              const MrfCandidate& candidate,
                              const LevelSampling& sampling,
                              const MinimizeBudget& budget) {
  if (!candidate.W || !candidate.gradient_oracle)
    throw std::invalid_argument("candidate lacks W or a gradient oracle");
  if (!(candidate.p0 > 0.0))
    throw std::invalid_argument("candidate p0 must be positive");
  if (sampling.box_lo.size() != sampling.box_hi.size() ||
      static_cast<int>(sampling.box_lo.size()) != problem.n())
    throw std::invalid_argument("sampling box dimension mismatch");
  if (!(2.0 * sampling.sigma < candidate.W0))
    throw std::invalid_argument("verify_mrf requires 2*sigma < W0");

  VerificationReport report;
  report.p0 = candidate.p0;
  report.sigma = sampling.sigma;
  report.seed = sampling.seed;
  report.samples_per_band = sampling.samples_per_band;

  RescaledProblem rescaled = rescale(problem);
  SplitMix64 rng(sampling.seed);

  const std::vector<double> edges = sampling.band_edges();
  const int covector_radii =
      static_cast<int>(budget.radius_schedule.size()) + 1;  // worst case
  (void)covector_radii;

  std::vector<std::vector<SampleRecord>> band_samples(edges.size());
  std::vector<double> schedule_radii;  // radii list of the first profile seen

  Vec cur_lo = sampling.box_lo;
  Vec cur_hi = sampling.box_hi;
  bool have_prev_box = false;

  double global_worst_value = -inf();
  std::size_t global_witness_band = 0, global_witness_idx = 0;

  // Full margin evaluation at one state; nullopt when the point is outside
  // the state space, the target, the W band, or fails to evaluate.
  auto eval_point = [&](const Vec& x, double r_lo,
                        double r_hi) -> std::optional<SampleRecord> {
    if (!problem.state_space.contains(x)) return std::nullopt;
    if (problem.target.distance(x) <= 0.0) return std::nullopt;
    double w;
    try {
      w = candidate.W(x);
    } catch (const EvalError&) {
      return std::nullopt;
    }
    if (!(w >= r_lo && w <= r_hi)) return std::nullopt;

    SampleRecord rec;
    rec.x = x;
    rec.margin = inf();
    rec.worst_value = -inf();
    std::vector<Vec> covectors = candidate.gradient_oracle(x);
    if (covectors.empty()) return std::nullopt;
    for (const Vec& p : covectors) {
      HamiltonianProfile prof =
          hamiltonian_profile(rescaled.problem, x, candidate.p0, p, budget);
      if (schedule_radii.empty()) schedule_radii = prof.radii;
      if (rec.best_within.empty())
        rec.best_within.assign(prof.best_within.size(), -inf());
      for (std::size_t k = 0;
           k < prof.best_within.size() && k < rec.best_within.size(); ++k)
        rec.best_within[k] = std::max(rec.best_within[k], prof.best_within[k]);
      double value = prof.result.value;
      if (value > rec.worst_value) {
        rec.worst_value = value;
        rec.worst_p = p;
        rec.worst_u = prof.result.minimizer;
      }
    }
    rec.margin = -rec.worst_value;
    rec.raw_at_witness =
        raw_integrand(problem, x, candidate.p0, rec.worst_p, rec.worst_u);
    return rec;
  };

  for (std::size_t bi = 0; bi < edges.size(); ++bi) {
    double r_lo = edges[bi];
    double r_hi = bi == 0 ? 2.0 * sampling.sigma : edges[bi - 1];

    // Adaptive sampling box: bounding box of the previous band's accepted
    // samples, inflated 1.5x, clipped to the user box. Deep bands of a proper
    // W shrink geometrically; plain rejection from the full box would starve.
    Vec lo = cur_lo, hi = cur_hi;
    if (have_prev_box) inflate_clip(lo, hi, 1.5, sampling.box_lo, sampling.box_hi);

    auto& records = band_samples[bi];
    Vec next_lo, next_hi;
    const long max_attempts = 500L * std::max(1, sampling.samples_per_band);
    long attempts = 0;
    while (static_cast<int>(records.size()) < sampling.samples_per_band &&
           attempts < max_attempts) {
      ++attempts;
      Vec x = rng.in_box(lo, hi);
      std::optional<SampleRecord> rec = eval_point(x, r_lo, r_hi);
      if (!rec) continue;

      if (rec->worst_value > global_worst_value) {
        global_worst_value = rec->worst_value;
        global_witness_band = bi;
        global_witness_idx = records.size();
      }

      // track bounding box of accepted samples for the next band
      if (next_lo.empty()) {
        next_lo = x;
        next_hi = x;
      } else {
        for (std::size_t i = 0; i < x.size(); ++i) {
          next_lo[i] = std::min(next_lo[i], x[i]);
          next_hi[i] = std::max(next_hi[i], x[i]);
        }
      }
      records.push_back(std::move(*rec));
    }

    // Sharpen the band minimum. A random band minimum is optimistic wherever
    // the margin surface has narrow notches (typically where the control
    // terms lose authority), and the feedback later trusts gamma-hat at
    // points the sweep never visited. A short projected compass search on
    // the margin, started from the worst few samples, walks along the level
    // band and pulls the tabulated minimum down toward the true notch floor.
    if (!records.empty()) {
      const std::size_t n_dim = records.front().x.size();
      Vec span(n_dim, 0.0);
      for (std::size_t i = 0; i < n_dim; ++i) span[i] = hi[i] - lo[i];
      double diag = norm(span);

      std::vector<std::size_t> order(records.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].margin < records[b].margin;
      });
      std::vector<Vec> starts;
      for (std::size_t idx : order) {
        if (starts.size() >= 3) break;
        bool distinct = true;
        for (const Vec& s : starts) {
          Vec dv = records[idx].x;
          for (std::size_t i = 0; i < n_dim; ++i) dv[i] -= s[i];
          if (norm(dv) < diag / 8.0) {
            distinct = false;
            break;
          }
        }
        if (distinct || starts.empty()) starts.push_back(records[idx].x);
      }

      for (const Vec& start : starts) {
        std::optional<SampleRecord> best = eval_point(start, r_lo, r_hi);
        if (!best) continue;
        Vec step(n_dim);
        for (std::size_t i = 0; i < n_dim; ++i)
          step[i] = std::max(span[i] / 16.0, 1e-12);
        for (int iter = 0; iter < 40; ++iter) {
          bool improved = false;
          for (std::size_t i = 0; i < n_dim; ++i) {
            for (double dir : {1.0, -1.0}) {
              Vec xc = best->x;
              xc[i] += dir * step[i];
              if (xc[i] < sampling.box_lo[i] || xc[i] > sampling.box_hi[i])
                continue;
              std::optional<SampleRecord> cand = eval_point(xc, r_lo, r_hi);
              if (cand && cand->margin < best->margin) {
                best = std::move(cand);
                improved = true;
              }
            }
          }
          if (!improved) {
            double max_step = 0.0;
            for (std::size_t i = 0; i < n_dim; ++i) {
              step[i] *= 0.5;
              max_step = std::max(max_step, step[i]);
            }
            if (max_step < 1e-10 * std::max(diag, 1.0)) break;
          }
        }
        if (best->margin < records[order.front()].margin) {
          if (best->worst_value > global_worst_value) {
            global_worst_value = best->worst_value;
            global_witness_band = bi;
            global_witness_idx = records.size();
          }
          records.push_back(std::move(*best));
        }
      }
    }

    if (!records.empty()) {
      cur_lo = next_lo;
      cur_hi = next_hi;
      have_prev_box = true;
    }
  }

  // Band aggregates and raw margins.
  bool any_empty = false;
  std::vector<double> raw_margin(edges.size(), inf());
  for (std::size_t bi = 0; bi < edges.size(); ++bi) {
    BandResult b;
    b.r_lo = edges[bi];
    b.r_hi = bi == 0 ? 2.0 * sampling.sigma : edges[bi - 1];
    b.samples = static_cast<int>(band_samples[bi].size());
    if (b.samples == 0) {
      any_empty = true;
    } else {
      const SampleRecord* worst = nullptr;
      for (const auto& rec : band_samples[bi])
        if (!worst || rec.margin < worst->margin) worst = &rec;
      b.worst_margin = worst->margin;
      b.witness_x = worst->x;
      raw_margin[bi] = worst->margin;
    }
    report.bands.push_back(std::move(b));
  }

  // γ̂ envelope: running min over bands processed in decreasing r.
  EnvelopeTables tables;
  double run_min = inf();
  for (std::size_t bi = 0; bi < edges.size(); ++bi) {
    if (band_samples[bi].empty()) continue;
    run_min = std::min(run_min, raw_margin[bi]);
    tables.r.push_back(edges[bi]);
    tables.gamma.push_back(run_min);
  }

  // N̂ envelope: per band, max over samples of the smallest schedule radius
  // whose running best already certifies ≤ −γ̂(r_band); then running max.
  double run_max = 0.0;
  std::size_t gi = 0;
  for (std::size_t bi = 0; bi < edges.size(); ++bi) {
    if (band_samples[bi].empty()) continue;
    double gamma_here = tables.gamma[gi];
    double band_raw_N = 0.0;
    for (const auto& rec : band_samples[bi]) {
      double needed = schedule_radii.empty() ? 0.0 : schedule_radii.back();
      for (std::size_t k = 0; k < rec.best_within.size(); ++k) {
        if (rec.best_within[k] <= -gamma_here) {
          needed = schedule_radii[k];
          break;
        }
      }
      band_raw_N = std::max(band_raw_N, needed);
    }
    report.bands[bi].raw_N = band_raw_N;
    run_max = std::max(run_max, band_raw_N);
    tables.N.push_back(run_max);
    ++gi;
  }
  report.tables = std::move(tables);

  // Verdict from the Hamiltonian margins.
  if (global_worst_value >= -kViolationTol) {
    report.verdict = Verdict::Violated;
    const SampleRecord& rec =
        band_samples[global_witness_band][global_witness_idx];
    ViolationWitness w;
    w.x = rec.x;
    w.p = rec.worst_p;
    w.u = rec.worst_u;
    w.value = rec.worst_value;
    w.raw_value = rec.raw_at_witness;
    report.witness = std::move(w);
  } else if (any_empty) {
    report.verdict = Verdict::Inconclusive;
    for (std::size_t bi = 0; bi < edges.size(); ++bi)
      if (band_samples[bi].empty()) {
        report.inconclusive_reason =
            "empty band r=[" + format_double(report.bands[bi].r_lo) + "," +
            format_double(report.bands[bi].r_hi) + "]: no samples accepted";
        break;
      }
  } else {
    report.verdict = Verdict::Verified;
  }

  CandidateChecks checks = check_positive_definite_proper(problem, candidate, sampling);
  report.positive_definite = std::move(checks.positive_definite);
  report.properness = std::move(checks.properness);
  report.boundary_value = std::move(checks.boundary_value);
  return report;
}

CandidateChecks check_positive_definite_proper(const ControlProblem& problem,
                                               const MrfCandidate& candidate,
                                               const LevelSampling& sampling) {
  CandidateChecks out;
  SplitMix64 rng(sampling.seed ^ 0x9d2c5680cull);
  const int n = problem.n();
  const int kSamples = 1000;

  // Positive definiteness on Ω ∖ C plus W ≈ 0 on the target boundary points.
  double min_W = inf();
  Vec bad;
  for (int k = 0; k < kSamples; ++k) {
    Vec x = rng.in_box(sampling.box_lo, sampling.box_hi);
    if (!problem.state_space.contains(x)) continue;
    if (problem.target.distance(x) <= 1e-12) continue;
    double w;
    try {
      w = candidate.W(x);
    } catch (const EvalError&) {
      continue;
    }
    if (w < min_W) min_W = w;
    if (w <= 0.0 && bad.empty()) bad = x;
  }
  if (!bad.empty()) {
    out.positive_definite.pass = false;
    out.positive_definite.detail =
        "W <= 0 at x=" + vec_str(bad) + " (min sampled W=" + format_double(min_W) + ")";
  } else {
    out.positive_definite.detail =
        "min sampled W=" + format_double(min_W) + " over " +
        std::to_string(kSamples) + " draws";
  }
  for (const Vec& c : problem.target.boundary_points) {
    double w = candidate.W(c);
    if (std::fabs(w) > 1e-6) {
      out.positive_definite.pass = false;
      out.positive_definite.detail +=
          "; W(target boundary)=" + format_double(w) + " exceeds 1e-6";
      break;
    }
  }

  // Properness proxy: sample a 1.25x inflated box; every sample with
  // W ≤ 2σ must stay within the base box circumradius.
  double circum2 = 0.0;
  for (std::size_t i = 0; i < sampling.box_lo.size(); ++i) {
    double m = std::max(std::fabs(sampling.box_lo[i]), std::fabs(sampling.box_hi[i]));
    circum2 += m * m;
  }
  const double circum = std::sqrt(circum2);
  Vec wide_lo = sampling.box_lo, wide_hi = sampling.box_hi;
  for (std::size_t i = 0; i < wide_lo.size(); ++i) {
    double c = 0.5 * (wide_lo[i] + wide_hi[i]);
    double h = 0.625 * (wide_hi[i] - wide_lo[i]);  // 1.25x inflation
    wide_lo[i] = c - h;
    wide_hi[i] = c + h;
    // stay inside the open state-space box
    wide_lo[i] = std::max(wide_lo[i], problem.state_space.lower[i] +
                                          1e-9 * (1.0 + std::fabs(problem.state_space.lower[i])));
    wide_hi[i] = std::min(wide_hi[i], problem.state_space.upper[i] -
                                          1e-9 * (1.0 + std::fabs(problem.state_space.upper[i])));
  }
  bool proper_ok = true;
  Vec escape;
  double escape_W = 0.0;
  for (int k = 0; k < kSamples; ++k) {
    Vec x = rng.in_box(wide_lo, wide_hi);
    if (!problem.state_space.contains(x)) continue;
    double w;
    try {
      w = candidate.W(x);
    } catch (const EvalError&) {
      continue;
    }
    if (w <= 2.0 * sampling.sigma && norm(x) > circum) {
      proper_ok = false;
      escape = x;
      escape_W = w;
      break;
    }
  }
  out.properness.pass = proper_ok;
  out.properness.detail = proper_ok
      ? "no sublevel escape from |x| <= " + format_double(circum) +
            " in the inflated box"
      : "W=" + format_double(escape_W) + " <= 2*sigma at x=" + vec_str(escape) +
            " with |x| > " + format_double(circum);

  // Boundary value: W0 at finite faces of a bounded-direction Ω.
  bool any_face = false;
  bool boundary_ok = true;
  std::string detail;
  const double w_large = 10.0 * 2.0 * sampling.sigma;
  for (int i = 0; i < n && boundary_ok; ++i) {
    for (int side = 0; side < 2 && boundary_ok; ++side) {
      double bound = side == 0 ? problem.state_space.lower[static_cast<std::size_t>(i)]
                               : problem.state_space.upper[static_cast<std::size_t>(i)];
      if (std::isinf(bound)) continue;
      any_face = true;
      double width = 1.0;
      if (!std::isinf(problem.state_space.lower[static_cast<std::size_t>(i)]) &&
          !std::isinf(problem.state_space.upper[static_cast<std::size_t>(i)]))
        width = problem.state_space.upper[static_cast<std::size_t>(i)] -
                problem.state_space.lower[static_cast<std::size_t>(i)];
      double inset = 1e-4 * std::min(1.0, width);
      for (int k = 0; k < 50; ++k) {
        Vec x = rng.in_box(sampling.box_lo, sampling.box_hi);
        x[static_cast<std::size_t>(i)] = bound + (side == 0 ? inset : -inset);
        if (!problem.state_space.contains(x)) continue;
        double w;
        try {
          w = candidate.W(x);
        } catch (const EvalError&) {
          continue;
        }
        if (std::isinf(candidate.W0)) {
          if (w < w_large) {
            boundary_ok = false;
            detail = "W=" + format_double(w) + " near boundary face x" +
                     std::to_string(i + 1) + (side == 0 ? " lower" : " upper") +
                     " but W0=inf (expected W >= " + format_double(w_large) + ")";
          }
        } else {
          if (std::fabs(w - candidate.W0) > 0.05 * candidate.W0 + 1e-9) {
            boundary_ok = false;
            detail = "W=" + format_double(w) + " near boundary face x" +
                     std::to_string(i + 1) + " vs W0=" + format_double(candidate.W0);
          }
        }
        if (!boundary_ok) break;
      }
    }
  }
  out.boundary_value.pass = boundary_ok;
  out.boundary_value.detail = boundary_ok
      ? (any_face ? "finite faces approach W0" : "no finite boundary face: vacuous")
      : detail;
  return out;
}

std::string RemarkAPrimeReport::text() const {
  std::ostringstream os;
  os << "remark-A' probe: " << (pass ? "pass" : "fail")
     << " worst-ratio=" << format_double(worst_ratio)
     << " samples=" << samples
     << " u-radius=" << format_double(u_radius) << "\n";
  os << "  (sampled sweep only; no global claim)\n";
  if (!worst_x.empty())
    os << "  worst at x=" << vec_str(worst_x) << " u=" << vec_str(worst_u) << "\n";
  return os.str();
}

RemarkAPrimeReport check_remark_A_prime(
    const ControlProblem& problem,
    const std::function<double(std::span<const double>)>& eta,
    std::span<const double> box_lo, std::span<const double> box_hi,
    int samples, double u_radius, std::uint64_t seed) {
  if (!eta) throw std::invalid_argument("eta callable required");
  RemarkAPrimeReport report;
  report.samples = samples;
  report.u_radius = u_radius;

  SplitMix64 rng(seed);
  const int n = problem.n();
  const int m = problem.m();

  auto lf = [&](std::span<const double> x, std::span<const double> u, Vec& out) {
    out.resize(static_cast<std::size_t>(n) + 1);
    out[0] = problem.cost(x, u);
    Vec fx(static_cast<std::size_t>(n));
    problem.dynamics(x, u, fx);
    std::copy(fx.begin(), fx.end(), out.begin() + 1);
  };

  for (int k = 0; k < samples; ++k) {
    Vec x = rng.in_box(box_lo, box_hi);
    if (!problem.state_space.contains(x)) continue;
    Vec u = rng.in_ball(m, u_radius);
    if (!problem.control_set.contains(u)) {
      problem.control_set.clamp_box(u);
      if (!problem.control_set.contains(u)) continue;
    }
    try {
      Vec g0;
      lf(x, u, g0);
      // Frobenius norm of the FD u-Jacobian of (l, f).
      double frob2 = 0.0;
      Vec up = u, gp, gm;
      for (int j = 0; j < m; ++j) {
        double h = 1e-6 * (1.0 + std::fabs(u[static_cast<std::size_t>(j)]));
        up[static_cast<std::size_t>(j)] = u[static_cast<std::size_t>(j)] + h;
        lf(x, up, gp);
        up[static_cast<std::size_t>(j)] = u[static_cast<std::size_t>(j)] - h;
        lf(x, up, gm);
        up[static_cast<std::size_t>(j)] = u[static_cast<std::size_t>(j)];
        for (std::size_t i = 0; i < g0.size(); ++i) {
          double d = (gp[i] - gm[i]) / (2.0 * h);
          frob2 += d * d;
        }
      }
      double denom = 1.0 + norm(g0);
      double ratio_num = std::sqrt(frob2) / (denom * denom);
      double ex = eta(x);
      if (!(ex > 0.0))
        throw std::invalid_argument("eta must be positive on the sampled box");
      double ratio = ratio_num / ex;
      if (ratio > report.worst_ratio) {
        report.worst_ratio = ratio;
        report.worst_x = x;
        report.worst_u = u;
      }
    } catch (const EvalError&) {
      continue;
    }
  }
  report.pass = report.worst_ratio <= 1.0;
  return report;
}

}  // namespace mrf
