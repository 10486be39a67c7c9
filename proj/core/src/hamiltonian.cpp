#include "mrf/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mrf/expr.hpp"
#include "mrf/rescale.hpp"
#include "mrf/rng.hpp"

namespace mrf {

namespace {

// Feasible region of one search stage: [-R,R]^m ∩ U ∩ B(0, cap).
struct Region {
  double box_r;   // per-coordinate bound (stage radius merged with a box U)
  double ball_r;  // Euclidean bound (N merged with a ball U); may be inf
};

Region stage_region(const ControlSet& U, double stage_radius, double N) {
  Region r{stage_radius, N};
  if (U.kind == ControlSet::Kind::Box) r.box_r = std::min(r.box_r, U.radius);
  if (U.kind == ControlSet::Kind::Ball) r.ball_r = std::min(r.ball_r, U.radius);
  return r;
}

bool feasible(const Region& r, std::span<const double> u) {
  for (double c : u)
    if (std::fabs(c) > r.box_r * (1.0 + 1e-15)) return false;
  return norm(u) <= r.ball_r * (1.0 + 1e-15);
}

void project(const Region& r, Vec& u) {
  for (double& c : u) c = std::fmax(-r.box_r, std::fmin(r.box_r, c));
  if (!std::isinf(r.ball_r)) {
    double nrm = norm(u);
    if (nrm > r.ball_r) {
      double s = r.ball_r / nrm;
      for (double& c : u) c *= s;
    }
  }
}

struct SearchState {
  Vec best_u;
  double best_value = std::numeric_limits<double>::infinity();
  int eval_failures = 0;
};

// Odd lattice over [-box_r, box_r]^m followed by projected compass search.
void search_stage(const ObjectiveFn& g, int m, const Region& region,
                  const MinimizeBudget& budget, SearchState& state) {
  const int G = std::max(3, budget.grid_points);
  const double R = region.box_r;

  Vec u(static_cast<std::size_t>(m), 0.0);
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  bool done = false;
  while (!done) {
    for (int i = 0; i < m; ++i)
      u[static_cast<std::size_t>(i)] =
          -R + 2.0 * R * idx[static_cast<std::size_t>(i)] / (G - 1);
    if (feasible(region, u)) {
      if (auto v = g(u)) {
        if (*v < state.best_value) {
          state.best_value = *v;
          state.best_u = u;
        }
      } else {
        ++state.eval_failures;
      }
    }
    // odometer increment over the lattice
    done = true;
    for (int i = 0; i < m; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < G) {
        done = false;
        break;
      }
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }

  if (state.best_u.empty()) return;  // nothing feasible at this stage

  // Projected compass refinement from the incumbent: coordinate steps with
  // doubling on success and halving on failure; candidates are clamped to the
  // box and scaled into the ball, so every probe stays feasible.
  Vec cur = state.best_u;
  double step = 2.0 * R / (G - 1);
  const double step_floor = 1e-13 * std::max(1.0, R);
  for (int iter = 0; iter < budget.refine_iters && step > step_floor; ++iter) {
    bool improved = false;
    for (int i = 0; i < m; ++i) {
      for (double dir : {1.0, -1.0}) {
        Vec cand = cur;
        cand[static_cast<std::size_t>(i)] += dir * step;
        project(region, cand);
        if (auto v = g(cand)) {
          if (*v < state.best_value) {
            state.best_value = *v;
            cur = cand;
            state.best_u = cand;
            improved = true;
          }
        } else {
          ++state.eval_failures;
        }
      }
    }
    step = improved ? std::min(step * 2.0, R) : step * 0.5;
  }
}

}  // namespace

BudgetedMinimum minimize_budgeted(const ObjectiveFn& g, int m,
                                  const ControlSet& U, double N,
                                  const MinimizeBudget& budget,
                                  std::optional<double> stop_below) {
  if (!(N > 0.0)) throw std::invalid_argument("minimize_budgeted: N must be positive");

  BudgetedMinimum out;
  if (m == 0) {
    Vec empty;
    auto v = g(empty);
    if (!v) throw std::runtime_error("minimize_budgeted: objective failed at the empty control");
    out.u = empty;
    out.value = *v;
    return out;
  }

  // Stage radii: schedule prefix strictly below the outer bound, then the
  // outer bound itself; a fully unbounded search uses the schedule as-is.
  double outer = std::numeric_limits<double>::infinity();
  if (U.bounded()) outer = U.radius;
  if (!std::isinf(N)) outer = std::min(outer, N);
  std::vector<double> radii;
  for (double r : budget.radius_schedule)
    if (r < outer) radii.push_back(r);
  if (!std::isinf(outer)) radii.push_back(outer);
  if (radii.empty())
    throw std::invalid_argument("empty radius schedule for an unbounded control search");

  SearchState state;
  for (double R : radii) {
    Region region = stage_region(U, R, N);
    search_stage(g, m, region, budget, state);
    out.radii.push_back(R);
    out.best_within.push_back(state.best_value);
    if (stop_below && state.best_value < *stop_below) break;
  }

  if (state.best_u.empty())
    throw std::runtime_error(
        "minimize_budgeted: no feasible control evaluated (all stages failed)");
  auto v = g(state.best_u);
  if (!v) throw std::runtime_error("minimize_budgeted: incumbent re-evaluation failed");
  out.u = state.best_u;
  out.value = *v;
  out.eval_failures = state.eval_failures;
  return out;
}

double hamiltonian_integrand(const ControlProblem& problem,
                             std::span<const double> x, double p0,
                             std::span<const double> p,
                             std::span<const double> u) {
  Vec fx(static_cast<std::size_t>(problem.n()));
  problem.dynamics(x, u, fx);
  return dot(p, fx) + p0 * problem.cost(x, u);
}

namespace {

ObjectiveFn make_integrand(const ControlProblem& problem,
                           std::span<const double> x, double p0,
                           std::span<const double> p) {
  return [&problem, x, p0, p](std::span<const double> u) -> std::optional<double> {
    try {
      double v = hamiltonian_integrand(problem, x, p0, p, u);
      if (!std::isfinite(v)) return std::nullopt;
      return v;
    } catch (const EvalError&) {
      return std::nullopt;
    }
  };
}

HamiltonianProfile run_search(const ControlProblem& problem,
                              std::span<const double> x, double p0,
                              std::span<const double> p, double N,
                              const MinimizeBudget& budget) {
  if (static_cast<int>(x.size()) != problem.n())
    throw std::invalid_argument("state dimension mismatch");
  if (static_cast<int>(p.size()) != problem.n())
    throw std::invalid_argument("covector dimension mismatch");
  if (!(p0 >= 0.0)) throw std::invalid_argument("p0 must be nonnegative");

  const bool divergence_possible =
      !problem.control_set.bounded() && std::isinf(N);

  ObjectiveFn g = make_integrand(problem, x, p0, p);
  std::optional<double> stop;
  if (divergence_possible) stop = budget.divergence_threshold;
  BudgetedMinimum best =
      minimize_budgeted(g, problem.m(), problem.control_set, N, budget, stop);

  HamiltonianProfile profile;
  profile.radii = std::move(best.radii);
  profile.best_within = std::move(best.best_within);
  profile.result.minimizer = std::move(best.u);
  profile.result.value = best.value;
  profile.result.certified_below = best.value;
  profile.result.eval_failures = best.eval_failures;
  profile.result.minus_infinity =
      divergence_possible && best.value < budget.divergence_threshold;
  return profile;
}

}  // namespace

HamiltonianValue hamiltonian(const ControlProblem& problem,
                             std::span<const double> x, double p0,
                             std::span<const double> p,
                             const MinimizeBudget& budget) {
  return run_search(problem, x, p0, p, inf(), budget).result;
}

HamiltonianProfile hamiltonian_profile(const ControlProblem& problem,
                                       std::span<const double> x, double p0,
                                       std::span<const double> p,
                                       const MinimizeBudget& budget) {
  return run_search(problem, x, p0, p, inf(), budget);
}

HamiltonianValue truncated_hamiltonian(const ControlProblem& problem,
                                       std::span<const double> x, double p0,
                                       std::span<const double> p, double N,
                                       const MinimizeBudget& budget) {
  if (std::isinf(N))
    throw std::invalid_argument("truncated_hamiltonian requires finite N");
  HamiltonianValue v = run_search(problem, x, p0, p, N, budget).result;
  v.minus_infinity = false;
  return v;
}

std::string SignEquivalenceReport::text() const {
  std::ostringstream os;
  os << "sign equivalence: samples=" << samples
     << " disagreements=" << disagreements
     << " dead-band-skips=" << dead_band_skips
     << " eval-failures=" << eval_failures << "\n";
  for (const auto& w : witnesses) {
    os << "  witness x=[";
    for (std::size_t i = 0; i < w.x.size(); ++i)
      os << (i ? "," : "") << format_double(w.x[i]);
    os << "] p=[";
    for (std::size_t i = 0; i < w.p.size(); ++i)
      os << (i ? "," : "") << format_double(w.p[i]);
    os << "] p0=" << format_double(w.p0) << " H=" << format_double(w.h_raw)
       << " Hbar=" << format_double(w.h_rescaled) << "\n";
  }
  return os.str();
}

SignEquivalenceReport sign_equivalence_check(const ControlProblem& problem,
                                             std::span<const double> box_lo,
                                             std::span<const double> box_hi,
                                             int samples, std::uint64_t seed,
                                             const MinimizeBudget& budget,
                                             double dead_band) {
  if (box_lo.size() != box_hi.size() ||
      static_cast<int>(box_lo.size()) != problem.n())
    throw std::invalid_argument("sampling box dimension mismatch");

  RescaledProblem rescaled = rescale(problem);
  SplitMix64 rng(seed);
  SignEquivalenceReport report;
  report.samples = samples;

  const int n = problem.n();
  for (int k = 0; k < samples; ++k) {
    Vec x = rng.in_box(box_lo, box_hi);
    Vec p(static_cast<std::size_t>(n));
    for (auto& c : p) c = rng.uniform(-2.0, 2.0);
    double p0 = rng.uniform(0.0, 1.5);

    HamiltonianValue raw, resc;
    try {
      raw = hamiltonian(problem, x, p0, p, budget);
      resc = hamiltonian(rescaled.problem, x, p0, p, budget);
    } catch (const std::runtime_error&) {
      ++report.eval_failures;
      continue;
    }
    report.eval_failures += raw.eval_failures + resc.eval_failures;

    // Cross-evaluate each incumbent under the other integrand so both values
    // are upper bounds over the same tested control set; a sign disagreement
    // then requires a genuine sign difference at a tested control.
    ObjectiveFn g_raw = make_integrand(problem, x, p0, p);
    ObjectiveFn g_resc = make_integrand(rescaled.problem, x, p0, p);
    double raw_best = raw.value;
    if (auto v = g_raw(resc.minimizer)) raw_best = std::min(raw_best, *v);
    double resc_best = resc.value;
    if (auto v = g_resc(raw.minimizer)) resc_best = std::min(resc_best, *v);

    if (!raw.minus_infinity && std::fabs(raw_best) <= dead_band) {
      ++report.dead_band_skips;
      continue;
    }
    if (std::fabs(resc_best) <= dead_band) {
      ++report.dead_band_skips;
      continue;
    }
    bool raw_negative = raw.minus_infinity || raw_best < 0.0;
    bool resc_negative = resc_best < 0.0;
    if (raw_negative != resc_negative) {
      ++report.disagreements;
      if (report.witnesses.size() < 8)
        report.witnesses.push_back(
            {x, p, p0, raw.minus_infinity ? raw.certified_below : raw_best,
             resc_best});
    }
  }
  return report;
}

}  // namespace mrf
