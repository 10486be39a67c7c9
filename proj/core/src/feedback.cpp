#include "mrf/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mrf/expr.hpp"
#include "mrf/hamiltonian.hpp"
#include "mrf/rng.hpp"

namespace mrf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCertTol = 1e-12;

std::string vec_str(std::span<const double> v) {
  std::string out = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  out += ")";
  return out;
}

}  // namespace

NoControlError::NoControlError(Vec x_in, Vec best_u_in, double best_value_in,
                               double gamma_in)
    : std::runtime_error("feedback_select: no certified control at x=" +
                         vec_str(x_in) + " (best margin " +
                         format_double(best_value_in) + ", needed < -" +
                         format_double(gamma_in) + ")"),
      x(std::move(x_in)),
      best_u(std::move(best_u_in)),
      best_value(best_value_in),
      gamma(gamma_in) {}

StageError::StageError(const std::string& what_in, Vec x_in, double delta_in,
                       double lhs_in, double rhs_in)
    : std::runtime_error(what_in + " at cell start x=" + vec_str(x_in) +
                         ", delta=" + format_double(delta_in) + ", lhs=" +
                         format_double(lhs_in) + ", rhs=" +
                         format_double(rhs_in)),
      x(std::move(x_in)),
      delta(delta_in),
      lhs(lhs_in),
      rhs(rhs_in) {}

SweepError::SweepError(const std::string& what_in, Verdict verdict_in)
    : std::runtime_error(what_in), verdict(verdict_in) {}

FeedbackChoice feedback_select(const RescaledProblem& rescaled,
                               const MrfCandidate& candidate,
                               std::span<const double> x, double N, double gamma,
                               const MinimizeBudget& budget) {
  const ControlProblem& prob = rescaled.problem;
  const int n = prob.n();
  const int m = prob.m();
  if (static_cast<int>(x.size()) != n)
    throw std::invalid_argument("feedback_select: state dimension mismatch");
  if (!(gamma > 0.0))
    throw std::invalid_argument("feedback_select: gamma must be positive");
  if (!(N > 0.0)) throw std::invalid_argument("feedback_select: N must be positive");

  const std::vector<Vec> covectors = candidate.gradient_oracle(x);
  if (covectors.empty())
    throw std::runtime_error("feedback_select: gradient oracle returned no covectors");
  const double p0 = candidate.p0;

  Vec f(static_cast<std::size_t>(n));
  auto phi = [&](std::span<const double> u) -> std::optional<double> {
    try {
      prob.dynamics(x, u, f);
      const double l = prob.cost(x, u);
      double worst = -kInf;
      for (const Vec& p : covectors) worst = std::max(worst, dot(p, f) + p0 * l);
      if (!std::isfinite(worst)) return std::nullopt;
      return worst;
    } catch (const EvalError&) {
      return std::nullopt;
    }
  };

  // Search radii: the schedule stages below N, then N, then the schedule
  // radii beyond N (widening). Increasing stages matter: the tables only
  // promise that SOME control in B(0,N) meets the demand, and a large-radius
  // global minimum can be a razor — a marginally better point value whose
  // decrease collapses within a fraction of a hold cell (huge |u| saturates
  // the speed, so the state crosses the candidate's small-scale features in
  // O(|x|/1) of rescaled time). Preferring the smallest radius that meets
  // the demand keeps the held control on the sustained branch. A bounded
  // control set caps every stage at its own radius, so widening past it
  // would repeat the same search.
  std::vector<double> radii;
  for (double r : budget.radius_schedule)
    if (r < N) radii.push_back(r);
  radii.push_back(N);
  const double u_bound = prob.control_set.bounded()
                             ? (prob.control_set.kind == ControlSet::Kind::Ball
                                    ? prob.control_set.radius
                                    : prob.control_set.radius * std::sqrt(double(m)))
                             : kInf;
  if (u_bound > N) {
    for (double r : budget.radius_schedule)
      if (r > N) radii.push_back(r);
  }

  // Each radius stage runs its full budget and the best control is kept:
  // the demand -gamma is an acceptance threshold, not a search target, so a
  // conservative gamma table does not slow the physical descent.
  double best_value = kInf;
  Vec best_u(static_cast<std::size_t>(m), 0.0);
  for (double r : radii) {
    BudgetedMinimum res = minimize_budgeted(phi, m, prob.control_set, r, budget);
    if (res.value < best_value) {
      best_value = res.value;
      best_u = res.u;
    }
    if (best_value < -gamma) {
      FeedbackChoice choice;
      choice.u = best_u;
      choice.margin = best_value;
      choice.widened_to = (r <= N) ? 0.0 : r;
      return choice;
    }
  }
  throw NoControlError(Vec(x.begin(), x.end()), best_u, best_value, gamma);
}

namespace {

// One RK4 step of the held-control dynamics.
void rk4_step(const DynamicsFn& f, const Vec& y, std::span<const double> u,
              double h, Vec& out) {
  const std::size_t n = y.size();
  Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(y, u, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  f(tmp, u, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  f(tmp, u, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  f(tmp, u, k4);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

struct TrialRow {
  double ds = 0.0;  // s offset from the cell start
  Vec y;
  double W = 0.0;
  double lbar = 0.0;
  double speed = 1.0;
  double cost = 0.0;  // ∫ l̄ ds from the cell start
  double lhs = 0.0;
  double rhs = 0.0;
};

struct TrialCell {
  std::vector<TrialRow> rows;  // accepted substep endpoints (cell start excluded)
  bool reached_target_level = false;
  double fail_lhs = 0.0, fail_rhs = 0.0;
  bool ok = false;
};

// Integrates one hold attempt and checks certificates and band membership.
TrialCell try_cell(const RescaledProblem& rescaled, const MrfCandidate& candidate,
                   const Vec& x_cell, std::span<const double> u, double delta,
                   int substeps, double gamma, double eps, double muhat,
                   double sigma) {
  TrialCell trial;
  const ControlProblem& prob = rescaled.problem;
  const double p0 = candidate.p0;
  const double band_hi = 2.0 * sigma * (1.0 + 1e-9);
  const double h = delta / substeps;

  double W_start, l_prev;
  try {
    W_start = candidate.W(x_cell);
    l_prev = prob.cost(x_cell, u);
  } catch (const EvalError&) {
    return trial;
  }
  if (!std::isfinite(W_start) || !std::isfinite(l_prev)) return trial;

  Vec y = x_cell;
  double cost = 0.0;
  for (int k = 1; k <= substeps; ++k) {
    Vec y_next;
    double W_k, l_k, sp_k;
    try {
      rk4_step(prob.dynamics, y, u, h, y_next);
      W_k = candidate.W(y_next);
      l_k = prob.cost(y_next, u);
      sp_k = rescaled.speed(y_next, u);
    } catch (const EvalError&) {
      return trial;
    }
    bool finite = std::isfinite(W_k) && std::isfinite(l_k);
    for (double c : y_next) finite = finite && std::isfinite(c);
    if (!finite) return trial;
    if (!prob.state_space.contains(y_next)) return trial;
    if (W_k > band_hi) return trial;

    cost += 0.5 * h * (l_prev + l_k);
    const double ds = k * h;
    const double lhs = W_k - W_start + p0 * cost;
    const double rhs = -gamma / (eps + 1.0) * ds;
    if (lhs > rhs + kCertTol) {
      trial.fail_lhs = lhs;
      trial.fail_rhs = rhs;
      return trial;
    }

    TrialRow row;
    row.ds = ds;
    row.y = y_next;
    row.W = W_k;
    row.lbar = l_k;
    row.speed = sp_k;
    row.cost = cost;
    row.lhs = lhs;
    row.rhs = rhs;
    trial.rows.push_back(std::move(row));

    if (W_k <= muhat) {
      trial.reached_target_level = true;
      break;
    }
    y = y_next;
    l_prev = l_k;
  }
  trial.ok = true;
  return trial;
}

}  // namespace

StageResult sample_hold_stage(const RescaledProblem& rescaled,
                              const MrfCandidate& candidate, const Vec& x0,
                              double mubar, double muhat,
                              const EnvelopeTables& tables, double sigma,
                              const StepBudget& budget, int stage_index,
                              Trajectory& out) {
  const ControlProblem& prob = rescaled.problem;
  if (out.rows() == 0)
    throw std::invalid_argument("sample_hold_stage: trajectory must carry the start row");
  if (!(muhat > 0.0) || !(mubar > muhat))
    throw std::invalid_argument("sample_hold_stage: need 0 < muhat < mubar");
  if (tables.empty())
    throw std::invalid_argument("sample_hold_stage: empty envelope tables");

  StageResult result;
  result.first_row = out.rows();

  const double kappa = budget.margin_frac;
  if (!(kappa > 0.0) || kappa > 1.0)
    throw std::invalid_argument("sample_hold_stage: margin_frac must lie in ]0,1]");
  const double N = tables.N_at(muhat);
  const double gamma_floor = kappa * tables.gamma_at(muhat / 4.0);
  if (!(gamma_floor > 0.0))
    throw std::invalid_argument("sample_hold_stage: decrease rate vanishes on the band");
  const double stage_cap =
      budget.stage_cap_factor * (budget.eps + 1.0) * mubar / gamma_floor;
  const double s_stage_start = out.s.back();

  Vec x = x0;
  double W_cur = candidate.W(x);
  double delta = budget.delta;

  while (W_cur > muhat) {
    if (out.s.back() - s_stage_start > stage_cap) {
      std::ostringstream msg;
      msg << "sample_hold_stage: stage " << stage_index
          << " exceeded its time cap (" << format_double(stage_cap)
          << ") before reaching W <= " << format_double(muhat);
      throw InconclusiveError(msg.str());
    }

    const double gamma = kappa * tables.gamma_at(W_cur);
    FeedbackChoice choice;
    try {
      choice = feedback_select(rescaled, candidate, x, N, gamma, budget.minimize);
    } catch (const NoControlError& e) {
      // The tabulated demand is a sampled estimate; a genuine margin notch
      // (e.g. a control-authority collapse on a thin set) can sit below it.
      // A strictly decreasing control still certifies the cell at its own
      // rate, which the refined table accounts for afterwards.
      if (!(e.best_value < 0.0)) throw;
      choice.u = e.best_u;
      choice.margin = e.best_value;
      choice.widened_to = 0.0;
    }
    const double gamma_cell = std::min(gamma, -choice.margin);
    if (gamma_cell < gamma)
      result.shortfalls.emplace_back(W_cur, gamma_cell);
    result.max_hold_radius = std::max(result.max_hold_radius, norm(choice.u));

    TrialCell trial;
    for (;;) {
      trial = try_cell(rescaled, candidate, x, choice.u, delta, budget.substeps,
                       gamma_cell, budget.eps, muhat, sigma);
      if (trial.ok) break;
      ++result.rejections;
      delta *= 0.5;
      if (delta < budget.delta_floor)
        throw StageError("sample_hold_stage: certificate failed at the delta floor",
                         x, delta * 2.0, trial.fail_lhs, trial.fail_rhs);
    }

    // Commit: append the accepted substep rows with exact cumulative
    // integrals, re-evaluating the cell-start cost and speed under the new
    // control so each cell's quadrature is internally consistent.
    const double s_cell = out.s.back();
    const double cost_cell = out.cost.back();
    double t_acc = out.t.back();
    double cost_t_acc = out.cost_t.back();
    double l_prev = prob.cost(x, choice.u);
    double sp_prev = rescaled.speed(x, choice.u);
    for (const TrialRow& row : trial.rows) {
      const double h = row.ds - (out.s.back() - s_cell);
      const double t_step = 0.5 * h * (1.0 / sp_prev + 1.0 / row.speed);
      t_acc += t_step;
      cost_t_acc += 0.5 * t_step * (l_prev * sp_prev + row.lbar * row.speed);
      out.s.push_back(s_cell + row.ds);
      out.t.push_back(t_acc);
      out.y.push_back(row.y);
      out.u.push_back(choice.u);
      out.W.push_back(row.W);
      out.cost.push_back(cost_cell + row.cost);
      out.cost_t.push_back(cost_t_acc);
      out.cert_lhs.push_back(row.lhs);
      out.cert_rhs.push_back(row.rhs);
      out.speed.push_back(row.speed);
      out.lbar.push_back(row.lbar);
      out.d_target.push_back(prob.target.distance(row.y));
      out.beta_bound.push_back(std::numeric_limits<double>::quiet_NaN());
      out.stage.push_back(stage_index);
      out.stage_boundary.push_back(0);
      l_prev = row.lbar;
      sp_prev = row.speed;
    }
    ++result.cells;
    delta = std::min(budget.delta, delta * 2.0);
    x = out.y.back();
    W_cur = out.W.back();
  }

  result.last_row = out.rows() - 1;
  result.end_state = x;
  result.end_W = W_cur;
  return result;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  os << "s,t";
  for (int i = 1; i <= traj.n; ++i) os << ",x_" << i;
  for (int j = 1; j <= traj.m; ++j) os << ",u_" << j;
  os << ",W,cost,cert_lhs,cert_rhs,beta,d,stage_boundary\n";
  for (std::size_t i = 0; i < traj.rows(); ++i) {
    os << format_double(traj.s[i]) << ',' << format_double(traj.t[i]);
    for (double c : traj.y[i]) os << ',' << format_double(c);
    for (double c : traj.u[i]) os << ',' << format_double(c);
    os << ',' << format_double(traj.W[i]) << ',' << format_double(traj.cost[i])
       << ',' << format_double(traj.cert_lhs[i]) << ','
       << format_double(traj.cert_rhs[i]) << ','
       << format_double(traj.beta_bound[i]) << ','
       << format_double(traj.d_target[i]) << ','
       << int(traj.stage_boundary[i]) << '\n';
  }
}

namespace {

// Upper inverse of a nondecreasing piecewise-linear table: sup{r : g(r) <= v},
// with a linear-through-zero tail below the table. Above the table the sup is
// unbounded by the data alone; callers handle that case.
double upper_inverse(std::span<const double> r, std::span<const double> g,
                     double v) {
  if (v < g.front()) {
    return g.front() > 0.0 ? r.front() * v / g.front() : 0.0;
  }
  for (std::size_t i = g.size() - 1; i-- > 0;) {
    if (g[i] <= v) {
      if (g[i + 1] <= v) return r[i + 1];
      return r[i] + (v - g[i]) / (g[i + 1] - g[i]) * (r[i + 1] - r[i]);
    }
  }
  return r.front();
}

}  // namespace

KLEnvelope::KLEnvelope(std::vector<double> r_grid, std::vector<double> sigma_minus,
                       std::vector<double> sigma_plus, EnvelopeTables tables,
                       double eps, double margin_frac)
    : r_(std::move(r_grid)),
      sm_(std::move(sigma_minus)),
      sp_(std::move(sigma_plus)),
      tables_(std::move(tables)),
      eps_(eps),
      kappa_(margin_frac) {
  if (r_.size() < 2 || sm_.size() != r_.size() || sp_.size() != r_.size())
    throw std::invalid_argument("KLEnvelope: table sizes mismatch");
  if (!(kappa_ > 0.0) || kappa_ > 1.0)
    throw std::invalid_argument("KLEnvelope: margin_frac must lie in ]0,1]");
  for (std::size_t i = 1; i < r_.size(); ++i) {
    if (!(r_[i] > r_[i - 1]))
      throw std::invalid_argument("KLEnvelope: r grid must increase");
    if (sm_[i] < sm_[i - 1] || sp_[i] < sp_[i - 1])
      throw std::invalid_argument("KLEnvelope: tables must be nondecreasing");
  }
  if (tables_.empty()) throw std::invalid_argument("KLEnvelope: empty gamma table");
}

namespace {

double interp_table(std::span<const double> r, std::span<const double> g,
                    double rr, bool zero_tail) {
  if (rr <= r.front()) {
    if (!zero_tail) return g.front();
    return r.front() > 0.0 ? g.front() * rr / r.front() : g.front();
  }
  if (rr >= r.back()) return g.back();
  auto it = std::upper_bound(r.begin(), r.end(), rr);
  const std::size_t i = static_cast<std::size_t>(it - r.begin());
  const double w = (rr - r[i - 1]) / (r[i] - r[i - 1]);
  return g[i - 1] + w * (g[i] - g[i - 1]);
}

}  // namespace

double KLEnvelope::sigma_minus_at(double r) const {
  if (r <= 0.0) return 0.0;
  return std::min(r, interp_table(r_, sm_, r, true));
}

double KLEnvelope::sigma_plus_at(double r) const {
  if (r <= 0.0) return 0.0;
  return interp_table(r_, sp_, r, true);
}

double KLEnvelope::sigma_minus_upper_inv(double v) const {
  if (v <= 0.0) return 0.0;
  // sigma_minus(r) <= r for every r, so r = v always qualifies.
  if (v >= sm_.back()) return std::max(v, r_.back());
  return std::max(v, upper_inverse(r_, sm_, v));
}

double KLEnvelope::gamma_tilde_upper_inv(double v) const {
  if (v <= 0.0) return 0.0;
  // Build the increasing view of gamma_tilde on the table grid, with the
  // feedback's margin fraction folded into the certified rate.
  std::vector<double> rr(tables_.r.rbegin(), tables_.r.rend());
  std::vector<double> gt(rr.size());
  for (std::size_t i = 0; i < rr.size(); ++i)
    gt[i] = std::min(rr[i], kappa_ * tables_.gamma_at(rr[i]));
  if (v >= gt.back()) return kInf;  // the table certifies no decrease beyond it
  if (v < gt.front()) {
    // Below the table both branches of gamma_tilde are linear through zero.
    return rr.front() * v / gt.front();
  }
  return upper_inverse(rr, gt, v);
}

double KLEnvelope::beta(double r, double tau) const {
  const double v1 = sigma_minus_upper_inv(r);
  const double v2 = v1 * 2.0 * (eps_ + 1.0) / (eps_ + 1.0 + tau);
  const double v3 = gamma_tilde_upper_inv(v2);
  if (std::isinf(v3)) return sp_.back();
  return sigma_plus_at(v3);
}

KLEnvelope build_kl_envelope(const ControlProblem& problem,
                             const MrfCandidate& candidate,
                             const EnvelopeTables& tables,
                             const LevelSampling& sampling, double eps,
                             std::span<const std::pair<double, double>>
                                 extra_w_d_pairs,
                             double margin_frac) {
  if (tables.empty())
    throw std::invalid_argument("build_kl_envelope: empty envelope tables");
  std::vector<std::pair<double, double>> pairs(extra_w_d_pairs.begin(),
                                               extra_w_d_pairs.end());
  SplitMix64 rng{sampling.seed ^ 0x51f15e7aull};
  const std::size_t draws =
      static_cast<std::size_t>(std::max(1, sampling.samples_per_band)) * 2;
  Vec x(sampling.box_lo.size());
  for (std::size_t i = 0; i < draws; ++i) {
    x = rng.in_box(sampling.box_lo, sampling.box_hi);
    if (!problem.state_space.contains(x)) continue;
    const double d = problem.target.distance(x);
    if (!(d > 0.0)) continue;
    double w;
    try {
      w = candidate.W(x);
    } catch (const EvalError&) {
      continue;
    }
    if (!std::isfinite(w) || !(w > 0.0)) continue;
    pairs.emplace_back(w, d);
  }
  if (pairs.size() < 8)
    throw std::runtime_error("build_kl_envelope: too few usable samples");

  double w_lo = kInf, w_hi = 2.0 * sampling.sigma;
  for (const auto& [w, d] : pairs) {
    if (w > 0.0) w_lo = std::min(w_lo, w);
    w_hi = std::max(w_hi, w);
  }
  const int points = 64;
  std::vector<double> grid(points), sm(points), sp(points);
  const double ratio = std::pow(w_hi / w_lo, 1.0 / (points - 1));
  for (int i = 0; i < points; ++i) grid[i] = w_lo * std::pow(ratio, i);
  grid.back() = w_hi;
  for (int i = 0; i < points; ++i) {
    double min_d_above = kInf, max_d_below = 0.0;
    for (const auto& [w, d] : pairs) {
      if (w >= grid[i]) min_d_above = std::min(min_d_above, d);
      if (w <= grid[i] * (1.0 + 1e-12)) max_d_below = std::max(max_d_below, d);
    }
    sm[i] = std::min(grid[i], min_d_above);
    sp[i] = max_d_below;
  }
  // Enforce monotonicity against sampling noise at grid resolution.
  for (int i = 1; i < points; ++i) {
    sm[i] = std::max(sm[i], sm[i - 1]);
    sp[i] = std::max(sp[i], sp[i - 1]);
  }
  if (!(sp.front() > 0.0)) {
    // No displacement recorded at the lowest level; seed with the smallest
    // sampled distance so the table stays positive.
    double d_min = kInf;
    for (const auto& [w, d] : pairs) d_min = std::min(d_min, d);
    for (int i = 0; i < points && sp[i] <= 0.0; ++i) sp[i] = d_min;
  }
  return KLEnvelope(std::move(grid), std::move(sm), std::move(sp), tables, eps,
                    margin_frac);
}

GacBoundReport check_gac_bound(const Trajectory& traj, const KLEnvelope& envelope,
                               double p0) {
  GacBoundReport report;
  if (traj.rows() == 0) return report;
  const double r0 = traj.d_target.front();
  double worst_s = kInf, worst_t = kInf;
  for (std::size_t i = 0; i < traj.rows(); ++i) {
    worst_s = std::min(worst_s, envelope.beta(r0, traj.s[i]) - traj.d_target[i]);
    worst_t = std::min(worst_t, envelope.beta(r0, traj.t[i]) - traj.d_target[i]);
  }
  report.worst_slack_s = worst_s;
  report.worst_slack_t = worst_t;
  report.cost_total = traj.cost.back();
  report.cost_bound = traj.W.front() / p0;
  report.cost_ok = report.cost_total <= report.cost_bound * (1.0 + 1e-12) + 1e-12;
  report.pass = report.cost_ok && worst_s >= -kCertTol && worst_t >= -kCertTol;
  return report;
}

std::string GacBoundReport::text() const {
  std::ostringstream os;
  os << "gac bound: " << (pass ? "pass" : "FAIL") << "\n"
     << "  envelope slack (s clock) = " << format_double(worst_slack_s) << "\n"
     << "  envelope slack (t clock) = " << format_double(worst_slack_t) << "\n"
     << "  cost = " << format_double(cost_total)
     << "  bound = " << format_double(cost_bound) << "  ("
     << (cost_ok ? "ok" : "exceeded") << ")\n";
  return os.str();
}

std::string SynthesisResult::text() const {
  std::ostringstream os;
  int cells = 0, rejections = 0;
  std::size_t shortfalls = 0;
  for (const StageResult& st : stages) {
    cells += st.cells;
    rejections += st.rejections;
    shortfalls += st.shortfalls.size();
  }
  os << "synthesis\n"
     << "  W(z) = " << format_double(W_start) << "\n"
     << "  stop threshold = " << format_double(stop_threshold) << "\n"
     << "  stages = " << stages.size() << ", cells = " << cells
     << ", rejections = " << rejections << "\n";
  if (shortfalls > 0)
    os << "  rate shortfalls = " << shortfalls
       << " (cells certified below the tabulated demand)\n";
  if (!trajectory.s.empty()) {
    os << "  final W = " << format_double(trajectory.W.back())
       << ", final d = " << format_double(trajectory.d_target.back()) << "\n"
       << "  duration: s = " << format_double(trajectory.s.back())
       << ", t = " << format_double(trajectory.t.back()) << "\n";
  }
  os << "  cost = " << format_double(cost_total) << "\n" << gac.text();
  return os.str();
}

SynthesisResult synthesize(const ControlProblem& problem,
                           const MrfCandidate& candidate, const Vec& z,
                           const LevelSampling& sampling,
                           const StepBudget& budget) {
  const int n = problem.n();
  const int m = problem.m();
  if (static_cast<int>(z.size()) != n)
    throw std::invalid_argument("synthesize: initial state dimension mismatch");
  const double Wz = candidate.W(z);
  if (!(Wz > 0.0))
    throw std::invalid_argument("synthesize: W(z) must be positive");
  if (Wz > sampling.sigma)
    throw std::invalid_argument("synthesize: W(z) exceeds sigma; enlarge sigma");

  SynthesisResult result;
  result.W_start = Wz;
  result.stop_threshold = budget.stop_frac * Wz;

  LevelSampling plan = sampling;
  plan.r_min = std::max(budget.stop_frac * Wz / 4.0,
                        std::numeric_limits<double>::min());
  result.sweep = verify_mrf(problem, candidate, plan, budget.minimize);
  if (result.sweep.verdict != Verdict::Verified && !budget.force) {
    throw SweepError(
        std::string("synthesize: sweep verdict is ") +
        verdict_name(result.sweep.verdict) +
        (result.sweep.inconclusive_reason.empty()
             ? ""
             : " (" + result.sweep.inconclusive_reason + ")"),
        result.sweep.verdict);
  }
  result.tables = result.sweep.tables;

  const RescaledProblem rescaled = rescale(problem);
  Trajectory& traj = result.trajectory;
  traj.n = n;
  traj.m = m;
  Vec u0(static_cast<std::size_t>(m), 0.0);
  traj.s.push_back(0.0);
  traj.t.push_back(0.0);
  traj.y.push_back(z);
  traj.u.push_back(u0);
  traj.W.push_back(Wz);
  traj.cost.push_back(0.0);
  traj.cost_t.push_back(0.0);
  traj.cert_lhs.push_back(0.0);
  traj.cert_rhs.push_back(0.0);
  traj.speed.push_back(rescaled.speed(z, u0));
  traj.lbar.push_back(rescaled.problem.cost(z, u0));
  traj.d_target.push_back(problem.target.distance(z));
  traj.beta_bound.push_back(std::numeric_limits<double>::quiet_NaN());
  traj.stage.push_back(0);
  traj.stage_boundary.push_back(0);

  Vec x = z;
  double W_cur = Wz;
  for (int k = 1; W_cur > result.stop_threshold; ++k) {
    if (k > 64)
      throw InconclusiveError("synthesize: stage count exceeded 64");
    const double muhat = std::ldexp(Wz, -k);
    if (W_cur <= muhat) continue;  // a previous stage overshot this level
    StageResult st = sample_hold_stage(rescaled, candidate, x, W_cur, muhat,
                                       result.tables, sampling.sigma, budget, k,
                                       traj);
    traj.stage_boundary.back() = 1;
    x = st.end_state;
    W_cur = st.end_W;
    result.stages.push_back(std::move(st));
  }
  result.cost_total = traj.cost.back();

  // One monotone rate function must certify every cell: start from κ·γ̂ and
  // lower it through each shortfall (the entry just above the shortfall's W
  // is the interpolation partner, so it is clamped too), then restore
  // monotonicity toward smaller r. The β envelope is built from this table.
  EnvelopeTables refined = result.tables;
  for (double& g : refined.gamma) g *= budget.margin_frac;
  for (const StageResult& st : result.stages) {
    for (const auto& [Wc, gc] : st.shortfalls) {
      for (std::size_t i = 0; i < refined.r.size(); ++i) {
        const bool at_or_below = refined.r[i] <= Wc;
        const bool partner_above =
            i + 1 == refined.r.size() || refined.r[i + 1] <= Wc;
        if (at_or_below || partner_above)
          refined.gamma[i] = std::min(refined.gamma[i], gc);
      }
    }
  }
  for (std::size_t i = 1; i < refined.gamma.size(); ++i)
    refined.gamma[i] = std::min(refined.gamma[i], refined.gamma[i - 1]);
  result.tables_refined = refined;

  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(traj.rows());
  for (std::size_t i = 0; i < traj.rows(); ++i)
    if (traj.W[i] > 0.0 && traj.d_target[i] > 0.0)
      pairs.emplace_back(traj.W[i], traj.d_target[i]);
  KLEnvelope envelope =
      build_kl_envelope(problem, candidate, refined, plan, budget.eps,
                        pairs, 1.0);
  const double r0 = traj.d_target.front();
  for (std::size_t i = 0; i < traj.rows(); ++i)
    traj.beta_bound[i] = envelope.beta(r0, traj.s[i]);
  result.gac = check_gac_bound(traj, envelope, candidate.p0);
  return result;
}

}  // namespace mrf
