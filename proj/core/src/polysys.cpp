#include "mrf/polysys.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mrf/expr.hpp"
#include "mrf/rng.hpp"

namespace mrf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double NearAffineStructure::rbar(double r) const {
  if (M == 0) return kInf;
  if (!(r > 0.0)) throw std::invalid_argument("rbar: r must be positive");
  if (std::isinf(r)) return kInf;
  double lo = kInf;
  for (int Ki : K) {
    lo = std::min(lo, std::pow(r, double(Ki)));
    lo = std::min(lo, std::pow(r, double(Ki) * dbar));
  }
  return lo / M;
}

ClassifyResult classify_near_affine(const PolyDynamics& pd) {
  ClassifyResult result;
  const int m = pd.m();
  std::vector<int> K(static_cast<std::size_t>(m), 0);  // 0 = not seen yet
  NearAffineStructure nas;
  nas.dbar = 0;
  for (const PolyTerm& term : pd.terms()) {
    for (int i = 0; i < m; ++i) {
      const int e = term.alpha.exponents[static_cast<std::size_t>(i)];
      if (e == 0) continue;
      if (e % 2 == 0) {
        result.offending = term.alpha;
        std::ostringstream os;
        os << "coordinate " << (i + 1) << " has even exponent " << e << " in term "
           << term.alpha.str();
        result.reason = os.str();
        return result;
      }
      if (K[static_cast<std::size_t>(i)] == 0) {
        K[static_cast<std::size_t>(i)] = e;
      } else if (K[static_cast<std::size_t>(i)] != e) {
        result.offending = term.alpha;
        std::ostringstream os;
        os << "coordinate " << (i + 1) << " appears with exponents "
           << K[static_cast<std::size_t>(i)] << " and " << e << " in term "
           << term.alpha.str();
        result.reason = os.str();
        return result;
      }
    }
    nas.dbar = std::max(nas.dbar, term.alpha.support_count());
    nas.active.push_back(term.alpha);
  }
  for (int& Ki : K)
    if (Ki == 0) Ki = 1;  // unused coordinates take the trivial odd exponent
  nas.K = std::move(K);
  nas.M = static_cast<int>(nas.active.size());
  result.ok = true;
  result.structure = std::move(nas);
  return result;
}

PolyDynamics affine_field(const NearAffineStructure& nas, const PolyDynamics& pd) {
  if (static_cast<int>(nas.active.size()) != static_cast<int>(pd.terms().size()))
    throw std::invalid_argument("affine_field: structure does not match the system");
  std::vector<PolyTerm> terms;
  terms.reserve(nas.active.size());
  for (std::size_t k = 0; k < nas.active.size(); ++k) {
    if (!(pd.terms()[k].alpha == nas.active[k]))
      throw std::invalid_argument("affine_field: term order mismatch");
    MultiIndex alpha;
    alpha.exponents.assign(nas.active.size(), 0);
    alpha.exponents[k] = 1;
    terms.push_back({std::move(alpha), pd.terms()[k].field});
  }
  return PolyDynamics(pd.n(), nas.M, pd.drift(), std::move(terms));
}

CostFn affine_cost(const ControlProblem& problem, double r,
                   const MinimizeBudget& budget) {
  if (!(r > 0.0) || std::isinf(r))
    throw std::invalid_argument(
        "affine_cost: finite r required (supply the sup-cost analytically for r = inf)");
  const CostFn l = problem.cost;
  const ControlSet U = problem.control_set;
  const int m = problem.m();
  return [l, U, m, r, budget](std::span<const double> x,
                              std::span<const double>) -> double {
    auto neg = [&](std::span<const double> u) -> std::optional<double> {
      try {
        const double v = l(x, u);
        if (!std::isfinite(v)) return std::nullopt;
        return -v;
      } catch (const EvalError&) {
        return std::nullopt;
      }
    };
    return -minimize_budgeted(neg, m, U, r, budget).value;
  };
}

std::vector<std::vector<int>> sign_set(int k, int s) {
  if (k < 1) throw std::invalid_argument("sign_set: k must be >= 1");
  if (s != 1 && s != -1) throw std::invalid_argument("sign_set: s must be +1 or -1");
  std::vector<std::vector<int>> out;
  out.reserve(1u << (k - 1));
  for (std::uint32_t bits = 0; bits < (1u << k); ++bits) {
    std::vector<int> tuple(static_cast<std::size_t>(k));
    int prod = 1;
    for (int j = 0; j < k; ++j) {
      tuple[static_cast<std::size_t>(j)] = (bits >> j) & 1u ? -1 : 1;
      prod *= tuple[static_cast<std::size_t>(j)];
    }
    if (prod == s) out.push_back(std::move(tuple));
  }
  return out;
}

HullWitness hull_witness(const NearAffineStructure& nas, std::span<const double> w,
                         double r) {
  if (static_cast<int>(w.size()) != nas.M)
    throw std::invalid_argument("hull_witness: w length must equal M");
  const int m = static_cast<int>(nas.K.size());
  HullWitness witness;
  if (nas.M == 0) {
    witness.weights.push_back(1.0);
    witness.controls.emplace_back(static_cast<std::size_t>(m), 0.0);
    return witness;
  }
  const double bound = nas.rbar(r);
  for (double wa : w)
    if (!(std::abs(wa) <= bound + 1e-12))
      throw std::domain_error("hull_witness: |w| exceeds rbar(r)");

  for (std::size_t a = 0; a < nas.active.size(); ++a) {
    const MultiIndex& alpha = nas.active[a];
    const std::vector<int> supp = alpha.support();
    const int k = static_cast<int>(supp.size());
    const double wprime = nas.M * w[a];
    const int s = wprime < 0.0 ? -1 : 1;
    const double mag = std::pow(std::abs(wprime), 1.0 / k);
    const double weight = 1.0 / (nas.M * double(1u << (k - 1)));
    for (const std::vector<int>& signs : sign_set(k, s)) {
      Vec u(static_cast<std::size_t>(m), 0.0);
      for (int j = 0; j < k; ++j) {
        const int coord = supp[static_cast<std::size_t>(j)];
        const int Ki = nas.K[static_cast<std::size_t>(coord)];
        u[static_cast<std::size_t>(coord)] =
            signs[static_cast<std::size_t>(j)] * std::pow(mag, 1.0 / Ki);
      }
      // Merge duplicate controls (w_a = 0 collapses a whole sign set onto 0).
      bool merged = false;
      for (std::size_t q = 0; q < witness.controls.size(); ++q) {
        if (witness.controls[q] == u) {
          witness.weights[q] += weight;
          merged = true;
          break;
        }
      }
      if (!merged) {
        witness.weights.push_back(weight);
        witness.controls.push_back(std::move(u));
      }
    }
  }
  return witness;
}

double HullWitness::residual(const NearAffineStructure& nas,
                             std::span<const double> w) const {
  double worst = 0.0;
  for (std::size_t a = 0; a < nas.active.size(); ++a) {
    double sum = 0.0;
    for (std::size_t q = 0; q < controls.size(); ++q)
      sum += weights[q] * nas.active[a].monomial(controls[q]);
    worst = std::max(worst, std::abs(sum - w[a]));
  }
  double total = 0.0;
  for (double wt : weights) total += wt;
  return worst + std::abs(total - 1.0);
}

double HullWitness::field_residual(const PolyDynamics& pd, std::span<const double> x,
                                   std::span<const double> w) const {
  Vec sum(static_cast<std::size_t>(pd.n()), 0.0);
  for (std::size_t q = 0; q < controls.size(); ++q) {
    const Vec f = pd.eval(x, controls[q]);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += weights[q] * f[i];
  }
  Vec target = pd.drift()(x);
  for (std::size_t a = 0; a < pd.terms().size(); ++a) {
    const Vec fa = pd.terms()[a].field(x);
    for (std::size_t i = 0; i < target.size(); ++i) target[i] += w[a] * fa[i];
  }
  double err2 = 0.0;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double d = sum[i] - target[i];
    err2 += d * d;
  }
  return std::sqrt(err2);
}

PolyDynamics maximal_subsystem(const PolyDynamics& pd) {
  const int d = pd.degree();
  std::vector<PolyTerm> terms;
  for (const PolyTerm& term : pd.terms())
    if (term.alpha.degree() == d) terms.push_back(term);
  return PolyDynamics(pd.n(), pd.m(), pd.drift(), std::move(terms));
}

HypCheckReport check_hyp_Amax(
    const std::function<double(std::span<const double>)>& M0,
    const std::function<double(std::span<const double>, std::span<const double>)>& M1,
    int d, std::span<const double> box_lo, std::span<const double> box_hi, int m,
    double u_radius, int samples, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("check_hyp_Amax: d must be >= 1");
  HypCheckReport report;
  report.samples = samples;
  SplitMix64 rng{seed};
  const Vec zero(static_cast<std::size_t>(m), 0.0);
  const double scales[] = {2.0, 10.0, 100.0, 1000.0};
  Vec ku(static_cast<std::size_t>(m));
  for (int it = 0; it < samples; ++it) {
    const Vec x = rng.in_box(box_lo, box_hi);
    const Vec u = rng.in_ball(m, u_radius);
    double violation = 0.0, at_k = 1.0;
    const double m1_zero = std::abs(M1(x, zero));
    violation = std::max(violation, m1_zero);
    if (M0) violation = std::max(violation, -M0(x));
    const double m1 = M1(x, u);
    violation = std::max(violation, -m1);
    for (double kk : scales) {
      for (int j = 0; j < m; ++j) ku[static_cast<std::size_t>(j)] = kk * u[static_cast<std::size_t>(j)];
      const double bound = std::pow(kk, double(d)) * m1;
      const double v = (M1(x, ku) - bound) / (1.0 + std::abs(bound));
      if (v > violation) {
        violation = v;
        at_k = kk;
      }
    }
    if (violation > report.worst) {
      report.worst = violation;
      report.x = x;
      report.u = u;
      report.k = at_k;
    }
  }
  report.pass = report.worst <= 1e-9;
  return report;
}

double DiagonalSpec::lambda0() const {
  double sum = 0.0;
  for (double li : lambda) sum += li;
  return 1.0 - sum;
}

void DiagonalSpec::validate() const {
  if (d < 1) throw std::invalid_argument("DiagonalSpec: d must be >= 1");
  double sum = 0.0;
  for (double li : lambda) {
    if (!(li >= 0.0)) throw std::invalid_argument("DiagonalSpec: lambda_i must be >= 0");
    sum += li;
  }
  if (sum > 1.0 + 1e-12)
    throw std::invalid_argument("DiagonalSpec: lambda must sum to at most 1");
}

PolyDynamics diagonal_subsystem(const PolyDynamics& pd, const DiagonalSpec& spec) {
  spec.validate();
  if (static_cast<int>(spec.lambda.size()) != pd.m())
    throw std::invalid_argument("diagonal_subsystem: lambda length must equal m");
  const int d = spec.d;
  std::vector<PolyTerm> terms;
  for (const PolyTerm& term : pd.terms()) {
    if (term.alpha.support_count() != 1) continue;  // mixed terms are dropped
    const int i = term.alpha.support().front();
    const int q = term.alpha.degree();
    if (q > d)
      throw std::invalid_argument(
          "diagonal_subsystem: term degree exceeds the declared d");
    const double li = spec.lambda[static_cast<std::size_t>(i)];
    double scale;
    if (q == d) {
      scale = 1.0;  // lambda^0, including the lambda_i = 0 limit
    } else {
      scale = std::pow(li, double(d - q) / double(d));
    }
    if (scale == 0.0) continue;
    VectorField base = term.field;
    VectorField scaled = [base, scale](std::span<const double> x) {
      Vec v = base(x);
      for (double& c : v) c *= scale;
      return v;
    };
    terms.push_back({term.alpha, std::move(scaled)});
  }
  return PolyDynamics(pd.n(), pd.m(), pd.drift(), std::move(terms));
}

HullWitness diagonal_witness(const DiagonalSpec& spec, std::span<const double> u) {
  spec.validate();
  const int m = static_cast<int>(spec.lambda.size());
  if (static_cast<int>(u.size()) != m)
    throw std::invalid_argument("diagonal_witness: control length mismatch");
  HullWitness witness;
  const double l0 = spec.lambda0();
  if (l0 > 0.0) {
    witness.weights.push_back(l0);
    witness.controls.emplace_back(static_cast<std::size_t>(m), 0.0);
  }
  for (int i = 0; i < m; ++i) {
    const double li = spec.lambda[static_cast<std::size_t>(i)];
    if (li == 0.0) {
      if (u[static_cast<std::size_t>(i)] != 0.0)
        throw std::domain_error(
            "diagonal_witness: lambda_i = 0 with u_i != 0 has no finite-control witness");
      continue;
    }
    Vec ui(static_cast<std::size_t>(m), 0.0);
    ui[static_cast<std::size_t>(i)] =
        u[static_cast<std::size_t>(i)] * std::pow(li, -1.0 / spec.d);
    witness.weights.push_back(li);
    witness.controls.push_back(std::move(ui));
  }
  if (witness.weights.empty()) {
    witness.weights.push_back(1.0);
    witness.controls.emplace_back(static_cast<std::size_t>(m), 0.0);
  }
  return witness;
}

HypCheckReport check_hyp_Adiag(const CostFn& cost, int m, int d, double M0,
                               std::span<const double> box_lo,
                               std::span<const double> box_hi, double u_radius,
                               int samples, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("check_hyp_Adiag: d must be >= 1");
  if (!(M0 >= 0.0)) throw std::invalid_argument("check_hyp_Adiag: M0 must be >= 0");
  HypCheckReport report;
  report.samples = samples;
  SplitMix64 rng{seed};
  const Vec zero(static_cast<std::size_t>(m), 0.0);
  for (int it = 0; it < samples; ++it) {
    const Vec x = rng.in_box(box_lo, box_hi);
    const Vec u = rng.in_ball(m, u_radius);
    // Interior simplex point from normalized exponential draws (m+1 slots,
    // slot 0 is lambda_0).
    Vec e(static_cast<std::size_t>(m) + 1);
    double total = 0.0;
    for (double& ei : e) {
      ei = -std::log(rng.uniform() + 1e-300);
      total += ei;
    }
    DiagonalSpec spec;
    spec.d = d;
    spec.lambda.assign(u.size(), 0.0);
    for (int i = 0; i < m; ++i)
      spec.lambda[static_cast<std::size_t>(i)] = e[static_cast<std::size_t>(i) + 1] / total;

    const double denom = cost(x, u);
    if (!(denom > 1e-12)) continue;  // the inequality is checked where l > 0
    double lhs = spec.lambda0() * cost(x, zero);
    Vec ui(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      std::fill(ui.begin(), ui.end(), 0.0);
      const double li = spec.lambda[static_cast<std::size_t>(i)];
      ui[static_cast<std::size_t>(i)] =
          u[static_cast<std::size_t>(i)] * std::pow(li, -1.0 / d);
      lhs += li * cost(x, ui);
    }
    const double ratio = lhs / denom;
    if (ratio > report.worst) {
      report.worst = ratio;
      report.x = x;
      report.u = u;
    }
  }
  report.pass = report.worst <= M0 + 1e-9;
  return report;
}

std::string HypCheckReport::text() const {
  std::ostringstream os;
  os << (pass ? "pass" : "FAIL") << "  worst = " << format_double(worst)
     << "  over " << samples << " samples";
  if (!x.empty()) {
    os << "  at x = (";
    for (std::size_t i = 0; i < x.size(); ++i)
      os << (i ? ", " : "") << format_double(x[i]);
    os << "), u = (";
    for (std::size_t i = 0; i < u.size(); ++i)
      os << (i ? ", " : "") << format_double(u[i]);
    os << "), k = " << format_double(k);
  }
  os << "\n";
  return os.str();
}

TransferReport transfer_check(const ControlProblem& full_problem,
                              const ControlProblem& sub_problem,
                              const MrfCandidate& candidate, TransferKind kind,
                              double M0, const LevelSampling& sampling,
                              const MinimizeBudget& budget) {
  TransferReport report;
  report.p0_sub = candidate.p0;
  report.p0_full = candidate.p0;
  if (kind == TransferKind::Diag && M0 > 0.0) report.p0_full = candidate.p0 / M0;
  report.sub = verify_mrf(sub_problem, candidate, sampling, budget);
  MrfCandidate full_candidate = candidate;
  full_candidate.p0 = report.p0_full;
  report.full = verify_mrf(full_problem, full_candidate, sampling, budget);
  report.pass = report.sub.verdict != Verdict::Verified ||
                report.full.verdict == Verdict::Verified;
  return report;
}

std::string TransferReport::text() const {
  std::ostringstream os;
  os << "transfer check: " << (pass ? "pass" : "FAIL") << "\n"
     << "  subsystem (p0 = " << format_double(p0_sub)
     << "): " << verdict_name(sub.verdict) << "\n"
     << "  full system (p0 = " << format_double(p0_full)
     << "): " << verdict_name(full.verdict) << "\n";
  return os.str();
}

ScalingTransferCheck check_scaling_transfer(const ControlProblem& full_problem,
                                            const ControlProblem& sub_problem,
                                            std::span<const double> x, double p0,
                                            std::span<const double> p,
                                            double margin,
                                            const MinimizeBudget& budget) {
  ScalingTransferCheck check;
  const HamiltonianValue sub = hamiltonian(sub_problem, x, p0, p, budget);
  check.sub_value = sub.minus_infinity ? -kInf : sub.value;
  check.u_sub = sub.minimizer;
  check.applicable = sub.minus_infinity || sub.value < -margin;
  if (!check.applicable) return check;

  Vec ku(check.u_sub.size());
  double kk = 1.0;
  for (int step = 0; step <= 10; ++step, kk *= 2.0) {
    for (std::size_t j = 0; j < ku.size(); ++j) ku[j] = kk * check.u_sub[j];
    if (!full_problem.control_set.contains(ku)) continue;
    double value;
    try {
      value = hamiltonian_integrand(full_problem, x, p0, p, ku);
    } catch (const EvalError&) {
      continue;
    }
    if (value < 0.0) {
      check.pass = true;
      check.k = kk;
      check.full_value = value;
      return check;
    }
  }
  return check;
}

}  // namespace mrf
