/// @file mrf_main.cpp
/// @brief Command-line front end: scenario loading, subcommand dispatch, and
///        deterministic report/CSV emission.
///
/// Exit codes: 0 verified/success, 1 violated or failed with witness,
/// 2 inconclusive, 3 usage or load error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mrf/builtins.hpp"
#include "mrf/feedback.hpp"
#include "mrf/polysys.hpp"
#include "mrf/scenario.hpp"
#include "mrf/verifier.hpp"

namespace {

constexpr int kExitVerified = 0;
constexpr int kExitViolated = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitUsage = 3;

struct SourceFlags {
  std::string builtin;
  std::string file;
};

struct OverrideFlags {
  std::optional<double> p0;
  std::optional<double> sigma;
  std::optional<int> bands;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  std::optional<double> delta;
  std::optional<double> stop_frac;
};

mrf::Scenario load_scenario(const SourceFlags& src) {
  if (!src.builtin.empty()) return mrf::builtin_scenario(src.builtin);
  std::ifstream in(src.file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario file: " + src.file);
  std::ostringstream buf;
  buf << in.rdbuf();
  return mrf::parse_scenario(buf.str());
}

void apply_overrides(mrf::Scenario& s, const OverrideFlags& o) {
  if (o.p0) s.p0 = *o.p0;
  if (o.sigma) s.sampling.sigma = *o.sigma;
  if (o.bands) s.sampling.bands = *o.bands;
  if (o.samples) s.sampling.samples_per_band = *o.samples;
  if (o.seed) s.sampling.seed = *o.seed;
  if (o.eps) s.step.eps = *o.eps;
  if (o.delta) s.step.delta = *o.delta;
  if (o.stop_frac) s.step.stop_frac = *o.stop_frac;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << contents;
}

std::string vec_str(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += mrf::format_double(v[i]);
  }
  return s + ")";
}

int require_candidate_and_sampling(const mrf::Scenario& s) {
  if (!s.has_candidate) {
    std::cerr << "error: scenario '" << s.name << "' has no [candidate] section\n";
    return kExitUsage;
  }
  if (!s.has_sampling) {
    std::cerr << "error: scenario '" << s.name
              << "' has no [sampling] section (needed for the level sweep)\n";
    return kExitUsage;
  }
  return kExitVerified;
}

int cmd_verify(mrf::Scenario s, const std::string& out_path) {
  if (int rc = require_candidate_and_sampling(s)) return rc;
  const mrf::ControlProblem problem = s.problem();
  const mrf::MrfCandidate candidate = s.candidate();
  mrf::VerificationReport report =
      mrf::verify_mrf(problem, candidate, s.sampling, s.budget);
  report.scenario_name = s.name;
  std::cout << report.text();
  if (!out_path.empty()) write_file(out_path, report.text());
  return mrf::verdict_exit_code(report.verdict);
}

int cmd_simulate(mrf::Scenario s, const std::vector<double>& from,
                 const std::string& out_path, bool force) {
  if (int rc = require_candidate_and_sampling(s)) return rc;
  if (static_cast<int>(from.size()) != s.n) {
    std::cerr << "error: --from needs " << s.n << " coordinates, got "
              << from.size() << "\n";
    return kExitUsage;
  }
  const mrf::ControlProblem problem = s.problem();
  const mrf::MrfCandidate candidate = s.candidate();

  if (problem.target.contains(from)) {
    std::cout << "initial state " << vec_str(from)
              << " lies on the target: empty trajectory, cost 0\n";
    if (!out_path.empty()) {
      mrf::Trajectory empty;
      empty.n = s.n;
      empty.m = s.m;
      std::ostringstream csv;
      mrf::write_trajectory_csv(empty, csv);
      write_file(out_path, csv.str());
    }
    return kExitVerified;
  }

  mrf::StepBudget budget = s.step;
  budget.force = force;
  try {
    const mrf::SynthesisResult res =
        mrf::synthesize(problem, candidate, from, s.sampling, budget);
    std::cout << res.text();
    if (!out_path.empty()) {
      std::ostringstream csv;
      mrf::write_trajectory_csv(res.trajectory, csv);
      write_file(out_path, csv.str());
    }
    return res.gac.pass ? kExitVerified : kExitViolated;
  } catch (const mrf::SweepError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.verdict == mrf::Verdict::Violated ? kExitViolated
                                               : kExitInconclusive;
  } catch (const mrf::NoControlError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitViolated;
  } catch (const mrf::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitViolated;
  } catch (const mrf::InconclusiveError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInconclusive;
  }
}

void print_field(std::ostream& os, const std::vector<mrf::ScalarExpr>& field) {
  os << "[";
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (i) os << ", ";
    os << field[i].str();
  }
  os << "]";
}

int cmd_poly_classify(const mrf::Scenario& s) {
  const mrf::PolyDynamics pd = s.poly();
  const mrf::ClassifyResult cls = mrf::classify_near_affine(pd);
  if (!cls.ok) {
    std::cout << "not near-control-affine: term " << cls.offending.str()
              << ": " << cls.reason << "\n";
    return kExitViolated;
  }
  std::cout << "near-control-affine\n";
  std::cout << "K = (";
  for (std::size_t i = 0; i < cls.structure.K.size(); ++i)
    std::cout << (i ? ", " : "") << cls.structure.K[i];
  std::cout << ")\n";
  std::cout << "dbar = " << cls.structure.dbar << "\n";
  std::cout << "M = " << cls.structure.M << "\n";
  for (const auto& alpha : cls.structure.active)
    std::cout << "term u^" << alpha.str() << "\n";
  return kExitVerified;
}

int cmd_poly_affine(const mrf::Scenario& s) {
  const mrf::PolyDynamics pd = s.poly();
  const mrf::ClassifyResult cls = mrf::classify_near_affine(pd);
  if (!cls.ok) {
    std::cout << "not near-control-affine: term " << cls.offending.str()
              << ": " << cls.reason << "\n";
    return kExitViolated;
  }
  const mrf::PolyDynamics aff = mrf::affine_field(cls.structure, pd);
  std::cout << "associated affine system with " << cls.structure.M
            << " controls\n";
  for (std::size_t k = 0; k < cls.structure.active.size(); ++k) {
    std::cout << "w_" << (k + 1) << " drives u^"
              << cls.structure.active[k].str();
    if (s.dynamics_is_poly && k < s.terms.size()) {
      std::cout << " field ";
      print_field(std::cout, s.terms[k].field);
    }
    std::cout << "\n";
  }
  for (double r : {1.0, 2.0}) {
    std::cout << "rbar(" << mrf::format_double(r)
              << ") = " << mrf::format_double(cls.structure.rbar(r)) << "\n";
  }
  std::cout << "rbar(inf) = inf\n";
  (void)aff;
  return kExitVerified;
}

int cmd_poly_witness(const mrf::Scenario& s, const std::vector<double>& w,
                     const std::vector<double>& at, double r) {
  const mrf::PolyDynamics pd = s.poly();
  const mrf::ClassifyResult cls = mrf::classify_near_affine(pd);
  if (!cls.ok) {
    std::cout << "not near-control-affine: term " << cls.offending.str()
              << ": " << cls.reason << "\n";
    return kExitViolated;
  }
  if (static_cast<int>(w.size()) != cls.structure.M) {
    std::cerr << "error: --w needs " << cls.structure.M
              << " entries (one per active term), got " << w.size() << "\n";
    return kExitUsage;
  }
  const mrf::HullWitness wit = mrf::hull_witness(cls.structure, w, r);
  for (std::size_t q = 0; q < wit.weights.size(); ++q) {
    std::cout << "weight " << mrf::format_double(wit.weights[q]) << "  control "
              << vec_str(wit.controls[q]) << "\n";
  }
  std::cout << "residual " << mrf::format_double(wit.residual(cls.structure, w))
            << "\n";
  if (!at.empty()) {
    if (static_cast<int>(at.size()) != s.n) {
      std::cerr << "error: --at needs " << s.n << " coordinates, got "
                << at.size() << "\n";
      return kExitUsage;
    }
    std::cout << "field residual at " << vec_str(at) << " = "
              << mrf::format_double(wit.field_residual(pd, at, w)) << "\n";
  }
  return kExitVerified;
}

int cmd_poly_subsystem(const mrf::Scenario& s, const std::string& kind,
                       const std::vector<double>& lambda,
                       std::optional<int> d_flag) {
  const mrf::PolyDynamics pd = s.poly();
  const int d = d_flag ? *d_flag : pd.degree();
  if (kind == "max") {
    const mrf::PolyDynamics sub = mrf::maximal_subsystem(pd);
    std::cout << "maximal-degree subsystem, degree " << pd.degree() << "\n";
    std::cout << "drift ";
    print_field(std::cout, s.drift);
    std::cout << "\n";
    for (const auto& term : s.terms) {
      if (term.alpha.degree() != pd.degree()) continue;
      std::cout << "term u^" << term.alpha.str() << " field ";
      print_field(std::cout, term.field);
      std::cout << "\n";
    }
    (void)sub;
    return kExitVerified;
  }
  // diagonal
  if (static_cast<int>(lambda.size()) != s.m) {
    std::cerr << "error: --lambda needs " << s.m << " entries, got "
              << lambda.size() << "\n";
    return kExitUsage;
  }
  const mrf::DiagonalSpec spec{lambda, d};
  const mrf::PolyDynamics sub = mrf::diagonal_subsystem(pd, spec);
  std::cout << "diagonal subsystem, lambda = " << vec_str(lambda) << ", d = "
            << d << ", lambda0 = " << mrf::format_double(spec.lambda0())
            << "\n";
  std::cout << "drift ";
  print_field(std::cout, s.drift);
  std::cout << "\n";
  for (const auto& term : s.terms) {
    if (term.alpha.support_count() > 1) continue;  // mixed terms are dropped
    const int q = term.alpha.degree();
    const int i = term.alpha.support().front();
    const double li = lambda[static_cast<std::size_t>(i)];
    const double scale =
        (q == d) ? 1.0 : std::pow(li, static_cast<double>(d - q) / d);
    if (scale == 0.0) continue;
    std::cout << "term " << mrf::format_double(scale) << " * u^"
              << term.alpha.str() << " field ";
    print_field(std::cout, term.field);
    std::cout << "\n";
  }
  (void)sub;
  return kExitVerified;
}

int cmd_poly_hypcheck(const mrf::Scenario& s, const std::string& kind,
                      std::optional<int> d_flag, std::optional<double> m0_flag,
                      int samples, std::uint64_t seed) {
  if (!s.has_sampling) {
    std::cerr << "error: scenario '" << s.name
              << "' has no [sampling] section (needed for the sample box)\n";
    return kExitUsage;
  }
  const mrf::PolyDynamics pd = s.poly();
  const int d = d_flag ? *d_flag : pd.degree();
  const mrf::ControlProblem problem = s.problem();
  const int m = s.m;
  mrf::HypCheckReport report;
  if (kind == "max") {
    const mrf::CostFn cost = problem.cost;
    auto M0 = [cost, m](std::span<const double> x) {
      const mrf::Vec zero(static_cast<std::size_t>(m), 0.0);
      return cost(x, zero);
    };
    auto M1 = [cost, m](std::span<const double> x, std::span<const double> u) {
      const mrf::Vec zero(static_cast<std::size_t>(m), 0.0);
      return cost(x, u) - cost(x, zero);
    };
    report = mrf::check_hyp_Amax(M0, M1, d, s.sampling.box_lo,
                                 s.sampling.box_hi, m, 2.0, samples, seed);
  } else {
    const double m0 = m0_flag ? *m0_flag : std::sqrt(static_cast<double>(m));
    report = mrf::check_hyp_Adiag(problem.cost, m, d, m0, s.sampling.box_lo,
                                  s.sampling.box_hi, 2.0, samples, seed);
  }
  std::cout << report.text();
  return report.pass ? kExitVerified : kExitViolated;
}

int cmd_export(const mrf::Scenario& s, const std::string& out_path) {
  const std::string text = mrf::serialize_scenario(s);
  std::cout << text;
  if (!out_path.empty()) write_file(out_path, text);
  return kExitVerified;
}

void add_source_flags(CLI::App* sub, SourceFlags& src) {
  auto* group = sub->add_option_group("source", "scenario source");
  group->add_option("--builtin", src.builtin,
                    "built-in scenario name (see `mrf list`)");
  group->add_option("--scenario", src.file, "scenario file path");
  group->require_option(1);
}

void add_override_flags(CLI::App* sub, OverrideFlags& o, bool feedback_flags) {
  sub->add_option("--p0", o.p0, "override the candidate level p0");
  sub->add_option("--sigma", o.sigma, "override the level ceiling sigma");
  sub->add_option("--bands", o.bands, "override the number of level bands");
  sub->add_option("--samples", o.samples, "override samples per band");
  sub->add_option("--seed", o.seed, "override the sampling seed");
  if (feedback_flags) {
    sub->add_option("--eps", o.eps, "certificate slack parameter epsilon");
    sub->add_option("--delta", o.delta, "initial hold length (rescaled time)");
    sub->add_option("--stop-frac", o.stop_frac,
                    "stop once W falls below stop-frac * W(start)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p0-minimum restraint functions: level-set verification, "
               "sample-and-hold synthesis, and control-polynomial tools"};
  app.require_subcommand(1);

  SourceFlags verify_src;
  OverrideFlags verify_over;
  std::string verify_out;
  CLI::App* verify = app.add_subcommand(
      "verify", "run the level-band verification sweep on the candidate W");
  add_source_flags(verify, verify_src);
  add_override_flags(verify, verify_over, false);
  verify->add_option("--out", verify_out, "also write the report to this file");

  SourceFlags sim_src;
  OverrideFlags sim_over;
  std::vector<double> sim_from;
  std::string sim_out;
  bool sim_force = false;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "synthesize a sample-and-hold trajectory from --from");
  add_source_flags(simulate, sim_src);
  add_override_flags(simulate, sim_over, true);
  simulate->add_option("--from", sim_from, "initial state, comma separated")
      ->required()
      ->delimiter(',');
  simulate->add_option("--out", sim_out, "write the trajectory CSV here");
  simulate->add_flag("--force", sim_force,
                     "synthesize even if the sweep verdict is not verified");

  SourceFlags poly_src;
  std::string poly_action;
  std::string poly_kind = "max";
  std::vector<double> poly_w, poly_at, poly_lambda;
  double poly_r = mrf::inf();
  std::optional<int> poly_d;
  std::optional<double> poly_m0;
  int poly_samples = 500;
  std::uint64_t poly_seed = 0x5eed0003ull;
  CLI::App* poly = app.add_subcommand(
      "poly", "control-polynomial structure tools");
  add_source_flags(poly, poly_src);
  poly->add_option("action", poly_action, "what to do")
      ->required()
      ->check(CLI::IsMember(
          {"classify", "affine", "witness", "subsystem", "hypcheck"}));
  poly->add_option("--kind", poly_kind, "subsystem/hypothesis kind")
      ->check(CLI::IsMember({"max", "diag"}));
  poly->add_option("--w", poly_w, "affine control vector, comma separated")
      ->delimiter(',');
  poly->add_option("--at", poly_at, "state for the field residual")
      ->delimiter(',');
  poly->add_option("--lambda", poly_lambda,
                   "diagonal simplex point, comma separated")
      ->delimiter(',');
  poly->add_option("--r", poly_r, "control box radius for the witness");
  poly->add_option("--d", poly_d, "homogeneity degree (default: system degree)");
  poly->add_option("--m0", poly_m0, "cost bound M0 (default: sqrt(m))");
  poly->add_option("--samples", poly_samples, "hypothesis-check sample count");
  poly->add_option("--seed", poly_seed, "hypothesis-check seed");

  SourceFlags export_src;
  std::string export_out;
  CLI::App* exporter = app.add_subcommand(
      "export", "print the canonical scenario text");
  add_source_flags(exporter, export_src);
  exporter->add_option("--out", export_out, "also write the text to this file");

  CLI::App* list = app.add_subcommand("list", "list built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (list->parsed()) {
      for (const auto& name : mrf::builtin_names()) std::cout << name << "\n";
      return kExitVerified;
    }
    if (verify->parsed()) {
      mrf::Scenario s = load_scenario(verify_src);
      apply_overrides(s, verify_over);
      return cmd_verify(std::move(s), verify_out);
    }
    if (simulate->parsed()) {
      mrf::Scenario s = load_scenario(sim_src);
      apply_overrides(s, sim_over);
      return cmd_simulate(std::move(s), sim_from, sim_out, sim_force);
    }
    if (poly->parsed()) {
      const mrf::Scenario s = load_scenario(poly_src);
      if (poly_action == "classify") return cmd_poly_classify(s);
      if (poly_action == "affine") return cmd_poly_affine(s);
      if (poly_action == "witness")
        return cmd_poly_witness(s, poly_w, poly_at, poly_r);
      if (poly_action == "subsystem")
        return cmd_poly_subsystem(s, poly_kind, poly_lambda, poly_d);
      return cmd_poly_hypcheck(s, poly_kind, poly_d, poly_m0, poly_samples,
                               poly_seed);
    }
    if (exporter->parsed()) return cmd_export(load_scenario(export_src), export_out);
  } catch (const mrf::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mrf::ParseError& e) {
    std::cerr << "expression error at offset " << e.position() << ": "
              << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
