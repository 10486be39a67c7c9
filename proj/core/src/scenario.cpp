#include "mrf/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mrf/builtins.hpp"
#include "mrf/gradient.hpp"

namespace mrf {

ScenarioError::ScenarioError(const std::string& what, int line_in)
    : std::runtime_error("line " + std::to_string(line_in) + ": " + what),
      line(line_in) {}

namespace {

std::string trim(std::string_view sv) {
  const char* ws = " \t\r\n";
  const auto b = sv.find_first_not_of(ws);
  if (b == std::string_view::npos) return "";
  const auto e = sv.find_last_not_of(ws);
  return std::string(sv.substr(b, e - b + 1));
}

double parse_number(const std::string& value, int line) {
  std::string v = trim(value);
  bool neg = false;
  std::string_view body = v;
  if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
    neg = body[0] == '-';
    body.remove_prefix(1);
  }
  if (body == "inf") return neg ? -inf() : inf();
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last)
    throw ScenarioError("expected a number, got '" + v + "'", line);
  return out;
}

long long parse_integer(const std::string& value, int line) {
  std::string v = trim(value);
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ScenarioError("expected an integer, got '" + v + "'", line);
  return out;
}

std::uint64_t parse_seed(const std::string& value, int line) {
  std::string v = trim(value);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ScenarioError("expected an unsigned integer seed, got '" + v + "'", line);
  return out;
}

/// Splits a `[a, b, c]` list on top-level commas (commas inside parentheses
/// belong to expression arguments).
std::vector<std::string> parse_list(const std::string& value, int line) {
  std::string v = trim(value);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ScenarioError("expected a [..] list, got '" + v + "'", line);
  std::string body = v.substr(1, v.size() - 2);
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : body) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string tail = trim(cur);
  if (!tail.empty()) out.push_back(tail);
  for (const std::string& entry : out)
    if (entry.empty()) throw ScenarioError("empty list entry", line);
  return out;
}

Vec parse_number_list(const std::string& value, int line) {
  Vec out;
  for (const std::string& entry : parse_list(value, line))
    out.push_back(parse_number(entry, line));
  return out;
}

std::vector<int> parse_int_list(const std::string& value, int line) {
  std::vector<int> out;
  for (const std::string& entry : parse_list(value, line))
    out.push_back(static_cast<int>(parse_integer(entry, line)));
  return out;
}

std::vector<ScalarExpr> parse_expr_list(const std::string& value, int line, int n,
                                        int m) {
  std::vector<ScalarExpr> out;
  for (const std::string& entry : parse_list(value, line)) {
    try {
      out.push_back(ScalarExpr::parse(entry, n, m));
    } catch (const ParseError& e) {
      throw ScenarioError(std::string("in expression '") + entry + "': " + e.what(),
                          line);
    }
  }
  return out;
}

ScalarExpr parse_one_expr(const std::string& value, int line, int n, int m) {
  try {
    return ScalarExpr::parse(trim(value), n, m);
  } catch (const ParseError& e) {
    throw ScenarioError(std::string("in expression '") + trim(value) + "': " + e.what(),
                        line);
  }
}

struct RawEntry {
  std::string value;
  int line = 0;
};

}  // namespace

Scenario parse_scenario(const std::string& text) {
  // First pass: collect (section, key) -> value with line numbers.
  std::map<std::string, std::map<std::string, RawEntry>> data;
  static const std::vector<std::string> known_sections = {
      "",          "state_space", "target",   "control_set", "dynamics",
      "cost",      "candidate",   "sampling", "budget",      "feedback"};
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(known_sections.begin(), known_sections.end(), section) ==
              known_sections.end() ||
          section.empty())
        throw ScenarioError("unknown section [" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ScenarioError("expected 'key = value', got '" + line + "'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ScenarioError("empty key", line_no);
    if (value.empty()) throw ScenarioError("empty value for key '" + key + "'", line_no);
    auto [it, inserted] = data[section].emplace(key, RawEntry{value, line_no});
    if (!inserted)
      throw ScenarioError("duplicate key '" + key + "' (first at line " +
                              std::to_string(it->second.line) + ")",
                          line_no);
  }

  // Consume entries, tracking leftovers to reject unknown keys.
  auto take = [&data](const std::string& sec, const std::string& key)
      -> std::optional<RawEntry> {
    auto sit = data.find(sec);
    if (sit == data.end()) return std::nullopt;
    auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return std::nullopt;
    RawEntry entry = kit->second;
    sit->second.erase(kit);
    return entry;
  };
  auto require = [&take](const std::string& sec, const std::string& key) {
    auto entry = take(sec, key);
    if (!entry)
      throw ScenarioError("missing required key '" + key + "'" +
                              (sec.empty() ? "" : " in section [" + sec + "]"),
                          0);
    return *entry;
  };
  auto has_section = [&data](const std::string& sec) {
    auto it = data.find(sec);
    return it != data.end();
  };

  Scenario s;
  if (auto e = take("", "name")) s.name = trim(e->value);
  {
    auto e = require("", "n");
    s.n = static_cast<int>(parse_integer(e.value, e.line));
    if (s.n < 1) throw ScenarioError("n must be >= 1", e.line);
  }
  {
    auto e = require("", "m");
    s.m = static_cast<int>(parse_integer(e.value, e.line));
    if (s.m < 0) throw ScenarioError("m must be >= 0", e.line);
  }

  {
    auto e = require("state_space", "kind");
    const std::string kind = trim(e.value);
    if (kind == "box") {
      s.space_is_box = true;
      auto lo = require("state_space", "lower");
      auto hi = require("state_space", "upper");
      s.space_lower = parse_number_list(lo.value, lo.line);
      s.space_upper = parse_number_list(hi.value, hi.line);
      if (static_cast<int>(s.space_lower.size()) != s.n ||
          static_cast<int>(s.space_upper.size()) != s.n)
        throw ScenarioError("state-space bounds must have n entries", lo.line);
    } else if (kind == "all") {
      s.space_is_box = false;
    } else {
      throw ScenarioError("state_space kind must be 'all' or 'box'", e.line);
    }
  }

  {
    auto e = require("target", "kind");
    if (trim(e.value) != "point")
      throw ScenarioError("target kind must be 'point'", e.line);
    auto c = require("target", "center");
    s.target_center = parse_number_list(c.value, c.line);
    if (static_cast<int>(s.target_center.size()) != s.n)
      throw ScenarioError("target center must have n entries", c.line);
  }

  {
    auto e = require("control_set", "kind");
    const std::string kind = trim(e.value);
    if (kind == "all") {
      s.control_kind = ControlSet::Kind::All;
    } else if (kind == "box" || kind == "ball") {
      s.control_kind = kind == "box" ? ControlSet::Kind::Box : ControlSet::Kind::Ball;
      auto r = require("control_set", "radius");
      s.control_radius = parse_number(r.value, r.line);
      if (!(s.control_radius > 0.0) || std::isinf(s.control_radius))
        throw ScenarioError("control radius must be positive and finite", r.line);
    } else {
      throw ScenarioError("control_set kind must be 'all', 'box', or 'ball'", e.line);
    }
  }

  {
    auto e = require("dynamics", "kind");
    const std::string kind = trim(e.value);
    if (kind == "expr") {
      auto f = require("dynamics", "expr");
      s.dyn_expr = parse_expr_list(f.value, f.line, s.n, s.m);
      if (static_cast<int>(s.dyn_expr.size()) != s.n)
        throw ScenarioError("dynamics expr list must have n entries", f.line);
    } else if (kind == "poly") {
      s.dynamics_is_poly = true;
      auto f = require("dynamics", "drift");
      s.drift = parse_expr_list(f.value, f.line, s.n, 0);
      if (static_cast<int>(s.drift.size()) != s.n)
        throw ScenarioError("drift list must have n entries", f.line);
      for (int idx = 1;; ++idx) {
        const std::string base = "term." + std::to_string(idx) + ".";
        auto alpha = take("dynamics", base + "alpha");
        auto field = take("dynamics", base + "field");
        if (!alpha && !field) break;
        if (!alpha || !field)
          throw ScenarioError("term " + std::to_string(idx) +
                                  " needs both alpha and field",
                              (alpha ? alpha->line : field->line));
        Scenario::PolyTermSpec term;
        term.alpha.exponents = parse_int_list(alpha->value, alpha->line);
        if (static_cast<int>(term.alpha.exponents.size()) != s.m)
          throw ScenarioError("term alpha must have m entries", alpha->line);
        term.field = parse_expr_list(field->value, field->line, s.n, 0);
        if (static_cast<int>(term.field.size()) != s.n)
          throw ScenarioError("term field must have n entries", field->line);
        s.terms.push_back(std::move(term));
      }
    } else {
      throw ScenarioError("dynamics kind must be 'expr' or 'poly'", e.line);
    }
  }

  {
    auto e = require("cost", "expr");
    s.cost_expr = parse_one_expr(e.value, e.line, s.n, s.m);
  }

  if (has_section("candidate")) {
    s.has_candidate = true;
    auto w = take("candidate", "w");
    auto builtin = take("candidate", "builtin");
    if (!!w == !!builtin)
      throw ScenarioError("candidate needs exactly one of 'w' or 'builtin'",
                          w ? w->line : 0);
    if (builtin) {
      s.w_is_builtin = true;
      s.w_builtin = trim(builtin->value);
    } else {
      s.w_expr = parse_one_expr(w->value, w->line, s.n, 0);
    }
    auto p0 = require("candidate", "p0");
    s.p0 = parse_number(p0.value, p0.line);
    if (!(s.p0 >= 0.0)) throw ScenarioError("p0 must be >= 0", p0.line);
    if (auto w0 = take("candidate", "w0")) {
      s.w0 = parse_number(w0->value, w0->line);
      if (!(s.w0 > 0.0)) throw ScenarioError("w0 must be positive", w0->line);
    }
  }

  if (has_section("sampling")) {
    s.has_sampling = true;
    auto sig = require("sampling", "sigma");
    s.sampling.sigma = parse_number(sig.value, sig.line);
    if (!(s.sampling.sigma > 0.0))
      throw ScenarioError("sigma must be positive", sig.line);
    if (auto e = take("sampling", "bands")) {
      s.sampling.bands = static_cast<int>(parse_integer(e->value, e->line));
      if (s.sampling.bands < 1) throw ScenarioError("bands must be >= 1", e->line);
    }
    if (auto e = take("sampling", "samples")) {
      s.sampling.samples_per_band = static_cast<int>(parse_integer(e->value, e->line));
      if (s.sampling.samples_per_band < 1)
        throw ScenarioError("samples must be >= 1", e->line);
    }
    if (auto e = take("sampling", "seed")) s.sampling.seed = parse_seed(e->value, e->line);
    if (auto e = take("sampling", "r_min")) {
      s.sampling.r_min = parse_number(e->value, e->line);
      if (!(s.sampling.r_min >= 0.0))
        throw ScenarioError("r_min must be >= 0", e->line);
    }
    auto lo = require("sampling", "box_lower");
    auto hi = require("sampling", "box_upper");
    s.sampling.box_lo = parse_number_list(lo.value, lo.line);
    s.sampling.box_hi = parse_number_list(hi.value, hi.line);
    if (static_cast<int>(s.sampling.box_lo.size()) != s.n ||
        static_cast<int>(s.sampling.box_hi.size()) != s.n)
      throw ScenarioError("sampling box must have n entries", lo.line);
  }

  if (has_section("budget")) {
    if (auto e = take("budget", "grid")) {
      s.budget.grid_points = static_cast<int>(parse_integer(e->value, e->line));
      if (s.budget.grid_points < 2) throw ScenarioError("grid must be >= 2", e->line);
    }
    if (auto e = take("budget", "refine")) {
      s.budget.refine_iters = static_cast<int>(parse_integer(e->value, e->line));
      if (s.budget.refine_iters < 0) throw ScenarioError("refine must be >= 0", e->line);
    }
    if (auto e = take("budget", "radius_schedule")) {
      const Vec sched = parse_number_list(e->value, e->line);
      s.budget.radius_schedule.assign(sched.begin(), sched.end());
      for (std::size_t i = 0; i < sched.size(); ++i)
        if (!(sched[i] > 0.0) || (i && !(sched[i] > sched[i - 1])))
          throw ScenarioError("radius_schedule must be positive and increasing",
                              e->line);
    }
    if (auto e = take("budget", "divergence"))
      s.budget.divergence_threshold = parse_number(e->value, e->line);
  }

  if (has_section("feedback")) {
    if (auto e = take("feedback", "eps")) {
      s.step.eps = parse_number(e->value, e->line);
      if (!(s.step.eps > 0.0)) throw ScenarioError("eps must be positive", e->line);
    }
    if (auto e = take("feedback", "delta")) {
      s.step.delta = parse_number(e->value, e->line);
      if (!(s.step.delta > 0.0)) throw ScenarioError("delta must be positive", e->line);
    }
    if (auto e = take("feedback", "delta_floor")) {
      s.step.delta_floor = parse_number(e->value, e->line);
      if (!(s.step.delta_floor > 0.0))
        throw ScenarioError("delta_floor must be positive", e->line);
    }
    if (auto e = take("feedback", "substeps")) {
      s.step.substeps = static_cast<int>(parse_integer(e->value, e->line));
      if (s.step.substeps < 1) throw ScenarioError("substeps must be >= 1", e->line);
    }
    if (auto e = take("feedback", "stop_frac")) {
      s.step.stop_frac = parse_number(e->value, e->line);
      if (!(s.step.stop_frac > 0.0 && s.step.stop_frac < 1.0))
        throw ScenarioError("stop_frac must lie in (0, 1)", e->line);
    }
  }
  s.step.minimize = s.budget;

  for (const auto& [sec, entries] : data) {
    for (const auto& [key, entry] : entries) {
      throw ScenarioError("unknown key '" + key + "'" +
                              (sec.empty() ? "" : " in section [" + sec + "]"),
                          entry.line);
    }
  }
  return s;
}

namespace {

std::string number_list(std::span<const double> values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_double(values[i]);
  }
  return out + "]";
}

std::string int_list(std::span<const int> values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(values[i]);
  }
  return out + "]";
}

std::string expr_list(const std::vector<ScalarExpr>& exprs) {
  std::string out = "[";
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    if (i) out += ", ";
    out += exprs[i].str();
  }
  return out + "]";
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream os;
  if (!s.name.empty()) os << "name = " << s.name << "\n";
  os << "n = " << s.n << "\n";
  os << "m = " << s.m << "\n";

  os << "\n[state_space]\n";
  if (s.space_is_box) {
    os << "kind = box\n";
    os << "lower = " << number_list(s.space_lower) << "\n";
    os << "upper = " << number_list(s.space_upper) << "\n";
  } else {
    os << "kind = all\n";
  }

  os << "\n[target]\n";
  os << "kind = point\n";
  os << "center = " << number_list(s.target_center) << "\n";

  os << "\n[control_set]\n";
  switch (s.control_kind) {
    case ControlSet::Kind::All:
      os << "kind = all\n";
      break;
    case ControlSet::Kind::Box:
      os << "kind = box\n";
      os << "radius = " << format_double(s.control_radius) << "\n";
      break;
    case ControlSet::Kind::Ball:
      os << "kind = ball\n";
      os << "radius = " << format_double(s.control_radius) << "\n";
      break;
  }

  os << "\n[dynamics]\n";
  if (s.dynamics_is_poly) {
    os << "kind = poly\n";
    os << "drift = " << expr_list(s.drift) << "\n";
    for (std::size_t k = 0; k < s.terms.size(); ++k) {
      os << "term." << (k + 1) << ".alpha = " << int_list(s.terms[k].alpha.exponents)
         << "\n";
      os << "term." << (k + 1) << ".field = " << expr_list(s.terms[k].field) << "\n";
    }
  } else {
    os << "kind = expr\n";
    os << "expr = " << expr_list(s.dyn_expr) << "\n";
  }

  os << "\n[cost]\n";
  os << "expr = " << s.cost_expr.str() << "\n";

  if (s.has_candidate) {
    os << "\n[candidate]\n";
    if (s.w_is_builtin) {
      os << "builtin = " << s.w_builtin << "\n";
    } else {
      os << "w = " << s.w_expr.str() << "\n";
    }
    os << "p0 = " << format_double(s.p0) << "\n";
    os << "w0 = " << format_double(s.w0) << "\n";
  }

  if (s.has_sampling) {
    os << "\n[sampling]\n";
    os << "sigma = " << format_double(s.sampling.sigma) << "\n";
    os << "bands = " << s.sampling.bands << "\n";
    os << "samples = " << s.sampling.samples_per_band << "\n";
    os << "seed = " << s.sampling.seed << "\n";
    os << "r_min = " << format_double(s.sampling.r_min) << "\n";
    os << "box_lower = " << number_list(s.sampling.box_lo) << "\n";
    os << "box_upper = " << number_list(s.sampling.box_hi) << "\n";
  }

  os << "\n[budget]\n";
  os << "grid = " << s.budget.grid_points << "\n";
  os << "refine = " << s.budget.refine_iters << "\n";
  os << "radius_schedule = "
     << number_list(std::span<const double>(s.budget.radius_schedule)) << "\n";
  os << "divergence = " << format_double(s.budget.divergence_threshold) << "\n";

  os << "\n[feedback]\n";
  os << "eps = " << format_double(s.step.eps) << "\n";
  os << "delta = " << format_double(s.step.delta) << "\n";
  os << "delta_floor = " << format_double(s.step.delta_floor) << "\n";
  os << "substeps = " << s.step.substeps << "\n";
  os << "stop_frac = " << format_double(s.step.stop_frac) << "\n";
  return os.str();
}

ControlProblem Scenario::problem() const {
  ControlProblem p;
  p.state_space = space_is_box ? StateSpace::box(space_lower, space_upper)
                               : StateSpace::whole(n);
  p.target = Target::point(target_center);
  switch (control_kind) {
    case ControlSet::Kind::All:
      p.control_set = ControlSet::all(m);
      break;
    case ControlSet::Kind::Box:
      p.control_set = ControlSet::box(m, control_radius);
      break;
    case ControlSet::Kind::Ball:
      p.control_set = ControlSet::ball(m, control_radius);
      break;
  }
  if (dynamics_is_poly) {
    p.dynamics = poly().as_dynamics();
  } else {
    const std::vector<ScalarExpr> exprs = dyn_expr;
    p.dynamics = [exprs](std::span<const double> x, std::span<const double> u,
                         std::span<double> out) {
      for (std::size_t i = 0; i < exprs.size(); ++i) out[i] = exprs[i].eval(x, u);
    };
  }
  const ScalarExpr cost = cost_expr;
  p.cost = [cost](std::span<const double> x, std::span<const double> u) {
    return cost.eval(x, u);
  };
  return p;
}

PolyDynamics Scenario::poly() const {
  if (!dynamics_is_poly)
    throw std::logic_error("scenario dynamics is not in poly form");
  const std::vector<ScalarExpr> drift_exprs = drift;
  const std::size_t nn = static_cast<std::size_t>(n);
  VectorField f0 = [drift_exprs, nn](std::span<const double> x) {
    Vec out(nn);
    for (std::size_t i = 0; i < nn; ++i) out[i] = drift_exprs[i].eval(x, {});
    return out;
  };
  std::vector<PolyTerm> pterms;
  pterms.reserve(terms.size());
  for (const PolyTermSpec& term : terms) {
    const std::vector<ScalarExpr> field_exprs = term.field;
    VectorField fa = [field_exprs, nn](std::span<const double> x) {
      Vec out(nn);
      for (std::size_t i = 0; i < nn; ++i) out[i] = field_exprs[i].eval(x, {});
      return out;
    };
    pterms.push_back({term.alpha, std::move(fa)});
  }
  return PolyDynamics(n, m, std::move(f0), std::move(pterms));
}

MrfCandidate Scenario::candidate() const {
  if (!has_candidate)
    throw std::logic_error("scenario has no candidate section");
  MrfCandidate c;
  if (w_is_builtin) {
    const BuiltinCandidateW reg = builtin_candidate_w(w_builtin, n);
    c.W = reg.W;
    c.gradient_oracle = reg.gradient_oracle;
  } else {
    const ScalarExpr w = w_expr;
    c.W = [w](std::span<const double> x) { return w.eval(x, {}); };
    c.gradient_oracle = fd_gradient_oracle(c.W);
  }
  c.p0 = p0;
  c.W0 = w0;
  return c;
}

}  // namespace mrf
