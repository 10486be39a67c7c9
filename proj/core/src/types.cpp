#include "mrf/types.hpp"

#include <algorithm>

namespace mrf {

std::string MultiIndex::str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(exponents[i]);
  }
  s += ")";
  return s;
}

PolyDynamics::PolyDynamics(int n, int m, VectorField drift,
                           std::vector<PolyTerm> terms)
    : n_(n), m_(m), drift_(std::move(drift)), terms_(std::move(terms)) {
  if (n_ <= 0 || m_ < 0) throw std::invalid_argument("bad dimensions for PolyDynamics");
  if (!drift_) throw std::invalid_argument("PolyDynamics requires a drift field (may be zero)");
  for (const auto& t : terms_) {
    if (static_cast<int>(t.alpha.exponents.size()) != m_)
      throw std::invalid_argument("multi-index length != control dimension");
    for (int e : t.alpha.exponents)
      if (e < 0) throw std::invalid_argument("negative exponent in multi-index");
    if (t.alpha.degree() < 1)
      throw std::invalid_argument("term multi-index must have degree >= 1 (drift holds degree 0)");
    if (!t.field) throw std::invalid_argument("term without a coefficient field");
  }
  std::sort(terms_.begin(), terms_.end(),
            [](const PolyTerm& a, const PolyTerm& b) { return a.alpha < b.alpha; });
  for (std::size_t i = 1; i < terms_.size(); ++i)
    if (terms_[i - 1].alpha == terms_[i].alpha)
      throw std::invalid_argument("duplicate multi-index " + terms_[i].alpha.str());
}

int PolyDynamics::degree() const {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, t.alpha.degree());
  return d;
}

Vec PolyDynamics::eval(std::span<const double> x, std::span<const double> u) const {
  Vec out = drift_(x);
  if (static_cast<int>(out.size()) != n_)
    throw std::invalid_argument("drift returned wrong dimension");
  for (const auto& t : terms_) {
    double w = t.alpha.monomial(u);
    if (w == 0.0) continue;
    Vec fx = t.field(x);
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] += w * fx[static_cast<std::size_t>(i)];
  }
  return out;
}

DynamicsFn PolyDynamics::as_dynamics() const {
  PolyDynamics copy = *this;
  return [copy](std::span<const double> x, std::span<const double> u,
                std::span<double> out) {
    Vec v = copy.eval(x, u);
    std::copy(v.begin(), v.end(), out.begin());
  };
}

}  // namespace mrf
