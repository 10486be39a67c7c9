/// @file bench_mrf.cpp
/// @brief Microbenchmarks for the hot paths: Hamiltonian minimization,
///        sign-set enumeration, hull witnesses, and expression evaluation.

#include <benchmark/benchmark.h>

#include "mrf/builtins.hpp"
#include "mrf/hamiltonian.hpp"
#include "mrf/polysys.hpp"

namespace {

void BM_HamiltonianGyroscope(benchmark::State& state) {
  const mrf::Scenario s = mrf::builtin_scenario("gyroscope");
  const mrf::ControlProblem pr = s.problem();
  const mrf::MrfCandidate cand = s.candidate();
  const mrf::Vec x{0.5, 0.3};
  const mrf::Vec p = cand.gradient_oracle(x).front();
  for (auto _ : state) {
    mrf::HamiltonianValue h = mrf::hamiltonian(pr, x, cand.p0, p);
    benchmark::DoNotOptimize(h.value);
  }
}
BENCHMARK(BM_HamiltonianGyroscope);

void BM_SignSet(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  for (auto _ : state) {
    std::vector<std::vector<int>> tuples = mrf::sign_set(d, 1);
    benchmark::DoNotOptimize(tuples);
  }
}
BENCHMARK(BM_SignSet)->DenseRange(4, 8, 2);

void BM_HullWitness(benchmark::State& state) {
  const mrf::Scenario s = mrf::builtin_scenario("remark44-system");
  const mrf::PolyDynamics pd = s.poly();
  const mrf::NearAffineStructure nas =
      mrf::classify_near_affine(pd).structure;
  const mrf::Vec w{0.1, -0.2, 0.3};
  const double r = std::numeric_limits<double>::infinity();
  for (auto _ : state) {
    mrf::HullWitness witness = mrf::hull_witness(nas, w, r);
    benchmark::DoNotOptimize(witness.controls);
  }
}
BENCHMARK(BM_HullWitness);

void BM_ExprEval(benchmark::State& state) {
  const mrf::ScalarExpr e =
      mrf::ScalarExpr::parse("sin(x1) * (1 - u1*u2) + x2^2", 2, 2);
  const mrf::Vec x{0.3, 1.2};
  const mrf::Vec u{0.4, -0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(e.eval(x, u));
  }
}
BENCHMARK(BM_ExprEval);

}  // namespace

BENCHMARK_MAIN();
