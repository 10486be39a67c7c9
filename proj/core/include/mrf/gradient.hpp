/// @file gradient.hpp
/// @brief Finite-difference surrogate for the set of limiting gradients D*W.
///
/// For a locally Lipschitz W the surrogate collects central-difference
/// gradients at the base point and at k nearby probe points, then merges
/// near-duplicates. At smooth points this returns a singleton close to ∇W;
/// straddling a kink it returns one representative per one-sided selection
/// reachable within the probe radius. It is a sampling surrogate, not an
/// exact computation of D*W — candidates with known kink structure should
/// install an analytic oracle instead (see builtins).

#pragma once

#include <functional>

#include "mrf/types.hpp"

namespace mrf {

struct GradientFdOptions {
  double h = 1e-5;          ///< probe radius; FD step is h/100
  int probes = 8;           ///< number of perturbed evaluation points k
  double merge_tol = 1e-4;  ///< relative merge tolerance for near-duplicates
};

/// Central-difference limiting-gradient sample of W at x.
/// The first min(k, 2n) probes are the deterministic points x ± h·e_i; the
/// remainder is drawn from a fixed-seed generator in the h-ball so that the
/// result depends only on (W, x, options). Gradients g, g' merge when
/// |g − g'| ≤ tol·(1 + max(|g|, |g'|)); each merged cluster reports its first
/// member, so at smooth points the representative is the gradient at x
/// itself.
std::vector<Vec> limiting_gradient_fd(
    const std::function<double(std::span<const double>)>& W,
    std::span<const double> x, const GradientFdOptions& options = {});

/// Wraps the surrogate as a GradientOracle with fixed options.
GradientOracle fd_gradient_oracle(
    std::function<double(std::span<const double>)> W,
    const GradientFdOptions& options = {});

}  // namespace mrf
