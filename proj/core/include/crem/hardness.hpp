#pragma once

#include "crem/covariance.hpp"
#include "crem/field.hpp"

#include <cstdint>
#include <vector>

namespace crem {

// Slice boundaries b_k = floor(N k / K), k = 0..K. Strictly increasing for
// K <= N.
std::vector<int> spindle_boundaries(int n, int k_slices);

// Number of vertices in the chain of spindles around a vertex of the given
// depth: slices k = 1..kappa with kappa = max{k : b_{k-1} <= depth} each
// contribute a full binary spindle of height b_k - b_{k-1} rooted at the
// depth-b_{k-1} ancestor, and consecutive spindles share exactly that anchor
// vertex. Computed without enumeration; saturates at UINT64_MAX.
std::uint64_t spindle_chain_cardinality(int n, int k_slices, int depth);

// Steepness parameters: a vertex at slice boundary b_k is (eps, K)-steep when
// its increment over the previous boundary is at least
// N * sqrt((1+eps) * 2 log 2 * (A(k/K) - A((k-1)/K)) / K).
// gamma_max is the supremum of valid decay rates, eps * log 2 / K; the
// chain-of-spindles probability decays like 2K * 2^(-eps N / K).
struct SteepParams {
    double epsilon = 0.0;
    int k_slices = 0;
    double gamma_max = 0.0;
};

// The slice-k increment threshold above (k is 1-based).
double steep_increment_threshold(const CovarianceProfile& p, int n, int k_slices, double eps,
                                 int k);

// Energy density that forces a steep ancestor by pigeonhole: the sum of the
// slice thresholds divided by N (independent of N).
double steep_cover_threshold(const CovarianceProfile& p, int k_slices, double eps);

// Steepness of a vertex given its prefix values X_{v[0..d]} (d = depth of v):
// true iff d is a slice boundary b_k and the slice-k increment meets the
// threshold. Zero-variance slices are trivially steep (threshold 0). This
// value-level form is the fixture surface: tests feed it synthetic
// trajectories to force either outcome.
bool is_steep(const std::vector<double>& prefix_values, const CovarianceProfile& p, int n,
              int k_slices, double eps);

// Charged variant: reads the trajectory of v through the oracle (full-tree
// mode only; the oracle guards internal reads otherwise).
bool is_steep(FieldOracle& oracle, const NodeId& v, const SteepParams& params);

// Parameters (eps, K) for chasing targets x above the algorithmic threshold:
// eps puts sqrt(1+eps) * x* at the midpoint of [x*, x], then K doubles until
// the cover threshold drops below x. Throws GuardError for x <= x* (no such
// parameters exist) and GuardError if K would exceed 2^20 (cannot happen for
// valid inputs; the cover threshold converges to sqrt(1+eps) * x* < x).
SteepParams steep_threshold_params(const CovarianceProfile& p, double x);

// Monte Carlo estimate of P(the chain of spindles around a uniform leaf
// contains a steep vertex). By symmetry the leaf is fixed (all zeros) and the
// field is resampled: sample i uses seed fanout_seed(seed, i) and scans every
// slice-boundary vertex of the chain, stopping at the first steep one.
// Uncharged (simulator-side statistics). Guarded to slice width
// ceil(N/K) <= 22.
struct SteepMcReport {
    int n = 0;
    int k_slices = 0;
    double epsilon = 0.0;
    double gamma_max = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t samples = 0;
    std::uint64_t hits = 0;
    double empirical_p = 0.0;
    double ci_low = 0.0;  // Wilson 95% interval
    double ci_high = 0.0;
    double bound = 0.0;   // 2K * 2^(-eps N / K)
    bool violation = false; // ci_low > bound
};
SteepMcReport steep_chain_probability_mc(const CovarianceProfile& p, int n,
                                         const SteepParams& params, std::uint64_t samples,
                                         std::uint64_t seed);

// Wilson 95% score interval for a binomial proportion.
void wilson_interval(std::uint64_t hits, std::uint64_t samples, double& lo, double& hi);

// Covering property: every leaf w with X_w >= x N has a steep vertex among
// its slice-boundary prefixes, provided x exceeds the cover threshold (which
// params from steep_threshold_params guarantee). Deterministic; a
// counterexample (covered < qualifying) indicates an implementation bug.
struct CoverReport {
    std::uint64_t leaves = 0;     // leaves examined
    std::uint64_t qualifying = 0; // those with X >= x N
    std::uint64_t covered = 0;    // qualifying ones with a steep prefix
    bool ok() const { return covered == qualifying; }
};

// Checks the given leaves (uncharged walks).
CoverReport steep_cover_check(const FieldOracle& oracle, const SteepParams& params, double x,
                              const std::vector<NodeId>& leaves);

// Exhaustive over all 2^N leaves; guarded to N <= 24.
CoverReport steep_cover_exhaustive(const FieldOracle& oracle, const SteepParams& params,
                                   double x);

} // namespace crem
