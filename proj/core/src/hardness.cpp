#include "crem/hardness.hpp"

#include "crem/errors.hpp"
#include "crem/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace crem {

namespace {

constexpr double kLog2 = 0.6931471805599453094;
constexpr double kTwoLog2 = 1.3862943611198906188;
constexpr double kZ95 = 1.959963984540054; // Phi^{-1}(0.975)

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
    const std::uint64_t s = a + b;
    return s < a ? std::numeric_limits<std::uint64_t>::max() : s;
}

std::uint64_t pow2_minus_1_sat(int e) {
    if (e >= 64)
        return std::numeric_limits<std::uint64_t>::max();
    return (std::uint64_t(1) << e) - 1;
}

void validate_slices(int n, int k_slices) {
    if (n < 1)
        throw ValidationError("spindles: depth N must be at least 1");
    if (k_slices < 1 || k_slices > n)
        throw ValidationError("spindles: K must lie in [1, N]");
}

} // namespace

std::vector<int> spindle_boundaries(int n, int k_slices) {
    validate_slices(n, k_slices);
    std::vector<int> b(static_cast<std::size_t>(k_slices) + 1);
    for (int k = 0; k <= k_slices; ++k)
        b[static_cast<std::size_t>(k)] =
            static_cast<int>((static_cast<std::int64_t>(n) * k) / k_slices);
    return b;
}

std::uint64_t spindle_chain_cardinality(int n, int k_slices, int depth) {
    if (depth < 0 || depth > n)
        throw ValidationError("spindles: vertex depth out of range");
    const auto b = spindle_boundaries(n, k_slices);
    std::uint64_t total = 0;
    int kappa = 0;
    for (int k = 1; k <= k_slices && b[static_cast<std::size_t>(k) - 1] <= depth; ++k) {
        total = sat_add(total, pow2_minus_1_sat(b[static_cast<std::size_t>(k)] -
                                                b[static_cast<std::size_t>(k) - 1] + 1));
        kappa = k;
    }
    return total - static_cast<std::uint64_t>(kappa - 1);
}

double steep_increment_threshold(const CovarianceProfile& p, int n, int k_slices, double eps,
                                 int k) {
    validate_slices(n, k_slices);
    if (k < 1 || k > k_slices)
        throw ValidationError("steepness: slice index out of range");
    if (!(eps >= 0.0))
        throw ValidationError("steepness: eps must be non-negative");
    const double kk = static_cast<double>(k_slices);
    double da = p.value_at(k / kk) - p.value_at((k - 1) / kk);
    if (da < 0.0)
        da = 0.0;
    return n * std::sqrt((1.0 + eps) * kTwoLog2 * da / kk);
}

double steep_cover_threshold(const CovarianceProfile& p, int k_slices, double eps) {
    // N cancels between the thresholds and the density; evaluate at n = K so
    // the boundaries sit exactly at the fractions k/K.
    double s = 0.0;
    for (int k = 1; k <= k_slices; ++k)
        s += steep_increment_threshold(p, k_slices, k_slices, eps, k);
    return s / k_slices;
}

bool is_steep(const std::vector<double>& prefix_values, const CovarianceProfile& p, int n,
              int k_slices, double eps) {
    if (prefix_values.empty())
        throw ValidationError("steepness: prefix values must include the root");
    const int d = static_cast<int>(prefix_values.size()) - 1;
    if (d > n)
        throw ValidationError("steepness: vertex deeper than the tree");
    const auto b = spindle_boundaries(n, k_slices);
    for (int k = 1; k <= k_slices; ++k) {
        if (b[static_cast<std::size_t>(k)] != d)
            continue;
        const double inc =
            prefix_values[static_cast<std::size_t>(d)] -
            prefix_values[static_cast<std::size_t>(b[static_cast<std::size_t>(k) - 1])];
        return inc >= steep_increment_threshold(p, n, k_slices, eps, k);
    }
    return false;
}

bool is_steep(FieldOracle& oracle, const NodeId& v, const SteepParams& params) {
    const std::vector<double> vals = oracle.trajectory(v);
    return is_steep(vals, oracle.profile(), oracle.depth_n(), params.k_slices, params.epsilon);
}

SteepParams steep_threshold_params(const CovarianceProfile& p, double x) {
    const ThresholdReport r = thresholds(p);
    if (!(x > r.x_star))
        throw GuardError("steepness parameters exist only above the algorithmic threshold "
                         "x* = " +
                         std::to_string(r.x_star));
    SteepParams out;
    // sqrt(1+eps) * x* lands midway between x* and x, so the cover threshold
    // has room to drop strictly below x once the slicing is fine enough.
    const double mid = (x + r.x_star) / (2.0 * r.x_star);
    out.epsilon = mid * mid - 1.0;
    int k = 1;
    while (steep_cover_threshold(p, k, out.epsilon) >= x) {
        if (k >= (1 << 20))
            throw GuardError("steepness parameters: slicing exceeded 2^20 without covering "
                             "the requested level");
        k *= 2;
    }
    out.k_slices = k;
    out.gamma_max = out.epsilon * kLog2 / k;
    return out;
}

void wilson_interval(std::uint64_t hits, std::uint64_t samples, double& lo, double& hi) {
    if (samples == 0)
        throw ValidationError("wilson interval: sample count must be positive");
    const double n = static_cast<double>(samples);
    const double ph = static_cast<double>(hits) / n;
    const double z2 = kZ95 * kZ95;
    const double denom = 1.0 + z2 / n;
    const double centre = ph + z2 / (2.0 * n);
    const double spread = kZ95 * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n));
    // At the boundaries centre and spread cancel exactly in real arithmetic;
    // pin the cancellation so zero-hit runs report a zero lower bound.
    lo = hits == 0 ? 0.0 : (centre - spread) / denom;
    hi = hits == samples ? 1.0 : (centre + spread) / denom;
    if (lo < 0.0)
        lo = 0.0;
    if (hi > 1.0)
        hi = 1.0;
}

SteepMcReport steep_chain_probability_mc(const CovarianceProfile& p, int n,
                                         const SteepParams& params, std::uint64_t samples,
                                         std::uint64_t seed) {
    const int k_slices = params.k_slices;
    const double eps = params.epsilon;
    validate_slices(n, k_slices);
    if (!(eps >= 0.0))
        throw ValidationError("steepness: eps must be non-negative");
    if (samples == 0)
        throw ValidationError("steepness: sample count must be positive");
    if ((n + k_slices - 1) / k_slices > 22)
        throw GuardError("steep chain sampling: slice width ceil(N/K) over 22 means scanning "
                         "more than 2^22 vertices per spindle; refused");

    const auto b = spindle_boundaries(n, k_slices);
    std::vector<double> thr(static_cast<std::size_t>(k_slices) + 1, 0.0);
    for (int k = 1; k <= k_slices; ++k)
        thr[static_cast<std::size_t>(k)] = steep_increment_threshold(p, n, k_slices, eps, k);

    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        FieldOracle oracle(p, n, fanout_seed(seed, i));

        // The chain's slice-boundary vertices are the spindle bottoms: for
        // slice k, all depth-b_k descendants of the anchor w[b_{k-1}].
        bool hit = false;
        FieldOracle::Walk anchor = oracle.walk_root();
        for (int k = 1; k <= k_slices && !hit; ++k) {
            while (anchor.depth < b[static_cast<std::size_t>(k) - 1])
                oracle.walk_down(anchor, 0);
            const double need = anchor.x + thr[static_cast<std::size_t>(k)];
            const int bottom = b[static_cast<std::size_t>(k)];
            auto dfs = [&](auto&& self, const FieldOracle::Walk& w) -> bool {
                if (w.depth == bottom)
                    return w.x >= need;
                for (unsigned bit = 0; bit < 2; ++bit) {
                    FieldOracle::Walk c = w;
                    oracle.walk_down(c, bit);
                    if (self(self, c))
                        return true;
                }
                return false;
            };
            hit = dfs(dfs, anchor);
        }
        if (hit)
            ++hits;
    }

    SteepMcReport rep;
    rep.n = n;
    rep.k_slices = k_slices;
    rep.epsilon = eps;
    rep.gamma_max = eps * kLog2 / k_slices;
    rep.seed = seed;
    rep.samples = samples;
    rep.hits = hits;
    rep.empirical_p = static_cast<double>(hits) / static_cast<double>(samples);
    wilson_interval(hits, samples, rep.ci_low, rep.ci_high);
    rep.bound = 2.0 * k_slices * std::exp2(-eps * n / k_slices);
    rep.violation = rep.ci_low > rep.bound;
    return rep;
}

namespace {

void check_cover_premise(const CovarianceProfile& p, const SteepParams& params, double x) {
    const double cover = steep_cover_threshold(p, params.k_slices, params.epsilon);
    if (!(x >= cover))
        throw ValidationError("cover check: x must be at least the summed slice thresholds (" +
                              std::to_string(cover) + "), or the pigeonhole argument does not "
                              "apply");
}

} // namespace

CoverReport steep_cover_check(const FieldOracle& oracle, const SteepParams& params, double x,
                              const std::vector<NodeId>& leaves) {
    const int n = oracle.depth_n();
    validate_slices(n, params.k_slices);
    check_cover_premise(oracle.profile(), params, x);
    const auto b = spindle_boundaries(n, params.k_slices);

    CoverReport rep;
    for (const NodeId& w : leaves) {
        if (w.depth() != n)
            throw ValidationError("cover check: all nodes must be leaves");
        ++rep.leaves;
        FieldOracle::Walk walk = oracle.walk_root();
        std::vector<double> at_bounds(static_cast<std::size_t>(params.k_slices) + 1, 0.0);
        int next_k = 1;
        for (int j = 0; j < n; ++j) {
            oracle.walk_down(walk, w.bit(j));
            if (next_k <= params.k_slices && walk.depth == b[static_cast<std::size_t>(next_k)])
                at_bounds[static_cast<std::size_t>(next_k++)] = walk.x;
        }
        if (walk.x < x * n)
            continue;
        ++rep.qualifying;
        for (int k = 1; k <= params.k_slices; ++k) {
            if (at_bounds[static_cast<std::size_t>(k)] -
                    at_bounds[static_cast<std::size_t>(k) - 1] >=
                steep_increment_threshold(oracle.profile(), n, params.k_slices, params.epsilon,
                                          k)) {
                ++rep.covered;
                break;
            }
        }
    }
    return rep;
}

CoverReport steep_cover_exhaustive(const FieldOracle& oracle, const SteepParams& params,
                                   double x) {
    const int n = oracle.depth_n();
    const int k_slices = params.k_slices;
    validate_slices(n, k_slices);
    check_cover_premise(oracle.profile(), params, x);
    if (n > 24)
        throw GuardError("cover check: exhaustive over 2^N leaves, refused for N > 24");

    const auto b = spindle_boundaries(n, k_slices);
    std::vector<double> thr(static_cast<std::size_t>(k_slices) + 1, 0.0);
    for (int k = 1; k <= k_slices; ++k)
        thr[static_cast<std::size_t>(k)] =
            steep_increment_threshold(oracle.profile(), n, k_slices, params.epsilon, k);
    const double level = x * n;

    CoverReport rep;
    std::vector<double> at_bounds(static_cast<std::size_t>(k_slices) + 1, 0.0);
    auto dfs = [&](auto&& self, const FieldOracle::Walk& w, int next_k) -> void {
        int nk = next_k;
        if (nk <= k_slices && w.depth == b[static_cast<std::size_t>(nk)]) {
            at_bounds[static_cast<std::size_t>(nk)] = w.x;
            ++nk;
        }
        if (w.depth == n) {
            ++rep.leaves;
            if (w.x >= level) {
                ++rep.qualifying;
                for (int k = 1; k <= k_slices; ++k) {
                    if (at_bounds[static_cast<std::size_t>(k)] -
                            at_bounds[static_cast<std::size_t>(k) - 1] >=
                        thr[static_cast<std::size_t>(k)]) {
                        ++rep.covered;
                        break;
                    }
                }
            }
            return;
        }
        for (unsigned bit = 0; bit < 2; ++bit) {
            FieldOracle::Walk c = w;
            oracle.walk_down(c, bit);
            self(self, c, nk);
        }
    };
    FieldOracle::Walk root = oracle.walk_root();
    dfs(dfs, root, 1);
    return rep;
}

} // namespace crem
