#pragma once

#include "crem/covariance.hpp"
#include "crem/field.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace crem {

enum class Algorithm {
    block_greedy,
    leaf_only_greedy,
    random_leaf,
};

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

// Block widths are capped: a block scan materializes 2^width values.
inline constexpr int kBlockWidthCap = 22;

struct SearchResult {
    NodeId node;              // depth-N output vertex
    double value = 0.0;       // X at node, re-checked against the oracle
    double best_seen = 0.0;   // best depth-N value charged during the run
    std::uint64_t unique_queries = 0;
    std::uint64_t total_calls = 0;
    int blocks = 0;
    std::string algorithm;
    int m = 0;
    int ell = -1;             // -1 when not a leaf-only run
    double elapsed_seconds = 0.0;
    // Instrumented leaf-only runs: estimate minus true value for every
    // candidate scored through the proxy, in scan order.
    std::vector<double> proxy_errors;
};

// Greedy descent in blocks of M levels: from the current vertex, charge all
// descendants M levels down (N-clamped), move to the argmax, repeat. Ties
// break to the lexicographically smallest suffix. Query count is exactly
// sum over blocks of 2^(block width) <= 2^M ceil(N/M). Full-tree mode.
SearchResult block_greedy(FieldOracle& oracle, int m);

// True argmax over all 2^N leaves by depth-first traversal reusing prefix
// sums; charges exactly the leaves, so it also runs in leaf-only mode.
// Guarded to N <= 26.
SearchResult exhaustive_max(FieldOracle& oracle);

// Queries `draws` uniform leaves keyed by (seed, draw index) and returns the
// best. Works in either mode.
SearchResult random_leaf_baseline(FieldOracle& oracle, std::uint64_t draws, std::uint64_t seed);

// The block-greedy loop scored through the leaf proxy: an internal candidate
// v at depth g is scored by the mean leaf value over the all-zeros
// extensions of its 2^ell_eff depth-(g+ell_eff) descendants, with
// ell_eff = min(ell, N - g) so the representatives exist; the final block
// scans actual leaves directly and its best queried leaf is the output.
// Leaf-only mode required; block scans charge 2^(width + ell_eff) leaves.
// With instrumented set, proxy_errors records estimate - X_v for every
// candidate (selection-free, not just winners).
SearchResult leaf_only_greedy(FieldOracle& oracle, int m, int ell, bool instrumented = false);

// One hitting-time run: arm a watch at x*N, run the algorithm with restarts
// until the watch trips or the next block scan would exceed the unique-query
// budget. Restart r follows the rank-d_k candidate in block k where
// (d_1, d_2, ...) are the digits of r in base 2^(block width), so restarts
// 1..2^M-1 fan out across the first block's ranking before deeper digits
// engage; rank 0 is plain greedy. Re-visited vertices are deduplicated
// (exact_dedup oracle), so shared prefixes across restarts are free. tau is
// the unique-query count at the first qualifying depth-N charge; on a miss
// tau = budget.
struct HittingResult {
    bool hit = false;
    std::uint64_t tau = 0;
    double best_value = 0.0;
    std::uint64_t unique_queries = 0;
    std::uint64_t total_calls = 0;
    std::uint64_t restarts = 0; // restarts started beyond the first run
    double elapsed_seconds = 0.0;
};

HittingResult hitting_time_run(const CovarianceProfile& profile, int n, std::uint64_t seed,
                               Algorithm alg, int m, int ell, double x, std::uint64_t budget);

} // namespace crem
