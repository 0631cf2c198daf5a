#include "crem/search.hpp"

#include "crem/errors.hpp"
#include "crem/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace crem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void validate_block_width(const FieldOracle& oracle, int m) {
    if (m < 1 || m > oracle.depth_n())
        throw ValidationError("block width M must lie in [1, N]");
    if (m > kBlockWidthCap)
        throw GuardError("block width M over the cap of " + std::to_string(kBlockWidthCap) +
                         " (a block scan charges 2^M vertices)");
}

// Index of the best value under strict > with first-wins ties, i.e. the
// lexicographically smallest maximizing suffix.
std::size_t argmax_first(const std::vector<double>& vals) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < vals.size(); ++i)
        if (vals[i] > vals[best])
            best = i;
    return best;
}

// Index holding rank d (0 = largest) under (value desc, index asc).
std::size_t select_rank(const std::vector<double>& vals, std::uint64_t d) {
    if (d == 0)
        return argmax_first(vals);
    std::vector<std::uint32_t> idx(vals.size());
    std::iota(idx.begin(), idx.end(), 0u);
    auto before = [&](std::uint32_t a, std::uint32_t b) {
        if (vals[a] != vals[b])
            return vals[a] > vals[b];
        return a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(d), idx.end(),
                     before);
    return idx[static_cast<std::size_t>(d)];
}

void replay_suffix(FieldOracle& oracle, FieldOracle::Walk& w, std::size_t suffix, int levels,
                   std::vector<unsigned>& path_bits) {
    for (int j = levels - 1; j >= 0; --j) {
        const unsigned bit = static_cast<unsigned>((suffix >> j) & 1u);
        oracle.walk_down(w, bit);
        path_bits.push_back(bit);
    }
}

NodeId node_from_bits(const std::vector<unsigned>& bits) {
    NodeId v = NodeId::root();
    for (unsigned b : bits)
        v = v.child(b);
    return v;
}

void recheck(FieldOracle& oracle, const NodeId& node, double value, const char* who) {
    if (oracle.peek(node) != value)
        throw std::logic_error(std::string(who) + ": output failed the oracle re-check");
}

} // namespace

std::string algorithm_name(Algorithm a) {
    switch (a) {
    case Algorithm::block_greedy:
        return "block_greedy";
    case Algorithm::leaf_only_greedy:
        return "leaf_only_greedy";
    case Algorithm::random_leaf:
        return "random_leaf";
    }
    throw ValidationError("unknown algorithm tag");
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "block_greedy")
        return Algorithm::block_greedy;
    if (name == "leaf_only_greedy" || name == "leaf_only")
        return Algorithm::leaf_only_greedy;
    if (name == "random_leaf")
        return Algorithm::random_leaf;
    throw ValidationError("unknown algorithm '" + name +
                          "' (expected block_greedy, leaf_only_greedy or random_leaf)");
}

SearchResult block_greedy(FieldOracle& oracle, int m) {
    const auto t0 = Clock::now();
    if (oracle.mode() != OracleMode::full_tree)
        throw GuardError("block_greedy: requires a full-tree oracle");
    validate_block_width(oracle, m);
    const int n = oracle.depth_n();
    const std::uint64_t u0 = oracle.ledger().unique_queries();
    const std::uint64_t c0 = oracle.ledger().total_calls();

    SearchResult res;
    res.algorithm = "block_greedy";
    res.m = m;

    FieldOracle::Walk w = oracle.walk_root();
    std::vector<unsigned> bits;
    bits.reserve(static_cast<std::size_t>(n));
    std::vector<double> vals;
    while (w.depth < n) {
        const int levels = std::min(m, n - w.depth);
        oracle.bulk_descendant_scan(w, levels, false, vals);
        replay_suffix(oracle, w, argmax_first(vals), levels, bits);
        ++res.blocks;
    }

    res.node = node_from_bits(bits);
    res.value = w.x;
    recheck(oracle, res.node, res.value, "block_greedy");
    res.best_seen = oracle.ledger().best_leaf_value();
    res.unique_queries = oracle.ledger().unique_queries() - u0;
    res.total_calls = oracle.ledger().total_calls() - c0;
    res.elapsed_seconds = seconds_since(t0);
    return res;
}

SearchResult exhaustive_max(FieldOracle& oracle) {
    const auto t0 = Clock::now();
    const int n = oracle.depth_n();
    if (n > 26)
        throw GuardError("exhaustive_max: 2^N leaf scan refused for N > 26");
    const std::uint64_t u0 = oracle.ledger().unique_queries();
    const std::uint64_t c0 = oracle.ledger().total_calls();

    double best = -std::numeric_limits<double>::infinity();
    std::vector<unsigned> cur(static_cast<std::size_t>(n), 0u);
    std::vector<unsigned> best_bits;
    bool have = false;
    auto dfs = [&](auto&& self, const FieldOracle::Walk& w) -> void {
        if (w.depth == n) {
            oracle.charge(w);
            if (!have || w.x > best) {
                have = true;
                best = w.x;
                best_bits = cur;
            }
            return;
        }
        for (unsigned bit = 0; bit < 2; ++bit) {
            FieldOracle::Walk c = w;
            oracle.walk_down(c, bit);
            cur[static_cast<std::size_t>(w.depth)] = bit;
            self(self, c);
        }
    };
    FieldOracle::Walk root = oracle.walk_root();
    dfs(dfs, root);

    SearchResult res;
    res.algorithm = "exhaustive_max";
    res.blocks = 1;
    res.node = node_from_bits(best_bits);
    res.value = best;
    recheck(oracle, res.node, res.value, "exhaustive_max");
    res.best_seen = oracle.ledger().best_leaf_value();
    res.unique_queries = oracle.ledger().unique_queries() - u0;
    res.total_calls = oracle.ledger().total_calls() - c0;
    res.elapsed_seconds = seconds_since(t0);
    return res;
}

namespace {

// Deterministic leaf bits for draw r: bit j comes from word j/64 of the
// draw's stream.
unsigned baseline_bit(const StreamKey& rk, std::uint64_t r, std::uint64_t words, int j,
                      std::uint64_t& word) {
    if ((j & 63) == 0)
        word = draw_u64(rk, r * words + static_cast<std::uint64_t>(j >> 6));
    return static_cast<unsigned>((word >> (j & 63)) & 1u);
}

} // namespace

SearchResult random_leaf_baseline(FieldOracle& oracle, std::uint64_t draws, std::uint64_t seed) {
    const auto t0 = Clock::now();
    if (draws < 1)
        throw ValidationError("random leaf baseline: needs at least one draw");
    const int n = oracle.depth_n();
    const std::uint64_t words = static_cast<std::uint64_t>((n + 63) / 64);
    const StreamKey rk = root_key(seed ^ 0x626173656c696e65ULL);
    const std::uint64_t u0 = oracle.ledger().unique_queries();
    const std::uint64_t c0 = oracle.ledger().total_calls();

    double best = 0.0;
    std::uint64_t best_r = 0;
    bool have = false;
    for (std::uint64_t r = 0; r < draws; ++r) {
        FieldOracle::Walk w = oracle.walk_root();
        std::uint64_t word = 0;
        for (int j = 0; j < n; ++j)
            oracle.walk_down(w, baseline_bit(rk, r, words, j, word));
        oracle.charge(w);
        if (!have || w.x > best) {
            have = true;
            best = w.x;
            best_r = r;
        }
    }

    std::vector<unsigned> bits(static_cast<std::size_t>(n));
    std::uint64_t word = 0;
    for (int j = 0; j < n; ++j)
        bits[static_cast<std::size_t>(j)] = baseline_bit(rk, best_r, words, j, word);

    SearchResult res;
    res.algorithm = "random_leaf";
    res.node = node_from_bits(bits);
    res.value = best;
    recheck(oracle, res.node, res.value, "random_leaf_baseline");
    res.best_seen = oracle.ledger().best_leaf_value();
    res.unique_queries = oracle.ledger().unique_queries() - u0;
    res.total_calls = oracle.ledger().total_calls() - c0;
    res.elapsed_seconds = seconds_since(t0);
    return res;
}

namespace {

// Candidate means over contiguous 2^ell_eff slices of the estimate scan, in
// scan order.
void candidate_means(const std::vector<double>& estimates, int ell_eff,
                     std::vector<double>& means) {
    const std::size_t reps = std::size_t(1) << ell_eff;
    means.clear();
    means.resize(estimates.size() / reps);
    for (std::size_t c = 0; c < means.size(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < reps; ++r)
            s += estimates[c * reps + r];
        means[c] = s / static_cast<double>(reps);
    }
}

// Uncharged true values of the 2^levels descendants below w, scan order.
void true_descendant_values(const FieldOracle& oracle, const FieldOracle::Walk& w, int levels,
                            std::vector<double>& out) {
    out.clear();
    out.reserve(std::size_t(1) << levels);
    auto rec = [&](auto&& self, const FieldOracle::Walk& cur, int left) -> void {
        if (left == 0) {
            out.push_back(cur.x);
            return;
        }
        for (unsigned bit = 0; bit < 2; ++bit) {
            FieldOracle::Walk c = cur;
            oracle.walk_down(c, bit);
            self(self, c, left - 1);
        }
    };
    rec(rec, w, levels);
}

} // namespace

SearchResult leaf_only_greedy(FieldOracle& oracle, int m, int ell, bool instrumented) {
    const auto t0 = Clock::now();
    if (oracle.mode() != OracleMode::leaf_only)
        throw GuardError("leaf_only_greedy: requires a leaf-only oracle");
    validate_block_width(oracle, m);
    if (ell < 0)
        throw ValidationError("leaf sample depth ell must be non-negative");
    const int n = oracle.depth_n();
    const std::uint64_t u0 = oracle.ledger().unique_queries();
    const std::uint64_t c0 = oracle.ledger().total_calls();

    SearchResult res;
    res.algorithm = "leaf_only_greedy";
    res.m = m;
    res.ell = ell;

    FieldOracle::Walk w = oracle.walk_root();
    std::vector<unsigned> bits;
    bits.reserve(static_cast<std::size_t>(n));
    std::vector<double> vals, means, truths;
    while (w.depth < n) {
        const int levels = std::min(m, n - w.depth);
        std::size_t pick;
        if (w.depth + levels == n) {
            // Final block: actual leaves, charged directly.
            oracle.bulk_descendant_scan(w, levels, false, vals);
            pick = argmax_first(vals);
            res.value = vals[pick];
        } else {
            const int ell_eff = std::min(ell, n - w.depth - levels);
            if (levels + ell_eff > kBlockWidthCap)
                throw GuardError("leaf_only_greedy: block scan width M + ell over the cap of " +
                                 std::to_string(kBlockWidthCap));
            oracle.bulk_descendant_scan(w, levels + ell_eff, true, vals);
            candidate_means(vals, ell_eff, means);
            pick = argmax_first(means);
            if (instrumented) {
                true_descendant_values(oracle, w, levels, truths);
                for (std::size_t c = 0; c < means.size(); ++c)
                    res.proxy_errors.push_back(means[c] - truths[c]);
            }
        }
        replay_suffix(oracle, w, pick, levels, bits);
        ++res.blocks;
    }

    res.node = node_from_bits(bits);
    recheck(oracle, res.node, res.value, "leaf_only_greedy");
    res.best_seen = oracle.ledger().best_leaf_value();
    res.unique_queries = oracle.ledger().unique_queries() - u0;
    res.total_calls = oracle.ledger().total_calls() - c0;
    res.elapsed_seconds = seconds_since(t0);
    return res;
}

namespace {

struct RestartDriver {
    FieldOracle& oracle;
    std::uint64_t budget;
    bool out_of_budget = false;

    bool affordable(std::uint64_t scan_width) {
        // Conservative: assumes every charge in the scan is fresh. With
        // deduplication a re-scan may cost less, so this can stop one block
        // early, never late.
        if (oracle.ledger().unique_queries() + scan_width > budget) {
            out_of_budget = true;
            return false;
        }
        return true;
    }
};

} // namespace

HittingResult hitting_time_run(const CovarianceProfile& profile, int n, std::uint64_t seed,
                               Algorithm alg, int m, int ell, double x, std::uint64_t budget) {
    const auto t0 = Clock::now();
    if (n < 1)
        throw ValidationError("hitting run: depth N must be at least 1");
    if (!(x >= 0.0))
        throw ValidationError("hitting run: target level x must be non-negative");
    if (budget < 1)
        throw ValidationError("hitting run: budget must be at least one query");

    OracleOptions opt;
    opt.exact_dedup = true;
    const OracleMode mode =
        alg == Algorithm::leaf_only_greedy ? OracleMode::leaf_only : OracleMode::full_tree;
    FieldOracle oracle(profile, n, seed, mode, opt);
    if (alg != Algorithm::random_leaf)
        validate_block_width(oracle, m);
    if (alg == Algorithm::leaf_only_greedy && ell < 0)
        throw ValidationError("leaf sample depth ell must be non-negative");
    oracle.ledger().arm_hit_watch(x * n);

    HittingResult res;
    RestartDriver driver{oracle, budget};

    if (alg == Algorithm::random_leaf) {
        const std::uint64_t words = static_cast<std::uint64_t>((n + 63) / 64);
        const StreamKey rk = root_key(seed ^ 0x626173656c696e65ULL);
        for (std::uint64_t r = 0; !oracle.ledger().hit() && driver.affordable(1); ++r) {
            FieldOracle::Walk w = oracle.walk_root();
            std::uint64_t word = 0;
            for (int j = 0; j < n; ++j)
                oracle.walk_down(w, baseline_bit(rk, r, words, j, word));
            oracle.charge(w);
        }
    } else {
        std::vector<double> vals, means;
        for (std::uint64_t r = 0;; ++r) {
            res.restarts = r; // passes beyond the base run
            const std::uint64_t unique_before = oracle.ledger().unique_queries();
            std::uint64_t digits = r;
            FieldOracle::Walk w = oracle.walk_root();
            std::vector<unsigned> bits;
            while (w.depth < n && !oracle.ledger().hit()) {
                const int levels = std::min(m, n - w.depth);
                const std::vector<double>* ranked = &vals;
                if (alg == Algorithm::block_greedy) {
                    if (!driver.affordable(std::uint64_t(1) << levels))
                        break;
                    oracle.bulk_descendant_scan(w, levels, false, vals);
                } else if (w.depth + levels == n) {
                    if (!driver.affordable(std::uint64_t(1) << levels))
                        break;
                    oracle.bulk_descendant_scan(w, levels, false, vals);
                } else {
                    const int ell_eff = std::min(ell, n - w.depth - levels);
                    if (levels + ell_eff > kBlockWidthCap)
                        throw GuardError("leaf_only_greedy: block scan width M + ell over the "
                                         "cap of " +
                                         std::to_string(kBlockWidthCap));
                    if (!driver.affordable(std::uint64_t(1) << (levels + ell_eff)))
                        break;
                    oracle.bulk_descendant_scan(w, levels + ell_eff, true, vals);
                    candidate_means(vals, ell_eff, means);
                    ranked = &means;
                }
                const std::uint64_t width = ranked->size();
                const std::uint64_t d = digits % width;
                digits /= width;
                replay_suffix(oracle, w, select_rank(*ranked, d), levels, bits);
            }
            if (oracle.ledger().hit() || driver.out_of_budget)
                break;
            if (r > 0 && oracle.ledger().unique_queries() == unique_before)
                break; // restarts have stopped reaching fresh vertices
        }
    }

    res.hit = oracle.ledger().hit();
    res.tau = res.hit ? oracle.ledger().hit_tau() : budget;
    res.best_value = oracle.ledger().best_leaf_value();
    res.unique_queries = oracle.ledger().unique_queries();
    res.total_calls = oracle.ledger().total_calls();
    res.elapsed_seconds = seconds_since(t0);
    return res;
}

} // namespace crem
