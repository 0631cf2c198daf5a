#pragma once

#include "crem/covariance.hpp"
#include "crem/rng.hpp"

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace crem {

// A vertex of the depth-N binary tree: its depth and path bits from the root
// (bit j is the step taken at level j, so depth() bits are meaningful).
class NodeId {
public:
    NodeId() = default;

    static NodeId root() { return NodeId(); }
    static NodeId from_string(const std::string& bits);

    int depth() const { return depth_; }
    unsigned bit(int j) const { return (words_[j >> 6] >> (j & 63)) & 1u; }

    NodeId child(unsigned b) const;
    NodeId ancestor(int m) const; // prefix of length m

    std::string to_string() const; // "0110..."; root is ""

    friend bool operator==(const NodeId& a, const NodeId& b) {
        return a.depth_ == b.depth_ && a.words_ == b.words_;
    }

    std::size_t hash() const;

private:
    int depth_ = 0;
    std::vector<std::uint64_t> words_;
};

struct NodeIdHash {
    std::size_t operator()(const NodeId& v) const { return v.hash(); }
};

enum class OracleMode {
    full_tree, // any vertex may be queried
    leaf_only  // only depth-N vertices; internal reads are guarded
};

struct OracleOptions {
    // exact_dedup: unique_queries counts distinct vertices (a key set is
    // kept; re-reads are free). Without it every charge counts as unique and
    // the algorithms guarantee structural distinctness instead; hitting-time
    // runs, whose restarts deliberately re-visit vertices, need the set.
    bool exact_dedup = false;
    bool record_history = false;              // stream (node, value) charges
    std::uint64_t reveal_budget = std::uint64_t(1) << 26;
};

// Charge accounting for one oracle. total_calls counts every charged read,
// unique_queries the distinct ones (see OracleOptions::exact_dedup). The root
// is pre-charged: reading it bumps total_calls only. A hit watch, when armed,
// records the unique count at the first fresh depth-N charge with value
// >= threshold; that count is the hitting time tau.
class QueryLedger {
public:
    std::uint64_t total_calls() const { return total_.load(std::memory_order_relaxed); }
    std::uint64_t unique_queries() const { return unique_.load(std::memory_order_relaxed); }

    void arm_hit_watch(double absolute_threshold);
    bool hit() const { return hit_.load(std::memory_order_acquire); }
    std::uint64_t hit_tau() const { return hit_tau_; }

    // Largest depth-N value charged so far; NaN before the first one.
    double best_leaf_value() const;

    const std::vector<std::pair<NodeId, double>>& history() const { return history_; }

private:
    friend class FieldOracle;

    std::atomic<std::uint64_t> total_{0};
    std::atomic<std::uint64_t> unique_{0};
    std::atomic<bool> hit_{false};
    std::uint64_t hit_tau_ = 0;
    bool watch_armed_ = false;
    double watch_threshold_ = 0.0;
    std::atomic<std::uint64_t> best_leaf_bits_;
    bool dedup_ = false;
    bool record_history_ = false;
    std::mutex mu_;
    struct KeyPairHash {
        std::size_t operator()(const StreamKey& k) const { return k.lo; }
    };
    std::unordered_set<StreamKey, KeyPairHash> charged_;
    std::vector<std::pair<NodeId, double>> history_;
};

// Lazy exact simulator of the continuous random energy model on the depth-N
// binary tree: X is the centred Gaussian field with
// Cov(X_v, X_w) = N * A(|v /\ w| / N). Every random draw is a pure function
// of (seed, vertex path), so values are identical across query order, replay
// and threads; zero-variance edges are exactly 0.0.
//
// Construction: each vertex owns a 128-bit stream key chained per path bit.
// An edge into a 1-child draws its increment directly from the child key. An
// edge into a 0-child belongs to the maximal zero-run below the nearest
// ends-in-1 ancestor (the run's base); run increments are realized through a
// keyed dyadic Gaussian bridge (the run total is one draw, halves follow by
// exact conditional splitting). This leaves every marginal and joint law
// exact while letting a whole zero-run tail be summed in O(log N) draws,
// which is what makes the leaf-only estimator affordable. Node values are
// per-edge left folds root->v and therefore bit-identical across query,
// trajectory, reveal and peek.
class FieldOracle {
public:
    FieldOracle(CovarianceProfile profile, int n, std::uint64_t seed,
                OracleMode mode = OracleMode::full_tree, OracleOptions options = {});

    int depth_n() const { return n_; }
    std::uint64_t seed() const { return seed_; }
    OracleMode mode() const { return mode_; }
    const CovarianceProfile& profile() const { return profile_; }
    const std::string& field_version() const { return field_version_; }

    // Variance of the depth-i edge increment, N * (A(i/N) - A((i-1)/N)).
    double edge_variance(int i) const { return sigma_[i] * sigma_[i]; }

    // Charged read of X_v (the root is pre-charged and reads as 0.0).
    double query(const NodeId& v);

    // Uncharged consistency re-check; same value as query bit-for-bit.
    double peek(const NodeId& v) const;

    // X_{v[0..m]} for m = 0..depth(v); charges the depth(v) proper prefixes.
    std::vector<double> trajectory(const NodeId& v);

    // Increment X_child - X_parent, exactly as folded into node values.
    // Uncharged diagnostic.
    double edge_increment(const NodeId& child) const;

    // All vertices of the chain of spindles around v with K slices, with
    // their values; charges each distinct vertex once. Guarded by
    // options.reveal_budget and restricted to full-tree mode.
    std::unordered_map<NodeId, double, NodeIdHash> reveal_spindle_chain(const NodeId& v,
                                                                        int k_slices);

    QueryLedger& ledger() { return ledger_; }
    const QueryLedger& ledger() const { return ledger_; }

    // ---- Simulator-side evaluation surface ----------------------------
    // Search and hardness drivers walk the tree through this cursor. Walks
    // are pure evaluation (uncharged); charge_current() books the cursor's
    // vertex into the ledger exactly like query would.

    struct Walk {
        StreamKey node;  // stream key of the current vertex
        StreamKey base;  // key of the nearest ends-in-1 ancestor-or-self
        int base_depth = 0;
        int depth = 0;
        double x = 0.0;       // field value at the current vertex
        double last_inc = 0.0;
    };

    Walk walk_root() const { return Walk{root_, root_, 0, 0, 0.0, 0.0}; }
    void walk_down(Walk& w, unsigned bit) const;

    // Sum of the increments along the all-zeros extension of the cursor's
    // vertex down to depth N, in O(log N) bridge draws. Equals the per-edge
    // fold up to float summation order (documented tolerance ~1e-12
    // relative); used by the leaf-only estimator in bulk mode.
    double tail_sum(const Walk& w) const;

    // Charge the cursor's vertex (id only needed when history is on).
    void charge(const Walk& w, const NodeId* id = nullptr);

    // Value of the all-zeros leaf below the cursor's vertex, charged as a
    // depth-N read. Without exact_dedup the value is x + tail_sum (bridge
    // order); with it the remaining edges are walked so the charge carries
    // the real leaf key and the value matches query bit-for-bit.
    double leaf_estimate_charged(const Walk& w, const NodeId* id = nullptr);

    // Values of all 2^levels descendants exactly `levels` below w, in suffix
    // DFS order (0 before 1, so out[i]'s suffix is the bits of i, most
    // significant first). Each descendant is charged at its own depth; with
    // as_leaf_estimates each is instead extended by its zero-run tail to
    // depth N and charged as a depth-N read (the leaf-only estimator's bulk
    // scan). Values are the same per-edge folds walk_down produces, and the
    // estimates equal x + tail_sum bit-for-bit; the scan shares bridge state
    // across the subtree, which is what makes wide blocks affordable. When
    // history recording is on, scan charges carry empty node ids.
    void bulk_descendant_scan(const Walk& w, int levels, bool as_leaf_estimates,
                              std::vector<double>& out);

private:
    double chain_root_sum(const StreamKey& base, int base_depth) const;
    void chain_split(const StreamKey& base, int lo, int mid, int hi, double g, double& gl,
                     double& gr) const;
    double chain_increment(const StreamKey& base, int base_depth, int pos) const;
    void chain_range_acc(const StreamKey& base, int lo, int hi, double g, int a, int c,
                         double& acc) const;

    Walk walk_to(const NodeId& v) const;
    void guard_readable(const NodeId& v, const char* op) const;

    CovarianceProfile profile_;
    int n_;
    std::uint64_t seed_;
    OracleMode mode_;
    OracleOptions options_;
    std::string field_version_;
    StreamKey root_;
    std::vector<double> vp_;    // vp_[i] = N * A(i/N)
    std::vector<double> sigma_; // sigma_[i] = sqrt(vp_[i] - vp_[i-1])
    QueryLedger ledger_;
};

} // namespace crem
