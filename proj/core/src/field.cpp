#include "crem/field.hpp"

#include "crem/errors.hpp"
#include "crem/hardness.hpp"
#include "crem/version.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace crem {

namespace {

constexpr std::uint64_t kSaltEdge = 0x65646765ULL;
constexpr std::uint64_t kSaltChainRoot = 0x63726f6f74ULL;
constexpr std::uint64_t kSaltSplit = 0x73706c6974ULL;

inline std::uint64_t range_code(int lo, int hi) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(lo)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(hi));
}

double nan_double() {
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace

NodeId NodeId::from_string(const std::string& bits) {
    NodeId v;
    for (char c : bits) {
        if (c != '0' && c != '1')
            throw ValidationError("node path: expected a string of 0/1 characters");
        v = v.child(c == '1' ? 1u : 0u);
    }
    return v;
}

NodeId NodeId::child(unsigned b) const {
    NodeId c(*this);
    const int j = c.depth_;
    if ((j >> 6) >= static_cast<int>(c.words_.size()))
        c.words_.push_back(0);
    if (b)
        c.words_[j >> 6] |= (std::uint64_t(1) << (j & 63));
    ++c.depth_;
    return c;
}

NodeId NodeId::ancestor(int m) const {
    if (m < 0 || m > depth_)
        throw ValidationError("node ancestor: prefix length out of range");
    NodeId a;
    a.depth_ = m;
    a.words_.assign(words_.begin(), words_.begin() + ((m + 63) >> 6));
    if (!a.words_.empty() && (m & 63))
        a.words_.back() &= (std::uint64_t(1) << (m & 63)) - 1;
    return a;
}

std::string NodeId::to_string() const {
    std::string s(static_cast<std::size_t>(depth_), '0');
    for (int j = 0; j < depth_; ++j)
        if (bit(j))
            s[static_cast<std::size_t>(j)] = '1';
    return s;
}

std::size_t NodeId::hash() const {
    std::uint64_t h = mix64(0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(depth_));
    for (std::uint64_t w : words_)
        h = mix64(h ^ w);
    return static_cast<std::size_t>(h);
}

void QueryLedger::arm_hit_watch(double absolute_threshold) {
    watch_armed_ = true;
    watch_threshold_ = absolute_threshold;
}

double QueryLedger::best_leaf_value() const {
    std::uint64_t bits = best_leaf_bits_.load(std::memory_order_relaxed);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
}

FieldOracle::FieldOracle(CovarianceProfile profile, int n, std::uint64_t seed, OracleMode mode,
                         OracleOptions options)
    : profile_(std::move(profile)),
      n_(n),
      seed_(seed),
      mode_(mode),
      options_(options),
      field_version_(kFieldVersion),
      root_(root_key(seed)) {
    if (n_ < 1)
        throw ValidationError("field: depth N must be at least 1");
    vp_.resize(static_cast<std::size_t>(n_) + 1);
    sigma_.resize(static_cast<std::size_t>(n_) + 1);
    const double nd = static_cast<double>(n_);
    vp_[0] = 0.0;
    for (int i = 1; i <= n_; ++i) {
        double v = nd * profile_.value_at(static_cast<double>(i) / nd);
        // A is non-decreasing; clamp away any 1-ulp rounding regression so
        // per-edge variances are never negative.
        if (v < vp_[static_cast<std::size_t>(i) - 1])
            v = vp_[static_cast<std::size_t>(i) - 1];
        vp_[static_cast<std::size_t>(i)] = v;
        sigma_[static_cast<std::size_t>(i)] =
            std::sqrt(v - vp_[static_cast<std::size_t>(i) - 1]);
    }
    {
        std::uint64_t bits;
        const double nanv = nan_double();
        std::memcpy(&bits, &nanv, sizeof bits);
        ledger_.best_leaf_bits_.store(bits, std::memory_order_relaxed);
    }
    ledger_.dedup_ = options_.exact_dedup;
    ledger_.record_history_ = options_.record_history;
}

double FieldOracle::chain_root_sum(const StreamKey& base, int base_depth) const {
    const double v = vp_[static_cast<std::size_t>(n_)] - vp_[static_cast<std::size_t>(base_depth)];
    if (v <= 0.0)
        return 0.0;
    return std::sqrt(v) *
           inv_normal_cdf(draw_unit(base, kSaltChainRoot + range_code(base_depth, n_)));
}

void FieldOracle::chain_split(const StreamKey& base, int lo, int mid, int hi, double g,
                              double& gl, double& gr) const {
    const double vl = vp_[static_cast<std::size_t>(mid)] - vp_[static_cast<std::size_t>(lo)];
    const double vr = vp_[static_cast<std::size_t>(hi)] - vp_[static_cast<std::size_t>(mid)];
    if (vl <= 0.0) {
        gl = 0.0;
        gr = g;
        return;
    }
    if (vr <= 0.0) {
        gl = g;
        gr = 0.0;
        return;
    }
    const double v = vl + vr;
    const double z = inv_normal_cdf(draw_unit(base, kSaltSplit + range_code(lo, hi)));
    gl = g * (vl / v) + std::sqrt(vl * vr / v) * z;
    gr = g - gl;
}

double FieldOracle::chain_increment(const StreamKey& base, int base_depth, int pos) const {
    int lo = base_depth, hi = n_;
    double g = chain_root_sum(base, base_depth);
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        double gl, gr;
        chain_split(base, lo, mid, hi, g, gl, gr);
        if (pos <= mid) {
            hi = mid;
            g = gl;
        } else {
            lo = mid;
            g = gr;
        }
    }
    return g;
}

// Accumulates the covered cells left to right as a flat fold, so a sum over
// any range equals the same-order sum of its minimal dyadic cover.
void FieldOracle::chain_range_acc(const StreamKey& base, int lo, int hi, double g, int a, int c,
                                  double& acc) const {
    if (a <= lo && hi <= c) {
        acc += g;
        return;
    }
    const int mid = lo + (hi - lo) / 2;
    double gl, gr;
    chain_split(base, lo, mid, hi, g, gl, gr);
    if (a < mid)
        chain_range_acc(base, lo, mid, gl, a, c, acc);
    if (c > mid)
        chain_range_acc(base, mid, hi, gr, a, c, acc);
}

void FieldOracle::walk_down(Walk& w, unsigned bit) const {
    const StreamKey k = child_key(w.node, bit);
    const int d = w.depth + 1;
    double inc;
    if (bit) {
        const double s = sigma_[static_cast<std::size_t>(d)];
        inc = s == 0.0 ? 0.0 : s * inv_normal_cdf(draw_unit(k, kSaltEdge));
        w.base = k;
        w.base_depth = d;
    } else {
        inc = chain_increment(w.base, w.base_depth, d);
    }
    w.node = k;
    w.depth = d;
    w.x += inc;
    w.last_inc = inc;
}

double FieldOracle::tail_sum(const Walk& w) const {
    if (w.depth >= n_)
        return 0.0;
    double acc = 0.0;
    chain_range_acc(w.base, w.base_depth, n_, chain_root_sum(w.base, w.base_depth), w.depth, n_,
                    acc);
    return acc;
}

FieldOracle::Walk FieldOracle::walk_to(const NodeId& v) const {
    if (v.depth() > n_)
        throw ValidationError("field: node deeper than the tree");
    Walk w = walk_root();
    for (int j = 0; j < v.depth(); ++j)
        walk_down(w, v.bit(j));
    return w;
}

void FieldOracle::guard_readable(const NodeId& v, const char* op) const {
    if (v.depth() > n_)
        throw ValidationError("field: node deeper than the tree");
    if (mode_ == OracleMode::leaf_only && v.depth() != n_)
        throw GuardError(std::string(op) + ": oracle is in leaf-only mode, internal vertices "
                                           "cannot be read");
}

void FieldOracle::charge(const Walk& w, const NodeId* id) {
    QueryLedger& l = ledger_;
    l.total_.fetch_add(1, std::memory_order_relaxed);
    if (w.depth == 0)
        return; // the root is pre-charged, X_root = 0 is known a priori
    bool fresh = true;
    if (l.dedup_) {
        std::lock_guard<std::mutex> lk(l.mu_);
        fresh = l.charged_.insert(w.node).second;
    }
    if (!fresh)
        return;
    const std::uint64_t u = l.unique_.fetch_add(1, std::memory_order_relaxed) + 1;
    if (w.depth == n_) {
        std::uint64_t cur = l.best_leaf_bits_.load(std::memory_order_relaxed);
        for (;;) {
            double curd;
            std::memcpy(&curd, &cur, sizeof curd);
            if (!(std::isnan(curd) || w.x > curd))
                break;
            std::uint64_t nb;
            std::memcpy(&nb, &w.x, sizeof nb);
            if (l.best_leaf_bits_.compare_exchange_weak(cur, nb, std::memory_order_relaxed))
                break;
        }
        if (l.watch_armed_ && w.x >= l.watch_threshold_ &&
            !l.hit_.load(std::memory_order_acquire)) {
            if (!l.hit_.exchange(true, std::memory_order_acq_rel))
                l.hit_tau_ = u;
        }
    }
    if (l.record_history_) {
        std::lock_guard<std::mutex> lk(l.mu_);
        l.history_.emplace_back(id ? *id : NodeId(), w.x);
    }
}

double FieldOracle::query(const NodeId& v) {
    guard_readable(v, "query");
    Walk w = walk_to(v);
    if (options_.record_history)
        charge(w, &v);
    else
        charge(w);
    return w.x;
}

double FieldOracle::peek(const NodeId& v) const {
    if (v.depth() > n_)
        throw ValidationError("field: node deeper than the tree");
    return walk_to(v).x;
}

std::vector<double> FieldOracle::trajectory(const NodeId& v) {
    guard_readable(v, "trajectory");
    if (mode_ == OracleMode::leaf_only)
        throw GuardError("trajectory: leaf-only mode exposes no internal values");
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(v.depth()) + 1);
    Walk w = walk_root();
    vals.push_back(0.0);
    for (int j = 0; j < v.depth(); ++j) {
        walk_down(w, v.bit(j));
        if (options_.record_history) {
            NodeId prefix = v.ancestor(j + 1);
            charge(w, &prefix);
        } else {
            charge(w);
        }
        vals.push_back(w.x);
    }
    return vals;
}

double FieldOracle::edge_increment(const NodeId& child) const {
    if (child.depth() < 1)
        throw ValidationError("edge_increment: the root has no incoming edge");
    if (child.depth() > n_)
        throw ValidationError("field: node deeper than the tree");
    return walk_to(child).last_inc;
}

double FieldOracle::leaf_estimate_charged(const Walk& w, const NodeId* id) {
    if (w.depth > n_)
        throw ValidationError("field: node deeper than the tree");
    Walk leaf = w;
    if (options_.exact_dedup) {
        while (leaf.depth < n_)
            walk_down(leaf, 0);
    } else {
        leaf.x = w.x + tail_sum(w);
        leaf.depth = n_;
    }
    charge(leaf, id);
    return leaf.x;
}

void FieldOracle::bulk_descendant_scan(const Walk& w0, int levels, bool as_leaf_estimates,
                                       std::vector<double>& out) {
    if (levels < 0 || w0.depth + levels > n_)
        throw ValidationError("descendant scan: block extends past the tree");
    if (levels > 22)
        throw GuardError("descendant scan: width over 2^22 values refused");
    out.clear();
    out.reserve(std::size_t(1) << levels);
    const int bottom = w0.depth + levels;

    if (options_.exact_dedup && as_leaf_estimates) {
        // Tails are walked edge by edge so each charge carries the real leaf
        // key and the exact query value.
        auto rec = [&](auto&& self, const Walk& cur) -> void {
            if (cur.depth == bottom) {
                out.push_back(leaf_estimate_charged(cur));
                return;
            }
            for (unsigned bit = 0; bit < 2; ++bit) {
                Walk c = cur;
                walk_down(c, bit);
                self(self, c);
            }
        };
        rec(rec, w0);
        return;
    }

    // One mutable cursor with undo instead of per-edge Walk copies. The cell
    // stack holds the minimal dyadic cover of (depth, N] in the current
    // base's bridge, leftmost cell on top, cells of shadowed bases below
    // `boundary`; a 0-edge refines the top cell down to its increment and a
    // 1-edge starts a fresh run. The cover is the one chain_range_acc visits,
    // in the same order, so estimates equal x + tail_sum bit-for-bit.
    struct Cell {
        int lo, hi;
        double g;
    };
    std::vector<Cell> stack;
    stack.reserve(512);
    std::size_t boundary = 0;

    if (w0.depth < n_) {
        Cell cur{w0.base_depth, n_, chain_root_sum(w0.base, w0.base_depth)};
        while (cur.lo < w0.depth) {
            const int mid = cur.lo + (cur.hi - cur.lo) / 2;
            double gl, gr;
            chain_split(w0.base, cur.lo, mid, cur.hi, cur.g, gl, gr);
            if (w0.depth >= mid) {
                cur = Cell{mid, cur.hi, gr};
            } else {
                stack.push_back(Cell{mid, cur.hi, gr});
                cur = Cell{cur.lo, mid, gl};
            }
        }
        stack.push_back(cur);
    }

    auto rec = [&](auto&& self, const StreamKey& node, const StreamKey& base, int base_depth,
                   int depth, double x) -> void {
        if (depth == bottom) {
            Walk t;
            t.node = node;
            t.base = base;
            t.base_depth = base_depth;
            t.last_inc = 0.0;
            if (as_leaf_estimates) {
                double tail = 0.0;
                for (std::size_t i = stack.size(); i > boundary; --i)
                    tail += stack[i - 1].g;
                t.depth = n_;
                t.x = x + tail;
            } else {
                t.depth = depth;
                t.x = x;
            }
            charge(t);
            out.push_back(t.x);
            return;
        }
        {
            // 0-child: refine the top cell (lo == depth) to position depth+1.
            const std::size_t sz = stack.size();
            Cell top = stack[sz - 1];
            stack.pop_back();
            Cell cur = top;
            while (cur.hi - cur.lo > 1) {
                const int mid = cur.lo + (cur.hi - cur.lo) / 2;
                double gl, gr;
                chain_split(base, cur.lo, mid, cur.hi, cur.g, gl, gr);
                stack.push_back(Cell{mid, cur.hi, gr});
                cur = Cell{cur.lo, mid, gl};
            }
            self(self, child_key(node, 0), base, base_depth, depth + 1, x + cur.g);
            stack.resize(sz - 1);
            stack.push_back(top);
        }
        {
            // 1-child: rebase onto a fresh run covering (depth+1, N].
            const StreamKey ck = child_key(node, 1);
            const std::size_t oldb = boundary;
            const std::size_t sz = stack.size();
            const double s = sigma_[static_cast<std::size_t>(depth) + 1];
            const double inc = s == 0.0 ? 0.0 : s * inv_normal_cdf(draw_unit(ck, kSaltEdge));
            boundary = sz;
            if (depth + 1 < n_)
                stack.push_back(Cell{depth + 1, n_, chain_root_sum(ck, depth + 1)});
            self(self, ck, ck, depth + 1, depth + 1, x + inc);
            stack.resize(sz);
            boundary = oldb;
        }
    };
    rec(rec, w0.node, w0.base, w0.base_depth, w0.depth, w0.x);
}

std::unordered_map<NodeId, double, NodeIdHash> FieldOracle::reveal_spindle_chain(const NodeId& v,
                                                                                 int k_slices) {
    if (mode_ != OracleMode::full_tree)
        throw GuardError("reveal_spindle_chain: requires a full-tree oracle");
    if (v.depth() > n_)
        throw ValidationError("field: node deeper than the tree");
    if (k_slices < 1 || k_slices > n_)
        throw ValidationError("reveal_spindle_chain: K must lie in [1, N]");

    const std::uint64_t card = spindle_chain_cardinality(n_, k_slices, v.depth());
    if (card > options_.reveal_budget)
        throw GuardError("reveal_spindle_chain: chain has " + std::to_string(card) +
                         " vertices, over the reveal budget of " +
                         std::to_string(options_.reveal_budget));

    std::unordered_map<NodeId, double, NodeIdHash> out;
    out.reserve(static_cast<std::size_t>(card));

    const auto bounds = spindle_boundaries(n_, k_slices);
    std::vector<unsigned> bits(static_cast<std::size_t>(n_), 0);

    // DFS of one spindle; skip_root avoids re-inserting the anchor shared
    // with the previous slice.
    auto dfs = [&](auto&& self, const Walk& w, int max_depth, bool skip_root) -> void {
        if (!skip_root) {
            NodeId id = NodeId::root();
            for (int j = 0; j < w.depth; ++j)
                id = id.child(bits[static_cast<std::size_t>(j)]);
            charge(w, &id);
            out.emplace(std::move(id), w.x);
        }
        if (w.depth >= max_depth)
            return;
        for (unsigned b = 0; b < 2; ++b) {
            Walk c = w;
            walk_down(c, b);
            bits[static_cast<std::size_t>(w.depth)] = b;
            self(self, c, max_depth, false);
        }
    };

    Walk anchor = walk_root();
    int k = 1;
    for (; k <= k_slices && bounds[static_cast<std::size_t>(k) - 1] <= v.depth(); ++k) {
        const int d0 = bounds[static_cast<std::size_t>(k) - 1];
        while (anchor.depth < d0) {
            const unsigned b = v.bit(anchor.depth);
            bits[static_cast<std::size_t>(anchor.depth)] = b;
            walk_down(anchor, b);
        }
        dfs(dfs, anchor, bounds[static_cast<std::size_t>(k)], k > 1);
    }
    return out;
}

} // namespace crem
