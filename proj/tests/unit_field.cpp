#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "crem/covariance.hpp"
#include "crem/errors.hpp"
#include "crem/field.hpp"
#include "crem/hardness.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace crem;

namespace {

NodeId node_of(const std::string& bits) { return NodeId::from_string(bits); }

std::vector<NodeId> random_nodes(int n, int count, std::mt19937_64& rng) {
    std::vector<NodeId> out;
    std::uniform_int_distribution<int> depth(1, n);
    std::uniform_int_distribution<int> bit(0, 1);
    for (int i = 0; i < count; ++i) {
        const int d = depth(rng);
        std::string s;
        for (int j = 0; j < d; ++j)
            s.push_back(bit(rng) ? '1' : '0');
        out.push_back(node_of(s));
    }
    return out;
}

} // namespace

TEST_CASE("node id round trips") {
    CHECK(NodeId::root().depth() == 0);
    CHECK(NodeId::root().to_string() == "");
    const NodeId v = node_of("0110100111010");
    CHECK(v.depth() == 13);
    CHECK(v.to_string() == "0110100111010");
    CHECK(v.ancestor(4).to_string() == "0110");
    CHECK(v.child(1).to_string() == "01101001110101");
    CHECK(v.ancestor(0) == NodeId::root());
    CHECK_THROWS_AS(node_of("01x"), ValidationError);
    CHECK_THROWS_AS(v.ancestor(14), ValidationError);
    CHECK_THROWS_AS(v.ancestor(-1), ValidationError);

    // Multi-word paths.
    std::string deep(130, '0');
    deep[0] = '1';
    deep[64] = '1';
    deep[129] = '1';
    const NodeId w = node_of(deep);
    CHECK(w.to_string() == deep);
    CHECK(w.bit(64) == 1);
    CHECK(w.bit(63) == 0);
}

TEST_CASE("field construction validation") {
    CHECK_THROWS_AS(FieldOracle(brw_profile(), 0, 1), ValidationError);
    CHECK_THROWS_AS(FieldOracle(brw_profile(), -4, 1), ValidationError);

    FieldOracle o(brw_profile(), 8, 1);
    CHECK(o.depth_n() == 8);
    CHECK_THROWS_AS(o.query(node_of("011011011")), ValidationError); // depth 9 > N
}

TEST_CASE("values replay identically across query orders and peek") {
    const CovarianceProfile p = two_slope_profile(0.25);
    std::mt19937_64 rng(31337);
    auto nodes = random_nodes(24, 40, rng);

    FieldOracle a(p, 24, 99);
    std::vector<double> va;
    for (const auto& v : nodes)
        va.push_back(a.query(v));

    FieldOracle b(p, 24, 99);
    std::vector<double> vb(nodes.size());
    for (std::size_t i = nodes.size(); i-- > 0;)
        vb[i] = b.query(nodes[i]);

    FieldOracle c(p, 24, 99);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        CHECK(va[i] == vb[i]);
        CHECK(c.peek(nodes[i]) == va[i]);
        const auto traj = c.trajectory(nodes[i]);
        REQUIRE(traj.size() == static_cast<std::size_t>(nodes[i].depth()) + 1);
        CHECK(traj.front() == 0.0);
        CHECK(traj.back() == va[i]);
        CHECK(c.query(nodes[i]) == va[i]);
    }

    // A different seed produces a different field.
    FieldOracle d(p, 24, 100);
    int diffs = 0;
    for (const auto& v : nodes)
        diffs += d.peek(v) != 0.0 && d.peek(v) != va[&v - nodes.data()];
    CHECK(diffs > 30);
}

TEST_CASE("edge increments recompose node values") {
    const CovarianceProfile p = square_profile(256);
    FieldOracle o(p, 20, 7);
    std::mt19937_64 rng(4);
    for (const auto& v : random_nodes(20, 25, rng)) {
        const double xv = o.query(v);
        const double xp = v.depth() == 1 ? 0.0 : o.query(v.ancestor(v.depth() - 1));
        CHECK(std::abs(xp + o.edge_increment(v) - xv) <= 1e-9 * (1.0 + std::abs(xv)));
    }
    CHECK_THROWS_AS(o.edge_increment(NodeId::root()), ValidationError);
}

TEST_CASE("trajectory increments have the profile variances") {
    const CovarianceProfile p = two_slope_profile(0.25);
    const int n = 16;
    const int s = 4000;
    std::vector<double> sq(n + 1, 0.0);
    const NodeId leaf = node_of("1010110010110101");
    for (int seed = 0; seed < s; ++seed) {
        FieldOracle o(p, n, 1000 + seed);
        const auto traj = o.trajectory(leaf);
        for (int i = 1; i <= n; ++i) {
            const double inc = traj[i] - traj[i - 1];
            sq[i] += inc * inc;
        }
    }
    for (int i = 1; i <= n; ++i) {
        const double want = 16.0 * (p.value_at(i / 16.0) - p.value_at((i - 1) / 16.0));
        const double got = sq[i] / s;
        FieldOracle o(p, n, 0);
        CHECK(o.edge_variance(i) == doctest::Approx(want).epsilon(1e-12));
        // Chi-square concentration: sd of the estimate is var*sqrt(2/s).
        CHECK(std::abs(got - want) <= 6.0 * want * std::sqrt(2.0 / s) + 1e-12);
    }
}

TEST_CASE("pair covariance follows the overlap profile") {
    const int n = 12;
    const CovarianceProfile p = brw_profile();
    const NodeId v = node_of("111111111111");
    for (const int q : {0, 3, 6, 9, 12}) {
        std::string wbits;
        for (int i = 0; i < q; ++i)
            wbits.push_back('1');
        if (q < n) {
            wbits.push_back('0');
            while (static_cast<int>(wbits.size()) < n)
                wbits.push_back('1');
        }
        const NodeId w = node_of(wbits);
        const int s = 4000;
        double sum = 0, sumsq = 0;
        for (int seed = 0; seed < s; ++seed) {
            FieldOracle o(p, n, 555 + seed);
            const double prod = o.query(v) * o.query(w);
            sum += prod;
            sumsq += prod * prod;
        }
        const double mean = sum / s;
        const double se = std::sqrt((sumsq / s - mean * mean) / s);
        CHECK(std::abs(mean - q) <= 6.0 * se + 1e-12);
    }
}

TEST_CASE("zero-variance regions produce exact zeros") {
    const auto flat_top = CovarianceProfile::from_breakpoints({0.0, 0.5, 1.0}, {0.0, 1.0, 1.0});
    FieldOracle o(flat_top, 16, 12345);
    for (int i = 9; i <= 16; ++i)
        CHECK(o.edge_variance(i) == 0.0);

    const NodeId mid = node_of("10110100");
    const double xm = o.query(mid);
    CHECK(std::isfinite(xm));
    CHECK(o.query(node_of("1011010000000000")) == xm);
    CHECK(o.query(node_of("1011010011111111")) == xm);
    CHECK(o.query(node_of("1011010001011010")) == xm);

    FieldOracle::Walk w = o.walk_root();
    for (int j = 0; j < 8; ++j)
        o.walk_down(w, mid.bit(j));
    CHECK(w.x == xm);
    CHECK(o.tail_sum(w) == 0.0);

    // Variance concentrated after a flat start: early values are exactly 0.
    const auto flat_start =
        CovarianceProfile::from_breakpoints({0.0, 0.4, 1.0}, {0.0, 0.0, 1.0});
    FieldOracle o2(flat_start, 20, 99);
    CHECK(o2.query(node_of("10110101")) == 0.0);
    CHECK(o2.query(node_of("101101")) == 0.0);
    CHECK(o2.query(node_of("10110101101101011011")) != 0.0);
}

TEST_CASE("bulk descendant scans equal per-edge folds bit-for-bit") {
    const CovarianceProfile p = two_slope_profile(0.25);
    FieldOracle o(p, 24, 2718);
    std::mt19937_64 rng(1);
    auto anchors = random_nodes(18, 12, rng);
    anchors.push_back(NodeId::root());

    for (const auto& v : anchors) {
        FieldOracle::Walk w0 = o.walk_root();
        for (int j = 0; j < v.depth(); ++j)
            o.walk_down(w0, v.bit(j));
        const int levels = std::min(6, 24 - v.depth());

        std::vector<double> values, estimates;
        o.bulk_descendant_scan(w0, levels, false, values);
        o.bulk_descendant_scan(w0, levels, true, estimates);
        REQUIRE(values.size() == (std::size_t(1) << levels));
        REQUIRE(estimates.size() == values.size());

        for (std::size_t i = 0; i < values.size(); ++i) {
            FieldOracle::Walk w = w0;
            for (int j = levels - 1; j >= 0; --j)
                o.walk_down(w, (i >> j) & 1u);
            CHECK(values[i] == w.x);
            CHECK(estimates[i] == w.x + o.tail_sum(w));
        }
    }
}

TEST_CASE("tail sums approximate the per-edge zero fold") {
    const CovarianceProfile p = square_profile(128);
    FieldOracle o(p, 32, 5);
    std::mt19937_64 rng(9);
    for (const auto& v : random_nodes(31, 20, rng)) {
        FieldOracle::Walk w = o.walk_root();
        for (int j = 0; j < v.depth(); ++j)
            o.walk_down(w, v.bit(j));
        const double tail = o.tail_sum(w);
        FieldOracle::Walk f = w;
        while (f.depth < 32)
            o.walk_down(f, 0);
        CHECK(std::abs((w.x + tail) - f.x) <= 1e-9 * (1.0 + std::abs(f.x)));
    }
}

TEST_CASE("leaf estimates charge as depth-N reads") {
    const CovarianceProfile p = two_slope_profile(0.4);
    FieldOracle o(p, 20, 8);
    FieldOracle::Walk w = o.walk_root();
    for (const unsigned b : {1u, 0u, 1u, 1u})
        o.walk_down(w, b);

    const double est = o.leaf_estimate_charged(w);
    CHECK(est == w.x + o.tail_sum(w));
    CHECK(o.ledger().best_leaf_value() == est);

    // With exact dedup the estimate is the actual leaf read, replayable.
    OracleOptions opt;
    opt.exact_dedup = true;
    FieldOracle o2(p, 20, 8, OracleMode::full_tree, opt);
    FieldOracle::Walk w2 = o2.walk_root();
    for (const unsigned b : {1u, 0u, 1u, 1u})
        o2.walk_down(w2, b);
    const double est2 = o2.leaf_estimate_charged(w2);
    CHECK(est2 == o2.query(node_of("10110000000000000000")));
    CHECK(std::abs(est2 - est) <= 1e-9 * (1.0 + std::abs(est)));
}

TEST_CASE("ledger counts charges and the root is pre-charged") {
    FieldOracle o(brw_profile(), 10, 3);
    CHECK(o.ledger().total_calls() == 0);
    CHECK(o.query(NodeId::root()) == 0.0);
    CHECK(o.ledger().total_calls() == 1);
    CHECK(o.ledger().unique_queries() == 0);

    const NodeId leaf = node_of("0101010101");
    o.query(leaf);
    CHECK(o.ledger().total_calls() == 2);
    CHECK(o.ledger().unique_queries() == 1);

    // Without exact dedup every non-root charge counts as unique.
    o.query(leaf);
    CHECK(o.ledger().unique_queries() == 2);

    OracleOptions opt;
    opt.exact_dedup = true;
    FieldOracle d(brw_profile(), 10, 3, OracleMode::full_tree, opt);
    d.query(leaf);
    d.query(leaf);
    d.query(leaf.ancestor(4));
    d.query(leaf.ancestor(4));
    CHECK(d.ledger().total_calls() == 4);
    CHECK(d.ledger().unique_queries() == 2);
}

TEST_CASE("best leaf value and hit watch") {
    FieldOracle probe(brw_profile(), 6, 17);
    std::vector<std::pair<NodeId, double>> leaves;
    for (int i = 0; i < 64; ++i) {
        std::string s;
        for (int j = 5; j >= 0; --j)
            s.push_back(((i >> j) & 1) ? '1' : '0');
        leaves.emplace_back(node_of(s), probe.peek(node_of(s)));
    }
    CHECK(probe.ledger().total_calls() == 0); // peek is uncharged

    double best = -1e300;
    std::size_t best_at = 0;
    for (std::size_t i = 0; i < leaves.size(); ++i)
        if (leaves[i].second > best) {
            best = leaves[i].second;
            best_at = i;
        }

    FieldOracle o(brw_profile(), 6, 17);
    o.ledger().arm_hit_watch(best - 1e-12);
    for (const auto& [node, value] : leaves)
        o.query(node);
    CHECK(o.ledger().hit());
    CHECK(o.ledger().hit_tau() == best_at + 1);
    CHECK(o.ledger().best_leaf_value() == best);

    // A watch above the maximum never trips.
    FieldOracle o2(brw_profile(), 6, 17);
    o2.ledger().arm_hit_watch(best + 1e-9);
    for (const auto& [node, value] : leaves)
        o2.query(node);
    CHECK(!o2.ledger().hit());
}

TEST_CASE("history records fresh charges in order") {
    OracleOptions opt;
    opt.exact_dedup = true;
    opt.record_history = true;
    FieldOracle o(brw_profile(), 8, 21, OracleMode::full_tree, opt);
    const NodeId a = node_of("01011010");
    const NodeId b = node_of("0101");
    o.query(a);
    o.query(b);
    o.query(a); // deduplicated: no fresh charge, no history entry
    REQUIRE(o.ledger().history().size() == 2);
    CHECK(o.ledger().history()[0].first == a);
    CHECK(o.ledger().history()[1].first == b);
    CHECK(o.ledger().history()[0].second == o.peek(a));

    // Bulk scans stream values without materializing ids.
    std::vector<double> out;
    FieldOracle::Walk w = o.walk_root();
    o.bulk_descendant_scan(w, 2, false, out);
    REQUIRE(o.ledger().history().size() == 6);
    CHECK(o.ledger().history()[2].first == NodeId());
    CHECK(o.ledger().history()[2].second == out[0]);
}

TEST_CASE("leaf-only mode guards internal reads") {
    FieldOracle o(brw_profile(), 12, 5, OracleMode::leaf_only);
    const NodeId leaf = node_of("010110101101");
    CHECK(std::isfinite(o.query(leaf)));
    CHECK_THROWS_AS(o.query(leaf.ancestor(5)), GuardError);
    CHECK_THROWS_AS(o.trajectory(leaf), GuardError);
    CHECK_THROWS_AS(o.reveal_spindle_chain(leaf, 3), GuardError);

    // The same reads are fine on a full-tree oracle.
    FieldOracle f(brw_profile(), 12, 5);
    CHECK(std::isfinite(f.query(leaf.ancestor(5))));
    CHECK(f.trajectory(leaf).size() == 13);
}

TEST_CASE("reveal spindle chain matches the closed-form cardinality") {
    const int n = 12, k = 3;
    FieldOracle o(brw_profile(), n, 77);
    const NodeId v = node_of("101101011011");
    auto chain = o.reveal_spindle_chain(v, k);
    CHECK(chain.size() == spindle_chain_cardinality(n, k, v.depth()));
    CHECK(chain.count(v) == 1);
    CHECK(chain.count(NodeId::root()) == 1);

    // Every revealed value replays through query bit-for-bit.
    for (const auto& [node, value] : chain)
        CHECK(o.query(node) == value);

    // Reveals are charged once per distinct vertex.
    FieldOracle o2(brw_profile(), n, 77);
    o2.reveal_spindle_chain(v, k);
    CHECK(o2.ledger().unique_queries() == chain.size() - 1); // root is pre-charged
    CHECK_THROWS_AS(o2.reveal_spindle_chain(v, 0), ValidationError);
    CHECK_THROWS_AS(o2.reveal_spindle_chain(v, n + 1), ValidationError);

    OracleOptions tight;
    tight.reveal_budget = 3;
    FieldOracle o3(brw_profile(), n, 77, OracleMode::full_tree, tight);
    CHECK_THROWS_AS(o3.reveal_spindle_chain(v, k), GuardError);
}

TEST_CASE("bulk scan guards") {
    FieldOracle o(brw_profile(), 30, 1);
    std::vector<double> out;
    FieldOracle::Walk w = o.walk_root();
    CHECK_THROWS_AS(o.bulk_descendant_scan(w, 23, false, out), GuardError);
    CHECK_THROWS_AS(o.bulk_descendant_scan(w, 31, false, out), ValidationError);
    CHECK_THROWS_AS(o.bulk_descendant_scan(w, -1, false, out), ValidationError);

    // levels = 0 charges the cursor itself.
    o.bulk_descendant_scan(w, 0, false, out);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == 0.0);
}
