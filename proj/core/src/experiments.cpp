#include "crem/experiments.hpp"

#include "crem/errors.hpp"
#include "crem/field.hpp"
#include "crem/parallel.hpp"
#include "crem/rng.hpp"
#include "crem/version.hpp"

#include <chrono>
#include <cstdlib>
#include <stdexcept>

namespace crem {

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

} // namespace

RunRecord execute_run(const RunSpec& spec, std::uint64_t seed,
                      std::vector<double>* proxy_errors) {
    RunRecord rec;
    rec.algorithm = algorithm_name(spec.algorithm);
    rec.profile_id = spec.profile_id;
    rec.profile_hash = spec.profile.content_hash();
    rec.n = spec.n;
    rec.seed = seed;
    rec.field_version = kFieldVersion;
    if (spec.algorithm != Algorithm::random_leaf)
        rec.m = spec.m;
    if (spec.algorithm == Algorithm::leaf_only_greedy)
        rec.ell = spec.ell;

    if (spec.x.has_value()) {
        HittingResult h = hitting_time_run(spec.profile, spec.n, seed, spec.algorithm, spec.m,
                                           spec.ell, *spec.x, spec.budget);
        rec.x = *spec.x;
        rec.hit = h.hit;
        rec.tau = h.tau;
        rec.budget = spec.budget;
        rec.restarts = h.restarts;
        rec.best_value = h.best_value;
        rec.unique_queries = h.unique_queries;
        rec.total_calls = h.total_calls;
        rec.elapsed_ms = h.elapsed_seconds * 1e3;
        return rec;
    }

    const auto t0 = std::chrono::steady_clock::now();
    SearchResult r;
    switch (spec.algorithm) {
    case Algorithm::block_greedy: {
        FieldOracle oracle(spec.profile, spec.n, seed, OracleMode::full_tree);
        r = block_greedy(oracle, spec.m);
        break;
    }
    case Algorithm::leaf_only_greedy: {
        FieldOracle oracle(spec.profile, spec.n, seed, OracleMode::leaf_only);
        r = leaf_only_greedy(oracle, spec.m, spec.ell, spec.instrumented);
        break;
    }
    case Algorithm::random_leaf: {
        FieldOracle oracle(spec.profile, spec.n, seed, OracleMode::full_tree);
        r = random_leaf_baseline(oracle, spec.budget, seed);
        rec.budget = spec.budget;
        break;
    }
    }
    rec.best_value = r.value;
    rec.unique_queries = r.unique_queries;
    rec.total_calls = r.total_calls;
    rec.elapsed_ms = ms_since(t0);
    if (proxy_errors != nullptr)
        proxy_errors->insert(proxy_errors->end(), r.proxy_errors.begin(), r.proxy_errors.end());
    return rec;
}

std::vector<RunRecord> execute_runs(const RunSpec& spec, const std::vector<std::uint64_t>& seeds,
                                    unsigned jobs) {
    std::vector<RunRecord> out(seeds.size());
    parallel_for_index(seeds.size(), jobs,
                       [&](std::size_t i) { out[i] = execute_run(spec, seeds[i]); });
    return out;
}

HardnessRecord execute_hardness(const CovarianceProfile& profile, const std::string& profile_id,
                                int n, const SteepParams& params, std::uint64_t samples,
                                std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    SteepMcReport mc = steep_chain_probability_mc(profile, n, params, samples, seed);
    HardnessRecord rec;
    rec.profile_id = profile_id;
    rec.profile_hash = profile.content_hash();
    rec.n = mc.n;
    rec.k = mc.k_slices;
    rec.epsilon = mc.epsilon;
    rec.gamma = mc.gamma_max;
    rec.bound = mc.bound;
    rec.samples = mc.samples;
    rec.hits = mc.hits;
    rec.empirical_p = mc.empirical_p;
    rec.ci_low = mc.ci_low;
    rec.ci_high = mc.ci_high;
    rec.violation = mc.violation;
    rec.seed = seed;
    rec.field_version = kFieldVersion;
    rec.elapsed_ms = ms_since(t0);
    return rec;
}

std::vector<std::uint64_t> parse_seed_spec(const std::string& text) {
    if (text.empty())
        throw ValidationError("empty seed spec");
    const auto parse_u64 = [&](const std::string& tok) {
        std::size_t pos = 0;
        std::uint64_t v = 0;
        try {
            v = std::stoull(tok, &pos);
        } catch (const std::exception&) {
            throw ValidationError("bad seed value '" + tok + "' in seed spec '" + text + "'");
        }
        if (pos != tok.size())
            throw ValidationError("bad seed value '" + tok + "' in seed spec '" + text + "'");
        return v;
    };

    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        if (text.find(':', colon + 1) != std::string::npos)
            throw ValidationError("seed spec '" + text + "' has more than one ':'");
        const std::uint64_t base = parse_u64(text.substr(0, colon));
        const std::uint64_t count = parse_u64(text.substr(colon + 1));
        if (count == 0)
            throw ValidationError("seed spec '" + text + "' asks for zero seeds");
        if (count > (1u << 24))
            throw ValidationError("seed spec '" + text + "' asks for too many seeds");
        std::vector<std::uint64_t> seeds(count);
        for (std::uint64_t j = 0; j < count; ++j)
            seeds[j] = fanout_seed(base, j);
        return seeds;
    }

    std::vector<std::uint64_t> seeds;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string tok =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (tok.empty())
            throw ValidationError("empty seed entry in seed spec '" + text + "'");
        seeds.push_back(parse_u64(tok));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return seeds;
}

} // namespace crem
