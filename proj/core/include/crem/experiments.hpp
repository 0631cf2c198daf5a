#pragma once

#include "crem/covariance.hpp"
#include "crem/hardness.hpp"
#include "crem/records.hpp"
#include "crem/search.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace crem {

// One experiment cell: a search algorithm at fixed parameters, run once per
// seed. When `x` is set the run is a hitting-time run against `budget`;
// otherwise it is a quality run (one full pass of the algorithm, with `budget`
// doubling as the draw count for the random-leaf baseline).
struct RunSpec {
    std::string profile_id;
    CovarianceProfile profile;
    int n = 0;
    Algorithm algorithm = Algorithm::block_greedy;
    int m = 0;
    int ell = -1;
    std::optional<double> x;
    std::uint64_t budget = 1u << 20;
    bool instrumented = false;
};

// Executes one run and fills a complete record (profile hash, field version,
// elapsed time included). For instrumented leaf-only quality runs the proxy
// errors are appended to *proxy_errors when it is non-null.
RunRecord execute_run(const RunSpec& spec, std::uint64_t seed,
                      std::vector<double>* proxy_errors = nullptr);

// Executes the same run once per seed. Records come back in seed order
// regardless of `jobs`; jobs = 0 means one worker per hardware thread.
std::vector<RunRecord> execute_runs(const RunSpec& spec,
                                    const std::vector<std::uint64_t>& seeds, unsigned jobs = 1);

// One steep-chain Monte Carlo cell at depth n, wrapped into a record.
HardnessRecord execute_hardness(const CovarianceProfile& profile, const std::string& profile_id,
                                int n, const SteepParams& params, std::uint64_t samples,
                                std::uint64_t seed);

// Seed lists are written either as "base:count", which fans `count` seeds out
// of `base` deterministically, or as a comma-separated list of literal seeds
// ("7" alone is the one-element list).
std::vector<std::uint64_t> parse_seed_spec(const std::string& text);

} // namespace crem
