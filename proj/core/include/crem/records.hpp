#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace crem {

// One search or hitting-time run, serialized as one JSON object per line
// with sorted keys; absent optionals are omitted, so identical inputs give
// byte-identical lines. elapsed_ms is the only non-reproducible field and is
// excluded from determinism digests.
struct RunRecord {
    std::string algorithm;
    std::string profile_id;
    std::uint64_t profile_hash = 0;
    int n = 0;
    std::optional<int> m;
    std::optional<int> ell;
    std::uint64_t seed = 0;
    std::optional<double> x;           // hitting runs only
    std::optional<bool> hit;
    std::optional<std::uint64_t> tau;
    std::optional<std::uint64_t> budget;
    std::optional<std::uint64_t> restarts;
    double best_value = 0.0;
    std::uint64_t unique_queries = 0;
    std::uint64_t total_calls = 0;
    double elapsed_ms = 0.0;
    std::string field_version;
};

// One steep-chain Monte Carlo estimate.
struct HardnessRecord {
    std::string profile_id;
    std::uint64_t profile_hash = 0;
    int n = 0;
    int k = 0;
    double epsilon = 0.0;
    double gamma = 0.0;   // eps log2 / K, the rate the bound certifies
    double bound = 0.0;   // 2K 2^(-eps N / K)
    std::uint64_t samples = 0;
    std::uint64_t hits = 0;
    double empirical_p = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool violation = false;
    std::uint64_t seed = 0;
    double elapsed_ms = 0.0;
    std::string field_version;
};

std::string record_line(const RunRecord& r, bool include_elapsed = true);
std::string record_line(const HardnessRecord& r, bool include_elapsed = true);

void write_records_jsonl(const std::string& path, const std::vector<RunRecord>& records);
void write_records_jsonl(const std::string& path, const std::vector<HardnessRecord>& records);

// Concatenated record lines with elapsed_ms stripped: equal digests mean
// byte-identical record files up to timing.
std::string records_digest(const std::vector<RunRecord>& records);
std::string records_digest(const std::vector<HardnessRecord>& records);

// CSV with one row per (algorithm, profile_id, n, m, ell, x) group, in first
// appearance order: run count, mean and stddev of best_value/N, hit
// fraction, mean tau, mean unique queries, mean total calls.
std::string summarize_runs_csv(const std::vector<RunRecord>& records);

void write_text_file(const std::string& path, const std::string& content);

} // namespace crem
