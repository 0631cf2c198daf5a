#include "crem/records.hpp"

#include "crem/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace crem {

namespace {

using nlohmann::json;

// json orders object keys lexicographically, which is what makes the lines
// byte-stable.
json to_json(const RunRecord& r, bool include_elapsed) {
    json j;
    j["algorithm"] = r.algorithm;
    j["profile_id"] = r.profile_id;
    j["profile_hash"] = r.profile_hash;
    j["n"] = r.n;
    if (r.m)
        j["m"] = *r.m;
    if (r.ell)
        j["ell"] = *r.ell;
    j["seed"] = r.seed;
    if (r.x)
        j["x"] = *r.x;
    if (r.hit)
        j["hit"] = *r.hit;
    if (r.tau)
        j["tau"] = *r.tau;
    if (r.budget)
        j["budget"] = *r.budget;
    if (r.restarts)
        j["restarts"] = *r.restarts;
    j["best_value"] = r.best_value;
    j["unique_queries"] = r.unique_queries;
    j["total_calls"] = r.total_calls;
    if (include_elapsed)
        j["elapsed_ms"] = r.elapsed_ms;
    j["field_version"] = r.field_version;
    return j;
}

json to_json(const HardnessRecord& r, bool include_elapsed) {
    json j;
    j["profile_id"] = r.profile_id;
    j["profile_hash"] = r.profile_hash;
    j["n"] = r.n;
    j["k"] = r.k;
    j["epsilon"] = r.epsilon;
    j["gamma"] = r.gamma;
    j["bound"] = r.bound;
    j["samples"] = r.samples;
    j["hits"] = r.hits;
    j["empirical_p"] = r.empirical_p;
    j["ci_low"] = r.ci_low;
    j["ci_high"] = r.ci_high;
    j["violation"] = r.violation;
    j["seed"] = r.seed;
    if (include_elapsed)
        j["elapsed_ms"] = r.elapsed_ms;
    j["field_version"] = r.field_version;
    return j;
}

template <class R>
std::string lines_of(const std::vector<R>& records, bool include_elapsed) {
    std::string out;
    for (const R& r : records) {
        out += record_line(r, include_elapsed);
        out += '\n';
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string record_line(const RunRecord& r, bool include_elapsed) {
    return to_json(r, include_elapsed).dump();
}

std::string record_line(const HardnessRecord& r, bool include_elapsed) {
    return to_json(r, include_elapsed).dump();
}

void write_records_jsonl(const std::string& path, const std::vector<RunRecord>& records) {
    write_text_file(path, lines_of(records, true));
}

void write_records_jsonl(const std::string& path, const std::vector<HardnessRecord>& records) {
    write_text_file(path, lines_of(records, true));
}

std::string records_digest(const std::vector<RunRecord>& records) {
    return lines_of(records, false);
}

std::string records_digest(const std::vector<HardnessRecord>& records) {
    return lines_of(records, false);
}

std::string summarize_runs_csv(const std::vector<RunRecord>& records) {
    struct Group {
        std::string algorithm, profile_id, m, ell, x;
        int n = 0;
        std::size_t runs = 0;
        double sum = 0.0, sum_sq = 0.0;
        std::size_t hits = 0, hit_runs = 0;
        double tau_sum = 0.0;
        double unique_sum = 0.0, total_sum = 0.0;
    };
    std::vector<Group> groups;
    std::map<std::string, std::size_t> index;

    for (const RunRecord& r : records) {
        std::string m = r.m ? std::to_string(*r.m) : "";
        std::string ell = r.ell ? std::to_string(*r.ell) : "";
        std::string x = r.x ? fmt_double(*r.x) : "";
        std::string key =
            r.algorithm + '|' + r.profile_id + '|' + std::to_string(r.n) + '|' + m + '|' + ell +
            '|' + x;
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, groups.size()).first;
            groups.push_back(Group{r.algorithm, r.profile_id, m, ell, x, r.n, 0, 0.0, 0.0, 0, 0,
                                   0.0, 0.0, 0.0});
        }
        Group& g = groups[it->second];
        ++g.runs;
        const double per_n = r.best_value / r.n;
        g.sum += per_n;
        g.sum_sq += per_n * per_n;
        if (r.hit) {
            ++g.hit_runs;
            if (*r.hit)
                ++g.hits;
            if (r.tau)
                g.tau_sum += static_cast<double>(*r.tau);
        }
        g.unique_sum += static_cast<double>(r.unique_queries);
        g.total_sum += static_cast<double>(r.total_calls);
    }

    std::string csv = "algorithm,profile_id,n,m,ell,x,runs,mean_value_per_n,sd_value_per_n,"
                      "hit_fraction,mean_tau,mean_unique_queries,mean_total_calls\n";
    for (const Group& g : groups) {
        const double nruns = static_cast<double>(g.runs);
        const double mean = g.sum / nruns;
        double var = g.runs > 1 ? (g.sum_sq - g.sum * g.sum / nruns) / (nruns - 1.0) : 0.0;
        if (var < 0.0)
            var = 0.0;
        csv += g.algorithm + ',' + g.profile_id + ',' + std::to_string(g.n) + ',' + g.m + ',' +
               g.ell + ',' + g.x + ',' + std::to_string(g.runs) + ',' + fmt_double(mean) + ',' +
               fmt_double(std::sqrt(var)) + ',';
        csv += g.hit_runs ? fmt_double(static_cast<double>(g.hits) /
                                       static_cast<double>(g.hit_runs))
                          : std::string();
        csv += ',';
        csv += g.hit_runs ? fmt_double(g.tau_sum / static_cast<double>(g.hit_runs))
                          : std::string();
        csv += ',';
        csv += fmt_double(g.unique_sum / nruns) + ',' + fmt_double(g.total_sum / nruns) + '\n';
    }
    return csv;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw ValidationError("failed writing '" + path + "'");
}

} // namespace crem
