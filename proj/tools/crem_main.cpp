#include "CLI11.hpp"
#include "json.hpp"

#include "crem/covariance.hpp"
#include "crem/errors.hpp"
#include "crem/experiments.hpp"
#include "crem/hardness.hpp"
#include "crem/parallel.hpp"
#include "crem/profile_io.hpp"
#include "crem/records.hpp"
#include "crem/rng.hpp"
#include "crem/search.hpp"
#include "crem/version.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace crem;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

fs::path ensure_dir(const std::string& out) {
    fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    fs::create_directories(dir);
    return dir;
}

void write_path_dat(const fs::path& file, const PathFunction& f, const std::string& header) {
    std::string s = "# " + header + "\n";
    for (std::size_t i = 0; i < f.grid.size(); ++i)
        s += fmt17(f.grid[i]) + " " + fmt17(f.values[i]) + "\n";
    write_text_file(file.string(), s);
}

std::string regime_string(const ThresholdReport& r) {
    if (std::abs(r.x_star - r.x_c) <= 1e-9)
        return "x* = x_c";
    return r.x_star < r.x_c ? "x* < x_c" : "x* > x_c";
}

// The plot-ready files shared by `analyze --out` and `paths`.
std::vector<std::string> write_profile_files(const fs::path& dir, const CovarianceProfile& p) {
    const CovarianceProfile hull = concave_hull(p);
    save_profile_file((dir / "profile.dat").string(), p);
    save_profile_file((dir / "hull.dat").string(), hull);
    write_path_dat(dir / "natural_path.dat", natural_speed_path(p),
                   "t  z*(t) = sqrt(2 log 2) int_0^t sqrt(a)");
    write_path_dat(dir / "optimal_path.dat", optimal_path(p),
                   "t  z(t) = int_0^t v, v the optimal feasible speed");
    write_path_dat(dir / "optimal_speed.dat", optimal_speed(p),
                   "t  v(t), constant per piece (value on the piece ending at t)");
    return {"profile.dat", "hull.dat", "natural_path.dat", "optimal_path.dat",
            "optimal_speed.dat"};
}

void print_threshold_summary(const std::string& id, const CovarianceProfile& p,
                             const ThresholdReport& r, double gap) {
    std::printf("profile        %s  (%zu pieces, hash %016llx)\n", id.c_str(), p.piece_count(),
                static_cast<unsigned long long>(p.content_hash()));
    std::printf("concave        %s  (max hull gap %.3g)\n", r.concave ? "yes" : "no", gap);
    std::printf("x*  algorithmic threshold      %.17g\n", r.x_star);
    std::printf("x_s ground-state density       %.17g\n", r.x_s);
    std::printf("x_c condensation (= beta_c)    %.17g\n", r.x_c);
    std::printf("t_G end of contact segment     %.17g\n", r.t_g);
    std::printf("beta_G                         %.17g\n", r.beta_g);
    std::printf("x_G Gibbs-accessible density   %.17g\n", r.x_g);
    const std::string regime = regime_string(r);
    if (regime == "x* = x_c")
        std::printf("regime         x* = x_c  (greedy reach meets the condensation value)\n");
    else if (regime == "x* < x_c")
        std::printf("regime         x* < x_c  (gap between greedy reach and condensation)\n");
    else
        std::printf("regime         x* > x_c  (condensation sets in below the greedy plateau)\n");
}

void write_threshold_record(const fs::path& dir, const std::string& id,
                            const CovarianceProfile& p, const ThresholdReport& r, double gap) {
    nlohmann::json j;
    j["profile_id"] = id;
    j["profile_hash"] = p.content_hash();
    j["pieces"] = p.piece_count();
    j["concave"] = r.concave;
    j["hull_gap"] = gap;
    j["sqrt_two_log_two"] = r.sqrt_two_log_two;
    j["x_star"] = r.x_star;
    j["x_s"] = r.x_s;
    j["x_c"] = r.x_c;
    j["beta_c"] = r.beta_c;
    j["t_g"] = r.t_g;
    j["beta_g"] = r.beta_g;
    j["x_g"] = r.x_g;
    j["regime"] = regime_string(r);
    j["field_version"] = kFieldVersion;
    write_text_file((dir / "thresholds.jsonl").string(), j.dump() + "\n");
}

Algorithm pick_algorithm(const std::string& requested, bool ell_given) {
    if (!requested.empty())
        return algorithm_from_name(requested);
    return ell_given ? Algorithm::leaf_only_greedy : Algorithm::block_greedy;
}

void require_m(Algorithm alg, bool m_given) {
    if (alg != Algorithm::random_leaf && !m_given)
        throw ValidationError(std::string(algorithm_name(alg)) + " needs --M");
}

void require_ell(Algorithm alg, bool ell_given) {
    if (alg == Algorithm::leaf_only_greedy && !ell_given)
        throw ValidationError("leaf_only_greedy needs --ell");
}

struct SweepCell {
    std::size_t index = 0;
    std::string profile_arg;
    int n = 0;
    int m = 0;
    int ell = -1;
    std::string alg_name;
    std::optional<double> x;
};

// base:count seed specs keep the base visible so sweeps can hash it per cell.
void parse_seed_base(const std::string& text, std::uint64_t& base, std::uint64_t& count) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ValidationError("sweep seeds must be base:count, got '" + text + "'");
    const std::string b = text.substr(0, colon), c = text.substr(colon + 1);
    std::size_t pos = 0;
    try {
        base = std::stoull(b, &pos);
        if (pos != b.size())
            throw std::invalid_argument(b);
        count = std::stoull(c, &pos);
        if (pos != c.size())
            throw std::invalid_argument(c);
    } catch (const std::exception&) {
        throw ValidationError("bad seed spec '" + text + "'");
    }
    if (count == 0)
        throw ValidationError("seed spec '" + text + "' asks for zero seeds");
}

} // namespace

int main(int argc, char** argv) {
    if (const char* pin = std::getenv("CREM_FIELD_VERSION")) {
        if (std::string(pin) != kFieldVersion) {
            std::fprintf(stderr,
                         "crem: field version mismatch: environment pins '%s', this build "
                         "provides '%s'\n",
                         pin, kFieldVersion);
            return 1;
        }
    }

    CLI::App app{"continuous random energy model: thresholds, field simulation, search, "
                 "hardness certificates"};
    app.set_version_flag("--version",
                         std::string(kLibraryVersion) + " (" + kFieldVersion + ")");
    app.set_config("--config", "",
                   "Key=value file; subcommand options live in a [subcommand] section");
    app.require_subcommand(1);

    // analyze ------------------------------------------------------------
    std::string a_profile, a_out;
    auto* analyze = app.add_subcommand(
        "analyze", "Report thresholds and regime for a covariance profile");
    analyze->configurable();
    analyze->add_option("--profile", a_profile,
                        "Builtin name (brw, square, concave_square, two_slope[:c1]) or a "
                        "breakpoint file")
        ->required();
    analyze->add_option("--out", a_out,
                        "Directory to write thresholds.jsonl and plot-ready .dat files");
    analyze->callback([&] {
        std::string id;
        const CovarianceProfile p = resolve_profile(a_profile, &id);
        const ThresholdReport r = thresholds(p);
        const double gap = hull_gap(p, concave_hull(p));
        print_threshold_summary(id, p, r, gap);
        if (!a_out.empty()) {
            const fs::path dir = ensure_dir(a_out);
            write_threshold_record(dir, id, p, r, gap);
            const auto files = write_profile_files(dir, p);
            std::printf("wrote          %s/thresholds.jsonl", dir.string().c_str());
            for (const auto& f : files)
                std::printf(" %s/%s", dir.string().c_str(), f.c_str());
            std::printf("\n");
        }
    });

    // paths ----------------------------------------------------------------
    std::string p_profile, p_out = ".";
    auto* paths = app.add_subcommand(
        "paths", "Write profile, hull, and speed-path data files for plotting");
    paths->configurable();
    paths->add_option("--profile", p_profile, "Profile name or breakpoint file")->required();
    paths->add_option("--out", p_out, "Output directory");
    paths->callback([&] {
        std::string id;
        const CovarianceProfile p = resolve_profile(p_profile, &id);
        const fs::path dir = ensure_dir(p_out);
        const auto files = write_profile_files(dir, p);
        std::printf("profile        %s\n", id.c_str());
        std::printf("wrote         ");
        for (const auto& f : files)
            std::printf(" %s/%s", dir.string().c_str(), f.c_str());
        std::printf("\n");
    });

    // run --------------------------------------------------------------
    std::string r_profile, r_alg, r_seeds = "0:1", r_out = ".", r_format = "csv";
    int r_n = 0, r_m = 0, r_ell = 0;
    double r_x = 0;
    std::uint64_t r_budget = 1u << 20;
    bool r_instrumented = false;
    unsigned r_jobs = 1;
    auto* run = app.add_subcommand("run", "Run a search algorithm over seeds and record it");
    run->configurable();
    run->add_option("--profile", r_profile, "Profile name or breakpoint file")->required();
    run->add_option("--N", r_n, "Tree depth")->required();
    run->add_option("--M", r_m, "Block width (levels per greedy block)");
    run->add_option("--ell", r_ell,
                    "Leaf-proxy depth; giving it selects leaf_only_greedy by default");
    run->add_option("--algorithm", r_alg, "block_greedy, leaf_only_greedy, or random_leaf")
        ->check(CLI::IsMember({"block_greedy", "leaf_only_greedy", "random_leaf"}));
    run->add_option("--x", r_x, "Hitting target: stop at the first leaf with X >= x N");
    run->add_option("--seeds", r_seeds, "base:count (fanned out) or comma-separated seeds");
    run->add_option("--budget", r_budget,
                    "Unique-query budget for hitting runs; draw count for random_leaf");
    run->add_flag("--instrumented", r_instrumented,
                  "Record proxy errors of leaf-only candidate scoring");
    run->add_option("--out", r_out, "Output directory");
    run->add_option("--format", r_format, "records: records.jsonl only; csv: also summary.csv")
        ->check(CLI::IsMember({"records", "csv"}));
    run->add_option("--jobs", r_jobs, "Worker threads (0 = one per hardware thread)");
    run->callback([&] {
        const bool ell_given = run->count("--ell") > 0;
        const Algorithm alg = pick_algorithm(r_alg, ell_given);
        require_m(alg, run->count("--M") > 0);
        require_ell(alg, ell_given);
        RunSpec spec;
        spec.profile = resolve_profile(r_profile, &spec.profile_id);
        spec.n = r_n;
        spec.algorithm = alg;
        spec.m = r_m;
        spec.ell = ell_given ? r_ell : -1;
        if (run->count("--x") > 0)
            spec.x = r_x;
        spec.budget = r_budget;
        spec.instrumented = r_instrumented;
        const auto seeds = parse_seed_spec(r_seeds);
        std::vector<RunRecord> records;
        std::vector<double> proxy_errors;
        if (r_instrumented) {
            records.reserve(seeds.size());
            for (const auto s : seeds)
                records.push_back(execute_run(spec, s, &proxy_errors));
        } else {
            records = execute_runs(spec, seeds, r_jobs);
        }
        const fs::path dir = ensure_dir(r_out);
        write_records_jsonl((dir / "records.jsonl").string(), records);
        std::string wrote = (dir / "records.jsonl").string();
        const std::string csv = summarize_runs_csv(records);
        if (r_format == "csv") {
            write_text_file((dir / "summary.csv").string(), csv);
            wrote += " " + (dir / "summary.csv").string();
        }
        if (r_instrumented && !proxy_errors.empty()) {
            std::string s = "# proxy estimate - true value, scan order, runs in seed order\n";
            for (const double e : proxy_errors)
                s += fmt17(e) + "\n";
            write_text_file((dir / "proxy_errors.dat").string(), s);
            wrote += " " + (dir / "proxy_errors.dat").string();
        }
        std::printf("%s", csv.c_str());
        std::printf("records        %zu\n", records.size());
        std::printf("wrote          %s\n", wrote.c_str());
    });

    // hardness ---------------------------------------------------------
    std::string h_profile, h_alg, h_seeds = "0:1", h_out = ".", h_format = "csv";
    std::vector<int> h_ns;
    int h_k = 0, h_m = 0, h_ell = 0;
    double h_eps = 0, h_x = 0;
    std::uint64_t h_samples = 10000, h_budget = 1u << 20;
    unsigned h_jobs = 1;
    auto* hardness = app.add_subcommand(
        "hardness", "Steep-chain probability bound checks, optional hitting-time contrast");
    hardness->configurable();
    hardness->add_option("--profile", h_profile, "Profile name or breakpoint file")->required();
    hardness->add_option("--N", h_ns, "Tree depths (comma list)")
        ->required()
        ->delimiter(',');
    hardness->add_option("--K", h_k, "Slice count (with --epsilon)");
    hardness->add_option("--epsilon", h_eps, "Steepness margin (with --K)");
    hardness->add_option("--x", h_x,
                         "Energy target; derives (K, epsilon) when they are not given "
                         "(requires x > x*) and enables the hitting contrast with --budget");
    hardness->add_option("--samples", h_samples, "Monte Carlo samples per depth");
    hardness->add_option("--seeds", h_seeds,
                         "base:count or comma list; first seed also seeds the Monte Carlo");
    hardness->add_option("--budget", h_budget, "Hitting budget; with --x adds hitting runs");
    hardness->add_option("--M", h_m, "Block width for the hitting contrast");
    hardness->add_option("--ell", h_ell, "Leaf-proxy depth for the hitting contrast");
    hardness->add_option("--algorithm", h_alg, "Hitting algorithm")
        ->check(CLI::IsMember({"block_greedy", "leaf_only_greedy", "random_leaf"}));
    hardness->add_option("--out", h_out, "Output directory");
    hardness->add_option("--format", h_format, "records or csv")
        ->check(CLI::IsMember({"records", "csv"}));
    hardness->add_option("--jobs", h_jobs, "Worker threads for hitting runs");
    hardness->callback([&] {
        std::string id;
        const CovarianceProfile p = resolve_profile(h_profile, &id);
        const bool k_given = hardness->count("--K") > 0;
        const bool eps_given = hardness->count("--epsilon") > 0;
        const bool x_given = hardness->count("--x") > 0;
        const bool budget_given = hardness->count("--budget") > 0;
        if (k_given != eps_given)
            throw ValidationError("--K and --epsilon go together");
        std::optional<SteepParams> params;
        if (k_given) {
            if (h_k < 1)
                throw ValidationError("--K must be >= 1");
            if (!(h_eps > 0))
                throw ValidationError("--epsilon must be > 0");
            params = SteepParams{h_eps, h_k, h_eps * 0.6931471805599453094 / h_k};
        } else if (x_given) {
            const ThresholdReport r = thresholds(p);
            if (h_x > r.x_star)
                params = steep_threshold_params(p, h_x);
            else if (!budget_given)
                params = steep_threshold_params(p, h_x); // reports why x is out of range
            else
                std::printf("steep parameters skipped: x = %.6g <= x* = %.6g, hitting "
                            "contrast only\n",
                            h_x, r.x_star);
        } else {
            throw ValidationError("hardness needs --K/--epsilon or --x");
        }

        const auto seeds = parse_seed_spec(h_seeds);
        const fs::path dir = ensure_dir(h_out);
        std::string wrote;

        if (params.has_value()) {
            std::printf("steep chain:   K=%d epsilon=%.6g gamma_max=%.6g\n", params->k_slices,
                        params->epsilon, params->gamma_max);
            std::printf("%6s %12s %12s %25s %9s %s\n", "N", "bound", "p_hat", "ci95", "samples",
                        "violation");
            std::vector<HardnessRecord> hrecs;
            hrecs.reserve(h_ns.size());
            for (std::size_t i = 0; i < h_ns.size(); ++i) {
                HardnessRecord rec = execute_hardness(p, id, h_ns[i], *params, h_samples,
                                                      fanout_seed(seeds[0], i));
                std::printf("%6d %12.5e %12.5e [%10.4e,%10.4e] %9llu %s\n", rec.n, rec.bound,
                            rec.empirical_p, rec.ci_low, rec.ci_high,
                            static_cast<unsigned long long>(rec.samples),
                            rec.violation ? "VIOLATION" : "no");
                hrecs.push_back(std::move(rec));
            }
            write_records_jsonl((dir / "hardness.jsonl").string(), hrecs);
            wrote += (dir / "hardness.jsonl").string();
        }

        if (x_given && budget_given) {
            const bool ell_given = hardness->count("--ell") > 0;
            const Algorithm alg = pick_algorithm(h_alg, ell_given);
            require_m(alg, hardness->count("--M") > 0);
            require_ell(alg, ell_given);
            std::vector<RunRecord> records;
            for (const int n : h_ns) {
                RunSpec spec;
                spec.profile_id = id;
                spec.profile = p;
                spec.n = n;
                spec.algorithm = alg;
                spec.m = h_m;
                spec.ell = ell_given ? h_ell : -1;
                spec.x = h_x;
                spec.budget = h_budget;
                auto batch = execute_runs(spec, seeds, h_jobs);
                std::size_t hits = 0;
                for (const auto& r : batch)
                    hits += r.hit.value_or(false) ? 1 : 0;
                std::printf("hitting        N=%d x=%.6g budget=%llu: %zu/%zu hit\n", n, h_x,
                            static_cast<unsigned long long>(h_budget), hits, batch.size());
                records.insert(records.end(), batch.begin(), batch.end());
            }
            write_records_jsonl((dir / "records.jsonl").string(), records);
            wrote += (wrote.empty() ? "" : " ") + (dir / "records.jsonl").string();
            if (h_format == "csv") {
                write_text_file((dir / "summary.csv").string(), summarize_runs_csv(records));
                wrote += " " + (dir / "summary.csv").string();
            }
        }
        if (!wrote.empty())
            std::printf("wrote          %s\n", wrote.c_str());
    });

    // sweep --------------------------------------------------------------
    std::vector<std::string> s_profiles, s_algs;
    std::vector<int> s_ns, s_ms, s_ells;
    std::vector<double> s_xs;
    std::string s_seeds = "0:1", s_out = ".", s_format = "csv";
    std::uint64_t s_budget = 1u << 20;
    unsigned s_jobs = 1;
    auto* sweep = app.add_subcommand(
        "sweep", "Cartesian product of profiles x parameters, one record per run");
    sweep->configurable();
    sweep->add_option("--profile", s_profiles, "Profile names or files (comma list)")
        ->required()
        ->delimiter(',');
    sweep->add_option("--N", s_ns, "Tree depths (comma list)")->required()->delimiter(',');
    sweep->add_option("--M", s_ms, "Block widths (comma list)")->delimiter(',');
    sweep->add_option("--ell", s_ells, "Leaf-proxy depths (comma list)")->delimiter(',');
    sweep->add_option("--x", s_xs, "Hitting targets (comma list; omit for quality runs)")
        ->delimiter(',');
    sweep->add_option("--algorithm", s_algs, "Algorithms (comma list)")->delimiter(',');
    sweep->add_option("--seeds", s_seeds, "base:count; seed base is hashed per cell");
    sweep->add_option("--budget", s_budget, "Hitting budget / random_leaf draws");
    sweep->add_option("--out", s_out, "Output directory");
    sweep->add_option("--format", s_format, "records or csv")
        ->check(CLI::IsMember({"records", "csv"}));
    sweep->add_option("--jobs", s_jobs, "Worker threads (cells run in parallel)");
    sweep->callback([&] {
        std::uint64_t base = 0, count = 0;
        parse_seed_base(s_seeds, base, count);
        if (s_algs.empty())
            s_algs = {s_ells.empty() ? "block_greedy" : "leaf_only_greedy"};
        const std::vector<int> ms = s_ms.empty() ? std::vector<int>{0} : s_ms;
        const std::vector<int> ells = s_ells.empty() ? std::vector<int>{-1} : s_ells;
        std::vector<std::optional<double>> xs;
        if (s_xs.empty())
            xs.push_back(std::nullopt);
        else
            for (const double x : s_xs)
                xs.emplace_back(x);

        std::vector<SweepCell> cells;
        for (const auto& prof : s_profiles)
            for (const int n : s_ns)
                for (const int m : ms)
                    for (const auto& alg : s_algs)
                        for (const int ell : ells)
                            for (const auto& x : xs) {
                                SweepCell c;
                                c.index = cells.size();
                                c.profile_arg = prof;
                                c.n = n;
                                c.m = m;
                                c.ell = ell;
                                c.alg_name = alg;
                                c.x = x;
                                cells.push_back(std::move(c));
                            }

        std::vector<std::vector<RunRecord>> per_cell(cells.size());
        std::vector<std::string> cell_error(cells.size());
        std::vector<std::string> cell_error_kind(cells.size());
        parallel_for_index(cells.size(), s_jobs, [&](std::size_t i) {
            const SweepCell& c = cells[i];
            try {
                RunSpec spec;
                spec.profile = resolve_profile(c.profile_arg, &spec.profile_id);
                spec.n = c.n;
                spec.algorithm = algorithm_from_name(c.alg_name);
                spec.m = c.m;
                spec.ell = c.ell;
                spec.x = c.x;
                spec.budget = s_budget;
                const std::uint64_t cell_base = fanout_seed(base, c.index);
                auto& out = per_cell[i];
                out.reserve(count);
                for (std::uint64_t j = 0; j < count; ++j)
                    out.push_back(execute_run(spec, fanout_seed(cell_base, j)));
            } catch (const ValidationError& e) {
                cell_error[i] = e.what();
                cell_error_kind[i] = "validation";
            } catch (const GuardError& e) {
                cell_error[i] = e.what();
                cell_error_kind[i] = "guard";
            }
        });

        std::vector<RunRecord> records;
        std::string errors;
        std::size_t failed = 0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!cell_error[i].empty()) {
                ++failed;
                const SweepCell& c = cells[i];
                nlohmann::json j;
                j["cell"] = c.index;
                j["profile"] = c.profile_arg;
                j["n"] = c.n;
                j["m"] = c.m;
                j["ell"] = c.ell;
                j["algorithm"] = c.alg_name;
                if (c.x.has_value())
                    j["x"] = *c.x;
                j["error"] = cell_error[i];
                j["type"] = cell_error_kind[i];
                errors += j.dump() + "\n";
                continue;
            }
            records.insert(records.end(), per_cell[i].begin(), per_cell[i].end());
        }

        const fs::path dir = ensure_dir(s_out);
        write_records_jsonl((dir / "records.jsonl").string(), records);
        write_text_file((dir / "errors.jsonl").string(), errors);
        std::string wrote = (dir / "records.jsonl").string() + " " +
                            (dir / "errors.jsonl").string();
        const std::string csv = summarize_runs_csv(records);
        if (s_format == "csv") {
            write_text_file((dir / "summary.csv").string(), csv);
            wrote += " " + (dir / "summary.csv").string();
        }
        std::printf("%s", csv.c_str());
        std::printf("cells          %zu total, %zu ok, %zu failed\n", cells.size(),
                    cells.size() - failed, failed);
        std::printf("records        %zu\n", records.size());
        std::printf("wrote          %s\n", wrote.c_str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "crem: %s\n", e.what());
        return 1;
    } catch (const GuardError& e) {
        std::fprintf(stderr, "crem: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "crem: unexpected error: %s\n", e.what());
        return 3;
    }
    return 0;
}
