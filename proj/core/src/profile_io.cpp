#include "crem/profile_io.hpp"

#include "crem/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace crem {

CovarianceProfile load_profile_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open profile file '" + path + "'");
    std::vector<double> ts, as;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::istringstream row(line);
        double t = 0.0, a = 0.0;
        if (!(row >> t >> a))
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": expected two numbers 't A'");
        std::string rest;
        if (row >> rest)
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": trailing content '" + rest + "'");
        ts.push_back(t);
        as.push_back(a);
    }
    try {
        return CovarianceProfile::from_breakpoints(std::move(ts), std::move(as));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void save_profile_file(const std::string& path, const CovarianceProfile& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot open '" + path + "' for writing");
    out << "# covariance profile breakpoints: t A\n";
    char buf[96];
    for (std::size_t i = 0; i <= p.piece_count(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.breakpoint_t(i), p.breakpoint_a(i));
        out << buf;
    }
    if (!out)
        throw ValidationError("failed writing '" + path + "'");
}

CovarianceProfile resolve_profile(const std::string& name_or_path, std::string* canon_id) {
    if (canon_id)
        *canon_id = name_or_path;
    if (name_or_path == "brw" || name_or_path == "square" ||
        name_or_path == "concave_square" || name_or_path == "two_slope")
        return builtin_profile(name_or_path);
    const std::string prefix = "two_slope:";
    if (name_or_path.rfind(prefix, 0) == 0) {
        const std::string arg = name_or_path.substr(prefix.size());
        std::size_t used = 0;
        double c1 = 0.0;
        try {
            c1 = std::stod(arg, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != arg.size() || arg.empty())
            throw ValidationError("two_slope expects a numeric midpoint value, got '" + arg +
                                  "'");
        return two_slope_profile(c1);
    }
    return load_profile_file(name_or_path);
}

} // namespace crem
