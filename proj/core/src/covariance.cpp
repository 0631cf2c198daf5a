#include "crem/covariance.hpp"

#include "crem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <set>

namespace crem {

namespace {

constexpr double kLog2 = 0.6931471805599453094;
constexpr double kSqrt2Log2 = 1.1774100225154747;
constexpr double kContactTol = 1e-12;
constexpr double kConcaveTol = 1e-9;

// Prefix sums of int sqrt(slope) dt over the pieces; c[k] = value at ts[k].
// thresholds(), natural_speed_path() and x_s all share this fold so the
// advertised bit-exact identities hold.
std::vector<double> cum_sqrt_integral(const CovarianceProfile& p) {
    std::vector<double> c(p.piece_count() + 1, 0.0);
    for (std::size_t i = 0; i < p.piece_count(); ++i)
        c[i + 1] = c[i] + std::sqrt(p.slope(i)) * (p.breakpoint_t(i + 1) - p.breakpoint_t(i));
    return c;
}

std::vector<double> merged_grid(const CovarianceProfile& p, std::size_t grid_points) {
    std::vector<double> g;
    if (grid_points < 2)
        grid_points = 2;
    g.reserve(grid_points + p.piece_count() + 1);
    for (std::size_t i = 0; i < grid_points; ++i)
        g.push_back(static_cast<double>(i) / static_cast<double>(grid_points - 1));
    g.insert(g.end(), p.grid().begin(), p.grid().end());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

} // namespace

CovarianceProfile CovarianceProfile::from_breakpoints(std::vector<double> ts,
                                                      std::vector<double> as) {
    if (ts.size() != as.size())
        throw ValidationError("profile: t and A lists differ in length");
    if (ts.size() < 2)
        throw ValidationError("profile: need at least the two endpoint breakpoints");
    for (double v : ts)
        if (!std::isfinite(v))
            throw ValidationError("profile: non-finite t breakpoint");
    for (double v : as)
        if (!std::isfinite(v))
            throw ValidationError("profile: non-finite A breakpoint");
    if (ts.front() != 0.0 || as.front() != 0.0)
        throw ValidationError("profile: first breakpoint must be (0, 0)");
    if (ts.back() != 1.0 || as.back() != 1.0)
        throw ValidationError("profile: last breakpoint must be (1, 1)");
    for (std::size_t i = 1; i < ts.size(); ++i) {
        if (!(ts[i] > ts[i - 1]))
            throw ValidationError("profile: t breakpoints must be strictly increasing");
        if (as[i] < as[i - 1])
            throw ValidationError("profile: A must be non-decreasing");
    }
    CovarianceProfile p;
    p.ts_ = std::move(ts);
    p.as_ = std::move(as);
    p.slopes_.resize(p.ts_.size() - 1);
    for (std::size_t i = 0; i + 1 < p.ts_.size(); ++i)
        p.slopes_[i] = (p.as_[i + 1] - p.as_[i]) / (p.ts_[i + 1] - p.ts_[i]);
    return p;
}

std::size_t CovarianceProfile::piece_containing(double t) const {
    if (t <= ts_.front())
        return 0;
    if (t >= ts_.back())
        return piece_count() - 1;
    // First breakpoint >= t; with the left-limit convention t belongs to the
    // piece ending there.
    auto it = std::lower_bound(ts_.begin(), ts_.end(), t);
    std::size_t j = static_cast<std::size_t>(it - ts_.begin());
    return j == 0 ? 0 : j - 1;
}

double CovarianceProfile::value_at(double t) const {
    if (t <= 0.0)
        return 0.0;
    if (t >= 1.0)
        return 1.0;
    std::size_t i = piece_containing(t);
    return as_[i] + slopes_[i] * (t - ts_[i]);
}

double CovarianceProfile::density_at(double t) const {
    return slopes_[piece_containing(t)];
}

std::uint64_t CovarianceProfile::content_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto absorb = [&h](const std::vector<double>& v) {
        for (double d : v) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xffULL;
                h *= 1099511628211ULL;
            }
        }
    };
    absorb(ts_);
    absorb(as_);
    return h;
}

CovarianceProfile concave_hull(const CovarianceProfile& p) {
    const auto& ts = p.grid();
    const auto& as = p.knots();
    std::vector<double> hx, hy;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        // Pop while the middle point is on or below the chord, keeping hull
        // slopes strictly decreasing (collinear points are dropped, which
        // makes the hull idempotent bit-for-bit).
        while (hx.size() >= 2) {
            double x1 = hx[hx.size() - 2], y1 = hy[hy.size() - 2];
            double x2 = hx.back(), y2 = hy.back();
            if ((y2 - y1) * (ts[i] - x2) <= (as[i] - y2) * (x2 - x1)) {
                hx.pop_back();
                hy.pop_back();
            } else {
                break;
            }
        }
        hx.push_back(ts[i]);
        hy.push_back(as[i]);
    }
    return CovarianceProfile::from_breakpoints(std::move(hx), std::move(hy));
}

double hull_gap(const CovarianceProfile& p, const CovarianceProfile& hull) {
    double g = 0.0;
    for (std::size_t i = 0; i < p.grid().size(); ++i)
        g = std::max(g, hull.value_at(p.breakpoint_t(i)) - p.breakpoint_a(i));
    return g;
}

ThresholdReport thresholds(const CovarianceProfile& p) {
    ThresholdReport r;
    r.sqrt_two_log_two = kSqrt2Log2;

    const auto cums = cum_sqrt_integral(p);
    r.x_star = kSqrt2Log2 * cums.back();

    const CovarianceProfile hull = concave_hull(p);
    const auto hull_cums = cum_sqrt_integral(hull);
    r.x_s = kSqrt2Log2 * hull_cums.back();
    r.x_c = kSqrt2Log2 / std::sqrt(hull.slope(0));
    r.beta_c = r.x_c;
    r.concave = hull_gap(p, hull) <= kConcaveTol;

    // t_g: end of the initial contact segment. A and the hull are both linear
    // between adjacent profile breakpoints, so contact at every breakpoint of
    // a prefix means contact on the whole prefix interval.
    std::size_t m = 0;
    while (m + 1 < p.grid().size() &&
           hull.value_at(p.breakpoint_t(m + 1)) - p.breakpoint_a(m + 1) <= kContactTol)
        ++m;
    r.t_g = p.breakpoint_t(m);

    // Slope scale for beta_g: hull slope at 1 when contact reaches 1,
    // otherwise the essential sup of the profile density beyond t_g.
    double s_sel;
    if (r.t_g == 1.0) {
        s_sel = hull.slope(hull.piece_count() - 1);
    } else {
        s_sel = 0.0;
        for (std::size_t i = 0; i < p.piece_count(); ++i)
            if (p.breakpoint_t(i + 1) > r.t_g)
                s_sel = std::max(s_sel, p.slope(i));
    }

    if (s_sel == 0.0) {
        // Density vanishes past t_g, so A already sits at 1 there: the Gibbs
        // measure is never trapped and the accessible energy is the ground
        // state for every beta.
        r.beta_g = std::numeric_limits<double>::infinity();
        std::size_t j = hull.piece_count();
        while (j > 0 && hull.slope(j - 1) == 0.0)
            --j;
        r.x_g = kSqrt2Log2 * hull_cums[j];
    } else {
        r.beta_g = kSqrt2Log2 / std::sqrt(s_sel);
        // t_0(beta_g): rightmost point where the hull density still exceeds
        // 2 log 2 / beta_g^2 = s_sel. Hull slopes decrease strictly.
        std::size_t j = 0;
        while (j < hull.piece_count() && hull.slope(j) > s_sel)
            ++j;
        const double t0 = hull.breakpoint_t(j);
        r.x_g = kSqrt2Log2 * hull_cums[j] + r.beta_g * (1.0 - p.value_at(t0));
    }
    return r;
}

double PathFunction::at(double t) const {
    if (grid.empty())
        throw ValidationError("path: empty grid");
    if (t <= grid.front())
        return kind == Kind::cumulative ? values.front() : values.front();
    if (t >= grid.back())
        return values.back();
    auto it = std::lower_bound(grid.begin(), grid.end(), t);
    std::size_t j = static_cast<std::size_t>(it - grid.begin());
    if (kind == Kind::derivative)
        return values[j];
    const double t0 = grid[j - 1], t1 = grid[j];
    const double w = (t - t0) / (t1 - t0);
    return values[j - 1] + w * (values[j] - values[j - 1]);
}

PathFunction to_derivative(const PathFunction& z) {
    if (z.kind != PathFunction::Kind::cumulative)
        throw ValidationError("to_derivative: path is already a derivative");
    if (z.grid.size() != z.values.size() || z.grid.size() < 2)
        throw ValidationError("to_derivative: malformed path");
    PathFunction b;
    b.kind = PathFunction::Kind::derivative;
    b.grid = z.grid;
    b.values.resize(z.values.size());
    for (std::size_t i = 1; i < z.grid.size(); ++i)
        b.values[i] = (z.values[i] - z.values[i - 1]) / (z.grid[i] - z.grid[i - 1]);
    b.values[0] = b.values[1];
    return b;
}

double path_integral(const PathFunction& b) {
    if (b.kind != PathFunction::Kind::derivative)
        throw ValidationError("path_integral: expected a derivative-kind path");
    double s = 0.0;
    for (std::size_t i = 1; i < b.grid.size(); ++i)
        s += b.values[i] * (b.grid[i] - b.grid[i - 1]);
    return s;
}

double energy_functional(const CovarianceProfile& p, const PathFunction& b, double t) {
    if (b.kind != PathFunction::Kind::derivative)
        throw ValidationError("energy_functional: path must be a speed (derivative kind)");
    if (b.grid.size() != b.values.size() || b.grid.size() < 2 || b.grid.front() != 0.0)
        throw ValidationError("energy_functional: malformed path");
    if (!(t >= 0.0) || t > 1.0 + 1e-12)
        throw ValidationError("energy_functional: t outside [0, 1]");
    if (b.grid.back() < t - 1e-12)
        throw ValidationError("energy_functional: path does not cover [0, t]");
    if (t <= 0.0)
        return 0.0;

    std::vector<double> cuts;
    cuts.reserve(b.grid.size() + p.grid().size() + 1);
    for (double g : b.grid)
        if (g > 0.0 && g < t)
            cuts.push_back(g);
    for (double g : p.grid())
        if (g > 0.0 && g < t)
            cuts.push_back(g);
    cuts.push_back(t);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double w = 0.0;
    double lo = 0.0;
    for (double hi : cuts) {
        const double mid = lo + 0.5 * (hi - lo);
        const double a = p.density_at(mid);
        const double bv = b.at(mid);
        if (a > 0.0) {
            w += bv * bv / (2.0 * a) * (hi - lo);
        } else if (bv != 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        lo = hi;
    }
    return -kLog2 * t + w;
}

PathFunction natural_speed_path(const CovarianceProfile& p, std::size_t grid_points) {
    const auto cums = cum_sqrt_integral(p);
    PathFunction z;
    z.kind = PathFunction::Kind::cumulative;
    z.grid = merged_grid(p, grid_points);
    z.values.reserve(z.grid.size());
    for (double t : z.grid) {
        const std::size_t i = p.piece_containing(t);
        z.values.push_back(kSqrt2Log2 *
                           (cums[i] + std::sqrt(p.slope(i)) * (t - p.breakpoint_t(i))));
    }
    return z;
}

PathFunction optimal_speed(const CovarianceProfile& p) {
    const CovarianceProfile hull = concave_hull(p);
    PathFunction v;
    v.kind = PathFunction::Kind::derivative;
    v.grid = p.grid();
    v.values.resize(v.grid.size(), 0.0);
    for (std::size_t i = 0; i < p.piece_count(); ++i) {
        const double a = p.slope(i);
        double val = 0.0;
        if (a > 0.0) {
            // The hull piece containing this profile piece; hull breakpoints
            // are a subset of profile breakpoints so pieces never straddle.
            const double ah = hull.density_at(p.breakpoint_t(i + 1));
            val = a * std::sqrt(2.0 * kLog2 / ah);
        }
        v.values[i + 1] = val;
    }
    v.values[0] = v.values.size() > 1 ? v.values[1] : 0.0;
    return v;
}

PathFunction optimal_path(const CovarianceProfile& p, std::size_t grid_points) {
    const PathFunction v = optimal_speed(p);
    std::vector<double> cums(p.piece_count() + 1, 0.0);
    for (std::size_t i = 0; i < p.piece_count(); ++i)
        cums[i + 1] = cums[i] + v.values[i + 1] * (p.breakpoint_t(i + 1) - p.breakpoint_t(i));
    PathFunction z;
    z.kind = PathFunction::Kind::cumulative;
    z.grid = merged_grid(p, grid_points);
    z.values.reserve(z.grid.size());
    for (double t : z.grid) {
        const std::size_t i = p.piece_containing(t);
        z.values.push_back(cums[i] + v.values[i + 1] * (t - p.breakpoint_t(i)));
    }
    return z;
}

VariationalReport variational_check(const CovarianceProfile& p, std::size_t samples,
                                    std::uint64_t seed, double tol) {
    const PathFunction v = optimal_speed(p);
    const CovarianceProfile hull = concave_hull(p);
    const auto hull_cums = cum_sqrt_integral(hull);
    const std::size_t k = p.piece_count();

    VariationalReport rep;
    rep.samples = samples;
    rep.tol = tol;

    std::vector<double> dt(k);
    for (std::size_t i = 0; i < k; ++i)
        dt[i] = p.breakpoint_t(i + 1) - p.breakpoint_t(i);

    // E(b, t) is linear in t inside each piece, so its sign everywhere is
    // decided at the breakpoints.
    double iv = 0.0;
    double max_e = 0.0;
    {
        double w = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double a = p.slope(i);
            const double vi = v.values[i + 1];
            if (a > 0.0)
                w += vi * vi / (2.0 * a) * dt[i];
            iv += vi * dt[i];
            max_e = std::max(max_e, -kLog2 * p.breakpoint_t(i + 1) + w);
        }
    }
    rep.integral_v = iv;
    rep.max_energy = max_e;
    rep.integral_gap = std::abs(iv - kSqrt2Log2 * hull_cums.back());

    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> fac(0.5, 1.5);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples; ++s) {
        // b = f * v with per-piece factors, then the largest uniform rescale
        // keeping E(b, .) <= 0; by the variational principle int b can then
        // never beat int v.
        double w = 0.0;
        double ib = 0.0;
        double c2 = 1.0;
        std::vector<double> f(k);
        for (std::size_t i = 0; i < k; ++i)
            f[i] = fac(gen);
        for (std::size_t i = 0; i < k; ++i) {
            const double a = p.slope(i);
            const double bi = f[i] * v.values[i + 1];
            if (a > 0.0)
                w += bi * bi / (2.0 * a) * dt[i];
            ib += bi * dt[i];
            const double budget = kLog2 * p.breakpoint_t(i + 1);
            if (w > budget)
                c2 = std::min(c2, budget / w);
        }
        const double got = std::sqrt(c2) * ib;
        best = std::max(best, got);
        if (got > iv + tol)
            ++rep.violations;
    }
    rep.best_perturbed = best;
    return rep;
}

CovarianceProfile brw_profile() {
    return CovarianceProfile::from_breakpoints({0.0, 1.0}, {0.0, 1.0});
}

namespace {
CovarianceProfile sampled_profile(std::size_t grid, double (*f)(double)) {
    if (grid < 1)
        throw ValidationError("builtin profile: grid must be positive");
    std::vector<double> ts(grid + 1), as(grid + 1);
    for (std::size_t i = 0; i <= grid; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(grid);
        ts[i] = t;
        as[i] = f(t);
    }
    ts[grid] = 1.0;
    as[grid] = 1.0;
    return CovarianceProfile::from_breakpoints(std::move(ts), std::move(as));
}
} // namespace

CovarianceProfile square_profile(std::size_t grid) {
    return sampled_profile(grid, +[](double t) { return t * t; });
}

CovarianceProfile concave_square_profile(std::size_t grid) {
    return sampled_profile(grid, +[](double t) { return t * (2.0 - t); });
}

CovarianceProfile two_slope_profile(double c1) {
    if (!(c1 > 0.0) || !(c1 < 1.0))
        throw ValidationError("two_slope: c1 must lie strictly inside (0, 1)");
    return CovarianceProfile::from_breakpoints({0.0, 0.5, 1.0}, {0.0, c1, 1.0});
}

CovarianceProfile builtin_profile(const std::string& name) {
    if (name == "brw")
        return brw_profile();
    if (name == "square")
        return square_profile();
    if (name == "concave_square")
        return concave_square_profile();
    if (name == "two_slope")
        return two_slope_profile();
    throw ValidationError("unknown builtin profile '" + name +
                          "' (expected brw, square, concave_square or two_slope)");
}

} // namespace crem
