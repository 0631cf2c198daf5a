#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace crem {

// Piecewise-linear covariance shape A on [0,1]: A(0)=0, A(1)=1, non-decreasing.
// The derivative a = A' (the variance density) is piecewise constant; we use
// the left-limit convention, density_at(t) = slope of the piece whose right
// endpoint is >= t, so density_at(breakpoint) is the slope arriving from the
// left. All integrals below are exact per piece, no quadrature error.
class CovarianceProfile {
public:
    // Breakpoints must start at (0,0), end at (1,1), have strictly increasing
    // t and non-decreasing A. Throws ValidationError otherwise.
    static CovarianceProfile from_breakpoints(std::vector<double> ts, std::vector<double> as);

    std::size_t piece_count() const { return ts_.size() - 1; }
    double breakpoint_t(std::size_t i) const { return ts_[i]; }
    double breakpoint_a(std::size_t i) const { return as_[i]; }
    // Slope on (ts_[i], ts_[i+1]].
    double slope(std::size_t i) const { return slopes_[i]; }
    const std::vector<double>& grid() const { return ts_; }
    const std::vector<double>& knots() const { return as_; }

    // A(t) for t in [0,1].
    double value_at(double t) const;
    // a(t) with the left-limit convention; density_at(0) is the first slope.
    double density_at(double t) const;
    // Index of the piece containing t under the left-limit convention.
    std::size_t piece_containing(double t) const;

    // FNV-1a over the breakpoint doubles; stable identity for records.
    std::uint64_t content_hash() const;

private:
    std::vector<double> ts_, as_, slopes_;
};

// Least concave majorant, restricted to the profile's breakpoints (which is
// exact for piecewise-linear A). Idempotent bit-for-bit; collinear interior
// points are dropped, so hull slopes are strictly decreasing.
CovarianceProfile concave_hull(const CovarianceProfile& p);

// Max |hull(t_i) - A(t_i)| over the profile's breakpoints.
double hull_gap(const CovarianceProfile& p, const CovarianceProfile& hull);

struct ThresholdReport {
    double sqrt_two_log_two = 0; // sqrt(2 log 2), the binary-entropy speed
    double x_star = 0;           // algorithmic threshold sqrt(2log2) * int sqrt(a)
    double x_s = 0;              // ground state    sqrt(2log2) * int sqrt(hull')
    double x_c = 0;              // condensation value sqrt(2log2)/sqrt(sup hull')
    double beta_c = 0;           // critical inverse temperature, equals x_c
    double t_g = 0;              // end of the initial contact segment {A = hull}
    double beta_g = 0;           // largest beta whose Gibbs energy path is monotone
    double x_g = 0;              // Gibbs-accessible energy density at beta_g
    bool concave = false;        // hull coincides with the profile (tol 1e-9)
};

ThresholdReport thresholds(const CovarianceProfile& p);

// A path on [0, horizon]. kind == cumulative: values are z(grid[i]), linearly
// interpolated between grid points. kind == derivative: values[i] is the
// constant speed on (grid[i-1], grid[i]] (values[0] is the speed at 0, equal
// to values[1] for paths built here); integrals treat it as a step function,
// which is exact, not a sampled approximation.
struct PathFunction {
    enum class Kind { cumulative, derivative };
    Kind kind = Kind::cumulative;
    std::vector<double> grid;
    std::vector<double> values;

    double at(double t) const;
};

// Exact derivative steps of a cumulative path (uses its own grid).
PathFunction to_derivative(const PathFunction& z);

// Integral of a derivative-kind path over [0, grid.back()].
double path_integral(const PathFunction& b);

// E(b,t) = -(log 2) t + int_0^t b(s)^2 / (2 a(s)) ds for a derivative-kind
// path b covering [0,t]. Cells where a = 0 contribute 0 when b = 0 there and
// +infinity otherwise (the returned overflow value).
double energy_functional(const CovarianceProfile& p, const PathFunction& b, double t);

// z*(t) = sqrt(2log2) int_0^t sqrt(a): the natural-speed cumulative path.
// z*(1) equals thresholds().x_star bit-for-bit. Grid = profile breakpoints
// merged with a uniform grid of grid_points samples.
PathFunction natural_speed_path(const CovarianceProfile& p, std::size_t grid_points = 257);

// v(s) = a(s) sqrt(2log2 / hull'(s)), the optimal feasible speed (0 where
// a = 0). Derivative kind, constant per profile piece.
PathFunction optimal_speed(const CovarianceProfile& p);

// z(t) = int_0^t v: cumulative optimal path; z(1) = x_s up to rounding.
PathFunction optimal_path(const CovarianceProfile& p, std::size_t grid_points = 257);

// Property check behind the variational characterization: v maximizes int b
// over speeds with E(b,t) <= 0 for all t. Samples `samples` random piecewise
// perturbations b = f*v, f per-piece uniform in [0.5, 1.5], rescaled by the
// largest factor keeping E <= 0 everywhere (E is piecewise linear in t, so
// checking refinement points is global). Failures are counted, not thrown.
struct VariationalReport {
    double max_energy = 0;          // max_t E(v,t) over the refinement grid
    double integral_v = 0;          // int v
    double integral_gap = 0;        // |int v - sqrt(2log2) int sqrt(hull')|
    double best_perturbed = 0;      // max over samples of int b
    std::size_t samples = 0;
    std::size_t violations = 0;     // samples with int b > int v + tol
    double tol = 0;

    bool ok() const {
        return violations == 0 && max_energy <= tol && integral_gap <= tol;
    }
};

VariationalReport variational_check(const CovarianceProfile& p, std::size_t samples,
                                    std::uint64_t seed, double tol = 1e-6);

// Built-in profiles.
CovarianceProfile brw_profile();                                  // A(t) = t
CovarianceProfile square_profile(std::size_t grid = 4096);        // A(t) = t^2, sampled
CovarianceProfile concave_square_profile(std::size_t grid = 4096);// A(t) = 2t - t^2, sampled
CovarianceProfile two_slope_profile(double c1 = 0.25);            // knots (0,0),(1/2,c1),(1,1)

// Named builtin lookup used by the CLI and tests: "brw", "square",
// "concave_square", "two_slope". Throws ValidationError for unknown names.
CovarianceProfile builtin_profile(const std::string& name);

} // namespace crem
