#pragma once

#include <span>
#include <string>
#include <vector>

namespace superhedge {

/// Absolute tolerance used for breakpoint merging and domination checks.
inline constexpr double kDefaultTol = 1e-12;

/// Closed interval [lo, hi] on the half-line.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    /// Throws std::domain_error unless 0 <= lo <= hi.
    static Interval make(double lo, double hi);

    [[nodiscard]] double width() const { return hi - lo; }
    [[nodiscard]] bool contains(double x, double tol = 0.0) const {
        return x >= lo - tol && x <= hi + tol;
    }
    [[nodiscard]] bool degenerate() const { return lo == hi; }
};

/// x -> slope * x + intercept
struct AffineFunction {
    double slope = 0.0;
    double intercept = 0.0;

    [[nodiscard]] double operator()(double x) const { return slope * x + intercept; }
};

/// Range of admissible slopes [lo, hi] (may be negative, unlike Interval).
struct SlopeRange {
    double lo = 0.0;
    double hi = 0.0;
    bool at_boundary = false;  // one-sided slope taken at an end of the domain

    [[nodiscard]] double midpoint() const { return 0.5 * (lo + hi); }
};

/**
 * Continuous piecewise-linear function on [0, inf).
 *
 * Stored as strictly increasing breakpoints with their values, plus the slope
 * used to extend the function to the left of the first breakpoint (down to 0)
 * and the slope beyond the last one. Every instance has at least one
 * breakpoint.
 */
class PwlFunction {
public:
    /// Throws std::invalid_argument if the invariants do not hold.
    PwlFunction(std::vector<double> breakpoints, std::vector<double> values,
                double left_slope, double right_slope);

    static PwlFunction constant(double c);
    static PwlFunction zero() { return constant(0.0); }
    static PwlFunction affine(double slope, double intercept);
    /// (x - strike)^+
    static PwlFunction call(double strike);
    /// (strike - x)^+
    static PwlFunction put(double strike);

    /// Throws std::domain_error for x < 0.
    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] double eval(double x) const { return (*this)(x); }

    [[nodiscard]] std::span<const double> breakpoints() const { return xs_; }
    [[nodiscard]] std::span<const double> values() const { return ys_; }
    [[nodiscard]] double left_slope() const { return left_slope_; }
    [[nodiscard]] double right_slope() const { return right_slope_; }
    [[nodiscard]] std::size_t size() const { return xs_.size(); }

    /// Slopes of all pieces, left extension first and right extension last
    /// (size() + 1 entries).
    [[nodiscard]] std::vector<double> segment_slopes() const;

    /// One-sided derivatives. The left derivative at 0 is the left slope.
    [[nodiscard]] double left_derivative(double x) const;
    [[nodiscard]] double right_derivative(double x) const;

    /// Nondecreasing slopes, up to tol.
    [[nodiscard]] bool is_convex(double tol = 1e-12) const;
    /// Nonincreasing slopes, up to tol.
    [[nodiscard]] bool is_concave(double tol = 1e-12) const;
    /// f >= -tol on the whole half-line.
    [[nodiscard]] bool is_nonnegative(double tol = 0.0) const;

    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const PwlFunction&, const PwlFunction&) = default;

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
    double left_slope_ = 0.0;
    double right_slope_ = 0.0;
};

/// x -> f(k x). Throws std::domain_error for k <= 0.
[[nodiscard]] PwlFunction scale_compose(const PwlFunction& f, double k);

/// lambda f + (1 - lambda) g on the merged breakpoint set.
/// Throws std::domain_error for lambda outside [0, 1].
[[nodiscard]] PwlFunction convex_combine(const PwlFunction& f, const PwlFunction& g,
                                         double lambda);

struct Envelope {
    PwlFunction fn;
    Interval dom;
    bool degenerate = false;
};

/**
 * Smallest concave function dominating f on dom.
 *
 * Upper hull (monotone chain) of the graph points at dom.lo, dom.hi and every
 * breakpoint of f strictly inside dom. Points closer than 1e-12 * max(1, |x|)
 * are merged, keeping the larger value. The result is only meaningful on dom;
 * outside it is extended linearly with the outermost hull slopes.
 * A degenerate domain (lo == hi) yields the constant f(lo).
 */
[[nodiscard]] Envelope upper_concave_envelope(const PwlFunction& f, Interval dom);

/// Superdifferential of a concave h at x in dom, as [right slope, left slope].
/// At an end of dom only the inward one-sided slope exists; it is returned
/// for both ends of the range and at_boundary is set.
/// Throws std::domain_error if x is outside dom.
[[nodiscard]] SlopeRange superdifferential(const PwlFunction& h, double x, Interval dom);

/// a(x) >= f(x) - tol at both ends of dom and at every breakpoint of f inside.
[[nodiscard]] bool dominates(const AffineFunction& a, const PwlFunction& f, Interval dom,
                             double tol = kDefaultTol);

}  // namespace superhedge
