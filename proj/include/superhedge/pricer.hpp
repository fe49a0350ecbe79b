#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "superhedge/pwl.hpp"

namespace superhedge {

/**
 * One trading step t of the market model.
 *
 * The executed price S_t lies in [k_down * S_{t-1}, k_up * S_{t-1}] almost
 * surely, and these are the essential bounds of that support. The simulation
 * draws m_t ~ U[m_lo, m_hi], spr_t ~ U[spr_lo, spr_hi] and M_t = m_t + spr_t.
 */
struct StepSpec {
    double k_down = 0.7;
    double k_up = 1.4;
    double m_lo = 0.7;
    double m_hi = 1.0;
    double spr_lo = 0.0;
    double spr_hi = 0.4;

    /// Step whose essential bounds are those of the simulated distribution.
    static StepSpec from_distribution(double m_lo, double m_hi, double spr_lo, double spr_hi);

    /// Throws std::invalid_argument on violated ordering/positivity.
    void validate() const;
    /// k_down == m_lo and k_up == m_hi + spr_hi, up to rounding.
    [[nodiscard]] bool consistent_with_distribution() const;

    friend bool operator==(const StepSpec&, const StepSpec&) = default;
};

/// Price model over t = 0..T. steps[t] describes S_t given S_{t-1}; S_{-1} = s_init.
struct MarketModel {
    double s_init = 100.0;
    std::size_t horizon = 2;
    std::vector<StepSpec> steps;

    /// The two-step uniform bid/ask example: every step 0.7/1.0/0.0/0.4.
    static MarketModel reference(double s_init = 100.0, std::size_t horizon = 2);

    void validate() const;

    friend bool operator==(const MarketModel&, const MarketModel&) = default;
};

/// Raised when the absence of instantaneous profit fails at a step.
class AipViolation : public std::runtime_error {
public:
    AipViolation(std::size_t step, double k_down, double k_up);
    [[nodiscard]] std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

class NonConvexPayoff : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ResourceLimit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AipReport {
    bool holds = true;
    std::vector<bool> per_step;  // indexed by t

    /// First failing step, or steps.size() when none fails.
    [[nodiscard]] std::size_t first_violation() const;
};

/// k_down <= 1 <= k_up at every step.
[[nodiscard]] AipReport check_aip(const MarketModel& model);

struct OneStepPrice {
    double price = 0.0;  // -inf when the current price lies outside the support
    double theta = 0.0;
    bool finite = true;
};

/**
 * Infimum super-hedging price of g_next one step ahead, and a hedge.
 *
 * The price is the concave envelope of g_next over [k_down s, k_up s] at s;
 * theta is the midpoint of the superdifferential there (one-sided slope at
 * an end of the support). Works for any piecewise-linear g_next.
 */
[[nodiscard]] OneStepPrice one_step_price(const PwlFunction& g_next, double s_prev,
                                          const StepSpec& step);

/// Weight on the down-scaled branch: (k_up - 1) / (k_up - k_down), 1/2 if k_up == k_down.
[[nodiscard]] double risk_weight(const StepSpec& step);

struct PricingResult {
    std::vector<PwlFunction> value_fns;  // value_fns[t] = g_t, t = 0..T
    std::vector<double> lambdas;         // lambdas[t] builds g_t from g_{t+1}, t = 0..T-1
    std::vector<StepSpec> steps;         // model steps 0..T

    [[nodiscard]] std::size_t horizon() const { return value_fns.size() - 1; }
    [[nodiscard]] const PwlFunction& payoff() const { return value_fns.back(); }
    /// Portfolio value V_0 = g_0(S_0) once S_0 is executed.
    [[nodiscard]] double value0(double s0) const { return value_fns.front()(s0); }
    /// Constant premium covering every executable S_0: max of g_0 over the t = 0 support.
    [[nodiscard]] double premium(double s_init) const;
};

/**
 * Backward recursion g_{t-1} = lambda g_t(k_down .) + (1 - lambda) g_t(k_up .)
 * from g_T = payoff. The payoff must be convex and nonnegative.
 *
 * Throws AipViolation or NonConvexPayoff.
 */
[[nodiscard]] PricingResult backward_induce(const PwlFunction& payoff, const MarketModel& model);

/**
 * Order mapping at time t: s -> (g_{t+1}(k_up s) - g_{t+1}(k_down s)) / ((k_up - k_down) s).
 *
 * Between consecutive kinks of the two scaled branches the numerator is affine
 * in s, so each piece is a + b / s; this is exploited to invert the mapping.
 */
class StrategyFn {
public:
    StrategyFn(const PwlFunction& g_next, const StepSpec& step);

    [[nodiscard]] double operator()(double s) const;

    /// Smallest s in bracket with theta(s) >= target - tol, assuming theta is
    /// nondecreasing; nullopt when theta stays below. Solved per piece in
    /// closed form, with bisection when the closed form is unusable.
    [[nodiscard]] std::optional<double> first_crossing(double target, Interval bracket,
                                                       double tol = kDefaultTol) const;

    [[nodiscard]] std::span<const double> kinks() const { return kinks_; }

private:
    PwlFunction g_;
    double k_down_;
    double k_up_;
    std::vector<double> kinks_;
};

/// theta_t(s) for 0 <= t < T. Throws std::domain_error for s <= 0 or t out of range.
[[nodiscard]] double strategy_at(const PricingResult& result, std::size_t t, double s);

/// Constants of the two-step call example: supports [m1, M1] for S_1/S_0 and [m2, M2] for S_2/S_1.
struct TwoStepBounds {
    double m1 = 0.7;
    double M1 = 1.4;
    double m2 = 0.7;
    double M2 = 1.4;

    static TwoStepBounds from_model(const MarketModel& model);
};

struct ValueAndTheta {
    double value = 0.0;
    double theta = 0.0;
    int case_index = 0;  // 1-based case of the explicit tables
};

/// Explicit case-by-case super-hedge of (S_2 - K)^+ at t = 0 or t = 1.
[[nodiscard]] ValueAndTheta closed_form_call(int t, double s, double strike, const TwoStepBounds& b);

/// Payoff of the whole path s_0..s_T.
using PathPayoff = std::function<double(std::span<const double>)>;

/// (mean(s_0..s_T) - K)^+
[[nodiscard]] PathPayoff asian_call_payoff(double strike);
/// Path payoff that only looks at s_T.
[[nodiscard]] PathPayoff european_payoff(PwlFunction g);

/**
 * g_0(s0) for a path-dependent payoff by depth-first enumeration of the
 * (k_down, k_up) multiplier tree (2^T leaves). Throws AipViolation, or
 * ResourceLimit when T exceeds max_horizon.
 */
[[nodiscard]] double asian_tree_price(const PathPayoff& payoff, const MarketModel& model, double s0,
                                      std::size_t max_horizon = 20);

}  // namespace superhedge
