#include "superhedge/pricer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace superhedge {

namespace {

std::string aip_message(std::size_t step, double k_down, double k_up) {
    std::ostringstream os;
    os << "AIP violated at step " << step << ": 1 is not in [k_down, k_up] = [" << k_down << ", "
       << k_up << "], so the current price lies outside the support of the next one";
    return os.str();
}

double theta_formula(const PwlFunction& g, double k_down, double k_up, double s) {
    if (!(s > 0.0)) throw std::domain_error("strategy evaluated at a non-positive price");
    if (k_up == k_down) {
        const double x = k_up * s;
        return 0.5 * (g.left_derivative(x) + g.right_derivative(x)) * k_up;
    }
    return (g(k_up * s) - g(k_down * s)) / ((k_up - k_down) * s);
}

}  // namespace

StepSpec StepSpec::from_distribution(double m_lo, double m_hi, double spr_lo, double spr_hi) {
    StepSpec s{m_lo, m_hi + spr_hi, m_lo, m_hi, spr_lo, spr_hi};
    s.validate();
    return s;
}

void StepSpec::validate() const {
    auto fail = [](const char* what) { throw std::invalid_argument(what); };
    if (!(k_down > 0.0) || !std::isfinite(k_up)) fail("step needs k_down > 0");
    if (!(k_up >= k_down)) fail("step needs k_down <= k_up");
    if (!(m_hi >= m_lo)) fail("step needs m_lo <= m_hi");
    if (!(spr_lo >= 0.0) || !(spr_hi >= spr_lo)) fail("step needs 0 <= spr_lo <= spr_hi");
}

bool StepSpec::consistent_with_distribution() const {
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    return close(k_down, m_lo) && close(k_up, m_hi + spr_hi) && m_lo > 0.0;
}

MarketModel MarketModel::reference(double s_init, std::size_t horizon) {
    return MarketModel{s_init, horizon, std::vector<StepSpec>(horizon + 1, StepSpec{})};
}

void MarketModel::validate() const {
    if (!(s_init > 0.0) || !std::isfinite(s_init)) throw std::invalid_argument("s_init must be > 0");
    if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
    if (steps.size() != horizon + 1)
        throw std::invalid_argument("model needs horizon + 1 steps (t = 0..T)");
    for (const auto& s : steps) s.validate();
}

AipViolation::AipViolation(std::size_t step, double k_down, double k_up)
    : std::runtime_error(aip_message(step, k_down, k_up)), step_(step) {}

std::size_t AipReport::first_violation() const {
    const auto it = std::find(per_step.begin(), per_step.end(), false);
    return static_cast<std::size_t>(it - per_step.begin());
}

AipReport check_aip(const MarketModel& model) {
    AipReport r;
    r.per_step.reserve(model.steps.size());
    for (const auto& s : model.steps) {
        const bool ok = s.k_down <= 1.0 && 1.0 <= s.k_up;
        r.per_step.push_back(ok);
        r.holds = r.holds && ok;
    }
    return r;
}

OneStepPrice one_step_price(const PwlFunction& g_next, double s_prev, const StepSpec& step) {
    if (!(s_prev > 0.0)) throw std::domain_error("one_step_price needs s_prev > 0");
    step.validate();
    const double lo = step.k_down * s_prev;
    const double hi = step.k_up * s_prev;
    if (s_prev < lo || s_prev > hi)
        return OneStepPrice{-std::numeric_limits<double>::infinity(), 0.0, false};
    if (lo == hi) return OneStepPrice{g_next(s_prev), 0.0, true};

    const Interval dom{lo, hi};
    const auto env = upper_concave_envelope(g_next, dom);
    return OneStepPrice{env.fn(s_prev), superdifferential(env.fn, s_prev, dom).midpoint(), true};
}

double risk_weight(const StepSpec& step) {
    if (step.k_up == step.k_down) return 0.5;
    return (step.k_up - 1.0) / (step.k_up - step.k_down);
}

double PricingResult::premium(double s_init) const {
    const auto& g0 = value_fns.front();
    const double lo = steps.front().k_down * s_init;
    const double hi = steps.front().k_up * s_init;
    double best = std::max(g0(lo), g0(hi));
    for (std::size_t i = 0; i < g0.size(); ++i) {
        const double x = g0.breakpoints()[i];
        if (x > lo && x < hi) best = std::max(best, g0.values()[i]);
    }
    return best;
}

PricingResult backward_induce(const PwlFunction& payoff, const MarketModel& model) {
    model.validate();
    const auto aip = check_aip(model);
    if (!aip.holds) {
        const auto t = aip.first_violation();
        throw AipViolation(t, model.steps[t].k_down, model.steps[t].k_up);
    }
    if (!payoff.is_convex())
        throw NonConvexPayoff(
            "backward_induce needs a convex payoff; use asian_tree_price or one_step_price "
            "(concave envelope) for other payoffs");
    if (!payoff.is_nonnegative()) throw std::invalid_argument("backward_induce needs a nonnegative payoff");

    const std::size_t T = model.horizon;
    PricingResult r;
    r.value_fns.assign(T + 1, payoff);
    r.lambdas.assign(T, 0.0);
    r.steps = model.steps;
    for (std::size_t t = T; t >= 1; --t) {
        const auto& step = model.steps[t];
        const double lambda = risk_weight(step);
        r.lambdas[t - 1] = lambda;
        r.value_fns[t - 1] = convex_combine(scale_compose(r.value_fns[t], step.k_down),
                                            scale_compose(r.value_fns[t], step.k_up), lambda);
    }
    return r;
}

StrategyFn::StrategyFn(const PwlFunction& g_next, const StepSpec& step)
    : g_(g_next), k_down_(step.k_down), k_up_(step.k_up) {
    step.validate();
    for (double b : g_.breakpoints()) {
        if (b <= 0.0) continue;
        kinks_.push_back(b / k_up_);
        kinks_.push_back(b / k_down_);
    }
    std::sort(kinks_.begin(), kinks_.end());
    kinks_.erase(std::unique(kinks_.begin(), kinks_.end()), kinks_.end());
}

double StrategyFn::operator()(double s) const { return theta_formula(g_, k_down_, k_up_, s); }

std::optional<double> StrategyFn::first_crossing(double target, Interval bracket, double tol) const {
    if (!(bracket.lo > 0.0) || !(bracket.hi >= bracket.lo))
        throw std::domain_error("first_crossing needs a bracket inside (0, inf)");
    const auto& theta = *this;
    auto reached = [&](double s) { return theta(s) >= target - tol; };
    if (reached(bracket.lo)) return bracket.lo;
    if (!reached(bracket.hi)) return std::nullopt;

    // first piece end at which the target is reached
    double left = bracket.lo;
    double right = bracket.hi;
    for (double k : kinks_) {
        if (k <= bracket.lo) continue;
        if (k >= bracket.hi) break;
        if (reached(k)) {
            right = k;
            break;
        }
        left = k;
    }

    if (k_up_ != k_down_) {
        // on (left, right] theta(s) = (A s + B) / (c s)
        auto numer = [&](double s) { return g_(k_up_ * s) - g_(k_down_ * s); };
        const double c = k_up_ - k_down_;
        const double a_coef = (numer(right) - numer(left)) / (right - left);
        const double b_coef = numer(left) - a_coef * left;
        const double denom = c * target - a_coef;
        if (denom != 0.0) {
            const double root = std::clamp(b_coef / denom, left, right);
            if (std::isfinite(root)) {
                const double eps = 1e-12 * root;
                if (reached(root)) {
                    if (root - eps <= left || !reached(root - eps)) return root;
                    right = root;
                } else {
                    if (reached(root + eps) && root + eps <= right) return root + eps;
                    left = root;
                }
            }
        }
    }

    // bisection on the predicate; left is never reached, right always is
    while (right - left > 1e-12 * right) {
        const double mid = 0.5 * (left + right);
        if (reached(mid))
            right = mid;
        else
            left = mid;
    }
    return right;
}

double strategy_at(const PricingResult& result, std::size_t t, double s) {
    if (t >= result.horizon()) throw std::domain_error("strategy_at needs 0 <= t < T");
    const auto& step = result.steps[t + 1];
    return theta_formula(result.value_fns[t + 1], step.k_down, step.k_up, s);
}

TwoStepBounds TwoStepBounds::from_model(const MarketModel& model) {
    if (model.horizon != 2) throw std::invalid_argument("two-step bounds need horizon 2");
    return TwoStepBounds{model.steps[1].k_down, model.steps[1].k_up, model.steps[2].k_down,
                         model.steps[2].k_up};
}

ValueAndTheta closed_form_call(int t, double s, double strike, const TwoStepBounds& b) {
    if (!(s > 0.0)) throw std::domain_error("closed_form_call needs s > 0");
    if (!(strike > 0.0)) throw std::domain_error("closed_form_call needs K > 0");
    const double K = strike;
    const double m1 = b.m1, M1 = b.M1, m2 = b.m2, M2 = b.M2;

    if (t == 1) {
        if (s * m2 >= K) return {s - K, 1.0, 2};
        if (s * M2 <= K) return {0.0, 0.0, 3};
        return {(s * M2 - K) * (1.0 - m2) / (M2 - m2), (s * M2 - K) / (s * (M2 - m2)), 1};
    }
    if (t != 0) throw std::domain_error("closed_form_call covers t = 0 and t = 1 only");

    const double low = K / M2;
    const double high = K / m2;
    const double a = s * m1;
    const double c = s * M1;
    if (c <= low) return {0.0, 0.0, 1};
    if (a >= high) return {s - K, 1.0, 6};
    if (a <= low) {
        if (c <= high) {
            const double v = (s * M1 * M2 - K) * (1.0 - m2) * (1.0 - m1) / ((M2 - m2) * (M1 - m1));
            const double th = (s * M1 * M2 - K) * (1.0 - m2) / (s * (M2 - m2) * (M1 - m1));
            return {v, th, 2};
        }
        return {(s * M1 - K) * (1.0 - m1) / (M1 - m1), (s * M1 - K) / (s * (M1 - m1)), 3};
    }
    if (c <= high)
        return {(s * M2 - K) * (1.0 - m2) / (M2 - m2), M2 * (1.0 - m2) / (M2 - m2), 4};
    const double v = ((s * M1 - K) * (M2 - m2) * (1.0 - m1) - (s * m1 * M2 - K) * (1.0 - m2) * (1.0 - M1)) /
                     ((M1 - m1) * (M2 - m2));
    const double th = ((s * M1 - K) * (M2 - m2) - (s * m1 * M2 - K) * (1.0 - m2)) /
                      (s * (M2 - m2) * (M1 - m1));
    return {v, th, 5};
}

PathPayoff asian_call_payoff(double strike) {
    return [strike](std::span<const double> path) {
        double sum = 0.0;
        for (double x : path) sum += x;
        return std::max(sum / static_cast<double>(path.size()) - strike, 0.0);
    };
}

PathPayoff european_payoff(PwlFunction g) {
    return [g = std::move(g)](std::span<const double> path) { return g(path.back()); };
}

namespace {

double tree_value(const PathPayoff& payoff, const MarketModel& model, std::vector<double>& path) {
    const std::size_t t = path.size() - 1;
    if (t == model.horizon) return payoff(path);
    const auto& step = model.steps[t + 1];
    const double s = path.back();
    path.push_back(step.k_down * s);
    const double down = tree_value(payoff, model, path);
    path.back() = step.k_up * s;
    const double up = tree_value(payoff, model, path);
    path.pop_back();
    const double lambda = risk_weight(step);
    return lambda * down + (1.0 - lambda) * up;
}

}  // namespace

double asian_tree_price(const PathPayoff& payoff, const MarketModel& model, double s0,
                        std::size_t max_horizon) {
    model.validate();
    if (!(s0 > 0.0)) throw std::domain_error("asian_tree_price needs s0 > 0");
    if (model.horizon > max_horizon) {
        std::ostringstream os;
        os << "asian_tree_price: horizon " << model.horizon << " exceeds the cap of " << max_horizon
           << " (2^T leaves)";
        throw ResourceLimit(os.str());
    }
    const auto aip = check_aip(model);
    if (!aip.holds) {
        const auto t = aip.first_violation();
        throw AipViolation(t, model.steps[t].k_down, model.steps[t].k_up);
    }
    std::vector<double> path;
    path.reserve(model.horizon + 1);
    path.push_back(s0);
    return tree_value(payoff, model, path);
}

}  // namespace superhedge
