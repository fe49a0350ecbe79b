#include "superhedge/market_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace superhedge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kZeroTol = 1e-12;

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t batch) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ batch);
}

StepDraw draw_step(const StepSpec& step, Rng& rng) {
    StepDraw d;
    d.m = rng.uniform(step.m_lo, step.m_hi);
    const double spr = rng.uniform(step.spr_lo, step.spr_hi);
    d.M = d.m + spr;
    d.k = rng.uniform01();
    return d;
}

double mid_execute(double s_prev, const StepDraw& draw) {
    if (!(s_prev > 0.0)) throw std::domain_error("mid_execute needs s_prev > 0");
    return s_prev * (draw.m + draw.k * (draw.M - draw.m));
}

SstarResult find_sstar(const StrategyFn& theta, double theta_prev, Interval bracket) {
    if (theta(bracket.lo) - theta_prev > kZeroTol) return {std::nullopt, DeltaSign::Positive};
    const auto root = theta.first_crossing(theta_prev, bracket, kZeroTol);
    if (!root) return {std::nullopt, DeltaSign::Negative};
    return {root, DeltaSign::Positive};
}

SstarResult find_sstar(const std::function<double(double)>& delta, Interval bracket) {
    constexpr int kSamples = 64;
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kSamples; ++i) {
        const double x = bracket.lo + bracket.width() * i / kSamples;
        const double d = delta(x);
        if (d < prev - 1e-9 * std::max(1.0, std::abs(prev)))
            throw std::invalid_argument("find_sstar: order mapping is not nondecreasing");
        prev = d;
    }
    const double at_lo = delta(bracket.lo);
    if (at_lo > kZeroTol) return {std::nullopt, DeltaSign::Positive};
    if (at_lo >= -kZeroTol) return {bracket.lo, DeltaSign::Positive};
    if (delta(bracket.hi) < -kZeroTol) return {std::nullopt, DeltaSign::Negative};

    double left = bracket.lo;
    double right = bracket.hi;
    while (right - left > 1e-12 * right) {
        const double mid = 0.5 * (left + right);
        const double d = delta(mid);
        if (std::abs(d) <= kZeroTol) {
            right = mid;
            // keep going to find the left end of a flat zero stretch
            continue;
        }
        (d > 0.0 ? right : left) = mid;
    }
    return {right, DeltaSign::Positive};
}

double execute_delayed_order(double bid, double ask, const SstarResult& sstar, StraddleRule rule) {
    if (!(bid > 0.0) || !(bid <= ask)) {
        std::ostringstream os;
        os << "execute_delayed_order needs 0 < bid <= ask, got bid=" << bid << " ask=" << ask;
        throw std::domain_error(os.str());
    }
    if (!sstar.root) return sstar.sign == DeltaSign::Negative ? bid : ask;
    const double s = *sstar.root;
    if (ask <= s) return bid;
    if (s <= bid) return ask;
    const bool closer_to_bid = std::abs(s - bid) <= std::abs(s - ask);
    if (rule == StraddleRule::CloserToBidExecutesAsk) return closer_to_bid ? ask : bid;
    return closer_to_bid ? bid : ask;
}

SimStats::SimStats(std::size_t horizon, double strike_label)
    : strike(strike_label), s(horizon + 1), exposure(horizon) {}

void SimStats::add(const SimPath& p) {
    ++n_paths;
    for (std::size_t t = 0; t < s.size(); ++t) s[t].push(p.s[t]);
    const double v0_value = p.v.front();
    v0.push(v0_value);
    v0_over_sprev.push(v0_value / p.s_prev);
    v0_over_s0.push(v0_value / p.s.front());
    eps_r.push(p.eps_r);
    for (std::size_t t = 0; t < exposure.size(); ++t) {
        const double invested = p.theta[t] * p.s[t];
        const bool empty = std::abs(p.v[t]) <= kZeroTol * p.s[t];
        exposure[t].push(empty ? 0.0 : invested / p.v[t]);
    }
}

void SimStats::merge(const SimStats& other) {
    n_paths += other.n_paths;
    for (std::size_t t = 0; t < s.size(); ++t) s[t].merge(other.s[t]);
    v0.merge(other.v0);
    v0_over_sprev.merge(other.v0_over_sprev);
    v0_over_s0.merge(other.v0_over_s0);
    eps_r.merge(other.eps_r);
    for (std::size_t t = 0; t < exposure.size(); ++t) exposure[t].merge(other.exposure[t]);
}

std::vector<std::string> table_labels(std::size_t horizon) {
    std::vector<std::string> labels{"K"};
    for (std::size_t t = 0; t <= horizon; ++t) labels.push_back("E(S_" + std::to_string(t) + ")");
    labels.insert(labels.end(), {"E(V_0)", "max V_0", "E(V_0/S_-1)", "E(V_0/S_0)", "min(V_0/S_0)",
                                 "max(V_0/S_0)", "E(eps_R)", "sigma(eps_R)", "min eps_R",
                                 "max eps_R"});
    for (std::size_t t = 0; t < horizon; ++t) {
        const auto i = std::to_string(t);
        labels.push_back("E(theta_" + i + " S_" + i + "/V_" + i + ")");
    }
    return labels;
}

std::vector<StatRow> table_rows(const SimStats& st) {
    const auto labels = table_labels(st.exposure.size());
    std::vector<double> values{st.strike};
    for (const auto& x : st.s) values.push_back(x.mean());
    values.insert(values.end(), {st.v0.mean(), st.v0.max(), st.v0_over_sprev.mean(),
                                 st.v0_over_s0.mean(), st.v0_over_s0.min(), st.v0_over_s0.max(),
                                 st.eps_r.mean(), st.eps_r.stddev(), st.eps_r.min(), st.eps_r.max()});
    for (const auto& x : st.exposure) values.push_back(x.mean());
    std::vector<StatRow> rows;
    rows.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) rows.push_back({labels[i], values[i]});
    return rows;
}

Simulator::Simulator(MarketModel model, PricingResult pricing, SimOptions options)
    : model_(std::move(model)), pricing_(std::move(pricing)), options_(std::move(options)) {
    model_.validate();
    const auto aip = check_aip(model_);
    if (!aip.holds) {
        const auto t = aip.first_violation();
        throw AipViolation(t, model_.steps[t].k_down, model_.steps[t].k_up);
    }
    const std::size_t T = model_.horizon;
    if (pricing_.horizon() != T || pricing_.steps != model_.steps)
        throw std::invalid_argument("pricing result was computed for a different model");
    for (std::size_t t = 0; t <= T; ++t) {
        if (!model_.steps[t].consistent_with_distribution()) {
            std::ostringstream os;
            os << "step " << t << ": support bounds [k_down, k_up] must equal [m_lo, m_hi + spr_hi] "
               << "(with m_lo > 0) to simulate";
            throw std::invalid_argument(os.str());
        }
    }
    for (std::size_t t = 0; t < T; ++t)
        strategies_.emplace_back(pricing_.value_fns[t + 1], model_.steps[t + 1]);

    bid_ask_.assign(T + 1, false);
    if (options_.bid_ask_steps.empty()) {
        for (std::size_t t = 1; t < T; ++t) bid_ask_[t] = true;
    } else {
        for (auto t : options_.bid_ask_steps) {
            if (t == 0 || t >= T)
                throw std::invalid_argument("bid/ask execution is only possible at steps 1..T-1");
            bid_ask_[t] = true;
        }
    }
}

void Simulator::run_path(Rng& rng, SimPath& out) const {
    const std::size_t T = model_.horizon;
    out.s_prev = model_.s_init;
    out.s.resize(T + 1);
    out.bid.resize(T + 1);
    out.ask.resize(T + 1);
    out.sstar.resize(T + 1);
    out.theta.resize(T);
    out.v.resize(T + 1);

    double prev = model_.s_init;
    for (std::size_t t = 0; t <= T; ++t) {
        const auto& step = model_.steps[t];
        const StepDraw d = draw_step(step, rng);
        double st;
        if (bid_ask_[t]) {
            const double bid = prev * d.m;
            const double ask = prev * d.M;
            const auto sstar = find_sstar(strategies_[t], out.theta[t - 1],
                                          Interval{step.k_down * prev, step.k_up * prev});
            st = execute_delayed_order(bid, ask, sstar, options_.straddle);
            out.bid[t] = bid;
            out.ask[t] = ask;
            out.sstar[t] = sstar.root.value_or(kNaN);
        } else {
            st = mid_execute(prev, d);
            out.bid[t] = st;
            out.ask[t] = st;
            out.sstar[t] = kNaN;
        }
        out.s[t] = st;
        out.v[t] = t == 0 ? pricing_.value0(st) : out.v[t - 1] + out.theta[t - 1] * (st - prev);
        if (t < T) out.theta[t] = strategies_[t](st);
        prev = st;
    }
    out.eps_r = (out.v[T] - pricing_.payoff()(out.s[T])) / out.s[T];
}

SimPath Simulator::run_path(Rng& rng) const {
    SimPath p;
    run_path(rng, p);
    return p;
}

SimPath run_path(const MarketModel& model, const PricingResult& pricing, Rng& rng) {
    return Simulator(model, pricing).run_path(rng);
}

namespace {

void check_path_count(std::uint64_t n_paths) {
    if (n_paths == 0) throw std::invalid_argument("simulation needs at least one path");
    if (n_paths > kMaxPaths) {
        std::ostringstream os;
        os << "simulation of " << n_paths << " paths exceeds the cap of " << kMaxPaths;
        throw ResourceLimit(os.str());
    }
}

template <class Visit>
void run_batch(const Simulator& sim, std::uint64_t n_paths, const RngConfig& rng, std::uint64_t stream,
               std::uint64_t batch, SimPath& scratch, Visit&& visit) {
    Rng gen(derive_seed(rng.seed, stream, batch));
    const std::uint64_t begin = batch * kBatchSize;
    const std::uint64_t end = std::min(n_paths, begin + kBatchSize);
    for (std::uint64_t i = begin; i < end; ++i) {
        sim.run_path(gen, scratch);
        visit(i, scratch);
    }
}

}  // namespace

SimStats simulate(const Simulator& sim, double strike_label, std::uint64_t n_paths, const RngConfig& rng,
                  std::uint64_t stream, unsigned threads) {
    check_path_count(n_paths);
    const std::size_t T = sim.model().horizon;
    const std::uint64_t n_batches = (n_paths + kBatchSize - 1) / kBatchSize;
    std::vector<SimStats> partial(n_batches, SimStats(T, strike_label));

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_batches));

    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        SimPath scratch;
        for (std::uint64_t b = next++; b < n_batches; b = next++)
            run_batch(sim, n_paths, rng, stream, b, scratch,
                      [&](std::uint64_t, const SimPath& p) { partial[b].add(p); });
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }

    SimStats total(T, strike_label);
    for (const auto& p : partial) total.merge(p);
    return total;
}

void for_each_path(const Simulator& sim, std::uint64_t n_paths, const RngConfig& rng, std::uint64_t stream,
                   const std::function<void(std::uint64_t, const SimPath&)>& visit) {
    check_path_count(n_paths);
    const std::uint64_t n_batches = (n_paths + kBatchSize - 1) / kBatchSize;
    SimPath scratch;
    for (std::uint64_t b = 0; b < n_batches; ++b) run_batch(sim, n_paths, rng, stream, b, scratch, visit);
}

}  // namespace superhedge
