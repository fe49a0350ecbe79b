#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "superhedge/pricer.hpp"
#include "superhedge/stats.hpp"

namespace superhedge {

struct RngConfig {
    std::uint64_t seed = 20210601;
    // mt19937_64 per batch, seeded through splitmix64 from (seed, stream, batch);
    // uniforms use the top 53 bits.
    std::string algorithm = "mt19937_64+splitmix64";
};

/// SplitMix64 finalizer, used to derive independent stream seeds.
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x);
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t batch);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
    std::mt19937_64 engine_;
};

/// Realization of one step: support [m, M] of S_t / S_{t-1} and the position k of a mid execution.
struct StepDraw {
    double m = 0.0;
    double M = 0.0;
    double k = 0.0;
};

/// m ~ U[m_lo, m_hi], spr ~ U[spr_lo, spr_hi], M = m + spr, k ~ U[0, 1]; drawn in that order.
[[nodiscard]] StepDraw draw_step(const StepSpec& step, Rng& rng);

/// s_prev (m + k (M - m)). Throws std::domain_error for s_prev <= 0.
[[nodiscard]] double mid_execute(double s_prev, const StepDraw& draw);

enum class DeltaSign { Negative, Positive };

/// Zero S* of the order mapping s -> theta_t(s) - theta_{t-1}; when it has no
/// zero on the bracket, `sign` tells which side it stays on.
struct SstarResult {
    std::optional<double> root;
    DeltaSign sign = DeltaSign::Negative;
};

/**
 * Leftmost zero of the nondecreasing delta s -> theta(s) - theta_prev over
 * bracket. |delta| <= 1e-12 counts as zero, so a flat zero stretch yields its
 * left end. If delta(bracket.lo) is already zero the bracket's lower end is
 * returned; if delta keeps a strict sign there is no root.
 */
[[nodiscard]] SstarResult find_sstar(const StrategyFn& theta, double theta_prev, Interval bracket);

/// Same contract for an arbitrary nondecreasing callable, by bisection.
/// Throws std::invalid_argument when sampling finds a decrease.
[[nodiscard]] SstarResult find_sstar(const std::function<double(double)>& delta, Interval bracket);

enum class StraddleRule {
    CloserToBidExecutesAsk,  // the reference convention
    CloserToBidExecutesBid,
};

/**
 * Price at which a delayed order fills given the quotes:
 * both quotes at or below S* -> bid, S* at or below the bid -> ask,
 * otherwise the straddle rule decides.
 * Throws std::domain_error if bid > ask or bid <= 0.
 */
[[nodiscard]] double execute_delayed_order(double bid, double ask, const SstarResult& sstar,
                                           StraddleRule rule = StraddleRule::CloserToBidExecutesAsk);

struct SimOptions {
    StraddleRule straddle = StraddleRule::CloserToBidExecutesAsk;
    /// Steps executed against bid/ask quotes; empty means every interior step 1..T-1.
    std::vector<std::size_t> bid_ask_steps;
};

struct SimPath {
    double s_prev = 0.0;
    std::vector<double> s;      // S_0..S_T
    std::vector<double> bid;    // quotes per step; equal to S_t at mid-executed steps
    std::vector<double> ask;
    std::vector<double> sstar;  // NaN where no zero was found or the step is mid-executed
    std::vector<double> theta;  // theta_0..theta_{T-1}
    std::vector<double> v;      // V_0..V_T
    double eps_r = 0.0;         // (V_T - g_T(S_T)) / S_T
};

struct SimStats {
    double strike = 0.0;
    std::uint64_t n_paths = 0;
    std::vector<RunningStats> s;  // S_t, t = 0..T
    RunningStats v0;
    RunningStats v0_over_sprev;
    RunningStats v0_over_s0;
    RunningStats eps_r;
    std::vector<RunningStats> exposure;  // theta_t S_t / V_t (0 when V_t = 0), t = 0..T-1

    explicit SimStats(std::size_t horizon = 2, double strike_label = 0.0);

    void add(const SimPath& p);
    void merge(const SimStats& other);
};

/// Row labels and values of the results table, in display order.
struct StatRow {
    std::string label;
    double value;
};
[[nodiscard]] std::vector<StatRow> table_rows(const SimStats& stats);
[[nodiscard]] std::vector<std::string> table_labels(std::size_t horizon);

/**
 * Path generator bound to one priced claim.
 *
 * Executes mid prices at t = 0 and t = T and delayed bid/ask orders at the
 * configured steps, holding theta_t(S_t) from backward induction, and keeps
 * the self-financing account V_t = V_{t-1} + theta_{t-1} (S_t - S_{t-1}).
 */
class Simulator {
public:
    /// Throws AipViolation, or std::invalid_argument if the pricing does not
    /// match the model or a step's bounds differ from its distribution's.
    Simulator(MarketModel model, PricingResult pricing, SimOptions options = {});

    void run_path(Rng& rng, SimPath& out) const;
    [[nodiscard]] SimPath run_path(Rng& rng) const;

    [[nodiscard]] const MarketModel& model() const { return model_; }
    [[nodiscard]] const PricingResult& pricing() const { return pricing_; }
    [[nodiscard]] const StrategyFn& strategy(std::size_t t) const { return strategies_.at(t); }

private:
    MarketModel model_;
    PricingResult pricing_;
    SimOptions options_;
    std::vector<StrategyFn> strategies_;
    std::vector<bool> bid_ask_;
};

[[nodiscard]] SimPath run_path(const MarketModel& model, const PricingResult& pricing, Rng& rng);

inline constexpr std::uint64_t kBatchSize = 1u << 14;
inline constexpr std::uint64_t kMaxPaths = 1'000'000'000;

/**
 * Aggregate statistics over n_paths paths. Paths are generated in batches of
 * kBatchSize, batch b drawing from derive_seed(seed, stream, b); results are
 * merged in batch order, so they do not depend on the thread count.
 * Throws std::invalid_argument for n_paths == 0 and ResourceLimit above kMaxPaths.
 */
[[nodiscard]] SimStats simulate(const Simulator& sim, double strike_label, std::uint64_t n_paths,
                                const RngConfig& rng, std::uint64_t stream = 0, unsigned threads = 0);

/// Visits the same paths as simulate(), sequentially and in path order.
void for_each_path(const Simulator& sim, std::uint64_t n_paths, const RngConfig& rng,
                   std::uint64_t stream,
                   const std::function<void(std::uint64_t, const SimPath&)>& visit);

}  // namespace superhedge
