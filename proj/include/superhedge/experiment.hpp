#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "superhedge/market_sim.hpp"
#include "superhedge/pricer.hpp"

namespace superhedge {

enum class PayoffKind { Call, Put, CustomPwl, AsianCall };

[[nodiscard]] std::string_view to_string(PayoffKind kind);

/// Batch experiment: one pricing + simulation run per strike.
struct ExperimentConfig {
    double s_prev = 100.0;
    std::size_t horizon = 2;
    std::vector<StepSpec> steps = std::vector<StepSpec>(3);
    std::vector<double> strikes{50.0, 75.0, 100.0, 125.0, 150.0};
    std::uint64_t n_paths = 1'000'000;
    std::uint64_t seed = 20210601;
    PayoffKind payoff = PayoffKind::Call;
    // custom-pwl payoff
    std::vector<double> pwl_breakpoints;
    std::vector<double> pwl_values;
    double pwl_left_slope = 0.0;
    double pwl_right_slope = 0.0;
    // outputs
    bool stats_table = true;
    bool dump_paths = false;
    bool histograms = false;
    std::size_t histogram_bins = 100;
    bool export_strategy = false;
    bool clamp_infinite_price = false;
    StraddleRule straddle = StraddleRule::CloserToBidExecutesAsk;

    /// Throws ConfigError naming the offending key.
    void validate() const;
    [[nodiscard]] MarketModel model() const;
    /// Payoff for a strike (ignored for custom-pwl). Not defined for asian-call.
    [[nodiscard]] PwlFunction terminal_payoff(double strike) const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, std::size_t line, const std::string& what);
    [[nodiscard]] const std::string& key() const { return key_; }
    [[nodiscard]] std::size_t line() const { return line_; }  // 0 when not tied to a line

private:
    std::string key_;
    std::size_t line_;
};

/**
 * Flat `key = value` text, one key per line, lists comma-separated, `#`
 * comments. Per-step keys (k_down, k_up, m_lo, m_hi, spr_lo, spr_hi) take one
 * value for every step or exactly horizon + 1 values. Missing keys keep their
 * defaults; unknown keys are rejected.
 */
[[nodiscard]] ExperimentConfig parse_config(std::string_view text);
/// Canonical text form; parse_config(render_config(c)) == c.
[[nodiscard]] std::string render_config(const ExperimentConfig& cfg);

enum class ExitCode : int {
    Ok = 0,
    Error = 1,
    AipFailure = 2,
    InfinitePrice = 3,
};

struct RunOptions {
    std::filesystem::path out_dir = "results";
    unsigned threads = 0;  // 0: hardware concurrency; never changes the results
};

/// Shortest round-trip decimal form of x.
[[nodiscard]] std::string format_number(double x);

/**
 * Runs pricing and simulation for every strike and writes stats.txt,
 * stats.csv, config_effective.txt and the optional per-path dumps, histogram
 * and strategy files into opts.out_dir. Progress and errors go to log.
 */
[[nodiscard]] ExitCode run_experiment(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log);

}  // namespace superhedge
