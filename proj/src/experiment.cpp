#include "superhedge/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace superhedge {

namespace {

constexpr std::size_t kMaxHorizon = 30;
constexpr std::size_t kStrategySamples = 201;

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "s_prev",          "horizon",         "k_down",         "k_up",         "m_lo",
        "m_hi",            "spr_lo",          "spr_hi",         "strikes",      "n_paths",
        "seed",            "payoff",          "pwl_breakpoints", "pwl_values",  "pwl_left_slope",
        "pwl_right_slope", "stats_table",     "dump_paths",     "histograms",   "histogram_bins",
        "export_strategy", "clamp_infinite_price", "straddle"};
    return keys;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry {
    std::string value;
    std::size_t line;
};

class Reader {
public:
    Reader(std::string key, const Entry& e) : key_(std::move(key)), e_(e) {}

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(key_, e_.line, what); }

    double real(std::string_view s) const {
        s = trim(s);
        double x = 0.0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (ec != std::errc{} || p != s.data() + s.size() || s.empty() || !std::isfinite(x))
            fail("expected a real number, got '" + std::string(s) + "'");
        return x;
    }
    double real() const { return real(e_.value); }

    std::uint64_t unsigned_int() const {
        const auto s = trim(e_.value);
        std::uint64_t x = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
            fail("expected a nonnegative integer, got '" + std::string(s) + "'");
        return x;
    }

    bool boolean() const {
        const auto s = trim(e_.value);
        if (s == "true" || s == "yes" || s == "1") return true;
        if (s == "false" || s == "no" || s == "0") return false;
        fail("expected true or false, got '" + std::string(s) + "'");
    }

    std::vector<double> reals() const {
        std::vector<double> out;
        const std::string_view all = trim(e_.value);
        if (all.empty()) return out;
        std::size_t pos = 0;
        while (true) {
            const auto comma = all.find(',', pos);
            out.push_back(real(all.substr(pos, comma == std::string_view::npos ? all.npos : comma - pos)));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        return out;
    }

    std::string word() const { return std::string(trim(e_.value)); }
    std::size_t line() const { return e_.line; }

private:
    std::string key_;
    const Entry& e_;
};

std::string join(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += format_number(xs[i]);
    }
    return out;
}

using StepField = double StepSpec::*;

const std::vector<std::pair<std::string, StepField>>& step_fields() {
    static const std::vector<std::pair<std::string, StepField>> fields{
        {"k_down", &StepSpec::k_down}, {"k_up", &StepSpec::k_up},     {"m_lo", &StepSpec::m_lo},
        {"m_hi", &StepSpec::m_hi},     {"spr_lo", &StepSpec::spr_lo}, {"spr_hi", &StepSpec::spr_hi}};
    return fields;
}

}  // namespace

std::string_view to_string(PayoffKind kind) {
    switch (kind) {
        case PayoffKind::Call: return "call";
        case PayoffKind::Put: return "put";
        case PayoffKind::CustomPwl: return "custom-pwl";
        case PayoffKind::AsianCall: return "asian-call";
    }
    return "?";
}

std::string format_number(double x) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

ConfigError::ConfigError(const std::string& key, std::size_t line, const std::string& what)
    : std::runtime_error((line ? "line " + std::to_string(line) + ": " : std::string()) + "key '" + key +
                         "': " + what),
      key_(key), line_(line) {}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& key, const std::string& what) { throw ConfigError(key, 0, what); };
    if (!(s_prev > 0.0) || !std::isfinite(s_prev)) fail("s_prev", "must be > 0");
    if (horizon == 0) fail("horizon", "must be >= 1");
    if (horizon > kMaxHorizon) fail("horizon", "must be <= " + std::to_string(kMaxHorizon));
    if (steps.size() != horizon + 1) fail("k_down", "needs one step spec per t = 0..horizon");
    for (std::size_t t = 0; t < steps.size(); ++t) {
        try {
            steps[t].validate();
        } catch (const std::invalid_argument& e) {
            fail("k_down", "step " + std::to_string(t) + ": " + e.what());
        }
    }
    if (strikes.empty()) fail("strikes", "needs at least one strike");
    for (double k : strikes)
        if (!(k > 0.0) || !std::isfinite(k)) fail("strikes", "every strike must be > 0");
    if (n_paths == 0) fail("n_paths", "must be >= 1");
    if (n_paths > kMaxPaths) fail("n_paths", "must be <= " + std::to_string(kMaxPaths));
    if (histogram_bins == 0) fail("histogram_bins", "must be >= 1");
    if (payoff == PayoffKind::CustomPwl) {
        try {
            (void)PwlFunction(pwl_breakpoints, pwl_values, pwl_left_slope, pwl_right_slope);
        } catch (const std::invalid_argument& e) {
            fail("pwl_breakpoints", e.what());
        }
    }
}

MarketModel ExperimentConfig::model() const { return MarketModel{s_prev, horizon, steps}; }

PwlFunction ExperimentConfig::terminal_payoff(double strike) const {
    switch (payoff) {
        case PayoffKind::Call: return PwlFunction::call(strike);
        case PayoffKind::Put: return PwlFunction::put(strike);
        case PayoffKind::CustomPwl:
            return PwlFunction(pwl_breakpoints, pwl_values, pwl_left_slope, pwl_right_slope);
        case PayoffKind::AsianCall: break;
    }
    throw std::invalid_argument("asian-call has no terminal payoff function");
}

ExperimentConfig parse_config(std::string_view text) {
    std::map<std::string, Entry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(std::string(line), line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end())
            throw ConfigError(key, line_no, "unknown key");
        if (entries.contains(key)) throw ConfigError(key, line_no, "given more than once");
        entries.emplace(key, Entry{std::string(trim(line.substr(eq + 1))), line_no});
    }

    ExperimentConfig cfg;
    auto with = [&](const std::string& key, auto&& apply) {
        if (const auto it = entries.find(key); it != entries.end()) apply(Reader(key, it->second));
    };

    with("s_prev", [&](const Reader& r) { cfg.s_prev = r.real(); });
    with("horizon", [&](const Reader& r) {
        const auto h = r.unsigned_int();
        if (h == 0 || h > kMaxHorizon) r.fail("must be in 1.." + std::to_string(kMaxHorizon));
        cfg.horizon = static_cast<std::size_t>(h);
    });
    cfg.steps.assign(cfg.horizon + 1, StepSpec{});
    for (const auto& [key, field] : step_fields()) {
        with(key, [&](const Reader& r) {
            const auto xs = r.reals();
            if (xs.size() == 1) {
                for (auto& s : cfg.steps) s.*field = xs.front();
            } else if (xs.size() == cfg.steps.size()) {
                for (std::size_t t = 0; t < xs.size(); ++t) cfg.steps[t].*field = xs[t];
            } else {
                r.fail("needs 1 or horizon + 1 = " + std::to_string(cfg.steps.size()) + " values");
            }
        });
    }
    with("strikes", [&](const Reader& r) { cfg.strikes = r.reals(); });
    with("n_paths", [&](const Reader& r) { cfg.n_paths = r.unsigned_int(); });
    with("seed", [&](const Reader& r) { cfg.seed = r.unsigned_int(); });
    with("payoff", [&](const Reader& r) {
        const auto w = r.word();
        if (w == "call") cfg.payoff = PayoffKind::Call;
        else if (w == "put") cfg.payoff = PayoffKind::Put;
        else if (w == "custom-pwl") cfg.payoff = PayoffKind::CustomPwl;
        else if (w == "asian-call") cfg.payoff = PayoffKind::AsianCall;
        else r.fail("expected call, put, custom-pwl or asian-call, got '" + w + "'");
    });
    with("pwl_breakpoints", [&](const Reader& r) { cfg.pwl_breakpoints = r.reals(); });
    with("pwl_values", [&](const Reader& r) { cfg.pwl_values = r.reals(); });
    with("pwl_left_slope", [&](const Reader& r) { cfg.pwl_left_slope = r.real(); });
    with("pwl_right_slope", [&](const Reader& r) { cfg.pwl_right_slope = r.real(); });
    with("stats_table", [&](const Reader& r) { cfg.stats_table = r.boolean(); });
    with("dump_paths", [&](const Reader& r) { cfg.dump_paths = r.boolean(); });
    with("histograms", [&](const Reader& r) { cfg.histograms = r.boolean(); });
    with("histogram_bins", [&](const Reader& r) { cfg.histogram_bins = r.unsigned_int(); });
    with("export_strategy", [&](const Reader& r) { cfg.export_strategy = r.boolean(); });
    with("clamp_infinite_price", [&](const Reader& r) { cfg.clamp_infinite_price = r.boolean(); });
    with("straddle", [&](const Reader& r) {
        const auto w = r.word();
        if (w == "ask") cfg.straddle = StraddleRule::CloserToBidExecutesAsk;
        else if (w == "bid") cfg.straddle = StraddleRule::CloserToBidExecutesBid;
        else r.fail("expected ask or bid, got '" + w + "'");
    });

    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        const auto it = entries.find(e.key());
        if (it == entries.end()) throw;
        // re-raise with the line of the offending key
        const std::string msg = e.what();
        const auto colon = msg.find("': ");
        throw ConfigError(e.key(), it->second.line, colon == std::string::npos ? msg : msg.substr(colon + 3));
    }
    return cfg;
}

std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    auto b = [](bool x) { return x ? "true" : "false"; };
    os << "s_prev = " << format_number(cfg.s_prev) << '\n';
    os << "horizon = " << cfg.horizon << '\n';
    for (const auto& [key, field] : step_fields()) {
        std::vector<double> xs;
        for (const auto& s : cfg.steps) xs.push_back(s.*field);
        const bool uniform = std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
        os << key << " = " << (uniform && !xs.empty() ? format_number(xs.front()) : join(xs)) << '\n';
    }
    os << "strikes = " << join(cfg.strikes) << '\n';
    os << "n_paths = " << cfg.n_paths << '\n';
    os << "seed = " << cfg.seed << '\n';
    os << "payoff = " << to_string(cfg.payoff) << '\n';
    os << "pwl_breakpoints = " << join(cfg.pwl_breakpoints) << '\n';
    os << "pwl_values = " << join(cfg.pwl_values) << '\n';
    os << "pwl_left_slope = " << format_number(cfg.pwl_left_slope) << '\n';
    os << "pwl_right_slope = " << format_number(cfg.pwl_right_slope) << '\n';
    os << "stats_table = " << b(cfg.stats_table) << '\n';
    os << "dump_paths = " << b(cfg.dump_paths) << '\n';
    os << "histograms = " << b(cfg.histograms) << '\n';
    os << "histogram_bins = " << cfg.histogram_bins << '\n';
    os << "export_strategy = " << b(cfg.export_strategy) << '\n';
    os << "clamp_infinite_price = " << b(cfg.clamp_infinite_price) << '\n';
    os << "straddle = " << (cfg.straddle == StraddleRule::CloserToBidExecutesAsk ? "ask" : "bid") << '\n';
    return os.str();
}

namespace {

std::ofstream open_output(const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    return out;
}

void write_file(const std::filesystem::path& file, const std::string& text) {
    auto out = open_output(file);
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed: " + file.string());
}

std::string six_digits(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

struct Column {
    std::string label;
    std::vector<StatRow> rows;
};

void write_tables(const std::vector<Column>& cols, const std::filesystem::path& dir, std::ostream& log) {
    const auto& labels = cols.front().rows;
    std::size_t label_width = 0;
    for (const auto& r : labels) label_width = std::max(label_width, r.label.size());

    std::ostringstream text;
    std::ostringstream csv;
    csv << "statistic";
    for (const auto& c : cols) csv << ",K=" << c.label;
    csv << '\n';
    for (std::size_t i = 0; i < labels.size(); ++i) {
        char head[128];
        std::snprintf(head, sizeof head, "%-*s", static_cast<int>(label_width + 2), labels[i].label.c_str());
        text << head;
        csv << labels[i].label;
        for (const auto& c : cols) {
            const std::string cell = i == 0 ? c.label : six_digits(c.rows[i].value);
            char buf[64];
            std::snprintf(buf, sizeof buf, "%14s", cell.c_str());
            text << buf;
            csv << ',' << (i == 0 ? c.label : format_number(c.rows[i].value));
        }
        text << '\n';
        csv << '\n';
    }
    write_file(dir / "stats.txt", text.str());
    write_file(dir / "stats.csv", csv.str());
    log << text.str();
}

void write_histogram(const std::filesystem::path& file, const Histogram& h) {
    auto out = open_output(file);
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < h.bins(); ++i)
        out << format_number(h.bin_lo(i)) << ',' << format_number(h.bin_hi(i)) << ',' << h.count(i) << '\n';
}

void write_strategy(const std::filesystem::path& file, const Simulator& sim) {
    const auto& model = sim.model();
    auto out = open_output(file);
    out << "t,z,theta\n";
    double lo = model.s_init;
    double hi = model.s_init;
    for (std::size_t t = 0; t < model.horizon; ++t) {
        lo *= model.steps[t].k_down;
        hi *= model.steps[t].k_up;
        const auto& theta = sim.strategy(t);
        for (std::size_t i = 0; i < kStrategySamples; ++i) {
            const double z = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kStrategySamples - 1);
            out << t << ',' << format_number(z) << ',' << format_number(theta(z)) << '\n';
        }
    }
}

void write_path_header(std::ostream& out, std::size_t T) {
    out << "path_id";
    for (std::size_t t = 0; t <= T; ++t) out << ",S_" << t;
    for (std::size_t t = 1; t < T; ++t) out << ",bid_" << t << ",ask_" << t;
    for (std::size_t t = 0; t < T; ++t) out << ",theta_" << t;
    for (std::size_t t = 0; t <= T; ++t) out << ",V_" << t;
    out << ",eps_r\n";
}

void write_path(std::ostream& out, std::uint64_t id, const SimPath& p) {
    const std::size_t T = p.theta.size();
    out << id;
    for (double x : p.s) out << ',' << format_number(x);
    for (std::size_t t = 1; t < T; ++t) out << ',' << format_number(p.bid[t]) << ',' << format_number(p.ask[t]);
    for (double x : p.theta) out << ',' << format_number(x);
    for (double x : p.v) out << ',' << format_number(x);
    out << ',' << format_number(p.eps_r) << '\n';
}

ExitCode run_asian(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log) {
    const auto model = cfg.model();
    std::ostringstream text;
    std::ostringstream csv;
    csv << "K,g_0(S_-1),P_0\n";
    text << "asian call (average of S_0..S_" << cfg.horizon << "), tree recursion\n";
    for (double k : cfg.strikes) {
        const auto payoff = asian_call_payoff(k);
        const double at_prev = asian_tree_price(payoff, model, cfg.s_prev);
        const double lo = asian_tree_price(payoff, model, cfg.s_prev * cfg.steps[0].k_down);
        const double hi = asian_tree_price(payoff, model, cfg.s_prev * cfg.steps[0].k_up);
        const double premium = std::max({at_prev, lo, hi});
        text << "K=" << format_number(k) << "  g_0(S_-1)=" << six_digits(at_prev) << "  P_0=" << six_digits(premium)
             << '\n';
        csv << format_number(k) << ',' << format_number(at_prev) << ',' << format_number(premium) << '\n';
    }
    write_file(opts.out_dir / "asian.txt", text.str());
    write_file(opts.out_dir / "asian.csv", csv.str());
    log << text.str();
    return ExitCode::Ok;
}

}  // namespace

ExitCode run_experiment(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log) {
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << '\n';
        return ExitCode::Error;
    }

    const auto model = cfg.model();
    const auto aip = check_aip(model);
    if (!aip.holds) {
        const auto t = aip.first_violation();
        const AipViolation v(t, model.steps[t].k_down, model.steps[t].k_up);
        if (cfg.clamp_infinite_price) {
            log << "error: infinite price: at step " << t << " the current price S lies outside [k_down S, k_up S]"
                << " = [" << model.steps[t].k_down << " S, " << model.steps[t].k_up
                << " S], so the super-hedging price is -inf and cannot be clamped\n";
            return ExitCode::InfinitePrice;
        }
        log << "error: " << v.what() << '\n';
        return ExitCode::AipFailure;
    }

    try {
        std::filesystem::create_directories(opts.out_dir);
        write_file(opts.out_dir / "config_effective.txt", render_config(cfg));
        log << "# effective configuration\n" << render_config(cfg) << '\n';
        if (cfg.payoff == PayoffKind::AsianCall) return run_asian(cfg, opts, log);

        const RngConfig rng{cfg.seed};
        std::vector<double> strikes = cfg.strikes;
        if (cfg.payoff == PayoffKind::CustomPwl) strikes = {std::numeric_limits<double>::quiet_NaN()};

        std::vector<Column> cols;
        for (std::size_t i = 0; i < strikes.size(); ++i) {
            const double k = strikes[i];
            const std::string label = cfg.payoff == PayoffKind::CustomPwl ? "pwl" : format_number(k);
            const auto pricing = backward_induce(cfg.terminal_payoff(k), model);
            log << "K=" << label << ": g_0(S_-1)=" << six_digits(pricing.value0(cfg.s_prev))
                << "  P_0=" << six_digits(pricing.premium(cfg.s_prev)) << '\n';
            const Simulator sim(model, pricing, SimOptions{cfg.straddle, {}});
            const auto stats = simulate(sim, k, cfg.n_paths, rng, i, opts.threads);
            cols.push_back({label, table_rows(stats)});

            if (cfg.export_strategy) write_strategy(opts.out_dir / ("strategy_K" + label + ".csv"), sim);
            if (cfg.dump_paths || cfg.histograms) {
                std::ofstream dump;
                if (cfg.dump_paths) {
                    dump = open_output(opts.out_dir / ("paths_K" + label + ".csv"));
                    write_path_header(dump, cfg.horizon);
                }
                std::vector<Histogram> hist;
                if (cfg.histograms) {
                    for (const auto& s : stats.s) hist.emplace_back(s.min(), s.max(), cfg.histogram_bins);
                    hist.emplace_back(stats.eps_r.min(), stats.eps_r.max(), cfg.histogram_bins);
                }
                for_each_path(sim, cfg.n_paths, rng, i, [&](std::uint64_t id, const SimPath& p) {
                    if (dump.is_open()) write_path(dump, id, p);
                    if (!hist.empty()) {
                        for (std::size_t t = 0; t < p.s.size(); ++t) hist[t].add(p.s[t]);
                        hist.back().add(p.eps_r);
                    }
                });
                for (std::size_t t = 0; t + 1 < hist.size(); ++t)
                    write_histogram(opts.out_dir / ("hist_K" + label + "_S" + std::to_string(t) + ".csv"), hist[t]);
                if (!hist.empty()) write_histogram(opts.out_dir / ("hist_K" + label + "_eps_R.csv"), hist.back());
            }
        }
        if (cfg.stats_table) write_tables(cols, opts.out_dir, log);
    } catch (const AipViolation& e) {
        log << "error: " << e.what() << '\n';
        return ExitCode::AipFailure;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return ExitCode::Error;
    }
    return ExitCode::Ok;
}

}  // namespace superhedge
