// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "superhedge/experiment.hpp"
#include "superhedge/market_sim.hpp"
#include "superhedge/pricer.hpp"
#include "superhedge/pwl.hpp"

using namespace superhedge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::vector<double> kStrikes{50.0, 75.0, 100.0, 125.0, 150.0};

// Published table, columns K = 50..150.
struct Published {
    double e_s0, e_v0, e_eps, sd_eps;
};
const Published kTable[] = {
    {95.002, 46.503, 0.017, 0.024},
    {94.983, 29.357, 0.077, 0.045},
    {95.006, 16.960, 0.076, 0.040},
    {94.98, 11.244, 0.064, 0.037},
    {95.001, 6.7, 0.039, 0.0317},
};

Outcome table_reproduction() {
    Outcome o;
    const auto model = MarketModel::reference();
    const RngConfig rng{};
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream rows;
    for (std::size_t i = 0; i < kStrikes.size(); ++i) {
        const double k = kStrikes[i];
        const Simulator sim(model, backward_induce(PwlFunction::call(k), model));
        const auto st = simulate(sim, k, 1'000'000, rng, i);
        const auto& p = kTable[i];
        rows << fmt(" K=%g: E(S_0)=%.3f", k, st.s[0].mean()) << fmt(" E(V_0)=%.3f", st.v0.mean())
             << fmt(" E(eps)=%.4f sd=%.4f", st.eps_r.mean(), st.eps_r.stddev())
             << fmt(" min=%.3g max=%.4f;", st.eps_r.min(), st.eps_r.max());
        if (std::abs(st.s[0].mean() - p.e_s0) > 0.2) o.fail(fmt("K=%g E(S_0)=%.4f", k, st.s[0].mean()));
        if (std::abs(st.v0.mean() - p.e_v0) > 0.01 * p.e_v0) o.fail(fmt("K=%g E(V_0)=%.4f", k, st.v0.mean()));
        if (std::abs(st.eps_r.mean() - p.e_eps) > 0.005) o.fail(fmt("K=%g E(eps_R)=%.5f", k, st.eps_r.mean()));
        if (std::abs(st.eps_r.stddev() - p.sd_eps) > 0.005)
            o.fail(fmt("K=%g sigma(eps_R)=%.5f", k, st.eps_r.stddev()));
        if (st.eps_r.max() > 0.20) o.fail(fmt("K=%g max eps_R=%.5f", k, st.eps_r.max()));
        if (st.eps_r.min() < 0.0 || st.eps_r.min() > 1e-4) o.fail(fmt("K=%g min eps_R=%.3g", k, st.eps_r.min()));
    }
    const double secs = seconds_since(t0);
    if (o.pass) o.detail = fmt("5 x 1e6 paths in %.1f s;", secs) + rows.str();
    else o.detail += " |" + rows.str();
    return o;
}

Outcome pathwise_super_hedge() {
    Outcome o;
    const auto model = MarketModel::reference();
    std::uint64_t violations = 0;
    std::uint64_t paths = 0;
    const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
    for (std::uint64_t seed : seeds) {
        for (std::size_t i = 0; i < kStrikes.size(); ++i) {
            const auto payoff = PwlFunction::call(kStrikes[i]);
            const Simulator sim(model, backward_induce(payoff, model));
            for_each_path(sim, 1'000'000, RngConfig{seed}, i, [&](std::uint64_t, const SimPath& p) {
                ++paths;
                const double s2 = p.s.back();
                if (p.v.back() - payoff(s2) < -1e-9 * std::max(1.0, s2)) ++violations;
            });
        }
    }
    if (violations) o.fail(std::to_string(violations) + " violations");
    else o.detail = std::to_string(paths) + " paths (5 seeds x 5 strikes), 0 violations";
    return o;
}

Outcome closed_form_equivalence() {
    Outcome o;
    const auto model = MarketModel::reference();
    const auto bounds = TwoStepBounds::from_model(model);
    double worst = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (double k : kStrikes) {
        const auto pricing = backward_induce(PwlFunction::call(k), model);
        for (int t = 0; t <= 1; ++t) {
            for (int i = 0; i < 10'000; ++i) {
                const double s = 1.0 + 299.0 * i / 9999.0;
                const auto cf = closed_form_call(t, s, k, bounds);
                const double v = pricing.value_fns[static_cast<std::size_t>(t)](s);
                const double th = strategy_at(pricing, static_cast<std::size_t>(t), s);
                const double err = std::max(std::abs(cf.value - v), std::abs(cf.theta - th));
                worst = std::max(worst, err);
                if (err > 1e-10) o.fail(fmt("K=%g t=%g s=%.6f", k, t, s) + fmt(" err=%.3g", err));
            }
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 1.0) o.fail(fmt("took %.3f s", secs));
    if (o.pass) o.detail = fmt("max abs diff %.3g in %.3f s", worst, secs);
    return o;
}

Outcome worked_values() {
    Outcome o;
    const auto model = MarketModel::reference();
    const auto pricing = backward_induce(PwlFunction::call(100.0), model);
    const double g0 = pricing.value0(100.0);
    const double th0 = strategy_at(pricing, 0, 100.0);
    const auto one = one_step_price(PwlFunction::call(100.0), 100.0, model.steps[1]);
    if (std::abs(g0 - 864.0 / 49.0) > 1e-10) o.fail(fmt("g_0(100)=%.12g", g0));
    if (std::abs(th0 - 288.0 / 490.0) > 1e-10) o.fail(fmt("theta_0(100)=%.12g", th0));
    if (!one.finite || std::abs(one.price - 120.0 / 7.0) > 1e-10 || std::abs(one.theta - 4.0 / 7.0) > 1e-10)
        o.fail(fmt("one-step price %.12g theta %.12g", one.price, one.theta));
    if (o.pass)
        o.detail = fmt("g_0(100)=%.6f theta_0(100)=%.6f", g0, th0) +
                   fmt(" one-step %.6f / %.6f", one.price, one.theta);
    return o;
}

Outcome envelope_suite() {
    Outcome o;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> slope(-6.0, 6.0);
    int convex_cases = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const bool convex = trial % 4 == 0;
        const int n = 1 + static_cast<int>(rng() % 12);
        const auto f = convex ? oracle::random_convex_pwl(rng, n) : oracle::random_pwl(rng, n);
        const auto dom = oracle::random_interval(rng);
        const auto env = upper_concave_envelope(f, dom);
        const auto& h = env.fn;
        const auto xs = oracle::candidate_points(f, dom, 60);
        const std::string tag = "case " + std::to_string(trial) + ": ";

        for (double x : xs)
            if (h(x) < f(x) - 1e-12 * std::max(1.0, std::abs(f(x)))) o.fail(tag + "domination");

        // concave on dom: slopes of consecutive samples do not increase
        for (std::size_t i = 2; i < xs.size(); ++i) {
            if (xs[i] - xs[i - 1] < 1e-9 || xs[i - 1] - xs[i - 2] < 1e-9) continue;
            const double a = (h(xs[i - 1]) - h(xs[i - 2])) / (xs[i - 1] - xs[i - 2]);
            const double b = (h(xs[i]) - h(xs[i - 1])) / (xs[i] - xs[i - 1]);
            if (b > a + 1e-9) o.fail(tag + "concavity");
        }

        // minimality: below every sampled dominating affine function
        for (int j = 0; j < 20; ++j) {
            const double alpha = slope(rng);
            double beta = -std::numeric_limits<double>::infinity();
            for (double x : xs) beta = std::max(beta, f(x) - alpha * x);
            const AffineFunction a{alpha, beta};
            if (!dominates(a, f, dom, 1e-9)) o.fail(tag + "sampled affine does not dominate");
            for (double x : xs)
                if (h(x) > a(x) + 1e-9) o.fail(tag + "minimality");
        }

        for (double x : xs)
            if (std::abs(h(x) - oracle::brute_envelope(f, dom, x, 60)) > 1e-9) o.fail(tag + "brute-force envelope");

        if (convex) {
            ++convex_cases;
            const double fl = f(dom.lo);
            const double fh = f(dom.hi);
            for (double x : xs) {
                const double chord = fl + (fh - fl) * (x - dom.lo) / dom.width();
                if (std::abs(h(x) - chord) > 1e-9) o.fail(tag + "chord");
            }
        }
    }
    if (o.pass) o.detail = "1000 random cases (" + std::to_string(convex_cases) + " convex)";
    return o;
}

Outcome aip_behavior() {
    Outcome o;
    auto bad = MarketModel::reference();
    bad.steps[1] = StepSpec::from_distribution(1.1, 1.2, 0.0, 0.2);
    if (check_aip(bad).holds) o.fail("check_aip accepted k_down = 1.1");
    const auto p = one_step_price(PwlFunction::call(100.0), 100.0, bad.steps[1]);
    if (p.finite || !(std::isinf(p.price) && p.price < 0)) o.fail("one-step price is not -inf");
    try {
        (void)backward_induce(PwlFunction::call(100.0), bad);
        o.fail("backward_induce accepted an AIP-violating model");
    } catch (const AipViolation& e) {
        if (e.step() != 1) o.fail("violation reported at the wrong step");
    }

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        MarketModel m;
        m.horizon = 1 + trial % 4;
        m.steps.clear();
        for (std::size_t t = 0; t <= m.horizon; ++t) {
            StepSpec s;
            s.k_down = 0.3 + 0.7 * u(rng);
            s.k_up = 1.0 + u(rng);
            if (trial % 5 == 0) s.k_up = 1.0;
            m.steps.push_back(s);
        }
        if (!check_aip(m).holds) o.fail("check_aip rejected a valid model");
        const auto r = backward_induce(PwlFunction::zero(), m);
        for (const auto& g : r.value_fns)
            for (double x : {0.0, 1.0, 50.0, 100.0, 1e4})
                if (g(x) != 0.0) o.fail("zero claim priced at " + fmt("%.3g", g(x)));
    }
    if (o.pass) o.detail = "k_down = 1.1 rejected with -inf one-step price; zero claim exactly 0 on 50 models";
    return o;
}

Outcome engine_cross_check() {
    Outcome o;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t T = 1; T <= 4; ++T) {
        for (int trial = 0; trial < 100; ++trial) {
            StepSpec s;
            s.k_down = 0.4 + 0.6 * u(rng);
            s.k_up = 1.0 + 0.8 * u(rng);
            const double k = 40.0 + 120.0 * u(rng);
            MarketModel m;
            m.horizon = T;
            m.steps.assign(T + 1, s);
            const auto payoff = PwlFunction::call(k);
            const auto r = backward_induce(payoff, m);
            for (double s0 : {70.0, 100.0, 130.0}) {
                const double tree = asian_tree_price(european_payoff(payoff), m, s0);
                const double g0 = r.value0(s0);
                const double err = std::abs(tree - g0) / std::max(1.0, std::abs(g0));
                worst = std::max(worst, err);
                if (err > 1e-10) o.fail(fmt("T=%g K=%g err=%.3g", static_cast<double>(T), k, err));
            }
        }
    }
    if (o.pass) o.detail = fmt("400 (T, k_down, k_up, K) cases, max diff %.3g", worst);
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    Outcome o;
    ExperimentConfig cfg;
    cfg.n_paths = 20'000;
    cfg.dump_paths = true;
    cfg.histograms = true;
    cfg.export_strategy = true;
    const auto base = fs::temp_directory_path() / "superhedge_acceptance_determinism";
    fs::remove_all(base);
    std::ostringstream log;
    if (run_experiment(cfg, {base / "a", 1}, log) != ExitCode::Ok ||
        run_experiment(cfg, {base / "b", 2}, log) != ExitCode::Ok) {
        o.fail("run failed: " + log.str());
        return o;
    }
    int files = 0;
    for (const auto& e : fs::directory_iterator(base / "a")) {
        if (e.path().extension() != ".csv") continue;
        ++files;
        const auto other = base / "b" / e.path().filename();
        if (!fs::exists(other) || slurp(e.path()) != slurp(other))
            o.fail(e.path().filename().string() + " differs");
    }
    if (files == 0) o.fail("no csv output");
    fs::remove_all(base);
    if (o.pass) o.detail = std::to_string(files) + " csv files byte-identical";
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {"table reproduction", table_reproduction},
        {"path-wise super-hedge", pathwise_super_hedge},
        {"closed-form equivalence", closed_form_equivalence},
        {"worked values", worked_values},
        {"envelope properties", envelope_suite},
        {"AIP behavior", aip_behavior},
        {"tree vs backward induction", engine_cross_check},
        {"determinism", determinism},
    };
    int failed = 0;
    int i = 0;
    for (const auto& c : criteria) {
        ++i;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", i, c.name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("%d/%d criteria passed\n", i - failed, i);
    return failed ? 1 : 0;
}
