#include "bca/harness.hpp"
#include "bca/magician.hpp"
#include "bca/prophet.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

namespace {

std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::vector<double> read_probs_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open probs file '" + path + "'");
    std::vector<double> probs;
    double p;
    while (in >> p) probs.push_back(p);
    if (probs.empty()) throw std::invalid_argument("probs file '" + path + "' is empty");
    return probs;
}

int run_auction(const std::string& config_path, const std::string& mechanism, int64_t trials,
                uint64_t seed, bool seed_given, const std::string& out_path,
                const std::string& format, const std::string& trace_path) {
    bca::ExperimentConfig config;
    config.market = bca::load_market(config_path);
    if (mechanism == "pre")
        config.mechanism = bca::RoundingKind::pre;
    else if (mechanism == "post")
        config.mechanism = bca::RoundingKind::post;
    else
        throw std::invalid_argument("mechanism must be 'pre' or 'post'");
    config.trials = trials;
    config.seed = seed_given ? seed : config.market.seed.value_or(seed);
    config.trace_path = trace_path;

    const bca::Report report = bca::run_trials(config);
    const bca::ReportFormat fmt =
        format == "json" ? bca::ReportFormat::json : bca::ReportFormat::csv;
    if (out_path.empty() || out_path == "-")
        bca::emit_report(report, fmt, std::cout);
    else
        bca::emit_report_file(report, fmt, out_path);
    std::cerr << "opt_bar=" << fmt12(report.opt_bar_value)
              << " mean=" << fmt12(report.mean_objective) << " trials=" << report.trials
              << " violations=" << report.violations << " runtime=" << report.runtime_seconds
              << "s\n";
    return report.failed ? 2 : 0;
}

int run_magician_trace(double gamma, int wands, const std::string& probs_path) {
    const std::vector<double> probs = read_probs_file(probs_path);
    bca::Magician magician({gamma, wands});
    std::cout << "round,theta,s";
    for (int w = 0; w <= wands; ++w) std::cout << ",phi_" << w;
    std::cout << "\n";
    for (double p : probs) {
        const int round = magician.round();
        const std::vector<double> phi = magician.cdf(); // CDF the round's threshold uses
        const bca::BoxPolicy policy = magician.offer_box(p);
        std::cout << round << "," << policy.theta << "," << fmt12(policy.s_at_theta);
        for (double v : phi) std::cout << "," << fmt12(v);
        std::cout << "\n";
    }
    return 0;
}

int run_gamma_table(int kmax) {
    std::cout << "k,gamma_lower_bound,hardness_upper_bound\n";
    for (int k = 1; k <= kmax; ++k)
        std::cout << k << "," << fmt12(bca::gamma_lower_bound(k)) << ","
                  << fmt12(bca::hardness_upper_bound(k)) << "\n";
    return 0;
}

int run_prophet(const std::string& config_path, int64_t trials, uint64_t seed,
                const std::string& out_path) {
    const bca::ProphetInstance instance = bca::load_prophet(config_path);
    const bca::ProphetThreshold threshold = bca::find_threshold(instance);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path, std::ios::binary);
        if (!file) throw std::runtime_error("cannot open output '" + out_path + "'");
        out = &file;
    }
    *out << "trial,gambler_total,prophet_total\n";
    double gambler_sum = 0, gambler_sq = 0, prophet_sum = 0;
    std::vector<double> draws(instance.distributions.size());
    for (int64_t trial = 0; trial < trials; ++trial) {
        bca::CoinStream draw_coins(seed, static_cast<uint64_t>(trial), 0);
        bca::CoinStream mech_coins(seed, static_cast<uint64_t>(trial), 1);
        for (size_t i = 0; i < draws.size(); ++i)
            draws[i] = instance.distributions[i].sample(draw_coins.next());
        const bca::GamblerRun run = bca::run_gambler(instance, threshold, draws, mech_coins);
        const double prophet = bca::prophet_payoff(draws, instance.k);
        gambler_sum += run.total;
        gambler_sq += run.total * run.total;
        prophet_sum += prophet;
        *out << trial << "," << fmt12(run.total) << "," << fmt12(prophet) << "\n";
    }
    const double ratio = prophet_sum > 0 ? gambler_sum / prophet_sum : 1.0;
    const double mean = gambler_sum / static_cast<double>(trials);
    double half = 0;
    if (trials > 1) {
        const double var =
            std::max(0.0, (gambler_sq - trials * mean * mean) / static_cast<double>(trials - 1));
        half = bca::normal_quantile(0.9995) * std::sqrt(var / static_cast<double>(trials));
    }
    *out << "summary,threshold=" << fmt12(threshold.value) << ",ratio=" << fmt12(ratio)
         << ",gambler_ci=" << fmt12(mean - half) << ":" << fmt12(mean + half) << "\n";
    std::cerr << "threshold=" << fmt12(threshold.value)
              << " gambler_mean=" << fmt12(gambler_sum / static_cast<double>(trials))
              << " prophet_mean=" << fmt12(prophet_sum / static_cast<double>(trials))
              << " ratio=" << fmt12(ratio)
              << " gamma_k=" << fmt12(bca::gamma_lower_bound(instance.k)) << "\n";
    return 0;
}

int run_hardness(int k, int n, int64_t trials, uint64_t seed) {
    const bca::HardnessResult result = bca::hardness_experiment(k, n, trials, seed);
    std::cout << "k,n,trials,empirical_mean,exact_mean,asymptotic_cap,empirical_per_wand\n";
    std::cout << k << "," << n << "," << trials << "," << fmt12(result.empirical_mean) << ","
              << fmt12(result.exact_mean) << "," << fmt12(result.asymptotic_cap) << ","
              << fmt12(result.empirical_mean / k) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian combinatorial auction decomposition toolkit"};
    app.require_subcommand(1);

    auto* auction = app.add_subcommand("auction", "solve OPT-bar and simulate a rounding mechanism");
    std::string config_path, mechanism = "pre", out_path, format = "csv";
    int64_t trials = 100000;
    uint64_t seed = 0;
    auction->add_option("--config", config_path, "market config JSON")->required();
    auction->add_option("--mechanism", mechanism, "pre|post");
    auction->add_option("--trials", trials, "Monte Carlo trials");
    auto* seed_opt = auction->add_option("--seed", seed, "base seed (overrides the config file)");
    auction->add_option("--out", out_path, "output path ('-' for stdout)");
    auction->add_option("--format", format, "csv|json");
    std::string trace_path;
    auction->add_option("--trace", trace_path, "per-trial outcome CSV path");

    auto* trace = app.add_subcommand("magician-trace", "per-round magician DP trace as CSV");
    double gamma = 0.5;
    int wands = 1;
    std::string probs_path;
    trace->add_option("--gamma", gamma, "target open probability")->required();
    trace->add_option("--wands", wands, "wand budget k")->required();
    trace->add_option("--probs", probs_path, "file of box probabilities")->required();

    auto* table = app.add_subcommand("gamma-table", "per-k lower and hardness bounds");
    int kmax = 10;
    table->add_option("--kmax", kmax, "largest k");

    auto* prophet = app.add_subcommand("prophet", "k-choice gambler vs prophet simulation");
    std::string prophet_config, prophet_out;
    int64_t prophet_trials = 100000;
    uint64_t prophet_seed = 0;
    prophet->add_option("--config", prophet_config, "prophet instance JSON")->required();
    prophet->add_option("--trials", prophet_trials, "Monte Carlo trials");
    prophet->add_option("--seed", prophet_seed, "base seed");
    prophet->add_option("--out", prophet_out, "output path ('-' for stdout)");

    auto* hardness = app.add_subcommand("hardness", "adversarial prize-box experiment");
    int hk = 1, hn = 1000;
    int64_t htrials = 1000000;
    uint64_t hseed = 0;
    hardness->add_option("--k", hk, "wand budget");
    hardness->add_option("--n", hn, "number of boxes");
    hardness->add_option("--trials", htrials, "Monte Carlo trials");
    hardness->add_option("--seed", hseed, "base seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(auction))
            return run_auction(config_path, mechanism, trials, seed, seed_opt->count() > 0,
                               out_path, format, trace_path);
        if (app.got_subcommand(trace)) return run_magician_trace(gamma, wands, probs_path);
        if (app.got_subcommand(table)) return run_gamma_table(kmax);
        if (app.got_subcommand(prophet))
            return run_prophet(prophet_config, prophet_trials, prophet_seed, prophet_out);
        if (app.got_subcommand(hardness)) return run_hardness(hk, hn, htrials, hseed);
    } catch (const bca::SupplyViolation& e) {
        std::cerr << "FAILED: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
