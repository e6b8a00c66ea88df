#include "bca/harness.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bca {

namespace {

using nlohmann::json;

Distribution parse_distribution(const json& spec) {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "uniform") {
        return Distribution::uniform(spec.at("a").get<double>(), spec.at("b").get<double>());
    }
    if (kind == "discrete") {
        std::vector<std::pair<double, double>> points;
        for (const auto& p : spec.at("points"))
            points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        return Distribution::discrete(std::move(points));
    }
    if (kind == "pwl_cdf") {
        std::vector<std::pair<double, double>> points;
        for (const auto& p : spec.at("points"))
            points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        return Distribution::pwl_cdf(std::move(points));
    }
    if (kind == "point_mass") {
        return Distribution::point_mass(spec.at("value").get<double>());
    }
    throw std::invalid_argument("distribution: unknown kind '" + kind + "'");
}

double parse_budget(const json& buyer) {
    if (!buyer.contains("budget") || buyer.at("budget").is_null()) return kInf;
    if (buyer.at("budget").is_string()) {
        const auto s = buyer.at("budget").get<std::string>();
        if (s == "inf" || s == "infinity") return kInf;
        throw std::invalid_argument("budget: unrecognized value '" + s + "'");
    }
    return buyer.at("budget").get<double>();
}

Matroid parse_matroid(const json& spec, int num_items) {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "uniform")
        return Matroid::uniform_matroid(num_items, spec.at("rank").get<int>());
    if (kind == "partition") {
        std::vector<std::vector<int>> parts;
        for (const auto& p : spec.at("parts")) parts.push_back(p.get<std::vector<int>>());
        return Matroid::partition_matroid(num_items, parts,
                                          spec.at("capacities").get<std::vector<int>>());
    }
    throw std::invalid_argument("matroid: unknown kind '" + kind + "'");
}

BuyerModel parse_buyer(const json& spec, int num_items) {
    BuyerModel buyer;
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "budgeted_single_item")
        buyer.kind = BuyerKind::budgeted_single_item;
    else if (kind == "unit_demand")
        buyer.kind = BuyerKind::unit_demand;
    else if (kind == "additive_budgeted")
        buyer.kind = BuyerKind::additive_budgeted;
    else if (kind == "correlated_matroid")
        buyer.kind = BuyerKind::correlated_matroid;
    else
        throw std::invalid_argument("buyer: unknown kind '" + kind + "'");

    buyer.budget = parse_budget(spec);
    if (spec.contains("alpha")) {
        const double alpha = spec.at("alpha").get<double>();
        if (std::abs(alpha - buyer.alpha()) > 1e-9)
            throw std::invalid_argument("buyer: alpha " + std::to_string(alpha) +
                                        " contradicts the '" + kind + "' mechanism");
    }
    if (buyer.kind == BuyerKind::correlated_matroid) {
        for (const auto& t : spec.at("types")) {
            TypeEntry entry;
            entry.prob = t.at("prob").get<double>();
            entry.values = t.at("values").get<std::vector<double>>();
            buyer.type_table.push_back(std::move(entry));
        }
        buyer.matroid = parse_matroid(spec.at("matroid"), num_items);
    } else {
        for (const auto& d : spec.at("distributions"))
            buyer.distributions.push_back(parse_distribution(d));
    }
    return buyer;
}

} // namespace

MarketSpec parse_market_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("market config: ") + e.what());
    }
    MarketSpec market;
    for (const auto& item : doc.at("items")) {
        ItemSpec spec;
        spec.id = item.at("id").is_string() ? item.at("id").get<std::string>()
                                            : item.at("id").dump();
        spec.supply = item.at("supply").get<int>();
        market.items.push_back(std::move(spec));
    }
    const int m = market.num_items();
    for (const auto& buyer : doc.at("buyers")) market.buyers.push_back(parse_buyer(buyer, m));
    if (doc.contains("objective")) {
        const auto obj = doc.at("objective").get<std::string>();
        if (obj == "revenue")
            market.objective = Objective::revenue;
        else if (obj == "welfare")
            market.objective = Objective::welfare;
        else
            throw std::invalid_argument("market: unknown objective '" + obj + "'");
    }
    if (doc.contains("gamma")) market.gamma = doc.at("gamma").get<double>();
    if (doc.contains("seed")) market.seed = doc.at("seed").get<uint64_t>();
    if (doc.contains("epsilon")) market.curve_options.epsilon = doc.at("epsilon").get<double>();
    if (doc.contains("grid_floor"))
        market.curve_options.grid_floor = doc.at("grid_floor").get<double>();
    market.validate();
    return market;
}

MarketSpec load_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_market: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_market_json(buf.str());
}

ProphetInstance parse_prophet_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("prophet config: ") + e.what());
    }
    ProphetInstance instance;
    instance.k = doc.at("k").get<int>();
    if (instance.k < 1) throw std::invalid_argument("prophet config: k must be >= 1");
    for (const auto& d : doc.at("distributions"))
        instance.distributions.push_back(parse_distribution(d));
    if (instance.distributions.empty())
        throw std::invalid_argument("prophet config: no distributions");
    return instance;
}

ProphetInstance load_prophet(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_prophet: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_prophet_json(buf.str());
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0, 1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

namespace {

std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

Report run_trials(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const MarketSpec& market = config.market;
    market.validate();
    if (config.trials < 1) throw std::invalid_argument("run_trials: trials must be >= 1");

    const OptBarResult opt = solve_opt_bar(market);
    RoundingEngine engine(market, opt.q_bar);

    const int n = market.num_buyers();
    const int m = market.num_items();
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    Report report;
    report.opt_bar_value = opt.value;
    report.buyers = n;
    report.items = m;
    report.cells.assign(static_cast<size_t>(n) * m, CellStat{});
    report.trials = config.trials;

    double sum = 0, sum_sq = 0;
    std::vector<int64_t> open_counts(static_cast<size_t>(n) * m, 0);
    std::vector<int64_t> alloc_counts(static_cast<size_t>(n) * m, 0);
    int64_t completed = 0;

    std::ofstream trace;
    if (!config.trace_path.empty()) {
        trace.open(config.trace_path, std::ios::binary);
        if (!trace) throw std::runtime_error("run_trials: cannot open trace file");
        trace << "trial,buyer,item,allocated,payment\n";
    }

    for (int64_t trial = 0; trial < config.trials; ++trial) {
        CoinStream type_coins(config.seed, static_cast<uint64_t>(trial), 0);
        CoinStream mech_coins(config.seed, static_cast<uint64_t>(trial), 1);
        const TypeProfile types = sample_types(market, type_coins);
        Outcome outcome;
        try {
            outcome = config.mechanism == RoundingKind::pre
                          ? engine.pre_round(order, types, mech_coins)
                          : engine.post_round(types, mech_coins);
        } catch (const SupplyViolation&) {
            ++report.violations;
            report.failed = true;
            break;
        }
        if (trace.is_open()) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j)
                    trace << trial << "," << i << "," << j << ","
                          << static_cast<int>(outcome.alloc(i, j)) << ","
                          << fmt12(outcome.payments[static_cast<size_t>(i)]) << "\n";
        }
        const double obj = outcome.objective_total(market.objective);
        sum += obj;
        sum_sq += obj * obj;
        for (size_t c = 0; c < open_counts.size(); ++c) {
            open_counts[c] += outcome.opened[c];
            alloc_counts[c] += outcome.allocations[c];
        }
        ++completed;
    }

    if (completed > 0) {
        report.mean_objective = sum / static_cast<double>(completed);
        double var = 0;
        if (completed > 1) {
            var = (sum_sq - static_cast<double>(completed) * report.mean_objective *
                                report.mean_objective) /
                  static_cast<double>(completed - 1);
            var = std::max(var, 0.0);
        }
        const double z = normal_quantile(1.0 - (1.0 - config.confidence) / 2.0);
        const double half = z * std::sqrt(var / static_cast<double>(completed));
        report.ci_lo = report.mean_objective - half;
        report.ci_hi = report.mean_objective + half;
        for (size_t c = 0; c < report.cells.size(); ++c) {
            report.cells[c].open_freq =
                static_cast<double>(open_counts[c]) / static_cast<double>(completed);
            report.cells[c].alloc_freq =
                static_cast<double>(alloc_counts[c]) / static_cast<double>(completed);
        }
    }
    report.trials = completed;
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

void emit_report(const Report& report, ReportFormat format, std::ostream& out) {
    if (format == ReportFormat::csv) {
        out << "metric,value,ci_lo,ci_hi\n";
        out << "status," << (report.failed ? "FAILED" : "OK") << ",,\n";
        out << "opt_bar," << fmt12(report.opt_bar_value) << ",,\n";
        out << "mean_objective," << fmt12(report.mean_objective) << "," << fmt12(report.ci_lo)
            << "," << fmt12(report.ci_hi) << "\n";
        out << "trials," << report.trials << ",,\n";
        out << "violations," << report.violations << ",,\n";
        for (int i = 0; i < report.buyers; ++i)
            for (int j = 0; j < report.items; ++j) {
                const CellStat& cell = report.cells[static_cast<size_t>(i) * report.items + j];
                out << "open_freq_b" << i << "_i" << j << "," << fmt12(cell.open_freq) << ",,\n";
                out << "alloc_freq_b" << i << "_i" << j << "," << fmt12(cell.alloc_freq)
                    << ",,\n";
            }
        return;
    }
    nlohmann::ordered_json doc;
    doc["status"] = report.failed ? "FAILED" : "OK";
    doc["opt_bar"] = fmt12(report.opt_bar_value);
    doc["mean_objective"] = fmt12(report.mean_objective);
    doc["ci"] = {fmt12(report.ci_lo), fmt12(report.ci_hi)};
    doc["trials"] = report.trials;
    doc["violations"] = report.violations;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (int i = 0; i < report.buyers; ++i)
        for (int j = 0; j < report.items; ++j) {
            const CellStat& cell = report.cells[static_cast<size_t>(i) * report.items + j];
            nlohmann::ordered_json entry;
            entry["buyer"] = i;
            entry["item"] = j;
            entry["open_freq"] = fmt12(cell.open_freq);
            entry["alloc_freq"] = fmt12(cell.alloc_freq);
            cells.push_back(std::move(entry));
        }
    doc["cells"] = std::move(cells);
    out << doc.dump(2) << "\n";
}

void emit_report_file(const Report& report, ReportFormat format, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_report: cannot open '" + path + "'");
    emit_report(report, format, out);
}

std::string menu_json(const OfferPolicy& policy) {
    if (policy.kind != OfferPolicy::Kind::menu)
        throw std::invalid_argument("menu_json: policy is not a menu");
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (size_t t = 0; t < policy.menu.size(); ++t) {
        nlohmann::ordered_json entry;
        entry["type"] = t;
        entry["marginals"] = policy.menu[t].marginals;
        entry["payment"] = policy.menu[t].payment;
        doc.push_back(std::move(entry));
    }
    return doc.dump(2);
}

} // namespace bca
