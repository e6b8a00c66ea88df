#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bca/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

using namespace bca;

namespace {

const char* kTwoBuyerMarket = R"({
  "items": [{"id": "a", "supply": 1}],
  "buyers": [
    {"kind": "budgeted_single_item", "distributions": [{"kind": "uniform", "a": 0, "b": 1}]},
    {"kind": "budgeted_single_item", "distributions": [{"kind": "uniform", "a": 0, "b": 1}]}
  ],
  "objective": "revenue",
  "gamma": 0.5,
  "epsilon": 0.005,
  "grid_floor": 1e-4
})";

std::string emit_to_string(const Report& report, ReportFormat format) {
    std::ostringstream out;
    emit_report(report, format, out);
    return out.str();
}

} // namespace

TEST_CASE("parse_market_json: minimal market and literals") {
    const auto market = parse_market_json(kTwoBuyerMarket);
    CHECK(market.items.size() == 1);
    CHECK(market.buyers.size() == 2);
    CHECK(market.gamma == doctest::Approx(0.5));
    CHECK(market.curve_options.epsilon == doctest::Approx(0.005));

    const auto correlated = parse_market_json(R"({
      "items": [{"id": "a", "supply": 2}, {"id": "b", "supply": 2}],
      "buyers": [{
        "kind": "correlated_matroid",
        "budget": 5,
        "types": [{"prob": 0.5, "values": [1, 2]}, {"prob": 0.5, "values": [2, 1]}],
        "matroid": {"kind": "partition", "parts": [[0], [1]], "capacities": [1, 1]}
      }],
      "objective": "welfare"
    })");
    CHECK(correlated.objective == Objective::welfare);
    CHECK(correlated.buyers[0].matroid.kind == Matroid::Kind::partition);
}

TEST_CASE("parse_market_json: named validation errors") {
    CHECK_THROWS_WITH_AS(parse_market_json(R"({
      "items": [{"id": "a", "supply": 0}],
      "buyers": []
    })"), doctest::Contains("supply"), std::invalid_argument);

    CHECK_THROWS_WITH_AS(parse_market_json(R"({
      "items": [{"id": "a", "supply": 1}, {"id": "b", "supply": 1}],
      "buyers": [{"kind": "unit_demand",
                  "distributions": [{"kind": "uniform", "a": 0, "b": 1}]}]
    })"), doctest::Contains("item count"), std::invalid_argument);

    CHECK_THROWS_AS(parse_market_json("{not json"), std::invalid_argument);
    CHECK_THROWS_AS(load_market("/nonexistent/market.json"), std::invalid_argument);
}

TEST_CASE("run_trials: revenue window and clean supply accounting") {
    ExperimentConfig config;
    config.market = parse_market_json(kTwoBuyerMarket);
    config.mechanism = RoundingKind::pre;
    config.trials = 40000;
    config.seed = 42;
    const auto report = run_trials(config);
    CHECK_FALSE(report.failed);
    CHECK(report.violations == 0);
    CHECK(report.opt_bar_value == doctest::Approx(0.5).epsilon(2e-3));
    CHECK(report.mean_objective >= 0.25 - 0.01);
    CHECK(report.mean_objective <= 0.5 + 0.01);
    REQUIRE(report.cells.size() == 2);
    for (const CellStat& cell : report.cells) CHECK(cell.open_freq >= 0.5 - 0.01);
}

TEST_CASE("run_trials: single trial is deterministic with a degenerate interval") {
    ExperimentConfig config;
    config.market = parse_market_json(kTwoBuyerMarket);
    config.trials = 1;
    config.seed = 7;
    const auto a = run_trials(config);
    const auto b = run_trials(config);
    CHECK(a.mean_objective == b.mean_objective);
    CHECK(a.ci_lo == a.mean_objective);
    CHECK(a.ci_hi == a.mean_objective);
}

TEST_CASE("reports are byte-identical across reruns") {
    ExperimentConfig config;
    config.market = parse_market_json(kTwoBuyerMarket);
    config.trials = 2000;
    config.seed = 99;
    const auto a = run_trials(config);
    const auto b = run_trials(config);
    CHECK(emit_to_string(a, ReportFormat::csv) == emit_to_string(b, ReportFormat::csv));
    CHECK(emit_to_string(a, ReportFormat::json) == emit_to_string(b, ReportFormat::json));
}

TEST_CASE("confidence interval width shrinks like one over root trials") {
    ExperimentConfig config;
    config.market = parse_market_json(kTwoBuyerMarket);
    config.seed = 31;
    config.trials = 4000;
    const auto narrow = run_trials(config);
    config.trials = 16000;
    const auto wide = run_trials(config);
    const double w1 = narrow.ci_hi - narrow.ci_lo;
    const double w2 = wide.ci_hi - wide.ci_lo;
    CHECK(w2 < w1);
    CHECK(w1 / w2 == doctest::Approx(2.0).epsilon(0.25)); // quadrupled trials halve the width
}

TEST_CASE("emit_report formats") {
    Report report;
    report.opt_bar_value = 0.5;
    report.mean_objective = 0.375;
    report.ci_lo = 0.37;
    report.ci_hi = 0.38;
    report.buyers = 1;
    report.items = 1;
    report.cells = {CellStat{0.5, 0.25}};
    report.trials = 10;
    SUBCASE("csv columns") {
        const std::string csv = emit_to_string(report, ReportFormat::csv);
        CHECK(csv.find("metric,value,ci_lo,ci_hi\n") == 0);
        CHECK(csv.find("opt_bar,0.5,,") != std::string::npos);
        CHECK(csv.find("open_freq_b0_i0,0.5,,") != std::string::npos);
        CHECK(csv.find("alloc_freq_b0_i0,0.25,,") != std::string::npos);
    }
    SUBCASE("json keys") {
        const std::string json_text = emit_to_string(report, ReportFormat::json);
        CHECK(json_text.find("\"opt_bar\"") != std::string::npos);
        CHECK(json_text.find("\"cells\"") != std::string::npos);
    }
    SUBCASE("no buyers means no per-cell rows") {
        Report empty;
        const std::string csv = emit_to_string(empty, ReportFormat::csv);
        CHECK(csv.find("open_freq") == std::string::npos);
        CHECK(csv.find("metric,value,ci_lo,ci_hi\n") == 0);
    }
}

TEST_CASE("normal_quantile reference values") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(normal_quantile(0.9995) == doctest::Approx(3.2905).epsilon(1e-3));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-4));
    CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
}

TEST_CASE("menu_json exports the type table") {
    BuyerModel buyer;
    buyer.kind = BuyerKind::correlated_matroid;
    buyer.budget = kInf;
    buyer.type_table = {{0.5, {1.0}}, {0.5, {2.0}}};
    buyer.matroid = Matroid::uniform_matroid(1, 1);
    const auto built = build_correlated_lp(buyer, std::vector<double>{1.0}, Objective::revenue);
    const std::string text = menu_json(built.policy);
    CHECK(text.find("\"marginals\"") != std::string::npos);
    CHECK(text.find("\"payment\"") != std::string::npos);

    OfferPolicy pricing;
    CHECK_THROWS_AS(menu_json(pricing), std::invalid_argument);
}

TEST_CASE("market file seed and alpha fields") {
    const auto market = parse_market_json(R"({
      "items": [{"id": "a", "supply": 1}],
      "buyers": [{"kind": "budgeted_single_item", "alpha": 1.0,
                  "distributions": [{"kind": "uniform", "a": 0, "b": 1}]}],
      "seed": 1234
    })");
    REQUIRE(market.seed.has_value());
    CHECK(*market.seed == 1234);

    CHECK_THROWS_WITH_AS(parse_market_json(R"({
      "items": [{"id": "a", "supply": 1}],
      "buyers": [{"kind": "budgeted_single_item", "alpha": 0.5,
                  "distributions": [{"kind": "uniform", "a": 0, "b": 1}]}]
    })"), doctest::Contains("alpha"), std::invalid_argument);
}

TEST_CASE("file round trip: load market, emit both report formats") {
    const std::string market_path = "harness_roundtrip_market.json";
    {
        std::ofstream out(market_path);
        out << kTwoBuyerMarket;
    }
    ExperimentConfig config;
    config.market = load_market(market_path);
    config.trials = 500;
    config.seed = 5;
    const auto report = run_trials(config);
    for (const char* path : {"harness_roundtrip.csv", "harness_roundtrip.json"}) {
        const ReportFormat fmt = std::string(path).ends_with(".csv") ? ReportFormat::csv
                                                                     : ReportFormat::json;
        emit_report_file(report, fmt, path);
        std::ifstream in(path, std::ios::binary);
        REQUIRE(in.good());
        std::stringstream buf;
        buf << in.rdbuf();
        CHECK(buf.str() == emit_to_string(report, fmt));
        std::remove(path);
    }
    std::remove(market_path.c_str());
}

TEST_CASE("outcome trace CSV lists one row per trial, buyer and item") {
    ExperimentConfig config;
    config.market = parse_market_json(kTwoBuyerMarket);
    config.trials = 25;
    config.seed = 3;
    config.trace_path = "harness_trace.csv";
    run_trials(config);
    std::ifstream in(config.trace_path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "trial,buyer,item,allocated,payment");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 25 * 2 * 1);
    std::remove(config.trace_path.c_str());
}
