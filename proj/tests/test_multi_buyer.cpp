#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bca/multi_buyer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace bca;

namespace {

BuyerModel uniform_single_buyer() {
    BuyerModel model;
    model.kind = BuyerKind::budgeted_single_item;
    model.distributions = {Distribution::uniform(0, 1)};
    model.budget = kInf;
    return model;
}

BuyerModel two_type_buyer(int num_items = 1) {
    BuyerModel model;
    model.kind = BuyerKind::correlated_matroid;
    model.budget = kInf;
    model.type_table = {{0.5, std::vector<double>(num_items, 1.0)},
                        {0.5, std::vector<double>(num_items, 2.0)}};
    model.matroid = Matroid::uniform_matroid(num_items, 1);
    return model;
}

MarketSpec two_uniform_buyers_market(int supply = 1) {
    MarketSpec market;
    market.items = {{"a", supply}};
    market.buyers = {uniform_single_buyer(), uniform_single_buyer()};
    market.gamma = 0.5;
    market.curve_options = {0.002, 1e-4};
    return market;
}

} // namespace

TEST_CASE("solve_opt_bar: symmetric single-item market") {
    SUBCASE("two buyers share one unit") {
        const auto market = two_uniform_buyers_market(1);
        const auto opt = solve_opt_bar(market);
        // grid oracle: max of 2 q (1 - q) under q1 + q2 <= 1 is 0.5 at (0.5, 0.5)
        CHECK(opt.value == doctest::Approx(0.5).epsilon(1e-3));
        CHECK(opt.q_bar.at(0, 0) == doctest::Approx(0.5).epsilon(0.01));
        CHECK(opt.q_bar.at(1, 0) == doctest::Approx(0.5).epsilon(0.01));
    }
    SUBCASE("single buyer keeps the unconstrained peak") {
        MarketSpec market;
        market.items = {{"a", 1}};
        market.buyers = {uniform_single_buyer()};
        market.curve_options = {0.002, 1e-4};
        const auto opt = solve_opt_bar(market);
        CHECK(opt.value == doctest::Approx(0.25).epsilon(1e-3));
        CHECK(opt.q_bar.at(0, 0) == doctest::Approx(0.5).epsilon(0.01));
    }
    SUBCASE("slack supply does not move the optimum") {
        const auto market = two_uniform_buyers_market(2);
        const auto opt = solve_opt_bar(market);
        CHECK(opt.value == doctest::Approx(0.5).epsilon(1e-3));
        CHECK(opt.q_bar.at(0, 0) == doctest::Approx(0.5).epsilon(0.01));
        CHECK(opt.q_bar.at(1, 0) == doctest::Approx(0.5).epsilon(0.01));
    }
}

TEST_CASE("solve_opt_bar embeds the correlated LP block") {
    MarketSpec market;
    market.items = {{"a", 1}};
    market.buyers = {two_type_buyer(), two_type_buyer()};
    const auto opt = solve_opt_bar(market);
    // each buyer sells to the high type at price 2 with ex-ante probability 1/2
    CHECK(opt.value == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(opt.q_bar.at(0, 0) + opt.q_bar.at(1, 0) <= 1.0 + 1e-7);
}

TEST_CASE("pre_rounding: supply safety, open floor, revenue window") {
    const auto market = two_uniform_buyers_market(1);
    const auto opt = solve_opt_bar(market);
    RoundingEngine engine(market, opt.q_bar);
    const std::vector<int> order{0, 1};

    const int trials = 60000;
    std::vector<int> open_counts(2, 0);
    double revenue_sum = 0, revenue_sq = 0;
    for (int t = 0; t < trials; ++t) {
        CoinStream type_coins(101, static_cast<uint64_t>(t), 0);
        CoinStream mech_coins(101, static_cast<uint64_t>(t), 1);
        const auto types = sample_types(market, type_coins);
        const auto outcome = engine.pre_round(order, types, mech_coins);
        CHECK(outcome.units_allocated[0] <= 1);
        for (int i = 0; i < 2; ++i) open_counts[i] += outcome.opened[static_cast<size_t>(i)];
        const double rev = outcome.objective_total(Objective::revenue);
        revenue_sum += rev;
        revenue_sq += rev * rev;
    }
    const double gamma = market.effective_gamma();
    const double freq_sigma = std::sqrt(gamma * (1 - gamma) / trials);
    for (int i = 0; i < 2; ++i) {
        const double freq = static_cast<double>(open_counts[i]) / trials;
        CHECK(freq >= gamma - 3 * freq_sigma);
    }
    const double mean = revenue_sum / trials;
    const double var = std::max(0.0, (revenue_sq - trials * mean * mean) / (trials - 1));
    const double sigma = std::sqrt(var / trials);
    // gamma * alpha * OPTbar <= mean revenue <= OPTbar
    CHECK(mean >= gamma * 1.0 * opt.value - 3 * sigma);
    CHECK(mean <= opt.value + 3 * sigma);
}

TEST_CASE("pre_rounding: zero caps produce the empty outcome") {
    const auto market = two_uniform_buyers_market(1);
    ExAnteMatrix zeros(2, 1);
    CoinStream type_coins(103, 0, 0);
    CoinStream mech_coins(103, 0, 1);
    const auto types = sample_types(market, type_coins);
    const std::vector<int> order{0, 1};
    const auto outcome = pre_rounding(market, zeros, order, types, mech_coins);
    CHECK(outcome.units_allocated[0] == 0);
    CHECK(outcome.payments == std::vector<double>{0.0, 0.0});
}

TEST_CASE("pre_rounding: large supply pushes the open frequency toward one") {
    MarketSpec market;
    market.items = {{"a", 97}};
    market.buyers = {uniform_single_buyer()};
    market.curve_options = {0.01, 1e-4};
    const auto opt = solve_opt_bar(market);
    RoundingEngine engine(market, opt.q_bar);
    CHECK(engine.gamma() == doctest::Approx(0.9).epsilon(1e-12));
    const std::vector<int> order{0};
    const int trials = 30000;
    int opened = 0;
    for (int t = 0; t < trials; ++t) {
        CoinStream type_coins(104, static_cast<uint64_t>(t), 0);
        CoinStream mech_coins(104, static_cast<uint64_t>(t), 1);
        const auto types = sample_types(market, type_coins);
        const auto outcome = engine.pre_round(order, types, mech_coins);
        opened += outcome.opened[0];
    }
    const double freq = static_cast<double>(opened) / trials;
    CHECK(freq >= 0.9 - 3 * std::sqrt(0.09 / trials));
}

TEST_CASE("pre_rounding: open frequencies are order-robust") {
    const auto market = two_uniform_buyers_market(1);
    const auto opt = solve_opt_bar(market);
    RoundingEngine engine(market, opt.q_bar);
    const int trials = 60000;
    std::vector<std::vector<double>> freqs;
    for (const std::vector<int>& order : {std::vector<int>{0, 1}, std::vector<int>{1, 0}}) {
        std::vector<int> counts(2, 0);
        for (int t = 0; t < trials; ++t) {
            CoinStream type_coins(105, static_cast<uint64_t>(t), 0);
            CoinStream mech_coins(105, static_cast<uint64_t>(t), order[0] == 0 ? 1 : 2);
            const auto types = sample_types(market, type_coins);
            const auto outcome = engine.pre_round(order, types, mech_coins);
            for (int i = 0; i < 2; ++i) counts[i] += outcome.opened[static_cast<size_t>(i)];
        }
        freqs.push_back({static_cast<double>(counts[0]) / trials,
                         static_cast<double>(counts[1]) / trials});
    }
    const double sigma = std::sqrt(0.25 / trials);
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(freqs[0][static_cast<size_t>(i)] - freqs[1][static_cast<size_t>(i)]) <=
              3 * 1.5 * sigma);
}

TEST_CASE("post_rounding: retention exactly gamma, payments scaled") {
    MarketSpec market;
    market.items = {{"a", 1}};
    market.buyers = {two_type_buyer(), two_type_buyer()};
    const auto opt = solve_opt_bar(market);
    RoundingEngine engine(market, opt.q_bar);
    const double gamma = market.effective_gamma();
    CHECK(gamma == doctest::Approx(0.5).epsilon(1e-12));

    // DP exactness: replaying the exact rules gives open probability gamma
    {
        Magician magician({gamma, 1});
        for (int i = 0; i < 2; ++i) {
            const auto& exact = *engine.full_build(i).exact_rule;
            const std::vector<double> phi = magician.cdf();
            const BoxPolicy policy = magician.offer_box(exact[0]);
            double open_prob = 0;
            for (size_t w = 0; w < phi.size(); ++w) {
                const double mass = phi[w] - (w > 0 ? phi[w - 1] : 0.0);
                open_prob += policy.open_prob(static_cast<int>(w)) * mass;
            }
            CHECK(open_prob == doctest::Approx(gamma).epsilon(1e-9));
        }
    }

    const int trials = 60000;
    int tentative_count = 0, retained_count = 0;
    for (int t = 0; t < trials; ++t) {
        CoinStream type_coins(107, static_cast<uint64_t>(t), 0);
        CoinStream mech_coins(107, static_cast<uint64_t>(t), 1);
        const auto types = sample_types(market, type_coins);
        const auto outcome = engine.post_round(types, mech_coins);
        CHECK(outcome.units_allocated[0] <= 1);
        for (int i = 0; i < 2; ++i) {
            if (outcome.tentative[static_cast<size_t>(i)]) {
                ++tentative_count;
                retained_count += outcome.allocations[static_cast<size_t>(i)];
            }
            // payment is gamma times the tentative menu payment (0 or 2)
            const double scaled = outcome.payments[static_cast<size_t>(i)];
            const bool hi_type = types[static_cast<size_t>(i)].type_id == 1;
            CHECK(scaled == doctest::Approx(hi_type ? gamma * 2.0 : 0.0).epsilon(1e-7));
        }
    }
    const double retention = static_cast<double>(retained_count) / tentative_count;
    const double sigma = std::sqrt(gamma * (1 - gamma) / tentative_count);
    CHECK(std::abs(retention - gamma) <= 3 * sigma);
}

TEST_CASE("post_rounding rejects mechanisms without an exact rule") {
    MarketSpec market;
    market.items = {{"a", 1}, {"b", 1}};
    BuyerModel unit;
    unit.kind = BuyerKind::unit_demand;
    unit.distributions = {Distribution::uniform(0, 1), Distribution::uniform(0, 1)};
    unit.budget = kInf;
    market.buyers = {unit};
    market.curve_options = {0.01, 1e-4};
    const auto opt = solve_opt_bar(market);
    RoundingEngine engine(market, opt.q_bar);
    CoinStream type_coins(109, 0, 0);
    CoinStream mech_coins(109, 0, 1);
    const auto types = sample_types(market, type_coins);
    CHECK_THROWS_AS(engine.post_round(types, mech_coins), std::invalid_argument);
}

TEST_CASE("sandwich: simulated objective sits between the rounding floor and OPTbar") {
    MarketSpec market;
    market.items = {{"a", 1}};
    market.buyers = {two_type_buyer(), two_type_buyer()};
    const auto opt = solve_opt_bar(market);
    RoundingEngine engine(market, opt.q_bar);
    const double gamma = market.effective_gamma();
    const int trials = 60000;
    double sum = 0, sum_sq = 0;
    for (int t = 0; t < trials; ++t) {
        CoinStream type_coins(111, static_cast<uint64_t>(t), 0);
        CoinStream mech_coins(111, static_cast<uint64_t>(t), 1);
        const auto types = sample_types(market, type_coins);
        const auto outcome = engine.post_round(types, mech_coins);
        const double rev = outcome.objective_total(Objective::revenue);
        sum += rev;
        sum_sq += rev * rev;
    }
    const double mean = sum / trials;
    const double var = std::max(0.0, (sum_sq - trials * mean * mean) / (trials - 1));
    const double sigma = std::sqrt(var / trials);
    CHECK(mean >= gamma * 1.0 * opt.value - 3 * sigma);
    CHECK(mean <= opt.value + 3 * sigma);
}

TEST_CASE("transform_multi_unit: bin arithmetic") {
    MarketSpec market;
    market.items = {{"x", 10}};
    market.buyers = {two_type_buyer()};
    SUBCASE("ten units over divisor three gives bins 4, 3, 3") {
        const auto out = transform_multi_unit(market, 3);
        REQUIRE(out.items.size() == 3);
        CHECK(out.items[0].supply == 4);
        CHECK(out.items[1].supply == 3);
        CHECK(out.items[2].supply == 3);
        int total = 0;
        for (const auto& item : out.items) total += item.supply;
        CHECK(total == 10);
        // valuations duplicated across the bins of the original item
        for (const auto& entry : out.buyers[0].type_table) {
            REQUIRE(entry.values.size() == 3);
            CHECK(entry.values[0] == entry.values[1]);
            CHECK(entry.values[1] == entry.values[2]);
        }
    }
    SUBCASE("divisor one keeps unit bins") {
        const auto out = transform_multi_unit(market, 1);
        REQUIRE(out.items.size() == 10);
        for (const auto& item : out.items) CHECK(item.supply == 1);
    }
    SUBCASE("divisor equal to supply keeps a single bin") {
        const auto out = transform_multi_unit(market, 10);
        REQUIRE(out.items.size() == 1);
        CHECK(out.items[0].supply == 10);
    }
    SUBCASE("supply below the divisor is rejected") {
        CHECK_THROWS_AS(transform_multi_unit(market, 11), std::invalid_argument);
    }
    SUBCASE("non-correlated buyers are rejected") {
        MarketSpec bad;
        bad.items = {{"x", 4}};
        bad.buyers = {uniform_single_buyer()};
        CHECK_THROWS_AS(transform_multi_unit(bad, 2), std::invalid_argument);
    }
}

TEST_CASE("transform_multi_unit: random markets conserve units and stay 0/1 per bin") {
    CoinStream gen(115, 0, 0);
    for (int inst = 0; inst < 10; ++inst) {
        MarketSpec market;
        const int item_count = 1 + static_cast<int>(gen.next_below(3));
        const int divisor = 2 + static_cast<int>(gen.next_below(3));
        int min_supply = 1000;
        for (int j = 0; j < item_count; ++j) {
            const int supply = divisor + static_cast<int>(gen.next_below(10));
            market.items.push_back({"i" + std::to_string(j), supply});
            min_supply = std::min(min_supply, supply);
        }
        const int buyers = 1 + static_cast<int>(gen.next_below(3));
        for (int i = 0; i < buyers; ++i) market.buyers.push_back(two_type_buyer(item_count));
        const auto transformed = transform_multi_unit(market, divisor);

        int total_before = 0, total_after = 0;
        for (const auto& item : market.items) total_before += item.supply;
        for (const auto& item : transformed.items) total_after += item.supply;
        CHECK(total_before == total_after);

        const auto opt = solve_opt_bar(transformed);
        RoundingEngine engine(transformed, opt.q_bar);
        std::vector<int> order(transformed.buyers.size());
        std::iota(order.begin(), order.end(), 0);
        for (int t = 0; t < 50; ++t) {
            CoinStream type_coins(200 + inst, static_cast<uint64_t>(t), 0);
            CoinStream mech_coins(200 + inst, static_cast<uint64_t>(t), 1);
            const auto types = sample_types(transformed, type_coins);
            const auto outcome = engine.pre_round(order, types, mech_coins);
            // allocations are 0/1 per bin by construction; supply respected
            for (size_t j = 0; j < transformed.items.size(); ++j)
                CHECK(outcome.units_allocated[j] <= transformed.items[j].supply);
        }
    }
}

TEST_CASE("market validation errors") {
    MarketSpec market;
    CHECK_THROWS_AS(market.validate(), std::invalid_argument); // no items
    market.items = {{"a", 0}};
    CHECK_THROWS_WITH_AS(market.validate(), doctest::Contains("supply"), std::invalid_argument);
    market.items = {{"a", 1}};
    BuyerModel bad;
    bad.kind = BuyerKind::unit_demand;
    bad.distributions = {Distribution::uniform(0, 1), Distribution::uniform(0, 1)};
    bad.budget = kInf;
    market.buyers = {bad};
    CHECK_THROWS_AS(market.validate(), std::invalid_argument); // dimension mismatch
}

TEST_CASE("mixed-kind market: ex-ante feasibility and rounding safety") {
    MarketSpec market;
    market.items = {{"a", 1}, {"b", 2}};
    BuyerModel unit;
    unit.kind = BuyerKind::unit_demand;
    unit.distributions = {Distribution::uniform(0, 1), Distribution::uniform(0, 2)};
    unit.budget = kInf;
    BuyerModel additive;
    additive.kind = BuyerKind::additive_budgeted;
    additive.distributions = {Distribution::uniform(0, 2), Distribution::uniform(0, 1)};
    additive.budget = 0.8;
    market.buyers = {unit, additive, two_type_buyer(2)};
    market.curve_options = {0.01, 1e-4};

    const auto opt = solve_opt_bar(market);
    for (int j = 0; j < 2; ++j) {
        double column = 0;
        for (int i = 0; i < 3; ++i) column += opt.q_bar.at(i, j);
        CHECK(column <= market.items[static_cast<size_t>(j)].supply + 1e-7);
    }

    RoundingEngine engine(market, opt.q_bar);
    const std::vector<int> order{0, 1, 2};
    const double gamma = market.effective_gamma();
    const int trials = 20000;
    std::vector<int> open_counts(6, 0);
    for (int t = 0; t < trials; ++t) {
        CoinStream type_coins(211, static_cast<uint64_t>(t), 0);
        CoinStream mech_coins(211, static_cast<uint64_t>(t), 1);
        const auto types = sample_types(market, type_coins);
        const auto outcome = engine.pre_round(order, types, mech_coins);
        for (int j = 0; j < 2; ++j)
            CHECK(outcome.units_allocated[static_cast<size_t>(j)] <=
                  market.items[static_cast<size_t>(j)].supply);
        for (size_t c = 0; c < 6; ++c) open_counts[c] += outcome.opened[c];
    }
    const double sigma = std::sqrt(gamma * (1 - gamma) / trials);
    for (size_t c = 0; c < 6; ++c) {
        const double freq = static_cast<double>(open_counts[c]) / trials;
        CHECK(freq >= gamma - 3 * sigma);
    }
}

TEST_CASE("multi-unit supply at the exact ex-ante boundary") {
    // six identical buyers share three units; the optimum loads the supply
    // row exactly, driving the magician along its boundary case
    MarketSpec market;
    market.items = {{"a", 3}};
    for (int i = 0; i < 6; ++i) market.buyers.push_back(uniform_single_buyer());
    market.curve_options = {0.002, 1e-4};
    const auto opt = solve_opt_bar(market);
    CHECK(opt.value == doctest::Approx(6 * 0.25).epsilon(1e-3));

    RoundingEngine engine(market, opt.q_bar);
    const double gamma = market.effective_gamma();
    CHECK(gamma == doctest::Approx(gamma_lower_bound(3)).epsilon(1e-12));
    std::vector<int> order(6);
    std::iota(order.begin(), order.end(), 0);
    const int trials = 20000;
    std::vector<int> open_counts(6, 0);
    double revenue = 0;
    for (int t = 0; t < trials; ++t) {
        CoinStream type_coins(213, static_cast<uint64_t>(t), 0);
        CoinStream mech_coins(213, static_cast<uint64_t>(t), 1);
        const auto types = sample_types(market, type_coins);
        const auto outcome = engine.pre_round(order, types, mech_coins);
        CHECK(outcome.units_allocated[0] <= 3);
        for (size_t i = 0; i < 6; ++i) open_counts[i] += outcome.opened[i];
        revenue += outcome.objective_total(Objective::revenue);
    }
    const double sigma = std::sqrt(gamma * (1 - gamma) / trials);
    for (size_t i = 0; i < 6; ++i) {
        const double freq = static_cast<double>(open_counts[i]) / trials;
        CHECK(freq >= gamma - 3 * sigma);
    }
    CHECK(revenue / trials >= gamma * opt.value - 0.02);
}

TEST_CASE("post_rounding over item-pricing buyers with exact rules") {
    const auto market = two_uniform_buyers_market(1);
    const auto opt = solve_opt_bar(market);
    RoundingEngine engine(market, opt.q_bar);
    const double gamma = market.effective_gamma();
    const int trials = 40000;
    long tentative = 0, retained = 0;
    for (int t = 0; t < trials; ++t) {
        CoinStream type_coins(217, static_cast<uint64_t>(t), 0);
        CoinStream mech_coins(217, static_cast<uint64_t>(t), 1);
        const auto types = sample_types(market, type_coins);
        const auto outcome = engine.post_round(types, mech_coins);
        CHECK(outcome.units_allocated[0] <= 1);
        for (int i = 0; i < 2; ++i) {
            if (outcome.tentative[static_cast<size_t>(i)]) {
                ++tentative;
                retained += outcome.allocations[static_cast<size_t>(i)];
            }
        }
    }
    const double retention = static_cast<double>(retained) / tentative;
    CHECK(std::abs(retention - gamma) <= 3 * std::sqrt(gamma * (1 - gamma) / tentative));
}

TEST_CASE("fuzz: random markets keep supply safety and the open floor") {
    CoinStream gen(219, 0, 0);
    for (int inst = 0; inst < 12; ++inst) {
        MarketSpec market;
        market.curve_options = {0.02, 1e-3};
        const int m = 1 + static_cast<int>(gen.next_below(3));
        for (int j = 0; j < m; ++j)
            market.items.push_back(
                {"i" + std::to_string(j), 1 + static_cast<int>(gen.next_below(4))});
        const int buyer_count = 1 + static_cast<int>(gen.next_below(4));
        bool post_capable = true;
        for (int i = 0; i < buyer_count; ++i) {
            BuyerModel buyer;
            const double pick = gen.next();
            if (m == 1 && pick < 0.3) {
                buyer.kind = BuyerKind::budgeted_single_item;
                buyer.distributions = {Distribution::uniform(0, gen.next(0.5, 2.0))};
                buyer.budget = gen.next() < 0.5 ? kInf : gen.next(0.2, 1.5);
            } else if (pick < 0.45) {
                buyer.kind = BuyerKind::unit_demand;
                for (int j = 0; j < m; ++j)
                    buyer.distributions.push_back(Distribution::uniform(0, gen.next(0.5, 2.0)));
                buyer.budget = kInf;
                post_capable = false;
            } else if (pick < 0.6) {
                buyer.kind = BuyerKind::additive_budgeted;
                for (int j = 0; j < m; ++j)
                    buyer.distributions.push_back(Distribution::uniform(0, gen.next(0.5, 2.0)));
                buyer.budget = gen.next(0.3, 2.0);
                post_capable = false;
            } else {
                buyer.kind = BuyerKind::correlated_matroid;
                buyer.budget = gen.next() < 0.5 ? kInf : gen.next(0.5, 3.0);
                const int types = 2 + static_cast<int>(gen.next_below(3));
                double rem = 1.0;
                for (int t = 0; t < types; ++t) {
                    TypeEntry entry;
                    entry.prob = t + 1 == types ? rem : rem * gen.next(0.2, 0.8);
                    rem -= t + 1 == types ? 0.0 : entry.prob;
                    for (int j = 0; j < m; ++j) entry.values.push_back(gen.next(0.0, 3.0));
                    buyer.type_table.push_back(std::move(entry));
                }
                if (m > 1 && gen.next() < 0.5) {
                    std::vector<std::vector<int>> parts(2);
                    for (int j = 0; j < m; ++j) parts[static_cast<size_t>(j % 2)].push_back(j);
                    if (parts[1].empty()) parts.pop_back();
                    std::vector<int> caps(parts.size());
                    for (int& c : caps) c = 1 + static_cast<int>(gen.next_below(2));
                    buyer.matroid = Matroid::partition_matroid(m, parts, caps);
                } else {
                    buyer.matroid =
                        Matroid::uniform_matroid(m, 1 + static_cast<int>(gen.next_below(m)));
                }
            }
            market.buyers.push_back(std::move(buyer));
        }

        const auto opt = solve_opt_bar(market);
        for (int j = 0; j < m; ++j) {
            double column = 0;
            for (int i = 0; i < buyer_count; ++i) column += opt.q_bar.at(i, j);
            CHECK(column <= market.items[static_cast<size_t>(j)].supply + 1e-7);
        }
        RoundingEngine engine(market, opt.q_bar);
        std::vector<int> order(static_cast<size_t>(buyer_count));
        std::iota(order.begin(), order.end(), 0);
        const double gamma = market.effective_gamma();
        const int trials = 4000;
        std::vector<int> open_counts(static_cast<size_t>(buyer_count) * m, 0);
        for (int t = 0; t < trials; ++t) {
            CoinStream type_coins(4000 + inst, static_cast<uint64_t>(t), 0);
            CoinStream mech_coins(4000 + inst, static_cast<uint64_t>(t), 1);
            const auto types = sample_types(market, type_coins);
            const auto pre = engine.pre_round(order, types, mech_coins);
            for (int j = 0; j < m; ++j)
                CHECK(pre.units_allocated[static_cast<size_t>(j)] <=
                      market.items[static_cast<size_t>(j)].supply);
            for (size_t c = 0; c < open_counts.size(); ++c) open_counts[c] += pre.opened[c];
            if (post_capable) {
                CoinStream post_coins(5000 + inst, static_cast<uint64_t>(t), 1);
                const auto post = engine.post_round(types, post_coins);
                for (int j = 0; j < m; ++j)
                    CHECK(post.units_allocated[static_cast<size_t>(j)] <=
                          market.items[static_cast<size_t>(j)].supply);
            }
        }
        const double sigma = std::sqrt(gamma * (1 - gamma) / trials);
        for (size_t c = 0; c < open_counts.size(); ++c) {
            const double freq = static_cast<double>(open_counts[c]) / trials;
            CHECK(freq >= gamma - 4 * sigma);
        }
    }
}
