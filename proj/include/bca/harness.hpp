#pragma once
#include "bca/multi_buyer.hpp"
#include "bca/prophet.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace bca {

enum class RoundingKind { pre, post };
enum class ReportFormat { csv, json };

struct ExperimentConfig {
    MarketSpec market;
    RoundingKind mechanism = RoundingKind::pre;
    int64_t trials = 100000;
    uint64_t seed = 0;
    double confidence = 0.999;
    std::string trace_path; // when set: per-trial CSV of trial,buyer,item,allocated,payment
};

struct CellStat {
    double open_freq = 0;
    double alloc_freq = 0;
};

struct Report {
    double opt_bar_value = 0;
    double mean_objective = 0;
    double ci_lo = 0, ci_hi = 0;
    int buyers = 0, items = 0;
    std::vector<CellStat> cells; // row-major buyers x items
    int64_t trials = 0;
    int64_t violations = 0;
    bool failed = false;
    double runtime_seconds = 0; // never serialized: reports must be byte-stable
};

MarketSpec parse_market_json(const std::string& text);
MarketSpec load_market(const std::string& path);

ProphetInstance parse_prophet_json(const std::string& text);
ProphetInstance load_prophet(const std::string& path);

Report run_trials(const ExperimentConfig& config);

void emit_report(const Report& report, ReportFormat format, std::ostream& out);
void emit_report_file(const Report& report, ReportFormat format, const std::string& path);

// Menu policies as a JSON table (type id -> marginals, payment) for inspection.
std::string menu_json(const OfferPolicy& policy);

// Inverse standard normal CDF (Acklam's rational approximation).
double normal_quantile(double p);

} // namespace bca
