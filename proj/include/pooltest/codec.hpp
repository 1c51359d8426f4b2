#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pooltest/error.hpp"

#include "pooltest/ct_model.hpp"
#include "pooltest/metrics.hpp"
#include "pooltest/priors.hpp"
#include "pooltest/scenarios.hpp"

namespace pooltest {

using json = nlohmann::json;

// Raised while decoding user input; names the offending field.
class ValidationError : public DomainError {
public:
    ValidationError(std::string field, const std::string& message)
        : DomainError(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

std::string format_double(double x);

json to_json(const BetaParams& p);
json to_json(const PriorSpec& p);
json to_json(const WeibullParams& w);
json to_json(const CtPopulation& pop);
json to_json(const MetricSet& m);
json to_json(const SweepRow& r, bool paper_literal_missed = false);
json to_json(const Band& b);
json to_json(const ScenarioResult& r, bool paper_literal_missed = false);
json to_json(const Recommendation& r);
json to_json(const CatalogEntry& e);
json catalog_json();

// {"point": x} | {"beta": {"alpha": a, "beta": b}} | {"ci95": {"lo": l, "hi": h}} | bare number.
PriorSpec prior_from_json(const json& j, const std::string& field);
// "0.054" | "beta:a,b" | "ci:lo,hi"
PriorSpec parse_prior_flag(const std::string& text, const std::string& field);

Scenario scenario_from_json(const json& j);

struct NRange {
    int min = 1;
    int max = 30;
};

// "5" or "1..30"
NRange parse_n_range(const std::string& text, const std::string& field);

std::string metrics_csv_header();
std::string sweep_csv(const std::vector<SweepRow>& rows, bool paper_literal_missed = false);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);
std::string scenario_csv(const ScenarioResult& r, bool paper_literal_missed = false);

}  // namespace pooltest
