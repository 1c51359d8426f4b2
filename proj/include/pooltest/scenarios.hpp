#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pooltest/metrics.hpp"
#include "pooltest/priors.hpp"

namespace pooltest {

struct CatalogEntry {
    enum class Parameter { Prevalence, Transmission };

    std::string name;
    Parameter parameter;
    BetaParams beta;
    double stated_mean;  // as printed, a probability
    double ci_lo;        // printed 95% interval, probabilities
    double ci_hi;
    std::string citation;
};

const std::vector<CatalogEntry>& builtin_catalog();
const CatalogEntry& lookup(const std::string& name);

struct Scenario {
    std::string name;
    PriorSpec pi;
    PriorSpec tau;
    std::string citation;
};

Scenario make_scenario(const std::string& prevalence_name, const std::string& transmission_name);

enum class SettingKind { Fixed, TauGraph, PiGraph, AllGraph };

std::string to_string(SettingKind s);
SettingKind parse_setting(const std::string& s);

struct SimulationSetting {
    SettingKind kind = SettingKind::Fixed;
    int replicates = 100;
    std::uint64_t seed = 0x5eed;
};

struct Band {
    double point = 0.0;   // evaluated at the prior means
    double median = 0.0;
    double lo = 0.0;      // 2.5% empirical quantile
    double hi = 0.0;      // 97.5% empirical quantile
    double mean = 0.0;
};

struct ScenarioRow {
    int n = 1;
    ModelKind::Tag model = ModelKind::Tag::Correlated;
    Band sensitivity;
    Band relative_sensitivity;
    Band tests_per_sample;
    Band missed_per_sample;
    double fda_pass_rate = 0.0;
    MetricSet point;
    std::vector<MetricSet> replicates;
};

struct ScenarioResult {
    std::string scenario;
    SimulationSetting setting;
    double point_pi = 0.0;
    double point_tau = 0.0;
    std::vector<ScenarioRow> rows;  // Null then Correlated for each n

    const ScenarioRow& row(int n, ModelKind::Tag model) const;
};

inline constexpr double kFdaThreshold = 0.85;

ScenarioResult run_setting(const Scenario& scenario, const SimulationSetting& setting, int n_min, int n_max,
                           const TestModel& tm);

// Fraction of replicate sensitivities >= threshold, one value per pool size.
std::vector<double> fda_pass_rate(const ScenarioResult& result, double threshold = kFdaThreshold,
                                  ModelKind::Tag model = ModelKind::Tag::Correlated);

struct Constraints {
    std::optional<double> min_sensitivity;
    std::optional<double> min_pass_rate;
    double pass_threshold = kFdaThreshold;
};

enum class Objective { MinTests, MaxSavings };

std::string to_string(Objective o);
Objective parse_objective(const std::string& s);

struct Candidate {
    int n = 1;
    double sensitivity = 0.0;
    double tests_per_sample = 0.0;
    double missed_per_sample = 0.0;
    double pass_rate = 0.0;
    double score = 0.0;
    bool feasible = false;
};

struct Recommendation {
    std::optional<int> n;
    std::vector<std::string> binding;  // constraints that rule out every n, when infeasible
    std::vector<Candidate> candidates;
};

Recommendation recommend_pool_size(const ScenarioResult& result, const Constraints& c, Objective objective);

double empirical_quantile(std::vector<double> values, double q);

}  // namespace pooltest
