#pragma once

#include <cstdint>
#include <vector>

#include "pooltest/ct_model.hpp"
#include "pooltest/infection_model.hpp"

namespace pooltest {

struct MetricSet {
    double sensitivity = 0.0;
    double relative_sensitivity = 0.0;
    double tests_per_sample = 0.0;
    double missed_per_sample = 0.0;
    double missed_paper_literal = 0.0;
};

// s_k[k-1] is the probability that a pool with k positives tests positive.
MetricSet pool_metrics(const CountDistribution& dist, const std::vector<double>& s_k, double s_individual);

struct TestModel {
    CtPopulation population = CtPopulation::calibrated();
    DetectionCurve curve = DetectionCurve::step(35.0);
    std::int64_t draws = kDefaultCtDraws;
    std::uint64_t seed = 0x5eed;
    SensitivityCache* cache = &shared_sensitivity_cache();

    Rng cell_rng(int k, int n) const { return Rng(seed).split(static_cast<std::uint64_t>(k)).split(static_cast<std::uint64_t>(n)); }
    Estimate s_k(int k, int n) const;
};

double individual_sensitivity(const CtPopulation& pop, const DetectionCurve& curve, std::int64_t draws,
                              const Rng& rng);
double individual_sensitivity(const TestModel& tm);

// Per-k sensitivities for a pool of size n, evaluated only where dist has mass
// above 1e-15 (others are left at 0; they carry no weight).
std::vector<double> sensitivities_for(const CountDistribution& dist, const TestModel& tm);

MetricSet evaluate(const PoolParams& p, const ModelKind& kind, const TestModel& tm);

struct SweepRow {
    int n = 1;
    ModelKind::Tag model = ModelKind::Tag::Correlated;
    double pi = 0.0;
    double tau = 0.0;
    MetricSet metrics;
    double p_positive_pool = 0.0;
};

std::vector<SweepRow> sweep_pool_sizes(int n_min, int n_max, double pi, double tau, const TestModel& tm);

}  // namespace pooltest
