#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pooltest/random.hpp"

namespace pooltest {

struct PoolParams {
    int n = 1;
    double pi = 0.0;
    double tau = 0.0;

    void validate() const;
    bool low_prevalence() const { return pi * n <= 0.10; }
};

struct CountDistribution {
    int n = 0;
    std::vector<double> probs;  // probs[k] = P[K = k], k = 0..n

    double p0() const { return probs.empty() ? 1.0 : probs[0]; }
    double mean() const;
};

struct ModelKind {
    enum class Tag { Null, Correlated, HetTau, HetPi, HetBoth };

    Tag tag = Tag::Correlated;
    std::vector<double> taus;
    std::vector<double> pis;
    std::vector<double> weights;  // empty means uniform

    static ModelKind null() { return {Tag::Null, {}, {}, {}}; }
    static ModelKind correlated() { return {Tag::Correlated, {}, {}, {}}; }
    static ModelKind het_tau(std::vector<double> taus, std::vector<double> weights = {});
    static ModelKind het_pi(std::vector<double> pis, std::vector<double> weights = {});
    static ModelKind het_both(std::vector<double> pis, std::vector<double> taus,
                              std::vector<double> weights = {});

    void validate() const;
};

std::string to_string(ModelKind::Tag tag);

CountDistribution count_distribution(const PoolParams& p, const ModelKind& kind = ModelKind::correlated());

// One realisation of the pool: per-node infection indicators.
struct PoolDraw {
    std::vector<char> community;
    std::vector<char> infected;
    int positives = 0;
};

PoolDraw draw_pool(const PoolParams& p, Rng& rng);
int draw_pool_count(const PoolParams& p, Rng& rng);

CountDistribution simulate_counts(const PoolParams& p, std::int64_t reps, const Rng& rng);

double marginal_infection_prob(const PoolParams& p);
double pair_covariance(const PoolParams& p);
double pair_correlation(const PoolParams& p);
double expected_positives(const PoolParams& p, bool conditional_on_positive);
double prob_multiple(const PoolParams& p);
double prob_multiple_given_positive(const PoolParams& p);

std::optional<double> min_tau_for_increment(int n, double pi, int k);

struct Interval {
    double lo;
    double hi;
};

struct TauRegion {
    int n = 2;
    double tolerance = 0.05;
    std::vector<double> roots;
    std::vector<Interval> intervals;

    bool contains(double tau) const;
};

double robustness_function(int n, double tau);
TauRegion robust_tau_region(int n, double tolerance = 0.05);

}  // namespace pooltest
