#pragma once

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <span>
#include <string>
#include <tuple>

#include "pooltest/priors.hpp"
#include "pooltest/random.hpp"

namespace pooltest {

// Individual Ct law: Weibull draw plus a shift chosen so that a given fraction
// of samples lies above a threshold.
struct CtPopulation {
    WeibullParams weibull{};
    double shift = 0.0;
    double tail_fraction = 0.25;
    double tail_threshold = 35.0;

    static CtPopulation calibrated(WeibullParams w = {}, double tail_fraction = 0.25,
                                   double tail_threshold = 35.0);

    double quantile(double u) const { return weibull_quantile(weibull, u) + shift; }
    double cdf(double ct) const { return weibull_cdf(weibull, ct - shift); }
    double draw(Rng& rng) const { return quantile(rng.uniform_open()); }
};

struct DetectionCurve {
    enum class Kind { Step, Logistic };

    Kind kind = Kind::Step;
    double lod = 35.0;
    double width = 1.0;

    static DetectionCurve step(double lod) { return {Kind::Step, lod, 1.0}; }
    static DetectionCurve logistic(double lod, double width);
    static DetectionCurve perfect();

    bool is_perfect() const;
    void validate() const;
};

std::string to_string(const DetectionCurve& c);
DetectionCurve parse_curve(const std::string& text);

double dilution_ct(std::span<const double> cts, int n);

struct PooledLod {
    double raw;
    double floored;
};

PooledLod pooled_lod(double individual_lod, int n);

double detection_prob(double ct, const DetectionCurve& curve);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

inline constexpr std::int64_t kDefaultCtDraws = 100000;

Estimate sensitivity_given_k(int k, int n, const CtPopulation& pop, const DetectionCurve& curve,
                             std::int64_t draws, const Rng& rng);

// Memoises sensitivity_given_k. Lookups take a shared lock; insertion an
// exclusive one.
class SensitivityCache {
public:
    Estimate get(int k, int n, const CtPopulation& pop, const DetectionCurve& curve,
                 std::int64_t draws, const Rng& rng);
    std::size_t size() const;
    void clear();

private:
    using Key = std::tuple<int, int, double, double, double, int, double, double, std::int64_t,
                           std::uint64_t>;
    mutable std::shared_mutex mutex_;
    std::map<Key, Estimate> entries_;
};

SensitivityCache& shared_sensitivity_cache();

double hitchhiker_exceed_mean_prob(int K, int n, const WeibullParams& w);

struct HitchhikerEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double approximation = 0.0;  // (1/2 + 0.01 log2 n)^K
};

HitchhikerEstimate hitchhiker_exceed_individual_prob(int K, int n, const WeibullParams& w,
                                                     std::int64_t draws, const Rng& rng);

}  // namespace pooltest
