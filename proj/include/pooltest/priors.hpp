#pragma once

#include <optional>

#include "pooltest/random.hpp"

namespace pooltest {

struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const { return alpha / (alpha + beta); }
    double variance() const;
    void validate() const;
};

// A scalar parameter (prevalence or transmission) given either as a fixed
// value or as a Beta law.
struct PriorSpec {
    enum class Kind { Point, Beta };

    Kind kind = Kind::Point;
    double value = 0.0;
    BetaParams params{};

    static PriorSpec point(double v);
    static PriorSpec beta(double alpha, double beta);
    static PriorSpec beta(BetaParams p);

    double mean() const;
    void validate() const;
};

struct WeibullParams {
    double shape = 4.5;
    double scale = 30.0;

    double mean() const;
    void validate() const;

    static WeibullParams main_text() { return {4.5, 30.0}; }
    static WeibullParams alternate() { return {4.55, 29.86}; }
};

double beta_cdf(const BetaParams& p, double x);

struct BetaFitOptions {
    double p_lo = 0.025;
    double p_hi = 0.975;
    double tolerance = 1e-9;
    int max_iterations = 200;
};

BetaParams fit_beta_from_quantiles(double q_lo, double q_hi, const BetaFitOptions& opts = {});

double sample_gamma(double shape, Rng& rng);
double sample_beta(const BetaParams& p, Rng& rng);
double sample_prior(const PriorSpec& spec, Rng& rng);

double weibull_cdf(const WeibullParams& p, double x);
double weibull_quantile(const WeibullParams& p, double u);
double calibrate_ct_shift(const WeibullParams& p, double tail_fraction, double threshold);

}  // namespace pooltest
