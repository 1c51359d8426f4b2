#include "pooltest/priors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "pooltest/error.hpp"

namespace pooltest {

double BetaParams::variance() const {
    const double s = alpha + beta;
    return alpha * beta / (s * s * (s + 1.0));
}

void BetaParams::validate() const {
    if (!(std::isfinite(alpha) && alpha > 0.0) || !(std::isfinite(beta) && beta > 0.0))
        throw DomainError("beta parameters must be finite and positive (alpha=" +
                          std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
}

PriorSpec PriorSpec::point(double v) {
    PriorSpec s;
    s.kind = Kind::Point;
    s.value = v;
    s.validate();
    return s;
}

PriorSpec PriorSpec::beta(double alpha, double beta) { return PriorSpec::beta(BetaParams{alpha, beta}); }

PriorSpec PriorSpec::beta(BetaParams p) {
    PriorSpec s;
    s.kind = Kind::Beta;
    s.params = p;
    s.validate();
    return s;
}

double PriorSpec::mean() const { return kind == Kind::Point ? value : params.mean(); }

void PriorSpec::validate() const {
    if (kind == Kind::Point) {
        if (!(value >= 0.0 && value <= 1.0))
            throw DomainError("point prior must lie in [0, 1]");
    } else {
        params.validate();
    }
}

double WeibullParams::mean() const { return scale * std::tgamma(1.0 + 1.0 / shape); }

void WeibullParams::validate() const {
    if (!(std::isfinite(shape) && shape > 0.0) || !(std::isfinite(scale) && scale > 0.0))
        throw DomainError("weibull shape and scale must be finite and positive");
}

double beta_cdf(const BetaParams& p, double x) {
    p.validate();
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("beta_cdf: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    return boost::math::ibeta(p.alpha, p.beta, x);
}

namespace {

using Vec2 = std::array<double, 2>;

Vec2 residuals(double la, double lb, double q_lo, double q_hi, const BetaFitOptions& o) {
    const BetaParams p{std::exp(la), std::exp(lb)};
    return {beta_cdf(p, q_lo) - o.p_lo, beta_cdf(p, q_hi) - o.p_hi};
}

double norm2(const Vec2& r) { return r[0] * r[0] + r[1] * r[1]; }

std::optional<BetaParams> newton(double q_lo, double q_hi, const BetaFitOptions& o, Vec2& last) {
    const double m = 0.5 * (q_lo + q_hi);
    const double sd = (q_hi - q_lo) / 3.92;
    double nu = m * (1.0 - m) / (sd * sd) - 1.0;
    if (!(nu > 0.0)) nu = 1.0;
    double la = std::log(m * nu);
    double lb = std::log((1.0 - m) * nu);

    Vec2 r = residuals(la, lb, q_lo, q_hi, o);
    for (int it = 0; it < o.max_iterations; ++it) {
        if (std::abs(r[0]) < o.tolerance && std::abs(r[1]) < o.tolerance) break;
        const double h = 1e-6;
        const Vec2 ra = residuals(la + h, lb, q_lo, q_hi, o);
        const Vec2 rb = residuals(la, lb + h, q_lo, q_hi, o);
        const double j00 = (ra[0] - r[0]) / h, j01 = (rb[0] - r[0]) / h;
        const double j10 = (ra[1] - r[1]) / h, j11 = (rb[1] - r[1]) / h;
        const double det = j00 * j11 - j01 * j10;
        if (!std::isfinite(det) || det == 0.0) return std::nullopt;
        double da = -(j11 * r[0] - j01 * r[1]) / det;
        double db = -(-j10 * r[0] + j00 * r[1]) / det;
        const double cap = 2.0;
        const double big = std::max(std::abs(da), std::abs(db));
        if (big > cap) {
            da *= cap / big;
            db *= cap / big;
        }
        double step = 1.0;
        bool improved = false;
        for (int bt = 0; bt < 30; ++bt) {
            const Vec2 rn = residuals(la + step * da, lb + step * db, q_lo, q_hi, o);
            if (norm2(rn) < norm2(r)) {
                la += step * da;
                lb += step * db;
                r = rn;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    last = r;
    if (std::abs(r[0]) < 1e-7 && std::abs(r[1]) < 1e-7)
        return BetaParams{std::exp(la), std::exp(lb)};
    return std::nullopt;
}

// Fallback: parametrize by mean m and concentration nu. For fixed nu the lower
// constraint pins m (cdf at q_lo falls as m rises); the upper residual is then
// monotone in nu.
double mean_for_lower(double nu, double q_lo, const BetaFitOptions& o) {
    double lo = 1e-12, hi = 1.0 - 1e-12;
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (lo + hi);
        const double c = beta_cdf({m * nu, (1.0 - m) * nu}, q_lo);
        if (c > o.p_lo) lo = m;
        else hi = m;
    }
    return 0.5 * (lo + hi);
}

std::optional<BetaParams> bisection(double q_lo, double q_hi, const BetaFitOptions& o, Vec2& last) {
    auto upper_resid = [&](double lnu) {
        const double nu = std::exp(lnu);
        const double m = mean_for_lower(nu, q_lo, o);
        return beta_cdf({m * nu, (1.0 - m) * nu}, q_hi) - o.p_hi;
    };
    double a = std::log(1e-3), b = std::log(1e8);
    double fa = upper_resid(a), fb = upper_resid(b);
    if (fa * fb > 0.0) {
        last = {0.0, std::abs(fa) < std::abs(fb) ? fa : fb};
        return std::nullopt;
    }
    for (int i = 0; i < 200; ++i) {
        const double c = 0.5 * (a + b);
        const double fc = upper_resid(c);
        if ((fc < 0.0) == (fa < 0.0)) {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
    }
    const double nu = std::exp(0.5 * (a + b));
    const double m = mean_for_lower(nu, q_lo, o);
    BetaParams p{m * nu, (1.0 - m) * nu};
    last = {beta_cdf(p, q_lo) - o.p_lo, beta_cdf(p, q_hi) - o.p_hi};
    if (std::abs(last[0]) < 1e-6 && std::abs(last[1]) < 1e-6) return p;
    return std::nullopt;
}

}  // namespace

BetaParams fit_beta_from_quantiles(double q_lo, double q_hi, const BetaFitOptions& o) {
    if (!(q_lo > 0.0 && q_hi < 1.0 && q_lo < q_hi))
        throw DomainError("fit_beta_from_quantiles: need 0 < lo < hi < 1");
    if (!(o.p_lo > 0.0 && o.p_hi < 1.0 && o.p_lo < o.p_hi))
        throw DomainError("fit_beta_from_quantiles: need 0 < p_lo < p_hi < 1");
    Vec2 last{};
    if (auto p = newton(q_lo, q_hi, o, last)) return *p;
    if (auto p = bisection(q_lo, q_hi, o, last)) return *p;
    throw FitError("beta fit did not converge", {last[0], last[1]});
}

double sample_gamma(double shape, Rng& rng) {
    if (shape < 1.0) {
        const double g = sample_gamma(shape + 1.0, rng);
        return g * std::pow(rng.uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double sample_beta(const BetaParams& p, Rng& rng) {
    const double x = sample_gamma(p.alpha, rng);
    const double y = sample_gamma(p.beta, rng);
    double b = x / (x + y);
    if (!(b > 0.0)) b = std::numeric_limits<double>::min();
    if (!(b < 1.0)) b = std::nextafter(1.0, 0.0);
    return b;
}

double sample_prior(const PriorSpec& spec, Rng& rng) {
    if (spec.kind == PriorSpec::Kind::Point) return spec.value;
    return sample_beta(spec.params, rng);
}

double weibull_cdf(const WeibullParams& p, double x) {
    if (x <= 0.0) return 0.0;
    return -std::expm1(-std::pow(x / p.scale, p.shape));
}

double weibull_quantile(const WeibullParams& p, double u) {
    p.validate();
    if (!(u > 0.0 && u < 1.0)) throw DomainError("weibull_quantile: u must lie in (0, 1)");
    return p.scale * std::pow(-std::log1p(-u), 1.0 / p.shape);
}

double calibrate_ct_shift(const WeibullParams& p, double tail_fraction, double threshold) {
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
        throw DomainError("tail fraction must lie in (0, 1)");
    return threshold - weibull_quantile(p, 1.0 - tail_fraction);
}

}  // namespace pooltest
