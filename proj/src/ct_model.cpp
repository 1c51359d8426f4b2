#include "pooltest/ct_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <mutex>
#include <vector>

#include "pooltest/error.hpp"
#include "pooltest/parallel.hpp"

namespace pooltest {

CtPopulation CtPopulation::calibrated(WeibullParams w, double tail_fraction, double tail_threshold) {
    w.validate();
    CtPopulation p;
    p.weibull = w;
    p.tail_fraction = tail_fraction;
    p.tail_threshold = tail_threshold;
    p.shift = calibrate_ct_shift(w, tail_fraction, tail_threshold);
    return p;
}

DetectionCurve DetectionCurve::logistic(double lod, double width) {
    DetectionCurve c{Kind::Logistic, lod, width};
    c.validate();
    return c;
}

DetectionCurve DetectionCurve::perfect() {
    return {Kind::Step, std::numeric_limits<double>::infinity(), 1.0};
}

bool DetectionCurve::is_perfect() const { return kind == Kind::Step && std::isinf(lod) && lod > 0; }

void DetectionCurve::validate() const {
    if (std::isnan(lod)) throw DomainError("lod must be a number");
    if (kind == Kind::Logistic && !(std::isfinite(width) && width > 0.0))
        throw DomainError("logistic width must be positive");
    if (kind == Kind::Logistic && !std::isfinite(lod)) throw DomainError("logistic lod must be finite");
}

namespace {

std::string fmt(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw DomainError("not a number: '" + s + "'");
    }
    if (pos != s.size()) throw DomainError("not a number: '" + s + "'");
    return v;
}

}  // namespace

std::string to_string(const DetectionCurve& c) {
    if (c.is_perfect()) return "perfect";
    if (c.kind == DetectionCurve::Kind::Step) return "step:" + fmt(c.lod);
    return "logistic:" + fmt(c.lod) + "," + fmt(c.width);
}

DetectionCurve parse_curve(const std::string& text) {
    if (text == "perfect") return DetectionCurve::perfect();
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw DomainError("curve must be perfect, step:LOD or logistic:LOD,WIDTH");
    const std::string kind = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (kind == "step") return DetectionCurve::step(parse_double(rest));
    if (kind == "logistic") {
        const auto comma = rest.find(',');
        if (comma == std::string::npos) return DetectionCurve::logistic(parse_double(rest), 1.0);
        return DetectionCurve::logistic(parse_double(rest.substr(0, comma)),
                                        parse_double(rest.substr(comma + 1)));
    }
    throw DomainError("unknown curve kind '" + kind + "'");
}

double dilution_ct(std::span<const double> cts, int n) {
    if (cts.empty()) throw DomainError("dilution_ct needs at least one positive sample");
    if (n < 1 || static_cast<std::size_t>(n) < cts.size())
        throw DomainError("dilution_ct: pool size smaller than the number of positives");
    double lo = cts[0];
    for (double c : cts) {
        if (!std::isfinite(c)) throw DomainError("dilution_ct: Ct values must be finite");
        lo = std::min(lo, c);
    }
    double sum = 0.0;
    for (double c : cts) sum += std::exp2(lo - c);
    return lo - std::log2(sum) + std::log2(static_cast<double>(n));
}

PooledLod pooled_lod(double individual_lod, int n) {
    if (n < 1) throw DomainError("pool size n must be >= 1");
    const double raw = individual_lod - std::log2(static_cast<double>(n));
    return {raw, std::floor(raw)};
}

double detection_prob(double ct, const DetectionCurve& curve) {
    if (curve.kind == DetectionCurve::Kind::Step) return ct < curve.lod ? 1.0 : 0.0;
    const double c0 = curve.lod + curve.width * std::log(19.0);
    return 1.0 / (1.0 + std::exp((ct - c0) / curve.width));
}

namespace {

constexpr std::int64_t kChunk = 4096;

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
};

}  // namespace

Estimate sensitivity_given_k(int k, int n, const CtPopulation& pop, const DetectionCurve& curve,
                             std::int64_t draws, const Rng& rng) {
    if (k < 1 || k > n) throw DomainError("sensitivity_given_k needs 1 <= k <= n");
    if (draws < 1) throw DomainError("draws must be >= 1");
    curve.validate();
    if (curve.is_perfect()) return {1.0, 0.0};

    const double log2n = std::log2(static_cast<double>(n));
    const bool step = curve.kind == DetectionCurve::Kind::Step;
    // With a step curve one strong enough sample settles detection: if any
    // Ct < lod - log2(n), the pooled Ct is below lod.
    const double u_sure = step ? pop.cdf(curve.lod - log2n) : 0.0;

    const std::size_t chunks = static_cast<std::size_t>((draws + kChunk - 1) / kChunk);
    std::vector<Moments> parts(chunks);
    parallel_for(chunks, [&](std::size_t c) {
        Rng local = rng.split(c);
        const std::int64_t begin = static_cast<std::int64_t>(c) * kChunk;
        const std::int64_t end = std::min(draws, begin + kChunk);
        std::vector<double> cts(k);
        Moments m;
        for (std::int64_t d = begin; d < end; ++d) {
            double v;
            if (step) {
                bool sure = false;
                int drawn = 0;
                for (; drawn < k; ++drawn) {
                    const double u = local.uniform_open();
                    if (u < u_sure) {
                        sure = true;
                        break;
                    }
                    cts[drawn] = pop.quantile(u);
                }
                v = sure ? 1.0 : detection_prob(dilution_ct(std::span(cts.data(), k), n), curve);
            } else {
                for (int i = 0; i < k; ++i) cts[i] = pop.draw(local);
                v = detection_prob(dilution_ct(cts, n), curve);
            }
            m.sum += v;
            m.sum_sq += v * v;
        }
        parts[c] = m;
    });
    Moments total;
    for (const auto& m : parts) {
        total.sum += m.sum;
        total.sum_sq += m.sum_sq;
    }
    const double N = static_cast<double>(draws);
    const double mean = total.sum / N;
    const double var = std::max(0.0, total.sum_sq / N - mean * mean);
    return {mean, std::sqrt(var / N)};
}

Estimate SensitivityCache::get(int k, int n, const CtPopulation& pop, const DetectionCurve& curve,
                               std::int64_t draws, const Rng& rng) {
    const Key key{k,        n, pop.weibull.shape, pop.weibull.scale, pop.shift, static_cast<int>(curve.kind),
                  curve.lod, curve.width, draws, rng.seed()};
    {
        std::shared_lock lock(mutex_);
        auto it = entries_.find(key);
        if (it != entries_.end()) return it->second;
    }
    const Estimate e = sensitivity_given_k(k, n, pop, curve, draws, rng);
    std::unique_lock lock(mutex_);
    entries_.emplace(key, e);
    return e;
}

std::size_t SensitivityCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void SensitivityCache::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
}

SensitivityCache& shared_sensitivity_cache() {
    static SensitivityCache cache;
    return cache;
}

double hitchhiker_exceed_mean_prob(int K, int n, const WeibullParams& w) {
    w.validate();
    if (K < 1) throw DomainError("K must be >= 1");
    if (n < 1) throw DomainError("pool size n must be >= 1");
    const double offset = w.mean() - std::log2(static_cast<double>(n));
    if (!(offset > 0.0)) throw DomainError("log2(n) exceeds the mean Ct; approximation invalid");
    return std::exp(-K * std::pow(offset / w.scale, w.shape));
}

HitchhikerEstimate hitchhiker_exceed_individual_prob(int K, int n, const WeibullParams& w,
                                                     std::int64_t draws, const Rng& rng) {
    w.validate();
    if (K < 1) throw DomainError("K must be >= 1");
    if (n < 1) throw DomainError("pool size n must be >= 1");
    if (draws < 1) throw DomainError("draws must be >= 1");
    const double log2n = std::log2(static_cast<double>(n));
    const std::size_t chunks = static_cast<std::size_t>((draws + kChunk - 1) / kChunk);
    std::vector<std::int64_t> hits(chunks, 0);
    parallel_for(chunks, [&](std::size_t c) {
        Rng local = rng.split(c);
        const std::int64_t begin = static_cast<std::int64_t>(c) * kChunk;
        const std::int64_t end = std::min(draws, begin + kChunk);
        std::int64_t h = 0;
        for (std::int64_t d = begin; d < end; ++d) {
            double lo = std::numeric_limits<double>::infinity();
            for (int i = 0; i < K; ++i) lo = std::min(lo, weibull_quantile(w, local.uniform_open()));
            const double solo = weibull_quantile(w, local.uniform_open());
            if (lo + log2n > solo) ++h;
        }
        hits[c] = h;
    });
    std::int64_t total = 0;
    for (auto h : hits) total += h;
    const double p = static_cast<double>(total) / static_cast<double>(draws);
    HitchhikerEstimate out;
    out.value = p;
    out.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
    out.approximation = std::pow(0.5 + 0.01 * log2n, K);
    return out;
}

}  // namespace pooltest
