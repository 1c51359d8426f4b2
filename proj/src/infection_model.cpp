#include "pooltest/infection_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pooltest/error.hpp"
#include "pooltest/parallel.hpp"

namespace pooltest {

void PoolParams::validate() const {
    if (n < 1) throw DomainError("pool size n must be >= 1");
    if (!(pi >= 0.0 && pi <= 1.0)) throw DomainError("pi must lie in [0, 1]");
    if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("tau must lie in [0, 1]");
}

double CountDistribution::mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) m += static_cast<double>(k) * probs[k];
    return m;
}

ModelKind ModelKind::het_tau(std::vector<double> taus, std::vector<double> weights) {
    ModelKind m{Tag::HetTau, std::move(taus), {}, std::move(weights)};
    m.validate();
    return m;
}

ModelKind ModelKind::het_pi(std::vector<double> pis, std::vector<double> weights) {
    ModelKind m{Tag::HetPi, {}, std::move(pis), std::move(weights)};
    m.validate();
    return m;
}

ModelKind ModelKind::het_both(std::vector<double> pis, std::vector<double> taus,
                              std::vector<double> weights) {
    ModelKind m{Tag::HetBoth, std::move(taus), std::move(pis), std::move(weights)};
    m.validate();
    return m;
}

void ModelKind::validate() const {
    auto check = [](const std::vector<double>& v, const char* what) {
        if (v.empty()) throw DomainError(std::string(what) + " must be non-empty");
        for (double x : v)
            if (!(x >= 0.0 && x <= 1.0)) throw DomainError(std::string(what) + " entries must lie in [0, 1]");
    };
    std::size_t groups = 0;
    switch (tag) {
        case Tag::Null:
        case Tag::Correlated:
            return;
        case Tag::HetTau:
            check(taus, "taus");
            groups = taus.size();
            break;
        case Tag::HetPi:
            check(pis, "pis");
            groups = pis.size();
            break;
        case Tag::HetBoth:
            check(taus, "taus");
            check(pis, "pis");
            if (taus.size() != pis.size()) throw DomainError("pis and taus must have equal length");
            groups = taus.size();
            break;
    }
    if (!weights.empty()) {
        if (weights.size() != groups) throw DomainError("weights must match the number of groups");
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw DomainError("weights must be nonnegative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw DomainError("weights must sum to 1");
    }
}

std::string to_string(ModelKind::Tag tag) {
    switch (tag) {
        case ModelKind::Tag::Null: return "null";
        case ModelKind::Tag::Correlated: return "correlated";
        case ModelKind::Tag::HetTau: return "het_tau";
        case ModelKind::Tag::HetPi: return "het_pi";
        case ModelKind::Tag::HetBoth: return "het_both";
    }
    return "unknown";
}

namespace {

using ld = long double;

// e * log(x) with the convention 0 * log(0) = 0, so that 0^0 = 1.
inline ld xlogy(ld e, ld log_x) { return e == 0.0L ? 0.0L : e * log_x; }

// P[K = k] for k = 1..n under the single-step network model; index 0 unused.
// Each term is assembled in log space and exponentiated once.
std::vector<ld> correlated_tail(int n, ld pi, ld tau) {
    std::vector<ld> out(n + 1, 0.0L);
    const ld log_pi = logl(pi);
    const ld log_not_pi = log1pl(-pi);
    const ld log_q = log1pl(-tau);
    std::vector<ld> log_fact(n + 1);
    log_fact[0] = 0.0L;
    for (int i = 1; i <= n; ++i) log_fact[i] = log_fact[i - 1] + logl(static_cast<ld>(i));
    std::vector<ld> log_escape(n + 1), log_hit(n + 1), seed_weight(n + 1);
    for (int j = 1; j <= n; ++j) {
        log_escape[j] = xlogy(j, log_q);
        const ld escape = expl(log_escape[j]);
        log_hit[j] = logl(1.0L - escape);
        seed_weight[j] = log_fact[n] - log_fact[j] + xlogy(j, log_pi) + xlogy(n - j, log_not_pi);
    }
    for (int K = 1; K <= n; ++K) {
        ld acc = 0.0L;
        for (int j = 1; j <= K; ++j) {
            // C(n, j) C(n-j, K-j) = n! / (j! (K-j)! (n-K)!)
            const ld lg = seed_weight[j] - log_fact[K - j] - log_fact[n - K] + xlogy(K - j, log_hit[j]) +
                          xlogy(n - K, log_escape[j]);
            acc += expl(lg);
        }
        out[K] = acc;
    }
    return out;
}

std::vector<double> group_weights(const ModelKind& kind, std::size_t groups) {
    if (!kind.weights.empty()) return kind.weights;
    return std::vector<double>(groups, 1.0 / static_cast<double>(groups));
}

}  // namespace

CountDistribution count_distribution(const PoolParams& p, const ModelKind& kind) {
    p.validate();
    kind.validate();
    const int n = p.n;

    std::vector<std::pair<double, double>> groups;  // (pi, tau)
    switch (kind.tag) {
        case ModelKind::Tag::Null: groups = {{p.pi, 0.0}}; break;
        case ModelKind::Tag::Correlated: groups = {{p.pi, p.tau}}; break;
        case ModelKind::Tag::HetTau:
            for (double t : kind.taus) groups.emplace_back(p.pi, t);
            break;
        case ModelKind::Tag::HetPi:
            for (double q : kind.pis) groups.emplace_back(q, p.tau);
            break;
        case ModelKind::Tag::HetBoth:
            for (std::size_t i = 0; i < kind.pis.size(); ++i) groups.emplace_back(kind.pis[i], kind.taus[i]);
            break;
    }
    const std::vector<double> w = group_weights(kind, groups.size());

    std::vector<ld> acc(n + 1, 0.0L);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto [gpi, gtau] = groups[g];
        const std::vector<ld> tail = correlated_tail(n, gpi, gtau);
        acc[0] += static_cast<ld>(w[g]) * powl(1.0L - static_cast<ld>(gpi), static_cast<ld>(n));
        for (int k = 1; k <= n; ++k) acc[k] += static_cast<ld>(w[g]) * tail[k];
    }

    ld tail_sum = 0.0L;
    for (int k = 1; k <= n; ++k) tail_sum += acc[k];
    const ld residual = tail_sum - (1.0L - acc[0]);
    if (fabsl(residual) >= 1e-9L)
        throw InternalConsistencyError("count distribution does not normalise (residual " +
                                       std::to_string(static_cast<double>(residual)) + ")");

    CountDistribution d;
    d.n = n;
    d.probs.resize(n + 1);
    for (int k = 0; k <= n; ++k) d.probs[k] = std::max(0.0, static_cast<double>(acc[k]));
    return d;
}

PoolDraw draw_pool(const PoolParams& p, Rng& rng) {
    PoolDraw d;
    d.community.assign(p.n, 0);
    d.infected.assign(p.n, 0);
    int seeds = 0;
    for (int i = 0; i < p.n; ++i) {
        if (rng.uniform() < p.pi) {
            d.community[i] = 1;
            d.infected[i] = 1;
            ++seeds;
        }
    }
    d.positives = seeds;
    if (seeds == 0) return d;
    const double hit = 1.0 - std::pow(1.0 - p.tau, seeds);
    for (int i = 0; i < p.n; ++i) {
        if (d.community[i]) continue;
        if (rng.uniform() < hit) {
            d.infected[i] = 1;
            ++d.positives;
        }
    }
    return d;
}

int draw_pool_count(const PoolParams& p, Rng& rng) {
    int seeds = 0;
    for (int i = 0; i < p.n; ++i)
        if (rng.uniform() < p.pi) ++seeds;
    if (seeds == 0) return 0;
    const double hit = 1.0 - std::pow(1.0 - p.tau, seeds);
    int k = seeds;
    for (int i = seeds; i < p.n; ++i)
        if (rng.uniform() < hit) ++k;
    return k;
}

CountDistribution simulate_counts(const PoolParams& p, std::int64_t reps, const Rng& rng) {
    p.validate();
    if (reps < 1) throw DomainError("reps must be >= 1");
    constexpr std::int64_t chunk = 1 << 15;
    const std::size_t chunks = static_cast<std::size_t>((reps + chunk - 1) / chunk);
    std::vector<std::vector<std::int64_t>> counts(chunks, std::vector<std::int64_t>(p.n + 1, 0));
    parallel_for(chunks, [&](std::size_t c) {
        Rng local = rng.split(c);
        const std::int64_t begin = static_cast<std::int64_t>(c) * chunk;
        const std::int64_t end = std::min(reps, begin + chunk);
        auto& mine = counts[c];
        for (std::int64_t r = begin; r < end; ++r) ++mine[draw_pool_count(p, local)];
    });
    CountDistribution d;
    d.n = p.n;
    d.probs.assign(p.n + 1, 0.0);
    std::vector<std::int64_t> total(p.n + 1, 0);
    for (const auto& c : counts)
        for (int k = 0; k <= p.n; ++k) total[k] += c[k];
    for (int k = 0; k <= p.n; ++k) d.probs[k] = static_cast<double>(total[k]) / static_cast<double>(reps);
    return d;
}

double marginal_infection_prob(const PoolParams& p) {
    p.validate();
    return 1.0 - (1.0 - p.pi) * std::pow(1.0 - p.pi * p.tau, p.n - 1);
}

double pair_covariance(const PoolParams& p) {
    p.validate();
    if (p.n < 2) throw DomainError("covariance needs n >= 2");
    const double a = std::pow(1.0 - p.pi + (1.0 - p.tau) * (1.0 - p.tau) * p.pi, p.n - 2);
    const double b = std::pow(1.0 - p.pi * p.tau, 2 * p.n - 2);
    return (1.0 - p.pi) * (1.0 - p.pi) * (a - b);
}

double pair_correlation(const PoolParams& p) {
    p.validate();
    if (p.n < 2) throw DomainError("correlation needs n >= 2");
    if (p.pi <= 0.0 || p.pi >= 1.0) throw DomainError("correlation undefined for pi in {0, 1}");
    if (p.tau == 0.0) return 0.0;
    const double m = marginal_infection_prob(p);
    return pair_covariance(p) / (m * (1.0 - m));
}

double expected_positives(const PoolParams& p, bool conditional_on_positive) {
    p.validate();
    const double n = p.n;
    const double es = n * p.pi + (1.0 - p.pi) * n * (1.0 - std::pow(1.0 - p.tau * p.pi, p.n - 1));
    if (!conditional_on_positive) return es;
    if (p.pi <= 0.0) throw DomainError("conditional mean needs pi > 0");
    return es / -std::expm1(n * std::log1p(-p.pi));
}

double prob_multiple(const PoolParams& p) {
    p.validate();
    const double p0 = std::pow(1.0 - p.pi, p.n);
    const double p1 = p.n * p.pi * std::pow(1.0 - p.pi, p.n - 1) * std::pow(1.0 - p.tau, p.n - 1);
    return std::max(0.0, 1.0 - p0 - p1);
}

double prob_multiple_given_positive(const PoolParams& p) {
    p.validate();
    if (p.pi <= 0.0) throw DomainError("conditional probability needs pi > 0");
    return prob_multiple(p) / (1.0 - std::pow(1.0 - p.pi, p.n));
}

std::optional<double> min_tau_for_increment(int n, double pi, int k) {
    if (n < 1) throw DomainError("pool size n must be >= 1");
    if (k < 1) throw DomainError("increment k must be >= 1");
    if (!(pi > 0.0 && pi <= 1.0)) throw DomainError("pi must lie in (0, 1]");
    const double target = 1.0 + k;
    auto f = [&](double tau) { return expected_positives({n, pi, tau}, true) - target; };
    if (f(1.0) < 0.0) return std::nullopt;
    if (f(0.0) >= 0.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) >= 0.0) hi = mid;
        else lo = mid;
    }
    return hi;
}

double robustness_function(int n, double tau) {
    return (n - 1) * tau * std::pow(1.0 - tau, n - 2);
}

bool TauRegion::contains(double tau) const {
    for (const auto& iv : intervals)
        if (tau >= iv.lo && tau <= iv.hi) return true;
    return false;
}

TauRegion robust_tau_region(int n, double tolerance) {
    if (n < 2) throw DomainError("robust region needs n >= 2");
    if (!(tolerance > 0.0 && tolerance < 1.0)) throw DomainError("tolerance must lie in (0, 1)");
    TauRegion r;
    r.n = n;
    r.tolerance = tolerance;
    auto g = [&](double t) { return robustness_function(n, t) - tolerance; };
    auto bisect = [&](double lo, double hi) {
        const bool rising = g(lo) < 0.0;
        for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            if ((g(mid) < 0.0) == rising) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    // Peak of the unimodal function; for n = 2 it is increasing on [0, 1].
    const double peak = n == 2 ? 1.0 : 1.0 / (n - 1);
    if (g(peak) <= 0.0) {
        r.intervals = {{0.0, 1.0}};
        return r;
    }
    const double left = bisect(0.0, peak);
    r.roots.push_back(left);
    if (n == 2) {
        r.intervals = {{0.0, left}};
        return r;
    }
    const double right = bisect(peak, 1.0);
    r.roots.push_back(right);
    r.intervals = {{0.0, left}, {right, 1.0}};
    return r;
}

}  // namespace pooltest
