#include "pooltest/metrics.hpp"

#include <cmath>

#include "pooltest/error.hpp"
#include "pooltest/parallel.hpp"

namespace pooltest {

MetricSet pool_metrics(const CountDistribution& dist, const std::vector<double>& s_k, double s_individual) {
    const int n = dist.n;
    if (static_cast<int>(s_k.size()) != n) throw DomainError("need one sensitivity per k = 1..n");
    if (!(s_individual > 0.0)) throw DomainError("individual sensitivity must be positive");
    double p_any = 0.0;
    for (int k = 1; k <= n; ++k) p_any += dist.probs[k];
    if (!(p_any > 0.0)) throw DomainError("pool has zero probability of containing a positive");

    double weighted = 0.0, missed = 0.0, literal = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double pk = dist.probs[k];
        const double sk = s_k[k - 1];
        weighted += sk * pk;
        missed += k * (1.0 - sk) * pk;
        literal += k * sk * (1.0 - pk);
    }
    MetricSet m;
    m.sensitivity = weighted / p_any;
    m.relative_sensitivity = m.sensitivity / s_individual;
    // P[pool positive] through the closed-form p0, so that a perfect test gives
    // the same efficiency under every model sharing p0.
    const double detected = m.sensitivity * (1.0 - dist.probs[0]);
    m.tests_per_sample = n == 1 ? 1.0 : 1.0 / n + detected;
    m.missed_per_sample = missed / n;
    m.missed_paper_literal = literal / m.tests_per_sample;
    return m;
}

Estimate TestModel::s_k(int k, int n) const {
    if (curve.is_perfect()) return {1.0, 0.0};
    if (cache) return cache->get(k, n, population, curve, draws, cell_rng(k, n));
    return sensitivity_given_k(k, n, population, curve, draws, cell_rng(k, n));
}

double individual_sensitivity(const CtPopulation& pop, const DetectionCurve& curve, std::int64_t draws,
                              const Rng& rng) {
    return sensitivity_given_k(1, 1, pop, curve, draws, rng).value;
}

double individual_sensitivity(const TestModel& tm) { return tm.s_k(1, 1).value; }

std::vector<double> sensitivities_for(const CountDistribution& dist, const TestModel& tm) {
    if (tm.curve.is_perfect()) return std::vector<double>(dist.n, 1.0);
    std::vector<double> s(dist.n, 0.0);
    for (int k = 1; k <= dist.n; ++k)
        if (dist.probs[k] > 1e-15) s[k - 1] = tm.s_k(k, dist.n).value;
    return s;
}

MetricSet evaluate(const PoolParams& p, const ModelKind& kind, const TestModel& tm) {
    const CountDistribution d = count_distribution(p, kind);
    return pool_metrics(d, sensitivities_for(d, tm), individual_sensitivity(tm));
}

std::vector<SweepRow> sweep_pool_sizes(int n_min, int n_max, double pi, double tau, const TestModel& tm) {
    if (n_min < 1 || n_max > 100 || n_min > n_max) throw DomainError("n range must lie within [1, 100]");
    const std::size_t count = static_cast<std::size_t>(n_max - n_min + 1);
    const double s_ind = individual_sensitivity(tm);
    std::vector<SweepRow> rows(2 * count);
    parallel_for(count, [&](std::size_t i) {
        const int n = n_min + static_cast<int>(i);
        const PoolParams params{n, pi, tau};
        const CountDistribution dc = count_distribution(params, ModelKind::correlated());
        const CountDistribution dn = count_distribution(params, ModelKind::null());
        // Both models share the same per-k sensitivities.
        std::vector<double> s(n, 0.0);
        for (int k = 1; k <= n; ++k)
            if (dc.probs[k] > 1e-15 || dn.probs[k] > 1e-15) s[k - 1] = tm.s_k(k, n).value;
        rows[2 * i] = {n, ModelKind::Tag::Null, pi, tau, pool_metrics(dn, s, s_ind), 1.0 - dn.probs[0]};
        rows[2 * i + 1] = {n, ModelKind::Tag::Correlated, pi, tau, pool_metrics(dc, s, s_ind),
                           1.0 - dc.probs[0]};
    });
    return rows;
}

}  // namespace pooltest
