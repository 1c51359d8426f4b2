#include "pooltest/scenarios.hpp"

#include <algorithm>
#include <cmath>

#include "pooltest/error.hpp"
#include "pooltest/parallel.hpp"

namespace pooltest {

namespace {

using P = CatalogEntry::Parameter;

const char* kPrevalenceSource = "covidestim monthly prevalence estimate";

}  // namespace

const std::vector<CatalogEntry>& builtin_catalog() {
    static const std::vector<CatalogEntry> catalog = {
        {"Georgia, July 2020", P::Prevalence, {16.67, 1282.88}, 0.013, 0.007, 0.020, kPrevalenceSource},
        {"Maine, October 2020", P::Prevalence, {9.94, 6561.33}, 0.002, 0.0007, 0.003, kPrevalenceSource},
        {"Iowa, November 2020", P::Prevalence, {16.99, 477.12}, 0.034, 0.020, 0.052, kPrevalenceSource},
        {"Alabama, January 2021", P::Prevalence, {14.38, 251.01}, 0.054, 0.030, 0.084, kPrevalenceSource},
        {"Oregon, April 2021", P::Prevalence, {13.06, 2836.41}, 0.005, 0.002, 0.007, kPrevalenceSource},
        {"Idaho, May 2021", P::Prevalence, {5.77, 1543.33}, 0.004, 0.001, 0.007, kPrevalenceSource},
        {"Child Index Case", P::Transmission, {8.38, 59.43}, 0.134, 0.057, 0.211, "Spielberger et al 2021"},
        {"Healthcare Setting", P::Transmission, {8.3, 359.61}, 0.007, 0.004, 0.010, "Koh et al 2020"},
        {"Household (Spouses)", P::Transmission, {21.78, 35.92}, 0.378, 0.258, 0.505, "Madewell et al 2020"},
        {"Household (Asymptomatic Index Case)", P::Transmission, {0.74, 62.23}, 0.007, 0.0, 0.049,
         "Madewell et al 2020"},
        {"Household (Symptomatic Index Case)", P::Transmission, {64.95, 296.26}, 0.180, 0.142, 0.221,
         "Madewell et al 2020"},
        {"Household (General)", P::Transmission, {0.45, 2.37}, 0.30, 0.0, 0.67, "Curmei et al 2020"},
    };
    return catalog;
}

const CatalogEntry& lookup(const std::string& name) {
    for (const auto& e : builtin_catalog())
        if (e.name == name) return e;
    throw DomainError("unknown catalog entry '" + name + "'");
}

Scenario make_scenario(const std::string& prevalence_name, const std::string& transmission_name) {
    const CatalogEntry& pi = lookup(prevalence_name);
    const CatalogEntry& tau = lookup(transmission_name);
    if (pi.parameter != P::Prevalence) throw DomainError("'" + prevalence_name + "' is not a prevalence entry");
    if (tau.parameter != P::Transmission)
        throw DomainError("'" + transmission_name + "' is not a transmission entry");
    return {pi.name + " / " + tau.name, PriorSpec::beta(pi.beta), PriorSpec::beta(tau.beta),
            pi.citation + "; " + tau.citation};
}

std::string to_string(SettingKind s) {
    switch (s) {
        case SettingKind::Fixed: return "fixed";
        case SettingKind::TauGraph: return "tau_graph";
        case SettingKind::PiGraph: return "pi_graph";
        case SettingKind::AllGraph: return "all_graph";
    }
    return "unknown";
}

SettingKind parse_setting(const std::string& s) {
    if (s == "fixed") return SettingKind::Fixed;
    if (s == "tau_graph") return SettingKind::TauGraph;
    if (s == "pi_graph") return SettingKind::PiGraph;
    if (s == "all_graph") return SettingKind::AllGraph;
    throw DomainError("unknown setting '" + s + "' (fixed, tau_graph, pi_graph, all_graph)");
}

std::string to_string(Objective o) { return o == Objective::MinTests ? "min_tests" : "max_savings"; }

Objective parse_objective(const std::string& s) {
    if (s == "min_tests") return Objective::MinTests;
    if (s == "max_savings") return Objective::MaxSavings;
    throw DomainError("unknown objective '" + s + "' (min_tests, max_savings)");
}

const ScenarioRow& ScenarioResult::row(int n, ModelKind::Tag model) const {
    for (const auto& r : rows)
        if (r.n == n && r.model == model) return r;
    throw DomainError("no row for n=" + std::to_string(n));
}

double empirical_quantile(std::vector<double> v, double q) {
    if (v.empty()) throw DomainError("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const std::size_t i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

namespace {

Band make_band(double point, const std::vector<double>& xs) {
    Band b;
    b.point = point;
    b.median = empirical_quantile(xs, 0.5);
    b.lo = empirical_quantile(xs, 0.025);
    b.hi = empirical_quantile(xs, 0.975);
    double s = 0.0;
    for (double x : xs) s += x;
    b.mean = s / static_cast<double>(xs.size());
    return b;
}

struct Draw {
    double pi;
    double tau;
};

}  // namespace

ScenarioResult run_setting(const Scenario& scenario, const SimulationSetting& setting, int n_min, int n_max,
                           const TestModel& tm) {
    scenario.pi.validate();
    scenario.tau.validate();
    if (setting.replicates < 1) throw DomainError("replicates must be >= 1");
    if (n_min < 1 || n_max > 100 || n_min > n_max) throw DomainError("n range must lie within [1, 100]");

    ScenarioResult out;
    out.scenario = scenario.name;
    out.setting = setting;
    out.point_pi = scenario.pi.mean();
    out.point_tau = scenario.tau.mean();

    const bool draw_pi = setting.kind == SettingKind::PiGraph || setting.kind == SettingKind::AllGraph;
    const bool draw_tau = setting.kind == SettingKind::TauGraph || setting.kind == SettingKind::AllGraph;
    const Rng master(setting.seed);
    const std::size_t B = static_cast<std::size_t>(setting.replicates);
    std::vector<Draw> draws(B);
    for (std::size_t b = 0; b < B; ++b) {
        Rng r = master.split(b);
        Rng r_pi = r.split(1);
        Rng r_tau = r.split(2);
        draws[b].pi = draw_pi ? sample_prior(scenario.pi, r_pi) : out.point_pi;
        draws[b].tau = draw_tau ? sample_prior(scenario.tau, r_tau) : out.point_tau;
    }

    const std::size_t count = static_cast<std::size_t>(n_max - n_min + 1);
    const double s_ind = individual_sensitivity(tm);
    out.rows.resize(2 * count);
    parallel_for(count, [&](std::size_t i) {
        const int n = n_min + static_cast<int>(i);
        const bool sampled = draw_pi || draw_tau;
        // dists[m][0] is the at-mean evaluation, dists[m][1 + b] replicate b.
        std::vector<CountDistribution> dists[2];
        for (int m = 0; m < 2; ++m) {
            const ModelKind kind = m == 0 ? ModelKind::null() : ModelKind::correlated();
            dists[m].push_back(count_distribution({n, out.point_pi, out.point_tau}, kind));
            if (sampled)
                for (std::size_t b = 0; b < B; ++b)
                    dists[m].push_back(count_distribution({n, draws[b].pi, draws[b].tau}, kind));
        }
        std::vector<double> s(n, 0.0);
        for (int k = 1; k <= n; ++k) {
            bool needed = false;
            for (int m = 0; m < 2 && !needed; ++m)
                for (const auto& d : dists[m])
                    if (d.probs[k] > 1e-15) {
                        needed = true;
                        break;
                    }
            if (needed) s[k - 1] = tm.s_k(k, n).value;
        }

        for (int m = 0; m < 2; ++m) {
            const ModelKind::Tag tag = m == 0 ? ModelKind::Tag::Null : ModelKind::Tag::Correlated;
            ScenarioRow& row = out.rows[2 * i + m];
            row.n = n;
            row.model = tag;
            const MetricSet point = pool_metrics(dists[m][0], s, s_ind);
            row.point = point;
            row.replicates.resize(B);
            std::vector<double> sens(B), rel(B), eta(B), missed(B);
            for (std::size_t b = 0; b < B; ++b) {
                const MetricSet ms = sampled ? pool_metrics(dists[m][1 + b], s, s_ind) : point;
                row.replicates[b] = ms;
                sens[b] = ms.sensitivity;
                rel[b] = ms.relative_sensitivity;
                eta[b] = ms.tests_per_sample;
                missed[b] = ms.missed_per_sample;
            }
            row.sensitivity = make_band(point.sensitivity, sens);
            row.relative_sensitivity = make_band(point.relative_sensitivity, rel);
            row.tests_per_sample = make_band(point.tests_per_sample, eta);
            row.missed_per_sample = make_band(point.missed_per_sample, missed);
            std::size_t pass = 0;
            for (double x : sens)
                if (x >= kFdaThreshold) ++pass;
            row.fda_pass_rate = static_cast<double>(pass) / static_cast<double>(B);
        }
    });
    return out;
}

std::vector<double> fda_pass_rate(const ScenarioResult& result, double threshold, ModelKind::Tag model) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw DomainError("threshold must lie in [0, 1]");
    std::vector<double> out;
    for (const auto& row : result.rows) {
        if (row.model != model) continue;
        std::size_t pass = 0;
        for (const auto& m : row.replicates)
            if (m.sensitivity >= threshold) ++pass;
        out.push_back(static_cast<double>(pass) / static_cast<double>(row.replicates.size()));
    }
    return out;
}

Recommendation recommend_pool_size(const ScenarioResult& result, const Constraints& c, Objective objective) {
    Recommendation rec;
    const std::vector<double> rates = fda_pass_rate(result, c.pass_threshold);
    bool any_sens = false, any_pass = false;
    std::size_t idx = 0;
    for (const auto& row : result.rows) {
        if (row.model != ModelKind::Tag::Correlated) continue;
        Candidate cand;
        cand.n = row.n;
        cand.sensitivity = row.sensitivity.point;
        cand.tests_per_sample = row.tests_per_sample.point;
        cand.missed_per_sample = row.missed_per_sample.point;
        cand.pass_rate = rates[idx++];
        cand.score = objective == Objective::MinTests
                         ? cand.tests_per_sample
                         : (1.0 - cand.tests_per_sample) - cand.missed_per_sample;
        const bool sens_ok = !c.min_sensitivity || cand.sensitivity >= *c.min_sensitivity;
        const bool pass_ok = !c.min_pass_rate || cand.pass_rate >= *c.min_pass_rate;
        any_sens = any_sens || sens_ok;
        any_pass = any_pass || pass_ok;
        cand.feasible = sens_ok && pass_ok;
        rec.candidates.push_back(cand);
    }
    const Candidate* best = nullptr;
    for (const auto& cand : rec.candidates) {
        if (!cand.feasible) continue;
        if (!best) {
            best = &cand;
            continue;
        }
        const bool better = objective == Objective::MinTests ? cand.score < best->score : cand.score > best->score;
        if (better || (cand.score == best->score && cand.n < best->n)) best = &cand;
    }
    if (best) {
        rec.n = best->n;
        return rec;
    }
    if (!any_sens) rec.binding.push_back("min_sensitivity");
    if (!any_pass) rec.binding.push_back("min_pass_rate");
    if (rec.binding.empty()) rec.binding = {"min_sensitivity", "min_pass_rate"};
    return rec;
}

}  // namespace pooltest
