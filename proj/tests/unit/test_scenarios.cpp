#include <gtest/gtest.h>

#include <cmath>

#include "pooltest/error.hpp"
#include "pooltest/scenarios.hpp"

using namespace pooltest;

namespace {

TestModel quick_model(DetectionCurve curve = DetectionCurve::step(35)) {
    TestModel tm;
    tm.draws = 20000;
    tm.seed = 808;
    tm.curve = curve;
    return tm;
}

SimulationSetting setting(SettingKind k, int B = 100, std::uint64_t seed = 1) { return {k, B, seed}; }

const char* kMaine = "Maine, October 2020";
const char* kAlabama = "Alabama, January 2021";
const char* kSpouses = "Household (Spouses)";
const char* kSymptomatic = "Household (Symptomatic Index Case)";
const char* kAsymptomatic = "Household (Asymptomatic Index Case)";

}  // namespace

TEST(Catalog, PublishedParameters) {
    EXPECT_EQ(builtin_catalog().size(), 12u);
    const auto& me = lookup(kMaine);
    EXPECT_EQ(me.beta.alpha, 9.94);
    EXPECT_EQ(me.beta.beta, 6561.33);
    const auto& asym = lookup(kAsymptomatic);
    EXPECT_EQ(asym.beta.alpha, 0.74);
    EXPECT_EQ(asym.beta.beta, 62.23);
    EXPECT_THROW(lookup("Atlantis"), DomainError);
}

TEST(Catalog, StatedMeansMatchBetaMeans) {
    // Child, healthcare, asymptomatic and general household rows print a pooled
    // point estimate that is not the mean of the fitted Beta law; they are
    // excluded here.
    for (const char* name : {"Georgia, July 2020", kMaine, "Iowa, November 2020", kAlabama, "Oregon, April 2021",
                             "Idaho, May 2021", kSpouses, kSymptomatic}) {
        const auto& e = lookup(name);
        EXPECT_NEAR(e.beta.mean(), e.stated_mean, 0.001) << name;
    }
    EXPECT_NEAR(lookup(kSpouses).beta.mean(), 0.378, 0.001);
}

TEST(Catalog, ScenarioPairing) {
    const Scenario s = make_scenario(kMaine, kSpouses);
    EXPECT_EQ(s.pi.kind, PriorSpec::Kind::Beta);
    EXPECT_EQ(s.tau.params.alpha, 21.78);
    EXPECT_THROW(make_scenario(kSpouses, kMaine), DomainError);
}

TEST(RunSetting, FixedIsReplicateInvariant) {
    const Scenario s = make_scenario(kAlabama, kSymptomatic);
    const TestModel tm = quick_model();
    const auto a = run_setting(s, setting(SettingKind::Fixed, 1), 1, 30, tm);
    const auto b = run_setting(s, setting(SettingKind::Fixed, 100), 1, 30, tm);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].sensitivity.point, b.rows[i].sensitivity.point);
        EXPECT_EQ(a.rows[i].tests_per_sample.point, b.rows[i].tests_per_sample.point);
        EXPECT_EQ(b.rows[i].sensitivity.lo, b.rows[i].sensitivity.hi);
        EXPECT_EQ(b.rows[i].tests_per_sample.lo, b.rows[i].tests_per_sample.hi);
        EXPECT_EQ(b.rows[i].missed_per_sample.lo, b.rows[i].missed_per_sample.hi);
    }
}

TEST(RunSetting, BandOrderingAndMeanPointInsideBand) {
    const Scenario s = make_scenario(kMaine, kSpouses);
    const auto r = run_setting(s, setting(SettingKind::AllGraph), 1, 30, quick_model());
    for (const auto& row : r.rows) {
        EXPECT_LE(row.sensitivity.lo, row.sensitivity.hi);
        EXPECT_LE(row.tests_per_sample.lo, row.tests_per_sample.hi);
        EXPECT_GE(row.fda_pass_rate, 0.0);
        EXPECT_LE(row.fda_pass_rate, 1.0);
    }
    const auto& at20 = r.row(20, ModelKind::Tag::Correlated);
    EXPECT_GE(at20.sensitivity.point, at20.sensitivity.lo);
    EXPECT_LE(at20.sensitivity.point, at20.sensitivity.hi);

    const auto wide = run_setting(s, setting(SettingKind::AllGraph, 1000, 2), 20, 20, quick_model());
    const auto& w20 = wide.row(20, ModelKind::Tag::Correlated);
    EXPECT_GE(w20.sensitivity.point, w20.sensitivity.lo);
    EXPECT_LE(w20.sensitivity.point, w20.sensitivity.hi);
}

TEST(RunSetting, TransmissionUncertaintyDominates) {
    const Scenario s = make_scenario(kAlabama, kSymptomatic);
    const TestModel tm = quick_model();
    const auto tau = run_setting(s, setting(SettingKind::TauGraph), 20, 20, tm).row(20, ModelKind::Tag::Correlated);
    const auto pi = run_setting(s, setting(SettingKind::PiGraph), 20, 20, tm).row(20, ModelKind::Tag::Correlated);
    EXPECT_GE((tau.sensitivity.hi - tau.sensitivity.lo) * 1.1, pi.sensitivity.hi - pi.sensitivity.lo);
}

TEST(RunSetting, BandWidensWithPriorVariance) {
    const BetaParams base{21.78, 35.92};
    const double m = base.mean();
    const double nu = (base.alpha + base.beta + 1.0) / 4.0 - 1.0;  // four times the variance
    const Scenario narrow{"narrow", PriorSpec::point(0.01), PriorSpec::beta(base), ""};
    const Scenario broad{"broad", PriorSpec::point(0.01), PriorSpec::beta(m * nu, (1 - m) * nu), ""};
    const TestModel tm = quick_model();
    const auto a = run_setting(narrow, setting(SettingKind::TauGraph), 10, 10, tm).row(10, ModelKind::Tag::Correlated);
    const auto b = run_setting(broad, setting(SettingKind::TauGraph), 10, 10, tm).row(10, ModelKind::Tag::Correlated);
    EXPECT_GE(b.sensitivity.hi - b.sensitivity.lo, a.sensitivity.hi - a.sensitivity.lo);
}

TEST(RunSetting, Deterministic) {
    const Scenario s = make_scenario(kMaine, kSpouses);
    const auto a = run_setting(s, setting(SettingKind::AllGraph, 50, 99), 1, 12, quick_model());
    const auto b = run_setting(s, setting(SettingKind::AllGraph, 50, 99), 1, 12, quick_model());
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        for (std::size_t j = 0; j < a.rows[i].replicates.size(); ++j) {
            EXPECT_EQ(a.rows[i].replicates[j].sensitivity, b.rows[i].replicates[j].sensitivity);
            EXPECT_EQ(a.rows[i].replicates[j].tests_per_sample, b.rows[i].replicates[j].tests_per_sample);
        }
}

TEST(FdaPassRate, PerfectTestAlwaysPasses) {
    const Scenario s = make_scenario(kAlabama, kAsymptomatic);
    const auto r = run_setting(s, setting(SettingKind::AllGraph), 1, 30, quick_model(DetectionCurve::perfect()));
    for (double v : fda_pass_rate(r)) EXPECT_EQ(v, 1.0);
}

TEST(FdaPassRate, ThresholdExtremes) {
    const Scenario s = make_scenario(kMaine, kSymptomatic);
    const auto r = run_setting(s, setting(SettingKind::AllGraph), 1, 30, quick_model());
    for (double v : fda_pass_rate(r, 0.0)) EXPECT_EQ(v, 1.0);
    const auto at_one = fda_pass_rate(r, 1.0);
    std::size_t i = 0;
    for (const auto& row : r.rows) {
        if (row.model != ModelKind::Tag::Correlated) continue;
        std::size_t ones = 0;
        for (const auto& m : row.replicates) ones += m.sensitivity == 1.0;
        EXPECT_LE(at_one[i++], double(ones) / row.replicates.size());
    }
}

TEST(FdaPassRate, SpousesPassEverywhereWithIndividualLodForty) {
    const TestModel tm = quick_model(DetectionCurve::step(40));
    for (const auto& e : builtin_catalog()) {
        if (e.parameter != CatalogEntry::Parameter::Prevalence) continue;
        const auto r = run_setting(make_scenario(e.name, kSpouses), setting(SettingKind::AllGraph), 1, 30, tm);
        for (double v : fda_pass_rate(r)) EXPECT_EQ(v, 1.0) << e.name;
    }
}

TEST(FdaPassRate, AsymptomaticLargePoolsFall) {
    const auto r = run_setting(make_scenario(kMaine, kAsymptomatic), setting(SettingKind::AllGraph), 20, 30,
                               quick_model());
    for (double v : fda_pass_rate(r)) EXPECT_LT(v, 1.0);
}

TEST(Recommend, InfeasibleReportsBindingConstraint) {
    const auto r = run_setting(make_scenario(kMaine, kSpouses), setting(SettingKind::Fixed, 1), 1, 30, quick_model());
    Constraints c;
    c.min_sensitivity = 1.01;
    const auto rec = recommend_pool_size(r, c, Objective::MinTests);
    EXPECT_FALSE(rec.n.has_value());
    ASSERT_EQ(rec.binding.size(), 1u);
    EXPECT_EQ(rec.binding[0], "min_sensitivity");
}

TEST(Recommend, PerfectTestPicksEtaMinimiser) {
    for (const char* prev : {kMaine, kAlabama, "Iowa, November 2020"}) {
        const Scenario s = make_scenario(prev, kSymptomatic);
        const auto r = run_setting(s, setting(SettingKind::Fixed, 1), 1, 60, quick_model(DetectionCurve::perfect()));
        const auto rec = recommend_pool_size(r, {}, Objective::MinTests);
        ASSERT_TRUE(rec.n.has_value());
        int best = 1;
        double best_eta = 2.0;
        for (const auto& c : rec.candidates)
            if (c.tests_per_sample < best_eta) {
                best_eta = c.tests_per_sample;
                best = c.n;
            }
        EXPECT_EQ(*rec.n, best) << prev;
        const double guide = 1.0 / std::sqrt(r.point_pi);
        EXPECT_LE(std::abs(*rec.n - guide), 0.5 * guide) << prev;
    }
}

TEST(Recommend, TiesGoToSmallerPools) {
    ScenarioResult r;
    for (int n : {3, 4, 5}) {
        ScenarioRow row;
        row.n = n;
        row.tests_per_sample.point = 0.4;
        row.sensitivity.point = 0.9;
        row.replicates = {MetricSet{0.9, 1.0, 0.4, 0.0, 0.0}};
        r.rows.push_back(row);
    }
    EXPECT_EQ(*recommend_pool_size(r, {}, Objective::MinTests).n, 3);
    EXPECT_EQ(*recommend_pool_size(r, {}, Objective::MaxSavings).n, 3);
}

TEST(Recommend, SymptomaticHouseholdsSupportPoolsOfTwenty) {
    const auto r = run_setting(make_scenario(kMaine, kSymptomatic), setting(SettingKind::AllGraph), 1, 30,
                               quick_model());
    Constraints c;
    c.min_pass_rate = 1.0;
    const auto rec = recommend_pool_size(r, c, Objective::MinTests);
    ASSERT_TRUE(rec.n.has_value());
    bool large = false;
    for (const auto& cand : rec.candidates) large = large || (cand.feasible && cand.n >= 20);
    EXPECT_TRUE(large);
    EXPECT_LT(r.row(20, ModelKind::Tag::Correlated).tests_per_sample.point, 0.1);
}

TEST(Quantile, Interpolates) {
    EXPECT_DOUBLE_EQ(empirical_quantile({1, 2, 3, 4, 5}, 0.5), 3.0);
    EXPECT_DOUBLE_EQ(empirical_quantile({1, 2}, 0.25), 1.25);
    EXPECT_THROW(empirical_quantile({}, 0.5), DomainError);
}
