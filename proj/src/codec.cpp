#include "pooltest/codec.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "pooltest/error.hpp"

namespace pooltest {

std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace {

double parse_number(const std::string& s, const std::string& field) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e) throw ValidationError(field, "not a number: '" + s + "'");
    return v;
}

std::pair<double, double> parse_pair(const std::string& s, const std::string& field) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw ValidationError(field, "expected two comma-separated numbers");
    return {parse_number(s.substr(0, comma), field), parse_number(s.substr(comma + 1), field)};
}

double number_at(const json& j, const char* key, const std::string& field) {
    if (!j.contains(key)) throw ValidationError(field + "." + key, "missing");
    if (!j.at(key).is_number()) throw ValidationError(field + "." + key, "must be a number");
    return j.at(key).get<double>();
}

PriorSpec checked(const std::string& field, const auto& make) {
    try {
        return make();
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw ValidationError(field, e.what());
    }
}

}  // namespace

json to_json(const BetaParams& p) { return {{"alpha", p.alpha}, {"beta", p.beta}}; }

json to_json(const PriorSpec& p) {
    if (p.kind == PriorSpec::Kind::Point) return {{"point", p.value}};
    return {{"beta", to_json(p.params)}, {"mean", p.params.mean()}};
}

json to_json(const WeibullParams& w) { return {{"shape", w.shape}, {"scale", w.scale}}; }

json to_json(const CtPopulation& pop) {
    return {{"weibull", to_json(pop.weibull)},
            {"shift", pop.shift},
            {"tail_fraction", pop.tail_fraction},
            {"tail_threshold", pop.tail_threshold}};
}

json to_json(const MetricSet& m) {
    return {{"sensitivity", m.sensitivity},
            {"relative_sensitivity", m.relative_sensitivity},
            {"tests_per_sample", m.tests_per_sample},
            {"missed_per_sample", m.missed_per_sample},
            {"missed_paper_literal", m.missed_paper_literal}};
}

json to_json(const SweepRow& r, bool paper_literal_missed) {
    return {{"model", to_string(r.model)},
            {"n", r.n},
            {"pi", r.pi},
            {"tau", r.tau},
            {"sensitivity", r.metrics.sensitivity},
            {"relative_sensitivity", r.metrics.relative_sensitivity},
            {"tests_per_sample", r.metrics.tests_per_sample},
            {"missed_per_sample", paper_literal_missed ? r.metrics.missed_paper_literal : r.metrics.missed_per_sample},
            {"p_positive_pool", r.p_positive_pool}};
}

json to_json(const Band& b) {
    return {{"point", b.point}, {"median", b.median}, {"lo", b.lo}, {"hi", b.hi}, {"mean", b.mean}};
}

json to_json(const ScenarioResult& r, bool paper_literal_missed) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        json missed = to_json(row.missed_per_sample);
        if (paper_literal_missed) {
            std::vector<double> lit;
            for (const auto& m : row.replicates) lit.push_back(m.missed_paper_literal);
            missed = {{"point", row.point.missed_paper_literal},
                      {"median", empirical_quantile(lit, 0.5)},
                      {"lo", empirical_quantile(lit, 0.025)},
                      {"hi", empirical_quantile(lit, 0.975)}};
        }
        rows.push_back({{"n", row.n},
                        {"model", to_string(row.model)},
                        {"sensitivity", to_json(row.sensitivity)},
                        {"relative_sensitivity", to_json(row.relative_sensitivity)},
                        {"tests_per_sample", to_json(row.tests_per_sample)},
                        {"missed_per_sample", missed},
                        {"fda_pass_rate", row.fda_pass_rate}});
    }
    return {{"scenario", r.scenario},
            {"setting", to_string(r.setting.kind)},
            {"replicates", r.setting.replicates},
            {"seed", r.setting.seed},
            {"point_pi", r.point_pi},
            {"point_tau", r.point_tau},
            {"rows", rows}};
}

json to_json(const Recommendation& r) {
    json cands = json::array();
    for (const auto& c : r.candidates)
        cands.push_back({{"n", c.n},
                         {"sensitivity", c.sensitivity},
                         {"tests_per_sample", c.tests_per_sample},
                         {"missed_per_sample", c.missed_per_sample},
                         {"pass_rate", c.pass_rate},
                         {"score", c.score},
                         {"feasible", c.feasible}});
    json out = {{"feasible", r.n.has_value()}, {"candidates", cands}};
    out["n"] = r.n ? json(*r.n) : json(nullptr);
    out["binding"] = r.binding;
    return out;
}

json to_json(const CatalogEntry& e) {
    return {{"name", e.name},
            {"parameter", e.parameter == CatalogEntry::Parameter::Prevalence ? "prevalence" : "transmission"},
            {"alpha", e.beta.alpha},
            {"beta", e.beta.beta},
            {"mean", e.beta.mean()},
            {"stated_mean", e.stated_mean},
            {"ci95", {{"lo", e.ci_lo}, {"hi", e.ci_hi}}},
            {"citation", e.citation}};
}

json catalog_json() {
    json arr = json::array();
    for (const auto& e : builtin_catalog()) arr.push_back(to_json(e));
    return arr;
}

PriorSpec prior_from_json(const json& j, const std::string& field) {
    if (j.is_number()) return checked(field, [&] { return PriorSpec::point(j.get<double>()); });
    if (!j.is_object()) throw ValidationError(field, "expected a number or a prior object");
    if (j.contains("point")) {
        if (!j.at("point").is_number()) throw ValidationError(field + ".point", "must be a number");
        return checked(field, [&] { return PriorSpec::point(j.at("point").get<double>()); });
    }
    if (j.contains("beta")) {
        const json& b = j.at("beta");
        if (!b.is_object()) throw ValidationError(field + ".beta", "expected {alpha, beta}");
        const double a = number_at(b, "alpha", field + ".beta");
        const double bb = number_at(b, "beta", field + ".beta");
        return checked(field, [&] { return PriorSpec::beta(a, bb); });
    }
    if (j.contains("ci95")) {
        const json& c = j.at("ci95");
        if (!c.is_object()) throw ValidationError(field + ".ci95", "expected {lo, hi}");
        const double lo = number_at(c, "lo", field + ".ci95");
        const double hi = number_at(c, "hi", field + ".ci95");
        return checked(field, [&] { return PriorSpec::beta(fit_beta_from_quantiles(lo, hi)); });
    }
    throw ValidationError(field, "expected one of point, beta, ci95");
}

PriorSpec parse_prior_flag(const std::string& text, const std::string& field) {
    if (text.rfind("beta:", 0) == 0) {
        const auto [a, b] = parse_pair(text.substr(5), field);
        return checked(field, [&] { return PriorSpec::beta(a, b); });
    }
    if (text.rfind("ci:", 0) == 0) {
        const auto [lo, hi] = parse_pair(text.substr(3), field);
        return checked(field, [&] { return PriorSpec::beta(fit_beta_from_quantiles(lo, hi)); });
    }
    const double v = parse_number(text, field);
    return checked(field, [&] { return PriorSpec::point(v); });
}

Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("scenario", "expected an object");
    Scenario s;
    if (j.contains("prevalence") || j.contains("transmission")) {
        if (!j.contains("prevalence") || !j.contains("transmission"))
            throw ValidationError("scenario", "need both prevalence and transmission catalog names");
        try {
            s = make_scenario(j.at("prevalence").get<std::string>(), j.at("transmission").get<std::string>());
        } catch (const json::exception& e) {
            throw ValidationError("scenario", e.what());
        } catch (const DomainError& e) {
            throw ValidationError("scenario", e.what());
        }
        return s;
    }
    if (!j.contains("pi")) throw ValidationError("scenario.pi", "missing");
    if (!j.contains("tau")) throw ValidationError("scenario.tau", "missing");
    s.name = j.contains("name") && j.at("name").is_string() ? j.at("name").get<std::string>() : "custom";
    s.pi = prior_from_json(j.at("pi"), "scenario.pi");
    s.tau = prior_from_json(j.at("tau"), "scenario.tau");
    if (j.contains("citation") && j.at("citation").is_string()) s.citation = j.at("citation").get<std::string>();
    return s;
}

NRange parse_n_range(const std::string& text, const std::string& field) {
    auto to_int = [&](const std::string& s) {
        int v = 0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            throw ValidationError(field, "not an integer: '" + s + "'");
        return v;
    };
    NRange r;
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        r.min = r.max = to_int(text);
    } else {
        r.min = to_int(text.substr(0, dots));
        r.max = to_int(text.substr(dots + 2));
    }
    if (r.min < 1 || r.max > 100 || r.min > r.max) throw ValidationError(field, "range must lie within 1..100");
    return r;
}

std::string metrics_csv_header() {
    return "model,n,pi,tau,sensitivity,relative_sensitivity,tests_per_sample,missed_per_sample,p_positive_pool";
}

std::string sweep_csv(const std::vector<SweepRow>& rows, bool paper_literal_missed) {
    std::ostringstream os;
    os << metrics_csv_header() << '\n';
    for (const auto& r : rows) {
        const double missed = paper_literal_missed ? r.metrics.missed_paper_literal : r.metrics.missed_per_sample;
        os << to_string(r.model) << ',' << r.n << ',' << format_double(r.pi) << ',' << format_double(r.tau) << ','
           << format_double(r.metrics.sensitivity) << ',' << format_double(r.metrics.relative_sensitivity) << ','
           << format_double(r.metrics.tests_per_sample) << ',' << format_double(missed) << ','
           << format_double(r.p_positive_pool) << '\n';
    }
    return os.str();
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != metrics_csv_header()) throw DomainError("unexpected CSV header");
    std::vector<SweepRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 9) throw DomainError("CSV row has " + std::to_string(cells.size()) + " columns");
        SweepRow r;
        if (cells[0] == "null") r.model = ModelKind::Tag::Null;
        else if (cells[0] == "correlated") r.model = ModelKind::Tag::Correlated;
        else throw DomainError("unknown model '" + cells[0] + "'");
        r.n = static_cast<int>(parse_number(cells[1], "n"));
        r.pi = parse_number(cells[2], "pi");
        r.tau = parse_number(cells[3], "tau");
        r.metrics.sensitivity = parse_number(cells[4], "sensitivity");
        r.metrics.relative_sensitivity = parse_number(cells[5], "relative_sensitivity");
        r.metrics.tests_per_sample = parse_number(cells[6], "tests_per_sample");
        r.metrics.missed_per_sample = parse_number(cells[7], "missed_per_sample");
        r.p_positive_pool = parse_number(cells[8], "p_positive_pool");
        rows.push_back(r);
    }
    return rows;
}

std::string scenario_csv(const ScenarioResult& r, bool paper_literal_missed) {
    std::ostringstream os;
    os << "setting,scenario,n,metric,point,lo,hi\n";
    auto quoted = [](const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    const std::string setting = to_string(r.setting.kind);
    const std::string name = quoted(r.scenario);
    for (const auto& row : r.rows) {
        const std::string model = row.model == ModelKind::Tag::Null ? "null_" : "";
        auto emit = [&](const std::string& metric, double point, double lo, double hi) {
            os << setting << ',' << name << ',' << row.n << ',' << model << metric << ',' << format_double(point)
               << ',' << format_double(lo) << ',' << format_double(hi) << '\n';
        };
        emit("sensitivity", row.sensitivity.point, row.sensitivity.lo, row.sensitivity.hi);
        emit("relative_sensitivity", row.relative_sensitivity.point, row.relative_sensitivity.lo,
             row.relative_sensitivity.hi);
        emit("tests_per_sample", row.tests_per_sample.point, row.tests_per_sample.lo, row.tests_per_sample.hi);
        if (paper_literal_missed) {
            std::vector<double> lit;
            for (const auto& m : row.replicates) lit.push_back(m.missed_paper_literal);
            emit("missed_per_sample", row.point.missed_paper_literal, empirical_quantile(lit, 0.025),
                 empirical_quantile(lit, 0.975));
        } else {
            emit("missed_per_sample", row.missed_per_sample.point, row.missed_per_sample.lo,
                 row.missed_per_sample.hi);
        }
        emit("fda_pass_rate", row.fda_pass_rate, row.fda_pass_rate, row.fda_pass_rate);
    }
    return os.str();
}

}  // namespace pooltest
