#include "pooltest/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pooltest/error.hpp"
#include "pooltest/parallel.hpp"
#include "pooltest/service.hpp"

namespace pooltest {

namespace {

struct UsageError : Error {
    using Error::Error;
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("POOLTEST_SEED")) {
        try {
            std::size_t pos = 0;
            const unsigned long long v = std::stoull(env, &pos);
            if (pos == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw UsageError("POOLTEST_SEED must be a nonnegative integer");
    }
    return kDefaultSeed;
}

struct EngineFlags {
    std::string curve = "step:35";
    bool perfect = false;
    double tail = 0.25;
    double tail_ct = 35.0;
    std::string weibull = "4.5,30";
    std::int64_t draws = kDefaultCtDraws;
    std::optional<std::uint64_t> seed;
    bool literal_missed = false;
    unsigned threads = 0;

    void add(CLI::App* app) {
        app->add_option("--curve", curve, "Detection curve: step:LOD, logistic:LOD,WIDTH or perfect")
            ->capture_default_str();
        app->add_flag("--perfect-test", perfect, "Use a perfect assay (every pool with a positive is detected)");
        app->add_option("--tail", tail, "Fraction of individual Ct values above --tail-ct")->capture_default_str();
        app->add_option("--tail-ct", tail_ct, "Ct threshold used to calibrate the population shift")
            ->capture_default_str();
        app->add_option("--weibull", weibull, "Weibull shape,scale for individual Ct (or main / alt)")
            ->capture_default_str();
        app->add_option("--draws", draws, "Monte Carlo Ct draws per (k, n) sensitivity cell")->capture_default_str();
        app->add_option("--seed", seed, "Random seed (default: $POOLTEST_SEED or a fixed constant)");
        app->add_option("--threads", threads, "Maximum worker threads (0 = all cores)")->capture_default_str();
        app->add_flag("--paper-literal-missed", literal_missed,
                      "Report the verbatim missed-cases expression instead of the per-sample proportion");
    }

    EngineOptions resolve() const {
        EngineOptions e;
        if (weibull == "main") e.weibull = WeibullParams::main_text();
        else if (weibull == "alt") e.weibull = WeibullParams::alternate();
        else {
            const auto comma = weibull.find(',');
            if (comma == std::string::npos) throw UsageError("--weibull expects shape,scale");
            try {
                e.weibull = {std::stod(weibull.substr(0, comma)), std::stod(weibull.substr(comma + 1))};
            } catch (const std::exception&) {
                throw UsageError("--weibull expects shape,scale");
            }
        }
        try {
            e.curve = perfect ? DetectionCurve::perfect() : parse_curve(curve);
        } catch (const DomainError& ex) {
            throw UsageError(std::string("--curve: ") + ex.what());
        }
        e.tail_fraction = tail;
        e.tail_ct = tail_ct;
        e.draws = draws;
        e.seed = seed ? *seed : default_seed();
        e.paper_literal_missed = literal_missed;
        try {
            e.validate();
        } catch (const ValidationError& ex) {
            std::string flag = ex.field();
            std::replace(flag.begin(), flag.end(), '_', '-');
            throw UsageError("--" + flag + ": " + std::string(ex.what()).substr(ex.field().size() + 2));
        }
        return e;
    }
};

struct OutputFlags {
    std::string format = "json";
    std::string path;

    void add(CLI::App* app, bool csv_allowed = true) {
        if (csv_allowed)
            app->add_option("--format", format, "Output format")
                ->check(CLI::IsMember({"csv", "json"}))
                ->capture_default_str();
        app->add_option("--output,-o", path, "Write output to this file instead of stdout");
    }
};

void emit(const OutputFlags& o, const std::string& text, std::ostream& out) {
    if (o.path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(o.path, std::ios::binary);
    if (!f) throw Error("cannot open output file " + o.path);
    f << text;
    if (!f) throw Error("failed writing " + o.path);
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

PriorSpec prior_flag(const std::string& text, const char* name) {
    try {
        return parse_prior_flag(text, name);
    } catch (const ValidationError& e) {
        throw UsageError(std::string("--") + e.what());
    }
}

NRange range_flag(const std::string& text) {
    try {
        return parse_n_range(text, "n");
    } catch (const ValidationError& e) {
        throw UsageError(std::string("--") + e.what());
    }
}

struct ScenarioFlags {
    std::string prevalence;
    std::string transmission;
    std::string file;
    std::string pi;
    std::string tau;
    std::string setting = "fixed";
    int replicates = 100;
    std::string n = "1..30";

    void add(CLI::App* app) {
        app->add_option("--prevalence", prevalence, "Catalog prevalence entry, e.g. \"Maine, October 2020\"");
        app->add_option("--transmission", transmission, "Catalog transmission entry, e.g. \"Household (Spouses)\"");
        app->add_option("--scenario-file", file, "JSON scenario file {name, pi, tau}");
        app->add_option("--pi", pi, "Prevalence prior: x, beta:a,b or ci:lo,hi");
        app->add_option("--tau", tau, "Transmission prior: x, beta:a,b or ci:lo,hi");
        app->add_option("--setting", setting, "Simulation setting")
            ->check(CLI::IsMember({"fixed", "tau_graph", "pi_graph", "all_graph"}))
            ->capture_default_str();
        app->add_option("--replicates,-B", replicates, "Number of prior draws")
            ->check(CLI::Range(1, kMaxReplicates))
            ->capture_default_str();
        app->add_option("--n", n, "Pool size or range lo..hi")->capture_default_str();
    }

    SimulateRequest resolve(const EngineFlags& ef) const {
        SimulateRequest r;
        const int sources = (!prevalence.empty() || !transmission.empty()) + !file.empty() + (!pi.empty() || !tau.empty());
        if (sources != 1)
            throw UsageError("give exactly one of --prevalence/--transmission, --scenario-file or --pi/--tau");
        if (!file.empty()) {
            std::ifstream f(file);
            if (!f) throw UsageError("cannot read scenario file " + file);
            try {
                r.scenario = scenario_from_json(json::parse(f));
            } catch (const json::exception& e) {
                throw UsageError("scenario file: " + std::string(e.what()));
            } catch (const ValidationError& e) {
                throw UsageError("scenario file: " + std::string(e.what()));
            }
        } else if (!pi.empty() || !tau.empty()) {
            if (pi.empty() || tau.empty()) throw UsageError("--pi and --tau must be given together");
            r.scenario = {"custom", prior_flag(pi, "pi"), prior_flag(tau, "tau"), ""};
        } else {
            if (prevalence.empty() || transmission.empty())
                throw UsageError("--prevalence and --transmission must be given together");
            try {
                r.scenario = make_scenario(prevalence, transmission);
            } catch (const DomainError& e) {
                throw UsageError(e.what());
            }
        }
        r.setting = parse_setting(setting);
        r.replicates = replicates;
        r.n = range_flag(n);
        r.engine = ef.resolve();
        return r;
    }
};

std::string candidates_csv(const Recommendation& rec) {
    std::ostringstream os;
    os << "n,sensitivity,tests_per_sample,missed_per_sample,pass_rate,score,feasible,recommended\n";
    for (const auto& c : rec.candidates)
        os << c.n << ',' << format_double(c.sensitivity) << ',' << format_double(c.tests_per_sample) << ','
           << format_double(c.missed_per_sample) << ',' << format_double(c.pass_rate) << ','
           << format_double(c.score) << ',' << (c.feasible ? 1 : 0) << ',' << (rec.n && *rec.n == c.n ? 1 : 0)
           << '\n';
    return os.str();
}

std::string catalog_csv() {
    std::ostringstream os;
    os << "name,parameter,alpha,beta,mean,stated_mean,ci_lo,ci_hi,citation\n";
    for (const auto& e : builtin_catalog())
        os << '"' << e.name << "\","
           << (e.parameter == CatalogEntry::Parameter::Prevalence ? "prevalence" : "transmission") << ','
           << format_double(e.beta.alpha) << ',' << format_double(e.beta.beta) << ','
           << format_double(e.beta.mean()) << ',' << format_double(e.stated_mean) << ','
           << format_double(e.ci_lo) << ',' << format_double(e.ci_hi) << ",\"" << e.citation << "\"\n";
    return os.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pooled-testing design engine: correlated infection counts, Ct dilution and Dorfman pool metrics",
                 "pooltest"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Metrics for one pool size");
    EngineFlags m_eng;
    OutputFlags m_out;
    int m_n = 5;
    std::string m_pi, m_tau = "0";
    bool m_null = false;
    metrics->add_option("--n", m_n, "Pool size")->check(CLI::Range(1, kMaxPoolSize))->capture_default_str();
    metrics->add_option("--pi", m_pi, "Prevalence: x, beta:a,b or ci:lo,hi (Beta priors use their mean)")->required();
    metrics->add_option("--tau", m_tau, "Transmission: x, beta:a,b or ci:lo,hi")->capture_default_str();
    metrics->add_flag("--null-model", m_null, "Evaluate the independent (no network) model");
    m_eng.add(metrics);
    m_out.add(metrics);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Metrics across a range of pool sizes, null and correlated models");
    EngineFlags s_eng;
    OutputFlags s_out;
    std::string s_n = "1..30", s_pi, s_tau = "0";
    sweep->add_option("--n", s_n, "Pool size range lo..hi")->capture_default_str();
    sweep->add_option("--pi", s_pi, "Prevalence: x, beta:a,b or ci:lo,hi (Beta priors use their mean)")->required();
    sweep->add_option("--tau", s_tau, "Transmission: x, beta:a,b or ci:lo,hi")->capture_default_str();
    s_eng.add(sweep);
    s_out.add(sweep);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Prior-draw simulation with credible bands");
    EngineFlags sim_eng;
    OutputFlags sim_out;
    ScenarioFlags sim_sc;
    sim_sc.add(simulate);
    sim_eng.add(simulate);
    sim_out.add(simulate);

    // fit-beta
    auto* fit = app.add_subcommand("fit-beta", "Fit Beta(alpha, beta) to a confidence interval");
    OutputFlags f_out;
    double f_lo = 0.0, f_hi = 0.0, f_plo = 0.025, f_phi = 0.975;
    fit->add_option("--lo", f_lo, "Lower interval endpoint")->required();
    fit->add_option("--hi", f_hi, "Upper interval endpoint")->required();
    fit->add_option("--p-lo", f_plo, "Probability at the lower endpoint")->capture_default_str();
    fit->add_option("--p-hi", f_phi, "Probability at the upper endpoint")->capture_default_str();
    f_out.add(fit, false);

    // recommend
    auto* recommend = app.add_subcommand("recommend", "Recommend a pool size under constraints");
    EngineFlags r_eng;
    OutputFlags r_out;
    ScenarioFlags r_sc;
    std::optional<double> r_min_sens, r_min_pass;
    double r_thresh = kFdaThreshold;
    std::string r_obj = "min_tests";
    r_sc.add(recommend);
    recommend->add_option("--min-sensitivity", r_min_sens, "Minimum point sensitivity");
    recommend->add_option("--min-pass-rate", r_min_pass, "Minimum fraction of draws with sensitivity >= threshold");
    recommend->add_option("--pass-threshold", r_thresh, "Sensitivity threshold for the pass rate")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    recommend->add_option("--objective", r_obj, "min_tests or max_savings")
        ->check(CLI::IsMember({"min_tests", "max_savings"}))
        ->capture_default_str();
    r_eng.add(recommend);
    r_out.add(recommend);

    // catalog
    auto* catalog = app.add_subcommand("catalog", "List built-in prevalence and transmission priors");
    OutputFlags c_out;
    c_out.add(catalog);

    // serve
    auto* srv = app.add_subcommand("serve", "Start the HTTP JSON service");
    ServeOptions sv;
    std::optional<std::uint64_t> sv_seed;
    unsigned sv_threads = 0;
    srv->add_option("--bind", sv.bind, "Bind address")->capture_default_str();
    srv->add_option("--port", sv.port, "Port (0 picks a free port)")->check(CLI::Range(0, 65535))->capture_default_str();
    srv->add_option("--cors", sv.cors_origin, "Allowed CORS origin for the UI (empty disables)");
    srv->add_option("--seed", sv_seed, "Default seed for requests that omit one");
    srv->add_option("--threads", sv_threads, "Maximum worker threads (0 = all cores)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    auto announce_seed = [&](std::uint64_t seed) { err << "seed: " << seed << '\n'; };

    try {
        if (metrics->parsed()) {
            MetricsRequest req;
            req.n = m_n;
            req.pi = prior_flag(m_pi, "pi");
            req.tau = prior_flag(m_tau, "tau");
            req.null_model = m_null;
            req.engine = m_eng.resolve();
            set_max_threads(m_eng.threads);
            announce_seed(req.engine.seed);
            const json j = run_metrics(req);
            if (m_out.format == "json") {
                emit(m_out, pretty(j), out);
            } else {
                SweepRow row;
                row.n = req.n;
                row.model = m_null ? ModelKind::Tag::Null : ModelKind::Tag::Correlated;
                row.pi = req.pi.mean();
                row.tau = req.tau.mean();
                row.metrics.sensitivity = j["metrics"]["sensitivity"];
                row.metrics.relative_sensitivity = j["metrics"]["relative_sensitivity"];
                row.metrics.tests_per_sample = j["metrics"]["tests_per_sample"];
                row.metrics.missed_per_sample = j["metrics"]["missed_per_sample"];
                row.p_positive_pool = 1.0 - count_distribution({row.n, row.pi, row.tau},
                                                               m_null ? ModelKind::null() : ModelKind::correlated())
                                                .probs[0];
                emit(m_out, sweep_csv({row}), out);
            }
            return 0;
        }
        if (sweep->parsed()) {
            SweepRequest req;
            req.n = range_flag(s_n);
            req.pi = prior_flag(s_pi, "pi");
            req.tau = prior_flag(s_tau, "tau");
            req.engine = s_eng.resolve();
            set_max_threads(s_eng.threads);
            announce_seed(req.engine.seed);
            if (s_out.format == "json") emit(s_out, pretty(run_sweep(req)), out);
            else emit(s_out, sweep_csv(sweep_rows(req), req.engine.paper_literal_missed), out);
            return 0;
        }
        if (simulate->parsed()) {
            const SimulateRequest req = sim_sc.resolve(sim_eng);
            set_max_threads(sim_eng.threads);
            announce_seed(req.engine.seed);
            if (sim_out.format == "json") emit(sim_out, pretty(run_simulate(req)), out);
            else emit(sim_out, scenario_csv(simulate_result(req), req.engine.paper_literal_missed), out);
            return 0;
        }
        if (fit->parsed()) {
            FitRequest req{f_lo, f_hi, f_plo, f_phi};
            if (!(f_lo > 0.0 && f_lo < f_hi && f_hi < 1.0)) throw UsageError("need 0 < --lo < --hi < 1");
            emit(f_out, pretty(run_fit(req)), out);
            return 0;
        }
        if (recommend->parsed()) {
            RecommendRequest req;
            req.sim = r_sc.resolve(r_eng);
            req.constraints.min_sensitivity = r_min_sens;
            req.constraints.min_pass_rate = r_min_pass;
            req.constraints.pass_threshold = r_thresh;
            req.objective = parse_objective(r_obj);
            set_max_threads(r_eng.threads);
            announce_seed(req.sim.engine.seed);
            const json j = run_recommend(req);
            if (r_out.format == "json") {
                emit(r_out, pretty(j), out);
            } else {
                const ScenarioResult res = simulate_result(req.sim);
                emit(r_out, candidates_csv(recommend_pool_size(res, req.constraints, req.objective)), out);
            }
            if (!j["recommendation"]["feasible"].get<bool>()) err << "infeasible: no pool size meets the constraints\n";
            return 0;
        }
        if (catalog->parsed()) {
            emit(c_out, c_out.format == "json" ? pretty(run_catalog()) : catalog_csv(), out);
            return 0;
        }
        if (srv->parsed()) {
            sv.default_seed = sv_seed ? *sv_seed : default_seed();
            set_max_threads(sv_threads);
            HttpServer server(sv);
            if (!server.bind()) {
                err << "error: could not bind " << sv.bind << ':' << sv.port << '\n';
                return 1;
            }
            err << "listening on " << sv.bind << ':' << server.port() << std::endl;
            server.run();
            return 0;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\nRun with --help for usage.\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace pooltest
