#include "pooltest/service.hpp"

#include <initializer_list>
#include <set>

#include <httplib.h>

#include "pooltest/error.hpp"

namespace pooltest {

namespace {

const std::set<std::string> kEngineKeys = {"seed", "draws", "curve", "perfect_test", "tail",
                                           "tail_ct", "weibull", "paper_literal_missed"};

void reject_unknown(const json& body, std::initializer_list<const char*> extra) {
    for (auto it = body.begin(); it != body.end(); ++it) {
        if (kEngineKeys.count(it.key())) continue;
        bool known = false;
        for (const char* k : extra)
            if (it.key() == k) known = true;
        if (!known) throw ValidationError(it.key(), "unknown field");
    }
}

double get_number(const json& j, const char* key) {
    if (!j.at(key).is_number()) throw ValidationError(key, "must be a number");
    return j.at(key).get<double>();
}

std::int64_t get_integer(const json& j, const char* key) {
    const json& v = j.at(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    throw ValidationError(key, "must be an integer");
}

bool get_bool(const json& j, const char* key) {
    if (!j.at(key).is_boolean()) throw ValidationError(key, "must be true or false");
    return j.at(key).get<bool>();
}

NRange n_range_from_json(const json& body, NRange fallback) {
    if (!body.contains("n")) return fallback;
    const json& v = body.at("n");
    NRange r;
    if (v.is_number_integer()) {
        r.min = r.max = v.get<int>();
    } else if (v.is_string()) {
        return parse_n_range(v.get<std::string>(), "n");
    } else if (v.is_object()) {
        if (!v.contains("min") || !v.contains("max")) throw ValidationError("n", "expected {min, max}");
        if (!v.at("min").is_number_integer() || !v.at("max").is_number_integer())
            throw ValidationError("n", "min and max must be integers");
        r.min = v.at("min").get<int>();
        r.max = v.at("max").get<int>();
    } else {
        throw ValidationError("n", "expected an integer, \"min..max\" or {min, max}");
    }
    if (r.min < 1 || r.max > kMaxPoolSize || r.min > r.max)
        throw ValidationError("n", "range must lie within 1.." + std::to_string(kMaxPoolSize));
    return r;
}

}  // namespace

TestModel EngineOptions::test_model() const {
    TestModel tm;
    tm.population = CtPopulation::calibrated(weibull, tail_fraction, tail_ct);
    tm.curve = curve;
    tm.draws = draws;
    tm.seed = seed;
    return tm;
}

void EngineOptions::validate() const {
    try {
        weibull.validate();
    } catch (const Error& e) {
        throw ValidationError("weibull", e.what());
    }
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw ValidationError("tail", "must lie in (0, 1)");
    if (!std::isfinite(tail_ct)) throw ValidationError("tail_ct", "must be finite");
    try {
        curve.validate();
    } catch (const Error& e) {
        throw ValidationError("curve", e.what());
    }
    if (draws < 1 || draws > kMaxDraws)
        throw ValidationError("draws", "must lie in 1.." + std::to_string(kMaxDraws));
}

json EngineOptions::to_json() const {
    const TestModel tm = test_model();
    return {{"weibull", pooltest::to_json(weibull)},
            {"tail", tail_fraction},
            {"tail_ct", tail_ct},
            {"ct_shift", tm.population.shift},
            {"curve", to_string(curve)},
            {"draws", draws},
            {"paper_literal_missed", paper_literal_missed}};
}

EngineOptions engine_from_json(const json& body, std::uint64_t default_seed) {
    EngineOptions e;
    e.seed = default_seed;
    if (body.contains("seed")) {
        const json& s = body.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
            throw ValidationError("seed", "must be a nonnegative integer");
        e.seed = s.get<std::uint64_t>();
    }
    if (body.contains("draws")) e.draws = get_integer(body, "draws");
    if (body.contains("curve")) {
        if (!body.at("curve").is_string()) throw ValidationError("curve", "must be a string");
        try {
            e.curve = parse_curve(body.at("curve").get<std::string>());
        } catch (const DomainError& ex) {
            throw ValidationError("curve", ex.what());
        }
    }
    if (body.contains("perfect_test") && get_bool(body, "perfect_test")) e.curve = DetectionCurve::perfect();
    if (body.contains("tail")) e.tail_fraction = get_number(body, "tail");
    if (body.contains("tail_ct")) e.tail_ct = get_number(body, "tail_ct");
    if (body.contains("weibull")) {
        const json& w = body.at("weibull");
        if (w.is_string()) {
            const std::string name = w.get<std::string>();
            if (name == "main") e.weibull = WeibullParams::main_text();
            else if (name == "alt") e.weibull = WeibullParams::alternate();
            else throw ValidationError("weibull", "preset must be main or alt");
        } else if (w.is_object() && w.contains("shape") && w.contains("scale") && w.at("shape").is_number() &&
                   w.at("scale").is_number()) {
            e.weibull = {w.at("shape").get<double>(), w.at("scale").get<double>()};
        } else {
            throw ValidationError("weibull", "expected \"main\", \"alt\" or {shape, scale}");
        }
    }
    if (body.contains("paper_literal_missed")) e.paper_literal_missed = get_bool(body, "paper_literal_missed");
    e.validate();
    return e;
}

SweepRequest sweep_request_from_json(const json& body, std::uint64_t default_seed) {
    if (!body.is_object()) throw ValidationError("body", "expected a JSON object");
    reject_unknown(body, {"n", "pi", "tau", "network"});
    SweepRequest r;
    r.n = n_range_from_json(body, NRange{1, 30});
    if (!body.contains("pi")) throw ValidationError("pi", "missing");
    r.pi = prior_from_json(body.at("pi"), "pi");
    if (body.contains("tau")) r.tau = prior_from_json(body.at("tau"), "tau");
    if (body.contains("network") && !get_bool(body, "network")) r.tau = PriorSpec::point(0.0);
    r.engine = engine_from_json(body, default_seed);
    return r;
}

namespace {

void simulate_fields(const json& body, SimulateRequest& r, std::uint64_t default_seed) {
    if (!body.contains("scenario")) throw ValidationError("scenario", "missing");
    r.scenario = scenario_from_json(body.at("scenario"));
    if (body.contains("setting")) {
        if (!body.at("setting").is_string()) throw ValidationError("setting", "must be a string");
        try {
            r.setting = parse_setting(body.at("setting").get<std::string>());
        } catch (const DomainError& e) {
            throw ValidationError("setting", e.what());
        }
    }
    if (body.contains("replicates")) {
        const std::int64_t b = get_integer(body, "replicates");
        if (b < 1 || b > kMaxReplicates)
            throw ValidationError("replicates", "must lie in 1.." + std::to_string(kMaxReplicates));
        r.replicates = static_cast<int>(b);
    }
    r.n = n_range_from_json(body, NRange{1, 30});
    r.engine = engine_from_json(body, default_seed);
}

}  // namespace

SimulateRequest simulate_request_from_json(const json& body, std::uint64_t default_seed) {
    if (!body.is_object()) throw ValidationError("body", "expected a JSON object");
    reject_unknown(body, {"scenario", "setting", "replicates", "n"});
    SimulateRequest r;
    simulate_fields(body, r, default_seed);
    return r;
}

RecommendRequest recommend_request_from_json(const json& body, std::uint64_t default_seed) {
    if (!body.is_object()) throw ValidationError("body", "expected a JSON object");
    reject_unknown(body, {"scenario", "setting", "replicates", "n", "constraints", "objective"});
    RecommendRequest r;
    simulate_fields(body, r.sim, default_seed);
    if (body.contains("constraints")) {
        const json& c = body.at("constraints");
        if (!c.is_object()) throw ValidationError("constraints", "expected an object");
        for (auto it = c.begin(); it != c.end(); ++it) {
            const std::string key = it.key();
            if (key != "min_sensitivity" && key != "min_pass_rate" && key != "pass_threshold")
                throw ValidationError("constraints." + key, "unknown field");
            if (it->is_null()) continue;
            if (!it->is_number()) throw ValidationError("constraints." + key, "must be a number");
            const double v = it->get<double>();
            if (key == "min_sensitivity") r.constraints.min_sensitivity = v;
            else if (key == "min_pass_rate") r.constraints.min_pass_rate = v;
            else {
                if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("constraints.pass_threshold", "must lie in [0, 1]");
                r.constraints.pass_threshold = v;
            }
        }
    }
    if (body.contains("objective")) {
        if (!body.at("objective").is_string()) throw ValidationError("objective", "must be a string");
        try {
            r.objective = parse_objective(body.at("objective").get<std::string>());
        } catch (const DomainError& e) {
            throw ValidationError("objective", e.what());
        }
    }
    return r;
}

FitRequest fit_request_from_json(const json& body) {
    if (!body.is_object()) throw ValidationError("body", "expected a JSON object");
    for (auto it = body.begin(); it != body.end(); ++it)
        if (it.key() != "lo" && it.key() != "hi" && it.key() != "p_lo" && it.key() != "p_hi")
            throw ValidationError(it.key(), "unknown field");
    FitRequest r;
    if (!body.contains("lo")) throw ValidationError("lo", "missing");
    if (!body.contains("hi")) throw ValidationError("hi", "missing");
    r.lo = get_number(body, "lo");
    r.hi = get_number(body, "hi");
    if (body.contains("p_lo")) r.p_lo = get_number(body, "p_lo");
    if (body.contains("p_hi")) r.p_hi = get_number(body, "p_hi");
    if (!(r.lo > 0.0 && r.lo < 1.0)) throw ValidationError("lo", "must lie in (0, 1)");
    if (!(r.hi > r.lo && r.hi < 1.0)) throw ValidationError("hi", "must lie in (lo, 1)");
    if (!(r.p_lo > 0.0 && r.p_lo < 1.0)) throw ValidationError("p_lo", "must lie in (0, 1)");
    if (!(r.p_hi > r.p_lo && r.p_hi < 1.0)) throw ValidationError("p_hi", "must lie in (p_lo, 1)");
    return r;
}

namespace {

json envelope(std::uint64_t seed, json config) {
    return {{"version", kVersion}, {"seed", seed}, {"config", std::move(config)}};
}

json simulate_config(const SimulateRequest& req) {
    json c = req.engine.to_json();
    c["scenario"] = {{"name", req.scenario.name},
                     {"pi", to_json(req.scenario.pi)},
                     {"tau", to_json(req.scenario.tau)},
                     {"citation", req.scenario.citation}};
    c["setting"] = to_string(req.setting);
    c["replicates"] = req.replicates;
    c["n"] = {{"min", req.n.min}, {"max", req.n.max}};
    return c;
}

}  // namespace

json run_metrics(const MetricsRequest& req) {
    req.engine.validate();
    const double pi = req.pi.mean();
    const double tau = req.tau.mean();
    const TestModel tm = req.engine.test_model();
    const PoolParams p{req.n, pi, tau};
    const ModelKind kind = req.null_model ? ModelKind::null() : ModelKind::correlated();
    const MetricSet m = evaluate(p, kind, tm);
    json c = req.engine.to_json();
    c["n"] = req.n;
    c["pi"] = to_json(req.pi);
    c["tau"] = to_json(req.tau);
    c["pi_point"] = pi;
    c["tau_point"] = tau;
    c["model"] = to_string(kind.tag);
    json out = envelope(req.engine.seed, c);
    json mj = to_json(m);
    if (req.engine.paper_literal_missed) mj["missed_per_sample"] = m.missed_paper_literal;
    out["metrics"] = mj;
    return out;
}

std::vector<SweepRow> sweep_rows(const SweepRequest& req) {
    req.engine.validate();
    return sweep_pool_sizes(req.n.min, req.n.max, req.pi.mean(), req.tau.mean(), req.engine.test_model());
}

json run_sweep(const SweepRequest& req) {
    const auto rows = sweep_rows(req);
    json c = req.engine.to_json();
    c["n"] = {{"min", req.n.min}, {"max", req.n.max}};
    c["pi"] = to_json(req.pi);
    c["tau"] = to_json(req.tau);
    c["pi_point"] = req.pi.mean();
    c["tau_point"] = req.tau.mean();
    json out = envelope(req.engine.seed, c);
    json arr = json::array();
    for (const auto& r : rows) arr.push_back(to_json(r, req.engine.paper_literal_missed));
    out["rows"] = arr;
    return out;
}

ScenarioResult simulate_result(const SimulateRequest& req) {
    req.engine.validate();
    SimulationSetting s;
    s.kind = req.setting;
    s.replicates = req.replicates;
    s.seed = req.engine.seed;
    return run_setting(req.scenario, s, req.n.min, req.n.max, req.engine.test_model());
}

json run_simulate(const SimulateRequest& req) {
    const ScenarioResult r = simulate_result(req);
    json out = envelope(req.engine.seed, simulate_config(req));
    out["result"] = to_json(r, req.engine.paper_literal_missed);
    return out;
}

json run_recommend(const RecommendRequest& req) {
    const ScenarioResult r = simulate_result(req.sim);
    const Recommendation rec = recommend_pool_size(r, req.constraints, req.objective);
    json c = simulate_config(req.sim);
    json cons = {{"pass_threshold", req.constraints.pass_threshold}};
    cons["min_sensitivity"] = req.constraints.min_sensitivity ? json(*req.constraints.min_sensitivity) : json(nullptr);
    cons["min_pass_rate"] = req.constraints.min_pass_rate ? json(*req.constraints.min_pass_rate) : json(nullptr);
    c["constraints"] = cons;
    c["objective"] = to_string(req.objective);
    json out = envelope(req.sim.engine.seed, c);
    out["recommendation"] = to_json(rec);
    return out;
}

json run_fit(const FitRequest& req) {
    BetaFitOptions o;
    o.p_lo = req.p_lo;
    o.p_hi = req.p_hi;
    const BetaParams p = fit_beta_from_quantiles(req.lo, req.hi, o);
    json out = {{"version", kVersion},
                {"config", {{"lo", req.lo}, {"hi", req.hi}, {"p_lo", req.p_lo}, {"p_hi", req.p_hi}}}};
    out["alpha"] = p.alpha;
    out["beta"] = p.beta;
    out["mean"] = p.mean();
    out["residuals"] = {beta_cdf(p, req.lo) - req.p_lo, beta_cdf(p, req.hi) - req.p_hi};
    return out;
}

json run_catalog() { return {{"version", kVersion}, {"scenarios", catalog_json()}}; }

namespace {

ApiResponse error_response(int status, const std::string& code, const std::string& message,
                           const std::optional<std::string>& field = std::nullopt) {
    json err = {{"code", code}, {"message", message}};
    if (field) err["field"] = *field;
    return {status, json{{"error", err}}.dump()};
}

}  // namespace

ApiResponse ApiHandler::handle(const std::string& method, const std::string& path, const std::string& body) const {
    const bool is_get = method == "GET";
    const bool is_post = method == "POST";
    try {
        if (path == "/api/health") {
            if (!is_get) return error_response(405, "method_not_allowed", "use GET");
            return {200, json{{"status", "ok"}, {"version", kVersion}}.dump()};
        }
        if (path == "/api/catalog") {
            if (!is_get) return error_response(405, "method_not_allowed", "use GET");
            return {200, run_catalog().dump()};
        }
        const bool known = path == "/api/sweep" || path == "/api/simulate" || path == "/api/fit-beta" ||
                           path == "/api/recommend";
        if (!known) return error_response(404, "not_found", "no such endpoint: " + path);
        if (!is_post) return error_response(405, "method_not_allowed", "use POST");

        json parsed;
        try {
            parsed = json::parse(body.empty() ? std::string("{}") : body);
        } catch (const json::parse_error& e) {
            return error_response(400, "malformed_json", e.what());
        }

        if (path == "/api/sweep") return {200, run_sweep(sweep_request_from_json(parsed, default_seed_)).dump()};
        if (path == "/api/simulate")
            return {200, run_simulate(simulate_request_from_json(parsed, default_seed_)).dump()};
        if (path == "/api/fit-beta") return {200, run_fit(fit_request_from_json(parsed)).dump()};

        const json out = run_recommend(recommend_request_from_json(parsed, default_seed_));
        if (!out["recommendation"]["feasible"].get<bool>()) {
            std::string binding;
            for (const auto& b : out["recommendation"]["binding"]) {
                if (!binding.empty()) binding += ", ";
                binding += b.get<std::string>();
            }
            json err = {{"code", "infeasible"},
                        {"message", "no pool size satisfies the constraints (binding: " + binding + ")"},
                        {"binding", out["recommendation"]["binding"]}};
            json payload = out;
            payload["error"] = err;
            return {422, payload.dump()};
        }
        return {200, out.dump()};
    } catch (const ValidationError& e) {
        return error_response(400, "validation", e.what(), e.field());
    } catch (const FitError& e) {
        return error_response(422, "fit_failed", e.what());
    } catch (const DomainError& e) {
        return error_response(400, "validation", e.what());
    } catch (const json::exception& e) {
        return error_response(400, "validation", e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal", e.what());
    }
}

struct HttpServer::Impl {
    httplib::Server server;
    ApiHandler handler;
    explicit Impl(std::uint64_t seed) : handler(seed) {}
};

HttpServer::HttpServer(ServeOptions opts) : opts_(std::move(opts)), impl_(std::make_unique<Impl>(opts_.default_seed)) {
    const std::string origin = opts_.cors_origin;
    auto add_cors = [origin](httplib::Response& res) {
        if (origin.empty()) return;
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    };
    Impl* impl = impl_.get();
    auto route = [impl, add_cors](const httplib::Request& req, httplib::Response& res) {
        const ApiResponse r = impl->handler.handle(req.method, req.path, req.body);
        res.status = r.status;
        add_cors(res);
        res.set_content(r.body, "application/json");
    };
    impl->server.Get(R"(/api/.*)", route);
    impl->server.Post(R"(/api/.*)", route);
    impl->server.Options(R"(/api/.*)", [add_cors](const httplib::Request&, httplib::Response& res) {
        add_cors(res);
        res.status = 204;
    });
}

HttpServer::~HttpServer() = default;

bool HttpServer::bind() {
    if (opts_.port == 0) {
        port_ = impl_->server.bind_to_any_port(opts_.bind);
        return port_ > 0;
    }
    if (!impl_->server.bind_to_port(opts_.bind, opts_.port)) return false;
    port_ = opts_.port;
    return true;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

bool serve(const ServeOptions& opts) {
    HttpServer server(opts);
    if (!server.bind()) return false;
    server.run();
    return true;
}

}  // namespace pooltest
