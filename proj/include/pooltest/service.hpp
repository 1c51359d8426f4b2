#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "pooltest/codec.hpp"
#include "pooltest/version.hpp"

namespace pooltest {

inline constexpr int kMaxReplicates = 1000;
inline constexpr int kMaxPoolSize = 100;
inline constexpr std::int64_t kMaxDraws = 2000000;

struct EngineOptions {
    WeibullParams weibull = WeibullParams::main_text();
    double tail_fraction = 0.25;
    double tail_ct = 35.0;
    DetectionCurve curve = DetectionCurve::step(35.0);
    std::int64_t draws = kDefaultCtDraws;
    std::uint64_t seed = kDefaultSeed;
    bool paper_literal_missed = false;

    TestModel test_model() const;
    void validate() const;
    json to_json() const;
};

EngineOptions engine_from_json(const json& body, std::uint64_t default_seed = kDefaultSeed);

struct MetricsRequest {
    int n = 1;
    PriorSpec pi = PriorSpec::point(0.0);
    PriorSpec tau = PriorSpec::point(0.0);
    bool null_model = false;
    EngineOptions engine;
};

struct SweepRequest {
    NRange n;
    PriorSpec pi = PriorSpec::point(0.0);
    PriorSpec tau = PriorSpec::point(0.0);
    EngineOptions engine;
};

struct SimulateRequest {
    Scenario scenario;
    SettingKind setting = SettingKind::Fixed;
    int replicates = 100;
    NRange n;
    EngineOptions engine;
};

struct RecommendRequest {
    SimulateRequest sim;
    Constraints constraints;
    Objective objective = Objective::MinTests;
};

struct FitRequest {
    double lo = 0.0;
    double hi = 0.0;
    double p_lo = 0.025;
    double p_hi = 0.975;
};

SweepRequest sweep_request_from_json(const json& body, std::uint64_t default_seed = kDefaultSeed);
SimulateRequest simulate_request_from_json(const json& body, std::uint64_t default_seed = kDefaultSeed);
RecommendRequest recommend_request_from_json(const json& body, std::uint64_t default_seed = kDefaultSeed);
FitRequest fit_request_from_json(const json& body);

json run_metrics(const MetricsRequest& req);
json run_sweep(const SweepRequest& req);
std::vector<SweepRow> sweep_rows(const SweepRequest& req);
json run_simulate(const SimulateRequest& req);
ScenarioResult simulate_result(const SimulateRequest& req);
json run_recommend(const RecommendRequest& req);
json run_fit(const FitRequest& req);
json run_catalog();

struct ApiResponse {
    int status = 200;
    std::string body;
};

// Transport-independent request dispatch; serve() wires it to HTTP.
class ApiHandler {
public:
    explicit ApiHandler(std::uint64_t default_seed = kDefaultSeed) : default_seed_(default_seed) {}
    ApiResponse handle(const std::string& method, const std::string& path, const std::string& body) const;

private:
    std::uint64_t default_seed_;
};

struct ServeOptions {
    std::string bind = "127.0.0.1";
    int port = 8080;
    std::string cors_origin;  // empty disables CORS headers
    std::uint64_t default_seed = kDefaultSeed;
};

// HTTP front end over ApiHandler. run() blocks until stop() is called from
// another thread.
class HttpServer {
public:
    explicit HttpServer(ServeOptions opts);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    bool bind();          // binds opts.port; port 0 picks a free one
    int port() const { return port_; }
    void run();
    void stop();

private:
    struct Impl;
    ServeOptions opts_;
    int port_ = -1;
    std::unique_ptr<Impl> impl_;
};

// Blocks until the server stops. Returns false if the socket could not be bound.
bool serve(const ServeOptions& opts);

}  // namespace pooltest
