// SPDX-License-Identifier: Apache-2.0
#pragma once

// Loopback HTTP deployment of the rig (REST gateway + admin routes) and the
// two executor-facing ports: in-process and HTTP.
//
//   GET/PUT /<endpoint>   gateway traffic, JSON object bodies
//   PUT  /_vv/<key>       {"raw": <number>}   mock a vehicle state
//   GET  /_vv/<key>       -> {"key": ..., "raw": ...}
//   POST /_fault          FaultSpec record
//   GET  /_trace          -> {"frames": [...]}

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vapitest/errors.hpp"
#include "vapitest/rig.hpp"

namespace vapitest {

class RigServer {
public:
    /// Binds 127.0.0.1; port 0 picks a free port. Serves until destruction.
    explicit RigServer(RigConfig config, int port = 0) : rig_(std::move(config)) {
        server_.Put(R"(/_vv/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
            handle_vv_put(req, res);
        });
        server_.Get(R"(/_vv/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
            handle_vv_get(req, res);
        });
        server_.Post("/_fault", [this](const httplib::Request& req, httplib::Response& res) {
            handle_fault(req, res);
        });
        server_.Get("/_trace", [this](const httplib::Request&, httplib::Response& res) {
            json frames = json::array();
            for (const auto& f : rig_.can_trace())
                frames.push_back(json{{"key", f.key}, {"raw", f.raw}, {"timestamp", f.timestamp}});
            reply(res, 200, json{{"frames", frames}});
        });
        server_.Put(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
            json payload;
            try {
                payload = json::parse(req.body);
            } catch (const nlohmann::json::exception&) {
                reply(res, 400, json{{"error", "body is not a structured object"}});
                return;
            }
            Rig::ApiResult r = rig_.api_put(req.path, payload);
            reply(res, r.status, r.body);
        });
        server_.Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
            Rig::ApiResult r = rig_.api_get(req.path);
            reply(res, r.status, r.body);
        });

        if (port == 0) {
            port_ = server_.bind_to_any_port("127.0.0.1");
            if (port_ < 0) throw BindError("cannot bind a loopback port");
        } else {
            if (!server_.bind_to_port("127.0.0.1", port))
                throw BindError("cannot bind port " + std::to_string(port));
            port_ = port;
        }
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~RigServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    RigServer(const RigServer&) = delete;
    RigServer& operator=(const RigServer&) = delete;

    Rig& rig() { return rig_; }
    int port() const { return port_; }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    static void reply(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    void handle_vv_put(const httplib::Request& req, httplib::Response& res) {
        try {
            json body = json::parse(req.body);
            rig_.vv_set(req.matches[1], body.at("raw").get<double>());
            reply(res, 200, json{{"status", "ok"}});
        } catch (const UnknownKey& e) {
            reply(res, 404, json{{"error", e.what()}});
        } catch (const std::exception& e) {
            reply(res, 400, json{{"error", e.what()}});
        }
    }

    void handle_vv_get(const httplib::Request& req, httplib::Response& res) {
        try {
            double raw = rig_.vv_get(req.matches[1]);
            reply(res, 200, json{{"key", std::string(req.matches[1])}, {"raw", raw}});
        } catch (const UnknownKey& e) {
            reply(res, 404, json{{"error", e.what()}});
        }
    }

    void handle_fault(const httplib::Request& req, httplib::Response& res) {
        try {
            FaultSpec fault = json::parse(req.body).get<FaultSpec>();
            rig_.inject_fault(fault);
            reply(res, 200, json{{"status", "ok"}});
        } catch (const UnknownTarget& e) {
            reply(res, 404, json{{"error", e.what()}});
        } catch (const std::exception& e) {
            reply(res, 400, json{{"error", e.what()}});
        }
    }

    Rig rig_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
};

/// What the executor needs from a rig deployment.
class RigPort {
public:
    virtual ~RigPort() = default;
    virtual Rig::ApiResult api_put(const std::string& endpoint, const json& payload) = 0;
    virtual Rig::ApiResult api_get(const std::string& endpoint) = 0;
    virtual void vv_set(const std::string& key, double raw) = 0;
    virtual double vv_get(const std::string& key) = 0;
    virtual std::vector<CanFrame> trace() = 0;
    virtual std::string address() const = 0;
};

class InProcessPort : public RigPort {
public:
    explicit InProcessPort(Rig& rig) : rig_(rig) {}

    Rig::ApiResult api_put(const std::string& endpoint, const json& payload) override {
        return rig_.api_put(endpoint, payload);
    }
    Rig::ApiResult api_get(const std::string& endpoint) override {
        return rig_.api_get(endpoint);
    }
    void vv_set(const std::string& key, double raw) override { rig_.vv_set(key, raw); }
    double vv_get(const std::string& key) override { return rig_.vv_get(key); }
    std::vector<CanFrame> trace() override { return rig_.can_trace(); }
    std::string address() const override { return "in-process"; }

private:
    Rig& rig_;
};

/// Loopback (or remote) HTTP deployment; the default executor path.
class HttpRigPort : public RigPort {
public:
    explicit HttpRigPort(const std::string& base_url)
        : base_url_(base_url), client_(base_url) {
        client_.set_connection_timeout(2, 0);
        client_.set_read_timeout(10, 0);
    }

    Rig::ApiResult api_put(const std::string& endpoint, const json& payload) override {
        auto res = client_.Put(endpoint, payload.dump(), "application/json");
        return to_result(res, "PUT " + endpoint);
    }

    Rig::ApiResult api_get(const std::string& endpoint) override {
        auto res = client_.Get(endpoint);
        return to_result(res, "GET " + endpoint);
    }

    void vv_set(const std::string& key, double raw) override {
        auto res = client_.Put("/_vv/" + key, json{{"raw", raw}}.dump(), "application/json");
        Rig::ApiResult r = to_result(res, "PUT /_vv/" + key);
        if (r.status == 404) throw UnknownKey("VV key '" + key + "'");
        if (r.status != 200) throw RigUnreachable("vv_set failed with status " +
                                                  std::to_string(r.status));
    }

    double vv_get(const std::string& key) override {
        auto res = client_.Get("/_vv/" + key);
        Rig::ApiResult r = to_result(res, "GET /_vv/" + key);
        if (r.status == 404) throw UnknownKey("VV key '" + key + "'");
        if (r.status != 200 || !r.body.contains("raw"))
            throw RigUnreachable("vv_get failed with status " + std::to_string(r.status));
        return r.body["raw"].get<double>();
    }

    std::vector<CanFrame> trace() override {
        auto res = client_.Get("/_trace");
        Rig::ApiResult r = to_result(res, "GET /_trace");
        std::vector<CanFrame> frames;
        if (r.status != 200 || !r.body.contains("frames")) return frames;
        for (const auto& f : r.body["frames"])
            frames.push_back({f.at("key").get<std::string>(), f.at("raw").get<double>(),
                              f.at("timestamp").get<int64_t>()});
        return frames;
    }

    std::string address() const override { return base_url_; }

private:
    static Rig::ApiResult to_result(const httplib::Result& res, const std::string& what) {
        if (!res)
            throw RigUnreachable(what + ": " + httplib::to_string(res.error()));
        json body;
        if (!res->body.empty()) {
            try {
                body = json::parse(res->body);
            } catch (const nlohmann::json::exception&) {
                body = json{{"raw_body", res->body}};
            }
        }
        return {res->status, body};
    }

    std::string base_url_;
    httplib::Client client_;
};

}  // namespace vapitest
