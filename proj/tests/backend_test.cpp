// SPDX-License-Identifier: Apache-2.0
#include "vapitest/backend.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "support.hpp"
#include "vapitest/http_transport.hpp"
#include "vapitest/matching.hpp"

namespace vapitest {
namespace {

BackendRequest key_match_request(int max_retries = 3) {
    BackendRequest req;
    req.task = BackendTask::key_match;
    req.inputs = json{{"left", {"acMode"}}, {"right", {"acMode"}}};
    req.output_schema = {{"pairs", FieldType::list}};
    req.strictness = Strictness::moderate;
    req.max_retries = max_retries;
    return req;
}

std::string valid_response() {
    return json{{"outputs",
                 {{"pairs", json::array({json{{"left", "acMode"},
                                              {"right", "acMode"},
                                              {"category", "exact"},
                                              {"score", 1.0}}})}}}}
        .dump();
}

TEST(CompleteTyped, ValidFirstResponseUsesOneAttempt) {
    ScriptedTransport transport({valid_response()});
    auto resp = complete_typed(key_match_request(), transport);
    EXPECT_EQ(resp.attempts_used, 1);
    EXPECT_EQ(resp.outputs["pairs"].size(), 1u);
}

TEST(CompleteTyped, FailTwiceThenPassUsesThreeAttempts) {
    ScriptedTransport transport({"not json at all",
                                 json{{"outputs", {{"pairs", 42}}}}.dump(),
                                 valid_response()});
    auto resp = complete_typed(key_match_request(3), transport);
    EXPECT_EQ(resp.attempts_used, 3);
}

TEST(CompleteTyped, ExhaustionRaisesSchemaViolation) {
    std::vector<std::string> bad(3, json{{"outputs", {{"pairs", "nope"}}}}.dump());
    ScriptedTransport transport(bad);
    EXPECT_THROW(complete_typed(key_match_request(2), transport), SchemaViolation);
    EXPECT_EQ(transport.requests.size(), 3u);  // max_retries + 1
}

TEST(CompleteTyped, RetryCarriesViolationContext) {
    ScriptedTransport transport({"garbage", valid_response()});
    complete_typed(key_match_request(), transport);
    ASSERT_EQ(transport.requests.size(), 2u);
    json first = json::parse(transport.requests[0]);
    json second = json::parse(transport.requests[1]);
    EXPECT_TRUE(first["violations"].empty());
    ASSERT_EQ(second["violations"].size(), 1u);
    EXPECT_NE(second["violations"][0].get<std::string>().find("structured record"),
              std::string::npos);
}

TEST(CompleteTyped, PromptStatesStrictnessAndTask) {
    ScriptedTransport transport({valid_response()});
    BackendRequest req = key_match_request();
    req.strictness = Strictness::relaxed;
    complete_typed(req, transport);
    json body = json::parse(transport.requests[0]);
    std::string prompt = body["prompt"].get<std::string>();
    EXPECT_NE(prompt.find("relaxed"), std::string::npos);
    EXPECT_NE(prompt.find("key_match"), std::string::npos);
}

TEST(CompleteTyped, RetryBoundHoldsForAnyScript) {
    // attempts_used <= max_retries + 1, whatever the script does
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        int max_retries = static_cast<int>(rng() % 4);
        std::vector<std::string> script;
        int n = 1 + static_cast<int>(rng() % (max_retries + 1));
        for (int i = 0; i < n - 1; ++i) script.push_back("bad");
        script.push_back(valid_response());
        ScriptedTransport transport(script);
        auto resp = complete_typed(key_match_request(max_retries), transport);
        EXPECT_LE(resp.attempts_used, max_retries + 1);
    }
}

TEST(ValidateOutputs, FieldByField) {
    std::vector<FieldSpec> schema = {{"name", FieldType::text},
                                     {"count", FieldType::integer},
                                     {"items", FieldType::list}};
    EXPECT_EQ(validate_outputs(json{{"name", "x"}, {"count", 3}, {"items", json::array()}},
                               schema),
              "");
    EXPECT_NE(validate_outputs(json{{"name", "x"}, {"count", 3}}, schema), "");
    EXPECT_NE(validate_outputs(json{{"name", 1}, {"count", 3}, {"items", json::array()}},
                               schema),
              "");
    EXPECT_NE(validate_outputs(json{{"name", "x"},
                                    {"count", 3},
                                    {"items", json::array()},
                                    {"extra", 1}},
                               schema),
              "");
    EXPECT_NE(validate_outputs(json(3), schema), "");
}

TEST(RulesBackend, ServesAllFourTasks) {
    RulesBackend backend;
    {
        BackendRequest req = key_match_request();
        auto resp = backend.complete(req);
        EXPECT_EQ(resp.attempts_used, 1);
        EXPECT_EQ(resp.outputs["pairs"][0]["category"], "exact");
    }
    {
        BackendRequest req;
        req.task = BackendTask::value_match;
        req.inputs = json{{"left", {"TRUE", "FALSE"}}, {"right", {"Active", "Inactive"}}};
        req.output_schema = {{"pairs", FieldType::list}};
        auto resp = backend.complete(req);
        EXPECT_EQ(resp.outputs["pairs"].size(), 2u);
    }
    {
        BackendRequest req;
        req.task = BackendTask::pseudocode_match;
        req.strictness = Strictness::relaxed;
        req.inputs = json{{"label", "True"},
                          {"alternatives", json::array({json{{"key", "K"}, {"label", "Active"}},
                                                        json{{"key", "K"}, {"label", "Ringing"}}})}};
        req.output_schema = {{"selected", FieldType::list}};
        auto resp = backend.complete(req);
        EXPECT_EQ(resp.outputs["selected"].size(), 2u);
    }
    {
        BackendRequest req;
        req.task = BackendTask::unit_infer;
        req.inputs = json{{"description", "Battery charging power in kW"}};
        req.output_schema = {{"unit", FieldType::text}};
        auto resp = backend.complete(req);
        EXPECT_EQ(resp.outputs["unit"], "kw");
    }
    {
        BackendRequest req;
        req.task = BackendTask::unit_infer;
        req.inputs = json{{"description", "no unit here"}};
        req.output_schema = {{"unit", FieldType::text}};
        EXPECT_EQ(backend.complete(req).outputs["unit"], "");
    }
}

TEST(RulesBackend, TestcaseGenNotServed) {
    RulesBackend backend;
    BackendRequest req;
    req.task = BackendTask::testcase_gen;
    req.output_schema = {{"cases", FieldType::list}};
    EXPECT_THROW(backend.complete(req), BackendError);
}

class ReplayFixture : public ::testing::Test {
protected:
    void SetUp() override {
        store_ = ::testing::UnitTest::GetInstance()->current_test_info()->name();
        store_ = "/tmp/vapitest_replay_" + store_ + ".json";
        std::remove(store_.c_str());
    }
    void TearDown() override { std::remove(store_.c_str()); }
    std::string store_;
};

TEST_F(ReplayFixture, RecordThenReplayIsByteIdentical) {
    testing::WireServer server;
    BackendRequest req = key_match_request();

    std::string recorded;
    {
        ReplayTransport record(store_, ReplayMode::record,
                               std::make_shared<HttpTransport>(server.url()));
        recorded = record.post(request_to_wire(req, json::array()).dump());
    }
    ReplayTransport replay(store_, ReplayMode::replay);
    std::string replayed = replay.post(request_to_wire(req, json::array()).dump());
    EXPECT_EQ(replayed, recorded);
}

TEST_F(ReplayFixture, MissRaisesReplayMiss) {
    std::ofstream(store_) << "{}\n";  // a store with nothing recorded
    ReplayTransport replay(store_, ReplayMode::replay);
    EXPECT_THROW(replay.post("never recorded"), ReplayMiss);
}

TEST_F(ReplayFixture, ReplayStoreMissingFileIsTransportError) {
    EXPECT_THROW(ReplayTransport(store_ + ".does-not-exist", ReplayMode::replay),
                 TransportError);
}

TEST_F(ReplayFixture, RemoteEqualsRulesAndSurvivesReplay) {
    // record 20 mixed requests through the wire, then check the replayed
    // backend gives the exact outputs the local rules backend gives
    testing::WireServer server;
    RulesBackend rules;
    std::vector<BackendRequest> requests;
    for (int i = 0; i < 10; ++i) {
        BackendRequest kreq;
        kreq.task = BackendTask::key_match;
        kreq.inputs = json{{"left", {"driverTime" + std::to_string(i), "cabinZone"}},
                           {"right", {"DRIVERTIME" + std::to_string(i), "cabinZone"}}};
        kreq.output_schema = {{"pairs", FieldType::list}};
        requests.push_back(kreq);
        BackendRequest ureq;
        ureq.task = BackendTask::unit_infer;
        ureq.inputs = json{{"description", i % 2 ? "speed in km/h" : "power in kW"}};
        ureq.output_schema = {{"unit", FieldType::text}};
        requests.push_back(ureq);
    }
    {
        ClientBackend recorder(
            std::make_shared<ReplayTransport>(store_, ReplayMode::record,
                                              std::make_shared<HttpTransport>(server.url())),
            "record");
        for (auto& req : requests)
            EXPECT_EQ(recorder.complete(req).outputs, rules.complete(req).outputs);
    }
    ClientBackend replayer(std::make_shared<ReplayTransport>(store_, ReplayMode::replay),
                           "replay");
    for (auto& req : requests)
        EXPECT_EQ(replayer.complete(req).outputs, rules.complete(req).outputs);
}

TEST(RemoteBackend, RetriesAgainstMisbehavingServer) {
    testing::WireServer server(/*misbehave_first=*/2);
    ClientBackend client(std::make_shared<HttpTransport>(server.url()), "remote");
    BackendRequest req = key_match_request(3);
    auto resp = client.complete(req);
    EXPECT_EQ(resp.attempts_used, 3);
}

TEST(RemoteBackend, UnreachableHostIsTransportError) {
    ClientBackend client(std::make_shared<HttpTransport>("http://127.0.0.1:9/complete"),
                         "remote");
    BackendRequest req = key_match_request(0);
    EXPECT_THROW(client.complete(req), TransportError);
}

}  // namespace
}  // namespace vapitest
