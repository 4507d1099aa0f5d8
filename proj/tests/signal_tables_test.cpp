// SPDX-License-Identifier: Apache-2.0
#include "vapitest/signal_tables.hpp"

#include <gtest/gtest.h>

#include <random>

namespace vapitest {
namespace {

TEST(CanTable, ParsesEncodingRow) {
    CanTable t = parse_can_table(
        "# comment line\n"
        "acMode_CAN | Climate | | STANDARD=0;ECONOMY=1 |\n");
    ASSERT_EQ(t.signals.size(), 1u);
    const CanSignal& s = t.signals[0];
    EXPECT_EQ(s.key, "acMode_CAN");
    EXPECT_EQ(s.endpoint_hint, "Climate");
    EXPECT_FALSE(s.unit_text.has_value());
    ASSERT_EQ(s.encoding.entries.size(), 2u);
    EXPECT_EQ(s.encoding.raw_of("STANDARD"), 0);
    EXPECT_EQ(s.encoding.raw_of("ECONOMY"), 1);
    EXPECT_FALSE(s.pseudocode.has_value());
}

TEST(CanTable, EmptyBody) {
    EXPECT_TRUE(parse_can_table("# only comments\n\n").signals.empty());
}

TEST(CanTable, DuplicateKeyRejected) {
    EXPECT_THROW(parse_can_table("a | hint | | A=0 |\na | hint | | B=1 |\n"), DuplicateKey);
}

TEST(CanTable, BadEncodingRejected) {
    EXPECT_THROW(parse_can_table("a | h | | NOEQUALS |\n"), SyntaxError);
    EXPECT_THROW(parse_can_table("a | h | | X=0;X=1 |\n"), SyntaxError);
    EXPECT_THROW(parse_can_table("a | h | | X=0;Y=0 |\n"), SyntaxError);
    EXPECT_THROW(parse_can_table("a | h | | X=zz |\n"), SyntaxError);
}

TEST(CanTable, GeneratedFiftyRowsMatchManifest) {
    // generator manifest oracle: we know exactly what went in
    std::string doc;
    std::mt19937_64 rng(3);
    std::vector<std::string> expected_keys;
    for (int i = 0; i < 50; ++i) {
        std::string key = "sig" + std::to_string(i);
        expected_keys.push_back(key);
        doc += key + " | ep" + std::to_string(i % 7) + " | " +
               (rng() % 2 ? "km/h" : "") + " | A=" + std::to_string(i) + ";B=" +
               std::to_string(i + 100) + " |\n";
    }
    CanTable t = parse_can_table(doc);
    ASSERT_EQ(t.signals.size(), 50u);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(t.signals[i].key, expected_keys[i]);
}

TEST(VvTable, ParsesRows) {
    VvTable t = parse_vv_table(
        "acMode | acMode_CAN | | STANDARD=0;ECONOMY=2\n"
        "unbound | | m/s |\n");
    ASSERT_EQ(t.entries.size(), 2u);
    EXPECT_EQ(t.entries[0].bound_can_key, "acMode_CAN");
    EXPECT_EQ(t.entries[0].encoding.raw_of("ECONOMY"), 2);
    EXPECT_FALSE(t.entries[1].bound_can_key.has_value());
    EXPECT_EQ(t.entries[1].unit_text, "m/s");
    EXPECT_EQ(t.find_bound_to("acMode_CAN"), &t.entries[0]);
}

TEST(VvTable, GeneratedFiftyRowsMatchManifest) {
    std::string doc;
    for (int i = 0; i < 50; ++i)
        doc += "vv" + std::to_string(i) + " | can" + std::to_string(i) + " | | X=" +
               std::to_string(i) + "\n";
    EXPECT_EQ(parse_vv_table(doc).entries.size(), 50u);
}

TEST(Tables, ParseSerializeParseIdentity) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        CanTable can;
        VvTable vv;
        size_t rows = 1 + rng() % 6;
        for (size_t i = 0; i < rows; ++i) {
            CanSignal s;
            s.key = "k" + std::to_string(trial) + "_" + std::to_string(i);
            s.endpoint_hint = "ep" + std::to_string(i % 3);
            if (rng() % 2) s.unit_text = "kW";
            if (rng() % 2) {
                s.encoding.entries = {{"ON", 1}, {"OFF", 0}};
            }
            if (rng() % 3 == 0) s.pseudocode = "A:B OR C:D";
            can.signals.push_back(s);

            VvEntry e;
            e.key = "v" + std::to_string(trial) + "_" + std::to_string(i);
            if (rng() % 2) e.bound_can_key = s.key;
            if (rng() % 2) e.unit_text = "m/s";
            if (rng() % 2) e.encoding.entries = {{"ON", 7}, {"OFF", 3}};
            vv.entries.push_back(e);
        }
        EXPECT_EQ(parse_can_table(serialize_can_table(can)), can);
        EXPECT_EQ(parse_vv_table(serialize_vv_table(vv)), vv);
    }
}

TEST(Pseudocode, TwoDifferentSignals) {
    auto alts = parse_pseudocode("AAsignal:BB OR PV_AnotherSignal:CC");
    ASSERT_EQ(alts.alternatives.size(), 2u);
    EXPECT_EQ(alts.alternatives[0], (std::pair<std::string, std::string>{"AAsignal", "BB"}));
    EXPECT_EQ(alts.alternatives[1],
              (std::pair<std::string, std::string>{"PV_AnotherSignal", "CC"}));
}

TEST(Pseudocode, ThreeAlternativesSameKey) {
    auto alts = parse_pseudocode(
        "AlarmClockStat:Active OR AlarmClockStat:Ringing OR AlarmClockStat:Snoozed");
    ASSERT_EQ(alts.alternatives.size(), 3u);
    for (const auto& [k, l] : alts.alternatives) EXPECT_EQ(k, "AlarmClockStat");
    EXPECT_EQ(alts.alternatives[2].second, "Snoozed");
}

TEST(Pseudocode, SinglePair) {
    auto alts = parse_pseudocode("K:V");
    ASSERT_EQ(alts.alternatives.size(), 1u);
    EXPECT_EQ(alts.alternatives[0], (std::pair<std::string, std::string>{"K", "V"}));
}

TEST(Pseudocode, WhitespaceInsensitive) {
    EXPECT_EQ(parse_pseudocode("  A : B   OR   C : D "), parse_pseudocode("A:B OR C:D"));
}

TEST(Pseudocode, GrammarErrors) {
    EXPECT_THROW(parse_pseudocode("A:B AND C:D"), GrammarError);
    EXPECT_THROW(parse_pseudocode("(A:B OR C:D)"), GrammarError);
    EXPECT_THROW(parse_pseudocode("A:B OR"), GrammarError);
    EXPECT_THROW(parse_pseudocode("A B"), GrammarError);
    EXPECT_THROW(parse_pseudocode(":B"), GrammarError);
    EXPECT_THROW(parse_pseudocode("A:B OR A:B"), GrammarError);
    EXPECT_THROW(parse_pseudocode(""), GrammarError);
}

TEST(Pseudocode, GrammarRoundTripProperty) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        PseudocodeAlternatives alts;
        size_t n = 1 + rng() % 4;
        for (size_t i = 0; i < n; ++i)
            alts.alternatives.emplace_back("Key" + std::to_string(rng() % 100) +
                                               "_" + std::to_string(i),
                                           "Label" + std::to_string(i));
        EXPECT_EQ(parse_pseudocode(serialize_pseudocode(alts)), alts);
    }
}

TEST(LookupCandidates, CaseFoldRule) {
    CanTable t = parse_can_table(
        "acMode | Climate | | A=0;B=1 |\n"
        "fan | CLIMATE | | A=0;B=1 |\n"
        "speed | speed | | |\n");
    auto hits = lookup_candidates("/climate", t);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].key, "acMode");
    EXPECT_EQ(hits[1].key, "fan");  // table order preserved
}

TEST(LookupCandidates, NoMatch) {
    CanTable t = parse_can_table("x | other | | |\n");
    EXPECT_TRUE(lookup_candidates("/speed", t).empty());
}

TEST(LookupCandidates, Deterministic) {
    CanTable t = parse_can_table(
        "a | ep | | |\n"
        "b | ep | | |\n"
        "c | ep | | |\n");
    auto first = lookup_candidates("/ep", t);
    for (int i = 0; i < 5; ++i) {
        auto again = lookup_candidates("/ep", t);
        ASSERT_EQ(again.size(), first.size());
        for (size_t j = 0; j < first.size(); ++j) EXPECT_EQ(again[j].key, first[j].key);
    }
}

}  // namespace
}  // namespace vapitest
