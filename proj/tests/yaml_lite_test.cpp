// SPDX-License-Identifier: Apache-2.0
#include "vapitest/yaml_lite.hpp"

#include <gtest/gtest.h>

namespace vapitest {
namespace {

TEST(YamlLite, NestedMappingsAndScalars) {
    auto j = yaml_lite::parse(
        "openapi: 3.0.0\n"
        "info:\n"
        "  title: Vehicle gateway\n"
        "  version: \"1.0\"\n"
        "paths:\n"
        "  /climate:\n"
        "    put:\n"
        "      x-count: 3\n"
        "      x-rate: 1.5\n"
        "      x-flag: true\n");
    EXPECT_EQ(j["openapi"], "3.0.0");
    EXPECT_EQ(j["info"]["title"], "Vehicle gateway");
    EXPECT_EQ(j["info"]["version"], "1.0");
    EXPECT_EQ(j["paths"]["/climate"]["put"]["x-count"], 3);
    EXPECT_DOUBLE_EQ(j["paths"]["/climate"]["put"]["x-rate"].get<double>(), 1.5);
    EXPECT_EQ(j["paths"]["/climate"]["put"]["x-flag"], true);
}

TEST(YamlLite, FlowAndBlockSequences) {
    auto j = yaml_lite::parse(
        "enum: [STANDARD, ECONOMY]\n"
        "list:\n"
        "  - one\n"
        "  - two\n");
    EXPECT_EQ(j["enum"].size(), 2u);
    EXPECT_EQ(j["enum"][0], "STANDARD");
    EXPECT_EQ(j["list"][1], "two");
}

TEST(YamlLite, CommentsAndQuotedStrings) {
    auto j = yaml_lite::parse(
        "# leading comment\n"
        "a: \"has: colon\"  # trailing comment\n"
        "b: 'single # not comment'\n");
    EXPECT_EQ(j["a"], "has: colon");
    EXPECT_EQ(j["b"], "single # not comment");
}

TEST(YamlLite, PlainScalarWithSpacesStaysString) {
    auto j = yaml_lite::parse("enum: STANDARD or ECONOMY\n");
    EXPECT_EQ(j["enum"], "STANDARD or ECONOMY");
}

TEST(YamlLite, OnOffStayStrings) {
    // enum labels must never be coerced into booleans
    auto j = yaml_lite::parse("a: on\nb: OFF\n");
    EXPECT_EQ(j["a"], "on");
    EXPECT_EQ(j["b"], "OFF");
}

TEST(YamlLite, QuotedKeys) {
    auto j = yaml_lite::parse("responses:\n  \"200\":\n    description: ok\n");
    EXPECT_EQ(j["responses"]["200"]["description"], "ok");
}

TEST(YamlLite, Errors) {
    EXPECT_THROW(yaml_lite::parse(""), SyntaxError);
    EXPECT_THROW(yaml_lite::parse("a: b\n\tc: d\n"), SyntaxError);
    EXPECT_THROW(yaml_lite::parse("a: {flow: map}\n"), SyntaxError);
    EXPECT_THROW(yaml_lite::parse("a: [unterminated\n"), SyntaxError);
    EXPECT_THROW(yaml_lite::parse("a: b\na: c\n"), SyntaxError);
    EXPECT_THROW(yaml_lite::parse("just a scalar line\nanother\n"), SyntaxError);
}

}  // namespace
}  // namespace vapitest
