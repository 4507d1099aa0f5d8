// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace vapitest {

// Base class for all library errors. `kind()` is a stable machine-readable
// tag that also appears in reports and skip reasons.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define VAPITEST_DEFINE_ERROR(NAME, TAG)                                      \
    class NAME : public Error {                                               \
    public:                                                                   \
        explicit NAME(const std::string& message) : Error(TAG, message) {}    \
    }

// Document and table parsing
VAPITEST_DEFINE_ERROR(SyntaxError, "syntax_error");
VAPITEST_DEFINE_ERROR(SchemaError, "schema_error");
VAPITEST_DEFINE_ERROR(AmbiguousEnum, "ambiguous_enum");
VAPITEST_DEFINE_ERROR(DuplicateKey, "duplicate_key");
VAPITEST_DEFINE_ERROR(GrammarError, "grammar_error");

// Units
VAPITEST_DEFINE_ERROR(UnknownUnit, "unknown_unit");
VAPITEST_DEFINE_ERROR(DimensionMismatch, "dimension_mismatch");

// Matcher backends
VAPITEST_DEFINE_ERROR(BackendError, "backend_error");
VAPITEST_DEFINE_ERROR(SchemaViolation, "schema_violation");
VAPITEST_DEFINE_ERROR(TransportError, "transport_error");
VAPITEST_DEFINE_ERROR(ReplayMiss, "replay_miss");

// Test case generation
VAPITEST_DEFINE_ERROR(RoleMissing, "role_missing");

// Rig
VAPITEST_DEFINE_ERROR(ConfigError, "config_error");
VAPITEST_DEFINE_ERROR(BindError, "bind_error");
VAPITEST_DEFINE_ERROR(UnknownKey, "unknown_key");
VAPITEST_DEFINE_ERROR(UnknownTarget, "unknown_target");

// Executor and reporting
VAPITEST_DEFINE_ERROR(RigUnreachable, "rig_unreachable");
VAPITEST_DEFINE_ERROR(EmptyInput, "empty_input");
VAPITEST_DEFINE_ERROR(EmptyGroundTruth, "empty_ground_truth");
VAPITEST_DEFINE_ERROR(ManifestMismatch, "manifest_mismatch");

#undef VAPITEST_DEFINE_ERROR

}  // namespace vapitest
