// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scale-only unit registry (speed, power, time) with rational factors, plus
// the three-way API/CAN/VV reconciliation used before value mapping. Affine
// units (temperature offsets) are out of scope.

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vapitest/errors.hpp"
#include "vapitest/text.hpp"

namespace vapitest {

struct Rational {
    int64_t num = 1;
    int64_t den = 1;

    bool operator==(const Rational&) const = default;

    static Rational of(int64_t num, int64_t den) {
        if (den == 0) throw DimensionMismatch("zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        return Rational{num, den};
    }

    Rational times(const Rational& o) const { return of(num * o.num, den * o.den); }
    Rational inverse() const { return of(den, num); }

    /// v * num / den, multiplied before divided so integer-exact factors stay
    /// exact in double arithmetic.
    double apply(double v) const { return v * static_cast<double>(num) / static_cast<double>(den); }
};

struct Unit {
    std::string canonical_name;
    std::string dimension;
    Rational scale_to_base;            // > 0
    Rational offset_to_base{0, 1};     // always 0 for in-scope units

    bool operator==(const Unit&) const = default;
};

struct Quantity {
    double magnitude = 0.0;
    Unit unit;

    bool operator==(const Quantity&) const = default;
};

class UnitRegistry {
public:
    /// TSV rows: alias <TAB> canonical <TAB> dimension <TAB> scale ("5/18" or
    /// "1000"); '#' comments. Aliases are matched case-insensitively.
    static UnitRegistry from_tsv(std::string_view tsv) {
        UnitRegistry reg;
        size_t line_no = 0;
        for (const auto& raw : text::split(tsv, '\n')) {
            ++line_no;
            auto line = text::trim(raw);
            if (line.empty() || line.front() == '#') continue;
            auto fields = text::split(line, '\t');
            if (fields.size() != 4)
                throw SyntaxError("units registry: expected 4 tab-separated fields on line " +
                                  std::to_string(line_no));
            Unit unit;
            unit.canonical_name = text::trim(fields[1]);
            unit.dimension = text::trim(fields[2]);
            unit.scale_to_base = parse_scale(text::trim(fields[3]), line_no);
            if (unit.scale_to_base.num <= 0)
                throw SyntaxError("units registry: non-positive scale on line " +
                                  std::to_string(line_no));
            std::string alias = text::lower(text::trim(fields[0]));
            auto [it, inserted] = reg.by_alias_.emplace(alias, std::move(unit));
            if (!inserted)
                throw DuplicateKey("unit alias '" + alias + "'");
        }
        return reg;
    }

    static const UnitRegistry& builtin() {
        static UnitRegistry reg = from_tsv(builtin_tsv());
        return reg;
    }

    static std::string_view builtin_tsv() {
        return
            "# alias\tcanonical\tdimension\tscale_to_base\n"
            "m/s\tmeter_per_second\tspeed\t1\n"
            "mps\tmeter_per_second\tspeed\t1\n"
            "meter_per_second\tmeter_per_second\tspeed\t1\n"
            "meters_per_second\tmeter_per_second\tspeed\t1\n"
            "km/h\tkilometer_per_hour\tspeed\t5/18\n"
            "kmh\tkilometer_per_hour\tspeed\t5/18\n"
            "kph\tkilometer_per_hour\tspeed\t5/18\n"
            "kilometer_per_hour\tkilometer_per_hour\tspeed\t5/18\n"
            "kilometers_per_hour\tkilometer_per_hour\tspeed\t5/18\n"
            "mph\tmile_per_hour\tspeed\t1397/3125\n"
            "mi/h\tmile_per_hour\tspeed\t1397/3125\n"
            "mile_per_hour\tmile_per_hour\tspeed\t1397/3125\n"
            "miles_per_hour\tmile_per_hour\tspeed\t1397/3125\n"
            "w\twatt\tpower\t1\n"
            "watt\twatt\tpower\t1\n"
            "watts\twatt\tpower\t1\n"
            "kw\tkilowatt\tpower\t1000\n"
            "kilowatt\tkilowatt\tpower\t1000\n"
            "kilowatts\tkilowatt\tpower\t1000\n"
            "s\tsecond\ttime\t1\n"
            "sec\tsecond\ttime\t1\n"
            "second\tsecond\ttime\t1\n"
            "seconds\tsecond\ttime\t1\n"
            "min\tminute\ttime\t60\n"
            "minute\tminute\ttime\t60\n"
            "minutes\tminute\ttime\t60\n"
            "h\thour\ttime\t3600\n"
            "hr\thour\ttime\t3600\n"
            "hour\thour\ttime\t3600\n"
            "hours\thour\ttime\t3600\n";
    }

    Unit parse_unit(std::string_view surface) const {
        auto it = by_alias_.find(text::lower(text::trim(surface)));
        if (it == by_alias_.end())
            throw UnknownUnit("'" + std::string(surface) + "' is not a registered unit");
        return it->second;
    }

    std::optional<Unit> try_parse_unit(std::string_view surface) const {
        auto it = by_alias_.find(text::lower(text::trim(surface)));
        if (it == by_alias_.end()) return std::nullopt;
        return it->second;
    }

    /// All aliases, longest first. Used by description-based unit inference.
    std::vector<std::string> aliases() const {
        std::vector<std::string> out;
        for (const auto& [alias, unit] : by_alias_) out.push_back(alias);
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return a.size() > b.size();
        });
        return out;
    }

private:
    static Rational parse_scale(std::string_view s, size_t line_no) {
        size_t slash = s.find('/');
        int64_t num, den = 1;
        bool ok = slash == std::string_view::npos
                      ? text::parse_int(s, num)
                      : text::parse_int(s.substr(0, slash), num) &&
                            text::parse_int(s.substr(slash + 1), den);
        if (!ok)
            throw SyntaxError("units registry: bad scale '" + std::string(s) + "' on line " +
                              std::to_string(line_no));
        return Rational::of(num, den);
    }

    std::map<std::string, Unit> by_alias_;
};

inline Unit parse_unit(std::string_view surface,
                       const UnitRegistry& registry = UnitRegistry::builtin()) {
    return registry.parse_unit(surface);
}

inline Quantity convert(const Quantity& q, const Unit& target) {
    if (q.unit.dimension != target.dimension)
        throw DimensionMismatch("cannot convert " + q.unit.dimension + " to " +
                                target.dimension);
    if (!std::isfinite(q.magnitude))
        throw DimensionMismatch("non-finite magnitude");
    Rational factor = q.unit.scale_to_base.times(target.scale_to_base.inverse());
    return Quantity{factor.apply(q.magnitude), target};
}

/// The two multiplicative hops of a resolved numeric chain.
struct ConversionPlan {
    std::string api_unit;  // canonical names
    std::string can_unit;
    std::string vv_unit;
    Rational api_to_can;
    Rational can_to_vv;

    bool operator==(const ConversionPlan&) const = default;

    double apply_api_to_can(double v) const { return api_to_can.apply(v); }
    double apply_can_to_vv(double v) const { return can_to_vv.apply(v); }
    double apply_api_to_vv(double v) const { return can_to_vv.apply(api_to_can.apply(v)); }
    double apply_vv_to_api(double v) const {
        return api_to_can.inverse().apply(can_to_vv.inverse().apply(v));
    }

    std::string describe() const {
        return api_unit + " -> " + can_unit + " (x" + std::to_string(api_to_can.num) + "/" +
               std::to_string(api_to_can.den) + ") -> " + vv_unit + " (x" +
               std::to_string(can_to_vv.num) + "/" + std::to_string(can_to_vv.den) + ")";
    }
};

struct ReconcileResult {
    std::optional<ConversionPlan> plan;  // empty means insufficient context

    bool insufficient_context() const { return !plan.has_value(); }
};

/// Builds the API->CAN->VV conversion chain. Absent units borrow the nearest
/// present one in the chain; if no unit exists anywhere the attribute lacks
/// context and must be skipped, never guessed. Present units of different
/// dimensions are a detectable documentation bug.
inline ReconcileResult reconcile(const std::optional<Unit>& api_unit,
                                 const std::optional<Unit>& can_unit,
                                 const std::optional<Unit>& vv_unit) {
    std::vector<const Unit*> present;
    for (const auto* u : {&api_unit, &can_unit, &vv_unit})
        if (u->has_value()) present.push_back(&u->value());
    if (present.empty()) return ReconcileResult{};
    for (size_t i = 1; i < present.size(); ++i) {
        if (present[i]->dimension != present[0]->dimension)
            throw DimensionMismatch(present[0]->canonical_name + " vs " +
                                    present[i]->canonical_name);
    }
    Unit api = api_unit ? *api_unit : (can_unit ? *can_unit : *vv_unit);
    Unit can = can_unit ? *can_unit : api;
    Unit vv = vv_unit ? *vv_unit : can;

    ConversionPlan plan;
    plan.api_unit = api.canonical_name;
    plan.can_unit = can.canonical_name;
    plan.vv_unit = vv.canonical_name;
    plan.api_to_can = api.scale_to_base.times(can.scale_to_base.inverse());
    plan.can_to_vv = can.scale_to_base.times(vv.scale_to_base.inverse());
    return ReconcileResult{plan};
}

}  // namespace vapitest
