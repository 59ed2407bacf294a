#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "clinicsched/errors.hpp"

namespace clinicsched {

struct ServiceTime {
    double mean_minutes = 0.0;
    double sd_minutes = 0.0;
};

// One patient class (e.g. acute / chronic / preventive).
//  - complexity: load a patient of this class puts on a slot (dimensionless)
//  - no_show_prob: long-run no-show probability for the class
//  - weight: relative importance in the assignment cost
//  - mix_fraction: share of incoming demand belonging to this class
struct PatientTypeSpec {
    int id = 0;
    std::string label;
    double complexity = 0.0;
    double no_show_prob = 0.0;
    double weight = 1.0;
    ServiceTime nurse;
    ServiceTime provider;
    double mix_fraction = 0.0;
};

// Validated, index-addressable collection of patient classes. Type ids must be
// 0..n-1 matching their position so that ids can be used directly as row
// indices throughout the library.
class PatientTypeSet {
public:
    PatientTypeSet() = default;
    explicit PatientTypeSet(std::vector<PatientTypeSpec> types) : types_(std::move(types)) {
        CS_REQUIRE(!types_.empty(), "patient type set must not be empty");
        double mix = 0.0;
        for (std::size_t i = 0; i < types_.size(); ++i) {
            const auto& t = types_[i];
            CS_REQUIRE(t.id == static_cast<int>(i), "type ids must be 0..n-1 in order");
            CS_REQUIRE(!t.label.empty(), "type label must not be empty");
            CS_REQUIRE(t.complexity > 0.0, "complexity must be > 0 for type " + t.label);
            CS_REQUIRE(t.no_show_prob >= 0.0 && t.no_show_prob < 1.0,
                       "no-show probability must be in [0,1) for type " + t.label);
            CS_REQUIRE(t.weight >= 0.0, "weight must be >= 0 for type " + t.label);
            CS_REQUIRE(t.nurse.mean_minutes > 0.0 && t.provider.mean_minutes > 0.0,
                       "service means must be > 0 for type " + t.label);
            // sd == 0 is allowed: a degenerate service time, useful for exact tests.
            CS_REQUIRE(t.nurse.sd_minutes >= 0.0 && t.provider.sd_minutes >= 0.0,
                       "service sds must be >= 0 for type " + t.label);
            CS_REQUIRE(t.mix_fraction >= 0.0, "mix fraction must be >= 0 for type " + t.label);
            for (std::size_t j = 0; j < i; ++j)
                CS_REQUIRE(types_[j].label != t.label, "duplicate type label " + t.label);
            mix += t.mix_fraction;
        }
        CS_REQUIRE(std::abs(mix - 1.0) <= 1e-9, "mix fractions must sum to 1");
    }

    int size() const { return static_cast<int>(types_.size()); }
    const PatientTypeSpec& operator[](int r) const {
        CS_REQUIRE(r >= 0 && r < size(), "type index out of range");
        return types_[static_cast<std::size_t>(r)];
    }
    const std::vector<PatientTypeSpec>& all() const { return types_; }

    // Returns -1 when no type carries the label.
    int index_of(const std::string& label) const {
        for (int r = 0; r < size(); ++r)
            if (types_[static_cast<std::size_t>(r)].label == label) return r;
        return -1;
    }

    double max_weight() const {
        double w = 0.0;
        for (const auto& t : types_) w = std::max(w, t.weight);
        return w;
    }

private:
    std::vector<PatientTypeSpec> types_;
};

// The three-class case mix used throughout: acute / chronic / preventive with
// complexities 0.29 / 0.32 / 0.36, 10% no-shows, and the clinic's empirical
// service-time moments.
inline PatientTypeSet make_default_types() {
    std::vector<PatientTypeSpec> t(3);
    t[0] = {0, "acute", 0.29, 0.10, 1.0, {11.3, 8.3}, {17.3, 8.7}, 0.493};
    t[1] = {1, "chronic", 0.32, 0.10, 1.0, {12.6, 8.8}, {19.3, 9.2}, 0.361};
    t[2] = {2, "preventive", 0.36, 0.10, 1.0, {13.9, 11.3}, {21.4, 11.8}, 0.146};
    return PatientTypeSet(std::move(t));
}

}  // namespace clinicsched
