#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clinicsched/calendar.hpp"
#include "clinicsched/callcenter.hpp"
#include "clinicsched/clinicflow.hpp"
#include "clinicsched/optimizer.hpp"
#include "clinicsched/patient_types.hpp"
#include "clinicsched/scenario.hpp"
#include "clinicsched/weekly_template.hpp"

namespace clinicsched {

// Which booking policy an experiment runs: the optimized template, one of the
// two fixed heuristic templates, or the no-template raw-capacity baseline.
enum class BookingPolicy { two_stage, spt, lcvb, raw_capacity };

std::string to_string(BookingPolicy p);
BookingPolicy booking_policy_from_string(const std::string& s);

// Everything one experiment needs. Defaults reproduce the base parameter set;
// a config file overrides any subset of fields. parse_config keeps the nested
// demand block consistent with `types` and `calendar`; code that builds a
// RunConfig by hand must do the same (validate() checks).
struct RunConfig {
    PatientTypeSet types = make_default_types();
    CalendarConfig calendar{};
    ComplexityBudget budget{};
    DemandParams demand = make_default_demand_params();
    FlowParams flow{};
    IndexPolicyParams booking{};
    OptimizeParams optimizer{};

    int planning_horizon = 240;  // working days
    int warmup_days = 60;
    std::uint64_t seed = 1;
    BookingPolicy policy = BookingPolicy::two_stage;
    int cut_limit = 50;           // optimize/evaluate rounds allowed per month
    int raw_seats_per_slot = 2;   // raw_capacity baseline: seats per slot
    int start_calendar_month = 0;  // calendar month (0 = Jan) of working day 0
    bool calendar_day_waits = false;  // report indirect waits in calendar days
    bool compute_saa_gap = false;     // attach a sampling-gap estimate to the run

    int months() const {
        return (planning_horizon + calendar.working_days_per_month - 1) /
               calendar.working_days_per_month;
    }

    // Cross-field consistency; throws ContractViolation naming the field.
    void validate() const;
};

// One problem found while loading a config: where (dotted field path) + what.
struct ConfigIssue {
    std::string path;
    std::string message;
};

struct ConfigResult {
    RunConfig config;  // defaults where the file was silent or broken
    std::vector<ConfigIssue> errors;

    bool ok() const { return errors.empty(); }
};

// Parses JSON config text. Missing keys keep their defaults; empty input is a
// valid all-defaults config. Content problems (bad values, wrong types,
// unknown keys in strict mode) are collected into `errors` with field paths
// rather than thrown, so one load reports everything at once.
ConfigResult parse_config(const std::string& text, bool strict = true);

// parse_config over a file; an unreadable path becomes a single error.
ConfigResult validate_config(const std::string& path, bool strict = true);

// validate_config that throws ContractViolation listing every issue (CLI use).
RunConfig load_config_or_throw(const std::string& path, bool strict = true);

// Emits the full resolved config as JSON with a fixed key order, so equal
// configs serialize byte-identically. parse_config(config_to_json(c)) == c.
std::string config_to_json(const RunConfig& cfg);

}  // namespace clinicsched
