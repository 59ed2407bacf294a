#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clinicsched/calendar.hpp"
#include "clinicsched/patient_types.hpp"
#include "clinicsched/scenario.hpp"
#include "clinicsched/weekly_template.hpp"

namespace clinicsched {

// One booked appointment inside a day's slot. delay_days feeds delay-dependent
// show-up models (-1 = unknown, treated as 0); patient_id links outcomes back
// to a booking log when the schedule comes from the call-center simulation.
struct BookedPatient {
    int type = 0;
    int delay_days = -1;
    long patient_id = -1;
};

// The realized booking of one clinic day: per-slot patient lists. Position in
// the list is the patient's within-slot rank (drives random-stream identity
// and arrival tie-breaking).
struct DaySchedule {
    std::vector<std::vector<BookedPatient>> slots;  // [slot_in_day][position]

    explicit DaySchedule(int slots_per_day = 0)
        : slots(static_cast<std::size_t>(slots_per_day)) {}
    int total_patients() const;
};

struct FlowParams {
    double arrival_mean = -16.62;  // unpunctuality, minutes relative to slot start
    double arrival_sd = 27.07;
    double early_arrival_cap = 60.0;  // arrivals clamped to day_start - cap
    NoShowModel no_show{};            // constant by default
    int replications = 200;
    double alpha = 0.85;
    double direct_wait_threshold = 30.0;
    double lunch_threshold = 45.0;
    double after_hours_threshold = 60.0;
    // false: direct wait runs from realized arrival (early birds accrue lobby
    // time). true: from max(arrival, scheduled slot start).
    bool wait_from_scheduled = false;

    void validate() const {
        CS_REQUIRE(arrival_sd >= 0.0, "arrival sd must be >= 0");
        CS_REQUIRE(early_arrival_cap >= 0.0, "early arrival cap must be >= 0");
        CS_REQUIRE(replications >= 1, "replication count must be >= 1");
        CS_REQUIRE(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
        CS_REQUIRE(direct_wait_threshold > 0.0 && lunch_threshold > 0.0 &&
                       after_hours_threshold > 0.0,
                   "thresholds must be > 0");
        no_show.validate();
    }
};

struct PatientOutcome {
    int slot = 0;
    int position = 0;
    int type = 0;
    long patient_id = -1;
    bool showed = false;
    // Minutes from midnight; meaningful only when showed.
    double arrival = 0.0;
    double nurse_start = 0.0;
    double nurse_end = 0.0;
    double provider_start = 0.0;
    double provider_end = 0.0;
    double direct_wait = 0.0;  // lobby + exam-room waiting, excluding service
};

struct DayOutcome {
    std::vector<PatientOutcome> patients;  // (slot, position) order
    double lunch_spillover = 0.0;  // provider service minutes inside the lunch window
    double after_hours = 0.0;      // provider service minutes past day_end
    int shows = 0;
    int no_shows = 0;

    double mean_direct_wait() const;      // over shown patients; 0 if none
    double provider_busy_minutes() const; // sum of provider service durations
};

struct TraceEvent {
    double time = 0.0;
    int slot = -1;
    int position = -1;
    std::string what;
};

// Simulates one clinic day: single nurse then single provider in series.
// Shown patients arrive at slot start + N(arrival_mean, arrival_sd), clamped
// to day_start - early_arrival_cap; a patient becomes eligible at their
// session's opening time; both servers pick the eligible patient with the
// earliest (arrival, slot, position); every shown patient is served, past
// day_end if necessary. Deterministic per seed: each (slot, position) owns a
// derived random stream, so schedules sharing a prefix share those draws.
DayOutcome simulate_day(const DaySchedule& schedule, const FlowParams& params,
                        const PatientTypeSet& types, const CalendarConfig& cal,
                        std::uint64_t seed, std::vector<TraceEvent>* trace = nullptr);

// Nearest-rank empirical quantile: the ceil(alpha*m)-th smallest value.
double nearest_rank_quantile(std::vector<double> values, double alpha);

struct WeekdayKpis {
    int weekday = 0;
    double direct_wait = 0.0;      // alpha-quantile of per-replication mean direct wait
    double lunch_spillover = 0.0;  // alpha-quantile
    double after_hours = 0.0;      // alpha-quantile
    bool violated = false;
};

struct TemplateEvaluation {
    std::vector<WeekdayKpis> per_weekday;
    std::vector<ForbiddenDayConfig> cuts;  // one per violating weekday
    bool clean() const { return cuts.empty(); }
};

// Builds each weekday's fully-booked schedule implied by the template, runs
// the replications, extracts alpha-quantile KPIs and emits a cut for every
// weekday that breaks any threshold. Show-up uses the constant per-type
// probability (booking delays are unknown at template time).
TemplateEvaluation evaluate_template(const WeeklyTemplate& t, const FlowParams& params,
                                     const PatientTypeSet& types, const CalendarConfig& cal,
                                     std::uint64_t seed, int workers = 1);

// The fully-booked schedule a template implies for one weekday (patients
// listed per slot in type order).
DaySchedule schedule_from_template_day(const WeeklyTemplate& t, int weekday,
                                       const PatientTypeSet& types, const CalendarConfig& cal);

}  // namespace clinicsched
