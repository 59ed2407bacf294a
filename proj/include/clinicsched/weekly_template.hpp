#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "clinicsched/calendar.hpp"
#include "clinicsched/errors.hpp"
#include "clinicsched/patient_types.hpp"

namespace clinicsched {

// Complexity budgets: kappa bounds each slot's total complexity, eta bounds
// each session's. kappa <= eta is required (a slot lies inside a session).
struct ComplexityBudget {
    double kappa = 0.96;
    double eta = 2.8;

    void validate() const {
        CS_REQUIRE(kappa > 0.0, "kappa must be > 0");
        CS_REQUIRE(eta >= kappa, "eta must be >= kappa");
    }
};

// Dense type x weekly-slot count matrix backing templates and floors.
class CountMatrix {
public:
    CountMatrix() = default;
    CountMatrix(int types, int weekly_slots)
        : types_(types), slots_(weekly_slots),
          data_(static_cast<std::size_t>(types) * static_cast<std::size_t>(weekly_slots), 0) {
        CS_REQUIRE(types >= 1 && weekly_slots >= 1, "matrix dimensions must be >= 1");
    }

    int types() const { return types_; }
    int weekly_slots() const { return slots_; }

    int& at(int r, int a) {
        check(r, a);
        return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(slots_) +
                     static_cast<std::size_t>(a)];
    }
    int at(int r, int a) const {
        check(r, a);
        return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(slots_) +
                     static_cast<std::size_t>(a)];
    }

    bool operator==(const CountMatrix& o) const {
        return types_ == o.types_ && slots_ == o.slots_ && data_ == o.data_;
    }

private:
    void check(int r, int a) const {
        CS_REQUIRE(r >= 0 && r < types_, "type index out of range");
        CS_REQUIRE(a >= 0 && a < slots_, "weekly slot index out of range");
    }
    int types_ = 0;
    int slots_ = 0;
    std::vector<int> data_;
};

// A weekly scheduling template for one planning month: how many appointments
// of each type each weekly slot offers. Counts are nonnegative.
struct WeeklyTemplate {
    int month_index = 0;
    CountMatrix counts;

    WeeklyTemplate() = default;
    WeeklyTemplate(int month, const PatientTypeSet& types, const CalendarConfig& cal)
        : month_index(month), counts(types.size(), cal.slots_per_week()) {
        CS_REQUIRE(month >= 0, "month index must be >= 0");
    }

    bool operator==(const WeeklyTemplate& o) const {
        return month_index == o.month_index && counts == o.counts;
    }
    bool operator!=(const WeeklyTemplate& o) const { return !(*this == o); }
};

// Minimum counts a template must honor (already-booked appointments when a
// month is re-optimized mid-flight). Dimensions must match the template's.
struct CommitmentFloor {
    CountMatrix floors;
};

// An excluded day configuration: templates whose per-slot type counts on
// `weekday` exactly equal `per_slot_counts` are rejected. Produced by the
// simulation feedback loop when a day pattern fails the queueing check.
struct ForbiddenDayConfig {
    int weekday = 0;
    std::vector<std::vector<int>> per_slot_counts;  // [slot_in_day][type]

    bool matches(const WeeklyTemplate& t, const CalendarConfig& cal) const;
    bool operator==(const ForbiddenDayConfig& o) const {
        return weekday == o.weekday && per_slot_counts == o.per_slot_counts;
    }
};

struct Violation {
    enum class Kind { slot_budget, session_budget, floor_breach, forbidden_day, negative_count };
    Kind kind = Kind::slot_budget;
    int weekday = -1;
    int slot_in_day = -1;   // -1 when not slot-scoped
    int session = -1;       // -1 when not session-scoped
    int type = -1;          // -1 when not type-scoped
    double value = 0.0;     // measured quantity (complexity, count, ...)
    double limit = 0.0;     // the bound it broke

    std::string describe(const PatientTypeSet& types) const;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool feasible() const { return violations.empty(); }
    std::string describe(const PatientTypeSet& types) const;
};

// Complexity of one slot given per-type counts (counts.size() == #types).
double slot_complexity(const std::vector<int>& counts, const PatientTypeSet& types);

// Checks nonnegativity, per-slot kappa, per-session eta, floor satisfaction
// (when floor != nullptr) and exclusion constraints. Returns every violation,
// not just the first.
ValidationReport validate_template(const WeeklyTemplate& t, const PatientTypeSet& types,
                                   const CalendarConfig& cal, const ComplexityBudget& budget,
                                   const CommitmentFloor* floor = nullptr,
                                   const std::vector<ForbiddenDayConfig>& excluded = {});

// A commitment floor must itself fit the budgets (it records appointments that
// already exist); checked by validating the floor counts as a template.
ValidationReport validate_floor(const CommitmentFloor& floor, const PatientTypeSet& types,
                                const CalendarConfig& cal, const ComplexityBudget& budget);

// Appointments of type r the template offers on working day `day` (>= 0):
// the sum of the type's counts over that weekday's slots.
int daily_capacity(const WeeklyTemplate& t, int type, int day, const CalendarConfig& cal);

// Total appointments (all types) per week.
int weekly_capacity(const WeeklyTemplate& t);

// Per-slot counts of one weekday as [slot_in_day][type], the shape used by
// exclusion constraints.
std::vector<std::vector<int>> day_configuration(const WeeklyTemplate& t, int weekday,
                                                const CalendarConfig& cal);

// --- persistence ----------------------------------------------------------
// Text format, one template per file:
//   template v1
//   month <m>
//   <weekday> <session> <slot_in_session> <type_label> <count>   (one row per cell)
// Rows are emitted for every cell (including zeros) in a fixed order, so a
// round-trip is byte-identical.
void write_template(const WeeklyTemplate& t, const PatientTypeSet& types,
                    const CalendarConfig& cal, std::ostream& out);
void write_template_file(const WeeklyTemplate& t, const PatientTypeSet& types,
                         const CalendarConfig& cal, const std::string& path);
WeeklyTemplate read_template(std::istream& in, const PatientTypeSet& types,
                             const CalendarConfig& cal);
WeeklyTemplate read_template_file(const std::string& path, const PatientTypeSet& types,
                                  const CalendarConfig& cal);

std::string template_to_text(const WeeklyTemplate& t, const PatientTypeSet& types,
                             const CalendarConfig& cal);

// --- reference heuristics ---------------------------------------------------
// Fixed-pattern baseline templates. Both honor the supplied budgets: the raw
// historical patterns overload one session each, so construction trims the
// most complex slot of an overloaded session (latest slot on ties, dropping
// its highest-complexity type) until the session fits. Requires the default
// three-type case mix (acute/chronic/preventive) and the 2x4 slot day.
WeeklyTemplate make_spt_template(const PatientTypeSet& types, const CalendarConfig& cal,
                                 const ComplexityBudget& budget, int month_index = 0);
WeeklyTemplate make_lcvb_template(const PatientTypeSet& types, const CalendarConfig& cal,
                                  const ComplexityBudget& budget, int month_index = 0);

}  // namespace clinicsched
