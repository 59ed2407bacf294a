#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "clinicsched/calendar.hpp"
#include "clinicsched/patient_types.hpp"

namespace clinicsched {

// Realized demand for one horizon: f[r][d] patients of type r asked for an
// appointment on working day d. The day grid contains working days only, so
// "non-working days have zero demand" holds by construction.
struct DemandScenario {
    int scenario_id = 0;
    int horizon = 0;
    std::vector<std::vector<int>> f;  // [type][day]

    int demand(int r, int d) const { return f[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)]; }
    long total() const;
};

enum class TimePref { none, morning, afternoon };

struct PatientRequest {
    long id = 0;
    int type = 0;
    int call_day = 0;
    int desired_day = 0;  // >= call_day, <= call_day + max_lead
    TimePref pref = TimePref::none;
};

// Show-up probability as a function of appointment delay. `constant` uses the
// per-type probability supplied at call time; the published delay-dependent
// fits carry their own constants, with `kopach` scaling the model's base_p
// (the clinic-average no-show probability).
struct NoShowModel {
    enum class Kind { constant, kopach, gallucci, green_savin };
    Kind kind = Kind::constant;
    double base_p = 0.10;

    void validate() const {
        CS_REQUIRE(base_p >= 0.0 && base_p <= 1.0, "base_p must be in [0,1]");
    }
};

NoShowModel::Kind no_show_kind_from_string(const std::string& s);
std::string to_string(NoShowModel::Kind k);

// Probability a patient shows up given a booking delay of j working days.
// Result is clamped to [0,1]. For kind == constant the result is 1 - type_p.
double show_up_probability(const NoShowModel& m, int delay_days, double type_p);

// Over-dispersed weekly request volume: Gamma(dispersion, mean/dispersion)
// mixed Poisson, i.e. negative-binomial-like with variance mean + mean^2/disp.
struct VolumeModel {
    double weekly_mean = 85.0;
    double dispersion = 50.0;
};

struct DemandParams {
    PatientTypeSet types = make_default_types();
    CalendarConfig calendar{};
    VolumeModel volume{};
    std::vector<double> weekday_desired_weights;  // size days_per_week, sums to 1
    std::vector<double> lead_time_mass;           // index = lead in days, sums to 1
    std::vector<std::vector<double>> seasonal_mix_modifiers;  // [12][types]
    int start_month = 0;   // calendar month (0=Jan) containing working day 0
    int day_offset = 0;    // global index of local day 0 (for mid-horizon windows)
    double pref_morning = 0.25;
    double pref_afternoon = 0.25;

    void validate() const;
    int max_lead() const { return static_cast<int>(lead_time_mass.size()) - 1; }
    // Calendar month (0..11) of local working day d.
    int month_of_day(int d) const;
    // Mix shares for a calendar month after seasonal modifiers, renormalized.
    std::vector<double> monthly_mix(int calendar_month) const;
};

// Defaults: weekday weights (0.16,0.20,0.20,0.20,0.24), geometric lead mass
// over 0..28 with 65% of mass in 0..7, mild seasonal mix swing (5% toward
// acute in winter, toward chronic in summer).
DemandParams make_default_demand_params(const PatientTypeSet& types = make_default_types(),
                                        const CalendarConfig& cal = CalendarConfig{});

// Fills lead_time_mass with a truncated-geometric pmf over 0..max_lead whose
// cumulative mass on 0..short_window equals short_mass.
std::vector<double> make_geometric_lead_mass(int max_lead, int short_window, double short_mass);

DemandScenario generate_scenario(const DemandParams& params, int horizon, std::uint64_t seed);
std::vector<DemandScenario> generate_scenarios(const DemandParams& params, int horizon,
                                               std::uint64_t seed, int count);

std::vector<PatientRequest> generate_call_stream(const DemandParams& params, int horizon,
                                                 std::uint64_t seed);

// --- persistence: delimited text for replay --------------------------------
void write_scenario(const DemandScenario& s, std::ostream& out);
DemandScenario read_scenario(std::istream& in);
void write_call_stream(const std::vector<PatientRequest>& stream, std::ostream& out);
std::vector<PatientRequest> read_call_stream(std::istream& in);

}  // namespace clinicsched
