#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clinicsched/calendar.hpp"
#include "clinicsched/callcenter.hpp"
#include "clinicsched/clinicflow.hpp"
#include "clinicsched/patient_types.hpp"

namespace clinicsched {

// --- small statistics helpers -----------------------------------------------

// Order statistics of a sample. Quantiles average the two central order
// statistics when the rank p*n lands exactly on an integer (so the median of
// {0,0,2,5} is 1.0) and take the ceil-rank order statistic otherwise.
struct QuantileSummary {
    long count = 0;
    double mean = 0.0;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
    double p90 = 0.0;
    double p95 = 0.0;
    double max = 0.0;
};
QuantileSummary summarize_values(std::vector<double> values);

// Integer-valued histogram; bin i counts observations equal to min_value + i.
struct WaitHistogram {
    int min_value = 0;
    std::vector<long> counts;
    long total = 0;

    void add(int value);
    long at(int value) const;  // 0 outside the range
};

// Calendar seasons partitioning months Dec-Feb / Mar-May / Jun-Aug / Sep-Nov.
enum class Season { winter, spring, summer, fall };
std::string_view to_string(Season s);
Season season_of_calendar_month(int calendar_month);  // 0 = January

// --- the report ---------------------------------------------------------------

struct SeasonStats {
    long booked = 0;
    QuantileSummary indirect;
    WaitHistogram histogram;
};

struct Report {
    // Request-level KPIs over calls placed on or after the warmup cutoff.
    long requests = 0;
    long booked = 0;                  // got an appointment (canceled or not)
    double same_day_pct = 0.0;        // appointment on the call day
    double future_booked_pct = 0.0;   // appointment on a later day
    double no_appointment_pct = 0.0;  // turned away
    std::array<long, 7> disposition_counts{};  // indexed by Disposition

    WaitHistogram indirect_wait;  // booked patients; working days unless configured
    QuantileSummary indirect_quantiles;
    std::array<SeasonStats, 4> seasons;  // indexed by Season, keyed to the call day

    // Clinic-day KPIs over days on or after the warmup cutoff.
    long measured_days = 0;
    long shown = 0;
    double zero_direct_wait_pct = 0.0;       // of shown patients
    QuantileSummary positive_direct_wait;    // minutes, over positive waits only
    std::vector<long> direct_wait_bins;      // positive waits, fixed-width bins
    double direct_wait_bin_minutes = 5.0;
    double mean_lunch_spillover = 0.0;  // minutes per measured day
    double mean_after_hours = 0.0;      // minutes per measured day

    // Share of scheduled (never-canceled) appointments per planning month and
    // type; months fully inside the measured window only.
    int first_measured_month = 0;
    std::vector<std::vector<double>> monthly_mix;
};

struct SummarizeOptions {
    int warmup_days = 0;           // calls and clinic days before this are excluded
    int start_calendar_month = 0;  // calendar month of planning month 0 (0 = January)
    bool calendar_day_waits = false;  // convert indirect waits to calendar days
};

// Aggregates one horizon run. `outcomes` must be the full day-indexed list the
// log's appointments refer to (outcomes[d] = working day d); the warmup cut
// happens here. Served / no-show records must match a patient entry of their
// appointment day, and pending bookings must lie beyond the outcome window —
// anything else is an inconsistent log/outcome pair and throws.
Report summarize(const BookingLog& log, const std::vector<DayOutcome>& outcomes,
                 const PatientTypeSet& types, const CalendarConfig& cal,
                 const SummarizeOptions& opt = {});

// Stable text form: delimited sections with fixed headers; byte-identical for
// equal reports.
void write_report(const Report& r, const PatientTypeSet& types, std::ostream& out);
std::string report_to_text(const Report& r, const PatientTypeSet& types);

// --- policy comparison --------------------------------------------------------

struct LabeledReport {
    std::string label;
    Report report;
};

struct PolicyComparison {
    std::vector<std::string> labels;
    std::vector<std::string> kpi_names;        // fixed, part of the contract
    std::vector<std::vector<double>> values;   // [kpi][policy]
    std::vector<std::pair<int, int>> pairs;    // (i, j) with i < j, in index order
    std::vector<std::vector<double>> deltas;   // [kpi][pair] = values[i] - values[j]
    bool common_random_numbers = false;
};

// Side-by-side KPI deltas for every pair of reports. Needs >= 2 reports.
PolicyComparison compare_policies(const std::vector<LabeledReport>& reports,
                                  bool common_random_numbers = false);
std::string comparison_to_text(const PolicyComparison& c);

}  // namespace clinicsched
