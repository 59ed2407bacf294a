#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clinicsched/calendar.hpp"
#include "clinicsched/clinicflow.hpp"
#include "clinicsched/patient_types.hpp"
#include "clinicsched/random.hpp"
#include "clinicsched/scenario.hpp"
#include "clinicsched/weekly_template.hpp"

namespace clinicsched {

// --- index policy -----------------------------------------------------------

struct IndexPolicyParams {
    double beta = 0.0;                  // perishability exponent (0 = capacity-greedy)
    double acceptance_threshold = 0.2;  // per-offer rejection mass in [0,1)
    int booking_horizon = 60;           // working days ahead a slot may be offered
    double cancellation_rate = 0.17;    // combined patient + clinic cancellation rate

    void validate() const;
};

// Attractiveness of a candidate slot for a patient wanting `desired_day`:
// remaining_capacity * exp(beta * (desired_day - slot_day)), days in working
// days. beta = 0 ranks purely by remaining capacity; slots on the desired day
// score exactly their capacity for any beta.
double compute_index(double remaining_capacity, int desired_day, int slot_day, double beta);

// --- booking state ----------------------------------------------------------

// Remaining bookable capacity per (working day, slot-in-day, type), plus the
// bookings already made against it. "Typed" states carve capacity per patient
// type from a weekly template; the raw-capacity baseline pools each slot into
// a type-agnostic count.
class BookingState {
public:
    BookingState() = default;

    // Day d draws its capacity from monthly[min(d / working_days_per_month,
    // last)]; the final template extends over any remaining days.
    static BookingState from_monthly_templates(const std::vector<WeeklyTemplate>& monthly,
                                               const PatientTypeSet& types,
                                               const CalendarConfig& cal, int days);

    // Every slot accepts any `per_slot` patients regardless of type.
    static BookingState raw_capacity(const CalendarConfig& cal, int type_count, int days,
                                     int per_slot);

    int days() const { return days_; }
    int slots_per_day() const { return slots_; }
    int type_count() const { return types_; }
    bool typed() const { return typed_; }

    int remaining(int day, int slot, int type) const;
    int booked(int day, int slot, int type) const;
    long total_booked() const;

    void book(int day, int slot, int type);     // contract: remaining(...) > 0
    void release(int day, int slot, int type);  // contract: booked(...) > 0

    // Swaps `month`'s days (and every later day, which holds provisional
    // capacity until its own month begins) onto a new template. Capacity never
    // drops below what is already booked in a cell, so existing appointments
    // stay valid; a template honoring floors_for_month never needs that clamp
    // for the month itself.
    void retile_from_month(int month, const WeeklyTemplate& t, const PatientTypeSet& types,
                           const CalendarConfig& cal);

    // Largest booked count per (type, weekly slot) over the month's weeks: the
    // floor a re-optimization of this month must honor.
    CommitmentFloor floors_for_month(int month, const CalendarConfig& cal) const;

private:
    int days_ = 0;
    int slots_ = 0;
    int types_ = 0;
    bool typed_ = true;
    std::vector<int> cap_;     // typed: [day][slot][type]; pooled: [day][slot]
    std::vector<int> booked_;  // [day][slot][type]

    std::size_t bidx(int day, int slot, int type) const;
    int& cap_cell(int day, int slot, int type);
    void check(int day, int slot, int type) const;
};

// --- booking log ------------------------------------------------------------

// Final state of one request. A request is first booked (or turned away), may
// later be canceled, and — if the appointment day arrives intact — ends as
// served or no_show. booked / same_day survive only for appointments still
// pending when the run ends (same_day additionally requires the run to stop
// before simulating that day).
enum class Disposition {
    booked,
    same_day,
    no_appointment,
    canceled_by_patient,
    canceled_by_clinic,
    no_show,
    served,
};
std::string_view to_string(Disposition d);
Disposition disposition_from_string(std::string_view s);

struct BookingRecord {
    long patient_id = -1;
    int type = 0;
    int call_day = 0;
    int desired_day = 0;
    int actual_day = -1;  // -1: never booked
    int slot = -1;        // slot-in-day of the booking
    int cancel_day = -1;  // -1: never canceled
    Disposition disposition = Disposition::no_appointment;

    bool got_appointment() const { return actual_day >= 0; }
    // actual - desired, in working days; contract: got_appointment().
    int indirect_wait() const;
};

struct BookingLog {
    std::vector<BookingRecord> records;  // request-stream order

    long count(Disposition d) const;
};

// One row per patient, tab-delimited, header line first; round-trips exactly.
void write_booking_log(const BookingLog& log, std::ostream& out);
BookingLog read_booking_log(std::istream& in);

// --- booking operations -----------------------------------------------------

struct OfferOutcome {
    Disposition disposition = Disposition::no_appointment;  // booked | same_day | no_appointment
    int day = -1;
    int slot = -1;
    int offers_made = 0;
};

// Offers open slots in decreasing index order (ties: earlier day, then earlier
// slot) among days [desired_day, call_day + booking_horizon] that satisfy the
// patient's session preference; each candidate is offered at most once, the
// patient accepts an offer when its uniform draw exceeds acceptance_threshold,
// and a booking decrements the slot's capacity. Exhausting the candidates
// turns the patient away (no_appointment).
OfferOutcome offer_and_book(const PatientRequest& req, BookingState& state,
                            const CalendarConfig& cal, const IndexPolicyParams& policy,
                            RngEngine& rng);

// --- cancellations ----------------------------------------------------------

// A cancellation fate pre-drawn at booking time from a stream keyed by the
// patient id (so policies sharing a seed draw identical fates for the same
// patient regardless of what else happened — common random numbers).
struct PlannedCancellation {
    long patient_id = -1;
    int day = -1;           // working day the cancellation lands
    bool by_clinic = false;
};

// With probability `rate` the appointment is canceled on a uniform working day
// in (call_day, appointment_day]; patient- and clinic-initiated cancellations
// split the rate evenly. Same-day appointments (appointment_day == call_day)
// are never canceled.
std::optional<PlannedCancellation> plan_cancellation(long patient_id, int call_day,
                                                     int appointment_day, double rate,
                                                     std::uint64_t root_seed);

struct FreedSlot {
    long patient_id = -1;
    int day = -1;
    int slot = -1;
    int type = 0;
    bool by_clinic = false;
};

// Applies every planned cancellation landing on `day` whose booking is still
// active: frees the slot's capacity and flips the record's disposition.
// Returns the freed slots. Records are matched by patient id.
std::vector<FreedSlot> process_cancellations(BookingState& state, BookingLog& log, int day,
                                             const std::vector<PlannedCancellation>& planned);

// --- horizon run ------------------------------------------------------------

// Where day capacity comes from: a sequence of monthly templates (one entry
// replicated everywhere is the fixed-template case) or the raw provider
// capacity baseline.
struct TemplateSource {
    enum class Kind { monthly_templates, raw_capacity };
    Kind kind = Kind::monthly_templates;
    std::vector<WeeklyTemplate> monthly;  // non-empty for monthly_templates
    int raw_per_slot = 1;                 // raw_capacity: patients per slot

    static TemplateSource from_monthly(std::vector<WeeklyTemplate> templates);
    static TemplateSource fixed(const WeeklyTemplate& t);
    static TemplateSource raw(int per_slot = 1);
};

// Month-start re-planning hook: given the month index and the commitment
// floors implied by appointments already booked into that month, returns the
// template to install from that month on. Absent hook = capacity fully tiled
// up front from the TemplateSource.
using MonthPlanner = std::function<WeeklyTemplate(int month, const CommitmentFloor& floors)>;

struct HorizonResult {
    BookingLog log;                    // one record per request, stream order
    std::vector<DayOutcome> outcomes;  // one per simulated working day
    std::vector<WeeklyTemplate> templates_used;  // per planning month
    int warmup_days = 0;               // echo of the input, for downstream KPI cuts
    long total_offers = 0;
};

// Rolling-horizon booking simulation over working days 0..horizon_days-1. Each
// day: book that day's calls (offer_and_book per request, cancellation fates
// pre-drawn per booking), apply cancellations landing that day, then simulate
// the realized day schedule; shown patients end served, absent ones no_show.
// Appointments beyond the simulated horizon stay pending in the log.
// Deterministic: one (stream, seed) pair always yields one result.
//
// Contracts: stream sorted by call_day with 0 <= call_day < horizon_days;
// 0 <= warmup_days < horizon_days; policy/flow parameters valid.
HorizonResult run_horizon(const TemplateSource& source, const std::vector<PatientRequest>& stream,
                          const PatientTypeSet& types, const CalendarConfig& cal,
                          const FlowParams& flow, const IndexPolicyParams& policy,
                          int horizon_days, int warmup_days, std::uint64_t seed,
                          const MonthPlanner& planner = {});

}  // namespace clinicsched
