#include "clinicsched/callcenter.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "clinicsched/errors.hpp"

namespace clinicsched {

// --- index policy -----------------------------------------------------------

void IndexPolicyParams::validate() const {
    CS_REQUIRE(beta >= 0.0, "beta must be >= 0");
    CS_REQUIRE(acceptance_threshold >= 0.0 && acceptance_threshold < 1.0,
               "acceptance threshold must be in [0,1)");
    CS_REQUIRE(booking_horizon >= 1, "booking horizon must be >= 1");
    CS_REQUIRE(cancellation_rate >= 0.0 && cancellation_rate <= 1.0,
               "cancellation rate must be in [0,1]");
}

double compute_index(double remaining_capacity, int desired_day, int slot_day, double beta) {
    CS_REQUIRE(remaining_capacity >= 0.0, "remaining capacity must be >= 0");
    return remaining_capacity * std::exp(beta * static_cast<double>(desired_day - slot_day));
}

// --- booking state ----------------------------------------------------------

std::size_t BookingState::bidx(int day, int slot, int type) const {
    return (static_cast<std::size_t>(day) * static_cast<std::size_t>(slots_) +
            static_cast<std::size_t>(slot)) *
               static_cast<std::size_t>(types_) +
           static_cast<std::size_t>(type);
}

void BookingState::check(int day, int slot, int type) const {
    CS_REQUIRE(day >= 0 && day < days_, "booking day out of range");
    CS_REQUIRE(slot >= 0 && slot < slots_, "slot index out of range");
    CS_REQUIRE(type >= 0 && type < types_, "type index out of range");
}

int& BookingState::cap_cell(int day, int slot, int type) {
    if (typed_) return cap_[bidx(day, slot, type)];
    return cap_[static_cast<std::size_t>(day) * static_cast<std::size_t>(slots_) +
                static_cast<std::size_t>(slot)];
}

BookingState BookingState::from_monthly_templates(const std::vector<WeeklyTemplate>& monthly,
                                                  const PatientTypeSet& types,
                                                  const CalendarConfig& cal, int days) {
    CS_REQUIRE(!monthly.empty(), "monthly template list must not be empty");
    CS_REQUIRE(days >= 1, "booking state needs at least one day");
    for (const auto& t : monthly) {
        CS_REQUIRE(t.counts.types() == types.size() &&
                       t.counts.weekly_slots() == cal.slots_per_week(),
                   "template dimensions must match the type set and calendar");
    }
    BookingState s;
    s.days_ = days;
    s.slots_ = cal.slots_per_day();
    s.types_ = types.size();
    s.typed_ = true;
    s.cap_.assign(static_cast<std::size_t>(days) * s.slots_ * s.types_, 0);
    s.booked_.assign(s.cap_.size(), 0);
    const int last = static_cast<int>(monthly.size()) - 1;
    for (int d = 0; d < days; ++d) {
        const WeeklyTemplate& t = monthly[static_cast<std::size_t>(std::min(cal.month_of(d), last))];
        const int weekday = cal.weekday_of(d);
        for (int a = 0; a < s.slots_; ++a)
            for (int r = 0; r < s.types_; ++r)
                s.cap_[s.bidx(d, a, r)] = t.counts.at(r, weekday * s.slots_ + a);
    }
    return s;
}

BookingState BookingState::raw_capacity(const CalendarConfig& cal, int type_count, int days,
                                        int per_slot) {
    CS_REQUIRE(type_count >= 1, "raw capacity needs at least one type");
    CS_REQUIRE(days >= 1, "booking state needs at least one day");
    CS_REQUIRE(per_slot >= 0, "per-slot capacity must be >= 0");
    BookingState s;
    s.days_ = days;
    s.slots_ = cal.slots_per_day();
    s.types_ = type_count;
    s.typed_ = false;
    s.cap_.assign(static_cast<std::size_t>(days) * s.slots_, per_slot);
    s.booked_.assign(static_cast<std::size_t>(days) * s.slots_ * type_count, 0);
    return s;
}

int BookingState::remaining(int day, int slot, int type) const {
    check(day, slot, type);
    if (typed_) return cap_[bidx(day, slot, type)] - booked_[bidx(day, slot, type)];
    int taken = 0;
    for (int r = 0; r < types_; ++r) taken += booked_[bidx(day, slot, r)];
    return cap_[static_cast<std::size_t>(day) * static_cast<std::size_t>(slots_) +
                static_cast<std::size_t>(slot)] -
           taken;
}

int BookingState::booked(int day, int slot, int type) const {
    check(day, slot, type);
    return booked_[bidx(day, slot, type)];
}

long BookingState::total_booked() const {
    long n = 0;
    for (int b : booked_) n += b;
    return n;
}

void BookingState::book(int day, int slot, int type) {
    CS_REQUIRE(remaining(day, slot, type) > 0, "booking into a full slot");
    ++booked_[bidx(day, slot, type)];
}

void BookingState::release(int day, int slot, int type) {
    check(day, slot, type);
    CS_REQUIRE(booked_[bidx(day, slot, type)] > 0, "releasing a booking that does not exist");
    --booked_[bidx(day, slot, type)];
}

void BookingState::retile_from_month(int month, const WeeklyTemplate& t,
                                     const PatientTypeSet& types, const CalendarConfig& cal) {
    CS_REQUIRE(typed_, "raw-capacity states have no template to swap");
    CS_REQUIRE(month >= 0, "month index must be >= 0");
    CS_REQUIRE(t.counts.types() == types_ && types.size() == types_ &&
                   t.counts.weekly_slots() == cal.slots_per_week() &&
                   cal.slots_per_day() == slots_,
               "template dimensions must match the booking state");
    for (int d = month * cal.working_days_per_month; d < days_; ++d) {
        const int weekday = cal.weekday_of(d);
        for (int a = 0; a < slots_; ++a)
            for (int r = 0; r < types_; ++r) {
                const std::size_t i = bidx(d, a, r);
                cap_[i] = std::max(t.counts.at(r, weekday * slots_ + a), booked_[i]);
            }
    }
}

CommitmentFloor BookingState::floors_for_month(int month, const CalendarConfig& cal) const {
    CS_REQUIRE(month >= 0, "month index must be >= 0");
    CS_REQUIRE(cal.slots_per_day() == slots_, "calendar does not match the booking state");
    CommitmentFloor floor;
    floor.floors = CountMatrix(types_, cal.slots_per_week());
    const int first = month * cal.working_days_per_month;
    const int past = std::min(days_, first + cal.working_days_per_month);
    for (int d = first; d < past; ++d) {
        const int weekday = cal.weekday_of(d);
        for (int a = 0; a < slots_; ++a)
            for (int r = 0; r < types_; ++r) {
                int& cell = floor.floors.at(r, weekday * slots_ + a);
                cell = std::max(cell, booked_[bidx(d, a, r)]);
            }
    }
    return floor;
}

// --- booking log ------------------------------------------------------------

std::string_view to_string(Disposition d) {
    switch (d) {
        case Disposition::booked: return "booked";
        case Disposition::same_day: return "same_day";
        case Disposition::no_appointment: return "no_appointment";
        case Disposition::canceled_by_patient: return "canceled_by_patient";
        case Disposition::canceled_by_clinic: return "canceled_by_clinic";
        case Disposition::no_show: return "no_show";
        case Disposition::served: return "served";
    }
    throw ContractViolation("unknown disposition value");
}

Disposition disposition_from_string(std::string_view s) {
    for (Disposition d : {Disposition::booked, Disposition::same_day, Disposition::no_appointment,
                          Disposition::canceled_by_patient, Disposition::canceled_by_clinic,
                          Disposition::no_show, Disposition::served})
        if (s == to_string(d)) return d;
    throw ParseError("unknown disposition: " + std::string(s));
}

int BookingRecord::indirect_wait() const {
    CS_REQUIRE(got_appointment(), "indirect wait is defined only for booked patients");
    return actual_day - desired_day;
}

long BookingLog::count(Disposition d) const {
    long n = 0;
    for (const auto& r : records) n += r.disposition == d ? 1 : 0;
    return n;
}

namespace {
constexpr char kLogHeader[] =
    "patient_id\ttype\tcall_day\tdesired_day\tactual_day\tslot\tcancel_day\tdisposition";
}  // namespace

void write_booking_log(const BookingLog& log, std::ostream& out) {
    out << kLogHeader << '\n';
    for (const auto& r : log.records)
        out << r.patient_id << '\t' << r.type << '\t' << r.call_day << '\t' << r.desired_day
            << '\t' << r.actual_day << '\t' << r.slot << '\t' << r.cancel_day << '\t'
            << to_string(r.disposition) << '\n';
}

BookingLog read_booking_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("booking log is empty");
    if (line != kLogHeader) throw ParseError("booking log header mismatch: " + line);
    BookingLog log;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        BookingRecord r;
        std::string disp;
        if (!(row >> r.patient_id >> r.type >> r.call_day >> r.desired_day >> r.actual_day >>
              r.slot >> r.cancel_day >> disp))
            throw ParseError("malformed booking log row: " + line);
        r.disposition = disposition_from_string(disp);
        log.records.push_back(r);
    }
    return log;
}

// --- booking operations -----------------------------------------------------

namespace {

struct Candidate {
    double index = 0.0;
    int day = 0;
    int slot = 0;
};

// Decreasing index; ties toward the earlier day, then the earlier slot.
bool offer_before(const Candidate& a, const Candidate& b) {
    if (a.index != b.index) return a.index > b.index;
    if (a.day != b.day) return a.day < b.day;
    return a.slot < b.slot;
}

bool slot_matches_pref(TimePref pref, int slot_in_day, const CalendarConfig& cal) {
    if (pref == TimePref::none) return true;
    const int session = cal.session_of(slot_in_day);
    if (pref == TimePref::morning) return session == 0;
    return session == cal.sessions_per_day - 1;
}

}  // namespace

OfferOutcome offer_and_book(const PatientRequest& req, BookingState& state,
                            const CalendarConfig& cal, const IndexPolicyParams& policy,
                            RngEngine& rng) {
    policy.validate();
    CS_REQUIRE(req.call_day >= 0 && req.call_day < state.days(),
               "call day outside the booking state");
    CS_REQUIRE(req.desired_day >= req.call_day, "desired day must not precede the call day");
    CS_REQUIRE(req.type >= 0 && req.type < state.type_count(), "unknown patient type");
    CS_REQUIRE(cal.slots_per_day() == state.slots_per_day(),
               "calendar does not match the booking state");

    const int last_day = std::min(req.call_day + policy.booking_horizon, state.days() - 1);
    std::vector<Candidate> candidates;
    for (int day = req.desired_day; day <= last_day; ++day)
        for (int slot = 0; slot < state.slots_per_day(); ++slot) {
            if (!slot_matches_pref(req.pref, slot, cal)) continue;
            const int cap = state.remaining(day, slot, req.type);
            if (cap <= 0) continue;
            candidates.push_back(
                {compute_index(cap, req.desired_day, day, policy.beta), day, slot});
        }
    std::sort(candidates.begin(), candidates.end(), offer_before);

    OfferOutcome out;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (const Candidate& c : candidates) {
        ++out.offers_made;
        if (uniform(rng) > policy.acceptance_threshold) {
            state.book(c.day, c.slot, req.type);
            out.day = c.day;
            out.slot = c.slot;
            out.disposition =
                c.day == req.call_day ? Disposition::same_day : Disposition::booked;
            return out;
        }
    }
    out.disposition = Disposition::no_appointment;
    return out;
}

// --- cancellations ----------------------------------------------------------

std::optional<PlannedCancellation> plan_cancellation(long patient_id, int call_day,
                                                     int appointment_day, double rate,
                                                     std::uint64_t root_seed) {
    CS_REQUIRE(rate >= 0.0 && rate <= 1.0, "cancellation rate must be in [0,1]");
    CS_REQUIRE(appointment_day >= call_day, "appointment cannot precede the call");
    if (appointment_day == call_day) return std::nullopt;  // same-day: no lead to cancel in
    RngEngine rng =
        derive_engine(root_seed, "cancel-fate", {static_cast<std::uint64_t>(patient_id)});
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    if (uniform(rng) >= rate) return std::nullopt;
    PlannedCancellation plan;
    plan.patient_id = patient_id;
    plan.day = std::uniform_int_distribution<int>(call_day + 1, appointment_day)(rng);
    plan.by_clinic = uniform(rng) < 0.5;
    return plan;
}

std::vector<FreedSlot> process_cancellations(BookingState& state, BookingLog& log, int day,
                                             const std::vector<PlannedCancellation>& planned) {
    std::unordered_map<long, std::size_t> by_id;
    std::vector<FreedSlot> freed;
    for (const PlannedCancellation& plan : planned) {
        if (plan.day != day) continue;
        if (by_id.empty())
            for (std::size_t i = 0; i < log.records.size(); ++i)
                by_id.emplace(log.records[i].patient_id, i);
        const auto it = by_id.find(plan.patient_id);
        CS_REQUIRE(it != by_id.end(), "planned cancellation references an unknown patient");
        BookingRecord& r = log.records[it->second];
        if (r.disposition != Disposition::booked) continue;  // already resolved
        state.release(r.actual_day, r.slot, r.type);
        r.disposition = plan.by_clinic ? Disposition::canceled_by_clinic
                                       : Disposition::canceled_by_patient;
        r.cancel_day = day;
        freed.push_back({r.patient_id, r.actual_day, r.slot, r.type, plan.by_clinic});
    }
    return freed;
}

// --- horizon run ------------------------------------------------------------

TemplateSource TemplateSource::from_monthly(std::vector<WeeklyTemplate> templates) {
    CS_REQUIRE(!templates.empty(), "monthly template list must not be empty");
    TemplateSource s;
    s.kind = Kind::monthly_templates;
    s.monthly = std::move(templates);
    return s;
}

TemplateSource TemplateSource::fixed(const WeeklyTemplate& t) {
    return from_monthly({t});
}

TemplateSource TemplateSource::raw(int per_slot) {
    CS_REQUIRE(per_slot >= 0, "per-slot capacity must be >= 0");
    TemplateSource s;
    s.kind = Kind::raw_capacity;
    s.raw_per_slot = per_slot;
    return s;
}

HorizonResult run_horizon(const TemplateSource& source, const std::vector<PatientRequest>& stream,
                          const PatientTypeSet& types, const CalendarConfig& cal,
                          const FlowParams& flow, const IndexPolicyParams& policy,
                          int horizon_days, int warmup_days, std::uint64_t seed,
                          const MonthPlanner& planner) {
    cal.validate();
    flow.validate();
    policy.validate();
    CS_REQUIRE(horizon_days >= 1, "horizon must be >= 1 day");
    CS_REQUIRE(warmup_days >= 0 && warmup_days < horizon_days,
               "warmup must be shorter than the horizon");
    CS_REQUIRE(!planner || source.kind == TemplateSource::Kind::monthly_templates,
               "a month planner needs template-derived capacity");
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const PatientRequest& r = stream[i];
        CS_REQUIRE(r.call_day >= 0 && r.call_day < horizon_days,
                   "request call day outside the horizon");
        CS_REQUIRE(r.desired_day >= r.call_day, "desired day must not precede the call day");
        CS_REQUIRE(r.type >= 0 && r.type < types.size(), "unknown patient type in stream");
        CS_REQUIRE(i == 0 || stream[i - 1].call_day <= r.call_day,
                   "stream must be sorted by call day");
    }

    // Bookings may land up to booking_horizon days past the last call.
    const int state_days = horizon_days + policy.booking_horizon;
    BookingState state =
        source.kind == TemplateSource::Kind::raw_capacity
            ? BookingState::raw_capacity(cal, types.size(), state_days, source.raw_per_slot)
            : BookingState::from_monthly_templates(source.monthly, types, cal, state_days);

    HorizonResult result;
    result.warmup_days = warmup_days;
    result.outcomes.reserve(static_cast<std::size_t>(horizon_days));
    const int months = (horizon_days + cal.working_days_per_month - 1) / cal.working_days_per_month;
    if (source.kind == TemplateSource::Kind::monthly_templates) {
        result.templates_used.reserve(static_cast<std::size_t>(months));
        for (int m = 0; m < months; ++m)
            result.templates_used.push_back(
                source.monthly[std::min<std::size_t>(static_cast<std::size_t>(m),
                                                     source.monthly.size() - 1)]);
    }

    std::unordered_map<long, std::size_t> record_of;  // patient id -> log index
    std::vector<std::vector<PlannedCancellation>> cancels_by_day(
        static_cast<std::size_t>(horizon_days));
    // Occupants per (day < horizon, slot), in booking order (the within-slot rank).
    std::vector<std::vector<std::vector<long>>> occupants(
        static_cast<std::size_t>(horizon_days),
        std::vector<std::vector<long>>(static_cast<std::size_t>(cal.slots_per_day())));

    std::size_t next_call = 0;
    for (int day = 0; day < horizon_days; ++day) {
        // Month-start re-planning: re-derive capacity from this month onward.
        if (planner && day % cal.working_days_per_month == 0) {
            const int month = cal.month_of(day);
            const WeeklyTemplate tmpl = planner(month, state.floors_for_month(month, cal));
            state.retile_from_month(month, tmpl, types, cal);
            result.templates_used[static_cast<std::size_t>(month)] = tmpl;
        }

        // 1. Today's calls, in stream order.
        for (; next_call < stream.size() && stream[next_call].call_day == day; ++next_call) {
            const PatientRequest& req = stream[next_call];
            RngEngine rng =
                derive_engine(seed, "offer", {static_cast<std::uint64_t>(req.id)});
            const OfferOutcome offer = offer_and_book(req, state, cal, policy, rng);
            result.total_offers += offer.offers_made;

            BookingRecord rec;
            rec.patient_id = req.id;
            rec.type = req.type;
            rec.call_day = req.call_day;
            rec.desired_day = req.desired_day;
            rec.actual_day = offer.day;
            rec.slot = offer.slot;
            rec.disposition = offer.disposition;
            CS_REQUIRE(record_of.emplace(req.id, result.log.records.size()).second,
                       "duplicate patient id in the request stream");
            result.log.records.push_back(rec);

            if (offer.disposition == Disposition::no_appointment) continue;
            if (offer.day < horizon_days)
                occupants[static_cast<std::size_t>(offer.day)]
                         [static_cast<std::size_t>(offer.slot)]
                             .push_back(req.id);
            if (const auto plan = plan_cancellation(req.id, day, offer.day,
                                                    policy.cancellation_rate, seed);
                plan && plan->day < horizon_days)
                cancels_by_day[static_cast<std::size_t>(plan->day)].push_back(*plan);
        }

        // 2. Cancellations landing today (an appointment canceled on its own
        //    day disappears before the clinic day runs).
        for (const FreedSlot& f :
             process_cancellations(state, result.log, day, cancels_by_day[day])) {
            if (f.day >= horizon_days) continue;
            auto& slot = occupants[static_cast<std::size_t>(f.day)][static_cast<std::size_t>(f.slot)];
            const auto pos = std::find(slot.begin(), slot.end(), f.patient_id);
            CS_REQUIRE(pos != slot.end(), "canceled booking missing from its slot");
            slot.erase(pos);
        }

        // 3. Simulate the realized day and resolve its patients.
        DaySchedule schedule(cal.slots_per_day());
        for (int slot = 0; slot < cal.slots_per_day(); ++slot)
            for (long id : occupants[static_cast<std::size_t>(day)][static_cast<std::size_t>(slot)]) {
                const BookingRecord& rec = result.log.records[record_of.at(id)];
                schedule.slots[static_cast<std::size_t>(slot)].push_back(
                    {rec.type, day - rec.call_day, id});
            }
        DayOutcome outcome = simulate_day(schedule, flow, types, cal,
                                          derive_seed(seed, "clinic-day",
                                                      {static_cast<std::uint64_t>(day)}));
        for (const PatientOutcome& po : outcome.patients) {
            BookingRecord& rec = result.log.records[record_of.at(po.patient_id)];
            rec.disposition = po.showed ? Disposition::served : Disposition::no_show;
        }
        result.outcomes.push_back(std::move(outcome));
    }
    return result;
}

}  // namespace clinicsched
