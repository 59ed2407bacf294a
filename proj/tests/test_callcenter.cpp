#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

#include "clinicsched/callcenter.hpp"
#include "clinicsched/errors.hpp"
#include "doctest.h"

using namespace clinicsched;

namespace {

PatientTypeSet one_type(double no_show = 0.0) {
    PatientTypeSpec t;
    t.id = 0;
    t.label = "only";
    t.complexity = 0.5;
    t.no_show_prob = no_show;
    t.weight = 1.0;
    t.nurse = {10.0, 0.0};
    t.provider = {20.0, 0.0};
    t.mix_fraction = 1.0;
    return PatientTypeSet{{t}};
}

CalendarConfig one_slot_calendar(int days_per_week, int working_days_per_month = 20) {
    CalendarConfig cal;
    cal.days_per_week = days_per_week;
    cal.sessions_per_day = 1;
    cal.slots_per_session = 1;
    cal.slot_minutes = 60;
    cal.day_start = 480;
    cal.day_end = 540;
    cal.working_days_per_month = working_days_per_month;
    return cal;
}

WeeklyTemplate uniform_template(const PatientTypeSet& types, const CalendarConfig& cal,
                                int count_per_cell, int month = 0) {
    WeeklyTemplate t(month, types, cal);
    for (int r = 0; r < types.size(); ++r)
        for (int a = 0; a < cal.slots_per_week(); ++a) t.counts.at(r, a) = count_per_cell;
    return t;
}

PatientRequest request(long id, int type, int call, int desired, TimePref pref = TimePref::none) {
    PatientRequest r;
    r.id = id;
    r.type = type;
    r.call_day = call;
    r.desired_day = desired;
    r.pref = pref;
    return r;
}

std::string log_text(const BookingLog& log) {
    std::ostringstream out;
    write_booking_log(log, out);
    return out.str();
}

}  // namespace

TEST_CASE("index: beta 0 returns the remaining capacity exactly") {
    for (int c : {0, 1, 2, 5, 40})
        CHECK(compute_index(c, 10, 17, 0.0) == static_cast<double>(c));
}

TEST_CASE("index: worked two-day-late example") {
    CHECK(compute_index(2.0, 12, 14, 0.5) == doctest::Approx(0.7357588823428847).epsilon(1e-12));
}

TEST_CASE("index: a slot on the desired day scores its capacity for any beta") {
    for (double beta : {0.0, 0.3, 2.0})
        CHECK(compute_index(3.0, 9, 9, beta) == 3.0);
}

TEST_CASE("index: negative capacity is rejected") {
    CHECK_THROWS_AS(compute_index(-1.0, 0, 0, 0.0), ContractViolation);
}

TEST_CASE("policy parameters validate their ranges") {
    IndexPolicyParams ok;
    ok.validate();
    IndexPolicyParams p = ok;
    p.beta = -0.1;
    CHECK_THROWS_AS(p.validate(), ContractViolation);
    p = ok;
    p.acceptance_threshold = 1.0;
    CHECK_THROWS_AS(p.validate(), ContractViolation);
    p = ok;
    p.booking_horizon = 0;
    CHECK_THROWS_AS(p.validate(), ContractViolation);
    p = ok;
    p.cancellation_rate = 1.5;
    CHECK_THROWS_AS(p.validate(), ContractViolation);
}

TEST_CASE("booking state: template tiling, booking and release") {
    const auto types = one_type();
    const auto cal = one_slot_calendar(5, 5);  // one-week months
    auto a = uniform_template(types, cal, 1);
    auto b = uniform_template(types, cal, 2);
    auto state = BookingState::from_monthly_templates({a, b}, types, cal, 15);

    CHECK(state.typed());
    CHECK(state.days() == 15);
    CHECK(state.remaining(0, 0, 0) == 1);   // month 0 -> template a
    CHECK(state.remaining(5, 0, 0) == 2);   // month 1 -> template b
    CHECK(state.remaining(12, 0, 0) == 2);  // past the list -> last template extends

    state.book(5, 0, 0);
    CHECK(state.remaining(5, 0, 0) == 1);
    CHECK(state.booked(5, 0, 0) == 1);
    state.book(5, 0, 0);
    CHECK(state.remaining(5, 0, 0) == 0);
    CHECK_THROWS_AS(state.book(5, 0, 0), ContractViolation);
    state.release(5, 0, 0);
    CHECK(state.remaining(5, 0, 0) == 1);
    CHECK_THROWS_AS(state.release(0, 0, 0), ContractViolation);
    CHECK(state.total_booked() == 1);
}

TEST_CASE("booking state: raw capacity pools every type into one count") {
    CalendarConfig cal;  // default 2x4 day
    auto state = BookingState::raw_capacity(cal, 3, 10, 2);
    CHECK(!state.typed());
    for (int r = 0; r < 3; ++r) CHECK(state.remaining(4, 5, r) == 2);
    state.book(4, 5, 0);
    for (int r = 0; r < 3; ++r) CHECK(state.remaining(4, 5, r) == 1);
    state.book(4, 5, 2);
    for (int r = 0; r < 3; ++r) CHECK(state.remaining(4, 5, r) == 0);
    CHECK_THROWS_AS(state.book(4, 5, 1), ContractViolation);
    CHECK(state.booked(4, 5, 0) == 1);
    CHECK(state.booked(4, 5, 2) == 1);
}

TEST_CASE("booking state: month floors track the busiest week and retiling keeps bookings") {
    const auto types = one_type();
    const auto cal = one_slot_calendar(5, 10);  // two-week months
    auto state = BookingState::from_monthly_templates({uniform_template(types, cal, 3)}, types,
                                                      cal, 20);
    state.book(1, 0, 0);  // month 0, week 0, weekday 1
    state.book(6, 0, 0);  // month 0, week 1, weekday 1
    state.book(6, 0, 0);
    state.book(12, 0, 0);  // month 1

    const CommitmentFloor floor = state.floors_for_month(0, cal);
    CHECK(floor.floors.at(0, 1) == 2);  // max over the two weeks
    CHECK(floor.floors.at(0, 0) == 0);
    CHECK(state.floors_for_month(1, cal).floors.at(0, 2) == 1);

    // Retile months >= 1 onto a tighter template: capacity clamps at bookings.
    state.retile_from_month(1, uniform_template(types, cal, 0), types, cal);
    CHECK(state.remaining(12, 0, 0) == 0);
    CHECK(state.booked(12, 0, 0) == 1);
    CHECK(state.remaining(13, 0, 0) == 0);
    CHECK(state.remaining(6, 0, 0) == 1);  // month 0 untouched
}

TEST_CASE("offer: no open slot in the window turns the patient away") {
    CalendarConfig cal;
    auto state = BookingState::raw_capacity(cal, 1, 30, 0);
    IndexPolicyParams policy;
    RngEngine rng(1);
    const auto out = offer_and_book(request(0, 0, 2, 4), state, cal, policy, rng);
    CHECK(out.disposition == Disposition::no_appointment);
    CHECK(out.day == -1);
    CHECK(out.offers_made == 0);
}

TEST_CASE("offer: an open desired-day slot books with zero indirect wait") {
    CalendarConfig cal;
    auto state = BookingState::raw_capacity(cal, 1, 30, 1);
    IndexPolicyParams policy;
    policy.acceptance_threshold = 0.0;  // every offer accepted
    RngEngine rng(7);

    const auto booked = offer_and_book(request(0, 0, 3, 6), state, cal, policy, rng);
    CHECK(booked.disposition == Disposition::booked);
    CHECK(booked.day == 6);

    const auto same = offer_and_book(request(1, 0, 5, 5), state, cal, policy, rng);
    CHECK(same.disposition == Disposition::same_day);
    CHECK(same.day == 5);
}

TEST_CASE("offer: perishability flips the ranking of a near scarce slot and a far rich one") {
    const auto cal = one_slot_calendar(5);
    auto shape_state = [&cal]() {
        auto state = BookingState::raw_capacity(cal, 1, 10, 3);
        state.book(2, 0, 0);  // desired day: one seat left
        state.book(2, 0, 0);
        for (int d : {3, 4}) {  // nothing between the two candidates
            state.book(d, 0, 0);
            state.book(d, 0, 0);
            state.book(d, 0, 0);
        }
        for (int d = 6; d < 10; ++d) {  // nothing past the far candidate
            state.book(d, 0, 0);
            state.book(d, 0, 0);
            state.book(d, 0, 0);
        }
        return state;
    };
    IndexPolicyParams policy;
    policy.acceptance_threshold = 0.0;
    policy.booking_horizon = 3;

    auto greedy = shape_state();
    policy.beta = 0.0;  // indices 1 vs 3: rich slot first
    RngEngine rng1(3);
    CHECK(offer_and_book(request(0, 0, 2, 2), greedy, cal, policy, rng1).day == 5);

    auto perishable = shape_state();
    policy.beta = 1.0;  // indices 1 vs 3*exp(-3) = 0.14936...: near slot first
    RngEngine rng2(3);
    CHECK(offer_and_book(request(0, 0, 2, 2), perishable, cal, policy, rng2).day == 2);
}

TEST_CASE("offer: equal indices break toward the earlier day, then the earlier slot") {
    CalendarConfig cal;
    auto state = BookingState::raw_capacity(cal, 1, 30, 1);  // all capacities equal
    IndexPolicyParams policy;
    policy.acceptance_threshold = 0.0;
    RngEngine rng(5);
    const auto out = offer_and_book(request(0, 0, 1, 4), state, cal, policy, rng);
    CHECK(out.day == 4);
    CHECK(out.slot == 0);
}

TEST_CASE("offer: session preferences filter the candidates") {
    CalendarConfig cal;  // 2 sessions x 4 slots
    auto state = BookingState::raw_capacity(cal, 1, 30, 1);
    IndexPolicyParams policy;
    policy.acceptance_threshold = 0.0;
    RngEngine rng(9);

    const auto morning = offer_and_book(request(0, 0, 2, 2, TimePref::morning), state, cal,
                                        policy, rng);
    CHECK(cal.session_of(morning.slot) == 0);
    const auto afternoon = offer_and_book(request(1, 0, 2, 2, TimePref::afternoon), state, cal,
                                          policy, rng);
    CHECK(cal.session_of(afternoon.slot) == 1);

    // Fill every morning slot of the whole window: a morning-only patient is out.
    for (int d = 5; d < 30; ++d)
        for (int s = 0; s < 4; ++s)
            if (state.remaining(d, s, 0) > 0) state.book(d, s, 0);
    for (int s = 0; s < 4; ++s)
        if (state.remaining(2, s, 0) > 0) state.book(2, s, 0);
    for (int d = 3; d < 5; ++d)
        for (int s = 0; s < 4; ++s)
            if (state.remaining(d, s, 0) > 0) state.book(d, s, 0);
    const auto denied = offer_and_book(request(2, 0, 2, 2, TimePref::morning), state, cal,
                                       policy, rng);
    CHECK(denied.disposition == Disposition::no_appointment);
}

TEST_CASE("offer: every candidate is offered at most once before refusal") {
    const auto cal = one_slot_calendar(5);
    auto state = BookingState::raw_capacity(cal, 1, 10, 1);
    IndexPolicyParams policy;
    policy.acceptance_threshold = 0.999999;  // refuse almost surely
    policy.booking_horizon = 3;
    RngEngine rng(4242);
    const auto out = offer_and_book(request(0, 0, 0, 0), state, cal, policy, rng);
    CHECK(out.disposition == Disposition::no_appointment);
    CHECK(out.offers_made == 4);  // days 0..3, one slot each, no re-offers
    for (int d = 0; d < 4; ++d) CHECK(state.remaining(d, 0, 0) == 1);
}

TEST_CASE("cancellation fates: zero rate never cancels, rate one always does") {
    for (long id = 0; id < 100; ++id) {
        CHECK(!plan_cancellation(id, 3, 9, 0.0, 11).has_value());
        const auto plan = plan_cancellation(id, 3, 9, 1.0, 11);
        REQUIRE(plan.has_value());
        CHECK(plan->patient_id == id);
        CHECK(plan->day >= 4);
        CHECK(plan->day <= 9);
        CHECK(!plan_cancellation(id, 5, 5, 1.0, 11).has_value());  // same-day: no lead
    }
}

TEST_CASE("cancellation fates: empirical rate and initiator split match the configuration") {
    const int n = 10000;
    int canceled = 0, by_clinic = 0;
    for (long id = 0; id < n; ++id)
        if (const auto plan = plan_cancellation(id, 0, 10, 0.17, 777)) {
            ++canceled;
            by_clinic += plan->by_clinic ? 1 : 0;
            CHECK(plan->day >= 1);
            CHECK(plan->day <= 10);
        }
    const double rate = static_cast<double>(canceled) / n;
    CHECK(rate > 0.16);
    CHECK(rate < 0.18);
    const double clinic_share = static_cast<double>(by_clinic) / canceled;
    CHECK(clinic_share > 0.45);
    CHECK(clinic_share < 0.55);
}

TEST_CASE("process_cancellations frees the slot and flips the record") {
    const auto types = one_type();
    const auto cal = one_slot_calendar(5);
    auto state = BookingState::from_monthly_templates({uniform_template(types, cal, 2)}, types,
                                                      cal, 10);
    BookingLog log;
    BookingRecord a;
    a.patient_id = 10;
    a.call_day = 0;
    a.desired_day = 4;
    a.actual_day = 4;
    a.slot = 0;
    a.disposition = Disposition::booked;
    BookingRecord b = a;
    b.patient_id = 11;
    log.records = {a, b};
    state.book(4, 0, 0);
    state.book(4, 0, 0);

    std::vector<PlannedCancellation> plans{{10, 2, false}, {11, 3, true}};
    const auto freed_today = process_cancellations(state, log, 2, plans);
    REQUIRE(freed_today.size() == 1);
    CHECK(freed_today[0].patient_id == 10);
    CHECK(freed_today[0].day == 4);
    CHECK(!freed_today[0].by_clinic);
    CHECK(log.records[0].disposition == Disposition::canceled_by_patient);
    CHECK(log.records[0].cancel_day == 2);
    CHECK(state.remaining(4, 0, 0) == 1);

    // A record already resolved is skipped; an unknown id is a contract breach.
    log.records[1].disposition = Disposition::served;
    CHECK(process_cancellations(state, log, 3, plans).empty());
    std::vector<PlannedCancellation> stranger{{99, 2, false}};
    CHECK_THROWS_AS(process_cancellations(state, log, 2, stranger), ContractViolation);
}

TEST_CASE("booking log round-trips through its text form") {
    BookingLog log;
    int day = 0;
    for (Disposition d : {Disposition::booked, Disposition::same_day, Disposition::no_appointment,
                          Disposition::canceled_by_patient, Disposition::canceled_by_clinic,
                          Disposition::no_show, Disposition::served}) {
        BookingRecord r;
        r.patient_id = day;
        r.type = day % 3;
        r.call_day = day;
        r.desired_day = day + 1;
        r.actual_day = d == Disposition::no_appointment ? -1 : day + 2;
        r.slot = d == Disposition::no_appointment ? -1 : day % 8;
        r.cancel_day = (d == Disposition::canceled_by_patient ||
                        d == Disposition::canceled_by_clinic)
                           ? day + 1
                           : -1;
        r.disposition = d;
        log.records.push_back(r);
        ++day;
    }
    const std::string text = log_text(log);
    std::istringstream in(text);
    const BookingLog back = read_booking_log(in);
    CHECK(log_text(back) == text);
    CHECK(back.records.size() == log.records.size());
    CHECK(back.count(Disposition::served) == 1);

    std::istringstream junk("not a header\n");
    CHECK_THROWS_AS(read_booking_log(junk), ParseError);
}

TEST_CASE("run_horizon: an empty stream yields an empty log and idle days") {
    const auto types = one_type();
    const auto cal = one_slot_calendar(5);
    const auto source = TemplateSource::fixed(uniform_template(types, cal, 1));
    const auto res = run_horizon(source, {}, types, cal, FlowParams{}, IndexPolicyParams{}, 7, 0,
                                 123);
    CHECK(res.log.records.empty());
    REQUIRE(res.outcomes.size() == 7);
    for (const auto& day : res.outcomes) {
        CHECK(day.patients.empty());
        CHECK(day.shows == 0);
    }
    CHECK(res.total_offers == 0);
}

TEST_CASE("run_horizon: a lone request with ample capacity is served on its desired day") {
    const auto types = one_type(0.0);  // never no-shows
    const auto cal = one_slot_calendar(5);
    const auto source = TemplateSource::fixed(uniform_template(types, cal, 1));
    IndexPolicyParams policy;
    policy.acceptance_threshold = 0.0;
    policy.cancellation_rate = 0.0;
    const auto res = run_horizon(source, {request(0, 0, 1, 3)}, types, cal, FlowParams{}, policy,
                                 8, 0, 5);
    REQUIRE(res.log.records.size() == 1);
    const BookingRecord& rec = res.log.records[0];
    CHECK(rec.disposition == Disposition::served);
    CHECK(rec.actual_day == 3);
    CHECK(rec.indirect_wait() == 0);
    CHECK(res.outcomes[3].shows == 1);
    CHECK(res.outcomes[3].patients.at(0).patient_id == 0);
}

TEST_CASE("run_horizon: one seed, one result") {
    const auto types = make_default_types();
    const CalendarConfig cal{};
    const auto demand = make_default_demand_params(types, cal);
    const auto stream = generate_call_stream(demand, 30, 99);
    REQUIRE(!stream.empty());
    const auto source =
        TemplateSource::fixed(make_spt_template(types, cal, ComplexityBudget{}));

    const auto a = run_horizon(source, stream, types, cal, FlowParams{}, IndexPolicyParams{}, 30,
                               5, 2024);
    const auto b = run_horizon(source, stream, types, cal, FlowParams{}, IndexPolicyParams{}, 30,
                               5, 2024);
    CHECK(log_text(a.log) == log_text(b.log));
    CHECK(a.total_offers == b.total_offers);
    REQUIRE(a.outcomes.size() == b.outcomes.size());
    for (std::size_t d = 0; d < a.outcomes.size(); ++d) {
        CHECK(a.outcomes[d].shows == b.outcomes[d].shows);
        CHECK(a.outcomes[d].mean_direct_wait() == b.outcomes[d].mean_direct_wait());
    }
}

TEST_CASE("run_horizon: dispositions partition the stream and respect the day arithmetic") {
    const auto types = make_default_types();
    const CalendarConfig cal{};
    const auto demand = make_default_demand_params(types, cal);
    const auto stream = generate_call_stream(demand, 40, 17);
    const auto source =
        TemplateSource::fixed(make_spt_template(types, cal, ComplexityBudget{}));
    const auto res = run_horizon(source, stream, types, cal, FlowParams{}, IndexPolicyParams{},
                                 40, 0, 31);

    REQUIRE(res.log.records.size() == stream.size());
    long sum = 0;
    for (Disposition d : {Disposition::booked, Disposition::same_day, Disposition::no_appointment,
                          Disposition::canceled_by_patient, Disposition::canceled_by_clinic,
                          Disposition::no_show, Disposition::served})
        sum += res.log.count(d);
    CHECK(sum == static_cast<long>(res.log.records.size()));

    for (const BookingRecord& r : res.log.records) {
        switch (r.disposition) {
            case Disposition::no_appointment:
                CHECK(r.actual_day == -1);
                break;
            case Disposition::booked:  // pending: the run ended first
                CHECK(r.actual_day >= 40);
                break;
            case Disposition::same_day:  // same-day bookings always get simulated
                CHECK(false);
                break;
            case Disposition::canceled_by_patient:
            case Disposition::canceled_by_clinic:
                CHECK(r.cancel_day > r.call_day);
                CHECK(r.cancel_day <= r.actual_day);
                break;
            case Disposition::no_show:
            case Disposition::served:
                CHECK(r.actual_day < 40);
                break;
        }
        if (r.got_appointment()) {
            CHECK(r.actual_day >= r.desired_day);
            CHECK(r.indirect_wait() >= 0);
        }
    }
    CHECK(res.log.count(Disposition::served) > 0);
    CHECK(res.log.count(Disposition::no_show) > 0);
}

TEST_CASE("run_horizon: bookings never exceed the template capacity anywhere") {
    const auto types = make_default_types();
    const CalendarConfig cal{};
    const auto demand = make_default_demand_params(types, cal);
    const auto stream = generate_call_stream(demand, 25, 3);
    const auto spt = make_spt_template(types, cal, ComplexityBudget{});
    const auto res = run_horizon(TemplateSource::fixed(spt), stream, types, cal, FlowParams{},
                                 IndexPolicyParams{}, 25, 0, 8);

    std::map<std::tuple<int, int, int>, int> held;  // (day, slot, type) -> live bookings
    for (const BookingRecord& r : res.log.records) {
        if (!r.got_appointment()) continue;
        if (r.disposition == Disposition::canceled_by_patient ||
            r.disposition == Disposition::canceled_by_clinic)
            continue;
        ++held[{r.actual_day, r.slot, r.type}];
    }
    for (const auto& [key, count] : held) {
        const auto [day, slot, type] = key;
        const int cap = spt.counts.at(type, cal.weekday_of(day) * cal.slots_per_day() + slot);
        CHECK(count <= cap);
    }
}

TEST_CASE("run_horizon: the month planner sees booking floors and installs its template") {
    const auto types = one_type(0.0);
    const auto cal = one_slot_calendar(5, 5);  // one-week months
    const auto base = uniform_template(types, cal, 2);
    IndexPolicyParams policy;
    policy.acceptance_threshold = 0.0;
    policy.cancellation_rate = 0.0;
    policy.booking_horizon = 10;

    // Four calls on day 0 all want day 6 (month 1). Capacity-greedy offers
    // spread them over days 6..9: once a day holds a booking, its index (1)
    // loses to the next untouched day (2).
    std::vector<PatientRequest> stream;
    for (long id = 0; id < 4; ++id) stream.push_back(request(id, 0, 0, 6));

    std::vector<int> seen_months;
    std::vector<CommitmentFloor> seen_floors;
    MonthPlanner planner = [&](int month, const CommitmentFloor& floors) {
        seen_months.push_back(month);
        seen_floors.push_back(floors);
        return base;
    };
    const auto res = run_horizon(TemplateSource::fixed(base), stream, types, cal, FlowParams{},
                                 policy, 15, 0, 77, planner);

    CHECK(seen_months == std::vector<int>{0, 1, 2});
    CHECK(seen_floors[0].floors.at(0, 1) == 0);  // nothing booked before day 0
    for (int weekday : {1, 2, 3, 4})             // days 6..9 hold one booking each
        CHECK(seen_floors[1].floors.at(0, weekday) == 1);
    REQUIRE(res.templates_used.size() == 3);
    CHECK(res.templates_used[1] == base);
    CHECK(res.log.count(Disposition::served) == 4);

    // A planner that re-installs the source template changes nothing.
    const auto plain = run_horizon(TemplateSource::fixed(base), stream, types, cal, FlowParams{},
                                   policy, 15, 0, 77);
    CHECK(log_text(plain.log) == log_text(res.log));
}

TEST_CASE("run_horizon: contract checks reject malformed inputs") {
    const auto types = one_type();
    const auto cal = one_slot_calendar(5);
    const auto source = TemplateSource::fixed(uniform_template(types, cal, 1));
    CHECK_THROWS_AS(run_horizon(source, {}, types, cal, FlowParams{}, IndexPolicyParams{}, 10, 10,
                                1),
                    ContractViolation);  // warmup not shorter than horizon
    CHECK_THROWS_AS(run_horizon(source, {request(0, 0, 12, 12)}, types, cal, FlowParams{},
                                IndexPolicyParams{}, 10, 0, 1),
                    ContractViolation);  // call outside the horizon
    std::vector<PatientRequest> unsorted{request(0, 0, 5, 5), request(1, 0, 2, 2)};
    CHECK_THROWS_AS(run_horizon(source, unsorted, types, cal, FlowParams{}, IndexPolicyParams{},
                                10, 0, 1),
                    ContractViolation);
    MonthPlanner planner = [&](int, const CommitmentFloor&) { return uniform_template(types, cal, 1); };
    CHECK_THROWS_AS(run_horizon(TemplateSource::raw(1), {}, types, cal, FlowParams{},
                                IndexPolicyParams{}, 10, 0, 1, planner),
                    ContractViolation);  // planner needs template capacity
}
