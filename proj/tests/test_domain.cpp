#include <sstream>

#include "clinicsched/random.hpp"
#include "clinicsched/weekly_template.hpp"
#include "doctest.h"

using namespace clinicsched;

namespace {

WeeklyTemplate empty_template(const PatientTypeSet& types, const CalendarConfig& cal) {
    return WeeklyTemplate(0, types, cal);
}

// Builds a template from per-weekday slot patterns given as label lists.
WeeklyTemplate template_from_day(const std::vector<std::vector<std::string>>& day_pattern,
                                 int weekday, const PatientTypeSet& types,
                                 const CalendarConfig& cal) {
    WeeklyTemplate t(0, types, cal);
    REQUIRE(static_cast<int>(day_pattern.size()) == cal.slots_per_day());
    for (int s = 0; s < cal.slots_per_day(); ++s)
        for (const auto& label : day_pattern[static_cast<std::size_t>(s)]) {
            const int r = types.index_of(label);
            REQUIRE(r >= 0);
            ++t.counts.at(r, cal.weekly_slot(weekday, s));
        }
    return t;
}

}  // namespace

TEST_CASE("calendar defaults validate and expose the 2x4 hour grid") {
    CalendarConfig cal;
    cal.validate();
    CHECK(cal.slots_per_day() == 8);
    CHECK(cal.slots_per_week() == 40);
    CHECK(cal.weekday_of(0) == 0);
    CHECK(cal.weekday_of(7) == 2);
    CHECK(cal.week_of(11) == 2);
    CHECK(cal.month_of(19) == 0);
    CHECK(cal.month_of(20) == 1);
    CHECK(cal.session_of(3) == 0);
    CHECK(cal.session_of(4) == 1);
    CHECK(cal.slot_start(0) == 8 * 60);
    CHECK(cal.slot_start(3) == 11 * 60);
    CHECK(cal.slot_start(4) == 13 * 60);
    CHECK(cal.slot_start(7) == 16 * 60);
    CHECK(cal.session_open(0) == 8 * 60);
    CHECK(cal.session_open(1) == 13 * 60);
}

TEST_CASE("calendar rejects inconsistent session geometry") {
    CalendarConfig cal;
    cal.slot_minutes = 45;  // 4 x 45 != 240-minute session
    CHECK_THROWS_AS(cal.validate(), ContractViolation);

    CalendarConfig flat;
    flat.sessions_per_day = 1;
    flat.slots_per_session = 9;
    flat.day_end = flat.day_start + 9 * 60;
    flat.validate();
    CHECK(flat.slots_per_day() == 9);
}

TEST_CASE("patient type set validation") {
    auto types = make_default_types();
    CHECK(types.size() == 3);
    CHECK(types.index_of("chronic") == 1);
    CHECK(types.index_of("unknown") == -1);
    CHECK(types[2].complexity == doctest::Approx(0.36));

    auto bad = types.all();
    bad[0].mix_fraction = 0.5;  // breaks the sum-to-1 invariant
    CHECK_THROWS_AS(PatientTypeSet{bad}, ContractViolation);

    auto swapped = types.all();
    std::swap(swapped[0].id, swapped[1].id);
    CHECK_THROWS_AS(PatientTypeSet{swapped}, ContractViolation);

    auto degenerate = types.all();
    degenerate[0].nurse.sd_minutes = 0.0;  // point-mass service time is allowed
    CHECK_NOTHROW(PatientTypeSet{degenerate});
}

TEST_CASE("slot complexity formula") {
    auto types = make_default_types();
    CHECK(slot_complexity({3, 0, 0}, types) == doctest::Approx(0.87));
    CHECK(slot_complexity({0, 0, 0}, types) == doctest::Approx(0.0));
    CHECK(slot_complexity({1, 1, 1}, types) == doctest::Approx(0.97));
    CHECK_THROWS_AS(slot_complexity({1, 1}, types), ContractViolation);
    CHECK_THROWS_AS(slot_complexity({-1, 1, 1}, types), ContractViolation);
}

TEST_CASE("validate_template flags slot and session budget breaches") {
    auto types = make_default_types();
    CalendarConfig cal;
    ComplexityBudget budget;

    SUBCASE("all-zero template is feasible") {
        auto report = validate_template(empty_template(types, cal), types, cal, budget);
        CHECK(report.feasible());
    }

    SUBCASE("one patient of each type in a slot breaks kappa=0.96") {
        auto t = empty_template(types, cal);
        for (int r = 0; r < 3; ++r) t.counts.at(r, cal.weekly_slot(0, 0)) = 1;
        auto report = validate_template(t, types, cal, budget);
        REQUIRE(report.violations.size() == 1);
        CHECK(report.violations[0].kind == Violation::Kind::slot_budget);
        CHECK(report.violations[0].weekday == 0);
        CHECK(report.violations[0].slot_in_day == 0);
        CHECK(report.violations[0].value == doctest::Approx(0.97));
    }

    SUBCASE("three chronic per slot fits kappa exactly but four such slots break eta") {
        auto t = empty_template(types, cal);
        for (int s = 0; s < 4; ++s) t.counts.at(1, cal.weekly_slot(2, s)) = 3;
        auto report = validate_template(t, types, cal, budget);
        REQUIRE(report.violations.size() == 1);
        CHECK(report.violations[0].kind == Violation::Kind::session_budget);
        CHECK(report.violations[0].weekday == 2);
        CHECK(report.violations[0].session == 0);
        CHECK(report.violations[0].value == doctest::Approx(3.84));
    }

    SUBCASE("floor breaches are located precisely") {
        auto t = empty_template(types, cal);
        CommitmentFloor floor{CountMatrix(types.size(), cal.slots_per_week())};
        floor.floors.at(1, cal.weekly_slot(4, 7)) = 2;
        CHECK(validate_floor(floor, types, cal, budget).feasible());
        auto report = validate_template(t, types, cal, budget, &floor);
        REQUIRE(report.violations.size() == 1);
        CHECK(report.violations[0].kind == Violation::Kind::floor_breach);
        CHECK(report.violations[0].weekday == 4);
        CHECK(report.violations[0].slot_in_day == 7);
        CHECK(report.violations[0].type == 1);
    }

    SUBCASE("forbidden day configurations match only exactly") {
        auto t = empty_template(types, cal);
        t.counts.at(0, cal.weekly_slot(1, 0)) = 2;
        ForbiddenDayConfig g{1, day_configuration(t, 1, cal)};
        auto report = validate_template(t, types, cal, budget, nullptr, {g});
        REQUIRE(report.violations.size() == 1);
        CHECK(report.violations[0].kind == Violation::Kind::forbidden_day);

        t.counts.at(0, cal.weekly_slot(1, 1)) = 1;  // any difference unmatches the ban
        CHECK(validate_template(t, types, cal, budget, nullptr, {g}).feasible());
    }
}

TEST_CASE("validate_template agrees with a naive checker on random templates") {
    auto types = make_default_types();
    CalendarConfig cal;
    ComplexityBudget budget;
    std::uint64_t state = 42;
    auto next = [&state] { return clinicsched::splitmix64(state); };

    for (int trial = 0; trial < 300; ++trial) {
        auto t = empty_template(types, cal);
        for (int r = 0; r < types.size(); ++r)
            for (int a = 0; a < cal.slots_per_week(); ++a)
                t.counts.at(r, a) = static_cast<int>(next() % 4);

        bool naive_ok = true;
        for (int wd = 0; wd < cal.days_per_week && naive_ok; ++wd) {
            for (int sess = 0; sess < 2 && naive_ok; ++sess) {
                double session = 0.0;
                for (int k = 0; k < 4; ++k) {
                    double slot = 0.0;
                    for (int r = 0; r < 3; ++r)
                        slot += types[r].complexity *
                                t.counts.at(r, cal.weekly_slot(wd, sess * 4 + k));
                    if (slot > budget.kappa + 1e-9) naive_ok = false;
                    session += slot;
                }
                if (session > budget.eta + 1e-9) naive_ok = false;
            }
        }
        CHECK(validate_template(t, types, cal, budget).feasible() == naive_ok);
    }
}

TEST_CASE("daily_capacity sums a weekday's slots for one type") {
    auto types = make_default_types();
    CalendarConfig cal;
    auto t = empty_template(types, cal);
    t.counts.at(0, cal.weekly_slot(0, 2)) = 2;

    CHECK(daily_capacity(t, 0, 0, cal) == 2);   // Monday, acute
    CHECK(daily_capacity(t, 1, 0, cal) == 0);   // Monday, chronic
    CHECK(daily_capacity(t, 0, 5, cal) == 2);   // next Monday
    CHECK(daily_capacity(t, 0, 1, cal) == 0);   // Tuesday
    CHECK_THROWS_AS(daily_capacity(t, 0, -1, cal), ContractViolation);
}

TEST_CASE("daily_capacity on a published-style Monday column") {
    auto types = make_default_types();
    CalendarConfig cal;
    // Monday column: C,C | A,A | A,A | A,C,C | A,P | A,C | A,P | A,A,A
    auto t = template_from_day(
        {{"chronic", "chronic"},
         {"acute", "acute"},
         {"acute", "acute"},
         {"acute", "chronic", "chronic"},
         {"acute", "preventive"},
         {"acute", "chronic"},
         {"acute", "preventive"},
         {"acute", "acute", "acute"}},
        0, types, cal);
    CHECK(daily_capacity(t, types.index_of("acute"), 0, cal) == 11);
    CHECK(daily_capacity(t, types.index_of("chronic"), 0, cal) == 5);
    CHECK(daily_capacity(t, types.index_of("preventive"), 0, cal) == 2);

    // Total across types and weekdays equals the template's total count.
    int total = 0;
    for (int r = 0; r < types.size(); ++r)
        for (int wd = 0; wd < cal.days_per_week; ++wd) total += daily_capacity(t, r, wd, cal);
    CHECK(total == weekly_capacity(t));
}

TEST_CASE("template round-trips losslessly through the text format") {
    auto types = make_default_types();
    CalendarConfig cal;
    WeeklyTemplate t(7, types, cal);
    std::uint64_t state = 99;
    for (int r = 0; r < types.size(); ++r)
        for (int a = 0; a < cal.slots_per_week(); ++a)
            t.counts.at(r, a) = static_cast<int>(clinicsched::splitmix64(state) % 3);

    const std::string text = template_to_text(t, types, cal);
    std::istringstream in(text);
    auto back = read_template(in, types, cal);
    CHECK(back == t);
    CHECK(template_to_text(back, types, cal) == text);

    SUBCASE("malformed input is rejected") {
        std::istringstream bad1("nonsense\n");
        CHECK_THROWS_AS(read_template(bad1, types, cal), ParseError);
        std::istringstream bad2("template v1\nmonth 0\n0 0 0 acute 1\n");
        CHECK_THROWS_AS(read_template(bad2, types, cal), ParseError);  // missing cells
        std::string dup = text + "0 0 0 acute 1\n";
        std::istringstream bad3(dup);
        CHECK_THROWS_AS(read_template(bad3, types, cal), ParseError);  // duplicate cell
        std::istringstream bad4("template v1\nmonth 0\n0 0 0 mystery 1\n");
        CHECK_THROWS_AS(read_template(bad4, types, cal), ParseError);  // unknown label
    }
}

TEST_CASE("baseline heuristic templates honor the budgets and pinned slots") {
    auto types = make_default_types();
    CalendarConfig cal;
    ComplexityBudget budget;

    auto spt = make_spt_template(types, cal, budget);
    auto lcvb = make_lcvb_template(types, cal, budget);
    CHECK(validate_template(spt, types, cal, budget).feasible());
    CHECK(validate_template(lcvb, types, cal, budget).feasible());

    // Pinned pattern cells survive the feasibility repair.
    for (int wd = 0; wd < cal.days_per_week; ++wd) {
        CHECK(spt.counts.at(types.index_of("acute"), cal.weekly_slot(wd, 0)) == 3);
        CHECK(spt.counts.at(types.index_of("preventive"), cal.weekly_slot(wd, 7)) == 1);
        CHECK(lcvb.counts.at(types.index_of("chronic"), cal.weekly_slot(wd, 0)) == 3);
    }
    // The repair trims exactly one chronic from SPT slot 6 and LCVB slot 2.
    CHECK(spt.counts.at(1, cal.weekly_slot(0, 5)) == 2);
    CHECK(lcvb.counts.at(1, cal.weekly_slot(0, 1)) == 2);
    CHECK(weekly_capacity(spt) == 5 * (9 + 8));
    CHECK(weekly_capacity(lcvb) == 5 * (9 + 8));
}
