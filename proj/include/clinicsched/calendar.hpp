#pragma once

#include <string>

#include "clinicsched/errors.hpp"

namespace clinicsched {

// Working-day calendar grid. All day indices in the library are working-day
// indices: a week is days_per_week consecutive indices, a month is exactly
// working_days_per_month indices. Clock times are minutes from midnight.
//
// A day splits into sessions_per_day sessions of slots_per_session slots each,
// slot_minutes long. With two sessions the lunch break [lunch_start, lunch_end)
// separates them; session 0 runs from day_start, session 1 from lunch_end.
struct CalendarConfig {
    int days_per_week = 5;
    int sessions_per_day = 2;
    int slots_per_session = 4;
    int slot_minutes = 60;

    int day_start = 8 * 60;
    int lunch_start = 12 * 60;
    int lunch_end = 13 * 60;
    int day_end = 17 * 60;

    int working_days_per_month = 20;

    void validate() const {
        CS_REQUIRE(days_per_week >= 1, "days_per_week must be >= 1");
        CS_REQUIRE(sessions_per_day == 1 || sessions_per_day == 2,
                   "sessions_per_day must be 1 or 2");
        CS_REQUIRE(slots_per_session >= 1, "slots_per_session must be >= 1");
        CS_REQUIRE(slot_minutes >= 1, "slot_minutes must be >= 1");
        CS_REQUIRE(working_days_per_month >= 1, "working_days_per_month must be >= 1");
        CS_REQUIRE(day_start >= 0 && day_start < day_end, "day must start before it ends");
        const int session_len = slots_per_session * slot_minutes;
        if (sessions_per_day == 2) {
            CS_REQUIRE(day_start < lunch_start && lunch_start < lunch_end &&
                           lunch_end < day_end,
                       "lunch window must lie strictly inside the day");
            CS_REQUIRE(lunch_start - day_start == session_len,
                       "morning session length must equal slots_per_session*slot_minutes");
            CS_REQUIRE(day_end - lunch_end == session_len,
                       "afternoon session length must equal slots_per_session*slot_minutes");
        } else {
            CS_REQUIRE(day_end - day_start == session_len,
                       "day length must equal slots_per_session*slot_minutes");
        }
    }

    int slots_per_day() const { return sessions_per_day * slots_per_session; }
    int slots_per_week() const { return days_per_week * slots_per_day(); }

    int weekday_of(int day) const {
        CS_REQUIRE(day >= 0, "day index must be >= 0");
        return day % days_per_week;
    }
    int week_of(int day) const {
        CS_REQUIRE(day >= 0, "day index must be >= 0");
        return day / days_per_week;
    }
    int month_of(int day) const {
        CS_REQUIRE(day >= 0, "day index must be >= 0");
        return day / working_days_per_month;
    }

    int session_of(int slot_in_day) const {
        CS_REQUIRE(slot_in_day >= 0 && slot_in_day < slots_per_day(), "slot index out of range");
        return slot_in_day / slots_per_session;
    }

    // Scheduled start time (minutes from midnight) of a slot within a day.
    int slot_start(int slot_in_day) const {
        const int session = session_of(slot_in_day);
        const int within = slot_in_day % slots_per_session;
        const int base = (session == 0) ? day_start : lunch_end;
        return base + within * slot_minutes;
    }

    // Earliest minute at which a patient of this session can be taken in:
    // the clinic opens morning patients at day_start and afternoon patients
    // at the end of lunch.
    int session_open(int session) const {
        CS_REQUIRE(session >= 0 && session < sessions_per_day, "session index out of range");
        return (session == 0) ? day_start : lunch_end;
    }

    // Weekly slot index <-> (weekday, slot_in_day).
    int weekly_slot(int weekday, int slot_in_day) const {
        CS_REQUIRE(weekday >= 0 && weekday < days_per_week, "weekday out of range");
        CS_REQUIRE(slot_in_day >= 0 && slot_in_day < slots_per_day(), "slot index out of range");
        return weekday * slots_per_day() + slot_in_day;
    }
    int weekday_of_weekly_slot(int a) const {
        CS_REQUIRE(a >= 0 && a < slots_per_week(), "weekly slot index out of range");
        return a / slots_per_day();
    }
    int slot_in_day_of_weekly_slot(int a) const {
        CS_REQUIRE(a >= 0 && a < slots_per_week(), "weekly slot index out of range");
        return a % slots_per_day();
    }
};

inline std::string weekday_name(int weekday) {
    static const char* names[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
    if (weekday >= 0 && weekday < 7) return names[weekday];
    return "Day" + std::to_string(weekday);
}

}  // namespace clinicsched
