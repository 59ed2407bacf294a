#include "clinicsched/clinicflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "clinicsched/parallel.hpp"
#include "clinicsched/random.hpp"

namespace clinicsched {

int DaySchedule::total_patients() const {
    int n = 0;
    for (const auto& s : slots) n += static_cast<int>(s.size());
    return n;
}

double DayOutcome::mean_direct_wait() const {
    double sum = 0.0;
    int n = 0;
    for (const auto& p : patients)
        if (p.showed) {
            sum += p.direct_wait;
            ++n;
        }
    return n == 0 ? 0.0 : sum / n;
}

double DayOutcome::provider_busy_minutes() const {
    double sum = 0.0;
    for (const auto& p : patients)
        if (p.showed) sum += p.provider_end - p.provider_start;
    return sum;
}

namespace {

// Lognormal parameters by moment matching: mean m, sd s -> (mu, sigma).
// s == 0 degenerates to a point mass at m.
double draw_service(double mean, double sd, RngEngine& rng) {
    if (sd <= 0.0) {
        // keep the stream aligned with the stochastic case
        std::normal_distribution<double> z(0.0, 1.0);
        (void)z(rng);
        return mean;
    }
    const double sigma2 = std::log(1.0 + (sd * sd) / (mean * mean));
    const double mu = std::log(mean) - 0.5 * sigma2;
    std::normal_distribution<double> z(0.0, 1.0);
    return std::exp(mu + std::sqrt(sigma2) * z(rng));
}

struct SimPatient {
    int slot = 0;
    int position = 0;
    int type = 0;
    long patient_id = -1;
    bool showed = false;
    double arrival = 0.0;
    double ready = 0.0;  // max(arrival, session open)
    double nurse_svc = 0.0;
    double provider_svc = 0.0;
};

// Earlier (arrival, slot, position) = earlier in every queue.
bool before(const SimPatient& a, const SimPatient& b) {
    if (a.arrival != b.arrival) return a.arrival < b.arrival;
    if (a.slot != b.slot) return a.slot < b.slot;
    return a.position < b.position;
}

double overlap(double s, double e, double lo, double hi) {
    return std::max(0.0, std::min(e, hi) - std::max(s, lo));
}

}  // namespace

DayOutcome simulate_day(const DaySchedule& schedule, const FlowParams& params,
                        const PatientTypeSet& types, const CalendarConfig& cal,
                        std::uint64_t seed, std::vector<TraceEvent>* trace) {
    params.validate();
    cal.validate();
    CS_REQUIRE(static_cast<int>(schedule.slots.size()) == cal.slots_per_day(),
               "schedule must cover every slot of the day");

    DayOutcome out;
    std::vector<SimPatient> shown;
    shown.reserve(static_cast<std::size_t>(schedule.total_patients()));

    for (int s = 0; s < cal.slots_per_day(); ++s) {
        const auto& list = schedule.slots[static_cast<std::size_t>(s)];
        for (int pos = 0; pos < static_cast<int>(list.size()); ++pos) {
            const BookedPatient& bp = list[static_cast<std::size_t>(pos)];
            CS_REQUIRE(bp.type >= 0 && bp.type < types.size(), "booked patient type out of range");
            // One derived stream per (slot, position): schedules that share a
            // prefix of a slot's list share these draws exactly (common
            // random numbers across booking configurations). Fixed draw
            // order: show-up, unpunctuality, nurse service, provider service.
            auto rng = derive_engine(seed, "patient",
                                     {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(pos)});
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            const double u_show = unif(rng);
            std::normal_distribution<double> std_normal(0.0, 1.0);
            const double arrival_offset = params.arrival_mean + params.arrival_sd * std_normal(rng);
            const double nurse_svc =
                draw_service(types[bp.type].nurse.mean_minutes,
                             types[bp.type].nurse.sd_minutes, rng);
            const double provider_svc =
                draw_service(types[bp.type].provider.mean_minutes,
                             types[bp.type].provider.sd_minutes, rng);

            PatientOutcome po;
            po.slot = s;
            po.position = pos;
            po.type = bp.type;
            po.patient_id = bp.patient_id;
            const double p_show = show_up_probability(params.no_show, std::max(0, bp.delay_days),
                                                      types[bp.type].no_show_prob);
            po.showed = u_show < p_show;
            if (!po.showed) {
                ++out.no_shows;
                if (trace) trace->push_back({0.0, s, pos, "no_show"});
                out.patients.push_back(po);
                continue;
            }
            ++out.shows;
            SimPatient sp;
            sp.slot = s;
            sp.position = pos;
            sp.type = bp.type;
            sp.patient_id = bp.patient_id;
            sp.showed = true;
            sp.arrival = std::max(static_cast<double>(cal.slot_start(s)) + arrival_offset,
                                  static_cast<double>(cal.day_start) - params.early_arrival_cap);
            sp.ready = std::max(sp.arrival,
                                static_cast<double>(cal.session_open(cal.session_of(s))));
            sp.nurse_svc = nurse_svc;
            sp.provider_svc = provider_svc;
            po.arrival = sp.arrival;
            out.patients.push_back(po);
            shown.push_back(sp);
            if (trace) trace->push_back({sp.arrival, s, pos, "arrival"});
        }
    }

    // Stage 1, nurse: repeatedly serve the eligible patient with the earliest
    // (arrival, slot, position); idle forward when nobody is eligible yet.
    const std::size_t n = shown.size();
    std::vector<double> nurse_start(n), nurse_end(n);
    std::vector<char> roomed(n, 0);
    double t_nurse = 0.0;
    for (std::size_t served = 0; served < n; ++served) {
        double min_ready = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            if (!roomed[i]) min_ready = std::min(min_ready, shown[i].ready);
        const double start_at = std::max(t_nurse, min_ready);
        int pick = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (roomed[i] || shown[i].ready > start_at) continue;
            if (pick < 0 || before(shown[i], shown[static_cast<std::size_t>(pick)]))
                pick = static_cast<int>(i);
        }
        const auto pi = static_cast<std::size_t>(pick);
        nurse_start[pi] = std::max(t_nurse, shown[pi].ready);
        nurse_end[pi] = nurse_start[pi] + shown[pi].nurse_svc;
        t_nurse = nurse_end[pi];
        roomed[pi] = 1;
        if (trace) {
            trace->push_back({nurse_start[pi], shown[pi].slot, shown[pi].position, "nurse_start"});
            trace->push_back({nurse_end[pi], shown[pi].slot, shown[pi].position, "nurse_end"});
        }
    }

    // Stage 2, provider: same discipline; a patient is eligible once roomed.
    std::vector<double> prov_start(n), prov_end(n);
    std::vector<char> done(n, 0);
    double t_prov = 0.0;
    for (std::size_t served = 0; served < n; ++served) {
        double min_ready = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            if (!done[i]) min_ready = std::min(min_ready, nurse_end[i]);
        const double start_at = std::max(t_prov, min_ready);
        int pick = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i] || nurse_end[i] > start_at) continue;
            if (pick < 0 || before(shown[i], shown[static_cast<std::size_t>(pick)]))
                pick = static_cast<int>(i);
        }
        const auto pi = static_cast<std::size_t>(pick);
        prov_start[pi] = std::max(t_prov, nurse_end[pi]);
        prov_end[pi] = prov_start[pi] + shown[pi].provider_svc;
        t_prov = prov_end[pi];
        done[pi] = 1;
        if (trace) {
            trace->push_back({prov_start[pi], shown[pi].slot, shown[pi].position, "provider_start"});
            trace->push_back({prov_end[pi], shown[pi].slot, shown[pi].position, "provider_end"});
        }
    }

    // Fold the stage times back into the outcome rows and aggregate KPIs.
    std::size_t k = 0;
    for (auto& po : out.patients) {
        if (!po.showed) continue;
        const auto& sp = shown[k];
        po.nurse_start = nurse_start[k];
        po.nurse_end = nurse_end[k];
        po.provider_start = prov_start[k];
        po.provider_end = prov_end[k];
        const double wait_clock =
            params.wait_from_scheduled
                ? std::max(po.arrival, static_cast<double>(cal.slot_start(sp.slot)))
                : po.arrival;
        po.direct_wait = std::max(0.0, po.nurse_start - wait_clock) +
                         (po.provider_start - po.nurse_end);
        out.lunch_spillover += overlap(po.provider_start, po.provider_end,
                                       static_cast<double>(cal.lunch_start),
                                       static_cast<double>(cal.lunch_end));
        out.after_hours += std::max(0.0, po.provider_end - std::max(po.provider_start,
                                                                    static_cast<double>(cal.day_end)));
        ++k;
    }
    return out;
}

double nearest_rank_quantile(std::vector<double> values, double alpha) {
    CS_REQUIRE(!values.empty(), "quantile of an empty sample");
    CS_REQUIRE(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    std::sort(values.begin(), values.end());
    const auto m = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(alpha * m));
    rank = std::max<std::size_t>(1, std::min(values.size(), rank));
    return values[rank - 1];
}

DaySchedule schedule_from_template_day(const WeeklyTemplate& t, int weekday,
                                       const PatientTypeSet& types, const CalendarConfig& cal) {
    DaySchedule day(cal.slots_per_day());
    for (int s = 0; s < cal.slots_per_day(); ++s)
        for (int r = 0; r < types.size(); ++r) {
            const int n = t.counts.at(r, cal.weekly_slot(weekday, s));
            for (int i = 0; i < n; ++i) day.slots[static_cast<std::size_t>(s)].push_back({r, -1, -1});
        }
    return day;
}

TemplateEvaluation evaluate_template(const WeeklyTemplate& t, const FlowParams& params,
                                     const PatientTypeSet& types, const CalendarConfig& cal,
                                     std::uint64_t seed, int workers) {
    params.validate();
    TemplateEvaluation eval;
    // Template evaluation always uses the constant per-type show-up model:
    // booking delays do not exist yet at template-design time.
    FlowParams run = params;
    run.no_show = NoShowModel{NoShowModel::Kind::constant, params.no_show.base_p};

    for (int wd = 0; wd < cal.days_per_week; ++wd) {
        const DaySchedule day = schedule_from_template_day(t, wd, types, cal);
        std::vector<double> direct(static_cast<std::size_t>(params.replications));
        std::vector<double> lunch(static_cast<std::size_t>(params.replications));
        std::vector<double> after(static_cast<std::size_t>(params.replications));
        parallel_for_index(static_cast<std::size_t>(params.replications), workers,
                           [&](std::size_t k) {
                               const auto rep_seed =
                                   derive_seed(seed, "replication",
                                               {static_cast<std::uint64_t>(wd), k});
                               const DayOutcome o = simulate_day(day, run, types, cal, rep_seed);
                               direct[k] = o.mean_direct_wait();
                               lunch[k] = o.lunch_spillover;
                               after[k] = o.after_hours;
                           });
        WeekdayKpis kpi;
        kpi.weekday = wd;
        kpi.direct_wait = nearest_rank_quantile(direct, params.alpha);
        kpi.lunch_spillover = nearest_rank_quantile(lunch, params.alpha);
        kpi.after_hours = nearest_rank_quantile(after, params.alpha);
        kpi.violated = kpi.direct_wait > params.direct_wait_threshold ||
                       kpi.lunch_spillover > params.lunch_threshold ||
                       kpi.after_hours > params.after_hours_threshold;
        if (kpi.violated) eval.cuts.push_back({wd, day_configuration(t, wd, cal)});
        eval.per_weekday.push_back(kpi);
    }
    return eval;
}

}  // namespace clinicsched
