#include "clinicsched/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "clinicsched/errors.hpp"

namespace clinicsched {

// --- statistics helpers -------------------------------------------------------

namespace {

// Quantile with averaging at integral ranks (see QuantileSummary docs).
double rank_quantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 0) return 0.0;
    const double h = p * static_cast<double>(n);
    const double rounded = std::round(h);
    if (std::abs(h - rounded) < 1e-9) {
        const auto k = static_cast<std::size_t>(rounded);
        if (k == 0) return sorted.front();
        if (k >= n) return sorted.back();
        return 0.5 * (sorted[k - 1] + sorted[k]);
    }
    const auto k = static_cast<std::size_t>(std::ceil(h));
    return sorted[std::min(k, n) - 1];
}

}  // namespace

QuantileSummary summarize_values(std::vector<double> values) {
    QuantileSummary q;
    q.count = static_cast<long>(values.size());
    if (values.empty()) return q;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    q.mean = sum / static_cast<double>(values.size());
    q.p25 = rank_quantile(values, 0.25);
    q.p50 = rank_quantile(values, 0.50);
    q.p75 = rank_quantile(values, 0.75);
    q.p90 = rank_quantile(values, 0.90);
    q.p95 = rank_quantile(values, 0.95);
    q.max = values.back();
    return q;
}

void WaitHistogram::add(int value) {
    if (counts.empty()) {
        min_value = value;
        counts.assign(1, 0);
    } else if (value < min_value) {
        counts.insert(counts.begin(), static_cast<std::size_t>(min_value - value), 0);
        min_value = value;
    } else if (value >= min_value + static_cast<int>(counts.size())) {
        counts.resize(static_cast<std::size_t>(value - min_value) + 1, 0);
    }
    ++counts[static_cast<std::size_t>(value - min_value)];
    ++total;
}

long WaitHistogram::at(int value) const {
    if (counts.empty() || value < min_value ||
        value >= min_value + static_cast<int>(counts.size()))
        return 0;
    return counts[static_cast<std::size_t>(value - min_value)];
}

std::string_view to_string(Season s) {
    switch (s) {
        case Season::winter: return "winter";
        case Season::spring: return "spring";
        case Season::summer: return "summer";
        case Season::fall: return "fall";
    }
    throw ContractViolation("unknown season value");
}

Season season_of_calendar_month(int calendar_month) {
    CS_REQUIRE(calendar_month >= 0 && calendar_month < 12, "calendar month must be in 0..11");
    if (calendar_month == 11 || calendar_month <= 1) return Season::winter;
    if (calendar_month <= 4) return Season::spring;
    if (calendar_month <= 7) return Season::summer;
    return Season::fall;
}

// --- summarize ------------------------------------------------------------------

namespace {

int working_to_calendar_day(int day, const CalendarConfig& cal) {
    return (day / cal.days_per_week) * 7 + day % cal.days_per_week;
}

bool is_canceled(Disposition d) {
    return d == Disposition::canceled_by_patient || d == Disposition::canceled_by_clinic;
}

}  // namespace

Report summarize(const BookingLog& log, const std::vector<DayOutcome>& outcomes,
                 const PatientTypeSet& types, const CalendarConfig& cal,
                 const SummarizeOptions& opt) {
    cal.validate();
    CS_REQUIRE(opt.warmup_days >= 0, "warmup must be >= 0");
    CS_REQUIRE(opt.warmup_days <= static_cast<int>(outcomes.size()),
               "warmup cannot exceed the simulated days");
    CS_REQUIRE(opt.start_calendar_month >= 0 && opt.start_calendar_month < 12,
               "start calendar month must be in 0..11");
    const int horizon = static_cast<int>(outcomes.size());

    // Linkage: realized dispositions must match their appointment day's record.
    std::unordered_map<long, std::pair<int, bool>> realized;  // id -> (day, showed)
    for (int d = 0; d < horizon; ++d)
        for (const PatientOutcome& po : outcomes[static_cast<std::size_t>(d)].patients)
            realized[po.patient_id] = {d, po.showed};
    for (const BookingRecord& r : log.records) {
        switch (r.disposition) {
            case Disposition::served:
            case Disposition::no_show: {
                const auto it = realized.find(r.patient_id);
                CS_REQUIRE(it != realized.end() && it->second.first == r.actual_day &&
                               it->second.second == (r.disposition == Disposition::served),
                           "log/outcome linkage broken for a realized appointment");
                break;
            }
            case Disposition::booked:
            case Disposition::same_day:
                CS_REQUIRE(r.actual_day >= horizon,
                           "a pending booking lies inside the simulated window");
                break;
            default:
                break;
        }
        CS_REQUIRE(r.type >= 0 && r.type < types.size(), "unknown type in the booking log");
    }

    Report rep;
    rep.first_measured_month =
        (opt.warmup_days + cal.working_days_per_month - 1) / cal.working_days_per_month;

    // Request-level KPIs.
    long same_day = 0, future = 0, none = 0;
    std::vector<double> indirect_all;
    std::array<std::vector<double>, 4> indirect_season;
    for (const BookingRecord& r : log.records) {
        if (r.call_day < opt.warmup_days) continue;
        ++rep.requests;
        ++rep.disposition_counts[static_cast<std::size_t>(r.disposition)];
        if (!r.got_appointment()) {
            ++none;
            continue;
        }
        ++rep.booked;
        (r.actual_day == r.call_day ? same_day : future) += 1;
        int wait = r.actual_day - r.desired_day;
        if (opt.calendar_day_waits)
            wait = working_to_calendar_day(r.actual_day, cal) -
                   working_to_calendar_day(r.desired_day, cal);
        rep.indirect_wait.add(wait);
        indirect_all.push_back(wait);
        const int calendar_month =
            (opt.start_calendar_month + cal.month_of(r.call_day)) % 12;
        const auto season = static_cast<std::size_t>(season_of_calendar_month(calendar_month));
        rep.seasons[season].histogram.add(wait);
        indirect_season[season].push_back(wait);
    }
    if (rep.requests > 0) {
        rep.same_day_pct = 100.0 * static_cast<double>(same_day) / static_cast<double>(rep.requests);
        rep.future_booked_pct =
            100.0 * static_cast<double>(future) / static_cast<double>(rep.requests);
        rep.no_appointment_pct =
            100.0 * static_cast<double>(none) / static_cast<double>(rep.requests);
    }
    rep.indirect_quantiles = summarize_values(std::move(indirect_all));
    for (std::size_t s = 0; s < 4; ++s) {
        rep.seasons[s].booked = rep.seasons[s].histogram.total;
        rep.seasons[s].indirect = summarize_values(std::move(indirect_season[s]));
    }

    // Clinic-day KPIs.
    long zero_wait = 0;
    std::vector<double> positive_waits;
    double lunch_sum = 0.0, after_sum = 0.0;
    for (int d = opt.warmup_days; d < horizon; ++d) {
        const DayOutcome& day = outcomes[static_cast<std::size_t>(d)];
        ++rep.measured_days;
        lunch_sum += day.lunch_spillover;
        after_sum += day.after_hours;
        for (const PatientOutcome& po : day.patients) {
            if (!po.showed) continue;
            ++rep.shown;
            if (po.direct_wait <= 0.0) {
                ++zero_wait;
            } else {
                positive_waits.push_back(po.direct_wait);
                const auto bin =
                    static_cast<std::size_t>(po.direct_wait / rep.direct_wait_bin_minutes);
                if (bin >= rep.direct_wait_bins.size()) rep.direct_wait_bins.resize(bin + 1, 0);
                ++rep.direct_wait_bins[bin];
            }
        }
    }
    if (rep.shown > 0)
        rep.zero_direct_wait_pct =
            100.0 * static_cast<double>(zero_wait) / static_cast<double>(rep.shown);
    rep.positive_direct_wait = summarize_values(std::move(positive_waits));
    if (rep.measured_days > 0) {
        rep.mean_lunch_spillover = lunch_sum / static_cast<double>(rep.measured_days);
        rep.mean_after_hours = after_sum / static_cast<double>(rep.measured_days);
    }

    // Scheduled patient mix per fully measured planning month.
    const int months = horizon / cal.working_days_per_month;
    for (int m = rep.first_measured_month; m < months; ++m)
        rep.monthly_mix.emplace_back(static_cast<std::size_t>(types.size()), 0.0);
    for (const BookingRecord& r : log.records) {
        if (!r.got_appointment() || is_canceled(r.disposition)) continue;
        if (r.actual_day >= horizon) continue;
        const int m = cal.month_of(r.actual_day);
        if (m < rep.first_measured_month || m >= months) continue;
        rep.monthly_mix[static_cast<std::size_t>(m - rep.first_measured_month)]
                       [static_cast<std::size_t>(r.type)] += 1.0;
    }
    for (auto& mix : rep.monthly_mix) {
        double total = 0.0;
        for (double v : mix) total += v;
        if (total > 0.0)
            for (double& v : mix) v /= total;
    }
    return rep;
}

// --- emission -------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void write_quantiles(std::ostream& out, const char* name, const QuantileSummary& q) {
    out << name << "\tcount\t" << q.count << '\n';
    out << name << "\tmean\t" << fmt(q.mean) << '\n';
    out << name << "\tp25\t" << fmt(q.p25) << '\n';
    out << name << "\tp50\t" << fmt(q.p50) << '\n';
    out << name << "\tp75\t" << fmt(q.p75) << '\n';
    out << name << "\tp90\t" << fmt(q.p90) << '\n';
    out << name << "\tp95\t" << fmt(q.p95) << '\n';
    out << name << "\tmax\t" << fmt(q.max) << '\n';
}

}  // namespace

void write_report(const Report& r, const PatientTypeSet& types, std::ostream& out) {
    out << "report v1\n";
    out << "section summary\nmetric\tvalue\n";
    out << "requests\t" << r.requests << '\n';
    out << "booked\t" << r.booked << '\n';
    out << "same_day_pct\t" << fmt(r.same_day_pct) << '\n';
    out << "future_booked_pct\t" << fmt(r.future_booked_pct) << '\n';
    out << "no_appointment_pct\t" << fmt(r.no_appointment_pct) << '\n';
    for (Disposition d : {Disposition::booked, Disposition::same_day, Disposition::no_appointment,
                          Disposition::canceled_by_patient, Disposition::canceled_by_clinic,
                          Disposition::no_show, Disposition::served})
        out << "count_" << to_string(d) << '\t'
            << r.disposition_counts[static_cast<std::size_t>(d)] << '\n';
    out << "measured_days\t" << r.measured_days << '\n';
    out << "shown\t" << r.shown << '\n';
    out << "zero_direct_wait_pct\t" << fmt(r.zero_direct_wait_pct) << '\n';
    out << "mean_lunch_spillover\t" << fmt(r.mean_lunch_spillover) << '\n';
    out << "mean_after_hours\t" << fmt(r.mean_after_hours) << '\n';

    out << "section quantiles\nstatistic\tname\tvalue\n";
    write_quantiles(out, "indirect_wait", r.indirect_quantiles);
    write_quantiles(out, "positive_direct_wait", r.positive_direct_wait);

    out << "section indirect_wait_histogram\nwait\tcount\n";
    for (std::size_t i = 0; i < r.indirect_wait.counts.size(); ++i)
        out << r.indirect_wait.min_value + static_cast<int>(i) << '\t'
            << r.indirect_wait.counts[i] << '\n';

    out << "section seasons\nseason\tbooked\tmean\tp50\tp90\n";
    for (Season s : {Season::winter, Season::spring, Season::summer, Season::fall}) {
        const SeasonStats& st = r.seasons[static_cast<std::size_t>(s)];
        out << to_string(s) << '\t' << st.booked << '\t' << fmt(st.indirect.mean) << '\t'
            << fmt(st.indirect.p50) << '\t' << fmt(st.indirect.p90) << '\n';
    }

    out << "section direct_wait_bins\nbin_start_minutes\tcount\n";
    for (std::size_t i = 0; i < r.direct_wait_bins.size(); ++i)
        out << fmt(static_cast<double>(i) * r.direct_wait_bin_minutes) << '\t'
            << r.direct_wait_bins[i] << '\n';

    out << "section monthly_mix\nmonth";
    for (int t = 0; t < types.size(); ++t) out << '\t' << types[t].label;
    out << '\n';
    for (std::size_t m = 0; m < r.monthly_mix.size(); ++m) {
        out << r.first_measured_month + static_cast<int>(m);
        for (double share : r.monthly_mix[m]) out << '\t' << fmt(share);
        out << '\n';
    }
}

std::string report_to_text(const Report& r, const PatientTypeSet& types) {
    std::ostringstream out;
    write_report(r, types, out);
    return out.str();
}

// --- comparison -----------------------------------------------------------------

PolicyComparison compare_policies(const std::vector<LabeledReport>& reports,
                                  bool common_random_numbers) {
    CS_REQUIRE(reports.size() >= 2, "a comparison needs at least two reports");
    PolicyComparison c;
    c.common_random_numbers = common_random_numbers;
    c.kpi_names = {"same_day_pct",           "no_appointment_pct",
                   "indirect_wait_mean",     "indirect_wait_p50",
                   "indirect_wait_p90",      "zero_direct_wait_pct",
                   "positive_direct_wait_mean", "positive_direct_wait_p90",
                   "lunch_spillover_mean",   "after_hours_mean"};
    for (const LabeledReport& lr : reports) {
        c.labels.push_back(lr.label);
        const Report& r = lr.report;
        const std::vector<double> row = {r.same_day_pct,
                                         r.no_appointment_pct,
                                         r.indirect_quantiles.mean,
                                         r.indirect_quantiles.p50,
                                         r.indirect_quantiles.p90,
                                         r.zero_direct_wait_pct,
                                         r.positive_direct_wait.mean,
                                         r.positive_direct_wait.p90,
                                         r.mean_lunch_spillover,
                                         r.mean_after_hours};
        if (c.values.empty()) c.values.assign(c.kpi_names.size(), {});
        for (std::size_t k = 0; k < row.size(); ++k) c.values[k].push_back(row[k]);
    }
    for (std::size_t i = 0; i < reports.size(); ++i)
        for (std::size_t j = i + 1; j < reports.size(); ++j)
            c.pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    c.deltas.assign(c.kpi_names.size(), {});
    for (std::size_t k = 0; k < c.kpi_names.size(); ++k)
        for (const auto& [i, j] : c.pairs)
            c.deltas[k].push_back(c.values[k][static_cast<std::size_t>(i)] -
                                  c.values[k][static_cast<std::size_t>(j)]);
    return c;
}

std::string comparison_to_text(const PolicyComparison& c) {
    std::ostringstream out;
    out << "comparison v1\ncommon_random_numbers\t" << (c.common_random_numbers ? 1 : 0) << '\n';
    out << "kpi";
    for (const std::string& label : c.labels) out << '\t' << label;
    for (const auto& [i, j] : c.pairs)
        out << '\t' << c.labels[static_cast<std::size_t>(i)] << "-"
            << c.labels[static_cast<std::size_t>(j)];
    out << '\n';
    for (std::size_t k = 0; k < c.kpi_names.size(); ++k) {
        out << c.kpi_names[k];
        for (double v : c.values[k]) out << '\t' << fmt(v);
        for (double d : c.deltas[k]) out << '\t' << fmt(d);
        out << '\n';
    }
    return out.str();
}

}  // namespace clinicsched
