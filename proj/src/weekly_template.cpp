#include "clinicsched/weekly_template.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace clinicsched {

namespace {
// Budget comparisons tolerate tiny float noise: 3 patients of complexity 0.32
// must fit a 0.96 slot even though 3*0.32 > 0.96 in binary doubles.
constexpr double kBudgetTol = 1e-9;
}  // namespace

bool ForbiddenDayConfig::matches(const WeeklyTemplate& t, const CalendarConfig& cal) const {
    CS_REQUIRE(weekday >= 0 && weekday < cal.days_per_week, "forbidden weekday out of range");
    CS_REQUIRE(static_cast<int>(per_slot_counts.size()) == cal.slots_per_day(),
               "forbidden configuration must cover every slot of the day");
    for (int s = 0; s < cal.slots_per_day(); ++s) {
        const auto& want = per_slot_counts[static_cast<std::size_t>(s)];
        CS_REQUIRE(static_cast<int>(want.size()) == t.counts.types(),
                   "forbidden configuration must cover every type");
        const int a = cal.weekly_slot(weekday, s);
        for (int r = 0; r < t.counts.types(); ++r)
            if (t.counts.at(r, a) != want[static_cast<std::size_t>(r)]) return false;
    }
    return true;
}

std::string Violation::describe(const PatientTypeSet& types) const {
    std::ostringstream os;
    switch (kind) {
        case Kind::slot_budget:
            os << weekday_name(weekday) << " slot " << slot_in_day << ": complexity " << value
               << " exceeds slot budget " << limit;
            break;
        case Kind::session_budget:
            os << weekday_name(weekday) << " session " << session << ": complexity " << value
               << " exceeds session budget " << limit;
            break;
        case Kind::floor_breach:
            os << weekday_name(weekday) << " slot " << slot_in_day << " type "
               << types[type].label << ": count " << value << " below committed floor " << limit;
            break;
        case Kind::forbidden_day:
            os << weekday_name(weekday) << ": day configuration is excluded";
            break;
        case Kind::negative_count:
            os << weekday_name(weekday) << " slot " << slot_in_day << " type "
               << types[type].label << ": negative count " << value;
            break;
    }
    return os.str();
}

std::string ValidationReport::describe(const PatientTypeSet& types) const {
    std::ostringstream os;
    if (feasible()) return "feasible";
    for (const auto& v : violations) os << v.describe(types) << '\n';
    return os.str();
}

double slot_complexity(const std::vector<int>& counts, const PatientTypeSet& types) {
    CS_REQUIRE(static_cast<int>(counts.size()) == types.size(),
               "slot counts must cover every type");
    double c = 0.0;
    for (int r = 0; r < types.size(); ++r) {
        CS_REQUIRE(counts[static_cast<std::size_t>(r)] >= 0, "slot counts must be >= 0");
        c += counts[static_cast<std::size_t>(r)] * types[r].complexity;
    }
    return c;
}

ValidationReport validate_template(const WeeklyTemplate& t, const PatientTypeSet& types,
                                   const CalendarConfig& cal, const ComplexityBudget& budget,
                                   const CommitmentFloor* floor,
                                   const std::vector<ForbiddenDayConfig>& excluded) {
    cal.validate();
    budget.validate();
    CS_REQUIRE(t.counts.types() == types.size(), "template type dimension mismatch");
    CS_REQUIRE(t.counts.weekly_slots() == cal.slots_per_week(),
               "template slot dimension mismatch");
    CS_REQUIRE(t.month_index >= 0, "template month index must be >= 0");
    if (floor) {
        CS_REQUIRE(floor->floors.types() == types.size() &&
                       floor->floors.weekly_slots() == cal.slots_per_week(),
                   "commitment floor dimensions must match the template");
    }

    ValidationReport report;
    for (int wd = 0; wd < cal.days_per_week; ++wd) {
        std::vector<double> session_load(static_cast<std::size_t>(cal.sessions_per_day), 0.0);
        for (int s = 0; s < cal.slots_per_day(); ++s) {
            const int a = cal.weekly_slot(wd, s);
            double load = 0.0;
            for (int r = 0; r < types.size(); ++r) {
                const int n = t.counts.at(r, a);
                if (n < 0) {
                    report.violations.push_back({Violation::Kind::negative_count, wd, s, -1, r,
                                                 static_cast<double>(n), 0.0});
                    continue;
                }
                load += n * types[r].complexity;
                if (floor) {
                    const int need = floor->floors.at(r, a);
                    if (n < need)
                        report.violations.push_back({Violation::Kind::floor_breach, wd, s, -1, r,
                                                     static_cast<double>(n),
                                                     static_cast<double>(need)});
                }
            }
            if (load > budget.kappa + kBudgetTol)
                report.violations.push_back(
                    {Violation::Kind::slot_budget, wd, s, -1, -1, load, budget.kappa});
            session_load[static_cast<std::size_t>(cal.session_of(s))] += load;
        }
        for (int sess = 0; sess < cal.sessions_per_day; ++sess) {
            const double load = session_load[static_cast<std::size_t>(sess)];
            if (load > budget.eta + kBudgetTol)
                report.violations.push_back(
                    {Violation::Kind::session_budget, wd, -1, sess, -1, load, budget.eta});
        }
    }
    for (const auto& g : excluded) {
        if (g.matches(t, cal))
            report.violations.push_back({Violation::Kind::forbidden_day, g.weekday, -1, -1, -1,
                                         0.0, 0.0});
    }
    return report;
}

ValidationReport validate_floor(const CommitmentFloor& floor, const PatientTypeSet& types,
                                const CalendarConfig& cal, const ComplexityBudget& budget) {
    WeeklyTemplate as_template;
    as_template.month_index = 0;
    as_template.counts = floor.floors;
    return validate_template(as_template, types, cal, budget);
}

int daily_capacity(const WeeklyTemplate& t, int type, int day, const CalendarConfig& cal) {
    CS_REQUIRE(day >= 0, "day index must be >= 0");
    CS_REQUIRE(type >= 0 && type < t.counts.types(), "type index out of range");
    const int wd = cal.weekday_of(day);
    int total = 0;
    for (int s = 0; s < cal.slots_per_day(); ++s) total += t.counts.at(type, cal.weekly_slot(wd, s));
    return total;
}

int weekly_capacity(const WeeklyTemplate& t) {
    int total = 0;
    for (int r = 0; r < t.counts.types(); ++r)
        for (int a = 0; a < t.counts.weekly_slots(); ++a) total += t.counts.at(r, a);
    return total;
}

std::vector<std::vector<int>> day_configuration(const WeeklyTemplate& t, int weekday,
                                                const CalendarConfig& cal) {
    CS_REQUIRE(weekday >= 0 && weekday < cal.days_per_week, "weekday out of range");
    std::vector<std::vector<int>> cfg(static_cast<std::size_t>(cal.slots_per_day()),
                                      std::vector<int>(static_cast<std::size_t>(t.counts.types())));
    for (int s = 0; s < cal.slots_per_day(); ++s)
        for (int r = 0; r < t.counts.types(); ++r)
            cfg[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)] =
                t.counts.at(r, cal.weekly_slot(weekday, s));
    return cfg;
}

void write_template(const WeeklyTemplate& t, const PatientTypeSet& types,
                    const CalendarConfig& cal, std::ostream& out) {
    CS_REQUIRE(t.counts.types() == types.size() &&
                   t.counts.weekly_slots() == cal.slots_per_week(),
               "template dimensions mismatch");
    out << "template v1\n";
    out << "month " << t.month_index << "\n";
    for (int wd = 0; wd < cal.days_per_week; ++wd)
        for (int s = 0; s < cal.slots_per_day(); ++s)
            for (int r = 0; r < types.size(); ++r)
                out << wd << ' ' << cal.session_of(s) << ' ' << s % cal.slots_per_session << ' '
                    << types[r].label << ' ' << t.counts.at(r, cal.weekly_slot(wd, s)) << "\n";
}

std::string template_to_text(const WeeklyTemplate& t, const PatientTypeSet& types,
                             const CalendarConfig& cal) {
    std::ostringstream os;
    write_template(t, types, cal, os);
    return os.str();
}

void write_template_file(const WeeklyTemplate& t, const PatientTypeSet& types,
                         const CalendarConfig& cal, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open template file for writing: " + path);
    write_template(t, types, cal, out);
}

WeeklyTemplate read_template(std::istream& in, const PatientTypeSet& types,
                             const CalendarConfig& cal) {
    std::string line;
    if (!std::getline(in, line) || line != "template v1")
        throw ParseError("template file must start with 'template v1'");
    if (!std::getline(in, line)) throw ParseError("template file missing month line");
    std::istringstream hs(line);
    std::string kw;
    int month = -1;
    if (!(hs >> kw >> month) || kw != "month" || month < 0)
        throw ParseError("malformed month line: " + line);

    WeeklyTemplate t(month, types, cal);
    std::vector<char> seen(static_cast<std::size_t>(types.size() * cal.slots_per_week()), 0);
    int lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int wd = -1, session = -1, slot = -1, count = -1;
        std::string label;
        if (!(ls >> wd >> session >> slot >> label >> count))
            throw ParseError("malformed template row at line " + std::to_string(lineno) + ": " +
                             line);
        std::string extra;
        if (ls >> extra)
            throw ParseError("trailing tokens at line " + std::to_string(lineno) + ": " + line);
        if (wd < 0 || wd >= cal.days_per_week)
            throw ParseError("weekday out of range at line " + std::to_string(lineno));
        if (session < 0 || session >= cal.sessions_per_day)
            throw ParseError("session out of range at line " + std::to_string(lineno));
        if (slot < 0 || slot >= cal.slots_per_session)
            throw ParseError("slot out of range at line " + std::to_string(lineno));
        const int r = types.index_of(label);
        if (r < 0) throw ParseError("unknown type label '" + label + "' at line " +
                                    std::to_string(lineno));
        if (count < 0) throw ParseError("negative count at line " + std::to_string(lineno));
        const int slot_in_day = session * cal.slots_per_session + slot;
        const int a = cal.weekly_slot(wd, slot_in_day);
        auto& mark = seen[static_cast<std::size_t>(r * cal.slots_per_week() + a)];
        if (mark) throw ParseError("duplicate cell at line " + std::to_string(lineno));
        mark = 1;
        t.counts.at(r, a) = count;
    }
    for (char m : seen)
        if (!m) throw ParseError("template file is missing cells (expected " +
                                 std::to_string(seen.size()) + " rows)");
    return t;
}

WeeklyTemplate read_template_file(const std::string& path, const PatientTypeSet& types,
                                  const CalendarConfig& cal) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open template file: " + path);
    return read_template(in, types, cal);
}

namespace {

// Shared scaffolding for the two fixed-pattern baselines: fill every weekday
// with the same per-slot pattern, then repair any session that exceeds eta by
// removing patients from its most complex slot (latest slot on ties), always
// dropping the highest-complexity type present in that slot.
WeeklyTemplate build_daily_pattern(const std::vector<std::vector<std::pair<std::string, int>>>& pattern,
                                   const PatientTypeSet& types, const CalendarConfig& cal,
                                   const ComplexityBudget& budget, int month_index) {
    cal.validate();
    budget.validate();
    CS_REQUIRE(static_cast<int>(pattern.size()) == cal.slots_per_day(),
               "daily pattern must cover every slot of the day");

    WeeklyTemplate t(month_index, types, cal);
    for (int wd = 0; wd < cal.days_per_week; ++wd) {
        for (int s = 0; s < cal.slots_per_day(); ++s) {
            for (const auto& [label, n] : pattern[static_cast<std::size_t>(s)]) {
                const int r = types.index_of(label);
                CS_REQUIRE(r >= 0, "pattern references unknown type " + label);
                t.counts.at(r, cal.weekly_slot(wd, s)) += n;
            }
        }
    }

    // Feasibility repair per session (identical across weekdays, but run per
    // weekday so the template stays consistent if budgets ever differ).
    for (int wd = 0; wd < cal.days_per_week; ++wd) {
        for (int sess = 0; sess < cal.sessions_per_day; ++sess) {
            auto session_load = [&] {
                double load = 0.0;
                for (int k = 0; k < cal.slots_per_session; ++k) {
                    const int a = cal.weekly_slot(wd, sess * cal.slots_per_session + k);
                    for (int r = 0; r < types.size(); ++r)
                        load += t.counts.at(r, a) * types[r].complexity;
                }
                return load;
            };
            while (session_load() > budget.eta + kBudgetTol) {
                int worst_slot = -1;
                double worst = -1.0;
                for (int k = 0; k < cal.slots_per_session; ++k) {
                    const int s = sess * cal.slots_per_session + k;
                    const int a = cal.weekly_slot(wd, s);
                    double load = 0.0;
                    for (int r = 0; r < types.size(); ++r)
                        load += t.counts.at(r, a) * types[r].complexity;
                    if (load >= worst - kBudgetTol) {  // ties resolve to the latest slot
                        worst = std::max(worst, load);
                        worst_slot = s;
                    }
                }
                CS_REQUIRE(worst > 0.0, "cannot repair an empty session over budget");
                const int a = cal.weekly_slot(wd, worst_slot);
                int drop = -1;
                for (int r = 0; r < types.size(); ++r) {
                    if (t.counts.at(r, a) <= 0) continue;
                    if (drop < 0 || types[r].complexity > types[drop].complexity) drop = r;
                }
                CS_REQUIRE(drop >= 0, "over-budget slot has no patients to drop");
                --t.counts.at(drop, a);
            }
        }
    }

    const auto report = validate_template(t, types, cal, budget);
    CS_REQUIRE(report.feasible(), "pattern repair left template infeasible: " +
                                      report.describe(types));
    return t;
}

}  // namespace

WeeklyTemplate make_spt_template(const PatientTypeSet& types, const CalendarConfig& cal,
                                 const ComplexityBudget& budget, int month_index) {
    CS_REQUIRE(cal.sessions_per_day == 2 && cal.slots_per_session == 4,
               "baseline patterns are defined for the 2x4 slot day");
    const std::vector<std::vector<std::pair<std::string, int>>> pattern = {
        {{"acute", 3}}, {{"acute", 2}}, {{"acute", 2}}, {{"acute", 2}},
        {{"chronic", 3}}, {{"chronic", 3}}, {{"preventive", 2}}, {{"preventive", 1}},
    };
    return build_daily_pattern(pattern, types, cal, budget, month_index);
}

WeeklyTemplate make_lcvb_template(const PatientTypeSet& types, const CalendarConfig& cal,
                                  const ComplexityBudget& budget, int month_index) {
    CS_REQUIRE(cal.sessions_per_day == 2 && cal.slots_per_session == 4,
               "baseline patterns are defined for the 2x4 slot day");
    const std::vector<std::vector<std::pair<std::string, int>>> pattern = {
        {{"chronic", 3}}, {{"chronic", 3}}, {{"acute", 2}}, {{"acute", 2}},
        {{"acute", 3}}, {{"acute", 2}}, {{"preventive", 2}}, {{"preventive", 1}},
    };
    return build_daily_pattern(pattern, types, cal, budget, month_index);
}

}  // namespace clinicsched
