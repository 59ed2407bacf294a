#include "clinicsched/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "clinicsched/random.hpp"

namespace clinicsched {

long DemandScenario::total() const {
    long n = 0;
    for (const auto& row : f)
        for (int v : row) n += v;
    return n;
}

NoShowModel::Kind no_show_kind_from_string(const std::string& s) {
    if (s == "constant") return NoShowModel::Kind::constant;
    if (s == "kopach") return NoShowModel::Kind::kopach;
    if (s == "gallucci") return NoShowModel::Kind::gallucci;
    if (s == "green_savin") return NoShowModel::Kind::green_savin;
    throw ContractViolation("unknown no-show model: " + s);
}

std::string to_string(NoShowModel::Kind k) {
    switch (k) {
        case NoShowModel::Kind::constant: return "constant";
        case NoShowModel::Kind::kopach: return "kopach";
        case NoShowModel::Kind::gallucci: return "gallucci";
        case NoShowModel::Kind::green_savin: return "green_savin";
    }
    return "?";
}

double show_up_probability(const NoShowModel& m, int delay_days, double type_p) {
    CS_REQUIRE(delay_days >= 0, "appointment delay must be >= 0");
    CS_REQUIRE(type_p >= 0.0 && type_p <= 1.0, "type no-show probability must be in [0,1]");
    m.validate();
    const double j = static_cast<double>(delay_days);
    double s = 0.0;
    switch (m.kind) {
        case NoShowModel::Kind::constant:
            s = 1.0 - type_p;
            break;
        case NoShowModel::Kind::kopach:
            s = 1.0 - m.base_p * (1.0 - 0.5 * std::exp(-0.017 * j));
            break;
        case NoShowModel::Kind::gallucci:
            s = 1.0 - (0.51 - 0.36 * std::exp(-j / 9.0));
            break;
        case NoShowModel::Kind::green_savin:
            s = 1.0 - (0.31 - 0.30 * std::exp(-j / 50.0));
            break;
    }
    return std::clamp(s, 0.0, 1.0);
}

void DemandParams::validate() const {
    calendar.validate();
    CS_REQUIRE(volume.weekly_mean >= 0.0, "weekly volume mean must be >= 0");
    CS_REQUIRE(volume.dispersion > 0.0, "volume dispersion must be > 0");
    CS_REQUIRE(static_cast<int>(weekday_desired_weights.size()) == calendar.days_per_week,
               "weekday weights must cover every working day of the week");
    double ws = 0.0;
    for (double w : weekday_desired_weights) {
        CS_REQUIRE(w >= 0.0, "weekday weights must be >= 0");
        ws += w;
    }
    CS_REQUIRE(std::abs(ws - 1.0) <= 1e-9, "weekday weights must sum to 1");
    CS_REQUIRE(!lead_time_mass.empty(), "lead time distribution must not be empty");
    double ls = 0.0;
    for (double m : lead_time_mass) {
        CS_REQUIRE(m >= 0.0, "lead time masses must be >= 0");
        ls += m;
    }
    CS_REQUIRE(std::abs(ls - 1.0) <= 1e-9, "lead time masses must sum to 1");
    CS_REQUIRE(seasonal_mix_modifiers.size() == 12, "seasonal modifiers must cover 12 months");
    for (const auto& month : seasonal_mix_modifiers) {
        CS_REQUIRE(static_cast<int>(month.size()) == types.size(),
                   "seasonal modifiers must cover every type");
        for (double m : month) CS_REQUIRE(m > 0.0, "seasonal modifiers must be > 0");
    }
    CS_REQUIRE(start_month >= 0 && start_month < 12, "start month must be in 0..11");
    CS_REQUIRE(day_offset >= 0, "day offset must be >= 0");
    CS_REQUIRE(pref_morning >= 0.0 && pref_afternoon >= 0.0 &&
                   pref_morning + pref_afternoon <= 1.0 + 1e-12,
               "time preference probabilities must be a sub-distribution");
}

int DemandParams::month_of_day(int d) const {
    CS_REQUIRE(d >= 0, "day index must be >= 0");
    return (start_month + (day_offset + d) / calendar.working_days_per_month) % 12;
}

std::vector<double> DemandParams::monthly_mix(int calendar_month) const {
    CS_REQUIRE(calendar_month >= 0 && calendar_month < 12, "calendar month must be in 0..11");
    std::vector<double> mix(static_cast<std::size_t>(types.size()));
    double sum = 0.0;
    for (int r = 0; r < types.size(); ++r) {
        mix[static_cast<std::size_t>(r)] =
            types[r].mix_fraction *
            seasonal_mix_modifiers[static_cast<std::size_t>(calendar_month)][static_cast<std::size_t>(r)];
        sum += mix[static_cast<std::size_t>(r)];
    }
    CS_REQUIRE(sum > 0.0, "monthly mix must have positive total");
    for (double& m : mix) m /= sum;
    return mix;
}

std::vector<double> make_geometric_lead_mass(int max_lead, int short_window, double short_mass) {
    CS_REQUIRE(max_lead >= 1, "max lead must be >= 1");
    CS_REQUIRE(short_window >= 0 && short_window < max_lead, "short window must be < max lead");
    CS_REQUIRE(short_mass > 0.0 && short_mass < 1.0, "short-window mass must be in (0,1)");
    // Find q so that a geometric pmf ∝ q^j truncated at max_lead puts
    // short_mass on 0..short_window. The cumulative share is monotone in q.
    auto share = [&](double q) {
        return (1.0 - std::pow(q, short_window + 1)) / (1.0 - std::pow(q, max_lead + 1));
    };
    double lo = 1e-9, hi = 1.0 - 1e-9;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (share(mid) > short_mass)
            lo = mid;
        else
            hi = mid;
    }
    const double q = 0.5 * (lo + hi);
    std::vector<double> mass(static_cast<std::size_t>(max_lead) + 1);
    double sum = 0.0;
    for (int j = 0; j <= max_lead; ++j) sum += (mass[static_cast<std::size_t>(j)] = std::pow(q, j));
    for (double& m : mass) m /= sum;
    return mass;
}

DemandParams make_default_demand_params(const PatientTypeSet& types, const CalendarConfig& cal) {
    cal.validate();
    DemandParams p;
    p.types = types;
    p.calendar = cal;
    if (cal.days_per_week == 5)
        p.weekday_desired_weights = {0.16, 0.20, 0.20, 0.20, 0.24};
    else
        p.weekday_desired_weights.assign(static_cast<std::size_t>(cal.days_per_week),
                                         1.0 / cal.days_per_week);
    p.lead_time_mass = make_geometric_lead_mass(28, 7, 0.65);
    // Mild seasonal case-mix swing: winter tilts toward acute, summer toward
    // chronic; preventive is season-free. Dec/Jan/Feb = winter, Jun/Jul/Aug = summer.
    p.seasonal_mix_modifiers.assign(12, std::vector<double>(static_cast<std::size_t>(types.size()), 1.0));
    const int acute = types.index_of("acute");
    const int chronic = types.index_of("chronic");
    if (acute >= 0 && chronic >= 0) {
        for (int m : {11, 0, 1}) {
            p.seasonal_mix_modifiers[static_cast<std::size_t>(m)][static_cast<std::size_t>(acute)] = 1.05;
            p.seasonal_mix_modifiers[static_cast<std::size_t>(m)][static_cast<std::size_t>(chronic)] = 0.95;
        }
        for (int m : {5, 6, 7}) {
            p.seasonal_mix_modifiers[static_cast<std::size_t>(m)][static_cast<std::size_t>(acute)] = 0.95;
            p.seasonal_mix_modifiers[static_cast<std::size_t>(m)][static_cast<std::size_t>(chronic)] = 1.05;
        }
    }
    p.validate();
    return p;
}

namespace {

// Weekly request count: Gamma(k, mean/k)-mixed Poisson.
int draw_weekly_volume(const VolumeModel& v, RngEngine& rng) {
    if (v.weekly_mean <= 0.0) return 0;
    std::gamma_distribution<double> gamma(v.dispersion, v.weekly_mean / v.dispersion);
    const double lambda = gamma(rng);
    if (lambda <= 0.0) return 0;
    std::poisson_distribution<int> pois(lambda);
    return pois(rng);
}

int draw_categorical(const std::vector<double>& mass, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) {
        acc += mass[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(mass.size()) - 1;
}

}  // namespace

DemandScenario generate_scenario(const DemandParams& params, int horizon, std::uint64_t seed) {
    params.validate();
    CS_REQUIRE(horizon >= 1, "horizon must be >= 1");

    DemandScenario s;
    s.horizon = horizon;
    s.f.assign(static_cast<std::size_t>(params.types.size()),
               std::vector<int>(static_cast<std::size_t>(horizon), 0));

    const int dpw = params.calendar.days_per_week;
    const int weeks = (horizon + dpw - 1) / dpw;
    std::vector<std::vector<double>> month_mix(12);
    for (int m = 0; m < 12; ++m) month_mix[static_cast<std::size_t>(m)] = params.monthly_mix(m);

    for (int w = 0; w < weeks; ++w) {
        auto vol_rng = derive_engine(seed, "scenario-volume", {static_cast<std::uint64_t>(w)});
        const int n = draw_weekly_volume(params.volume, vol_rng);
        for (int i = 0; i < n; ++i) {
            auto rng = derive_engine(seed, "scenario-patient",
                                     {static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(i)});
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            const int wd = draw_categorical(params.weekday_desired_weights, unif(rng));
            const int day = w * dpw + wd;
            const double u_type = unif(rng);
            if (day >= horizon) continue;  // partial trailing week
            const int month = params.month_of_day(day);
            const int r = draw_categorical(month_mix[static_cast<std::size_t>(month)], u_type);
            ++s.f[static_cast<std::size_t>(r)][static_cast<std::size_t>(day)];
        }
    }
    return s;
}

std::vector<DemandScenario> generate_scenarios(const DemandParams& params, int horizon,
                                               std::uint64_t seed, int count) {
    CS_REQUIRE(count >= 1, "scenario count must be >= 1");
    std::vector<DemandScenario> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        out.push_back(generate_scenario(params, horizon,
                                        derive_seed(seed, "scenario", {static_cast<std::uint64_t>(i)})));
        out.back().scenario_id = i;
    }
    return out;
}

std::vector<PatientRequest> generate_call_stream(const DemandParams& params, int horizon,
                                                 std::uint64_t seed) {
    params.validate();
    CS_REQUIRE(horizon >= 1, "horizon must be >= 1");

    const int dpw = params.calendar.days_per_week;
    const int weeks = (horizon + dpw - 1) / dpw;
    std::vector<std::vector<double>> month_mix(12);
    for (int m = 0; m < 12; ++m) month_mix[static_cast<std::size_t>(m)] = params.monthly_mix(m);

    std::vector<PatientRequest> stream;
    for (int w = 0; w < weeks; ++w) {
        auto vol_rng = derive_engine(seed, "calls-volume", {static_cast<std::uint64_t>(w)});
        const int n = draw_weekly_volume(params.volume, vol_rng);
        for (int i = 0; i < n; ++i) {
            auto rng = derive_engine(seed, "calls-patient",
                                     {static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(i)});
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            // Desired day carries the weekday shape; the call precedes it by a
            // lead drawn from the advance-booking distribution.
            const int wd = draw_categorical(params.weekday_desired_weights, unif(rng));
            const int lead = draw_categorical(params.lead_time_mass, unif(rng));
            const double u_type = unif(rng);
            const double u_pref = unif(rng);
            const int desired = w * dpw + wd;
            if (desired >= horizon) continue;
            PatientRequest req;
            req.desired_day = desired;
            req.call_day = std::max(0, desired - lead);
            const int month = params.month_of_day(desired);
            req.type = draw_categorical(month_mix[static_cast<std::size_t>(month)], u_type);
            if (u_pref < params.pref_morning)
                req.pref = TimePref::morning;
            else if (u_pref < params.pref_morning + params.pref_afternoon)
                req.pref = TimePref::afternoon;
            else
                req.pref = TimePref::none;
            stream.push_back(req);
        }
    }
    std::stable_sort(stream.begin(), stream.end(),
                     [](const PatientRequest& a, const PatientRequest& b) {
                         return a.call_day < b.call_day;
                     });
    for (std::size_t i = 0; i < stream.size(); ++i) stream[i].id = static_cast<long>(i);
    return stream;
}

// --- persistence ------------------------------------------------------------

void write_scenario(const DemandScenario& s, std::ostream& out) {
    out << "scenario v1\n";
    out << "id " << s.scenario_id << "\n";
    out << "types " << s.f.size() << "\n";
    out << "horizon " << s.horizon << "\n";
    for (std::size_t r = 0; r < s.f.size(); ++r)
        for (int d = 0; d < s.horizon; ++d) {
            const int v = s.f[r][static_cast<std::size_t>(d)];
            if (v != 0) out << r << ' ' << d << ' ' << v << "\n";
        }
}

DemandScenario read_scenario(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "scenario v1")
        throw ParseError("scenario file must start with 'scenario v1'");
    DemandScenario s;
    int types = -1;
    auto expect_int = [&](const std::string& key) {
        if (!std::getline(in, line)) throw ParseError("scenario file truncated before " + key);
        std::istringstream ls(line);
        std::string kw;
        long long v = 0;
        if (!(ls >> kw >> v) || kw != key) throw ParseError("expected '" + key + "' line, got: " + line);
        return v;
    };
    s.scenario_id = static_cast<int>(expect_int("id"));
    types = static_cast<int>(expect_int("types"));
    s.horizon = static_cast<int>(expect_int("horizon"));
    if (types < 1 || s.horizon < 1) throw ParseError("scenario dimensions must be >= 1");
    s.f.assign(static_cast<std::size_t>(types), std::vector<int>(static_cast<std::size_t>(s.horizon), 0));
    int lineno = 4;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int r = -1, d = -1, v = -1;
        if (!(ls >> r >> d >> v))
            throw ParseError("malformed scenario row at line " + std::to_string(lineno));
        if (r < 0 || r >= types || d < 0 || d >= s.horizon || v < 0)
            throw ParseError("scenario row out of range at line " + std::to_string(lineno));
        s.f[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)] = v;
    }
    return s;
}

void write_call_stream(const std::vector<PatientRequest>& stream, std::ostream& out) {
    out << "calls v1\n";
    for (const auto& req : stream) {
        const char* pref = req.pref == TimePref::morning    ? "morning"
                           : req.pref == TimePref::afternoon ? "afternoon"
                                                             : "none";
        out << req.id << ' ' << req.type << ' ' << req.call_day << ' ' << req.desired_day << ' '
            << pref << "\n";
    }
}

std::vector<PatientRequest> read_call_stream(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "calls v1")
        throw ParseError("call stream file must start with 'calls v1'");
    std::vector<PatientRequest> stream;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        PatientRequest req;
        std::string pref;
        if (!(ls >> req.id >> req.type >> req.call_day >> req.desired_day >> pref))
            throw ParseError("malformed call row at line " + std::to_string(lineno));
        if (pref == "morning")
            req.pref = TimePref::morning;
        else if (pref == "afternoon")
            req.pref = TimePref::afternoon;
        else if (pref == "none")
            req.pref = TimePref::none;
        else
            throw ParseError("unknown time preference '" + pref + "' at line " +
                             std::to_string(lineno));
        if (req.type < 0 || req.call_day < 0 || req.desired_day < req.call_day)
            throw ParseError("call row out of range at line " + std::to_string(lineno));
        stream.push_back(req);
    }
    return stream;
}

}  // namespace clinicsched
