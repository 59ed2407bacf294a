#include "clinicsched/config.hpp"

#include <cctype>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "clinicsched/errors.hpp"
#include "json.hpp"

namespace clinicsched {

namespace {

using Json = nlohmann::ordered_json;

std::string join_path(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

// Collects every problem instead of stopping at the first; typed getters
// return true only when the key exists and carries the right JSON type.
struct Loader {
    std::vector<ConfigIssue>& issues;
    bool strict;

    void err(const std::string& path, const std::string& message) {
        issues.push_back({path, message});
    }

    void check_keys(const Json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
        if (!strict || !obj.is_object()) return;
        for (const auto& item : obj.items()) {
            bool known = false;
            for (const char* k : allowed)
                if (item.key() == k) {
                    known = true;
                    break;
                }
            if (!known) err(join_path(path, item.key()), "unknown key");
        }
    }

    // Returns the block object, or nullptr when absent / not an object.
    const Json* block(const Json& root, const std::string& path, const char* key) {
        if (!root.contains(key)) return nullptr;
        const Json& b = root.at(key);
        if (!b.is_object()) {
            err(join_path(path, key), "expected an object");
            return nullptr;
        }
        return &b;
    }

    bool get_double(const Json& obj, const std::string& path, const char* key, double& out) {
        if (!obj.contains(key)) return false;
        const Json& v = obj.at(key);
        if (!v.is_number()) {
            err(join_path(path, key), "expected a number");
            return false;
        }
        out = v.get<double>();
        return true;
    }

    bool get_int(const Json& obj, const std::string& path, const char* key, int& out) {
        if (!obj.contains(key)) return false;
        const Json& v = obj.at(key);
        if (!v.is_number_integer()) {
            err(join_path(path, key), "expected an integer");
            return false;
        }
        out = v.get<int>();
        return true;
    }

    bool get_long(const Json& obj, const std::string& path, const char* key, long& out) {
        if (!obj.contains(key)) return false;
        const Json& v = obj.at(key);
        if (!v.is_number_integer()) {
            err(join_path(path, key), "expected an integer");
            return false;
        }
        out = v.get<long>();
        return true;
    }

    bool get_u64(const Json& obj, const std::string& path, const char* key, std::uint64_t& out) {
        if (!obj.contains(key)) return false;
        const Json& v = obj.at(key);
        if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0))) {
            err(join_path(path, key), "expected a nonnegative integer");
            return false;
        }
        out = v.get<std::uint64_t>();
        return true;
    }

    bool get_bool(const Json& obj, const std::string& path, const char* key, bool& out) {
        if (!obj.contains(key)) return false;
        const Json& v = obj.at(key);
        if (!v.is_boolean()) {
            err(join_path(path, key), "expected a boolean");
            return false;
        }
        out = v.get<bool>();
        return true;
    }

    bool get_string(const Json& obj, const std::string& path, const char* key, std::string& out) {
        if (!obj.contains(key)) return false;
        const Json& v = obj.at(key);
        if (!v.is_string()) {
            err(join_path(path, key), "expected a string");
            return false;
        }
        out = v.get<std::string>();
        return true;
    }

    bool get_double_array(const Json& obj, const std::string& path, const char* key,
                          std::vector<double>& out) {
        if (!obj.contains(key)) return false;
        const Json& v = obj.at(key);
        if (!v.is_array()) {
            err(join_path(path, key), "expected an array of numbers");
            return false;
        }
        std::vector<double> vals;
        for (const Json& e : v) {
            if (!e.is_number()) {
                err(join_path(path, key), "expected an array of numbers");
                return false;
            }
            vals.push_back(e.get<double>());
        }
        out = std::move(vals);
        return true;
    }
};

void parse_calendar(Loader& L, const Json& b, CalendarConfig& cal) {
    L.check_keys(b, "calendar",
                 {"days_per_week", "sessions_per_day", "slots_per_session", "slot_minutes",
                  "day_start", "lunch_start", "lunch_end", "day_end", "working_days_per_month"});
    L.get_int(b, "calendar", "days_per_week", cal.days_per_week);
    L.get_int(b, "calendar", "sessions_per_day", cal.sessions_per_day);
    L.get_int(b, "calendar", "slots_per_session", cal.slots_per_session);
    L.get_int(b, "calendar", "slot_minutes", cal.slot_minutes);
    L.get_int(b, "calendar", "day_start", cal.day_start);
    L.get_int(b, "calendar", "lunch_start", cal.lunch_start);
    L.get_int(b, "calendar", "lunch_end", cal.lunch_end);
    L.get_int(b, "calendar", "day_end", cal.day_end);
    L.get_int(b, "calendar", "working_days_per_month", cal.working_days_per_month);
}

void parse_budget(Loader& L, const Json& b, ComplexityBudget& budget) {
    L.check_keys(b, "budget", {"kappa", "eta"});
    double kappa = budget.kappa;
    double eta = budget.eta;
    if (L.get_double(b, "budget", "kappa", kappa)) {
        if (kappa > 0.0)
            budget.kappa = kappa;
        else
            L.err("budget.kappa", "must be > 0");
    }
    if (L.get_double(b, "budget", "eta", eta)) {
        if (eta > 0.0)
            budget.eta = eta;
        else
            L.err("budget.eta", "must be > 0");
    }
    if (budget.eta < budget.kappa) L.err("budget.eta", "must be >= budget.kappa");
}

bool parse_types(Loader& L, const Json& arr, PatientTypeSet& out) {
    if (!arr.is_array() || arr.empty()) {
        L.err("types", "expected a non-empty array of type objects");
        return false;
    }
    std::vector<PatientTypeSpec> specs;
    bool fields_ok = true;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "types[" + std::to_string(i) + "]";
        const Json& t = arr.at(i);
        if (!t.is_object()) {
            L.err(path, "expected an object");
            fields_ok = false;
            continue;
        }
        L.check_keys(t, path,
                     {"label", "complexity", "no_show_prob", "weight", "nurse_mean", "nurse_sd",
                      "provider_mean", "provider_sd", "mix_fraction"});
        PatientTypeSpec spec;
        spec.id = static_cast<int>(i);
        fields_ok &= L.get_string(t, path, "label", spec.label);
        fields_ok &= L.get_double(t, path, "complexity", spec.complexity);
        fields_ok &= L.get_double(t, path, "no_show_prob", spec.no_show_prob);
        L.get_double(t, path, "weight", spec.weight);
        fields_ok &= L.get_double(t, path, "nurse_mean", spec.nurse.mean_minutes);
        L.get_double(t, path, "nurse_sd", spec.nurse.sd_minutes);
        fields_ok &= L.get_double(t, path, "provider_mean", spec.provider.mean_minutes);
        L.get_double(t, path, "provider_sd", spec.provider.sd_minutes);
        fields_ok &= L.get_double(t, path, "mix_fraction", spec.mix_fraction);
        specs.push_back(std::move(spec));
    }
    if (!fields_ok) {
        L.err("types", "every type needs label, complexity, no_show_prob, nurse_mean, "
                       "provider_mean and mix_fraction");
        return false;
    }
    try {
        out = PatientTypeSet(std::move(specs));
        return true;
    } catch (const std::exception& e) {
        L.err("types", e.what());
        return false;
    }
}

void parse_demand(Loader& L, const Json& b, DemandParams& d) {
    L.check_keys(b, "demand",
                 {"weekly_mean", "dispersion", "weekday_weights", "lead_time_mass", "lead_time",
                  "seasonal_mix_modifiers", "pref_morning", "pref_afternoon"});
    double weekly_mean = d.volume.weekly_mean;
    if (L.get_double(b, "demand", "weekly_mean", weekly_mean)) {
        if (weekly_mean >= 0.0)
            d.volume.weekly_mean = weekly_mean;
        else
            L.err("demand.weekly_mean", "must be >= 0");
    }
    double dispersion = d.volume.dispersion;
    if (L.get_double(b, "demand", "dispersion", dispersion)) {
        if (dispersion > 0.0)
            d.volume.dispersion = dispersion;
        else
            L.err("demand.dispersion", "must be > 0");
    }
    std::vector<double> weights;
    if (L.get_double_array(b, "demand", "weekday_weights", weights)) d.weekday_desired_weights = weights;

    const bool has_mass = b.contains("lead_time_mass");
    const bool has_gen = b.contains("lead_time");
    if (has_mass && has_gen)
        L.err("demand.lead_time", "give either lead_time_mass or lead_time, not both");
    std::vector<double> mass;
    if (has_mass && L.get_double_array(b, "demand", "lead_time_mass", mass)) d.lead_time_mass = mass;
    if (has_gen && !has_mass) {
        const Json& g = b.at("lead_time");
        if (!g.is_object()) {
            L.err("demand.lead_time", "expected an object");
        } else {
            L.check_keys(g, "demand.lead_time", {"max_lead", "short_window", "short_mass"});
            int max_lead = static_cast<int>(d.lead_time_mass.size()) - 1;
            int short_window = 7;
            double short_mass = 0.65;
            L.get_int(g, "demand.lead_time", "max_lead", max_lead);
            L.get_int(g, "demand.lead_time", "short_window", short_window);
            L.get_double(g, "demand.lead_time", "short_mass", short_mass);
            try {
                d.lead_time_mass = make_geometric_lead_mass(max_lead, short_window, short_mass);
            } catch (const std::exception& e) {
                L.err("demand.lead_time", e.what());
            }
        }
    }

    if (b.contains("seasonal_mix_modifiers")) {
        const Json& s = b.at("seasonal_mix_modifiers");
        bool shape_ok = s.is_array() && s.size() == 12;
        std::vector<std::vector<double>> rows;
        if (shape_ok)
            for (const Json& row : s) {
                std::vector<double> vals;
                if (!row.is_array()) {
                    shape_ok = false;
                    break;
                }
                for (const Json& e : row) {
                    if (!e.is_number()) {
                        shape_ok = false;
                        break;
                    }
                    vals.push_back(e.get<double>());
                }
                rows.push_back(std::move(vals));
            }
        if (shape_ok)
            d.seasonal_mix_modifiers = std::move(rows);
        else
            L.err("demand.seasonal_mix_modifiers", "expected 12 arrays of numbers");
    }

    L.get_double(b, "demand", "pref_morning", d.pref_morning);
    L.get_double(b, "demand", "pref_afternoon", d.pref_afternoon);
}

void parse_flow(Loader& L, const Json& b, FlowParams& f) {
    L.check_keys(b, "flow",
                 {"arrival_mean", "arrival_sd", "early_arrival_cap", "no_show_model",
                  "no_show_base_p", "replications", "alpha", "direct_wait_threshold",
                  "lunch_threshold", "after_hours_threshold", "wait_from_scheduled"});
    L.get_double(b, "flow", "arrival_mean", f.arrival_mean);
    L.get_double(b, "flow", "arrival_sd", f.arrival_sd);
    L.get_double(b, "flow", "early_arrival_cap", f.early_arrival_cap);
    std::string model;
    if (L.get_string(b, "flow", "no_show_model", model)) {
        try {
            f.no_show.kind = no_show_kind_from_string(model);
        } catch (const std::exception& e) {
            L.err("flow.no_show_model", e.what());
        }
    }
    L.get_double(b, "flow", "no_show_base_p", f.no_show.base_p);
    L.get_int(b, "flow", "replications", f.replications);
    L.get_double(b, "flow", "alpha", f.alpha);
    L.get_double(b, "flow", "direct_wait_threshold", f.direct_wait_threshold);
    L.get_double(b, "flow", "lunch_threshold", f.lunch_threshold);
    L.get_double(b, "flow", "after_hours_threshold", f.after_hours_threshold);
    L.get_bool(b, "flow", "wait_from_scheduled", f.wait_from_scheduled);
}

void parse_booking(Loader& L, const Json& b, IndexPolicyParams& p) {
    L.check_keys(b, "booking",
                 {"beta", "acceptance_threshold", "booking_horizon", "cancellation_rate"});
    L.get_double(b, "booking", "beta", p.beta);
    L.get_double(b, "booking", "acceptance_threshold", p.acceptance_threshold);
    L.get_int(b, "booking", "booking_horizon", p.booking_horizon);
    L.get_double(b, "booking", "cancellation_rate", p.cancellation_rate);
}

void parse_optimizer(Loader& L, const Json& b, OptimizeParams& p) {
    L.check_keys(b, "optimizer",
                 {"scenario_count", "gap_target", "saa_batches", "eval_sample",
                  "time_limit_seconds", "node_budget", "max_per_slot", "epsilon",
                  "denial_penalty", "workers"});
    L.get_int(b, "optimizer", "scenario_count", p.scenario_count);
    L.get_double(b, "optimizer", "gap_target", p.gap_target);
    L.get_int(b, "optimizer", "saa_batches", p.saa_batches);
    L.get_int(b, "optimizer", "eval_sample", p.eval_sample);
    L.get_double(b, "optimizer", "time_limit_seconds", p.time_limit_seconds);
    L.get_long(b, "optimizer", "node_budget", p.node_budget);
    L.get_int(b, "optimizer", "max_per_slot", p.max_per_slot);
    L.get_double(b, "optimizer", "epsilon", p.epsilon);
    L.get_double(b, "optimizer", "denial_penalty", p.denial_penalty);
    L.get_int(b, "optimizer", "workers", p.workers);
}

// Runs a block's own validator, attributing any failure to the block's path.
template <typename T>
void validate_block(Loader& L, const std::string& path, const T& value) {
    try {
        value.validate();
    } catch (const std::exception& e) {
        L.err(path, e.what());
    }
}

bool blank(const std::string& s) {
    for (char c : s)
        if (std::isspace(static_cast<unsigned char>(c)) == 0) return false;
    return true;
}

}  // namespace

std::string to_string(BookingPolicy p) {
    switch (p) {
        case BookingPolicy::two_stage: return "two_stage";
        case BookingPolicy::spt: return "spt";
        case BookingPolicy::lcvb: return "lcvb";
        case BookingPolicy::raw_capacity: return "raw_capacity";
    }
    throw ContractViolation("unknown booking policy value");
}

BookingPolicy booking_policy_from_string(const std::string& s) {
    if (s == "two_stage") return BookingPolicy::two_stage;
    if (s == "spt") return BookingPolicy::spt;
    if (s == "lcvb") return BookingPolicy::lcvb;
    if (s == "raw_capacity") return BookingPolicy::raw_capacity;
    throw ContractViolation("unknown booking policy '" + s +
                            "' (expected two_stage, spt, lcvb or raw_capacity)");
}

void RunConfig::validate() const {
    calendar.validate();
    budget.validate();
    demand.validate();
    flow.validate();
    booking.validate();
    optimizer.validate();
    CS_REQUIRE(planning_horizon >= 1, "planning_horizon must be >= 1");
    CS_REQUIRE(warmup_days >= 0 && warmup_days < planning_horizon,
               "warmup_days must be in [0, planning_horizon)");
    CS_REQUIRE(booking.booking_horizon <= planning_horizon,
               "booking.booking_horizon must be <= planning_horizon");
    CS_REQUIRE(cut_limit >= 1, "cut_limit must be >= 1");
    CS_REQUIRE(raw_seats_per_slot >= 1, "raw_seats_per_slot must be >= 1");
    CS_REQUIRE(start_calendar_month >= 0 && start_calendar_month < 12,
               "start_calendar_month must be in 0..11");
    CS_REQUIRE(demand.types.size() == types.size(),
               "demand block must carry the same patient types");
    for (int r = 0; r < types.size(); ++r)
        CS_REQUIRE(demand.types[r].label == types[r].label,
                   "demand block must carry the same patient types");
    CS_REQUIRE(demand.calendar.days_per_week == calendar.days_per_week &&
                   demand.calendar.working_days_per_month == calendar.working_days_per_month,
               "demand block must carry the same calendar");
    CS_REQUIRE(demand.start_month == start_calendar_month,
               "demand start month must match start_calendar_month");
}

ConfigResult parse_config(const std::string& text, bool strict) {
    ConfigResult result;
    RunConfig& cfg = result.config;
    Loader L{result.errors, strict};

    Json root = Json::object();
    if (!blank(text)) {
        try {
            root = Json::parse(text);
        } catch (const std::exception& e) {
            L.err("json", e.what());
            return result;
        }
        if (!root.is_object()) {
            L.err("json", "top level must be an object");
            return result;
        }
    }

    L.check_keys(root, "",
                 {"seed", "policy", "planning_horizon", "warmup_days", "cut_limit",
                  "raw_seats_per_slot", "start_calendar_month", "calendar_day_waits",
                  "compute_saa_gap", "calendar", "budget", "types", "demand", "flow", "booking",
                  "optimizer"});

    // Top-level scalars first: start_calendar_month feeds the demand block.
    L.get_u64(root, "", "seed", cfg.seed);
    std::string policy;
    if (L.get_string(root, "", "policy", policy)) {
        try {
            cfg.policy = booking_policy_from_string(policy);
        } catch (const std::exception& e) {
            L.err("policy", e.what());
        }
    }
    int horizon = cfg.planning_horizon;
    if (L.get_int(root, "", "planning_horizon", horizon)) {
        if (horizon >= 1)
            cfg.planning_horizon = horizon;
        else
            L.err("planning_horizon", "must be >= 1");
    }
    int warmup = cfg.warmup_days;
    if (L.get_int(root, "", "warmup_days", warmup)) {
        if (warmup >= 0)
            cfg.warmup_days = warmup;
        else
            L.err("warmup_days", "must be >= 0");
    }
    int cut_limit = cfg.cut_limit;
    if (L.get_int(root, "", "cut_limit", cut_limit)) {
        if (cut_limit >= 1)
            cfg.cut_limit = cut_limit;
        else
            L.err("cut_limit", "must be >= 1");
    }
    int raw_seats = cfg.raw_seats_per_slot;
    if (L.get_int(root, "", "raw_seats_per_slot", raw_seats)) {
        if (raw_seats >= 1)
            cfg.raw_seats_per_slot = raw_seats;
        else
            L.err("raw_seats_per_slot", "must be >= 1");
    }
    int start_month = cfg.start_calendar_month;
    if (L.get_int(root, "", "start_calendar_month", start_month)) {
        if (start_month >= 0 && start_month < 12)
            cfg.start_calendar_month = start_month;
        else
            L.err("start_calendar_month", "must be in 0..11");
    }
    L.get_bool(root, "", "calendar_day_waits", cfg.calendar_day_waits);
    L.get_bool(root, "", "compute_saa_gap", cfg.compute_saa_gap);

    if (const Json* b = L.block(root, "", "calendar")) parse_calendar(L, *b, cfg.calendar);
    validate_block(L, "calendar", cfg.calendar);

    if (const Json* b = L.block(root, "", "budget")) parse_budget(L, *b, cfg.budget);

    if (root.contains("types")) parse_types(L, root.at("types"), cfg.types);

    // The demand model embeds the types and calendar, so it is rebuilt from
    // the resolved ones before its own overrides apply.
    cfg.demand = make_default_demand_params(cfg.types, cfg.calendar);
    cfg.demand.start_month = cfg.start_calendar_month;
    if (const Json* b = L.block(root, "", "demand")) parse_demand(L, *b, cfg.demand);
    validate_block(L, "demand", cfg.demand);

    if (const Json* b = L.block(root, "", "flow")) parse_flow(L, *b, cfg.flow);
    validate_block(L, "flow", cfg.flow);

    if (const Json* b = L.block(root, "", "booking")) parse_booking(L, *b, cfg.booking);
    validate_block(L, "booking", cfg.booking);

    if (const Json* b = L.block(root, "", "optimizer")) parse_optimizer(L, *b, cfg.optimizer);
    validate_block(L, "optimizer", cfg.optimizer);

    if (cfg.booking.booking_horizon > cfg.planning_horizon)
        L.err("booking.booking_horizon", "must be <= planning_horizon");
    if (cfg.warmup_days >= cfg.planning_horizon)
        L.err("warmup_days", "must be < planning_horizon");

    return result;
}

ConfigResult validate_config(const std::string& path, bool strict) {
    std::ifstream in(path);
    if (!in) {
        ConfigResult r;
        r.errors.push_back({"file", "cannot read '" + path + "'"});
        return r;
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), strict);
}

RunConfig load_config_or_throw(const std::string& path, bool strict) {
    ConfigResult r = validate_config(path, strict);
    if (!r.ok()) {
        std::string msg = "config invalid:";
        for (const auto& issue : r.errors) msg += "\n  " + issue.path + ": " + issue.message;
        throw ContractViolation(msg);
    }
    return r.config;
}

std::string config_to_json(const RunConfig& cfg) {
    Json j = Json::object();
    j["seed"] = cfg.seed;
    j["policy"] = to_string(cfg.policy);
    j["planning_horizon"] = cfg.planning_horizon;
    j["warmup_days"] = cfg.warmup_days;
    j["cut_limit"] = cfg.cut_limit;
    j["raw_seats_per_slot"] = cfg.raw_seats_per_slot;
    j["start_calendar_month"] = cfg.start_calendar_month;
    j["calendar_day_waits"] = cfg.calendar_day_waits;
    j["compute_saa_gap"] = cfg.compute_saa_gap;

    Json cal = Json::object();
    cal["days_per_week"] = cfg.calendar.days_per_week;
    cal["sessions_per_day"] = cfg.calendar.sessions_per_day;
    cal["slots_per_session"] = cfg.calendar.slots_per_session;
    cal["slot_minutes"] = cfg.calendar.slot_minutes;
    cal["day_start"] = cfg.calendar.day_start;
    cal["lunch_start"] = cfg.calendar.lunch_start;
    cal["lunch_end"] = cfg.calendar.lunch_end;
    cal["day_end"] = cfg.calendar.day_end;
    cal["working_days_per_month"] = cfg.calendar.working_days_per_month;
    j["calendar"] = std::move(cal);

    Json budget = Json::object();
    budget["kappa"] = cfg.budget.kappa;
    budget["eta"] = cfg.budget.eta;
    j["budget"] = std::move(budget);

    Json types = Json::array();
    for (const auto& t : cfg.types.all()) {
        Json e = Json::object();
        e["label"] = t.label;
        e["complexity"] = t.complexity;
        e["no_show_prob"] = t.no_show_prob;
        e["weight"] = t.weight;
        e["nurse_mean"] = t.nurse.mean_minutes;
        e["nurse_sd"] = t.nurse.sd_minutes;
        e["provider_mean"] = t.provider.mean_minutes;
        e["provider_sd"] = t.provider.sd_minutes;
        e["mix_fraction"] = t.mix_fraction;
        types.push_back(std::move(e));
    }
    j["types"] = std::move(types);

    Json demand = Json::object();
    demand["weekly_mean"] = cfg.demand.volume.weekly_mean;
    demand["dispersion"] = cfg.demand.volume.dispersion;
    demand["weekday_weights"] = cfg.demand.weekday_desired_weights;
    demand["lead_time_mass"] = cfg.demand.lead_time_mass;
    demand["seasonal_mix_modifiers"] = cfg.demand.seasonal_mix_modifiers;
    demand["pref_morning"] = cfg.demand.pref_morning;
    demand["pref_afternoon"] = cfg.demand.pref_afternoon;
    j["demand"] = std::move(demand);

    Json flow = Json::object();
    flow["arrival_mean"] = cfg.flow.arrival_mean;
    flow["arrival_sd"] = cfg.flow.arrival_sd;
    flow["early_arrival_cap"] = cfg.flow.early_arrival_cap;
    flow["no_show_model"] = to_string(cfg.flow.no_show.kind);
    flow["no_show_base_p"] = cfg.flow.no_show.base_p;
    flow["replications"] = cfg.flow.replications;
    flow["alpha"] = cfg.flow.alpha;
    flow["direct_wait_threshold"] = cfg.flow.direct_wait_threshold;
    flow["lunch_threshold"] = cfg.flow.lunch_threshold;
    flow["after_hours_threshold"] = cfg.flow.after_hours_threshold;
    flow["wait_from_scheduled"] = cfg.flow.wait_from_scheduled;
    j["flow"] = std::move(flow);

    Json booking = Json::object();
    booking["beta"] = cfg.booking.beta;
    booking["acceptance_threshold"] = cfg.booking.acceptance_threshold;
    booking["booking_horizon"] = cfg.booking.booking_horizon;
    booking["cancellation_rate"] = cfg.booking.cancellation_rate;
    j["booking"] = std::move(booking);

    Json optimizer = Json::object();
    optimizer["scenario_count"] = cfg.optimizer.scenario_count;
    optimizer["gap_target"] = cfg.optimizer.gap_target;
    optimizer["saa_batches"] = cfg.optimizer.saa_batches;
    optimizer["eval_sample"] = cfg.optimizer.eval_sample;
    optimizer["time_limit_seconds"] = cfg.optimizer.time_limit_seconds;
    optimizer["node_budget"] = cfg.optimizer.node_budget;
    optimizer["max_per_slot"] = cfg.optimizer.max_per_slot;
    optimizer["epsilon"] = cfg.optimizer.epsilon;
    optimizer["denial_penalty"] = cfg.optimizer.denial_penalty;
    optimizer["workers"] = cfg.optimizer.workers;
    j["optimizer"] = std::move(optimizer);

    return j.dump(2) + "\n";
}

}  // namespace clinicsched
