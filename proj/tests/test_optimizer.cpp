#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "clinicsched/optimizer.hpp"
#include "clinicsched/random.hpp"
#include "clinicsched/scenario.hpp"
#include "doctest.h"

using namespace clinicsched;

namespace {

// Single-session calendar with `slots` hour slots; the smallest shape the
// optimizer accepts, used to keep brute-force enumeration affordable.
CalendarConfig tiny_calendar(int days_per_week, int slots) {
    CalendarConfig cal;
    cal.days_per_week = days_per_week;
    cal.sessions_per_day = 1;
    cal.slots_per_session = slots;
    cal.slot_minutes = 60;
    cal.day_start = 480;
    cal.day_end = 480 + slots * 60;
    cal.working_days_per_month = 20;
    return cal;
}

PatientTypeSet tiny_types(const std::vector<double>& complexity,
                          std::vector<double> no_show = {}, std::vector<double> weight = {}) {
    const int R = static_cast<int>(complexity.size());
    if (no_show.empty()) no_show.assign(static_cast<std::size_t>(R), 0.0);
    if (weight.empty()) weight.assign(static_cast<std::size_t>(R), 1.0);
    std::vector<PatientTypeSpec> t(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
        const auto ri = static_cast<std::size_t>(r);
        t[ri].id = r;
        t[ri].label = "t" + std::to_string(r);
        t[ri].complexity = complexity[ri];
        t[ri].no_show_prob = no_show[ri];
        t[ri].weight = weight[ri];
        t[ri].nurse = {10.0, 0.0};
        t[ri].provider = {15.0, 0.0};
        t[ri].mix_fraction = r == R - 1 ? 1.0 - (R - 1) * (1.0 / R) : 1.0 / R;
    }
    return PatientTypeSet(std::move(t));
}

DemandScenario make_scenario(int id, std::vector<std::vector<int>> f) {
    DemandScenario s;
    s.scenario_id = id;
    s.horizon = static_cast<int>(f.front().size());
    s.f = std::move(f);
    return s;
}

int ri(RngEngine& g, int lo, int hi) {  // inclusive
    return lo + static_cast<int>(g() % static_cast<std::uint64_t>(hi - lo + 1));
}

double rd(RngEngine& g, double lo, double hi) {
    const double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

bool lex_less(const CountMatrix& a, const CountMatrix& b) {
    for (int r = 0; r < a.types(); ++r)
        for (int s = 0; s < a.weekly_slots(); ++s)
            if (a.at(r, s) != b.at(r, s)) return a.at(r, s) < b.at(r, s);
    return false;
}

// Exhaustive reference: every count matrix with entries 0..cap, filtered by
// the validator, scored by the SAA objective; ties within a 1e-9 relative
// band resolve to the lexicographically smallest matrix.
struct BruteResult {
    bool feasible = false;
    WeeklyTemplate best;
    double objective = 0.0;
};

BruteResult brute_force(const std::vector<DemandScenario>& scenarios, const PatientTypeSet& types,
                        const CalendarConfig& cal, const CommitmentFloor* floor,
                        const std::vector<ForbiddenDayConfig>& banned,
                        const ComplexityBudget& budget, int cap, double epsilon) {
    const int R = types.size();
    const int A = cal.slots_per_week();
    RecourseConfig rcfg;
    rcfg.epsilon = epsilon;

    BruteResult out;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<WeeklyTemplate> pool;
    std::vector<double> values;

    std::vector<int> cells(static_cast<std::size_t>(R * A), 0);
    while (true) {
        WeeklyTemplate t(0, types, cal);
        for (int r = 0; r < R; ++r)
            for (int a = 0; a < A; ++a) t.counts.at(r, a) = cells[static_cast<std::size_t>(r * A + a)];
        if (validate_template(t, types, cal, budget, floor, banned).feasible()) {
            const double v = saa_objective(t, scenarios, types, cal, rcfg);
            pool.push_back(t);
            values.push_back(v);
            best_value = std::min(best_value, v);
        }
        int i = 0;
        while (i < R * A && cells[static_cast<std::size_t>(i)] == cap) cells[static_cast<std::size_t>(i++)] = 0;
        if (i == R * A) break;
        ++cells[static_cast<std::size_t>(i)];
    }
    if (pool.empty()) return out;

    const double band = best_value <= 0.0 ? 0.0 : best_value * (1.0 + 1e-9);
    out.feasible = true;
    bool have = false;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (values[i] > band) continue;
        if (!have || lex_less(pool[i].counts, out.best.counts)) {
            out.best = pool[i];
            out.objective = values[i];
            have = true;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("slot configuration catalog: worked examples") {
    const auto types = make_default_types();
    ComplexityBudget budget;  // kappa 0.96

    SUBCASE("default mix, caps of three") {
        const auto cat = enumerate_slot_configs(types, budget.kappa, {3, 3, 3});
        CHECK(cat.size() == 15);
        CHECK(cat.contains({3, 0, 0}));  // 0.87
        CHECK(cat.contains({0, 3, 0}));  // 0.96 exactly (binary rounding stays inside)
        CHECK(cat.contains({0, 0, 2}));  // 0.72
        CHECK_FALSE(cat.contains({1, 1, 1}));  // 0.97
        CHECK_FALSE(cat.contains({0, 0, 3}));  // 1.08
        // lexicographically ascending and duplicate-free
        CHECK(std::is_sorted(cat.configs.begin(), cat.configs.end()));
        CHECK(std::adjacent_find(cat.configs.begin(), cat.configs.end()) == cat.configs.end());
    }

    SUBCASE("budget below every complexity leaves only the empty slot") {
        const auto one = tiny_types({0.5});
        const auto cat = enumerate_slot_configs(one, 0.3, {4});
        REQUIRE(cat.size() == 1);
        CHECK(cat.configs.front() == std::vector<int>{0});
    }

    SUBCASE("single type counts up to the budget") {
        const auto one = tiny_types({0.5});
        const auto cat = enumerate_slot_configs(one, 1.0, {5});
        REQUIRE(cat.size() == 3);
        CHECK(cat.configs == std::vector<std::vector<int>>{{0}, {1}, {2}});
    }

    SUBCASE("argument contracts") {
        CHECK_THROWS_AS(enumerate_slot_configs(types, 0.0, {3, 3, 3}), ContractViolation);
        CHECK_THROWS_AS(enumerate_slot_configs(types, 0.96, {3, 3}), ContractViolation);
        CHECK_THROWS_AS(enumerate_slot_configs(types, 0.96, {3, -1, 3}), ContractViolation);
    }
}

TEST_CASE("slot configuration catalog: matches direct enumeration") {
    RngEngine rng = derive_engine(20240817, "catalog-fuzz");
    for (int trial = 0; trial < 25; ++trial) {
        const int R = ri(rng, 1, 3);
        std::vector<double> comp;
        for (int r = 0; r < R; ++r) comp.push_back(rd(rng, 0.15, 0.7));
        const auto types = tiny_types(comp);
        const double kappa = rd(rng, 0.2, 1.3);
        std::vector<int> caps;
        for (int r = 0; r < R; ++r) caps.push_back(ri(rng, 0, 3));

        const auto cat = enumerate_slot_configs(types, kappa, caps);

        std::vector<std::vector<int>> expect;
        std::vector<int> x(static_cast<std::size_t>(R), 0);
        while (true) {
            double load = 0.0;
            for (int r = 0; r < R; ++r) load += x[static_cast<std::size_t>(r)] * comp[static_cast<std::size_t>(r)];
            if (load <= kappa + 1e-9) expect.push_back(x);
            int i = R - 1;
            while (i >= 0 && x[static_cast<std::size_t>(i)] == caps[static_cast<std::size_t>(i)])
                x[static_cast<std::size_t>(i--)] = 0;
            if (i < 0) break;
            ++x[static_cast<std::size_t>(i)];
        }
        std::sort(expect.begin(), expect.end());
        CHECK(cat.configs == expect);
    }
}

TEST_CASE("optimizer: zero demand yields the all-zero template") {
    const auto types = make_default_types();
    const CalendarConfig cal;
    ComplexityBudget budget;
    std::vector<DemandScenario> scen{
        make_scenario(0, {std::vector<int>(10, 0), std::vector<int>(10, 0), std::vector<int>(10, 0)})};
    OptimizeParams params;
    params.gap_target = 0.0;

    auto res = optimize_template(scen, types, cal, nullptr, {}, budget, params);
    CHECK(res.objective == 0.0);
    CHECK(res.certificate.relative_gap == 0.0);
    for (int r = 0; r < types.size(); ++r)
        for (int a = 0; a < cal.slots_per_week(); ++a) CHECK(res.tmpl.counts.at(r, a) == 0);

    SUBCASE("a commitment floor is reproduced exactly") {
        CommitmentFloor floor;
        floor.floors = CountMatrix(types.size(), cal.slots_per_week());
        floor.floors.at(0, 0) = 2;
        floor.floors.at(1, 5) = 1;
        floor.floors.at(2, cal.slots_per_week() - 1) = 1;
        auto fres = optimize_template(scen, types, cal, &floor, {}, budget, params);
        CHECK(fres.objective == 0.0);
        CHECK(fres.tmpl.counts == floor.floors);
    }
}

TEST_CASE("optimizer: heavy demand saturates capacity") {
    const auto one = tiny_types({0.3});
    const auto cal = tiny_calendar(1, 2);
    ComplexityBudget budget;  // kappa 0.96 -> three per slot
    std::vector<DemandScenario> scen{make_scenario(0, {{50, 50}})};
    OptimizeParams params;
    params.gap_target = 0.0;

    auto res = optimize_template(scen, one, cal, nullptr, {}, budget, params);
    CHECK(res.tmpl.counts.at(0, 0) == 3);
    CHECK(res.tmpl.counts.at(0, 1) == 3);
    CHECK(res.objective > 0.0);  // demand far exceeds capacity: denials remain
}

TEST_CASE("optimizer: a cut moves the solution to the next-best packing") {
    const auto one = tiny_types({0.4});
    const auto cal = tiny_calendar(1, 2);
    ComplexityBudget budget;
    budget.kappa = 0.85;  // two per slot
    std::vector<DemandScenario> scen{make_scenario(0, {{40, 40}})};
    OptimizeParams params;
    params.gap_target = 0.0;
    params.max_per_slot = 2;

    auto base = optimize_template(scen, one, cal, nullptr, {}, budget, params);
    CHECK(base.tmpl.counts.at(0, 0) == 2);
    CHECK(base.tmpl.counts.at(0, 1) == 2);

    ForbiddenDayConfig cut;
    cut.weekday = 0;
    cut.per_slot_counts = {{2}, {2}};
    auto cutres = optimize_template(scen, one, cal, nullptr, {cut}, budget, params);
    // Capacity four is gone (only packing banned); of the two packings of
    // three, [1,2] is the lexicographically smaller.
    CHECK(cutres.tmpl.counts.at(0, 0) == 1);
    CHECK(cutres.tmpl.counts.at(0, 1) == 2);
    CHECK(cutres.objective >= base.objective);
}

TEST_CASE("optimizer: matches exhaustive search on small instances") {
    RngEngine rng = derive_engine(77001, "optimizer-brute");
    int checked = 0;
    int infeasible_seen = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int days = ri(rng, 1, 2);
        const int R = days == 2 ? 1 : ri(rng, 1, 2);
        const int S = 2;
        const int cap = ri(rng, 1, 2);
        const auto cal = tiny_calendar(days, S);
        std::vector<double> comp, noshow, weight;
        for (int r = 0; r < R; ++r) {
            comp.push_back(rd(rng, 0.2, 0.6));
            noshow.push_back(ri(rng, 0, 1) ? rd(rng, 0.0, 0.3) : 0.0);
            weight.push_back(rd(rng, 0.5, 2.0));
        }
        const auto types = tiny_types(comp, noshow, weight);
        ComplexityBudget budget;
        budget.kappa = rd(rng, 0.5, 1.2);
        budget.eta = budget.kappa * rd(rng, 1.0, 2.0);
        const double epsilon = ri(rng, 0, 1) ? 0.1 : 0.0;

        const int n = ri(rng, 1, 3);
        const int H = ri(rng, 1, 3);
        std::vector<DemandScenario> scen;
        for (int s = 0; s < n; ++s) {
            std::vector<std::vector<int>> f(static_cast<std::size_t>(R),
                                            std::vector<int>(static_cast<std::size_t>(H)));
            for (auto& row : f)
                for (auto& v : row) v = ri(rng, 0, 4);
            scen.push_back(make_scenario(s, std::move(f)));
        }

        // Optional floor (kept only when itself feasible) and cuts aimed at the
        // unconstrained optimum so they actually bind.
        CommitmentFloor floor;
        const CommitmentFloor* floor_ptr = nullptr;
        if (ri(rng, 0, 3) == 0) {
            floor.floors = CountMatrix(R, cal.slots_per_week());
            for (int r = 0; r < R; ++r)
                for (int a = 0; a < cal.slots_per_week(); ++a)
                    floor.floors.at(r, a) = ri(rng, 0, 4) == 0 ? 1 : 0;
            if (validate_floor(floor, types, cal, budget).feasible()) floor_ptr = &floor;
        }
        std::vector<ForbiddenDayConfig> cuts;
        if (ri(rng, 0, 1) == 0) {
            auto plain = brute_force(scen, types, cal, floor_ptr, {}, budget, cap, epsilon);
            if (plain.feasible) {
                ForbiddenDayConfig cut;
                cut.weekday = ri(rng, 0, days - 1);
                cut.per_slot_counts = day_configuration(plain.best, cut.weekday, cal);
                cuts.push_back(cut);
            }
        }

        const auto oracle = brute_force(scen, types, cal, floor_ptr, cuts, budget, cap, epsilon);

        OptimizeParams params;
        params.gap_target = 0.0;
        params.max_per_slot = cap;
        params.epsilon = epsilon;
        if (!oracle.feasible) {
            CHECK_THROWS_AS(optimize_template(scen, types, cal, floor_ptr, cuts, budget, params),
                            InfeasibleModel);
            ++infeasible_seen;
            continue;
        }
        auto res = optimize_template(scen, types, cal, floor_ptr, cuts, budget, params);
        CHECK(res.tmpl.counts == oracle.best.counts);
        CHECK(res.objective == oracle.objective);
        CHECK(res.certificate.relative_gap <= 1e-9);
        CHECK(res.certificate.lower_bound <= res.objective);
        // the reported objective is the SAA objective of the returned template
        RecourseConfig rcfg;
        rcfg.epsilon = epsilon;
        CHECK(res.objective == saa_objective(res.tmpl, scen, types, cal, rcfg));
        ++checked;
    }
    CHECK(checked >= 30);
}

TEST_CASE("objective depends on counts only through daily capacity") {
    const auto types = make_default_types();
    const CalendarConfig cal;
    ComplexityBudget budget;
    auto t = make_spt_template(types, cal, budget);

    auto params = make_default_demand_params(types, cal);
    const auto scen = generate_scenarios(params, 15, 4242, 4);

    // swap two morning slots on Monday: same sessions, same daily totals
    auto swapped = t;
    for (int r = 0; r < types.size(); ++r)
        std::swap(swapped.counts.at(r, cal.weekly_slot(0, 0)), swapped.counts.at(r, cal.weekly_slot(0, 2)));
    REQUIRE(validate_template(swapped, types, cal, budget).feasible());
    REQUIRE(!(swapped.counts == t.counts));

    CHECK(saa_objective(t, scen, types, cal) == saa_objective(swapped, scen, types, cal));
}

TEST_CASE("optimizer: cuts and floors never improve the optimum") {
    const auto types = make_default_types();
    const auto cal = tiny_calendar(2, 2);
    ComplexityBudget budget;
    RngEngine rng = derive_engine(5150, "monotone");
    std::vector<DemandScenario> scen;
    for (int s = 0; s < 2; ++s) {
        std::vector<std::vector<int>> f(3, std::vector<int>(4));
        for (auto& row : f)
            for (auto& v : row) v = ri(rng, 0, 3);
        scen.push_back(make_scenario(s, std::move(f)));
    }
    OptimizeParams params;
    params.gap_target = 0.0;
    params.max_per_slot = 2;

    auto v1 = optimize_template(scen, types, cal, nullptr, {}, budget, params);

    ForbiddenDayConfig cut1;
    cut1.weekday = 0;
    cut1.per_slot_counts = day_configuration(v1.tmpl, 0, cal);
    auto v2 = optimize_template(scen, types, cal, nullptr, {cut1}, budget, params);
    CHECK(v2.objective >= v1.objective);
    CHECK_FALSE(cut1.matches(v2.tmpl, cal));

    ForbiddenDayConfig cut2;
    cut2.weekday = 0;
    cut2.per_slot_counts = day_configuration(v2.tmpl, 0, cal);
    auto v3 = optimize_template(scen, types, cal, nullptr, {cut1, cut2}, budget, params);
    CHECK(v3.objective >= v2.objective);
    CHECK_FALSE(cut1.matches(v3.tmpl, cal));
    CHECK_FALSE(cut2.matches(v3.tmpl, cal));

    SUBCASE("pinning the unconstrained optimum as a floor changes nothing") {
        CommitmentFloor floor;
        floor.floors = v1.tmpl.counts;
        auto vf = optimize_template(scen, types, cal, &floor, {}, budget, params);
        CHECK(vf.objective == doctest::Approx(v1.objective).epsilon(1e-8));
        CHECK(vf.objective >= v1.objective * (1.0 - 1e-9));
    }
}

TEST_CASE("optimizer: results are independent of the worker count") {
    const auto types = make_default_types();
    const CalendarConfig cal;
    ComplexityBudget budget;
    auto dparams = make_default_demand_params(types, cal);
    const auto scen = generate_scenarios(dparams, 10, 991177, 3);

    // The evaluation budget, not the wall clock, ends this search, so the two
    // runs must agree to the last bit.
    OptimizeParams p1;
    p1.gap_target = 0.02;
    p1.node_budget = 4000;
    p1.workers = 1;
    OptimizeParams p4 = p1;
    p4.workers = 4;

    auto r1 = optimize_template(scen, types, cal, nullptr, {}, budget, p1);
    auto r4 = optimize_template(scen, types, cal, nullptr, {}, budget, p4);

    CHECK(r1.tmpl == r4.tmpl);
    CHECK(r1.objective == r4.objective);
    CHECK(r1.certificate.lower_bound == r4.certificate.lower_bound);
    CHECK(r1.certificate.relative_gap == r4.certificate.relative_gap);
    CHECK(r1.certificate.nodes == r4.certificate.nodes);
    CHECK(r1.search_log == r4.search_log);
}

TEST_CASE("gap estimate: a deterministic scenario source closes the gap") {
    const auto types = make_default_types();
    const auto cal = tiny_calendar(2, 2);
    ComplexityBudget budget;
    ScenarioSource constant = [&](int count, std::uint64_t) {
        std::vector<DemandScenario> out;
        for (int i = 0; i < count; ++i)
            out.push_back(make_scenario(i, {{2, 1, 2, 0}, {1, 1, 0, 2}, {0, 1, 1, 1}}));
        return out;
    };
    OptimizeParams params;
    params.gap_target = 0.0;
    params.scenario_count = 2;
    params.saa_batches = 3;
    params.eval_sample = 5;
    params.max_per_slot = 2;

    auto rep = estimate_saa_gap(constant, types, cal, nullptr, {}, budget, params, 7);
    REQUIRE(rep.batch_objectives.size() == 3);
    CHECK(rep.batch_objectives[0] == rep.batch_objectives[1]);
    CHECK(rep.batch_objectives[1] == rep.batch_objectives[2]);
    CHECK(rep.relative_gap >= 0.0);
    CHECK(rep.relative_gap <= 2e-9);
    CHECK(rep.lower_ci_half_width <= 1e-9);
    CHECK(rep.upper_ci_half_width <= 1e-9);
}

TEST_CASE("gap estimate: more scenarios per batch reduce batch variance") {
    const auto types = make_default_types();
    const CalendarConfig cal;
    ComplexityBudget budget;
    // Heavy load makes each batch optimum track its demand draw, so the
    // variance across batch optima reflects sampling noise; averaging more
    // scenarios per batch must damp it.
    auto dparams = make_default_demand_params(types, cal);
    dparams.volume.weekly_mean = 95.0;

    auto batch_variance = [&](int per_batch) {
        OptimizeParams params;
        params.gap_target = 0.05;
        params.scenario_count = per_batch;
        params.saa_batches = 8;
        params.eval_sample = 4;
        params.node_budget = 3000;
        auto rep = estimate_saa_gap(dparams, 10, budget, params, 33003);
        double m = 0;
        for (double x : rep.batch_objectives) m += x;
        m /= static_cast<double>(rep.batch_objectives.size());
        double s = 0;
        for (double x : rep.batch_objectives) s += (x - m) * (x - m);
        return s / static_cast<double>(rep.batch_objectives.size() - 1);
    };
    CHECK(batch_variance(1) > batch_variance(10));
}

TEST_CASE("optimizer: floor plus cut can exclude every configuration") {
    const auto one = tiny_types({0.5});
    const auto cal = tiny_calendar(1, 2);
    ComplexityBudget budget;  // kappa 0.96 -> at most one per slot
    CommitmentFloor floor;
    floor.floors = CountMatrix(1, 2);
    floor.floors.at(0, 0) = 1;
    floor.floors.at(0, 1) = 1;
    ForbiddenDayConfig cut;
    cut.weekday = 0;
    cut.per_slot_counts = {{1}, {1}};
    std::vector<DemandScenario> scen{make_scenario(0, {{3, 3}})};
    OptimizeParams params;
    params.max_per_slot = 1;

    try {
        optimize_template(scen, one, cal, &floor, {cut}, budget, params);
        FAIL("expected an infeasibility report");
    } catch (const InfeasibleModel& e) {
        CHECK(std::string(e.what()).find("Mon") != std::string::npos);
    }
}

TEST_CASE("gap estimate: reduced protocol run holds its invariants") {
    const auto types = make_default_types();
    const CalendarConfig cal;
    ComplexityBudget budget;
    auto dparams = make_default_demand_params(types, cal);

    OptimizeParams params;
    params.gap_target = 0.05;
    params.scenario_count = 3;
    params.saa_batches = 3;
    params.eval_sample = 20;
    params.node_budget = 3000;
    auto rep = estimate_saa_gap(dparams, 10, budget, params, 555);

    REQUIRE(rep.batch_objectives.size() == 3);
    for (double v : rep.batch_objectives) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
    }
    CHECK(rep.lower_bound_mean <= rep.upper_bound + 1e-9);
    CHECK(rep.relative_gap >= 0.0);
    CHECK(rep.relative_gap <= 1.0);
    CHECK(rep.lower_ci_half_width >= 0.0);
    CHECK(rep.upper_ci_half_width >= 0.0);
    CHECK(validate_template(rep.incumbent, types, cal, budget).feasible());

    SUBCASE("the whole report is reproducible") {
        auto rep2 = estimate_saa_gap(dparams, 10, budget, params, 555);
        CHECK(rep2.upper_bound == rep.upper_bound);
        CHECK(rep2.lower_bound_mean == rep.lower_bound_mean);
        CHECK(rep2.relative_gap == rep.relative_gap);
        CHECK(rep2.incumbent == rep.incumbent);
    }
}
