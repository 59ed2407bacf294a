#include "clinicsched/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include "clinicsched/errors.hpp"
#include "clinicsched/random.hpp"

namespace clinicsched {

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void write_planning(const std::vector<MonthPlan>& months, std::ostream& out) {
    out << "planning v1\n";
    for (const auto& m : months) {
        out << "month " << m.month << " rounds " << m.rounds.size() << "\n";
        for (const auto& r : m.rounds) {
            out << "round " << r.iteration << " cuts " << r.new_cuts.size() << "\n";
            for (const auto& k : r.kpis)
                out << "kpi " << k.weekday << " " << fmt6(k.direct_wait) << " "
                    << fmt6(k.lunch_spillover) << " " << fmt6(k.after_hours) << " "
                    << (k.violated ? 1 : 0) << "\n";
        }
    }
}

void write_gap(const SaaGapReport& g, std::ostream& out) {
    out << "saa_gap v1\n";
    out << "lower_bound_mean\t" << fmt6(g.lower_bound_mean) << "\n";
    out << "lower_ci_half_width\t" << fmt6(g.lower_ci_half_width) << "\n";
    out << "upper_bound\t" << fmt6(g.upper_bound) << "\n";
    out << "upper_ci_half_width\t" << fmt6(g.upper_ci_half_width) << "\n";
    out << "relative_gap\t" << fmt6(g.relative_gap) << "\n";
    for (std::size_t i = 0; i < g.batch_objectives.size(); ++i)
        out << "batch\t" << i << "\t" << fmt6(g.batch_objectives[i]) << "\n";
}

std::ofstream open_artifact(const std::filesystem::path& path) {
    std::ofstream out(path);
    CS_REQUIRE(out.good(), "cannot write artifact file " + path.string());
    return out;
}

}  // namespace

WeeklyTemplate plan_month(const RunConfig& cfg, int month, const CommitmentFloor& floors,
                          std::vector<ForbiddenDayConfig>& cuts, std::vector<MonthPlan>& plans,
                          const TemplateEvaluator& evaluator) {
    CS_REQUIRE(month >= 0, "month must be >= 0");
    CS_REQUIRE(static_cast<bool>(evaluator), "plan_month needs a template evaluator");

    // The month sees its own slice of the season cycle.
    DemandParams demand = cfg.demand;
    demand.day_offset = month * cfg.calendar.working_days_per_month;
    const auto scenarios = generate_scenarios(
        demand, cfg.calendar.working_days_per_month,
        derive_seed(cfg.seed, "plan-scn", {static_cast<std::uint64_t>(month)}),
        cfg.optimizer.scenario_count);

    MonthPlan plan;
    plan.month = month;
    for (int iter = 0; iter < cfg.cut_limit; ++iter) {
        OptimizeResult res;
        try {
            res = optimize_template(scenarios, cfg.types, cfg.calendar, &floors, cuts, cfg.budget,
                                    cfg.optimizer, month);
        } catch (const InfeasibleModel& e) {
            throw InfeasibleModel("planning month " + std::to_string(month) + ": " + e.what());
        } catch (const ContractViolation& e) {
            throw InfeasibleModel("planning month " + std::to_string(month) + ": " + e.what());
        }

        TemplateEvaluation eval =
            evaluator(res.tmpl, month, iter,
                      derive_seed(cfg.seed, "plan-eval",
                                  {static_cast<std::uint64_t>(month),
                                   static_cast<std::uint64_t>(iter)}));
        plan.rounds.push_back({month, iter, res.tmpl, eval.per_weekday, eval.cuts});

        if (eval.clean()) {
            plan.tmpl = res.tmpl;
            plans.push_back(std::move(plan));
            return res.tmpl;
        }
        for (const auto& cut : eval.cuts) {
            for (const auto& existing : cuts)
                CS_REQUIRE(!(existing == cut),
                           "evaluator re-issued an exclusion the optimizer was already given");
            cuts.push_back(cut);
        }
    }

    std::ostringstream msg;
    msg << "planning month " << month << ": no threshold-clean template within " << cfg.cut_limit
        << " rounds; violation history:";
    for (const auto& r : plan.rounds)
        for (const auto& k : r.kpis)
            if (k.violated)
                msg << "\n  round " << r.iteration << " " << weekday_name(k.weekday)
                    << ": direct_wait " << fmt6(k.direct_wait) << " lunch "
                    << fmt6(k.lunch_spillover) << " after_hours " << fmt6(k.after_hours);
    throw CutLimitExceeded(msg.str(), std::move(plan.rounds));
}

PipelineArtifacts run_pipeline(const RunConfig& cfg, const TemplateEvaluator& evaluator) {
    cfg.validate();

    PipelineArtifacts a;
    a.config = cfg;

    TemplateEvaluator eval = evaluator;
    if (!eval)
        eval = [&cfg](const WeeklyTemplate& t, int, int, std::uint64_t seed) {
            return evaluate_template(t, cfg.flow, cfg.types, cfg.calendar, seed,
                                     cfg.optimizer.workers);
        };

    const auto stream =
        generate_call_stream(cfg.demand, cfg.planning_horizon, derive_seed(cfg.seed, "calls"));

    TemplateSource source;
    MonthPlanner planner;
    switch (cfg.policy) {
        case BookingPolicy::spt:
            source = TemplateSource::fixed(make_spt_template(cfg.types, cfg.calendar, cfg.budget));
            break;
        case BookingPolicy::lcvb:
            source = TemplateSource::fixed(make_lcvb_template(cfg.types, cfg.calendar, cfg.budget));
            break;
        case BookingPolicy::raw_capacity:
            source = TemplateSource::raw(cfg.raw_seats_per_slot);
            break;
        case BookingPolicy::two_stage:
            // Empty provisional tile: the planner replaces it at day 0 before
            // any call is taken.
            source = TemplateSource::fixed(WeeklyTemplate(0, cfg.types, cfg.calendar));
            planner = [&cfg, &a, &eval](int month, const CommitmentFloor& floors) {
                return plan_month(cfg, month, floors, a.cuts, a.months, eval);
            };
            break;
    }

    a.horizon = run_horizon(source, stream, cfg.types, cfg.calendar, cfg.flow, cfg.booking,
                            cfg.planning_horizon, cfg.warmup_days, cfg.seed, planner);
    a.templates = a.horizon.templates_used;

    SummarizeOptions opt;
    opt.warmup_days = cfg.warmup_days;
    opt.start_calendar_month = cfg.start_calendar_month;
    opt.calendar_day_waits = cfg.calendar_day_waits;
    a.report = summarize(a.horizon.log, a.horizon.outcomes, cfg.types, cfg.calendar, opt);

    if (cfg.compute_saa_gap && cfg.policy == BookingPolicy::two_stage) {
        a.gap = estimate_saa_gap(cfg.demand, cfg.calendar.working_days_per_month, cfg.budget,
                                 cfg.optimizer, derive_seed(cfg.seed, "saa-gap"));
        a.gap_computed = true;
    }
    return a;
}

void write_cuts(const std::vector<ForbiddenDayConfig>& cuts, std::ostream& out) {
    out << "cuts v1\n";
    out << "count " << cuts.size() << "\n";
    for (const auto& c : cuts) {
        const std::size_t slots = c.per_slot_counts.size();
        const std::size_t types = slots == 0 ? 0 : c.per_slot_counts.front().size();
        out << "cut " << c.weekday << " " << slots << " " << types << "\n";
        for (const auto& row : c.per_slot_counts) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i > 0) out << " ";
                out << row[i];
            }
            out << "\n";
        }
    }
}

std::vector<ForbiddenDayConfig> read_cuts(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "cuts v1") throw ParseError("bad cuts header");
    std::size_t count = 0;
    {
        if (!std::getline(in, line)) throw ParseError("missing cuts count");
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word >> count) || word != "count") throw ParseError("bad cuts count line");
    }
    std::vector<ForbiddenDayConfig> cuts;
    cuts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw ParseError("truncated cuts file");
        std::istringstream ls(line);
        std::string word;
        int weekday = 0;
        std::size_t slots = 0;
        std::size_t types = 0;
        if (!(ls >> word >> weekday >> slots >> types) || word != "cut")
            throw ParseError("bad cut header line");
        ForbiddenDayConfig c;
        c.weekday = weekday;
        c.per_slot_counts.resize(slots, std::vector<int>(types, 0));
        for (std::size_t s = 0; s < slots; ++s) {
            if (!std::getline(in, line)) throw ParseError("truncated cut rows");
            std::istringstream rs(line);
            for (std::size_t r = 0; r < types; ++r)
                if (!(rs >> c.per_slot_counts[s][r])) throw ParseError("bad cut row");
            int extra = 0;
            if (rs >> extra) throw ParseError("bad cut row");
        }
        cuts.push_back(std::move(c));
    }
    return cuts;
}

void write_artifacts(const PipelineArtifacts& a, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root);

    open_artifact(root / "config.json") << config_to_json(a.config);

    for (std::size_t m = 0; m < a.templates.size(); ++m) {
        char name[48];
        std::snprintf(name, sizeof(name), "template_month_%03zu.txt", m);
        write_template_file(a.templates[m], a.config.types, a.config.calendar,
                            (root / name).string());
    }

    {
        auto out = open_artifact(root / "cuts.txt");
        write_cuts(a.cuts, out);
    }
    {
        auto out = open_artifact(root / "planning.txt");
        write_planning(a.months, out);
    }
    {
        auto out = open_artifact(root / "booking_log.tsv");
        write_booking_log(a.horizon.log, out);
    }
    {
        auto out = open_artifact(root / "report.txt");
        write_report(a.report, a.config.types, out);
    }
    if (a.gap_computed) {
        auto out = open_artifact(root / "gap.txt");
        write_gap(a.gap, out);
    }
}

ComparisonResult run_comparison(const RunConfig& base,
                                const std::vector<BookingPolicy>& policies) {
    CS_REQUIRE(policies.size() >= 2, "a comparison needs at least two policies");
    ComparisonResult out;
    std::vector<LabeledReport> labeled;
    for (BookingPolicy p : policies) {
        RunConfig cfg = base;
        cfg.policy = p;
        out.runs.push_back(run_pipeline(cfg));
        labeled.push_back({to_string(p), out.runs.back().report});
    }
    out.comparison = compare_policies(labeled, /*common_random_numbers=*/true);
    return out;
}

}  // namespace clinicsched
