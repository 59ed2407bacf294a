#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "clinicsched/callcenter.hpp"
#include "clinicsched/clinicflow.hpp"
#include "clinicsched/config.hpp"
#include "clinicsched/metrics.hpp"
#include "clinicsched/optimizer.hpp"

namespace clinicsched {

// One optimize -> simulate round inside a month's planning loop.
struct CutRound {
    int month = 0;
    int iteration = 0;  // 0-based within the month
    WeeklyTemplate candidate;
    std::vector<WeekdayKpis> kpis;             // per-weekday quantile KPIs
    std::vector<ForbiddenDayConfig> new_cuts;  // empty: candidate accepted
};

// Planning trace of one month: the accepted template plus every round that
// led to it (the last round is always the clean one).
struct MonthPlan {
    int month = 0;
    WeeklyTemplate tmpl;
    std::vector<CutRound> rounds;
};

// The per-month planning loop ran out of its cut budget without producing a
// threshold-clean template; `history` holds every rejected round.
class CutLimitExceeded : public std::runtime_error {
public:
    CutLimitExceeded(const std::string& msg, std::vector<CutRound> rounds)
        : std::runtime_error(msg), history(std::move(rounds)) {}
    std::vector<CutRound> history;
};

// Replaces the queueing simulation when templates are scored in the planning
// loop — injectable so tests can replay recorded KPI outcomes. The default
// evaluator runs the day simulation at the config's thresholds.
using TemplateEvaluator = std::function<TemplateEvaluation(
    const WeeklyTemplate& candidate, int month, int iteration, std::uint64_t seed)>;

// Everything one experiment produces.
struct PipelineArtifacts {
    RunConfig config;                       // the resolved config the run used
    std::vector<MonthPlan> months;          // planning trace (empty for baselines)
    std::vector<WeeklyTemplate> templates;  // template per month (empty for raw capacity)
    std::vector<ForbiddenDayConfig> cuts;   // final exclusion set
    SaaGapReport gap;                       // filled when gap_computed
    bool gap_computed = false;
    HorizonResult horizon;
    Report report;
};

// Plans one month: optimize under `floors` and the accumulated `cuts`, score
// the candidate with `evaluator`, append any new exclusions and re-optimize
// until a candidate passes every threshold. The accepted plan lands in
// `plans`; new exclusions stay in `cuts` for later months. Throws
// CutLimitExceeded after cfg.cut_limit rejected rounds and InfeasibleModel
// when floors/cuts leave no feasible template (both name the month).
WeeklyTemplate plan_month(const RunConfig& cfg, int month, const CommitmentFloor& floors,
                          std::vector<ForbiddenDayConfig>& cuts, std::vector<MonthPlan>& plans,
                          const TemplateEvaluator& evaluator);

// Runs one experiment end to end: per-month planning (two_stage; baselines
// skip straight to their fixed capacity), the rolling booking horizon, and
// KPI summarization. Deterministic: one config yields one artifact set.
PipelineArtifacts run_pipeline(const RunConfig& cfg, const TemplateEvaluator& evaluator = {});

// --- artifact persistence ----------------------------------------------------

// Exclusion-set text format; round-trips exactly.
void write_cuts(const std::vector<ForbiddenDayConfig>& cuts, std::ostream& out);
std::vector<ForbiddenDayConfig> read_cuts(std::istream& in);

// Writes config.json, per-month templates, cuts.txt, planning.txt,
// booking_log.tsv, report.txt (and gap.txt when computed) under `dir`,
// creating it if needed. Equal artifacts produce byte-identical files.
void write_artifacts(const PipelineArtifacts& a, const std::string& dir);

// --- policy comparison ---------------------------------------------------------

struct ComparisonResult {
    std::vector<PipelineArtifacts> runs;  // one per policy, in input order
    PolicyComparison comparison;
};

// Runs the same config under each policy (same seed: the call stream and all
// per-patient draws are shared — common random numbers) and tabulates KPIs.
ComparisonResult run_comparison(const RunConfig& base, const std::vector<BookingPolicy>& policies);

}  // namespace clinicsched
