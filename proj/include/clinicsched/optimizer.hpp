#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "clinicsched/assignment.hpp"
#include "clinicsched/calendar.hpp"
#include "clinicsched/patient_types.hpp"
#include "clinicsched/scenario.hpp"
#include "clinicsched/weekly_template.hpp"

namespace clinicsched {

// Every per-slot count vector feasible under the slot complexity budget and
// the per-type per-slot caps. Complete, duplicate-free, lexicographically
// sorted. A slot of a template always carries exactly one catalog entry.
struct SlotConfigCatalog {
    std::vector<std::vector<int>> configs;

    std::size_t size() const { return configs.size(); }
    bool contains(const std::vector<int>& x) const;
};

SlotConfigCatalog enumerate_slot_configs(const PatientTypeSet& types, double kappa,
                                         const std::vector<int>& max_per_type);

struct OptimizeParams {
    int scenario_count = 10;       // scenarios per sampled problem (n)
    double gap_target = 0.01;      // relative optimality gap the search certifies (0 = exact)
    int saa_batches = 10;          // independent batches for the lower bound (M)
    int eval_sample = 100;         // fresh scenarios for the upper bound (N')
    double time_limit_seconds = 3600.0;
    long node_budget = 200000;     // candidate evaluations before the search stops improving
    int max_per_slot = 3;          // cap on one type's count in one slot
    double epsilon = 0.1;          // super-linear delay exponent of the recourse
    double denial_penalty = 0.0;   // <= 0: per-instance default
    int workers = 1;

    void validate() const;
};

struct GapCertificate {
    double objective = 0.0;      // objective of the returned template
    double lower_bound = 0.0;    // certified lower bound on the sampled optimum
    double relative_gap = 0.0;   // (objective - lower_bound) / objective; 0 when objective == 0
    long nodes = 0;              // candidate evaluations spent (all phases)
    bool time_limit_hit = false;  // stopped by wall clock or node budget, gap is best-effort
};

struct OptimizeResult {
    WeeklyTemplate tmpl;
    double objective = 0.0;
    GapCertificate certificate;
    std::string search_log;  // key=value lines describing the search
};

// Minimizes the mean recourse cost over `scenarios` among templates that are
// feasible for the budgets, honor `floor` (when non-null) and avoid every
// banned day configuration. The search branches on per-type daily capacities
// (the statistic the recourse depends on) and packs them into slot
// configurations; ties are broken toward the lexicographically smallest count
// matrix (types by index, then weekly slots by position). Results are
// bit-identical for any worker count; stopping is driven by the node budget
// (deterministic), with the wall-clock limit as a safety net.
//
// Throws InfeasibleModel naming the binding weekday when floors and cuts leave
// some weekday without any feasible configuration.
OptimizeResult optimize_template(const std::vector<DemandScenario>& scenarios,
                                 const PatientTypeSet& types, const CalendarConfig& cal,
                                 const CommitmentFloor* floor,
                                 const std::vector<ForbiddenDayConfig>& banned,
                                 const ComplexityBudget& budget, const OptimizeParams& params,
                                 int month_index = 0);

struct SaaGapReport {
    double lower_bound_mean = 0.0;      // mean of the batch optima (statistical lower bound)
    double lower_ci_half_width = 0.0;   // normal-approximation 95% half width over batches
    double upper_bound = 0.0;           // best candidate's mean cost on the evaluation sample
    double upper_ci_half_width = 0.0;   // normal-approximation 95% half width over that sample
    double relative_gap = 0.0;          // (upper - lower) / upper when upper > 0, else 0
    std::vector<double> batch_objectives;  // incumbent objective of each batch
    WeeklyTemplate incumbent;              // the candidate achieving upper_bound
};

// Scenario supplier: returns `count` scenarios drawn from the given seed.
using ScenarioSource = std::function<std::vector<DemandScenario>(int count, std::uint64_t seed)>;

// Sample-average-approximation quality estimate: solves saa_batches sampled
// problems of scenario_count scenarios each (their mean objective is a
// statistical lower bound on the true optimum), then scores every batch
// template on eval_sample fresh scenarios (upper bound = best mean).
// Needs saa_batches >= 2.
SaaGapReport estimate_saa_gap(const ScenarioSource& source, const PatientTypeSet& types,
                              const CalendarConfig& cal, const CommitmentFloor* floor,
                              const std::vector<ForbiddenDayConfig>& banned,
                              const ComplexityBudget& budget, const OptimizeParams& params,
                              std::uint64_t seed);

// Convenience: scenarios drawn from a demand model over `horizon` working days.
SaaGapReport estimate_saa_gap(const DemandParams& demand, int horizon,
                              const ComplexityBudget& budget, const OptimizeParams& params,
                              std::uint64_t seed);

}  // namespace clinicsched
