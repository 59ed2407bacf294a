#pragma once

#include <vector>

#include "clinicsched/calendar.hpp"
#include "clinicsched/patient_types.hpp"
#include "clinicsched/scenario.hpp"
#include "clinicsched/weekly_template.hpp"

namespace clinicsched {

// One scenario's recourse instance: assign each demanded appointment (type r,
// desired day d) to a service day d' >= d, paying w_r * f_{r,d} * (d'-d)^(1+eps)
// per assigned proportion, subject to show-rate-scaled daily capacities. An
// explicit denial option at denial_penalty per patient keeps every instance
// feasible and surfaces the "no appointment" statistic.
struct AssignmentProblem {
    int horizon = 0;
    std::vector<std::vector<double>> capacity;  // [type][day], appointments offered
    std::vector<std::vector<double>> demand;    // [type][day], requests wanting day d
    std::vector<double> no_show;                // p_r in [0,1)
    std::vector<double> weight;                 // w_r >= 0
    double epsilon = 0.1;                       // super-linear delay exponent, >= 0
    double denial_penalty = 0.0;                // <= 0 means "use default_denial_penalty()"

    void validate() const;
    int types() const { return static_cast<int>(capacity.size()); }
    // Strictly dominates the worst possible delay cost (D-1)^(1+eps) * max w.
    double default_denial_penalty() const;
    double effective_denial_penalty() const {
        return denial_penalty > 0.0 ? denial_penalty : default_denial_penalty();
    }
};

struct AssignmentResult {
    double objective = 0.0;
    // y[r][d][d'] = proportion of type-r day-d requests served on day d' (d' >= d).
    std::vector<std::vector<std::vector<double>>> y;
    // denied[r][d] = proportion of type-r day-d requests denied any appointment.
    std::vector<std::vector<double>> denied;

    double total_denied(const AssignmentProblem& p) const;
};

// Exact optimum of the linear recourse. Decomposes by type into transportation
// problems solved with successive shortest paths; never infeasible thanks to
// the denial arcs.
AssignmentResult solve_second_stage(const AssignmentProblem& p);

// Objective only (skips building the proportion matrices).
double second_stage_objective(const AssignmentProblem& p);

struct RecourseConfig {
    double epsilon = 0.1;
    double denial_penalty = 0.0;  // <= 0: derive the default per instance
    int workers = 1;
};

// Mean recourse cost of a template over a scenario set (the SAA objective).
// Capacities come from daily_capacity; the mean is accumulated in scenario
// index order so results are bit-identical for any worker count.
double saa_objective(const WeeklyTemplate& t, const std::vector<DemandScenario>& scenarios,
                     const PatientTypeSet& types, const CalendarConfig& cal,
                     const RecourseConfig& cfg = {});

// Per-scenario recourse costs, in scenario order; saa_objective is their mean.
std::vector<double> saa_objective_samples(const WeeklyTemplate& t,
                                          const std::vector<DemandScenario>& scenarios,
                                          const PatientTypeSet& types, const CalendarConfig& cal,
                                          const RecourseConfig& cfg = {});

namespace detail {

// Reusable single-type transportation solver (kept allocated across calls:
// the optimizer evaluates hundreds of thousands of these).
class TypeRecourseSolver {
public:
    // delay_cost[k] must hold k^(1+eps) for k in 0..D-1.
    // Returns the minimum cost; when y/denied are non-null fills proportions.
    double solve(const std::vector<double>& cap, const std::vector<double>& demand, double w,
                 double p, const std::vector<double>& delay_cost, double penalty,
                 std::vector<std::vector<double>>* y = nullptr,
                 std::vector<double>* denied = nullptr);

private:
    struct Arc {
        int to;
        double cap;
        double cost;
        int rev;
    };
    void add_arc(int from, int to, double cap, double cost);
    double blocking_push(int u, int sink, double limit, double& cost_total);
    std::vector<std::vector<Arc>> graph_;
    std::vector<double> dist_;
    std::vector<double> potential_;
    std::vector<int> prev_node_;
    std::vector<int> prev_arc_;
    std::vector<int> arc_it_;
    std::vector<char> on_path_;
};

std::vector<double> make_delay_cost_table(int horizon, double epsilon);

}  // namespace detail

}  // namespace clinicsched
