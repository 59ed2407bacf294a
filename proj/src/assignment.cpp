#include "clinicsched/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "clinicsched/parallel.hpp"

namespace clinicsched {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void AssignmentProblem::validate() const {
    CS_REQUIRE(horizon >= 1, "horizon must be >= 1");
    const int R = types();
    CS_REQUIRE(R >= 1, "at least one type required");
    CS_REQUIRE(static_cast<int>(demand.size()) == R, "demand type dimension mismatch");
    CS_REQUIRE(static_cast<int>(no_show.size()) == R, "no-show vector dimension mismatch");
    CS_REQUIRE(static_cast<int>(weight.size()) == R, "weight vector dimension mismatch");
    for (int r = 0; r < R; ++r) {
        CS_REQUIRE(static_cast<int>(capacity[static_cast<std::size_t>(r)].size()) == horizon,
                   "capacity day dimension mismatch");
        CS_REQUIRE(static_cast<int>(demand[static_cast<std::size_t>(r)].size()) == horizon,
                   "demand day dimension mismatch");
        for (double c : capacity[static_cast<std::size_t>(r)])
            CS_REQUIRE(c >= 0.0, "capacities must be >= 0");
        for (double f : demand[static_cast<std::size_t>(r)])
            CS_REQUIRE(f >= 0.0, "demands must be >= 0");
        CS_REQUIRE(no_show[static_cast<std::size_t>(r)] >= 0.0 &&
                       no_show[static_cast<std::size_t>(r)] < 1.0,
                   "no-show probabilities must be in [0,1)");
        CS_REQUIRE(weight[static_cast<std::size_t>(r)] >= 0.0, "weights must be >= 0");
    }
    CS_REQUIRE(epsilon >= 0.0, "epsilon must be >= 0");
    if (denial_penalty > 0.0) {
        double max_w = 0.0;
        for (double w : weight) max_w = std::max(max_w, w);
        const double worst = std::pow(static_cast<double>(horizon - 1), 1.0 + epsilon) * max_w;
        CS_REQUIRE(denial_penalty > worst,
                   "denial penalty must exceed the worst possible delay cost");
    }
}

double AssignmentProblem::default_denial_penalty() const {
    double max_w = 0.0;
    for (double w : weight) max_w = std::max(max_w, w);
    return std::pow(static_cast<double>(horizon), 1.0 + epsilon) * std::max(max_w, 1.0) * 10.0;
}

double AssignmentResult::total_denied(const AssignmentProblem& p) const {
    double total = 0.0;
    for (int r = 0; r < p.types(); ++r)
        for (int d = 0; d < p.horizon; ++d)
            total += denied[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)] *
                     p.demand[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)];
    return total;
}

namespace detail {

std::vector<double> make_delay_cost_table(int horizon, double epsilon) {
    CS_REQUIRE(horizon >= 1, "horizon must be >= 1");
    CS_REQUIRE(epsilon >= 0.0, "epsilon must be >= 0");
    std::vector<double> t(static_cast<std::size_t>(horizon));
    for (int k = 0; k < horizon; ++k)
        t[static_cast<std::size_t>(k)] = std::pow(static_cast<double>(k), 1.0 + epsilon);
    return t;
}

void TypeRecourseSolver::add_arc(int from, int to, double cap, double cost) {
    auto& fwd = graph_[static_cast<std::size_t>(from)];
    auto& bwd = graph_[static_cast<std::size_t>(to)];
    fwd.push_back({to, cap, cost, static_cast<int>(bwd.size())});
    bwd.push_back({from, 0.0, -cost, static_cast<int>(fwd.size()) - 1});
}

// Depth-first push along admissible arcs (zero reduced cost under the
// updated potentials, i.e. arcs of some shortest path). Augmenting along any
// such path keeps the usual successive-shortest-path invariant, so pushing a
// whole blocking flow per Dijkstra is exact and cuts the Dijkstra count by
// the average number of paths per distance level. Zero-cost cycles are broken
// by skipping nodes already on the DFS stack.
double TypeRecourseSolver::blocking_push(int u, int sink, double limit, double& cost_total) {
    if (u == sink) return limit;
    on_path_[static_cast<std::size_t>(u)] = 1;
    auto& arcs = graph_[static_cast<std::size_t>(u)];
    for (int& ai = arc_it_[static_cast<std::size_t>(u)]; ai < static_cast<int>(arcs.size()); ++ai) {
        Arc& a = arcs[static_cast<std::size_t>(ai)];
        if (a.cap <= 0.5) continue;
        if (on_path_[static_cast<std::size_t>(a.to)]) continue;
        if (dist_[static_cast<std::size_t>(a.to)] == kInf) continue;
        const double rc = a.cost + potential_[static_cast<std::size_t>(u)] -
                          potential_[static_cast<std::size_t>(a.to)];
        if (rc > 1e-9 || rc < -1e-9) continue;
        const double got = blocking_push(a.to, sink, std::min(limit, a.cap), cost_total);
        if (got >= 0.5) {
            a.cap -= got;
            graph_[static_cast<std::size_t>(a.to)][static_cast<std::size_t>(a.rev)].cap += got;
            cost_total += got * a.cost;
            on_path_[static_cast<std::size_t>(u)] = 0;
            return got;  // the arc may still have residual; keep ai pointed at it
        }
    }
    on_path_[static_cast<std::size_t>(u)] = 0;
    return 0.0;
}

// Node layout: 0..D-1 demand days, D..2D-1 service days, 2D sink, 2D+1 source.
// Flows are carried in units of 2^-26 appointments: demand counts are integers
// and show-rate scaled capacities cap/(1-p) are floored onto that grid, so
// every residual update is exact integer arithmetic in doubles. Augmentations
// then saturate arcs exactly instead of leaving float dust that would turn
// into endless micro-augmentations. Flooring only ever shrinks a capacity
// (by < 2^-26), so extracted flows never exceed the true capacity and the
// objective is within ~1e-8 of the unscaled optimum. Denial arcs keep the
// instance feasible at `penalty` per patient.
double TypeRecourseSolver::solve(const std::vector<double>& cap, const std::vector<double>& demand,
                                 double w, double p, const std::vector<double>& delay_cost,
                                 double penalty, std::vector<std::vector<double>>* y,
                                 std::vector<double>* denied) {
    const int D = static_cast<int>(cap.size());
    CS_REQUIRE(static_cast<int>(demand.size()) == D, "capacity/demand dimension mismatch");
    CS_REQUIRE(static_cast<int>(delay_cost.size()) >= D, "delay cost table too small");
    CS_REQUIRE(p >= 0.0 && p < 1.0, "no-show probability must be in [0,1)");
    CS_REQUIRE(penalty > 0.0, "denial penalty must be > 0");

    constexpr double kGrid = 67108864.0;  // 2^26 flow units per appointment
    const int sink = 2 * D;
    const int source = 2 * D + 1;
    const int n = 2 * D + 2;

    graph_.assign(static_cast<std::size_t>(n), {});
    double supply = 0.0;
    for (int d = 0; d < D; ++d) {
        const double f = demand[static_cast<std::size_t>(d)];
        if (f <= 0.0) continue;
        const double fs = std::round(f * kGrid);
        supply += fs;
        add_arc(source, d, fs, 0.0);
        for (int dd = d; dd < D; ++dd) {
            if (cap[static_cast<std::size_t>(dd)] <= 0.0) continue;
            add_arc(d, dd + D, kInf, w * delay_cost[static_cast<std::size_t>(dd - d)]);
        }
        add_arc(d, sink, kInf, penalty);  // denial
    }
    if (supply <= 0.0) {
        if (y) y->assign(static_cast<std::size_t>(D), std::vector<double>(static_cast<std::size_t>(D), 0.0));
        if (denied) denied->assign(static_cast<std::size_t>(D), 0.0);
        return 0.0;
    }
    for (int dd = 0; dd < D; ++dd) {
        const double c = cap[static_cast<std::size_t>(dd)];
        if (c > 0.0) add_arc(dd + D, sink, std::floor(c / (1.0 - p) * kGrid), 0.0);
    }

    potential_.assign(static_cast<std::size_t>(n), 0.0);
    dist_.assign(static_cast<std::size_t>(n), kInf);
    prev_node_.assign(static_cast<std::size_t>(n), -1);
    prev_arc_.assign(static_cast<std::size_t>(n), -1);
    arc_it_.assign(static_cast<std::size_t>(n), 0);
    on_path_.assign(static_cast<std::size_t>(n), 0);

    double cost_total = 0.0;
    double pushed = 0.0;
    using QEntry = std::pair<double, int>;
    while (pushed + 0.5 < supply) {
        // Dijkstra over reduced costs.
        std::fill(dist_.begin(), dist_.end(), kInf);
        std::priority_queue<QEntry, std::vector<QEntry>, std::greater<>> pq;
        dist_[static_cast<std::size_t>(source)] = 0.0;
        pq.push({0.0, source});
        while (!pq.empty()) {
            auto [du, u] = pq.top();
            pq.pop();
            if (du > dist_[static_cast<std::size_t>(u)] + 1e-15) continue;
            const auto& arcs = graph_[static_cast<std::size_t>(u)];
            for (int ai = 0; ai < static_cast<int>(arcs.size()); ++ai) {
                const Arc& a = arcs[static_cast<std::size_t>(ai)];
                if (a.cap <= 0.5) continue;
                // Residual arcs of earlier pushes have reduced cost 0 up to
                // float noise; clamping keeps the weights nonnegative so the
                // noise cannot form tiny negative cycles that stall Dijkstra.
                const double nd = du + std::max(0.0, a.cost + potential_[static_cast<std::size_t>(u)] -
                                                         potential_[static_cast<std::size_t>(a.to)]);
                if (nd < dist_[static_cast<std::size_t>(a.to)] - 1e-15) {
                    dist_[static_cast<std::size_t>(a.to)] = nd;
                    prev_node_[static_cast<std::size_t>(a.to)] = u;
                    prev_arc_[static_cast<std::size_t>(a.to)] = ai;
                    pq.push({nd, a.to});
                }
            }
        }
        const double dist_sink = dist_[static_cast<std::size_t>(sink)];
        CS_REQUIRE(dist_sink < kInf, "augmenting path must exist (denial arcs guarantee it)");
        // Capped update keeps reduced costs nonnegative even for nodes the
        // search no longer reaches (their incident residual arcs, if any,
        // only gain slack this way).
        for (int u = 0; u < n; ++u)
            potential_[static_cast<std::size_t>(u)] +=
                std::min(dist_[static_cast<std::size_t>(u)], dist_sink);

        std::fill(arc_it_.begin(), arc_it_.end(), 0);
        double phase = 0.0;
        while (pushed + 0.5 < supply) {
            const double got = blocking_push(source, sink, supply - pushed, cost_total);
            if (got < 0.5) break;
            pushed += got;
            phase += got;
        }
        if (phase >= 0.5) continue;
        // The cycle guard can hide an admissible path; residuals are untouched
        // in that case, so the Dijkstra tree path still has positive slack and
        // augmenting along it guarantees progress.
        double delta = supply - pushed;
        for (int v = sink; v != source; v = prev_node_[static_cast<std::size_t>(v)]) {
            const int u = prev_node_[static_cast<std::size_t>(v)];
            const Arc& a = graph_[static_cast<std::size_t>(u)][static_cast<std::size_t>(
                prev_arc_[static_cast<std::size_t>(v)])];
            delta = std::min(delta, a.cap);
        }
        for (int v = sink; v != source; v = prev_node_[static_cast<std::size_t>(v)]) {
            const int u = prev_node_[static_cast<std::size_t>(v)];
            Arc& a = graph_[static_cast<std::size_t>(u)][static_cast<std::size_t>(
                prev_arc_[static_cast<std::size_t>(v)])];
            a.cap -= delta;
            graph_[static_cast<std::size_t>(a.to)][static_cast<std::size_t>(a.rev)].cap += delta;
            cost_total += delta * a.cost;
        }
        pushed += delta;
    }
    cost_total /= kGrid;

    if (y || denied) {
        if (y) y->assign(static_cast<std::size_t>(D), std::vector<double>(static_cast<std::size_t>(D), 0.0));
        if (denied) denied->assign(static_cast<std::size_t>(D), 0.0);
        // Flow on forward arcs = reverse arc residual (reverse starts at 0).
        for (int d = 0; d < D; ++d) {
            const double f = demand[static_cast<std::size_t>(d)];
            if (f <= 0.0) continue;
            for (const Arc& a : graph_[static_cast<std::size_t>(d)]) {
                if (a.to == source) continue;  // residual arc back to the source
                const double flow =
                    graph_[static_cast<std::size_t>(a.to)][static_cast<std::size_t>(a.rev)].cap;
                if (flow <= 0.5) continue;
                if (a.to == sink) {
                    if (denied) (*denied)[static_cast<std::size_t>(d)] = flow / kGrid / f;
                } else if (y) {
                    (*y)[static_cast<std::size_t>(d)][static_cast<std::size_t>(a.to - D)] =
                        flow / kGrid / f;
                }
            }
        }
    }
    return cost_total;
}

}  // namespace detail

namespace {

AssignmentResult solve_impl(const AssignmentProblem& p, bool extract) {
    p.validate();
    const int R = p.types();
    const double penalty = p.effective_denial_penalty();
    const auto delay_cost = detail::make_delay_cost_table(p.horizon, p.epsilon);

    AssignmentResult res;
    if (extract) {
        res.y.resize(static_cast<std::size_t>(R));
        res.denied.resize(static_cast<std::size_t>(R));
    }
    detail::TypeRecourseSolver solver;
    for (int r = 0; r < R; ++r) {
        const auto ri = static_cast<std::size_t>(r);
        res.objective += solver.solve(p.capacity[ri], p.demand[ri], p.weight[ri], p.no_show[ri],
                                      delay_cost, penalty, extract ? &res.y[ri] : nullptr,
                                      extract ? &res.denied[ri] : nullptr);
    }
    return res;
}

}  // namespace

AssignmentResult solve_second_stage(const AssignmentProblem& p) { return solve_impl(p, true); }

double second_stage_objective(const AssignmentProblem& p) { return solve_impl(p, false).objective; }

std::vector<double> saa_objective_samples(const WeeklyTemplate& t,
                                          const std::vector<DemandScenario>& scenarios,
                                          const PatientTypeSet& types, const CalendarConfig& cal,
                                          const RecourseConfig& cfg) {
    CS_REQUIRE(!scenarios.empty(), "at least one scenario required");
    const int horizon = scenarios.front().horizon;
    const int R = types.size();

    std::vector<std::vector<double>> capacity(static_cast<std::size_t>(R),
                                              std::vector<double>(static_cast<std::size_t>(horizon)));
    for (int r = 0; r < R; ++r)
        for (int d = 0; d < horizon; ++d)
            capacity[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)] =
                daily_capacity(t, r, d, cal);

    std::vector<double> objs(scenarios.size(), 0.0);
    parallel_for_index(scenarios.size(), cfg.workers, [&](std::size_t i) {
        const auto& s = scenarios[i];
        CS_REQUIRE(s.horizon == horizon, "scenarios must share one horizon");
        CS_REQUIRE(static_cast<int>(s.f.size()) == R, "scenario type dimension mismatch");
        AssignmentProblem p;
        p.horizon = horizon;
        p.capacity = capacity;
        p.demand.assign(static_cast<std::size_t>(R),
                        std::vector<double>(static_cast<std::size_t>(horizon)));
        p.no_show.resize(static_cast<std::size_t>(R));
        p.weight.resize(static_cast<std::size_t>(R));
        for (int r = 0; r < R; ++r) {
            for (int d = 0; d < horizon; ++d)
                p.demand[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)] =
                    s.f[static_cast<std::size_t>(r)][static_cast<std::size_t>(d)];
            p.no_show[static_cast<std::size_t>(r)] = types[r].no_show_prob;
            p.weight[static_cast<std::size_t>(r)] = types[r].weight;
        }
        p.epsilon = cfg.epsilon;
        p.denial_penalty = cfg.denial_penalty;
        objs[i] = second_stage_objective(p);
    });
    return objs;
}

double saa_objective(const WeeklyTemplate& t, const std::vector<DemandScenario>& scenarios,
                     const PatientTypeSet& types, const CalendarConfig& cal,
                     const RecourseConfig& cfg) {
    const auto objs = saa_objective_samples(t, scenarios, types, cal, cfg);
    double sum = 0.0;
    for (double o : objs) sum += o;  // fixed order: bit-stable for any worker count
    return sum / static_cast<double>(scenarios.size());
}

}  // namespace clinicsched
