#include "clinicsched/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

#include "clinicsched/parallel.hpp"
#include "clinicsched/random.hpp"

namespace clinicsched {

namespace {

// Same slack the template validator grants: 3 x 0.32 > 0.96 in doubles.
constexpr double kBudgetTol = 1e-9;
// Relative width of the objective tie band. Two values this close are treated
// as the same optimum (covers last-ulp noise in the flow solver).
constexpr double kTieRel = 1e-9;
constexpr long kTieNodeCap = 200000;
constexpr std::size_t kTieLeafCap = 512;
constexpr long kPackingNodeCap = 2000000;
constexpr int kMaxDescentSweeps = 8;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Largest count k <= cap with k * c <= budget_left (+ tolerance).
int count_fit(double budget_left, double c, int cap) {
    int k = cap;
    while (k > 0 && static_cast<double>(k) * c > budget_left + kBudgetTol) --k;
    return k;
}

// Lexicographic-minimum packing of one weekday's per-type capacity vector into
// slot configurations. Entries are decided in type-major order (all of type
// 0's slots, then type 1's, ...), smallest count first, so the first completed
// assignment is the lexicographically smallest one -- which is the template
// tie-break order restricted to one weekday. Completions equal to a banned
// configuration are rejected and the search continues.
class PackingSearch {
public:
    PackingSearch(const PatientTypeSet& types, const CalendarConfig& cal,
                  const ComplexityBudget& budget, const std::vector<int>& caps,
                  const CommitmentFloor* floor, int weekday,
                  const std::vector<const ForbiddenDayConfig*>& bans)
        : types_(types), cal_(cal), budget_(budget), caps_(caps), floor_(floor),
          weekday_(weekday), bans_(bans), S_(cal.slots_per_day()), R_(types.size()) {}

    // [slot][type] counts, or nullopt when every packing is banned/infeasible.
    std::optional<std::vector<std::vector<int>>> solve(const std::vector<int>& target) {
        target_ = &target;
        x_.assign(static_cast<std::size_t>(S_), std::vector<int>(static_cast<std::size_t>(R_), 0));
        used_comp_.assign(static_cast<std::size_t>(S_), 0.0);
        sess_used_.assign(static_cast<std::size_t>(cal_.sessions_per_day), 0.0);
        nodes_ = 0;
        suffix_volume_.assign(static_cast<std::size_t>(R_) + 1, 0.0);
        for (int r = R_ - 1; r >= 0; --r)
            suffix_volume_[static_cast<std::size_t>(r)] =
                suffix_volume_[static_cast<std::size_t>(r) + 1] +
                types_[r].complexity * target[static_cast<std::size_t>(r)];
        relevant_bans_.clear();
        for (const ForbiddenDayConfig* b : bans_) {
            std::vector<int> bvec(static_cast<std::size_t>(R_), 0);
            for (int slot = 0; slot < S_; ++slot)
                for (int r = 0; r < R_; ++r)
                    bvec[static_cast<std::size_t>(r)] +=
                        b->per_slot_counts[static_cast<std::size_t>(slot)][static_cast<std::size_t>(r)];
            if (bvec == target) relevant_bans_.push_back(b);  // only its own vector can match
        }
        if (dfs(0)) return x_;
        return std::nullopt;
    }

private:
    int floor_at(int r, int slot) const {
        if (!floor_) return 0;
        return floor_->floors.at(r, cal_.weekly_slot(weekday_, slot));
    }

    // Upper bound on how much of type r still fits into slots > slot, given
    // this slot receives v of it.
    int suffix_cap(int r, int slot, int sess_of_slot, double c, int v) const {
        int total = 0;
        for (int s = 0; s < cal_.sessions_per_day; ++s) {
            int slot_sum = 0;
            for (int j = slot + 1; j < S_; ++j)
                if (cal_.session_of(j) == s)
                    slot_sum += count_fit(budget_.kappa - used_comp_[static_cast<std::size_t>(j)],
                                          c, caps_[static_cast<std::size_t>(r)]);
            double room = budget_.eta - sess_used_[static_cast<std::size_t>(s)];
            if (s == sess_of_slot) room -= v * c;
            total += count_fit(room, c, slot_sum);
        }
        return total;
    }

    bool is_banned() const {
        for (const ForbiddenDayConfig* b : relevant_bans_) {
            bool eq = true;
            for (int slot = 0; slot < S_ && eq; ++slot)
                for (int r = 0; r < R_; ++r)
                    if (x_[static_cast<std::size_t>(slot)][static_cast<std::size_t>(r)] !=
                        b->per_slot_counts[static_cast<std::size_t>(slot)]
                                          [static_cast<std::size_t>(r)]) {
                        eq = false;
                        break;
                    }
            if (eq) return true;
        }
        return false;
    }

    bool dfs(int k) {
        CS_REQUIRE(++nodes_ <= kPackingNodeCap, "packing search exceeded its node budget");
        if (k == R_ * S_) return !is_banned();
        const int r = k / S_;
        const int slot = k % S_;
        if (slot == 0) {
            // Entering row r: everything from row r on must still fit the sessions.
            double room = 0.0;
            for (double u : sess_used_) room += budget_.eta + kBudgetTol - u;
            if (suffix_volume_[static_cast<std::size_t>(r)] > room) return false;
        }
        const double c = types_[r].complexity;
        const int sess = cal_.session_of(slot);
        int placed = 0;
        for (int j = 0; j < slot; ++j) placed += x_[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
        const int rem = (*target_)[static_cast<std::size_t>(r)] - placed;
        const int lo = floor_at(r, slot);
        int hi = caps_[static_cast<std::size_t>(r)];
        hi = count_fit(budget_.kappa - used_comp_[static_cast<std::size_t>(slot)], c, hi);
        hi = count_fit(budget_.eta - sess_used_[static_cast<std::size_t>(sess)], c, hi);
        hi = std::min(hi, rem);
        if (slot == S_ - 1) {  // last slot of the row is forced
            if (rem < lo || rem > hi) return false;
            return try_value(k, r, slot, sess, c, rem);
        }
        for (int v = lo; v <= hi; ++v) {
            if (v + suffix_cap(r, slot, sess, c, v) < rem) continue;
            if (try_value(k, r, slot, sess, c, v)) return true;
        }
        return false;
    }

    bool try_value(int k, int r, int slot, int sess, double c, int v) {
        x_[static_cast<std::size_t>(slot)][static_cast<std::size_t>(r)] = v;
        used_comp_[static_cast<std::size_t>(slot)] += v * c;
        sess_used_[static_cast<std::size_t>(sess)] += v * c;
        if (dfs(k + 1)) return true;
        x_[static_cast<std::size_t>(slot)][static_cast<std::size_t>(r)] = 0;
        used_comp_[static_cast<std::size_t>(slot)] -= v * c;
        sess_used_[static_cast<std::size_t>(sess)] -= v * c;
        return false;
    }

    const PatientTypeSet& types_;
    const CalendarConfig& cal_;
    const ComplexityBudget& budget_;
    const std::vector<int>& caps_;
    const CommitmentFloor* floor_;
    int weekday_;
    const std::vector<const ForbiddenDayConfig*>& bans_;
    int S_;
    int R_;
    const std::vector<int>* target_ = nullptr;
    std::vector<std::vector<int>> x_;
    std::vector<double> used_comp_;
    std::vector<double> sess_used_;
    std::vector<double> suffix_volume_;
    std::vector<const ForbiddenDayConfig*> relevant_bans_;
    long nodes_ = 0;
};

// Achievable per-type capacity vectors of one weekday.
struct WeekdaySets {
    std::vector<std::vector<int>> all;       // every achievable vector, lex ascending
    std::vector<std::vector<int>> frontier;  // Pareto-maximal subset, lex ascending
    std::vector<int> max_coords;             // componentwise maxima over `all`
};

std::vector<std::vector<int>> pareto_max(const std::vector<std::vector<int>>& all) {
    const std::size_t n = all.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        long sa = 0, sb = 0;
        for (int v : all[a]) sa += v;
        for (int v : all[b]) sb += v;
        if (sa != sb) return sa > sb;  // a dominator always has the larger sum
        return all[a] < all[b];
    });
    std::vector<std::vector<int>> kept;
    for (std::size_t idx : order) {
        const auto& v = all[idx];
        bool dominated = false;
        for (const auto& u : kept) {
            bool ge = true;
            for (std::size_t r = 0; r < v.size(); ++r)
                if (u[r] < v[r]) {
                    ge = false;
                    break;
                }
            if (ge) {
                dominated = true;
                break;
            }
        }
        if (!dominated) kept.push_back(v);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

// Session-by-session dynamic program enumerating every day capacity vector
// that some floor-respecting slot assignment realizes under the budgets.
// Cuts are applied afterwards (apply_cuts); they can only remove the single
// vector a banned configuration itself realizes.
WeekdaySets build_base_sets(int wd, const SlotConfigCatalog& catalog,
                            const std::vector<double>& config_comp, const PatientTypeSet& types,
                            const CalendarConfig& cal, const ComplexityBudget& budget,
                            const CommitmentFloor* floor) {
    const int S = cal.slots_per_day();
    const int R = types.size();
    std::vector<std::vector<std::size_t>> allowed(static_cast<std::size_t>(S));
    for (int slot = 0; slot < S; ++slot) {
        for (std::size_t i = 0; i < catalog.size(); ++i) {
            bool ok = true;
            for (int r = 0; r < R && ok; ++r) {
                const int fl = floor ? floor->floors.at(r, cal.weekly_slot(wd, slot)) : 0;
                if (catalog.configs[i][static_cast<std::size_t>(r)] < fl) ok = false;
            }
            if (ok) allowed[static_cast<std::size_t>(slot)].push_back(i);
        }
        if (allowed[static_cast<std::size_t>(slot)].empty())
            throw InfeasibleModel("no feasible configuration for " + weekday_name(wd) + " slot " +
                                  std::to_string(slot) +
                                  ": the commitment floor exceeds the slot budget or per-slot caps");
    }

    auto session_sums = [&](int sess) {
        std::vector<std::pair<std::vector<int>, double>> acc;
        acc.emplace_back(std::vector<int>(static_cast<std::size_t>(R), 0), 0.0);
        const int first = sess * cal.slots_per_session;
        for (int slot = first; slot < first + cal.slots_per_session; ++slot) {
            std::vector<std::pair<std::vector<int>, double>> next;
            next.reserve(acc.size() * allowed[static_cast<std::size_t>(slot)].size());
            for (const auto& [v, comp] : acc) {
                for (std::size_t idx : allowed[static_cast<std::size_t>(slot)]) {
                    const double nc = comp + config_comp[idx];
                    if (nc > budget.eta + kBudgetTol) continue;
                    std::vector<int> u = v;
                    for (int r = 0; r < R; ++r)
                        u[static_cast<std::size_t>(r)] +=
                            catalog.configs[idx][static_cast<std::size_t>(r)];
                    next.emplace_back(std::move(u), nc);
                }
            }
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end(),
                                   [](const auto& a, const auto& b) { return a.first == b.first; }),
                       next.end());
            acc = std::move(next);
        }
        std::vector<std::vector<int>> out;
        out.reserve(acc.size());
        for (auto& [v, comp] : acc) out.push_back(std::move(v));
        return out;
    };

    std::vector<std::vector<int>> day;
    if (cal.sessions_per_day == 1) {
        day = session_sums(0);
    } else {
        const auto morning = session_sums(0);
        const auto afternoon = session_sums(1);
        day.reserve(morning.size() * afternoon.size());
        for (const auto& m : morning)
            for (const auto& a : afternoon) {
                std::vector<int> u = m;
                for (int r = 0; r < R; ++r) u[static_cast<std::size_t>(r)] += a[static_cast<std::size_t>(r)];
                day.push_back(std::move(u));
            }
        std::sort(day.begin(), day.end());
        day.erase(std::unique(day.begin(), day.end()), day.end());
    }

    WeekdaySets sets;
    sets.all = std::move(day);
    return sets;
}

void finish_sets(WeekdaySets& sets, int R) {
    sets.frontier = pareto_max(sets.all);
    sets.max_coords.assign(static_cast<std::size_t>(R), 0);
    for (const auto& v : sets.all)
        for (int r = 0; r < R; ++r)
            sets.max_coords[static_cast<std::size_t>(r)] =
                std::max(sets.max_coords[static_cast<std::size_t>(r)], v[static_cast<std::size_t>(r)]);
}

// Removes every vector whose packings are all banned. A cut is an exact
// slot-by-slot configuration, so only the vector it sums to can be affected,
// and only when no alternative packing of that vector exists.
void apply_cuts(WeekdaySets& sets, int wd, const PatientTypeSet& types, const CalendarConfig& cal,
                const ComplexityBudget& budget, const std::vector<int>& caps,
                const CommitmentFloor* floor, const std::vector<const ForbiddenDayConfig*>& bans) {
    if (bans.empty()) return;
    const int R = types.size();
    std::set<std::vector<int>> affected;
    for (const ForbiddenDayConfig* b : bans) {
        std::vector<int> bvec(static_cast<std::size_t>(R), 0);
        for (std::size_t slot = 0; slot < b->per_slot_counts.size(); ++slot)
            for (int r = 0; r < R; ++r)
                bvec[static_cast<std::size_t>(r)] +=
                    b->per_slot_counts[slot][static_cast<std::size_t>(r)];
        affected.insert(std::move(bvec));
    }
    PackingSearch pack(types, cal, budget, caps, floor, wd, bans);
    for (const auto& bvec : affected) {
        auto it = std::lower_bound(sets.all.begin(), sets.all.end(), bvec);
        if (it == sets.all.end() || *it != bvec) continue;
        if (!pack.solve(bvec)) sets.all.erase(it);
    }
    if (sets.all.empty())
        throw InfeasibleModel("every feasible day configuration for " + weekday_name(wd) +
                              " is excluded by accumulated cuts");
}

// Caches per-type recourse values. A template's objective depends on its
// counts only through each type's per-weekday capacity tuple, so values are
// keyed by (type, tuple) and stored per scenario; assembling a template value
// from them reproduces saa_objective bit for bit (same accumulation order).
class TupleEvaluator {
public:
    TupleEvaluator(const std::vector<DemandScenario>& scenarios, const PatientTypeSet& types,
                   int days_per_week, double epsilon, double denial_penalty, int workers)
        : types_(types), W_(days_per_week), workers_(workers),
          n_(static_cast<int>(scenarios.size())), H_(scenarios.front().horizon) {
        const int R = types.size();
        delay_cost_ = detail::make_delay_cost_table(H_, epsilon);
        AssignmentProblem proto;
        proto.horizon = H_;
        proto.epsilon = epsilon;
        proto.denial_penalty = denial_penalty;
        for (int r = 0; r < R; ++r) proto.weight.push_back(types[r].weight);
        penalty_ = proto.effective_denial_penalty();
        if (denial_penalty > 0.0) {
            double max_w = 0.0;
            for (double w : proto.weight) max_w = std::max(max_w, w);
            CS_REQUIRE(penalty_ > std::pow(static_cast<double>(H_ - 1), 1.0 + epsilon) * max_w,
                       "denial penalty must exceed the worst possible delay cost");
        }
        demand_.assign(static_cast<std::size_t>(R), {});
        for (int r = 0; r < R; ++r) {
            demand_[static_cast<std::size_t>(r)].resize(static_cast<std::size_t>(n_));
            for (int s = 0; s < n_; ++s) {
                const auto& f = scenarios[static_cast<std::size_t>(s)].f[static_cast<std::size_t>(r)];
                demand_[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] =
                    std::vector<double>(f.begin(), f.end());
            }
        }
        cache_.resize(static_cast<std::size_t>(R));
    }

    // Parallel fill of missing keys; insertion order is fixed, so the cache
    // contents do not depend on the worker count.
    void prefetch(const std::vector<std::pair<int, std::vector<int>>>& keys) {
        std::vector<std::pair<int, std::vector<int>>> missing;
        for (const auto& k : keys) {
            if (cache_[static_cast<std::size_t>(k.first)].count(k.second)) continue;
            missing.push_back(k);
        }
        std::sort(missing.begin(), missing.end());
        missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
        if (missing.empty()) return;
        std::vector<std::vector<double>> results(missing.size());
        parallel_for_index(missing.size(), workers_,
                           [&](std::size_t i) { results[i] = compute(missing[i].first, missing[i].second); });
        for (std::size_t i = 0; i < missing.size(); ++i)
            cache_[static_cast<std::size_t>(missing[i].first)].emplace(std::move(missing[i].second),
                                                                       std::move(results[i]));
        solves_ += static_cast<long>(missing.size());
    }

    const std::vector<double>& values(int r, const std::vector<int>& tuple) {
        auto& m = cache_[static_cast<std::size_t>(r)];
        auto it = m.find(tuple);
        if (it == m.end()) {
            it = m.emplace(tuple, compute(r, tuple)).first;
            ++solves_;
        }
        return it->second;
    }

    // Mean over scenarios of the per-scenario type sums, accumulated exactly
    // like saa_objective (types ascending inside, scenarios ascending outside).
    double mean_of(const std::vector<const std::vector<double>*>& per_type) const {
        double sum = 0.0;
        for (int s = 0; s < n_; ++s) {
            double obj = 0.0;
            for (const auto* vals : per_type) obj += (*vals)[static_cast<std::size_t>(s)];
            sum += obj;
        }
        return sum / static_cast<double>(n_);
    }

    long solves() const { return solves_; }
    int scenario_count() const { return n_; }

private:
    std::vector<double> compute(int r, const std::vector<int>& tuple) const {
        std::vector<double> cap(static_cast<std::size_t>(H_));
        for (int d = 0; d < H_; ++d)
            cap[static_cast<std::size_t>(d)] = static_cast<double>(tuple[static_cast<std::size_t>(d % W_)]);
        detail::TypeRecourseSolver solver;
        std::vector<double> out(static_cast<std::size_t>(n_));
        for (int s = 0; s < n_; ++s)
            out[static_cast<std::size_t>(s)] =
                solver.solve(cap, demand_[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)],
                             types_[r].weight, types_[r].no_show_prob, delay_cost_, penalty_);
        return out;
    }

    const PatientTypeSet& types_;
    int W_;
    int workers_;
    int n_;
    int H_;
    std::vector<double> delay_cost_;
    double penalty_ = 0.0;
    std::vector<std::vector<std::vector<double>>> demand_;  // [type][scenario][day]
    std::vector<std::map<std::vector<int>, std::vector<double>>> cache_;
    long solves_ = 0;
};

// Search over per-weekday capacity vectors. Raising any capacity never raises
// the recourse cost, so (a) the optimum lies on the per-weekday Pareto
// frontiers, and (b) completing a prefix with the componentwise maxima of the
// remaining weekdays bounds every completion from below. The search warm
// starts with a bound-guided dive plus coordinate descent, then runs
// depth-first branch and bound under a deterministic evaluation budget; when
// the search completes exactly, a second pass over the full vector sets
// collects every combination tied with the incumbent for the lexicographic
// tie-break.
class TemplateSearch {
public:
    TemplateSearch(const std::vector<WeekdaySets>& sets, TupleEvaluator& ev, int types,
                   double gap_target, long node_budget,
                   std::chrono::steady_clock::time_point deadline)
        : sets_(sets), ev_(ev), W_(static_cast<int>(sets.size())), R_(types),
          gap_target_(gap_target), node_budget_(node_budget), deadline_(deadline) {}

    void run() {
        descend();
        CS_REQUIRE(inc_found_, "search must reach at least one leaf");
        chosen_.clear();
        value_dfs(0);
        // Exact tie handling needs a completed value phase; a budget-stopped
        // search keeps its (deterministic) incumbent.
        if (!stop_) {
            chosen_.clear();
            tie_dfs(0);
        }
        if (std::find(ties_.begin(), ties_.end(), inc_combo_) == ties_.end())
            ties_.push_back(inc_combo_);
    }

    double incumbent_value() const { return inc_value_; }
    const std::vector<std::vector<int>>& incumbent_combo() const { return inc_combo_; }
    double lower_bound() const { return std::min(inc_value_, pruned_min_); }
    const std::vector<std::vector<std::vector<int>>>& ties() const { return ties_; }
    long value_nodes() const { return value_nodes_; }
    long tie_nodes() const { return tie_nodes_; }
    bool time_limit_hit() const { return time_hit_; }
    bool budget_hit() const { return budget_hit_; }
    bool completed() const { return !stop_; }
    bool tie_caps_hit() const { return tie_cap_hit_; }
    long improvements() const { return improvements_; }
    int descent_sweeps() const { return descent_sweeps_; }

private:
    struct Child {
        double bound;
        std::size_t idx;
        bool operator<(const Child& o) const {
            if (bound != o.bound) return bound < o.bound;
            return idx < o.idx;  // candidate lists are lex sorted
        }
    };

    std::vector<int> child_tuple(int r, int depth, int vr) const {
        std::vector<int> t(static_cast<std::size_t>(W_));
        for (int j = 0; j < depth; ++j) t[static_cast<std::size_t>(j)] = chosen_[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
        t[static_cast<std::size_t>(depth)] = vr;
        for (int j = depth + 1; j < W_; ++j)
            t[static_cast<std::size_t>(j)] = sets_[static_cast<std::size_t>(j)].max_coords[static_cast<std::size_t>(r)];
        return t;
    }

    std::vector<Child> bounded_children(int depth, const std::vector<std::vector<int>>& cands) {
        std::vector<std::pair<int, std::vector<int>>> keys;
        for (int r = 0; r < R_; ++r) {
            std::set<int> seen;
            for (const auto& v : cands)
                if (seen.insert(v[static_cast<std::size_t>(r)]).second)
                    keys.emplace_back(r, child_tuple(r, depth, v[static_cast<std::size_t>(r)]));
        }
        ev_.prefetch(keys);
        std::vector<Child> children;
        children.reserve(cands.size());
        std::vector<const std::vector<double>*> per_type(static_cast<std::size_t>(R_));
        for (std::size_t i = 0; i < cands.size(); ++i) {
            for (int r = 0; r < R_; ++r)
                per_type[static_cast<std::size_t>(r)] =
                    &ev_.values(r, child_tuple(r, depth, cands[i][static_cast<std::size_t>(r)]));
            children.push_back({ev_.mean_of(per_type), i});
        }
        std::sort(children.begin(), children.end());
        return children;
    }

    double prune_threshold() const {
        if (inc_value_ <= 0.0) return 0.0;
        return inc_value_ * (1.0 - std::max(gap_target_, kTieRel));
    }

    void maybe_stop() {
        if (stop_ || !inc_found_) return;
        if (value_nodes_ > node_budget_) {
            stop_ = true;
            budget_hit_ = true;
        } else if (std::chrono::steady_clock::now() > deadline_) {
            stop_ = true;
            time_hit_ = true;
        }
    }

    // Exact value of a complete combination, via the tuple cache.
    double combo_value(const std::vector<std::vector<int>>& combo) {
        std::vector<const std::vector<double>*> per_type(static_cast<std::size_t>(R_));
        for (int r = 0; r < R_; ++r) {
            std::vector<int> t(static_cast<std::size_t>(W_));
            for (int j = 0; j < W_; ++j)
                t[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
            per_type[static_cast<std::size_t>(r)] = &ev_.values(r, t);
        }
        return ev_.mean_of(per_type);
    }

    // Warm start: follow the lowest bound to a leaf, then sweep coordinate
    // descent over the weekday frontiers until no move improves. Everything
    // here is deterministic (ties keep the current choice), so the budget can
    // cut the sweeps off without hurting reproducibility.
    void descend() {
        chosen_.clear();
        for (int depth = 0; depth < W_; ++depth) {
            const auto& cands = sets_[static_cast<std::size_t>(depth)].frontier;
            const auto children = bounded_children(depth, cands);
            value_nodes_ += static_cast<long>(children.size());
            chosen_.push_back(cands[children.front().idx]);
            if (depth == W_ - 1) {
                inc_found_ = true;
                inc_value_ = children.front().bound;
                inc_combo_ = chosen_;
                ++improvements_;
            }
        }

        for (int sweep = 0; sweep < kMaxDescentSweeps; ++sweep) {
            bool improved = false;
            for (int wd = 0; wd < W_; ++wd) {
                if (value_nodes_ > node_budget_) return;
                const auto& cands = sets_[static_cast<std::size_t>(wd)].frontier;
                std::vector<std::pair<int, std::vector<int>>> keys;
                auto combo = inc_combo_;
                for (const auto& v : cands) {
                    combo[static_cast<std::size_t>(wd)] = v;
                    for (int r = 0; r < R_; ++r) {
                        std::vector<int> t(static_cast<std::size_t>(W_));
                        for (int j = 0; j < W_; ++j)
                            t[static_cast<std::size_t>(j)] =
                                combo[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
                        keys.emplace_back(r, std::move(t));
                    }
                }
                ev_.prefetch(keys);
                for (const auto& v : cands) {
                    combo[static_cast<std::size_t>(wd)] = v;
                    const double val = combo_value(combo);
                    if (val < inc_value_) {
                        inc_value_ = val;
                        inc_combo_ = combo;
                        improved = true;
                        ++improvements_;
                    }
                }
                value_nodes_ += static_cast<long>(cands.size());
            }
            descent_sweeps_ = sweep + 1;
            if (!improved) break;
        }
    }

    void value_dfs(int depth) {
        const auto& cands = sets_[static_cast<std::size_t>(depth)].frontier;
        const auto children = bounded_children(depth, cands);
        value_nodes_ += static_cast<long>(children.size());
        for (const Child& child : children) {
            maybe_stop();
            if (stop_) {  // abandoned subtrees feed the certified lower bound
                pruned_min_ = std::min(pruned_min_, child.bound);
                continue;
            }
            if (depth == W_ - 1) {
                // Leaf: the bound is the exact value; children are sorted, so
                // the first one is this subtree's optimum.
                if (!inc_found_ || child.bound < inc_value_) {
                    inc_found_ = true;
                    inc_value_ = child.bound;
                    chosen_.push_back(cands[child.idx]);
                    inc_combo_ = chosen_;
                    chosen_.pop_back();
                    ++improvements_;
                }
                break;
            }
            if (inc_found_ && child.bound >= prune_threshold()) {
                // Sorted ascending: every remaining sibling prunes as well.
                pruned_min_ = std::min(pruned_min_, child.bound);
                break;
            }
            chosen_.push_back(cands[child.idx]);
            value_dfs(depth + 1);
            chosen_.pop_back();
        }
    }

    void tie_dfs(int depth) {
        if (tie_stop_) return;
        const auto& cands = sets_[static_cast<std::size_t>(depth)].all;
        // Budget counts candidate evaluations, not nodes: wide plateaus make a
        // single node expensive, and the budget must bound total work.
        tie_nodes_ += static_cast<long>(cands.size());
        if (tie_nodes_ > kTieNodeCap || std::chrono::steady_clock::now() > deadline_) {
            tie_cap_hit_ = true;
            tie_stop_ = true;
            return;
        }
        const auto children = bounded_children(depth, cands);
        const double band = inc_value_ <= 0.0 ? 0.0 : inc_value_ * (1.0 + kTieRel);
        for (const Child& child : children) {
            if (tie_stop_) return;
            if (child.bound > band) break;  // sorted: the rest lie above the band
            if (depth == W_ - 1) {
                chosen_.push_back(cands[child.idx]);
                ties_.push_back(chosen_);
                chosen_.pop_back();
                if (ties_.size() >= kTieLeafCap) {
                    tie_cap_hit_ = true;
                    tie_stop_ = true;
                    return;
                }
            } else {
                chosen_.push_back(cands[child.idx]);
                tie_dfs(depth + 1);
                chosen_.pop_back();
            }
        }
    }

    const std::vector<WeekdaySets>& sets_;
    TupleEvaluator& ev_;
    int W_;
    int R_;
    double gap_target_;
    long node_budget_;
    std::chrono::steady_clock::time_point deadline_;

    std::vector<std::vector<int>> chosen_;
    bool inc_found_ = false;
    double inc_value_ = std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> inc_combo_;
    double pruned_min_ = std::numeric_limits<double>::infinity();
    long value_nodes_ = 0;
    long tie_nodes_ = 0;
    long improvements_ = 0;
    int descent_sweeps_ = 0;
    bool stop_ = false;
    bool time_hit_ = false;
    bool budget_hit_ = false;
    bool tie_stop_ = false;
    bool tie_cap_hit_ = false;
    std::vector<std::vector<std::vector<int>>> ties_;
};

bool lex_less(const CountMatrix& a, const CountMatrix& b) {
    for (int r = 0; r < a.types(); ++r)
        for (int s = 0; s < a.weekly_slots(); ++s) {
            if (a.at(r, s) != b.at(r, s)) return a.at(r, s) < b.at(r, s);
        }
    return false;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

bool SlotConfigCatalog::contains(const std::vector<int>& x) const {
    return std::binary_search(configs.begin(), configs.end(), x);
}

SlotConfigCatalog enumerate_slot_configs(const PatientTypeSet& types, double kappa,
                                         const std::vector<int>& max_per_type) {
    CS_REQUIRE(types.size() >= 1, "at least one patient type required");
    CS_REQUIRE(kappa > 0.0, "kappa must be > 0");
    CS_REQUIRE(static_cast<int>(max_per_type.size()) == types.size(),
               "per-type cap dimension mismatch");
    for (int c : max_per_type) CS_REQUIRE(c >= 0, "per-type caps must be >= 0");

    const int R = types.size();
    SlotConfigCatalog cat;
    std::vector<int> cur(static_cast<std::size_t>(R), 0);
    // Counting up at each level yields lexicographically ascending output.
    auto rec = [&](auto&& self, int r, double comp) -> void {
        if (r == R) {
            cat.configs.push_back(cur);
            return;
        }
        for (int v = 0; v <= max_per_type[static_cast<std::size_t>(r)]; ++v) {
            const double nc = comp + v * types[r].complexity;
            if (nc > kappa + kBudgetTol) break;
            cur[static_cast<std::size_t>(r)] = v;
            self(self, r + 1, nc);
        }
        cur[static_cast<std::size_t>(r)] = 0;
    };
    rec(rec, 0, 0.0);
    return cat;
}

void OptimizeParams::validate() const {
    CS_REQUIRE(scenario_count >= 1, "scenario_count must be >= 1");
    CS_REQUIRE(gap_target >= 0.0, "gap_target must be >= 0");
    CS_REQUIRE(saa_batches >= 1, "saa_batches must be >= 1");
    CS_REQUIRE(eval_sample >= 1, "eval_sample must be >= 1");
    CS_REQUIRE(time_limit_seconds > 0.0, "time_limit_seconds must be > 0");
    CS_REQUIRE(node_budget >= 1, "node_budget must be >= 1");
    CS_REQUIRE(max_per_slot >= 0, "max_per_slot must be >= 0");
    CS_REQUIRE(epsilon >= 0.0, "epsilon must be >= 0");
    CS_REQUIRE(workers >= 1, "workers must be >= 1");
}

OptimizeResult optimize_template(const std::vector<DemandScenario>& scenarios,
                                 const PatientTypeSet& types, const CalendarConfig& cal,
                                 const CommitmentFloor* floor,
                                 const std::vector<ForbiddenDayConfig>& banned,
                                 const ComplexityBudget& budget, const OptimizeParams& params,
                                 int month_index) {
    params.validate();
    budget.validate();
    cal.validate();
    CS_REQUIRE(!scenarios.empty(), "at least one scenario required");
    const int R = types.size();
    const int W = cal.days_per_week;
    const int S = cal.slots_per_day();
    const int H = scenarios.front().horizon;
    CS_REQUIRE(H >= 1, "scenario horizon must be >= 1");
    for (const auto& s : scenarios) {
        CS_REQUIRE(s.horizon == H, "scenarios must share one horizon");
        CS_REQUIRE(static_cast<int>(s.f.size()) == R, "scenario type dimension mismatch");
    }
    if (floor) {
        CS_REQUIRE(floor->floors.types() == R && floor->floors.weekly_slots() == cal.slots_per_week(),
                   "floor dimensions must match the calendar and type set");
        const auto fr = validate_floor(*floor, types, cal, budget);
        CS_REQUIRE(fr.feasible(), "commitment floor violates the budgets: " + fr.describe(types));
    }
    std::vector<std::vector<const ForbiddenDayConfig*>> bans_by_wd(static_cast<std::size_t>(W));
    for (const auto& b : banned) {
        CS_REQUIRE(b.weekday >= 0 && b.weekday < W, "banned configuration weekday out of range");
        CS_REQUIRE(static_cast<int>(b.per_slot_counts.size()) == S,
                   "banned configuration slot dimension mismatch");
        for (const auto& row : b.per_slot_counts)
            CS_REQUIRE(static_cast<int>(row.size()) == R,
                       "banned configuration type dimension mismatch");
        bans_by_wd[static_cast<std::size_t>(b.weekday)].push_back(&b);
    }

    const std::vector<int> caps(static_cast<std::size_t>(R), params.max_per_slot);
    const SlotConfigCatalog catalog = enumerate_slot_configs(types, budget.kappa, caps);
    std::vector<double> config_comp(catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i)
        config_comp[i] = slot_complexity(catalog.configs[i], types);

    bool floored = false;
    if (floor)
        for (int r = 0; r < R && !floored; ++r)
            for (int a = 0; a < cal.slots_per_week(); ++a)
                if (floor->floors.at(r, a) > 0) {
                    floored = true;
                    break;
                }

    std::vector<WeekdaySets> sets(static_cast<std::size_t>(W));
    if (!floored) {
        WeekdaySets base = build_base_sets(0, catalog, config_comp, types, cal, budget, nullptr);
        for (int wd = 0; wd < W; ++wd) sets[static_cast<std::size_t>(wd)] = base;
    } else {
        for (int wd = 0; wd < W; ++wd)
            sets[static_cast<std::size_t>(wd)] =
                build_base_sets(wd, catalog, config_comp, types, cal, budget, floor);
    }
    for (int wd = 0; wd < W; ++wd) {
        apply_cuts(sets[static_cast<std::size_t>(wd)], wd, types, cal, budget, caps, floor,
                   bans_by_wd[static_cast<std::size_t>(wd)]);
        finish_sets(sets[static_cast<std::size_t>(wd)], R);
    }

    TupleEvaluator evaluator(scenarios, types, W, params.epsilon, params.denial_penalty,
                             params.workers);
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(params.time_limit_seconds));
    TemplateSearch search(sets, evaluator, R, params.gap_target, params.node_budget, deadline);
    search.run();

    // Realize each tied combination as its lexicographically smallest packing
    // and keep the smallest full count matrix.
    std::map<std::pair<int, std::vector<int>>, std::vector<std::vector<int>>> pack_memo;
    auto packing_for = [&](int wd, const std::vector<int>& v) -> const std::vector<std::vector<int>>& {
        const auto key = std::make_pair(wd, v);
        auto it = pack_memo.find(key);
        if (it == pack_memo.end()) {
            PackingSearch pack(types, cal, budget, caps, floor, wd,
                               bans_by_wd[static_cast<std::size_t>(wd)]);
            auto res = pack.solve(v);
            CS_REQUIRE(res.has_value(), "achievable day vector must admit a feasible packing");
            it = pack_memo.emplace(key, std::move(*res)).first;
        }
        return it->second;
    };

    WeeklyTemplate best(month_index, types, cal);
    bool have = false;
    for (const auto& combo : search.ties()) {
        WeeklyTemplate t(month_index, types, cal);
        for (int wd = 0; wd < W; ++wd) {
            const auto& pack = packing_for(wd, combo[static_cast<std::size_t>(wd)]);
            for (int slot = 0; slot < S; ++slot)
                for (int r = 0; r < R; ++r)
                    t.counts.at(r, cal.weekly_slot(wd, slot)) =
                        pack[static_cast<std::size_t>(slot)][static_cast<std::size_t>(r)];
        }
        if (!have || lex_less(t.counts, best.counts)) {
            best = t;
            have = true;
        }
    }
    CS_REQUIRE(have, "tie set must not be empty");

    const auto report = validate_template(best, types, cal, budget, floor, banned);
    CS_REQUIRE(report.feasible(), "optimizer produced an infeasible template: " + report.describe(types));

    RecourseConfig rcfg;
    rcfg.epsilon = params.epsilon;
    rcfg.denial_penalty = params.denial_penalty;
    rcfg.workers = params.workers;
    const double objective = saa_objective(best, scenarios, types, cal, rcfg);

    OptimizeResult result;
    result.tmpl = best;
    result.objective = objective;
    result.certificate.objective = objective;
    result.certificate.lower_bound = std::min(search.lower_bound(), objective);
    result.certificate.relative_gap =
        objective > 0.0 ? (objective - result.certificate.lower_bound) / objective : 0.0;
    result.certificate.nodes = search.value_nodes() + search.tie_nodes();
    result.certificate.time_limit_hit = search.time_limit_hit() || search.budget_hit();

    std::ostringstream log;
    log << "catalog_size=" << catalog.size() << "\n";
    for (int wd = 0; wd < W; ++wd) {
        const auto& s = sets[static_cast<std::size_t>(wd)];
        log << "weekday=" << wd << " achievable=" << s.all.size() << " frontier="
            << s.frontier.size() << " max=";
        for (int r = 0; r < R; ++r) log << (r ? "," : "") << s.max_coords[static_cast<std::size_t>(r)];
        log << " cuts=" << bans_by_wd[static_cast<std::size_t>(wd)].size() << "\n";
    }
    log << "descent_sweeps=" << search.descent_sweeps() << " improvements="
        << search.improvements() << " incumbent=" << fmt(search.incumbent_value()) << "\n";
    log << "value_evals=" << search.value_nodes() << " completed=" << (search.completed() ? 1 : 0)
        << " budget_hit=" << (search.budget_hit() ? 1 : 0) << "\n";
    log << "tie_evals=" << search.tie_nodes() << " ties=" << search.ties().size()
        << " tie_caps_hit=" << (search.tie_caps_hit() ? 1 : 0) << "\n";
    log << "solves=" << evaluator.solves() << " scenarios=" << evaluator.scenario_count() << "\n";
    log << "objective=" << fmt(result.objective) << " lower_bound="
        << fmt(result.certificate.lower_bound) << " relative_gap="
        << fmt(result.certificate.relative_gap) << " nodes=" << result.certificate.nodes
        << " time_limit_hit=" << (result.certificate.time_limit_hit ? 1 : 0) << "\n";
    result.search_log = log.str();
    return result;
}

SaaGapReport estimate_saa_gap(const ScenarioSource& source, const PatientTypeSet& types,
                              const CalendarConfig& cal, const CommitmentFloor* floor,
                              const std::vector<ForbiddenDayConfig>& banned,
                              const ComplexityBudget& budget, const OptimizeParams& params,
                              std::uint64_t seed) {
    params.validate();
    CS_REQUIRE(params.saa_batches >= 2, "gap estimation needs at least two batches");
    CS_REQUIRE(static_cast<bool>(source), "scenario source must be callable");

    const int M = params.saa_batches;
    std::vector<WeeklyTemplate> candidates;
    SaaGapReport report;
    for (int m = 0; m < M; ++m) {
        auto scen = source(params.scenario_count,
                           derive_seed(seed, "saa-batch", {static_cast<std::uint64_t>(m)}));
        CS_REQUIRE(static_cast<int>(scen.size()) == params.scenario_count,
                   "scenario source returned the wrong count");
        auto res = optimize_template(scen, types, cal, floor, banned, budget, params);
        report.batch_objectives.push_back(res.objective);
        candidates.push_back(std::move(res.tmpl));
    }

    const auto eval = source(params.eval_sample, derive_seed(seed, "saa-eval"));
    CS_REQUIRE(static_cast<int>(eval.size()) == params.eval_sample,
               "scenario source returned the wrong count");
    RecourseConfig rcfg;
    rcfg.epsilon = params.epsilon;
    rcfg.denial_penalty = params.denial_penalty;
    rcfg.workers = params.workers;

    double best_mean = std::numeric_limits<double>::infinity();
    std::vector<double> best_samples;
    std::size_t best_idx = 0;
    for (std::size_t m = 0; m < candidates.size(); ++m) {
        auto samples = saa_objective_samples(candidates[m], eval, types, cal, rcfg);
        const double u = mean(samples);
        if (u < best_mean) {
            best_mean = u;
            best_samples = std::move(samples);
            best_idx = m;
        }
    }

    report.lower_bound_mean = mean(report.batch_objectives);
    report.lower_ci_half_width =
        1.96 * sample_sd(report.batch_objectives) / std::sqrt(static_cast<double>(M));
    report.upper_bound = best_mean;
    report.upper_ci_half_width =
        1.96 * sample_sd(best_samples) / std::sqrt(static_cast<double>(best_samples.size()));
    report.relative_gap =
        report.upper_bound > 0.0 ? (report.upper_bound - report.lower_bound_mean) / report.upper_bound
                                 : 0.0;
    report.incumbent = candidates[best_idx];
    return report;
}

SaaGapReport estimate_saa_gap(const DemandParams& demand, int horizon,
                              const ComplexityBudget& budget, const OptimizeParams& params,
                              std::uint64_t seed) {
    demand.validate();
    CS_REQUIRE(horizon >= 1, "horizon must be >= 1");
    ScenarioSource source = [&demand, horizon](int count, std::uint64_t s) {
        return generate_scenarios(demand, horizon, s, count);
    };
    return estimate_saa_gap(source, demand.types, demand.calendar, nullptr, {}, budget, params,
                            seed);
}

}  // namespace clinicsched
