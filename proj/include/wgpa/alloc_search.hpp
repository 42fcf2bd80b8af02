#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "wgpa/model.hpp"
#include "wgpa/strategy_eval.hpp"
#include "wgpa/time_opt.hpp"

namespace wgpa {

struct AllocationResult {
    RecruitmentStrategy strategy;
    double objective = 0.0;       // value of the recruited plan; 0 when empty
    std::int64_t nodes = 0;       // orderings whose times were optimised
};

// A search node: a recruitment prefix with its bracketing bounds.
struct OrderingGroup {
    std::vector<int> prefix;
    double lower = 0.0;  // objective of the prefix at optimised times
    double upper = 0.0;  // bound over all extensions within the candidate set
};

namespace detail {

inline std::vector<int> all_ids(const Environment& env) {
    std::vector<int> ids(static_cast<std::size_t>(env.size()));
    for (int i = 0; i < env.size(); ++i) ids[static_cast<std::size_t>(i)] = i + 1;
    return ids;
}

inline void check_effective_costs(const std::vector<double>& costs, const Environment& env) {
    if (static_cast<int>(costs.size()) != env.size())
        throw std::invalid_argument("effective costs must be given for all providers");
    for (double c : costs)
        if (!std::isfinite(c)) throw std::invalid_argument("effective costs must be finite");
}

inline void check_candidates(const std::vector<int>& candidates, const Environment& env) {
    std::vector<char> seen(static_cast<std::size_t>(env.size()) + 1, 0);
    for (int id : candidates) {
        if (id < 1 || id > env.size())
            throw std::invalid_argument("candidate id out of range");
        if (seen[static_cast<std::size_t>(id)]++)
            throw std::invalid_argument("duplicate candidate id");
    }
}

inline bool law_has_atoms(const DurationModel& m) {
    return std::visit(
        [](const auto& law) -> bool {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, Deterministic>) {
                return true;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return false;
            } else {
                for (const auto& c : law.components)
                    if (law_has_atoms(c)) return true;
                return false;
            }
        },
        m.law);
}

inline void collect_atoms(const DurationModel& m, std::vector<double>& out) {
    std::visit(
        [&out](const auto& law) {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, Deterministic>) {
                out.push_back(law.delay);
            } else if constexpr (!std::is_same_v<T, Exponential>) {
                for (const auto& c : law.components) collect_atoms(c, out);
            }
        },
        m.law);
}

// Best free times for a candidate set, found by box-constrained ascent from
// the all-at-zero map and any warm maps, plus grid sweeps where the gradient
// is unreliable (delivery atoms) or cheap enough to pin accuracy (small sets).
struct SetOptimum {
    std::vector<double> tau;  // aligned with the id vector that produced it
    double objective = 0.0;
};

struct SetEval {
    const std::vector<double>* costs = nullptr;
    const Environment* env = nullptr;
    TimeOptConfig cfg;
    bool atoms = false;
    bool thorough = false;
    std::int64_t evals = 0;

    SetOptimum operator()(const std::vector<int>& ids,
                          const std::vector<std::vector<double>>& warm) {
        ++evals;
        const std::size_t m = ids.size();
        SetOptimum out;
        if (m == 0) return out;

        // canonical member order keeps the result a function of the set alone,
        // not of the order the search discovered it in
        std::vector<std::size_t> by_id(m);
        for (std::size_t k = 0; k < m; ++k) by_id[k] = k;
        std::sort(by_id.begin(), by_id.end(),
                  [&ids](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
        std::vector<int> cids(m);
        for (std::size_t k = 0; k < m; ++k) cids[k] = ids[by_id[k]];

        PlanView view = make_plan_view(cids, *costs, *env);
        if (m == 1) {
            out.tau = {0.0};
            out.objective = plan_objective(view, out.tau);
            return out;
        }
        const double D = view.deadline;
        const int iters = std::min(cfg.max_iters, 60);
        const double tol_abs = std::max(cfg.tol, 1e-7) * std::max(view.value, 1e-12);

        std::vector<double> tau(m), best(m, 0.0);
        double best_f = -std::numeric_limits<double>::infinity();
        auto run = [&]() {
            double f = ascend_map(view, tau, iters, tol_abs);
            if (f > best_f) {
                best_f = f;
                best = tau;
            }
        };
        std::fill(tau.begin(), tau.end(), 0.0);
        run();
        const std::vector<double>* wfirst = nullptr;
        for (const auto& w : warm) {
            if (w.size() != m) continue;
            for (std::size_t k = 0; k < m; ++k) tau[k] = w[by_id[k]];
            run();
            if (!wfirst) wfirst = &w;
        }
        if (m <= 4 || thorough) {
            // one member staged late covers each stagger pattern's basin
            for (std::size_t j = 0; j < m; ++j) {
                std::fill(tau.begin(), tau.end(), 0.0);
                tau[j] = 0.5 * D;
                run();
            }
        }
        if (m == 3) {
            // three-stage cascades: each role order (lead, middle, late) is its
            // own basin, and neither single-member staggers nor one-coordinate
            // sweeps can cross between them
            std::size_t ord[3] = {0, 1, 2};
            do {
                tau[ord[0]] = 0.0;
                tau[ord[1]] = 0.5 * D;
                tau[ord[2]] = 0.8 * D;
                run();
            } while (std::next_permutation(ord, ord + 3));
        }
        if (m >= 4) {
            for (std::size_t k = 0; k < m; ++k)
                tau[k] = D * static_cast<double>(k) / static_cast<double>(m);
            run();
            if (wfirst) {
                // the member the caller just added, staged late instead of early
                std::size_t last = 0;
                for (std::size_t k = 0; k < m; ++k)
                    if (by_id[k] + 1 == m) last = k;
                for (std::size_t k = 0; k < m; ++k) tau[k] = (*wfirst)[by_id[k]];
                tau[last] = 0.6 * D;
                run();
            }
        }
        if (atoms || m <= 3) {
            const double step = cfg.grid_step > 0.0 ? cfg.grid_step : D / 40.0;
            for (int cycle = 0; cycle < 2; ++cycle) {
                double before = best_f;
                best_f = sweep_map(view, best, best_f, step, atoms ? 3 : 2);
                if (!(best_f > before + tol_abs)) break;
                best_f = ascend_map(view, best, iters, tol_abs);
            }
        }
        out.tau.resize(m);
        for (std::size_t k = 0; k < m; ++k) out.tau[by_id[k]] = best[k];
        out.objective = best_f;
        return out;
    }
};

// Upper bound: append one composite provider that delivers like the fastest
// mix of the remaining candidates and costs like the cheapest of them.  Any
// true extension is dominated by this relaxation.
inline double group_upper(const std::vector<int>& prefix, double lower,
                          const std::vector<int>& remaining, const std::vector<double>& costs,
                          const Environment& env, const TimeOptConfig& cfg) {
    if (remaining.empty()) return lower;
    std::vector<DurationModel> comps;
    comps.reserve(remaining.size());
    double phi = std::numeric_limits<double>::infinity();
    for (int id : remaining) {
        comps.push_back(env.provider(id).duration);
        phi = std::min(phi, costs[static_cast<std::size_t>(id) - 1]);
    }
    DurationModel composite = DurationModel::min_of(std::move(comps));

    detail::PlanView view = detail::make_plan_view(prefix, costs, env);
    view.dur.push_back(&composite);
    view.cost.push_back(phi);
    TimeOptResult r = detail::optimize_plan(view, cfg);
    return std::max(lower, r.objective);
}

// Peak of a grid-sampled function, sharpened with the parabola through the
// best point and its neighbours.
inline double grid_peak(const std::vector<double>& z) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < z.size(); ++g)
        if (z[g] > z[best]) best = g;
    double peak = z[best];
    if (best > 0 && best + 1 < z.size()) {
        double denom = 2.0 * z[best] - z[best - 1] - z[best + 1];
        if (denom > 0.0) {
            double num = z[best + 1] - z[best - 1];
            peak += num * num / (8.0 * denom);
        }
    }
    return peak;
}

// Per-candidate cap on the objective gain from adding that provider, at any
// start time, to any plan drawn from the candidate set:
//   psi_r = max_tau  V * G_r(D - tau) - phi_r * prod_{j != r}(1 - G_j(tau))
// The first term bounds the extra success probability r can contribute when
// started at tau; the second is what the plan must at least pay for r, since
// r's invocation probability is no smaller than the chance that every other
// candidate, started as early as possible, is still running at tau.  The grid
// maximum is sharpened by one parabolic step and padded; the pad also absorbs
// the descent slack of the node values the caps are added onto.
inline std::vector<double> marginal_caps(const std::vector<int>& candidates,
                                         const std::vector<double>& costs,
                                         const Environment& env) {
    const double V = env.task.value, D = env.task.deadline;
    const std::size_t cells = 200, np = cells + 1;
    const std::size_t nc = candidates.size();
    std::vector<std::vector<double>> surv(nc, std::vector<double>(np));
    std::vector<std::vector<double>> gD(nc, std::vector<double>(np));
    for (std::size_t k = 0; k < nc; ++k) {
        const DurationModel& dur = env.provider(candidates[k]).duration;
        for (std::size_t g = 0; g < np; ++g) {
            double tau = D * static_cast<double>(g) / static_cast<double>(cells);
            gD[k][g] = duration_cdf(dur, D - tau);
            surv[k][g] = 1.0 - duration_cdf(dur, tau);
        }
    }
    // delivery atoms put jumps in the integrand that a uniform grid can skip
    // over; both jump-favorable sides are attained exactly at a and D - a
    std::vector<double> special;
    for (std::size_t k = 0; k < nc; ++k)
        collect_atoms(env.provider(candidates[k]).duration, special);
    {
        std::vector<double> taus;
        for (double a : special) {
            if (a > 0.0 && a < D) taus.push_back(a);
            if (D - a > 0.0 && D - a < D) taus.push_back(D - a);
        }
        special = std::move(taus);
    }
    const double pad = 4e-4 * std::max(V, 1e-12);
    std::vector<double> caps(nc), z(np);
    for (std::size_t k = 0; k < nc; ++k) {
        const double phi = costs[static_cast<std::size_t>(candidates[k]) - 1];
        const DurationModel& dur = env.provider(candidates[k]).duration;
        for (std::size_t g = 0; g < np; ++g) {
            double loo = 1.0;
            for (std::size_t j = 0; j < nc; ++j)
                if (j != k) loo *= surv[j][g];
            z[g] = V * gD[k][g] - phi * loo;
        }
        double peak = grid_peak(z);
        for (double tau : special) {
            double loo = 1.0;
            for (std::size_t j = 0; j < nc; ++j)
                if (j != k) loo *= 1.0 - duration_cdf(env.provider(candidates[j]).duration, tau);
            peak = std::max(peak, V * duration_cdf(dur, D - tau) - phi * loo);
        }
        caps[k] = peak + pad;
    }
    return caps;
}

}  // namespace detail

inline double lower_bound(const std::vector<int>& prefix, const std::vector<double>& effective_costs,
                          const Environment& env, const TimeOptConfig& cfg = {}) {
    detail::check_effective_costs(effective_costs, env);
    detail::check_candidates(prefix, env);
    return optimize_times(prefix, effective_costs, env, cfg).objective;
}

inline double upper_bound(const std::vector<int>& prefix, const std::vector<double>& effective_costs,
                          const Environment& env, const TimeOptConfig& cfg = {},
                          std::vector<int> candidates = {}) {
    detail::check_effective_costs(effective_costs, env);
    detail::check_candidates(prefix, env);
    if (candidates.empty()) candidates = detail::all_ids(env);
    double lower = optimize_times(prefix, effective_costs, env, cfg).objective;
    std::vector<int> remaining;
    for (int id : candidates)
        if (std::find(prefix.begin(), prefix.end(), id) == prefix.end()) remaining.push_back(id);
    return detail::group_upper(prefix, lower, remaining, effective_costs, env, cfg);
}

struct BnbOptions {
    std::vector<int> candidates;   // empty means every provider
    std::vector<int> hint;         // ordering used to seed the incumbent
    bool disable_pruning = false;  // exhaustive expansion, for equivalence checks
};

namespace detail {

// Shared exit path: order the winning set by start time, re-optimise the
// resulting ordering at full precision, and keep whichever times win.
inline AllocationResult finalize_set(const std::vector<int>& ids, const std::vector<double>& tau,
                                     double objective, std::int64_t nodes,
                                     const std::vector<double>& effective_costs,
                                     const Environment& env, const TimeOptConfig& cfg) {
    std::vector<std::size_t> order(ids.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (tau[a] != tau[b]) return tau[a] < tau[b];
        return ids[a] < ids[b];
    });
    std::vector<int> ordering;
    std::vector<double> times;
    ordering.reserve(order.size());
    times.reserve(order.size());
    for (std::size_t k : order) {
        ordering.push_back(ids[k]);
        times.push_back(tau[k]);
    }

    AllocationResult out;
    out.nodes = nodes;
    PlanView view = make_plan_view(ordering, effective_costs, env);
    double f = plan_objective(view, times);
    if (view.size() >= 2) {
        double window = cfg.grid_step > 0.0 ? cfg.grid_step : env.task.deadline / 40.0;
        golden_refine(view, times, f, window);
    }
    out.objective = std::max(f, objective);
    std::vector<StrategyEntry> entries;
    for (std::size_t k = 0; k < ordering.size(); ++k) entries.push_back({ordering[k], times[k]});
    out.strategy = make_strategy(std::move(entries), env);
    return out;
}

// Candidates worth searching over, as indices into the candidate list, sorted
// by descending marginal cap.  A provider whose effective cost covers the
// value of even a certain delivery never enters an optimal plan: dropping it
// from any plan saves phi * P >= phi * prod_{j != r}(1 - G_j(D - tau_j)) in
// cost and loses at most V * G_r(D) times the same product in success.
inline std::vector<std::size_t> search_pool(const std::vector<int>& candidates,
                                            const std::vector<double>& caps,
                                            const std::vector<double>& effective_costs,
                                            const Environment& env) {
    std::vector<std::size_t> pool;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        double gD = duration_cdf(env.provider(candidates[k]).duration, env.task.deadline);
        if (effective_costs[static_cast<std::size_t>(candidates[k]) - 1] < env.task.value * gD)
            pool.push_back(k);
    }
    std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
        if (caps[a] != caps[b]) return caps[a] > caps[b];
        return candidates[a] < candidates[b];
    });
    return pool;
}

}  // namespace detail

// Exact search over candidate sets.  The plan value depends only on each
// member's start time, so subsets with free times cover every recruitment
// ordering; the tree visits each subset once (children extend a set only by
// candidates later in cap order), evaluates it by warm-started box ascent,
// and prunes branches whose summed marginal caps cannot beat the incumbent.
inline AllocationResult bnb_search(const std::vector<double>& effective_costs,
                                   const Environment& env, const TimeOptConfig& cfg = {},
                                   const BnbOptions& opt = {}) {
    detail::check_effective_costs(effective_costs, env);
    detail::check_candidates(opt.candidates, env);
    std::vector<int> candidates = opt.candidates.empty() ? detail::all_ids(env) : opt.candidates;
    if (candidates.size() > 64) throw std::invalid_argument("bnb_search limited to 64 candidates");

    detail::SetEval eval;
    eval.costs = &effective_costs;
    eval.env = &env;
    eval.cfg = cfg;
    eval.thorough = true;
    for (int id : candidates)
        if (detail::law_has_atoms(env.provider(id).duration)) eval.atoms = true;

    std::vector<double> caps = detail::marginal_caps(candidates, effective_costs, env);
    std::vector<std::size_t> pool = detail::search_pool(candidates, caps, effective_costs, env);
    std::vector<double> suffix(pool.size() + 1, 0.0);
    for (std::size_t k = pool.size(); k-- > 0;)
        suffix[k] = suffix[k + 1] + std::max(0.0, caps[pool[k]]);

    double incumbent = 0.0;
    std::vector<int> best_ids;
    std::vector<double> best_tau;
    auto try_improve = [&](const std::vector<int>& ids, const detail::SetOptimum& r) {
        if (r.objective > incumbent) {
            incumbent = r.objective;
            best_ids = ids;
            best_tau = r.tau;
        }
    };

    if (!opt.hint.empty()) {
        std::vector<char> is_cand(static_cast<std::size_t>(env.size()) + 1, 0);
        for (int id : candidates) is_cand[static_cast<std::size_t>(id)] = 1;
        std::vector<int> hint;
        for (int id : opt.hint) {
            if (id < 1 || id > env.size() || !is_cand[static_cast<std::size_t>(id)]) {
                hint.clear();
                break;
            }
            if (std::find(hint.begin(), hint.end(), id) == hint.end()) hint.push_back(id);
        }
        if (!hint.empty()) try_improve(hint, eval(hint, {}));
    }

    std::vector<int> ids;
    auto dfs = [&](auto&& self, const std::vector<double>& tau, double lower,
                   std::size_t from) -> void {
        for (std::size_t k = from; k < pool.size(); ++k) {
            double cap = lower + std::max(0.0, caps[pool[k]]) + suffix[k + 1];
            // caps are sorted, so once one branch cap fails they all do
            if (!opt.disable_pruning && !(cap > incumbent)) break;
            ids.push_back(candidates[pool[k]]);
            std::vector<double> warm = tau;
            warm.push_back(0.0);
            detail::SetOptimum c = eval(ids, {warm});
            try_improve(ids, c);
            if (k + 1 < pool.size() &&
                (opt.disable_pruning || std::min(c.objective + suffix[k + 1], cap) > incumbent))
                self(self, c.tau, c.objective, k + 1);
            ids.pop_back();
        }
    };
    dfs(dfs, {}, 0.0, 0);

    return detail::finalize_set(best_ids, best_tau, incumbent, eval.evals, effective_costs, env,
                                cfg);
}

// Greedy local search over candidate sets: grow by the first improving
// addition in cap order, then apply the first improving drop / replace / add
// move until none improves.  Replace and add moves are skipped beyond 25
// candidates, where the drop-only polish keeps large instances tractable.
inline AllocationResult heuristic_search(const std::vector<double>& effective_costs,
                                         const Environment& env, const TimeOptConfig& cfg = {},
                                         std::vector<int> candidates = {}) {
    detail::check_effective_costs(effective_costs, env);
    detail::check_candidates(candidates, env);
    if (candidates.empty()) candidates = detail::all_ids(env);

    detail::SetEval eval;
    eval.costs = &effective_costs;
    eval.env = &env;
    eval.cfg = cfg;
    for (int id : candidates)
        if (detail::law_has_atoms(env.provider(id).duration)) eval.atoms = true;

    std::vector<double> caps = detail::marginal_caps(candidates, effective_costs, env);
    std::vector<std::size_t> pool = detail::search_pool(candidates, caps, effective_costs, env);

    std::vector<int> current;
    std::vector<double> tau;
    double obj = 0.0;
    const double eps = 1e-12 * std::max(env.task.value, 1.0);
    auto in_current = [&](int id) {
        return std::find(current.begin(), current.end(), id) != current.end();
    };

    for (;;) {
        bool added = false;
        for (std::size_t k : pool) {
            int id = candidates[k];
            if (in_current(id)) continue;
            std::vector<int> next = current;
            next.push_back(id);
            std::vector<double> warm = tau;
            warm.push_back(0.0);
            detail::SetOptimum c = eval(next, {warm});
            if (c.objective > obj + eps) {
                current = std::move(next);
                tau = std::move(c.tau);
                obj = c.objective;
                added = true;
                break;
            }
        }
        if (!added) break;
    }

    const bool full_polish = pool.size() <= 25;
    for (;;) {
        bool moved = false;
        auto attempt = [&](std::vector<int> next, const std::vector<double>& warm) {
            detail::SetOptimum c = eval(next, {warm});
            if (c.objective > obj + eps) {
                current = std::move(next);
                tau = std::move(c.tau);
                obj = c.objective;
                moved = true;
            }
            return moved;
        };
        for (std::size_t p = 0; p < current.size() && !moved; ++p) {
            std::vector<int> next = current;
            next.erase(next.begin() + static_cast<std::ptrdiff_t>(p));
            std::vector<double> warm = tau;
            warm.erase(warm.begin() + static_cast<std::ptrdiff_t>(p));
            if (attempt(std::move(next), warm)) break;
            if (full_polish) {
                for (std::size_t k : pool) {
                    int id = candidates[k];
                    if (in_current(id)) continue;
                    std::vector<int> repl = current;
                    repl[p] = id;  // reuse the replaced member's start time
                    if (attempt(std::move(repl), tau)) break;
                }
            }
        }
        if (!moved && full_polish) {
            for (std::size_t k : pool) {
                int id = candidates[k];
                if (in_current(id)) continue;
                std::vector<int> next = current;
                next.push_back(id);
                std::vector<double> warm = tau;
                warm.push_back(0.0);
                if (attempt(std::move(next), warm)) break;
            }
        }
        if (!moved) break;
    }

    return detail::finalize_set(current, tau, obj, eval.evals, effective_costs, env, cfg);
}

// Exhaustive oracle over orderings x grid times; only for tiny instances.
inline AllocationResult brute_force_search(const std::vector<double>& effective_costs,
                                           const Environment& env, double grid_step = 0.0) {
    detail::check_effective_costs(effective_costs, env);
    if (env.size() > 4)
        throw std::invalid_argument("brute force search limited to 4 providers");
    const double D = env.task.deadline;
    const double step = grid_step > 0.0 ? grid_step : D / 40.0;
    const int K = static_cast<int>(std::lround(D / step));

    AllocationResult best;
    best.objective = 0.0;

    std::vector<int> ids = detail::all_ids(env);
    std::vector<int> ordering;
    std::vector<double> times;
    std::vector<char> used(static_cast<std::size_t>(env.size()) + 1, 0);

    detail::PlanView view;
    view.value = env.task.value;
    view.deadline = D;

    auto eval_times = [&](auto&& self, std::size_t pos, int min_idx) -> void {
        if (pos == ordering.size()) {
            ++best.nodes;
            double obj = detail::plan_objective(view, times);
            if (obj > best.objective) {
                best.objective = obj;
                std::vector<StrategyEntry> entries;
                for (std::size_t k = 0; k < ordering.size(); ++k)
                    entries.push_back({ordering[k], times[k]});
                best.strategy = make_strategy(std::move(entries), env);
            }
            return;
        }
        for (int idx = min_idx; idx <= K; ++idx) {
            times[pos] = std::min(idx * step, D);
            self(self, pos + 1, idx);
        }
    };

    auto expand = [&](auto&& self) -> void {
        if (!ordering.empty()) {
            times.assign(ordering.size(), 0.0);
            view.dur.clear();
            view.cost.clear();
            for (int id : ordering) {
                view.dur.push_back(&env.provider(id).duration);
                view.cost.push_back(effective_costs[static_cast<std::size_t>(id) - 1]);
            }
            eval_times(eval_times, 0, 0);
        }
        for (int id : ids) {
            if (used[static_cast<std::size_t>(id)]) continue;
            used[static_cast<std::size_t>(id)] = 1;
            ordering.push_back(id);
            self(self);
            ordering.pop_back();
            used[static_cast<std::size_t>(id)] = 0;
        }
    };
    expand(expand);
    return best;
}

// Exact best subset recruited simultaneously at time zero.
inline AllocationResult simultaneous_search(const std::vector<double>& effective_costs,
                                            const Environment& env,
                                            std::vector<int> candidates = {}) {
    detail::check_effective_costs(effective_costs, env);
    detail::check_candidates(candidates, env);
    if (candidates.empty()) candidates = detail::all_ids(env);
    if (candidates.size() > 25)
        throw std::invalid_argument("simultaneous search limited to 25 candidates");
    const double V = env.task.value, D = env.task.deadline;

    std::vector<double> g(candidates.size());
    std::vector<double> phi(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        g[k] = duration_cdf(env.provider(candidates[k]).duration, D);
        phi[k] = effective_costs[static_cast<std::size_t>(candidates[k]) - 1];
    }

    AllocationResult best;
    best.objective = 0.0;
    std::vector<char> chosen(candidates.size(), 0);

    auto dfs = [&](auto&& self, std::size_t k, double fail, double cost) -> void {
        if (k == candidates.size()) {
            ++best.nodes;
            double obj = V * (1.0 - fail) - cost;
            if (obj > best.objective) {
                best.objective = obj;
                std::vector<StrategyEntry> entries;
                for (std::size_t j = 0; j < candidates.size(); ++j)
                    if (chosen[j]) entries.push_back({candidates[j], 0.0});
                best.strategy = make_strategy(std::move(entries), env);
            }
            return;
        }
        // even free remaining providers cannot push value above V * (1 - fail * prod survivals)
        double rest = fail;
        for (std::size_t j = k; j < candidates.size(); ++j) rest *= 1.0 - g[j];
        if (!(V * (1.0 - rest) - cost > best.objective)) return;
        chosen[k] = 1;
        self(self, k + 1, fail * (1.0 - g[k]), cost + phi[k]);
        chosen[k] = 0;
        self(self, k + 1, fail, cost);
    };
    dfs(dfs, 0, 1.0, 0.0);
    return best;
}

// Best single recruit at time zero, or nobody.
inline AllocationResult single_search(const std::vector<double>& effective_costs,
                                      const Environment& env, std::vector<int> candidates = {}) {
    detail::check_effective_costs(effective_costs, env);
    detail::check_candidates(candidates, env);
    if (candidates.empty()) candidates = detail::all_ids(env);
    AllocationResult best;
    best.objective = 0.0;
    for (int id : candidates) {
        ++best.nodes;
        double obj = env.task.value * duration_cdf(env.provider(id).duration, env.task.deadline) -
                     effective_costs[static_cast<std::size_t>(id) - 1];
        if (obj > best.objective) {
            best.objective = obj;
            best.strategy = make_strategy({{id, 0.0}}, env);
        }
    }
    return best;
}

}  // namespace wgpa
