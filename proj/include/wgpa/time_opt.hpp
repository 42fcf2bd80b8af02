#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "wgpa/model.hpp"
#include "wgpa/strategy_eval.hpp"

namespace wgpa {

struct TimeOptConfig {
    int n_starts = 8;         // all-zeros, equally spaced, rest seeded random
    int max_iters = 500;
    double tol = 1e-9;        // stop when an iteration improves by < tol * value
    double grid_step = 0.0;   // polish grid; <= 0 means deadline / 40
    std::uint64_t seed = 0x51a3c0de2bad5eedull;
};

struct TimeOptResult {
    std::vector<double> times;
    double objective = 0.0;
    int starts_used = 0;
    bool converged = true;  // false when the two best starts land far apart
};

namespace detail {

// Flattened per-position plan data so callers can splice in providers that are
// not part of the environment (composite bound providers).
struct PlanView {
    std::vector<const DurationModel*> dur;
    std::vector<double> cost;
    double value = 0.0;
    double deadline = 0.0;
    std::size_t size() const { return dur.size(); }
};

inline PlanView make_plan_view(const std::vector<int>& ordering,
                               const std::vector<double>& effective_costs,
                               const Environment& env) {
    PlanView v;
    v.value = env.task.value;
    v.deadline = env.task.deadline;
    v.dur.reserve(ordering.size());
    v.cost.reserve(ordering.size());
    for (int id : ordering) {
        v.dur.push_back(&env.provider(id).duration);
        v.cost.push_back(effective_costs.at(static_cast<std::size_t>(id) - 1));
    }
    return v;
}

// times must be nondecreasing within [0, deadline].
inline double plan_objective(const PlanView& v, const std::vector<double>& times) {
    double fail = 1.0, cost = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        double invoked = 1.0;
        for (std::size_t j = 0; j < k; ++j)
            invoked *= 1.0 - duration_cdf(*v.dur[j], times[k] - times[j]);
        cost += v.cost[k] * invoked;
        fail *= 1.0 - duration_cdf(*v.dur[k], v.deadline - times[k]);
    }
    return v.value * (1.0 - fail) - cost;
}

// Gap coordinates: g[k] >= 0, sum <= deadline; times are prefix sums.
inline void gaps_to_times(const std::vector<double>& g, double deadline,
                          std::vector<double>& times) {
    times.resize(g.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        acc += g[k];
        times[k] = std::min(acc, deadline);
    }
}

inline void project_gaps(std::vector<double>& g, double deadline) {
    double sum = 0.0;
    for (double& x : g) {
        if (x < 0.0) x = 0.0;
        sum += x;
    }
    if (sum > deadline && sum > 0.0) {
        double scale = deadline / sum;
        for (double& x : g) x *= scale;
    }
}

// Projected gradient ascent from gap vector g, in place; returns the improved
// objective value.
inline double ascend_gaps(const PlanView& view, std::vector<double>& g, int max_iters,
                          double tol_abs) {
    const std::size_t m = g.size();
    const double D = view.deadline;
    std::vector<double> times_buf;
    auto objective_of = [&](const std::vector<double>& gv) {
        gaps_to_times(gv, D, times_buf);
        return plan_objective(view, times_buf);
    };
    const double h = 1e-5 * D;
    std::vector<double> grad(m), probe(m), y(m);
    double f = objective_of(g);

    for (int iter = 0; iter < max_iters; ++iter) {
        double gnorm2 = 0.0, ginf = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            probe = g;
            probe[k] += h;
            project_gaps(probe, D);
            double fp = objective_of(probe);
            probe = g;
            probe[k] -= h;
            project_gaps(probe, D);
            double fm = objective_of(probe);
            grad[k] = (fp - fm) / (2.0 * h);
            gnorm2 += grad[k] * grad[k];
            ginf = std::max(ginf, std::abs(grad[k]));
        }
        if (ginf < 1e-14) break;

        double t = 0.25 * D / ginf;
        bool accepted = false;
        double fy = f;
        for (int half = 0; half < 48; ++half) {
            for (std::size_t k = 0; k < m; ++k) y[k] = g[k] + t * grad[k];
            project_gaps(y, D);
            fy = objective_of(y);
            if (fy >= f + 1e-4 * t * gnorm2) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        double gain = fy - f;
        g = y;
        f = fy;
        if (gain < tol_abs) break;
    }
    return f;
}

inline TimeOptResult optimize_plan(const PlanView& view, const TimeOptConfig& cfg) {
    const std::size_t m = view.size();
    const double D = view.deadline, V = view.value;
    TimeOptResult out;
    if (m == 0) {
        out.objective = 0.0;
        out.converged = true;
        return out;
    }
    if (m == 1) {
        // Invocation probability is 1 regardless, so starting immediately is
        // optimal for any nondecreasing delivery law.
        out.times = {0.0};
        out.objective = plan_objective(view, out.times);
        out.starts_used = 1;
        out.converged = true;
        return out;
    }

    const int n_starts = std::max(1, cfg.n_starts);
    Rng rng(cfg.seed);
    const double tol_abs = cfg.tol * std::max(V, 1e-12);

    std::vector<double> best_g;
    double best_f = -std::numeric_limits<double>::infinity();
    double second_f = -std::numeric_limits<double>::infinity();

    std::vector<double> g(m);
    for (int s = 0; s < n_starts; ++s) {
        if (s == 0) {
            std::fill(g.begin(), g.end(), 0.0);
        } else if (s == 1) {
            // equally spaced: times k * D / m
            g[0] = 0.0;
            for (std::size_t k = 1; k < m; ++k) g[k] = D / static_cast<double>(m);
        } else {
            double sum = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                g[k] = uniform01(rng);
                sum += g[k];
            }
            double budget = uniform01(rng) * D;
            double scale = sum > 0.0 ? budget / sum : 0.0;
            for (double& x : g) x *= scale;
        }
        project_gaps(g, D);
        double f = ascend_gaps(view, g, cfg.max_iters, tol_abs);

        if (f > best_f) {
            second_f = best_f;
            best_f = f;
            best_g = g;
        } else if (f > second_f) {
            second_f = f;
        }
    }

    out.starts_used = n_starts;
    out.converged = n_starts < 2 || !(best_f - second_f > 1e-4 * std::max(V, 1e-12));

    // Coordinate sweeps over an explicit grid; picks up optima the gradient
    // cannot see when delivery laws have atoms.
    std::vector<double> tau;
    gaps_to_times(best_g, D, tau);
    double f = best_f;
    const double step = cfg.grid_step > 0.0 ? cfg.grid_step : D / 40.0;
    const double eps = 1e-12 * std::max(V, 1.0);
    for (int sweep = 0; sweep < 12; ++sweep) {
        bool improved = false;
        for (std::size_t i = 0; i < m; ++i) {
            double lb = i == 0 ? 0.0 : tau[i - 1];
            double ub = i + 1 < m ? tau[i + 1] : D;
            double keep = tau[i];
            double best_t = keep, best_val = f;
            auto consider = [&](double cand) {
                if (!(cand >= lb && cand <= ub)) return;
                tau[i] = cand;
                double val = plan_objective(view, tau);
                if (val > best_val + eps) {
                    best_val = val;
                    best_t = cand;
                }
            };
            consider(lb);
            consider(ub);
            for (double c = std::ceil(lb / step) * step; c <= ub + 1e-12; c += step)
                consider(std::min(c, ub));
            tau[i] = best_t;
            if (best_val > f + eps) {
                f = best_val;
                improved = true;
            }
        }
        if (!improved) break;
    }

    out.times = tau;
    out.objective = f;
    return out;
}

// ---- unordered time maps ---------------------------------------------------
// The plan value depends only on which time each provider starts, never on the
// recruitment order itself: a provider is blocked only by strictly earlier
// starters (1 - G(0) = 1, so simultaneous starts never block each other), and
// time-sortedness pins who is earlier.  Optimising a free time per member of a
// candidate set over [0, deadline]^m therefore covers every ordered plan on
// that set.  The helpers below work on such unordered maps, whose entries are
// aligned with the view's positions, and sort on the fly when evaluating.

inline double map_objective(const PlanView& v, const std::vector<double>& tau,
                            std::vector<std::size_t>& perm) {
    const std::size_t m = v.size();
    perm.resize(m);
    for (std::size_t k = 0; k < m; ++k) perm[k] = k;
    std::sort(perm.begin(), perm.end(),
              [&tau](std::size_t a, std::size_t b) { return tau[a] < tau[b]; });
    double fail = 1.0, cost = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = perm[k];
        double invoked = 1.0;
        for (std::size_t l = 0; l < k; ++l) {
            const std::size_t j = perm[l];
            invoked *= 1.0 - duration_cdf(*v.dur[j], tau[i] - tau[j]);
        }
        cost += v.cost[i] * invoked;
        fail *= 1.0 - duration_cdf(*v.dur[i], v.deadline - tau[i]);
    }
    return v.value * (1.0 - fail) - cost;
}

// Clamped-gradient ascent over the box [0, deadline]^m, in place; returns the
// improved objective.
inline double ascend_map(const PlanView& view, std::vector<double>& tau, int max_iters,
                         double tol_abs) {
    const std::size_t m = tau.size();
    const double D = view.deadline;
    std::vector<std::size_t> perm;
    const double h = 1e-5 * D;
    std::vector<double> grad(m), probe(m), y(m);
    for (double& t : tau) t = std::min(std::max(t, 0.0), D);
    double f = map_objective(view, tau, perm);

    for (int iter = 0; iter < max_iters; ++iter) {
        double gnorm2 = 0.0, ginf = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            probe = tau;
            probe[k] = std::min(tau[k] + h, D);
            double fp = map_objective(view, probe, perm);
            probe[k] = std::max(tau[k] - h, 0.0);
            double fm = map_objective(view, probe, perm);
            grad[k] = (fp - fm) / (2.0 * h);
            gnorm2 += grad[k] * grad[k];
            ginf = std::max(ginf, std::abs(grad[k]));
        }
        if (ginf < 1e-14) break;

        double t = 0.25 * D / ginf;
        bool accepted = false;
        double fy = f;
        for (int half = 0; half < 48; ++half) {
            for (std::size_t k = 0; k < m; ++k)
                y[k] = std::min(std::max(tau[k] + t * grad[k], 0.0), D);
            fy = map_objective(view, y, perm);
            if (fy >= f + 1e-4 * t * gnorm2) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        double gain = fy - f;
        tau = y;
        f = fy;
        if (gain < tol_abs) break;
    }
    return f;
}

// Coordinate sweeps of an unordered map over the full [0, deadline] grid, with
// a parabolic sharpening step around each winning cell; picks up optima the
// gradient cannot see (delivery atoms) and pins grid-scale accuracy for small
// plans.  Returns the improved objective, updating tau in place.
inline double sweep_map(const PlanView& view, std::vector<double>& tau, double f,
                        double step, int rounds) {
    const std::size_t m = tau.size();
    const double D = view.deadline;
    std::vector<std::size_t> perm;
    const double eps = 1e-12 * std::max(view.value, 1.0);
    for (int round = 0; round < rounds; ++round) {
        bool improved = false;
        for (std::size_t i = 0; i < m; ++i) {
            double best_t = tau[i], best_val = f;
            auto consider = [&](double c) {
                if (!(c >= 0.0 && c <= D)) return;
                tau[i] = c;
                double val = map_objective(view, tau, perm);
                if (val > best_val + eps) {
                    best_val = val;
                    best_t = c;
                }
            };
            for (double c = 0.0; c < D; c += step) consider(c);
            consider(D);
            // parabola through the winning cell and its neighbours
            tau[i] = std::max(best_t - step, 0.0);
            double fl = map_objective(view, tau, perm);
            tau[i] = std::min(best_t + step, D);
            double fr = map_objective(view, tau, perm);
            double denom = 2.0 * best_val - fl - fr;
            if (denom > 0.0) consider(best_t + 0.5 * step * (fr - fl) / denom);
            tau[i] = best_t;
            if (best_val > f + eps) {
                f = best_val;
                improved = true;
            }
        }
        if (!improved) break;
    }
    return f;
}

// High-precision coordinate refinement around given times: golden-section
// line searches within one polish cell per coordinate.  Pins times to ~1e-8
// of the deadline so downstream probabilities are reproducible to tighter
// tolerances than the ascent stage guarantees.
inline void golden_refine(const PlanView& view, std::vector<double>& tau, double& f,
                          double window) {
    const std::size_t m = view.size();
    if (m < 2) return;
    const double gr = 0.6180339887498949;
    for (int sweep = 0; sweep < 4; ++sweep) {
        double before = f;
        for (std::size_t i = 0; i < m; ++i) {
            double lb = i == 0 ? 0.0 : tau[i - 1];
            double ub = i + 1 < m ? tau[i + 1] : view.deadline;
            const double orig = tau[i];
            double a = std::max(lb, orig - window);
            double b = std::min(ub, orig + window);
            if (!(b - a > 1e-12)) continue;
            double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
            auto eval = [&](double t) {
                tau[i] = t;
                return plan_objective(view, tau);
            };
            double f1 = eval(x1), f2 = eval(x2);
            for (int it = 0; it < 26; ++it) {
                if (f1 >= f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - gr * (b - a);
                    f1 = eval(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + gr * (b - a);
                    f2 = eval(x2);
                }
            }
            double cand = f1 >= f2 ? x1 : x2;
            double fc = f1 >= f2 ? f1 : f2;
            if (fc > f) {
                tau[i] = cand;
                f = fc;
            } else {
                tau[i] = orig;
            }
        }
        if (!(f > before + 1e-13 * std::max(view.value, 1.0))) break;
    }
}

}  // namespace detail

// Best invocation times for a fixed recruitment ordering (ids, earliest
// first); effective_costs indexed by provider id - 1.
inline TimeOptResult optimize_times(const std::vector<int>& ordering,
                                    const std::vector<double>& effective_costs,
                                    const Environment& env, const TimeOptConfig& cfg = {}) {
    detail::PlanView view = detail::make_plan_view(ordering, effective_costs, env);
    return detail::optimize_plan(view, cfg);
}

// optimize_times plus the high-precision final refinement; used for the
// strategy a search actually returns.
inline TimeOptResult refine_times(const std::vector<int>& ordering,
                                  const std::vector<double>& effective_costs,
                                  const Environment& env, const TimeOptConfig& cfg = {}) {
    detail::PlanView view = detail::make_plan_view(ordering, effective_costs, env);
    TimeOptResult r = detail::optimize_plan(view, cfg);
    if (view.size() >= 2) {
        double window = (cfg.grid_step > 0.0 ? cfg.grid_step : env.task.deadline / 40.0);
        detail::golden_refine(view, r.times, r.objective, window);
    }
    return r;
}

}  // namespace wgpa
