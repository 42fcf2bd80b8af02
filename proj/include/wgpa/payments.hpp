#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wgpa/model.hpp"
#include "wgpa/strategy_eval.hpp"

namespace wgpa {

using Allocator = std::function<RecruitmentStrategy(const BidVector&, const Environment&)>;

// Per-provider payment T(bids, env, provider, strategy); substitutes for the
// weighted threshold rule where a mechanism defines its own transfers.
using PaymentRule =
    std::function<double(const BidVector&, const Environment&, int, const RecruitmentStrategy&)>;

struct PaymentConfig {
    double grid_step = 0.0;          // <= 0 means support upper bound / 200
    bool refine_breakpoints = false; // localise jumps before integrating
    double jump_tol = 0.05;          // neighbour gap that counts as a jump
    int max_bisect = 12;
};

struct BidResponsePoint {
    double bid = 0.0;
    double invocation = 0.0;  // P_i(A(bid, b_-i))
};

// Invocation probability of provider i as its own bid sweeps a grid,
// everything else held fixed.
inline std::vector<BidResponsePoint> bid_response_curve(const Allocator& alloc,
                                                        const Environment& env,
                                                        const BidVector& bids, int provider_id,
                                                        double grid_step = 0.0) {
    check_bids(bids, env);
    const CostModel& model = env.provider(provider_id).cost_model;
    const double lo = cost_support_lo(model), hi = cost_support_hi(model);
    const double step = grid_step > 0.0 ? grid_step : hi / 200.0;
    const int cells = std::max(1, static_cast<int>(std::ceil((hi - lo) / step)));
    std::vector<BidResponsePoint> out;
    out.reserve(static_cast<std::size_t>(cells));
    BidVector probe = bids;
    for (int k = 0; k < cells; ++k) {
        double b = lo + (hi - lo) * (k + 0.5) / cells;
        probe[static_cast<std::size_t>(provider_id) - 1] = b;
        out.push_back({b, invocation_probability(alloc(probe, env), provider_id, env)});
    }
    return out;
}

// Piecewise-constant view of a bid-response curve over [lo, hi]; segment
// values come from cell midpoints, segment edges from jump localisation.
struct PiecewiseCurve {
    std::vector<double> edges;   // cells + 1 ascending boundaries
    std::vector<double> values;  // one per cell

    double value_at(double b) const {
        if (edges.empty()) return 0.0;
        if (b <= edges.front()) return values.front();
        if (b >= edges.back()) return values.back();
        auto it = std::upper_bound(edges.begin(), edges.end(), b);
        std::size_t idx = static_cast<std::size_t>(it - edges.begin());
        return values[std::min(idx - 1, values.size() - 1)];
    }

    double integral_from(double b) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            double lo = std::max(edges[k], b);
            if (lo < edges[k + 1]) acc += (edges[k + 1] - lo) * values[k];
        }
        return acc;
    }
};

inline PiecewiseCurve invocation_curve(const Allocator& alloc, const Environment& env,
                                       const BidVector& bids, int provider_id, double lo,
                                       double hi, const PaymentConfig& cfg) {
    const double width = hi - lo;
    PiecewiseCurve curve;
    if (!(width > 0.0)) {
        curve.edges = {lo, hi};
        curve.values = {0.0};
        return curve;
    }
    const double hi_support = cost_support_hi(env.provider(provider_id).cost_model);
    const double step = cfg.grid_step > 0.0 ? cfg.grid_step : hi_support / 200.0;
    const int cells = std::max(1, static_cast<int>(std::ceil(width / step - 1e-9)));
    const double h = width / cells;

    BidVector probe = bids;
    auto invocation_at = [&](double b) {
        probe[static_cast<std::size_t>(provider_id) - 1] = b;
        return invocation_probability(alloc(probe, env), provider_id, env);
    };

    curve.edges.resize(static_cast<std::size_t>(cells) + 1);
    curve.values.resize(static_cast<std::size_t>(cells));
    std::vector<double> mids(static_cast<std::size_t>(cells));
    for (int k = 0; k <= cells; ++k) curve.edges[static_cast<std::size_t>(k)] = lo + h * k;
    curve.edges.back() = hi;
    int zeros_seen = 0;
    for (int k = 0; k < cells; ++k) {
        mids[static_cast<std::size_t>(k)] = lo + h * (k + 0.5);
        if (zeros_seen >= 2) {
            // response curves are nonincreasing in the own bid, so once the
            // provider is dropped it stays dropped
            curve.values[static_cast<std::size_t>(k)] = 0.0;
            continue;
        }
        double p = invocation_at(mids[static_cast<std::size_t>(k)]);
        curve.values[static_cast<std::size_t>(k)] = p;
        zeros_seen = p > 0.0 ? 0 : zeros_seen + 1;
    }

    if (cfg.refine_breakpoints) {
        for (int k = 0; k + 1 < cells; ++k) {
            double vl = curve.values[static_cast<std::size_t>(k)];
            double vr = curve.values[static_cast<std::size_t>(k) + 1];
            if (std::abs(vr - vl) <= cfg.jump_tol) continue;
            double L = mids[static_cast<std::size_t>(k)], R = mids[static_cast<std::size_t>(k) + 1];
            for (int iter = 0; iter < cfg.max_bisect; ++iter) {
                double mid = 0.5 * (L + R);
                double vm = invocation_at(mid);
                if (std::abs(vm - vl) <= std::abs(vm - vr))
                    L = mid;  // still on the left side of the jump
                else
                    R = mid;
            }
            curve.edges[static_cast<std::size_t>(k) + 1] = 0.5 * (L + R);
        }
    }
    return curve;
}

// Threshold payment: bid plus the rent integral of the bid-response curve,
// weighted by the realised invocation probability.
inline double weighted_threshold_payment(const Allocator& alloc, const Environment& env,
                                         const BidVector& bids, int provider_id,
                                         const PaymentConfig& cfg = {}) {
    check_bids(bids, env);
    RecruitmentStrategy strategy = alloc(bids, env);
    double p0 = invocation_probability(strategy, provider_id, env);
    if (!(p0 > 0.0))
        throw std::domain_error("payment undefined for a provider that is never invoked");
    double b = bids[static_cast<std::size_t>(provider_id) - 1];
    double hi = cost_support_hi(env.provider(provider_id).cost_model);
    PiecewiseCurve curve = invocation_curve(alloc, env, bids, provider_id, b, hi, cfg);
    return b + curve.integral_from(b) / p0;
}

struct PaymentSchedule {
    std::vector<double> amounts;  // by provider id - 1; 0 for providers not recruited
};

inline PaymentSchedule weighted_threshold_schedule(const Allocator& alloc, const Environment& env,
                                                   const BidVector& bids,
                                                   const RecruitmentStrategy& strategy,
                                                   const PaymentConfig& cfg = {}) {
    PaymentSchedule out;
    out.amounts.assign(bids.size(), 0.0);
    for (const auto& e : strategy.entries) {
        double p0 = invocation_probability(strategy, e.provider, env);
        if (!(p0 > 0.0))
            throw std::domain_error("payment undefined for a provider that is never invoked");
        double b = bids[static_cast<std::size_t>(e.provider) - 1];
        double hi = cost_support_hi(env.provider(e.provider).cost_model);
        PiecewiseCurve curve = invocation_curve(alloc, env, bids, e.provider, b, hi, cfg);
        out.amounts[static_cast<std::size_t>(e.provider) - 1] = b + curve.integral_from(b) / p0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Opponent integration: weighted opponent cost vectors for interim quantities.

struct OpponentIntegration {
    enum class Mode { mc, quadrature };
    Mode mode = Mode::mc;
    int n_samples = 2000;     // mc draws
    int points_per_dim = 64;  // quadrature resolution
    std::uint64_t seed = 0xfeedfacecafef00dull;
};

// Each node is (weight, full cost vector); slot provider_id - 1 is a
// placeholder the caller overwrites with the bid under study.
inline std::vector<std::pair<double, BidVector>> opponent_nodes(const Environment& env,
                                                                int provider_id,
                                                                const OpponentIntegration& integ) {
    std::vector<std::pair<double, BidVector>> nodes;
    std::vector<int> opponents;
    for (int id = 1; id <= env.size(); ++id)
        if (id != provider_id) opponents.push_back(id);

    if (integ.mode == OpponentIntegration::Mode::mc) {
        Rng rng(integ.seed);
        BidVector draw(static_cast<std::size_t>(env.size()), 0.0);
        double w = 1.0 / integ.n_samples;
        for (int s = 0; s < integ.n_samples; ++s) {
            for (int id : opponents)
                draw[static_cast<std::size_t>(id) - 1] = sample_cost(env.provider(id).cost_model, rng);
            nodes.emplace_back(w, draw);
        }
        return nodes;
    }

    if (opponents.size() > 2)
        throw std::invalid_argument("quadrature opponent integration supports at most 2 opponents");
    // midpoint rule per opponent, weights normalised to a probability measure
    std::vector<std::vector<std::pair<double, double>>> grids;  // (weight, cost)
    for (int id : opponents) {
        const CostModel& m = env.provider(id).cost_model;
        double lo = cost_support_lo(m), hi = cost_support_hi(m);
        int p = integ.points_per_dim;
        std::vector<std::pair<double, double>> grid(static_cast<std::size_t>(p));
        double total = 0.0;
        for (int k = 0; k < p; ++k) {
            double c = lo + (hi - lo) * (k + 0.5) / p;
            double w = cost_density(m, c);
            grid[static_cast<std::size_t>(k)] = {w, c};
            total += w;
        }
        for (auto& g : grid) g.first /= total;
        grids.push_back(std::move(grid));
    }
    BidVector draw(static_cast<std::size_t>(env.size()), 0.0);
    auto emit = [&](auto&& self, std::size_t dim, double w) -> void {
        if (dim == grids.size()) {
            nodes.emplace_back(w, draw);
            return;
        }
        for (const auto& g : grids[dim]) {
            draw[static_cast<std::size_t>(opponents[dim]) - 1] = g.second;
            self(self, dim + 1, w * g.first);
        }
    };
    emit(emit, 0, 1.0);
    return nodes;
}

// Expected invocation probability of provider_id bidding `bid` against the
// cost prior of everyone else.
inline double conditional_invocation_prob(const Allocator& alloc, const Environment& env,
                                          int provider_id, double bid,
                                          const OpponentIntegration& integ = {}) {
    auto nodes = opponent_nodes(env, provider_id, integ);
    double acc = 0.0;
    for (auto& [w, costs] : nodes) {
        costs[static_cast<std::size_t>(provider_id) - 1] = bid;
        acc += w * invocation_probability(alloc(costs, env), provider_id, env);
    }
    return acc;
}

// Expected utility of bidding `bid` with true cost `true_cost`, against the
// opponent prior.  With the default (threshold) rule the rent integral is
// accumulated directly, so nodes where the provider is dropped contribute 0.
inline double interim_expected_utility(const Allocator& alloc, const PaymentRule& rule,
                                       const Environment& env, int provider_id, double true_cost,
                                       double bid, const OpponentIntegration& integ = {},
                                       const PaymentConfig& cfg = {}) {
    auto nodes = opponent_nodes(env, provider_id, integ);
    double hi = cost_support_hi(env.provider(provider_id).cost_model);
    double acc = 0.0;
    for (auto& [w, costs] : nodes) {
        costs[static_cast<std::size_t>(provider_id) - 1] = bid;
        RecruitmentStrategy strategy = alloc(costs, env);
        double p = invocation_probability(strategy, provider_id, env);
        if (!(p > 0.0)) continue;
        if (rule) {
            double t = rule(costs, env, provider_id, strategy);
            acc += w * p * (t - true_cost);
        } else {
            PiecewiseCurve curve = invocation_curve(alloc, env, costs, provider_id, bid, hi, cfg);
            acc += w * (p * (bid - true_cost) + curve.integral_from(bid));
        }
    }
    return acc;
}

}  // namespace wgpa
