#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "wgpa/alloc_search.hpp"
#include "wgpa/model.hpp"
#include "wgpa/payments.hpp"
#include "wgpa/strategy_eval.hpp"

namespace wgpa {

// An auction mechanism: a deterministic allocation rule plus transfers.
// Without a custom rule, transfers are weighted threshold payments of the
// allocation rule itself.
struct Mechanism {
    std::string name;
    Allocator allocate;
    PaymentConfig payment_cfg;
    PaymentRule custom_pay;
};

struct MechanismOutcome {
    RecruitmentStrategy strategy;
    PaymentSchedule payments;
    double success = 0.0;
    double cost = 0.0;     // expected payout
    double revenue = 0.0;  // value * success - cost
    double welfare = 0.0;  // value * success - invoked true costs
};

inline PaymentSchedule mechanism_payments(const Mechanism& mech, const BidVector& bids,
                                          const Environment& env,
                                          const RecruitmentStrategy& strategy) {
    if (!mech.custom_pay)
        return weighted_threshold_schedule(mech.allocate, env, bids, strategy, mech.payment_cfg);
    PaymentSchedule out;
    out.amounts.assign(bids.size(), 0.0);
    for (const auto& e : strategy.entries)
        out.amounts[static_cast<std::size_t>(e.provider) - 1] =
            mech.custom_pay(bids, env, e.provider, strategy);
    return out;
}

inline MechanismOutcome run_mechanism(const Mechanism& mech, const BidVector& bids,
                                      const Environment& env) {
    MechanismOutcome out;
    out.strategy = mech.allocate(bids, env);
    out.payments = mechanism_payments(mech, bids, env, out.strategy);
    StrategyEvaluation ev = evaluate_strategy(out.strategy, out.payments.amounts, env);
    out.success = ev.success;
    out.cost = ev.cost;
    out.revenue = ev.revenue;
    out.welfare = ev.welfare;
    return out;
}

namespace detail {

inline std::vector<double> bids_to_virtual(const BidVector& bids, const Environment& env) {
    check_bids(bids, env);
    std::vector<double> phi(bids.size());
    for (int id = 1; id <= env.size(); ++id)
        phi[static_cast<std::size_t>(id) - 1] =
            virtual_cost(env.provider(id).cost_model, bids[static_cast<std::size_t>(id) - 1]);
    return phi;
}

// Random pairing for the pairwise benchmark; deterministic in the seed.
inline std::vector<std::pair<int, int>> make_pairs(int n, std::uint64_t seed) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
    Rng rng(seed);
    for (std::size_t k = ids.size(); k > 1; --k) {
        std::size_t j = static_cast<std::size_t>(rng() % k);
        std::swap(ids[k - 1], ids[j]);
    }
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t k = 0; k + 1 < ids.size(); k += 2) pairs.emplace_back(ids[k], ids[k + 1]);
    return pairs;  // odd leftover provider is dropped
}

}  // namespace detail

// Revenue-optimal gradual mechanism: exact ordering search on virtual costs,
// weighted threshold payments.  The allocator remembers the previous winning
// ordering and reuses it to seed the incumbent of the next search, which
// speeds up the bid sweeps payments perform without changing optima.
inline Mechanism make_wgpa(const TimeOptConfig& tcfg = {}, const PaymentConfig& pcfg = {}) {
    Mechanism m;
    m.name = "wgpa";
    m.payment_cfg = pcfg;
    auto hint = std::make_shared<std::vector<int>>();
    m.allocate = [tcfg, hint](const BidVector& bids, const Environment& env) {
        std::vector<double> phi = detail::bids_to_virtual(bids, env);
        BnbOptions opt;
        opt.hint = *hint;
        AllocationResult r = bnb_search(phi, env, tcfg, opt);
        hint->clear();
        for (const auto& e : r.strategy.entries) hint->push_back(e.provider);
        return r.strategy;
    };
    return m;
}

// Same objective, greedy local search instead of the exact search.
inline Mechanism make_wgpa_heuristic(const TimeOptConfig& tcfg = {},
                                     const PaymentConfig& pcfg = {}) {
    Mechanism m;
    m.name = "wgpa-heuristic";
    m.payment_cfg = pcfg;
    m.allocate = [tcfg](const BidVector& bids, const Environment& env) {
        return heuristic_search(detail::bids_to_virtual(bids, env), env, tcfg).strategy;
    };
    return m;
}

// Single-provider benchmark: best lone recruit at time zero.
inline Mechanism make_bm1(const PaymentConfig& pcfg = {}) {
    Mechanism m;
    m.name = "bm1";
    m.payment_cfg = pcfg;
    m.allocate = [](const BidVector& bids, const Environment& env) {
        return single_search(detail::bids_to_virtual(bids, env), env).strategy;
    };
    return m;
}

// Simultaneous benchmark: best subset, everyone recruited at time zero.
inline Mechanism make_bm2(const PaymentConfig& pcfg = {}) {
    Mechanism m;
    m.name = "bm2";
    m.payment_cfg = pcfg;
    m.allocate = [](const BidVector& bids, const Environment& env) {
        return simultaneous_search(detail::bids_to_virtual(bids, env), env).strategy;
    };
    return m;
}

// Pairwise second-price benchmark: random pairs, each pair keeps its lower
// bidder priced at the partner's bid, then a welfare-style gradual plan over
// the kept providers.  The leftover provider of an odd pool is dropped.
inline Mechanism make_bm3(std::uint64_t pairing_seed, const TimeOptConfig& tcfg = {}) {
    Mechanism m;
    m.name = "bm3";
    auto plan = [pairing_seed, tcfg](const BidVector& bids, const Environment& env) {
        check_bids(bids, env);
        auto pairs = detail::make_pairs(env.size(), pairing_seed);
        std::vector<int> kept;
        std::vector<double> price(bids.size(), 0.0);
        for (auto [a, b] : pairs) {
            double ba = bids[static_cast<std::size_t>(a) - 1];
            double bb = bids[static_cast<std::size_t>(b) - 1];
            int winner = (ba < bb || (ba == bb && a < b)) ? a : b;
            int loser = winner == a ? b : a;
            kept.push_back(winner);
            price[static_cast<std::size_t>(winner) - 1] = bids[static_cast<std::size_t>(loser) - 1];
        }
        std::sort(kept.begin(), kept.end());
        return std::pair<std::vector<int>, std::vector<double>>(std::move(kept), std::move(price));
    };
    m.allocate = [plan, tcfg](const BidVector& bids, const Environment& env) {
        auto [kept, price] = plan(bids, env);
        if (kept.empty()) return RecruitmentStrategy{};
        BnbOptions opt;
        opt.candidates = kept;
        return bnb_search(price, env, tcfg, opt).strategy;
    };
    m.custom_pay = [plan](const BidVector& bids, const Environment& env, int provider,
                          const RecruitmentStrategy&) {
        auto [kept, price] = plan(bids, env);
        return price[static_cast<std::size_t>(provider) - 1];
    };
    return m;
}

// Full-information benchmark: plans directly on reported costs and reimburses
// them; what a consumer who knew the costs would earn.
inline Mechanism make_bm4(const TimeOptConfig& tcfg = {}) {
    Mechanism m;
    m.name = "bm4";
    auto hint = std::make_shared<std::vector<int>>();
    m.allocate = [tcfg, hint](const BidVector& bids, const Environment& env) {
        check_bids(bids, env);
        BnbOptions opt;
        opt.hint = *hint;
        AllocationResult r = bnb_search(bids, env, tcfg, opt);
        hint->clear();
        for (const auto& e : r.strategy.entries) hint->push_back(e.provider);
        return r.strategy;
    };
    m.custom_pay = [](const BidVector& bids, const Environment&, int provider,
                      const RecruitmentStrategy&) {
        return bids[static_cast<std::size_t>(provider) - 1];
    };
    return m;
}

inline Mechanism make_mechanism(const std::string& name, const TimeOptConfig& tcfg = {},
                                const PaymentConfig& pcfg = {}, std::uint64_t pairing_seed = 0) {
    if (name == "wgpa") return make_wgpa(tcfg, pcfg);
    if (name == "wgpa-heuristic") return make_wgpa_heuristic(tcfg, pcfg);
    if (name == "bm1") return make_bm1(pcfg);
    if (name == "bm2") return make_bm2(pcfg);
    if (name == "bm3") return make_bm3(pairing_seed, tcfg);
    if (name == "bm4") return make_bm4(tcfg);
    throw std::invalid_argument("unknown mechanism: " + name);
}

// ---------------------------------------------------------------------------
// Verification suite: incentive compatibility, ex-post rationality, bid
// monotonicity, nonnegative expected revenue.

struct VerificationCheck {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // worst slack observed; negative means violated
    std::string detail;
};

struct VerificationReport {
    std::vector<VerificationCheck> checks;
    bool pass = false;
};

struct VerifySuiteConfig {
    int deviation_bids = 25;
    OpponentIntegration integration;
    double ic_tol_scale = 1e-3;  // tolerance = scale * cost support upper bound
    double mono_tol = 1e-6;
    int revenue_samples = 300;
    std::uint64_t seed = 0x5eedbeefcafe1234ull;
};

inline VerificationReport verify_mechanism(const Mechanism& mech, const Environment& env,
                                           const VerifySuiteConfig& suite = {}) {
    VerificationReport report;
    const int nb = suite.deviation_bids;
    char buf[160];

    double ic_margin = std::numeric_limits<double>::infinity();
    double ir_margin = std::numeric_limits<double>::infinity();
    double curve_margin = std::numeric_limits<double>::infinity();
    double q_margin = std::numeric_limits<double>::infinity();
    const bool mc = suite.integration.mode == OpponentIntegration::Mode::mc;

    for (int i = 1; i <= env.size(); ++i) {
        const CostModel& model = env.provider(i).cost_model;
        const double lo = cost_support_lo(model), hi = cost_support_hi(model);
        const double truth = env.provider(i).true_cost;
        std::vector<double> grid(static_cast<std::size_t>(nb));
        for (int k = 0; k < nb; ++k)
            grid[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (nb - 1);

        auto nodes = opponent_nodes(env, i, suite.integration);
        const std::size_t nn = nodes.size();
        // utilities[k], q[k]: averaged over nodes; pk stores per-node P for SE
        std::vector<double> u_dev(static_cast<std::size_t>(nb), 0.0);
        std::vector<std::vector<double>> pk(static_cast<std::size_t>(nb));
        for (auto& col : pk) col.reserve(nn);
        double u_truth = 0.0;

        for (auto& [w, costs] : nodes) {
            PiecewiseCurve curve;
            bool have_curve = false;
            for (int k = 0; k < nb; ++k) {
                double b = grid[static_cast<std::size_t>(k)];
                costs[static_cast<std::size_t>(i) - 1] = b;
                RecruitmentStrategy strategy = mech.allocate(costs, env);
                double p = invocation_probability(strategy, i, env);
                pk[static_cast<std::size_t>(k)].push_back(p);
                if (!(p > 0.0)) continue;
                double t, rent;
                if (mech.custom_pay) {
                    t = mech.custom_pay(costs, env, i, strategy);
                    rent = p * (t - b);
                } else {
                    if (!have_curve) {
                        curve = invocation_curve(mech.allocate, env, costs, i, lo, hi,
                                                 mech.payment_cfg);
                        have_curve = true;
                    }
                    rent = curve.integral_from(b);
                    t = b + rent / p;
                }
                ir_margin = std::min(ir_margin, t - b);
                u_dev[static_cast<std::size_t>(k)] += w * (p * (b - truth) + rent);
            }
            if (!mech.custom_pay && have_curve) {
                for (std::size_t s = 0; s + 1 < curve.values.size(); ++s)
                    curve_margin = std::min(curve_margin, curve.values[s] - curve.values[s + 1]);
            }
            // truthful utility for this node
            {
                costs[static_cast<std::size_t>(i) - 1] = truth;
                RecruitmentStrategy strategy = mech.allocate(costs, env);
                double p = invocation_probability(strategy, i, env);
                if (p > 0.0) {
                    if (mech.custom_pay) {
                        double t = mech.custom_pay(costs, env, i, strategy);
                        u_truth += w * p * (t - truth);
                    } else {
                        PiecewiseCurve c2 = have_curve
                                                ? curve
                                                : invocation_curve(mech.allocate, env, costs, i,
                                                                   lo, hi, mech.payment_cfg);
                        u_truth += w * c2.integral_from(truth);
                    }
                }
            }
        }

        for (int k = 0; k < nb; ++k)
            ic_margin = std::min(ic_margin, u_truth - u_dev[static_cast<std::size_t>(k)]);

        // Q monotonicity on the bid grid, with paired standard errors in MC mode
        for (int k = 0; k + 1 < nb; ++k) {
            const auto& a = pk[static_cast<std::size_t>(k)];
            const auto& b = pk[static_cast<std::size_t>(k) + 1];
            double mean = 0.0;
            for (std::size_t s = 0; s < nn; ++s) mean += (a[s] - b[s]);
            mean /= static_cast<double>(nn);
            double slack = suite.mono_tol;
            if (mc && nn > 1) {
                double var = 0.0;
                for (std::size_t s = 0; s < nn; ++s) {
                    double d = (a[s] - b[s]) - mean;
                    var += d * d;
                }
                var /= static_cast<double>(nn - 1);
                slack += 2.0 * std::sqrt(var / static_cast<double>(nn));
            }
            q_margin = std::min(q_margin, mean + slack);
        }
    }

    double hi_all = 0.0;
    for (int i = 1; i <= env.size(); ++i)
        hi_all = std::max(hi_all, cost_support_hi(env.provider(i).cost_model));
    double ic_tol = suite.ic_tol_scale * hi_all;

    std::snprintf(buf, sizeof buf, "worst truthful-minus-deviation utility %.3g (tol %.3g)",
                  ic_margin, ic_tol);
    report.checks.push_back({"incentive-compatibility", ic_margin >= -ic_tol, ic_margin, buf});
    std::snprintf(buf, sizeof buf, "worst payment-minus-bid %.3g", ir_margin);
    report.checks.push_back({"ex-post-rationality",
                             !(ir_margin < -1e-9), ir_margin, buf});
    std::snprintf(buf, sizeof buf, "worst adjacent curve increase %.3g (tol %.3g)",
                  curve_margin, suite.mono_tol);
    report.checks.push_back({"curve-monotonicity",
                             !(curve_margin < -suite.mono_tol), curve_margin, buf});
    std::snprintf(buf, sizeof buf, "worst adjacent Q increase slack %.3g", q_margin);
    report.checks.push_back({"q-monotonicity", !(q_margin < 0.0), q_margin, buf});

    // expected revenue under the truthful prior
    {
        Rng rng(suite.seed);
        double sum = 0.0, sumsq = 0.0;
        int n = std::max(2, suite.revenue_samples);
        for (int s = 0; s < n; ++s) {
            BidVector costs(static_cast<std::size_t>(env.size()));
            for (int i = 1; i <= env.size(); ++i)
                costs[static_cast<std::size_t>(i) - 1] =
                    sample_cost(env.provider(i).cost_model, rng);
            double r = run_mechanism(mech, costs, env).revenue;
            sum += r;
            sumsq += r * r;
        }
        double mean = sum / n;
        double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1));
        double se = std::sqrt(var / n);
        std::snprintf(buf, sizeof buf, "mean revenue %.4g (se %.3g, %d draws)", mean, se, n);
        report.checks.push_back({"nonnegative-expected-revenue", mean >= -3.0 * se, mean, buf});
    }

    report.pass = true;
    for (const auto& c : report.checks) report.pass = report.pass && c.pass;
    return report;
}

}  // namespace wgpa
