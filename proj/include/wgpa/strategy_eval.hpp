#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wgpa/model.hpp"

namespace wgpa {

// Closed-form evaluation of a recruitment strategy.  A provider recruited at
// time tau_k is only invoked if nobody recruited earlier has delivered by
// tau_k; once invoked it works until the deadline.

// Prob(some invoked provider delivers by the deadline).
inline double success_probability(const RecruitmentStrategy& s, const Environment& env) {
    double fail = 1.0;
    for (const auto& e : s.entries)
        fail *= 1.0 - duration_cdf(env.provider(e.provider).duration, env.task.deadline - e.time);
    return 1.0 - fail;
}

// Invocation probabilities by position: prob that all earlier recruits are
// still working when position k starts.
inline std::vector<double> invocation_probabilities(const RecruitmentStrategy& s,
                                                    const Environment& env) {
    std::vector<double> probs(s.entries.size(), 1.0);
    for (std::size_t k = 1; k < s.entries.size(); ++k) {
        double p = 1.0;
        for (std::size_t j = 0; j < k; ++j)
            p *= 1.0 - duration_cdf(env.provider(s.entries[j].provider).duration,
                                    s.entries[k].time - s.entries[j].time);
        probs[k] = p;
    }
    return probs;
}

// Invocation probability of one provider; 0 if the strategy never recruits it.
inline double invocation_probability(const RecruitmentStrategy& s, int provider_id,
                                     const Environment& env) {
    for (std::size_t k = 0; k < s.entries.size(); ++k) {
        if (s.entries[k].provider != provider_id) continue;
        double p = 1.0;
        for (std::size_t j = 0; j < k; ++j)
            p *= 1.0 - duration_cdf(env.provider(s.entries[j].provider).duration,
                                    s.entries[k].time - s.entries[j].time);
        return p;
    }
    return 0.0;
}

// Expected total payout: sum of payment * invocation probability.  payments is
// indexed by provider id - 1 and must cover every recruited provider.
inline double expected_cost(const RecruitmentStrategy& s, const std::vector<double>& payments,
                            const Environment& env) {
    if (static_cast<int>(payments.size()) != env.size())
        throw std::invalid_argument("payments must be given for all providers");
    auto probs = invocation_probabilities(s, env);
    double acc = 0.0;
    for (std::size_t k = 0; k < s.entries.size(); ++k)
        acc += payments[static_cast<std::size_t>(s.entries[k].provider) - 1] * probs[k];
    return acc;
}

inline double expected_revenue(const RecruitmentStrategy& s, const std::vector<double>& payments,
                               const Environment& env) {
    return env.task.value * success_probability(s, env) - expected_cost(s, payments, env);
}

// Value created minus true costs actually incurred.
inline double social_welfare(const RecruitmentStrategy& s, const Environment& env) {
    auto probs = invocation_probabilities(s, env);
    double acc = env.task.value * success_probability(s, env);
    for (std::size_t k = 0; k < s.entries.size(); ++k)
        acc -= env.provider(s.entries[k].provider).true_cost * probs[k];
    return acc;
}

// Objective the allocation search maximises: expected value minus expected
// virtual cost of an ordering with invocation times.  effective_costs is
// indexed by provider id - 1 (virtual costs for the revenue objective, true
// or bid costs for welfare variants).
inline double virtual_objective(const std::vector<int>& ordering, const std::vector<double>& times,
                                const std::vector<double>& effective_costs, const Environment& env) {
    if (ordering.size() != times.size())
        throw std::invalid_argument("ordering and times must have equal length");
    if (static_cast<int>(effective_costs.size()) != env.size())
        throw std::invalid_argument("effective costs must be given for all providers");
    double prev = 0.0;
    for (double t : times) {
        if (!(t >= prev) || !(t <= env.task.deadline))
            throw std::invalid_argument("times must be nondecreasing within [0, deadline]");
        prev = t;
    }
    double fail = 1.0, cost = 0.0;
    for (std::size_t k = 0; k < ordering.size(); ++k) {
        double invoked = 1.0;
        for (std::size_t j = 0; j < k; ++j)
            invoked *= 1.0 - duration_cdf(env.provider(ordering[j]).duration, times[k] - times[j]);
        cost += effective_costs[static_cast<std::size_t>(ordering[k]) - 1] * invoked;
        fail *= 1.0 - duration_cdf(env.provider(ordering[k]).duration, env.task.deadline - times[k]);
    }
    return env.task.value * (1.0 - fail) - cost;
}

struct StrategyEvaluation {
    double success = 0.0;
    double cost = 0.0;
    double revenue = 0.0;
    double welfare = 0.0;
    std::vector<double> invocation;  // by position
};

inline StrategyEvaluation evaluate_strategy(const RecruitmentStrategy& s,
                                            const std::vector<double>& payments,
                                            const Environment& env) {
    StrategyEvaluation out;
    out.success = success_probability(s, env);
    out.invocation = invocation_probabilities(s, env);
    out.cost = 0.0;
    double welfare_cost = 0.0;
    for (std::size_t k = 0; k < s.entries.size(); ++k) {
        int id = s.entries[k].provider;
        out.cost += payments.at(static_cast<std::size_t>(id) - 1) * out.invocation[k];
        welfare_cost += env.provider(id).true_cost * out.invocation[k];
    }
    out.revenue = env.task.value * out.success - out.cost;
    out.welfare = env.task.value * out.success - welfare_cost;
    return out;
}

}  // namespace wgpa
