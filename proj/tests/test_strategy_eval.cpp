#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <wgpa/model.hpp>
#include <wgpa/strategy_eval.hpp>

using namespace wgpa;
using Catch::Matchers::WithinAbs;

namespace {

// Task worth 4 with deadline 1, two unit-rate exponential providers with
// uniform costs on [0, 1].
Environment two_exp_env() {
    Provider p1{1, DurationModel::exponential(1.0), CostModel::uniform(0.0, 1.0), 0.2};
    Provider p2{2, DurationModel::exponential(1.0), CostModel::uniform(0.0, 1.0), 0.3};
    return make_environment(Task{4.0, 1.0}, {p1, p2});
}

}  // namespace

TEST_CASE("success probability of staged exponentials", "[strategy_eval]") {
    Environment env = two_exp_env();

    auto both_now = make_strategy({{1, 0.0}, {2, 0.0}}, env);
    CHECK_THAT(success_probability(both_now, env), WithinAbs(1.0 - std::exp(-2.0), 1e-12));

    auto staged = make_strategy({{1, 0.0}, {2, 0.3}}, env);
    CHECK_THAT(success_probability(staged, env), WithinAbs(1.0 - std::exp(-1.7), 1e-12));

    auto solo = make_strategy({{1, 0.0}}, env);
    CHECK_THAT(success_probability(solo, env), WithinAbs(1.0 - std::exp(-1.0), 1e-12));

    auto none = make_strategy({}, env);
    CHECK(success_probability(none, env) == 0.0);

    // Recruiting anyone extra never hurts.
    CHECK(success_probability(both_now, env) >= success_probability(solo, env));
    CHECK(success_probability(staged, env) >= success_probability(solo, env));
}

TEST_CASE("invocation probabilities", "[strategy_eval]") {
    Environment env = two_exp_env();

    auto staged = make_strategy({{1, 0.0}, {2, 0.6}}, env);
    auto probs = invocation_probabilities(staged, env);
    REQUIRE(probs.size() == 2);
    CHECK(probs[0] == 1.0);
    CHECK_THAT(probs[1], WithinAbs(std::exp(-0.6), 1e-12));  // 0.548811636094

    CHECK_THAT(invocation_probability(staged, 2, env), WithinAbs(std::exp(-0.6), 1e-12));
    CHECK(invocation_probability(staged, 1, env) == 1.0);
    CHECK(invocation_probability(make_strategy({{1, 0.0}}, env), 2, env) == 0.0);

    // A deterministic worker blocks later recruits entirely after its delay.
    Provider d1{1, DurationModel::deterministic(0.25), CostModel::uniform(0.0, 1.0), 0.2};
    Provider d2{2, DurationModel::exponential(1.0), CostModel::uniform(0.0, 1.0), 0.3};
    Environment denv = make_environment(Task{4.0, 1.0}, {d1, d2});
    CHECK(invocation_probability(make_strategy({{1, 0.0}, {2, 0.3}}, denv), 2, denv) == 0.0);
    CHECK(invocation_probability(make_strategy({{1, 0.0}, {2, 0.2}}, denv), 2, denv) == 1.0);
}

TEST_CASE("expected cost, revenue and welfare", "[strategy_eval]") {
    Environment env = two_exp_env();
    auto both_now = make_strategy({{1, 0.0}, {2, 0.0}}, env);

    CHECK_THAT(expected_cost(both_now, {0.5, 0.5}, env), WithinAbs(1.0, 1e-12));
    CHECK_THAT(expected_revenue(both_now, {0.414, 0.414}, env),
               WithinAbs(4.0 * (1.0 - std::exp(-2.0)) - 0.828, 1e-12));  // ~2.630659

    auto staged = make_strategy({{1, 0.0}, {2, 0.3}}, env);
    double p2 = std::exp(-0.3);
    CHECK_THAT(expected_cost(staged, {0.4, 0.6}, env), WithinAbs(0.4 + 0.6 * p2, 1e-12));
    CHECK_THAT(social_welfare(staged, env),
               WithinAbs(4.0 * (1.0 - std::exp(-1.7)) - 0.2 - 0.3 * p2, 1e-12));

    CHECK_THROWS_AS(expected_cost(both_now, {0.5}, env), std::invalid_argument);
}

TEST_CASE("virtual objective", "[strategy_eval]") {
    Environment env = two_exp_env();

    // Single provider with effective cost 0.93: 4 (1 - e^{-1}) - 0.93.
    CHECK_THAT(virtual_objective({1}, {0.0}, {0.93, 0.93}, env),
               WithinAbs(1.5984822353141524, 1e-12));

    // Two providers staged at 0 and 0.3 with effective costs (0.4, 0.8).
    double expect = 4.0 * (1.0 - std::exp(-1.7)) - 0.4 - 0.8 * std::exp(-0.3);
    CHECK_THAT(virtual_objective({1, 2}, {0.0, 0.3}, {0.4, 0.8}, env), WithinAbs(expect, 1e-12));

    CHECK(virtual_objective({}, {}, {0.4, 0.8}, env) == 0.0);
    CHECK_THROWS_AS(virtual_objective({1}, {0.0, 0.3}, {0.4, 0.8}, env), std::invalid_argument);
    CHECK_THROWS_AS(virtual_objective({1, 2}, {0.3, 0.0}, {0.4, 0.8}, env), std::invalid_argument);
    CHECK_THROWS_AS(virtual_objective({1, 2}, {0.0, 1.2}, {0.4, 0.8}, env), std::invalid_argument);
    CHECK_THROWS_AS(virtual_objective({1}, {0.0}, {0.4}, env), std::invalid_argument);
}

TEST_CASE("evaluate_strategy bundles the pieces consistently", "[strategy_eval]") {
    Environment env = two_exp_env();
    auto staged = make_strategy({{2, 0.1}, {1, 0.4}}, env);
    std::vector<double> pay{0.45, 0.5};

    auto ev = evaluate_strategy(staged, pay, env);
    CHECK_THAT(ev.success, WithinAbs(success_probability(staged, env), 1e-15));
    CHECK_THAT(ev.cost, WithinAbs(expected_cost(staged, pay, env), 1e-15));
    CHECK_THAT(ev.revenue, WithinAbs(env.task.value * ev.success - ev.cost, 1e-12));
    CHECK_THAT(ev.welfare, WithinAbs(social_welfare(staged, env), 1e-15));
    REQUIRE(ev.invocation.size() == 2);
    CHECK_THAT(ev.invocation[1], WithinAbs(std::exp(-0.3), 1e-12));
}
