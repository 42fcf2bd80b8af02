#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <wgpa/mechanism.hpp>
#include <wgpa/model.hpp>
#include <wgpa/strategy_eval.hpp>

using namespace wgpa;
using Catch::Matchers::WithinAbs;

namespace {

Environment two_exp_env() {
    Provider p1{1, DurationModel::exponential(1.0), CostModel::uniform(0.0, 1.0), 0.2};
    Provider p2{2, DurationModel::exponential(1.0), CostModel::uniform(0.0, 1.0), 0.3};
    return make_environment(Task{4.0, 1.0}, {p1, p2});
}

Environment random_truthful_env(Rng& rng, int n, double value, double deadline) {
    std::vector<Provider> ps;
    for (int i = 1; i <= n; ++i)
        ps.push_back({i, DurationModel::exponential(0.4 + 2.0 * uniform01(rng)),
                      CostModel::uniform(0.0, 1.0), uniform01(rng)});
    return make_environment(Task{value, deadline}, ps);
}

}  // namespace

TEST_CASE("exact mechanism on the worth-4 pair at equal low bids", "[mechanism]") {
    Environment env = two_exp_env();
    PaymentConfig pcfg;
    pcfg.refine_breakpoints = true;
    Mechanism mech = make_wgpa({}, pcfg);
    MechanismOutcome o = run_mechanism(mech, {0.2, 0.2}, env);

    REQUIRE(o.strategy.size() == 2);
    CHECK(o.strategy.entries[0].time <= 1e-9);
    CHECK(o.strategy.entries[1].time <= 1e-3);  // below the gradual boundary: both start at once

    // Closed form: the bid-response curve is 1 up to 2e^{-2}, then
    // sqrt(2e^{-2}/b) until the staged marginal value vanishes at b = 1/2,
    // integrating to a payment of 2(e^{-1} - e^{-2}) per provider.
    const double expect_pay = 2.0 * (std::exp(-1.0) - std::exp(-2.0));  // 0.4650883
    CHECK_THAT(o.payments.amounts[0], WithinAbs(expect_pay, 0.004));
    CHECK_THAT(o.payments.amounts[1], WithinAbs(expect_pay, 0.004));

    double expect_revenue = 4.0 * (1.0 - std::exp(-2.0)) - 2.0 * expect_pay;
    CHECK_THAT(o.revenue, WithinAbs(expect_revenue, 0.01));
    CHECK_THAT(o.success, WithinAbs(1.0 - std::exp(-2.0), 1e-9));
}

TEST_CASE("exact mechanism staggers inside the band", "[mechanism]") {
    Environment env = two_exp_env();
    Mechanism mech = make_wgpa();
    auto s = mech.allocate({0.4, 0.4}, env);
    REQUIRE(s.size() == 2);
    CHECK(s.entries[0].time <= 1e-9);
    // Analytic stagger for virtual cost 0.8: ln(0.8 / (4 e^{-2})) / 2.
    CHECK_THAT(s.entries[1].time, WithinAbs(0.5 * std::log(0.8 / (4.0 * std::exp(-2.0))), 1e-3));

    // Repeated calls are not perturbed by the warm-start memory.
    mech.allocate({0.9, 0.1}, env);
    auto s2 = mech.allocate({0.4, 0.4}, env);
    REQUIRE(s2.size() == 2);
    CHECK(s2.entries[0].provider == s.entries[0].provider);
    CHECK_THAT(s2.entries[1].time, WithinAbs(s.entries[1].time, 1e-7));
}

TEST_CASE("single-recruit benchmark pays the partner's critical bid", "[mechanism]") {
    Environment env = two_exp_env();
    PaymentConfig pcfg;
    pcfg.refine_breakpoints = true;
    Mechanism bm1 = make_bm1(pcfg);
    MechanismOutcome o = run_mechanism(bm1, {0.2, 0.5}, env);
    REQUIRE(o.strategy.size() == 1);
    CHECK(o.strategy.entries[0].provider == 1);
    CHECK(o.strategy.entries[0].time == 0.0);
    // With identical providers the winner's threshold is the rival bid.
    CHECK_THAT(o.payments.amounts[0], WithinAbs(0.5, 0.004));
    CHECK(o.payments.amounts[1] == 0.0);
}

TEST_CASE("simultaneous benchmark pays the subset threshold", "[mechanism]") {
    Environment env = two_exp_env();
    PaymentConfig pcfg;
    pcfg.refine_breakpoints = true;
    Mechanism bm2 = make_bm2(pcfg);
    MechanismOutcome o = run_mechanism(bm2, {0.2, 0.3}, env);
    REQUIRE(o.strategy.size() == 2);
    for (const auto& e : o.strategy.entries) CHECK(e.time == 0.0);
    const double theta = 2.0 * (std::exp(-1.0) - std::exp(-2.0));  // 0.4650883
    CHECK_THAT(o.payments.amounts[0], WithinAbs(theta, 0.004));
    CHECK_THAT(o.payments.amounts[1], WithinAbs(theta, 0.004));
}

TEST_CASE("pairwise benchmark prices winners at partner bids", "[mechanism]") {
    Environment env = two_exp_env();
    for (std::uint64_t seed : {1ull, 7ull, 1234567ull}) {
        Mechanism bm3 = make_bm3(seed);
        MechanismOutcome o = run_mechanism(bm3, {0.2, 0.5}, env);
        REQUIRE(o.strategy.size() == 1);
        CHECK(o.strategy.entries[0].provider == 1);  // lower bidder wins its pair
        CHECK_THAT(o.payments.amounts[0], WithinAbs(0.5, 1e-12));
        CHECK(o.payments.amounts[1] == 0.0);
        CHECK_THAT(o.revenue, WithinAbs(4.0 * (1.0 - std::exp(-1.0)) - 0.5, 1e-9));
    }

    // Odd pools drop the unpaired provider; payments stay at or above bids.
    Rng rng = make_stream(61, 0, 0);
    Environment env3 = random_truthful_env(rng, 3, 4.0, 1.0);
    BidVector bids{env3.provider(1).true_cost, env3.provider(2).true_cost,
                   env3.provider(3).true_cost};
    Mechanism bm3 = make_bm3(42);
    MechanismOutcome o = run_mechanism(bm3, bids, env3);
    CHECK(o.strategy.size() <= 1);
    for (const auto& e : o.strategy.entries)
        CHECK(o.payments.amounts[static_cast<std::size_t>(e.provider) - 1] >=
              bids[static_cast<std::size_t>(e.provider) - 1] - 1e-12);
    MechanismOutcome o2 = run_mechanism(bm3, bids, env3);
    CHECK(o2.strategy.entries.size() == o.strategy.entries.size());
}

TEST_CASE("full-information benchmark bounds the exact mechanism", "[mechanism]") {
    Rng rng = make_stream(67, 0, 0);
    Mechanism bm4 = make_bm4();
    Mechanism opt = make_wgpa();
    for (int instance = 0; instance < 8; ++instance) {
        int n = 2 + static_cast<int>(rng() % 2);
        Environment env = random_truthful_env(rng, n, 4.0 + 6.0 * uniform01(rng),
                                              0.5 + 2.0 * uniform01(rng));
        BidVector bids;
        for (int i = 1; i <= n; ++i) bids.push_back(env.provider(i).true_cost);

        MechanismOutcome full = run_mechanism(bm4, bids, env);
        // Paying reported costs makes revenue equal welfare of its own plan.
        CHECK_THAT(full.revenue, WithinAbs(full.welfare, 1e-9));

        MechanismOutcome mine = run_mechanism(opt, bids, env);
        INFO("instance " << instance << " full " << full.revenue << " opt " << mine.revenue);
        CHECK(full.revenue >= mine.revenue - 1e-6 * env.task.value);
    }
}

TEST_CASE("mechanism factory", "[mechanism]") {
    for (const char* name : {"wgpa", "wgpa-heuristic", "bm1", "bm2", "bm3", "bm4"}) {
        Mechanism m = make_mechanism(name, {}, {}, 5);
        CHECK(m.name == name);
        CHECK(static_cast<bool>(m.allocate));
    }
    CHECK_THROWS_AS(make_mechanism("vcg"), std::invalid_argument);
}

TEST_CASE("outcome metrics agree with direct strategy evaluation", "[mechanism]") {
    Environment env = two_exp_env();
    Mechanism bm2 = make_bm2();
    MechanismOutcome o = run_mechanism(bm2, {0.2, 0.3}, env);
    auto ev = evaluate_strategy(o.strategy, o.payments.amounts, env);
    CHECK_THAT(o.success, WithinAbs(ev.success, 1e-15));
    CHECK_THAT(o.cost, WithinAbs(ev.cost, 1e-15));
    CHECK_THAT(o.revenue, WithinAbs(ev.revenue, 1e-15));
    CHECK_THAT(o.welfare, WithinAbs(ev.welfare, 1e-15));
}

TEST_CASE("verification suite accepts the exact mechanism", "[mechanism]") {
    Environment env = two_exp_env();
    PaymentConfig pcfg;
    pcfg.grid_step = 1.0 / 64.0;
    pcfg.refine_breakpoints = true;
    Mechanism mech = make_wgpa({}, pcfg);

    VerifySuiteConfig suite;
    suite.deviation_bids = 9;
    suite.integration.mode = OpponentIntegration::Mode::quadrature;
    suite.integration.points_per_dim = 24;
    suite.revenue_samples = 40;

    VerificationReport report = verify_mechanism(mech, env, suite);
    for (const auto& c : report.checks) {
        INFO(c.name << ": " << c.detail);
        CHECK(c.pass);
    }
    CHECK(report.pass);
}

TEST_CASE("verification suite flags a pay-your-bid rule", "[mechanism]") {
    Environment env = two_exp_env();
    Mechanism broken = make_wgpa();
    broken.name = "broken";
    broken.custom_pay = [](const BidVector& bids, const Environment&, int provider,
                           const RecruitmentStrategy&) {
        return bids[static_cast<std::size_t>(provider) - 1];
    };

    VerifySuiteConfig suite;
    suite.deviation_bids = 9;
    suite.integration.mode = OpponentIntegration::Mode::quadrature;
    suite.integration.points_per_dim = 24;
    suite.revenue_samples = 20;

    VerificationReport report = verify_mechanism(broken, env, suite);
    CHECK_FALSE(report.pass);
    for (const auto& c : report.checks) {
        if (c.name == "incentive-compatibility") CHECK_FALSE(c.pass);
        if (c.name == "ex-post-rationality") CHECK(c.pass);  // pays exactly the bid
        if (c.name == "q-monotonicity") CHECK(c.pass);
    }
}

TEST_CASE("verification suite passes a mechanism that never recruits", "[mechanism]") {
    Environment env = two_exp_env();
    Mechanism idle;
    idle.name = "idle";
    idle.allocate = [](const BidVector&, const Environment&) { return RecruitmentStrategy{}; };

    VerifySuiteConfig suite;
    suite.deviation_bids = 7;
    suite.integration.mode = OpponentIntegration::Mode::quadrature;
    suite.integration.points_per_dim = 8;
    suite.revenue_samples = 10;
    VerificationReport report = verify_mechanism(idle, env, suite);
    CHECK(report.pass);
}
