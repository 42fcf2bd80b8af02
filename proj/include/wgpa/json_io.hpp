#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "wgpa/model.hpp"
#include "wgpa/simharness.hpp"

namespace wgpa {

using json = nlohmann::json;

inline DurationModel duration_from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "exponential") return DurationModel::exponential(j.at("rate").get<double>());
    if (kind == "deterministic") return DurationModel::deterministic(j.at("delay").get<double>());
    if (kind == "mixture") {
        std::vector<double> weights = j.at("weights").get<std::vector<double>>();
        std::vector<DurationModel> comps;
        for (const auto& c : j.at("components")) comps.push_back(duration_from_json(c));
        return DurationModel::mixture(std::move(weights), std::move(comps));
    }
    throw std::invalid_argument("unknown duration kind: " + kind);
}

inline CostModel cost_model_from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "uniform")
        return CostModel::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
    if (kind == "truncated-normal")
        return CostModel::truncated_normal(j.at("mu").get<double>(), j.at("sigma").get<double>(),
                                           j.at("lo").get<double>(), j.at("hi").get<double>());
    if (kind == "mixture") {
        std::vector<double> weights = j.at("weights").get<std::vector<double>>();
        std::vector<CostModel> comps;
        for (const auto& c : j.at("components")) comps.push_back(cost_model_from_json(c));
        return CostModel::mixture(std::move(weights), std::move(comps));
    }
    throw std::invalid_argument("unknown cost model kind: " + kind);
}

// Providers missing "true_cost" get one sampled from their cost model, which
// needs a seed; without one the omission is an error.
inline Environment environment_from_json(const json& j,
                                         std::optional<std::uint64_t> sample_seed = {}) {
    Task task{j.at("task").at("value").get<double>(), j.at("task").at("deadline").get<double>()};
    std::vector<Provider> providers;
    std::optional<Rng> rng;
    if (sample_seed) rng.emplace(make_stream(*sample_seed, 0, 1));
    int id = 1;
    for (const auto& pj : j.at("providers")) {
        Provider p;
        p.id = id++;
        p.duration = duration_from_json(pj.at("duration"));
        p.cost_model = cost_model_from_json(pj.at("cost_model"));
        if (pj.contains("true_cost")) {
            p.true_cost = pj.at("true_cost").get<double>();
        } else if (rng) {
            p.true_cost = sample_cost(p.cost_model, *rng);
        } else {
            throw std::invalid_argument("provider lacks true_cost and no sampling seed was given");
        }
        providers.push_back(std::move(p));
    }
    return make_environment(task, std::move(providers));
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    json j;
    in >> j;
    return j;
}

inline Environment load_environment(const std::string& path,
                                    std::optional<std::uint64_t> sample_seed = {}) {
    return environment_from_json(read_json_file(path), sample_seed);
}

inline GeneratorSpec generator_from_json(const json& j) {
    GeneratorSpec g;
    std::string kind = j.value("kind", "uniform-correlated");
    if (kind == "uniform-correlated")
        g.kind = GeneratorKind::UniformCorrelated;
    else if (kind == "uniform-independent")
        g.kind = GeneratorKind::UniformIndependent;
    else if (kind == "heterogeneous")
        g.kind = GeneratorKind::Heterogeneous;
    else if (kind == "continuum")
        g.kind = GeneratorKind::Continuum;
    else if (kind == "multimodal")
        g.kind = GeneratorKind::Multimodal;
    else
        throw std::invalid_argument("unknown generator kind: " + kind);
    g.theta = j.value("theta", g.theta);
    if (j.contains("det_cost")) {
        g.det_cost_lo = j.at("det_cost").at(0).get<double>();
        g.det_cost_hi = j.at("det_cost").at(1).get<double>();
    }
    if (j.contains("mix_cost")) {
        g.mix_cost_lo = j.at("mix_cost").at(0).get<double>();
        g.mix_cost_hi = j.at("mix_cost").at(1).get<double>();
    }
    return g;
}

inline TimeOptConfig time_opt_from_json(const json& j) {
    TimeOptConfig c;
    c.n_starts = j.value("n_starts", c.n_starts);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.tol = j.value("tol", c.tol);
    c.grid_step = j.value("grid_step", c.grid_step);
    c.seed = j.value("seed", c.seed);
    return c;
}

inline PaymentConfig payment_from_json(const json& j) {
    PaymentConfig c;
    c.grid_step = j.value("grid_step", c.grid_step);
    c.refine_breakpoints = j.value("refine_breakpoints", c.refine_breakpoints);
    c.jump_tol = j.value("jump_tol", c.jump_tol);
    c.max_bisect = j.value("max_bisect", c.max_bisect);
    return c;
}

// "desk" keeps quick defaults; "paper" raises replications to 1000 and the
// provider pool to 20 unless the config pins them explicitly.
inline ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    std::string scale = j.value("scale", "desk");
    if (scale == "paper") {
        c.replications = 1000;
        c.n_max = 20;
    } else if (scale != "desk") {
        throw std::invalid_argument("scale must be desk or paper");
    }
    if (j.contains("settings")) {
        c.settings.clear();
        for (const auto& sj : j.at("settings"))
            c.settings.push_back({sj.value("id", static_cast<int>(c.settings.size()) + 1),
                                  sj.at("value").get<double>(), sj.at("deadline").get<double>()});
    }
    if (j.contains("generator")) c.generator = generator_from_json(j.at("generator"));
    c.n_min = j.value("n_min", c.n_min);
    c.n_max = j.value("n_max", c.n_max);
    c.replications = j.value("replications", c.replications);
    c.seed = j.value("seed", c.seed);
    if (j.contains("mechanisms")) c.mechanisms = j.at("mechanisms").get<std::vector<std::string>>();
    if (j.contains("time_opt")) c.time_opt = time_opt_from_json(j.at("time_opt"));
    if (j.contains("payment")) c.payment = payment_from_json(j.at("payment"));
    c.jobs = j.value("jobs", c.jobs);
    c.perturbation_percent = j.value("perturbation_percent", c.perturbation_percent);
    if (c.n_min < 1 || c.n_max < c.n_min)
        throw std::invalid_argument("need 1 <= n_min <= n_max");
    if (c.replications < 1) throw std::invalid_argument("replications must be positive");
    return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    return experiment_config_from_json(read_json_file(path));
}

inline json outcome_to_json(const MechanismOutcome& o, const Environment& env) {
    json strat = json::array();
    for (const auto& e : o.strategy.entries)
        strat.push_back({{"provider", e.provider}, {"time", e.time}});
    json pay = json::array();
    for (int i = 1; i <= env.size(); ++i) {
        double t = o.payments.amounts[static_cast<std::size_t>(i) - 1];
        if (o.strategy.contains(i)) pay.push_back({{"provider", i}, {"payment", t}});
    }
    return json{{"strategy", strat}, {"payments", pay},     {"success", o.success},
                {"cost", o.cost},    {"revenue", o.revenue}, {"welfare", o.welfare}};
}

}  // namespace wgpa
