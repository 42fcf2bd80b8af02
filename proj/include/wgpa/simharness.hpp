#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "wgpa/mechanism.hpp"
#include "wgpa/model.hpp"
#include "wgpa/random.hpp"
#include "wgpa/strategy_eval.hpp"

namespace wgpa {

// ---------------------------------------------------------------------------
// Environment generators

enum class GeneratorKind {
    UniformCorrelated,   // rates and costs U(0,1], rank-paired so faster is dearer
    UniformIndependent,  // rates and costs U(0,1], paired as drawn
    Heterogeneous,       // cheap-slow group on (0,0.5), expensive-fast on (0.5,1)
    Continuum,           // 100 providers, rate_i = cost_i = 0.01 * i
    Multimodal           // deterministic group vs bimodal (on-time / hopeless) group
};

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::UniformCorrelated;
    double theta = 0.5;  // heterogeneous: fraction of cheap-slow providers
    // multimodal cost supports
    double det_cost_lo = 0.8, det_cost_hi = 1.0;
    double mix_cost_lo = 0.0, mix_cost_hi = 0.2;
};

inline Environment generate_environment(const GeneratorSpec& spec, const Task& task, int n,
                                        Rng& model_rng, Rng& cost_rng) {
    std::vector<Provider> providers;
    auto u_pos = [](Rng& r) { return 1.0 - uniform01(r); };  // (0, 1]

    switch (spec.kind) {
        case GeneratorKind::UniformCorrelated:
        case GeneratorKind::UniformIndependent: {
            std::vector<double> rates(static_cast<std::size_t>(n)),
                costs(static_cast<std::size_t>(n));
            for (auto& r : rates) r = u_pos(model_rng);
            for (auto& c : costs) c = u_pos(cost_rng);
            if (spec.kind == GeneratorKind::UniformCorrelated) {
                std::sort(rates.begin(), rates.end());
                std::sort(costs.begin(), costs.end());
            }
            for (int i = 0; i < n; ++i)
                providers.push_back({i + 1, DurationModel::exponential(rates[static_cast<std::size_t>(i)]),
                                     CostModel::uniform(0.0, 1.0), costs[static_cast<std::size_t>(i)]});
            break;
        }
        case GeneratorKind::Heterogeneous: {
            int n_slow = static_cast<int>(std::lround(spec.theta * n));
            n_slow = std::min(std::max(n_slow, 0), n);
            for (int i = 0; i < n; ++i) {
                bool slow = i < n_slow;
                double lo = slow ? 0.0 : 0.5, hi = slow ? 0.5 : 1.0;
                double rate = lo + (hi - lo) * u_pos(model_rng);
                double cost = lo + (hi - lo) * u_pos(cost_rng);
                providers.push_back({i + 1, DurationModel::exponential(rate),
                                     CostModel::uniform(lo, hi), cost});
            }
            break;
        }
        case GeneratorKind::Continuum: {
            n = 100;
            for (int i = 1; i <= n; ++i)
                providers.push_back({i, DurationModel::exponential(0.01 * i),
                                     CostModel::uniform(0.0, 1.0), 0.01 * i});
            break;
        }
        case GeneratorKind::Multimodal: {
            // first half always delivers at D/2; second half is on time with
            // probability 1/2 and far past the deadline otherwise
            int n_det = (n + 1) / 2;
            DurationModel on_time = DurationModel::deterministic(task.deadline / 2.0);
            DurationModel late = DurationModel::deterministic(2.0 * task.deadline);
            DurationModel bimodal = DurationModel::mixture({0.5, 0.5}, {on_time, late});
            for (int i = 0; i < n; ++i) {
                bool det = i < n_det;
                CostModel cm = det ? CostModel::uniform(spec.det_cost_lo, spec.det_cost_hi)
                                   : CostModel::uniform(spec.mix_cost_lo, spec.mix_cost_hi);
                double lo = cost_support_lo(cm), hi = cost_support_hi(cm);
                double cost = lo + (hi - lo) * uniform01(cost_rng);
                providers.push_back({i + 1, det ? on_time : bimodal, cm, cost});
            }
            break;
        }
    }
    return make_environment(task, std::move(providers));
}

// ---------------------------------------------------------------------------
// Execution simulation

struct ExecutionTrace {
    std::vector<int> invoked;        // provider ids, recruitment order
    std::vector<double> delivery;    // sampled delivery durations, same order
    double completion = std::numeric_limits<double>::infinity();
    bool success = false;
    double paid = 0.0;
    double realized_revenue = 0.0;
    double realized_welfare = 0.0;
};

// One run with durations fixed per provider (id - 1 indexed); a provider is
// invoked only if nobody delivered before its start time and the deadline has
// not passed.
inline ExecutionTrace simulate_execution_with(const RecruitmentStrategy& s,
                                              const PaymentSchedule& payments,
                                              const Environment& env,
                                              const std::vector<double>& durations) {
    if (static_cast<int>(durations.size()) != env.size())
        throw std::invalid_argument("durations must be given for all providers");
    ExecutionTrace t;
    const double D = env.task.deadline;
    double welfare_cost = 0.0;
    for (const auto& e : s.entries) {
        if (!(e.time < D) || !(e.time < t.completion)) continue;
        double x = durations[static_cast<std::size_t>(e.provider) - 1];
        t.invoked.push_back(e.provider);
        t.delivery.push_back(x);
        t.completion = std::min(t.completion, e.time + x);
        t.paid += payments.amounts.at(static_cast<std::size_t>(e.provider) - 1);
        welfare_cost += env.provider(e.provider).true_cost;
    }
    t.success = t.completion <= D;
    double value = t.success ? env.task.value : 0.0;
    t.realized_revenue = value - t.paid;
    t.realized_welfare = value - welfare_cost;
    return t;
}

inline ExecutionTrace simulate_execution(const RecruitmentStrategy& s,
                                         const PaymentSchedule& payments, const Environment& env,
                                         Rng& rng) {
    std::vector<double> durations(static_cast<std::size_t>(env.size()));
    for (int i = 1; i <= env.size(); ++i)
        durations[static_cast<std::size_t>(i) - 1] = sample_duration(env.provider(i).duration, rng);
    return simulate_execution_with(s, payments, env, durations);
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentSetting {
    int id = 1;
    double value = 10.0;
    double deadline = 3.0;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<ExperimentSetting> settings = {{1, 10.0, 3.0}, {2, 4.0, 3.0},
                                               {3, 10.0, 1.0}, {4, 4.0, 1.0}};
    GeneratorSpec generator;
    int n_min = 2, n_max = 8;
    int replications = 300;
    std::uint64_t seed = 20240001;
    std::vector<std::string> mechanisms = {"wgpa", "wgpa-heuristic", "bm1", "bm2", "bm3", "bm4"};
    TimeOptConfig time_opt;
    PaymentConfig payment;
    int jobs = 1;
    double perturbation_percent = 0.0;  // > 0: plan on rate vectors perturbed this much
};

struct ResultRow {
    int setting = 0;
    std::string mechanism;
    int replication = 0;
    std::uint64_t seed = 0;
    int n = 0;
    double revenue = 0.0;
    double welfare = 0.0;
    double success = 0.0;
    double cost = 0.0;
    int m = 0;          // providers recruited by the plan
    int m_h = 0;        // providers invoked in the simulated run
    double d_i = 0.0;   // sum of invocation times
    bool failed = false;
};

struct ResultTable {
    ExperimentConfig config;
    std::vector<ResultRow> rows;
};

namespace detail {

// Rate vector perturbed within a ball of radius pct% of its norm; rejects
// directions that push any rate to zero or below.
inline std::vector<double> perturb_rates(const std::vector<double>& rates, double pct, Rng& rng) {
    const std::size_t n = rates.size();
    double norm = 0.0;
    for (double r : rates) norm += r * r;
    norm = std::sqrt(norm);
    double radius = pct / 100.0 * norm;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int tries = 0; tries < 1000; ++tries) {
        std::vector<double> dir(n);
        double dn = 0.0;
        for (auto& d : dir) {
            d = gauss(rng);
            dn += d * d;
        }
        dn = std::sqrt(dn);
        if (!(dn > 0.0)) continue;
        double mag = uniform01(rng) * radius;
        std::vector<double> out(n);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = rates[i] + mag * dir[i] / dn;
            if (!(out[i] > 0.0)) {
                ok = false;
                break;
            }
        }
        if (ok) return out;
    }
    throw std::runtime_error("could not find a positive perturbed rate vector");
}

inline Environment with_rates(const Environment& env, const std::vector<double>& rates) {
    Environment out = env;
    for (int i = 1; i <= env.size(); ++i) {
        if (!std::holds_alternative<Exponential>(env.provider(i).duration.law))
            throw std::invalid_argument("rate perturbation requires exponential delivery laws");
        out.providers[static_cast<std::size_t>(i) - 1].duration =
            DurationModel::exponential(rates[static_cast<std::size_t>(i) - 1]);
    }
    return out;
}

}  // namespace detail

// Runs every (setting, mechanism, replication) cell.  Within a replication
// all mechanisms and settings see the same provider pool, true costs and
// delivery draws, so comparisons are paired.
inline ResultTable run_experiment(const ExperimentConfig& cfg) {
    ResultTable table;
    table.config = cfg;
    const std::size_t per_rep = cfg.settings.size() * cfg.mechanisms.size();
    table.rows.resize(static_cast<std::size_t>(cfg.replications) * per_rep);

    auto run_replication = [&](int rep) {
        std::size_t slot = static_cast<std::size_t>(rep) * per_rep;
        for (std::size_t si = 0; si < cfg.settings.size(); ++si) {
            const ExperimentSetting& setting = cfg.settings[si];
            Task task{setting.value, setting.deadline};

            Rng env_rng = make_stream(cfg.seed, static_cast<std::uint64_t>(rep), 0);
            Rng cost_rng = make_stream(cfg.seed, static_cast<std::uint64_t>(rep), 1);
            int n = cfg.n_min +
                    (cfg.n_max > cfg.n_min
                         ? static_cast<int>(env_rng() % static_cast<std::uint64_t>(
                               cfg.n_max - cfg.n_min + 1))
                         : 0);
            Environment env = generate_environment(cfg.generator, task, n, env_rng, cost_rng);
            n = env.size();

            Environment plan_env = env;
            if (cfg.perturbation_percent > 0.0) {
                Rng perturb_rng = make_stream(cfg.seed, static_cast<std::uint64_t>(rep), 4);
                std::vector<double> rates;
                for (int i = 1; i <= n; ++i) {
                    if (!std::holds_alternative<Exponential>(env.provider(i).duration.law))
                        throw std::invalid_argument(
                            "rate perturbation requires exponential delivery laws");
                    rates.push_back(std::get<Exponential>(env.provider(i).duration.law).rate);
                }
                plan_env = detail::with_rates(
                    env, detail::perturb_rates(rates, cfg.perturbation_percent, perturb_rng));
            }

            Rng exec_rng = make_stream(cfg.seed, static_cast<std::uint64_t>(rep), 2);
            std::vector<double> durations(static_cast<std::size_t>(n));
            for (int i = 1; i <= n; ++i)
                durations[static_cast<std::size_t>(i) - 1] =
                    sample_duration(env.provider(i).duration, exec_rng);

            BidVector bids(static_cast<std::size_t>(n));
            for (int i = 1; i <= n; ++i)
                bids[static_cast<std::size_t>(i) - 1] = env.provider(i).true_cost;

            std::uint64_t pairing_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep), 3);
            for (std::size_t mi = 0; mi < cfg.mechanisms.size(); ++mi) {
                ResultRow row;
                row.setting = setting.id;
                row.mechanism = cfg.mechanisms[mi];
                row.replication = rep;
                row.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep), 0);
                row.n = n;
                try {
                    Mechanism mech =
                        make_mechanism(cfg.mechanisms[mi], cfg.time_opt, cfg.payment, pairing_seed);
                    RecruitmentStrategy strategy = mech.allocate(bids, plan_env);
                    PaymentSchedule payments = mechanism_payments(mech, bids, plan_env, strategy);
                    StrategyEvaluation ev = evaluate_strategy(strategy, payments.amounts, env);
                    ExecutionTrace trace = simulate_execution_with(strategy, payments, env, durations);
                    row.revenue = ev.revenue;
                    row.welfare = ev.welfare;
                    row.success = ev.success;
                    row.cost = ev.cost;
                    row.m = static_cast<int>(strategy.size());
                    row.m_h = static_cast<int>(trace.invoked.size());
                    for (const auto& e : strategy.entries) row.d_i += e.time;
                } catch (const std::exception& ex) {
                    row.failed = true;
                    row.revenue = row.welfare = row.success = row.cost = row.d_i =
                        std::numeric_limits<double>::quiet_NaN();
                    std::fprintf(stderr, "replication %d mechanism %s failed: %s\n", rep,
                                 cfg.mechanisms[mi].c_str(), ex.what());
                }
                table.rows[slot + si * cfg.mechanisms.size() + mi] = std::move(row);
            }
        }
    };

    int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (int rep = 0; rep < cfg.replications; ++rep) run_replication(rep);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (;;) {
                    int rep = next.fetch_add(1);
                    if (rep >= cfg.replications) return;
                    run_replication(rep);
                }
            });
        for (auto& t : pool) t.join();
    }
    return table;
}

inline ResultTable run_robustness(ExperimentConfig cfg, double delta_percent) {
    cfg.perturbation_percent = delta_percent;
    return run_experiment(cfg);
}

// ---------------------------------------------------------------------------
// Aggregation and emission

struct SummaryEntry {
    int setting = 0;
    std::string mechanism;
    int count = 0;
    int failures = 0;
    double revenue_mean = 0.0, revenue_se = 0.0, revenue_sd = 0.0;
    double welfare_mean = 0.0;
    double success_mean = 0.0;
    double cost_mean = 0.0;
    double m_mean = 0.0, m_h_mean = 0.0, d_i_mean = 0.0;
};

inline std::vector<SummaryEntry> summarize(const ResultTable& table) {
    std::map<std::pair<int, std::string>, SummaryEntry> acc;
    std::map<std::pair<int, std::string>, std::vector<double>> revenues;
    for (const auto& r : table.rows) {
        auto key = std::make_pair(r.setting, r.mechanism);
        SummaryEntry& e = acc[key];
        e.setting = r.setting;
        e.mechanism = r.mechanism;
        if (r.failed) {
            ++e.failures;
            continue;
        }
        ++e.count;
        e.revenue_mean += r.revenue;
        e.welfare_mean += r.welfare;
        e.success_mean += r.success;
        e.cost_mean += r.cost;
        e.m_mean += r.m;
        e.m_h_mean += r.m_h;
        e.d_i_mean += r.d_i;
        revenues[key].push_back(r.revenue);
    }
    std::vector<SummaryEntry> out;
    for (auto& [key, e] : acc) {
        if (e.count > 0) {
            double n = e.count;
            e.revenue_mean /= n;
            e.welfare_mean /= n;
            e.success_mean /= n;
            e.cost_mean /= n;
            e.m_mean /= n;
            e.m_h_mean /= n;
            e.d_i_mean /= n;
            double var = 0.0;
            for (double r : revenues[key]) var += (r - e.revenue_mean) * (r - e.revenue_mean);
            if (e.count > 1) var /= (n - 1.0);
            e.revenue_sd = std::sqrt(var);
            e.revenue_se = e.revenue_sd / std::sqrt(n);
        }
        out.push_back(e);
    }
    return out;
}

namespace detail {

inline void append_num(std::string& s, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    s += buf;
}

}  // namespace detail

inline std::string to_csv(const ResultTable& table) {
    std::string s = "setting,mechanism,replication,seed,n,revenue,welfare,success,cost,m,m_h,D_I\n";
    for (const auto& r : table.rows) {
        s += std::to_string(r.setting);
        s += ',';
        s += r.mechanism;
        s += ',';
        s += std::to_string(r.replication);
        s += ',';
        s += std::to_string(r.seed);
        s += ',';
        s += std::to_string(r.n);
        s += ',';
        detail::append_num(s, r.revenue);
        s += ',';
        detail::append_num(s, r.welfare);
        s += ',';
        detail::append_num(s, r.success);
        s += ',';
        detail::append_num(s, r.cost);
        s += ',';
        s += std::to_string(r.m);
        s += ',';
        s += std::to_string(r.m_h);
        s += ',';
        detail::append_num(s, r.d_i);
        s += '\n';
    }
    return s;
}

inline std::string to_jsonl(const ResultTable& table) {
    std::string s;
    for (const auto& r : table.rows) {
        s += "{\"setting\":" + std::to_string(r.setting);
        s += ",\"mechanism\":\"" + r.mechanism + "\"";
        s += ",\"replication\":" + std::to_string(r.replication);
        s += ",\"seed\":" + std::to_string(r.seed);
        s += ",\"n\":" + std::to_string(r.n);
        s += ",\"revenue\":";
        detail::append_num(s, r.revenue);
        s += ",\"welfare\":";
        detail::append_num(s, r.welfare);
        s += ",\"success\":";
        detail::append_num(s, r.success);
        s += ",\"cost\":";
        detail::append_num(s, r.cost);
        s += ",\"m\":" + std::to_string(r.m);
        s += ",\"m_h\":" + std::to_string(r.m_h);
        s += ",\"D_I\":";
        detail::append_num(s, r.d_i);
        s += ",\"failed\":";
        s += r.failed ? "true" : "false";
        s += "}\n";
    }
    return s;
}

inline std::string to_summary_json(const std::vector<SummaryEntry>& summary) {
    std::string s = "[\n";
    for (std::size_t i = 0; i < summary.size(); ++i) {
        const auto& e = summary[i];
        s += "  {\"setting\":" + std::to_string(e.setting);
        s += ",\"mechanism\":\"" + e.mechanism + "\"";
        s += ",\"count\":" + std::to_string(e.count);
        s += ",\"failures\":" + std::to_string(e.failures);
        s += ",\"revenue_mean\":";
        detail::append_num(s, e.revenue_mean);
        s += ",\"revenue_se\":";
        detail::append_num(s, e.revenue_se);
        s += ",\"revenue_sd\":";
        detail::append_num(s, e.revenue_sd);
        s += ",\"welfare_mean\":";
        detail::append_num(s, e.welfare_mean);
        s += ",\"success_mean\":";
        detail::append_num(s, e.success_mean);
        s += ",\"cost_mean\":";
        detail::append_num(s, e.cost_mean);
        s += ",\"m_mean\":";
        detail::append_num(s, e.m_mean);
        s += ",\"m_h_mean\":";
        detail::append_num(s, e.m_h_mean);
        s += ",\"D_I_mean\":";
        detail::append_num(s, e.d_i_mean);
        s += i + 1 < summary.size() ? "},\n" : "}\n";
    }
    s += "]\n";
    return s;
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << contents;
}

}  // namespace wgpa
