// Command-line front end: single auctions, experiment sweeps, mechanism
// verification and canned reproduction studies.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wgpa/json_io.hpp"
#include "wgpa/wgpa.hpp"

namespace {

using namespace wgpa;

std::vector<double> parse_bids(const std::string& text) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ',')) out.push_back(std::stod(token));
    return out;
}

void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

struct CommonOpts {
    std::string out_dir = "out";
    std::uint64_t seed = 20240001;
    int replications = -1;  // -1: keep config/default
    int jobs = 1;
    std::string scale = "desk";
};

void apply_common(ExperimentConfig& cfg, const CommonOpts& opts) {
    cfg.seed = opts.seed;
    cfg.jobs = opts.jobs;
    if (opts.scale == "paper") {
        cfg.replications = 1000;
        cfg.n_max = 20;
    }
    if (opts.replications > 0) cfg.replications = opts.replications;
}

void write_table(const ResultTable& table, const std::string& dir, const std::string& stem) {
    ensure_dir(dir);
    write_file(dir + "/" + stem + ".csv", to_csv(table));
    write_file(dir + "/" + stem + ".jsonl", to_jsonl(table));
    write_file(dir + "/" + stem + "_summary.json", to_summary_json(summarize(table)));
}

void print_summary(const ResultTable& table) {
    std::printf("%-8s %-15s %8s %10s %10s %9s %7s %7s %7s\n", "setting", "mechanism", "reps",
                "revenue", "welfare", "success", "m", "m_h", "D_I");
    for (const auto& e : summarize(table)) {
        std::printf("%-8d %-15s %8d %10.4f %10.4f %9.4f %7.3f %7.3f %7.3f", e.setting,
                    e.mechanism.c_str(), e.count, e.revenue_mean, e.welfare_mean, e.success_mean,
                    e.m_mean, e.m_h_mean, e.d_i_mean);
        if (e.failures > 0) std::printf("  [%d failed]", e.failures);
        std::printf("\n");
    }
}

// Fixed-offset variant of the two-provider example allocation: simultaneous
// below the gradual threshold, second recruit at a fixed 0.3 offset inside
// the band, single recruit past the drop threshold.
Allocator fixed_band_allocator(double gradual_at, double drop_at, double offset) {
    return [=](const BidVector& bids, const Environment& env) {
        double b1 = bids[0], b2 = bids[1];
        int lo = b1 <= b2 ? 1 : 2, hi = lo == 1 ? 2 : 1;
        double blo = std::min(b1, b2), bhi = std::max(b1, b2);
        std::vector<StrategyEntry> entries;
        if (bhi <= gradual_at) {
            entries = {{lo, 0.0}, {hi, 0.0}};
        } else if (bhi <= drop_at) {
            entries = {{lo, 0.0}, {hi, offset}};
        } else if (blo <= drop_at) {
            entries = {{lo, 0.0}};
        }
        return make_strategy(std::move(entries), env);
    };
}

Environment example2_environment() {
    return make_environment(Task{4.0, 1.0},
                            {{1, DurationModel::exponential(1.0), CostModel::uniform(0.0, 1.0), 0.2},
                             {2, DurationModel::exponential(1.0), CostModel::uniform(0.0, 1.0), 0.3}});
}

int cmd_run_auction(const std::string& env_path, std::string bids_text, std::string mech_name,
                    std::uint64_t seed, const std::string& out_path, double grid_step,
                    bool refine) {
    json ej = read_json_file(env_path);
    Environment env = environment_from_json(ej, seed);
    if (bids_text.empty() && ej.contains("bids")) bids_text = ej.at("bids").dump();
    if (mech_name.empty()) mech_name = ej.value("mechanism", "wgpa");

    BidVector bids;
    if (!bids_text.empty()) {
        std::string t = bids_text;
        t.erase(std::remove_if(t.begin(), t.end(), [](char c) { return c == '[' || c == ']' || c == ' '; }),
                t.end());
        bids = parse_bids(t);
    } else {
        for (int i = 1; i <= env.size(); ++i) bids.push_back(env.provider(i).true_cost);
    }

    PaymentConfig pcfg;
    pcfg.grid_step = grid_step;
    pcfg.refine_breakpoints = refine;
    Mechanism mech = make_mechanism(mech_name, TimeOptConfig{}, pcfg, seed);
    MechanismOutcome outcome = run_mechanism(mech, bids, env);
    json out = outcome_to_json(outcome, env);
    out["mechanism"] = mech.name;
    std::string text = out.dump(2) + "\n";
    if (out_path.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_file(out_path, text);
    return 0;
}

int cmd_verify(const std::string& env_path, const std::string& mech_name, std::uint64_t seed,
               bool quick, bool force_mc) {
    Environment env = load_environment(env_path, seed);
    Mechanism mech = make_mechanism(mech_name, TimeOptConfig{}, PaymentConfig{}, seed);
    VerifySuiteConfig suite;
    suite.seed = seed;
    suite.integration.seed = derive_seed(seed, 0, 7);
    if (env.size() <= 3 && !force_mc) suite.integration.mode = OpponentIntegration::Mode::quadrature;
    if (quick) {
        suite.integration.n_samples = 400;
        suite.integration.points_per_dim = 24;
        suite.revenue_samples = 100;
    }
    VerificationReport report = verify_mechanism(mech, env, suite);
    for (const auto& c : report.checks)
        std::printf("%s %-28s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    std::printf("%s mechanism %s on %s\n", report.pass ? "PASS" : "FAIL", mech.name.c_str(),
                env_path.c_str());
    return report.pass ? 0 : 1;
}

int reproduce_example2(const std::string& out_dir) {
    Environment env = example2_environment();
    const double phi_threshold = 0.465;  // drop boundary reference
    json report;

    // simultaneous benchmark: recruit-both boundary at equal bids
    {
        auto both_recruited = [&](double b) {
            std::vector<double> phi = {2.0 * b, 2.0 * b};
            return simultaneous_search(phi, env).strategy.size() == 2;
        };
        double lo = 0.30, hi = 0.60;
        for (int it = 0; it < 45; ++it) {
            double mid = 0.5 * (lo + hi);
            (both_recruited(mid) ? lo : hi) = mid;
        }
        double boundary = 0.5 * (lo + hi);
        std::printf("simultaneous recruit-both boundary: %.4f (reference %.3f)\n", boundary,
                    phi_threshold);
        report["bm2_boundary"] = boundary;
    }

    // simultaneous benchmark: payments inside the recruit-both region
    {
        PaymentConfig pcfg;
        pcfg.grid_step = 1.0 / 400.0;
        pcfg.refine_breakpoints = true;
        Mechanism bm2 = make_bm2(pcfg);
        MechanismOutcome o = run_mechanism(bm2, {0.2, 0.3}, env);
        std::printf("simultaneous payments at bids (0.2,0.3): (%.4f, %.4f) (reference 0.465)\n",
                    o.payments.amounts[0], o.payments.amounts[1]);
        report["bm2_payments"] = {o.payments.amounts[0], o.payments.amounts[1]};
    }

    // gradual boundary of the exact mechanism at equal bids
    {
        TimeOptConfig tcfg;
        auto staggered = [&](double b) {
            std::vector<double> phi = {2.0 * b, 2.0 * b};
            AllocationResult r = bnb_search(phi, env, tcfg);
            return r.strategy.size() == 2 && r.strategy.entries[1].time > 0.005;
        };
        double lo = 0.20, hi = 0.40;
        for (int it = 0; it < 30; ++it) {
            double mid = 0.5 * (lo + hi);
            (staggered(mid) ? hi : lo) = mid;
        }
        double boundary = 0.5 * (lo + hi);
        std::printf("gradual-recruitment boundary: %.4f (reference 0.27)\n", boundary);
        report["gradual_boundary"] = boundary;
    }

    // fixed-offset variant: invocation probability and threshold payments
    {
        Allocator fixed = fixed_band_allocator(0.270671, 0.465088, 0.3);
        RecruitmentStrategy s = fixed({0.2, 0.3}, env);
        double p2 = invocation_probability(s, 2, env);
        std::printf("second-recruit invocation probability: %.6f (reference 0.740818)\n", p2);
        report["second_invocation"] = p2;

        PaymentConfig pcfg;
        pcfg.grid_step = 1.0 / 400.0;
        pcfg.refine_breakpoints = true;
        double t1 = weighted_threshold_payment(fixed, env, {0.2, 0.2}, 1, pcfg);
        double t2 = weighted_threshold_payment(fixed, env, {0.2, 0.2}, 2, pcfg);
        std::printf("variant payments at bids (0.2,0.2): (%.4f, %.4f) (reference 0.414)\n", t1, t2);
        report["variant_payments"] = {t1, t2};
    }

    ensure_dir(out_dir);
    write_file(out_dir + "/example2.json", report.dump(2) + "\n");
    std::printf("wrote %s/example2.json\n", out_dir.c_str());
    return 0;
}

int reproduce_settings(const CommonOpts& opts) {
    ExperimentConfig cfg;
    cfg.name = "settings";
    cfg.time_opt.n_starts = 3;
    cfg.time_opt.max_iters = 150;
    cfg.time_opt.tol = 1e-7;
    cfg.payment.grid_step = 1.0 / 24.0;
    cfg.payment.refine_breakpoints = true;
    apply_common(cfg, opts);
    ResultTable table = run_experiment(cfg);
    write_table(table, opts.out_dir, "settings");
    print_summary(table);

    auto mean_of = [&](int setting, const std::string& mech) {
        for (const auto& e : summarize(table))
            if (e.setting == setting && e.mechanism == mech) return e.revenue_mean;
        return 0.0;
    };
    for (int s = 1; s <= 4; ++s) {
        double base = mean_of(s, "bm1");
        if (base > 0.0)
            std::printf("setting %d: improvement over single-provider benchmark: %.1f%%\n", s,
                        100.0 * (mean_of(s, "wgpa") / base - 1.0));
    }
    return 0;
}

int reproduce_heuristic_ratio(const CommonOpts& opts) {
    const int instances = opts.replications > 0 ? opts.replications : 200;
    ExperimentSetting settings[4] = {{1, 10.0, 3.0}, {2, 4.0, 3.0}, {3, 10.0, 1.0}, {4, 4.0, 1.0}};
    GeneratorSpec gen;
    TimeOptConfig tcfg;

    std::string csv = "instance,setting,n,objective_exact,objective_heuristic,ratio,ms_exact,"
                      "ms_heuristic,nodes_exact,nodes_heuristic\n";
    double worst = 1.0, sum_ratio = 0.0, sum_t_exact = 0.0, sum_t_heur = 0.0;
    double sum_t_exact8 = 0.0, sum_t_heur8 = 0.0;
    int count8 = 0;

    for (int k = 0; k < instances; ++k) {
        const ExperimentSetting& st = settings[k % 4];
        Task task{st.value, st.deadline};
        Rng env_rng = make_stream(opts.seed, static_cast<std::uint64_t>(k), 0);
        Rng cost_rng = make_stream(opts.seed, static_cast<std::uint64_t>(k), 1);
        int n = 2 + static_cast<int>(env_rng() % 7u);
        Environment env = generate_environment(gen, task, n, env_rng, cost_rng);
        std::vector<double> phi(static_cast<std::size_t>(n));
        for (int i = 1; i <= n; ++i)
            phi[static_cast<std::size_t>(i) - 1] =
                virtual_cost(env.provider(i).cost_model, env.provider(i).true_cost);

        auto t0 = std::chrono::steady_clock::now();
        AllocationResult exact = bnb_search(phi, env, tcfg);
        auto t1 = std::chrono::steady_clock::now();
        AllocationResult heur = heuristic_search(phi, env, tcfg);
        auto t2 = std::chrono::steady_clock::now();
        double ms_exact = std::chrono::duration<double, std::milli>(t1 - t0).count();
        double ms_heur = std::chrono::duration<double, std::milli>(t2 - t1).count();

        double ratio = exact.objective > 1e-12 ? heur.objective / exact.objective : 1.0;
        worst = std::min(worst, ratio);
        sum_ratio += ratio;
        sum_t_exact += ms_exact;
        sum_t_heur += ms_heur;
        if (n == 8) {
            sum_t_exact8 += ms_exact;
            sum_t_heur8 += ms_heur;
            ++count8;
        }
        char line[256];
        std::snprintf(line, sizeof line, "%d,%d,%d,%.12g,%.12g,%.8f,%.3f,%.3f,%lld,%lld\n", k,
                      st.id, n, exact.objective, heur.objective, ratio, ms_exact, ms_heur,
                      static_cast<long long>(exact.nodes), static_cast<long long>(heur.nodes));
        csv += line;
    }

    ensure_dir(opts.out_dir);
    write_file(opts.out_dir + "/heuristic_ratio.csv", csv);
    std::printf("instances: %d\n", instances);
    std::printf("objective ratio: mean %.5f, worst %.5f\n", sum_ratio / instances, worst);
    std::printf("mean wall time: exact %.2f ms, heuristic %.2f ms (ratio %.2f)\n",
                sum_t_exact / instances, sum_t_heur / instances,
                sum_t_heur > 0 ? sum_t_exact / sum_t_heur : 0.0);
    if (count8 > 0)
        std::printf("n=8 wall time: exact %.2f ms, heuristic %.2f ms over %d instances\n",
                    sum_t_exact8 / count8, sum_t_heur8 / count8, count8);
    return 0;
}

int reproduce_robustness(const CommonOpts& opts) {
    double deltas[4] = {0.0, 5.0, 10.0, 20.0};
    for (double d : deltas) {
        ExperimentConfig cfg;
        cfg.name = "robustness";
        cfg.settings = {{1, 10.0, 3.0}};
        cfg.mechanisms = {"wgpa", "bm1"};
        cfg.replications = 60;
        cfg.time_opt.n_starts = 3;
        cfg.time_opt.max_iters = 150;
        cfg.time_opt.tol = 1e-7;
        cfg.payment.grid_step = 1.0 / 24.0;
        cfg.payment.refine_breakpoints = true;
        apply_common(cfg, opts);
        ResultTable table = run_robustness(cfg, d);
        char stem[32];
        std::snprintf(stem, sizeof stem, "robustness_%02.0f", d);
        write_table(table, opts.out_dir, stem);
        for (const auto& e : summarize(table))
            std::printf("delta %5.1f%%  %-6s revenue mean %.4f sd %.4f\n", d, e.mechanism.c_str(),
                        e.revenue_mean, e.revenue_sd);
    }
    return 0;
}

int reproduce_multimodal(const CommonOpts& opts) {
    ExperimentConfig cfg;
    cfg.name = "multimodal";
    cfg.settings = {{1, 1.35, 1.0}};
    cfg.generator.kind = GeneratorKind::Multimodal;
    cfg.n_min = cfg.n_max = 2;
    cfg.mechanisms = {"wgpa", "bm2"};
    cfg.payment.grid_step = 1.0 / 400.0;
    cfg.payment.refine_breakpoints = true;
    apply_common(cfg, opts);
    ResultTable table = run_experiment(cfg);
    write_table(table, opts.out_dir, "multimodal");
    print_summary(table);

    double s_wgpa = 0, s_bm2 = 0, r_wgpa = 0, r_bm2 = 0;
    for (const auto& e : summarize(table)) {
        if (e.mechanism == "wgpa") {
            s_wgpa = e.success_mean;
            r_wgpa = e.revenue_mean;
        } else if (e.mechanism == "bm2") {
            s_bm2 = e.success_mean;
            r_bm2 = e.revenue_mean;
        }
    }
    if (s_bm2 > 0)
        std::printf("gradual vs simultaneous: success x%.2f, revenue x%.2f\n", s_wgpa / s_bm2,
                    r_bm2 != 0 ? r_wgpa / r_bm2 : 0.0);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradual service-procurement auction simulator"};
    app.require_subcommand(1);

    // run-auction
    auto* run = app.add_subcommand("run-auction", "run one auction on an environment file");
    std::string env_path, bids_text, mech_name = "wgpa", out_path;
    std::uint64_t seed = 20240001;
    double grid_step = 0.0;
    bool refine = false;
    run->add_option("--env", env_path, "environment JSON file")->required();
    run->add_option("--bids", bids_text, "comma-separated bids (default: true costs)");
    run->add_option("--mechanism", mech_name, "wgpa|wgpa-heuristic|bm1|bm2|bm3|bm4");
    run->add_option("--seed", seed, "seed for sampling and pairing");
    run->add_option("--out", out_path, "output JSON file (default: stdout)");
    run->add_option("--payment-grid-step", grid_step, "payment integration step");
    run->add_flag("--refine-breakpoints", refine, "localise payment-curve jumps");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run an experiment sweep");
    std::string config_path;
    CommonOpts exp_opts;
    std::vector<std::string> mech_filter;
    std::vector<int> setting_filter;
    int fixed_n = 0;
    double exp_grid_step = 0.0;
    exp->add_option("--config", config_path, "experiment config JSON");
    exp->add_option("--out-dir", exp_opts.out_dir, "artifact directory");
    exp->add_option("--seed", exp_opts.seed, "master seed");
    exp->add_option("--replications", exp_opts.replications, "replications per setting");
    exp->add_option("--jobs", exp_opts.jobs, "worker threads");
    exp->add_option("--mechanism", mech_filter, "mechanism subset (repeatable)");
    exp->add_option("--setting", setting_filter, "setting id subset (repeatable)");
    exp->add_option("--n", fixed_n, "fix the provider count");
    exp->add_option("--payment-grid-step", exp_grid_step, "payment integration step");
    exp->add_option("--scale", exp_opts.scale, "desk|paper")
        ->check(CLI::IsMember({"desk", "paper"}));

    // verify
    auto* ver = app.add_subcommand("verify", "verify mechanism properties on an environment");
    std::string ver_env, ver_mech = "wgpa";
    std::uint64_t ver_seed = 20240001;
    bool quick = false, force_mc = false;
    ver->add_option("--env", ver_env, "environment JSON file")->required();
    ver->add_option("--mechanism", ver_mech, "mechanism to verify");
    ver->add_option("--seed", ver_seed, "suite seed");
    ver->add_flag("--quick", quick, "smaller sample sizes");
    ver->add_flag("--mc", force_mc, "force Monte Carlo opponent integration");

    // reproduce
    auto* rep = app.add_subcommand("reproduce", "rerun a canned study");
    std::string case_name;
    CommonOpts rep_opts;
    rep->add_option("case", case_name, "example2|settings|heuristic-ratio|robustness|multimodal")
        ->required()
        ->check(CLI::IsMember({"example2", "settings", "heuristic-ratio", "robustness",
                               "multimodal"}));
    rep->add_option("--out-dir", rep_opts.out_dir, "artifact directory");
    rep->add_option("--seed", rep_opts.seed, "master seed");
    rep->add_option("--replications", rep_opts.replications, "override replication count");
    rep->add_option("--jobs", rep_opts.jobs, "worker threads");
    rep->add_option("--scale", rep_opts.scale, "desk|paper")
        ->check(CLI::IsMember({"desk", "paper"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run_auction(env_path, bids_text, mech_name, seed, out_path, grid_step,
                                   refine);
        if (exp->parsed()) {
            ExperimentConfig cfg =
                config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
            if (config_path.empty()) {
                cfg.time_opt.n_starts = 3;
                cfg.time_opt.max_iters = 150;
                cfg.time_opt.tol = 1e-7;
                cfg.payment.grid_step = 1.0 / 24.0;
                cfg.payment.refine_breakpoints = true;
            }
            apply_common(cfg, exp_opts);
            if (!mech_filter.empty()) cfg.mechanisms = mech_filter;
            if (!setting_filter.empty()) {
                std::vector<ExperimentSetting> keep;
                for (const auto& s : cfg.settings)
                    if (std::find(setting_filter.begin(), setting_filter.end(), s.id) !=
                        setting_filter.end())
                        keep.push_back(s);
                if (keep.empty()) throw std::invalid_argument("setting filter matched nothing");
                cfg.settings = keep;
            }
            if (fixed_n > 0) cfg.n_min = cfg.n_max = fixed_n;
            if (exp_grid_step > 0.0) cfg.payment.grid_step = exp_grid_step;
            ResultTable table = run_experiment(cfg);
            write_table(table, exp_opts.out_dir, "results");
            print_summary(table);
            std::printf("wrote %s/results.{csv,jsonl} and %s/results_summary.json\n",
                        exp_opts.out_dir.c_str(), exp_opts.out_dir.c_str());
            return 0;
        }
        if (ver->parsed()) return cmd_verify(ver_env, ver_mech, ver_seed, quick, force_mc);
        if (rep->parsed()) {
            if (case_name == "example2") return reproduce_example2(rep_opts.out_dir);
            if (case_name == "settings") return reproduce_settings(rep_opts);
            if (case_name == "heuristic-ratio") return reproduce_heuristic_ratio(rep_opts);
            if (case_name == "robustness") return reproduce_robustness(rep_opts);
            if (case_name == "multimodal") return reproduce_multimodal(rep_opts);
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 2;
    }
    return 0;
}
