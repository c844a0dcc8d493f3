// Command-line front end: run a seeded experiment, aggregate seed CSVs into
// mean/CI curves, or sanity-check the planner with oracle models.

#include <CLI11.hpp>
#include <cstdio>

#include "apl/aggregate.hpp"
#include "apl/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"active predicate learning for bilevel planning"};
    app.require_subcommand(1);

    // ---- run ----
    apl::RunConfig cfg;
    std::string config_file;
    bool paper_scale = false;
    // the config file loads before flag parsing, so passed flags override it
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") config_file = argv[i + 1];
    if (!config_file.empty()) {
        try {
            apl::load_config_file(cfg, config_file);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 1;
        }
    }
    auto* run = app.add_subcommand("run", "run one seeded experiment");
    std::string config_echo;
    run->add_option("--config", config_echo, "flat key = value config file (flags override)");
    run->add_option("--env", cfg.env, "pickplace1d | two_rooms | blocks");
    run->add_option("--approach", cfg.approach,
                    "main | glib | random_actions | no_actions | ask_all | ask_none | ask_randomly");
    run->add_option("--seed", cfg.seed, "run seed");
    run->add_option("--budget", cfg.budget, "exploration transition budget");
    run->add_option("--eval-tasks", cfg.eval_tasks, "held-out evaluation task count");
    run->add_option("--eval-seed", cfg.eval_seed, "evaluation bank seed");
    run->add_option("--alpha", cfg.explore.alpha, "entropy query threshold");
    run->add_option("--ensemble-size", cfg.ensemble_size, "classifier ensemble members");
    run->add_option("--epochs", cfg.epochs, "training epochs per network");
    run->add_option("--eval-every", cfg.eval_every, "evaluate every N episodes");
    run->add_option("--demos", cfg.demos, "initial demonstrations");
    run->add_option("--place-noise-sigma", cfg.noise.place_noise_sigma,
                    "placement noise sigma (pickplace1d)");
    run->add_option("--label-flip-prob", cfg.noise.label_flip_prob,
                    "expert label inversion probability");
    run->add_option("--timeout-s", cfg.planner.timeout_s, "planner timeout per task");
    run->add_option("--n-abstract", cfg.planner.n_abstract, "abstract plans per task");
    run->add_option("--n-samples", cfg.planner.n_samples, "sampler tries per plan step");
    run->add_option("--min-data", cfg.min_data, "operator min data points");
    run->add_option("--threads", cfg.threads, "training worker threads");
    run->add_option("--out", cfg.out_dir, "output directory");
    run->add_flag("--paper-scale", paper_scale, "full-scale preset (budget 1000, epochs 100000)");

    // ---- aggregate ----
    std::string agg_in, agg_out = "aggregate.csv";
    auto* agg = app.add_subcommand("aggregate", "merge per-seed results into mean/CI curves");
    agg->add_option("--in", agg_in, "directory of results_*.csv files")->required();
    agg->add_option("--out", agg_out, "output CSV path");

    // ---- sanity ----
    std::string sanity_env = "blocks";
    int sanity_tasks = 50;
    uint64_t sanity_seed = 12345;
    double sanity_timeout = 10.0;
    auto* sanity = app.add_subcommand("sanity", "oracle-model planner check");
    sanity->add_option("--env", sanity_env, "environment name");
    sanity->add_option("--tasks", sanity_tasks, "task count");
    sanity->add_option("--eval-seed", sanity_seed, "bank seed");
    sanity->add_option("--timeout-s", sanity_timeout, "planner timeout per task");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (paper_scale) cfg.apply_paper_scale();
            apl::RunOutput out = apl::run_experiment(cfg);
            std::printf("run complete: %d evaluation rounds, final solved %d/%d\n",
                        static_cast<int>(out.records.size()), out.records.back().solved,
                        cfg.eval_tasks);
            for (const auto& f : out.files) std::printf("wrote %s\n", f.c_str());
        } else if (*agg) {
            auto inputs = apl::find_results_csvs(agg_in);
            apl::aggregate_results(inputs, agg_out);
            std::printf("aggregated %d files into %s\n", static_cast<int>(inputs.size()),
                        agg_out.c_str());
        } else if (*sanity) {
            apl::PlannerConfig pcfg;
            pcfg.timeout_s = sanity_timeout;
            auto r = apl::sanity_check(sanity_env, sanity_tasks, sanity_seed, pcfg);
            std::printf("sanity %s: solved %d/%d (plan_fail %d, exec_fail %d)\n",
                        sanity_env.c_str(), r.solved, sanity_tasks, r.plan_fail, r.exec_fail);
            return r.solved == sanity_tasks ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
