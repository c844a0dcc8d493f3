#pragma once

// Experiment orchestration: initialization from demonstrations and seed
// labels, the explore -> retrain -> evaluate loop, the failure taxonomy,
// and CSV emission.

#include <array>
#include <filesystem>
#include <fstream>

#include "apl/config.hpp"
#include "apl/envs.hpp"
#include "apl/explore.hpp"
#include "apl/planner.hpp"
#include "apl/predicates.hpp"

namespace apl {

struct EpisodeRecord {
    int episode = 0;
    int transitions = 0;  // cumulative
    int solved = 0;
    long query_cost = 0;  // cumulative ground atoms asked
    std::map<std::string, long> queries_per_pred;  // cumulative
    int plan_fail = 0;
    int exec_fail = 0;
    double wall_s = 0;
};

struct CoversCase {
    int episode;
    std::array<int, 4> predicted;
    std::array<int, 4> truth;
};

struct RunOutput {
    std::vector<EpisodeRecord> records;
    std::vector<std::string> predicate_names;
    std::vector<CoversCase> covers_cases;
    std::vector<std::string> files;
};

struct LearnedModels {
    std::shared_ptr<InterpretationSet> interp;
    ModelSet models;
};

inline LearnedModels train_models(const Dataset& data, const Environment& env,
                                  const RunConfig& cfg, const Rng& run_rng,
                                  EnsembleCache* ecache, SamplerCache* scache) {
    LearnedModels out;
    out.interp = train_interpretations(data.labels, env.predicates(), cfg.ensemble_size,
                                       cfg.classifier_train(), run_rng, ecache, cfg.threads);
    auto ats = abstract_transitions(data.transitions, env.predicates(), *out.interp);
    auto parts = partition_transitions(ats);
    auto kept = surviving_partitions(parts, cfg.min_data);
    out.models.predicates = env.predicates();
    out.models.interp = out.interp;
    out.models.operators = induce_operators(kept);
    out.models.samplers = train_samplers(kept, cfg.sampler_train(), run_rng, scache);
    return out;
}

// demo transitions plus one positive and one negative labeled atom per
// predicate, harvested from the demo replays
inline Dataset initialize_dataset(const Environment& env, const RunConfig& cfg, const Rng& run_rng) {
    Dataset data;
    Rng demo_rng = run_rng.child("demos");
    auto demos = generate_demonstrations(env, cfg.demos, demo_rng);
    for (const auto& demo : demos) {
        auto states = replay(env, demo.task.init, demo.plan);
        for (size_t i = 0; i + 1 < states.size(); ++i)
            data.transitions.push_back(Transition{states[i], demo.plan[i], states[i + 1]});
    }
    Rng label_rng = run_rng.child("init_labels");
    auto labels = initial_label_examples(env, demos, label_rng);
    data.labels.insert(data.labels.end(), labels.begin(), labels.end());
    return data;
}

inline std::vector<Task> evaluation_bank(const Environment& env, const RunConfig& cfg) {
    Rng bank_rng = Rng(cfg.eval_seed).child(env.name());
    std::vector<Task> bank;
    bank.reserve(cfg.eval_tasks);
    for (int i = 0; i < cfg.eval_tasks; ++i) bank.push_back(env.sample_task(bank_rng, Split::eval));
    return bank;
}

struct EvalResult {
    int solved = 0, plan_fail = 0, exec_fail = 0;
};

// A task counts as solved when a plan is found within the timeout, fits the
// horizon, and its execution reaches the goal under the expert's
// interpretations. Goal checking during planning uses the learned models;
// the asymmetry is what makes execution failures measurable.
inline EvalResult evaluate(const ModelSet& models, const std::vector<Task>& bank,
                           const Environment& env, const RunConfig& cfg, int episode,
                           const Rng& run_rng) {
    EvalResult r;
    for (size_t i = 0; i < bank.size(); ++i) {
        Rng task_rng = run_rng.child("eval", static_cast<uint64_t>(episode) * 1000003 + i);
        Rng plan_env_rng = task_rng.child("plan_env");
        Simulator sim = [&](const State& s, const Action& u) {
            return env.step(s, u, cfg.noise, plan_env_rng);
        };
        Rng solve_rng = task_rng.child("solve");
        SolveResult res = solve(bank[i], models, cfg.planner, sim, solve_rng);
        if (res.status != SolveStatus::success ||
            static_cast<int>(res.actions.size()) > env.horizon()) {
            r.plan_fail++;
            continue;
        }
        Rng exec_rng = task_rng.child("exec");
        State x = bank[i].init;
        for (const auto& u : res.actions) x = env.step(x, u, cfg.noise, exec_rng);
        if (holds(bank[i].goal, x, env.oracle()))
            r.solved++;
        else
            r.exec_fail++;
    }
    return r;
}

// fixed held-out PickPlace1D probe states for the Covers classifier: far
// apart, touching, partial overlap, full overlap
inline std::vector<State> covers_probe_states(const PickPlace1D& env) {
    std::vector<State> out;
    Rng rng(424242);
    State base = env.sample_init(rng, Split::explore);
    Object b0 = base.object_set().objects[base.object_set().find("b0")];
    Object t0 = base.object_set().objects[base.object_set().find("t0")];
    Object rob = base.object_set().objects[base.object_set().find("rob")];
    auto fix = [&](double block_offset) {
        State x = base;
        x.set(b0, 1, 0.12);
        x.set(t0, 1, 0.06);
        x.set(t0, 0, 0.5);
        x.set(b0, 0, 0.5 + block_offset);
        x.set(rob, 2, 1.0);
        return x;
    };
    out.push_back(fix(0.4));    // far away
    out.push_back(fix(0.09));   // adjacent, no overlap of the target
    out.push_back(fix(0.045));  // partial overlap (just outside threshold 0.03)
    out.push_back(fix(0.0));    // centered, full cover
    return out;
}

inline std::string csv_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline std::string run_tag(const RunConfig& cfg) {
    return cfg.env + "_" + cfg.approach + "_seed" + std::to_string(cfg.seed);
}

// results_<tag>.csv, query_shares_<tag>.csv, failures_<tag>.csv, and for
// PickPlace1D the Covers probability/entropy grid and held-out case track
inline void emit_outputs(const RunConfig& cfg, const Environment& env, RunOutput& out,
                         const InterpretationSet& final_interp) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string tag = run_tag(cfg);

    std::string csv = "seed,episode,transitions,solved,query_cost,plan_fail,exec_fail,wall_s";
    for (const auto& p : out.predicate_names) csv += ",q_" + p;
    csv += "\n";
    for (const auto& r : out.records) {
        csv += std::to_string(cfg.seed) + "," + std::to_string(r.episode) + "," +
               std::to_string(r.transitions) + "," + std::to_string(r.solved) + "," +
               std::to_string(r.query_cost) + "," + std::to_string(r.plan_fail) + "," +
               std::to_string(r.exec_fail) + "," + csv_real(r.wall_s);
        for (const auto& p : out.predicate_names) {
            auto it = r.queries_per_pred.find(p);
            csv += "," + std::to_string(it == r.queries_per_pred.end() ? 0 : it->second);
        }
        csv += "\n";
    }
    std::string results_path = cfg.out_dir + "/results_" + tag + ".csv";
    write_file(results_path, csv);
    out.files.push_back(results_path);

    // per-predicate share of total queries (Table-1 analogue)
    const EpisodeRecord& last = out.records.back();
    std::string shares = "predicate,queries,share_pct\n";
    for (const auto& p : out.predicate_names) {
        auto it = last.queries_per_pred.find(p);
        long q = it == last.queries_per_pred.end() ? 0 : it->second;
        double pct = last.query_cost > 0 ? 100.0 * double(q) / double(last.query_cost) : 0.0;
        shares += p + "," + std::to_string(q) + "," + csv_real(pct) + "\n";
    }
    std::string shares_path = cfg.out_dir + "/query_shares_" + tag + ".csv";
    write_file(shares_path, shares);
    out.files.push_back(shares_path);

    std::string failures = "episode,transitions,solved,plan_fail,exec_fail\n";
    for (const auto& r : out.records)
        failures += std::to_string(r.episode) + "," + std::to_string(r.transitions) + "," +
                    std::to_string(r.solved) + "," + std::to_string(r.plan_fail) + "," +
                    std::to_string(r.exec_fail) + "\n";
    std::string failures_path = cfg.out_dir + "/failures_" + tag + ".csv";
    write_file(failures_path, failures);
    out.files.push_back(failures_path);

    if (cfg.env == "pickplace1d" && cfg.emit_grids) {
        PickPlace1D pp;
        Rng grid_rng(424242);
        State x = pp.sample_init(grid_rng, Split::explore);
        Object b0 = x.object_set().objects[x.object_set().find("b0")];
        Object t0 = x.object_set().objects[x.object_set().find("t0")];
        x.set(b0, 1, 0.12);
        x.set(t0, 1, 0.06);
        GroundAtom atom{pp.predicate("Covers"), {b0, t0}};
        std::string grid = "block_pose,target_pose,prob,entropy\n";
        for (int i = 0; i <= 40; ++i)
            for (int j = 0; j <= 40; ++j) {
                double bp = i / 40.0, tp = j / 40.0;
                x.set(b0, 0, bp);
                x.set(t0, 0, tp);
                double p = final_interp.prob(x, atom);
                grid += csv_real(bp) + "," + csv_real(tp) + "," + csv_real(p) + "," +
                        csv_real(entropy_of(p)) + "\n";
            }
        std::string grid_path = cfg.out_dir + "/covers_grid_" + tag + ".csv";
        write_file(grid_path, grid);
        out.files.push_back(grid_path);

        std::string cases = "episode,case0,case1,case2,case3,truth0,truth1,truth2,truth3\n";
        for (const auto& c : out.covers_cases) {
            cases += std::to_string(c.episode);
            for (int v : c.predicted) cases += "," + std::to_string(v);
            for (int v : c.truth) cases += "," + std::to_string(v);
            cases += "\n";
        }
        std::string cases_path = cfg.out_dir + "/covers_cases_" + tag + ".csv";
        write_file(cases_path, cases);
        out.files.push_back(cases_path);
    }
}

// The full loop: initialize, then explore / retrain from scratch / evaluate
// until the transition budget is consumed. The none strategy adds no
// transitions, so it runs the same episode count the budget implies.
inline RunOutput run_experiment(RunConfig cfg, bool quiet = false) {
    cfg.apply_approach();
    auto env = make_environment(cfg.env);
    RunOutput out;
    for (const auto& p : env->predicates()) out.predicate_names.push_back(p->name);

    const auto t0 = Clock::now();
    auto wall = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

    Rng run_rng(cfg.seed);
    EnsembleCache ecache;
    SamplerCache scache;
    Dataset data = initialize_dataset(*env, cfg, run_rng);
    LearnedModels lm = train_models(data, *env, cfg, run_rng, &ecache, &scache);
    std::vector<Task> bank = evaluation_bank(*env, cfg);

    std::vector<State> probes;
    const auto* pp = dynamic_cast<const PickPlace1D*>(env.get());
    if (pp) probes = covers_probe_states(*pp);
    auto track_cases = [&](int episode) {
        if (!pp) return;
        GroundAtom atom{pp->predicate("Covers"),
                        {probes[0].object_set().objects[probes[0].object_set().find("b0")],
                         probes[0].object_set().objects[probes[0].object_set().find("t0")]}};
        CoversCase c;
        c.episode = episode;
        for (int i = 0; i < 4; ++i) {
            c.predicted[i] = lm.interp->classify(probes[i], atom) ? 1 : 0;
            c.truth[i] = pp->oracle().classify(probes[i], atom) ? 1 : 0;
        }
        out.covers_cases.push_back(c);
    };

    long cum_queries = 0;
    std::map<std::string, long> cum_per_pred;
    int used = 0;

    auto record = [&](int episode) {
        EvalResult ev = evaluate(lm.models, bank, *env, cfg, episode, run_rng);
        EpisodeRecord r;
        r.episode = episode;
        r.transitions = used;
        r.solved = ev.solved;
        r.plan_fail = ev.plan_fail;
        r.exec_fail = ev.exec_fail;
        r.query_cost = cum_queries;
        r.queries_per_pred = cum_per_pred;
        r.wall_s = wall();
        out.records.push_back(r);
        track_cases(episode);
        if (!quiet)
            std::fprintf(stderr, "[%s] episode %d transitions %d solved %d/%d queries %ld\n",
                         run_tag(cfg).c_str(), episode, used, ev.solved,
                         static_cast<int>(bank.size()), cum_queries);
    };

    record(0);  // initialization-only models

    const bool no_actions = cfg.explore.strategy == Strategy::none;
    const int total_episodes =
        no_actions ? (cfg.budget + env->horizon() - 1) / env->horizon() : -1;

    int episode = 0;
    while (no_actions ? episode < total_episodes : used < cfg.budget) {
        ++episode;
        Rng episode_rng = run_rng.child("episode", static_cast<uint64_t>(episode));
        EpisodeStats stats = run_episode(*env, lm.models, *lm.interp, cfg.explore, cfg.planner,
                                         cfg.noise, data, cfg.budget - used, episode_rng);
        used += stats.transitions;
        cum_queries += stats.queries;
        for (const auto& [p, n] : stats.queries_per_pred) cum_per_pred[p] += n;

        lm = train_models(data, *env, cfg, run_rng, &ecache, &scache);

        bool last = no_actions ? episode == total_episodes : used >= cfg.budget;
        if (episode % cfg.eval_every == 0 || last) record(episode);
    }

    emit_outputs(cfg, *env, out, *lm.interp);
    return out;
}

// oracle-model planner check: ground-truth interpretations, hand-written
// operators, scripted samplers
inline EvalResult sanity_check(const std::string& env_name, int tasks, uint64_t eval_seed,
                               const PlannerConfig& pcfg, bool quiet = false) {
    auto env = make_environment(env_name);
    ModelSet models = env->oracle_models();
    RunConfig cfg;
    cfg.env = env_name;
    cfg.eval_tasks = tasks;
    cfg.eval_seed = eval_seed;
    cfg.planner = pcfg;
    std::vector<Task> bank = evaluation_bank(*env, cfg);
    EvalResult r = evaluate(models, bank, *env, cfg, 0, Rng(eval_seed));
    if (!quiet)
        std::fprintf(stderr, "[sanity %s] solved %d/%d (plan_fail %d, exec_fail %d)\n",
                     env_name.c_str(), r.solved, tasks, r.plan_fail, r.exec_fail);
    return r;
}

}  // namespace apl
