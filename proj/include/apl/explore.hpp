#pragma once

// Exploration: query policies (entropy-threshold, all, none, random) and
// action selection strategies (entropy lookahead, goal-literal babbling,
// random, none), composed into the per-episode query/act loop.

#include "apl/envs/environment.hpp"
#include "apl/planner.hpp"
#include "apl/predicates.hpp"

namespace apl {

enum class Strategy { lookahead, glib, random, none };
enum class QueryPolicy { entropy, all, none, random };

struct ExploreConfig {
    Strategy strategy = Strategy::lookahead;
    QueryPolicy query_policy = QueryPolicy::entropy;
    double alpha = 0.05;
    int max_trajs = 16;
    int max_horizon = -1;  // -1: episode length
    double random_query_prob = 0.03;
    int glib_retries = 10;
    double glib_timeout_s = 1.0;
};

// all ground atoms whose interpretation in x is sufficiently uncertain
inline Query query_entropy(const State& x, const InterpretationSet& interp,
                           const std::vector<PredPtr>& preds, double alpha) {
    Query q;
    for (auto& atom : ground_all_atoms(preds, x.objects()))
        if (interp.entropy(x, atom) > alpha) q.insert(std::move(atom));
    return q;
}

inline Query query_for_policy(const State& x, const InterpretationSet& interp,
                              const std::vector<PredPtr>& preds, const ExploreConfig& cfg,
                              Rng& rng) {
    Query q;
    switch (cfg.query_policy) {
        case QueryPolicy::entropy:
            return query_entropy(x, interp, preds, cfg.alpha);
        case QueryPolicy::all:
            for (auto& atom : ground_all_atoms(preds, x.objects())) q.insert(std::move(atom));
            return q;
        case QueryPolicy::none:
            return q;
        case QueryPolicy::random:
            for (auto& atom : ground_all_atoms(preds, x.objects()))
                if (rng.bernoulli(cfg.random_query_prob)) q.insert(std::move(atom));
            return q;
    }
    return q;
}

// Lookahead action selection: sample maxTrajs model-rollout trajectories,
// score every visited state by its total ground-atom entropy, and return the
// actions of the argmax trajectory (first sampled wins ties). A step with no
// applicable operator ends that trajectory; if every trajectory is empty the
// fallback is a single uniformly random action.
inline std::vector<Action> lookahead(const State& x0, const InterpretationSet& interp,
                                     const ModelSet& models,
                                     const std::vector<GroundOperator>& ground_ops,
                                     const Simulator& sim, const Environment& env, int max_trajs,
                                     int max_horizon, Rng& rng) {
    const auto universe = ground_all_atoms(models.predicates, x0.objects());
    std::vector<Action> best;
    double best_score = -1.0;
    for (int traj = 0; traj < max_trajs; ++traj) {
        State x = x0;
        double score = 0;
        std::vector<Action> actions;
        for (int step = 0; step < max_horizon; ++step) {
            AbstractState s = abstract_state(x, models.predicates, interp);
            std::vector<const GroundOperator*> applicable;
            for (const auto& g : ground_ops)
                if (g.applicable(s)) applicable.push_back(&g);
            if (applicable.empty()) break;
            const GroundOperator* a =
                applicable[rng.uniform_int(static_cast<int>(applicable.size()))];
            Action u = a->action(models.samplers.at(a->op_index)(x, a->binding, rng));
            x = sim(x, u);
            for (const auto& atom : universe) score += interp.entropy(x, atom);
            actions.push_back(std::move(u));
        }
        if (!actions.empty() && score > best_score) {
            best_score = score;
            best = std::move(actions);
        }
    }
    if (best.empty()) best.push_back(random_action(env, x0, rng));
    return best;
}

// Goal-literal babbling: plan to a single currently-false ground atom with a
// reduced planner budget, falling back to a random action when every babble
// fails.
inline std::vector<Action> glib_select(const State& x0, const InterpretationSet& interp,
                                       const ModelSet& models, const Environment& env,
                                       const PlannerConfig& planner_cfg, const ExploreConfig& cfg,
                                       const Simulator& sim, Rng& rng) {
    AbstractState s0 = abstract_state(x0, models.predicates, interp);
    std::vector<GroundAtom> candidates;
    for (auto& atom : ground_all_atoms(models.predicates, x0.objects()))
        if (!s0.count(atom)) candidates.push_back(std::move(atom));
    rng.shuffle(candidates);
    if (static_cast<int>(candidates.size()) > cfg.glib_retries)
        candidates.resize(cfg.glib_retries);

    PlannerConfig babble_cfg = planner_cfg;
    babble_cfg.timeout_s = cfg.glib_timeout_s;
    for (size_t i = 0; i < candidates.size(); ++i) {
        Rng solve_rng = rng.child("glib_solve", rng.u64());
        SolveResult res = solve(Task{x0, {candidates[i]}}, models, babble_cfg, sim, solve_rng);
        if (res.status == SolveStatus::success && !res.actions.empty()) return res.actions;
    }
    return {random_action(env, x0, rng)};
}

struct EpisodeStats {
    int transitions = 0;
    long queries = 0;
    std::map<std::string, long> queries_per_pred;
    int states_queried = 0;
};

// One exploration episode: reset, then for up to `steps` steps query the
// expert about the current state and execute the strategy's next action,
// recording responses and transitions into the dataset. Lookahead plans run
// open loop to completion, with a query at every visited state. The `none`
// strategy queries only the initial state and takes no actions.
inline EpisodeStats run_episode(const Environment& env, const ModelSet& models,
                                const InterpretationSet& interp, const ExploreConfig& ecfg,
                                const PlannerConfig& pcfg, const NoiseConfig& noise,
                                Dataset& data, int budget_left, const Rng& episode_rng) {
    EpisodeStats stats;
    Rng reset_rng = episode_rng.child("reset");
    Rng env_rng = episode_rng.child("env");
    Rng strat_rng = episode_rng.child("strategy");
    Rng query_rng = episode_rng.child("query");

    State x = env.sample_init(reset_rng, Split::explore);
    const int steps = std::min(env.horizon(), budget_left);

    // the agent plans with the known simulator, noise included
    Simulator sim = [&env, &noise, &strat_rng](const State& s, const Action& u) {
        return env.step(s, u, noise, strat_rng);
    };
    std::vector<GroundOperator> ground_ops;
    bool grounded = false;
    std::vector<Action> plan;
    size_t plan_next = 0;

    for (int t = 0; t < steps; ++t) {
        Query q = query_for_policy(x, interp, env.predicates(), ecfg, query_rng);
        Response resp = answer_query(env.oracle(), x, q, noise, env_rng);
        stats.states_queried++;
        for (auto& [atom, label] : resp) {
            stats.queries++;
            stats.queries_per_pred[atom.pred->name]++;
            data.labels.push_back(LabeledAtom{x, atom, label});
        }
        if (ecfg.strategy == Strategy::none) break;

        if (plan_next >= plan.size()) {
            plan.clear();
            plan_next = 0;
            int horizon = steps - t;
            if (ecfg.max_horizon > 0) horizon = std::min(horizon, ecfg.max_horizon);
            switch (ecfg.strategy) {
                case Strategy::lookahead:
                    if (!grounded) {
                        ground_ops = ground_operators(models.operators, x.objects());
                        grounded = true;
                    }
                    plan = lookahead(x, interp, models, ground_ops, sim, env, ecfg.max_trajs,
                                     horizon, strat_rng);
                    break;
                case Strategy::glib:
                    plan = glib_select(x, interp, models, env, pcfg, ecfg, sim, strat_rng);
                    break;
                case Strategy::random:
                    plan = {random_action(env, x, strat_rng)};
                    break;
                case Strategy::none:
                    break;
            }
            if (plan.empty()) plan = {random_action(env, x, strat_rng)};
        }
        Action u = plan[plan_next++];
        State x2 = env.step(x, u, noise, env_rng);
        data.transitions.push_back(Transition{x, u, x2});
        stats.transitions++;
        x = std::move(x2);
    }
    return stats;
}

}  // namespace apl
