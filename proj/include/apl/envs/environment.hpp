#pragma once

// Deterministic object-oriented environments: simulator, initial-state and
// goal distributions, scripted expert oracle and demonstration generator,
// plus the two noise knobs (placement noise, label flips).

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "apl/core.hpp"
#include "apl/operators.hpp"
#include "apl/rng.hpp"

namespace apl {

struct NoiseConfig {
    double place_noise_sigma = 0.0;  // PickPlace1D placement perturbation
    double label_flip_prob = 0.0;    // expert response inversion probability
};

enum class Split { explore, eval };

// Ground-truth predicate interpretations: closed-form rules over features.
struct OracleExpert : AtomClassifier {};

struct ScriptedTask {
    Task task;
    std::vector<Action> plan;
};

class Environment {
public:
    virtual ~Environment() = default;

    const std::string& name() const { return name_; }
    const std::vector<TypePtr>& types() const { return types_; }
    const std::vector<PredPtr>& predicates() const { return predicates_; }
    const std::vector<CtrlPtr>& controllers() const { return controllers_; }
    int horizon() const { return horizon_; }
    virtual const OracleExpert& oracle() const = 0;
    virtual std::shared_ptr<const OracleExpert> oracle_ptr() const = 0;

    // Inapplicable actions are no-ops returning x unchanged; malformed
    // actions are hard errors.
    virtual State step(const State& x, const Action& u, const NoiseConfig& noise, Rng& rng) const = 0;

    virtual State sample_init(Rng& rng, Split split) const = 0;
    virtual std::set<GroundAtom> sample_goal(const State& init, Rng& rng, Split split) const = 0;

    // Greedy hand-coded expert policy; empty vector = script failure.
    virtual std::vector<Action> script_solve(const Task& task, Rng& rng) const = 0;

    // Ground-truth interpretations, hand-written operators and scripted
    // samplers, for planner sanity checks.
    virtual ModelSet oracle_models() const = 0;

    State step(const State& x, const Action& u) const {
        NoiseConfig off;
        Rng dead(0);
        return step(x, u, off, dead);
    }

    // Resamples (init, goal) until the scripted expert solves within the
    // horizon and the replayed plan reaches the goal under the oracle.
    ScriptedTask sample_scripted_task(Rng& rng, Split split) const {
        for (int attempt = 0; attempt < 200; ++attempt) {
            Task task{sample_init(rng, split), {}};
            task.goal = sample_goal(task.init, rng, split);
            std::vector<Action> plan = script_solve(task, rng);
            if (plan.empty() || static_cast<int>(plan.size()) > horizon_) continue;
            State x = task.init;
            for (const auto& u : plan) x = step(x, u);
            if (holds(task.goal, x, oracle())) return {std::move(task), std::move(plan)};
        }
        throw std::runtime_error("could not sample a script-solvable task in " + name_);
    }

    Task sample_task(Rng& rng, Split split) const { return sample_scripted_task(rng, split).task; }

    CtrlPtr controller(const std::string& cname) const {
        for (const auto& c : controllers_)
            if (c->name == cname) return c;
        throw std::invalid_argument("unknown controller " + cname + " in " + name_);
    }

    PredPtr predicate(const std::string& pname) const {
        for (const auto& p : predicates_)
            if (p->name == pname) return p;
        throw std::invalid_argument("unknown predicate " + pname + " in " + name_);
    }

protected:
    std::string name_;
    std::vector<TypePtr> types_;
    std::vector<PredPtr> predicates_;   // sorted by name
    std::vector<CtrlPtr> controllers_;  // sorted by name
    int horizon_ = 0;

    void sort_decls() {
        std::sort(predicates_.begin(), predicates_.end(),
                  [](const PredPtr& a, const PredPtr& b) { return a->name < b->name; });
        std::sort(controllers_.begin(), controllers_.end(),
                  [](const CtrlPtr& a, const CtrlPtr& b) { return a->name < b->name; });
    }
};

// Expert answers: the oracle's label per queried atom, each independently
// inverted with probability label_flip_prob.
inline Response answer_query(const OracleExpert& oracle, const State& x, const Query& q,
                             const NoiseConfig& noise, Rng& rng) {
    Response r;
    r.reserve(q.size());
    for (const auto& atom : q) {
        for (const auto& o : atom.args)
            if (!x.has(o)) throw std::invalid_argument("query atom over unknown object " + o.name);
        bool label = oracle.classify(x, atom);
        if (noise.label_flip_prob > 0 && rng.bernoulli(noise.label_flip_prob)) label = !label;
        r.emplace_back(atom, label);
    }
    return r;
}

inline std::vector<State> replay(const Environment& env, const State& x0,
                                 const std::vector<Action>& plan) {
    std::vector<State> states{x0};
    for (const auto& u : plan) states.push_back(env.step(states.back(), u));
    return states;
}

inline std::vector<Demonstration> generate_demonstrations(const Environment& env, int n, Rng& rng) {
    std::vector<Demonstration> demos;
    demos.reserve(n);
    for (int i = 0; i < n; ++i) {
        ScriptedTask st = env.sample_scripted_task(rng, Split::explore);
        demos.push_back(Demonstration{std::move(st.task), std::move(st.plan)});
    }
    return demos;
}

// One positive and one negative example per predicate, selected uniformly
// from the (state, atom) pairs visited by demonstration replays.
inline std::vector<LabeledAtom> initial_label_examples(const Environment& env,
                                                       const std::vector<Demonstration>& demos,
                                                       Rng& rng) {
    std::vector<State> states;
    for (const auto& demo : demos) {
        auto traj = replay(env, demo.task.init, demo.plan);
        states.insert(states.end(), traj.begin(), traj.end());
    }
    std::vector<LabeledAtom> out;
    for (const auto& pred : env.predicates()) {
        std::vector<std::pair<const State*, GroundAtom>> pos, neg;
        for (const auto& x : states)
            for (auto& atom : ground_all_atoms({pred}, x.objects()))
                (env.oracle().classify(x, atom) ? pos : neg).emplace_back(&x, std::move(atom));
        if (pos.empty() || neg.empty())
            throw std::runtime_error("predicate " + pred->name +
                                     " lacks a " + (pos.empty() ? "positive" : "negative") +
                                     " example in demonstration traces");
        auto& p = pos[rng.uniform_int(static_cast<int>(pos.size()))];
        out.push_back(LabeledAtom{*p.first, p.second, true});
        auto& m = neg[rng.uniform_int(static_cast<int>(neg.size()))];
        out.push_back(LabeledAtom{*m.first, m.second, false});
    }
    return out;
}

// Uniform controller, uniform type-correct discrete args, uniform continuous
// args within bounds.
inline Action random_action(const Environment& env, const State& x, Rng& rng) {
    const auto& ctrls = env.controllers();
    CtrlPtr c = ctrls[rng.uniform_int(static_cast<int>(ctrls.size()))];
    Action u;
    u.controller = c;
    for (const auto& t : c->discrete_types) {
        auto candidates = x.object_set().of_type(t->name);
        if (candidates.empty()) throw std::runtime_error("no object of type " + t->name);
        u.discrete_args.push_back(candidates[rng.uniform_int(static_cast<int>(candidates.size()))]);
    }
    for (const auto& b : c->bounds) u.continuous.push_back(rng.uniform(b.first, b.second));
    return u;
}

}  // namespace apl
