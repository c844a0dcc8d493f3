#pragma once

// Robotic blocks world: pick blocks, stack them, put them on the table.
// Exploration uses 3-4 blocks; evaluation tasks use 5-6.

#include "apl/envs/stacking.hpp"

namespace apl {

class BlocksEnv : public StackingEnvBase {
public:
    BlocksEnv() {
        robot_t_ = make_type("robot", {"x", "y", "z", "fingers"});
        on_ = make_predicate("On", {block_t_, block_t_});
        on_table_ = make_predicate("OnTable", {block_t_});
        gripper_open_ = make_predicate("GripperOpen", {robot_t_});
        holding_ = make_predicate("Holding", {robot_t_, block_t_});
        clear_ = make_predicate("Clear", {block_t_});
        pick_c_ = make_controller("Pick", {robot_t_, block_t_}, {});
        stack_c_ = make_controller("Stack", {robot_t_, block_t_}, {});
        put_c_ = make_controller("PutOnTable", {robot_t_}, {{0.0, 1.0}, {0.0, 1.0}});

        name_ = "blocks";
        types_ = {block_t_, robot_t_};
        predicates_ = {on_, on_table_, gripper_open_, holding_, clear_};
        controllers_ = {pick_c_, stack_c_, put_c_};
        horizon_ = 20;
        sort_decls();
        oracle_ = std::make_shared<Oracle>();
    }

    using Environment::step;

    const OracleExpert& oracle() const override { return *oracle_; }
    std::shared_ptr<const OracleExpert> oracle_ptr() const override { return oracle_; }

    struct Oracle : OracleExpert {
        bool classify(const State& x, const GroundAtom& atom) const override {
            const std::string& n = atom.pred->name;
            if (n == "On") return r_on(x, atom.args[0], atom.args[1]) && !(atom.args[0] == atom.args[1]);
            if (n == "OnTable") return r_on_table(x, atom.args[0]);
            if (n == "GripperOpen") return r_gripper_open(x, atom.args[0]);
            if (n == "Holding") return r_holding(x, atom.args[1]);
            if (n == "Clear") return r_clear(x, atom.args[0]);
            throw std::invalid_argument("unknown predicate " + n);
        }
    };

    State step(const State& x, const Action& u, const NoiseConfig&, Rng&) const override {
        check_action(u);
        const std::string& c = u.controller->name;
        Object rob = robot_of(x);
        if (c == "Pick") {
            const Object& b = u.discrete_args[1];
            if (!r_gripper_open(x, rob) || !r_clear(x, b)) return x;
            return do_pick(x, rob, b, true);
        }
        if (c == "Stack") {
            const Object& dest = u.discrete_args[1];
            auto held = held_block(x);
            if (!held || held->name == dest.name || !r_clear(x, dest)) return x;
            return do_stack(x, rob, *held, dest, true);
        }
        if (c == "PutOnTable") {
            auto held = held_block(x);
            if (!held) return x;
            double px = kBs / 2 + u.continuous[0] * (1.0 - kBs);
            double py = kBs / 2 + u.continuous[1] * (1.0 - kBs);
            return do_put(x, rob, *held, px, py, true);
        }
        throw std::invalid_argument("unknown controller " + c + " in blocks");
    }

    State sample_init(Rng& rng, Split split) const override {
        int n = (split == Split::eval ? 5 : 3) + (rng.bernoulli(0.5) ? 1 : 0);
        std::vector<Object> objs;
        for (int i = 0; i < n; ++i) objs.push_back(Object{"b" + std::to_string(i), block_t_});
        Object rob{"rob", robot_t_};
        objs.push_back(rob);
        auto roster = std::make_shared<const ObjectSet>(objs);
        State x(roster, std::vector<double>(roster->total_dim, 0.0));
        x.set(rob, 0, 0.5);
        x.set(rob, 1, 0.5);
        x.set(rob, 2, kHover);
        x.set(rob, 3, 1.0);
        place_piles(x, x.object_set().of_type("block"), rng, 0.1, 0.9);
        return x;
    }

    std::set<GroundAtom> sample_goal(const State& init, Rng& rng, Split) const override {
        auto blocks = init.object_set().of_type("block");
        int n = static_cast<int>(blocks.size());
        return sample_tower_goal(init, blocks, rng, 2, n, n, on_);
    }

    std::vector<Action> script_solve(const Task& task, Rng& rng) const override {
        State x = task.init;
        std::vector<Action> plan;
        if (!script_towers(x, plan, task.goal, rng)) return {};
        return plan;
    }

    ModelSet oracle_models() const override;

protected:
    Action make_pick(const Object& rob, const Object& b) const override {
        return Action{pick_c_, {rob, b}, {}};
    }
    Action make_stack(const Object& rob, const Object& c) const override {
        return Action{stack_c_, {rob, c}, {}};
    }
    Action make_put(const Object& rob, const State& x, Rng& rng) const override {
        auto [u, v] = free_uv(x, rng, kBs / 2, 1.0 - kBs / 2);
        return Action{put_c_, {rob}, {u, v}};
    }

    TypePtr robot_t_;
    PredPtr on_, on_table_, gripper_open_, holding_, clear_;
    CtrlPtr pick_c_, stack_c_, put_c_;
    std::shared_ptr<Oracle> oracle_;
};

inline ModelSet BlocksEnv::oracle_models() const {
    Variable r{"?x0", robot_t_}, b{"?x1", block_t_}, c{"?x2", block_t_};
    auto atom = [](const PredPtr& p, std::vector<Variable> args) {
        return LiftedAtom{p, std::move(args)};
    };
    ModelSet ms;
    ms.predicates = predicates_;
    ms.interp = oracle_;

    Operator pick_table{"PickFromTable",
                        {r, b},
                        {atom(clear_, {b}), atom(gripper_open_, {r}), atom(on_table_, {b})},
                        {atom(holding_, {r, b})},
                        {atom(clear_, {b}), atom(gripper_open_, {r}), atom(on_table_, {b})},
                        pick_c_,
                        {0, 1}};
    Operator unstack{"Unstack",
                     {r, b, c},
                     {atom(clear_, {b}), atom(gripper_open_, {r}), atom(on_, {b, c})},
                     {atom(clear_, {c}), atom(holding_, {r, b})},
                     {atom(clear_, {b}), atom(gripper_open_, {r}), atom(on_, {b, c})},
                     pick_c_,
                     {0, 1}};
    Operator stack{"Stack",
                   {r, b, c},
                   {atom(clear_, {c}), atom(holding_, {r, b})},
                   {atom(clear_, {b}), atom(gripper_open_, {r}), atom(on_, {b, c})},
                   {atom(clear_, {c}), atom(holding_, {r, b})},
                   stack_c_,
                   {0, 2}};
    Operator put{"PutOnTable",
                 {r, b},
                 {atom(holding_, {r, b})},
                 {atom(clear_, {b}), atom(gripper_open_, {r}), atom(on_table_, {b})},
                 {atom(holding_, {r, b})},
                 put_c_,
                 {0}};
    ms.operators = {pick_table, unstack, stack, put};

    auto trivial = [](const State&, const std::vector<Object>&, Rng&) {
        return std::vector<double>{};
    };
    auto free_put = [this](const State& x, const std::vector<Object>&, Rng& rng) {
        auto [u, v] = free_uv(x, rng, kBs / 2, 1.0 - kBs / 2);
        return std::vector<double>{u, v};
    };
    ms.samplers = {trivial, trivial, trivial, free_put};
    return ms;
}

}  // namespace apl
