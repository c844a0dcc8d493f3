#pragma once

// Two rooms joined by a hallway: a block-stacking table in one room, a dial
// controlling a light in the other. Block controllers work next to the
// table; the dial controllers work next to the dial; MoveTableToDial is a
// one-way trip per episode.

#include "apl/envs/stacking.hpp"

namespace apl {

class TwoRoomsEnv : public StackingEnvBase {
public:
    static constexpr double kTableX = 0.5, kTableY = 0.5;
    static constexpr double kNextTo = 0.3;

    TwoRoomsEnv() {
        robot_t_ = make_type("robot", {"x", "y", "rot", "fingers"});
        dial_t_ = make_type("dial", {"x", "y", "level"});
        on_ = make_predicate("On", {block_t_, block_t_});
        on_table_ = make_predicate("OnTable", {block_t_});
        gripper_open_ = make_predicate("GripperOpen", {robot_t_});
        holding_ = make_predicate("Holding", {robot_t_, block_t_});
        clear_ = make_predicate("Clear", {block_t_});
        next_to_table_ = make_predicate("NextToTable", {robot_t_});
        next_to_dial_ = make_predicate("NextToDial", {robot_t_, dial_t_});
        light_on_ = make_predicate("LightOn", {dial_t_});
        light_off_ = make_predicate("LightOff", {dial_t_});
        pick_c_ = make_controller("Pick", {robot_t_, block_t_}, {});
        stack_c_ = make_controller("Stack", {robot_t_, block_t_}, {});
        put_c_ = make_controller("PutOnTable", {robot_t_}, {{0.0, 1.0}, {0.0, 1.0}});
        move_c_ = make_controller("MoveTableToDial", {robot_t_, dial_t_},
                                  {{-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}});
        on_c_ = make_controller("TurnOnDial", {robot_t_, dial_t_},
                                {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}});
        off_c_ = make_controller("TurnOffDial", {robot_t_, dial_t_},
                                 {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}});

        name_ = "two_rooms";
        types_ = {block_t_, dial_t_, robot_t_};
        predicates_ = {on_, on_table_, gripper_open_, holding_, clear_,
                       next_to_table_, next_to_dial_, light_on_, light_off_};
        controllers_ = {pick_c_, stack_c_, put_c_, move_c_, on_c_, off_c_};
        horizon_ = 8;
        sort_decls();
        oracle_ = std::make_shared<Oracle>();
    }

    using Environment::step;

    const OracleExpert& oracle() const override { return *oracle_; }
    std::shared_ptr<const OracleExpert> oracle_ptr() const override { return oracle_; }

    static bool r_next_to_table(const State& x, const Object& rob) {
        return std::hypot(x.get(rob, 0) - kTableX, x.get(rob, 1) - kTableY) <= kNextTo;
    }
    static bool r_next_to_dial(const State& x, const Object& rob, const Object& dial) {
        return std::hypot(x.get(rob, 0) - x.get(dial, 0), x.get(rob, 1) - x.get(dial, 1)) <= kNextTo;
    }

    struct Oracle : OracleExpert {
        bool classify(const State& x, const GroundAtom& atom) const override {
            const std::string& n = atom.pred->name;
            if (n == "On") return r_on(x, atom.args[0], atom.args[1]);
            if (n == "OnTable") return r_on_table(x, atom.args[0]);
            if (n == "GripperOpen") return r_gripper_open(x, atom.args[0]);
            if (n == "Holding") return r_holding(x, atom.args[1]);
            if (n == "Clear") return r_clear(x, atom.args[0]);
            if (n == "NextToTable") return r_next_to_table(x, atom.args[0]);
            if (n == "NextToDial") return r_next_to_dial(x, atom.args[0], atom.args[1]);
            if (n == "LightOn") return x.get(atom.args[0], 2) >= 0.5;
            if (n == "LightOff") return x.get(atom.args[0], 2) < 0.5;
            throw std::invalid_argument("unknown predicate " + n);
        }
    };

    State step(const State& x, const Action& u, const NoiseConfig&, Rng&) const override {
        check_action(u);
        const std::string& c = u.controller->name;
        Object rob = robot_of(x);
        if (c == "Pick" || c == "Stack" || c == "PutOnTable") {
            if (!r_next_to_table(x, rob)) return x;
            if (c == "Pick") {
                const Object& b = u.discrete_args[1];
                if (!r_gripper_open(x, rob) || !r_clear(x, b)) return x;
                return do_pick(x, rob, b, false);
            }
            if (c == "Stack") {
                const Object& dest = u.discrete_args[1];
                auto held = held_block(x);
                if (!held || held->name == dest.name || !r_clear(x, dest)) return x;
                return do_stack(x, rob, *held, dest, false);
            }
            auto held = held_block(x);
            if (!held) return x;
            double px = 0.2 + u.continuous[0] * 0.6;
            double py = 0.2 + u.continuous[1] * 0.6;
            return do_put(x, rob, *held, px, py, false);
        }
        if (c == "MoveTableToDial") {
            if (!r_next_to_table(x, rob)) return x;
            const Object& dial = u.discrete_args[1];
            State out = x;
            out.set(rob, 0, x.get(dial, 0) + u.continuous[0]);
            out.set(rob, 1, x.get(dial, 1) + u.continuous[1]);
            out.set(rob, 2, wrap_angle(x.get(rob, 2) + u.continuous[2]));
            return out;
        }
        if (c == "TurnOnDial" || c == "TurnOffDial") {
            const Object& dial = u.discrete_args[1];
            if (!r_next_to_dial(x, rob, dial)) return x;
            State out = x;
            double level = x.get(dial, 2) + u.continuous[2];
            out.set(dial, 2, std::min(std::max(level, 0.0), 1.0));
            return out;
        }
        throw std::invalid_argument("unknown controller " + c + " in two_rooms");
    }

    State sample_init(Rng& rng, Split) const override {
        std::vector<Object> objs;
        for (int i = 0; i < 3; ++i) objs.push_back(Object{"b" + std::to_string(i), block_t_});
        Object rob{"rob", robot_t_};
        Object dial{"dial", dial_t_};
        objs.push_back(rob);
        objs.push_back(dial);
        auto roster = std::make_shared<const ObjectSet>(objs);
        State x(roster, std::vector<double>(roster->total_dim, 0.0));
        double ang = rng.uniform(0.0, 2.0 * M_PI);
        double rad = rng.uniform(0.0, 0.25);
        x.set(rob, 0, kTableX + rad * std::cos(ang));
        x.set(rob, 1, kTableY + rad * std::sin(ang));
        x.set(rob, 2, rng.uniform(-M_PI, M_PI));
        x.set(rob, 3, 1.0);
        x.set(dial, 0, rng.uniform(2.3, 2.7));
        x.set(dial, 1, rng.uniform(0.3, 0.7));
        x.set(dial, 2, rng.uniform(0.0, 1.0));
        place_piles(x, x.object_set().of_type("block"), rng, 0.25, 0.75);
        return x;
    }

    std::set<GroundAtom> sample_goal(const State& init, Rng& rng, Split) const override {
        auto blocks = init.object_set().of_type("block");
        auto goal = sample_tower_goal(init, blocks, rng, 2, 3, 3, on_);
        Object dial = init.object_set().of_type("dial").at(0);
        bool lit = init.get(dial, 2) >= 0.5;
        goal.insert(GroundAtom{lit ? light_off_ : light_on_, {dial}});
        return goal;
    }

    std::vector<Action> script_solve(const Task& task, Rng& rng) const override {
        State x = task.init;
        std::vector<Action> plan;
        std::set<GroundAtom> ons;
        std::optional<GroundAtom> light;
        for (const auto& g : task.goal)
            if (g.pred->name == "On") ons.insert(g);
            else light = g;
        if (!script_towers(x, plan, ons, rng)) return {};
        if (light && !oracle_->classify(x, *light)) {
            Object rob = robot_of(x);
            Object dial = light->args[0];
            Action move{move_c_, {rob, dial},
                        {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(-0.2, 0.2)}};
            plan.push_back(move);
            x = step(x, move);
            bool want_on = light->pred->name == "LightOn";
            Action turn{want_on ? on_c_ : off_c_,
                        {rob, dial},
                        {rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), want_on ? 1.0 : -1.0}};
            plan.push_back(turn);
            x = step(x, turn);
        }
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
        auto blocks_uv = free_uv(x, rng, 0.2, 0.8);
        return Action{put_c_, {rob}, {blocks_uv.first, blocks_uv.second}};
    }

    static double wrap_angle(double r) {
        r = std::fmod(r + M_PI, 2.0 * M_PI);
        if (r < 0) r += 2.0 * M_PI;
        return r - M_PI;
    }

    TypePtr robot_t_, dial_t_;
    PredPtr on_, on_table_, gripper_open_, holding_, clear_;
    PredPtr next_to_table_, next_to_dial_, light_on_, light_off_;
    CtrlPtr pick_c_, stack_c_, put_c_, move_c_, on_c_, off_c_;
    std::shared_ptr<Oracle> oracle_;
};

inline ModelSet TwoRoomsEnv::oracle_models() const {
    Variable r{"?x0", robot_t_}, b{"?x1", block_t_}, c{"?x2", block_t_}, d{"?x1", dial_t_};
    auto atom = [](const PredPtr& p, std::vector<Variable> args) {
        return LiftedAtom{p, std::move(args)};
    };
    ModelSet ms;
    ms.predicates = predicates_;
    ms.interp = oracle_;

    Operator pick_table{"PickFromTable",
                        {r, b},
                        {atom(clear_, {b}), atom(gripper_open_, {r}), atom(next_to_table_, {r}),
                         atom(on_table_, {b})},
                        {atom(holding_, {r, b})},
                        {atom(clear_, {b}), atom(gripper_open_, {r}), atom(on_table_, {b})},
                        pick_c_,
                        {0, 1}};
    Operator unstack{"Unstack",
                     {r, b, c},
                     {atom(clear_, {b}), atom(gripper_open_, {r}), atom(next_to_table_, {r}),
                      atom(on_, {b, c})},
                     {atom(clear_, {c}), atom(holding_, {r, b})},
                     {atom(clear_, {b}), atom(gripper_open_, {r}), atom(on_, {b, c})},
                     pick_c_,
                     {0, 1}};
    Operator stack{"Stack",
                   {r, b, c},
                   {atom(clear_, {c}), atom(holding_, {r, b}), atom(next_to_table_, {r})},
                   {atom(clear_, {b}), atom(gripper_open_, {r}), atom(on_, {b, c})},
                   {atom(clear_, {c}), atom(holding_, {r, b})},
                   stack_c_,
                   {0, 2}};
    Operator put{"PutOnTable",
                 {r, b},
                 {atom(holding_, {r, b}), atom(next_to_table_, {r})},
                 {atom(clear_, {b}), atom(gripper_open_, {r}), atom(on_table_, {b})},
                 {atom(holding_, {r, b})},
                 put_c_,
                 {0}};
    Operator move{"MoveToDial",
                  {r, d},
                  {atom(next_to_table_, {r})},
                  {atom(next_to_dial_, {r, d})},
                  {atom(next_to_table_, {r})},
                  move_c_,
                  {0, 1}};
    Operator turn_on{"TurnOn",
                     {r, d},
                     {atom(light_off_, {d}), atom(next_to_dial_, {r, d})},
                     {atom(light_on_, {d})},
                     {atom(light_off_, {d})},
                     on_c_,
                     {0, 1}};
    Operator turn_off{"TurnOff",
                      {r, d},
                      {atom(light_on_, {d}), atom(next_to_dial_, {r, d})},
                      {atom(light_off_, {d})},
                      {atom(light_on_, {d})},
                      off_c_,
                      {0, 1}};
    ms.operators = {pick_table, unstack, stack, put, move, turn_on, turn_off};

    auto trivial = [](const State&, const std::vector<Object>&, Rng&) {
        return std::vector<double>{};
    };
    auto free_put = [this](const State& x, const std::vector<Object>&, Rng& rng) {
        auto [u, v] = free_uv(x, rng, 0.2, 0.8);
        return std::vector<double>{u, v};
    };
    auto exact_move = [](const State&, const std::vector<Object>&, Rng&) {
        return std::vector<double>{0.0, 0.0, 0.0};
    };
    auto turn_up = [](const State&, const std::vector<Object>&, Rng&) {
        return std::vector<double>{0.0, 0.0, 1.0};
    };
    auto turn_down = [](const State&, const std::vector<Object>&, Rng&) {
        return std::vector<double>{0.0, 0.0, -1.0};
    };
    ms.samplers = {trivial, trivial, trivial, free_put, exact_move, turn_up, turn_down};
    return ms;
}

}  // namespace apl
