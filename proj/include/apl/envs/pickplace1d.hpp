#pragma once

// 1-D pick-and-place: blocks and target regions on a line, one PickPlace
// controller whose single continuous parameter is the pick or place
// location. A block covers a target when the target interval lies inside
// the block interval. Held blocks sit at the off-line sentinel pose.

#include "apl/envs/environment.hpp"

namespace apl {

class PickPlace1D : public Environment {
public:
    static constexpr double kHeldPose = -1.0;
    static constexpr double kTargetGap = 0.15;  // between target intervals

    PickPlace1D() {
        block_t_ = make_type("block", {"pose", "width"});
        target_t_ = make_type("target", {"pose", "width"});
        robot_t_ = make_type("robot", {"pose_x", "pose_y", "fingers"});
        covers_ = make_predicate("Covers", {block_t_, target_t_});
        holding_ = make_predicate("Holding", {robot_t_, block_t_});
        hand_empty_ = make_predicate("HandEmpty", {robot_t_});
        pickplace_ = make_controller("PickPlace", {}, {{0.0, 1.0}});

        name_ = "pickplace1d";
        types_ = {block_t_, robot_t_, target_t_};
        predicates_ = {covers_, hand_empty_, holding_};
        controllers_ = {pickplace_};
        horizon_ = 3;
        sort_decls();
        oracle_ = std::make_shared<Oracle>();
    }

    using Environment::step;

    const OracleExpert& oracle() const override { return *oracle_; }
    std::shared_ptr<const OracleExpert> oracle_ptr() const override { return oracle_; }

    struct Oracle : OracleExpert {
        bool classify(const State& x, const GroundAtom& atom) const override {
            const std::string& n = atom.pred->name;
            if (n == "Covers") {
                double bp = x.get(atom.args[0], 0), bw = x.get(atom.args[0], 1);
                double tp = x.get(atom.args[1], 0), tw = x.get(atom.args[1], 1);
                return std::abs(bp - tp) <= (bw - tw) / 2;
            }
            if (n == "Holding") return x.get(atom.args[0], 2) < 0.5 && x.get(atom.args[1], 0) < 0.0;
            if (n == "HandEmpty") return x.get(atom.args[0], 2) > 0.5;
            throw std::invalid_argument("unknown predicate " + n);
        }
    };

    State step(const State& x, const Action& u, const NoiseConfig& noise, Rng& rng) const override {
        check_action(u);
        if (u.controller->name != "PickPlace")
            throw std::invalid_argument("unknown controller " + u.controller->name + " in pickplace1d");
        const double theta = u.continuous[0];
        Object rob = x.object_set().of_type("robot").at(0);
        auto blocks = x.object_set().of_type("block");

        State out = x;
        if (x.get(rob, 2) > 0.5) {
            // hand empty: pick the nearest block within its grasp radius
            const Object* grabbed = nullptr;
            double best = std::numeric_limits<double>::infinity();
            for (const auto& b : blocks) {
                double pose = x.get(b, 0);
                if (pose < 0) continue;
                double dist = std::abs(theta - pose);
                if (dist <= x.get(b, 1) / 2 && dist < best) {
                    best = dist;
                    grabbed = &b;
                }
            }
            if (!grabbed) return x;  // no-op, state unchanged
            out.set(*grabbed, 0, kHeldPose);
            out.set(rob, 2, 0.0);
            out.set(rob, 0, theta);
        } else {
            // place the held block
            const Object* held = nullptr;
            for (const auto& b : blocks)
                if (x.get(b, 0) < 0) held = &b;
            if (!held) return x;
            double pose = theta;
            if (noise.place_noise_sigma > 0) pose += rng.normal(0.0, noise.place_noise_sigma);
            pose = std::min(std::max(pose, 0.0), 1.0);
            out.set(*held, 0, pose);
            out.set(rob, 2, 1.0);
            out.set(rob, 0, theta);
        }
        return out;
    }

    State sample_init(Rng& rng, Split) const override {
        Object b0{"b0", block_t_}, b1{"b1", block_t_};
        Object t0{"t0", target_t_}, t1{"t1", target_t_};
        Object rob{"rob", robot_t_};
        auto roster = std::make_shared<const ObjectSet>(std::vector<Object>{b0, b1, rob, t0, t1});
        State x(roster, std::vector<double>(roster->total_dim, 0.0));

        double bw0 = rng.uniform(0.10, 0.15), bw1 = rng.uniform(0.10, 0.15);
        double tw0 = rng.uniform(0.05, 0.08), tw1 = rng.uniform(0.05, 0.08);
        x.set(b0, 1, bw0);
        x.set(b1, 1, bw1);
        x.set(t0, 1, tw0);
        x.set(t1, 1, tw1);

        double tp0 = 0, tp1 = 0;
        for (int tries = 0;; ++tries) {
            tp0 = rng.uniform(tw0 / 2, 1 - tw0 / 2);
            tp1 = rng.uniform(tw1 / 2, 1 - tw1 / 2);
            if (std::abs(tp0 - tp1) - (tw0 + tw1) / 2 >= kTargetGap) break;
            if (tries > 1000) throw std::runtime_error("target placement failed");
        }
        x.set(t0, 0, tp0);
        x.set(t1, 0, tp1);

        // blocks start disjoint from the targets and from each other
        auto disjoint = [](double p1, double w1, double p2, double w2) {
            return std::abs(p1 - p2) >= (w1 + w2) / 2 + 0.01;
        };
        double bp0 = 0, bp1 = 0;
        for (int tries = 0;; ++tries) {
            bp0 = rng.uniform(bw0 / 2, 1 - bw0 / 2);
            if (disjoint(bp0, bw0, tp0, tw0) && disjoint(bp0, bw0, tp1, tw1)) break;
            if (tries > 1000) throw std::runtime_error("block placement failed");
        }
        for (int tries = 0;; ++tries) {
            bp1 = rng.uniform(bw1 / 2, 1 - bw1 / 2);
            if (disjoint(bp1, bw1, tp0, tw0) && disjoint(bp1, bw1, tp1, tw1) &&
                disjoint(bp1, bw1, bp0, bw0))
                break;
            if (tries > 1000) throw std::runtime_error("block placement failed");
        }
        x.set(b0, 0, bp0);
        x.set(b1, 0, bp1);

        x.set(rob, 0, 0.5);
        x.set(rob, 1, 0.1);
        x.set(rob, 2, 1.0);
        if (rng.bernoulli(0.75)) {
            const Object& held = rng.bernoulli(0.5) ? b1 : b0;
            x.set(held, 0, kHeldPose);
            x.set(rob, 2, 0.0);
        }
        return x;
    }

    std::set<GroundAtom> sample_goal(const State& init, Rng& rng, Split) const override {
        auto blocks = init.object_set().of_type("block");
        auto targets = init.object_set().of_type("target");
        std::vector<int> perm{0, 1};
        rng.shuffle(perm);
        int held = -1;
        for (int i = 0; i < 2; ++i)
            if (init.get(blocks[i], 0) < 0) held = i;

        std::set<GroundAtom> goal;
        // two-cover goals only fit the horizon when a goal block starts held
        if (held >= 0 && rng.bernoulli(0.5)) {
            for (int i = 0; i < 2; ++i)
                goal.insert(GroundAtom{covers_, {blocks[i], targets[perm[i]]}});
        } else {
            int i = rng.uniform_int(2);
            goal.insert(GroundAtom{covers_, {blocks[i], targets[perm[i]]}});
        }
        return goal;
    }

    std::vector<Action> script_solve(const Task& task, Rng& rng) const override {
        State x = task.init;
        std::vector<Action> plan;
        auto act = [&](double theta) {
            theta = std::min(std::max(theta, 0.0), 1.0);
            Action u{pickplace_, {}, {theta}};
            plan.push_back(u);
            x = step(x, u);
        };
        std::vector<GroundAtom> goals(task.goal.begin(), task.goal.end());

        auto held_of = [&]() -> const Object* {
            for (const auto& b : x.object_set().of_type("block"))
                if (x.get(b, 0) < 0) return &x.object_set().objects[x.object_set().find(b.name)];
            return nullptr;
        };
        auto cover_pose = [&](const GroundAtom& g) {
            double bw = x.get(g.args[0], 1), tp = x.get(g.args[1], 0), tw = x.get(g.args[1], 1);
            return tp + rng.uniform(-0.8, 0.8) * (bw - tw) / 2;
        };

        if (const Object* held = held_of()) {
            auto it = std::find_if(goals.begin(), goals.end(),
                                   [&](const GroundAtom& g) { return g.args[0].name == held->name; });
            if (it != goals.end()) {
                act(cover_pose(*it));
                goals.erase(it);
            } else {
                act(away_pose(x, *held, rng));
            }
        }
        for (const auto& g : goals) {
            if (oracle_->classify(x, g)) continue;
            double bp = x.get(g.args[0], 0), bw = x.get(g.args[0], 1);
            act(bp + rng.uniform(-0.45, 0.45) * bw);  // within the grasp radius
            act(cover_pose(g));
        }
        return plan;
    }

    ModelSet oracle_models() const override;

private:
    // a pose whose block interval stays clear of every target and block
    double away_pose(const State& x, const Object& held, Rng& rng) const {
        double w = x.get(held, 1);
        auto clear_at = [&](double p) {
            for (const auto& t : x.object_set().of_type("target"))
                if (std::abs(p - x.get(t, 0)) < (w + x.get(t, 1)) / 2 + 0.02) return false;
            for (const auto& b : x.object_set().of_type("block")) {
                if (b.name == held.name || x.get(b, 0) < 0) continue;
                if (std::abs(p - x.get(b, 0)) < (w + x.get(b, 1)) / 2 + 0.02) return false;
            }
            return true;
        };
        for (int tries = 0; tries < 200; ++tries) {
            double p = rng.uniform(w / 2, 1 - w / 2);
            if (clear_at(p)) return p;
        }
        for (double p = w / 2; p <= 1 - w / 2; p += 0.02)
            if (clear_at(p)) return p;
        throw std::runtime_error("no clear place pose found");
    }

    TypePtr block_t_, target_t_, robot_t_;
    PredPtr covers_, holding_, hand_empty_;
    CtrlPtr pickplace_;
    std::shared_ptr<Oracle> oracle_;
};

inline ModelSet PickPlace1D::oracle_models() const {
    Variable r{"?x0", robot_t_}, b{"?x1", block_t_}, t{"?x2", target_t_};
    auto atom = [](const PredPtr& p, std::vector<Variable> args) {
        return LiftedAtom{p, std::move(args)};
    };
    ModelSet ms;
    ms.predicates = predicates_;
    ms.interp = oracle_;

    Operator pick{"Pick", {r, b}, {atom(hand_empty_, {r})}, {atom(holding_, {r, b})},
                  {atom(hand_empty_, {r})}, pickplace_, {}};
    Operator place_cover{"PlaceCover",
                         {r, b, t},
                         {atom(holding_, {r, b})},
                         {atom(covers_, {b, t}), atom(hand_empty_, {r})},
                         {atom(holding_, {r, b})},
                         pickplace_,
                         {}};
    Operator place_away{"PlaceAway", {r, b}, {atom(holding_, {r, b})}, {atom(hand_empty_, {r})},
                        {atom(holding_, {r, b})}, pickplace_, {}};
    ms.operators = {pick, place_cover, place_away};

    ms.samplers = {
        [](const State& x, const std::vector<Object>& binding, Rng&) {
            return std::vector<double>{x.get(binding[1], 0)};
        },
        [](const State& x, const std::vector<Object>& binding, Rng&) {
            return std::vector<double>{x.get(binding[2], 0)};
        },
        [this](const State& x, const std::vector<Object>& binding, Rng& rng) {
            return std::vector<double>{away_pose(x, binding[1], rng)};
        },
    };
    return ms;
}

}  // namespace apl
