#pragma once

// Shared block-stacking machinery for the Blocks and Two Rooms environments:
// block feature schema, stacking dynamics, closed-form oracle rules, pile
// initialization, tower goal sampling and the greedy tower-building script.

#include <functional>
#include <map>
#include <optional>

#include "apl/envs/environment.hpp"

namespace apl {

class StackingEnvBase : public Environment {
protected:
    static constexpr double kBs = 0.1;     // block edge length
    static constexpr double kHover = 0.8;  // z of a held block
    static constexpr int kFingers = 3;     // robot feature index in both envs

    TypePtr block_t_ = make_type("block", {"x", "y", "z", "grasped", "clear"});

    // ---- closed-form rules (the grasped/clear bits exist so the unary
    // predicates are learnable from argument features alone) ----

    static bool r_on(const State& x, const Object& a, const Object& b) {
        return std::abs(x.get(a, 0) - x.get(b, 0)) < kBs / 2 &&
               std::abs(x.get(a, 1) - x.get(b, 1)) < kBs / 2 &&
               std::abs(x.get(a, 2) - (x.get(b, 2) + kBs)) < kBs / 2;
    }
    static bool r_on_table(const State& x, const Object& b) {
        return std::abs(x.get(b, 2) - kBs / 2) < kBs / 2;
    }
    static bool r_gripper_open(const State& x, const Object& rob) {
        return x.get(rob, kFingers) > 0.5;
    }
    static bool r_holding(const State& x, const Object& b) { return x.get(b, 3) > 0.5; }
    static bool r_clear(const State& x, const Object& b) { return x.get(b, 4) > 0.5; }

    Object robot_of(const State& x) const { return x.object_set().of_type("robot").at(0); }

    std::optional<Object> held_block(const State& x) const {
        for (const auto& b : x.object_set().of_type("block"))
            if (r_holding(x, b)) return b;
        return std::nullopt;
    }

    std::optional<Object> support_of(const State& x, const Object& b) const {
        for (const auto& s : x.object_set().of_type("block"))
            if (!(s == b) && r_on(x, b, s)) return s;
        return std::nullopt;
    }

    // ---- dynamics (applicability already checked by the caller) ----

    State do_pick(const State& x, const Object& rob, const Object& b, bool move_effector) const {
        State out = x;
        if (auto below = support_of(x, b)) out.set(*below, 4, 1.0);
        out.set(b, 2, kHover);
        out.set(b, 3, 1.0);
        out.set(b, 4, 0.0);
        out.set(rob, kFingers, 0.0);
        if (move_effector) {
            out.set(rob, 0, x.get(b, 0));
            out.set(rob, 1, x.get(b, 1));
            out.set(rob, 2, kHover);
        }
        return out;
    }

    State do_stack(const State& x, const Object& rob, const Object& held, const Object& dest,
                   bool move_effector) const {
        State out = x;
        out.set(held, 0, x.get(dest, 0));
        out.set(held, 1, x.get(dest, 1));
        out.set(held, 2, x.get(dest, 2) + kBs);
        out.set(held, 3, 0.0);
        out.set(held, 4, 1.0);
        out.set(dest, 4, 0.0);
        out.set(rob, kFingers, 1.0);
        if (move_effector) {
            out.set(rob, 0, x.get(dest, 0));
            out.set(rob, 1, x.get(dest, 1));
            out.set(rob, 2, kHover);
        }
        return out;
    }

    State do_put(const State& x, const Object& rob, const Object& held, double px, double py,
                 bool move_effector) const {
        State out = x;
        out.set(held, 0, px);
        out.set(held, 1, py);
        out.set(held, 2, kBs / 2);
        out.set(held, 3, 0.0);
        out.set(held, 4, 1.0);
        out.set(rob, kFingers, 1.0);
        if (move_effector) {
            out.set(rob, 0, px);
            out.set(rob, 1, py);
            out.set(rob, 2, kHover);
        }
        return out;
    }

    // ---- initial piles ----

    void place_piles(State& x, const std::vector<Object>& blocks, Rng& rng, double lo,
                     double hi) const {
        std::vector<std::pair<double, double>> bases;
        std::vector<int> pile_of;
        std::vector<std::vector<int>> piles;
        for (size_t i = 0; i < blocks.size(); ++i) {
            if (piles.empty() || rng.bernoulli(0.4)) {
                double px = 0, py = 0;
                bool ok = false;
                for (int tries = 0; tries < 500 && !ok; ++tries) {
                    px = rng.uniform(lo, hi);
                    py = rng.uniform(lo, hi);
                    ok = true;
                    for (const auto& [bx, by] : bases)
                        if (std::hypot(px - bx, py - by) < 2.5 * kBs) ok = false;
                }
                if (!ok) throw std::runtime_error("no room for a new pile");
                bases.emplace_back(px, py);
                piles.push_back({static_cast<int>(i)});
            } else {
                piles[rng.uniform_int(static_cast<int>(piles.size()))].push_back(static_cast<int>(i));
            }
        }
        for (size_t p = 0; p < piles.size(); ++p)
            for (size_t lvl = 0; lvl < piles[p].size(); ++lvl) {
                const Object& b = blocks[piles[p][lvl]];
                x.set(b, 0, bases[p].first);
                x.set(b, 1, bases[p].second);
                x.set(b, 2, kBs / 2 + static_cast<double>(lvl) * kBs);
                x.set(b, 3, 0.0);
                x.set(b, 4, lvl + 1 == piles[p].size() ? 1.0 : 0.0);
            }
    }

    // normalized coordinates whose mapped pose keeps clearance from every
    // grounded block
    std::pair<double, double> free_uv(const State& x, Rng& rng, double lo, double hi) const {
        auto blocks = x.object_set().of_type("block");
        auto clear_at = [&](double px, double py) {
            for (const auto& b : blocks) {
                if (r_holding(x, b)) continue;
                if (std::hypot(px - x.get(b, 0), py - x.get(b, 1)) < 1.5 * kBs) return false;
            }
            return true;
        };
        for (int tries = 0; tries < 200; ++tries) {
            double u = rng.uniform(), v = rng.uniform();
            if (clear_at(lo + u * (hi - lo), lo + v * (hi - lo))) return {u, v};
        }
        for (double u = 0.05; u < 1.0; u += 0.1)
            for (double v = 0.05; v < 1.0; v += 0.1)
                if (clear_at(lo + u * (hi - lo), lo + v * (hi - lo))) return {u, v};
        throw std::runtime_error("table has no free spot");
    }

    // ---- tower goals ----

    std::set<GroundAtom> sample_tower_goal(const State& init, const std::vector<Object>& blocks,
                                           Rng& rng, int min_total, int max_total, int max_tower,
                                           const PredPtr& on_pred) const {
        for (int attempt = 0; attempt < 50; ++attempt) {
            int total = min_total + rng.uniform_int(max_total - min_total + 1);
            std::vector<Object> chosen = blocks;
            rng.shuffle(chosen);
            chosen.resize(total);
            std::set<GroundAtom> goal;
            int i = 0;
            while (i < total) {
                int rem = total - i;
                int height = std::min({rem, 2 + rng.uniform_int(std::max(1, max_tower - 1)), max_tower});
                if (rem - height == 1) height = rem;  // no singleton leftovers
                height = std::min(height, rem);
                for (int j = 1; j < height; ++j)
                    goal.insert(GroundAtom{on_pred, {chosen[i + j], chosen[i + j - 1]}});
                i += height;
            }
            if (goal.empty()) continue;
            if (!holds(goal, init, oracle())) return goal;
        }
        throw std::runtime_error("could not sample an unsatisfied tower goal");
    }

    // ---- greedy tower construction ----

    virtual Action make_pick(const Object& rob, const Object& b) const = 0;
    virtual Action make_stack(const Object& rob, const Object& c) const = 0;
    virtual Action make_put(const Object& rob, const State& x, Rng& rng) const = 0;

    bool script_towers(State& x, std::vector<Action>& plan, const std::set<GroundAtom>& goal_ons,
                       Rng& rng) const {
        std::map<std::string, std::string> goal_sup, goal_top;
        std::map<std::string, GroundAtom> atom_of;  // keyed by top block
        for (const auto& g : goal_ons) {
            goal_sup[g.args[0].name] = g.args[1].name;
            goal_top[g.args[1].name] = g.args[0].name;
            atom_of.emplace(g.args[0].name, g);
        }
        const Object rob = robot_of(x);
        auto blocks = x.object_set().of_type("block");
        auto by_name = [&](const std::string& n) {
            for (const auto& b : blocks)
                if (b.name == n) return b;
            throw std::logic_error("goal references unknown block " + n);
        };

        const int max_iters = 4 * static_cast<int>(blocks.size()) + 8;
        for (int iter = 0; iter < max_iters; ++iter) {
            if (holds(goal_ons, x, oracle())) return true;

            std::map<std::string, int> memo;  // -1 pending, 0 false, 1 true
            std::function<bool(const Object&)> in_pos = [&](const Object& b) -> bool {
                auto it = memo.find(b.name);
                if (it != memo.end()) return it->second == 1;
                memo[b.name] = 0;  // break cycles conservatively
                bool result;
                if (r_holding(x, b)) {
                    result = false;
                } else {
                    auto sup = support_of(x, b);
                    auto want = goal_sup.find(b.name);
                    if (want != goal_sup.end()) {
                        result = sup && sup->name == want->second && in_pos(*sup);
                    } else if (!sup) {
                        result = true;  // unconstrained block on the table
                    } else {
                        auto top = goal_top.find(sup->name);
                        result = (top == goal_top.end() || top->second == b.name) && in_pos(*sup);
                    }
                }
                memo[b.name] = result ? 1 : 0;
                return result;
            };

            auto step_with = [&](const Action& u) {
                plan.push_back(u);
                x = step(x, u);
            };

            if (auto held = held_block(x)) {
                auto want = goal_sup.find(held->name);
                if (want != goal_sup.end()) {
                    Object dest = by_name(want->second);
                    if (r_clear(x, dest) && in_pos(dest)) {
                        step_with(make_stack(rob, dest));
                        continue;
                    }
                }
                step_with(make_put(rob, x, rng));
                continue;
            }

            // constructive move: some goal atom whose support is settled
            bool acted = false;
            for (const auto& g : goal_ons) {
                Object a = g.args[0], c = g.args[1];
                if (oracle().classify(x, g)) continue;
                if (r_clear(x, a) && r_clear(x, c) && in_pos(c)) {
                    step_with(make_pick(rob, a));
                    acted = true;
                    break;
                }
            }
            if (acted) continue;

            // otherwise unstack the lowest-named clear block that must move
            for (const auto& b : blocks) {
                if (!r_clear(x, b) || r_on_table(x, b) || in_pos(b)) continue;
                step_with(make_pick(rob, b));
                acted = true;
                break;
            }
            if (!acted) return false;  // wedged; caller resamples the task
        }
        return false;
    }
};

}  // namespace apl
