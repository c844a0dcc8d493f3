#pragma once

// Bilevel planning with learned models: operators are grounded and indexed
// into a STRIPS projection, A* with the LMCut delete-relaxation heuristic
// streams abstract plans in nondecreasing f order, and each plan is refined
// into environment actions by invoking the samplers against the simulator.

#include <chrono>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <unordered_set>

#include "apl/core.hpp"
#include "apl/operators.hpp"
#include "apl/rng.hpp"

namespace apl {

enum class Heuristic { lmcut, hadd };

struct PlannerConfig {
    int n_abstract = 8;    // abstract plans considered per task
    int n_samples = 10;    // sampler tries per plan step
    double timeout_s = 10.0;
    Heuristic heuristic = Heuristic::lmcut;
};

struct AbstractPlan {
    std::vector<AbstractState> subgoals;  // s0 .. sn
    std::vector<GroundOperator> sketch;   // a1 .. an
};

using Simulator = std::function<State(const State&, const Action&)>;
using Clock = std::chrono::steady_clock;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

using Bits = std::vector<uint64_t>;

inline bool bit_test(const Bits& b, int i) { return (b[i >> 6] >> (i & 63)) & 1; }
inline void bit_set(Bits& b, int i) { b[i >> 6] |= uint64_t(1) << (i & 63); }
inline void bit_clear(Bits& b, int i) { b[i >> 6] &= ~(uint64_t(1) << (i & 63)); }

struct BitsHash {
    size_t operator()(const Bits& b) const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (uint64_t w : b) {
            h ^= w;
            h *= 0x100000001b3ULL;
        }
        return static_cast<size_t>(h);
    }
};

}  // namespace detail

// Dense indexed projection of (atom universe, ground operators, goal).
class GroundProblem {
public:
    using Bits = detail::Bits;

    struct IndexedOp {
        std::vector<int> pre, add, del;
        int source;  // index into the ground operator list
    };

    GroundProblem(std::vector<GroundAtom> universe, const std::vector<GroundOperator>& ops,
                  const std::set<GroundAtom>& goal)
        : atoms_(std::move(universe)) {
        for (size_t i = 0; i < atoms_.size(); ++i) index_.emplace(atoms_[i], static_cast<int>(i));
        words_ = (atoms_.size() + 63) / 64;
        for (size_t oi = 0; oi < ops.size(); ++oi) {
            IndexedOp io;
            io.source = static_cast<int>(oi);
            for (const auto& p : ops[oi].op->preconditions) io.pre.push_back(at(ops[oi].ground(p)));
            for (const auto& a : ops[oi].op->add_effects) io.add.push_back(at(ops[oi].ground(a)));
            for (const auto& d : ops[oi].op->delete_effects) io.del.push_back(at(ops[oi].ground(d)));
            iops_.push_back(std::move(io));
        }
        for (const auto& g : goal) goal_.push_back(at(g));
    }

    int at(const GroundAtom& a) const {
        auto it = index_.find(a);
        if (it == index_.end()) throw std::invalid_argument("atom outside universe: " + a.str());
        return it->second;
    }

    Bits to_bits(const AbstractState& s) const {
        Bits b(words_, 0);
        for (const auto& a : s) detail::bit_set(b, at(a));
        return b;
    }

    AbstractState to_atoms(const Bits& b) const {
        AbstractState s;
        for (size_t i = 0; i < atoms_.size(); ++i)
            if (detail::bit_test(b, static_cast<int>(i))) s.insert(atoms_[i]);
        return s;
    }

    bool applicable(const IndexedOp& op, const Bits& s) const {
        for (int p : op.pre)
            if (!detail::bit_test(s, p)) return false;
        return true;
    }

    Bits apply(const IndexedOp& op, const Bits& s) const {
        Bits t = s;
        for (int d : op.del) detail::bit_clear(t, d);
        for (int a : op.add) detail::bit_set(t, a);
        return t;
    }

    bool satisfies_goal(const Bits& s) const {
        for (int g : goal_)
            if (!detail::bit_test(s, g)) return false;
        return true;
    }

    int n_atoms() const { return static_cast<int>(atoms_.size()); }
    const std::vector<IndexedOp>& iops() const { return iops_; }
    const std::vector<int>& goal() const { return goal_; }

    // h-max fact costs over the delete relaxation under the given op costs
    void hmax_table(const Bits& s, const std::vector<double>& cost, std::vector<double>& h) const {
        h.assign(atoms_.size(), kInf);
        for (size_t i = 0; i < atoms_.size(); ++i)
            if (detail::bit_test(s, static_cast<int>(i))) h[i] = 0;
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t oi = 0; oi < iops_.size(); ++oi) {
                double pre = 0;
                for (int p : iops_[oi].pre) pre = std::max(pre, h[p]);
                if (pre == kInf) continue;
                double via = pre + cost[oi];
                for (int a : iops_[oi].add)
                    if (via < h[a]) {
                        h[a] = via;
                        changed = true;
                    }
            }
        }
    }

    double hmax_goal(const std::vector<double>& h) const {
        double v = 0;
        for (int g : goal_) v = std::max(v, h[g]);
        return v;
    }

private:
    std::vector<GroundAtom> atoms_;
    std::map<GroundAtom, int> index_;
    size_t words_ = 0;
    std::vector<IndexedOp> iops_;
    std::vector<int> goal_;
};

// Landmark-cut heuristic under unit action costs: repeatedly find the
// justification-graph cut between the init zone and the zero-cost goal zone,
// charge its minimum cost, and reduce. Admissible; infinity iff the goal is
// unreachable in the delete relaxation.
inline double lmcut(const GroundProblem& gp, const detail::Bits& s) {
    const auto& iops = gp.iops();
    std::vector<double> cost(iops.size(), 1.0);
    std::vector<double> h;
    double total = 0;
    const int n = gp.n_atoms();
    for (int round = 0; round < 16 * (n + 1); ++round) {
        gp.hmax_table(s, cost, h);
        double hg = gp.hmax_goal(h);
        if (hg == kInf) return kInf;
        if (hg == 0) return total;

        // precondition-choice: the max-h precondition, ties to the lowest
        // fact index; -1 encodes the artificial init fact
        std::vector<int> pcf(iops.size(), -1);
        for (size_t oi = 0; oi < iops.size(); ++oi) {
            double best = -1;
            for (int p : iops[oi].pre)
                if (h[p] > best) {
                    best = h[p];
                    pcf[oi] = p;
                }
            if (best == kInf) pcf[oi] = -2;  // unreachable op
        }
        int goal_pcf = -1;
        double best = -1;
        for (int g : gp.goal())
            if (h[g] > best) {
                best = h[g];
                goal_pcf = g;
            }

        // goal zone: facts with a zero-cost justification path to the goal
        std::vector<char> zone(n, 0);
        zone[goal_pcf] = 1;  // the artificial goal op has cost 0
        bool grew = true;
        while (grew) {
            grew = false;
            for (size_t oi = 0; oi < iops.size(); ++oi) {
                if (cost[oi] != 0 || pcf[oi] < 0 || zone[pcf[oi]]) continue;
                for (int a : iops[oi].add)
                    if (zone[a]) {
                        zone[pcf[oi]] = 1;
                        grew = true;
                        break;
                    }
            }
        }

        // before zone: forward from the current facts along justification
        // edges without entering the goal zone
        std::vector<char> before(n, 0);
        for (int i = 0; i < n; ++i)
            if (detail::bit_test(s, i) && !zone[i]) before[i] = 1;
        grew = true;
        while (grew) {
            grew = false;
            for (size_t oi = 0; oi < iops.size(); ++oi) {
                if (pcf[oi] == -2) continue;
                if (pcf[oi] >= 0 && !before[pcf[oi]]) continue;
                if (pcf[oi] >= 0 && zone[pcf[oi]]) continue;
                for (int a : iops[oi].add)
                    if (!zone[a] && !before[a]) {
                        before[a] = 1;
                        grew = true;
                    }
            }
        }

        double lambda = kInf;
        std::vector<size_t> cut;
        for (size_t oi = 0; oi < iops.size(); ++oi) {
            if (pcf[oi] == -2) continue;
            bool from_before = pcf[oi] < 0 || before[pcf[oi]];
            if (!from_before || (pcf[oi] >= 0 && zone[pcf[oi]])) continue;
            for (int a : iops[oi].add)
                if (zone[a]) {
                    cut.push_back(oi);
                    lambda = std::min(lambda, cost[oi]);
                    break;
                }
        }
        if (cut.empty() || lambda == kInf || lambda <= 0)
            throw std::logic_error("lmcut: empty or zero-cost cut");
        total += lambda;
        for (size_t oi : cut) cost[oi] -= lambda;
    }
    throw std::logic_error("lmcut failed to converge");
}

// additive heuristic: cheaper, not admissible
inline double hadd(const GroundProblem& gp, const detail::Bits& s) {
    const auto& iops = gp.iops();
    std::vector<double> h(gp.n_atoms(), kInf);
    for (int i = 0; i < gp.n_atoms(); ++i)
        if (detail::bit_test(s, i)) h[i] = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t oi = 0; oi < iops.size(); ++oi) {
            double pre = 0;
            for (int p : iops[oi].pre) {
                if (h[p] == kInf) {
                    pre = kInf;
                    break;
                }
                pre += h[p];
            }
            if (pre == kInf) continue;
            for (int a : iops[oi].add)
                if (pre + 1 < h[a]) {
                    h[a] = pre + 1;
                    changed = true;
                }
        }
    }
    double v = 0;
    for (int g : gp.goal()) {
        if (h[g] == kInf) return kInf;
        v += h[g];
    }
    return v;
}

// convenience entry point matching the heuristic's spec-level signature
inline double lmcut_value(const AbstractState& s, const std::set<GroundAtom>& goal,
                          const std::vector<GroundOperator>& ops,
                          const std::vector<GroundAtom>& universe) {
    GroundProblem gp(universe, ops, goal);
    return lmcut(gp, gp.to_bits(s));
}

// Continued A*: yields distinct ground-operator sequences in nondecreasing
// f order. Non-goal states close on first expansion; goal states are never
// closed so every distinct cheapest path to them can be emitted.
class AbstractPlanStream {
public:
    AbstractPlanStream(const AbstractState& s0, const std::set<GroundAtom>& goal,
                       const std::vector<GroundOperator>& ground_ops,
                       const std::vector<GroundAtom>& universe, const PlannerConfig& cfg,
                       Clock::time_point deadline)
        : gp_(universe, ground_ops, goal), ops_(ground_ops), cfg_(cfg), deadline_(deadline) {
        detail::Bits root = gp_.to_bits(s0);
        double h = heuristic(root);
        if (h < kInf) {
            nodes_.push_back(Node{root, -1, -1, 0});
            open_.push(Entry{h, 0, 0, 0});
        }
    }

    int emitted() const { return emitted_; }
    bool timed_out() const { return timed_out_; }

    std::optional<AbstractPlan> next() {
        if (emitted_ >= cfg_.n_abstract) return std::nullopt;
        while (!open_.empty()) {
            if (Clock::now() > deadline_) {
                timed_out_ = true;
                return std::nullopt;
            }
            Entry e = open_.top();
            open_.pop();
            const detail::Bits state = nodes_[e.node].state;  // copy: nodes_ may grow
            bool is_goal = gp_.satisfies_goal(state);
            if (!is_goal) {
                if (closed_.count(state)) continue;
                closed_.insert(state);
            }
            expand(e.node, state);
            if (is_goal) {
                ++emitted_;
                return reconstruct(e.node);
            }
        }
        return std::nullopt;
    }

private:
    struct Node {
        detail::Bits state;
        int parent;
        int op;  // ground-op index used to reach this node
        double g;
    };
    struct Entry {
        double f;
        double g;
        long counter;
        int node;
        bool operator<(const Entry& o) const {  // min-heap via greater-than
            if (f != o.f) return f > o.f;
            if (g != o.g) return g < o.g;  // deeper first
            return counter > o.counter;
        }
    };

    double heuristic(const detail::Bits& s) const {
        return cfg_.heuristic == Heuristic::lmcut ? lmcut(gp_, s) : hadd(gp_, s);
    }

    void expand(int node, const detail::Bits& state) {
        const double g = nodes_[node].g;
        for (size_t oi = 0; oi < gp_.iops().size(); ++oi) {
            const auto& io = gp_.iops()[oi];
            if (!gp_.applicable(io, state)) continue;
            detail::Bits succ = gp_.apply(io, state);
            if (!gp_.satisfies_goal(succ) && closed_.count(succ)) continue;
            double h = heuristic(succ);
            if (h == kInf) continue;
            nodes_.push_back(Node{std::move(succ), node, io.source, g + 1});
            open_.push(Entry{g + 1 + h, g + 1, ++counter_, static_cast<int>(nodes_.size()) - 1});
        }
    }

    AbstractPlan reconstruct(int node) const {
        std::vector<int> chain;
        for (int n = node; n >= 0; n = nodes_[n].parent) chain.push_back(n);
        std::reverse(chain.begin(), chain.end());
        AbstractPlan plan;
        for (size_t i = 0; i < chain.size(); ++i) {
            plan.subgoals.push_back(gp_.to_atoms(nodes_[chain[i]].state));
            if (i > 0) plan.sketch.push_back(ops_[nodes_[chain[i]].op]);
        }
        return plan;
    }

    GroundProblem gp_;
    std::vector<GroundOperator> ops_;
    PlannerConfig cfg_;
    Clock::time_point deadline_;
    std::vector<Node> nodes_;
    std::priority_queue<Entry> open_;
    std::unordered_set<detail::Bits, detail::BitsHash> closed_;
    long counter_ = 0;
    int emitted_ = 0;
    bool timed_out_ = false;
};

struct RefineResult {
    bool ok = false;
    std::vector<Action> actions;
};

// Repeatedly invoke each step's sampler until the simulated state abstracts
// to the step's subgoal; step-level exhaustion fails the whole plan.
inline RefineResult refine(const AbstractPlan& plan, const State& x0, const ModelSet& models,
                           const Simulator& sim, const PlannerConfig& cfg, Rng& rng,
                           Clock::time_point deadline) {
    RefineResult out;
    State x = x0;
    for (size_t i = 0; i < plan.sketch.size(); ++i) {
        const GroundOperator& op = plan.sketch[i];
        const int tries = op.op->controller->continuous_dim == 0 ? 1 : cfg.n_samples;
        bool stepped = false;
        for (int t = 0; t < tries; ++t) {
            if (Clock::now() > deadline) return out;
            std::vector<double> cont = models.samplers.at(op.op_index)(x, op.binding, rng);
            Action u = op.action(std::move(cont));
            State x2 = sim(x, u);
            if (abstract_state(x2, models.predicates, *models.interp) == plan.subgoals[i + 1]) {
                x = std::move(x2);
                out.actions.push_back(std::move(u));
                stepped = true;
                break;
            }
        }
        if (!stepped) return out;  // failure is a value, not an error
    }
    out.ok = true;
    return out;
}

enum class SolveStatus { success, timeout, plans_exhausted, abstract_unreachable };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::success: return "success";
        case SolveStatus::timeout: return "timeout";
        case SolveStatus::plans_exhausted: return "plans_exhausted";
        case SolveStatus::abstract_unreachable: return "abstract_unreachable";
    }
    return "?";
}

struct SolveResult {
    SolveStatus status = SolveStatus::plans_exhausted;
    std::vector<Action> actions;
    int plans_tried = 0;
};

inline SolveResult solve(const Task& task, const ModelSet& models, const PlannerConfig& cfg,
                         const Simulator& sim, Rng& rng) {
    SolveResult result;
    const auto deadline =
        Clock::now() + std::chrono::microseconds(static_cast<long>(cfg.timeout_s * 1e6));
    AbstractState s0 = abstract_state(task.init, models.predicates, *models.interp);
    std::vector<GroundOperator> ground = ground_operators(models.operators, task.init.objects());
    std::vector<GroundAtom> universe = ground_all_atoms(models.predicates, task.init.objects());
    AbstractPlanStream stream(s0, task.goal, ground, universe, cfg, deadline);

    while (auto plan = stream.next()) {
        ++result.plans_tried;
        RefineResult r = refine(*plan, task.init, models, sim, cfg, rng, deadline);
        if (r.ok) {
            result.status = SolveStatus::success;
            result.actions = std::move(r.actions);
            return result;
        }
        if (Clock::now() > deadline) {
            result.status = SolveStatus::timeout;
            return result;
        }
    }
    if (stream.timed_out())
        result.status = SolveStatus::timeout;
    else if (stream.emitted() == 0 && cfg.n_abstract > 0)
        result.status = SolveStatus::abstract_unreachable;
    else
        result.status = SolveStatus::plans_exhausted;
    return result;
}

}  // namespace apl
