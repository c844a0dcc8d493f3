#pragma once

// Symbolic operator induction from abstracted transitions: transitions are
// partitioned by controller + lifted effects up to injective object
// substitution, preconditions come from intersecting lifted pre-states, and
// each partition gets a conditional Gaussian sampler over its controller's
// continuous parameters.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "apl/core.hpp"
#include "apl/nn.hpp"
#include "apl/rng.hpp"

namespace apl {

struct Operator {
    std::string name;
    std::vector<Variable> params;  // ?x0, ?x1, ... in first-occurrence order
    std::vector<LiftedAtom> preconditions;   // sorted
    std::vector<LiftedAtom> add_effects;     // sorted
    std::vector<LiftedAtom> delete_effects;  // sorted
    CtrlPtr controller;
    std::vector<int> controller_params;  // param indices bound to discrete args

    int param_index(const std::string& var_name) const {
        for (size_t i = 0; i < params.size(); ++i)
            if (params[i].name == var_name) return static_cast<int>(i);
        throw std::logic_error("operator " + name + " has no parameter " + var_name);
    }

    std::string pddl() const {
        auto atom_block = [](const std::vector<LiftedAtom>& atoms) {
            std::string s = "(and";
            for (const auto& a : atoms) {
                s += " (" + a.pred->name;
                for (const auto& v : a.args) s += " " + v.name;
                s += ")";
            }
            return s + ")";
        };
        std::string s = "(:action " + name + "\n  :parameters (";
        for (size_t i = 0; i < params.size(); ++i) {
            if (i) s += " ";
            s += params[i].name + " - " + params[i].type->name;
        }
        s += ")\n  :precondition " + atom_block(preconditions) + "\n  :effect (and";
        for (const auto& a : add_effects) {
            s += " (" + a.pred->name;
            for (const auto& v : a.args) s += " " + v.name;
            s += ")";
        }
        for (const auto& a : delete_effects) {
            s += " (not (" + a.pred->name;
            for (const auto& v : a.args) s += " " + v.name;
            s += "))";
        }
        s += ")\n  :controller " + controller->name + "(";
        for (size_t i = 0; i < controller_params.size(); ++i) {
            if (i) s += " ";
            s += params[controller_params[i]].name;
        }
        return s + "))\n";
    }
};

struct GroundOperator {
    const Operator* op = nullptr;
    int op_index = -1;              // position in the owning operator list
    std::vector<Object> binding;    // parallel to op->params

    GroundAtom ground(const LiftedAtom& a) const {
        std::vector<Object> args;
        args.reserve(a.args.size());
        for (const auto& v : a.args) args.push_back(binding[op->param_index(v.name)]);
        return GroundAtom{a.pred, std::move(args)};
    }

    bool applicable(const AbstractState& s) const {
        for (const auto& p : op->preconditions)
            if (!s.count(ground(p))) return false;
        return true;
    }

    // abstract transition function F(s, a)
    AbstractState apply(const AbstractState& s) const {
        if (!applicable(s)) throw std::logic_error("F applied to inapplicable " + str());
        AbstractState out = s;
        for (const auto& d : op->delete_effects) out.erase(ground(d));
        for (const auto& a : op->add_effects) out.insert(ground(a));
        return out;
    }

    Action action(std::vector<double> continuous) const {
        std::vector<Object> discrete;
        discrete.reserve(op->controller_params.size());
        for (int i : op->controller_params) discrete.push_back(binding[i]);
        return Action{op->controller, std::move(discrete), std::move(continuous)};
    }

    std::string str() const {
        std::string s = op->name + "(";
        for (size_t i = 0; i < binding.size(); ++i) {
            if (i) s += ",";
            s += binding[i].name;
        }
        return s + ")";
    }
};

// Draws continuous controller parameters for a ground operator's binding.
using SamplerFn = std::function<std::vector<double>(const State&, const std::vector<Object>&, Rng&)>;

// Everything the planner and the explorer need: interpretations to abstract
// states, operators for the abstract transition system, samplers to refine.
struct ModelSet {
    std::vector<PredPtr> predicates;
    std::shared_ptr<const AtomClassifier> interp;
    std::vector<Operator> operators;
    std::vector<SamplerFn> samplers;  // aligned with operators
};

// All type-correct substitutions with distinct objects per operator.
inline std::vector<GroundOperator> ground_operators(const std::vector<Operator>& ops,
                                                    const std::vector<Object>& objects) {
    std::vector<GroundOperator> out;
    for (size_t oi = 0; oi < ops.size(); ++oi) {
        const Operator& op = ops[oi];
        std::vector<Object> binding(op.params.size());
        std::vector<bool> used(objects.size(), false);
        std::function<void(size_t)> rec = [&](size_t i) {
            if (i == op.params.size()) {
                out.push_back(GroundOperator{&op, static_cast<int>(oi), binding});
                return;
            }
            for (size_t j = 0; j < objects.size(); ++j) {
                if (used[j] || objects[j].type->name != op.params[i].type->name) continue;
                used[j] = true;
                binding[i] = objects[j];
                rec(i + 1);
                used[j] = false;
            }
        };
        rec(0);
    }
    return out;
}

struct AbstractTransition {
    AbstractState pre, post;
    const Transition* source = nullptr;
};

inline std::vector<GroundAtom> atoms_true_in(const State& x, const std::vector<PredPtr>& preds,
                                             const AtomClassifier& interp) {
    std::vector<GroundAtom> out;
    for (auto& atom : ground_all_atoms(preds, x.objects()))
        if (interp.classify(x, atom)) out.push_back(std::move(atom));
    return out;
}

inline AbstractState abstract_state(const State& x, const std::vector<PredPtr>& preds,
                                    const AtomClassifier& interp) {
    auto v = atoms_true_in(x, preds, interp);
    return AbstractState(v.begin(), v.end());
}

inline std::vector<AbstractTransition> abstract_transitions(const std::vector<Transition>& transitions,
                                                            const std::vector<PredPtr>& preds,
                                                            const AtomClassifier& interp) {
    std::vector<AbstractTransition> out;
    out.reserve(transitions.size());
    for (const auto& t : transitions)
        out.push_back({abstract_state(t.pre, preds, interp), abstract_state(t.post, preds, interp), &t});
    return out;
}

struct PartitionMember {
    const AbstractTransition* t = nullptr;
    std::vector<Object> binding;  // parallel to partition vars
};

struct Partition {
    CtrlPtr controller;
    std::vector<Variable> vars;
    std::vector<int> controller_params;
    std::vector<LiftedAtom> add_effects, delete_effects;  // sorted, canonical variables
    std::vector<PartitionMember> members;

    // stable identity across episodes, used as a cache key for samplers
    std::string signature() const {
        std::string s = controller->name + "|";
        for (const auto& a : add_effects) s += "+" + a.str();
        for (const auto& a : delete_effects) s += "-" + a.str();
        return s;
    }
};

namespace detail {

// Try to bind partition variables to the transition's objects so that the
// controller args line up and both lifted effect sets map bijectively onto
// the ground ones. Substitutions are injective: distinct vars, distinct
// objects.
struct EffectMatcher {
    const Partition& part;
    const std::vector<GroundAtom>& adds;
    const std::vector<GroundAtom>& dels;
    std::vector<Object> binding;        // var index -> object ("" name = unbound)
    std::map<std::string, int> object_to_var;
    std::vector<bool> add_used, del_used;

    explicit EffectMatcher(const Partition& p, const std::vector<GroundAtom>& a,
                           const std::vector<GroundAtom>& d)
        : part(p), adds(a), dels(d), binding(p.vars.size()),
          add_used(a.size(), false), del_used(d.size(), false) {}

    bool bind(int var, const Object& obj) {
        if (!binding[var].name.empty()) return binding[var].name == obj.name;
        auto it = object_to_var.find(obj.name);
        if (it != object_to_var.end()) return false;  // injectivity
        binding[var] = obj;
        object_to_var.emplace(obj.name, var);
        return true;
    }

    void unbind(int var) {
        if (binding[var].name.empty()) return;
        object_to_var.erase(binding[var].name);
        binding[var] = Object{};
    }

    bool match_atoms(size_t i, const std::vector<LiftedAtom>& lifted,
                     const std::vector<GroundAtom>& ground, std::vector<bool>& used,
                     const std::function<bool()>& next) {
        if (i == lifted.size()) return next();
        const LiftedAtom& l = lifted[i];
        for (size_t j = 0; j < ground.size(); ++j) {
            if (used[j] || ground[j].pred->name != l.pred->name) continue;
            used[j] = true;
            std::vector<int> bound_here;
            bool ok = true;
            for (size_t k = 0; k < l.args.size() && ok; ++k) {
                int var = -1;
                for (size_t v = 0; v < part.vars.size(); ++v)
                    if (part.vars[v].name == l.args[k].name) { var = static_cast<int>(v); break; }
                bool fresh = binding[var].name.empty();
                ok = bind(var, ground[j].args[k]);
                if (ok && fresh) bound_here.push_back(var);
            }
            if (ok && match_atoms(i + 1, lifted, ground, used, next)) return true;
            for (int v : bound_here) unbind(v);
            used[j] = false;
        }
        return false;
    }

    std::optional<std::vector<Object>> run(const Action& action) {
        // controller discrete args are forced
        for (size_t i = 0; i < part.controller_params.size(); ++i)
            if (!bind(part.controller_params[i], action.discrete_args[i])) return std::nullopt;
        std::vector<bool>& au = add_used;
        std::vector<bool>& du = del_used;
        bool found = match_atoms(0, part.add_effects, adds, au, [&] {
            return match_atoms(0, part.delete_effects, dels, du, [] { return true; });
        });
        if (!found) return std::nullopt;
        return binding;
    }
};

inline std::vector<GroundAtom> set_difference(const AbstractState& a, const AbstractState& b) {
    std::vector<GroundAtom> out;
    for (const auto& atom : a)
        if (!b.count(atom)) out.push_back(atom);
    return out;
}

}  // namespace detail

// Groups nonempty-effect transitions by (controller, effects) equivalence up
// to injective object substitution. Transitions with empty effects carry no
// abstract change and are discarded.
inline std::vector<Partition> partition_transitions(const std::vector<AbstractTransition>& transitions) {
    std::vector<Partition> parts;
    for (const auto& t : transitions) {
        check_action(t.source->action);
        std::vector<GroundAtom> adds = detail::set_difference(t.post, t.pre);
        std::vector<GroundAtom> dels = detail::set_difference(t.pre, t.post);
        if (adds.empty() && dels.empty()) continue;
        const CtrlPtr& ctrl = t.source->action.controller;

        bool placed = false;
        for (auto& p : parts) {
            if (p.controller->name != ctrl->name) continue;
            if (p.add_effects.size() != adds.size() || p.delete_effects.size() != dels.size()) continue;
            detail::EffectMatcher m(p, adds, dels);
            if (auto binding = m.run(t.source->action)) {
                p.members.push_back({&t, std::move(*binding)});
                placed = true;
                break;
            }
        }
        if (placed) continue;

        // new partition: number variables by first occurrence over
        // (controller args, sorted add effects, sorted delete effects)
        Partition p;
        p.controller = ctrl;
        std::map<std::string, int> var_of;
        std::vector<Object> binding;
        auto var_for = [&](const Object& o) {
            auto it = var_of.find(o.name);
            if (it != var_of.end()) return it->second;
            int idx = static_cast<int>(p.vars.size());
            var_of.emplace(o.name, idx);
            p.vars.push_back(Variable{"?x" + std::to_string(idx), o.type});
            binding.push_back(o);
            return idx;
        };
        for (const auto& o : t.source->action.discrete_args)
            p.controller_params.push_back(var_for(o));
        auto lift = [&](const GroundAtom& g) {
            std::vector<Variable> args;
            args.reserve(g.args.size());
            for (const auto& o : g.args) args.push_back(p.vars[var_for(o)]);
            return LiftedAtom{g.pred, std::move(args)};
        };
        for (const auto& g : adds) p.add_effects.push_back(lift(g));
        for (const auto& g : dels) p.delete_effects.push_back(lift(g));
        std::sort(p.add_effects.begin(), p.add_effects.end());
        std::sort(p.delete_effects.begin(), p.delete_effects.end());
        p.members.push_back({&t, std::move(binding)});
        parts.push_back(std::move(p));
    }
    return parts;
}

inline std::vector<const Partition*> surviving_partitions(const std::vector<Partition>& parts,
                                                          int min_data) {
    std::vector<const Partition*> out;
    for (const auto& p : parts)
        if (static_cast<int>(p.members.size()) >= min_data) out.push_back(&p);
    return out;
}
// the result points into the argument; a temporary would dangle
std::vector<const Partition*> surviving_partitions(std::vector<Partition>&&, int) = delete;

// One operator per surviving partition. Preconditions are the intersection
// over members of the lifted pre-state atoms, restricted to atoms whose
// objects all map to operator arguments.
inline std::vector<Operator> induce_operators(const std::vector<const Partition*>& parts) {
    std::vector<Operator> ops;
    std::map<std::string, int> per_ctrl;
    for (const Partition* p : parts) {
        Operator op;
        int idx = per_ctrl[p->controller->name]++;
        op.name = p->controller->name + "-" + std::to_string(idx);
        op.params = p->vars;
        op.add_effects = p->add_effects;
        op.delete_effects = p->delete_effects;
        op.controller = p->controller;
        op.controller_params = p->controller_params;

        bool first = true;
        std::set<LiftedAtom> preconds;
        for (const auto& member : p->members) {
            std::map<std::string, int> obj_to_var;
            for (size_t v = 0; v < member.binding.size(); ++v)
                obj_to_var.emplace(member.binding[v].name, static_cast<int>(v));
            std::set<LiftedAtom> lifted;
            for (const auto& g : member.t->pre) {
                std::vector<Variable> args;
                bool all_args = true;
                for (const auto& o : g.args) {
                    auto it = obj_to_var.find(o.name);
                    if (it == obj_to_var.end()) { all_args = false; break; }
                    args.push_back(p->vars[it->second]);
                }
                if (all_args) lifted.insert(LiftedAtom{g.pred, std::move(args)});
            }
            if (first) {
                preconds = std::move(lifted);
                first = false;
            } else {
                for (auto it = preconds.begin(); it != preconds.end();)
                    it = lifted.count(*it) ? std::next(it) : preconds.erase(it);
            }
        }
        op.preconditions.assign(preconds.begin(), preconds.end());
        ops.push_back(std::move(op));
    }
    return ops;
}

// Memoizes sampler regressors on (partition signature, training rows): member
// rng streams depend only on the signature, so retraining on unchanged data
// reproduces the cached model bit for bit.
struct SamplerCache {
    std::unordered_map<std::string, GaussianRegressor<float>> entries;
};

inline uint64_t fnv_bytes(uint64_t h, const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::vector<SamplerFn> train_samplers(const std::vector<const Partition*>& parts,
                                             const TrainConfig& cfg, const Rng& run_rng,
                                             SamplerCache* cache = nullptr) {
    std::vector<SamplerFn> out;
    out.reserve(parts.size());
    for (const Partition* p : parts) {
        const CtrlPtr& ctrl = p->controller;
        if (ctrl->continuous_dim == 0) {
            out.push_back([](const State&, const std::vector<Object>&, Rng&) {
                return std::vector<double>{};
            });
            continue;
        }
        int in_dim = 0;
        for (const auto& v : p->vars) in_dim += v.type->dim();
        const int m = static_cast<int>(p->members.size());
        MatX<float> x(m, in_dim);
        MatX<float> y(m, ctrl->continuous_dim);
        for (int i = 0; i < m; ++i) {
            const auto& member = p->members[i];
            const State& pre = member.t->source->pre;
            int col = 0;
            for (const auto& obj : member.binding)
                for (double f : pre[obj]) x(i, col++) = static_cast<float>(f);
            const auto& cont = member.t->source->action.continuous;
            for (int j = 0; j < ctrl->continuous_dim; ++j) y(i, j) = static_cast<float>(cont[j]);
        }

        std::string sig = p->signature();
        GaussianRegressor<float> reg;
        std::string cache_key;
        bool hit = false;
        if (cache) {
            uint64_t h = fnv_bytes(0xcbf29ce484222325ULL, sig.data(), sig.size());
            h = fnv_bytes(h, x.data(), sizeof(float) * x.size());
            h = fnv_bytes(h, y.data(), sizeof(float) * y.size());
            cache_key = sig + "#" + std::to_string(h);
            auto it = cache->entries.find(cache_key);
            if (it != cache->entries.end()) {
                reg = it->second;
                hit = true;
            }
        }
        if (!hit) {
            Rng stream = run_rng.child("sampler").child(sig);
            reg = train_gaussian_regressor<float>(x, y, cfg, stream).reg;
            if (cache) cache->entries.emplace(cache_key, reg);
        }

        auto bounds = ctrl->bounds;
        out.push_back([reg = std::move(reg), bounds](const State& state,
                                                     const std::vector<Object>& binding,
                                                     Rng& rng) {
            int dim = 0;
            for (const auto& o : binding) dim += o.type->dim();
            VecX<float> input(dim);
            int col = 0;
            for (const auto& o : binding)
                for (double f : state[o]) input(col++) = static_cast<float>(f);
            VecX<float> mean, var;
            reg.predict(input, mean, var);
            std::vector<double> draw(bounds.size());
            for (size_t j = 0; j < bounds.size(); ++j) {
                // draw-time sd floor: a fully memorized mean collapses the
                // NLL variance, which would make repeated tries identical
                double sd_floor = 0.01 * (bounds[j].second - bounds[j].first);
                double sd = std::max(std::sqrt(double(var(static_cast<int>(j)))), sd_floor);
                double v = rng.normal(double(mean(static_cast<int>(j))), sd);
                draw[j] = std::min(std::max(v, bounds[j].first), bounds[j].second);
            }
            return draw;
        });
    }
    return out;
}

}  // namespace apl
