#pragma once

// Object-oriented state/action/predicate data model shared by every module:
// typed objects with real feature vectors, hybrid controller actions, ground
// and lifted atoms, tasks, transitions and the accumulating dataset.

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace apl {

struct ObjectType {
    std::string name;
    std::vector<std::string> feature_names;

    int dim() const { return static_cast<int>(feature_names.size()); }

    int feature_index(const std::string& feat) const {
        for (int i = 0; i < dim(); ++i)
            if (feature_names[i] == feat) return i;
        throw std::invalid_argument("unknown feature " + feat + " of type " + name);
    }
};

using TypePtr = std::shared_ptr<const ObjectType>;

inline TypePtr make_type(std::string name, std::vector<std::string> features) {
    if (features.empty()) throw std::invalid_argument("type with empty feature list: " + name);
    return std::make_shared<const ObjectType>(ObjectType{std::move(name), std::move(features)});
}

struct Object {
    std::string name;
    TypePtr type;

    bool operator==(const Object& o) const { return name == o.name; }
    bool operator<(const Object& o) const { return name < o.name; }
};

// Fixed object roster of an episode, canonically sorted by name. States share
// the roster; objects are never created or destroyed within an episode.
struct ObjectSet {
    std::vector<Object> objects;  // sorted by name
    std::vector<int> offsets;
    int total_dim = 0;
    std::unordered_map<std::string, int> index;

    explicit ObjectSet(std::vector<Object> objs) : objects(std::move(objs)) {
        std::sort(objects.begin(), objects.end());
        for (size_t i = 0; i + 1 < objects.size(); ++i)
            if (objects[i].name == objects[i + 1].name)
                throw std::invalid_argument("duplicate object name " + objects[i].name);
        offsets.reserve(objects.size());
        for (size_t i = 0; i < objects.size(); ++i) {
            index.emplace(objects[i].name, static_cast<int>(i));
            offsets.push_back(total_dim);
            total_dim += objects[i].type->dim();
        }
    }

    int find(const std::string& name) const {
        auto it = index.find(name);
        return it == index.end() ? -1 : it->second;
    }

    std::vector<Object> of_type(const std::string& type_name) const {
        std::vector<Object> out;
        for (const auto& o : objects)
            if (o.type->name == type_name) out.push_back(o);
        return out;
    }
};

using ObjectSetPtr = std::shared_ptr<const ObjectSet>;

// Continuous environment state: one real feature vector per object.
class State {
public:
    State() = default;
    State(ObjectSetPtr objects, std::vector<double> features)
        : objects_(std::move(objects)), feats_(std::move(features)) {
        if (static_cast<int>(feats_.size()) != objects_->total_dim)
            throw std::invalid_argument("state feature vector has wrong length");
    }

    const ObjectSet& object_set() const { return *objects_; }
    ObjectSetPtr object_set_ptr() const { return objects_; }
    const std::vector<Object>& objects() const { return objects_->objects; }

    bool has(const Object& o) const { return objects_->find(o.name) >= 0; }

    std::span<const double> operator[](const Object& o) const {
        int i = objects_->find(o.name);
        if (i < 0) throw std::invalid_argument("object " + o.name + " not in state");
        return {feats_.data() + objects_->offsets[i], static_cast<size_t>(objects_->objects[i].type->dim())};
    }

    double get(const Object& o, int feat) const { return (*this)[o][feat]; }
    double get(const Object& o, const std::string& feat) const {
        return (*this)[o][o.type->feature_index(feat)];
    }

    void set(const Object& o, int feat, double v) {
        int i = objects_->find(o.name);
        if (i < 0) throw std::invalid_argument("object " + o.name + " not in state");
        feats_[objects_->offsets[i] + feat] = v;
    }
    void set(const Object& o, const std::string& feat, double v) {
        set(o, o.type->feature_index(feat), v);
    }

    const std::vector<double>& features() const { return feats_; }

    bool operator==(const State& o) const {
        return feats_ == o.feats_ && objects_->objects == o.objects_->objects;
    }

private:
    ObjectSetPtr objects_;
    std::vector<double> feats_;
};

// Hybrid controller: typed discrete parameter slots plus a bounded
// continuous parameter vector.
struct Controller {
    std::string name;
    std::vector<TypePtr> discrete_types;
    int continuous_dim = 0;
    std::vector<std::pair<double, double>> bounds;  // per continuous dim
};

using CtrlPtr = std::shared_ptr<const Controller>;

inline CtrlPtr make_controller(std::string name, std::vector<TypePtr> discrete,
                               std::vector<std::pair<double, double>> bounds) {
    for (auto& b : bounds)
        if (b.first > b.second) throw std::invalid_argument("controller bound lo > hi");
    Controller c{std::move(name), std::move(discrete), static_cast<int>(bounds.size()), std::move(bounds)};
    return std::make_shared<const Controller>(std::move(c));
}

struct Action {
    CtrlPtr controller;
    std::vector<Object> discrete_args;
    std::vector<double> continuous;
};

inline void check_action(const Action& u) {
    if (u.discrete_args.size() != u.controller->discrete_types.size())
        throw std::invalid_argument("action discrete arity mismatch for " + u.controller->name);
    for (size_t i = 0; i < u.discrete_args.size(); ++i)
        if (u.discrete_args[i].type->name != u.controller->discrete_types[i]->name)
            throw std::invalid_argument("action discrete arg type mismatch for " + u.controller->name);
    if (static_cast<int>(u.continuous.size()) != u.controller->continuous_dim)
        throw std::invalid_argument("action continuous arity mismatch for " + u.controller->name);
}

struct Predicate {
    std::string name;
    std::vector<TypePtr> arg_types;

    int arity() const { return static_cast<int>(arg_types.size()); }
    int input_dim() const {
        int d = 0;
        for (const auto& t : arg_types) d += t->dim();
        return d;
    }
};

using PredPtr = std::shared_ptr<const Predicate>;

inline PredPtr make_predicate(std::string name, std::vector<TypePtr> arg_types) {
    return std::make_shared<const Predicate>(Predicate{std::move(name), std::move(arg_types)});
}

struct GroundAtom {
    PredPtr pred;
    std::vector<Object> args;

    std::string str() const {
        std::string s = pred->name + "(";
        for (size_t i = 0; i < args.size(); ++i) {
            if (i) s += ",";
            s += args[i].name;
        }
        return s + ")";
    }

    bool operator==(const GroundAtom& o) const {
        if (pred->name != o.pred->name || args.size() != o.args.size()) return false;
        for (size_t i = 0; i < args.size(); ++i)
            if (args[i].name != o.args[i].name) return false;
        return true;
    }
    bool operator<(const GroundAtom& o) const {
        if (pred->name != o.pred->name) return pred->name < o.pred->name;
        for (size_t i = 0; i < std::min(args.size(), o.args.size()); ++i)
            if (args[i].name != o.args[i].name) return args[i].name < o.args[i].name;
        return args.size() < o.args.size();
    }
};

// Typed placeholder used in lifted atoms and operator arguments.
struct Variable {
    std::string name;
    TypePtr type;

    bool operator==(const Variable& o) const { return name == o.name; }
    bool operator<(const Variable& o) const { return name < o.name; }
};

struct LiftedAtom {
    PredPtr pred;
    std::vector<Variable> args;

    std::string str() const {
        std::string s = pred->name + "(";
        for (size_t i = 0; i < args.size(); ++i) {
            if (i) s += ",";
            s += args[i].name;
        }
        return s + ")";
    }

    bool operator==(const LiftedAtom& o) const {
        if (pred->name != o.pred->name || args.size() != o.args.size()) return false;
        for (size_t i = 0; i < args.size(); ++i)
            if (args[i].name != o.args[i].name) return false;
        return true;
    }
    bool operator<(const LiftedAtom& o) const {
        if (pred->name != o.pred->name) return pred->name < o.pred->name;
        for (size_t i = 0; i < std::min(args.size(), o.args.size()); ++i)
            if (args[i].name != o.args[i].name) return args[i].name < o.args[i].name;
        return args.size() < o.args.size();
    }
};

using AbstractState = std::set<GroundAtom>;
using Query = std::set<GroundAtom>;
using Response = std::vector<std::pair<GroundAtom, bool>>;

struct Task {
    State init;
    std::set<GroundAtom> goal;
};

struct Transition {
    State pre;
    Action action;
    State post;
};

struct LabeledAtom {
    State state;
    GroundAtom atom;
    bool label;
};

struct Demonstration {
    Task task;
    std::vector<Action> plan;
};

// Accumulating experience driving all learning.
struct Dataset {
    std::vector<Transition> transitions;
    std::vector<LabeledAtom> labels;
};

// Anything that can evaluate a ground atom in a continuous state: learned
// ensembles and the expert's scripted interpretations both implement this.
struct AtomClassifier {
    virtual ~AtomClassifier() = default;
    virtual bool classify(const State& x, const GroundAtom& atom) const = 0;
};

// A goal holds iff every atom classifies true (empty conjunction is true).
inline bool holds(const std::set<GroundAtom>& goal, const State& x, const AtomClassifier& interp) {
    for (const auto& atom : goal) {
        for (const auto& o : atom.args)
            if (!x.has(o)) throw std::invalid_argument("goal atom over unknown object " + o.name);
        if (!interp.classify(x, atom)) return false;
    }
    return true;
}

// All type-consistent substitutions of objects into each predicate (argument
// slots are filled independently, so repeated objects are allowed), returned
// deduplicated in canonical sorted order.
inline std::vector<GroundAtom> ground_all_atoms(const std::vector<PredPtr>& predicates,
                                                const std::vector<Object>& objects) {
    std::vector<GroundAtom> out;
    for (const auto& pred : predicates) {
        std::vector<std::vector<Object>> candidates(pred->arity());
        for (int i = 0; i < pred->arity(); ++i)
            for (const auto& o : objects)
                if (o.type->name == pred->arg_types[i]->name) candidates[i].push_back(o);
        std::vector<Object> args(pred->arity());
        // odometer over candidate lists
        std::vector<size_t> idx(pred->arity(), 0);
        bool any_empty = false;
        for (const auto& c : candidates) any_empty |= c.empty();
        if (any_empty && pred->arity() > 0) continue;
        while (true) {
            for (int i = 0; i < pred->arity(); ++i) args[i] = candidates[i][idx[i]];
            out.push_back(GroundAtom{pred, args});
            int i = pred->arity() - 1;
            while (i >= 0 && ++idx[i] == candidates[i].size()) idx[i--] = 0;
            if (i < 0) break;
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// ---- line-oriented text serialization (logging and golden-file tests) ----

inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline std::string to_text(const State& x) {
    std::string s;
    for (const auto& o : x.objects()) {
        s += o.name + " " + o.type->name;
        for (double v : x[o]) s += " " + fmt_real(v);
        s += "\n";
    }
    return s;
}

inline std::string to_text(const Action& u) {
    std::string s = u.controller->name + "(";
    for (size_t i = 0; i < u.discrete_args.size(); ++i) {
        if (i) s += ",";
        s += u.discrete_args[i].name;
    }
    s += ")[";
    for (size_t i = 0; i < u.continuous.size(); ++i) {
        if (i) s += " ";
        s += fmt_real(u.continuous[i]);
    }
    return s + "]";
}

inline std::string to_text(const std::set<GroundAtom>& atoms) {
    std::string s;
    for (const auto& a : atoms) {
        if (!s.empty()) s += " ";
        s += a.str();
    }
    return s;
}

inline std::string to_text(const Task& t) {
    return "init:\n" + to_text(t.init) + "goal: " + to_text(t.goal) + "\n";
}

inline std::string to_text(const Dataset& d) {
    std::string s;
    for (const auto& tr : d.transitions) {
        s += "transition " + to_text(tr.action) + "\n";
        s += to_text(tr.pre);
        s += "->\n";
        s += to_text(tr.post);
    }
    for (const auto& l : d.labels)
        s += "label " + l.atom.str() + " " + (l.label ? "1" : "0") + "\n";
    return s;
}

}  // namespace apl
