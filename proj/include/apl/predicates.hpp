#pragma once

// Learned predicate interpretations: per-predicate datasets assembled from
// expert-labeled atoms, ensembles of MLP classifiers trained per predicate,
// and the entropy machinery driving queries and exploration.

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "apl/core.hpp"
#include "apl/nn.hpp"
#include "apl/operators.hpp"
#include "apl/parallel.hpp"
#include "apl/rng.hpp"

namespace apl {

// concatenated feature vectors of the atom's arguments, in argument order
inline VecX<float> classifier_input(const State& x, const GroundAtom& atom) {
    VecX<float> input(atom.pred->input_dim());
    int col = 0;
    for (const auto& o : atom.args)
        for (double f : x[o]) input(col++) = static_cast<float>(f);
    return input;
}

inline std::pair<MatX<float>, std::vector<bool>> assemble_training_set(
    const std::vector<LabeledAtom>& labels, const PredPtr& pred) {
    std::vector<const LabeledAtom*> rows;
    for (const auto& l : labels)
        if (l.atom.pred->name == pred->name) rows.push_back(&l);
    MatX<float> x(rows.size(), pred->input_dim());
    std::vector<bool> y(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = classifier_input(rows[i]->state, rows[i]->atom).transpose();
        y[i] = rows[i]->label;
    }
    return {std::move(x), std::move(y)};
}

struct PredicateEnsemble {
    PredPtr pred;
    std::vector<Mlp> members;
    bool converged = true;
    bool single_class = false;  // trained on one-class data (possible under ask-none)

    double prob(const State& x, const GroundAtom& atom) const {
        VecX<float> input = classifier_input(x, atom);
        double sum = 0;
        for (const auto& net : members) sum += static_cast<double>(net.prob(input));
        return sum / static_cast<double>(members.size());
    }
};

inline double entropy_of(double p) {
    double e = 0;
    if (p > 0) e -= p * std::log(p);
    if (p < 1) e -= (1 - p) * std::log(1 - p);
    return e;
}

class InterpretationSet : public AtomClassifier {
public:
    std::map<std::string, PredicateEnsemble> ensembles;

    const PredicateEnsemble& at(const std::string& pred_name) const {
        auto it = ensembles.find(pred_name);
        if (it == ensembles.end())
            throw std::invalid_argument("no interpretation for predicate " + pred_name);
        return it->second;
    }

    double prob(const State& x, const GroundAtom& atom) const {
        return at(atom.pred->name).prob(x, atom);
    }

    double entropy(const State& x, const GroundAtom& atom) const {
        return entropy_of(prob(x, atom));
    }

    // true iff the ensemble-mean probability strictly exceeds 0.5
    bool classify(const State& x, const GroundAtom& atom) const override {
        return prob(x, atom) > 0.5;
    }
};

// Memoizes trained ensembles on (predicate, rows, member count). Member rng
// streams depend only on (run seed, predicate, member index), so a retrain on
// unchanged data reproduces the cached ensemble bit for bit.
struct EnsembleCache {
    struct Entry {
        std::vector<Mlp> members;
        bool converged;
    };
    std::unordered_map<std::string, Entry> entries;
};

inline std::shared_ptr<InterpretationSet> train_interpretations(
    const std::vector<LabeledAtom>& labels, const std::vector<PredPtr>& predicates, int k,
    const TrainConfig& cfg, const Rng& run_rng, EnsembleCache* cache = nullptr, int threads = 1) {
    if (k < 1) throw std::invalid_argument("ensemble size must be >= 1");
    auto interp = std::make_shared<InterpretationSet>();

    struct Pending {
        std::string pred;
        std::string key;
        MatX<float> x;
        std::vector<bool> y;
    };
    std::vector<Pending> pending;

    for (const auto& pred : predicates) {
        auto [x, y] = assemble_training_set(labels, pred);
        if (y.empty()) throw std::runtime_error("predicate " + pred->name + " has no labeled examples");
        PredicateEnsemble e;
        e.pred = pred;
        bool any_true = false, any_false = false;
        for (bool b : y) (b ? any_true : any_false) = true;
        e.single_class = !(any_true && any_false);

        uint64_t h = fnv_bytes(0xcbf29ce484222325ULL, x.data(), sizeof(float) * x.size());
        for (bool b : y) h = fnv_bytes(h, &b, 1);
        std::string key = pred->name + "#" + std::to_string(k) + "#" + std::to_string(h);
        bool hit = false;
        if (cache) {
            auto it = cache->entries.find(key);
            if (it != cache->entries.end()) {
                e.members = it->second.members;
                e.converged = it->second.converged;
                hit = true;
            }
        }
        if (!hit) {
            e.members.resize(k);
            pending.push_back({pred->name, std::move(key), std::move(x), std::move(y)});
        }
        interp->ensembles.emplace(pred->name, std::move(e));
    }

    // each (predicate, member) job owns a stream derived from
    // (run seed, predicate name, member index), independent of the episode
    std::vector<std::pair<size_t, int>> jobs;
    for (size_t p = 0; p < pending.size(); ++p)
        for (int m = 0; m < k; ++m) jobs.emplace_back(p, m);
    std::vector<bool> member_ok(jobs.size(), true);
    parallel_for(static_cast<int>(jobs.size()), threads, [&](int j) {
        const auto& [p, m] = jobs[j];
        Rng stream = run_rng.child("interp").child(pending[p].pred, static_cast<uint64_t>(m));
        auto res = train_classifier<float>(pending[p].x, pending[p].y, cfg, stream);
        interp->ensembles[pending[p].pred].members[m] = std::move(res.net);
        member_ok[j] = res.converged;
    });
    for (size_t j = 0; j < jobs.size(); ++j)
        if (!member_ok[j]) interp->ensembles[pending[jobs[j].first].pred].converged = false;

    if (cache)
        for (const auto& p : pending) {
            const auto& e = interp->ensembles[p.pred];
            cache->entries[p.key] = {e.members, e.converged};
        }
    return interp;
}

}  // namespace apl
