#pragma once

// Run configuration: approach table, flat key=value config files, CLI
// overrides. Approach names map to (strategy, query policy) pairs.

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "apl/explore.hpp"
#include "apl/planner.hpp"

namespace apl {

struct RunConfig {
    std::string env = "pickplace1d";
    std::string approach = "main";
    uint64_t seed = 0;
    int budget = 1000;       // exploration transitions
    int eval_tasks = 50;
    uint64_t eval_seed = 12345;  // fixed bank, shared across approaches
    int demos = 50;
    int ensemble_size = 10;
    int epochs = 10000;      // 100000 at paper scale
    int eval_every = 1;
    int min_data = 10;
    int threads = 2;
    double lr = 1e-3;
    double init_sigma = 1.0;
    double sampler_init_sigma = 0.1;
    int max_restarts = 5;
    std::string out_dir = "out";
    bool emit_grids = true;

    NoiseConfig noise;
    PlannerConfig planner;
    ExploreConfig explore;

    void apply_approach() {
        static const std::map<std::string, std::pair<Strategy, QueryPolicy>> table = {
            {"main", {Strategy::lookahead, QueryPolicy::entropy}},
            {"glib", {Strategy::glib, QueryPolicy::entropy}},
            {"random_actions", {Strategy::random, QueryPolicy::entropy}},
            {"no_actions", {Strategy::none, QueryPolicy::entropy}},
            {"ask_all", {Strategy::lookahead, QueryPolicy::all}},
            {"ask_none", {Strategy::lookahead, QueryPolicy::none}},
            {"ask_randomly", {Strategy::lookahead, QueryPolicy::random}},
        };
        auto it = table.find(approach);
        if (it == table.end()) throw std::invalid_argument("unknown approach " + approach);
        explore.strategy = it->second.first;
        explore.query_policy = it->second.second;
    }

    // Appendix-scale preset: full budget and training lengths
    void apply_paper_scale() {
        budget = 1000;
        epochs = 100000;
        eval_tasks = 50;
        demos = 50;
        ensemble_size = 10;
        eval_every = 1;
    }

    TrainConfig classifier_train() const {
        TrainConfig c;
        c.epochs = epochs;
        c.lr = lr;
        c.init_sigma = init_sigma;
        c.max_restarts = max_restarts;
        return c;
    }

    TrainConfig sampler_train() const {
        TrainConfig c = classifier_train();
        c.init_sigma = sampler_init_sigma;
        return c;
    }
};

inline void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto as_int = [&] { return std::stoi(value); };
    auto as_u64 = [&] { return std::stoull(value); };
    auto as_real = [&] { return std::stod(value); };
    if (key == "env") cfg.env = value;
    else if (key == "approach") cfg.approach = value;
    else if (key == "seed") cfg.seed = as_u64();
    else if (key == "budget") cfg.budget = as_int();
    else if (key == "eval_tasks") cfg.eval_tasks = as_int();
    else if (key == "eval_seed") cfg.eval_seed = as_u64();
    else if (key == "demos") cfg.demos = as_int();
    else if (key == "ensemble_size") cfg.ensemble_size = as_int();
    else if (key == "epochs") cfg.epochs = as_int();
    else if (key == "eval_every") cfg.eval_every = as_int();
    else if (key == "min_data") cfg.min_data = as_int();
    else if (key == "threads") cfg.threads = as_int();
    else if (key == "lr") cfg.lr = as_real();
    else if (key == "init_sigma") cfg.init_sigma = as_real();
    else if (key == "sampler_init_sigma") cfg.sampler_init_sigma = as_real();
    else if (key == "max_restarts") cfg.max_restarts = as_int();
    else if (key == "out") cfg.out_dir = value;
    else if (key == "emit_grids") cfg.emit_grids = value == "1" || value == "true";
    else if (key == "place_noise_sigma") cfg.noise.place_noise_sigma = as_real();
    else if (key == "label_flip_prob") cfg.noise.label_flip_prob = as_real();
    else if (key == "n_abstract") cfg.planner.n_abstract = as_int();
    else if (key == "n_samples") cfg.planner.n_samples = as_int();
    else if (key == "timeout_s") cfg.planner.timeout_s = as_real();
    else if (key == "heuristic") {
        if (value == "lmcut") cfg.planner.heuristic = Heuristic::lmcut;
        else if (value == "hadd") cfg.planner.heuristic = Heuristic::hadd;
        else throw std::invalid_argument("heuristic must be lmcut or hadd");
    } else if (key == "alpha") cfg.explore.alpha = as_real();
    else if (key == "max_trajs") cfg.explore.max_trajs = as_int();
    else if (key == "max_horizon") cfg.explore.max_horizon = as_int();
    else if (key == "random_query_prob") cfg.explore.random_query_prob = as_real();
    else if (key == "glib_retries") cfg.explore.glib_retries = as_int();
    else if (key == "glib_timeout_s") cfg.explore.glib_timeout_s = as_real();
    else if (key == "strategy") {
        if (value == "lookahead") cfg.explore.strategy = Strategy::lookahead;
        else if (value == "glib") cfg.explore.strategy = Strategy::glib;
        else if (value == "random") cfg.explore.strategy = Strategy::random;
        else if (value == "none") cfg.explore.strategy = Strategy::none;
        else throw std::invalid_argument("bad strategy " + value);
    } else if (key == "query_policy") {
        if (value == "entropy") cfg.explore.query_policy = QueryPolicy::entropy;
        else if (value == "all") cfg.explore.query_policy = QueryPolicy::all;
        else if (value == "none") cfg.explore.query_policy = QueryPolicy::none;
        else if (value == "random") cfg.explore.query_policy = QueryPolicy::random;
        else throw std::invalid_argument("bad query_policy " + value);
    } else if (key == "paper_scale") {
        if (value == "1" || value == "true") cfg.apply_paper_scale();
    } else {
        throw std::invalid_argument("unknown config key " + key);
    }
}

// flat "key = value" lines; # starts a comment
inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
        apply_key(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

}  // namespace apl
