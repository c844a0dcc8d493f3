#include <catch2/catch_amalgamated.hpp>

#include "apl/envs.hpp"
#include "apl/planner.hpp"
#include "oracles.hpp"

using namespace apl;
using oracle::TinyDomain;

namespace {

Clock::time_point far_deadline() { return Clock::now() + std::chrono::seconds(600); }

Simulator make_sim(const Environment& env) {
    return [&env](const State& x, const Action& u) { return env.step(x, u); };
}

}  // namespace

TEST_CASE("lmcut: satisfied goals cost zero, one-step goals cost one") {
    TinyDomain d;
    Object o = d.obj("o");
    Variable v{"?x0", d.obj_t};
    std::vector<Operator> ops{
        Operator{"mk-b", {v}, {LiftedAtom{d.A, {v}}}, {LiftedAtom{d.B, {v}}}, {}, d.act1, {0}}};
    auto ground = ground_operators(ops, {o});
    auto universe = ground_all_atoms({d.A, d.B}, {o});

    AbstractState s{GroundAtom{d.A, {o}}};
    REQUIRE(lmcut_value(s, {GroundAtom{d.A, {o}}}, ground, universe) == 0.0);
    REQUIRE(lmcut_value(s, {GroundAtom{d.B, {o}}}, ground, universe) == 1.0);
    // relaxed-unreachable goal
    REQUIRE(lmcut_value({}, {GroundAtom{d.B, {o}}}, ground, universe) == kInf);
}

TEST_CASE("lmcut admissibility and A* optimality against exhaustive BFS") {
    TinyDomain d;
    Rng rng(99);
    int solvable_checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        auto inst = oracle::random_instance(d, rng, trial % 2 == 0);
        GroundProblem gp(inst.universe, inst.ground, inst.goal);
        auto bits = gp.to_bits(inst.init);
        double h = lmcut(gp, bits);
        int opt = oracle::bfs_optimal(inst.init, inst.goal, inst.ground);

        if (opt >= 0) {
            REQUIRE(h <= double(opt));  // admissible
            // lmcut >= hmax >= 0
            std::vector<double> cost(inst.ground.size(), 1.0), table;
            gp.hmax_table(bits, cost, table);
            REQUIRE(h >= gp.hmax_goal(table));

            PlannerConfig cfg;
            cfg.n_abstract = 1;
            AbstractPlanStream stream(inst.init, inst.goal, inst.ground, inst.universe, cfg,
                                      far_deadline());
            auto plan = stream.next();
            REQUIRE(plan.has_value());
            REQUIRE(static_cast<int>(plan->sketch.size()) == opt);  // A* is optimal
            solvable_checked++;
        } else {
            // BFS-unreachable: A* must not find a plan either
            PlannerConfig cfg;
            cfg.n_abstract = 1;
            AbstractPlanStream stream(inst.init, inst.goal, inst.ground, inst.universe, cfg,
                                      far_deadline());
            REQUIRE(!stream.next().has_value());
        }
    }
    REQUIRE(solvable_checked >= 15);
}

TEST_CASE("plan stream: empty plan first when the goal already holds") {
    TinyDomain d;
    Object o = d.obj("o");
    AbstractState s{GroundAtom{d.A, {o}}};
    PlannerConfig cfg;
    AbstractPlanStream stream(s, {GroundAtom{d.A, {o}}}, {}, ground_all_atoms({d.A}, {o}), cfg,
                              far_deadline());
    auto plan = stream.next();
    REQUIRE(plan.has_value());
    REQUIRE(plan->sketch.empty());
    REQUIRE(plan->subgoals.size() == 1);
}

TEST_CASE("plan stream yields distinct sketches in nondecreasing cost order, capped") {
    BlocksEnv env;
    Rng rng(5);
    ModelSet models = env.oracle_models();
    State init = env.sample_init(rng, Split::eval);
    auto blocks = init.object_set().of_type("block");
    std::set<GroundAtom> goal{GroundAtom{env.predicate("On"), {blocks[0], blocks[1]}}};

    AbstractState s0 = abstract_state(init, models.predicates, *models.interp);
    auto ground = ground_operators(models.operators, init.objects());
    auto universe = ground_all_atoms(models.predicates, init.objects());
    PlannerConfig cfg;  // n_abstract = 8
    AbstractPlanStream stream(s0, goal, ground, universe, cfg, far_deadline());

    std::vector<std::string> sketches;
    size_t prev_len = 0;
    while (auto plan = stream.next()) {
        std::string key;
        for (const auto& op : plan->sketch) key += op.str() + ";";
        sketches.push_back(key);
        REQUIRE(plan->sketch.size() >= prev_len);  // nondecreasing f = g at goals
        prev_len = plan->sketch.size();
        // plan invariants: s0 start, goal at the end, F-consistent chain
        REQUIRE(plan->subgoals.front() == s0);
        for (const auto& g : goal) REQUIRE(plan->subgoals.back().count(g));
        for (size_t i = 0; i < plan->sketch.size(); ++i)
            REQUIRE(plan->sketch[i].apply(plan->subgoals[i]) == plan->subgoals[i + 1]);
    }
    REQUIRE(sketches.size() == 8);
    std::sort(sketches.begin(), sketches.end());
    REQUIRE(std::adjacent_find(sketches.begin(), sketches.end()) == sketches.end());
}

TEST_CASE("blocks: first plan for On(b0,b1) is pick then stack") {
    BlocksEnv env;
    Rng rng(8);
    ModelSet models = env.oracle_models();
    // all blocks on the table so the two-step plan is optimal
    State init;
    for (int i = 0; i < 60; ++i) {
        init = env.sample_init(rng, Split::explore);
        bool all_table = true;
        for (const auto& b : init.object_set().of_type("block"))
            if (init.get(b, 2) > 0.1) all_table = false;
        if (all_table) break;
    }
    auto blocks = init.object_set().of_type("block");
    std::set<GroundAtom> goal{GroundAtom{env.predicate("On"), {blocks[0], blocks[1]}}};
    AbstractState s0 = abstract_state(init, models.predicates, *models.interp);
    auto ground = ground_operators(models.operators, init.objects());
    auto universe = ground_all_atoms(models.predicates, init.objects());
    PlannerConfig cfg;
    AbstractPlanStream stream(s0, goal, ground, universe, cfg, far_deadline());
    auto plan = stream.next();
    REQUIRE(plan.has_value());
    REQUIRE(plan->sketch.size() == 2);
    REQUIRE(plan->sketch[0].str() == "PickFromTable(rob," + blocks[0].name + ")");
    REQUIRE(plan->sketch[1].str() == "Stack(rob," + blocks[0].name + "," + blocks[1].name + ")");
}

TEST_CASE("refine: empty plans, dim-0 single try, and environment validity") {
    BlocksEnv env;
    Rng rng(12);
    ModelSet models = env.oracle_models();
    State init = env.sample_init(rng, Split::explore);
    AbstractState s0 = abstract_state(init, models.predicates, *models.interp);

    PlannerConfig cfg;
    Rng refine_rng(1);
    AbstractPlan empty;
    empty.subgoals = {s0};
    auto r0 = refine(empty, init, models, make_sim(env), cfg, refine_rng, far_deadline());
    REQUIRE(r0.ok);
    REQUIRE(r0.actions.empty());

    // a full solve whose actions replay through the subgoal sequence
    auto blocks = init.object_set().of_type("block");
    std::set<GroundAtom> goal{GroundAtom{env.predicate("On"), {blocks[1], blocks[2]}}};
    auto ground = ground_operators(models.operators, init.objects());
    auto universe = ground_all_atoms(models.predicates, init.objects());
    AbstractPlanStream stream(s0, goal, ground, universe, cfg, far_deadline());
    while (auto plan = stream.next()) {
        Rng rr(3);
        auto r = refine(*plan, init, models, make_sim(env), cfg, rr, far_deadline());
        if (!r.ok) continue;
        REQUIRE(r.actions.size() == plan->sketch.size());
        State x = init;
        for (size_t i = 0; i < r.actions.size(); ++i) {
            x = env.step(x, r.actions[i]);
            REQUIRE(abstract_state(x, models.predicates, *models.interp) == plan->subgoals[i + 1]);
        }
        REQUIRE(holds(goal, x, env.oracle()));
        return;
    }
    FAIL("no refinable plan found");
}

TEST_CASE("solve: trivial goals, exhausted plans, unreachable goals, timeout") {
    PickPlace1D env;
    Rng rng(31);
    ModelSet models = env.oracle_models();
    State init = env.sample_init(rng, Split::explore);

    PlannerConfig cfg;
    Rng solve_rng(2);
    // trivially satisfied goal: empty plan succeeds
    Task trivial{init, {}};
    auto r1 = solve(trivial, models, cfg, make_sim(env), solve_rng);
    REQUIRE(r1.status == SolveStatus::success);
    REQUIRE(r1.actions.empty());

    Task task = env.sample_task(rng, Split::eval);
    // n_abstract = 0 forces plans_exhausted
    PlannerConfig zero = cfg;
    zero.n_abstract = 0;
    REQUIRE(solve(task, models, zero, make_sim(env), solve_rng).status ==
            SolveStatus::plans_exhausted);

    // goal no operator can reach: operators stripped out
    ModelSet no_ops = models;
    no_ops.operators.clear();
    no_ops.samplers.clear();
    REQUIRE(solve(task, no_ops, cfg, make_sim(env), solve_rng).status ==
            SolveStatus::abstract_unreachable);

    // zero timeout
    PlannerConfig quick = cfg;
    quick.timeout_s = 0.0;
    REQUIRE(solve(task, models, quick, make_sim(env), solve_rng).status == SolveStatus::timeout);
}

TEST_CASE("solve with oracle models clears pickplace1d and blocks tasks") {
    for (const auto& name : {"pickplace1d", "blocks"}) {
        auto env = make_environment(name);
        ModelSet models = env->oracle_models();
        Rng rng(41);
        PlannerConfig cfg;
        for (int i = 0; i < 5; ++i) {
            Task task = env->sample_task(rng, Split::eval);
            Rng srng(100 + i);
            auto result = solve(task, models, cfg, make_sim(*env), srng);
            REQUIRE(result.status == SolveStatus::success);
            REQUIRE(static_cast<int>(result.actions.size()) <= env->horizon());
            State x = task.init;
            for (const auto& u : result.actions) x = env->step(x, u);
            REQUIRE(holds(task.goal, x, env->oracle()));
        }
    }
}

TEST_CASE("hadd heuristic solves as a fallback") {
    BlocksEnv env;
    ModelSet models = env.oracle_models();
    Rng rng(77);
    Task task = env.sample_task(rng, Split::eval);
    PlannerConfig cfg;
    cfg.heuristic = Heuristic::hadd;
    Rng srng(1);
    auto res = solve(task, models, cfg, make_sim(env), srng);
    REQUIRE(res.status == SolveStatus::success);
}

TEST_CASE("solve is deterministic under a fixed seed") {
    BlocksEnv env;
    ModelSet models = env.oracle_models();
    Rng rng(55);
    Task task = env.sample_task(rng, Split::eval);
    PlannerConfig cfg;
    Rng a(7), b(7);
    auto ra = solve(task, models, cfg, make_sim(env), a);
    auto rb = solve(task, models, cfg, make_sim(env), b);
    REQUIRE(ra.status == rb.status);
    REQUIRE(ra.actions.size() == rb.actions.size());
    for (size_t i = 0; i < ra.actions.size(); ++i)
        REQUIRE(to_text(ra.actions[i]) == to_text(rb.actions[i]));
}

TEST_CASE("demo-trained samplers refine most two-step pickplace plans") {
    PickPlace1D env;
    Rng rng(61);
    auto demos = generate_demonstrations(env, 30, rng);
    std::vector<Transition> transitions;
    for (const auto& demo : demos) {
        auto states = replay(env, demo.task.init, demo.plan);
        for (size_t i = 0; i + 1 < states.size(); ++i)
            transitions.push_back({states[i], demo.plan[i], states[i + 1]});
    }
    auto ats = abstract_transitions(transitions, env.predicates(), env.oracle());
    auto parts = partition_transitions(ats);
    auto kept = surviving_partitions(parts, 10);
    ModelSet models;
    models.predicates = env.predicates();
    models.interp = env.oracle_ptr();
    models.operators = induce_operators(kept);
    TrainConfig tc;
    tc.epochs = 10000;
    tc.init_sigma = 0.1;
    Rng train_rng(5);
    models.samplers = train_samplers(kept, tc, train_rng);

    PlannerConfig cfg;
    int attempted = 0, refined = 0;
    for (int i = 0; i < 40 && attempted < 12; ++i) {
        Task task = env.sample_task(rng, Split::eval);
        AbstractState s0 = abstract_state(task.init, models.predicates, *models.interp);
        auto ground = ground_operators(models.operators, task.init.objects());
        auto universe = ground_all_atoms(models.predicates, task.init.objects());
        AbstractPlanStream stream(s0, task.goal, ground, universe, cfg, far_deadline());
        auto plan = stream.next();
        if (!plan || plan->sketch.size() != 2) continue;
        attempted++;
        Rng rr(200 + i);
        if (refine(*plan, task.init, models, make_sim(env), cfg, rr, far_deadline()).ok) refined++;
    }
    REQUIRE(attempted >= 10);
    REQUIRE(double(refined) >= 0.8 * double(attempted));
}
