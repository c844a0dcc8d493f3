#include <catch2/catch_amalgamated.hpp>

#include "apl/envs.hpp"
#include "apl/operators.hpp"
#include "oracles.hpp"

using namespace apl;
using oracle::TinyDomain;
using oracle::TransitionStore;

TEST_CASE("abstract_transitions: empty input, no-op transitions") {
    PickPlace1D env;
    REQUIRE(abstract_transitions({}, env.predicates(), env.oracle()).empty());

    Rng rng(3);
    State x = env.sample_init(rng, Split::explore);
    // miss every block: no-op transition abstracts to s == s'
    Action miss{env.controllers()[0], {}, {x.get(x.object_set().objects[0], 0) > 0.5 ? 0.0 : 1.0}};
    std::vector<Transition> ts{{x, miss, env.step(x, miss)}};
    auto ats = abstract_transitions(ts, env.predicates(), env.oracle());
    REQUIRE(ats.size() == 1);
    if (ts[0].pre == ts[0].post) REQUIRE(ats[0].pre == ats[0].post);
}

TEST_CASE("pickplace pick abstracts to delete HandEmpty, add Holding") {
    PickPlace1D env;
    Rng rng(6);
    State x;
    for (int i = 0; i < 50; ++i) {
        x = env.sample_init(rng, Split::explore);
        if (x.get(x.object_set().of_type("robot")[0], 2) > 0.5) break;
    }
    Object b0 = x.object_set().objects[x.object_set().find("b0")];
    Action pick{env.controllers()[0], {}, {x.get(b0, 0)}};
    std::vector<Transition> ts{{x, pick, env.step(x, pick)}};
    auto ats = abstract_transitions(ts, env.predicates(), env.oracle());
    auto adds = oracle::diff(ats[0].post, ats[0].pre);
    auto dels = oracle::diff(ats[0].pre, ats[0].post);
    REQUIRE(adds.size() == 1);
    REQUIRE(adds.begin()->str() == "Holding(rob,b0)");
    REQUIRE(dels.size() == 1);
    REQUIRE(dels.begin()->str() == "HandEmpty(rob)");
}

TEST_CASE("partitioning groups substitution-equivalent transitions") {
    TinyDomain d;
    TransitionStore store;
    Object o1 = d.obj("o1"), o2 = d.obj("o2"), o3 = d.obj("o3");
    GroundAtom A1{d.A, {o1}}, A2{d.A, {o2}}, B1{d.B, {o1}}, C1{d.C, {o1}}, C2{d.C, {o2}};

    // two "achieve C" transitions on different objects -> one partition
    store.add(d, {o1, o2}, {A1}, d.act, {}, {A1, C1});
    store.add(d, {o1, o2}, {A2}, d.act, {}, {A2, C2});
    // different effect signature (delete) -> second partition
    store.add(d, {o1, o2}, {A1, B1}, d.act, {}, {B1});
    // empty effects -> excluded
    store.add(d, {o1, o2}, {A1}, d.act, {}, {A1});

    auto ats = store.all();
    auto parts = partition_transitions(ats);
    REQUIRE(parts.size() == 2);
    REQUIRE(parts[0].members.size() == 2);
    REQUIRE(parts[1].members.size() == 1);

    auto groups = oracle::oracle_partition(ats);
    REQUIRE(groups.size() == 2);
    REQUIRE(groups[0] == std::vector<int>{0, 1});
    REQUIRE(groups[1] == std::vector<int>{2});
}

TEST_CASE("partitioning is isomorphism-aware, not name-order-dependent") {
    // relational chains whose name-sorted canonical forms differ but which
    // are equivalent up to substitution
    TinyDomain d;
    TransitionStore store;
    Object a = d.obj("a"), b = d.obj("b"), c = d.obj("c");
    Object p = d.obj("p"), q = d.obj("q"), r = d.obj("r");
    // chain a->b->c
    store.add(d, {a, b, c}, {}, d.act, {},
              {GroundAtom{d.R, {a, b}}, GroundAtom{d.R, {b, c}}});
    // chain q->p->r: sorted atom order breaks the chain order
    store.add(d, {p, q, r}, {}, d.act, {},
              {GroundAtom{d.R, {q, p}}, GroundAtom{d.R, {p, r}}});
    // NOT a chain: fork p->q, p->r stays separate
    store.add(d, {p, q, r}, {}, d.act, {},
              {GroundAtom{d.R, {p, q}}, GroundAtom{d.R, {p, r}}});

    auto ats = store.all();
    auto parts = partition_transitions(ats);
    REQUIRE(parts.size() == 2);
    REQUIRE(parts[0].members.size() == 2);

    auto groups = oracle::oracle_partition(ats);
    REQUIRE(groups.size() == 2);
    REQUIRE(groups[0] == std::vector<int>{0, 1});
}

TEST_CASE("partitioning respects controller identity and discrete args") {
    TinyDomain d;
    TransitionStore store;
    Object o1 = d.obj("o1"), o2 = d.obj("o2");
    GroundAtom C1{d.C, {o1}}, C2{d.C, {o2}};
    // same effects, different controllers -> different partitions
    store.add(d, {o1}, {}, d.act, {}, {C1});
    store.add(d, {o1}, {}, d.act_c, {}, {C1}, {0.5});
    // controller arg must align with the effect object
    store.add(d, {o1, o2}, {}, d.act1, {o1}, {C1});
    store.add(d, {o1, o2}, {}, d.act1, {o2}, {C2});  // same pattern -> joins
    store.add(d, {o1, o2}, {}, d.act1, {o2}, {C1});  // arg != effect object -> separate

    auto ats = store.all();
    auto parts = partition_transitions(ats);
    REQUIRE(parts.size() == 4);
    auto groups = oracle::oracle_partition(ats);
    REQUIRE(groups.size() == 4);
}

TEST_CASE("precondition intersection over lifted pre-states") {
    TinyDomain d;
    TransitionStore store;
    Object x = d.obj("x"), y = d.obj("y"), z = d.obj("z");
    // pre {A(x), B(x)} and {A(y)} with effect add C -> preconditions {A(?v)}
    store.add(d, {x, y}, {GroundAtom{d.A, {x}}, GroundAtom{d.B, {x}}}, d.act1, {x},
              {GroundAtom{d.A, {x}}, GroundAtom{d.B, {x}}, GroundAtom{d.C, {x}}});
    store.add(d, {x, y}, {GroundAtom{d.A, {y}}}, d.act1, {y},
              {GroundAtom{d.A, {y}}, GroundAtom{d.C, {y}}});
    // pre atoms over non-argument objects are dropped
    store.add(d, {x, y, z}, {GroundAtom{d.A, {y}}, GroundAtom{d.B, {z}}}, d.act1, {y},
              {GroundAtom{d.A, {y}}, GroundAtom{d.B, {z}}, GroundAtom{d.C, {y}}});

    auto ats = store.all();
    auto parts = partition_transitions(ats);
    REQUIRE(parts.size() == 1);
    auto ops = induce_operators(surviving_partitions(parts, 1));
    REQUIRE(ops.size() == 1);
    REQUIRE(ops[0].params.size() == 1);
    REQUIRE(ops[0].preconditions.size() == 1);
    REQUIRE(ops[0].preconditions[0].pred->name == "A");
    REQUIRE(ops[0].add_effects.size() == 1);

    // brute-force oracle agrees
    auto groups = oracle::oracle_partition(ats);
    auto pre = oracle::oracle_preconditions(ats, groups[0]);
    REQUIRE(pre.size() == 1);
    REQUIRE(pre.begin()->pred->name == "A");
}

TEST_CASE("min_data filter drops small partitions") {
    TinyDomain d;
    TransitionStore store;
    for (int i = 0; i < 9; ++i) {
        Object o = d.obj("o" + std::to_string(i));
        store.add(d, {o}, {}, d.act, {}, {GroundAtom{d.C, {o}}});
    }
    auto ats = store.all();
    auto parts = partition_transitions(ats);
    REQUIRE(parts.size() == 1);
    REQUIRE(parts[0].members.size() == 9);
    REQUIRE(surviving_partitions(parts, 10).empty());
    REQUIRE(surviving_partitions(parts, 9).size() == 1);
}

TEST_CASE("identical transitions keep the full lifted pre-state as preconditions") {
    TinyDomain d;
    TransitionStore store;
    Object x = d.obj("x");
    for (int i = 0; i < 3; ++i)
        store.add(d, {x}, {GroundAtom{d.A, {x}}, GroundAtom{d.B, {x}}}, d.act1, {x},
                  {GroundAtom{d.A, {x}}, GroundAtom{d.B, {x}}, GroundAtom{d.C, {x}}});
    auto ats = store.all();
    auto parts = partition_transitions(ats);
    auto ops = induce_operators(surviving_partitions(parts, 1));
    REQUIRE(ops.size() == 1);
    REQUIRE(ops[0].preconditions.size() == 2);
}

TEST_CASE("applicability and the abstract transition function") {
    TinyDomain d;
    Object o = d.obj("o"), o2 = d.obj("o2");
    Variable v{"?x0", d.obj_t};
    Operator op{"Act-0", {v}, {}, {LiftedAtom{d.B, {v}}}, {LiftedAtom{d.A, {v}}}, d.act1, {0}};

    GroundOperator g{&op, 0, {o}};
    AbstractState s{GroundAtom{d.A, {o}}};
    REQUIRE(g.applicable(s));  // empty preconditions: applicable everywhere
    AbstractState t = g.apply(s);
    REQUIRE(t == AbstractState{GroundAtom{d.B, {o}}});

    Operator guarded{"Act-1", {v}, {LiftedAtom{d.A, {v}}}, {LiftedAtom{d.B, {v}}},
                     {LiftedAtom{d.A, {v}}}, d.act1, {0}};
    GroundOperator g2{&guarded, 0, {o2}};
    REQUIRE(!g2.applicable(s));
    REQUIRE_THROWS_AS(g2.apply(s), std::logic_error);

    // F postconditions: adds present, deletes absent
    GroundOperator g3{&guarded, 0, {o}};
    AbstractState u = g3.apply(s);
    REQUIRE(u.count(GroundAtom{d.B, {o}}));
    REQUIRE(!u.count(GroundAtom{d.A, {o}}));
}

TEST_CASE("grounding enumerates injective type-correct substitutions") {
    REQUIRE(ground_operators({}, {}).empty());

    TinyDomain d;
    Object o1 = d.obj("o1"), o2 = d.obj("o2"), o3 = d.obj("o3");
    Variable v0{"?x0", d.obj_t}, v1{"?x1", d.obj_t};
    Operator unary{"U-0", {v0}, {}, {LiftedAtom{d.A, {v0}}}, {}, d.act1, {0}};
    REQUIRE(ground_operators({unary}, {o1, o2, o3}).size() == 3);

    Operator stack2{"S-0", {v0, v1}, {}, {LiftedAtom{d.R, {v0, v1}}}, {}, d.act1, {0}};
    auto gs = ground_operators({stack2}, {o1, o2, o3});
    REQUIRE(gs.size() == 6);  // ordered pairs of distinct objects
    for (const auto& g : gs) REQUIRE(!(g.binding[0] == g.binding[1]));
}

TEST_CASE("learned operators from demo data are sound on their training set") {
    for (const auto& name : {"pickplace1d", "blocks"}) {
        auto env = make_environment(name);
        Rng rng(19);
        auto demos = generate_demonstrations(*env, 12, rng);
        std::vector<Transition> transitions;
        for (const auto& demo : demos) {
            auto states = replay(*env, demo.task.init, demo.plan);
            for (size_t i = 0; i + 1 < states.size(); ++i)
                transitions.push_back({states[i], demo.plan[i], states[i + 1]});
        }
        auto ats = abstract_transitions(transitions, env->predicates(), env->oracle());
        auto parts = partition_transitions(ats);
        auto kept = surviving_partitions(parts, 2);
        auto ops = induce_operators(kept);
        REQUIRE(!ops.empty());

        for (size_t pi = 0; pi < kept.size(); ++pi) {
            for (const auto& member : kept[pi]->members) {
                GroundOperator g{&ops[pi], static_cast<int>(pi), member.binding};
                REQUIRE(g.applicable(member.t->pre));        // precondition soundness
                REQUIRE(g.apply(member.t->pre) == member.t->post);  // effect soundness
            }
        }

        // determinism: rebuilding from the same dataset gives identical text
        auto parts2 = partition_transitions(ats);
        auto ops2 = induce_operators(surviving_partitions(parts2, 2));
        REQUIRE(ops.size() == ops2.size());
        for (size_t i = 0; i < ops.size(); ++i) REQUIRE(ops[i].pddl() == ops2[i].pddl());
    }
}

TEST_CASE("every nonempty-effect transition lands in exactly one partition") {
    auto env = make_environment("blocks");
    Rng rng(23);
    std::vector<Transition> transitions;
    State x = env->sample_init(rng, Split::explore);
    for (int i = 0; i < 120; ++i) {
        Action u = random_action(*env, x, rng);
        State y = env->step(x, u);
        transitions.push_back({x, u, y});
        x = y;
        if (i % 40 == 39) x = env->sample_init(rng, Split::explore);
    }
    auto ats = abstract_transitions(transitions, env->predicates(), env->oracle());
    auto parts = partition_transitions(ats);
    int nonempty = 0;
    for (const auto& at : ats)
        if (at.pre != at.post) nonempty++;
    int total_members = 0;
    for (const auto& p : parts) total_members += static_cast<int>(p.members.size());
    REQUIRE(total_members == nonempty);

    // implementation partition structure matches the brute-force oracle
    auto groups = oracle::oracle_partition(ats);
    REQUIRE(groups.size() == parts.size());
    std::set<std::set<int>> impl_groups, oracle_groups;
    std::map<const AbstractTransition*, int> index;
    for (size_t i = 0; i < ats.size(); ++i) index[&ats[i]] = static_cast<int>(i);
    for (const auto& p : parts) {
        std::set<int> g;
        for (const auto& m : p.members) g.insert(index[m.t]);
        impl_groups.insert(g);
    }
    for (const auto& g : groups) oracle_groups.insert(std::set<int>(g.begin(), g.end()));
    REQUIRE(impl_groups == oracle_groups);
}

TEST_CASE("sampler training: trivial for dim-0, clamped draws, demo-centered placements") {
    PickPlace1D env;
    Rng rng(29);
    auto demos = generate_demonstrations(env, 25, rng);
    std::vector<Transition> transitions;
    for (const auto& demo : demos) {
        auto states = replay(env, demo.task.init, demo.plan);
        for (size_t i = 0; i + 1 < states.size(); ++i)
            transitions.push_back({states[i], demo.plan[i], states[i + 1]});
    }
    auto ats = abstract_transitions(transitions, env.predicates(), env.oracle());
    auto parts = partition_transitions(ats);
    auto kept = surviving_partitions(parts, 5);
    auto ops = induce_operators(kept);

    TrainConfig cfg;
    cfg.epochs = 4000;
    cfg.init_sigma = 0.1;
    Rng run_rng(7);
    auto samplers = train_samplers(kept, cfg, run_rng);
    REQUIRE(samplers.size() == ops.size());

    // find the place-onto-target partition (adds Covers)
    int place_idx = -1;
    for (size_t i = 0; i < ops.size(); ++i)
        for (const auto& a : ops[i].add_effects)
            if (a.pred->name == "Covers") place_idx = static_cast<int>(i);
    REQUIRE(place_idx >= 0);

    // sampled placements concentrate near target-covering poses when drawn
    // from a holding state (its training distribution)
    Rng draw_rng(3);
    State x = env.sample_init(draw_rng, Split::explore);
    auto grounded = ground_operators(ops, x.objects());
    int checked = 0;
    for (const auto& g : grounded) {
        if (g.op_index != place_idx) continue;
        State held = x;
        Object rob = held.object_set().of_type("robot").at(0);
        for (const auto& b : held.object_set().of_type("block"))
            held.set(b, 0, std::abs(held.get(b, 0)));
        const Object* tgt = nullptr;
        const Object* blk = nullptr;
        for (size_t i = 0; i < g.binding.size(); ++i) {
            if (g.binding[i].type->name == "target") tgt = &g.binding[i];
            if (g.binding[i].type->name == "block") blk = &g.binding[i];
        }
        REQUIRE(tgt);
        REQUIRE(blk);
        held.set(*blk, 0, PickPlace1D::kHeldPose);
        held.set(rob, 2, 0.0);

        for (int rep = 0; rep < 5; ++rep) {
            auto draw = samplers[place_idx](held, g.binding, draw_rng);
            REQUIRE(draw.size() == 1);
            REQUIRE(draw[0] >= 0.0);
            REQUIRE(draw[0] <= 1.0);  // clamped to controller bounds
        }
        // the mean lands within the target span
        double acc = 0;
        for (int rep = 0; rep < 30; ++rep) acc += samplers[place_idx](held, g.binding, draw_rng)[0];
        acc /= 30;
        REQUIRE(std::abs(acc - held.get(*tgt, 0)) < 0.1);
        checked++;
    }
    REQUIRE(checked >= 1);

    // dim-0 controllers get the trivial sampler
    BlocksEnv blocks;
    Rng brng(31);
    auto bdemos = generate_demonstrations(blocks, 6, brng);
    std::vector<Transition> bts;
    for (const auto& demo : bdemos) {
        auto states = replay(blocks, demo.task.init, demo.plan);
        for (size_t i = 0; i + 1 < states.size(); ++i)
            bts.push_back({states[i], demo.plan[i], states[i + 1]});
    }
    auto bats = abstract_transitions(bts, blocks.predicates(), blocks.oracle());
    auto bparts = partition_transitions(bats);
    auto bkept = surviving_partitions(bparts, 1);
    auto bops = induce_operators(bkept);
    auto bsamplers = train_samplers(bkept, cfg, run_rng);
    for (size_t i = 0; i < bops.size(); ++i)
        if (bops[i].controller->continuous_dim == 0) {
            State bx = blocks.sample_init(brng, Split::explore);
            auto d = bsamplers[i](bx, {}, brng);
            REQUIRE(d.empty());
        }
}

TEST_CASE("operator pretty-print golden form") {
    TinyDomain d;
    Variable v0{"?x0", d.obj_t}, v1{"?x1", d.obj_t};
    Operator op{"Act1-0",
                {v0, v1},
                {LiftedAtom{d.A, {v0}}},
                {LiftedAtom{d.R, {v0, v1}}},
                {LiftedAtom{d.A, {v0}}},
                d.act1,
                {0}};
    std::string expected =
        "(:action Act1-0\n"
        "  :parameters (?x0 - obj ?x1 - obj)\n"
        "  :precondition (and (A ?x0))\n"
        "  :effect (and (R ?x0 ?x1) (not (A ?x0)))\n"
        "  :controller Act1(?x0))\n";
    REQUIRE(op.pddl() == expected);
}
