#include <catch2/catch_amalgamated.hpp>

#include "apl/core.hpp"
#include "apl/rng.hpp"

using namespace apl;

namespace {

struct ConstClassifier : AtomClassifier {
    bool value;
    explicit ConstClassifier(bool v) : value(v) {}
    bool classify(const State&, const GroundAtom&) const override { return value; }
};

// small hand-built domain mirroring a two-block pick-and-place world
struct Fixture {
    TypePtr block = make_type("block", {"pose", "width"});
    TypePtr target = make_type("target", {"pose", "width"});
    TypePtr robot = make_type("robot", {"pose_x", "pose_y", "fingers"});
    PredPtr covers = make_predicate("Covers", {block, target});
    PredPtr holding = make_predicate("Holding", {robot, block});
    PredPtr hand_empty = make_predicate("HandEmpty", {robot});

    Object b0{"b0", block}, b1{"b1", block};
    Object t0{"t0", target}, t1{"t1", target};
    Object rob{"rob", robot};

    State state() const {
        auto roster = std::make_shared<const ObjectSet>(
            std::vector<Object>{rob, b1, t0, b0, t1});
        std::vector<double> feats(roster->total_dim, 0.0);
        State x(roster, feats);
        x.set(b0, "pose", 0.30);
        x.set(b0, "width", 0.12);
        x.set(b1, "pose", 0.70);
        x.set(b1, "width", 0.14);
        x.set(t0, "pose", 0.31);
        x.set(t0, "width", 0.06);
        x.set(t1, "pose", 0.9);
        x.set(t1, "width", 0.05);
        x.set(rob, "fingers", 1.0);
        return x;
    }
};

}  // namespace

TEST_CASE("object roster is canonically sorted and rejects duplicates") {
    Fixture f;
    State x = f.state();
    std::vector<std::string> names;
    for (const auto& o : x.objects()) names.push_back(o.name);
    REQUIRE(names == std::vector<std::string>{"b0", "b1", "rob", "t0", "t1"});
    REQUIRE_THROWS_AS(ObjectSet({f.b0, f.b0}), std::invalid_argument);
}

TEST_CASE("feature access is total and dimension-stable") {
    Fixture f;
    State x = f.state();
    REQUIRE(x[f.b0].size() == 2);
    REQUIRE(x[f.rob].size() == 3);
    REQUIRE(x.get(f.b0, "pose") == Catch::Approx(0.30));
    REQUIRE(x.get(f.rob, "fingers") == 1.0);
    Object ghost{"ghost", f.block};
    REQUIRE(!x.has(ghost));
    REQUIRE_THROWS_AS(x[ghost], std::invalid_argument);
}

TEST_CASE("holds is the conjunction of classifier outputs") {
    Fixture f;
    State x = f.state();
    ConstClassifier yes(true), no(false);
    std::set<GroundAtom> empty;
    REQUIRE(holds(empty, x, no));  // empty conjunction
    std::set<GroundAtom> goal{GroundAtom{f.covers, {f.b0, f.t0}}};
    REQUIRE(holds(goal, x, yes));
    REQUIRE(!holds(goal, x, no));
    std::set<GroundAtom> bad{GroundAtom{f.covers, {Object{"ghost", f.block}, f.t0}}};
    REQUIRE_THROWS_AS(holds(bad, x, yes), std::invalid_argument);
}

TEST_CASE("ground_all_atoms enumerates all type-consistent substitutions") {
    Fixture f;
    State x = f.state();

    REQUIRE(ground_all_atoms({}, x.objects()).empty());

    auto unary = ground_all_atoms({make_predicate("P", {f.block})}, x.objects());
    REQUIRE(unary.size() == 2);

    auto all = ground_all_atoms({f.covers, f.holding, f.hand_empty}, x.objects());
    REQUIRE(all.size() == 4 + 2 + 1);

    // order independence: roster permutation does not change the result
    std::vector<Object> shuffled{f.t1, f.b0, f.rob, f.t0, f.b1};
    auto again = ground_all_atoms({f.covers, f.holding, f.hand_empty}, shuffled);
    REQUIRE(all == again);

    // |result| = sum over predicates of products of per-type object counts,
    // including predicates that reuse a type (product semantics)
    auto pp = ground_all_atoms({make_predicate("Pair", {f.block, f.block})}, x.objects());
    REQUIRE(pp.size() == 4);
}

TEST_CASE("atoms order lexicographically and print as Name(args)") {
    Fixture f;
    GroundAtom a{f.covers, {f.b0, f.t0}};
    GroundAtom b{f.covers, {f.b0, f.t1}};
    GroundAtom c{f.hand_empty, {f.rob}};
    REQUIRE(a < b);
    REQUIRE(a < c);
    REQUIRE(a.str() == "Covers(b0,t0)");
    REQUIRE(c.str() == "HandEmpty(rob)");
}

TEST_CASE("action validation checks signature and bounds arity") {
    Fixture f;
    auto ctrl = make_controller("PickPlace", {}, {{0.0, 1.0}});
    Action ok{ctrl, {}, {0.5}};
    REQUIRE_NOTHROW(check_action(ok));
    Action wrong_dim{ctrl, {}, {0.5, 0.5}};
    REQUIRE_THROWS_AS(check_action(wrong_dim), std::invalid_argument);
    auto ctrl2 = make_controller("Pick", {f.robot, f.block}, {});
    Action wrong_type{ctrl2, {f.rob, f.t0}, {}};
    REQUIRE_THROWS_AS(check_action(wrong_type), std::invalid_argument);
    REQUIRE_THROWS_AS(make_controller("Bad", {}, {{1.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("text serialization is stable") {
    Fixture f;
    State x = f.state();
    std::string expected =
        "b0 block 0.3 0.12\n"
        "b1 block 0.7 0.14\n"
        "rob robot 0 0 1\n"
        "t0 target 0.31 0.06\n"
        "t1 target 0.9 0.05\n";
    REQUIRE(to_text(x) == expected);

    auto ctrl = make_controller("PickPlace", {}, {{0.0, 1.0}});
    Action u{ctrl, {}, {0.25}};
    REQUIRE(to_text(u) == "PickPlace()[0.25]");

    Task t{x, {GroundAtom{f.covers, {f.b0, f.t0}}}};
    REQUIRE(to_text(t) == "init:\n" + expected + "goal: Covers(b0,t0)\n");
}

TEST_CASE("rng substreams are independent of parent consumption") {
    Rng a(7);
    Rng b(7);
    (void)a.u64();
    (void)a.u64();
    REQUIRE(a.child("x").u64() == b.child("x").u64());
    REQUIRE(a.child("x").u64() != b.child("y").u64());
    REQUIRE(a.child("x", 0).u64() != b.child("x", 1).u64());
}

TEST_CASE("rng uniform_int and uniform stay in range") {
    Rng r(3);
    for (int i = 0; i < 1000; ++i) {
        int k = r.uniform_int(7);
        REQUIRE(k >= 0);
        REQUIRE(k < 7);
        double u = r.uniform(2.0, 3.0);
        REQUIRE(u >= 2.0);
        REQUIRE(u < 3.0);
    }
}
