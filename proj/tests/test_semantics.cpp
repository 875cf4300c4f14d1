#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "tas/parser.hpp"
#include "tas/scenario.hpp"
#include "tas/semantics.hpp"
#include "tas/tlts_io.hpp"

using namespace tas;

namespace {

std::vector<std::uint32_t> edges_from(const Tlts& t, std::uint32_t q, const std::string& label) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t e : t.out_edges[q]) {
        if (t.transitions[e].label.str() == label) out.push_back(e);
    }
    return out;
}

}  // namespace

TEST_CASE("a recursive tau loop dedups into one state", "[semantics]") {
    SystemSpec spec = parse_system(
        "process B := tau . B\nagent I : B threshold 0.0\nmodel club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{100, 16, 4});
    CHECK(t.states.size() == 1);
    REQUIRE(t.transitions.size() == 1);
    CHECK(t.transitions[0].src == 0);
    CHECK(t.transitions[0].dst == 0);
    CHECK(t.transitions[0].label.str() == "I.tau");
    CHECK(t.truncated.empty());
}

TEST_CASE("a neutral synchronization leaves the opinions unchanged", "[semantics]") {
    SystemSpec spec = parse_system(
        "actions { out a in b }\nprocess P := a . 0\nprocess Q := b . 0\nsync { a x b; }\n"
        "agent I : P threshold 0.5\nagent J : Q threshold 0.5\ngroup G = { I, J }\n"
        "model club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{100, 16, 4});
    REQUIRE(t.states.size() == 2);
    REQUIRE(t.transitions.size() == 1);
    CHECK(t.transitions[0].label.str() == "I.a*J.b");
    CHECK(t.transitions[0].rule == RuleTag::SyncNeutral);
    CHECK(t.states[1].opinions.rated().empty());
    CHECK(t.states[1].opinions.placeholders().empty());
}

TEST_CASE("high and low guards gate on the threshold", "[semantics]") {
    const char* base =
        "actions { out req @H in recv @H out deny @L in getdeny @L }\n"
        "process P := req . 0 + deny . 0\nprocess Q := recv . 0 + getdeny . 0\n"
        "sync { req x recv; deny x getdeny; }\n"
        "agent I : P threshold %s\nagent J : Q threshold 0.0\ngroup G = { I, J }\n"
        "model club { lambda 0.5 }";

    // No clubs, so t_IJ = 0. With th_I = 0.5 only the low action fires.
    char buf[1024];
    std::snprintf(buf, sizeof(buf), base, "0.5");
    Tlts low = build_tlts(parse_system(buf), Bounds{100, 16, 4});
    REQUIRE(low.transitions.size() == 1);
    CHECK(low.transitions[0].label.str() == "I.deny*J.getdeny");
    CHECK(low.transitions[0].rule == RuleTag::SyncLow);
    // Low syncs still record both placeholders.
    CHECK(low.states[1].opinions.has_placeholder("I", "J"));
    CHECK(low.states[1].opinions.has_placeholder("J", "I"));

    // With th_I = 0 the same state enables the high action instead.
    std::snprintf(buf, sizeof(buf), base, "0.0");
    Tlts high = build_tlts(parse_system(buf), Bounds{100, 16, 4});
    REQUIRE(high.transitions.size() == 1);
    CHECK(high.transitions[0].label.str() == "I.req*J.recv");
    CHECK(high.transitions[0].rule == RuleTag::SyncHigh);
}

TEST_CASE("ent and esc update exactly one group membership", "[semantics]") {
    SystemSpec spec = parse_system(
        "process P := ent(G2) . esc(G2) . 0\nprocess Q := 0\n"
        "agent I : P threshold 0.0\nagent J : Q threshold 0.0\n"
        "group G1 = { I }\ngroup G2 = { J }\nmodel club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{100, 16, 4});
    REQUIRE(t.states.size() == 3);
    REQUIRE(t.transitions.size() == 2);
    CHECK(t.transitions[0].rule == RuleTag::Ent);
    CHECK(t.states[1].groups.at("G2") == std::set<std::string>{"I", "J"});
    CHECK(t.states[1].groups.at("G1") == std::set<std::string>{"I"});
    CHECK(t.transitions[1].rule == RuleTag::Esc);
    CHECK(t.states[2].groups.at("G2") == std::set<std::string>{"J"});
}

TEST_CASE("esc is disabled outside the group and groups may empty out", "[semantics]") {
    SystemSpec spec = parse_system(
        "process P := esc(G1) . esc(G1) . 0\n"
        "agent I : P threshold 0.0\ngroup G1 = { I }\nmodel club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{100, 16, 4});
    // One esc leaves the group empty; the second is not enabled.
    REQUIRE(t.states.size() == 2);
    REQUIRE(t.transitions.size() == 1);
    CHECK(t.states[1].groups.at("G1").empty());
    CHECK(t.out_edges[1].empty());
}

TEST_CASE("opinion multiplicities saturate at the cap", "[semantics]") {
    SystemSpec spec = parse_system(
        "actions { out a @H in b @H }\nprocess P := a . obs(1) . P\nprocess Q := b . Q\n"
        "sync { a x b; }\nagent I : P threshold 0.0\nagent J : Q threshold 0.0\n"
        "group G = { I, J }\nmodel club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{1000, 64, 2});
    CHECK(t.truncated.empty());
    // Hand simulation of three rounds: multiplicity climbs 0,1,2 and then
    // the capped successor coincides with the previous state.
    CHECK(t.states.size() == 6);
    CHECK(t.transitions.size() == 6);
    unsigned max_mult = 0;
    for (const auto& s : t.states) {
        for (const auto& [k, m] : s.opinions.rated()) max_mult = std::max(max_mult, m);
    }
    CHECK(max_mult == 2);
}

TEST_CASE("obs resolves nondeterministically toward either partner", "[semantics]") {
    SystemSpec spec = parse_system(
        "actions { out a @H in b @H }\nprocess P := a . a . obs(1) . 0\nprocess Q := b . Q\n"
        "sync { a x b; }\nagent I : P threshold 0.0\nagent J : Q threshold 0.0\n"
        "agent K : Q threshold 0.0\ngroup G = { I, J, K }\nmodel club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{1000, 32, 4});

    // Path syncing with both partners leaves two placeholders for I.
    auto first = edges_from(t, 0, "I.a*J.b");
    REQUIRE(first.size() == 1);
    std::uint32_t mid = t.transitions[first[0]].dst;
    auto second = edges_from(t, mid, "I.a*K.b");
    REQUIRE(second.size() == 1);
    std::uint32_t ready = t.transitions[second[0]].dst;
    CHECK(t.states[ready].opinions.has_placeholder("I", "J"));
    CHECK(t.states[ready].opinions.has_placeholder("I", "K"));

    // Its obs step has one successor per pending partner.
    auto obs_edges = edges_from(t, ready, "I.tau");
    REQUIRE(obs_edges.size() == 2);
    std::set<unsigned> rated;
    for (std::uint32_t e : obs_edges) {
        const auto& opinions = t.states[t.transitions[e].dst].opinions;
        rated.insert(opinions.multiplicity("I", "J", 1) * 10 +
                     opinions.multiplicity("I", "K", 1));
    }
    CHECK(rated == std::set<unsigned>{10, 1});

    // That path is not well-defined; rating between the two syncs is.
    std::vector<std::uint32_t> ambiguous{first[0], second[0]};
    CHECK_FALSE(is_well_defined(t, ambiguous));
    std::vector<std::uint32_t> fine{first[0]};
    CHECK(is_well_defined(t, fine));
}

TEST_CASE("the 2-state export matches the documented schema", "[semantics]") {
    SystemSpec spec = parse_system(
        "actions { out a in b }\nprocess P := a . 0\nprocess Q := b . 0\nsync { a x b; }\n"
        "agent I : P threshold 0.5\nagent J : Q threshold 0.5\ngroup G = { I, J }\n"
        "model club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{100, 16, 4});
    nlohmann::json j = nlohmann::json::parse(export_tlts(t, "json"));
    CHECK(j["agents"] == nlohmann::json({"I", "J"}));
    CHECK(j["initial"] == 0);
    REQUIRE(j["transitions"].size() == 1);
    CHECK(j["transitions"][0] == nlohmann::json({0, "I.a*J.b", 1}));
    CHECK(j["truncated"].empty());
    CHECK(j.contains("labeling"));
    CHECK(j.contains("bounds"));
    CHECK(j.contains("states"));
}

TEST_CASE("a dormant placeholder re-enables when a shared group re-forms", "[semantics]") {
    // J answers, leaves every shared community, then returns; I's pending
    // rating of J is disabled while they share no group.
    SystemSpec spec = parse_system(
        "actions { out a @H in b @H }\n"
        "process P := a . obs(1) . 0\nprocess Q := b . esc(G) . ent(G) . 0\n"
        "sync { a x b; }\nagent I : P threshold 0.0\nagent J : Q threshold 0.0\n"
        "group G = { I, J }\nmodel club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{100, 16, 4});

    // Follow sync, then J's esc.
    auto sync_e = edges_from(t, 0, "I.a*J.b");
    REQUIRE(sync_e.size() == 1);
    std::uint32_t after_sync = t.transitions[sync_e[0]].dst;
    std::uint32_t after_esc = 0;
    bool found_esc = false;
    for (std::uint32_t e : t.out_edges[after_sync]) {
        if (t.transitions[e].rule == RuleTag::Esc) {
            after_esc = t.transitions[e].dst;
            found_esc = true;
        }
    }
    REQUIRE(found_esc);
    // With J outside the group, I's obs is not enabled; the placeholder stays.
    CHECK(t.states[after_esc].opinions.has_placeholder("I", "J"));
    for (std::uint32_t e : t.out_edges[after_esc]) {
        CHECK(t.transitions[e].rule != RuleTag::Obs);
    }
    // After J re-enters, the rating fires again somewhere downstream.
    bool obs_reachable = false;
    for (std::uint32_t e : t.out_edges[after_esc]) {
        if (t.transitions[e].rule != RuleTag::Ent) continue;
        for (std::uint32_t e2 : t.out_edges[t.transitions[e].dst]) {
            if (t.transitions[e2].rule == RuleTag::Obs) obs_reachable = true;
        }
    }
    CHECK(obs_reachable);
}

TEST_CASE("ent is permitted for a current member and fake self-ratings are not", "[semantics]") {
    SystemSpec spec = parse_system(
        "process P := ent(G) . 0 + fake_obs(I,1) . 0 + fake_obs(J,-1) . 0\nprocess Q := 0\n"
        "agent I : P threshold 0.0\nagent J : Q threshold 0.0\n"
        "group G = { I, J }\nmodel club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{100, 16, 4});
    unsigned ent_steps = 0;
    unsigned fake_steps = 0;
    for (const auto& tr : t.transitions) {
        if (tr.rule == RuleTag::Ent) {
            ++ent_steps;
            CHECK(t.states[tr.dst].groups == t.states[tr.src].groups);
        }
        if (tr.rule == RuleTag::Fake) {
            ++fake_steps;
            CHECK(t.states[tr.dst].opinions.multiplicity("I", "J", -1) == 1);
        }
    }
    CHECK(ent_steps == 1);   // joining a group already containing I is a no-op move
    CHECK(fake_steps == 1);  // fake_obs(I,...) by I itself is disabled
}

TEST_CASE("bounds must be strictly positive", "[semantics]") {
    SystemSpec spec = parse_system(
        "process B := tau . B\nagent I : B threshold 0.0\nmodel club { lambda 0.5 }");
    CHECK_THROWS_AS(build_tlts(spec, Bounds{0, 16, 4}), SpecError);
    CHECK_THROWS_AS(build_tlts(spec, Bounds{16, 0, 4}), SpecError);
    CHECK_THROWS_AS(build_tlts(spec, Bounds{16, 16, 0}), SpecError);
}

TEST_CASE("bounded exploration of acyclic systems matches an unbounded walk", "[semantics]") {
    // No recursion anywhere, so the exact semantics is finite; generous
    // bounds must reproduce it. The reference is a plain recursive walk.
    SystemSpec spec = parse_system(
        "actions { out a @H in b @H out c in d }\n"
        "process P := a . obs(1) . c . 0 + a . obs(-1) . 0\n"
        "process Q := b . d . 0 + b . 0\n"
        "sync { a x b; c x d; }\n"
        "agent I : P threshold 0.0\nagent J : Q threshold 0.0\n"
        "group G = { I, J }\nmodel club { lambda 0.5 }");

    auto key_of = [](const Configuration& c) {
        std::string key;
        for (Term term : c.terms) key += pretty_print(term) + "|";
        for (const auto& [g, members] : c.groups) {
            key += g + "{";
            for (const auto& m : members) key += m + ",";
            key += "}";
        }
        for (const auto& [k, m] : c.opinions.rated()) {
            key += std::get<0>(k) + std::get<1>(k) + std::to_string(std::get<2>(k)) + "x" +
                   std::to_string(m) + ";";
        }
        for (const auto& [r, target] : c.opinions.placeholders()) key += r + "?" + target + ";";
        return key;
    };

    std::set<std::string> seen;
    std::size_t reference_edges = 0;
    std::function<void(const Configuration&)> walk = [&](const Configuration& c) {
        if (!seen.insert(key_of(c)).second) return;
        for (auto& step : enabled_transitions(c, spec)) {
            ++reference_edges;
            walk(step.next);
        }
    };
    Configuration init;
    init.terms = {spec.defs.arena->constant("P"), spec.defs.arena->constant("Q")};
    init.groups = spec.initial_groups;
    init.opinions = spec.initial_opinions;
    walk(init);

    Tlts t = build_tlts(spec, Bounds{100000, 10000, 1000000});
    CHECK(t.truncated.empty());
    CHECK(t.states.size() == seen.size());
    CHECK(t.transitions.size() == reference_edges);
}

TEST_CASE("state budget truncation is reported, not fatal", "[semantics]") {
    SystemSpec spec = parse_system(
        "actions { out a @H in b @H }\nprocess P := a . obs(1) . P\nprocess Q := b . Q\n"
        "sync { a x b; }\nagent I : P threshold 0.0\nagent J : Q threshold 0.0\n"
        "group G = { I, J }\nmodel club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{3, 64, 8});
    CHECK(t.states.size() == 3);
    CHECK_FALSE(t.truncated.empty());

    Tlts shallow = build_tlts(spec, Bounds{1000, 2, 8});
    CHECK_FALSE(shallow.truncated.empty());
}

TEST_CASE("exploration is deterministic across runs and thread counts", "[semantics]") {
    ScenarioBundle club = build_club_example(1, 1, 0.5);
    Bounds b{20000, 64, 2};
    std::string first = export_tlts(build_tlts(club.spec, b, 1), "json");
    std::string again = export_tlts(build_tlts(club.spec, b, 1), "json");
    std::string threaded = export_tlts(build_tlts(club.spec, b, 4), "json");
    CHECK(first == again);
    CHECK(first == threaded);
}

TEST_CASE("json export round-trips through import", "[semantics]") {
    ScenarioBundle club = build_club_example(1, 1, 0.5);
    Tlts t = build_tlts(club.spec, Bounds{20000, 64, 2});
    std::string bytes = export_tlts(t, "json");
    TltsDocument doc = import_tlts_json(bytes);
    CHECK(to_json(doc) == bytes);
    CHECK(doc.agents == t.agent_names);
    CHECK(doc.states.size() == t.states.size());
    CHECK(doc.transitions.size() == t.transitions.size());
}

TEST_CASE("dot export names states and labels edges", "[semantics]") {
    SystemSpec spec = parse_system(
        "actions { out a in b }\nprocess P := a . 0\nprocess Q := b . 0\nsync { a x b; }\n"
        "agent I : P threshold 0.0\nagent J : Q threshold 0.0\ngroup G = { I, J }\n"
        "model club { lambda 0.5 }");
    Tlts t = build_tlts(spec, Bounds{100, 16, 4});
    std::string dot = to_dot(t);
    CHECK(dot.find("digraph tlts") != std::string::npos);
    CHECK(dot.find("doublecircle") != std::string::npos);
    CHECK(dot.find("I.a*J.b") != std::string::npos);
    CHECK(dot.find("unknown") == std::string::npos);
}

TEST_CASE("sync edges respect groups and guards", "[semantics]") {
    ScenarioBundle club = build_club_example(1, 1, 0.5);
    Tlts t = build_tlts(club.spec, club.suggested_bounds);
    CHECK(t.truncated.empty());
    for (const auto& tr : t.transitions) {
        if (!tr.label.sync) continue;
        const Configuration& src = t.states[tr.src];
        CHECK(tr.label.agent != tr.label.partner);
        CHECK(share_group(src.groups, tr.label.agent, tr.label.partner));
        CHECK(club.spec.sync.count({tr.label.out_action, tr.label.in_action}) == 1);
        double tv = trust_value(club.spec, src.groups, src.opinions, tr.label.agent,
                                tr.label.partner);
        double th = club.spec.agent(tr.label.agent)->threshold;
        if (tr.rule == RuleTag::SyncHigh) CHECK(tv >= th);
        if (tr.rule == RuleTag::SyncLow) CHECK(tv < th);
    }
}
