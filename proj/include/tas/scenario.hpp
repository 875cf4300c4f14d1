#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "tas/parser.hpp"
#include "tas/semantics.hpp"
#include "tas/trust.hpp"
#include "tas/ttl.hpp"

namespace tas {

enum class AttackKind { BadMouthing, BallotStuffing, Collusion, OnOff, Sybil, WhiteWashing };

inline const char* attack_name(AttackKind k) {
    switch (k) {
        case AttackKind::BadMouthing: return "bad-mouthing";
        case AttackKind::BallotStuffing: return "ballot-stuffing";
        case AttackKind::Collusion: return "collusion";
        case AttackKind::OnOff: return "on-off";
        case AttackKind::Sybil: return "sybil";
        case AttackKind::WhiteWashing: return "white-washing";
    }
    return "?";
}

inline AttackKind attack_from_name(const std::string& s) {
    if (s == "bad-mouthing" || s == "badmouthing") return AttackKind::BadMouthing;
    if (s == "ballot-stuffing" || s == "ballotstuffing") return AttackKind::BallotStuffing;
    if (s == "collusion") return AttackKind::Collusion;
    if (s == "on-off" || s == "onoff") return AttackKind::OnOff;
    if (s == "sybil") return AttackKind::Sybil;
    if (s == "white-washing" || s == "whitewashing") return AttackKind::WhiteWashing;
    throw SpecError("unknown attack kind " + s);
}

struct Property {
    std::string name;
    std::string text;
    FormulaPtr formula;
    bool expected = true;  // expected verdict at the initial state

    static Property make(std::string name, std::string text, bool expected) {
        Property p;
        p.name = std::move(name);
        p.text = std::move(text);
        p.formula = parse_formula(p.text);
        p.expected = expected;
        return p;
    }
};

// A system plus the properties it is meant to satisfy and bounds that explore
// it exhaustively at the documented parameters.
struct ScenarioBundle {
    SystemSpec spec;
    std::vector<Property> properties;
    Bounds suggested_bounds;
    // Metadata used by attack construction and the test suite.
    std::vector<std::string> adversaries;  // agents added by apply_attack
    std::string victim;                    // natural attack target
    std::string observer;                  // honest agent whose viewpoint properties use
    std::string home_group;                // community adversaries infiltrate
};

namespace detail {

inline std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

inline void define_process(SystemSpec& spec, const std::string& name, const std::string& body) {
    if (spec.defs.bindings.count(name)) throw SpecError("process " + name + " defined twice");
    spec.defs.bindings[name] = parse_term(body, spec.action_kinds, spec.defs);
}

inline void declare_action(SystemSpec& spec, const std::string& name, ActionKind kind,
                           char cls = ' ') {
    spec.action_kinds[name] = kind;
    if (cls == 'H') spec.cls.high.insert(name);
    if (cls == 'L') spec.cls.low.insert(name);
}

inline std::string fresh_agent_name(const SystemSpec& spec, const std::string& base) {
    if (spec.agent_index(base) < 0) return base;
    for (int k = 2;; ++k) {
        std::string name = base + std::to_string(k);
        if (spec.agent_index(name) < 0) return name;
    }
}

}  // namespace detail

// The club-based service scenario: consumers request services from producers
// inside clubs governed by a CDSR node; denial is a low action, request and
// delivery are high actions. Cross-club interaction flows through ad-hoc pair
// groups.
inline ScenarioBundle build_club_example(unsigned n_producers, unsigned n_clubs, double lambda) {
    if (n_producers < 1) throw SpecError("club example needs at least one producer");
    if (n_clubs < 1 || n_clubs > 2) throw SpecError("club example supports 1 or 2 clubs");
    if (!(lambda > 0.0 && lambda < 1.0)) throw SpecError("club lambda outside (0,1)");

    ScenarioBundle bundle;
    SystemSpec& spec = bundle.spec;
    spec.model.kind = TrustModelConfig::Kind::Club;
    spec.model.club.lambda = lambda;

    for (unsigned i = 1; i <= n_clubs; ++i) {
        std::string s = std::to_string(i);
        detail::declare_action(spec, "send_request" + s, ActionKind::Output, 'H');
        detail::declare_action(spec, "receive_request" + s, ActionKind::Input, 'H');
        detail::declare_action(spec, "deliver_service" + s, ActionKind::Output, 'H');
        detail::declare_action(spec, "receive_service" + s, ActionKind::Input, 'H');
        detail::declare_action(spec, "deny" + s, ActionKind::Output, 'L');
        detail::declare_action(spec, "receive_denial" + s, ActionKind::Input, 'L');
        spec.sync.insert({"send_request" + s, "receive_request" + s});
        spec.sync.insert({"deliver_service" + s, "receive_service" + s});
        spec.sync.insert({"deny" + s, "receive_denial" + s});
    }

    // The consumer requests a club, then either receives the service and rates
    // it freely, or receives a denial and rates the failure negatively.
    std::string cons;
    for (unsigned i = 1; i <= n_clubs; ++i) {
        std::string s = std::to_string(i);
        if (!cons.empty()) cons += " + ";
        cons += "tau . send_request" + s + " . ( receive_service" + s +
                " . (obs(1) . Cons + obs(-1) . Cons) + receive_denial" + s +
                " . obs(-1) . Cons )";
    }
    detail::define_process(spec, "Cons", cons);
    for (unsigned i = 1; i <= n_clubs; ++i) {
        std::string s = std::to_string(i);
        detail::define_process(spec, "Prod" + s,
                               "receive_request" + s + " . ( deliver_service" + s + " . Prod" + s +
                                   " + deny" + s + " . Prod" + s + " )");
    }
    detail::define_process(spec, "CDSR", "0");

    spec.agents.push_back({"C1", "Cons", 0.0});
    for (unsigned i = 1; i <= n_clubs; ++i) {
        spec.agents.push_back({"D" + std::to_string(i), "CDSR", 0.0});
        for (unsigned j = 1; j <= n_producers; ++j) {
            spec.agents.push_back(
                {"P" + std::to_string(i) + std::to_string(j), "Prod" + std::to_string(i), 0.5});
        }
    }

    for (unsigned i = 1; i <= n_clubs; ++i) {
        std::set<std::string> members{"D" + std::to_string(i)};
        for (unsigned j = 1; j <= n_producers; ++j) {
            members.insert("P" + std::to_string(i) + std::to_string(j));
        }
        if (i == 1) members.insert("C1");
        spec.initial_groups["G" + std::to_string(i)] = std::move(members);
    }
    // Ad-hoc pair groups let the consumer reach the second club directly.
    for (unsigned j = 1; n_clubs == 2 && j <= n_producers; ++j) {
        std::string p = "P2" + std::to_string(j);
        spec.initial_groups["pair_C1_" + p] = {"C1", p};
    }

    // The CDSR vouches for its club: producers twice, the consumer once, which
    // puts the producers' trust of the consumer exactly at their threshold.
    for (unsigned i = 1; i <= n_clubs; ++i) {
        for (unsigned j = 1; j <= n_producers; ++j) {
            std::string p = "P" + std::to_string(i) + std::to_string(j);
            spec.initial_opinions = spec.initial_opinions.add_fake("D" + std::to_string(i), p, 1);
            spec.initial_opinions = spec.initial_opinions.add_fake("D" + std::to_string(i), p, 1);
        }
    }
    spec.initial_opinions = spec.initial_opinions.add_fake("D1", "C1", 1);

    bundle.victim = "P11";
    bundle.observer = "C1";
    bundle.home_group = "G1";
    bundle.suggested_bounds = Bounds{200000, 256, 3};

    bundle.properties.push_back(Property::make(
        "request_reachable", "EF( <C1.send_request1*P11.receive_request1> )", true));
    bundle.properties.push_back(Property::make(
        "service_delivered", "EF( <P11.deliver_service1*C1.receive_service1> )", true));
    bundle.properties.push_back(Property::make(
        "positive_feedback_raises_trust", "EF( t[C1,P11] >= 0.8 )", true));
    bundle.properties.push_back(Property::make(
        "denial_rated_negative",
        "AG( not EX<P11.deny1*C1.receive_denial1>( not EF( tf[min,C1,P11] <= -1 ) ) )", true));
    if (n_clubs == 2) {
        bundle.properties.push_back(Property::make(
            "cross_club_denied_initially", "EF( <P21.deny2*C1.receive_denial2> )", true));
    }
    return bundle;
}

// The EigenTrust peer scenario: symmetric peers requesting a service through a
// trust-gated high action and answering through neutral quality channels; the
// requester rates the provider afterwards.
inline ScenarioBundle build_eigentrust_example(unsigned n_peers) {
    if (n_peers < 2) throw SpecError("eigentrust example needs at least two peers");

    ScenarioBundle bundle;
    SystemSpec& spec = bundle.spec;
    spec.model.kind = TrustModelConfig::Kind::EigenTrust;

    detail::declare_action(spec, "req", ActionKind::Output, 'H');
    detail::declare_action(spec, "ans", ActionKind::Input, 'H');
    detail::declare_action(spec, "snd_ok", ActionKind::Output);
    detail::declare_action(spec, "rcv_ok", ActionKind::Input);
    detail::declare_action(spec, "snd_bad", ActionKind::Output);
    detail::declare_action(spec, "rcv_bad", ActionKind::Input);
    spec.sync.insert({"req", "ans"});
    spec.sync.insert({"snd_ok", "rcv_ok"});
    spec.sync.insert({"snd_bad", "rcv_bad"});

    // Rating is deterministic in the observed quality: 1 for a satisfactory
    // response, -1 for an unsatisfactory one.
    detail::define_process(spec, "Peer",
                           "req . ( rcv_ok . obs(1) . Peer + rcv_bad . obs(-1) . Peer ) + "
                           "ans . snd_ok . Peer");

    std::set<std::string> all;
    for (unsigned i = 1; i <= n_peers; ++i) {
        std::string name = "P" + std::to_string(i);
        spec.agents.push_back({name, "Peer", 0.3});
        all.insert(name);
    }
    spec.initial_groups["ALL"] = std::move(all);

    bundle.victim = "P1";
    bundle.observer = "P2";
    bundle.home_group = "ALL";
    // Interleavings grow quickly with the peer count; a tighter cap keeps the
    // larger instances exhaustively explorable.
    bundle.suggested_bounds = Bounds{200000, 512, n_peers <= 2 ? 3u : 2u};

    bundle.properties.push_back(
        Property::make("interaction_reachable", "EF( <P1.req*P2.ans> )", true));
    bundle.properties.push_back(
        Property::make("feedback_reported", "EF( tf[count,P1,P2] >= 1 )", true));
    bundle.properties.push_back(Property::make(
        "service_always_available", "AG( EF( <P1.req*P2.ans> ) )", true));
    return bundle;
}

namespace detail {

inline unsigned param_uint(const std::map<std::string, std::string>& params, const char* key,
                           unsigned fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    return static_cast<unsigned>(std::stoul(it->second));
}

inline std::string param_str(const std::map<std::string, std::string>& params, const char* key,
                             const std::string& fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

inline void require_peer_vocabulary(const SystemSpec& spec, AttackKind kind) {
    if (!spec.action_kinds.count("ans") || !spec.action_kinds.count("snd_bad")) {
        throw SpecError(std::string(attack_name(kind)) +
                        " needs the peer scenario vocabulary (ans/snd_ok/snd_bad)");
    }
}

// Trust the observer would assign to `target` in the attacked system once the
// probe opinions are in place; used to pin property thresholds from the model
// arithmetic itself.
inline double probe_trust(const SystemSpec& spec, const OpinionMultiset& probe,
                          const std::string& observer, const std::string& target) {
    return trust_value(spec, spec.initial_groups, probe, observer, target);
}

}  // namespace detail

// Extends a scenario with adversary agents implementing one of the attack
// templates, together with the robustness property the attack targets.
// Recognized params: n_attackers, target, period (on-off), n_identities
// (sybil).
inline ScenarioBundle apply_attack(const ScenarioBundle& base, AttackKind kind,
                                   const std::map<std::string, std::string>& params = {}) {
    ScenarioBundle out = base;
    out.properties.clear();
    out.adversaries.clear();
    SystemSpec& spec = out.spec;
    const bool club = spec.model.kind == TrustModelConfig::Kind::Club;

    const std::string target = detail::param_str(params, "target", base.victim);
    if (target.empty()) throw SpecError("missing attack param: target");
    if (spec.agent_index(target) < 0) throw SpecError("attack target " + target + " not declared");
    std::string observer = base.observer;
    if (observer.empty() || observer == target) {
        for (const auto& a : spec.agents) {
            if (a.name != target) {
                observer = a.name;
                break;
            }
        }
    }
    if (observer.empty()) throw SpecError("attack needs an honest observer agent");
    std::string home = detail::param_str(params, "group", base.home_group);
    if (home.empty()) {
        for (const auto& [g, members] : spec.initial_groups) {
            if (members.count(target)) {
                home = g;
                break;
            }
        }
    }
    if (!spec.initial_groups.count(home)) throw SpecError("attack group " + home + " not declared");

    auto add_adversary = [&](const std::string& base_name, const std::string& behavior,
                             bool join_home) {
        std::string name = detail::fresh_agent_name(spec, base_name);
        spec.agents.push_back({name, behavior, 0.0});
        if (join_home) spec.initial_groups[home].insert(name);
        out.adversaries.push_back(name);
        return name;
    };

    switch (kind) {
        case AttackKind::BadMouthing: {
            unsigned n = detail::param_uint(params, "n_attackers", 1);
            if (n < 1) throw SpecError("bad-mouthing needs n_attackers >= 1");
            std::string behavior = "BadMouth_" + target;
            detail::define_process(spec, behavior,
                                   "fake_obs(" + target + ",-1) . " + behavior);
            for (unsigned k = 1; k <= n; ++k) add_adversary("M" + std::to_string(k), behavior, true);
            if (club) {
                // One fictitious negative zeroes the in-club reputation.
                out.properties.push_back(Property::make(
                    "badmouth_zeroes_trust", "EF( t[" + observer + "," + target + "] = 0 )", true));
            } else {
                out.properties.push_back(Property::make(
                    "fake_negatives_flood",
                    "EF( tf[sum," + out.adversaries.front() + "," + target + "] <= -2 )", true));
            }
            break;
        }
        case AttackKind::BallotStuffing: {
            unsigned n = detail::param_uint(params, "n_attackers", 1);
            if (n < 1) throw SpecError("ballot-stuffing needs n_attackers >= 1");
            detail::define_process(spec, "Dormant", "0");
            std::string mal = add_adversary("Mal1", "Dormant", true);
            std::string behavior = "Boost_" + mal;
            detail::define_process(spec, behavior, "fake_obs(" + mal + ",1) . " + behavior);
            std::vector<std::string> boosters;
            for (unsigned k = 1; k <= n; ++k) {
                boosters.push_back(add_adversary("B" + std::to_string(k), behavior, true));
            }
            unsigned stuffs = club ? 2 : 1;
            OpinionMultiset probe = spec.initial_opinions;
            for (unsigned k = 0; k < stuffs; ++k) {
                probe = probe.add_fake(boosters.front(), mal, 1);
            }
            double reached = detail::probe_trust(spec, probe, observer, mal);
            double theta = reached * 0.9;
            out.properties.push_back(Property::make(
                "stuffed_trust_reachable",
                "EF( t[" + observer + "," + mal + "] >= " + detail::fmt_real(theta) + " )", true));
            break;
        }
        case AttackKind::Collusion: {
            unsigned n = detail::param_uint(params, "n_attackers", 2);
            if (n < 2) throw SpecError("collusion needs n_attackers >= 2");
            std::vector<std::string> names;
            for (unsigned k = 1; k <= n; ++k) {
                names.push_back(detail::fresh_agent_name(spec, "A" + std::to_string(k)));
                spec.agents.push_back({names.back(), "", 0.0});
            }
            for (unsigned k = 0; k < n; ++k) {
                const std::string& partner = names[(k + 1) % n];
                std::string behavior = "Collude_" + names[k];
                detail::define_process(spec, behavior, "fake_obs(" + target + ",-1) . fake_obs(" +
                                                           partner + ",1) . " + behavior);
                spec.agents[spec.agents.size() - n + k].behavior = behavior;
                spec.initial_groups[home].insert(names[k]);
                out.adversaries.push_back(names[k]);
            }
            out.properties.push_back(Property::make(
                "collusion_floods_target", "EF( tf[sum," + names[0] + "," + target + "] <= -2 )",
                true));
            if (club) {
                out.properties.push_back(Property::make(
                    "collusion_zeroes_target", "EF( t[" + observer + "," + target + "] = 0 )",
                    true));
            }
            OpinionMultiset probe = spec.initial_opinions.add_fake(names[1], target, -1)
                                        .add_fake(names[1], names[0], 1);
            double reached = detail::probe_trust(spec, probe, observer, names[0]);
            double theta = reached * 0.9;
            out.properties.push_back(Property::make(
                "colluder_boosted",
                "EF( t[" + observer + "," + names[0] + "] >= " + detail::fmt_real(theta) + " )",
                true));
            break;
        }
        case AttackKind::OnOff: {
            detail::require_peer_vocabulary(spec, kind);
            unsigned period = detail::param_uint(params, "period", 1);
            if (period < 1) throw SpecError("on-off needs period >= 1");
            // period honest responses, then period bad ones, deterministically.
            for (unsigned k = 1; k <= period; ++k) {
                std::string next =
                    k == period ? "OnOff_bad1" : "OnOff_good" + std::to_string(k + 1);
                detail::define_process(spec, "OnOff_good" + std::to_string(k),
                                       "ans . snd_ok . " + next);
            }
            for (unsigned k = 1; k <= period; ++k) {
                std::string next =
                    k == period ? "OnOff_good1" : "OnOff_bad" + std::to_string(k + 1);
                detail::define_process(spec, "OnOff_bad" + std::to_string(k),
                                       "ans . snd_bad . " + next);
            }
            std::string m = add_adversary("M1", "OnOff_good1", true);
            out.properties.push_back(Property::make(
                "off_phase_reachable", "EF( <" + m + ".snd_bad*" + observer + ".rcv_bad> )", true));
            out.properties.push_back(Property::make(
                "misbehavior_rated", "EF( tf[min," + observer + "," + m + "] <= -1 )", true));
            // The alternating responder multiplies the interleavings; its
            // properties only need single ratings, so cap the multiset tight.
            out.suggested_bounds.opinion_cap = 1;
            break;
        }
        case AttackKind::Sybil: {
            unsigned n = detail::param_uint(params, "n_identities", 1);
            detail::define_process(spec, "Dormant_principal", "0");
            add_adversary("M0", "Dormant_principal", false);
            std::string loop = "SybilFlood_" + target;
            std::string join = "SybilJoin_" + target;
            if (n > 0) {
                detail::define_process(spec, loop, "fake_obs(" + target + ",-1) . " + loop);
                detail::define_process(spec, join, "ent(" + home + ") . " + loop);
            }
            std::vector<std::string> ids;
            for (unsigned k = 1; k <= n; ++k) {
                ids.push_back(add_adversary("S" + std::to_string(k), join, false));
            }
            if (n > 0) {
                out.properties.push_back(Property::make(
                    "sybil_floods_after_joining",
                    "not( tf[count," + ids.front() + "," + target + "] >= 1 ) and EF( tf[count," +
                        ids.front() + "," + target + "] >= 2 )",
                    true));
            }
            break;
        }
        case AttackKind::WhiteWashing: {
            detail::require_peer_vocabulary(spec, kind);
            detail::define_process(spec, "Wash", "ans . snd_bad . esc(" + home + ") . 0");
            detail::define_process(spec, "Rejoin", "ent(" + home + ") . ans . snd_bad . 0");
            std::string w1 = add_adversary("W1", "Wash", true);
            std::string w2 = add_adversary("W2", "Rejoin", false);
            out.properties.push_back(Property::make(
                "washer_rated_negative", "EF( tf[min," + observer + "," + w1 + "] <= -1 )", true));
            out.properties.push_back(Property::make(
                "rejoin_reachable", "EF( <" + observer + ".req*" + w2 + ".ans> )", true));
            out.properties.push_back(Property::make(
                "fresh_identity_unburdened",
                "EF( tf[min," + observer + "," + w1 + "] <= -1 and not( tf[count," + observer +
                    "," + w2 + "] >= 1 ) )",
                true));
            break;
        }
    }
    out.victim = target;
    out.observer = observer;
    out.home_group = home;
    return out;
}

// Strips a set of agents out of a spec: their declarations, group memberships,
// opinions and pretrusted entries. Process definitions stay (unused ones do
// not affect the semantics).
inline SystemSpec without_agents(const SystemSpec& spec, const std::vector<std::string>& names) {
    std::set<std::string> drop(names.begin(), names.end());
    SystemSpec out = spec;
    out.agents.clear();
    for (const auto& a : spec.agents) {
        if (!drop.count(a.name)) out.agents.push_back(a);
    }
    for (auto& [g, members] : out.initial_groups) {
        for (const auto& d : drop) members.erase(d);
    }
    OpinionMultiset opinions;
    for (const auto& [k, m] : spec.initial_opinions.rated()) {
        if (drop.count(std::get<0>(k)) || drop.count(std::get<1>(k))) continue;
        for (unsigned c = 0; c < m; ++c) {
            opinions = opinions.add_fake(std::get<0>(k), std::get<1>(k), std::get<2>(k));
        }
    }
    out.initial_opinions = std::move(opinions);
    for (const auto& d : drop) out.model.eigen.pretrusted.erase(d);
    return out;
}

// Serializes a spec back to the .tas syntax; parsing the result yields an
// equivalent spec.
inline std::string to_dsl(const SystemSpec& spec) {
    std::string out = "actions {\n";
    for (const auto& [name, kind] : spec.action_kinds) {
        out += kind == ActionKind::Output ? "  out " : "  in  ";
        out += name;
        if (spec.cls.is_high(name)) out += " @H";
        if (spec.cls.is_low(name)) out += " @L";
        out += "\n";
    }
    out += "}\n\n";
    for (const auto& [name, body] : spec.defs.bindings) {
        out += "process " + name + " := " + pretty_print(body) + "\n";
    }
    if (!spec.sync.empty()) {
        out += "\nsync {\n";
        for (const auto& [o, i] : spec.sync) out += "  " + o + " x " + i + ";\n";
        out += "}\n";
    }
    out += "\n";
    for (const auto& a : spec.agents) {
        out += "agent " + a.name + " : " + a.behavior + " threshold " +
               detail::fmt_real(a.threshold) + "\n";
    }
    out += "\n";
    for (const auto& [g, members] : spec.initial_groups) {
        out += "group " + g + " = { ";
        bool first = true;
        for (const auto& m : members) {
            if (!first) out += ", ";
            out += m;
            first = false;
        }
        out += " }\n";
    }
    bool any_opinion = false;
    for (const auto& [k, m] : spec.initial_opinions.rated()) {
        if (!any_opinion) out += "\n";
        any_opinion = true;
        out += "opinion " + std::get<0>(k) + " -> " + std::get<1>(k) + " : " +
               std::to_string(std::get<2>(k));
        if (m != 1) out += " x " + std::to_string(m);
        out += "\n";
    }
    out += "\n";
    if (spec.model.kind == TrustModelConfig::Kind::Club) {
        out += "model club { lambda " + detail::fmt_real(spec.model.club.lambda) + " }\n";
    } else {
        out += "model eigentrust { damping " + detail::fmt_real(spec.model.eigen.damping);
        if (!spec.model.eigen.pretrusted.empty()) {
            out += " pretrusted {";
            for (const auto& p : spec.model.eigen.pretrusted) out += " " + p;
            out += " }";
        }
        out += " }\n";
    }
    return out;
}

// One property per line: "name: formula".
inline std::string properties_sidecar(const std::vector<Property>& props) {
    std::string out;
    for (const auto& p : props) out += p.name + ": " + p.text + "\n";
    return out;
}

inline std::vector<std::pair<std::string, std::string>> parse_properties_file(
    const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        std::size_t colon = line.find(':');
        if (colon == std::string::npos) {
            throw ParseError("expected 'name: formula'", line_no, 1);
        }
        std::string name = line.substr(a, colon - a);
        while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) name.pop_back();
        std::string formula = line.substr(colon + 1);
        std::size_t b = formula.find_first_not_of(" \t");
        formula = b == std::string::npos ? "" : formula.substr(b);
        while (!formula.empty() && (formula.back() == ' ' || formula.back() == '\t' ||
                                    formula.back() == '\r')) {
            formula.pop_back();
        }
        if (name.empty() || formula.empty()) {
            throw ParseError("expected 'name: formula'", line_no, 1);
        }
        out.emplace_back(name, formula);
    }
    return out;
}

}  // namespace tas
