#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tas/calculus.hpp"

namespace tas {

struct Agent {
    std::string name;
    std::string behavior;    // constant name
    double threshold = 0.0;  // th_I in [0,1]
};

// H/L classification of visible action names; anything else is neutral.
struct SecurityClassification {
    std::set<std::string> high;
    std::set<std::string> low;

    bool is_high(const std::string& a) const { return high.count(a) != 0; }
    bool is_low(const std::string& a) const { return low.count(a) != 0; }
};

// Named communities; members are agent names. Groups may be empty.
using Groups = std::map<std::string, std::set<std::string>>;

inline bool share_group(const Groups& g, const std::string& i, const std::string& j) {
    for (const auto& [name, members] : g) {
        if (members.count(i) && members.count(j)) return true;
    }
    return false;
}

// The multiset of trust opinions: rated entries (target,score) by rater with
// multiplicities, plus unrated placeholders (target,?) by rater. Placeholders
// are added with multiset union, so they form a set. Values are immutable;
// every operation returns a new multiset.
class OpinionMultiset {
public:
    using RatedKey = std::tuple<std::string, std::string, int>;  // rater, target, score
    using PlaceholderKey = std::pair<std::string, std::string>;  // rater, target

    static OpinionMultiset empty() { return {}; }

    unsigned multiplicity(const std::string& rater, const std::string& target, int score) const {
        auto it = rated_.find({rater, target, score});
        return it == rated_.end() ? 0u : it->second;
    }

    bool has_placeholder(const std::string& rater, const std::string& target) const {
        return placeholders_.count({rater, target}) != 0;
    }

    // Both placeholders of a synchronization, added with union semantics.
    OpinionMultiset add_placeholders(const std::string& i, const std::string& j) const {
        OpinionMultiset e = *this;
        e.placeholders_.insert({i, j});
        e.placeholders_.insert({j, i});
        return e;
    }

    // Rated entry added with multiset sum.
    OpinionMultiset add_fake(const std::string& rater, const std::string& target, int v) const {
        OpinionMultiset e = *this;
        e.rated_[{rater, target, v}] += 1;
        return e;
    }

    // One result per placeholder (target,?)_rater with target in `eligible`:
    // the placeholder removed, the rated entry incremented. Empty when no
    // eligible placeholder exists.
    std::vector<std::pair<std::string, OpinionMultiset>> resolve_obs(
        const std::string& rater, int v, const std::set<std::string>& eligible) const {
        std::vector<std::pair<std::string, OpinionMultiset>> out;
        for (const auto& [r, target] : placeholders_) {
            if (r != rater || !eligible.count(target)) continue;
            OpinionMultiset e = *this;
            e.placeholders_.erase({r, target});
            e.rated_[{r, target, v}] += 1;
            out.emplace_back(target, std::move(e));
        }
        return out;
    }

    // Saturating per-coordinate cap used by bounded exploration.
    OpinionMultiset capped(unsigned cap) const {
        OpinionMultiset e = *this;
        for (auto& [k, m] : e.rated_) {
            if (m > cap) m = cap;
        }
        return e;
    }

    const std::map<RatedKey, unsigned>& rated() const { return rated_; }
    const std::set<PlaceholderKey>& placeholders() const { return placeholders_; }

    // Placeholders of one rater.
    std::vector<std::string> placeholder_targets(const std::string& rater) const {
        std::vector<std::string> out;
        for (const auto& [r, t] : placeholders_) {
            if (r == rater) out.push_back(t);
        }
        return out;
    }

    bool operator==(const OpinionMultiset& o) const {
        return rated_ == o.rated_ && placeholders_ == o.placeholders_;
    }

    std::size_t hash() const {
        std::size_t h = 0x6f70ULL;
        for (const auto& [k, m] : rated_) {
            hash_combine(h, hash_string(std::get<0>(k)));
            hash_combine(h, hash_string(std::get<1>(k)));
            hash_combine(h, static_cast<std::size_t>(static_cast<unsigned>(std::get<2>(k))));
            hash_combine(h, m);
        }
        for (const auto& [r, t] : placeholders_) {
            hash_combine(h, hash_string(r));
            hash_combine(h, hash_string(t));
        }
        return h;
    }

private:
    std::map<RatedKey, unsigned> rated_;
    std::set<PlaceholderKey> placeholders_;
};

struct ClubParams {
    double lambda = 0.5;  // in (0,1)
};

struct EigenTrustParams {
    double damping = 0.15;  // in [0,1)
    std::set<std::string> pretrusted;
    double epsilon = 1e-9;
    unsigned max_iter = 1000;
    // Whether an agent reachable through several shared groups contributes
    // per group instead of once in the recursive formula.
    bool per_group_weights = false;
};

struct TrustModelConfig {
    enum class Kind { Club, EigenTrust };
    Kind kind = Kind::EigenTrust;
    ClubParams club;
    EigenTrustParams eigen;
};

// Static description of a trust adaptive system.
struct SystemSpec {
    std::vector<Agent> agents;
    Definitions defs;
    std::map<std::string, ActionKind> action_kinds;       // declared visible actions
    std::set<std::pair<std::string, std::string>> sync;   // (output, input)
    SecurityClassification cls;
    Groups initial_groups;
    OpinionMultiset initial_opinions;
    TrustModelConfig model;

    int agent_index(const std::string& name) const {
        for (std::size_t i = 0; i < agents.size(); ++i) {
            if (agents[i].name == name) return static_cast<int>(i);
        }
        return -1;
    }

    const Agent* agent(const std::string& name) const {
        int i = agent_index(name);
        return i < 0 ? nullptr : &agents[static_cast<std::size_t>(i)];
    }
};

namespace detail {

inline void scan_group_refs(Term t, std::set<std::string>& out) {
    switch (t->kind()) {
        case TermNode::Kind::Prefix: {
            const Action& a = t->action();
            if (a.type == Action::Type::Ent || a.type == Action::Type::Esc) out.insert(a.name);
            scan_group_refs(t->continuation(), out);
            return;
        }
        case TermNode::Kind::Choice:
            scan_group_refs(t->lhs(), out);
            scan_group_refs(t->rhs(), out);
            return;
        default: return;
    }
}

}  // namespace detail

// The behavior constant that marks club-governing agents in the club model.
inline bool is_cdsr_behavior(const std::string& constant) {
    if (constant.size() != 4) return false;
    auto lower = [](char c) { return c >= 'A' && c <= 'Z' ? char(c - 'A' + 'a') : c; };
    const char* ref = "cdsr";
    for (int i = 0; i < 4; ++i) {
        if (lower(constant[static_cast<std::size_t>(i)]) != ref[i]) return false;
    }
    return true;
}

// Structural diagnostics for a system description; empty means valid.
inline std::vector<std::string> validate_spec(const SystemSpec& spec) {
    std::vector<std::string> out;

    std::set<std::string> names;
    for (const auto& a : spec.agents) {
        if (!names.insert(a.name).second) out.push_back("duplicate agent " + a.name);
        if (!spec.defs.bindings.count(a.behavior)) {
            out.push_back("agent " + a.name + ": unbound behavior constant " + a.behavior);
        }
        if (a.threshold < 0.0 || a.threshold > 1.0) {
            out.push_back("agent " + a.name + ": threshold outside [0,1]");
        }
    }

    for (auto& d : validate_definitions(spec.defs)) out.push_back(d);

    for (const auto& [o, i] : spec.sync) {
        auto oit = spec.action_kinds.find(o);
        auto iit = spec.action_kinds.find(i);
        if (oit == spec.action_kinds.end() || oit->second != ActionKind::Output) {
            out.push_back("sync pair " + o + " x " + i + ": " + o + " is not an output action");
        }
        if (iit == spec.action_kinds.end() || iit->second != ActionKind::Input) {
            out.push_back("sync pair " + o + " x " + i + ": " + i + " is not an input action");
        }
        // H/L closure: a in H iff b in H, a in L iff b in L.
        if (spec.cls.is_high(o) != spec.cls.is_high(i) || spec.cls.is_low(o) != spec.cls.is_low(i)) {
            out.push_back("classification closure violated on " + o + " x " + i);
        }
    }

    for (const auto& a : spec.cls.high) {
        if (spec.cls.low.count(a)) out.push_back("action " + a + " is both high and low");
    }

    for (const auto& [g, members] : spec.initial_groups) {
        for (const auto& m : members) {
            if (!names.count(m)) out.push_back("group " + g + ": undeclared member " + m);
        }
    }

    // Group names referenced by ent/esc must be declared.
    std::set<std::string> refs;
    for (const auto& [c, body] : spec.defs.bindings) detail::scan_group_refs(body, refs);
    for (const auto& g : refs) {
        if (!spec.initial_groups.count(g)) {
            out.push_back("ent/esc references undeclared group " + g);
        }
    }

    for (const auto& [k, m] : spec.initial_opinions.rated()) {
        if (!names.count(std::get<0>(k)) || !names.count(std::get<1>(k))) {
            out.push_back("initial opinion references undeclared agent (" + std::get<0>(k) + "," +
                          std::get<1>(k) + ")");
        }
    }
    for (const auto& [r, t] : spec.initial_opinions.placeholders()) {
        if (!names.count(r) || !names.count(t)) {
            out.push_back("initial placeholder references undeclared agent (" + r + "," + t + ")");
        }
    }

    if (spec.model.kind == TrustModelConfig::Kind::Club) {
        double l = spec.model.club.lambda;
        if (!(l > 0.0 && l < 1.0)) out.push_back("club lambda outside (0,1)");
        // Under the club model an agent may belong to at most one club.
        for (const auto& a : spec.agents) {
            int clubs = 0;
            for (const auto& [g, members] : spec.initial_groups) {
                bool is_club = false;
                for (const auto& m : members) {
                    const Agent* ag = spec.agent(m);
                    if (ag && is_cdsr_behavior(ag->behavior)) is_club = true;
                }
                if (is_club && members.count(a.name)) ++clubs;
            }
            if (clubs > 1) out.push_back("agent " + a.name + " belongs to more than one club");
        }
    } else {
        double d = spec.model.eigen.damping;
        if (!(d >= 0.0 && d < 1.0)) out.push_back("eigentrust damping outside [0,1)");
        for (const auto& p : spec.model.eigen.pretrusted) {
            if (!names.count(p)) out.push_back("pretrusted references undeclared agent " + p);
        }
    }

    return out;
}

// A trace prefix is well-defined when no state carries two placeholders with
// the same rater, so obs is never ambiguous.
inline bool is_well_defined(std::span<const OpinionMultiset> states_along_path) {
    for (const auto& e : states_along_path) {
        std::string last;
        bool have = false;
        for (const auto& [r, t] : e.placeholders()) {
            if (have && r == last) return false;
            last = r;
            have = true;
        }
    }
    return true;
}

}  // namespace tas
