#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tas/system.hpp"
#include "tas/trust.hpp"

namespace tas {

// Global state: one local term per agent (fixed order), current communities,
// current opinion multiset.
struct Configuration {
    std::vector<Term> terms;
    Groups groups;
    OpinionMultiset opinions;

    bool operator==(const Configuration& o) const {
        return terms == o.terms && groups == o.groups && opinions == o.opinions;
    }

    std::size_t hash() const {
        std::size_t h = 0x636f6e66ULL;
        for (Term t : terms) hash_combine(h, t->hash());
        for (const auto& [g, members] : groups) {
            hash_combine(h, hash_string(g));
            for (const auto& m : members) hash_combine(h, hash_string(m));
        }
        hash_combine(h, opinions.hash());
        return h;
    }
};

// I.tau or I.a x J.b; the acting (output) agent governs.
struct TransitionLabel {
    bool sync = false;
    std::string agent;       // acting agent
    std::string out_action;  // sync only
    std::string partner;     // sync only
    std::string in_action;   // sync only

    static TransitionLabel internal(std::string agent) {
        TransitionLabel l;
        l.agent = std::move(agent);
        return l;
    }
    static TransitionLabel synchronization(std::string i, std::string a, std::string j,
                                           std::string b) {
        TransitionLabel l;
        l.sync = true;
        l.agent = std::move(i);
        l.out_action = std::move(a);
        l.partner = std::move(j);
        l.in_action = std::move(b);
        return l;
    }

    std::string str() const {
        if (!sync) return agent + ".tau";
        return agent + "." + out_action + "*" + partner + "." + in_action;
    }

    bool operator==(const TransitionLabel& o) const {
        return sync == o.sync && agent == o.agent && out_action == o.out_action &&
               partner == o.partner && in_action == o.in_action;
    }
};

// Which semantics rule produced a transition. Not part of the label; kept for
// reporting and scenario analysis.
enum class RuleTag { Tau, Ent, Esc, SyncHigh, SyncLow, SyncNeutral, Obs, Fake };

inline const char* rule_name(RuleTag r) {
    switch (r) {
        case RuleTag::Tau: return "tau";
        case RuleTag::Ent: return "ent";
        case RuleTag::Esc: return "esc";
        case RuleTag::SyncHigh: return "sync-high";
        case RuleTag::SyncLow: return "sync-low";
        case RuleTag::SyncNeutral: return "sync-neutral";
        case RuleTag::Obs: return "obs";
        case RuleTag::Fake: return "fake";
    }
    return "?";
}

struct Transition {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    TransitionLabel label;
    RuleTag rule = RuleTag::Tau;
};

// Exploration bounds; saturation and cut-offs are an abstraction of the
// unbounded multiset semantics and are reported through `truncated`.
struct Bounds {
    std::size_t max_states = 100000;
    std::size_t max_depth = 64;
    unsigned opinion_cap = 8;
};

struct Tlts {
    std::vector<std::string> agent_names;
    std::vector<Configuration> states;
    std::uint32_t initial = 0;
    std::vector<Transition> transitions;
    std::vector<std::vector<std::uint32_t>> out_edges;  // per state, indices into transitions
    std::set<std::uint32_t> truncated;                  // states whose expansion was cut
    Bounds bounds;
};

struct EnabledStep {
    TransitionLabel label;
    RuleTag rule = RuleTag::Tau;
    Configuration next;
};

// All transitions enabled in a configuration, in canonical order: agent index,
// then rule (tau, ent, esc, sync, obs, fake), then local-step order, then
// partner index, then partner-step order.
inline std::vector<EnabledStep> enabled_transitions(const Configuration& c,
                                                    const SystemSpec& spec) {
    const std::size_t n = spec.agents.size();
    std::vector<EnabledStep> out;

    // t_IJ values for this source state, computed on demand.
    std::map<std::pair<std::size_t, std::size_t>, double> trust_memo;
    auto trust_of = [&](std::size_t i, std::size_t j) {
        auto key = std::make_pair(i, j);
        auto it = trust_memo.find(key);
        if (it != trust_memo.end()) return it->second;
        double v = trust_value(spec, c.groups, c.opinions, spec.agents[i].name,
                               spec.agents[j].name);
        trust_memo.emplace(key, v);
        return v;
    };

    std::vector<std::vector<std::pair<Action, Term>>> steps(n);
    for (std::size_t i = 0; i < n; ++i) steps[i] = local_steps(c.terms[i], spec.defs);

    auto with_term = [&](std::size_t i, Term t) {
        Configuration next = c;
        next.terms[i] = t;
        return next;
    };

    for (std::size_t i = 0; i < n; ++i) {
        const std::string& agent_i = spec.agents[i].name;

        // Rule 1: autonomous internal step.
        for (const auto& [a, cont] : steps[i]) {
            if (a.is_tau()) {
                out.push_back({TransitionLabel::internal(agent_i), RuleTag::Tau, with_term(i, cont)});
            }
        }

        // Rule 2: join a declared community.
        for (const auto& [a, cont] : steps[i]) {
            if (a.type != Action::Type::Ent) continue;
            auto git = c.groups.find(a.name);
            if (git == c.groups.end()) {
                throw SpecError("ent references undeclared group " + a.name);
            }
            Configuration next = with_term(i, cont);
            next.groups[a.name].insert(agent_i);
            out.push_back({TransitionLabel::internal(agent_i), RuleTag::Ent, std::move(next)});
        }

        // Rule 3: leave a community the agent belongs to.
        for (const auto& [a, cont] : steps[i]) {
            if (a.type != Action::Type::Esc) continue;
            auto git = c.groups.find(a.name);
            if (git == c.groups.end()) {
                throw SpecError("esc references undeclared group " + a.name);
            }
            if (!git->second.count(agent_i)) continue;
            Configuration next = with_term(i, cont);
            next.groups[a.name].erase(agent_i);
            out.push_back({TransitionLabel::internal(agent_i), RuleTag::Esc, std::move(next)});
        }

        // Rules 4-6: synchronization, governed by agent i offering the output.
        for (const auto& [a, cont_i] : steps[i]) {
            if (a.type != Action::Type::Plain || a.kind != ActionKind::Output) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const std::string& agent_j = spec.agents[j].name;
                if (!share_group(c.groups, agent_i, agent_j)) continue;
                for (const auto& [b, cont_j] : steps[j]) {
                    if (b.type != Action::Type::Plain || b.kind != ActionKind::Input) continue;
                    if (!spec.sync.count({a.name, b.name})) continue;
                    RuleTag rule;
                    if (spec.cls.is_high(a.name)) {
                        if (trust_of(i, j) < spec.agents[i].threshold) continue;
                        rule = RuleTag::SyncHigh;
                    } else if (spec.cls.is_low(a.name)) {
                        if (trust_of(i, j) >= spec.agents[i].threshold) continue;
                        rule = RuleTag::SyncLow;
                    } else {
                        rule = RuleTag::SyncNeutral;
                    }
                    Configuration next = c;
                    next.terms[i] = cont_i;
                    next.terms[j] = cont_j;
                    if (rule != RuleTag::SyncNeutral) {
                        next.opinions = next.opinions.add_placeholders(agent_i, agent_j);
                    }
                    out.push_back({TransitionLabel::synchronization(agent_i, a.name, agent_j,
                                                                    b.name),
                                   rule, std::move(next)});
                }
            }
        }

        // Last rule of Table 2: rate a pending interaction with a current
        // group partner; one successor per eligible placeholder.
        for (const auto& [a, cont] : steps[i]) {
            if (a.type != Action::Type::Obs) continue;
            std::set<std::string> eligible;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i && share_group(c.groups, agent_i, spec.agents[j].name)) {
                    eligible.insert(spec.agents[j].name);
                }
            }
            for (auto& [target, e] : c.opinions.resolve_obs(agent_i, a.score, eligible)) {
                Configuration next = with_term(i, cont);
                next.opinions = std::move(e);
                out.push_back({TransitionLabel::internal(agent_i), RuleTag::Obs, std::move(next)});
            }
        }

        // Fake-opinion rule: rate a community member without any interaction.
        for (const auto& [a, cont] : steps[i]) {
            if (a.type != Action::Type::FakeObs) continue;
            if (a.name == agent_i) continue;  // self-rating is forbidden
            if (spec.agent_index(a.name) < 0) continue;
            if (!share_group(c.groups, agent_i, a.name)) continue;
            Configuration next = with_term(i, cont);
            next.opinions = next.opinions.add_fake(agent_i, a.name, a.score);
            out.push_back({TransitionLabel::internal(agent_i), RuleTag::Fake, std::move(next)});
        }
    }
    return out;
}

namespace detail {

struct ConfigIndexHash {
    const std::vector<Configuration>* states;
    std::size_t operator()(std::uint32_t i) const { return (*states)[i].hash(); }
};
struct ConfigIndexEq {
    const std::vector<Configuration>* states;
    bool operator()(std::uint32_t a, std::uint32_t b) const {
        return (*states)[a] == (*states)[b];
    }
};

}  // namespace detail

// Breadth-first closure of enabled_transitions from the initial configuration.
// Deterministic: identical inputs give identical indexed output regardless of
// the thread count (frontiers are merged in canonical order).
inline Tlts build_tlts(const SystemSpec& spec, const Bounds& bounds, unsigned threads = 1) {
    auto diags = validate_spec(spec);
    if (!diags.empty()) throw SpecError("invalid spec: " + diags.front());
    if (bounds.max_states == 0 || bounds.max_depth == 0 || bounds.opinion_cap == 0) {
        throw SpecError("bounds must be strictly positive");
    }

    Tlts t;
    t.bounds = bounds;
    for (const auto& a : spec.agents) t.agent_names.push_back(a.name);

    Configuration init;
    for (const auto& a : spec.agents) init.terms.push_back(spec.defs.arena->constant(a.behavior));
    init.groups = spec.initial_groups;
    init.opinions = spec.initial_opinions.capped(bounds.opinion_cap);

    detail::ConfigIndexHash hasher{&t.states};
    detail::ConfigIndexEq eq{&t.states};
    std::unordered_set<std::uint32_t, detail::ConfigIndexHash, detail::ConfigIndexEq> seen(
        64, hasher, eq);

    t.states.push_back(std::move(init));
    t.out_edges.emplace_back();
    seen.insert(0);

    std::vector<std::uint32_t> frontier{0};
    std::size_t depth = 0;

    while (!frontier.empty() && depth < bounds.max_depth) {
        // Expand the whole level, then merge sequentially in frontier order.
        std::vector<std::vector<EnabledStep>> expansions(frontier.size());
        unsigned workers = threads == 0 ? 1u : threads;
        if (workers > frontier.size()) workers = static_cast<unsigned>(frontier.size());
        if (workers <= 1) {
            for (std::size_t k = 0; k < frontier.size(); ++k) {
                expansions[k] = enabled_transitions(t.states[frontier[k]], spec);
            }
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(workers);
            for (unsigned w = 0; w < workers; ++w) {
                pool.emplace_back([&, w]() {
                    try {
                        for (std::size_t k = w; k < frontier.size(); k += workers) {
                            expansions[k] = enabled_transitions(t.states[frontier[k]], spec);
                        }
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            for (auto& th : pool) th.join();
            for (auto& err : errors) {
                if (err) std::rethrow_exception(err);
            }
        }

        std::vector<std::uint32_t> next_frontier;
        for (std::size_t k = 0; k < frontier.size(); ++k) {
            std::uint32_t src = frontier[k];
            for (auto& step : expansions[k]) {
                step.next.opinions = step.next.opinions.capped(bounds.opinion_cap);
                t.states.push_back(std::move(step.next));
                std::uint32_t candidate = static_cast<std::uint32_t>(t.states.size() - 1);
                auto [it, inserted] = seen.insert(candidate);
                std::uint32_t dst;
                if (inserted) {
                    if (t.states.size() > bounds.max_states) {
                        // No room for the new state: drop it and remember the
                        // incomplete source.
                        seen.erase(it);
                        t.states.pop_back();
                        t.truncated.insert(src);
                        continue;
                    }
                    dst = candidate;
                    t.out_edges.emplace_back();
                    next_frontier.push_back(dst);
                } else {
                    dst = *it;
                    t.states.pop_back();
                }
                t.out_edges[src].push_back(static_cast<std::uint32_t>(t.transitions.size()));
                t.transitions.push_back({src, dst, step.label, step.rule});
            }
        }
        frontier = std::move(next_frontier);
        ++depth;
    }

    // States left unexpanded by the depth bound.
    for (std::uint32_t q : frontier) t.truncated.insert(q);
    return t;
}

// Path overload of the well-definedness predicate: edge indices must be
// contiguous in the TLTS.
inline bool is_well_defined(const Tlts& t, std::span<const std::uint32_t> edge_indices) {
    std::vector<OpinionMultiset> states;
    if (edge_indices.empty()) {
        states.push_back(t.states[t.initial].opinions);
    } else {
        const Transition& first = t.transitions[edge_indices.front()];
        states.push_back(t.states[first.src].opinions);
        std::uint32_t at = first.src;
        for (std::uint32_t e : edge_indices) {
            const Transition& tr = t.transitions[e];
            if (tr.src != at) throw SpecError("edge sequence is not a path");
            states.push_back(t.states[tr.dst].opinions);
            at = tr.dst;
        }
    }
    return is_well_defined(std::span<const OpinionMultiset>(states));
}

}  // namespace tas
