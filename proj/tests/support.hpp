#pragma once

// Shared helpers for the unit and acceptance suites: randomized spec/TLTS
// generation, a naive path-enumeration oracle for the checker, structural
// invariant checks for explored TLTSs, and a CLI process runner.

#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tas/parser.hpp"
#include "tas/scenario.hpp"
#include "tas/semantics.hpp"
#include "tas/trust.hpp"
#include "tas/ttl.hpp"

namespace tas_test {

// ---------------------------------------------------------------------------
// Randomized small systems (bounded agents/actions/groups).

inline tas::SystemSpec random_spec(std::mt19937& rng) {
    using namespace tas;
    for (;;) {
        std::uniform_int_distribution<int> agents_d(2, 4);
        std::uniform_int_distribution<int> pairs_d(1, 3);
        std::uniform_int_distribution<int> groups_d(1, 2);
        std::uniform_int_distribution<int> cls_d(0, 2);
        std::uniform_int_distribution<int> coin(0, 1);

        SystemSpec spec;
        int n_agents = agents_d(rng);
        int n_pairs = pairs_d(rng);
        int n_groups = groups_d(rng);

        std::vector<std::string> outs;
        std::vector<std::string> ins;
        for (int k = 0; k < n_pairs; ++k) {
            std::string o = "snd" + std::to_string(k);
            std::string i = "rcv" + std::to_string(k);
            outs.push_back(o);
            ins.push_back(i);
            spec.action_kinds[o] = ActionKind::Output;
            spec.action_kinds[i] = ActionKind::Input;
            int cls = cls_d(rng);
            if (cls == 0) {
                spec.cls.high.insert(o);
                spec.cls.high.insert(i);
            } else if (cls == 1) {
                spec.cls.low.insert(o);
                spec.cls.low.insert(i);
            }
            spec.sync.insert({o, i});
        }

        std::vector<std::string> agent_names;
        for (int a = 0; a < n_agents; ++a) agent_names.push_back("N" + std::to_string(a + 1));
        std::vector<std::string> group_names;
        for (int g = 0; g < n_groups; ++g) group_names.push_back("G" + std::to_string(g + 1));

        std::uniform_int_distribution<int> agent_d(0, n_agents - 1);
        std::uniform_int_distribution<int> group_d(0, n_groups - 1);
        std::uniform_int_distribution<int> pair_d(0, n_pairs - 1);
        std::uniform_int_distribution<int> branch_kind_d(0, 9);
        std::uniform_int_distribution<int> branches_d(1, 3);

        // Branches are biased toward complete interactions (output, then a
        // rating; input loops) so that the trust-gated rules actually fire.
        auto random_term = [&](const std::string& self_const) {
            std::string term;
            int branches = branches_d(rng);
            for (int b = 0; b < branches; ++b) {
                if (b) term += " + ";
                std::string tail;
                switch (rng() % 4) {
                    case 0: tail = "0"; break;
                    case 1:
                        tail = "B" + std::to_string(agent_d(rng) + 1);  // cross recursion
                        break;
                    default: tail = self_const; break;
                }
                switch (branch_kind_d(rng)) {
                    case 0:
                    case 1:
                    case 2: {  // request and rate it
                        term += outs[static_cast<std::size_t>(pair_d(rng))] + " . obs(" +
                                (coin(rng) ? "1" : "-1") + ") . " + tail;
                        break;
                    }
                    case 3:
                    case 4:
                    case 5: {  // serve
                        term += ins[static_cast<std::size_t>(pair_d(rng))] + " . " + tail;
                        break;
                    }
                    case 6: {  // fabricate feedback
                        term += "fake_obs(" +
                                agent_names[static_cast<std::size_t>(agent_d(rng))] + "," +
                                (coin(rng) ? "1" : "-1") + ") . " + tail;
                        break;
                    }
                    case 7: {  // churn community membership
                        term += (coin(rng) ? "ent(" : "esc(") +
                                group_names[static_cast<std::size_t>(group_d(rng))] + ") . " +
                                tail;
                        break;
                    }
                    case 8: {  // request without rating
                        term += outs[static_cast<std::size_t>(pair_d(rng))] + " . " + tail;
                        break;
                    }
                    default: {
                        term += "tau . " + tail;
                        break;
                    }
                }
            }
            return term;
        };

        const double thresholds[] = {0.0, 0.3, 0.5, 0.8};
        for (int a = 0; a < n_agents; ++a) {
            std::string behavior = "B" + std::to_string(a + 1);
            spec.defs.bindings[behavior] =
                parse_term(random_term(behavior), spec.action_kinds, spec.defs);
            spec.agents.push_back({agent_names[static_cast<std::size_t>(a)], behavior,
                                   thresholds[rng() % 4]});
        }

        bool connected = coin(rng) == 0;
        for (const auto& g : group_names) {
            std::set<std::string> members;
            for (const auto& a : agent_names) {
                if (connected || coin(rng)) members.insert(a);
            }
            if (members.empty()) members.insert(agent_names[0]);
            spec.initial_groups[g] = std::move(members);
            connected = false;  // only the first group is forced to be total
        }

        std::uniform_int_distribution<int> opinions_d(0, 3);
        int n_opinions = opinions_d(rng);
        for (int i = 0; i < n_opinions; ++i) {
            std::string rater = agent_names[static_cast<std::size_t>(agent_d(rng))];
            std::string target = agent_names[static_cast<std::size_t>(agent_d(rng))];
            if (rater == target) continue;
            spec.initial_opinions = spec.initial_opinions.add_fake(rater, target,
                                                                   coin(rng) ? 1 : -1);
        }

        if (coin(rng)) {
            spec.model.kind = TrustModelConfig::Kind::Club;
            const double lambdas[] = {0.3, 0.5, 0.8};
            spec.model.club.lambda = lambdas[rng() % 3];
        } else {
            spec.model.kind = TrustModelConfig::Kind::EigenTrust;
        }

        if (validate_spec(spec).empty()) return spec;
    }
}

// ---------------------------------------------------------------------------
// Structural invariants of explored TLTSs (Table 2 conformance).

inline std::vector<std::string> tlts_invariant_violations(const tas::SystemSpec& spec,
                                                          const tas::Tlts& t) {
    using namespace tas;
    std::vector<std::string> out;
    auto complain = [&](std::uint32_t e, const std::string& what) {
        out.push_back("edge " + std::to_string(e) + " (" + t.transitions[e].label.str() + "): " +
                      what);
    };

    for (std::size_t q = 0; q < t.states.size(); ++q) {
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& p : t.states[q].opinions.placeholders()) {
            if (!seen.insert(p).second) {
                out.push_back("state " + std::to_string(q) + ": duplicate placeholder");
            }
        }
    }

    for (std::uint32_t e = 0; e < t.transitions.size(); ++e) {
        const Transition& tr = t.transitions[e];
        const Configuration& src = t.states[tr.src];
        const Configuration& dst = t.states[tr.dst];

        bool groups_changed = src.groups != dst.groups;
        bool rated_changed = src.opinions.rated() != dst.opinions.rated();

        if (tr.label.sync) {
            if (tr.label.agent == tr.label.partner) complain(e, "self synchronization");
            if (!spec.sync.count({tr.label.out_action, tr.label.in_action})) {
                complain(e, "pair not in the synchronization set");
            }
            if (!share_group(src.groups, tr.label.agent, tr.label.partner)) {
                complain(e, "agents share no community in the source state");
            }
            double tv = trust_value(spec, src.groups, src.opinions, tr.label.agent,
                                    tr.label.partner);
            double th = spec.agent(tr.label.agent)->threshold;
            bool high = spec.cls.is_high(tr.label.out_action);
            bool low = spec.cls.is_low(tr.label.out_action);
            if (high && low) complain(e, "action classified both high and low");
            if (high && tv < th) complain(e, "high sync below the threshold");
            if (low && tv >= th) complain(e, "low sync at or above the threshold");
            if ((high && tr.rule != RuleTag::SyncHigh) || (low && tr.rule != RuleTag::SyncLow) ||
                (!high && !low && tr.rule != RuleTag::SyncNeutral)) {
                complain(e, "rule tag disagrees with the classification");
            }
            if (high || low) {
                if (!dst.opinions.has_placeholder(tr.label.agent, tr.label.partner) ||
                    !dst.opinions.has_placeholder(tr.label.partner, tr.label.agent)) {
                    complain(e, "trusted sync did not record both placeholders");
                }
            } else if (!(src.opinions == dst.opinions)) {
                complain(e, "neutral sync changed the opinions");
            }
            if (rated_changed) complain(e, "sync changed rated multiplicities");
            if (groups_changed) complain(e, "sync changed the communities");
        } else {
            switch (tr.rule) {
                case RuleTag::Tau:
                    if (groups_changed) complain(e, "tau changed the communities");
                    if (!(src.opinions == dst.opinions)) complain(e, "tau changed the opinions");
                    break;
                case RuleTag::Ent:
                case RuleTag::Esc: {
                    if (!(src.opinions == dst.opinions)) {
                        complain(e, "ent/esc changed the opinions");
                    }
                    int diffs = 0;
                    for (const auto& [g, members] : src.groups) {
                        const auto& after = dst.groups.at(g);
                        if (members == after) continue;
                        ++diffs;
                        std::set<std::string> sym;
                        std::set_symmetric_difference(members.begin(), members.end(),
                                                      after.begin(), after.end(),
                                                      std::inserter(sym, sym.begin()));
                        if (sym != std::set<std::string>{tr.label.agent}) {
                            complain(e, "ent/esc touched a foreign membership");
                        }
                    }
                    if (diffs > 1) complain(e, "ent/esc changed several communities");
                    break;
                }
                case RuleTag::Obs:
                case RuleTag::Fake:
                    if (groups_changed) complain(e, "obs/fake changed the communities");
                    break;
                default: complain(e, "internal label with a sync rule tag");
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random TLTS and formula generation for checker-vs-oracle equivalence.

// A fixed three-agent context; the graph itself is synthetic.
inline tas::SystemSpec oracle_context() {
    using namespace tas;
    SystemSpec spec;
    spec.model.kind = TrustModelConfig::Kind::EigenTrust;
    spec.defs.bindings["Node"] = spec.defs.arena->nil();
    spec.agents = {{"I", "Node", 0.5}, {"J", "Node", 0.5}, {"K", "Node", 0.5}};
    spec.initial_groups["G"] = {"I", "J", "K"};
    spec.action_kinds["a"] = ActionKind::Output;
    spec.action_kinds["b"] = ActionKind::Input;
    spec.sync.insert({"a", "b"});
    return spec;
}

inline tas::Tlts random_tlts(std::mt19937& rng, const tas::SystemSpec& ctx,
                             std::size_t max_states) {
    using namespace tas;
    std::uniform_int_distribution<std::size_t> n_d(2, max_states);
    std::size_t n = n_d(rng);
    std::uniform_int_distribution<std::size_t> state_d(0, n - 1);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> agent_d(0, 2);
    std::uniform_int_distribution<int> mult_d(1, 3);
    const std::string names[] = {"I", "J", "K"};

    Tlts t;
    for (const auto& a : ctx.agents) t.agent_names.push_back(a.name);
    Term nil = ctx.defs.arena->constant("Node");
    for (std::size_t q = 0; q < n; ++q) {
        Configuration c;
        c.terms = {nil, nil, nil};
        c.groups["G"] = {};
        for (int a = 0; a < 3; ++a) {
            if (coin(rng)) c.groups["G"].insert(names[a]);
        }
        int entries = static_cast<int>(rng() % 4);
        for (int i = 0; i < entries; ++i) {
            std::string rater = names[agent_d(rng)];
            std::string target = names[agent_d(rng)];
            if (rater == target) continue;
            int score = coin(rng) ? 1 : -1;
            for (int m = mult_d(rng); m > 0; --m) c.opinions = c.opinions.add_fake(rater, target, score);
        }
        if (coin(rng) == 0) {
            std::string rater = names[agent_d(rng)];
            std::string target = names[agent_d(rng)];
            if (rater != target) c.opinions = c.opinions.add_placeholders(rater, target);
        }
        t.states.push_back(std::move(c));
    }
    t.out_edges.assign(n, {});
    std::uniform_int_distribution<std::size_t> edges_d(n / 2, 2 * n);
    std::size_t n_edges = edges_d(rng);
    for (std::size_t e = 0; e < n_edges; ++e) {
        std::uint32_t src = static_cast<std::uint32_t>(state_d(rng));
        std::uint32_t dst = static_cast<std::uint32_t>(state_d(rng));
        TransitionLabel label;
        if (coin(rng)) {
            label = TransitionLabel::internal(names[agent_d(rng)]);
        } else {
            int i = agent_d(rng);
            int j = agent_d(rng);
            if (i == j) j = (j + 1) % 3;
            label = TransitionLabel::synchronization(names[i], "a", names[j], "b");
        }
        t.out_edges[src].push_back(static_cast<std::uint32_t>(t.transitions.size()));
        t.transitions.push_back({src, dst, label, RuleTag::Tau});
    }
    return t;
}

inline tas::FormulaPtr random_formula(std::mt19937& rng, int depth) {
    using namespace tas;
    std::uniform_int_distribution<int> atom_d(0, 4);
    std::uniform_int_distribution<int> op_d(0, 7);
    std::uniform_int_distribution<int> agent_d(0, 2);
    std::uniform_int_distribution<int> rel_d(0, 4);
    const std::string names[] = {"I", "J", "K"};

    if (depth <= 0 || op_d(rng) == 0) {
        switch (atom_d(rng)) {
            case 0: return Formula::truth_value(true);
            case 1: return Formula::truth_value(false);
            case 2: {
                TrustVariable w;
                w.agg = TrustVariable::Agg::None;
                w.rater = names[agent_d(rng)];
                w.target = names[(agent_d(rng) + 1) % 3];
                if (w.rater == w.target) w.target = names[(agent_d(rng) + 2) % 3];
                if (w.rater == w.target) w.target = w.rater == "I" ? "J" : "I";
                const double ks[] = {0.0, 0.25, 0.5, 0.75, 1.0};
                return Formula::trust_atom(w, static_cast<Rel>(rel_d(rng)), ks[rng() % 5]);
            }
            case 3: {
                TrustVariable w;
                const TrustVariable::Agg aggs[] = {TrustVariable::Agg::Sum,
                                                   TrustVariable::Agg::Min,
                                                   TrustVariable::Agg::Max,
                                                   TrustVariable::Agg::Count};
                w.agg = aggs[rng() % 4];
                w.rater = names[agent_d(rng)];
                w.target = w.rater == "I" ? "J" : "I";
                const double ks[] = {-2, -1, 0, 1, 2, 3};
                return Formula::trust_atom(w, static_cast<Rel>(rel_d(rng)), ks[rng() % 6]);
            }
            default: {
                LabelPattern p;
                const char* gov[] = {"I", "J", "K", "*"};
                p.gov = gov[rng() % 4];
                if (rng() % 2) {
                    p.act = rng() % 2 ? "tau" : "*";
                } else {
                    p.binary = true;
                    p.act = "a";
                    p.partner = gov[rng() % 4];
                    p.in_act = rng() % 2 ? "b" : "?";
                }
                return Formula::action_atom(p);
            }
        }
    }
    switch (op_d(rng)) {
        case 1: return Formula::make(Formula::Kind::Not, random_formula(rng, depth - 1));
        case 2:
            return Formula::make(Formula::Kind::And, random_formula(rng, depth - 1),
                                 random_formula(rng, depth - 1));
        case 3:
            return Formula::make(Formula::Kind::Or, random_formula(rng, depth - 1),
                                 random_formula(rng, depth - 1));
        case 4: {
            LabelPattern p;
            p.gov = "*";
            p.act = "*";
            return Formula::ex(p, random_formula(rng, depth - 1));
        }
        case 5: return Formula::make(Formula::Kind::EF, random_formula(rng, depth - 1));
        case 6: return Formula::make(Formula::Kind::AG, random_formula(rng, depth - 1));
        default:
            return Formula::make(rng() % 2 ? Formula::Kind::EU : Formula::Kind::AU,
                                 random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    }
}

// ---------------------------------------------------------------------------
// Naive path-enumeration oracle. Temporal operators are decided by explicit
// reachability and lasso search over maximal paths, not by fixpoints, so the
// two implementations share nothing but the atom evaluation.

class NaiveOracle {
public:
    NaiveOracle(const tas::Tlts& t, const tas::SystemSpec& spec) : t_(t), spec_(spec) {}

    std::vector<bool> sat(const tas::Formula& f) {
        using tas::Formula;
        const std::size_t n = t_.states.size();
        std::vector<bool> out(n, false);
        switch (f.kind) {
            case Formula::Kind::Truth: out.assign(n, f.truth); return out;
            case Formula::Kind::TrustAtom: {
                for (std::size_t q = 0; q < n; ++q) {
                    auto v = tas::eval_trust_variable(f.var, spec_, t_.states[q]);
                    if (!v) continue;
                    switch (f.rel) {
                        case tas::Rel::Ge: out[q] = *v >= f.threshold; break;
                        case tas::Rel::Gt: out[q] = *v > f.threshold; break;
                        case tas::Rel::Le: out[q] = *v <= f.threshold; break;
                        case tas::Rel::Lt: out[q] = *v < f.threshold; break;
                        case tas::Rel::Eq: out[q] = *v == f.threshold; break;
                    }
                }
                return out;
            }
            case Formula::Kind::ActionAtom: {
                for (std::size_t q = 0; q < n; ++q) {
                    for (auto e : t_.out_edges[q]) {
                        if (f.pattern.matches(t_.transitions[e].label)) {
                            out[q] = true;
                            break;
                        }
                    }
                }
                return out;
            }
            case Formula::Kind::Not: {
                auto a = sat(*f.a);
                for (std::size_t q = 0; q < n; ++q) out[q] = !a[q];
                return out;
            }
            case Formula::Kind::And: {
                auto a = sat(*f.a);
                auto b = sat(*f.b);
                for (std::size_t q = 0; q < n; ++q) out[q] = a[q] && b[q];
                return out;
            }
            case Formula::Kind::Or: {
                auto a = sat(*f.a);
                auto b = sat(*f.b);
                for (std::size_t q = 0; q < n; ++q) out[q] = a[q] || b[q];
                return out;
            }
            case Formula::Kind::EX: {
                auto a = sat(*f.a);
                for (std::size_t q = 0; q < n; ++q) {
                    for (auto e : t_.out_edges[q]) {
                        const auto& tr = t_.transitions[e];
                        if (f.pattern.matches(tr.label) && a[tr.dst]) {
                            out[q] = true;
                            break;
                        }
                    }
                }
                return out;
            }
            case Formula::Kind::EF: {
                auto goal = sat(*f.a);
                std::vector<bool> via(n, true);
                for (std::size_t q = 0; q < n; ++q) out[q] = reaches(q, via, goal);
                return out;
            }
            case Formula::Kind::EU: {
                auto via = sat(*f.a);
                auto goal = sat(*f.b);
                for (std::size_t q = 0; q < n; ++q) out[q] = reaches(q, via, goal);
                return out;
            }
            case Formula::Kind::AG: {
                auto a = sat(*f.a);
                std::vector<bool> bad(n);
                std::vector<bool> via(n, true);
                for (std::size_t q = 0; q < n; ++q) bad[q] = !a[q];
                for (std::size_t q = 0; q < n; ++q) out[q] = !reaches(q, via, bad);
                return out;
            }
            case Formula::Kind::AU: {
                // A[phi U psi] fails exactly when some maximal path either hits
                // a (not phi, not psi) state through not-psi states, or stays
                // in not-psi states forever / up to a deadlock.
                auto phi = sat(*f.a);
                auto psi = sat(*f.b);
                const std::size_t m = n;
                std::vector<bool> not_psi(m), violation(m);
                for (std::size_t q = 0; q < m; ++q) {
                    not_psi[q] = !psi[q];
                    violation[q] = !phi[q] && !psi[q];
                }
                for (std::size_t q = 0; q < m; ++q) {
                    bool fails = reaches(q, not_psi, violation) || lasso_within(q, not_psi);
                    out[q] = !fails;
                }
                return out;
            }
        }
        return out;
    }

private:
    // Is there a path from q to a goal state whose intermediate states
    // (including q, excluding the goal) satisfy `via`?
    bool reaches(std::size_t q, const std::vector<bool>& via, const std::vector<bool>& goal) {
        if (goal[q]) return true;
        if (!via[q]) return false;
        std::vector<bool> seen(t_.states.size(), false);
        std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(q)};
        seen[q] = true;
        while (!stack.empty()) {
            std::uint32_t s = stack.back();
            stack.pop_back();
            for (auto e : t_.out_edges[s]) {
                std::uint32_t d = t_.transitions[e].dst;
                if (goal[d]) return true;
                if (!seen[d] && via[d]) {
                    seen[d] = true;
                    stack.push_back(d);
                }
            }
        }
        return false;
    }

    // Is there a maximal path from q staying inside `via` (a cycle fully in
    // via, or a deadlock state in via)?
    bool lasso_within(std::size_t q, const std::vector<bool>& via) {
        if (!via[q]) return false;
        std::vector<int> color(t_.states.size(), 0);  // 0 white, 1 gray, 2 black
        return lasso_dfs(static_cast<std::uint32_t>(q), via, color);
    }

    bool lasso_dfs(std::uint32_t q, const std::vector<bool>& via, std::vector<int>& color) {
        color[q] = 1;
        if (t_.out_edges[q].empty()) {
            color[q] = 2;
            return true;  // deadlock inside via: a finite maximal path
        }
        for (auto e : t_.out_edges[q]) {
            std::uint32_t d = t_.transitions[e].dst;
            if (!via[d]) continue;
            if (color[d] == 1) return true;  // cycle inside via
            if (color[d] == 0 && lasso_dfs(d, via, color)) return true;
        }
        color[q] = 2;
        return false;
    }

    const tas::Tlts& t_;
    const tas::SystemSpec& spec_;
};

// ---------------------------------------------------------------------------
// Bundle verification: explore within the suggested bounds and compare every
// bundled property against its expected verdict.

struct BundleCheck {
    bool truncated = false;
    std::size_t states = 0;
    std::vector<std::string> mismatches;

    bool ok() const { return !truncated && mismatches.empty(); }

    std::string summary() const {
        if (truncated) return "exploration truncated";
        if (!mismatches.empty()) return mismatches.front();
        return "ok";
    }
};

inline BundleCheck check_bundle(const tas::ScenarioBundle& bundle, unsigned threads = 1) {
    BundleCheck out;
    tas::Tlts t = tas::build_tlts(bundle.spec, bundle.suggested_bounds, threads);
    out.truncated = !t.truncated.empty();
    out.states = t.states.size();
    for (const auto& p : bundle.properties) {
        tas::CheckResult r = tas::check(t, p.formula, bundle.spec);
        bool is_true = r.verdict == tas::CheckResult::Verdict::True;
        bool indeterminate = r.verdict == tas::CheckResult::Verdict::Indeterminate;
        if (indeterminate || is_true != p.expected) {
            out.mismatches.push_back(p.name + ": got " + r.verdict_str() + ", expected " +
                                     (p.expected ? "true" : "false"));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CLI runner.

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

inline CliResult run_cli(const std::string& cli_path, const std::string& args) {
    CliResult res;
    std::string cmd = cli_path + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof(buf), pipe)) res.output.append(buf, got);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

}  // namespace tas_test
