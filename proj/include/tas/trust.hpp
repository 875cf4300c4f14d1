#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tas/system.hpp"

namespace tas {

// Trust between clubs from p positive and n negative cross-club experiences:
// 1 - lambda^(p-n) when p > n, else 0. lambda is the single-interaction
// reliability probability.
inline double club_group_trust(unsigned p, unsigned n, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw SpecError("club lambda outside (0,1)");
    if (p > n) return 1.0 - std::pow(lambda, static_cast<double>(p) - static_cast<double>(n));
    return 0.0;
}

// Reputation of a member inside its club: non-zero only while all in-club
// interactions with it are positive, then 1 - lambda^p.
inline double club_member_trust(unsigned p, double lambda, bool any_negative) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw SpecError("club lambda outside (0,1)");
    if (any_negative) return 0.0;
    return 1.0 - std::pow(lambda, static_cast<double>(p));
}

// Recommendation combination, 1 - (1 - inner)^weight. pow(0,0) == 1, so a
// zero weight yields zero trust.
inline double combine_trust(double inner, double weight) {
    return 1.0 - std::pow(1.0 - inner, weight);
}

// Clubs are the current groups governed by a CDSR-typed agent. Ad-hoc pair
// groups never contain one, so they are never clubs.
inline std::vector<std::string> club_names(const SystemSpec& spec, const Groups& groups) {
    std::vector<std::string> out;
    for (const auto& [g, members] : groups) {
        for (const auto& m : members) {
            const Agent* a = spec.agent(m);
            if (a && is_cdsr_behavior(a->behavior)) {
                out.push_back(g);
                break;
            }
        }
    }
    return out;
}

// The club an agent currently belongs to. Initial specs are validated to have
// at most one; should ent() create a second membership at run time, the
// lexicographically first club name wins, deterministically.
inline std::optional<std::string> club_of(const SystemSpec& spec, const Groups& groups,
                                          const std::string& agent) {
    for (const auto& g : club_names(spec, groups)) {
        if (groups.at(g).count(agent)) return g;
    }
    return std::nullopt;
}

namespace detail {

// p and any-negative for a member as rated by the other members of its club.
inline std::pair<unsigned, bool> member_experience(const OpinionMultiset& e,
                                                   const std::set<std::string>& club,
                                                   const std::string& member) {
    unsigned p = 0;
    bool neg = false;
    for (const auto& [k, mul] : e.rated()) {
        const auto& [rater, target, score] = k;
        if (target != member || rater == member || !club.count(rater)) continue;
        if (score > 0) p += mul;
        if (score < 0 && mul > 0) neg = true;
    }
    return {p, neg};
}

}  // namespace detail

// Trust of I towards J under the club model: member reputation inside a shared
// club, or member reputation weighted by cross-club trust, or 0 when no club
// relation exists.
inline double club_trust(const SystemSpec& spec, const OpinionMultiset& e, const Groups& groups,
                         const std::string& i, const std::string& j) {
    const double lambda = spec.model.club.lambda;
    auto club_i = club_of(spec, groups, i);
    auto club_j = club_of(spec, groups, j);
    if (!club_i || !club_j) return 0.0;

    const std::set<std::string>& y = groups.at(*club_j);
    auto [p, neg] = detail::member_experience(e, y, j);
    double member = club_member_trust(p, lambda, neg);
    if (*club_i == *club_j) return member;

    const std::set<std::string>& x = groups.at(*club_i);
    unsigned pc = 0;
    unsigned nc = 0;
    for (const auto& [k, mul] : e.rated()) {
        const auto& [rater, target, score] = k;
        if (!x.count(rater) || !y.count(target)) continue;
        if (score > 0) pc += mul;
        if (score < 0) nc += mul;
    }
    double between = club_group_trust(pc, nc, lambda);
    return combine_trust(member, between);
}

// EigenTrust local trust: sum of scores of the interactions I rated about J.
inline int eigentrust_local(const OpinionMultiset& e, const std::string& i, const std::string& j) {
    int s = 0;
    for (const auto& [k, mul] : e.rated()) {
        const auto& [rater, target, score] = k;
        if (rater == i && target == j) s += score * static_cast<int>(mul);
    }
    return s;
}

// Normalized local trust row of one rater: max(s,0) / sum, or the fallback
// distribution (uniform over pretrusted if any, else uniform over all other
// agents) when the rater has no positive history. The row sums to 1.
inline std::map<std::string, double> eigentrust_normalize(
    const std::map<std::string, int>& s_row, const std::string& self,
    const std::vector<std::string>& all_agents, const std::set<std::string>& pretrusted) {
    std::map<std::string, double> row;
    double denom = 0.0;
    for (const auto& a : all_agents) {
        if (a == self) continue;
        auto it = s_row.find(a);
        int s = it == s_row.end() ? 0 : it->second;
        double clamped = s > 0 ? static_cast<double>(s) : 0.0;
        row[a] = clamped;
        denom += clamped;
    }
    if (denom > 0.0) {
        for (auto& [a, v] : row) v /= denom;
        return row;
    }
    std::set<std::string> pre;
    for (const auto& p : pretrusted) {
        if (p != self) pre.insert(p);
    }
    if (!pre.empty()) {
        for (auto& [a, v] : row) v = pre.count(a) ? 1.0 / static_cast<double>(pre.size()) : 0.0;
    } else if (!row.empty()) {
        for (auto& [a, v] : row) v = 1.0 / static_cast<double>(row.size());
    }
    return row;
}

// All normalized rows, as a row-stochastic matrix over the given agent order.
struct TrustMatrix {
    std::vector<std::string> agents;
    std::vector<std::vector<double>> c;  // c[i][j], row i = rater

    int index(const std::string& name) const {
        for (std::size_t i = 0; i < agents.size(); ++i) {
            if (agents[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
};

inline TrustMatrix build_trust_matrix(const std::vector<std::string>& agent_names,
                                      const OpinionMultiset& e,
                                      const std::set<std::string>& pretrusted) {
    TrustMatrix m;
    m.agents = agent_names;
    m.c.assign(agent_names.size(), std::vector<double>(agent_names.size(), 0.0));
    for (std::size_t i = 0; i < agent_names.size(); ++i) {
        std::map<std::string, int> s_row;
        for (const auto& a : agent_names) {
            if (a != agent_names[i]) s_row[a] = eigentrust_local(e, agent_names[i], a);
        }
        auto row = eigentrust_normalize(s_row, agent_names[i], agent_names, pretrusted);
        for (std::size_t j = 0; j < agent_names.size(); ++j) {
            auto it = row.find(agent_names[j]);
            m.c[i][j] = it == row.end() ? 0.0 : it->second;
        }
    }
    return m;
}

namespace detail {

struct RecursiveTrustCtx {
    const SystemSpec* spec;
    const OpinionMultiset* opinions;
    const Groups* groups;
    std::vector<std::string> agent_names;
    std::map<std::string, std::map<std::string, double>> rows;  // memoized normalized rows

    const std::map<std::string, double>& row(const std::string& rater) {
        auto it = rows.find(rater);
        if (it != rows.end()) return it->second;
        std::map<std::string, int> s_row;
        for (const auto& a : agent_names) {
            if (a != rater) s_row[a] = eigentrust_local(*opinions, rater, a);
        }
        auto r = eigentrust_normalize(s_row, rater, agent_names, spec->model.eigen.pretrusted);
        return rows.emplace(rater, std::move(r)).first->second;
    }

    double c(const std::string& rater, const std::string& target) {
        const auto& r = row(rater);
        auto it = r.find(target);
        return it == r.end() ? 0.0 : it->second;
    }

    double trust(std::set<std::string>& visited, const std::string& rater,
                 const std::string& target) {
        double v = c(rater, target);
        if (spec->model.eigen.per_group_weights) {
            for (const auto& [g, members] : *groups) {
                if (!members.count(rater)) continue;
                for (const auto& k : members) {
                    if (visited.count(k)) continue;
                    double w = c(rater, k);
                    if (w == 0.0) continue;
                    visited.insert(k);
                    v += w * trust(visited, k, target);
                    visited.erase(k);
                }
            }
            return v;
        }
        // Each recommender contributes once even when it shares several
        // groups with the rater.
        std::set<std::string> reachable;
        for (const auto& [g, members] : *groups) {
            if (!members.count(rater)) continue;
            for (const auto& k : members) {
                if (!visited.count(k)) reachable.insert(k);
            }
        }
        for (const auto& k : reachable) {
            double w = c(rater, k);
            if (w == 0.0) continue;
            visited.insert(k);
            v += w * trust(visited, k, target);
            visited.erase(k);
        }
        return v;
    }
};

}  // namespace detail

// trust^{I,J}_IJ of the recursive EigenTrust encoding over the current groups,
// clamped to [0,1]. Recommenders are drawn from the rater's communities; the
// visited set grows along every branch, so the recursion terminates.
inline double eigentrust_recursive(const SystemSpec& spec, const OpinionMultiset& e,
                                   const Groups& groups, const std::string& i,
                                   const std::string& j) {
    if (i == j) throw SpecError("trust of an agent toward itself is undefined");
    detail::RecursiveTrustCtx ctx;
    ctx.spec = &spec;
    ctx.opinions = &e;
    ctx.groups = &groups;
    for (const auto& a : spec.agents) ctx.agent_names.push_back(a.name);
    std::set<std::string> visited{i, j};
    double v = ctx.trust(visited, i, j);
    return std::clamp(v, 0.0, 1.0);
}

struct PowerIterationResult {
    std::map<std::string, double> values;
    unsigned iterations = 0;
    bool converged = false;
};

// Damped power iteration t <- (1-d) C^T t + d p from the start agent's own
// row; with d = 0 this is the plain (C^T)^n c_i aggregation.
inline PowerIterationResult eigentrust_global(const TrustMatrix& m, const std::string& start,
                                              const EigenTrustParams& params) {
    const std::size_t n = m.agents.size();
    if (n == 0) throw SpecError("empty trust matrix");
    int si = m.index(start);
    if (si < 0) throw SpecError("unknown start agent " + start);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (double v : m.c[i]) {
            if (v < 0.0 || v > 1.0) throw SpecError("trust matrix entry outside [0,1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw SpecError("trust matrix row is not stochastic");
    }

    std::vector<double> p(n, 0.0);
    std::set<std::string> pre;
    for (const auto& a : params.pretrusted) {
        if (m.index(a) >= 0) pre.insert(a);
    }
    if (!pre.empty()) {
        for (const auto& a : pre) p[static_cast<std::size_t>(m.index(a))] = 1.0 / pre.size();
    } else {
        for (auto& v : p) v = 1.0 / static_cast<double>(n);
    }

    std::vector<double> t = m.c[static_cast<std::size_t>(si)];
    PowerIterationResult res;
    std::vector<double> next(n, 0.0);
    for (res.iterations = 0; res.iterations < params.max_iter; ++res.iterations) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += m.c[k][j] * t[k];
            next[j] = (1.0 - params.damping) * acc + params.damping * p[j];
        }
        double delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) delta += std::abs(next[j] - t[j]);
        t.swap(next);
        if (delta < params.epsilon) {
            res.converged = true;
            ++res.iterations;
            break;
        }
    }
    for (std::size_t j = 0; j < n; ++j) res.values[m.agents[j]] = t[j];
    return res;
}

// Trust of I towards J under the spec's active model, from the given state.
inline double trust_value(const SystemSpec& spec, const Groups& groups, const OpinionMultiset& e,
                          const std::string& i, const std::string& j) {
    if (i == j) throw SpecError("trust of an agent toward itself is undefined");
    if (spec.model.kind == TrustModelConfig::Kind::Club) return club_trust(spec, e, groups, i, j);
    return eigentrust_recursive(spec, e, groups, i, j);
}

}  // namespace tas
