#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tas/common.hpp"

namespace tas {

enum class ActionKind { Output, Input, Internal };

// One action of the sequential calculus. Plain covers visible names and tau;
// ent/esc/obs/fake_obs are the special internal actions of the composed system.
struct Action {
    enum class Type { Plain, Ent, Esc, Obs, FakeObs };

    Type type = Type::Plain;
    std::string name;  // Plain: action name ("tau" included); Ent/Esc: group id; FakeObs: target agent
    int score = 0;     // Obs, FakeObs
    ActionKind kind = ActionKind::Internal;  // meaningful for Plain only

    static Action tau() { return Action{Type::Plain, "tau", 0, ActionKind::Internal}; }
    static Action plain(std::string n, ActionKind k) {
        return Action{Type::Plain, std::move(n), 0, k};
    }
    static Action ent(std::string group) {
        return Action{Type::Ent, std::move(group), 0, ActionKind::Internal};
    }
    static Action esc(std::string group) {
        return Action{Type::Esc, std::move(group), 0, ActionKind::Internal};
    }
    static Action obs(int v) { return Action{Type::Obs, "", v, ActionKind::Internal}; }
    static Action fake_obs(std::string target, int v) {
        return Action{Type::FakeObs, std::move(target), v, ActionKind::Internal};
    }

    bool is_tau() const { return type == Type::Plain && kind == ActionKind::Internal; }
    // True for every action that relabels to tau in the composed system.
    bool is_internal() const { return type != Type::Plain || kind == ActionKind::Internal; }

    int compare(const Action& o) const {
        if (type != o.type) return type < o.type ? -1 : 1;
        if (int c = name.compare(o.name)) return c < 0 ? -1 : 1;
        if (score != o.score) return score < o.score ? -1 : 1;
        if (kind != o.kind) return kind < o.kind ? -1 : 1;
        return 0;
    }
    bool operator==(const Action& o) const { return compare(o) == 0; }
    bool operator<(const Action& o) const { return compare(o) < 0; }

    std::size_t hash() const {
        std::size_t h = static_cast<std::size_t>(type);
        hash_combine(h, hash_string(name));
        hash_combine(h, static_cast<std::size_t>(static_cast<unsigned>(score)));
        hash_combine(h, static_cast<std::size_t>(kind));
        return h;
    }

    std::string str() const {
        switch (type) {
            case Type::Plain: return name;
            case Type::Ent: return "ent(" + name + ")";
            case Type::Esc: return "esc(" + name + ")";
            case Type::Obs: return "obs(" + std::to_string(score) + ")";
            case Type::FakeObs: return "fake_obs(" + name + "," + std::to_string(score) + ")";
        }
        return {};
    }
};

class TermArena;
class TermNode;
using Term = const TermNode*;

// Immutable AST node; nodes are interned per arena, so structural equality
// coincides with pointer equality for terms built in the same arena.
class TermNode {
public:
    enum class Kind { Nil, Prefix, Choice, Const };

    Kind kind() const { return kind_; }
    const Action& action() const { return action_; }  // Prefix
    Term continuation() const { return left_; }       // Prefix
    Term lhs() const { return left_; }                // Choice
    Term rhs() const { return right_; }               // Choice
    const std::string& constant() const { return name_; }  // Const
    std::size_t hash() const { return hash_; }

    // Structural order, independent of construction order.
    int compare(const TermNode& o) const {
        if (this == &o) return 0;
        if (kind_ != o.kind_) return kind_ < o.kind_ ? -1 : 1;
        switch (kind_) {
            case Kind::Nil: return 0;
            case Kind::Prefix:
                if (int c = action_.compare(o.action_)) return c;
                return left_->compare(*o.left_);
            case Kind::Choice:
                if (int c = left_->compare(*o.left_)) return c;
                return right_->compare(*o.right_);
            case Kind::Const: {
                int c = name_.compare(o.name_);
                return c < 0 ? -1 : (c > 0 ? 1 : 0);
            }
        }
        return 0;
    }

private:
    friend class TermArena;
    TermNode() = default;

    Kind kind_ = Kind::Nil;
    Action action_;
    Term left_ = nullptr;
    Term right_ = nullptr;
    std::string name_;
    std::size_t hash_ = 0;
};

// Owns and interns term nodes. Construction is not thread-safe; finished terms
// are immutable and may be read concurrently.
class TermArena {
public:
    Term nil() {
        if (!nil_) {
            TermNode n;
            n.kind_ = TermNode::Kind::Nil;
            n.hash_ = 0x6e696cULL;
            nil_ = store(std::move(n));
        }
        return nil_;
    }

    Term prefix(Action a, Term cont) {
        auto key = std::make_pair(a, cont);
        auto it = prefixes_.find(key);
        if (it != prefixes_.end()) return it->second;
        TermNode n;
        n.kind_ = TermNode::Kind::Prefix;
        n.action_ = a;
        n.left_ = cont;
        n.hash_ = 0x707265ULL;
        hash_combine(n.hash_, a.hash());
        hash_combine(n.hash_, cont->hash());
        Term t = store(std::move(n));
        prefixes_.emplace(std::move(key), t);
        return t;
    }

    Term choice(Term l, Term r) {
        auto key = std::make_pair(l, r);
        auto it = choices_.find(key);
        if (it != choices_.end()) return it->second;
        TermNode n;
        n.kind_ = TermNode::Kind::Choice;
        n.left_ = l;
        n.right_ = r;
        n.hash_ = 0x63686fULL;
        hash_combine(n.hash_, l->hash());
        hash_combine(n.hash_, r->hash());
        Term t = store(std::move(n));
        choices_.emplace(key, t);
        return t;
    }

    Term constant(const std::string& name) {
        auto it = constants_.find(name);
        if (it != constants_.end()) return it->second;
        TermNode n;
        n.kind_ = TermNode::Kind::Const;
        n.name_ = name;
        n.hash_ = 0x636f6eULL;
        hash_combine(n.hash_, hash_string(name));
        Term t = store(std::move(n));
        constants_.emplace(name, t);
        return t;
    }

private:
    Term store(TermNode&& n) {
        nodes_.push_back(std::move(n));
        return &nodes_.back();
    }

    std::deque<TermNode> nodes_;
    Term nil_ = nullptr;
    std::map<std::pair<Action, Term>, Term> prefixes_;
    std::map<std::pair<Term, Term>, Term> choices_;
    std::map<std::string, Term> constants_;
};

// Constant bindings plus the arena that keeps their nodes alive.
struct Definitions {
    std::shared_ptr<TermArena> arena = std::make_shared<TermArena>();
    std::map<std::string, Term> bindings;

    Term body(const std::string& name) const {
        auto it = bindings.find(name);
        return it == bindings.end() ? nullptr : it->second;
    }
};

inline std::string pretty_print(Term t) {
    switch (t->kind()) {
        case TermNode::Kind::Nil: return "0";
        case TermNode::Kind::Prefix: {
            Term cont = t->continuation();
            std::string rest = pretty_print(cont);
            if (cont->kind() == TermNode::Kind::Choice) rest = "(" + rest + ")";
            return t->action().str() + " . " + rest;
        }
        case TermNode::Kind::Choice: {
            std::string l = pretty_print(t->lhs());
            std::string r = pretty_print(t->rhs());
            // + is left-associative in the grammar; right-nested choices need parens.
            if (t->rhs()->kind() == TermNode::Kind::Choice) r = "(" + r + ")";
            return l + " + " + r;
        }
        case TermNode::Kind::Const: return t->constant();
    }
    return {};
}

namespace detail {

inline void scan_guardedness(const std::string& owner, Term t, bool guarded,
                             const std::string& path, const Definitions& defs,
                             std::vector<std::string>& out) {
    switch (t->kind()) {
        case TermNode::Kind::Nil: return;
        case TermNode::Kind::Prefix:
            scan_guardedness(owner, t->continuation(), true, path + "/prefix", defs, out);
            return;
        case TermNode::Kind::Choice:
            scan_guardedness(owner, t->lhs(), guarded, path + "/+.left", defs, out);
            scan_guardedness(owner, t->rhs(), guarded, path + "/+.right", defs, out);
            return;
        case TermNode::Kind::Const:
            if (!defs.bindings.count(t->constant())) {
                out.push_back("constant " + owner + ": reference to unbound " + t->constant() +
                              " (path " + path + ")");
            }
            if (!guarded) {
                out.push_back("constant " + owner + ": unguarded reference to " + t->constant() +
                              " (path " + path + ")");
            }
            return;
    }
}

inline void collect_local_steps(Term t, const Definitions& defs,
                                std::set<std::string>& expanding,
                                std::vector<std::pair<Action, Term>>& out) {
    switch (t->kind()) {
        case TermNode::Kind::Nil: return;
        case TermNode::Kind::Prefix:
            out.emplace_back(t->action(), t->continuation());
            return;
        case TermNode::Kind::Choice:
            collect_local_steps(t->lhs(), defs, expanding, out);
            collect_local_steps(t->rhs(), defs, expanding, out);
            return;
        case TermNode::Kind::Const: {
            Term body = defs.body(t->constant());
            if (!body) throw SpecError("unbound constant " + t->constant());
            // Guarded terms never revisit a constant during one expansion; the
            // set makes the walk total on ill-formed input as well.
            if (!expanding.insert(t->constant()).second) return;
            collect_local_steps(body, defs, expanding, out);
            expanding.erase(t->constant());
            return;
        }
    }
}

}  // namespace detail

// Diagnostics for unguarded or unbound constants; empty means well-formed.
inline std::vector<std::string> validate_definitions(const Definitions& defs) {
    std::vector<std::string> out;
    for (const auto& [name, body] : defs.bindings) {
        detail::scan_guardedness(name, body, false, name, defs, out);
    }
    return out;
}

// All transitions of a sequential term under the prefix/choice/recursion rules,
// in canonical order (action, then successor term).
inline std::vector<std::pair<Action, Term>> local_steps(Term t, const Definitions& defs) {
    std::vector<std::pair<Action, Term>> out;
    std::set<std::string> expanding;
    detail::collect_local_steps(t, defs, expanding, out);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (int c = a.first.compare(b.first)) return c < 0;
        return a.second->compare(*b.second) < 0;
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const auto& a, const auto& b) {
                              return a.first == b.first && a.second == b.second;
                          }),
              out.end());
    return out;
}

}  // namespace tas
