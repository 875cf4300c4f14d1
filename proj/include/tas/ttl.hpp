#pragma once

#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tas/parser.hpp"
#include "tas/semantics.hpp"
#include "tas/trust.hpp"

namespace tas {

// Transition-label pattern. "*" and "?" are wildcards in any slot. A unary
// pattern "I.x" matches the internal label I.tau (when x covers tau) and any
// synchronization governed by I whose output action x covers; a binary
// pattern "I.a*J.b" matches synchronizations component-wise.
struct LabelPattern {
    bool binary = false;
    std::string gov = "*";
    std::string act = "*";
    std::string partner = "*";
    std::string in_act = "*";

    static bool covers(const std::string& pat, const std::string& s) {
        return pat == "*" || pat == "?" || pat == s;
    }

    bool matches(const TransitionLabel& l) const {
        if (binary) {
            return l.sync && covers(gov, l.agent) && covers(act, l.out_action) &&
                   covers(partner, l.partner) && covers(in_act, l.in_action);
        }
        if (!covers(gov, l.agent)) return false;
        return l.sync ? covers(act, l.out_action) : covers(act, "tau");
    }

    std::string str() const {
        std::string s = gov + "." + act;
        if (binary) s += "*" + partner + "." + in_act;
        return s;
    }
};

// State trust predicate operand: the model's t_IJ or an aggregate over the
// rater's rated entries about the target.
struct TrustVariable {
    enum class Agg { None, Sum, Min, Max, Count };
    Agg agg = Agg::None;
    std::string rater;
    std::string target;
};

enum class Rel { Ge, Gt, Le, Lt, Eq };

inline const char* rel_str(Rel r) {
    switch (r) {
        case Rel::Ge: return ">=";
        case Rel::Gt: return ">";
        case Rel::Le: return "<=";
        case Rel::Lt: return "<";
        case Rel::Eq: return "=";
    }
    return "?";
}

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
    enum class Kind { Truth, ActionAtom, TrustAtom, Not, And, Or, EX, EF, AG, EU, AU };

    Kind kind = Kind::Truth;
    bool truth = false;            // Truth
    LabelPattern pattern;          // ActionAtom, EX
    TrustVariable var;             // TrustAtom
    Rel rel = Rel::Ge;             // TrustAtom
    double threshold = 0.0;        // TrustAtom
    FormulaPtr a;
    FormulaPtr b;

    static FormulaPtr truth_value(bool v) {
        auto f = std::make_shared<Formula>();
        f->kind = Kind::Truth;
        f->truth = v;
        return f;
    }
    static FormulaPtr action_atom(LabelPattern p) {
        auto f = std::make_shared<Formula>();
        f->kind = Kind::ActionAtom;
        f->pattern = std::move(p);
        return f;
    }
    static FormulaPtr trust_atom(TrustVariable w, Rel r, double k) {
        auto f = std::make_shared<Formula>();
        f->kind = Kind::TrustAtom;
        f->var = std::move(w);
        f->rel = r;
        f->threshold = k;
        return f;
    }
    static FormulaPtr make(Kind k, FormulaPtr x, FormulaPtr y = nullptr) {
        auto f = std::make_shared<Formula>();
        f->kind = k;
        f->a = std::move(x);
        f->b = std::move(y);
        return f;
    }
    static FormulaPtr ex(LabelPattern p, FormulaPtr x) {
        auto f = std::make_shared<Formula>();
        f->kind = Kind::EX;
        f->pattern = std::move(p);
        f->a = std::move(x);
        return f;
    }
};

namespace detail {

class FormulaParser {
public:
    explicit FormulaParser(Lexer& lx) : lx_(lx) {}

    FormulaPtr parse_or() {
        FormulaPtr f = parse_and();
        while (peek_ident("or")) {
            lx_.next();
            f = Formula::make(Formula::Kind::Or, f, parse_and());
        }
        return f;
    }

private:
    FormulaPtr parse_and() {
        FormulaPtr f = parse_not();
        while (peek_ident("and")) {
            lx_.next();
            f = Formula::make(Formula::Kind::And, f, parse_not());
        }
        return f;
    }

    FormulaPtr parse_not() {
        if (peek_ident("not")) {
            lx_.next();
            return Formula::make(Formula::Kind::Not, parse_not());
        }
        return parse_primary();
    }

    FormulaPtr parse_primary() {
        const Token& t = lx_.peek();
        if (t.kind == Token::Kind::Symbol && t.text == "(") {
            lx_.next();
            FormulaPtr f = parse_or();
            expect_symbol(")");
            return f;
        }
        if (t.kind == Token::Kind::Symbol && t.text == "<") {
            return Formula::action_atom(parse_bracketed_pattern());
        }
        if (t.kind != Token::Kind::Ident) lx_.fail("expected formula");

        if (t.text == "true" || t.text == "false") {
            bool v = lx_.next().text == "true";
            return Formula::truth_value(v);
        }
        if (t.text == "EX") {
            lx_.next();
            LabelPattern p;  // all-wildcard when no bracket is given
            if (lx_.peek().kind == Token::Kind::Symbol && lx_.peek().text == "<") {
                p = parse_bracketed_pattern();
            }
            expect_symbol("(");
            FormulaPtr f = parse_or();
            expect_symbol(")");
            return Formula::ex(p, f);
        }
        if (t.text == "EF" || t.text == "AG") {
            Formula::Kind k = t.text == "EF" ? Formula::Kind::EF : Formula::Kind::AG;
            lx_.next();
            expect_symbol("(");
            FormulaPtr f = parse_or();
            expect_symbol(")");
            return Formula::make(k, f);
        }
        if (t.text == "EU" || t.text == "AU") {
            Formula::Kind k = t.text == "EU" ? Formula::Kind::EU : Formula::Kind::AU;
            lx_.next();
            expect_symbol("(");
            FormulaPtr x = parse_or();
            expect_symbol(",");
            FormulaPtr y = parse_or();
            expect_symbol(")");
            return Formula::make(k, x, y);
        }
        if (t.text == "t" || t.text == "tf") return parse_trust_atom();
        lx_.fail("unexpected '" + t.text + "' in formula");
    }

    FormulaPtr parse_trust_atom() {
        TrustVariable w;
        std::string head = lx_.next().text;
        expect_symbol("[");
        if (head == "tf") {
            std::string fn = expect_ident();
            if (fn == "sum") {
                w.agg = TrustVariable::Agg::Sum;
            } else if (fn == "min") {
                w.agg = TrustVariable::Agg::Min;
            } else if (fn == "max") {
                w.agg = TrustVariable::Agg::Max;
            } else if (fn == "count") {
                w.agg = TrustVariable::Agg::Count;
            } else {
                lx_.fail("unknown aggregate '" + fn + "'");
            }
            expect_symbol(",");
        }
        w.rater = expect_ident();
        expect_symbol(",");
        w.target = expect_ident();
        expect_symbol("]");

        Rel rel;
        const Token& rt = lx_.peek();
        if (rt.kind != Token::Kind::Symbol) lx_.fail("expected comparison");
        if (rt.text == ">=") {
            rel = Rel::Ge;
        } else if (rt.text == ">") {
            rel = Rel::Gt;
        } else if (rt.text == "<=") {
            rel = Rel::Le;
        } else if (rt.text == "<") {
            rel = Rel::Lt;
        } else if (rt.text == "=") {
            rel = Rel::Eq;
        } else {
            lx_.fail("expected comparison");
        }
        lx_.next();
        if (lx_.peek().kind != Token::Kind::Int && lx_.peek().kind != Token::Kind::Real) {
            lx_.fail("expected numeric bound");
        }
        double k = lx_.next().rval;
        return Formula::trust_atom(std::move(w), rel, k);
    }

    LabelPattern parse_bracketed_pattern() {
        expect_symbol("<");
        LabelPattern p;
        p.gov = parse_slot();
        expect_symbol(".");
        p.act = parse_slot();
        if (lx_.peek().kind == Token::Kind::Symbol && lx_.peek().text == "*") {
            lx_.next();
            p.binary = true;
            p.partner = parse_slot();
            expect_symbol(".");
            p.in_act = parse_slot();
        }
        expect_symbol(">");
        return p;
    }

    std::string parse_slot() {
        const Token& t = lx_.peek();
        if (t.kind == Token::Kind::Ident) return lx_.next().text;
        if (t.kind == Token::Kind::Symbol && (t.text == "*" || t.text == "?")) {
            return lx_.next().text;
        }
        lx_.fail("expected identifier or wildcard in label pattern");
    }

    bool peek_ident(const char* s) const {
        return lx_.peek().kind == Token::Kind::Ident && lx_.peek().text == s;
    }
    void expect_symbol(const std::string& s) {
        if (lx_.peek().kind != Token::Kind::Symbol || lx_.peek().text != s) {
            lx_.fail("expected '" + s + "'");
        }
        lx_.next();
    }
    std::string expect_ident() {
        if (lx_.peek().kind != Token::Kind::Ident) lx_.fail("expected identifier");
        return lx_.next().text;
    }

    Lexer& lx_;
};

}  // namespace detail

inline FormulaPtr parse_formula(const std::string& text) {
    detail::Lexer lx(text);
    detail::FormulaParser p(lx);
    FormulaPtr f = p.parse_or();
    if (lx.peek().kind != detail::Token::Kind::End) lx.fail("trailing input after formula");
    return f;
}

// Value of a trust variable in a state; empty for min/max over no entries.
inline std::optional<double> eval_trust_variable(const TrustVariable& w, const SystemSpec& spec,
                                                 const Configuration& c) {
    if (w.agg == TrustVariable::Agg::None) {
        return trust_value(spec, c.groups, c.opinions, w.rater, w.target);
    }
    long sum = 0;
    unsigned long count = 0;
    std::optional<int> mn;
    std::optional<int> mx;
    for (const auto& [k, mul] : c.opinions.rated()) {
        const auto& [rater, target, score] = k;
        if (rater != w.rater || target != w.target || mul == 0) continue;
        sum += static_cast<long>(score) * static_cast<long>(mul);
        count += mul;
        mn = mn ? std::min(*mn, score) : score;
        mx = mx ? std::max(*mx, score) : score;
    }
    switch (w.agg) {
        case TrustVariable::Agg::Sum: return static_cast<double>(sum);
        case TrustVariable::Agg::Count: return static_cast<double>(count);
        case TrustVariable::Agg::Min:
            if (!mn) return std::nullopt;
            return static_cast<double>(*mn);
        case TrustVariable::Agg::Max:
            if (!mx) return std::nullopt;
            return static_cast<double>(*mx);
        default: return std::nullopt;
    }
}

struct CheckResult {
    enum class Verdict { True, False, Indeterminate };

    Verdict verdict = Verdict::False;
    bool bounded = false;             // the TLTS carries truncated states
    bool within_bounds_true = false;  // classical verdict on the explored graph
    std::vector<std::uint32_t> satisfying;  // definitely-satisfying states
    bool has_witness = false;
    std::vector<std::uint32_t> witness;  // transition indices

    const char* verdict_str() const {
        switch (verdict) {
            case Verdict::True: return "true";
            case Verdict::False: return "false";
            case Verdict::Indeterminate:
                return within_bounds_true ? "true-within-bounds" : "indeterminate";
        }
        return "?";
    }
};

namespace detail {

struct SatSets {
    std::vector<bool> lo;  // definitely satisfied
    std::vector<bool> hi;  // possibly satisfied
};

// Three-valued fixpoint evaluation. At truncated states the missing suffix is
// treated pessimistically in `lo` and optimistically in `hi`; with no
// truncation lo == hi == the classical CTL semantics over maximal paths.
class Evaluator {
public:
    Evaluator(const Tlts& t, const SystemSpec& spec, bool respect_truncation)
        : t_(t), spec_(spec), respect_(respect_truncation) {}

    SatSets eval(const Formula& f) {
        const std::size_t n = t_.states.size();
        SatSets out{std::vector<bool>(n, false), std::vector<bool>(n, false)};
        switch (f.kind) {
            case Formula::Kind::Truth:
                out.lo.assign(n, f.truth);
                out.hi.assign(n, f.truth);
                return out;
            case Formula::Kind::TrustAtom: {
                for (std::size_t q = 0; q < n; ++q) {
                    bool v = trust_atom_holds(f, t_.states[q]);
                    out.lo[q] = v;
                    out.hi[q] = v;
                }
                return out;
            }
            case Formula::Kind::ActionAtom: {
                for (std::size_t q = 0; q < n; ++q) {
                    bool any = false;
                    for (std::uint32_t e : t_.out_edges[q]) {
                        if (f.pattern.matches(t_.transitions[e].label)) {
                            any = true;
                            break;
                        }
                    }
                    out.lo[q] = any;
                    out.hi[q] = any || truncated(q);
                }
                return out;
            }
            case Formula::Kind::Not: {
                SatSets a = eval(*f.a);
                for (std::size_t q = 0; q < n; ++q) {
                    out.lo[q] = !a.hi[q];
                    out.hi[q] = !a.lo[q];
                }
                return out;
            }
            case Formula::Kind::And: {
                SatSets a = eval(*f.a);
                SatSets b = eval(*f.b);
                for (std::size_t q = 0; q < n; ++q) {
                    out.lo[q] = a.lo[q] && b.lo[q];
                    out.hi[q] = a.hi[q] && b.hi[q];
                }
                return out;
            }
            case Formula::Kind::Or: {
                SatSets a = eval(*f.a);
                SatSets b = eval(*f.b);
                for (std::size_t q = 0; q < n; ++q) {
                    out.lo[q] = a.lo[q] || b.lo[q];
                    out.hi[q] = a.hi[q] || b.hi[q];
                }
                return out;
            }
            case Formula::Kind::EX: {
                SatSets a = eval(*f.a);
                for (std::size_t q = 0; q < n; ++q) {
                    bool lo = false;
                    bool hi = truncated(q);
                    for (std::uint32_t e : t_.out_edges[q]) {
                        const Transition& tr = t_.transitions[e];
                        if (!f.pattern.matches(tr.label)) continue;
                        lo = lo || a.lo[tr.dst];
                        hi = hi || a.hi[tr.dst];
                    }
                    out.lo[q] = lo;
                    out.hi[q] = hi;
                }
                return out;
            }
            case Formula::Kind::EF: {
                SatSets a = eval(*f.a);
                SatSets tr{std::vector<bool>(n, true), std::vector<bool>(n, true)};
                return exists_until(tr, a);
            }
            case Formula::Kind::EU: return exists_until(eval(*f.a), eval(*f.b));
            case Formula::Kind::AG: {
                SatSets a = eval(*f.a);
                out.lo = greatest_invariant(a.lo, true);
                out.hi = greatest_invariant(a.hi, false);
                return out;
            }
            case Formula::Kind::AU: return all_until(eval(*f.a), eval(*f.b));
        }
        return out;
    }

private:
    bool truncated(std::size_t q) const {
        return respect_ && t_.truncated.count(static_cast<std::uint32_t>(q)) != 0;
    }

    bool trust_atom_holds(const Formula& f, const Configuration& c) const {
        auto v = eval_trust_variable(f.var, spec_, c);
        if (!v) return false;  // undefined propagates to false
        switch (f.rel) {
            case Rel::Ge: return *v >= f.threshold;
            case Rel::Gt: return *v > f.threshold;
            case Rel::Le: return *v <= f.threshold;
            case Rel::Lt: return *v < f.threshold;
            case Rel::Eq: return *v == f.threshold;
        }
        return false;
    }

    // Least fixpoint of Z = psi | (phi & EX Z), with the truncation bonus on
    // the hi side (an unexplored suffix could satisfy the until).
    SatSets exists_until(const SatSets& phi, const SatSets& psi) {
        const std::size_t n = t_.states.size();
        SatSets z;
        z.lo = psi.lo;
        z.hi = psi.hi;
        for (std::size_t q = 0; q < n; ++q) {
            if (!z.hi[q] && phi.hi[q] && truncated(q)) z.hi[q] = true;
        }
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t q = 0; q < n; ++q) {
                bool succ_lo = false;
                bool succ_hi = false;
                for (std::uint32_t e : t_.out_edges[q]) {
                    succ_lo = succ_lo || z.lo[t_.transitions[e].dst];
                    succ_hi = succ_hi || z.hi[t_.transitions[e].dst];
                }
                if (!z.lo[q] && phi.lo[q] && succ_lo) {
                    z.lo[q] = true;
                    changed = true;
                }
                if (!z.hi[q] && phi.hi[q] && succ_hi) {
                    z.hi[q] = true;
                    changed = true;
                }
            }
        }
        return z;
    }

    // Greatest fixpoint of Z = phi & AX Z; AX is vacuously true at real
    // deadlocks. With `pessimistic`, truncated states drop out (their missing
    // successors might violate the invariant).
    std::vector<bool> greatest_invariant(const std::vector<bool>& phi, bool pessimistic) {
        const std::size_t n = t_.states.size();
        std::vector<bool> z = phi;
        if (pessimistic) {
            for (std::size_t q = 0; q < n; ++q) {
                if (truncated(q)) z[q] = false;
            }
        }
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t q = 0; q < n; ++q) {
                if (!z[q]) continue;
                for (std::uint32_t e : t_.out_edges[q]) {
                    if (!z[t_.transitions[e].dst]) {
                        z[q] = false;
                        changed = true;
                        break;
                    }
                }
            }
        }
        return z;
    }

    // Least fixpoint of Z = psi | (phi & AX Z & has-successor); on maximal
    // finite paths the until must still reach psi, so deadlocks require psi.
    SatSets all_until(const SatSets& phi, const SatSets& psi) {
        const std::size_t n = t_.states.size();
        SatSets z;
        z.lo = psi.lo;
        z.hi = psi.hi;
        for (std::size_t q = 0; q < n; ++q) {
            if (!z.hi[q] && phi.hi[q] && truncated(q)) z.hi[q] = true;
        }
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t q = 0; q < n; ++q) {
                bool all_lo = !t_.out_edges[q].empty();
                bool all_hi = all_lo;
                for (std::uint32_t e : t_.out_edges[q]) {
                    all_lo = all_lo && z.lo[t_.transitions[e].dst];
                    all_hi = all_hi && z.hi[t_.transitions[e].dst];
                }
                if (!z.lo[q] && phi.lo[q] && all_lo && !truncated(q)) {
                    z.lo[q] = true;
                    changed = true;
                }
                if (!z.hi[q] && phi.hi[q] && all_hi) {
                    z.hi[q] = true;
                    changed = true;
                }
            }
        }
        return z;
    }

    const Tlts& t_;
    const SystemSpec& spec_;
    bool respect_;
};

inline void collect_agent_refs(const Formula& f, std::vector<const Formula*>& trust_atoms,
                               std::vector<const LabelPattern*>& patterns) {
    switch (f.kind) {
        case Formula::Kind::TrustAtom: trust_atoms.push_back(&f); return;
        case Formula::Kind::ActionAtom: patterns.push_back(&f.pattern); return;
        case Formula::Kind::EX: patterns.push_back(&f.pattern); break;
        default: break;
    }
    if (f.a) collect_agent_refs(*f.a, trust_atoms, patterns);
    if (f.b) collect_agent_refs(*f.b, trust_atoms, patterns);
}

// Shortest path from the initial state through `via` states to a `goal`
// state, as transition indices. Empty optional when unreachable.
inline std::optional<std::vector<std::uint32_t>> shortest_path(const Tlts& t,
                                                               const std::vector<bool>& via,
                                                               const std::vector<bool>& goal) {
    if (goal[t.initial]) return std::vector<std::uint32_t>{};
    if (!via[t.initial]) return std::nullopt;
    std::vector<std::int64_t> parent_edge(t.states.size(), -1);
    std::vector<bool> seen(t.states.size(), false);
    std::deque<std::uint32_t> queue{t.initial};
    seen[t.initial] = true;
    while (!queue.empty()) {
        std::uint32_t q = queue.front();
        queue.pop_front();
        for (std::uint32_t e : t.out_edges[q]) {
            std::uint32_t d = t.transitions[e].dst;
            if (seen[d]) continue;
            seen[d] = true;
            parent_edge[d] = e;
            if (goal[d]) {
                std::vector<std::uint32_t> path;
                std::uint32_t at = d;
                while (parent_edge[at] >= 0) {
                    std::uint32_t pe = static_cast<std::uint32_t>(parent_edge[at]);
                    path.push_back(pe);
                    at = t.transitions[pe].src;
                }
                std::reverse(path.begin(), path.end());
                return path;
            }
            if (via[d]) queue.push_back(d);
        }
    }
    return std::nullopt;
}

}  // namespace detail

// Evaluates a formula over the TLTS by explicit fixpoint computation. The
// verdict refers to the initial state; the satisfying set contains states
// where the formula definitely holds. For a true top-level EF/EU a shortest
// witness path is attached; for a refuted top-level AG, a counterexample path
// to a violating state.
inline CheckResult check(const Tlts& t, const FormulaPtr& phi, const SystemSpec& spec) {
    std::vector<const Formula*> trust_atoms;
    std::vector<const LabelPattern*> patterns;
    detail::collect_agent_refs(*phi, trust_atoms, patterns);
    for (const Formula* f : trust_atoms) {
        if (spec.agent_index(f->var.rater) < 0) {
            throw SpecError("unknown agent " + f->var.rater + " in formula");
        }
        if (spec.agent_index(f->var.target) < 0) {
            throw SpecError("unknown agent " + f->var.target + " in formula");
        }
        if (f->var.rater == f->var.target) {
            throw SpecError("trust variable with identical agents " + f->var.rater);
        }
    }
    auto check_slot = [&](const std::string& s) {
        if (s != "*" && s != "?" && spec.agent_index(s) < 0) {
            throw SpecError("unknown agent " + s + " in label pattern");
        }
    };
    for (const LabelPattern* p : patterns) {
        check_slot(p->gov);
        if (p->binary) check_slot(p->partner);
    }

    detail::Evaluator ev(t, spec, true);
    detail::SatSets sets = ev.eval(*phi);

    CheckResult res;
    res.bounded = !t.truncated.empty();
    for (std::size_t q = 0; q < t.states.size(); ++q) {
        if (sets.lo[q]) res.satisfying.push_back(static_cast<std::uint32_t>(q));
    }
    if (sets.lo[t.initial]) {
        res.verdict = CheckResult::Verdict::True;
    } else if (!sets.hi[t.initial]) {
        res.verdict = CheckResult::Verdict::False;
    } else {
        res.verdict = CheckResult::Verdict::Indeterminate;
    }

    if (res.bounded && res.verdict == CheckResult::Verdict::Indeterminate) {
        detail::Evaluator classical(t, spec, false);
        res.within_bounds_true = classical.eval(*phi).lo[t.initial];
    } else {
        res.within_bounds_true = res.verdict == CheckResult::Verdict::True;
    }

    // Witness extraction for the common top-level shapes.
    if (res.verdict == CheckResult::Verdict::True &&
        (phi->kind == Formula::Kind::EF || phi->kind == Formula::Kind::EU)) {
        detail::SatSets via = phi->kind == Formula::Kind::EF
                                  ? detail::SatSets{std::vector<bool>(t.states.size(), true),
                                                    std::vector<bool>(t.states.size(), true)}
                                  : ev.eval(*phi->a);
        detail::SatSets goal = phi->kind == Formula::Kind::EF ? ev.eval(*phi->a) : ev.eval(*phi->b);
        if (auto path = detail::shortest_path(t, via.lo, goal.lo)) {
            res.has_witness = true;
            res.witness = std::move(*path);
        }
    } else if (res.verdict == CheckResult::Verdict::False && phi->kind == Formula::Kind::AG) {
        detail::SatSets inner = ev.eval(*phi->a);
        std::vector<bool> violating(t.states.size(), false);
        for (std::size_t q = 0; q < t.states.size(); ++q) violating[q] = !inner.hi[q];
        std::vector<bool> everywhere(t.states.size(), true);
        if (auto path = detail::shortest_path(t, everywhere, violating)) {
            res.has_witness = true;
            res.witness = std::move(*path);
        }
    } else if (res.verdict == CheckResult::Verdict::True && phi->kind == Formula::Kind::EX) {
        detail::SatSets inner = ev.eval(*phi->a);
        for (std::uint32_t e : t.out_edges[t.initial]) {
            const Transition& tr = t.transitions[e];
            if (phi->pattern.matches(tr.label) && inner.lo[tr.dst]) {
                res.has_witness = true;
                res.witness = {e};
                break;
            }
        }
    }
    return res;
}

}  // namespace tas
