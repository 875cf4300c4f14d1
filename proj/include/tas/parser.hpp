#pragma once

#include <cctype>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tas/system.hpp"

namespace tas {
namespace detail {

struct Token {
    enum class Kind { Ident, Int, Real, Symbol, End };
    Kind kind = Kind::End;
    std::string text;
    long ival = 0;
    double rval = 0.0;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, tok_.line, tok_.col);
    }

private:
    void advance() {
        skip_space();
        tok_ = Token{};
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= src_.size()) return;

        char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            tok_.kind = Token::Kind::Ident;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                tok_.text.push_back(take());
            }
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            lex_number();
            return;
        }
        if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
            tok_.kind = Token::Kind::Symbol;
            tok_.text = "->";
            take();
            take();
            return;
        }
        if (c == ':' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
            tok_.kind = Token::Kind::Symbol;
            tok_.text = ":=";
            take();
            take();
            return;
        }
        if ((c == '<' || c == '>') && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
            tok_.kind = Token::Kind::Symbol;
            tok_.text = std::string(1, c) + "=";
            take();
            take();
            return;
        }
        static const std::string singles = ".+(){},;:@=[]<>*?";
        if (singles.find(c) != std::string::npos) {
            tok_.kind = Token::Kind::Symbol;
            tok_.text = std::string(1, take());
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
    }

    void lex_number() {
        std::string digits;
        if (src_[pos_] == '-') digits.push_back(take());
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            digits.push_back(take());
        }
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
            digits.push_back(take());
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                digits.push_back(take());
            }
            tok_.kind = Token::Kind::Real;
            tok_.rval = std::stod(digits);
        } else {
            tok_.kind = Token::Kind::Int;
            tok_.ival = std::stol(digits);
            tok_.rval = static_cast<double>(tok_.ival);
        }
        tok_.text = digits;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') take();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                take();
            } else {
                break;
            }
        }
    }

    char take() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token tok_;
};

inline bool is_reserved_action_word(const std::string& s) {
    return s == "tau" || s == "ent" || s == "esc" || s == "obs" || s == "fake_obs";
}

// Recursive-descent parser for process terms; `+` binds looser than `.`.
class TermParser {
public:
    TermParser(Lexer& lx, const std::map<std::string, ActionKind>& actions, TermArena& arena)
        : lx_(lx), actions_(actions), arena_(arena) {}

    Term parse_choice() {
        Term t = parse_primary();
        while (lx_.peek().kind == Token::Kind::Symbol && lx_.peek().text == "+") {
            lx_.next();
            t = arena_.choice(t, parse_primary());
        }
        return t;
    }

private:
    Term parse_primary() {
        const Token& tok = lx_.peek();
        if (tok.kind == Token::Kind::Int && tok.ival == 0) {
            lx_.next();
            return arena_.nil();
        }
        if (tok.kind == Token::Kind::Symbol && tok.text == "(") {
            lx_.next();
            Term t = parse_choice();
            expect_symbol(")");
            return t;
        }
        if (tok.kind != Token::Kind::Ident) lx_.fail("expected process term");

        Token name_tok = lx_.next();
        const std::string& name = name_tok.text;
        if (is_reserved_action_word(name)) {
            Action a = parse_special_action(name);
            expect_symbol(".");
            return arena_.prefix(a, parse_primary());
        }
        if (lx_.peek().kind == Token::Kind::Symbol && lx_.peek().text == ".") {
            auto it = actions_.find(name);
            if (it == actions_.end()) {
                throw ParseError("reference to undeclared action name " + name, name_tok.line,
                                 name_tok.col);
            }
            lx_.next();
            return arena_.prefix(Action::plain(name, it->second), parse_primary());
        }
        return arena_.constant(name);
    }

    Action parse_special_action(const std::string& word) {
        if (word == "tau") return Action::tau();
        expect_symbol("(");
        if (word == "obs") {
            int v = expect_int();
            expect_symbol(")");
            return Action::obs(v);
        }
        std::string ident = expect_ident();
        if (word == "ent" || word == "esc") {
            expect_symbol(")");
            return word == "ent" ? Action::ent(ident) : Action::esc(ident);
        }
        // fake_obs(target, score)
        expect_symbol(",");
        int v = expect_int();
        expect_symbol(")");
        return Action::fake_obs(ident, v);
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

    int expect_int() {
        if (lx_.peek().kind != Token::Kind::Int) lx_.fail("expected integer");
        return static_cast<int>(lx_.next().ival);
    }

    Lexer& lx_;
    const std::map<std::string, ActionKind>& actions_;
    TermArena& arena_;
};

}  // namespace detail

// Parses a single process term against a table of declared actions. Terms are
// interned in the definitions' arena.
inline Term parse_term(const std::string& text,
                       const std::map<std::string, ActionKind>& declared_actions,
                       Definitions& defs) {
    detail::Lexer lx(text);
    detail::TermParser p(lx, declared_actions, *defs.arena);
    Term t = p.parse_choice();
    if (lx.peek().kind != detail::Token::Kind::End) lx.fail("trailing input after term");
    return t;
}

// Parses a complete .tas system description. Actions must be declared before
// the process definitions that use them; other blocks may come in any order.
inline SystemSpec parse_system(const std::string& text) {
    using detail::Token;
    detail::Lexer lx(text);
    SystemSpec spec;
    bool have_model = false;

    auto expect_symbol = [&](const std::string& s) {
        if (lx.peek().kind != Token::Kind::Symbol || lx.peek().text != s) {
            lx.fail("expected '" + s + "'");
        }
        lx.next();
    };
    auto expect_ident = [&]() {
        if (lx.peek().kind != Token::Kind::Ident) lx.fail("expected identifier");
        return lx.next().text;
    };
    auto expect_real = [&]() {
        if (lx.peek().kind != Token::Kind::Real && lx.peek().kind != Token::Kind::Int) {
            lx.fail("expected number");
        }
        return lx.next().rval;
    };
    auto expect_int = [&]() {
        if (lx.peek().kind != Token::Kind::Int) lx.fail("expected integer");
        return static_cast<int>(lx.next().ival);
    };

    while (lx.peek().kind != Token::Kind::End) {
        if (lx.peek().kind != Token::Kind::Ident) lx.fail("expected block keyword");
        Token kw = lx.next();
        const std::string& block = kw.text;

        if (block == "actions") {
            expect_symbol("{");
            while (!(lx.peek().kind == Token::Kind::Symbol && lx.peek().text == "}")) {
                std::string dir = expect_ident();
                if (dir != "out" && dir != "in") lx.fail("expected 'out' or 'in'");
                Token name_tok = lx.peek();
                std::string name = expect_ident();
                if (detail::is_reserved_action_word(name)) {
                    throw ParseError("action name " + name + " is reserved", name_tok.line,
                                     name_tok.col);
                }
                if (spec.action_kinds.count(name)) {
                    throw ParseError("action " + name + " declared twice", name_tok.line,
                                     name_tok.col);
                }
                spec.action_kinds[name] =
                    dir == "out" ? ActionKind::Output : ActionKind::Input;
                if (lx.peek().kind == Token::Kind::Symbol && lx.peek().text == "@") {
                    lx.next();
                    std::string cls = expect_ident();
                    if (cls == "H") {
                        spec.cls.high.insert(name);
                    } else if (cls == "L") {
                        spec.cls.low.insert(name);
                    } else {
                        lx.fail("expected 'H' or 'L'");
                    }
                }
            }
            expect_symbol("}");
        } else if (block == "process") {
            Token name_tok = lx.peek();
            std::string name = expect_ident();
            if (spec.defs.bindings.count(name)) {
                throw ParseError("process " + name + " defined twice", name_tok.line,
                                 name_tok.col);
            }
            expect_symbol(":=");
            detail::TermParser tp(lx, spec.action_kinds, *spec.defs.arena);
            spec.defs.bindings[name] = tp.parse_choice();
        } else if (block == "sync") {
            expect_symbol("{");
            while (!(lx.peek().kind == Token::Kind::Symbol && lx.peek().text == "}")) {
                std::string out = expect_ident();
                std::string sep = expect_ident();
                if (sep != "x") lx.fail("expected 'x' between sync actions");
                std::string in = expect_ident();
                expect_symbol(";");
                spec.sync.insert({out, in});
            }
            expect_symbol("}");
        } else if (block == "agent") {
            Agent a;
            a.name = expect_ident();
            expect_symbol(":");
            a.behavior = expect_ident();
            std::string kw2 = expect_ident();
            if (kw2 != "threshold") lx.fail("expected 'threshold'");
            a.threshold = expect_real();
            spec.agents.push_back(std::move(a));
        } else if (block == "group") {
            Token name_tok = lx.peek();
            std::string name = expect_ident();
            if (spec.initial_groups.count(name)) {
                throw ParseError("group " + name + " defined twice", name_tok.line, name_tok.col);
            }
            expect_symbol("=");
            expect_symbol("{");
            std::set<std::string> members;
            if (!(lx.peek().kind == Token::Kind::Symbol && lx.peek().text == "}")) {
                members.insert(expect_ident());
                while (lx.peek().kind == Token::Kind::Symbol && lx.peek().text == ",") {
                    lx.next();
                    members.insert(expect_ident());
                }
            }
            expect_symbol("}");
            spec.initial_groups[name] = std::move(members);
        } else if (block == "opinion") {
            std::string rater = expect_ident();
            expect_symbol("->");
            std::string target = expect_ident();
            expect_symbol(":");
            int score = expect_int();
            unsigned count = 1;
            if (lx.peek().kind == Token::Kind::Ident && lx.peek().text == "x") {
                lx.next();
                int c = expect_int();
                if (c < 1) lx.fail("opinion multiplicity must be positive");
                count = static_cast<unsigned>(c);
            }
            for (unsigned k = 0; k < count; ++k) {
                spec.initial_opinions = spec.initial_opinions.add_fake(rater, target, score);
            }
        } else if (block == "model") {
            if (have_model) throw ParseError("model declared twice", kw.line, kw.col);
            have_model = true;
            std::string which = expect_ident();
            if (which == "club") {
                spec.model.kind = TrustModelConfig::Kind::Club;
                expect_symbol("{");
                std::string l = expect_ident();
                if (l != "lambda") lx.fail("expected 'lambda'");
                spec.model.club.lambda = expect_real();
                expect_symbol("}");
            } else if (which == "eigentrust") {
                spec.model.kind = TrustModelConfig::Kind::EigenTrust;
                expect_symbol("{");
                while (!(lx.peek().kind == Token::Kind::Symbol && lx.peek().text == "}")) {
                    std::string opt = expect_ident();
                    if (opt == "damping") {
                        spec.model.eigen.damping = expect_real();
                    } else if (opt == "pretrusted") {
                        expect_symbol("{");
                        while (lx.peek().kind == Token::Kind::Ident) {
                            spec.model.eigen.pretrusted.insert(expect_ident());
                        }
                        expect_symbol("}");
                    } else {
                        lx.fail("unknown eigentrust option '" + opt + "'");
                    }
                }
                expect_symbol("}");
            } else {
                lx.fail("unknown model '" + which + "'");
            }
        } else {
            throw ParseError("unknown block '" + block + "'", kw.line, kw.col);
        }
    }

    // Agent behaviors become the initial local terms; intern their constants
    // now so exploration never touches the arena.
    for (const auto& a : spec.agents) spec.defs.arena->constant(a.behavior);
    return spec;
}

}  // namespace tas
