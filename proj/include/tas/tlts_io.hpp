#pragma once

#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "tas/semantics.hpp"

namespace tas {

// Schema-level view of a TLTS, independent of term representation. This is
// the unit of JSON (de)serialization; exports are canonical (sorted keys,
// fixed formatting), so identical systems produce identical bytes.
struct TltsDocument {
    struct Label {
        std::map<std::string, std::set<std::string>> groups;
        std::vector<std::tuple<std::string, std::string, int, unsigned>> rated;
        std::vector<std::pair<std::string, std::string>> placeholders;
    };

    std::vector<std::string> agents;
    Bounds bounds;
    std::uint32_t initial = 0;
    std::vector<std::vector<std::string>> states;  // pretty-printed terms per state
    std::vector<Label> labeling;
    std::vector<std::tuple<std::uint32_t, std::string, std::uint32_t>> transitions;
    std::vector<std::uint32_t> truncated;
};

inline TltsDocument document_of(const Tlts& t) {
    TltsDocument d;
    d.agents = t.agent_names;
    d.bounds = t.bounds;
    d.initial = t.initial;
    for (const auto& s : t.states) {
        std::vector<std::string> terms;
        for (Term term : s.terms) terms.push_back(pretty_print(term));
        d.states.push_back(std::move(terms));

        TltsDocument::Label l;
        l.groups = s.groups;
        for (const auto& [k, m] : s.opinions.rated()) {
            l.rated.emplace_back(std::get<0>(k), std::get<1>(k), std::get<2>(k), m);
        }
        for (const auto& [r, target] : s.opinions.placeholders()) {
            l.placeholders.emplace_back(r, target);
        }
        d.labeling.push_back(std::move(l));
    }
    for (const auto& tr : t.transitions) {
        d.transitions.emplace_back(tr.src, tr.label.str(), tr.dst);
    }
    d.truncated.assign(t.truncated.begin(), t.truncated.end());
    return d;
}

inline std::string to_json(const TltsDocument& d) {
    nlohmann::json j;
    j["agents"] = d.agents;
    j["bounds"] = {{"max_states", d.bounds.max_states},
                   {"max_depth", d.bounds.max_depth},
                   {"opinion_cap", d.bounds.opinion_cap}};
    j["initial"] = d.initial;
    j["states"] = nlohmann::json::array();
    for (const auto& terms : d.states) j["states"].push_back({{"terms", terms}});
    j["labeling"] = nlohmann::json::array();
    for (const auto& l : d.labeling) {
        nlohmann::json jl;
        jl["groups"] = nlohmann::json::object();
        for (const auto& [g, members] : l.groups) jl["groups"][g] = members;
        jl["opinions"]["rated"] = nlohmann::json::array();
        for (const auto& [r, t2, v, m] : l.rated) {
            jl["opinions"]["rated"].push_back({r, t2, v, m});
        }
        jl["opinions"]["placeholders"] = nlohmann::json::array();
        for (const auto& [r, t2] : l.placeholders) {
            jl["opinions"]["placeholders"].push_back({r, t2});
        }
        j["labeling"].push_back(std::move(jl));
    }
    j["transitions"] = nlohmann::json::array();
    for (const auto& [src, label, dst] : d.transitions) {
        j["transitions"].push_back({src, label, dst});
    }
    j["truncated"] = d.truncated;
    return j.dump(2) + "\n";
}

inline TltsDocument import_tlts_json(const std::string& bytes) {
    nlohmann::json j = nlohmann::json::parse(bytes);
    TltsDocument d;
    d.agents = j.at("agents").get<std::vector<std::string>>();
    d.bounds.max_states = j.at("bounds").at("max_states").get<std::size_t>();
    d.bounds.max_depth = j.at("bounds").at("max_depth").get<std::size_t>();
    d.bounds.opinion_cap = j.at("bounds").at("opinion_cap").get<unsigned>();
    d.initial = j.at("initial").get<std::uint32_t>();
    for (const auto& s : j.at("states")) {
        d.states.push_back(s.at("terms").get<std::vector<std::string>>());
    }
    for (const auto& jl : j.at("labeling")) {
        TltsDocument::Label l;
        for (auto it = jl.at("groups").begin(); it != jl.at("groups").end(); ++it) {
            l.groups[it.key()] = it.value().get<std::set<std::string>>();
        }
        for (const auto& r : jl.at("opinions").at("rated")) {
            l.rated.emplace_back(r.at(0).get<std::string>(), r.at(1).get<std::string>(),
                                 r.at(2).get<int>(), r.at(3).get<unsigned>());
        }
        for (const auto& p : jl.at("opinions").at("placeholders")) {
            l.placeholders.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
        }
        d.labeling.push_back(std::move(l));
    }
    for (const auto& tr : j.at("transitions")) {
        d.transitions.emplace_back(tr.at(0).get<std::uint32_t>(), tr.at(1).get<std::string>(),
                                   tr.at(2).get<std::uint32_t>());
    }
    d.truncated = j.at("truncated").get<std::vector<std::uint32_t>>();
    return d;
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace detail

inline std::string to_dot(const Tlts& t) {
    std::string out = "digraph tlts {\n  rankdir=LR;\n  node [shape=circle];\n";
    for (std::size_t q = 0; q < t.states.size(); ++q) {
        const Configuration& c = t.states[q];
        std::string label = "q" + std::to_string(q);
        for (const auto& [g, members] : c.groups) {
            label += "\\n" + g + "={";
            bool first = true;
            for (const auto& m : members) {
                if (!first) label += ",";
                label += m;
                first = false;
            }
            label += "}";
        }
        for (const auto& [k, m] : c.opinions.rated()) {
            label += "\\n(" + std::get<1>(k) + "," + std::to_string(std::get<2>(k)) + ")_" +
                     std::get<0>(k);
            if (m > 1) label += " x" + std::to_string(m);
        }
        for (const auto& [r, target] : c.opinions.placeholders()) {
            label += "\\n(" + target + ",?)_" + r;
        }
        out += "  q" + std::to_string(q) + " [";
        if (q == t.initial) out += "shape=doublecircle, ";
        if (t.truncated.count(static_cast<std::uint32_t>(q))) out += "style=dashed, ";
        out += "label=\"" + detail::dot_escape(label) + "\"];\n";
    }
    for (const auto& tr : t.transitions) {
        out += "  q" + std::to_string(tr.src) + " -> q" + std::to_string(tr.dst) + " [label=\"" +
               detail::dot_escape(tr.label.str()) + "\"];\n";
    }
    out += "}\n";
    return out;
}

// Serializes a TLTS to the named format ("json" or "dot").
inline std::string export_tlts(const Tlts& t, const std::string& format) {
    if (format == "json") return to_json(document_of(t));
    if (format == "dot") return to_dot(t);
    throw SpecError("unknown export format " + format);
}

}  // namespace tas
