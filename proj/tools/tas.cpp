// tas - explore and check trust adaptive systems described in the .tas DSL.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tas/parser.hpp"
#include "tas/scenario.hpp"
#include "tas/semantics.hpp"
#include "tas/tlts_io.hpp"
#include "tas/trust.hpp"
#include "tas/ttl.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFalse = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIndeterminate = 3;

struct CommonOpts {
    std::size_t max_states = 100000;
    std::size_t max_depth = 64;
    unsigned opinion_cap = 8;
    unsigned threads = 1;
    bool json_errors = false;
};

void add_bound_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--max-states", o.max_states, "State budget for exploration");
    cmd->add_option("--max-depth", o.max_depth, "Depth bound for exploration");
    cmd->add_option("--opinion-cap", o.opinion_cap, "Saturating cap on opinion multiplicities");
    cmd->add_option("--threads", o.threads, "Worker threads for state expansion");
    cmd->add_flag("--json-errors", o.json_errors, "Report errors as JSON on stderr");
}

tas::Bounds bounds_of(const CommonOpts& o) {
    return tas::Bounds{o.max_states, o.max_depth, o.opinion_cap};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw tas::SpecError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw tas::SpecError("cannot write " + path);
    out << data;
}

struct RunReport {
    std::string command;
    std::uint64_t spec_digest = 0;
    tas::Bounds bounds;
    std::size_t states = 0;
    std::size_t transitions = 0;
    bool truncated = false;
    std::map<std::string, std::string> verdicts;
    double duration_ms = 0.0;

    void print() const {
        nlohmann::json j;
        j["command"] = command;
        char digest[32];
        std::snprintf(digest, sizeof(digest), "%016llx",
                      static_cast<unsigned long long>(spec_digest));
        j["spec_digest"] = digest;
        j["bounds"] = {{"max_states", bounds.max_states},
                       {"max_depth", bounds.max_depth},
                       {"opinion_cap", bounds.opinion_cap}};
        j["states"] = states;
        j["transitions"] = transitions;
        j["truncated"] = truncated;
        j["verdicts"] = verdicts;
        j["duration_ms"] = duration_ms;
        std::cout << j.dump() << "\n";
    }
};

std::string join_argv(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += " ";
        s += argv[i];
    }
    return s;
}

nlohmann::json verdict_json(const tas::Tlts& t, const tas::CheckResult& r) {
    nlohmann::json j;
    j["verdict"] = r.verdict_str();
    j["bounded"] = r.bounded;
    j["satisfying_count"] = r.satisfying.size();
    j["witness"] = nlohmann::json::array();
    if (r.has_witness) {
        for (std::uint32_t e : r.witness) j["witness"].push_back(t.transitions[e].label.str());
    }
    return j;
}

int exit_for(const std::vector<tas::CheckResult>& results) {
    bool any_false = false;
    bool any_indeterminate = false;
    for (const auto& r : results) {
        if (r.verdict == tas::CheckResult::Verdict::False) any_false = true;
        if (r.verdict == tas::CheckResult::Verdict::Indeterminate) any_indeterminate = true;
    }
    if (any_false) return kExitPropertyFalse;
    if (any_indeterminate) return kExitIndeterminate;
    return kExitOk;
}

std::map<std::string, std::string> parse_kv_params(const std::string& text) {
    std::map<std::string, std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string::npos) end = text.size();
        std::string item = text.substr(pos, end - pos);
        pos = end + 1;
        if (item.empty()) continue;
        std::size_t eq = item.find('=');
        if (eq == std::string::npos) throw tas::SpecError("expected key=value in --params");
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"explicit-state exploration and trust property checking for trust adaptive "
                 "systems"};
    app.require_subcommand(1);

    CommonOpts opts;

    // validate
    std::string validate_file;
    auto* cmd_validate = app.add_subcommand("validate", "Check a .tas system description");
    cmd_validate->add_option("file", validate_file, "System file (.tas)")->required();
    cmd_validate->add_flag("--json-errors", opts.json_errors, "Report errors as JSON on stderr");

    // explore
    std::string explore_file;
    std::string explore_dot;
    std::string explore_json;
    auto* cmd_explore = app.add_subcommand("explore", "Build the TLTS of a system");
    cmd_explore->add_option("file", explore_file, "System file (.tas)")->required();
    cmd_explore->add_option("--dot", explore_dot, "Write the TLTS in DOT format");
    cmd_explore->add_option("--json", explore_json, "Write the TLTS in JSON format");
    add_bound_flags(cmd_explore, opts);

    // trust
    std::string trust_file;
    long trust_state = -1;
    bool trust_initial = false;
    auto* cmd_trust = app.add_subcommand("trust", "Print the t_IJ matrix at a state");
    cmd_trust->add_option("file", trust_file, "System file (.tas)")->required();
    auto* state_opt = cmd_trust->add_option("--state", trust_state, "State index");
    auto* initial_opt = cmd_trust->add_flag("--initial", trust_initial, "Use the initial state");
    state_opt->excludes(initial_opt);
    add_bound_flags(cmd_trust, opts);

    // check
    std::string check_file;
    std::string check_prop;
    std::string check_props_file;
    auto* cmd_check = app.add_subcommand("check", "Check trust temporal properties");
    cmd_check->add_option("file", check_file, "System file (.tas)")->required();
    cmd_check->add_option("--prop", check_prop, "Formula to check");
    cmd_check->add_option("--props", check_props_file, "Properties file (name: formula lines)");
    add_bound_flags(cmd_check, opts);

    // attack
    std::string attack_file;
    std::string attack_kind;
    std::string attack_params;
    std::string attack_emit;
    bool attack_check = false;
    auto* cmd_attack = app.add_subcommand("attack", "Extend a system with an attack template");
    cmd_attack->add_option("file", attack_file, "System file (.tas)")->required();
    cmd_attack->add_option("--kind", attack_kind,
                           "bad-mouthing|ballot-stuffing|collusion|on-off|sybil|white-washing")
        ->required();
    cmd_attack->add_option("--params", attack_params, "Comma-separated key=value attack knobs");
    cmd_attack->add_option("--emit", attack_emit, "Write the attacked system (plus .props)");
    cmd_attack->add_flag("--check", attack_check, "Explore and check the attack properties");
    add_bound_flags(cmd_attack, opts);

    // scenario
    std::string scenario_kind;
    std::string scenario_emit;
    unsigned scenario_producers = 1;
    unsigned scenario_clubs = 1;
    double scenario_lambda = 0.5;
    unsigned scenario_peers = 2;
    auto* cmd_scenario = app.add_subcommand("scenario", "Generate a built-in scenario");
    cmd_scenario->add_option("kind", scenario_kind, "club|eigentrust")->required();
    cmd_scenario->add_option("--producers", scenario_producers, "Producers per club (club)");
    cmd_scenario->add_option("--clubs", scenario_clubs, "Number of clubs, 1 or 2 (club)");
    cmd_scenario->add_option("--lambda", scenario_lambda, "Single-interaction reliability (club)");
    cmd_scenario->add_option("--peers", scenario_peers, "Number of peers (eigentrust)");
    cmd_scenario->add_option("--emit", scenario_emit, "Write FILE and FILE-derived .props");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    auto started = std::chrono::steady_clock::now();
    RunReport report;
    report.command = join_argv(argc, argv);

    try {
        if (*cmd_validate) {
            std::string text = read_file(validate_file);
            tas::SystemSpec spec = tas::parse_system(text);
            auto diags = tas::validate_spec(spec);
            for (const auto& d : diags) std::cout << d << "\n";
            return diags.empty() ? kExitOk : kExitUsage;
        }

        if (*cmd_explore) {
            std::string text = read_file(explore_file);
            report.spec_digest = tas::fnv1a64(text);
            report.bounds = bounds_of(opts);
            tas::SystemSpec spec = tas::parse_system(text);
            tas::Tlts t = tas::build_tlts(spec, report.bounds, opts.threads);
            if (!explore_dot.empty()) write_file(explore_dot, tas::to_dot(t));
            if (!explore_json.empty()) write_file(explore_json, tas::export_tlts(t, "json"));
            report.states = t.states.size();
            report.transitions = t.transitions.size();
            report.truncated = !t.truncated.empty();
            report.duration_ms = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - started)
                                     .count();
            report.print();
            return report.truncated ? kExitIndeterminate : kExitOk;
        }

        if (*cmd_trust) {
            if (!trust_initial && trust_state < 0) {
                throw tas::SpecError("trust needs --state IDX or --initial");
            }
            std::string text = read_file(trust_file);
            tas::SystemSpec spec = tas::parse_system(text);
            tas::Tlts t = tas::build_tlts(spec, bounds_of(opts), opts.threads);
            std::size_t q = trust_initial ? t.initial : static_cast<std::size_t>(trust_state);
            if (q >= t.states.size()) throw tas::SpecError("state index out of range");
            const tas::Configuration& c = t.states[q];
            std::printf("t_IJ at state %zu (rows: rater)\n%12s", q, "");
            for (const auto& a : spec.agents) std::printf(" %12s", a.name.c_str());
            std::printf("\n");
            for (const auto& i : spec.agents) {
                std::printf("%12s", i.name.c_str());
                for (const auto& j : spec.agents) {
                    if (i.name == j.name) {
                        std::printf(" %12s", "-");
                    } else {
                        std::printf(" %12.6f", tas::trust_value(spec, c.groups, c.opinions,
                                                                i.name, j.name));
                    }
                }
                std::printf("\n");
            }
            return kExitOk;
        }

        if (*cmd_check) {
            if (check_prop.empty() == check_props_file.empty()) {
                throw tas::SpecError("check needs exactly one of --prop or --props");
            }
            std::string text = read_file(check_file);
            report.spec_digest = tas::fnv1a64(text);
            report.bounds = bounds_of(opts);
            tas::SystemSpec spec = tas::parse_system(text);
            tas::Tlts t = tas::build_tlts(spec, report.bounds, opts.threads);
            report.states = t.states.size();
            report.transitions = t.transitions.size();
            report.truncated = !t.truncated.empty();

            std::vector<std::pair<std::string, std::string>> props;
            if (!check_prop.empty()) {
                props.emplace_back("prop", check_prop);
            } else {
                props = tas::parse_properties_file(read_file(check_props_file));
            }
            std::vector<tas::CheckResult> results;
            for (const auto& [name, formula_text] : props) {
                tas::FormulaPtr f = tas::parse_formula(formula_text);
                tas::CheckResult r = tas::check(t, f, spec);
                results.push_back(r);
                report.verdicts[name] = r.verdict_str();
                std::cout << name << ": " << nlohmann::json(verdict_json(t, r)).dump() << "\n";
            }
            report.duration_ms = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - started)
                                     .count();
            report.print();
            return exit_for(results);
        }

        if (*cmd_attack) {
            std::string text = read_file(attack_file);
            report.spec_digest = tas::fnv1a64(text);
            tas::ScenarioBundle base;
            base.spec = tas::parse_system(text);
            base.suggested_bounds = bounds_of(opts);
            tas::AttackKind kind = tas::attack_from_name(attack_kind);
            auto params = parse_kv_params(attack_params);
            tas::ScenarioBundle attacked = tas::apply_attack(base, kind, params);

            if (!attack_emit.empty()) {
                write_file(attack_emit, tas::to_dsl(attacked.spec));
                std::string props_path = attack_emit + ".props";
                std::size_t dot = attack_emit.rfind('.');
                if (dot != std::string::npos) {
                    props_path = attack_emit.substr(0, dot) + ".props";
                }
                write_file(props_path, tas::properties_sidecar(attacked.properties));
            } else if (!attack_check) {
                std::cout << tas::to_dsl(attacked.spec);
            }

            if (!attack_check) return kExitOk;

            report.bounds = bounds_of(opts);
            tas::Tlts t = tas::build_tlts(attacked.spec, report.bounds, opts.threads);
            report.states = t.states.size();
            report.transitions = t.transitions.size();
            report.truncated = !t.truncated.empty();
            std::vector<tas::CheckResult> results;
            bool mismatch = false;
            for (const auto& p : attacked.properties) {
                tas::CheckResult r = tas::check(t, p.formula, attacked.spec);
                results.push_back(r);
                bool matches = (r.verdict == tas::CheckResult::Verdict::True) == p.expected &&
                               r.verdict != tas::CheckResult::Verdict::Indeterminate;
                if (!matches) mismatch = true;
                report.verdicts[p.name] = r.verdict_str();
                std::cout << p.name << ": " << r.verdict_str() << " (expected "
                          << (p.expected ? "true" : "false") << ")\n";
            }
            report.duration_ms = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - started)
                                     .count();
            report.print();
            for (const auto& r : results) {
                if (r.verdict == tas::CheckResult::Verdict::Indeterminate) {
                    return kExitIndeterminate;
                }
            }
            return mismatch ? kExitPropertyFalse : kExitOk;
        }

        if (*cmd_scenario) {
            tas::ScenarioBundle bundle;
            if (scenario_kind == "club") {
                bundle = tas::build_club_example(scenario_producers, scenario_clubs,
                                                 scenario_lambda);
            } else if (scenario_kind == "eigentrust") {
                bundle = tas::build_eigentrust_example(scenario_peers);
            } else {
                throw tas::SpecError("unknown scenario " + scenario_kind);
            }
            std::string dsl = tas::to_dsl(bundle.spec);
            std::string props = tas::properties_sidecar(bundle.properties);
            if (scenario_emit.empty()) {
                std::cout << dsl;
            } else {
                write_file(scenario_emit, dsl);
                std::string props_path = scenario_emit + ".props";
                std::size_t dot = scenario_emit.rfind('.');
                if (dot != std::string::npos) {
                    props_path = scenario_emit.substr(0, dot) + ".props";
                }
                write_file(props_path, props);
            }
            return kExitOk;
        }
    } catch (const tas::ParseError& e) {
        if (opts.json_errors) {
            nlohmann::json j{{"error", e.what()}, {"line", e.line()}, {"column", e.column()}};
            std::cerr << j.dump() << "\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
        return kExitUsage;
    } catch (const std::exception& e) {
        if (opts.json_errors) {
            std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
        return kExitUsage;
    }
    return kExitUsage;
}
