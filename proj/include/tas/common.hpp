#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tas {

inline void hash_combine(std::size_t& seed, std::size_t v) {
    seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

inline std::size_t hash_string(const std::string& s) {
    return std::hash<std::string>{}(s);
}

// FNV-1a, used for content digests in run reports.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Error in the input text (DSL or formula), with 1-based position.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, int line, int col)
        : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " +
                             std::to_string(col)),
          line_(line),
          col_(col) {}

    int line() const { return line_; }
    int column() const { return col_; }

private:
    int line_;
    int col_;
};

// Error in the system description itself (bad model parameters, unknown agent, ...).
class SpecError : public std::runtime_error {
public:
    explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tas
