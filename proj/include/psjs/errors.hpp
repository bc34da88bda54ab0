#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace psjs {

struct Diagnostic {
    std::string invariant;
    std::string message;
};

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class ModelError : public std::runtime_error {
public:
    explicit ModelError(std::vector<Diagnostic> diags)
        : std::runtime_error(summarise(diags)), diags_(std::move(diags)) {}
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    static std::string summarise(const std::vector<Diagnostic>& d) {
        std::string s;
        for (const auto& x : d) {
            if (!s.empty()) s += "; ";
            s += x.message;
        }
        return s.empty() ? "invalid model" : s;
    }
    std::vector<Diagnostic> diags_;
};

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace psjs
