#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "sparsedde/errors.hpp"

namespace sparsedde {

/// Candidate-function forms. Each term applies one form to one state
/// variable, taken either at time t or at the delayed time t - tau.
enum class TermKind {
    Identity,          // v
    Square,            // v^2
    CrossProduct,      // x_i * x_i(t - tau)
    ExpNeg,            // exp(-v)
    ExpPos,            // exp(v)
    Sin,               // sin(v)
    Cos,               // cos(v)
    Reciprocal,        // 1/v
    ReciprocalSquare,  // 1/v^2
    RationalHill,      // v / (1 + v^p)
};

struct TermDescriptor {
    TermKind kind = TermKind::Identity;
    int var_index = 0;      // 0-based, < m
    bool delayed = false;   // operand is X_tau instead of X
    int hill_power = 0;     // RationalHill only, >= 1

    friend bool operator==(const TermDescriptor &a, const TermDescriptor &b) {
        return a.kind == b.kind && a.var_index == b.var_index && a.delayed == b.delayed &&
               (a.kind != TermKind::RationalHill || a.hill_power == b.hill_power);
    }
};

inline constexpr double kSingularityFloor = 1e-12;

/// Evaluates one candidate function at (x, x_tau).
/// Reciprocal kinds throw SingularOperand when |operand| < floor; the caller
/// is expected to reject the candidate for the dataset.
inline double evaluate_term(const TermDescriptor &term, const Eigen::VectorXd &x,
                            const Eigen::VectorXd &x_tau, double singularity_floor = kSingularityFloor) {
    const double v = term.delayed ? x_tau[term.var_index] : x[term.var_index];
    switch (term.kind) {
        case TermKind::Identity: return v;
        case TermKind::Square: return v * v;
        case TermKind::CrossProduct: return x[term.var_index] * x_tau[term.var_index];
        case TermKind::ExpNeg: return std::exp(-v);
        case TermKind::ExpPos: return std::exp(v);
        case TermKind::Sin: return std::sin(v);
        case TermKind::Cos: return std::cos(v);
        case TermKind::Reciprocal:
            if (std::abs(v) < singularity_floor) throw SingularOperand("1/x operand below singularity floor");
            return 1.0 / v;
        case TermKind::ReciprocalSquare:
            if (std::abs(v) < singularity_floor) throw SingularOperand("1/x^2 operand below singularity floor");
            return 1.0 / (v * v);
        case TermKind::RationalHill: {
            double p = 1.0;
            for (int i = 0; i < term.hill_power; ++i) p *= v;
            return v / (1.0 + p);
        }
    }
    throw Error("evaluate_term: unknown kind");
}

/// Canonical grammar rendering; parse_term(term_name(t)) == t.
inline std::string term_name(const TermDescriptor &term) {
    const std::string var = "x" + std::to_string(term.var_index + 1);
    const std::string v = term.delayed ? var + "_tau" : var;
    switch (term.kind) {
        case TermKind::Identity: return v;
        case TermKind::Square: return v + "^2";
        case TermKind::CrossProduct: return var + "*" + var + "_tau";
        case TermKind::ExpNeg: return "exp(-" + v + ")";
        case TermKind::ExpPos: return "exp(" + v + ")";
        case TermKind::Sin: return "sin(" + v + ")";
        case TermKind::Cos: return "cos(" + v + ")";
        case TermKind::Reciprocal: return "1/" + v;
        case TermKind::ReciprocalSquare: return "1/" + v + "^2";
        case TermKind::RationalHill: return "hill(" + v + "," + std::to_string(term.hill_power) + ")";
    }
    throw Error("term_name: unknown kind");
}

namespace detail {

/// Cursor over a term string; every failure carries the 0-based position.
struct TermCursor {
    const std::string &s;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string &what) const {
        throw ConfigError("term '" + s + "' at position " + std::to_string(pos) + ": " + what);
    }
    bool done() const { return pos >= s.size(); }
    char peek() const { return done() ? '\0' : s[pos]; }
    bool try_consume(std::string_view lit) {
        if (s.compare(pos, lit.size(), lit) == 0) {
            pos += lit.size();
            return true;
        }
        return false;
    }
    void expect(std::string_view lit) {
        if (!try_consume(lit)) fail("expected '" + std::string(lit) + "'");
    }
    void skip_spaces() {
        while (!done() && s[pos] == ' ') ++pos;
    }
    int parse_int() {
        if (done() || !std::isdigit(static_cast<unsigned char>(peek()))) fail("expected a digit");
        long v = 0;
        while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) {
            v = v * 10 + (s[pos] - '0');
            if (v > 1000000) fail("number too large");
            ++pos;
        }
        return static_cast<int>(v);
    }

    /// `x<i>` with optional `_tau`; returns (0-based index, delayed).
    std::pair<int, bool> parse_var() {
        expect("x");
        const int id = parse_int();
        if (id < 1) fail("variable indices are 1-based");
        const bool delayed = try_consume("_tau");
        return {id - 1, delayed};
    }
};

} // namespace detail

/// Parses one term string of the run-config grammar:
///   x1, x1_tau, x1^2, x1_tau^2, x1*x1_tau, exp(-x1_tau), exp(x1),
///   sin(x1), cos(x1_tau), 1/x1, 1/x1^2, hill(x1_tau,10)
/// Anything else is rejected with a position-annotated ConfigError.
inline TermDescriptor parse_term(const std::string &raw) {
    std::string s = raw;
    // outer whitespace only; the grammar itself is space-free except hill args
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    detail::TermCursor c{s};
    TermDescriptor t;

    if (c.try_consume("exp(")) {
        t.kind = c.try_consume("-") ? TermKind::ExpNeg : TermKind::ExpPos;
        auto [idx, delayed] = c.parse_var();
        t.var_index = idx;
        t.delayed = delayed;
        c.expect(")");
    } else if (c.try_consume("sin(") || c.try_consume("cos(")) {
        t.kind = s[0] == 's' ? TermKind::Sin : TermKind::Cos;
        auto [idx, delayed] = c.parse_var();
        t.var_index = idx;
        t.delayed = delayed;
        c.expect(")");
    } else if (c.try_consume("hill(")) {
        t.kind = TermKind::RationalHill;
        auto [idx, delayed] = c.parse_var();
        t.var_index = idx;
        t.delayed = delayed;
        c.skip_spaces();
        c.expect(",");
        c.skip_spaces();
        t.hill_power = c.parse_int();
        if (t.hill_power < 1) c.fail("hill power must be >= 1");
        c.skip_spaces();
        c.expect(")");
    } else if (c.try_consume("1/")) {
        auto [idx, delayed] = c.parse_var();
        t.var_index = idx;
        t.delayed = delayed;
        t.kind = c.try_consume("^2") ? TermKind::ReciprocalSquare : TermKind::Reciprocal;
    } else if (c.peek() == 'x') {
        auto [idx, delayed] = c.parse_var();
        t.var_index = idx;
        t.delayed = delayed;
        if (c.try_consume("^2")) {
            t.kind = TermKind::Square;
        } else if (c.try_consume("*")) {
            t.kind = TermKind::CrossProduct;
            if (delayed) c.fail("cross products are written x<i>*x<i>_tau");
            auto [idx2, delayed2] = c.parse_var();
            if (idx2 != idx || !delayed2) c.fail("cross products are written x<i>*x<i>_tau");
        } else {
            t.kind = TermKind::Identity;
        }
    } else {
        c.fail("unrecognized term");
    }

    if (!c.done()) c.fail("trailing characters");
    return t;
}

/// Ordered list of candidate terms; weight indices refer to this order.
struct CandidateCatalog {
    std::vector<TermDescriptor> terms;
    std::vector<std::string> names;

    Eigen::Index size() const { return static_cast<Eigen::Index>(terms.size()); }

    static CandidateCatalog from_strings(const std::vector<std::string> &strings) {
        if (strings.empty()) throw ConfigError("catalog: must list at least one term");
        CandidateCatalog cat;
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < strings.size(); ++i) {
            TermDescriptor t;
            try {
                t = parse_term(strings[i]);
            } catch (const ConfigError &e) {
                throw ConfigError("catalog[" + std::to_string(i) + "]: " + e.what());
            }
            const std::string canon = term_name(t);
            if (!seen.insert(canon).second)
                throw ConfigError("catalog[" + std::to_string(i) + "]: duplicate term '" + canon + "'");
            cat.terms.push_back(t);
            cat.names.push_back(canon);
        }
        return cat;
    }

    /// Checks every var index against the state dimension m.
    void validate_dimension(Eigen::Index m) const {
        for (std::size_t k = 0; k < terms.size(); ++k)
            if (terms[k].var_index >= m)
                throw ConfigError("catalog[" + std::to_string(k) + "]: '" + names[k] +
                                  "' references x" + std::to_string(terms[k].var_index + 1) +
                                  " but the data has " + std::to_string(m) + " state variable(s)");
    }

    /// Index of a term, or -1.
    int find(const TermDescriptor &t) const {
        for (std::size_t k = 0; k < terms.size(); ++k)
            if (terms[k] == t) return static_cast<int>(k);
        return -1;
    }

    CandidateCatalog without(const std::vector<int> &drop) const {
        CandidateCatalog out;
        for (std::size_t k = 0; k < terms.size(); ++k) {
            if (std::find(drop.begin(), drop.end(), static_cast<int>(k)) != drop.end()) continue;
            out.terms.push_back(terms[k]);
            out.names.push_back(names[k]);
        }
        if (out.terms.empty()) throw ConfigError("catalog: dropping all terms leaves an empty catalog");
        return out;
    }
};

} // namespace sparsedde
