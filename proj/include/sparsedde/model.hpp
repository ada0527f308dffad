#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sparsedde/errors.hpp"
#include "sparsedde/terms.hpp"
#include "sparsedde/trajectory.hpp"

namespace sparsedde {

struct ModelTerm {
    TermDescriptor term;
    double coefficient = 0.0;
    double coefficient_sd = 0.0;
};

/// A sparse constant-delay model: per state variable, a linear combination of
/// candidate terms, plus one shared delay in seconds.
struct SparseDelayModel {
    int m = 1;
    std::vector<std::vector<ModelTerm>> equations;  // size m
    double delay = 0.0;                             // seconds, >= 0

    void validate() const {
        if (m < 1) throw Error("model: m must be >= 1");
        if (static_cast<int>(equations.size()) != m) throw Error("model: equation count != m");
        if (!(delay >= 0.0)) throw Error("model: delay must be >= 0");
        for (const auto &eq : equations)
            for (const auto &mt : eq) {
                if (mt.term.var_index >= m) throw Error("model: term references missing variable");
                if (mt.term.kind == TermKind::RationalHill && mt.term.hill_power < 1)
                    throw Error("model: hill power must be >= 1");
                if (mt.coefficient_sd < 0.0) throw Error("model: coefficient sd must be >= 0");
            }
    }
};

/// Right-hand side F(x, x_tau): each equation is sum_k theta_k f_k.
inline Eigen::VectorXd rhs(const SparseDelayModel &model, const Eigen::VectorXd &x,
                           const Eigen::VectorXd &x_tau) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(model.m);
    for (int e = 0; e < model.m; ++e)
        for (const auto &mt : model.equations[e])
            out[e] += mt.coefficient * evaluate_term(mt.term, x, x_tau);
    return out;
}

/// Human-readable rendering, e.g. `dx1/dt = 9.78*exp(-x1_tau) - 0.99*x1, tau = 0.99`.
inline std::string render_equations(const SparseDelayModel &model, int precision = 6) {
    std::ostringstream os;
    os.precision(precision);
    for (int e = 0; e < model.m; ++e) {
        os << "dx" << (e + 1) << "/dt = ";
        if (model.equations[e].empty()) os << "0";
        bool first = true;
        for (const auto &mt : model.equations[e]) {
            const double c = mt.coefficient;
            if (first) {
                if (c < 0) os << "-";
            } else {
                os << (c < 0 ? " - " : " + ");
            }
            os << std::abs(c) << "*" << term_name(mt.term);
            first = false;
        }
        os << "\n";
    }
    os << "tau = " << model.delay << "\n";
    return os.str();
}

inline nlohmann::json model_to_json(const SparseDelayModel &model) {
    nlohmann::json j;
    j["m"] = model.m;
    j["delay"] = model.delay;
    j["equations"] = nlohmann::json::array();
    for (const auto &eq : model.equations) {
        nlohmann::json je = nlohmann::json::array();
        for (const auto &mt : eq) {
            nlohmann::json jt;
            jt["term"] = term_name(mt.term);
            jt["coefficient"] = mt.coefficient;
            if (mt.coefficient_sd != 0.0) jt["sd"] = mt.coefficient_sd;
            je.push_back(jt);
        }
        j["equations"].push_back(je);
    }
    return j;
}

inline SparseDelayModel model_from_json(const nlohmann::json &j, const std::string &where = "model") {
    SparseDelayModel model;
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto &item : j.items())
        if (item.key() != "m" && item.key() != "delay" && item.key() != "equations")
            throw ConfigError(where + "." + item.key() + ": unknown key");
    if (!j.contains("delay") || !j["delay"].is_number())
        throw ConfigError(where + ".delay: required number");
    if (!j.contains("equations") || !j["equations"].is_array())
        throw ConfigError(where + ".equations: required array");
    model.delay = j["delay"].get<double>();
    const auto &eqs = j["equations"];
    model.m = j.contains("m") ? j["m"].get<int>() : static_cast<int>(eqs.size());
    if (model.m != static_cast<int>(eqs.size()))
        throw ConfigError(where + ".equations: length must equal m");
    for (std::size_t e = 0; e < eqs.size(); ++e) {
        std::vector<ModelTerm> eq;
        if (!eqs[e].is_array()) throw ConfigError(where + ".equations[" + std::to_string(e) + "]: expected array");
        for (std::size_t k = 0; k < eqs[e].size(); ++k) {
            const auto &jt = eqs[e][k];
            const std::string path = where + ".equations[" + std::to_string(e) + "][" + std::to_string(k) + "]";
            if (!jt.is_object()) throw ConfigError(path + ": expected object");
            for (const auto &item : jt.items())
                if (item.key() != "term" && item.key() != "coefficient" && item.key() != "sd")
                    throw ConfigError(path + "." + item.key() + ": unknown key");
            if (!jt.contains("term") || !jt["term"].is_string()) throw ConfigError(path + ".term: required string");
            if (!jt.contains("coefficient") || !jt["coefficient"].is_number())
                throw ConfigError(path + ".coefficient: required number");
            ModelTerm mt;
            try {
                mt.term = parse_term(jt["term"].get<std::string>());
            } catch (const ConfigError &err) {
                throw ConfigError(path + ".term: " + err.what());
            }
            mt.coefficient = jt["coefficient"].get<double>();
            if (jt.contains("sd")) mt.coefficient_sd = jt["sd"].get<double>();
            eq.push_back(mt);
        }
        model.equations.push_back(std::move(eq));
    }
    model.validate();
    return model;
}

inline void write_model_json(const std::string &path, const SparseDelayModel &model) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    f << model_to_json(model).dump(2) << "\n";
}

inline SparseDelayModel read_model_json(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError(path + ": " + e.what());
    }
    return model_from_json(j, path);
}

} // namespace sparsedde
