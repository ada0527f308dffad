#include <gtest/gtest.h>

#include <cmath>

#include "sparsedde/terms.hpp"

using namespace sparsedde;

namespace {

Eigen::VectorXd vec1(double v) {
    Eigen::VectorXd x(1);
    x[0] = v;
    return x;
}

} // namespace

TEST(EvaluateTerm, SpecExamples) {
    TermDescriptor sin_tau{TermKind::Sin, 0, true, 0};
    EXPECT_NEAR(evaluate_term(sin_tau, vec1(0.0), vec1(M_PI / 2)), 1.0, 1e-15);

    TermDescriptor hill{TermKind::RationalHill, 0, true, 10};
    EXPECT_DOUBLE_EQ(evaluate_term(hill, vec1(0.0), vec1(1.0)), 0.5);

    TermDescriptor expneg{TermKind::ExpNeg, 0, true, 0};
    EXPECT_DOUBLE_EQ(evaluate_term(expneg, vec1(5.0), vec1(0.0)), 1.0);
}

TEST(EvaluateTerm, BasicForms) {
    Eigen::VectorXd x = vec1(2.0);
    Eigen::VectorXd xt = vec1(3.0);
    EXPECT_DOUBLE_EQ(evaluate_term({TermKind::Identity, 0, false, 0}, x, xt), 2.0);
    EXPECT_DOUBLE_EQ(evaluate_term({TermKind::Identity, 0, true, 0}, x, xt), 3.0);
    EXPECT_DOUBLE_EQ(evaluate_term({TermKind::Square, 0, true, 0}, x, xt), 9.0);
    EXPECT_DOUBLE_EQ(evaluate_term({TermKind::CrossProduct, 0, false, 0}, x, xt), 6.0);
    EXPECT_DOUBLE_EQ(evaluate_term({TermKind::ExpPos, 0, false, 0}, x, xt), std::exp(2.0));
    EXPECT_DOUBLE_EQ(evaluate_term({TermKind::Cos, 0, false, 0}, x, xt), std::cos(2.0));
    EXPECT_DOUBLE_EQ(evaluate_term({TermKind::Reciprocal, 0, true, 0}, x, xt), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(evaluate_term({TermKind::ReciprocalSquare, 0, false, 0}, x, xt), 0.25);
}

TEST(EvaluateTerm, SingularOperandBelowFloor) {
    TermDescriptor recip{TermKind::Reciprocal, 0, false, 0};
    EXPECT_THROW(evaluate_term(recip, vec1(1e-13), vec1(1.0)), SingularOperand);
    EXPECT_NO_THROW(evaluate_term(recip, vec1(1e-3), vec1(1.0)));
    TermDescriptor recip2{TermKind::ReciprocalSquare, 0, true, 0};
    EXPECT_THROW(evaluate_term(recip2, vec1(1.0), vec1(0.0)), SingularOperand);
}

TEST(TermGrammar, RoundTripAllForms) {
    const std::vector<std::string> forms = {
        "x1",          "x2_tau",       "x1^2",     "x3_tau^2",     "x2*x2_tau",
        "exp(-x1_tau)", "exp(x1)",     "sin(x1)",  "cos(x4_tau)",  "1/x1",
        "1/x2_tau",    "1/x1^2",       "1/x2_tau^2", "hill(x1_tau,10)", "hill(x2,4)",
    };
    for (const auto &f : forms) {
        const TermDescriptor t = parse_term(f);
        EXPECT_EQ(term_name(t), f) << f;
        EXPECT_EQ(parse_term(term_name(t)), t) << f;
    }
}

TEST(TermGrammar, AcceptsSpacesAroundHillArgs) {
    EXPECT_EQ(term_name(parse_term("hill(x1_tau, 10)")), "hill(x1_tau,10)");
    EXPECT_EQ(term_name(parse_term("  x1  ")), "x1");
}

TEST(TermGrammar, RejectsWithPosition) {
    const std::vector<std::string> bad = {
        "",        "y1",      "x0",      "x1^3",    "x1*x2_tau", "x1_tau*x1",
        "exp(x1", "tan(x1)", "hill(x1_tau,0)", "x1 +", "1/x1^2junk", "hill(x1_tau)",
    };
    for (const auto &f : bad) {
        EXPECT_THROW(parse_term(f), ConfigError) << f;
    }
    try {
        parse_term("x1^3");
        FAIL();
    } catch (const ConfigError &e) {
        EXPECT_NE(std::string(e.what()).find("position"), std::string::npos);
    }
}

TEST(Catalog, RejectsDuplicatesAndEmptiness) {
    EXPECT_THROW(CandidateCatalog::from_strings({}), ConfigError);
    EXPECT_THROW(CandidateCatalog::from_strings({"x1", "x1"}), ConfigError);
    EXPECT_THROW(CandidateCatalog::from_strings({"x1", " x1 "}), ConfigError);
}

TEST(Catalog, ValidatesDimension) {
    auto cat = CandidateCatalog::from_strings({"x1", "sin(x2_tau)"});
    EXPECT_NO_THROW(cat.validate_dimension(2));
    EXPECT_THROW(cat.validate_dimension(1), ConfigError);
}

TEST(Catalog, FindAndWithout) {
    auto cat = CandidateCatalog::from_strings({"x1", "x1_tau", "sin(x1)"});
    EXPECT_EQ(cat.find(parse_term("x1_tau")), 1);
    EXPECT_EQ(cat.find(parse_term("cos(x1)")), -1);
    auto reduced = cat.without({1});
    EXPECT_EQ(reduced.size(), 2);
    EXPECT_EQ(reduced.names[1], "sin(x1)");
    EXPECT_THROW(cat.without({0, 1, 2}), ConfigError);
}
