#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cohash/error.hpp"
#include "cohash/loss.hpp"
#include "cohash/rng.hpp"
#include "util.hpp"

using namespace cohash;

namespace {

double frob(const MatD& a, const MatD& b) { return testutil::frob_diff(a, b); }

double oracle_loss_g(const SimMatrices& m, const MatD& s, bool squared) {
    const MatD* c[4] = {&m.c_ii, &m.c_tt, &m.c_it, &m.c_ti};
    double sum = 0.0;
    for (const auto* mat : c) {
        const double f = frob(*mat, s);
        sum += squared ? f * f : f;
    }
    return sum;
}

double oracle_loss_i(const SimMatrices& m, bool squared) {
    const MatD* c[4] = {&m.c_ii, &m.c_tt, &m.c_it, &m.c_ti};
    double sum = 0.0;
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            const double f = frob(*c[a], *c[b]);
            sum += squared ? f * f : f;
        }
    }
    return sum;
}

}  // namespace

TEST(SimMatrices, CoexistentDiagonalIsUnitOnEqualInputs) {
    Rng rng(1);
    const MatD h = testutil::random_codes(rng, 5, 4);
    const SimMatrices m = sim_matrices(h, h);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_DOUBLE_EQ(m.c_it(i, i), 1.0);
        EXPECT_DOUBLE_EQ(m.c_ii(i, i), 1.0);
        EXPECT_DOUBLE_EQ(m.c_tt(i, i), 1.0);
    }
}

TEST(SimMatrices, CrossMatricesAreTransposes) {
    Rng rng(2);
    const MatD hi = testutil::random_codes(rng, 6, 4);
    const MatD ht = testutil::random_codes(rng, 6, 4);
    const SimMatrices m = sim_matrices(hi, ht);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            EXPECT_NEAR(m.c_ti(i, j), m.c_it(j, i), 1e-12);
            EXPECT_NEAR(m.c_ii(i, j), m.c_ii(j, i), 1e-12);
            EXPECT_NEAR(m.c_tt(i, j), m.c_tt(j, i), 1e-12);
        }
    }
}

TEST(SimMatrices, ZeroRowIsRejected) {
    Rng rng(3);
    MatD hi = testutil::random_codes(rng, 4, 3);
    const MatD ht = testutil::random_codes(rng, 4, 3);
    for (std::size_t j = 0; j < 3; ++j) hi(2, j) = 0.0;
    const std::string msg = testutil::error_message([&] { sim_matrices(hi, ht); });
    EXPECT_NE(msg.find("zero row"), std::string::npos) << msg;
}

TEST(LossG, ZeroWhenAllMatricesMatchTheTarget) {
    Rng rng(4);
    const MatD h = testutil::random_codes(rng, 5, 4);
    const SimMatrices m = sim_matrices(h, h);
    const LossParams p;
    EXPECT_EQ(loss_g(m, m.c_ii, p), 0.0);
}

TEST(LossG, SumsTheMismatchedNorms) {
    Rng rng(5);
    const MatD hi = testutil::random_codes(rng, 4, 3);
    const MatD ht = testutil::random_codes(rng, 4, 3);
    const SimMatrices m = sim_matrices(hi, ht);
    const LossParams p;
    // Using one of the four matrices as the target zeroes exactly that term.
    EXPECT_NEAR(loss_g(m, m.c_ii, p),
                frob(m.c_tt, m.c_ii) + frob(m.c_it, m.c_ii) + frob(m.c_ti, m.c_ii), 1e-8);
}

TEST(LossG, MatchesLoopOracle) {
    Rng rng(6);
    const MatD hi = testutil::random_codes(rng, 3, 4);
    const MatD ht = testutil::random_codes(rng, 3, 4);
    const MatD s = testutil::random_similarity(rng, 3);
    const SimMatrices m = sim_matrices(hi, ht);
    LossParams p;
    EXPECT_NEAR(loss_g(m, s, p), oracle_loss_g(m, s, false), 1e-8);
    p.squared_norms = true;
    EXPECT_NEAR(loss_g(m, s, p), oracle_loss_g(m, s, true), 1e-8);
}

TEST(LossC, ZeroAtTheAlgebraicTarget) {
    MatD c(3, 3);
    for (std::size_t i = 0; i < 3; ++i) c(i, i) = 1.5;
    const LossParams p;
    EXPECT_EQ(loss_c(c, p), 0.0);
}

TEST(LossC, HandValueOnUnitDiagonal) {
    MatD c(2, 2);
    c(0, 0) = c(1, 1) = 1.0;
    c(0, 1) = 0.3;
    c(1, 0) = -0.2;
    const LossParams p;
    EXPECT_DOUBLE_EQ(loss_c(c, p), std::sqrt(0.5));  // sqrt(2) * 0.5

    // Only the diagonal participates.
    MatD perturbed = c;
    perturbed(0, 1) = -0.9;
    perturbed(1, 0) = 0.7;
    EXPECT_EQ(loss_c(perturbed, p), loss_c(c, p));
}

TEST(LossC, TraceFormTakesTheAbsoluteSum) {
    MatD c(2, 2);
    c(0, 0) = c(1, 1) = 1.0;
    LossParams p;
    p.coexist_form = CoexistForm::TraceAbs;
    EXPECT_DOUBLE_EQ(loss_c(c, p), 1.0);  // |(1-1.5) + (1-1.5)|

    // Deviations of opposite sign cancel in the trace form but not in the
    // per-element form.
    c(0, 0) = 1.4;
    c(1, 1) = 1.6;
    EXPECT_DOUBLE_EQ(loss_c(c, p), 0.0);
    p.coexist_form = CoexistForm::DiagL2;
    EXPECT_NEAR(loss_c(c, p), std::sqrt(0.02), 1e-12);
}

TEST(LossI, ZeroOnCoincidentMatrices) {
    Rng rng(7);
    const MatD h = testutil::random_codes(rng, 5, 4);
    const SimMatrices m = sim_matrices(h, h);
    const LossParams p;
    EXPECT_EQ(loss_i(m, p), 0.0);
}

TEST(LossI, MatchesPairEnumerationOracle) {
    Rng rng(8);
    const MatD hi = testutil::random_codes(rng, 3, 4);
    const MatD ht = testutil::random_codes(rng, 3, 4);
    const SimMatrices m = sim_matrices(hi, ht);
    LossParams p;
    EXPECT_NEAR(loss_i(m, p), oracle_loss_i(m, false), 1e-8);
    p.squared_norms = true;
    EXPECT_NEAR(loss_i(m, p), oracle_loss_i(m, true), 1e-8);
}

TEST(TotalLoss, WeightEndpointReducesToCoexistentTerm) {
    Rng rng(9);
    const MatD hi = testutil::random_codes(rng, 5, 4);
    const MatD ht = testutil::random_codes(rng, 5, 4);
    const MatD s = testutil::random_similarity(rng, 5);
    LossParams p;
    p.lambda1 = 0.0;
    p.lambda2 = 0.0;
    const LossBreakdown bd = total_loss_and_grads(hi, ht, s, p);
    EXPECT_EQ(bd.total, bd.l_c);
    EXPECT_LT(testutil::max_grad_rel_err(hi, ht, s, p, GradMask::Both), 1e-4);
}

TEST(TotalLoss, MaskedOperandGetsAZeroGradient) {
    Rng rng(10);
    const MatD hi = testutil::random_codes(rng, 5, 4);
    const MatD ht = testutil::random_codes(rng, 5, 4);
    const MatD s = testutil::random_similarity(rng, 5);
    const LossParams p;

    const LossBreakdown img_only = total_loss_and_grads(hi, ht, s, p, GradMask::ImgOnly);
    for (std::size_t i = 0; i < img_only.grad_ht.size(); ++i)
        EXPECT_EQ(img_only.grad_ht.data()[i], 0.0);

    const LossBreakdown txt_only = total_loss_and_grads(hi, ht, s, p, GradMask::TxtOnly);
    for (std::size_t i = 0; i < txt_only.grad_hi.size(); ++i)
        EXPECT_EQ(txt_only.grad_hi.data()[i], 0.0);

    // Loss values do not depend on the mask.
    const LossBreakdown both = total_loss_and_grads(hi, ht, s, p, GradMask::Both);
    EXPECT_EQ(img_only.total, both.total);
    EXPECT_EQ(txt_only.total, both.total);
}

TEST(TotalLoss, GradientsMatchFiniteDifferences) {
    Rng rng(11);
    const MatD hi = testutil::random_codes(rng, 6, 4);
    const MatD ht = testutil::random_codes(rng, 6, 4);
    const MatD s = testutil::random_similarity(rng, 6);
    const LossParams p;
    ASSERT_FALSE(testutil::degenerate_loss_instance(hi, ht, s, p));
    for (const GradMask mask : {GradMask::Both, GradMask::ImgOnly, GradMask::TxtOnly})
        EXPECT_LT(testutil::max_grad_rel_err(hi, ht, s, p, mask), 1e-4);
}

TEST(TotalLoss, GradientsMatchFiniteDifferencesInAlternateForms) {
    Rng rng(12);
    const MatD hi = testutil::random_codes(rng, 5, 4);
    const MatD ht = testutil::random_codes(rng, 5, 4);
    const MatD s = testutil::random_similarity(rng, 5);

    LossParams squared;
    squared.squared_norms = true;
    EXPECT_LT(testutil::max_grad_rel_err(hi, ht, s, squared, GradMask::Both), 1e-4);

    LossParams trace;
    trace.coexist_form = CoexistForm::TraceAbs;
    EXPECT_LT(testutil::max_grad_rel_err(hi, ht, s, trace, GradMask::Both), 1e-4);

    LossParams weighted;
    weighted.lambda1 = 0.7;
    weighted.lambda2 = 1.3;
    EXPECT_LT(testutil::max_grad_rel_err(hi, ht, s, weighted, GradMask::Both), 1e-4);
}

TEST(TotalLoss, DecompositionHoldsExactly) {
    Rng rng(13);
    const MatD hi = testutil::random_codes(rng, 5, 4);
    const MatD ht = testutil::random_codes(rng, 5, 4);
    const MatD s = testutil::random_similarity(rng, 5);
    LossParams p;
    p.lambda1 = 0.7;
    p.lambda2 = 1.3;
    const LossBreakdown bd = total_loss_and_grads(hi, ht, s, p);
    EXPECT_EQ(bd.total, bd.l_c + p.lambda1 * bd.l_g + p.lambda2 * bd.l_i);
    EXPECT_GE(bd.l_c, 0.0);
    EXPECT_GE(bd.l_g, 0.0);
    EXPECT_GE(bd.l_i, 0.0);
}

TEST(TotalLoss, RowScaleInvarianceOfCosineTerms) {
    Rng rng(14);
    MatD hi = testutil::random_codes(rng, 5, 4);
    const MatD ht = testutil::random_codes(rng, 5, 4);
    const MatD s = testutil::random_similarity(rng, 5);
    const LossParams p;
    const LossBreakdown before = total_loss_and_grads(hi, ht, s, p);
    for (std::size_t j = 0; j < 4; ++j) hi(2, j) *= 3.0;
    const LossBreakdown after = total_loss_and_grads(hi, ht, s, p);
    EXPECT_NEAR(after.l_c, before.l_c, 1e-10);
    EXPECT_NEAR(after.l_g, before.l_g, 1e-10);
    EXPECT_NEAR(after.l_i, before.l_i, 1e-10);
    EXPECT_NEAR(after.total, before.total, 1e-10);
}

TEST(TotalLoss, AblationFlagsDropTermsFromTotalAndGradients) {
    Rng rng(15);
    const MatD hi = testutil::random_codes(rng, 5, 4);
    const MatD ht = testutil::random_codes(rng, 5, 4);
    const MatD s = testutil::random_similarity(rng, 5);

    LossParams graph_only;
    graph_only.include_coexist = false;
    graph_only.include_inter = false;
    const LossBreakdown gl = total_loss_and_grads(hi, ht, s, graph_only);
    EXPECT_EQ(gl.l_c, 0.0);
    EXPECT_EQ(gl.l_i, 0.0);
    EXPECT_EQ(gl.total, graph_only.lambda1 * gl.l_g);
    EXPECT_LT(testutil::max_grad_rel_err(hi, ht, s, graph_only, GradMask::Both), 1e-4);

    LossParams no_inter;
    no_inter.include_inter = false;
    const LossBreakdown glcl = total_loss_and_grads(hi, ht, s, no_inter);
    EXPECT_EQ(glcl.l_i, 0.0);
    EXPECT_GT(glcl.l_c, 0.0);
    EXPECT_EQ(glcl.total, glcl.l_c + no_inter.lambda1 * glcl.l_g);
    EXPECT_LT(testutil::max_grad_rel_err(hi, ht, s, no_inter, GradMask::Both), 1e-4);
}

TEST(TotalLoss, ValidatesParameters) {
    LossParams p;
    p.lambda1 = -0.1;
    EXPECT_THROW(validate_loss_params(p), Error);
    p.lambda1 = 1.0;
    p.eps = 0.0;
    EXPECT_THROW(validate_loss_params(p), Error);

    Rng rng(16);
    const MatD hi = testutil::random_codes(rng, 4, 3);
    const MatD ht = testutil::random_codes(rng, 3, 3);
    const MatD s = testutil::random_similarity(rng, 4);
    EXPECT_THROW(total_loss_and_grads(hi, ht, s, LossParams{}), Error);
}
