#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace moce;

namespace {

struct Fitted {
    Dataset data;
    LassoPath path;
    LassoFit fit;
};

Fitted fitted_instance(std::uint64_t seed, Index n, Index p, Index signals, double lambda_fraction)
{
    Rng rng(seed);
    const Matrix x = oracle::gaussian_matrix(rng, n, p);
    Vector beta = Vector::Zero(p);
    for (Index j = 0; j < signals; ++j) beta(j) = 0.5 + 0.1 * static_cast<double>(j);
    const Vector y = x * beta + 0.5 * oracle::gaussian_vector(rng, n);
    Fitted f;
    f.data = standardize(x, y, ColumnScaling::unit_variance);
    f.path = lasso_path(f.data, 100);
    f.fit = fit_lasso(f.data, lambda_fraction * f.path.lambda_max());
    return f;
}

bool contains(const IndexSet& s, Index j) { return std::binary_search(s.begin(), s.end(), j); }

} // namespace

TEST(LambdaS, FormulaValues)
{
    EXPECT_NEAR(lambda_s(2, 1), 1.1774100225154747, 1e-14);
    EXPECT_NEAR(lambda_s(200, 200), 0.016276, 5e-7);
    EXPECT_DOUBLE_EQ(lambda_s(300, 80), 2.0 * lambda_s(300, 160));
    EXPECT_THROW(lambda_s(1, 10), InvalidArgument);
    EXPECT_THROW(lambda_s(10, 0), InvalidArgument);
}

TEST(LambdaA, FormulaValues)
{
    EXPECT_DOUBLE_EQ(lambda_a(0, 100, 200, 8.0), 8.0 * lambda_s(200, 100));
    EXPECT_DOUBLE_EQ(lambda_a(4, 100, 200, 8.0), 8.0 * lambda_s(200, 100));
    EXPECT_NEAR(lambda_a(4, 100, 200, 8.0), 0.260424, 1e-5);  // quoted value rounds lambda_s first
    EXPECT_NEAR(lambda_a(9, 50, 300, 12.0) / lambda_a(9, 50, 300, 4.0), 3.0, 1e-15);
    // 1/sqrt(a n) arm
    EXPECT_DOUBLE_EQ(lambda_a(400, 100, 200, 4.0), 4.0 / 200.0);
    EXPECT_THROW(lambda_a(1, 100, 200, 3.9), InvalidArgument);
    EXPECT_THROW(lambda_a(1, 100, 200, 12.5), InvalidArgument);
    EXPECT_THROW(lambda_a(-1, 100, 200, 8.0), InvalidArgument);
}

TEST(ExpandedSize, BoundariesAndExactArithmetic)
{
    bool clamped = false;
    EXPECT_EQ(expanded_size(200, 1.0, 1.0, &clamped), 1);
    EXPECT_TRUE(clamped);
    EXPECT_EQ(expanded_size(200, 0.25, 1.0, &clamped), 150);
    EXPECT_FALSE(clamped);
    EXPECT_EQ(expanded_size(200, 0.999, 1.0, &clamped), 1);
    EXPECT_TRUE(clamped);
    EXPECT_EQ(expanded_size(200, 2.0, 1.0), 1);
    EXPECT_EQ(expanded_size(200, 0.0, 1.0, &clamped), 199);  // capped at n - 1
    EXPECT_TRUE(clamped);
    EXPECT_THROW(expanded_size(200, 0.5, 0.0), InvalidArgument);
}

TEST(ExpandedSize, NonIncreasingInLambdaA)
{
    Index prev = expanded_size(120, 0.0, 0.7);
    for (int k = 1; k <= 200; ++k) {
        const Index cur = expanded_size(120, 0.7 * k / 190.0, 0.7);
        EXPECT_LE(cur, prev);
        EXPECT_GE(cur, 1);
        EXPECT_LE(cur, 119);
        prev = cur;
    }
}

TEST(SelectTau, TauAFormula)
{
    Rng rng(1);
    const Matrix x = oracle::gaussian_matrix(rng, 200, 200);
    const auto t = select_tau(x, {0, 1, 2});
    EXPECT_NEAR(t.tau_a, 1.1510e-10, 2e-14);
    EXPECT_FALSE(t.tau_c_degenerate);
}

TEST(SelectTau, UnitSpectraGiveBaseLevel)
{
    // orthogonal columns with S = I
    Rng rng(2);
    const Index n = 12, p = 6;
    Eigen::HouseholderQR<Matrix> qr(oracle::gaussian_matrix(rng, n, p));
    const Matrix x = std::sqrt(static_cast<double>(n)) * Matrix(qr.householderQ() * Matrix::Identity(n, p));
    EXPECT_NEAR(select_tau(x, {1, 4}).tau_c, 1e-4, 1e-16);
}

TEST(SelectTau, MatchesDenseBlockSpectra)
{
    Rng rng(3);
    const Matrix x = oracle::gaussian_matrix(rng, 15, 40);
    const IndexSet a = oracle::random_subset(rng, 40, 9);
    const Matrix s = oracle::covariance(x);
    const IndexSet c = detail::complement(a, 40);
    Matrix saa(9, 9), scc(31, 31);
    for (Index i = 0; i < 9; ++i)
        for (Index j = 0; j < 9; ++j) saa(i, j) = s(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
    for (Index i = 0; i < 31; ++i)
        for (Index j = 0; j < 31; ++j) scc(i, j) = s(c[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(j)]);
    const double ra = Eigen::SelfAdjointEigenSolver<Matrix>(saa).eigenvalues().maxCoeff();
    const double rc = Eigen::SelfAdjointEigenSolver<Matrix>(scc).eigenvalues().maxCoeff();
    EXPECT_NEAR(select_tau(x, a).tau_c, 1e-4 * std::sqrt(ra * rc), 1e-16);
}

TEST(SelectTau, ZeroBlockFallsBack)
{
    Rng rng(4);
    Matrix x = oracle::gaussian_matrix(rng, 10, 5);
    x.col(2).setZero();
    const auto t = select_tau(x, {2});
    EXPECT_TRUE(t.tau_c_degenerate);
    EXPECT_EQ(t.tau_c, 1e-4);
}

TEST(BuildExpandedModel, InvariantsOnRandomInstances)
{
    for (std::uint64_t s = 0; s < 12; ++s) {
        const auto f = fitted_instance(100 + s, 60, 90, 4, 0.1 + 0.05 * static_cast<double>(s));
        const auto m = build_expanded_model(f.path, f.fit, f.data, 8.0, 7 + s);
        EXPECT_EQ(static_cast<Index>(m.indices.size()), m.a_tilde);
        EXPECT_LT(m.a_tilde, f.data.n());
        EXPECT_TRUE(detail::is_sorted_unique(m.indices));

        const Vector at_s = fit_lasso(f.data, m.lambda_s).beta;
        for (Index j : m.injected) {
            EXPECT_EQ(at_s(j), 0.0);
            EXPECT_FALSE(contains(m.selected, j));
        }
        if (!m.truncated)
            for (Index j : f.fit.active_set) EXPECT_TRUE(contains(m.indices, j));
        if (static_cast<Index>(m.selected.size()) == m.a_tilde) EXPECT_TRUE(m.injected.empty());
        EXPECT_GT(m.tau_a, 0.0);
        EXPECT_LT(m.tau_a, m.tau_c);
    }
}

TEST(BuildExpandedModel, DeterministicGivenSeed)
{
    const auto f = fitted_instance(5, 60, 90, 4, 0.2);
    const auto a = build_expanded_model(f.path, f.fit, f.data, 8.0, 42);
    const auto b = build_expanded_model(f.path, f.fit, f.data, 8.0, 42);
    EXPECT_EQ(a.indices, b.indices);
    EXPECT_EQ(a.injected, b.injected);
    // the seed moves only the injected draws
    const auto c = build_expanded_model(f.path, f.fit, f.data, 8.0, 43);
    EXPECT_EQ(a.a_tilde, c.a_tilde);
    EXPECT_EQ(a.selected, c.selected);
}

TEST(BuildExpandedModel, TruncatesByEntryOrder)
{
    // A small lambda fills the active set; C = 12 shrinks the target size.
    const auto f = fitted_instance(6, 40, 60, 10, 0.01);
    const auto m = build_expanded_model(f.path, f.fit, f.data, 12.0, 1);
    ASSERT_GT(m.selected.size(), static_cast<std::size_t>(m.a_tilde)) << "instance does not exercise truncation";
    EXPECT_TRUE(m.truncated);
    EXPECT_TRUE(m.injected.empty());
    // kept members all enter the path no later than any dropped member
    std::vector<Index> rank(60);
    for (std::size_t r = 0; r < f.path.entry_order.size(); ++r) rank[static_cast<std::size_t>(f.path.entry_order[r])] = static_cast<Index>(r);
    Index worst_kept = -1, best_dropped = 1 << 30;
    for (Index j : m.selected) {
        const Index r = rank[static_cast<std::size_t>(j)];
        if (contains(m.indices, j)) worst_kept = std::max(worst_kept, r);
        else best_dropped = std::min(best_dropped, r);
    }
    EXPECT_LT(worst_kept, best_dropped);
}

TEST(BuildExpandedModel, ShortPoolFilledByEntryOrder)
{
    // p below n: the zero set at lambda_s is small.
    bool exercised = false;
    for (std::uint64_t s = 0; s < 20 && !exercised; ++s) {
        const auto f = fitted_instance(200 + s, 40, 30, 3, 0.3);
        const auto m = build_expanded_model(f.path, f.fit, f.data, 4.0, s);
        if (m.filled_by_order.empty()) continue;
        exercised = true;
        EXPECT_EQ(static_cast<Index>(m.indices.size()), m.a_tilde);
        for (Index j : m.filled_by_order) {
            EXPECT_FALSE(contains(m.injected, j));
            EXPECT_FALSE(contains(m.selected, j));
        }
    }
    EXPECT_TRUE(exercised) << "no instance exercised the short-pool branch";
}

TEST(BuildExpandedModel, FalseAndTrueNegatives)
{
    ExpandedModel m;
    m.indices = {1, 3, 5};
    EXPECT_EQ(m.false_negatives({0, 3, 6}), (IndexSet{0, 6}));
    EXPECT_EQ(m.true_negatives({0, 3, 6}, 8), (IndexSet{2, 4, 7}));
    EXPECT_EQ(m.complement(6), (IndexSet{0, 2, 4}));
}

TEST(SignalStrength, CountsAgainstThreshold)
{
    Vector b(5);
    b << 0.0, 0.05, 0.2, -0.3, 0.01;
    const auto s = signal_strength(b, 0.1, 1.0);
    EXPECT_EQ(s.signal_set, (IndexSet{2, 3}));
    // 0 + 0.05 + 0.1 + 0.1 + 0.01 = 0.26 -> 3 units of 0.1
    EXPECT_EQ(s.a_star, 3);
}
