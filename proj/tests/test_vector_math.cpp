#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "recall/vector_math.hpp"
#include "support.hpp"

using namespace recall;

TEST(Cosine, Examples)
{
    EXPECT_DOUBLE_EQ(cosine_similarity(Vector{1, 0}, Vector{1, 0}), 1.0);
    EXPECT_DOUBLE_EQ(cosine_similarity(Vector{1, 0}, Vector{0, 1}), 0.0);
    // (3*4 + 4*3) / (5 * 5)
    EXPECT_NEAR(cosine_similarity(Vector{3, 4}, Vector{4, 3}), 24.0 / 25.0, 1e-15);
    EXPECT_NEAR(cosine_similarity(Vector{1, 2}, Vector{-1, -2}), -1.0, 1e-15);
}

TEST(Cosine, Errors)
{
    EXPECT_THROW(cosine_similarity(Vector{1, 0}, Vector{1, 0, 0}), ShapeError);
    EXPECT_THROW(cosine_similarity(Vector{}, Vector{}), ShapeError);
    EXPECT_THROW(cosine_similarity(Vector{0, 0}, Vector{1, 0}), DomainError);
    EXPECT_THROW(cosine_similarity(Vector{1, 0}, Vector{1e-13, 0}), DomainError);
}

TEST(Cosine, SelfSymmetryScaling)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto u = fixtures::random_vector(rng, 1 + trial % 17);
        const auto v = fixtures::random_vector(rng, u.size());
        EXPECT_NEAR(cosine_similarity(u, u), 1.0, 1e-12);
        EXPECT_EQ(cosine_similarity(u, v), cosine_similarity(v, u));
        Vector su = u;
        const double a = scale(rng);
        for (auto& x : su) {
            x *= a;
        }
        EXPECT_NEAR(cosine_similarity(su, v), cosine_similarity(u, v), 1e-12);
        const double s = cosine_similarity(u, v);
        EXPECT_LE(std::abs(s), 1.0 + 1e-12);
    }
}

TEST(Cosine, GradientMatchesCentralDifferences)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto u = fixtures::random_vector(rng, 7);
        const auto v = fixtures::random_vector(rng, 7);
        Vector g(7, 0.0);
        accumulate_cosine_grad(u, v, 2.5, g);
        for (std::size_t i = 0; i < u.size(); ++i) {
            Vector up = u, dn = u;
            up[i] += 1e-6;
            dn[i] -= 1e-6;
            const double num = 2.5 * (cosine_similarity(up, v) - cosine_similarity(dn, v)) / 2e-6;
            EXPECT_NEAR(g[i], num, 1e-7);
        }
    }
}

TEST(VectorMath, DotNormConcat)
{
    EXPECT_DOUBLE_EQ(dot(Vector{1, 2, 3}, Vector{4, 5, 6}), 32.0);
    EXPECT_DOUBLE_EQ(norm(Vector{3, 4}), 5.0);
    EXPECT_THROW(dot(Vector{1}, Vector{1, 2}), ShapeError);
    EXPECT_EQ(concat(Vector{1, 2}, Vector{3}), (Vector{1, 2, 3}));
    EXPECT_TRUE(all_finite(Vector{1, -2}));
    EXPECT_FALSE(all_finite(Vector{1, NAN}));
    EXPECT_FALSE(all_finite(Vector{INFINITY}));
}
