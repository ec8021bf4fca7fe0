// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The fdx-hbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "test_util.hpp"

namespace fdx {
namespace {

using testing::random_matrix;

double reconstruction_residual(const ComplexMatrix &a, const SvdResult &r) {
    ComplexMatrix rec = r.u * r.s.cast<cplx>().asDiagonal() * r.v.adjoint();
    return (a - rec).norm();
}

TEST(Svd, IdentityHasUnitSingularValues) {
    SvdResult r = svd(ComplexMatrix::Identity(2, 2));
    EXPECT_NEAR(r.s(0), 1.0, 1e-15);
    EXPECT_NEAR(r.s(1), 1.0, 1e-15);
    EXPECT_LE((r.u * r.v.adjoint() - ComplexMatrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(Svd, DiagonalIsSortedDescending) {
    ComplexMatrix a = ComplexMatrix::Zero(2, 2);
    a(0, 0) = 2.0;
    a(1, 1) = 3.0;
    SvdResult r = svd(a);
    EXPECT_NEAR(r.s(0), 3.0, 1e-14);
    EXPECT_NEAR(r.s(1), 2.0, 1e-14);
}

TEST(Svd, RandomTallMatrixReconstructs) {
    Rng rng(11);
    ComplexMatrix a = random_matrix(rng, 3, 2);
    SvdResult r = svd(a);
    EXPECT_LE(reconstruction_residual(a, r), 1e-10 * std::max(1.0, a.norm()));
}

TEST(Svd, RandomShapesReconstructAndAreOrthonormal) {
    Rng rng(12);
    for (int trial = 0; trial < 1000; ++trial) {
        // Mostly small shapes with an occasional large one keeps this quick.
        int hi = trial % 50 == 0 ? 64 : 12;
        auto rows = rng.uniform_int(1, hi);
        auto cols = rng.uniform_int(1, hi);
        ComplexMatrix a = random_matrix(rng, rows, cols);
        SvdResult r = svd(a);
        ASSERT_LE(reconstruction_residual(a, r), 1e-10 * std::max(1.0, a.norm())) << rows << "x" << cols;
        Eigen::Index k = r.s.size();
        ASSERT_LE((r.u.adjoint() * r.u - ComplexMatrix::Identity(k, k)).norm(), 1e-10);
        ASSERT_LE((r.v.adjoint() * r.v - ComplexMatrix::Identity(k, k)).norm(), 1e-10);
        for (Eigen::Index i = 1; i < k; ++i)
            ASSERT_GE(r.s(i - 1), r.s(i));
        ASSERT_GE(r.s(k - 1), 0.0);
    }
}

TEST(Svd, NonFiniteInputIsANumericFailure) {
    ComplexMatrix a = ComplexMatrix::Identity(2, 2);
    a(0, 1) = std::numeric_limits<double>::quiet_NaN();
    try {
        svd(a);
        FAIL() << "expected an error";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::numeric_failure);
    }
}

TEST(SigmaMaxSq, ZeroMatrix) { EXPECT_EQ(sigma_max_sq(ComplexMatrix::Zero(3, 2)), 0.0); }

TEST(SigmaMaxSq, RankOneColumn) {
    ComplexMatrix a(4, 1);
    a << 1.0, cplx(0, 1), -1.0, cplx(0, -1);
    EXPECT_NEAR(sigma_max_sq(a), 4.0, 1e-13);
}

TEST(SigmaMaxSq, MatchesRandomDirectionSearch) {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        ComplexMatrix a = random_matrix(rng, 3, 3);
        double s = sigma_max_sq(a);
        double best = 0.0;
        for (int k = 0; k < 10000; ++k) {
            ComplexVector x = rng.complex_normal_matrix(3, 1);
            x.normalize();
            best = std::max(best, (a * x).squaredNorm());
        }
        // Random directions can only under-estimate; refinement must agree.
        EXPECT_LE(best, s * (1.0 + 1e-12));
        EXPECT_GE(best, 0.9 * s);
        EXPECT_NEAR(testing::power_sigma_max_sq(a, rng), s, 1e-6 * s);
    }
}

TEST(TopEigen, ClosedFormAgreesWithIterativeSolver) {
    Rng rng(14);
    for (int trial = 0; trial < 2000; ++trial) {
        int n = 1 + trial % 4;
        ComplexMatrix a = random_matrix(rng, n, n);
        ComplexMatrix h = a * a.adjoint();
        if (trial % 7 == 0 && n == 2)
            h(0, 1) = h(1, 0) = 0.0;
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
        TopEigen t = top_eigen(h);
        ASSERT_NEAR(t.value, es.eigenvalues()(n - 1), 1e-12 * h.norm());
        ASSERT_NEAR(top_eigenvalue(h), t.value, 1e-12 * h.norm());
        ASSERT_NEAR(t.vector.norm(), 1.0, 1e-12);
        ASSERT_LE((h * t.vector - t.value * t.vector).norm(), 1e-10 * h.norm());
    }
}

// Independent water level: plain bisection on the budget equation.
std::vector<double> reference_water_fill(const std::vector<double> &g, double budget) {
    double lo = 0.0, hi = budget + 1.0 / *std::max_element(g.begin(), g.end());
    for (double x : g)
        if (x > 0.0)
            hi = std::max(hi, budget + 1.0 / x);
    auto used = [&](double mu) {
        double s = 0.0;
        for (double x : g)
            if (x > 0.0)
                s += std::max(0.0, mu - 1.0 / x);
        return s;
    };
    for (int i = 0; i < 300; ++i) {
        double mid = 0.5 * (lo + hi);
        (used(mid) < budget ? lo : hi) = mid;
    }
    std::vector<double> p;
    for (double x : g)
        p.push_back(x > 0.0 ? std::max(0.0, lo - 1.0 / x) : 0.0);
    return p;
}

TEST(WaterFill, SymmetricGainsSplitEvenly) {
    std::vector<double> g{1.0, 1.0};
    auto p = water_fill(g, 1.0);
    EXPECT_NEAR(p[0], 0.5, 1e-12);
    EXPECT_NEAR(p[1], 0.5, 1e-12);
}

TEST(WaterFill, NegligibleGainGetsNothing) {
    std::vector<double> g{1.0, 1e-12};
    auto p = water_fill(g, 1.0);
    EXPECT_NEAR(p[0], 1.0, 1e-12);
    EXPECT_EQ(p[1], 0.0);
}

TEST(WaterFill, UnequalGainsMatchReference) {
    std::vector<double> g{4.0, 1.0};
    auto p = water_fill(g, 1.0);
    auto ref = reference_water_fill(g, 1.0);
    EXPECT_NEAR(p[0], ref[0], 1e-10);
    EXPECT_NEAR(p[1], ref[1], 1e-10);
    EXPECT_NEAR(p[0], 0.875, 1e-12);
    EXPECT_NEAR(p[1], 0.125, 1e-12);
}

TEST(WaterFill, KktHoldsOnRandomInstances) {
    Rng rng(15);
    for (int trial = 0; trial < 1000; ++trial) {
        auto n = rng.uniform_int(1, 8);
        std::vector<double> g;
        for (int i = 0; i < n; ++i)
            g.push_back(std::pow(10.0, rng.uniform(-3.0, 3.0)) * (rng.uniform() < 0.1 ? 0.0 : 1.0));
        if (*std::max_element(g.begin(), g.end()) == 0.0)
            g[0] = 1.0;
        double budget = std::pow(10.0, rng.uniform(-2.0, 2.0));
        auto p = water_fill(g, budget);
        ASSERT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), budget, 1e-9 * std::max(1.0, budget));
        double mu = -1.0;
        for (int i = 0; i < n; ++i) {
            ASSERT_GE(p[i], 0.0);
            if (p[i] > 0.0) {
                double level = p[i] + 1.0 / g[i];
                if (mu < 0.0)
                    mu = level;
                ASSERT_NEAR(level, mu, 1e-9 * mu);
            }
        }
        // Inactive channels sit above the water level.
        for (int i = 0; i < n; ++i)
            if (p[i] == 0.0 && g[i] > 0.0) {
                ASSERT_GE(1.0 / g[i], mu * (1.0 - 1e-9));
            }
        auto ref = reference_water_fill(g, budget);
        for (int i = 0; i < n; ++i)
            ASSERT_NEAR(p[i], ref[i], 1e-8 * std::max(1.0, budget));
    }
}

TEST(WaterFill, AllZeroGainsAreDegenerate) {
    std::vector<double> g{0.0, 0.0};
    try {
        water_fill(g, 1.0);
        FAIL() << "expected an error";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate_input);
    }
}

TEST(GramInvSqrt, OrthonormalColumnsGiveIdentity) {
    Rng rng(16);
    ComplexMatrix w = testing::random_orthonormal(rng, 6, 3);
    EXPECT_LE((gram_inv_sqrt(w) - ComplexMatrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(GramInvSqrt, ScaledUnitColumn) {
    ComplexMatrix w = ComplexMatrix::Zero(3, 1);
    w(1, 0) = 2.0;
    ComplexMatrix b = gram_inv_sqrt(w);
    ASSERT_EQ(b.rows(), 1);
    EXPECT_NEAR(b(0, 0).real(), 0.5, 1e-15);
    EXPECT_NEAR(b(0, 0).imag(), 0.0, 1e-15);
}

TEST(GramInvSqrt, WhitensRandomFullRankMatrices) {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        auto cols = rng.uniform_int(1, 6);
        auto rows = cols + rng.uniform_int(0, 6);
        ComplexMatrix w = random_matrix(rng, rows, cols);
        ComplexMatrix b = gram_inv_sqrt(w);
        ComplexMatrix id = b * (w.adjoint() * w) * b;
        ASSERT_LE((id - ComplexMatrix::Identity(cols, cols)).norm(), 1e-9);
        ASSERT_LE((b - b.adjoint()).norm(), 1e-12 * b.norm());
    }
}

TEST(GramInvSqrt, SingularGramIsRankDeficient) {
    ComplexMatrix w = ComplexMatrix::Zero(4, 2);
    w(0, 0) = w(0, 1) = 1.0;
    try {
        gram_inv_sqrt(w);
        FAIL() << "expected an error";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::rank_deficient);
    }
}

TEST(Log2Det, MatchesEigenvalueSum) {
    Rng rng(18);
    for (int trial = 0; trial < 100; ++trial) {
        ComplexMatrix a = random_matrix(rng, 4, 3);
        ComplexMatrix m = ComplexMatrix::Identity(4, 4) + 0.7 * a * a.adjoint();
        EXPECT_NEAR(log2det_hpd(m), testing::log2det_eig(a, 0.7), 1e-10);
    }
}

TEST(Units, DecibelConversions) {
    EXPECT_DOUBLE_EQ(db_to_linear(20.0), 100.0);
    EXPECT_DOUBLE_EQ(linear_to_db(1000.0), 30.0);
    EXPECT_DOUBLE_EQ(dbm_to_watts(30.0), 1.0);
    EXPECT_NEAR(dbm_to_watts(-85.0), 3.1622776601683795e-12, 1e-24);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        ASSERT_EQ(a.next_u64(), b.next_u64());
        ASSERT_EQ(a.normal(), b.normal());
        ASSERT_EQ(a.complex_normal(), b.complex_normal());
        ASSERT_EQ(a.uniform_int(-3, 9), b.uniform_int(-3, 9));
    }
}

TEST(Rng, DifferentSeedsDiffer) {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        same += a.next_u64() == b.next_u64();
    EXPECT_LT(same, 2);
}

TEST(Rng, UniformIntCoversInclusiveRange) {
    Rng rng(3);
    std::vector<int> hits(15);
    for (int i = 0; i < 20000; ++i) {
        auto v = rng.uniform_int(1, 15);
        ASSERT_GE(v, 1);
        ASSERT_LE(v, 15);
        ++hits[static_cast<std::size_t>(v - 1)];
    }
    for (int h : hits)
        EXPECT_NEAR(h, 20000.0 / 15, 200.0);
}

TEST(Rng, ComplexNormalHasUnitPower) {
    Rng rng(4);
    const int n = 200000;
    double power = 0.0, re = 0.0, im = 0.0, cross = 0.0;
    for (int i = 0; i < n; ++i) {
        cplx z = rng.complex_normal();
        power += std::norm(z);
        re += z.real() * z.real();
        im += z.imag() * z.imag();
        cross += z.real() * z.imag();
    }
    EXPECT_NEAR(power / n, 1.0, 0.01);
    EXPECT_NEAR(re / n, 0.5, 0.01);
    EXPECT_NEAR(im / n, 0.5, 0.01);
    EXPECT_NEAR(cross / n, 0.0, 0.01);
}

TEST(Rng, UniformStaysInHalfOpenInterval) {
    Rng rng(5);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

} // namespace
} // namespace fdx
