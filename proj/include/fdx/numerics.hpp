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

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fdx/errors.hpp"

namespace fdx {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;

struct SvdResult {
    ComplexMatrix u;
    RealVector s; // descending
    ComplexMatrix v;
};

inline bool all_finite(const ComplexMatrix &a) { return a.allFinite(); }

inline void require_nonempty(const ComplexMatrix &a, const char *what) {
    if (a.rows() == 0 || a.cols() == 0)
        fail(ErrorKind::shape_mismatch, std::string(what) + ": empty matrix");
}

/// Thin SVD, A = U diag(S) V*.
inline SvdResult svd(const ComplexMatrix &a) {
    require_nonempty(a, "svd");
    if (!a.allFinite())
        fail(ErrorKind::numeric_failure, "svd: non-finite input");
    Eigen::JacobiSVD<ComplexMatrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdResult out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
    if (!out.u.allFinite() || !out.v.allFinite() || !out.s.allFinite())
        fail(ErrorKind::numeric_failure, "svd did not converge");
    return out;
}

inline RealVector singular_values(const ComplexMatrix &a) {
    require_nonempty(a, "singular_values");
    if (!a.allFinite())
        fail(ErrorKind::numeric_failure, "singular_values: non-finite input");
    Eigen::JacobiSVD<ComplexMatrix> solver(a);
    return solver.singularValues();
}

inline double sigma_max_sq(const ComplexMatrix &a) {
    RealVector s = singular_values(a);
    return s.size() ? s(0) * s(0) : 0.0;
}

/// Largest eigenvalue and unit eigenvector of a Hermitian matrix.
struct TopEigen {
    double value = 0.0;
    ComplexVector vector;
};

/// Largest eigenvalue of a Hermitian matrix; closed form up to 2x2.
inline double top_eigenvalue(const ComplexMatrix &h) {
    if (h.rows() == 1)
        return h(0, 0).real();
    if (h.rows() == 2) {
        double a = h(0, 0).real(), d = h(1, 1).real();
        double half = 0.5 * (a - d);
        return 0.5 * (a + d) + std::sqrt(half * half + std::norm(h(0, 1)));
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        fail(ErrorKind::numeric_failure, "eigendecomposition failed");
    return es.eigenvalues()(h.rows() - 1);
}

inline TopEigen top_eigen(const ComplexMatrix &h) {
    if (h.rows() == 2 && std::isfinite(h.norm())) {
        double a = h(0, 0).real(), d = h(1, 1).real();
        cplx b = h(0, 1);
        double lam = top_eigenvalue(h);
        ComplexVector v(2);
        if (a >= d)
            v << lam - d, std::conj(b);
        else
            v << b, lam - a;
        double n = v.norm();
        if (n == 0.0)
            v << 1.0, 0.0;
        else
            v /= n;
        return {lam, v};
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    if (es.info() != Eigen::Success)
        fail(ErrorKind::numeric_failure, "eigendecomposition failed");
    Eigen::Index n = h.rows();
    return {es.eigenvalues()(n - 1), es.eigenvectors().col(n - 1)};
}

/// Powers p_i = max(0, mu - 1/g_i) summing to `budget`.
inline std::vector<double> water_fill(std::span<const double> gains, double budget) {
    if (!(budget > 0.0))
        fail(ErrorKind::invalid_parameter, "water_fill: budget must be positive");
    double gmax = 0.0;
    for (double g : gains) {
        if (g < 0.0 || !std::isfinite(g))
            fail(ErrorKind::invalid_parameter, "water_fill: gains must be finite and nonnegative");
        gmax = std::max(gmax, g);
    }
    if (gmax <= 0.0)
        fail(ErrorKind::degenerate_input, "water_fill: all gains zero");

    auto filled = [&](double mu) {
        double sum = 0.0;
        for (double g : gains)
            if (g > 0.0)
                sum += std::max(0.0, mu - 1.0 / g);
        return sum;
    };
    double lo = 1.0 / gmax;
    double hi = lo + budget;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
        double mid = 0.5 * (lo + hi);
        (filled(mid) < budget ? lo : hi) = mid;
    }
    double mu = 0.5 * (lo + hi);

    // Exact water level on the active set.
    double inv_sum = 0.0;
    int active = 0;
    for (double g : gains)
        if (g > 0.0 && mu - 1.0 / g > 0.0) {
            inv_sum += 1.0 / g;
            ++active;
        }
    if (active > 0) {
        double exact = (budget + inv_sum) / active;
        bool consistent = true;
        for (double g : gains)
            if (g > 0.0 && ((exact - 1.0 / g > 0.0) != (mu - 1.0 / g > 0.0)))
                consistent = false;
        if (consistent)
            mu = exact;
    }

    std::vector<double> p(gains.size(), 0.0);
    for (std::size_t i = 0; i < gains.size(); ++i)
        if (gains[i] > 0.0)
            p[i] = std::max(0.0, mu - 1.0 / gains[i]);
    return p;
}

/// (W*W)^{-1/2}
inline ComplexMatrix gram_inv_sqrt(const ComplexMatrix &w) {
    require_nonempty(w, "gram_inv_sqrt");
    ComplexMatrix g = w.adjoint() * w;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(g);
    if (es.info() != Eigen::Success)
        fail(ErrorKind::numeric_failure, "gram_inv_sqrt: eigendecomposition failed");
    const RealVector &ev = es.eigenvalues();
    double top = ev(ev.size() - 1);
    if (!(ev(0) > 1e-13 * std::max(top, 1e-300)) || !(top > 0.0))
        fail(ErrorKind::rank_deficient, "gram_inv_sqrt: singular Gram matrix");
    RealVector d = ev.cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

/// log2 det of a Hermitian positive definite matrix.
inline double log2det_hpd(const ComplexMatrix &a) {
    Eigen::LLT<ComplexMatrix> llt(a);
    if (llt.info() != Eigen::Success)
        fail(ErrorKind::rank_deficient, "log2det: matrix not positive definite");
    const ComplexMatrix &l = llt.matrixL();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < l.rows(); ++k)
        acc += std::log2(l(k, k).real());
    return 2.0 * acc;
}

/// Hermitian inverse via Cholesky.
inline ComplexMatrix hpd_inverse(const ComplexMatrix &a) {
    Eigen::LLT<ComplexMatrix> llt(a);
    if (llt.info() != Eigen::Success)
        fail(ErrorKind::rank_deficient, "matrix not positive definite");
    return llt.solve(ComplexMatrix::Identity(a.rows(), a.cols()));
}

inline ComplexMatrix hermitian_part(const ComplexMatrix &a) { return 0.5 * (a + a.adjoint()); }

/// Re tr(A* B), the real inner product on complex matrices.
inline double real_inner(const ComplexMatrix &a, const ComplexMatrix &b) {
    return (a.conjugate().cwiseProduct(b)).sum().real();
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Seeded generator. Distribution transforms are written out here so draws
/// do not depend on the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo)
            fail(ErrorKind::invalid_parameter, "uniform_int: empty range");
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0)
            return static_cast<std::int64_t>(engine_());
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return lo + static_cast<std::int64_t>(x % span);
    }

    /// Standard normal (Box-Muller, both outputs used).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    /// CN(0, 1).
    cplx complex_normal() {
        double re = normal();
        double im = normal();
        return {re * std::sqrt(0.5), im * std::sqrt(0.5)};
    }

    ComplexMatrix complex_normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        ComplexMatrix m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r)
                m(r, c) = complex_normal();
        return m;
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace fdx
