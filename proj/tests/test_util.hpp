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

// Generators and independent reference computations shared by the tests.

#pragma once

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "fdx/fdx.hpp"

namespace fdx::testing {

inline ComplexMatrix random_matrix(Rng &rng, Eigen::Index rows, Eigen::Index cols) {
    return rng.complex_normal_matrix(rows, cols);
}

/// Matrix with orthonormal columns.
inline ComplexMatrix random_orthonormal(Rng &rng, Eigen::Index rows, Eigen::Index cols) {
    ComplexMatrix a = random_matrix(rng, rows, cols);
    Eigen::HouseholderQR<ComplexMatrix> qr(a);
    return qr.householderQ() * ComplexMatrix::Identity(rows, cols);
}

/// Uniform draw from the Frobenius ball of radius `radius`.
inline ComplexMatrix random_in_ball(Rng &rng, Eigen::Index rows, Eigen::Index cols, double radius = 1.0) {
    ComplexMatrix a = random_matrix(rng, rows, cols);
    double u = rng.uniform();
    return a * (radius * std::pow(u, 1.0 / (2.0 * static_cast<double>(rows * cols))) / a.norm());
}

/// Largest squared singular value by power iteration on A*A, started from
/// the best of a few random directions.
inline double power_sigma_max_sq(const ComplexMatrix &a, Rng &rng, int starts = 64, int iters = 2000) {
    if (a.norm() == 0.0)
        return 0.0;
    ComplexMatrix g = a.adjoint() * a;
    ComplexVector best;
    double best_val = -1.0;
    for (int s = 0; s < starts; ++s) {
        ComplexVector x = rng.complex_normal_matrix(a.cols(), 1);
        x.normalize();
        double v = (a * x).squaredNorm();
        if (v > best_val) {
            best_val = v;
            best = x;
        }
    }
    ComplexVector x = best;
    double val = best_val;
    for (int it = 0; it < iters; ++it) {
        ComplexVector y = g * x;
        double n = y.norm();
        if (n == 0.0)
            break;
        x = y / n;
        double next = (a * x).squaredNorm();
        if (std::abs(next - val) <= 1e-15 * next) {
            val = next;
            break;
        }
        val = next;
    }
    return val;
}

/// log2 det(I + c A A*) through an eigen decomposition instead of Cholesky.
inline double log2det_eig(const ComplexMatrix &a, double c) {
    ComplexMatrix m = ComplexMatrix::Identity(a.rows(), a.rows()) + c * a * a.adjoint();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        acc += std::log2(es.eigenvalues()(i));
    return acc;
}

/// Greedy beam acquisition by repeated linear scans, no sorting.
struct ReferencePick {
    std::vector<std::vector<int>> tx, rx;
};

inline bool ref_better(double a, int ta, int ra, double b, int tb, int rb) {
    if (a != b)
        return a > b;
    return ta != tb ? ta < tb : ra < rb;
}

inline ReferencePick reference_acquire(const ComplexMatrix &m, int l, int k) {
    const int n_rx = static_cast<int>(m.rows()), n_tx = static_cast<int>(m.cols());
    ReferencePick out;
    std::vector<std::vector<char>> taken(n_tx, std::vector<char>(n_rx, 0));
    for (int c = 0; c < k; ++c) {
        // c-th strongest entry overall.
        int bt = -1, br = -1;
        for (int t = 0; t < n_tx; ++t)
            for (int r = 0; r < n_rx; ++r)
                if (!taken[t][r] && (bt < 0 || ref_better(std::abs(m(r, t)), t, r, std::abs(m(br, bt)), bt, br))) {
                    bt = t;
                    br = r;
                }
        taken[bt][br] = 1;
        std::vector<int> ts{bt}, rs{br};
        while (static_cast<int>(ts.size()) < l) {
            int nt = -1, nr = -1;
            for (int t = 0; t < n_tx; ++t) {
                if (std::find(ts.begin(), ts.end(), t) != ts.end())
                    continue;
                for (int r = 0; r < n_rx; ++r) {
                    if (std::find(rs.begin(), rs.end(), r) != rs.end())
                        continue;
                    if (nt < 0 || ref_better(std::abs(m(r, t)), t, r, std::abs(m(nr, nt)), nt, nr)) {
                        nt = t;
                        nr = r;
                    }
                }
            }
            ts.push_back(nt);
            rs.push_back(nr);
        }
        out.tx.push_back(ts);
        out.rx.push_back(rs);
    }
    return out;
}

/// Random single-pair instance with full matrices kept for reporting.
struct PairInstance {
    ComplexMatrix h_eff, w_rf_j, h_ii, f_rf, w_rf_i;
    double snr = 1.0;
    int ns = 1;

    PairContext context() const { return PairContext::from_beams(h_eff, w_rf_j, h_ii, f_rf, w_rf_i, snr, ns); }
};

inline PairInstance random_pair(Rng &rng, int n, int l, int ns, double si_scale = 1.0) {
    PairInstance p;
    p.h_eff = random_matrix(rng, l, l) * std::sqrt(static_cast<double>(n));
    p.w_rf_j = random_orthonormal(rng, n, l) * std::sqrt(static_cast<double>(n));
    p.h_ii = random_matrix(rng, n, n) * si_scale;
    p.f_rf = random_orthonormal(rng, n, l) * std::sqrt(static_cast<double>(l));
    p.w_rf_i = random_orthonormal(rng, n, l) * std::sqrt(static_cast<double>(n));
    p.snr = db_to_linear(rng.uniform(-10.0, 10.0));
    p.ns = ns;
    return p;
}

/// Best mutual information over `samples` random precoders pushed onto the
/// feasible boundary by the final projection.
inline double random_search_info(const PairContext &ctx, const SaturationLimits &lim, Rng &rng, int samples) {
    double best = 0.0;
    const double c = ctx.snr() / ctx.ns();
    for (int s = 0; s < samples; ++s) {
        ComplexMatrix f = final_projection(rng.complex_normal_matrix(ctx.lt(), ctx.ns()), ctx, lim);
        best = std::max(best, info_from_gram(ctx.k(), f, c));
    }
    return best;
}

/// Symbol MSE of the combiner w for y = amp h s + n, E[s s*] = I/ns,
/// E[n n*] = r_noise.
inline double symbol_mse(const ComplexMatrix &w, const ComplexMatrix &h, const ComplexMatrix &r_noise, double amp,
                         int ns) {
    const double p = 1.0 / ns;
    ComplexMatrix r_y = (amp * amp * p) * h * h.adjoint() + r_noise;
    ComplexMatrix r_ys = (amp * p) * h;
    ComplexMatrix e = p * ComplexMatrix::Identity(h.cols(), h.cols()) - w.adjoint() * r_ys - r_ys.adjoint() * w +
                      w.adjoint() * r_y * w;
    return e.trace().real();
}

/// Largest MSE reduction seen over random perturbations of w, with step
/// sizes spread over several decades.
inline double best_mse_reduction(const ComplexMatrix &w, const ComplexMatrix &h, const ComplexMatrix &r_noise,
                                 double amp, int ns, Rng &rng, int perturbations) {
    const double base = symbol_mse(w, h, r_noise, amp, ns);
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < perturbations; ++k) {
        double scale = std::pow(10.0, rng.uniform(-6.0, 0.0)) * std::max(w.norm(), 1e-12);
        ComplexMatrix d = random_matrix(rng, w.rows(), w.cols());
        d *= scale / d.norm();
        worst = std::max(worst, base - symbol_mse(w + d, h, r_noise, amp, ns));
    }
    return worst;
}

} // namespace fdx::testing
