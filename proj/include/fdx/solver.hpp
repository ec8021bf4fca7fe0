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
#include <limits>
#include <vector>

#include "fdx/codebook.hpp"
#include "fdx/constraints.hpp"
#include "fdx/numerics.hpp"

namespace fdx {

struct SolverSettings {
    double nu_min = 1e-3;
    double nu_max = 1e6;
    int n_nu = 30;
    double eps_pow = 1e-6;
    double eps_lna = 1e-6;
    double eps_adc = 1e-6;
    int max_inner_iters = 50;
    int polish_iters = 200; // ascent steps on the projected objective, 0 disables
    double inner_tol = 1e-9;
    double step_shrink = 0.5;
    double armijo_c = 1e-4;

    void validate() const {
        if (!(nu_min > 0.0) || !(nu_min < nu_max))
            fail(ErrorKind::config, "solver: need 0 < nu_min < nu_max");
        if (n_nu < 1)
            fail(ErrorKind::config, "solver: n_nu must be at least 1");
        if (!(eps_pow >= 0.0) || !(eps_lna >= 0.0) || !(eps_adc >= 0.0))
            fail(ErrorKind::config, "solver: tolerances must be nonnegative");
        if (max_inner_iters < 1 || polish_iters < 0 || !(inner_tol >= 0.0))
            fail(ErrorKind::config, "solver: bad inner iteration settings");
        if (!(step_shrink > 0.0 && step_shrink < 1.0) || !(armijo_c > 0.0 && armijo_c < 1.0))
            fail(ErrorKind::config, "solver: line-search constants must lie in (0, 1)");
    }
};

enum class SolvePath { waterfill_fast_path, penalty_bisection, shutdown };

inline const char *to_string(SolvePath p) {
    switch (p) {
    case SolvePath::waterfill_fast_path: return "waterfill";
    case SolvePath::penalty_bisection: return "penalty";
    case SolvePath::shutdown: return "shutdown";
    }
    return "unknown";
}

/// Everything the digital precoder design needs for one candidate pair.
/// The constraint products are folded into small Gram matrices up front.
class PairContext {
public:
    PairContext(ComplexMatrix h_eff, ComplexMatrix w_gram, ComplexMatrix si_tx, ComplexMatrix si_adc,
                double snr, int ns)
        : h_eff_(std::move(h_eff)), w_gram_(std::move(w_gram)), si_tx_(std::move(si_tx)),
          si_adc_(std::move(si_adc)), snr_(snr), ns_(ns) {
        if (ns_ < 1)
            fail(ErrorKind::invalid_parameter, "stream count must be positive");
        if (!(snr_ > 0.0))
            fail(ErrorKind::invalid_parameter, "snr must be positive");
        const Eigen::Index lt = h_eff_.cols();
        if (w_gram_.rows() != h_eff_.rows() || w_gram_.cols() != h_eff_.rows() ||
            si_tx_.cols() != lt || si_adc_.cols() != lt)
            fail(ErrorKind::shape_mismatch, "pair context matrices do not conform");
        if (ns_ > lt)
            fail(ErrorKind::invalid_parameter, "more streams than transmit RF chains");
        k_ = hermitian_part(h_eff_.adjoint() * hpd_inverse(w_gram_) * h_eff_);
        g_lna_ = hermitian_part(si_tx_.adjoint() * si_tx_);
        g_adc_ = hermitian_part(si_adc_.adjoint() * si_adc_);
    }

    /// Builds the context from full matrices: H_ij, H_ii and the chosen beams.
    static PairContext from_beams(const ComplexMatrix &h_eff, const ComplexMatrix &w_rf_j,
                                  const ComplexMatrix &h_ii, const ComplexMatrix &f_rf_i,
                                  const ComplexMatrix &w_rf_i, double snr, int ns) {
        ComplexMatrix si_tx = h_ii * f_rf_i;
        ComplexMatrix si_adc = w_rf_i.adjoint() * si_tx;
        return PairContext(h_eff, w_rf_j.adjoint() * w_rf_j, std::move(si_tx), std::move(si_adc), snr,
                           ns);
    }

    const ComplexMatrix &h_eff() const { return h_eff_; }
    const ComplexMatrix &w_gram() const { return w_gram_; }
    const ComplexMatrix &si_tx() const { return si_tx_; }
    const ComplexMatrix &si_adc() const { return si_adc_; }
    const ComplexMatrix &k() const { return k_; }
    const ComplexMatrix &g_lna() const { return g_lna_; }
    const ComplexMatrix &g_adc() const { return g_adc_; }
    double snr() const { return snr_; }
    int ns() const { return ns_; }
    Eigen::Index lt() const { return h_eff_.cols(); }

    double lna_value(const ComplexMatrix &f) const { return quad_max(g_lna_, f) / ns_; }
    double adc_value(const ComplexMatrix &f) const { return quad_max(g_adc_, f) / ns_; }

    static double quad_max(const ComplexMatrix &g, const ComplexMatrix &f) {
        ComplexMatrix gf = g * f;
        ComplexMatrix q = hermitian_part(f.adjoint() * gf);
        return std::max(0.0, top_eigenvalue(q));
    }

private:
    ComplexMatrix h_eff_, w_gram_, si_tx_, si_adc_;
    double snr_;
    int ns_;
    ComplexMatrix k_, g_lna_, g_adc_;
};

struct PrecoderSolution {
    ComplexMatrix f_bb;
    double objective_bits = 0.0;
    ConstraintReport report;
    SolvePath path = SolvePath::penalty_bisection;
    bool bisection_saturated = false;
    bool converged = true;
    double nu = 0.0;
};

/// log2 det(I + c F* K F) with K = h* (W*W)^{-1} h and c = snr/ns.
inline double info_from_gram(const ComplexMatrix &k, const ComplexMatrix &f, double c) {
    if (f.cols() == 0)
        return 0.0;
    ComplexMatrix m = ComplexMatrix::Identity(f.cols(), f.cols()) + c * hermitian_part(f.adjoint() * k * f);
    return std::max(0.0, log2det_hpd(m));
}

inline double mutual_info_ij(const ComplexMatrix &h_eff, const ComplexMatrix &f_bb, double snr, int ns,
                             const ComplexMatrix &w_gram) {
    if (h_eff.cols() != f_bb.rows() || w_gram.rows() != h_eff.rows() || w_gram.cols() != h_eff.rows())
        fail(ErrorKind::shape_mismatch, "mutual_info_ij: shapes do not conform");
    ComplexMatrix k = hermitian_part(h_eff.adjoint() * hpd_inverse(w_gram) * h_eff);
    return info_from_gram(k, f_bb, snr / ns);
}

struct Hinges {
    double c_pow = 0.0;
    double c_lna = 0.0;
    double c_adc = 0.0;
};

inline Hinges hinge_penalties(const ComplexMatrix &f_bb, const ComplexMatrix &h_ii, const ComplexMatrix &f_rf,
                              const ComplexMatrix &w_rf, const SaturationLimits &lim) {
    Hinges h;
    h.c_pow = std::max(0.0, f_bb.squaredNorm() - 1.0);
    if (!std::isinf(lim.eta_lna))
        h.c_lna = std::max(0.0, lna_constraint_value(h_ii, f_rf, f_bb, lim.ns) - lim.eta_lna);
    if (!std::isinf(lim.eta_adc))
        h.c_adc = std::max(0.0, adc_constraint_value(w_rf, h_ii, f_rf, f_bb, lim.ns) - lim.eta_adc);
    return h;
}

inline Hinges hinge_penalties(const ComplexMatrix &f_bb, const PairContext &ctx, const SaturationLimits &lim) {
    Hinges h;
    h.c_pow = std::max(0.0, f_bb.squaredNorm() - 1.0);
    if (!std::isinf(lim.eta_lna))
        h.c_lna = std::max(0.0, ctx.lna_value(f_bb) - lim.eta_lna);
    if (!std::isinf(lim.eta_adc))
        h.c_adc = std::max(0.0, ctx.adc_value(f_bb) - lim.eta_adc);
    return h;
}

/// Weighted hinge term with multipliers 1, 1/eta_lna, 1/eta_adc. A zero limit
/// acts as a barrier: any violation makes the term infinite.
inline double weighted_penalty(const Hinges &h, const SaturationLimits &lim) {
    auto term = [](double hinge, double eta) {
        if (hinge <= 0.0)
            return 0.0;
        if (eta == 0.0)
            return hinge <= kZeroFloor ? 0.0 : std::numeric_limits<double>::infinity();
        return hinge / eta;
    };
    return h.c_pow + term(h.c_lna, lim.eta_lna) + term(h.c_adc, lim.eta_adc);
}

inline double penalty_objective(const ComplexMatrix &f_bb, double nu, const PairContext &ctx,
                                const SaturationLimits &lim) {
    if (!(nu >= 0.0))
        fail(ErrorKind::invalid_parameter, "penalty weight must be nonnegative");
    double info = info_from_gram(ctx.k(), f_bb, ctx.snr() / ctx.ns());
    if (nu == 0.0)
        return -info;
    return -info + nu * weighted_penalty(hinge_penalties(f_bb, ctx, lim), lim);
}

/// Eigen-based water-filled precoder for the Gram K, unit Frobenius norm.
inline ComplexMatrix waterfill_from_gram(const ComplexMatrix &k, double c, int ns) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(k));
    if (es.info() != Eigen::Success)
        fail(ErrorKind::numeric_failure, "waterfill: eigendecomposition failed");
    const Eigen::Index n = k.rows();
    if (ns > n)
        fail(ErrorKind::invalid_parameter, "waterfill: more streams than dimensions");
    std::vector<double> gains(static_cast<std::size_t>(ns));
    for (int s = 0; s < ns; ++s)
        gains[static_cast<std::size_t>(s)] = std::max(0.0, c * es.eigenvalues()(n - 1 - s));
    std::vector<double> p = water_fill(gains, 1.0);
    ComplexMatrix f(n, ns);
    for (int s = 0; s < ns; ++s)
        f.col(s) = es.eigenvectors().col(n - 1 - s) * std::sqrt(p[static_cast<std::size_t>(s)]);
    return f;
}

inline ComplexMatrix waterfilled_eigen_precoder(const ComplexMatrix &h_eff, const ComplexMatrix &w_gram,
                                                double snr, int ns) {
    if (h_eff.size() == 0 || h_eff.norm() == 0.0)
        fail(ErrorKind::degenerate_input, "waterfilled precoder: zero channel");
    ComplexMatrix k = hermitian_part(h_eff.adjoint() * hpd_inverse(w_gram) * h_eff);
    return waterfill_from_gram(k, snr / ns, ns);
}

namespace detail {

/// Largest scale g with g^2 * value <= limit; infinite when unconstrained.
inline double scale_limit(double value, double limit, double scale_ref) {
    if (std::isinf(limit))
        return std::numeric_limits<double>::infinity();
    if (value <= 1e-20 * scale_ref)
        return std::numeric_limits<double>::infinity();
    return std::sqrt(limit / value);
}

inline double projection_gain(const ComplexMatrix &f, const PairContext &ctx, const SaturationLimits &lim) {
    double fro = f.squaredNorm();
    if (fro == 0.0)
        return 1.0;
    double ref_l = std::max(ctx.g_lna().norm(), 1e-300) * fro / ctx.ns();
    double ref_a = std::max(ctx.g_adc().norm(), 1e-300) * fro / ctx.ns();
    double g = 1.0 / std::sqrt(fro);
    g = std::min(g, scale_limit(ctx.lna_value(f), lim.eta_lna, ref_l));
    g = std::min(g, scale_limit(ctx.adc_value(f), lim.eta_adc, ref_a));
    // Stay a hair inside the boundary so rounding never reports a violation.
    return g * (1.0 - 1e-12);
}

} // namespace detail

/// Scales F so every constraint holds and the binding one is met with equality.
inline ComplexMatrix final_projection(const ComplexMatrix &f_bb, const PairContext &ctx,
                                      const SaturationLimits &lim) {
    if (f_bb.squaredNorm() == 0.0)
        return f_bb;
    return f_bb * detail::projection_gain(f_bb, ctx, lim);
}

namespace detail {

/// Solver state in reduced coordinates F = N Z, where N spans the directions
/// allowed by any zero-valued limits.
struct Reduced {
    ComplexMatrix basis; // Lt x d
    ComplexMatrix k, g_lna, g_adc;
    double c = 1.0;
    int ns = 1;
    double eta_lna = kNoLimit;
    double eta_adc = kNoLimit;
    bool use_lna = false;
    bool use_adc = false;
};

inline ComplexMatrix null_basis(const ComplexMatrix &g, const ComplexMatrix &within) {
    // Orthonormal basis of {within * z : g * within * z = 0}.
    if (within.cols() == 0)
        return within;
    ComplexMatrix gr = hermitian_part(within.adjoint() * g * within);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(gr);
    if (es.info() != Eigen::Success)
        fail(ErrorKind::numeric_failure, "null space: eigendecomposition failed");
    double top = std::max(std::abs(es.eigenvalues()(gr.rows() - 1)), 1e-300);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < gr.rows(); ++i)
        if (std::abs(es.eigenvalues()(i)) <= 1e-12 * top || es.eigenvalues()(gr.rows() - 1) == 0.0)
            keep.push_back(i);
    ComplexMatrix out(within.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
        out.col(static_cast<Eigen::Index>(j)) = within * es.eigenvectors().col(keep[j]);
    return out;
}

inline Reduced reduce(const PairContext &ctx, const SaturationLimits &lim) {
    Reduced r;
    ComplexMatrix basis = ComplexMatrix::Identity(ctx.lt(), ctx.lt());
    if (lim.eta_lna == 0.0)
        basis = null_basis(ctx.g_lna(), basis);
    if (lim.eta_adc == 0.0)
        basis = null_basis(ctx.g_adc(), basis);
    r.basis = basis;
    r.c = ctx.snr() / ctx.ns();
    r.ns = ctx.ns();
    r.k = hermitian_part(basis.adjoint() * ctx.k() * basis);
    r.g_lna = hermitian_part(basis.adjoint() * ctx.g_lna() * basis);
    r.g_adc = hermitian_part(basis.adjoint() * ctx.g_adc() * basis);
    r.eta_lna = lim.eta_lna;
    r.eta_adc = lim.eta_adc;
    r.use_lna = !std::isinf(lim.eta_lna) && lim.eta_lna > 0.0;
    r.use_adc = !std::isinf(lim.eta_adc) && lim.eta_adc > 0.0;
    return r;
}

struct Eval {
    double info = 0.0;
    double pow = 0.0;
    double lna = 0.0;
    double adc = 0.0;
    double objective = 0.0;
};

inline double penalty_sum(const Reduced &r, double pow, double lna, double adc) {
    double p = std::max(0.0, pow - 1.0);
    if (r.use_lna)
        p += std::max(0.0, lna - r.eta_lna) / r.eta_lna;
    if (r.use_adc)
        p += std::max(0.0, adc - r.eta_adc) / r.eta_adc;
    return p;
}

inline Eval evaluate(const Reduced &r, const ComplexMatrix &z, double nu) {
    Eval e;
    e.info = info_from_gram(r.k, z, r.c);
    e.pow = z.squaredNorm();
    if (r.use_lna)
        e.lna = PairContext::quad_max(r.g_lna, z) / r.ns;
    if (r.use_adc)
        e.adc = PairContext::quad_max(r.g_adc, z) / r.ns;
    e.objective = -e.info + nu * penalty_sum(r, e.pow, e.lna, e.adc);
    return e;
}

/// Largest feasible scaling of z, as used by the final projection.
inline double reduced_gain(const Reduced &r, const Eval &e) {
    if (e.pow == 0.0)
        return 0.0;
    double g = 1.0 / std::sqrt(e.pow);
    if (r.use_lna && e.lna > 0.0)
        g = std::min(g, std::sqrt(r.eta_lna / e.lna));
    if (r.use_adc && e.adc > 0.0)
        g = std::min(g, std::sqrt(r.eta_adc / e.adc));
    return g;
}

struct Generator {
    ComplexMatrix g;
    int group;
};

struct Group {
    bool equality; // weights sum to one, otherwise at most one
    std::vector<int> members;
};

/// Euclidean projection of the group's weights onto {w >= 0, sum = 1}
/// (equality) or {w >= 0, sum <= 1}.
inline void project_group(std::vector<double> &w, const Group &grp) {
    double clipped_sum = 0.0;
    for (int m : grp.members)
        clipped_sum += std::max(0.0, w[static_cast<std::size_t>(m)]);
    if (!grp.equality && clipped_sum <= 1.0) {
        for (int m : grp.members)
            w[static_cast<std::size_t>(m)] = std::max(0.0, w[static_cast<std::size_t>(m)]);
        return;
    }
    std::vector<double> v;
    v.reserve(grp.members.size());
    for (int m : grp.members)
        v.push_back(w[static_cast<std::size_t>(m)]);
    std::sort(v.begin(), v.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        cum += v[i];
        double t = (cum - 1.0) / static_cast<double>(i + 1);
        if (i + 1 == v.size() || v[i + 1] <= t) {
            theta = t;
            break;
        }
    }
    for (int m : grp.members)
        w[static_cast<std::size_t>(m)] = std::max(0.0, w[static_cast<std::size_t>(m)] - theta);
}

/// Minimum-norm element of g0 + sum_m w_m g_m over the group constraints.
inline ComplexMatrix min_norm_direction(const ComplexMatrix &g0, const std::vector<Generator> &gens,
                                        const std::vector<Group> &groups) {
    const std::size_t m = gens.size();
    if (m == 0)
        return g0;
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd b(m);
    for (std::size_t i = 0; i < m; ++i) {
        b(i) = real_inner(g0, gens[i].g);
        for (std::size_t j = i; j < m; ++j)
            a(i, j) = a(j, i) = real_inner(gens[i].g, gens[j].g);
    }
    std::vector<double> w(m, 0.0);
    for (const Group &grp : groups) {
        double init = grp.equality ? 1.0 / static_cast<double>(grp.members.size()) : 0.0;
        for (int idx : grp.members)
            w[static_cast<std::size_t>(idx)] = init;
    }
    // Block coordinate descent, one group per block. Singleton groups have a
    // closed-form update; larger ones take projected gradient steps.
    Eigen::VectorXd wv = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
        wv(static_cast<Eigen::Index>(i)) = w[i];
    for (int sweep = 0; sweep < 200; ++sweep) {
        double change = 0.0;
        for (const Group &grp : groups) {
            if (grp.members.size() == 1) {
                auto i = static_cast<Eigen::Index>(grp.members[0]);
                if (grp.equality)
                    continue;
                double aii = a(i, i);
                if (!(aii > 0.0))
                    continue;
                double rest = a.row(i).dot(wv) - aii * wv(i) + b(i);
                double nw = std::clamp(-rest / aii, 0.0, 1.0);
                change = std::max(change, std::abs(nw - wv(i)));
                wv(i) = nw;
                continue;
            }
            double lip = 0.0;
            for (int idx : grp.members)
                lip += a(idx, idx);
            if (!(lip > 0.0))
                continue;
            for (int inner = 0; inner < 20; ++inner) {
                Eigen::VectorXd grad = a * wv + b;
                for (int idx : grp.members)
                    w[static_cast<std::size_t>(idx)] = wv(idx) - grad(idx) / lip;
                project_group(w, grp);
                double ch = 0.0;
                for (int idx : grp.members) {
                    ch = std::max(ch, std::abs(w[static_cast<std::size_t>(idx)] - wv(idx)));
                    wv(idx) = w[static_cast<std::size_t>(idx)];
                }
                change = std::max(change, ch);
                if (ch < 1e-14)
                    break;
            }
        }
        if (change < 1e-13)
            break;
    }
    for (std::size_t i = 0; i < m; ++i)
        w[i] = wv(static_cast<Eigen::Index>(i));
    ComplexMatrix d = g0;
    for (std::size_t i = 0; i < m; ++i)
        d += w[i] * gens[i].g;
    return d;
}

/// Adds the (epsilon-)subgradient generators of weight * lambda_max(Z* G Z)/ns.
inline void add_eigen_generators(const ComplexMatrix &g, const ComplexMatrix &z, int ns, double weight,
                                 double hinge, double delta_abs, double delta_rel,
                                 std::vector<Generator> &gens, std::vector<Group> &groups) {
    if (hinge < -delta_abs)
        return;
    ComplexMatrix q = hermitian_part(z.adjoint() * g * z);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(q);
    const Eigen::Index n = q.rows();
    double top = es.eigenvalues()(n - 1);
    Group grp{hinge > delta_abs, {}};
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        if (top - es.eigenvalues()(i) > delta_rel * std::max(top, 1e-300) && i != n - 1)
            break;
        ComplexVector v = es.eigenvectors().col(i);
        ComplexMatrix gr = (2.0 * weight / ns) * (g * z * v * v.adjoint());
        grp.members.push_back(static_cast<int>(gens.size()));
        gens.push_back({std::move(gr), static_cast<int>(groups.size())});
    }
    groups.push_back(std::move(grp));
}

struct InnerResult {
    ComplexMatrix z;
    bool converged = false;
};

/// Tracks the best feasible (projected) point seen anywhere in the solve.
struct BestTracker {
    ComplexMatrix z;
    double info = -1.0;

    void offer(const Reduced &r, const ComplexMatrix &cand, const Eval &e) {
        double g = reduced_gain(r, e);
        if (!(g > 0.0) || !std::isfinite(g))
            return;
        double info_proj = info_from_gram(r.k, cand * g, r.c);
        if (info_proj > info) {
            info = info_proj;
            z = cand * g;
        }
    }
};

inline InnerResult descend(const Reduced &r, double nu, ComplexMatrix z, const SolverSettings &s,
                           BestTracker *best) {
    InnerResult out;
    Eval cur = evaluate(r, z, nu);
    double step = 0.1 * std::max(z.norm(), 1e-3);
    double delta_rel = 1e-3;
    int stall = 0;
    for (int it = 0; it < s.max_inner_iters; ++it) {
        // Smooth part: -grad of the information term.
        ComplexMatrix kz = r.k * z;
        ComplexMatrix inner = ComplexMatrix::Identity(z.cols(), z.cols()) + r.c * hermitian_part(z.adjoint() * kz);
        ComplexMatrix g0 = -(2.0 * r.c / std::log(2.0)) * kz * hpd_inverse(inner);

        std::vector<Generator> gens;
        std::vector<Group> groups;
        if (nu > 0.0) {
            double h_pow = cur.pow - 1.0;
            double d_pow = delta_rel;
            if (h_pow >= -d_pow) {
                groups.push_back({h_pow > d_pow, {static_cast<int>(gens.size())}});
                gens.push_back({2.0 * nu * z, static_cast<int>(groups.size()) - 1});
            }
            if (r.use_lna)
                add_eigen_generators(r.g_lna, z, r.ns, nu / r.eta_lna, cur.lna - r.eta_lna,
                                     delta_rel * r.eta_lna, delta_rel, gens, groups);
            if (r.use_adc)
                add_eigen_generators(r.g_adc, z, r.ns, nu / r.eta_adc, cur.adc - r.eta_adc,
                                     delta_rel * r.eta_adc, delta_rel, gens, groups);
        }
        ComplexMatrix d = -min_norm_direction(g0, gens, groups);
        double dn = d.norm();
        if (dn <= s.inner_tol * (1.0 + g0.norm())) {
            out.converged = true;
            break;
        }

        // Armijo backtracking along the normalized direction.
        ComplexMatrix u = d / dn;
        double t = step;
        bool accepted = false;
        ComplexMatrix trial;
        Eval te;
        for (int ls = 0; ls < 60; ++ls) {
            trial = z + t * u;
            te = evaluate(r, trial, nu);
            if (te.objective <= cur.objective - s.armijo_c * t * dn) {
                accepted = true;
                break;
            }
            t *= s.step_shrink;
            if (t < 1e-14 * std::max(z.norm(), 1e-6))
                break;
        }
        if (!accepted) {
            if (delta_rel > 1e-10) {
                delta_rel *= 0.1;
                step = std::max(step, 1e-6 * std::max(z.norm(), 1e-3));
                continue;
            }
            out.converged = true;
            break;
        }
        double rel_step = t / std::max(z.norm(), 1e-12);
        double improvement = cur.objective - te.objective;
        z = trial;
        cur = te;
        if (best)
            best->offer(r, z, cur);
        step = t * 2.0;
        delta_rel = std::clamp(4.0 * rel_step, 1e-10, 1e-2);
        if (improvement <= 1e-14 * (1.0 + std::abs(cur.objective))) {
            if (++stall >= 3) {
                out.converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }
    out.z = std::move(z);
    return out;
}

/// Mutual information after scaling z onto the nearest constraint boundary.
inline double projected_info(const Reduced &r, const ComplexMatrix &z) {
    Eval e = evaluate(r, z, 0.0);
    double g = reduced_gain(r, e);
    if (!(g > 0.0) || !std::isfinite(g))
        return 0.0;
    return info_from_gram(r.k, g * z, r.c);
}

/// One homogeneous constraint value v(z) = z-quadratic with limit eta, and
/// the gradient of v.
struct Piece {
    double value;
    double eta;
    ComplexMatrix grad;
};

inline void add_eigen_pieces(const ComplexMatrix &g, const ComplexMatrix &z, int ns, double eta, double delta_rel,
                             std::vector<Piece> &out) {
    ComplexMatrix gz = g * z;
    ComplexMatrix q = hermitian_part(z.adjoint() * gz);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(q);
    const Eigen::Index n = q.rows();
    double top = es.eigenvalues()(n - 1);
    if (!(top > 0.0))
        return;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        double lam = es.eigenvalues()(i);
        if (i != n - 1 && top - lam > delta_rel * top)
            break;
        if (!(lam > 0.0))
            break;
        ComplexVector v = es.eigenvectors().col(i);
        out.push_back({lam / ns, eta, (2.0 / ns) * (gz * v * v.adjoint())});
    }
}

/// Steepest ascent on projected_info, which is invariant to the scale of z.
/// Near-binding constraints and near-degenerate eigenvalues enter as
/// generators of an epsilon-subdifferential.
inline ComplexMatrix polish(const Reduced &r, ComplexMatrix z, const SolverSettings &s) {
    if (z.norm() == 0.0)
        return z;
    z /= z.norm();
    double cur = projected_info(r, z);
    double step = 0.1;
    double delta_rel = 1e-3;
    int stall = 0;
    for (int it = 0; it < s.polish_iters; ++it) {
        std::vector<Piece> pieces;
        pieces.push_back({z.squaredNorm(), 1.0, 2.0 * z});
        if (r.use_lna)
            add_eigen_pieces(r.g_lna, z, r.ns, r.eta_lna, delta_rel, pieces);
        if (r.use_adc)
            add_eigen_pieces(r.g_adc, z, r.ns, r.eta_adc, delta_rel, pieces);
        double g_min = std::numeric_limits<double>::infinity();
        for (const Piece &p : pieces)
            g_min = std::min(g_min, std::sqrt(p.eta / p.value));

        std::vector<Generator> gens;
        Group grp{true, {}};
        for (const Piece &p : pieces) {
            double gain = std::sqrt(p.eta / p.value);
            if (gain > g_min * (1.0 + delta_rel))
                continue;
            ComplexMatrix f = gain * z;
            ComplexMatrix kf = r.k * f;
            ComplexMatrix inner = ComplexMatrix::Identity(f.cols(), f.cols()) + r.c * hermitian_part(f.adjoint() * kf);
            ComplexMatrix gi = (2.0 * r.c / std::log(2.0)) * kf * hpd_inverse(inner);
            // Gradient of I(gain(z) z); negated because the direction search minimizes.
            ComplexMatrix grad = gain * gi - (gain / (2.0 * p.value)) * real_inner(gi, z) * p.grad;
            grp.members.push_back(static_cast<int>(gens.size()));
            gens.push_back({-grad, 0});
        }
        ComplexMatrix zero = ComplexMatrix::Zero(z.rows(), z.cols());
        ComplexMatrix d = -min_norm_direction(zero, gens, {grp});
        double dn = d.norm();
        if (dn <= s.inner_tol) {
            if (delta_rel > 1e-10) {
                delta_rel *= 0.1;
                continue;
            }
            break;
        }
        ComplexMatrix u = d / dn;
        double t = step;
        bool accepted = false;
        ComplexMatrix trial;
        double tv = 0.0;
        for (int ls = 0; ls < 60; ++ls) {
            trial = z + t * u;
            tv = projected_info(r, trial);
            if (tv >= cur + s.armijo_c * t * dn) {
                accepted = true;
                break;
            }
            t *= s.step_shrink;
            if (t < 1e-14)
                break;
        }
        if (!accepted) {
            if (delta_rel > 1e-10) {
                delta_rel *= 0.1;
                continue;
            }
            break;
        }
        double improvement = tv - cur;
        z = trial / trial.norm();
        cur = tv;
        step = std::min(2.0 * t, 1.0);
        delta_rel = std::clamp(4.0 * t, 1e-10, 1e-2);
        if (improvement <= 1e-15 * (1.0 + cur)) {
            if (++stall >= 3)
                break;
        } else {
            stall = 0;
        }
    }
    return z;
}

inline bool within_tolerance(const Reduced &r, const Eval &e, const SolverSettings &s) {
    if (e.pow - 1.0 > s.eps_pow)
        return false;
    if (r.use_lna && (e.lna - r.eta_lna) / r.eta_lna > s.eps_lna)
        return false;
    if (r.use_adc && (e.adc - r.eta_adc) / r.eta_adc > s.eps_adc)
        return false;
    return true;
}

} // namespace detail

/// Minimizes the penalized objective for a fixed nu from `init`.
inline ComplexMatrix solve_penalized(double nu, const ComplexMatrix &init, const PairContext &ctx,
                                     const SaturationLimits &lim, const SolverSettings &settings,
                                     bool *converged = nullptr) {
    if (!(nu >= 0.0))
        fail(ErrorKind::invalid_parameter, "penalty weight must be nonnegative");
    if (init.rows() != ctx.lt() || init.cols() != ctx.ns())
        fail(ErrorKind::shape_mismatch, "solve_penalized: initial precoder has the wrong shape");
    detail::Reduced r = detail::reduce(ctx, lim);
    if (r.basis.cols() == 0) {
        if (converged)
            *converged = true;
        return ComplexMatrix::Zero(ctx.lt(), ctx.ns());
    }
    ComplexMatrix z0 = r.basis.adjoint() * init;
    detail::InnerResult res = detail::descend(r, nu, z0, settings, nullptr);
    if (converged)
        *converged = res.converged;
    return r.basis * res.z;
}

inline PrecoderSolution make_solution(ComplexMatrix f, SolvePath path, const PairContext &ctx,
                                      const SaturationLimits &lim, const ComplexMatrix &h_ii,
                                      const ComplexMatrix &f_rf, const ComplexMatrix &w_rf) {
    PrecoderSolution sol;
    sol.objective_bits = info_from_gram(ctx.k(), f, ctx.snr() / ctx.ns());
    if (h_ii.size() != 0)
        sol.report = evaluate_constraints(f, h_ii, f_rf, w_rf, lim);
    sol.f_bb = std::move(f);
    sol.path = path;
    return sol;
}

/// Solves the constrained precoder design for one candidate pair. The full
/// matrices are only used to fill the constraint report; pass empty matrices
/// to skip it.
inline PrecoderSolution solve_constrained_precoder(const PairContext &ctx, const SaturationLimits &lim,
                                                   const SolverSettings &settings,
                                                   const ComplexMatrix &h_ii = {},
                                                   const ComplexMatrix &f_rf = {},
                                                   const ComplexMatrix &w_rf = {}) {
    lim.validate();
    settings.validate();
    const double c = ctx.snr() / ctx.ns();
    const int ns = ctx.ns();

    if (ctx.k().norm() == 0.0) {
        PrecoderSolution sol = make_solution(ComplexMatrix::Zero(ctx.lt(), ns), SolvePath::shutdown, ctx, lim,
                                             h_ii, f_rf, w_rf);
        return sol;
    }

    bool lna_ok = std::isinf(lim.eta_lna) ||
                  lim.eta_lna >= std::max(0.0, top_eigen(ctx.g_lna()).value) / ns;
    bool adc_ok = std::isinf(lim.eta_adc) ||
                  lim.eta_adc >= std::max(0.0, top_eigen(ctx.g_adc()).value) / ns;
    if (lna_ok && adc_ok) {
        ComplexMatrix f = final_projection(waterfill_from_gram(ctx.k(), c, ns), ctx, lim);
        return make_solution(std::move(f), SolvePath::waterfill_fast_path, ctx, lim, h_ii, f_rf, w_rf);
    }

    detail::Reduced r = detail::reduce(ctx, lim);
    if (r.basis.cols() == 0 || r.k.norm() <= 1e-14 * ctx.k().norm()) {
        return make_solution(ComplexMatrix::Zero(ctx.lt(), ns), SolvePath::shutdown, ctx, lim, h_ii, f_rf, w_rf);
    }
    const Eigen::Index dim = r.basis.cols();
    const int ns_r = static_cast<int>(std::min<Eigen::Index>(ns, dim));

    // Water-filled start within the allowed subspace.
    ComplexMatrix z0 = ComplexMatrix::Zero(dim, ns);
    z0.leftCols(ns_r) = waterfill_from_gram(r.k, c, ns_r);

    detail::BestTracker best;
    detail::Eval e0 = detail::evaluate(r, z0, 0.0);
    if (e0.lna <= r.eta_lna && e0.adc <= r.eta_adc) {
        // Already feasible: nothing beats the unconstrained optimum.
        ComplexMatrix f = final_projection(r.basis * z0, ctx, lim);
        return make_solution(std::move(f), SolvePath::waterfill_fast_path, ctx, lim, h_ii, f_rf, w_rf);
    }
    best.offer(r, z0, e0);

    double log_lo = std::log(settings.nu_min);
    double log_hi = std::log(settings.nu_max);
    ComplexMatrix z = 0.5 * z0;
    ComplexMatrix z_ok;
    double nu_ok = 0.0;
    bool all_converged = true;
    for (int step = 0; step < settings.n_nu; ++step) {
        double nu = std::exp(0.5 * (log_lo + log_hi));
        detail::InnerResult res = detail::descend(r, nu, z, settings, &best);
        all_converged = all_converged && res.converged;
        detail::Eval e = detail::evaluate(r, res.z, nu);
        if (detail::within_tolerance(r, e, settings)) {
            log_hi = std::log(nu);
            z_ok = res.z;
            nu_ok = nu;
        } else {
            log_lo = std::log(nu);
        }
        z = res.z;
    }
    bool saturated = false;
    if (z_ok.size() == 0) {
        detail::InnerResult res = detail::descend(r, settings.nu_max, z, settings, &best);
        all_converged = all_converged && res.converged;
        z_ok = res.z;
        nu_ok = settings.nu_max;
        saturated = !detail::within_tolerance(r, detail::evaluate(r, z_ok, nu_ok), settings);
    }
    best.offer(r, z_ok, detail::evaluate(r, z_ok, nu_ok));

    ComplexMatrix z_best = best.z;
    if (settings.polish_iters > 0) {
        ComplexMatrix z_pol = detail::polish(r, z_best, settings);
        if (detail::projected_info(r, z_pol) > detail::projected_info(r, z_best))
            z_best = std::move(z_pol);
    }
    ComplexMatrix f = final_projection(r.basis * z_best, ctx, lim);
    PrecoderSolution sol = make_solution(std::move(f), SolvePath::penalty_bisection, ctx, lim, h_ii, f_rf, w_rf);
    sol.bisection_saturated = saturated;
    sol.converged = all_converged;
    sol.nu = nu_ok;
    return sol;
}

struct OuterResult {
    int t = 0;
    int r = 0;
    PrecoderSolution solution;
};

/// Water-filled mutual information of each candidate, scored with its own
/// analog combiner Gram. Zero channels score 0.
inline std::vector<double> candidate_infos(const std::vector<ComplexMatrix> &h_eff, const CandidateSet &cands,
                                           double snr, int ns) {
    if (h_eff.size() != cands.size())
        fail(ErrorKind::invalid_parameter, "candidate_infos: need one effective channel per candidate");
    std::vector<double> out(h_eff.size(), 0.0);
    for (std::size_t k = 0; k < h_eff.size(); ++k) {
        if (h_eff[k].norm() == 0.0)
            continue;
        const ComplexMatrix &w = cands.pairs[k].w_rf;
        ComplexMatrix gram = w.adjoint() * w;
        out[k] = mutual_info_ij(h_eff[k], waterfilled_eigen_precoder(h_eff[k], gram, snr, ns), snr, ns, gram);
    }
    return out;
}

/// Objectives closer than this count as tied in the outer search.
inline constexpr double kOuterTieBits = 1e-9;

/// Exhaustive search over transmit-link candidates t and receive-link
/// candidates r for the best constrained transmit mutual information. Ties
/// go to the receive candidate with the larger rx_score, when given.
inline OuterResult outer_search(const CandidateSet &t_ij, const std::vector<ComplexMatrix> &h_eff_ij,
                                const CandidateSet &t_ki, const ComplexMatrix &h_ii,
                                const SaturationLimits &lim, double snr, const SolverSettings &settings,
                                const std::vector<double> &rx_score = {}) {
    if (t_ij.size() == 0 || t_ki.size() == 0)
        fail(ErrorKind::invalid_parameter, "outer_search: empty candidate set");
    if (h_eff_ij.size() != t_ij.size())
        fail(ErrorKind::shape_mismatch, "outer_search: one effective channel per candidate required");
    if (!rx_score.empty() && rx_score.size() != t_ki.size())
        fail(ErrorKind::shape_mismatch, "outer_search: one receive score per candidate required");
    auto score = [&](int r) { return rx_score.empty() ? 0.0 : rx_score[static_cast<std::size_t>(r)]; };
    std::vector<PrescreenFlags> flags = prescreen_candidates(t_ij, t_ki, h_ii, lim);
    OuterResult best;
    bool have = false;
    for (const PrescreenFlags &fl : flags) {
        const BeamPair &tx = t_ij.pairs[static_cast<std::size_t>(fl.t)];
        const BeamPair &rx = t_ki.pairs[static_cast<std::size_t>(fl.r)];
        PairContext ctx = PairContext::from_beams(h_eff_ij[static_cast<std::size_t>(fl.t)], tx.w_rf, h_ii, tx.f_rf,
                                                  rx.w_rf, snr, lim.ns);
        PrecoderSolution sol = solve_constrained_precoder(ctx, lim, settings, h_ii, tx.f_rf, rx.w_rf);
        bool better = !have;
        if (have) {
            double d = sol.objective_bits - best.solution.objective_bits;
            better = d > kOuterTieBits || (std::abs(d) <= kOuterTieBits && score(fl.r) > score(best.r));
        }
        if (better) {
            best = {fl.t, fl.r, std::move(sol)};
            have = true;
        }
    }
    return best;
}

} // namespace fdx
