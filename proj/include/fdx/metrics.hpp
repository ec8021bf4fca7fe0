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
#include <vector>

#include "fdx/link.hpp"
#include "fdx/numerics.hpp"
#include "fdx/solver.hpp"

namespace fdx {

struct TrialMetrics {
    double r_ij = 0.0;
    double r_ki = 0.0;
    double c_ij = 0.0;
    double c_ki = 0.0;
    double sum_se = 0.0;
    double hd_baseline = 0.0;
    int t = 0;
    int r = 0;
};

namespace detail {

/// log2 det(I + c A A* Q^{-1}), evaluated on the range of Q. A stream the
/// combiner zeroes out contributes to neither A nor Q, so Q may be singular.
inline double rate_with_noise(const ComplexMatrix &a, const ComplexMatrix &q, double c) {
    if (a.norm() == 0.0)
        return 0.0;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(q));
    if (es.info() != Eigen::Success)
        fail(ErrorKind::numeric_failure, "rate: eigendecomposition failed");
    const Eigen::Index n = q.rows();
    double top = es.eigenvalues()(n - 1);
    if (!(top > 0.0))
        fail(ErrorKind::rank_deficient, "rate: noise covariance is zero");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
        if (es.eigenvalues()(i) > 1e-12 * top)
            keep.push_back(i);
    ComplexMatrix b(static_cast<Eigen::Index>(keep.size()), a.cols());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        Eigen::Index i = keep[k];
        b.row(static_cast<Eigen::Index>(k)) =
            es.eigenvectors().col(i).adjoint() * a / std::sqrt(es.eigenvalues()(i));
    }
    ComplexMatrix m = ComplexMatrix::Identity(b.rows(), b.rows()) + c * hermitian_part(b * b.adjoint());
    return std::max(0.0, log2det_hpd(m));
}

} // namespace detail

/// Spectral efficiency from i to j after the baseband combiner at j.
inline double rate_ij(const LinkDesign &d, const ComplexMatrix &h_ij, double snr, int ns) {
    ComplexMatrix a = d.w_bb_j.adjoint() * d.w_rf_j.adjoint() * h_ij * d.f_rf_i * d.f_bb_i;
    return detail::rate_with_noise(a, d.q_n_j, snr / ns);
}

/// Spectral efficiency from k to i, treating residual quantization noise
/// from self-interference as noise.
inline double rate_ki(const LinkDesign &d, const ComplexMatrix &h_ki, double snr, int ns) {
    ComplexMatrix a = d.w_bb_i.adjoint() * d.w_rf_i.adjoint() * h_ki * d.f_rf_k * d.f_bb_k;
    return detail::rate_with_noise(a, d.q_n_i + d.q_int_i, snr / ns);
}

/// Best water-filled mutual information over candidates, each scored with its
/// own analog combiner Gram.
inline double candidate_capacity(const std::vector<ComplexMatrix> &h_eff, const CandidateSet &cands, double snr,
                                 int ns) {
    if (h_eff.empty() || h_eff.size() != cands.size())
        fail(ErrorKind::invalid_parameter, "capacity: need one effective channel per candidate");
    std::vector<double> infos = candidate_infos(h_eff, cands, snr, ns);
    return *std::max_element(infos.begin(), infos.end());
}

inline double capacity_ij(const std::vector<ComplexMatrix> &h_eff_ij, const CandidateSet &t_ij, double snr,
                          int ns) {
    return candidate_capacity(h_eff_ij, t_ij, snr, ns);
}

inline double capacity_ki(const std::vector<ComplexMatrix> &h_eff_ki, const CandidateSet &t_ki, double snr,
                          int ns) {
    return candidate_capacity(h_eff_ki, t_ki, snr, ns);
}

inline TrialMetrics evaluate_trial(const LinkDesign &d, const ChannelSet &ch, const std::vector<ComplexMatrix> &h_eff_ij,
                                   const CandidateSet &t_ij, const std::vector<ComplexMatrix> &h_eff_ki,
                                   const CandidateSet &t_ki, const LinkParams &p) {
    TrialMetrics m;
    m.r_ij = rate_ij(d, ch.h_ij, p.snr_ij, p.ns_ij);
    m.r_ki = rate_ki(d, ch.h_ki, p.snr_ki, p.ns_ki);
    m.c_ij = capacity_ij(h_eff_ij, t_ij, p.snr_ij, p.ns_ij);
    m.c_ki = capacity_ki(h_eff_ki, t_ki, p.snr_ki, p.ns_ki);
    m.sum_se = m.r_ij + m.r_ki;
    m.hd_baseline = std::max(m.c_ij, m.c_ki);
    m.t = d.t;
    m.r = d.r;
    return m;
}

} // namespace fdx
