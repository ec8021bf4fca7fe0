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
#include <vector>

#include "fdx/numerics.hpp"

namespace fdx {

/// Columns are beams, each with squared norm `norm_target`.
struct Codebook {
    ComplexMatrix beams;
    double norm_target = 1.0;

    Eigen::Index size() const { return beams.cols(); }
    Eigen::Index n_antennas() const { return beams.rows(); }
};

struct BeamPair {
    ComplexMatrix f_rf; // Nt x L
    ComplexMatrix w_rf; // Nr x L
};

struct CandidateSet {
    std::vector<BeamPair> pairs;
    std::vector<std::vector<int>> tx_indices;
    std::vector<std::vector<int>> rx_indices;

    std::size_t size() const { return pairs.size(); }
};

inline Codebook dft_codebook(int n, int m, double norm_target) {
    if (n < 1 || m < 1)
        fail(ErrorKind::config, "codebook dimensions must be positive");
    if (m > n)
        fail(ErrorKind::config, "codebook cannot hold more beams than antennas");
    if (!(norm_target > 0.0))
        fail(ErrorKind::config, "codebook norm target must be positive");
    Codebook cb{ComplexMatrix(n, m), norm_target};
    double amp = std::sqrt(norm_target / n);
    for (int k = 0; k < m; ++k)
        for (int p = 0; p < n; ++p) {
            // Reduce p*k mod m first so large products keep full phase accuracy.
            long long idx = (static_cast<long long>(p) * k) % m;
            cb.beams(p, k) = std::polar(amp, 2.0 * kPi * static_cast<double>(idx) / m);
        }
    return cb;
}

/// Noiseless training measurements, rows index combiners and columns precoders.
inline ComplexMatrix measure(const ComplexMatrix &h, const Codebook &f_train,
                             const Codebook &w_train, double amplitude) {
    if (h.cols() != f_train.n_antennas() || h.rows() != w_train.n_antennas())
        fail(ErrorKind::shape_mismatch, "measure: channel and training codebooks do not conform");
    return amplitude * (w_train.beams.adjoint() * h * f_train.beams);
}

struct MeasuredEntry {
    double magnitude;
    int t;
    int r;
};

/// Strongest first; ties go to the lower tx index, then the lower rx index.
inline bool stronger(const MeasuredEntry &a, const MeasuredEntry &b) {
    if (a.magnitude != b.magnitude)
        return a.magnitude > b.magnitude;
    if (a.t != b.t)
        return a.t < b.t;
    return a.r < b.r;
}

inline CandidateSet acquire_candidates(const ComplexMatrix &m, const Codebook &f_train,
                                       const Codebook &w_train, int l, int k) {
    const int n_rx = static_cast<int>(m.rows());
    const int n_tx = static_cast<int>(m.cols());
    if (n_tx != f_train.size() || n_rx != w_train.size())
        fail(ErrorKind::shape_mismatch, "acquire_candidates: measurement shape does not match codebooks");
    if (l < 1 || k < 1)
        fail(ErrorKind::invalid_parameter, "acquire_candidates: L and K must be positive");
    if (l > n_tx || l > n_rx)
        fail(ErrorKind::acquisition_exhausted, "not enough training beams for the requested RF chains");
    if (static_cast<long long>(k) > static_cast<long long>(n_tx) * n_rx)
        fail(ErrorKind::acquisition_exhausted, "more candidates requested than measurements");

    std::vector<MeasuredEntry> order;
    order.reserve(static_cast<std::size_t>(n_tx) * n_rx);
    for (int t = 0; t < n_tx; ++t)
        for (int r = 0; r < n_rx; ++r)
            order.push_back({std::abs(m(r, t)), t, r});
    std::sort(order.begin(), order.end(), stronger);

    CandidateSet out;
    std::vector<char> used_tx(n_tx), used_rx(n_rx);
    for (int c = 0; c < k; ++c) {
        std::fill(used_tx.begin(), used_tx.end(), 0);
        std::fill(used_rx.begin(), used_rx.end(), 0);
        std::vector<int> ts{order[c].t}, rs{order[c].r};
        used_tx[order[c].t] = used_rx[order[c].r] = 1;
        for (const MeasuredEntry &e : order) {
            if (static_cast<int>(ts.size()) == l)
                break;
            if (used_tx[e.t] || used_rx[e.r])
                continue;
            ts.push_back(e.t);
            rs.push_back(e.r);
            used_tx[e.t] = used_rx[e.r] = 1;
        }
        BeamPair pair{ComplexMatrix(f_train.n_antennas(), l), ComplexMatrix(w_train.n_antennas(), l)};
        for (int j = 0; j < l; ++j) {
            pair.f_rf.col(j) = f_train.beams.col(ts[j]);
            pair.w_rf.col(j) = w_train.beams.col(rs[j]);
        }
        out.pairs.push_back(std::move(pair));
        out.tx_indices.push_back(std::move(ts));
        out.rx_indices.push_back(std::move(rs));
    }
    return out;
}

/// W_RF* H F_RF for every candidate.
inline std::vector<ComplexMatrix> effective_channels(const ComplexMatrix &h, const CandidateSet &cands) {
    std::vector<ComplexMatrix> out;
    out.reserve(cands.size());
    for (const BeamPair &p : cands.pairs) {
        if (h.cols() != p.f_rf.rows() || h.rows() != p.w_rf.rows())
            fail(ErrorKind::shape_mismatch, "effective_channels: candidate does not conform to channel");
        out.push_back(p.w_rf.adjoint() * h * p.f_rf);
    }
    return out;
}

} // namespace fdx
