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

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "fdx/channel.hpp"
#include "fdx/codebook.hpp"
#include "fdx/numerics.hpp"
#include "fdx/solver.hpp"

namespace fdx {

struct LnaModel {
    double p_lna_max = 1.0; // watts
    double gain = 1.0;

    void validate() const {
        if (!(p_lna_max > 0.0) || !(gain > 0.0))
            fail(ErrorKind::invalid_parameter, "LNA threshold and gain must be positive");
    }
};

struct AdcModel {
    int bits = 12;

    void validate() const {
        if (bits < 1)
            fail(ErrorKind::invalid_parameter, "ADC needs at least one bit");
    }
    /// 8 / (12 * 2^(2b))
    double scale() const { return 8.0 / (12.0 * std::ldexp(1.0, 2 * bits)); }
};

/// All eight beamformers plus the covariances used to score them. Covariances
/// are normalized to the noise power.
struct LinkDesign {
    ComplexMatrix f_bb_i, f_rf_i, w_rf_j, w_bb_j;
    ComplexMatrix f_rf_k, f_bb_k, w_rf_i, w_bb_i;
    int t = 0; // transmit-link candidate
    int r = 0; // receive-link candidate
    ComplexMatrix adc_cov;
    ComplexMatrix r_quant;
    ComplexMatrix q_n_j, q_n_i, q_int_i;
    PrecoderSolution solution;
};

inline ComplexMatrix lmmse_combiner_j(const ComplexMatrix &h_tilde, const ComplexMatrix &w_rf_j, double snr,
                                      int ns, double amp) {
    if (w_rf_j.cols() != h_tilde.rows())
        fail(ErrorKind::shape_mismatch, "lmmse_combiner_j: combiner does not conform");
    if (!(snr > 0.0) || !(amp > 0.0) || ns < 1)
        fail(ErrorKind::invalid_parameter, "lmmse_combiner_j: snr, amplitude and streams must be positive");
    ComplexMatrix a = hermitian_part(h_tilde * h_tilde.adjoint() + (ns / snr) * (w_rf_j.adjoint() * w_rf_j));
    return hpd_inverse(a) * h_tilde / amp;
}

/// Water-filled eigen precoder for the receive link, accounting for the noise
/// coloring introduced by the analog combiner at i.
inline ComplexMatrix receive_precoder_k(const ComplexMatrix &h_tilde_ki, const ComplexMatrix &w_rf_i,
                                        double snr_ki, int ns) {
    if (h_tilde_ki.size() == 0 || h_tilde_ki.norm() == 0.0)
        fail(ErrorKind::degenerate_input, "receive_precoder_k: zero channel");
    if (w_rf_i.cols() != h_tilde_ki.rows())
        fail(ErrorKind::shape_mismatch, "receive_precoder_k: combiner does not conform");
    ComplexMatrix whitened = gram_inv_sqrt(w_rf_i) * h_tilde_ki;
    return waterfill_from_gram(hermitian_part(whitened.adjoint() * whitened), snr_ki / ns, ns);
}

/// Covariance at the ADC inputs: desired + self-interference + noise.
/// h_des = W_RF(i)* H_ki F_RF(k) F_BB(k), h_si = W_RF(i)* H_ii F_RF(i) F_BB(i);
/// p_des and p_si are P_tx * G^2 for each link in the same units as noise_power.
inline ComplexMatrix adc_input_cov(const ComplexMatrix &h_des, const ComplexMatrix &h_si,
                                   const ComplexMatrix &w_rf_i, double p_des, double p_si, int ns_ki,
                                   int ns_ij, double noise_power) {
    if (h_des.rows() != w_rf_i.cols() || h_si.rows() != w_rf_i.cols())
        fail(ErrorKind::shape_mismatch, "adc_input_cov: shapes do not conform");
    if (ns_ki < 1 || ns_ij < 1)
        fail(ErrorKind::invalid_parameter, "adc_input_cov: stream counts must be positive");
    ComplexMatrix cov = (p_des / ns_ki) * (h_des * h_des.adjoint()) + (p_si / ns_ij) * (h_si * h_si.adjoint()) +
                        noise_power * (w_rf_i.adjoint() * w_rf_i);
    return hermitian_part(cov);
}

inline ComplexMatrix quant_noise_cov(const ComplexMatrix &adc_cov, const AdcModel &adc) {
    adc.validate();
    if (adc_cov.rows() != adc_cov.cols())
        fail(ErrorKind::shape_mismatch, "quant_noise_cov: covariance must be square");
    ComplexMatrix r = ComplexMatrix::Zero(adc_cov.rows(), adc_cov.cols());
    for (Eigen::Index l = 0; l < adc_cov.rows(); ++l)
        r(l, l) = adc.scale() * adc_cov(l, l).real();
    return r;
}

/// quant_weight multiplies R_quant inside the inverse; it is Ns / (P_tx G^2)
/// in the units of r_quant.
inline ComplexMatrix mmse_combiner_i(const ComplexMatrix &h_tilde, const ComplexMatrix &w_rf_i, double snr,
                                     int ns, const ComplexMatrix &r_quant, double amp, double quant_weight) {
    if (w_rf_i.cols() != h_tilde.rows() || r_quant.rows() != h_tilde.rows() || r_quant.cols() != h_tilde.rows())
        fail(ErrorKind::shape_mismatch, "mmse_combiner_i: shapes do not conform");
    if (!(snr > 0.0) || !(amp > 0.0) || ns < 1)
        fail(ErrorKind::invalid_parameter, "mmse_combiner_i: snr, amplitude and streams must be positive");
    ComplexMatrix a = hermitian_part(h_tilde * h_tilde.adjoint() + (ns / snr) * (w_rf_i.adjoint() * w_rf_i) +
                                     quant_weight * r_quant);
    return hpd_inverse(a) * h_tilde / amp;
}

inline ComplexVector digital_si_cancel(const ComplexVector &y_dig, const ComplexVector &known_si) {
    if (y_dig.size() != known_si.size())
        fail(ErrorKind::shape_mismatch, "digital_si_cancel: length mismatch");
    return y_dig - known_si;
}

struct LnaOutput {
    std::vector<cplx> samples;
    int saturated = 0;
};

/// Linear up to the threshold (inclusive); above it the magnitude is clipped
/// and the sample counted as saturated.
inline LnaOutput lna_apply(const std::vector<cplx> &x, const LnaModel &model) {
    model.validate();
    LnaOutput out;
    out.samples.reserve(x.size());
    const double cap = std::sqrt(model.p_lna_max);
    for (const cplx &v : x) {
        if (std::norm(v) <= model.p_lna_max) {
            out.samples.push_back(model.gain * v);
        } else {
            ++out.saturated;
            out.samples.push_back(model.gain * std::polar(cap, std::arg(v)));
        }
    }
    return out;
}

/// Squared quantization step for a sinusoid of average power p: 8p / 2^(2b).
inline double quant_step_sq(double p, int bits) {
    if (!(p >= 0.0) || bits < 1)
        fail(ErrorKind::invalid_parameter, "quant_step_sq: need p >= 0 and bits >= 1");
    return 8.0 * p / std::ldexp(1.0, 2 * bits);
}

inline double quant_power(double q_sq) {
    if (!(q_sq >= 0.0))
        fail(ErrorKind::invalid_parameter, "quant_power: negative step");
    return q_sq / 12.0;
}

/// Largest SI power at an ADC that keeps the desired-signal SNR within a
/// factor delta of its input value. May come out negative.
inline double max_si_adc(double p_noise_adc, int bits, double delta_des, double snr_in, double b_adc = 1.0) {
    if (!(delta_des > 0.0) || delta_des > 1.0)
        fail(ErrorKind::invalid_parameter, "max_si_adc: delta must lie in (0, 1]");
    if (!(p_noise_adc > 0.0) || !(snr_in > 0.0) || !(b_adc > 0.0) || bits < 1)
        fail(ErrorKind::invalid_parameter, "max_si_adc: inputs must be positive");
    return p_noise_adc *
           (std::ldexp(1.0, 2 * bits) * 1.5 / b_adc * (1.0 - delta_des) / delta_des - snr_in - 1.0);
}

struct LinkParams {
    double snr_ij = 1.0;
    double snr_ki = 1.0;
    double inr = 1.0; // P_tx(i) G_ii^2 / noise power
    int ns_ij = 2;
    int ns_ki = 2;
    AdcModel adc;
};

/// Fills in the remaining beamformers around the chosen transmit precoder.
inline LinkDesign complete_design(const OuterResult &chosen, const CandidateSet &t_ij, const CandidateSet &t_ki,
                                  const ChannelSet &ch, const LinkParams &p) {
    LinkDesign d;
    const BeamPair &tx = t_ij.pairs.at(static_cast<std::size_t>(chosen.t));
    const BeamPair &rx = t_ki.pairs.at(static_cast<std::size_t>(chosen.r));
    d.t = chosen.t;
    d.r = chosen.r;
    d.solution = chosen.solution;
    d.f_bb_i = chosen.solution.f_bb;
    d.f_rf_i = tx.f_rf;
    d.w_rf_j = tx.w_rf;
    d.f_rf_k = rx.f_rf;
    d.w_rf_i = rx.w_rf;

    ComplexMatrix h_tilde_ij = d.w_rf_j.adjoint() * ch.h_ij * d.f_rf_i * d.f_bb_i;
    d.w_bb_j = lmmse_combiner_j(h_tilde_ij, d.w_rf_j, p.snr_ij, p.ns_ij, std::sqrt(p.snr_ij));

    ComplexMatrix h_tilde_ki = d.w_rf_i.adjoint() * ch.h_ki * d.f_rf_k;
    d.f_bb_k = receive_precoder_k(h_tilde_ki, d.w_rf_i, p.snr_ki, p.ns_ki);
    ComplexMatrix h_des = h_tilde_ki * d.f_bb_k;
    ComplexMatrix h_si = d.w_rf_i.adjoint() * ch.h_ii * d.f_rf_i * d.f_bb_i;
    d.adc_cov = adc_input_cov(h_des, h_si, d.w_rf_i, p.snr_ki, p.inr, p.ns_ki, p.ns_ij, 1.0);
    d.r_quant = quant_noise_cov(d.adc_cov, p.adc);
    d.w_bb_i = mmse_combiner_i(h_des, d.w_rf_i, p.snr_ki, p.ns_ki, d.r_quant, std::sqrt(p.snr_ki),
                               p.ns_ki / p.snr_ki);

    d.q_n_j = hermitian_part(d.w_bb_j.adjoint() * d.w_rf_j.adjoint() * d.w_rf_j * d.w_bb_j);
    d.q_n_i = hermitian_part(d.w_bb_i.adjoint() * d.w_rf_i.adjoint() * d.w_rf_i * d.w_bb_i);
    d.q_int_i = hermitian_part(d.w_bb_i.adjoint() * d.r_quant * d.w_bb_i);
    return d;
}

} // namespace fdx
