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
#include "fdx/numerics.hpp"

namespace fdx {

/// Sentinel for an absent LNA or ADC limit.
inline constexpr double kNoLimit = std::numeric_limits<double>::infinity();

/// Unitless self-interference limits, each a maximum SI power divided by
/// transmit power times SI channel gain.
struct SaturationLimits {
    double eta_lna = kNoLimit;
    double eta_adc = kNoLimit;
    int ns = 2;

    void validate() const {
        if (!(eta_lna >= 0.0) || !(eta_adc >= 0.0))
            fail(ErrorKind::invalid_parameter, "saturation limits must be nonnegative");
        if (ns < 1)
            fail(ErrorKind::invalid_parameter, "stream count must be positive");
    }
};

inline constexpr double kTightTol = 1e-6;

/// Constraint values at or below this count as zero (reachable only up to rounding).
inline constexpr double kZeroFloor = 1e-20;

struct ConstraintReport {
    double power_value = 0.0;
    double lna_value = 0.0;
    double adc_value = 0.0;
    std::vector<double> per_antenna_values;
    std::vector<double> per_chain_values;
    double power_slack = 0.0; // limit minus value, relative where the limit is nonzero
    double lna_slack = 0.0;
    double adc_slack = 0.0;
    bool power_tight = false;
    bool lna_tight = false;
    bool adc_tight = false;

    bool feasible(const SaturationLimits &lim, double rel_tol = 1e-9) const {
        auto ok = [&](double value, double limit) {
            return value <= limit * (1.0 + rel_tol) || value <= kZeroFloor;
        };
        return ok(power_value, 1.0) && ok(lna_value, lim.eta_lna) && ok(adc_value, lim.eta_adc);
    }
    bool any_tight() const { return power_tight || lna_tight || adc_tight; }
    double min_slack() const { return std::min({power_slack, lna_slack, adc_slack}); }
};

inline double eta_from_powers(double p_si_max_watts, double p_tx_watts, double gain_sq) {
    if (!(p_tx_watts > 0.0) || !(gain_sq > 0.0))
        fail(ErrorKind::invalid_parameter, "eta_from_powers: transmit power and gain must be positive");
    if (!(p_si_max_watts >= 0.0))
        fail(ErrorKind::invalid_parameter, "eta_from_powers: limit must be nonnegative");
    return p_si_max_watts / (p_tx_watts * gain_sq);
}

inline void check_si_shapes(const ComplexMatrix &h_ii, const ComplexMatrix &f_rf,
                            const ComplexMatrix &f_bb) {
    if (h_ii.cols() != f_rf.rows() || f_rf.cols() != f_bb.rows())
        fail(ErrorKind::shape_mismatch, "self-interference product does not conform");
}

inline double lna_constraint_value(const ComplexMatrix &h_ii, const ComplexMatrix &f_rf,
                                   const ComplexMatrix &f_bb, int ns) {
    check_si_shapes(h_ii, f_rf, f_bb);
    return sigma_max_sq(h_ii * f_rf * f_bb) / ns;
}

inline double adc_constraint_value(const ComplexMatrix &w_rf, const ComplexMatrix &h_ii,
                                   const ComplexMatrix &f_rf, const ComplexMatrix &f_bb, int ns) {
    check_si_shapes(h_ii, f_rf, f_bb);
    if (w_rf.rows() != h_ii.rows())
        fail(ErrorKind::shape_mismatch, "combiner does not conform to self-interference channel");
    return sigma_max_sq(w_rf.adjoint() * h_ii * f_rf * f_bb) / ns;
}

inline std::vector<double> row_powers(const ComplexMatrix &a, int ns) {
    std::vector<double> out(static_cast<std::size_t>(a.rows()));
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        out[static_cast<std::size_t>(r)] = a.row(r).squaredNorm() / ns;
    return out;
}

/// Average SI power at each receive antenna.
inline std::vector<double> per_antenna_powers(const ComplexMatrix &h_ii, const ComplexMatrix &f_rf,
                                              const ComplexMatrix &f_bb, int ns) {
    check_si_shapes(h_ii, f_rf, f_bb);
    return row_powers(h_ii * f_rf * f_bb, ns);
}

/// Average SI power at each receive RF chain.
inline std::vector<double> per_chain_powers(const ComplexMatrix &w_rf, const ComplexMatrix &h_ii,
                                            const ComplexMatrix &f_rf, const ComplexMatrix &f_bb,
                                            int ns) {
    check_si_shapes(h_ii, f_rf, f_bb);
    return row_powers(w_rf.adjoint() * h_ii * f_rf * f_bb, ns);
}

inline bool lna_redundant(const ComplexMatrix &h_ii, const ComplexMatrix &f_rf, int ns, double eta_lna) {
    if (std::isinf(eta_lna))
        return true;
    return eta_lna >= sigma_max_sq(h_ii * f_rf) / ns;
}

inline bool adc_redundant_by_power(const ComplexMatrix &w_rf, const ComplexMatrix &h_ii,
                                   const ComplexMatrix &f_rf, int ns, double eta_adc) {
    if (std::isinf(eta_adc))
        return true;
    return eta_adc >= sigma_max_sq(w_rf.adjoint() * h_ii * f_rf) / ns;
}

inline bool adc_redundant_by_lna(const ComplexMatrix &w_rf, double eta_lna, double eta_adc) {
    if (std::isinf(eta_adc))
        return true;
    if (std::isinf(eta_lna))
        return false;
    return eta_adc >= eta_lna * sigma_max_sq(w_rf);
}

struct PrescreenFlags {
    int t = 0; // index into the transmit-link candidates (F_RF(i))
    int r = 0; // index into the receive-link candidates (W_RF(i))
    bool lna_redundant = false;
    bool adc_redundant_by_power = false;
    bool adc_redundant_by_lna = false;

    bool adc_redundant() const { return adc_redundant_by_power || adc_redundant_by_lna; }
    bool fully_redundant() const { return lna_redundant && adc_redundant_by_power; }
};

/// Flags every (F_RF(i), W_RF(i)) pair. With `filter` set, pairs where
/// neither the LNA nor the ADC constraint is implied by the power budget are dropped.
inline std::vector<PrescreenFlags> prescreen_candidates(const CandidateSet &t_ij,
                                                        const CandidateSet &t_ki,
                                                        const ComplexMatrix &h_ii,
                                                        const SaturationLimits &lim,
                                                        bool filter = false) {
    if (t_ij.size() == 0 || t_ki.size() == 0)
        fail(ErrorKind::invalid_parameter, "prescreen_candidates: empty candidate set");
    std::vector<PrescreenFlags> out;
    for (std::size_t t = 0; t < t_ij.size(); ++t) {
        const ComplexMatrix &f_rf = t_ij.pairs[t].f_rf;
        bool lna = lna_redundant(h_ii, f_rf, lim.ns, lim.eta_lna);
        for (std::size_t r = 0; r < t_ki.size(); ++r) {
            const ComplexMatrix &w_rf = t_ki.pairs[r].w_rf;
            PrescreenFlags f;
            f.t = static_cast<int>(t);
            f.r = static_cast<int>(r);
            f.lna_redundant = lna;
            f.adc_redundant_by_power = adc_redundant_by_power(w_rf, h_ii, f_rf, lim.ns, lim.eta_adc);
            f.adc_redundant_by_lna = adc_redundant_by_lna(w_rf, lim.eta_lna, lim.eta_adc);
            if (filter && !f.lna_redundant && !f.adc_redundant_by_power)
                continue;
            out.push_back(f);
        }
    }
    return out;
}

inline double relative_slack(double value, double limit) {
    if (std::isinf(limit))
        return kNoLimit;
    if (limit == 0.0)
        return value <= kZeroFloor ? 0.0 : -kNoLimit;
    return (limit - value) / limit;
}

inline ConstraintReport evaluate_constraints(const ComplexMatrix &f_bb, const ComplexMatrix &h_ii,
                                             const ComplexMatrix &f_rf, const ComplexMatrix &w_rf,
                                             const SaturationLimits &lim) {
    ConstraintReport rep;
    rep.power_value = f_bb.squaredNorm();
    rep.lna_value = lna_constraint_value(h_ii, f_rf, f_bb, lim.ns);
    rep.adc_value = adc_constraint_value(w_rf, h_ii, f_rf, f_bb, lim.ns);
    rep.per_antenna_values = per_antenna_powers(h_ii, f_rf, f_bb, lim.ns);
    rep.per_chain_values = per_chain_powers(w_rf, h_ii, f_rf, f_bb, lim.ns);
    rep.power_slack = relative_slack(rep.power_value, 1.0);
    rep.lna_slack = relative_slack(rep.lna_value, lim.eta_lna);
    rep.adc_slack = relative_slack(rep.adc_value, lim.eta_adc);
    rep.power_tight = std::abs(rep.power_slack) <= kTightTol;
    rep.lna_tight = std::abs(rep.lna_slack) <= kTightTol;
    rep.adc_tight = std::abs(rep.adc_slack) <= kTightTol;
    return rep;
}

} // namespace fdx
