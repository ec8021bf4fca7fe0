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
#include <vector>

#include "fdx/numerics.hpp"

namespace fdx {

/// Uniform linear array. Element n sits at horizontal position n*spacing and
/// height vertical_offset, both in wavelengths.
struct UlaGeometry {
    int n_elements = 32;
    double spacing = 0.5;
    double vertical_offset = 0.0;

    void validate() const {
        if (n_elements < 1)
            fail(ErrorKind::invalid_parameter, "array needs at least one element");
        if (!(spacing > 0.0))
            fail(ErrorKind::invalid_parameter, "array spacing must be positive");
    }
};

struct RayParams {
    int n_rays_min = 4;
    int n_rays_max = 15;
    double angle_min = -kPi / 2;
    double angle_max = kPi / 2;

    void validate() const {
        if (n_rays_min < 1 || n_rays_max < n_rays_min)
            fail(ErrorKind::invalid_parameter, "ray count bounds must satisfy 1 <= min <= max");
        if (!(angle_min <= angle_max))
            fail(ErrorKind::invalid_parameter, "angle bounds reversed");
    }
};

struct Ray {
    double aod = 0.0;
    double aoa = 0.0;
    cplx gain{1.0, 0.0};
};

struct ChannelSet {
    ComplexMatrix h_ij; // Nr(j) x Nt(i)
    ComplexMatrix h_ki; // Nr(i) x Nt(k)
    ComplexMatrix h_ii; // Nr(i) x Nt(i)
    double kappa = 0.0;
};

inline ComplexVector array_response(const UlaGeometry &geom, double angle) {
    geom.validate();
    ComplexVector a(geom.n_elements);
    double phase = 2.0 * kPi * geom.spacing * std::sin(angle);
    for (int n = 0; n < geom.n_elements; ++n)
        a(n) = std::polar(1.0, phase * n);
    return a;
}

inline ComplexMatrix gen_sv_channel(const UlaGeometry &tx, const UlaGeometry &rx,
                                    const std::vector<Ray> &rays) {
    tx.validate();
    rx.validate();
    if (rays.empty())
        fail(ErrorKind::invalid_parameter, "channel needs at least one ray");
    ComplexMatrix h = ComplexMatrix::Zero(rx.n_elements, tx.n_elements);
    for (const Ray &ray : rays)
        h.noalias() += ray.gain * array_response(rx, ray.aoa) * array_response(tx, ray.aod).adjoint();
    h *= std::sqrt(1.0 / static_cast<double>(rays.size()));
    return h;
}

inline std::vector<Ray> draw_rays(const RayParams &params, Rng &rng) {
    params.validate();
    auto n = rng.uniform_int(params.n_rays_min, params.n_rays_max);
    std::vector<Ray> rays(static_cast<std::size_t>(n));
    for (Ray &ray : rays) {
        ray.gain = rng.complex_normal();
        ray.aod = rng.uniform(params.angle_min, params.angle_max);
        ray.aoa = rng.uniform(params.angle_min, params.angle_max);
    }
    return rays;
}

inline ComplexMatrix gen_sv_channel(const UlaGeometry &tx, const UlaGeometry &rx,
                                    const RayParams &params, Rng &rng) {
    return gen_sv_channel(tx, rx, draw_rays(params, rng));
}

/// Spherical-wave channel between two parallel arrays, scaled so that
/// ||H||_F^2 = Nt*Nr. Pass normalize=false to get the raw 1/r magnitudes.
inline ComplexMatrix gen_nearfield(const UlaGeometry &tx, const UlaGeometry &rx,
                                   bool normalize = true) {
    tx.validate();
    rx.validate();
    double dy = rx.vertical_offset - tx.vertical_offset;
    ComplexMatrix h(rx.n_elements, tx.n_elements);
    for (int u = 0; u < tx.n_elements; ++u) {
        for (int v = 0; v < rx.n_elements; ++v) {
            double dx = tx.spacing * u - rx.spacing * v;
            double r = std::hypot(dx, dy);
            if (!(r > 0.0))
                fail(ErrorKind::geometry, "coincident transmit and receive elements");
            h(v, u) = std::polar(1.0 / r, -2.0 * kPi * r);
        }
    }
    if (normalize)
        h *= std::sqrt(static_cast<double>(tx.n_elements) * rx.n_elements) / h.norm();
    return h;
}

inline ComplexMatrix mix_si_channel(double kappa, const ComplexMatrix &h_nf,
                                    const ComplexMatrix &h_ff) {
    if (!(kappa >= 0.0))
        fail(ErrorKind::invalid_parameter, "Rician factor must be nonnegative");
    if (h_nf.rows() != h_ff.rows() || h_nf.cols() != h_ff.cols())
        fail(ErrorKind::shape_mismatch, "near-field and far-field shapes differ");
    if (std::isinf(kappa))
        return h_nf;
    return std::sqrt(kappa / (kappa + 1.0)) * h_nf + std::sqrt(1.0 / (kappa + 1.0)) * h_ff;
}

/// Self-interference channel with a precomputed near-field part.
inline ComplexMatrix gen_si_channel(double kappa, const ComplexMatrix &h_nf,
                                    const UlaGeometry &tx, const UlaGeometry &rx,
                                    const RayParams &params, Rng &rng) {
    if (!(kappa >= 0.0))
        fail(ErrorKind::invalid_parameter, "Rician factor must be nonnegative");
    return mix_si_channel(kappa, h_nf, gen_sv_channel(tx, rx, params, rng));
}

inline ComplexMatrix gen_si_channel(double kappa, const UlaGeometry &tx, const UlaGeometry &rx,
                                    const RayParams &params, Rng &rng) {
    return gen_si_channel(kappa, gen_nearfield(tx, rx), tx, rx, params, rng);
}

inline double snr_from_powers(double ptx_watts, double gain_sq, double noise_psd_w_per_hz,
                              double bandwidth_hz) {
    if (!(ptx_watts > 0.0) || !(gain_sq > 0.0) || !(noise_psd_w_per_hz > 0.0) ||
        !(bandwidth_hz > 0.0))
        fail(ErrorKind::invalid_parameter, "snr_from_powers: inputs must be positive");
    return ptx_watts * gain_sq / (noise_psd_w_per_hz * bandwidth_hz);
}

} // namespace fdx
