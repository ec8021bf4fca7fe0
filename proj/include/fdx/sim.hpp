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
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fdx/channel.hpp"
#include "fdx/codebook.hpp"
#include "fdx/constraints.hpp"
#include "fdx/link.hpp"
#include "fdx/metrics.hpp"
#include "fdx/solver.hpp"

namespace fdx {

struct SystemConfig {
    int nt_i = 32, nr_i = 32, nt_k = 32, nr_j = 32;
    int l_ij = 2, l_ki = 2; // RF chains = streams per link
    double snr_ij_db = 0.0, snr_ki_db = 0.0;
    std::optional<double> eta_lna_db; // unset means no limit
    std::optional<double> eta_adc_db;
    double kappa_db = 10.0;
    int bits = 12;
    int k_ij = 3, k_ki = 3;
    int mt_i = 32, mr_j = 32, mt_k = 32, mr_i = 32;
    double symbol_period_s = 1.0 / 400e6;
    double bandwidth_hz = 400e6;
    double ptx_dbm = 30.0;
    double noise_dbm = -85.0;
    double si_channel_gain_db = -60.0;
    int n_rays_min = 4, n_rays_max = 15;
    int si_rays_min = 1, si_rays_max = 15;
    double array_spacing = 0.5;
    double si_vertical_offset = 10.0;
    SolverSettings solver;
    std::uint64_t seed = 1;
    int trials = 1000;

    void validate() const {
        auto positive = [](int v, const char *name) {
            if (v < 1)
                fail(ErrorKind::config, std::string(name) + " must be positive");
        };
        positive(nt_i, "nt_i");
        positive(nr_i, "nr_i");
        positive(nt_k, "nt_k");
        positive(nr_j, "nr_j");
        positive(l_ij, "l_ij");
        positive(l_ki, "l_ki");
        positive(bits, "bits");
        positive(k_ij, "k_ij");
        positive(k_ki, "k_ki");
        positive(mt_i, "mt_i");
        positive(mr_j, "mr_j");
        positive(mt_k, "mt_k");
        positive(mr_i, "mr_i");
        if (trials < 0)
            fail(ErrorKind::config, "trials must be nonnegative");
        if (mt_i > nt_i || mr_j > nr_j || mt_k > nt_k || mr_i > nr_i)
            fail(ErrorKind::config, "training codebooks cannot exceed the array size");
        if (l_ij > std::min(mt_i, mr_j) || l_ki > std::min(mt_k, mr_i))
            fail(ErrorKind::config, "more RF chains than training beams");
        if (n_rays_min < 1 || n_rays_max < n_rays_min || si_rays_min < 1 || si_rays_max < si_rays_min)
            fail(ErrorKind::config, "ray count bounds must satisfy 1 <= min <= max");
        if (!(array_spacing > 0.0))
            fail(ErrorKind::config, "array_spacing must be positive");
        if (!(symbol_period_s > 0.0) || !(bandwidth_hz > 0.0))
            fail(ErrorKind::config, "symbol period and bandwidth must be positive");
        solver.validate();
    }

    double snr_ij() const { return db_to_linear(snr_ij_db); }
    double snr_ki() const { return db_to_linear(snr_ki_db); }
    double kappa() const { return db_to_linear(kappa_db); }
    double inr() const { return db_to_linear(ptx_dbm + si_channel_gain_db - noise_dbm); }
    SaturationLimits limits() const {
        return {eta_lna_db ? db_to_linear(*eta_lna_db) : kNoLimit, eta_adc_db ? db_to_linear(*eta_adc_db) : kNoLimit,
                l_ij};
    }
};

namespace detail {

template <class T>
void read_field(const nlohmann::json &j, const char *key, T &out) {
    auto it = j.find(key);
    if (it == j.end())
        return;
    try {
        out = it->get<T>();
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorKind::config, std::string("field '") + key + "': " + e.what());
    }
}

inline void read_optional(const nlohmann::json &j, const char *key, std::optional<double> &out) {
    auto it = j.find(key);
    if (it == j.end())
        return;
    if (it->is_null()) {
        out.reset();
        return;
    }
    if (!it->is_number())
        fail(ErrorKind::config, std::string("field '") + key + "' must be a number or null");
    out = it->get<double>();
}

inline void reject_unknown(const nlohmann::json &j, const std::set<std::string> &known, const char *where) {
    if (!j.is_object())
        fail(ErrorKind::config, std::string(where) + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            fail(ErrorKind::config, std::string("unknown key '") + it.key() + "' in " + where);
}

} // namespace detail

inline SolverSettings solver_from_json(const nlohmann::json &j) {
    detail::reject_unknown(j,
                           {"nu_min", "nu_max", "n_nu", "eps_pow", "eps_lna", "eps_adc", "max_inner_iters", "polish_iters",
                            "inner_tol", "step_shrink", "armijo_c"},
                           "solver");
    SolverSettings s;
    detail::read_field(j, "nu_min", s.nu_min);
    detail::read_field(j, "nu_max", s.nu_max);
    detail::read_field(j, "n_nu", s.n_nu);
    detail::read_field(j, "eps_pow", s.eps_pow);
    detail::read_field(j, "eps_lna", s.eps_lna);
    detail::read_field(j, "eps_adc", s.eps_adc);
    detail::read_field(j, "max_inner_iters", s.max_inner_iters);
    detail::read_field(j, "polish_iters", s.polish_iters);
    detail::read_field(j, "inner_tol", s.inner_tol);
    detail::read_field(j, "step_shrink", s.step_shrink);
    detail::read_field(j, "armijo_c", s.armijo_c);
    return s;
}

inline SystemConfig config_from_json(const nlohmann::json &j) {
    static const std::set<std::string> known = {
        "nt_i", "nr_i", "nt_k", "nr_j", "l_ij", "l_ki", "snr_ij_db", "snr_ki_db", "eta_lna_db", "eta_adc_db",
        "kappa_db", "bits", "k_ij", "k_ki", "mt_i", "mr_j", "mt_k", "mr_i", "symbol_period_s", "bandwidth_hz",
        "ptx_dbm", "noise_dbm", "si_channel_gain_db", "n_rays_min", "n_rays_max", "si_rays_min", "si_rays_max",
        "array_spacing", "si_vertical_offset", "solver", "seed", "trials"};
    detail::reject_unknown(j, known, "config");
    SystemConfig c;
    detail::read_field(j, "nt_i", c.nt_i);
    detail::read_field(j, "nr_i", c.nr_i);
    detail::read_field(j, "nt_k", c.nt_k);
    detail::read_field(j, "nr_j", c.nr_j);
    detail::read_field(j, "l_ij", c.l_ij);
    detail::read_field(j, "l_ki", c.l_ki);
    detail::read_field(j, "snr_ij_db", c.snr_ij_db);
    detail::read_field(j, "snr_ki_db", c.snr_ki_db);
    detail::read_optional(j, "eta_lna_db", c.eta_lna_db);
    detail::read_optional(j, "eta_adc_db", c.eta_adc_db);
    detail::read_field(j, "kappa_db", c.kappa_db);
    detail::read_field(j, "bits", c.bits);
    detail::read_field(j, "k_ij", c.k_ij);
    detail::read_field(j, "k_ki", c.k_ki);
    detail::read_field(j, "mt_i", c.mt_i);
    detail::read_field(j, "mr_j", c.mr_j);
    detail::read_field(j, "mt_k", c.mt_k);
    detail::read_field(j, "mr_i", c.mr_i);
    detail::read_field(j, "symbol_period_s", c.symbol_period_s);
    detail::read_field(j, "bandwidth_hz", c.bandwidth_hz);
    detail::read_field(j, "ptx_dbm", c.ptx_dbm);
    detail::read_field(j, "noise_dbm", c.noise_dbm);
    detail::read_field(j, "si_channel_gain_db", c.si_channel_gain_db);
    detail::read_field(j, "n_rays_min", c.n_rays_min);
    detail::read_field(j, "n_rays_max", c.n_rays_max);
    detail::read_field(j, "si_rays_min", c.si_rays_min);
    detail::read_field(j, "si_rays_max", c.si_rays_max);
    detail::read_field(j, "array_spacing", c.array_spacing);
    detail::read_field(j, "si_vertical_offset", c.si_vertical_offset);
    if (auto it = j.find("solver"); it != j.end())
        c.solver = solver_from_json(*it);
    detail::read_field(j, "seed", c.seed);
    detail::read_field(j, "trials", c.trials);
    c.validate();
    return c;
}

inline SystemConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::config, "cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorKind::config, path + ": " + e.what());
    }
    return config_from_json(j);
}

/// Applies FDX_SEED if it is set.
inline void apply_env_overrides(SystemConfig &c) {
    const char *env = std::getenv("FDX_SEED");
    if (!env || !*env)
        return;
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), v);
    if (ec != std::errc() || *ptr != '\0')
        fail(ErrorKind::config, std::string("FDX_SEED is not an unsigned integer: ") + env);
    c.seed = v;
}

// ---------------------------------------------------------------------------
// Sweeps

struct Assignment {
    std::string variable;
    double value;
};

/// One point on an axis may set several variables together.
using SweepPoint = std::vector<Assignment>;
using SweepAxis = std::vector<SweepPoint>;

struct SweepSpec {
    std::vector<SweepAxis> axes;
};

inline const std::vector<std::string> &sweep_variables() {
    static const std::vector<std::string> vars = {"snr", "eta_lna", "eta_adc", "bits", "kappa", "k_ij", "k_ki"};
    return vars;
}

inline void apply_assignment(SystemConfig &c, const Assignment &a) {
    auto as_int = [&](double v) {
        if (v != std::floor(v))
            fail(ErrorKind::config, "sweep variable " + a.variable + " needs integer values");
        return static_cast<int>(v);
    };
    auto as_db = [](double v) { return std::isinf(v) ? std::optional<double>{} : std::optional<double>{v}; };
    if (a.variable == "snr") {
        c.snr_ij_db = a.value;
        c.snr_ki_db = a.value;
    } else if (a.variable == "eta_lna") {
        c.eta_lna_db = as_db(a.value);
    } else if (a.variable == "eta_adc") {
        c.eta_adc_db = as_db(a.value);
    } else if (a.variable == "bits") {
        c.bits = as_int(a.value);
    } else if (a.variable == "kappa") {
        c.kappa_db = a.value;
    } else if (a.variable == "k_ij") {
        c.k_ij = as_int(a.value);
    } else if (a.variable == "k_ki") {
        c.k_ki = as_int(a.value);
    } else {
        fail(ErrorKind::config, "unknown sweep variable '" + a.variable + "'");
    }
}

/// Cartesian product of the axes, first axis outermost.
inline std::vector<SystemConfig> expand_sweep(const SystemConfig &base, const SweepSpec &spec) {
    std::vector<SystemConfig> out{base};
    for (const SweepAxis &axis : spec.axes) {
        if (axis.empty())
            continue;
        std::vector<SystemConfig> next;
        for (const SystemConfig &c : out)
            for (const SweepPoint &pt : axis) {
                SystemConfig v = c;
                for (const Assignment &a : pt)
                    apply_assignment(v, a);
                next.push_back(std::move(v));
            }
        out = std::move(next);
    }
    for (const SystemConfig &c : out)
        c.validate();
    return out;
}

namespace detail {

inline SweepAxis single(const std::string &var, const std::vector<double> &values) {
    SweepAxis axis;
    for (double v : values)
        axis.push_back({{var, v}});
    return axis;
}

inline std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> v;
    for (int k = 0; lo + k * step <= hi + 1e-9; ++k)
        v.push_back(lo + k * step);
    return v;
}

} // namespace detail

struct Preset {
    SweepSpec spec;
    SystemConfig base;
};

/// Named sweeps mirroring the published figures. The base config supplies
/// everything the preset does not pin.
inline Preset make_preset(const std::string &name, SystemConfig base) {
    Preset p;
    SweepSpec &s = p.spec;
    const std::vector<double> snr_grid = detail::grid(-20.0, 10.0, 5.0);
    const std::vector<double> eta_adc_grid = detail::grid(-30.0, 10.0, 5.0);
    if (name == "fig_se_snr") {
        base.kappa_db = 10.0;
        base.bits = 12;
        base.k_ij = base.k_ki = 3;
        s.axes.push_back(detail::single("snr", snr_grid));
        SweepAxis eta;
        for (double e : {-20.0, -10.0, 0.0, 10.0, 20.0})
            eta.push_back({{"eta_lna", e}, {"eta_adc", e - 20.0}});
        s.axes.push_back(eta);
    } else if (name == "fig_cand_snr") {
        base.kappa_db = 10.0;
        base.bits = 12;
        base.eta_lna_db = 15.0;
        base.eta_adc_db = -5.0;
        s.axes.push_back(detail::single("snr", snr_grid));
        SweepAxis ks;
        for (auto [a, b] : std::vector<std::pair<int, int>>{{1, 1}, {1, 3}, {3, 1}, {3, 2}, {3, 3}})
            ks.push_back({{"k_ij", double(a)}, {"k_ki", double(b)}});
        s.axes.push_back(ks);
    } else if (name == "fig_se_eta") {
        base.kappa_db = 10.0;
        base.bits = 12;
        base.k_ij = base.k_ki = 1;
        base.snr_ij_db = base.snr_ki_db = -10.0;
        s.axes.push_back(detail::single("eta_lna", {-10.0, 0.0, 10.0, 20.0}));
        s.axes.push_back(detail::single("eta_adc", eta_adc_grid));
    } else if (name == "fig_se_eta_bits") {
        base.kappa_db = 10.0;
        base.eta_lna_db = 20.0;
        base.k_ij = base.k_ki = 1;
        base.snr_ij_db = base.snr_ki_db = -10.0;
        s.axes.push_back(detail::single("bits", {4, 5, 6, 8, 12}));
        s.axes.push_back(detail::single("eta_adc", eta_adc_grid));
    } else if (name == "fig_se_kappa") {
        base.bits = 12;
        base.k_ij = base.k_ki = 1;
        base.snr_ij_db = base.snr_ki_db = -10.0;
        SweepAxis eta;
        for (auto [a, b] : std::vector<std::pair<double, double>>{{0, -20}, {10, -10}, {20, 0}, {30, 10}})
            eta.push_back({{"eta_lna", a}, {"eta_adc", b}});
        s.axes.push_back(eta);
        s.axes.push_back(detail::single("kappa", detail::grid(-10.0, 30.0, 5.0)));
    } else {
        fail(ErrorKind::config, "unknown preset '" + name + "'");
    }
    p.base = std::move(base);
    return p;
}

// ---------------------------------------------------------------------------
// Trials

struct TrialRecord {
    std::size_t point = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    SystemConfig config;
    TrialMetrics metrics;
    SolvePath path = SolvePath::penalty_bisection;
    bool bisection_saturated = false;
    bool converged = true;
    double power_value = 0.0;
    double lna_value = 0.0;
    double adc_value = 0.0;
    bool power_tight = false;
    bool lna_tight = false;
    bool adc_tight = false;
    int lna_violations = 0; // receive antennas whose average SI power exceeds the LNA limit
    double wall_time_s = 0.0;
};

/// Deterministic per-geometry pieces shared by all trials of a config.
struct TrialCache {
    ComplexMatrix h_nf;
    Codebook f_i, w_j, f_k, w_i;

    explicit TrialCache(const SystemConfig &c) {
        UlaGeometry tx_i{c.nt_i, c.array_spacing, 0.0};
        UlaGeometry rx_i{c.nr_i, c.array_spacing, c.si_vertical_offset};
        h_nf = gen_nearfield(tx_i, rx_i);
        f_i = dft_codebook(c.nt_i, c.mt_i, c.l_ij);
        w_j = dft_codebook(c.nr_j, c.mr_j, c.nr_j);
        f_k = dft_codebook(c.nt_k, c.mt_k, c.l_ki);
        w_i = dft_codebook(c.nr_i, c.mr_i, c.nr_i);
    }
};

inline ChannelSet draw_channels(const SystemConfig &c, const ComplexMatrix &h_nf, Rng &rng) {
    UlaGeometry tx_i{c.nt_i, c.array_spacing, 0.0};
    UlaGeometry rx_i{c.nr_i, c.array_spacing, c.si_vertical_offset};
    UlaGeometry rx_j{c.nr_j, c.array_spacing, 0.0};
    UlaGeometry tx_k{c.nt_k, c.array_spacing, 0.0};
    RayParams desired{c.n_rays_min, c.n_rays_max};
    RayParams si{c.si_rays_min, c.si_rays_max};
    ChannelSet ch;
    ch.kappa = c.kappa();
    ch.h_ij = gen_sv_channel(tx_i, rx_j, desired, rng);
    ch.h_ki = gen_sv_channel(tx_k, rx_i, desired, rng);
    ch.h_ii = gen_si_channel(ch.kappa, h_nf, tx_i, rx_i, si, rng);
    return ch;
}

/// Everything one trial produces before scoring.
struct TrialState {
    ChannelSet ch;
    CandidateSet t_ij, t_ki;
    std::vector<ComplexMatrix> h_eff_ij, h_eff_ki;
    SaturationLimits lim;
    OuterResult best;
    LinkParams params;
    LinkDesign design;
};

inline TrialState design_trial(const SystemConfig &c, const TrialCache &cache, std::uint64_t seed) {
    TrialState st;
    Rng rng(seed);
    st.ch = draw_channels(c, cache.h_nf, rng);
    const double snr_ij = c.snr_ij(), snr_ki = c.snr_ki();

    ComplexMatrix m_ij = measure(st.ch.h_ij, cache.f_i, cache.w_j, std::sqrt(snr_ij));
    ComplexMatrix m_ki = measure(st.ch.h_ki, cache.f_k, cache.w_i, std::sqrt(snr_ki));
    st.t_ij = acquire_candidates(m_ij, cache.f_i, cache.w_j, c.l_ij, c.k_ij);
    st.t_ki = acquire_candidates(m_ki, cache.f_k, cache.w_i, c.l_ki, c.k_ki);
    st.h_eff_ij = effective_channels(st.ch.h_ij, st.t_ij);
    st.h_eff_ki = effective_channels(st.ch.h_ki, st.t_ki);

    st.lim = c.limits();
    std::vector<double> rx_score = candidate_infos(st.h_eff_ki, st.t_ki, snr_ki, c.l_ki);
    st.best = outer_search(st.t_ij, st.h_eff_ij, st.t_ki, st.ch.h_ii, st.lim, snr_ij, c.solver, rx_score);

    st.params.snr_ij = snr_ij;
    st.params.snr_ki = snr_ki;
    st.params.inr = c.inr();
    st.params.ns_ij = c.l_ij;
    st.params.ns_ki = c.l_ki;
    st.params.adc.bits = c.bits;
    st.design = complete_design(st.best, st.t_ij, st.t_ki, st.ch, st.params);
    return st;
}

inline TrialRecord run_trial(const SystemConfig &c, const TrialCache &cache, std::uint64_t seed) {
    TrialState st = design_trial(c, cache, seed);
    const SaturationLimits &lim = st.lim;
    TrialRecord rec;
    rec.seed = seed;
    rec.config = c;
    rec.metrics = evaluate_trial(st.design, st.ch, st.h_eff_ij, st.t_ij, st.h_eff_ki, st.t_ki, st.params);
    const PrecoderSolution &sol = st.best.solution;
    rec.path = sol.path;
    rec.bisection_saturated = sol.bisection_saturated;
    rec.converged = sol.converged;
    rec.power_value = sol.report.power_value;
    rec.lna_value = sol.report.lna_value;
    rec.adc_value = sol.report.adc_value;
    rec.power_tight = sol.report.power_tight;
    rec.lna_tight = sol.report.lna_tight;
    rec.adc_tight = sol.report.adc_tight;
    for (double v : sol.report.per_antenna_values)
        if (v > lim.eta_lna * (1.0 + 1e-9) && v > kZeroFloor)
            ++rec.lna_violations;
    return rec;
}

inline TrialRecord run_trial(const SystemConfig &c, std::uint64_t seed) { return run_trial(c, TrialCache(c), seed); }

struct RunOptions {
    unsigned threads = 0; // 0 = hardware concurrency
    bool timing = false;
};

/// Runs every (point, trial) pair. Trial t of every point uses seed
/// base_seed + t, so points are compared on the same channel draws.
inline std::vector<TrialRecord> run_points(const std::vector<SystemConfig> &points, int trials,
                                           std::uint64_t base_seed, const RunOptions &opt = {}) {
    struct Job {
        std::size_t point;
        int trial;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < points.size(); ++p)
        for (int t = 0; t < trials; ++t)
            jobs.push_back({p, t});
    std::vector<TrialRecord> out(jobs.size());
    std::vector<std::unique_ptr<TrialCache>> caches;
    for (const SystemConfig &c : points)
        caches.push_back(std::make_unique<TrialCache>(c));

    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    std::size_t first_error_job = jobs.size();
    auto worker = [&] {
        for (;;) {
            std::size_t idx = next.fetch_add(1);
            if (idx >= jobs.size())
                return;
            const Job &job = jobs[idx];
            try {
                auto t0 = std::chrono::steady_clock::now();
                std::uint64_t seed = base_seed + static_cast<std::uint64_t>(job.trial);
                TrialRecord rec = run_trial(points[job.point], *caches[job.point], seed);
                rec.point = job.point;
                rec.trial = job.trial;
                if (opt.timing)
                    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                out[idx] = std::move(rec);
            } catch (const Error &e) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (idx < first_error_job) {
                    first_error_job = idx;
                    first_error = std::make_exception_ptr(e.with_context(
                        "point " + std::to_string(job.point) + " trial " + std::to_string(job.trial)));
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (idx < first_error_job) {
                    first_error_job = idx;
                    first_error = std::current_exception();
                }
            }
        }
    };
    unsigned n = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs.size(), 1)));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < n; ++k)
            pool.emplace_back(worker);
        for (std::thread &t : pool)
            t.join();
    }
    if (first_error)
        std::rethrow_exception(first_error);
    return out;
}

inline std::vector<TrialRecord> run_sweep(const SystemConfig &base, const SweepSpec &spec,
                                          const RunOptions &opt = {}) {
    return run_points(expand_sweep(base, spec), base.trials, base.seed, opt);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"')
            q += '"';
        q += ch;
    }
    return q + '"';
}

inline const std::vector<std::string> &csv_columns(bool timing) {
    static const std::vector<std::string> base = {
        "point", "trial", "seed", "snr_ij_db", "snr_ki_db", "eta_lna_db", "eta_adc_db", "kappa_db", "bits",
        "k_ij", "k_ki", "r_ij", "r_ki", "sum_se", "c_ij", "c_ki", "hd_baseline", "t", "r", "path",
        "bisection_saturated", "converged", "power_value", "lna_value", "adc_value", "power_tight", "lna_tight",
        "adc_tight", "lna_violations"};
    static const std::vector<std::string> timed = [] {
        std::vector<std::string> v = base;
        v.push_back("wall_time_s");
        return v;
    }();
    return timing ? timed : base;
}

inline void write_csv(std::ostream &os, const std::vector<TrialRecord> &records, bool timing = false) {
    const auto &cols = csv_columns(timing);
    for (std::size_t i = 0; i < cols.size(); ++i)
        os << (i ? "," : "") << csv_field(cols[i]);
    os << "\n";
    auto opt_db = [](const std::optional<double> &v) { return v ? format_double(*v) : std::string("inf"); };
    for (const TrialRecord &r : records) {
        const SystemConfig &c = r.config;
        const TrialMetrics &m = r.metrics;
        std::vector<std::string> f = {std::to_string(r.point), std::to_string(r.trial), std::to_string(r.seed),
                                      format_double(c.snr_ij_db), format_double(c.snr_ki_db), opt_db(c.eta_lna_db),
                                      opt_db(c.eta_adc_db), format_double(c.kappa_db), std::to_string(c.bits),
                                      std::to_string(c.k_ij), std::to_string(c.k_ki), format_double(m.r_ij),
                                      format_double(m.r_ki), format_double(m.sum_se), format_double(m.c_ij),
                                      format_double(m.c_ki), format_double(m.hd_baseline), std::to_string(m.t),
                                      std::to_string(m.r), to_string(r.path),
                                      std::to_string(int(r.bisection_saturated)), std::to_string(int(r.converged)),
                                      format_double(r.power_value), format_double(r.lna_value),
                                      format_double(r.adc_value), std::to_string(int(r.power_tight)),
                                      std::to_string(int(r.lna_tight)), std::to_string(int(r.adc_tight)),
                                      std::to_string(r.lna_violations)};
        if (timing)
            f.push_back(format_double(r.wall_time_s));
        for (std::size_t i = 0; i < f.size(); ++i)
            os << (i ? "," : "") << csv_field(f[i]);
        os << "\n";
    }
}

inline void emit_csv(const std::vector<TrialRecord> &records, const std::string &path, bool timing = false) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorKind::io, "cannot open " + path + " for writing");
    write_csv(out, records, timing);
    out.flush();
    if (!out)
        fail(ErrorKind::io, "write failed for " + path);
}

} // namespace fdx
