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

// Monte Carlo driver: single-point runs and preset sweeps, CSV output.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "fdx/fdx.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNumeric = 3 };

int exit_code_for(fdx::ErrorKind kind) {
    switch (kind) {
    case fdx::ErrorKind::config:
    case fdx::ErrorKind::invalid_parameter:
        return kConfig;
    case fdx::ErrorKind::numeric_failure:
    case fdx::ErrorKind::rank_deficient:
    case fdx::ErrorKind::degenerate_input:
        return kNumeric;
    default:
        return kOther;
    }
}

struct Common {
    std::string config;
    std::string out;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    bool timing = false;
};

void add_common(CLI::App *app, Common &c) {
    app->add_option("--config", c.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
    app->add_option("--out", c.out, "CSV output path")->required();
    app->add_option("--trials", c.trials, "Trials per point (overrides the config)")->check(CLI::NonNegativeNumber);
    app->add_option("--seed", c.seed, "Base seed (overrides the config and FDX_SEED)");
    app->add_option("--threads", c.threads, "Worker threads, 0 = all cores");
    app->add_flag("--timing", c.timing, "Add a per-trial wall-time column");
}

fdx::SystemConfig resolve(const Common &c) {
    fdx::SystemConfig cfg = fdx::load_config(c.config);
    fdx::apply_env_overrides(cfg);
    if (c.seed)
        cfg.seed = *c.seed;
    if (c.trials)
        cfg.trials = *c.trials;
    cfg.validate();
    return cfg;
}

void summarize(const std::vector<fdx::TrialRecord> &records) {
    std::size_t n_points = 0;
    for (const auto &r : records)
        n_points = std::max(n_points, r.point + 1);
    std::vector<double> sum(n_points), r_ij(n_points), r_ki(n_points), c_ki(n_points);
    std::vector<int> count(n_points);
    for (const auto &r : records) {
        sum[r.point] += r.metrics.sum_se;
        r_ij[r.point] += r.metrics.r_ij;
        r_ki[r.point] += r.metrics.r_ki;
        c_ki[r.point] += r.metrics.c_ki;
        ++count[r.point];
    }
    for (std::size_t p = 0; p < n_points; ++p) {
        if (count[p] == 0)
            continue;
        double n = count[p];
        std::fprintf(stderr, "point %zu: trials %d  mean r_ij %.4f  r_ki %.4f  sum %.4f  c_ki %.4f\n", p, count[p],
                     r_ij[p] / n, r_ki[p] / n, sum[p] / n, c_ki[p] / n);
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Full-duplex hybrid beamforming Monte Carlo simulator"};
    app.require_subcommand(1);

    Common run_opts;
    CLI::App *run = app.add_subcommand("run", "Run trials at the configured operating point");
    add_common(run, run_opts);

    Common sweep_opts;
    std::string preset;
    CLI::App *sweep = app.add_subcommand("sweep", "Run a named parameter sweep");
    add_common(sweep, sweep_opts);
    sweep->add_option("--preset", preset, "fig_se_snr, fig_cand_snr, fig_se_eta, fig_se_eta_bits, fig_se_kappa")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        std::vector<fdx::TrialRecord> records;
        bool timing = false;
        std::string out;
        if (run->parsed()) {
            fdx::SystemConfig cfg = resolve(run_opts);
            records = fdx::run_sweep(cfg, {}, {run_opts.threads, run_opts.timing});
            timing = run_opts.timing;
            out = run_opts.out;
        } else {
            fdx::SystemConfig cfg = resolve(sweep_opts);
            fdx::Preset p = fdx::make_preset(preset, cfg);
            records = fdx::run_sweep(p.base, p.spec, {sweep_opts.threads, sweep_opts.timing});
            timing = sweep_opts.timing;
            out = sweep_opts.out;
        }
        fdx::emit_csv(records, out, timing);
        summarize(records);
        return kOk;
    } catch (const fdx::Error &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kOther;
    }
}
