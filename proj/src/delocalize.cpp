#include "fit/delocalize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fit/parallel.hpp"

namespace fit {

std::array<double, 3> sample_offset(const DelocalizationSpec& spec, RngStream& rng) {
    if (spec.sigma == 0.0) return {0.0, 0.0, 0.0};
    const double sd = spec.sigma / std::sqrt(2.0);
    if (spec.sampling_1d) return {0.0, 0.0, sd * rng.normal()};
    const double x = sd * rng.normal();
    const double y = sd * rng.normal();
    const double z = sd * rng.normal();
    return {x, y, z};
}

double effective_interaction(const std::array<double, 3>& d_vec, const std::array<double, 3>& r_b,
                             double c6) {
    const double sx = d_vec[0] + r_b[0];
    const double sy = d_vec[1] + r_b[1];
    const double sz = d_vec[2] + r_b[2];
    const double r2 = sx * sx + sy * sy + sz * sz;
    if (r2 == 0.0) throw SingularGeometryError("coincident control and target positions");
    return -c6 / (r2 * r2 * r2);
}

namespace {

struct Stats {
    std::vector<double> mean;
    std::vector<double> se;
};

// Fixed-index reduction: identical result regardless of evaluation order.
Stats reduce(const std::vector<std::vector<double>>& curves) {
    const int n = static_cast<int>(curves.size());
    const int m = n > 0 ? static_cast<int>(curves.front().size()) : 0;
    Stats s;
    s.mean.assign(m, 0.0);
    s.se.assign(m, 0.0);
    for (const auto& c : curves)
        for (int j = 0; j < m; ++j) s.mean[j] += c[j];
    for (double& v : s.mean) v /= std::max(1, n);
    if (n > 1) {
        for (const auto& c : curves)
            for (int j = 0; j < m; ++j) {
                const double dlt = c[j] - s.mean[j];
                s.se[j] += dlt * dlt;
            }
        for (double& v : s.se) v = std::sqrt(v / (n - 1)) / std::sqrt(static_cast<double>(n));
    }
    return s;
}

void validate_spec(const DelocalizationSpec& spec) {
    if (spec.sigma < 0) throw ConfigError("sigma must be >= 0");
    if (spec.n_trajectories < 1) throw ConfigError("need at least one trajectory");
    if (spec.d <= 0) throw ConfigError("channel separation must be positive");
}

} // namespace

McSpectrumResult mc_spectrum(const DelocalizationSpec& spec, const PropagationConfig& base_config,
                             const std::vector<double>& delta_c_grid) {
    validate_spec(spec);
    if (!base_config.control_position)
        throw ConfigError("mc_spectrum requires the localized scenario");
    if (delta_c_grid.empty()) throw ConfigError("delta_c grid is empty");

    McSpectrumResult out;
    out.delta_c = delta_c_grid;
    out.rng_seed = spec.rng_seed;
    out.n_trajectories = spec.n_trajectories;

    const int ng = static_cast<int>(delta_c_grid.size());
    const int nt = spec.n_trajectories;
    std::vector<std::vector<double>> slots(nt);
    std::vector<char> ok(nt, 0);
    parallel_for(nt, [&](int k) {
        RngStream rng = RngStream::for_trajectory(spec.rng_seed, static_cast<std::uint64_t>(k));
        const std::array<double, 3> r = sample_offset(spec, rng);

        PropagationConfig cfg = base_config;
        cfg.c6 = spec.c6;
        cfg.control_position = *base_config.control_position + r[2];
        cfg.d = std::hypot(spec.d + r[0], r[1]);

        std::vector<double> curve(ng);
        bool good = true;
        for (int j = 0; j < ng && good; ++j) {
            cfg.drive.delta_c = delta_c_grid[j];
            try {
                curve[j] = propagate_cw(cfg).transmission;
            } catch (const FitError&) {
                good = false;
            }
        }
        if (good) {
            slots[k] = std::move(curve);
            ok[k] = 1;
        }
    });
    for (int k = 0; k < nt; ++k) {
        if (ok[k])
            out.trajectory_t.push_back(std::move(slots[k]));
        else
            ++out.n_failed;
    }
    if (out.trajectory_t.empty())
        throw NumericalInstabilityError("all Monte-Carlo trajectories failed");

    const Stats full = reduce(out.trajectory_t);
    out.mean_t = full.mean;
    out.stderr_t = full.se;

    // Convergence: the mean using all trajectories vs omitting the last 10%.
    const int n_ok = static_cast<int>(out.trajectory_t.size());
    const int n_head = n_ok - std::max(1, n_ok / 10);
    if (n_head >= 1 && n_head < n_ok) {
        std::vector<std::vector<double>> head(out.trajectory_t.begin(),
                                              out.trajectory_t.begin() + n_head);
        const Stats partial = reduce(head);
        double worst = 0.0;
        for (int j = 0; j < ng; ++j) {
            const double scale = std::max(std::abs(full.mean[j]), 1e-12);
            worst = std::max(worst, std::abs(full.mean[j] - partial.mean[j]) / scale);
        }
        out.converged = worst < 0.01;
    } else {
        out.converged = (n_ok == spec.n_trajectories);
    }
    return out;
}

McSwitchResult mc_switch(const DelocalizationSpec& spec, const PropagationConfig& ramp_config) {
    validate_spec(spec);
    if (!ramp_config.ramp) throw ConfigError("mc_switch requires the co-propagating scenario");
    const double v0 = effective_interaction({spec.d, 0.0, 0.0}, {0.0, 0.0, 0.0}, spec.c6);
    const double dcf = ramp_config.ramp->delta_cF;
    if (std::abs(dcf) > 1e-9 && std::abs(dcf + v0) > 1e-9)
        throw ConfigError("ramp must target delta_cF = 0 or -V(0) = " + std::to_string(-v0));

    McSwitchResult out;
    out.rng_seed = spec.rng_seed;
    out.n_trajectories = spec.n_trajectories;

    const int nt = spec.n_trajectories;
    std::vector<PropagationResult> slots(nt);
    std::vector<double> v_slots(nt, 0.0);
    std::vector<char> ok(nt, 0);
    parallel_for(nt, [&](int k) {
        RngStream rng = RngStream::for_trajectory(spec.rng_seed, static_cast<std::uint64_t>(k));
        const std::array<double, 3> r = sample_offset(spec, rng);
        const double v_k = effective_interaction({spec.d, 0.0, 0.0}, r, spec.c6);

        PropagationConfig cfg = ramp_config;
        cfg.v_ab_override = v_k;
        try {
            slots[k] = propagate_cw(cfg);
            v_slots[k] = v_k;
            ok[k] = 1;
        } catch (const FitError&) {
        }
    });

    std::vector<std::vector<double>> i_s, r33a, r33b, re31b;
    for (int k = 0; k < nt; ++k) {
        if (!ok[k]) {
            ++out.n_failed;
            continue;
        }
        if (out.z.empty()) out.z = slots[k].z;
        i_s.push_back(std::move(slots[k].i_s));
        r33a.push_back(std::move(slots[k].rho33_A));
        r33b.push_back(std::move(slots[k].rho33_B));
        re31b.push_back(std::move(slots[k].re_rho31_B));
        out.v_ab.push_back(v_slots[k]);
    }
    if (i_s.empty()) throw NumericalInstabilityError("all Monte-Carlo trajectories failed");

    out.i_s_single = i_s.front();
    out.rho33_A_single = r33a.front();
    out.rho33_B_single = r33b.front();
    out.re_rho31_B_single = re31b.front();

    const Stats si = reduce(i_s);
    out.i_s_mean = si.mean;
    out.i_s_stderr = si.se;
    out.rho33_A_mean = reduce(r33a).mean;
    out.rho33_B_mean = reduce(r33b).mean;
    out.re_rho31_B_mean = reduce(re31b).mean;
    return out;
}

} // namespace fit
