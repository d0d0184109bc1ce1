#include "fit/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fit {

namespace {

CompositeSpace make_pair_space() {
    AtomSite target;
    target.level_count = 3;
    target.role = Role::target;
    AtomSite control;
    control.level_count = 2;
    control.role = Role::control;
    return CompositeSpace({target, control});
}

void validate_config(const PropagationConfig& c, bool require_positive_kappa) {
    if (c.grid.n_cells < 16) throw ConfigError("grid needs at least 16 cells");
    if (!(c.grid.z_max > c.grid.z_min)) throw ConfigError("grid extent must be positive");
    if (c.kappa < 0 || (require_positive_kappa && c.kappa == 0))
        throw ConfigError("kappa must be positive");
    if (c.control_position.has_value() == c.ramp.has_value())
        throw ConfigError("exactly one of control_position and ramp must be set");
    if (c.ramp && c.ramp->z_s <= 0) throw ConfigError("ramp z_s must be > 0");
    if (c.drive.omega_p <= 0) throw ConfigError("propagation requires omega_p > 0");
}

double interaction_at(const PropagationConfig& c, double z) {
    if (c.control_position) return pair_potential(z - *c.control_position, c.d, c.c6);
    if (c.v_ab_override) return *c.v_ab_override;
    return pair_potential(0.0, c.d, c.c6);
}

double detuning_at(const PropagationConfig& c, double z) {
    return c.ramp ? detuning_ramp(z, *c.ramp) : c.drive.delta_c;
}

struct PairOps {
    Operator s12a, s33a, s33b, s13b;

    explicit PairOps(const CompositeSpace& space)
        : s12a(embed_operator(space, 0, local_sigma(3, 1, 2))),
          s33a(embed_operator(space, 0, local_sigma(3, 3, 3))),
          s33b(embed_operator(space, 1, local_sigma(space.site(1).level_count, 3, 3))),
          s13b(embed_operator(space, 1, local_sigma(space.site(1).level_count, 1, 3))) {}

    cplx rho21(const Mat& rho) const { return rho.cwiseProduct(s12a.entries.transpose()).sum(); }
    double rho33_A(const Mat& rho) const {
        return rho.cwiseProduct(s33a.entries.transpose()).sum().real();
    }
    double rho33_B(const Mat& rho) const {
        return rho.cwiseProduct(s33b.entries.transpose()).sum().real();
    }
    double re_rho31_B(const Mat& rho) const {
        return rho.cwiseProduct(s13b.entries.transpose()).sum().real();
    }
};

} // namespace

double detuning_ramp(double z, const RampSpec& ramp) {
    return ramp.delta_c0 +
           (ramp.delta_c0 - ramp.delta_cF) * (std::tanh(1.0 - (z - ramp.z_q) / ramp.z_s) - 1.0) / 2.0;
}

PropagationResult propagate_cw(const PropagationConfig& config) {
    validate_config(config, true);
    const CompositeSpace space = make_pair_space();
    const PairOps ops(space);
    const AffineSteadySolver solver(space, config.drive, config.dissipators,
                                    config.steady.residual_tol);

    const int n = config.grid.n_cells;
    const double dz = config.grid.dz();
    const double omega_p = config.drive.omega_p;

    auto solve_at = [&](double z, int cell) {
        try {
            return solver.solve(detuning_at(config, z), interaction_at(config, z));
        } catch (const NonUniqueSteadyStateError& e) {
            throw NonUniqueSteadyStateError(std::string(e.what()) + " at cell " +
                                            std::to_string(cell) + " (z = " + std::to_string(z) +
                                            ")");
        }
    };
    auto rate = [&](const Mat& rho) {
        return -2.0 * config.kappa * ops.rho21(rho).imag() / omega_p;
    };

    PropagationResult out;
    out.kappa = config.kappa;
    out.z.reserve(n + 1);
    auto record = [&](double z, const Mat& rho, double log_i) {
        out.z.push_back(z);
        out.i_s.push_back(std::exp(log_i));
        out.rho33_A.push_back(ops.rho33_A(rho));
        out.rho33_B.push_back(ops.rho33_B(rho));
        out.re_rho31_B.push_back(ops.re_rho31_B(rho));
        out.delta_c.push_back(detuning_at(config, z));
    };

    double y = 0.0;
    double z = config.grid.z_min;
    Mat rho_edge = solve_at(z, 0).entries;
    record(z, rho_edge, y);
    double k_edge = rate(rho_edge);
    for (int i = 0; i < n; ++i) {
        const double z_mid = z + 0.5 * dz;
        const double z_next = z + dz;
        const double k_mid = rate(solve_at(z_mid, i).entries);
        rho_edge = solve_at(z_next, i + 1).entries;
        const double k_next = rate(rho_edge);
        // RK4 on d(ln I)/dz with a z-only rate collapses to Simpson's rule.
        y += dz / 6.0 * (k_edge + 4.0 * k_mid + k_next);
        record(z_next, rho_edge, y);
        k_edge = k_next;
        z = z_next;
    }
    out.transmission = out.i_s.back();
    return out;
}

double check_linearity(const PropagationConfig& config) {
    const double t_full = propagate_cw(config).transmission;
    PropagationConfig half = config;
    half.drive.omega_p *= 0.5;
    const double t_half = propagate_cw(half).transmission;
    const double scale = std::max(std::max(t_full, t_half), 1e-300);
    return std::abs(t_full - t_half) / scale;
}

namespace {

double transmission_at_length(const PropagationConfig& config, double length) {
    const PropagationResult res = propagate_cw(config);
    if (length >= config.grid.z_max) return res.transmission;
    if (length <= config.grid.z_min) return 1.0;
    // interpolate ln I between the bracketing nodes
    const double dz = config.grid.dz();
    const double s = (length - config.grid.z_min) / dz;
    const int i = std::min(static_cast<int>(s), config.grid.n_cells - 1);
    const double frac = s - i;
    const double y0 = std::log(std::max(res.i_s[i], 1e-300));
    const double y1 = std::log(std::max(res.i_s[i + 1], 1e-300));
    return std::exp(y0 + frac * (y1 - y0));
}

} // namespace

double calibrate_kappa(double target_extinction_length, const PropagationConfig& reference_config) {
    if (!reference_config.ramp)
        throw ConfigError("kappa calibration requires the co-propagating ramp scenario");
    const double target = 0.01;
    const double band = 0.001;
    auto t_of = [&](double kappa) {
        PropagationConfig c = reference_config;
        c.kappa = kappa;
        return transmission_at_length(c, target_extinction_length);
    };
    double lo = 1e-4, hi = 10.0;
    const double t_lo = t_of(lo), t_hi = t_of(hi);
    if (!(t_lo > target && t_hi < target))
        throw CalibrationError("extinction target not bracketed: T(" + std::to_string(lo) +
                               ") = " + std::to_string(t_lo) + ", T(" + std::to_string(hi) +
                               ") = " + std::to_string(t_hi));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double t = t_of(mid);
        if (std::abs(t - target) <= band) return mid;
        (t > target ? lo : hi) = mid;
    }
    throw CalibrationError("kappa bisection did not reach the extinction band");
}

namespace {

struct TdState {
    Vec field;              // Omega_p per node
    std::vector<Mat> rhos;  // joint density matrix per node
};

void td_axpy(TdState& y, double a, const TdState& x) {
    y.field += a * x.field;
    for (std::size_t i = 0; i < y.rhos.size(); ++i) y.rhos[i] += a * x.rhos[i];
}

} // namespace

double td_stable_dt(const PropagationConfig& config) {
    validate_config(config, false);
    if (config.c_um_per_gamma <= 0) throw ConfigError("signal speed must be positive");
    const double dz = config.grid.dz();
    double v_worst = 0.0;
    for (int i = 0; i <= config.grid.n_cells; ++i)
        v_worst = std::max(v_worst,
                           std::abs(interaction_at(config, config.grid.z_min + i * dz)));
    std::vector<double> detunings;
    if (config.ramp)
        detunings = {config.ramp->delta_c0, config.ramp->delta_cF};
    else
        detunings = {config.drive.delta_c};
    const CompositeSpace space = make_pair_space();
    double stiffness = 0.0;
    for (double dc : detunings) {
        DriveParams drive = config.drive;
        drive.delta_c = dc;
        InteractionSpec inter;
        inter.pair_overrides[{0, 1}] = v_worst;
        const Liouvillian l(space, build_hamiltonian(space, drive, inter), config.dissipators);
        stiffness = std::max(stiffness, l.stiffness_scale());
    }
    return std::min(dz / config.c_um_per_gamma, 2.5 / stiffness);
}

TdPropagationResult propagate_td(const PropagationConfig& config,
                                 const std::function<double(double)>& pulse, double t_final,
                                 double dt) {
    validate_config(config, false);
    if (dt <= 0 || t_final <= 0) throw ConfigError("td mode needs dt > 0 and t_final > 0");
    const double c = config.c_um_per_gamma;
    if (c <= 0) throw ConfigError("signal speed must be positive");
    const double dz = config.grid.dz();
    if (c * dt > dz * (1.0 + 1e-12))
        throw ConfigError("CFL violation: c dt = " + std::to_string(c * dt) + " exceeds dz = " +
                          std::to_string(dz));

    const CompositeSpace space = make_pair_space();
    const PairOps ops(space);
    const int dim = space.total_dim();
    const int nn = config.grid.n_cells + 1;
    const double z_min = config.grid.z_min;
    const double omega_p0 = config.drive.omega_p;

    const double t_last_record = (config.grid.z_max - z_min) / c + config.td_record_delay;
    if (t_final < t_last_record)
        throw ConfigError("t_final too small to record the full medium (needs >= " +
                          std::to_string(t_last_record) + ")");

    // Dissipative part of the generator (H = 0) shared by all cells.
    const Liouvillian diss_l(space, Operator{Mat::Zero(dim, dim)}, config.dissipators);
    // Per-node drive-independent Hamiltonian (probe off, delta_c off).
    DriveParams drive0 = config.drive;
    drive0.omega_p = 0.0;
    drive0.delta_c = 0.0;
    std::vector<Mat> h0(nn);
    for (int i = 0; i < nn; ++i) {
        InteractionSpec inter;
        inter.pair_overrides[{0, 1}] = interaction_at(config, z_min + i * dz);
        h0[i] = build_hamiltonian(space, drive0, inter).entries;
    }
    const Mat d_op = embed_operator(space, 1, local_sigma(2, 3, 3)).entries;
    const Mat s21a = embed_operator(space, 0, local_sigma(3, 2, 1)).entries;
    const Mat s12a = s21a.adjoint();

    auto boundary = [&](double t) { return omega_p0 * pulse(z_min - c * t); };

    TdState state{Vec(nn), std::vector<Mat>(nn, DensityMatrix::ground(dim).entries)};
    for (int i = 0; i < nn; ++i) state.field[i] = omega_p0 * pulse(z_min + i * dz);

    // The ramp is sampled at the co-moving coordinate of the recorded
    // characteristic: the signal element recorded at node z passed every
    // upstream node j exactly when xi(t) = j, so it experienced the full
    // spatial profile ramp(z') along its path, like the cw reduction.
    auto comoving_dc = [&](double t) {
        return config.ramp
                   ? detuning_ramp(z_min + c * (t - config.td_record_delay), *config.ramp)
                   : config.drive.delta_c;
    };

    TdState deriv_buf{Vec(nn), std::vector<Mat>(nn, Mat(dim, dim))};
    Mat h(dim, dim), comm(dim, dim);
    auto derivative = [&](const TdState& s, double t, TdState& ds) {
        const double dc = comoving_dc(t);
        const double eps = 1e-6 * dt;
        ds.field[0] = (boundary(t + eps) - boundary(t - eps)) / (2.0 * eps);
        for (int i = 1; i < nn; ++i)
            ds.field[i] = -c * (s.field[i] - s.field[i - 1]) / dz +
                          kI * (config.kappa * c) * ops.rho21(s.rhos[i]);
        for (int i = 0; i < nn; ++i) {
            h = h0[i];
            h += dc * d_op;
            h -= 0.5 * (s.field[i] * s21a + std::conj(s.field[i]) * s12a);
            diss_l.apply_into(s.rhos[i], ds.rhos[i]);
            comm.noalias() = h * s.rhos[i];
            comm.noalias() -= s.rhos[i] * h;
            ds.rhos[i] += -kI * comm;
        }
    };

    const long n_steps = static_cast<long>(std::ceil(t_final / dt - 1e-12));
    const long slice_every = std::max(1L, n_steps / 200);

    TdPropagationResult out;
    out.result.kappa = config.kappa;
    int next_record = 0;
    auto record_node = [&](int i, double t) {
        out.result.z.push_back(z_min + i * dz);
        out.result.i_s.push_back(std::norm(state.field[i]) / (omega_p0 * omega_p0));
        out.result.rho33_A.push_back(ops.rho33_A(state.rhos[i]));
        out.result.rho33_B.push_back(ops.rho33_B(state.rhos[i]));
        out.result.re_rho31_B.push_back(ops.re_rho31_B(state.rhos[i]));
        out.result.delta_c.push_back(comoving_dc(t));
    };

    TdState k1 = deriv_buf, k2 = deriv_buf, k3 = deriv_buf, k4 = deriv_buf, tmp = state;
    double t = 0.0;
    for (long step = 0; step < n_steps; ++step) {
        const double h_step = std::min(dt, t_final - t);
        derivative(state, t, k1);
        tmp = state;
        td_axpy(tmp, 0.5 * h_step, k1);
        derivative(tmp, t + 0.5 * h_step, k2);
        tmp = state;
        td_axpy(tmp, 0.5 * h_step, k2);
        derivative(tmp, t + 0.5 * h_step, k3);
        tmp = state;
        td_axpy(tmp, h_step, k3);
        derivative(tmp, t + h_step, k4);
        td_axpy(state, h_step / 6.0, k1);
        td_axpy(state, h_step / 3.0, k2);
        td_axpy(state, h_step / 3.0, k3);
        td_axpy(state, h_step / 6.0, k4);
        t += h_step;
        state.field[0] = boundary(t);

        if (!state.field.allFinite())
            throw NumericalInstabilityError("field diverged at t = " + std::to_string(t));

        while (next_record < nn &&
               (next_record * dz) / c + config.td_record_delay <= t + 1e-12) {
            record_node(next_record, t);
            ++next_record;
        }
        if (step % slice_every == 0 || step == n_steps - 1) {
            out.times.push_back(t);
            std::vector<double> slice(nn);
            for (int i = 0; i < nn; ++i)
                slice[i] = std::norm(state.field[i]) / (omega_p0 * omega_p0);
            out.i_s_slices.push_back(std::move(slice));
        }
    }
    if (next_record < nn)
        throw NumericalInstabilityError("recording incomplete: reached node " +
                                        std::to_string(next_record) + " of " + std::to_string(nn));

    const double i0 = out.result.i_s.front();
    if (i0 <= 1e-12)
        throw ConfigError("record delay precedes pulse arrival at the medium entry");
    for (double& v : out.result.i_s) v /= i0;
    out.result.transmission = out.result.i_s.back();
    return out;
}

} // namespace fit
