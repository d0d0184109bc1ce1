#include "fit/observables.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fit/parallel.hpp"

namespace fit {

namespace {

void require_pair_topology(const CompositeSpace& space) {
    if (space.site_count() != 2 || space.site(0).role != Role::target ||
        space.site(0).level_count != 3 || space.site(1).role != Role::control)
        throw ConfigError("observable requires a [target, control] two-site space");
}

// Rethrow solver failures with the detuning that produced them.
template <typename Fn>
auto annotated(double delta_c, Fn&& fn) {
    const std::string where = " at delta_c = " + std::to_string(delta_c);
    try {
        return fn();
    } catch (const NonUniqueSteadyStateError& e) {
        throw NonUniqueSteadyStateError(e.what() + where);
    } catch (const NumericalInstabilityError& e) {
        throw NumericalInstabilityError(e.what() + where);
    } catch (const CapacityError& e) {
        throw CapacityError(e.what() + where);
    }
}

} // namespace

RingGeometry RingGeometry::regular(int n, double r) {
    RingGeometry g;
    g.n_targets = n;
    g.r_fac = r;
    for (int i = 0; i < n; ++i) g.angles.push_back(2.0 * kPi * i / std::max(1, n));
    return g;
}

cplx expectation(const DensityMatrix& rho, const Operator& op) {
    if (rho.dim() != op.dim) throw DimensionError("state and operator dims differ");
    return rho.entries.cwiseProduct(op.entries.transpose()).sum();
}

cplx two_body_correlator(const CompositeSpace& space, const DensityMatrix& rho) {
    require_pair_topology(space);
    if (rho.dim() != space.total_dim()) throw DimensionError("state dim mismatch");
    const Mat s13a = embed_operator(space, 0, local_sigma(3, 1, 3)).entries;
    const Mat s33b =
        embed_operator(space, 1, local_sigma(space.site(1).level_count, 3, 3)).entries;
    return expectation(rho, Operator{Mat(s13a * s33b)});
}

cplx connected_correlation(const CompositeSpace& space, const DensityMatrix& rho) {
    require_pair_topology(space);
    if (rho.dim() != space.total_dim()) throw DimensionError("state dim mismatch");
    const Operator s13a = embed_operator(space, 0, local_sigma(3, 1, 3));
    const Operator s33b = embed_operator(space, 1, local_sigma(space.site(1).level_count, 3, 3));
    return two_body_correlator(space, rho) -
           expectation(rho, s13a) * expectation(rho, s33b);
}

cplx approx_coherence(cplx correlator, double v_ab, double omega) {
    if (omega == 0.0) throw DivisionByZeroError("approx_coherence requires omega != 0");
    return -2.0 * v_ab * correlator / omega;
}

cplx approx_coherence_full(const CoherenceInputs& in, double v_ab, double omega, double omega_p) {
    const double denom = omega * omega + 4.0 * in.gamma12 * in.gamma13;
    if (std::abs(denom) < 1e-300)
        throw DivisionByZeroError("approx_coherence_full has vanishing denominator");
    const cplx numer = -2.0 * v_ab * in.correlator * omega +
                       2.0 * kI * (in.rho11 - in.rho22) * in.gamma13 * omega_p +
                       in.rho32 * omega * omega_p;
    return numer / denom;
}

double mandel_q(const CompositeSpace& space, const DensityMatrix& rho) {
    if (rho.dim() != space.total_dim()) throw DimensionError("state dim mismatch");
    RVec n = RVec::Zero(space.total_dim());
    for (int s = 0; s < space.site_count(); ++s)
        n += embed_operator(space, s, local_sigma(space.site(s).level_count, 3, 3))
                 .entries.diagonal()
                 .real();
    const RVec pop = rho.entries.diagonal().real();
    const double mean = n.dot(pop);
    const double mean_sq = n.cwiseProduct(n).dot(pop);
    if (mean <= 1e-12)
        throw UndefinedStatisticError("mandel_q undefined for vanishing <n_33>");
    return (mean_sq - mean * mean) / mean - 1.0;
}

double fidelity_pure(const DensityMatrix& rho, const Vec& psi) {
    if (psi.size() != rho.dim()) throw DimensionError("state and vector dims differ");
    const double norm_err = std::abs(psi.norm() - 1.0);
    if (norm_err > 1e-8)
        throw NormalizationError("fidelity target state norm deviates by " +
                                 std::to_string(norm_err));
    return (psi.adjoint() * rho.entries * psi).value().real();
}

std::pair<Vec, Vec> bell_states_full(const CompositeSpace& space) {
    require_pair_topology(space);
    const int db = space.site(1).level_count;
    auto idx = [&](int level_a, int level_b) {
        return space.level_index(0, level_a) * db + space.level_index(1, level_b);
    };
    const double r = 1.0 / std::sqrt(2.0);
    Vec entangled = Vec::Zero(space.total_dim());
    entangled[idx(3, 1)] = r;
    entangled[idx(2, 3)] = -r;
    Vec facilitation = Vec::Zero(space.total_dim());
    facilitation[idx(3, 3)] = r;
    facilitation[idx(2, 1)] = -r;
    return {entangled, facilitation};
}

Vec blockade_state_full(const CompositeSpace& space) {
    require_pair_topology(space);
    const int db = space.site(1).level_count;
    Vec blockade = Vec::Zero(space.total_dim());
    blockade[space.level_index(0, 1) * db + space.level_index(1, 3)] = 1.0;
    return blockade;
}

cplx susceptibility(cplx rho21, double omega_p) {
    if (omega_p == 0.0) throw DivisionByZeroError("susceptibility requires omega_p != 0");
    return rho21 / omega_p;
}

cplx susceptibility_si(cplx rho21, double omega_p, const SusceptibilityConstants& constants) {
    if (omega_p == 0.0) throw DivisionByZeroError("susceptibility requires omega_p != 0");
    if (constants.dipole_moment <= 0 || constants.density <= 0 || constants.epsilon0 <= 0 ||
        constants.hbar <= 0)
        throw ConfigError("susceptibility constants must be positive");
    // Prefactor applied as printed; density and dipole moment sit in the
    // denominator, which is flagged in any serialized metadata.
    const double pref = constants.hbar * constants.epsilon0 /
                        (constants.density * constants.dipole_moment * constants.dipole_moment);
    return pref * rho21 / omega_p;
}

std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y,
                             double prominence_frac) {
    if (x.size() != y.size()) throw DimensionError("find_peaks arrays differ in length");
    const int n = static_cast<int>(y.size());
    std::vector<Peak> out;
    if (n < 3) return out;
    const double y_max = *std::max_element(y.begin(), y.end());
    const double threshold = prominence_frac * y_max;

    for (int i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
        // Walk towards higher ground on both sides; the prominence base is
        // the higher of the two valley minima.
        double min_l = y[i];
        for (int j = i - 1; j >= 0 && y[j] <= y[i]; --j) min_l = std::min(min_l, y[j]);
        double min_r = y[i];
        for (int j = i + 1; j < n && y[j] <= y[i]; ++j) min_r = std::min(min_r, y[j]);
        const double prom = y[i] - std::max(min_l, min_r);
        if (prom < threshold) continue;

        Peak p;
        p.prominence = prom;
        const double d1 = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        const double d2 = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        const double a = (d2 - d1) / (x[i + 1] - x[i - 1]);
        if (a < -1e-300) {
            double xs = 0.5 * (x[i - 1] + x[i]) - d1 / (2.0 * a);
            xs = std::clamp(xs, x[i - 1], x[i + 1]);
            p.position = xs;
            p.height = y[i - 1] + d1 * (xs - x[i - 1]) + a * (xs - x[i - 1]) * (xs - x[i]);
        } else {
            p.position = x[i];
            p.height = y[i];
        }
        out.push_back(p);
    }
    return out;
}

std::vector<double> default_delta_c_grid(double v_ab, int n) {
    if (n < 2) throw ConfigError("grid needs at least 2 points");
    const double lo = v_ab > 0 ? -2.0 * v_ab : -5.0;
    const double hi = v_ab > 0 ? v_ab : 5.0;
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    return g;
}

ReducedState partial_trace(const CompositeSpace& space, const DensityMatrix& rho,
                           const std::vector<int>& keep_sites) {
    if (rho.dim() != space.total_dim()) throw DimensionError("state dim mismatch");
    if (keep_sites.empty()) throw ConfigError("partial_trace needs at least one kept site");
    for (std::size_t i = 0; i < keep_sites.size(); ++i) {
        if (keep_sites[i] < 0 || keep_sites[i] >= space.site_count())
            throw ConfigError("partial_trace site index out of range");
        if (i > 0 && keep_sites[i] <= keep_sites[i - 1])
            throw ConfigError("partial_trace kept sites must be strictly ascending");
    }

    std::vector<int> strides(space.site_count());
    int acc = 1;
    for (int s = space.site_count() - 1; s >= 0; --s) {
        strides[s] = acc;
        acc *= space.site(s).level_count;
    }
    std::vector<int> traced;
    for (int s = 0; s < space.site_count(); ++s)
        if (!std::binary_search(keep_sites.begin(), keep_sites.end(), s)) traced.push_back(s);

    auto offsets = [&](const std::vector<int>& sites) {
        std::vector<int> offs{0};
        for (int s : sites) {
            std::vector<int> next;
            next.reserve(offs.size() * space.site(s).level_count);
            for (int base : offs)
                for (int l = 0; l < space.site(s).level_count; ++l)
                    next.push_back(base + l * strides[s]);
            offs = std::move(next);
        }
        return offs;
    };
    const std::vector<int> kept_offs = offsets(keep_sites);
    const std::vector<int> traced_offs = offsets(traced);

    const int dk = static_cast<int>(kept_offs.size());
    Mat red = Mat::Zero(dk, dk);
    for (int b = 0; b < dk; ++b)
        for (int a = 0; a < dk; ++a)
            for (int t : traced_offs) red(a, b) += rho.entries(kept_offs[a] + t, kept_offs[b] + t);

    std::vector<AtomSite> sites;
    for (int s : keep_sites) sites.push_back(space.site(s));
    return {CompositeSpace(sites), DensityMatrix{std::move(red)}};
}

namespace {

Spectrum assemble_spectrum(const CompositeSpace& pair_space,
                           const std::vector<DensityMatrix>& states,
                           const std::vector<double>& grid, double prominence) {
    const Operator s12a = embed_operator(pair_space, 0, local_sigma(3, 1, 2));
    const Operator s33a = embed_operator(pair_space, 0, local_sigma(3, 3, 3));
    const Operator s33b =
        embed_operator(pair_space, 1, local_sigma(pair_space.site(1).level_count, 3, 3));
    const Vec psi_b = blockade_state_full(pair_space);
    const Vec psi_f = bell_states_full(pair_space).second;

    Spectrum s;
    const int n = static_cast<int>(grid.size());
    s.delta_c = grid;
    s.im_rho21.resize(n);
    s.re_rho21.resize(n);
    s.rho33_A.resize(n);
    s.rho33_B.resize(n);
    s.o_ab.resize(n);
    s.mandel_q.resize(n);
    s.fidelity_B.resize(n);
    s.fidelity_F.resize(n);
    for (int i = 0; i < n; ++i) {
        const DensityMatrix& rho = states[i];
        const cplx r21 = expectation(rho, s12a);
        s.im_rho21[i] = r21.imag();
        s.re_rho21[i] = r21.real();
        s.rho33_A[i] = expectation(rho, s33a).real();
        s.rho33_B[i] = expectation(rho, s33b).real();
        s.o_ab[i] = std::abs(connected_correlation(pair_space, rho));
        s.mandel_q[i] = mandel_q(pair_space, rho);
        s.fidelity_B[i] = fidelity_pure(rho, psi_b);
        s.fidelity_F[i] = fidelity_pure(rho, psi_f);
    }
    s.peaks = find_peaks(s.delta_c, s.im_rho21, prominence);
    return s;
}

} // namespace

Spectrum coherence_spectrum(const SpectrumConfig& config, const std::vector<double>& delta_c_grid) {
    if (delta_c_grid.empty()) throw ConfigError("delta_c grid is empty");
    for (std::size_t i = 1; i < delta_c_grid.size(); ++i)
        if (delta_c_grid[i] <= delta_c_grid[i - 1])
            throw ConfigError("delta_c grid must be sorted ascending");

    const CompositeSpace& space = config.space;
    const int n = static_cast<int>(delta_c_grid.size());
    std::vector<DensityMatrix> states(n);

    if (space.site_count() == 2) {
        require_pair_topology(space);
        double v = 0.0;
        auto it = config.interaction.pair_overrides.find({0, 1});
        if (it != config.interaction.pair_overrides.end())
            v = it->second;
        else if (config.interaction.c6 != 0.0)
            v = pair_potential_from_positions(space.site(0), space.site(1),
                                              config.interaction.c6);
        const AffineSteadySolver solver(space, config.drive, config.dissipators,
                                        config.steady.residual_tol);
        parallel_for(n, [&](int i) {
            annotated(delta_c_grid[i], [&] {
                states[i] = solver.solve(delta_c_grid[i], v);
                return 0;
            });
        });
        return assemble_spectrum(space, states, delta_c_grid, config.prominence);
    }

    // Multi-site route: the control is the last site; observables are taken
    // on the (first target, control) reduced pair.
    std::vector<int> keep{0, space.site_count() - 1};
    CompositeSpace pair_space({space.site(0), space.site(keep[1])});
    parallel_for(n, [&](int i) {
        annotated(delta_c_grid[i], [&] {
            DriveParams drive = config.drive;
            drive.delta_c = delta_c_grid[i];
            Liouvillian l(space, build_hamiltonian(space, drive, config.interaction),
                          config.dissipators);
            DensityMatrix full = steady_state(l, config.steady);
            states[i] = partial_trace(space, full, keep).rho;
            return 0;
        });
    });
    return assemble_spectrum(pair_space, states, delta_c_grid, config.prominence);
}

std::map<double, Spectrum> multi_target_spectrum(const RingGeometry& ring, double v_ct,
                                                 const std::vector<double>& v_tt_grid,
                                                 const std::vector<double>& delta_c_grid,
                                                 const DriveParams& drive,
                                                 const DissipatorSpec& pair_dissipators,
                                                 const SteadyOptions& steady) {
    if (ring.n_targets < 1) throw ConfigError("ring needs at least one target");
    if (ring.n_targets > 4)
        throw CapacityError("dense multi-target mode supports at most 4 targets");
    if (!ring.angles.empty() && static_cast<int>(ring.angles.size()) != ring.n_targets)
        throw ConfigError("ring angle count does not match n_targets");

    const int nt = ring.n_targets;
    std::vector<AtomSite> sites;
    for (int i = 0; i < nt; ++i) {
        const double theta = ring.angles.empty() ? 2.0 * kPi * i / nt : ring.angles[i];
        AtomSite t;
        t.level_count = 3;
        t.role = Role::target;
        t.position = {ring.r_fac * std::cos(theta), ring.r_fac * std::sin(theta), 0.0};
        sites.push_back(t);
    }
    AtomSite c;
    c.level_count = 2;
    c.role = Role::control;
    c.position = {0.0, 0.0, 0.0};
    sites.push_back(c);
    CompositeSpace space(sites);

    DissipatorSpec diss;
    for (const Decay& d : pair_dissipators.decays) {
        if (d.site == 0) {
            for (int i = 0; i < nt; ++i) {
                Decay e = d;
                e.site = i;
                diss.decays.push_back(e);
            }
        } else {
            Decay e = d;
            e.site = nt;
            diss.decays.push_back(e);
        }
    }
    for (const Dephasing& d : pair_dissipators.dephasings) {
        if (d.site == 0) {
            for (int i = 0; i < nt; ++i) {
                Dephasing e = d;
                e.site = i;
                diss.dephasings.push_back(e);
            }
        } else {
            Dephasing e = d;
            e.site = nt;
            diss.dephasings.push_back(e);
        }
    }

    std::map<double, Spectrum> out;
    for (double v_tt : v_tt_grid) {
        SpectrumConfig cfg{space, drive, diss, InteractionSpec{}, 0.05, steady};
        for (int i = 0; i < nt; ++i) cfg.interaction.pair_overrides[{i, nt}] = v_ct;
        for (int i = 0; i < nt; ++i)
            for (int j = i + 1; j < nt; ++j) cfg.interaction.pair_overrides[{i, j}] = v_tt;
        out.emplace(v_tt, coherence_spectrum(cfg, delta_c_grid));
    }
    return out;
}

} // namespace fit
